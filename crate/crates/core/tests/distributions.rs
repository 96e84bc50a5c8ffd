use downtime_core::simulation::episode_rng;
use downtime_core::{DistributionParams, Family};
use proptest::prelude::*;

fn log_grid_from_zero(top: f64, n: usize) -> Vec<f64> {
    let lo = top * 1e-6;
    std::iter::once(0.0)
        .chain((0..n).map(|i| lo * (top / lo).powf(i as f64 / (n - 1) as f64)))
        .collect()
}

fn family_params(family: Family) -> impl Strategy<Value = DistributionParams> {
    let shape = 0.2f64..8.0;
    let scale = 1e-3f64..1e3;
    (shape, scale).prop_map(move |(a, b)| match family {
        Family::Exponential => DistributionParams::exponential(1.0 / b).unwrap(),
        Family::Weibull => DistributionParams::weibull(a, b).unwrap(),
        Family::Lomax => DistributionParams::lomax(a, 1.0 / b).unwrap(),
        Family::LogLogistic => DistributionParams::log_logistic(a, b).unwrap(),
    })
}

fn any_params() -> impl Strategy<Value = DistributionParams> {
    prop_oneof![
        family_params(Family::Exponential),
        family_params(Family::Weibull),
        family_params(Family::Lomax),
        family_params(Family::LogLogistic),
    ]
}

proptest! {
    #[test]
    fn cdf_and_survival_are_complementary(d in any_params()) {
        for x in log_grid_from_zero(10.0 * d.time_scale(), 200) {
            let sum = d.cdf(x).unwrap() + d.survival(x).unwrap();
            prop_assert!((sum - 1.0).abs() <= 1e-12, "{d:?} at {x}: {sum}");
        }
    }

    #[test]
    fn hazard_times_survival_is_density(d in any_params()) {
        for x in log_grid_from_zero(10.0 * d.time_scale(), 200) {
            let s = d.survival(x).unwrap();
            if s <= 1e-12 {
                continue;
            }
            let pdf = d.pdf(x).unwrap();
            let lhs = d.hazard(x).unwrap() * s;
            let err = (lhs - pdf).abs();
            prop_assert!(lhs == pdf || err <= 1e-9 * pdf.abs(), "{d:?} at {x}: {lhs} vs {pdf}");
        }
    }

    #[test]
    fn quantile_inverts_cdf(d in any_params(), u in 0.001f64..0.999) {
        let x = d.quantile(u);
        prop_assert!((d.cdf(x).unwrap() - u).abs() < 1e-9);
    }
}

fn hazard_diffs(d: &DistributionParams) -> Vec<f64> {
    let grid: Vec<f64> = log_grid_from_zero(10.0 * d.time_scale(), 400).into_iter().skip(1).collect();
    let h: Vec<f64> = grid.iter().map(|&x| d.hazard(x).unwrap()).collect();
    h.windows(2).map(|w| w[1] - w[0]).collect()
}

#[test]
fn hazard_shapes() {
    for (k, l) in [(0.6, 0.02), (1.1, 0.2), (5.0, 1.0)] {
        let d = DistributionParams::lomax(k, l).unwrap();
        assert!(hazard_diffs(&d).iter().all(|&g| g < 0.0), "{d:?}");
    }
    let d = DistributionParams::exponential(0.1).unwrap();
    assert!(hazard_diffs(&d).iter().all(|&g| g.abs() < 1e-15));

    let d = DistributionParams::weibull(2.0, 10.0).unwrap();
    assert!(hazard_diffs(&d).iter().all(|&g| g > 0.0));
    let d = DistributionParams::weibull(0.8, 300.0).unwrap();
    assert!(hazard_diffs(&d).iter().all(|&g| g < 0.0));

    // increasing to a single mode, then decreasing
    for k in [1.5, 2.5, 6.0] {
        let d = DistributionParams::log_logistic(k, 45.0).unwrap();
        let signs: Vec<bool> = hazard_diffs(&d).iter().map(|&g| g > 0.0).collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(signs[0] && !signs[signs.len() - 1] && changes == 1, "shape {k}");
    }
}

#[test]
fn heavy_tailed_hazards_vanish() {
    for d in [
        DistributionParams::lomax(1.1, 0.2).unwrap(),
        DistributionParams::lomax(0.6, 0.02).unwrap(),
        DistributionParams::log_logistic(2.5, 45.0).unwrap(),
        DistributionParams::log_logistic(0.7, 10.0).unwrap(),
    ] {
        let s = d.time_scale();
        assert!(d.hazard(1e6 * s).unwrap() < d.hazard(s).unwrap() / 100.0, "{d:?}");
    }
}

fn ks_statistic(d: &DistributionParams, n: usize, seed: u64) -> f64 {
    let mut rng = episode_rng(seed, 0);
    let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = d.cdf(x).unwrap();
            (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn samples_match_cdf() {
    for (i, d) in [
        DistributionParams::exponential(0.1).unwrap(),
        DistributionParams::weibull(0.8, 300.0).unwrap(),
        DistributionParams::lomax(1.1, 0.2).unwrap(),
        DistributionParams::log_logistic(2.5, 45.0).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        let ks = ks_statistic(d, 100_000, 40 + i as u64);
        assert!(ks < 0.01, "{d:?}: KS {ks}");
    }
}

#[test]
fn negative_inputs_are_domain_errors() {
    let d = DistributionParams::weibull(2.0, 10.0).unwrap();
    assert!(d.pdf(-1.0).is_err());
    assert!(d.survival(-1e-300).is_err());
    assert!(d.hazard(f64::NAN).is_err());
}
