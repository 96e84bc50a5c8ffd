//! Parametric survival families used to model organic recovery times.
//!
//! Four families are supported, chosen to cover the hazard-rate profiles that
//! matter for threshold selection:
//!
//! | family        | hazard profile                                   |
//! |---------------|--------------------------------------------------|
//! | `Exponential` | constant                                         |
//! | `Weibull`     | monotone (decreasing for shape < 1)              |
//! | `Lomax`       | strictly decreasing, `O(1/x)`                    |
//! | `LogLogistic` | decreasing, or rising to a mode then decreasing  |
//!
//! The Lomax family is parameterized with an *inverse* scale `lambda`:
//!
//! ```text
//! f(x) = lambda * kappa / (1 + lambda x)^(kappa + 1)
//! S(x) = (1 + lambda x)^(-kappa)
//! h(x) = lambda * kappa / (1 + lambda x)
//! ```
//!
//! Weibull and log-logistic use the usual `(shape, scale)` convention with
//! `scale` in seconds, e.g. `S(x) = 1 / (1 + (x / scale)^shape)`.
//!
//! All survival computations go through `ln S(x)` so that large arguments
//! never underflow in intermediate steps.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Exponential,
    Weibull,
    Lomax,
    LogLogistic,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Exponential,
        Family::Weibull,
        Family::Lomax,
        Family::LogLogistic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Weibull => "weibull",
            Family::Lomax => "lomax",
            Family::LogLogistic => "loglogistic",
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            Family::Exponential => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(Family::Exponential),
            "weibull" => Ok(Family::Weibull),
            "lomax" => Ok(Family::Lomax),
            "loglogistic" | "log-logistic" | "fisk" => Ok(Family::LogLogistic),
            _ => Err(Error::Config(format!("unknown distribution family `{s}`"))),
        }
    }
}

/// Family-specific parameters. Construct a validated value through
/// [`DistributionParams::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    /// `scale` is the inverse-time parameter lambda.
    Lomax { shape: f64, scale: f64 },
    LogLogistic { shape: f64, scale: f64 },
}

/// A validated survival distribution. Immutable; every method is pure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionParams {
    kind: Kind,
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

fn check_support(x: f64) -> Result<f64> {
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(Error::Domain { value: x })
    }
}

impl DistributionParams {
    pub fn new(kind: Kind) -> Result<Self> {
        match kind {
            Kind::Exponential { rate } => {
                positive("rate", rate)?;
            }
            Kind::Weibull { shape, scale }
            | Kind::Lomax { shape, scale }
            | Kind::LogLogistic { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)?;
            }
        }
        Ok(Self { kind })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Kind::Exponential { rate })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Kind::Weibull { shape, scale })
    }

    /// Lomax with shape `kappa` and inverse scale `lambda`.
    pub fn lomax(kappa: f64, lambda: f64) -> Result<Self> {
        Self::new(Kind::Lomax {
            shape: kappa,
            scale: lambda,
        })
    }

    pub fn log_logistic(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Kind::LogLogistic { shape, scale })
    }

    /// Builds a two-parameter family from `(first, second)` in the order
    /// `(shape, scale)`; for the exponential family only `first` is used.
    pub fn from_pair(family: Family, first: f64, second: f64) -> Result<Self> {
        match family {
            Family::Exponential => Self::exponential(first),
            Family::Weibull => Self::weibull(first, second),
            Family::Lomax => Self::lomax(first, second),
            Family::LogLogistic => Self::log_logistic(first, second),
        }
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Exponential { .. } => Family::Exponential,
            Kind::Weibull { .. } => Family::Weibull,
            Kind::Lomax { .. } => Family::Lomax,
            Kind::LogLogistic { .. } => Family::LogLogistic,
        }
    }

    /// Parameters as `(first, second)`; the exponential family reports `(rate, NaN)`.
    pub fn pair(&self) -> (f64, f64) {
        match self.kind {
            Kind::Exponential { rate } => (rate, f64::NAN),
            Kind::Weibull { shape, scale }
            | Kind::Lomax { shape, scale }
            | Kind::LogLogistic { shape, scale } => (shape, scale),
        }
    }

    /// Characteristic time scale in seconds, used for grids and quadrature
    /// breakpoints.
    pub fn time_scale(&self) -> f64 {
        match self.kind {
            Kind::Exponential { rate } => 1.0 / rate,
            Kind::Lomax { scale, .. } => 1.0 / scale,
            Kind::Weibull { scale, .. } | Kind::LogLogistic { scale, .. } => scale,
        }
    }

    pub(crate) fn ln_pdf_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Exponential { rate } => rate.ln() - rate * x,
            Kind::Weibull { shape, scale } => {
                let z = x / scale;
                if z == 0.0 {
                    return weibull_origin_ln_pdf(shape, scale);
                }
                (shape / scale).ln() + (shape - 1.0) * z.ln() - z.powf(shape)
            }
            Kind::Lomax { shape, scale } => {
                (shape * scale).ln() - (shape + 1.0) * (scale * x).ln_1p()
            }
            Kind::LogLogistic { shape, scale } => {
                let z = x / scale;
                if z == 0.0 {
                    return weibull_origin_ln_pdf(shape, scale);
                }
                (shape / scale).ln() + (shape - 1.0) * z.ln() - 2.0 * z.powf(shape).ln_1p()
            }
        }
    }

    pub(crate) fn ln_survival_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Exponential { rate } => -rate * x,
            Kind::Weibull { shape, scale } => -(x / scale).powf(shape),
            Kind::Lomax { shape, scale } => -shape * (scale * x).ln_1p(),
            Kind::LogLogistic { shape, scale } => -(x / scale).powf(shape).ln_1p(),
        }
    }

    pub(crate) fn survival_unchecked(&self, x: f64) -> f64 {
        self.ln_survival_unchecked(x).exp()
    }

    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        -self.ln_survival_unchecked(x).exp_m1()
    }

    pub(crate) fn hazard_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Exponential { rate } => rate,
            Kind::Weibull { shape, scale } => (shape / scale) * (x / scale).powf(shape - 1.0),
            Kind::Lomax { shape, scale } => scale * shape / (1.0 + scale * x),
            Kind::LogLogistic { shape, scale } => {
                let z = x / scale;
                let w = z.powf(shape);
                (shape / scale) * z.powf(shape - 1.0) / (1.0 + w)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        Ok(self.ln_pdf_unchecked(x).exp())
    }

    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        Ok(self.ln_pdf_unchecked(x))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        Ok(self.cdf_unchecked(x))
    }

    pub fn survival(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        Ok(self.survival_unchecked(x))
    }

    pub fn ln_survival(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        Ok(self.ln_survival_unchecked(x))
    }

    /// Instantaneous recovery rate `pdf(x) / survival(x)`.
    ///
    /// Evaluated in closed form, but refused once the survival function has
    /// underflowed, since the ratio is then no longer meaningful.
    pub fn hazard(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        if self.ln_survival_unchecked(x) < f64::MIN_POSITIVE.ln() {
            return Err(Error::HazardOverflow { x });
        }
        Ok(self.hazard_unchecked(x))
    }

    fn infinite_mean(&self) -> Option<Error> {
        match self.kind {
            Kind::Lomax { shape, .. } if shape <= 1.0 => Some(Error::InfiniteMean {
                family: "lomax",
                shape,
            }),
            Kind::LogLogistic { shape, .. } if shape <= 1.0 => Some(Error::InfiniteMean {
                family: "loglogistic",
                shape,
            }),
            _ => None,
        }
    }

    pub fn has_finite_mean(&self) -> bool {
        self.infinite_mean().is_none()
    }

    pub fn mean(&self) -> Result<f64> {
        if let Some(e) = self.infinite_mean() {
            return Err(e);
        }
        Ok(match self.kind {
            Kind::Exponential { rate } => 1.0 / rate,
            Kind::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
            Kind::Lomax { shape, scale } => 1.0 / (scale * (shape - 1.0)),
            Kind::LogLogistic { shape, scale } => {
                let b = std::f64::consts::PI / shape;
                scale * b / b.sin()
            }
        })
    }

    /// Mean residual-inclusive lifetime `E[X | X > x]`.
    pub fn conditional_tail_expectation(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        if let Some(e) = self.infinite_mean() {
            return Err(e);
        }
        match self.kind {
            Kind::Lomax { shape, scale } => {
                Ok(x * shape / (shape - 1.0) + 1.0 / (scale * (shape - 1.0)))
            }
            Kind::Exponential { rate } => Ok(x + 1.0 / rate),
            _ => {
                let s = self.survival_unchecked(x);
                if s <= 0.0 {
                    return Err(Error::HazardOverflow { x });
                }
                // E[X | X > x] = x + (integral of S over [x, inf)) / S(x)
                let tail = quadrature::integrate_tail(
                    |t| self.survival_unchecked(t),
                    x,
                    self.time_scale(),
                );
                Ok(x + tail / s)
            }
        }
    }

    /// Partial expectation `E[X; X < tau]`, the integral of `t f(t)` over `[0, tau]`.
    ///
    /// Closed forms for the Lomax and exponential families, quadrature otherwise.
    /// For Lomax the expression is `E[X] - E[X | X > tau] S(tau)` rearranged so
    /// that it stays finite (and accurate) for every `kappa`, including `kappa <= 1`.
    pub fn partial_expectation(&self, tau: f64) -> Result<f64> {
        check_support(tau)?;
        if tau == f64::INFINITY {
            return self.mean();
        }
        Ok(match self.kind {
            Kind::Lomax { shape, scale } => {
                let log_base = (scale * tau).ln_1p();
                let integral_of_survival = if shape == 1.0 {
                    log_base / scale
                } else {
                    ((1.0 - shape) * log_base).exp_m1() / (scale * (1.0 - shape))
                };
                integral_of_survival - tau * (-shape * log_base).exp()
            }
            Kind::Exponential { rate } => {
                let rt = rate * tau;
                -(-rt).exp_m1() / rate - tau * (-rt).exp()
            }
            _ => self.partial_expectation_quadrature(tau),
        })
    }

    pub(crate) fn partial_expectation_quadrature(&self, tau: f64) -> f64 {
        quadrature::integrate_geometric(
            |t| {
                if t <= 0.0 {
                    0.0
                } else {
                    t * self.ln_pdf_unchecked(t).exp()
                }
            },
            0.0,
            tau,
            self.time_scale(),
        )
    }

    /// `E[X | X < tau]`; defined as 0 when `P(X < tau) = 0`.
    pub fn conditional_mean_below(&self, tau: f64) -> Result<f64> {
        check_support(tau)?;
        let below = self.cdf_unchecked(tau);
        if below <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.partial_expectation(tau)? / below)
    }

    /// Inverse CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        // -ln(1 - u), accurate for small u
        let e = -(-u).ln_1p();
        match self.kind {
            Kind::Exponential { rate } => e / rate,
            Kind::Weibull { shape, scale } => scale * e.powf(1.0 / shape),
            Kind::Lomax { shape, scale } => (e / shape).exp_m1() / scale,
            Kind::LogLogistic { shape, scale } => scale * (u / (1.0 - u)).powf(1.0 / shape),
        }
    }

    /// One draw by inversion from the caller's random state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }

    /// Gradient of `ln pdf(x)` with respect to `(first, second)` parameters.
    pub(crate) fn score_ln_pdf(&self, x: f64) -> [f64; 2] {
        match self.kind {
            Kind::Exponential { rate } => [1.0 / rate - x, 0.0],
            Kind::Lomax { shape, scale } => {
                let d = 1.0 + scale * x;
                [1.0 / shape - (scale * x).ln_1p(), 1.0 / scale - (shape + 1.0) * x / d]
            }
            Kind::Weibull { shape, scale } => {
                let z = x / scale;
                let lz = z.ln();
                let w = z.powf(shape);
                [1.0 / shape + lz - w * lz, (shape / scale) * (w - 1.0)]
            }
            Kind::LogLogistic { shape, scale } => {
                let z = x / scale;
                let lz = z.ln();
                let w = z.powf(shape);
                let r = (1.0 - w) / (1.0 + w);
                [1.0 / shape + lz * r, -(shape / scale) * r]
            }
        }
    }

    /// Gradient of `ln S(x)` with respect to `(first, second)` parameters.
    pub(crate) fn score_ln_survival(&self, x: f64) -> [f64; 2] {
        match self.kind {
            Kind::Exponential { .. } => [-x, 0.0],
            Kind::Lomax { shape, scale } => {
                [-(scale * x).ln_1p(), -shape * x / (1.0 + scale * x)]
            }
            Kind::Weibull { shape, scale } => {
                let z = x / scale;
                let w = z.powf(shape);
                [-w * z.ln(), shape * w / scale]
            }
            Kind::LogLogistic { shape, scale } => {
                let z = x / scale;
                let w = z.powf(shape);
                let q = w / (1.0 + w);
                [-q * z.ln(), shape * q / scale]
            }
        }
    }
}

// Density at the origin for the Weibull / log-logistic forms, which share the
// leading (shape / scale) (x / scale)^(shape - 1) behaviour.
fn weibull_origin_ln_pdf(shape: f64, scale: f64) -> f64 {
    if shape < 1.0 {
        f64::INFINITY
    } else if shape == 1.0 {
        (1.0 / scale).ln()
    } else {
        f64::NEG_INFINITY
    }
}

impl fmt::Display for DistributionParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Kind::Exponential { rate } => write!(f, "Exponential(rate={rate})"),
            Kind::Weibull { shape, scale } => write!(f, "Weibull(shape={shape}, scale={scale})"),
            Kind::Lomax { shape, scale } => write!(f, "Lomax(kappa={shape}, lambda={scale})"),
            Kind::LogLogistic { shape, scale } => {
                write!(f, "LogLogistic(shape={shape}, scale={scale})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lomax(k: f64, l: f64) -> DistributionParams {
        DistributionParams::lomax(k, l).unwrap()
    }

    fn all_families() -> Vec<DistributionParams> {
        vec![
            DistributionParams::exponential(0.01).unwrap(),
            DistributionParams::weibull(0.8, 300.0).unwrap(),
            DistributionParams::weibull(2.5, 40.0).unwrap(),
            lomax(1.1, 0.2),
            lomax(2.0, 0.5),
            DistributionParams::log_logistic(2.0, 3.0).unwrap(),
            DistributionParams::log_logistic(0.7, 100.0).unwrap(),
        ]
    }

    // Oracles: central difference of the CDF / Simpson integration of the pdf.
    fn numeric_derivative(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-5 * x.max(1.0);
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn pdf_examples() {
        assert_eq!(lomax(1.0, 1.0).pdf(0.0).unwrap(), 1.0);
        assert_eq!(DistributionParams::exponential(2.0).unwrap().pdf(0.0).unwrap(), 2.0);
        let d = lomax(2.0, 0.5);
        let oracle = numeric_derivative(|x| d.cdf(x).unwrap(), 2.0);
        assert!((oracle - 0.125).abs() < 1e-8);
        assert!((d.pdf(2.0).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn cdf_and_survival_examples() {
        let d = lomax(2.0, 0.5);
        let oracle = simpson(|x| d.pdf(x).unwrap(), 0.0, 2.0, 2000);
        assert!((oracle - 0.75).abs() < 1e-10);
        assert!((d.cdf(2.0).unwrap() - 0.75).abs() < 1e-15);
        assert!((d.survival(2.0).unwrap() - 0.25).abs() < 1e-15);
        for d in all_families() {
            assert_eq!(d.cdf(0.0).unwrap(), 0.0);
            assert_eq!(d.survival(0.0).unwrap(), 1.0);
        }
        let e = DistributionParams::exponential(1.0).unwrap();
        assert_eq!(e.cdf(f64::INFINITY).unwrap(), 1.0);
        let w = DistributionParams::weibull(1.0, 1.0).unwrap();
        assert!((w.survival(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn negative_argument_is_domain_error() {
        let d = lomax(2.0, 0.5);
        assert!(matches!(d.pdf(-1.0), Err(Error::Domain { .. })));
        assert!(matches!(d.cdf(-1e-9), Err(Error::Domain { .. })));
        assert!(matches!(d.survival(-3.0), Err(Error::Domain { .. })));
        assert!(matches!(d.hazard(-3.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn zero_parameters_rejected_at_construction() {
        assert!(DistributionParams::lomax(0.0, 1.0).is_err());
        assert!(DistributionParams::weibull(1.0, 0.0).is_err());
        assert!(DistributionParams::exponential(-1.0).is_err());
        assert!(DistributionParams::log_logistic(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn hazard_examples() {
        assert!((lomax(2.0, 0.5).hazard(0.0).unwrap() - 1.0).abs() < 1e-15);
        let e = DistributionParams::exponential(3.0).unwrap();
        for x in [0.0, 1.0, 17.0] {
            assert_eq!(e.hazard(x).unwrap(), 3.0);
        }
        let d = lomax(2.0, 0.5);
        let oracle = d.pdf(18.0).unwrap() / d.survival(18.0).unwrap();
        assert!((oracle - 0.1).abs() < 1e-14);
        assert!((d.hazard(18.0).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn hazard_refuses_underflowed_survival() {
        let e = DistributionParams::exponential(1.0).unwrap();
        assert!(matches!(e.hazard(1e4), Err(Error::HazardOverflow { .. })));
    }

    #[test]
    fn tail_expectation_examples() {
        assert!((lomax(2.0, 1.0).conditional_tail_expectation(0.0).unwrap() - 1.0).abs() < 1e-15);
        let d = lomax(2.0, 0.5);
        // oracle: integral of t f(t) on [2, inf) / S(2), via t = 2 / v
        let num = simpson(
            |v| {
                let v = v.max(1e-12);
                let t = 2.0 / v;
                t * d.pdf(t).unwrap() * 2.0 / (v * v)
            },
            0.0,
            1.0,
            20_000,
        );
        let oracle = num / d.survival(2.0).unwrap();
        assert!((oracle - 6.0).abs() < 1e-6, "{oracle}");
        assert!((d.conditional_tail_expectation(2.0).unwrap() - 6.0).abs() < 1e-14);
        assert!(matches!(
            lomax(0.9, 1.0).conditional_tail_expectation(3.0),
            Err(Error::InfiniteMean { .. })
        ));
    }

    #[test]
    fn tail_expectation_by_quadrature_matches_memoryless_and_mean() {
        // Weibull with shape 1 is exponential: E[X | X > x] = x + scale.
        let w = DistributionParams::weibull(1.0, 7.0).unwrap();
        assert!((w.conditional_tail_expectation(3.0).unwrap() - 10.0).abs() < 1e-9);
        let ll = DistributionParams::log_logistic(3.0, 5.0).unwrap();
        let m = ll.mean().unwrap();
        assert!((ll.conditional_tail_expectation(0.0).unwrap() - m).abs() < 1e-8 * m);
    }

    #[test]
    fn mean_examples() {
        assert!((lomax(2.0, 0.5).mean().unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(DistributionParams::exponential(4.0).unwrap().mean().unwrap(), 0.25);
        let ll = DistributionParams::log_logistic(2.0, 3.0).unwrap();
        // oracle: integral of the survival function on [0, inf) via x = u/(1-u)
        let oracle = simpson(
            |u| {
                if u >= 1.0 {
                    return 0.0;
                }
                let x = u / (1.0 - u);
                ll.survival(x).unwrap() / ((1.0 - u) * (1.0 - u))
            },
            0.0,
            1.0,
            400_000,
        );
        assert!((oracle - 4.712_388_980_384_69).abs() < 1e-4, "{oracle}");
        assert!((ll.mean().unwrap() - 1.5 * std::f64::consts::PI).abs() < 1e-12);
        assert!(lomax(1.0, 1.0).mean().is_err());
        assert!(DistributionParams::log_logistic(0.9, 1.0).unwrap().mean().is_err());
    }

    #[test]
    fn sampling_examples() {
        let d = lomax(2.0, 0.5);
        assert_eq!(d.quantile(0.0), 0.0);
        let x = d.quantile(0.75);
        assert!((x - 2.0).abs() < 1e-14);
        assert!((d.cdf(x).unwrap() - 0.75).abs() < 1e-15);

        let e = DistributionParams::exponential(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mean = (0..n).map(|_| e.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let d = DistributionParams::log_logistic(1.5, 60.0).unwrap();
        let a: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(3);
            (0..50).map(|_| d.sample(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(3);
            (0..50).map(|_| d.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn partial_expectation_closed_forms_match_quadrature() {
        for d in [
            lomax(2.0, 0.5),
            lomax(0.6, 0.01),
            lomax(1.0, 0.3),
            lomax(5.0, 1.0),
            DistributionParams::exponential(0.05).unwrap(),
        ] {
            for tau in [0.1, 1.0, 18.0, 600.0, 1e5] {
                let closed = d.partial_expectation(tau).unwrap();
                let quad = d.partial_expectation_quadrature(tau);
                assert!(
                    (closed - quad).abs() <= 1e-9 * closed.abs().max(1e-300),
                    "{d} tau={tau}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn conditional_mean_below_identity() {
        // E[T | T < 2] for Lomax(2, 0.5) = (2 - 6 * 0.25) / 0.75
        let d = lomax(2.0, 0.5);
        assert!((d.conditional_mean_below(2.0).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(d.conditional_mean_below(0.0).unwrap(), 0.0);
    }

    #[test]
    fn scores_match_finite_differences() {
        let cases = [
            (Family::Lomax, 1.3, 0.07),
            (Family::Weibull, 0.8, 300.0),
            (Family::LogLogistic, 2.2, 45.0),
        ];
        for (family, a, b) in cases {
            let d = DistributionParams::from_pair(family, a, b).unwrap();
            for x in [0.5, 30.0, 900.0] {
                let analytic = [d.score_ln_pdf(x), d.score_ln_survival(x)];
                for (k, field) in analytic.iter().enumerate() {
                    for j in 0..2 {
                        let h = 1e-6 * if j == 0 { a } else { b };
                        let eval = |delta: f64| {
                            let (pa, pb) = if j == 0 { (a + delta, b) } else { (a, b + delta) };
                            let e = DistributionParams::from_pair(family, pa, pb).unwrap();
                            if k == 0 {
                                e.ln_pdf_unchecked(x)
                            } else {
                                e.ln_survival_unchecked(x)
                            }
                        };
                        let fd = (eval(h) - eval(-h)) / (2.0 * h);
                        let tol = 1e-6 * fd.abs().max(1e-3);
                        assert!((fd - field[j]).abs() < tol, "{family} x={x} k={k} j={j}: {fd} vs {}", field[j]);
                    }
                }
            }
        }
    }
}
