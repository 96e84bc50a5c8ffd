//! Adaptive Gauss-Kronrod (7/15) quadrature on finite and semi-infinite ranges.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const REL_TOL: f64 = 1e-13;
const MAX_DEPTH: u32 = 200;

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let s = f(center - dx) + f(center + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: (f64, f64), abs_tol: f64, depth: u32) -> f64 {
    let (value, err) = whole;
    if err <= abs_tol.max(REL_TOL * value.abs()) || depth >= MAX_DEPTH || b - a <= f64::EPSILON * a.abs() {
        return value;
    }
    let mid = 0.5 * (a + b);
    let left = kronrod(f, a, mid);
    let right = kronrod(f, mid, b);
    adapt(f, a, mid, left, 0.5 * abs_tol, depth + 1) + adapt(f, mid, b, right, 0.5 * abs_tol, depth + 1)
}

/// Integrates `f` over the finite interval `[a, b]`.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let first = kronrod(&f, a, b);
    adapt(&f, a, b, first, 1e-300, 0)
}

/// Integrates over `[a, b]` after splitting it at geometrically spaced
/// breakpoints `scale * 2^k`, so mass concentrated near `scale` is never
/// stepped over when `b` is many orders of magnitude larger.
pub(crate) fn integrate_geometric<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, scale: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut edge = scale * 2f64.powi(-40);
    let mut lo = a;
    let mut total = 0.0;
    while lo < b {
        while edge <= lo {
            edge *= 2.0;
        }
        let hi = edge.min(b);
        total += integrate(&f, lo, hi);
        lo = hi;
    }
    total
}

/// Integrates a nonnegative, eventually decreasing `f` over `[a, inf)`.
///
/// Pieces of doubling width are summed until they stop contributing; any
/// remaining tail is mapped onto `(0, 1]` with `t = edge / v`.
pub(crate) fn integrate_tail<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64) -> f64 {
    let mut lo = a;
    let mut width = scale;
    let mut total = 0.0;
    for _ in 0..64 {
        let hi = lo + width;
        let piece = integrate(&f, lo, hi);
        total += piece;
        lo = hi;
        width *= 2.0;
        if piece <= 1e-17 * total && f(lo) * lo <= 1e-17 * total {
            return total;
        }
    }
    let edge = lo;
    let mapped = |v: f64| {
        if v <= 0.0 {
            0.0
        } else {
            f(edge / v) * edge / (v * v)
        }
    };
    total + integrate_geometric(mapped, 0.0, 1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0);
        assert!((v - 8.0).abs() < 1e-14);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0);
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn narrow_peak_on_long_range() {
        let v = integrate_geometric(|x: f64| (-x).exp(), 0.0, 1e8, 1.0);
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn heavy_algebraic_tail() {
        // integral of (1+x)^-1.5 over [0, inf) is 2
        let v = integrate_tail(|x: f64| (1.0 + x).powf(-1.5), 0.0, 1.0);
        assert!((v - 2.0).abs() < 1e-8, "{v}");
        let w = integrate_tail(|x: f64| (-x).exp(), 3.0, 1.0);
        assert!((w - (-3.0f64).exp()).abs() < 1e-15);
    }
}
