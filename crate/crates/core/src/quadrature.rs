//! One-dimensional quadrature: globally adaptive Gauss–Kronrod (7/15) and
//! composite Simpson.

use crate::scalar::Real;

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
// Gauss weights for the odd-indexed Kronrod abscissae.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SUBDIVISIONS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    /// Estimated absolute error (sum of |K15 - G7| over the final partition).
    pub error: T,
    pub evaluations: usize,
}

fn kronrod_panel<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for i in 0..7 {
        let dx = radius * T::lit(XGK[i]);
        let s = f(center - dx) + f(center + dx);
        k = k + s * T::lit(WGK[i]);
        if i % 2 == 1 {
            g = g + s * T::lit(WG[i / 2]);
        }
    }
    (k * radius, ((k - g) * radius).abs())
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`. Reversed
/// limits give the negated integral.
pub fn gauss_kronrod<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, abs_tol: T) -> QuadResult<T> {
    if a == b {
        return QuadResult {
            value: T::zero(),
            error: T::zero(),
            evaluations: 0,
        };
    }
    if b < a {
        let r = gauss_kronrod(f, b, a, abs_tol);
        return QuadResult { value: -r.value, ..r };
    }
    let mut panels: Vec<(T, T, T, T)> = Vec::new();
    let (v, e) = kronrod_panel(&f, a, b);
    panels.push((a, b, v, e));
    let mut evals = 15;
    loop {
        let total_err: T = panels.iter().map(|p| p.3).sum();
        if total_err <= abs_tol || panels.len() >= MAX_SUBDIVISIONS {
            break;
        }
        let (worst, _) =
            panels.iter().enumerate().fold(
                (0, T::neg_infinity()),
                |acc, (i, p)| {
                    if p.3 > acc.1 {
                        (i, p.3)
                    } else {
                        acc
                    }
                },
            );
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let mid = T::lit(0.5) * (pa + pb);
        if mid <= pa || mid >= pb {
            // interval exhausted at machine precision
            panels.push((pa, pb, kronrod_panel(&f, pa, pb).0, T::zero()));
            continue;
        }
        let (v1, e1) = kronrod_panel(&f, pa, mid);
        let (v2, e2) = kronrod_panel(&f, mid, pb);
        evals += 30;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
    // sum in left-to-right order so the result does not depend on heap order
    panels.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    QuadResult {
        value: panels.iter().map(|p| p.2).sum(),
        error: panels.iter().map(|p| p.3).sum(),
        evaluations: evals,
    }
}

/// Integrate over `[a, b]` with the interval first split at `breaks`
/// (points outside `(a, b)` are ignored). The tolerance is shared evenly.
pub fn gauss_kronrod_split<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, breaks: &[T], abs_tol: T) -> QuadResult<T> {
    if b < a {
        let r = gauss_kronrod_split(f, b, a, breaks, abs_tol);
        return QuadResult { value: -r.value, ..r };
    }
    let mut pts = vec![a];
    let mut inner: Vec<T> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup();
    pts.extend(inner);
    pts.push(b);
    let pieces = T::from_count(pts.len() - 1);
    let mut out = QuadResult {
        value: T::zero(),
        error: T::zero(),
        evaluations: 0,
    };
    for w in pts.windows(2) {
        let r = gauss_kronrod(&f, w[0], w[1], abs_tol / pieces);
        out.value = out.value + r.value;
        out.error = out.error + r.error;
        out.evaluations += r.evaluations;
    }
    out
}

/// Composite Simpson rule on `nodes` equally spaced nodes (rounded up to the
/// next odd count, minimum 3).
pub fn simpson<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, nodes: usize) -> T {
    let n = nodes.max(3) | 1;
    let intervals = n - 1;
    let h = (b - a) / T::from_count(intervals);
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        acc = acc + w * f(a + h * T::from_count(i));
    }
    acc * h / T::lit(3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exactness() {
        let r = gauss_kronrod(|x: f64| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, 1e-12);
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0) + 3.0;
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand() {
        // ∫_0^{2π} dθ/(sin²θ + 100 cos²θ) = 2π/10
        let r = gauss_kronrod(
            |t: f64| 1.0 / (t.sin().powi(2) + 100.0 * t.cos().powi(2)),
            0.0,
            2.0 * PI,
            1e-11,
        );
        assert!((r.value - 0.2 * PI).abs() < 1e-11, "{}", r.value);
        assert!(r.error <= 1e-11);
    }

    #[test]
    fn reversed_limits_and_breaks() {
        let f = |x: f64| x.abs();
        let r = gauss_kronrod_split(f, 1.0, -1.0, &[0.0, 5.0], 1e-12);
        assert!((r.value + 1.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_order() {
        let e1 = (simpson(|x: f64| x.sin(), 0.0, PI, 17) - 2.0).abs();
        let e2 = (simpson(|x: f64| x.sin(), 0.0, PI, 33) - 2.0).abs();
        assert!(e1 / e2 > 14.0 && e1 / e2 < 18.0);
        assert!((simpson(|x: f64| x * x * x, 0.0, 1.0, 4) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn works_in_f32() {
        let r = gauss_kronrod(|x: f32| x.cos(), 0.0, std::f32::consts::FRAC_PI_2, 1e-5);
        assert!((r.value - 1.0).abs() < 1e-5);
    }
}
