//! Dormand–Prince 5(4) integrator with step-size control and continuous
//! (dense) output of order 4.

use crate::error::{Error, Result};
use crate::scalar::Real;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug)]
pub struct StepControl<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> StepControl<T> {
    pub fn new(rtol: T, atol: T) -> Self {
        StepControl {
            rtol,
            atol,
            max_steps: 2_000_000,
        }
    }
}

/// Dense-output polynomial of one accepted step.
#[derive(Clone, Debug)]
pub struct DenseSegment<T, const N: usize> {
    pub t0: T,
    pub h: T,
    coeffs: [[T; N]; 5],
}

impl<T: Real, const N: usize> DenseSegment<T, N> {
    pub fn eval(&self, t: T) -> [T; N] {
        let s = (t - self.t0) / self.h;
        let s1 = T::one() - s;
        let c = &self.coeffs;
        std::array::from_fn(|i| c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i]))))
    }

    pub fn t1(&self) -> T {
        self.t0 + self.h
    }
}

#[derive(Clone, Debug)]
pub struct OdeSolution<T, const N: usize> {
    pub segments: Vec<DenseSegment<T, N>>,
    pub y_end: [T; N],
    pub accepted: usize,
    pub rejected: usize,
    /// Largest normalized local error estimate among accepted steps.
    pub max_error: T,
}

impl<T: Real, const N: usize> OdeSolution<T, N> {
    pub fn t_start(&self) -> T {
        self.segments.first().map_or(T::zero(), |s| s.t0)
    }

    pub fn t_end(&self) -> T {
        self.segments.last().map_or(T::zero(), |s| s.t1())
    }

    /// Continuous extension, clamped to the integration interval.
    pub fn eval(&self, t: T) -> [T; N] {
        let idx = self
            .segments
            .partition_point(|s| s.t1() < t)
            .min(self.segments.len() - 1);
        if t >= self.t_end() {
            return self.y_end;
        }
        self.segments[idx].eval(t)
    }
}

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    std::array::from_fn(|i| {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + T::lit(*c) * k[i];
        }
        y[i] + h * acc
    })
}

fn err_norm<T: Real, const N: usize>(e: &[T; N], y0: &[T; N], y1: &[T; N], ctl: &StepControl<T>) -> T {
    let mut acc = T::zero();
    for i in 0..N {
        let sc = ctl.atol + ctl.rtol * y0[i].abs().max(y1[i].abs());
        let r = e[i] / sc;
        acc = acc + r * r;
    }
    (acc / T::from_count(N)).sqrt()
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1 > t0`. `monitor` sees every
/// accepted state and may abort the integration by returning an error.
pub fn integrate<T, const N: usize, F, M>(
    rhs: F,
    t0: T,
    y0: [T; N],
    t1: T,
    ctl: &StepControl<T>,
    mut monitor: M,
) -> Result<OdeSolution<T, N>>
where
    T: Real,
    F: Fn(T, &[T; N]) -> Result<[T; N]>,
    M: FnMut(T, &[T; N]) -> Result<()>,
{
    if !(t1 > t0) {
        return Err(Error::InvalidParams(format!(
            "integration interval [{t0}, {t1}] is empty"
        )));
    }
    let span = t1 - t0;
    let h_floor = T::epsilon() * T::lit(8.0) * t1.abs().max(span);
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;
    monitor(t, &y)?;

    let mut h = initial_step(&rhs, t0, &y0, &k1, span, ctl)?;
    let mut out = OdeSolution {
        segments: Vec::new(),
        y_end: y0,
        accepted: 0,
        rejected: 0,
        max_error: T::zero(),
    };
    let mut last_rejected = false;

    while t < t1 {
        if out.accepted + out.rejected >= ctl.max_steps {
            return Err(Error::StepFailure {
                t: t.to_f64_lossy(),
                reason: "step budget exhausted".into(),
            });
        }
        if t + h * T::lit(1.01) >= t1 {
            h = t1 - t;
        }
        if h < h_floor {
            return Err(Error::StepFailure {
                t: t.to_f64_lossy(),
                reason: format!("step size underflow (h = {h})"),
            });
        }
        let k2 = rhs(t + T::lit(C2) * h, &axpy(&y, h, &[(A21, &k1)]))?;
        let k3 = rhs(t + T::lit(C3) * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = rhs(t + T::lit(C4) * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = rhs(
            t + T::lit(C5) * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = rhs(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(t + h, &y_new)?;
        let e = axpy(
            &[T::zero(); N],
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let err = err_norm(&e, &y, &y_new, ctl);
        if !err.is_finite() {
            return Err(Error::StepFailure {
                t: t.to_f64_lossy(),
                reason: "non-finite error estimate".into(),
            });
        }

        if err <= T::one() {
            let ydiff: [T; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [T; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let c4: [T; N] = std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]);
            let c5 = axpy(
                &[T::zero(); N],
                h,
                &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)],
            );
            out.segments.push(DenseSegment {
                t0: t,
                h,
                coeffs: [y, ydiff, bspl, c4, c5],
            });
            out.accepted += 1;
            out.max_error = out.max_error.max(err);
            let t_next = if t1 - (t + h) <= h_floor { t1 } else { t + h };
            t = t_next;
            y = y_new;
            k1 = k7;
            monitor(t, &y)?;
            let mut fac = T::lit(0.9) * err.max(T::lit(1e-10)).powf(T::lit(-0.2));
            fac = fac
                .min(if last_rejected { T::one() } else { T::lit(10.0) })
                .max(T::lit(0.2));
            h = h * fac;
            last_rejected = false;
        } else {
            out.rejected += 1;
            let fac = (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2));
            h = h * fac;
            last_rejected = true;
        }
    }
    out.y_end = y;
    Ok(out)
}

fn initial_step<T, const N: usize, F>(
    rhs: &F,
    t0: T,
    y0: &[T; N],
    f0: &[T; N],
    span: T,
    ctl: &StepControl<T>,
) -> Result<T>
where
    T: Real,
    F: Fn(T, &[T; N]) -> Result<[T; N]>,
{
    let scaled = |v: &[T; N]| {
        let mut acc = T::zero();
        for i in 0..N {
            let sc = ctl.atol + ctl.rtol * y0[i].abs();
            acc = acc + (v[i] / sc) * (v[i] / sc);
        }
        (acc / T::from_count(N)).sqrt()
    };
    let d0 = scaled(y0);
    let d1 = scaled(f0);
    let mut h0 = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    h0 = h0.min(span);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = rhs(t0 + h0, &y1)?;
    let diff: [T; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = scaled(&diff) / h0;
    let h1 = if d1.max(d2) <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
    };
    Ok((h0 * T::lit(100.0)).min(h1).min(span))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotation(_t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        Ok([y[1], -y[0]])
    }

    #[test]
    fn harmonic_rotation_accuracy() {
        let ctl = StepControl::new(1e-10, 1e-12);
        let sol = integrate(rotation, 0.0, [0.0, 1.0], 2.0 * PI, &ctl, |_, _| Ok(())).unwrap();
        assert!((sol.y_end[0]).abs() < 1e-8);
        assert!((sol.y_end[1] - 1.0).abs() < 1e-8);
        assert_eq!(sol.t_end(), 2.0 * PI);
        // dense output between steps
        for k in 0..100 {
            let t = 0.0628 * k as f64;
            let y = sol.eval(t);
            assert!((y[0] - t.sin()).abs() < 1e-8, "t = {t}");
            assert!((y[1] - t.cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn fifth_order_convergence_of_global_error() {
        // exponential decay, compare errors at two tolerances
        let f = |_t: f64, y: &[f64; 1]| Ok([-y[0]]);
        let e = |tol: f64| {
            let sol = integrate(f, 0.0, [1.0], 5.0, &StepControl::new(tol, tol * 1e-3), |_, _| Ok(())).unwrap();
            (sol.y_end[0] - (-5.0f64).exp()).abs()
        };
        assert!(e(1e-10) < e(1e-6));
        assert!(e(1e-10) < 1e-11);
    }

    #[test]
    fn monitor_can_abort() {
        let r = integrate(
            rotation,
            0.0,
            [0.0, 1.0],
            10.0,
            &StepControl::new(1e-8, 1e-12),
            |t, _| {
                if t > 1.0 {
                    Err(Error::NearOrigin { t, rho: 0.0 })
                } else {
                    Ok(())
                }
            },
        );
        assert!(matches!(r, Err(Error::NearOrigin { .. })));
    }

    #[test]
    fn rejects_empty_interval_and_blowup() {
        assert!(integrate(
            rotation,
            1.0,
            [0.0, 1.0],
            1.0,
            &StepControl::new(1e-8, 1e-12),
            |_, _| Ok(())
        )
        .is_err());
        // y' = y² blows up at t = 1
        let r = integrate(
            |_, y: &[f64; 1]| Ok([y[0] * y[0]]),
            0.0,
            [1.0],
            2.0,
            &StepControl::new(1e-8, 1e-12),
            |_, _| Ok(()),
        );
        assert!(matches!(r, Err(Error::StepFailure { .. })));
    }
}
