//! Positively homogeneous Hamiltonians of degree two.
//!
//! A Hamiltonian `V` with `V(λz) = λ²V(z)` is determined by its angular
//! profile `v(θ) = V(cos θ, sin θ)`. Writing `z = ρ(cos θ, sin θ)`,
//!
//! ```text
//! V(z)  = ρ² v(θ)
//! ∇V(z) = ρ (2 v(θ) e_ρ + v'(θ) e_θ),   e_ρ = (cos θ, sin θ), e_θ = (-sin θ, cos θ)
//! ```
//!
//! so Euler's identity `⟨∇V(z), z⟩ = 2V(z)` holds by construction.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expression, Var, Vars};
use crate::scalar::{neg, pos, Real};

/// Number of angles sampled when validating user profiles.
pub const PROFILE_SAMPLES: usize = 4096;

/// Stiffness pair of the asymmetric oscillator `x'' + μx⁺ − νx⁻ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymmetricParams<T> {
    pub mu: T,
    pub nu: T,
}

impl<T: Real> AsymmetricParams<T> {
    pub fn new(mu: T, nu: T) -> Result<Self> {
        if !(mu > T::zero() && nu > T::zero()) || !mu.is_finite() || !nu.is_finite() {
            return Err(Error::InvalidParams(format!(
                "mu and nu must be positive and finite (mu = {mu}, nu = {nu})"
            )));
        }
        Ok(AsymmetricParams { mu, nu })
    }

    /// Period `π/√μ + π/√ν` of the oscillator.
    pub fn period(&self) -> T {
        T::PI() / self.mu.sqrt() + T::PI() / self.nu.sqrt()
    }
}

type NativeFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
enum ProfileKind<T> {
    Asymmetric(AsymmetricParams<T>),
    Expression { v: Expression, dv: Option<Expression> },
    Native { v: NativeFn<T>, dv: Option<NativeFn<T>> },
}

/// `v(θ) = V(cos θ, sin θ)` together with its derivative and the angles
/// where the profile is only piecewise smooth.
#[derive(Clone)]
pub struct AngularProfile<T> {
    kind: ProfileKind<T>,
    kinks: Vec<T>,
}

impl<T: Real> fmt::Debug for AngularProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("AngularProfile");
        match &self.kind {
            ProfileKind::Asymmetric(p) => d.field("asymmetric", p),
            ProfileKind::Expression { v, dv } => {
                d.field("v", &v.source()).field("dv", &dv.as_ref().map(|e| e.source()))
            }
            ProfileKind::Native { .. } => d.field("native", &true),
        };
        d.field("kinks", &self.kinks).finish()
    }
}

const FD_STEP: f64 = 1e-6;

impl<T: Real> AngularProfile<T> {
    pub fn asymmetric(p: AsymmetricParams<T>) -> Self {
        let half_pi = T::FRAC_PI_2();
        AngularProfile {
            kind: ProfileKind::Asymmetric(p),
            kinks: vec![half_pi, half_pi * T::lit(3.0)],
        }
    }

    /// Profile given as an expression in `theta`. Without an explicit `dv`
    /// the derivative is obtained by differentiating the expression tree.
    pub fn from_expression(v: Expression, dv: Option<Expression>, kinks: Vec<T>) -> Result<Self> {
        for e in std::iter::once(&v).chain(dv.iter()) {
            for var in [Var::T, Var::X, Var::Y] {
                if e.uses(var) {
                    return Err(Error::InvalidParams(format!(
                        "profile `{e}` may only depend on theta (uses `{}`)",
                        var.name()
                    )));
                }
            }
        }
        Self::validated(ProfileKind::Expression { v, dv }, kinks)
    }

    /// Profile given by closures. Without `dv`, central differences are used.
    pub fn from_fn<V, D>(v: V, dv: Option<D>, kinks: Vec<T>) -> Result<Self>
    where
        V: Fn(T) -> T + Send + Sync + 'static,
        D: Fn(T) -> T + Send + Sync + 'static,
    {
        let dv = dv.map(|d| Arc::new(d) as NativeFn<T>);
        Self::validated(ProfileKind::Native { v: Arc::new(v), dv }, kinks)
    }

    fn validated(kind: ProfileKind<T>, kinks: Vec<T>) -> Result<Self> {
        let two_pi = T::TAU();
        let mut kinks: Vec<T> = kinks
            .into_iter()
            .map(|k| {
                let r = k % two_pi;
                if r < T::zero() {
                    r + two_pi
                } else {
                    r
                }
            })
            .collect();
        kinks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        kinks.dedup();
        let profile = AngularProfile { kind, kinks };
        for i in 0..PROFILE_SAMPLES {
            let th = two_pi * T::from_count(i) / T::from_count(PROFILE_SAMPLES);
            let v = profile.v(th);
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::NonPositiveProfile {
                    theta: th.to_f64_lossy(),
                });
            }
        }
        Ok(profile)
    }

    pub fn v(&self, theta: T) -> T {
        match &self.kind {
            ProfileKind::Asymmetric(p) => {
                let (s, c) = theta.sin_cos();
                T::lit(0.5) * (s * s + p.mu * pos(c) * pos(c) + p.nu * neg(c) * neg(c))
            }
            ProfileKind::Expression { v, .. } => v.eval(&Vars::angle(theta)),
            ProfileKind::Native { v, .. } => v(theta),
        }
    }

    pub fn dv(&self, theta: T) -> T {
        match &self.kind {
            ProfileKind::Asymmetric(p) => {
                let (s, c) = theta.sin_cos();
                s * c - p.mu * pos(c) * s + p.nu * neg(c) * s
            }
            ProfileKind::Expression { v, dv } => match dv {
                Some(d) => d.eval(&Vars::angle(theta)),
                None => v.eval_with_derivative(&Vars::angle(theta), Var::Theta).1,
            },
            ProfileKind::Native { v, dv } => match dv {
                Some(d) => d(theta),
                None => {
                    let h = T::lit(FD_STEP);
                    (v(theta + h) - v(theta - h)) / (h + h)
                }
            },
        }
    }

    /// Kink angles in `[0, 2π)`, sorted.
    pub fn kinks(&self) -> &[T] {
        &self.kinks
    }

    /// All kink angles (shifted by multiples of 2π) lying strictly inside `(a, b)`.
    pub fn kinks_within(&self, a: T, b: T) -> Vec<T> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let two_pi = T::TAU();
        let mut out = Vec::new();
        for &k in &self.kinks {
            let mut m = ((lo - k) / two_pi).floor();
            loop {
                let x = k + m * two_pi;
                if x >= hi {
                    break;
                }
                if x > lo {
                    out.push(x);
                }
                m = m + T::one();
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out
    }

    pub fn asymmetric_params(&self) -> Option<AsymmetricParams<T>> {
        match &self.kind {
            ProfileKind::Asymmetric(p) => Some(*p),
            _ => None,
        }
    }

    /// Structural identity (same closed form or same source text).
    pub fn same_as(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (ProfileKind::Asymmetric(a), ProfileKind::Asymmetric(b)) => a == b,
            (ProfileKind::Expression { v: a, dv: da }, ProfileKind::Expression { v: b, dv: db }) => {
                a.source() == b.source()
                    && da.as_ref().map(|e| e.source()) == db.as_ref().map(|e| e.source())
                    && self.kinks == other.kinks
            }
            (ProfileKind::Native { v: a, .. }, ProfileKind::Native { v: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// A degree-2 positively homogeneous energy.
#[derive(Clone)]
pub struct HomogeneousHamiltonian<T> {
    pub profile: AngularProfile<T>,
    pub label: String,
}

impl<T: Real> fmt::Debug for HomogeneousHamiltonian<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomogeneousHamiltonian")
            .field("label", &self.label)
            .field("profile", &self.profile)
            .finish()
    }
}

impl<T: Real> HomogeneousHamiltonian<T> {
    pub fn new(profile: AngularProfile<T>, label: impl Into<String>) -> Self {
        HomogeneousHamiltonian {
            profile,
            label: label.into(),
        }
    }

    /// `2V = y² + μ(x⁺)² + ν(x⁻)²`; kinks at θ = π/2 and 3π/2.
    pub fn asymmetric(p: AsymmetricParams<T>) -> Self {
        HomogeneousHamiltonian {
            profile: AngularProfile::asymmetric(p),
            label: format!("asym({},{})", p.mu, p.nu),
        }
    }

    /// `V = (y² + μx²)/2`.
    pub fn harmonic(mu: T) -> Result<Self> {
        let mut h = Self::asymmetric(AsymmetricParams::new(mu, mu)?);
        h.label = format!("harm({mu})");
        Ok(h)
    }

    pub fn value(&self, z: [T; 2]) -> T {
        let rho2 = z[0] * z[0] + z[1] * z[1];
        if rho2 == T::zero() {
            return T::zero();
        }
        rho2 * self.profile.v(z[1].atan2(z[0]))
    }

    pub fn gradient(&self, z: [T; 2]) -> Result<[T; 2]> {
        let rho = z[0].hypot(z[1]);
        if rho == T::zero() {
            return Err(Error::OriginGradient);
        }
        let theta = z[1].atan2(z[0]);
        let (s, c) = (z[1] / rho, z[0] / rho);
        let two_v = T::lit(2.0) * self.profile.v(theta);
        let dv = self.profile.dv(theta);
        Ok([rho * (two_v * c - dv * s), rho * (two_v * s + dv * c)])
    }

    /// `v(θ)` shortcut.
    pub fn v(&self, theta: T) -> T {
        self.profile.v(theta)
    }
}

/// Shorthand for [`HomogeneousHamiltonian::asymmetric`] with validation.
pub fn make_asymmetric<T: Real>(p: AsymmetricParams<T>) -> Result<HomogeneousHamiltonian<T>> {
    let p = AsymmetricParams::new(p.mu, p.nu)?;
    Ok(HomogeneousHamiltonian::asymmetric(p))
}

/// Check `v1 ≤ v2` on the sampled circle (plus kinks of both profiles).
pub fn check_ordering<T: Real>(h1: &HomogeneousHamiltonian<T>, h2: &HomogeneousHamiltonian<T>) -> Result<()> {
    let slack = T::lit(1e-12);
    let mut angles: Vec<T> = (0..PROFILE_SAMPLES)
        .map(|i| T::TAU() * T::from_count(i) / T::from_count(PROFILE_SAMPLES))
        .collect();
    angles.extend_from_slice(h1.profile.kinks());
    angles.extend_from_slice(h2.profile.kinks());
    for th in angles {
        let excess = h1.v(th) - h2.v(th);
        if excess > slack {
            return Err(Error::OrderingViolated {
                theta: th.to_f64_lossy(),
                excess: excess.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn asym(mu: f64, nu: f64) -> HomogeneousHamiltonian<f64> {
        make_asymmetric(AsymmetricParams { mu, nu }).unwrap()
    }

    fn profile_expr(src: &str) -> HomogeneousHamiltonian<f64> {
        let v = Expression::parse(src, &[Var::Theta]).unwrap();
        HomogeneousHamiltonian::new(AngularProfile::from_expression(v, None, vec![]).unwrap(), src)
    }

    #[test]
    fn value_examples() {
        assert_eq!(asym(1.0, 1.0).value([3.0, 4.0]), 12.5);
        assert!((asym(4.0, 1.0).value([1.0, 0.0]) - 2.0).abs() < 1e-15);
        assert_eq!(asym(4.0, 9.0).value([0.0, 0.0]), 0.0);
    }

    #[test]
    fn gradient_examples() {
        let g = asym(1.0, 1.0).gradient([3.0, 4.0]).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-14 && (g[1] - 4.0).abs() < 1e-14);
        let g = asym(4.0, 1.0).gradient([1.0, 0.0]).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-14 && g[1].abs() < 1e-14);
        let g = asym(4.0, 1.0).gradient([-2.0, 1.0]).unwrap();
        assert!((g[0] + 2.0).abs() < 1e-14 && (g[1] - 1.0).abs() < 1e-14);
        assert_eq!(asym(4.0, 1.0).gradient([0.0, 0.0]), Err(Error::OriginGradient));
    }

    #[test]
    fn make_asymmetric_examples() {
        let h = asym(1.0, 1.0);
        for k in 0..16 {
            assert!((h.v(k as f64 * 0.4) - 0.5).abs() < 1e-15);
        }
        let h = asym(4.0, 1.0);
        assert!((h.v(0.0) - 2.0).abs() < 1e-15);
        assert!((h.v(PI) - 0.5).abs() < 1e-15);
        assert!((h.v(PI / 2.0) - 0.5).abs() < 1e-15);
        assert!((asym(4.0, 9.0).v(PI) - 4.5).abs() < 1e-14);
        assert_eq!(h.profile.kinks(), &[PI / 2.0, 3.0 * PI / 2.0]);
        assert!(make_asymmetric(AsymmetricParams { mu: 0.0, nu: 1.0 }).is_err());
        assert!(make_asymmetric(AsymmetricParams { mu: 1.0, nu: -2.0 }).is_err());
    }

    #[test]
    fn asymmetric_profile_is_c1_at_kinks() {
        let h = asym(7.0, 0.3);
        for k in h.profile.kinks() {
            let eps = 1e-9;
            assert!(h.profile.dv(k - eps).abs() < 1e-8);
            assert!(h.profile.dv(k + eps).abs() < 1e-8);
        }
    }

    #[test]
    fn user_profile_is_validated() {
        let bad = Expression::parse("cos(theta)", &[Var::Theta]).unwrap();
        assert!(matches!(
            AngularProfile::<f64>::from_expression(bad, None, vec![]),
            Err(Error::NonPositiveProfile { .. })
        ));
        let uses_t = Expression::parse("1 + t", &[Var::Theta, Var::T]).unwrap();
        assert!(AngularProfile::<f64>::from_expression(uses_t, None, vec![]).is_err());
        let neg_fn = AngularProfile::<f64>::from_fn(|th| th.sin(), None::<fn(f64) -> f64>, vec![]);
        assert!(neg_fn.is_err());
    }

    #[test]
    fn expression_profile_matches_closed_form() {
        let e = profile_expr("0.5*(sin(theta)^2 + 4*pos(cos(theta))^2 + neg(cos(theta))^2)");
        let a = asym(4.0, 1.0);
        for k in 0..50 {
            let th = -3.0 + 0.123 * k as f64;
            assert!((e.v(th) - a.v(th)).abs() < 1e-14);
            assert!((e.profile.dv(th) - a.profile.dv(th)).abs() < 1e-12);
        }
    }

    #[test]
    fn native_profile_uses_central_differences() {
        let p = AngularProfile::from_fn(|th: f64| 1.0 + 0.5 * th.cos(), None::<fn(f64) -> f64>, vec![]).unwrap();
        assert!((p.dv(0.7) + 0.5 * 0.7f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn ordering_check() {
        assert!(check_ordering(&asym(1.0, 1.0), &asym(4.0, 1.0)).is_ok());
        assert!(matches!(
            check_ordering(&asym(4.0, 1.0), &asym(1.0, 1.0)),
            Err(Error::OrderingViolated { .. })
        ));
    }

    #[test]
    fn kinks_within_window() {
        let h = asym(2.0, 3.0);
        let ks = h.profile.kinks_within(-PI, 3.0 * PI);
        let expect = [-PI / 2.0, PI / 2.0, 3.0 * PI / 2.0, 5.0 * PI / 2.0];
        assert_eq!(ks.len(), 4);
        for (a, b) in ks.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn harmonic_in_f32() {
        let h = HomogeneousHamiltonian::<f32>::harmonic(1.0).unwrap();
        assert!((h.value([3.0, 4.0]) - 12.5).abs() < 1e-5);
    }

    fn random_hamiltonian() -> impl Strategy<Value = HomogeneousHamiltonian<f64>> {
        prop_oneof![
            (0.1f64..50.0, 0.1f64..50.0).prop_map(|(m, n)| asym(m, n)),
            (0.1f64..3.0, -0.9f64..0.9, 0.0f64..6.0)
                .prop_map(|(a, b, c)| { profile_expr(&format!("{a} * (1 + {b} * sin(2*theta + {c}))")) }),
        ]
    }

    fn off_kink(h: &HomogeneousHamiltonian<f64>, th: f64) -> bool {
        h.profile.kinks_within(th - 1e-4, th + 1e-4).is_empty()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn homogeneity(h in random_hamiltonian(), r in 0.01f64..100.0, th in -PI..PI, lam in 0.01f64..100.0) {
            let z = [r * th.cos(), r * th.sin()];
            let lz = [lam * z[0], lam * z[1]];
            let lhs = h.value(lz);
            prop_assert!((lhs - lam * lam * h.value(z)).abs() <= 1e-10 * lhs);
        }
    }

    proptest! {
        #[test]
        fn euler_identity_and_finite_differences(h in random_hamiltonian(), r in 0.1f64..10.0, th in -PI..PI) {
            let z = [r * th.cos(), r * th.sin()];
            let g = h.gradient(z).unwrap();
            let two_v = 2.0 * h.value(z);
            prop_assert!((g[0] * z[0] + g[1] * z[1] - two_v).abs() <= 1e-12 * two_v);
            if off_kink(&h, th) {
                let step = 1e-6 * r;
                let fx = (h.value([z[0] + step, z[1]]) - h.value([z[0] - step, z[1]])) / (2.0 * step);
                let fy = (h.value([z[0], z[1] + step]) - h.value([z[0], z[1] - step])) / (2.0 * step);
                let scale = g[0].hypot(g[1]);
                prop_assert!((fx - g[0]).abs() <= 1e-5 * scale);
                prop_assert!((fy - g[1]).abs() <= 1e-5 * scale);
            }
        }
    }

    proptest! {
        #[test]
        fn profile_derivative_consistent(h in random_hamiltonian(), th in -PI..PI) {
            prop_assume!(off_kink(&h, th));
            let step = 1e-5;
            let fd = (h.v(th + step) - h.v(th - step)) / (2.0 * step);
            let dv = h.profile.dv(th);
            prop_assert!((fd - dv).abs() <= 1e-6 * (1.0 + dv.abs()) );
        }
    }
}
