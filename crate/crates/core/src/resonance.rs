//! Periods, lap times, resonance intervals and the classification of a
//! horizon `T`.
//!
//! Every time is an angular integral `∫ dθ / (2 v(θ))` of the profile, split
//! at the profile kinks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::boundary::LinePair;
use crate::error::Result;
use crate::hamiltonian::{check_ordering, HomogeneousHamiltonian};
use crate::quadrature::gauss_kronrod_split;
use crate::scalar::Real;

/// Absolute tolerance for the angular integrals.
pub const LAP_TOL: f64 = 1e-10;
/// Default number of resonance intervals computed up front.
pub const DEFAULT_JMAX: usize = 64;

/// Time spent by the autonomous flow of `h` sweeping clockwise from angle `to`
/// back to `from` (with `from ≤ to`), i.e. `∫_from^to dθ / (2v)`.
pub fn angular_time<T: Real>(h: &HomogeneousHamiltonian<T>, from: T, to: T) -> T {
    if from == to {
        return T::zero();
    }
    let kinks = h.profile.kinks_within(from, to);
    let two = T::lit(2.0);
    gauss_kronrod_split(
        |th| T::one() / (two * h.profile.v(th)),
        from,
        to,
        &kinks,
        T::lit(LAP_TOL),
    )
    .value
}

/// Minimal period `τ_V = ∫₀^{2π} dθ / (2v)`.
pub fn period<T: Real>(h: &HomogeneousHamiltonian<T>) -> T {
    angular_time(h, T::zero(), T::TAU())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeLaps<T> {
    pub tau0: T,
    pub tau1: T,
    pub sigma1: T,
    pub tau2: T,
    pub sigma2: T,
}

impl<T: Real> TimeLaps<T> {
    pub fn total(&self) -> T {
        self.tau1 + self.sigma1 + self.tau2 + self.sigma2
    }

    /// Phase at which the eigen-solution leaves `l_S²`.
    pub fn second_phase(&self) -> T {
        self.tau0 + self.tau1 + self.sigma1
    }
}

pub fn time_laps<T: Real>(h: &HomogeneousHamiltonian<T>, lp: &LinePair<T>) -> TimeLaps<T> {
    let zs = lp.start.zeta;
    let dz = lp.delta_zeta;
    let pi = T::PI();
    TimeLaps {
        tau0: angular_time(h, zs, T::FRAC_PI_2()),
        tau1: angular_time(h, zs - dz, zs),
        sigma1: angular_time(h, zs - pi, zs - dz),
        tau2: angular_time(h, zs + pi - dz, zs + pi),
        sigma2: angular_time(h, zs, zs + pi - dz),
    }
}

fn lap_constants<T: Real>(l: &TimeLaps<T>, period: T, j: usize) -> (T, T) {
    let k = T::from_count(j / 2) * period;
    if j.is_multiple_of(2) {
        (k + l.tau1, k + l.tau2)
    } else {
        let base = k + l.tau1 + l.tau2;
        (base + l.sigma1, base + l.sigma2)
    }
}

/// The intervals `I_j = [α_j, β_j]` of a Hamiltonian pair `V1 ≤ V2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSet<T> {
    pub laps1: TimeLaps<T>,
    pub laps2: TimeLaps<T>,
    pub period1: T,
    pub period2: T,
    pub alphas: Vec<T>,
    pub betas: Vec<T>,
    pub a1: Vec<T>,
    pub a2: Vec<T>,
    pub b1: Vec<T>,
    pub b2: Vec<T>,
}

impl<T: Real> ResonanceSet<T> {
    fn from_laps(laps1: TimeLaps<T>, period1: T, laps2: TimeLaps<T>, period2: T, j_max: usize) -> Self {
        let mut rs = ResonanceSet {
            laps1,
            laps2,
            period1,
            period2,
            alphas: vec![],
            betas: vec![],
            a1: vec![],
            a2: vec![],
            b1: vec![],
            b2: vec![],
        };
        rs.extend_to(j_max);
        rs
    }

    /// `(a_j¹, a_j²)` from the lap times of `V2`.
    pub fn a(&self, j: usize) -> (T, T) {
        lap_constants(&self.laps2, self.period2, j)
    }

    /// `(b_j¹, b_j²)` from the lap times of `V1`.
    pub fn b(&self, j: usize) -> (T, T) {
        lap_constants(&self.laps1, self.period1, j)
    }

    pub fn alpha(&self, j: usize) -> T {
        let (x, y) = self.a(j);
        x.min(y)
    }

    pub fn beta(&self, j: usize) -> T {
        let (x, y) = self.b(j);
        x.max(y)
    }

    pub fn j_max(&self) -> usize {
        self.alphas.len().saturating_sub(1)
    }

    /// Populate the tables for indices `0..=j_max`.
    pub fn extend_to(&mut self, j_max: usize) {
        for j in self.alphas.len()..=j_max {
            let (a1, a2) = self.a(j);
            let (b1, b2) = self.b(j);
            self.a1.push(a1);
            self.a2.push(a2);
            self.b1.push(b1);
            self.b2.push(b2);
            self.alphas.push(a1.min(a2));
            self.betas.push(b1.max(b2));
        }
    }

    /// Extend until the last tabulated `β` exceeds `t`.
    pub fn extend_beyond(&mut self, t: T) {
        while self.betas.last().is_none_or(|&b| b <= t) {
            let next = self.alphas.len().max(1) * 2;
            self.extend_to(next - 1);
        }
    }
}

/// Resonance intervals for `V1 ≤ V2` on the given boundary lines.
pub fn resonance_intervals<T: Real>(
    h1: &HomogeneousHamiltonian<T>,
    h2: &HomogeneousHamiltonian<T>,
    lp: &LinePair<T>,
    j_max: usize,
) -> Result<ResonanceSet<T>> {
    check_ordering(h1, h2)?;
    Ok(ResonanceSet::from_laps(
        time_laps(h1, lp),
        period(h1),
        time_laps(h2, lp),
        period(h2),
        j_max,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// `T < α₀`.
    BelowFirst,
    /// `β_{j−1} < T < α_j`.
    Nonresonant(usize),
    /// `T` lies on exactly one of `α_j`, `β_{j−1}`.
    Simple { case: Case, j: usize },
    /// `T = β_{j−1} = α_j`.
    Double { lower: Case, upper: Case, j: usize },
    /// `T` inside some `I_j` away from its end points.
    InteriorResonant(usize),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::BelowFirst => "below_first",
            Verdict::Nonresonant(_) => "nonresonant",
            Verdict::Simple { .. } => "simple",
            Verdict::Double { .. } => "double",
            Verdict::InteriorResonant(_) => "interior_resonant",
        }
    }

    pub fn index(&self) -> Option<usize> {
        match *self {
            Verdict::BelowFirst => None,
            Verdict::Nonresonant(j) | Verdict::InteriorResonant(j) => Some(j),
            Verdict::Simple { j, .. } | Verdict::Double { j, .. } => Some(j),
        }
    }

    pub fn cases(&self) -> Vec<Case> {
        match *self {
            Verdict::Simple { case, .. } => vec![case],
            Verdict::Double { lower, upper, .. } => vec![lower, upper],
            _ => vec![],
        }
    }

    /// Whether `T` sits on the boundary of the resonance set.
    pub fn is_boundary_resonant(&self) -> bool {
        matches!(self, Verdict::Simple { .. } | Verdict::Double { .. })
    }
}

/// Serialized form: `{verdict, j, cases, alpha_j, beta_jm1, tol}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationRecord {
    pub verdict: String,
    pub j: Option<usize>,
    pub cases: Vec<Case>,
    pub alpha_j: Option<f64>,
    pub beta_jm1: Option<f64>,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification<T> {
    pub verdict: Verdict,
    pub tol: T,
    pub alpha_j: Option<T>,
    pub beta_jm1: Option<T>,
}

impl<T: Real> Classification<T> {
    pub fn record(&self) -> ClassificationRecord {
        ClassificationRecord {
            verdict: self.verdict.name().to_string(),
            j: self.verdict.index(),
            cases: self.verdict.cases(),
            alpha_j: self.alpha_j.map(Real::to_f64_lossy),
            beta_jm1: self.beta_jm1.map(Real::to_f64_lossy),
            tol: self.tol.to_f64_lossy(),
        }
    }
}

/// `1e-9·max(1, T)`.
pub fn default_tol<T: Real>(t: T) -> T {
    T::lit(1e-9) * t.max(T::one())
}

fn alpha_case<T: Real>(rs: &ResonanceSet<T>, j: usize, tol: T) -> Case {
    let (a1, a2) = rs.a(j);
    if (a1 - a2).abs() <= tol {
        Case::R3
    } else if a1 < a2 {
        Case::R1
    } else {
        Case::R2
    }
}

fn beta_case<T: Real>(rs: &ResonanceSet<T>, j: usize, tol: T) -> Case {
    let (b1, b2) = rs.b(j);
    if (b1 - b2).abs() <= tol {
        Case::R6
    } else if b1 > b2 {
        Case::R4
    } else {
        Case::R5
    }
}

/// Classify the horizon `t` against the resonance intervals.
///
/// Indices beyond the tabulated range are evaluated on demand, so the
/// verdict never depends on `j_max`.
pub fn classify<T: Real>(t: T, rs: &ResonanceSet<T>, tol: T) -> Classification<T> {
    let alpha0 = rs.alpha(0);
    let mk = |verdict, alpha_j, beta_jm1| Classification {
        verdict,
        tol,
        alpha_j,
        beta_jm1,
    };
    if t < alpha0 - tol {
        return mk(Verdict::BelowFirst, Some(alpha0), None);
    }
    // α is strictly increasing, so only indices with α_j ≤ t + tol matter,
    // plus the first one above.
    let mut last = 0;
    while rs.alpha(last + 1) <= t + tol {
        last += 1;
    }
    for i in 0..=last {
        if t > rs.alpha(i) + tol && t < rs.beta(i) - tol {
            return mk(
                Verdict::InteriorResonant(i),
                Some(rs.alpha(i)),
                if i > 0 { Some(rs.beta(i - 1)) } else { None },
            );
        }
    }
    let alpha_hit = (0..=last).find(|&j| (t - rs.alpha(j)).abs() <= tol);
    let beta_hit = (0..=last + 1).find(|&i| (t - rs.beta(i)).abs() <= tol);
    match (alpha_hit, beta_hit) {
        (Some(j), Some(i)) if i + 1 == j => mk(
            Verdict::Double {
                lower: beta_case(rs, i, tol),
                upper: alpha_case(rs, j, tol),
                j,
            },
            Some(rs.alpha(j)),
            Some(rs.beta(i)),
        ),
        (Some(j), _) => mk(
            Verdict::Simple {
                case: alpha_case(rs, j, tol),
                j,
            },
            Some(rs.alpha(j)),
            if j > 0 { Some(rs.beta(j - 1)) } else { None },
        ),
        (None, Some(i)) => mk(
            Verdict::Simple {
                case: beta_case(rs, i, tol),
                j: i + 1,
            },
            Some(rs.alpha(i + 1)),
            Some(rs.beta(i)),
        ),
        (None, None) => {
            // not inside any interval, so β_last < t < α_{last+1}
            let j = last + 1;
            mk(Verdict::Nonresonant(j), Some(rs.alpha(j)), Some(rs.beta(j - 1)))
        }
    }
}

/// For a single Hamiltonian: does `t` satisfy one of the four identities
/// `kτ + τ₁`, `kτ + τ₁ + σ₁ + τ₂`, `kτ + τ₂`, `kτ + τ₂ + σ₂ + τ₁`
/// for some `k ≤ k_max`?
pub fn satisfies_identity<T: Real>(t: T, laps: &TimeLaps<T>, period: T, k_max: usize, tol: T) -> bool {
    let shifts = [
        laps.tau1,
        laps.tau1 + laps.sigma1 + laps.tau2,
        laps.tau2,
        laps.tau2 + laps.sigma2 + laps.tau1,
    ];
    (0..=k_max).any(|k| {
        let base = T::from_count(k) * period;
        shifts.iter().any(|&s| (t - base - s).abs() <= tol)
    })
}

/// For `V1 = V2`, both memberships of `t`: the interval verdict and whether
/// `t` is a genuine eigenvalue horizon (one of the four identities).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityResonance<T> {
    pub classification: Classification<T>,
    pub eigen_horizon: bool,
}

pub fn identity_resonance<T: Real>(
    t: T,
    h: &HomogeneousHamiltonian<T>,
    lp: &LinePair<T>,
    tol: T,
) -> Result<IdentityResonance<T>> {
    let rs = resonance_intervals(h, h, lp, 1)?;
    let k_max = (t / rs.period2).to_usize().unwrap_or(0) + 1;
    Ok(IdentityResonance {
        classification: classify(t, &rs, tol),
        eigen_horizon: satisfies_identity(t, &rs.laps2, rs.period2, k_max, tol),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{make_asymmetric, AsymmetricParams};
    use std::f64::consts::PI;

    fn asym(mu: f64, nu: f64) -> HomogeneousHamiltonian<f64> {
        make_asymmetric(AsymmetricParams { mu, nu }).unwrap()
    }

    fn harm(mu: f64) -> HomogeneousHamiltonian<f64> {
        HomogeneousHamiltonian::harmonic(mu).unwrap()
    }

    #[test]
    fn period_examples() {
        assert!((period(&harm(1.0)) - 2.0 * PI).abs() < 1e-10);
        assert!((period(&asym(4.0, 1.0)) - 1.5 * PI).abs() < 1e-10);
        assert!((period(&asym(9.0, 4.0)) - 5.0 * PI / 6.0).abs() < 1e-10);
    }

    #[test]
    fn period_converges_under_tighter_tolerance() {
        let h = asym(37.0, 0.3);
        let kinks = h.profile.kinks_within(0.0, 2.0 * PI);
        let f = |th: f64| 1.0 / (2.0 * h.v(th));
        let coarse = gauss_kronrod_split(f, 0.0, 2.0 * PI, &kinks, 1e-6);
        let fine = gauss_kronrod_split(f, 0.0, 2.0 * PI, &kinks, 5e-7);
        assert!((coarse.value - fine.value).abs() <= coarse.error.max(1e-15));
    }

    #[test]
    fn lap_examples() {
        let l = time_laps(&asym(4.0, 9.0), &LinePair::dirichlet());
        assert!(l.tau0.abs() < 1e-12 && l.sigma1.abs() < 1e-12 && l.sigma2.abs() < 1e-12);
        assert!((l.tau1 - PI / 2.0).abs() < 1e-10 && (l.tau2 - PI / 3.0).abs() < 1e-10);

        let l = time_laps(&harm(1.0), &LinePair::neumann());
        assert!((l.tau0 - PI / 2.0).abs() < 1e-10);
        assert!((l.tau1 - PI).abs() < 1e-10 && (l.tau2 - PI).abs() < 1e-10);
        assert!(l.sigma1.abs() < 1e-12 && l.sigma2.abs() < 1e-12);

        let l = time_laps(&harm(1.0), &LinePair::mixed());
        for x in [l.tau1, l.sigma1, l.tau2, l.sigma2] {
            assert!((x - PI / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn interval_examples() {
        let rs = resonance_intervals(&harm(1.0), &harm(4.0), &LinePair::dirichlet(), 2).unwrap();
        let expect = [(0.5 * PI, PI), (PI, 2.0 * PI), (1.5 * PI, 3.0 * PI)];
        for (j, (a, b)) in expect.into_iter().enumerate() {
            assert!((rs.alphas[j] - a).abs() < 1e-9 && (rs.betas[j] - b).abs() < 1e-9);
        }

        let rs = resonance_intervals(&harm(1.0), &harm(1.0), &LinePair::dirichlet(), 3).unwrap();
        for j in 0..4 {
            let want = (j + 1) as f64 * PI;
            assert!((rs.alphas[j] - want).abs() < 1e-9 && (rs.betas[j] - want).abs() < 1e-9);
        }

        let h = asym(4.0, 1.0);
        let rs = resonance_intervals(&h, &h, &LinePair::dirichlet(), 0).unwrap();
        assert!((rs.a1[0] - PI / 2.0).abs() < 1e-9 && (rs.a2[0] - PI).abs() < 1e-9);
        assert!((rs.alphas[0] - PI / 2.0).abs() < 1e-9 && (rs.betas[0] - PI).abs() < 1e-9);
    }

    #[test]
    fn ordering_is_enforced() {
        assert!(resonance_intervals(&harm(4.0), &harm(1.0), &LinePair::dirichlet(), 2).is_err());
    }

    #[test]
    fn classify_examples() {
        let rs = resonance_intervals(&harm(1.0), &harm(4.0), &LinePair::dirichlet(), 4).unwrap();
        let c = |t: f64| classify(t, &rs, default_tol(t)).verdict;
        assert_eq!(c(1.0), Verdict::BelowFirst);
        assert_eq!(
            c(PI),
            Verdict::Double {
                lower: Case::R6,
                upper: Case::R3,
                j: 1
            }
        );
        assert_eq!(c(1.2 * PI), Verdict::InteriorResonant(1));

        let rs = resonance_intervals(&harm(1.0), &harm(2.25), &LinePair::dirichlet(), 4).unwrap();
        assert_eq!(classify(1.3 * PI, &rs, 1e-9).verdict, Verdict::Nonresonant(1));

        let h = asym(4.0, 1.0);
        let rs = resonance_intervals(&h, &h, &LinePair::dirichlet(), 2).unwrap();
        assert_eq!(
            classify(PI / 2.0, &rs, 1e-9).verdict,
            Verdict::Simple { case: Case::R1, j: 0 }
        );
        assert_eq!(
            classify(PI, &rs, 1e-9).verdict,
            Verdict::Simple { case: Case::R5, j: 1 }
        );
        assert_eq!(classify(0.75 * PI, &rs, 1e-9).verdict, Verdict::InteriorResonant(0));
    }

    #[test]
    fn classify_beyond_table() {
        let rs = resonance_intervals(&harm(1.0), &harm(1.0), &LinePair::dirichlet(), 1).unwrap();
        assert_eq!(
            classify(40.0 * PI, &rs, 1e-8).verdict,
            Verdict::Simple { case: Case::R3, j: 39 }
        );
        assert_eq!(classify(40.5 * PI, &rs, 1e-8).verdict, Verdict::Nonresonant(40));
    }

    #[test]
    fn extend_beyond_grows_table() {
        let mut rs = resonance_intervals(&harm(1.0), &harm(4.0), &LinePair::dirichlet(), 1).unwrap();
        rs.extend_beyond(100.0);
        assert!(*rs.betas.last().unwrap() > 100.0);
        for w in rs.alphas.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn classification_record_round_trip() {
        let rs = resonance_intervals(&harm(1.0), &harm(4.0), &LinePair::dirichlet(), 4).unwrap();
        let rec = classify(PI, &rs, 1e-9).record();
        let text = serde_json::to_string(&rec).unwrap();
        let back: ClassificationRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rec);
        assert_eq!(rec.verdict, "double");
        assert_eq!(rec.cases, vec![Case::R6, Case::R3]);
    }

    #[test]
    fn identity_membership_for_equal_pair() {
        let h = asym(4.0, 1.0);
        let r = identity_resonance(0.75 * PI, &h, &LinePair::dirichlet(), 1e-9).unwrap();
        assert!(!r.eigen_horizon);
        assert_eq!(r.classification.verdict, Verdict::InteriorResonant(0));
        let r = identity_resonance(1.5 * PI + PI / 2.0, &h, &LinePair::dirichlet(), 1e-9).unwrap();
        assert!(r.eigen_horizon);
        assert!(r.classification.verdict.is_boundary_resonant());
    }
}
