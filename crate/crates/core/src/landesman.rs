//! Landesman–Lazer functionals and the sign conditions built on them.
//!
//! Planar functionals `𝓙∓(θ)` integrate, over `[0, T]`, the lower/upper limit
//! as `(λ, ω) → (+∞, θ)` of
//!
//! ```text
//! ⟨G(t, λφ_V(t+ω)), φ_V(t+ω)⟩ − 2λ V(φ_V(t+ω))
//! ```
//!
//! The limit is estimated on a few tiers of `λ` and a small window of `ω`.
//! Scalar functionals `𝓐∓` integrate the asymptotic limits of
//! `f(t, x) − μx` (resp. `− νx`) against a Dirichlet eigen-solution.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{flow_with, Field, FlowOptions, Source, Trajectory};
use crate::fucik::{Corner, Eigen, RectVerdict, SpectrumCurve};
use crate::hamiltonian::{AsymmetricParams, HomogeneousHamiltonian};
use crate::quadrature::simpson;
use crate::resonance::{period, Case, TimeLaps, Verdict};
use crate::scalar::Real;

/// Per-`t` integrand values beyond this magnitude are clipped.
pub const CLIP: f64 = 1e12;
/// Smallest reported margin.
pub const MARGIN_FLOOR: f64 = 1e-6;
/// Minimum Simpson nodes per sign-constant arc in the scalar functionals.
pub const ARC_NODES: usize = 129;

/// Estimator settings for the planar functionals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LLParams {
    pub tiers: Vec<f64>,
    pub scale: f64,
    pub delta: f64,
    pub omega_points: usize,
    pub nodes: usize,
}

impl Default for LLParams {
    fn default() -> Self {
        LLParams {
            tiers: vec![1e2, 1e3, 1e4, 1e5],
            scale: 1.0,
            delta: 1e-2,
            omega_points: 11,
            nodes: 513,
        }
    }
}

/// Which side of the limit: `𝓙⁻`/`𝓐⁻` (lower) or `𝓙⁺`/`𝓐⁺` (upper).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

/// Phase at which the planar functional is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// `τ₀`
    First,
    /// `τ₀ + τ₁ + σ₁`
    Second,
}

impl Phase {
    pub fn time<T: Real>(self, laps: &TimeLaps<T>) -> T {
        match self {
            Phase::First => laps.tau0,
            Phase::Second => laps.second_phase(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    Planar { side: Side, phase: Phase },
    Scalar { side: Side, eigen: Eigen },
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = |s: &Side| if *s == Side::Minus { '-' } else { '+' };
        match self {
            Functional::Planar { side, phase } => {
                let ph = match phase {
                    Phase::First => "tau0",
                    Phase::Second => "tau0+tau1+sigma1",
                };
                write!(f, "J{}({ph})", sign(side))
            }
            Functional::Scalar { side, eigen } => {
                let e = match eigen {
                    Eigen::Phi => "phi",
                    Eigen::Psi => "psi",
                };
                write!(f, "A{}({e})", sign(side))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Requirement {
    pub functional: Functional,
    pub direction: Direction,
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.direction == Direction::Positive {
            "> 0"
        } else {
            "< 0"
        };
        write!(f, "{} {op}", self.functional)
    }
}

fn planar(side: Side, phase: Phase) -> Requirement {
    let direction = if side == Side::Minus {
        Direction::Positive
    } else {
        Direction::Negative
    };
    Requirement {
        functional: Functional::Planar { side, phase },
        direction,
    }
}

fn scalar(side: Side, eigen: Eigen) -> Requirement {
    let direction = if side == Side::Minus {
        Direction::Positive
    } else {
        Direction::Negative
    };
    Requirement {
        functional: Functional::Scalar { side, eigen },
        direction,
    }
}

/// Conditions required for one resonance case.
pub fn requirements_for_case(case: Case) -> Vec<Requirement> {
    match case {
        Case::R1 => vec![planar(Side::Plus, Phase::First)],
        Case::R2 => vec![planar(Side::Plus, Phase::Second)],
        Case::R3 => vec![planar(Side::Plus, Phase::First), planar(Side::Plus, Phase::Second)],
        Case::R4 => vec![planar(Side::Minus, Phase::First)],
        Case::R5 => vec![planar(Side::Minus, Phase::Second)],
        Case::R6 => vec![planar(Side::Minus, Phase::First), planar(Side::Minus, Phase::Second)],
    }
}

/// Conditions for a classification; empty when no resonance needs handling.
pub fn requirements_for_verdict(v: &Verdict) -> Vec<Requirement> {
    let mut out: Vec<Requirement> = v.cases().into_iter().flat_map(requirements_for_case).collect();
    out.sort();
    out.dedup();
    out
}

fn corner_requirements(curves: &[SpectrumCurve], side: Side) -> Vec<Requirement> {
    let mut out = Vec::new();
    for c in curves {
        if c.a == c.b {
            out.push(scalar(side, Eigen::Phi));
            out.push(scalar(side, Eigen::Psi));
        } else if c.b == c.a + 1 {
            out.push(scalar(side, Eigen::Psi));
        } else {
            out.push(scalar(side, Eigen::Phi));
        }
    }
    out
}

/// Conditions for a rectangle whose corners touch the spectrum. A corner on
/// several curves collects the conditions of each.
pub fn requirements_for_rect(v: &RectVerdict) -> Vec<Requirement> {
    let mut out = match v {
        RectVerdict::Simple {
            corner: Corner::Lower,
            curves,
            ..
        } => corner_requirements(curves, Side::Minus),
        RectVerdict::Simple {
            corner: Corner::Upper,
            curves,
            ..
        } => corner_requirements(curves, Side::Plus),
        RectVerdict::Double { lower, upper, .. } => {
            let mut r = corner_requirements(lower, Side::Minus);
            r.extend(corner_requirements(upper, Side::Plus));
            r
        }
        _ => vec![],
    };
    out.sort();
    out.dedup();
    out
}

/// A numerical value of a functional with its uncertainty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub margin: f64,
    /// Notes such as clipping or tier instability.
    pub flags: Vec<String>,
    /// An instability makes the sign unusable.
    pub unstable: bool,
}

impl Estimate {
    pub fn exact(estimate: f64, margin: f64) -> Self {
        Estimate {
            estimate,
            margin,
            flags: vec![],
            unstable: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LLVerdict {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LLEntry {
    pub requirement: String,
    pub functional: Functional,
    pub direction: Direction,
    pub estimate: f64,
    pub margin: f64,
    pub verdict: LLVerdict,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LLReport {
    pub entries: Vec<LLEntry>,
    pub overall: LLVerdict,
    pub params: Option<LLParams>,
}

pub fn sign_verdict(e: &Estimate, dir: Direction) -> LLVerdict {
    if e.unstable || !e.estimate.is_finite() || e.estimate.abs() <= e.margin {
        return LLVerdict::Inconclusive;
    }
    let positive = e.estimate > 0.0;
    if positive == (dir == Direction::Positive) {
        LLVerdict::Satisfied
    } else {
        LLVerdict::Violated
    }
}

/// Match requirements against computed values.
pub fn check_assumption(reqs: &[Requirement], values: &BTreeMap<Functional, Estimate>) -> Result<LLReport> {
    let mut entries = Vec::with_capacity(reqs.len());
    for r in reqs {
        let e = values
            .get(&r.functional)
            .ok_or_else(|| Error::MissingFunctional(r.functional.to_string()))?;
        entries.push(LLEntry {
            requirement: r.to_string(),
            functional: r.functional,
            direction: r.direction,
            estimate: e.estimate,
            margin: e.margin,
            verdict: sign_verdict(e, r.direction),
            flags: e.flags.clone(),
        });
    }
    let overall = if entries.iter().any(|e| e.verdict == LLVerdict::Violated) {
        LLVerdict::Violated
    } else if entries.iter().all(|e| e.verdict == LLVerdict::Satisfied) {
        LLVerdict::Satisfied
    } else {
        LLVerdict::Inconclusive
    };
    Ok(LLReport {
        entries,
        overall,
        params: None,
    })
}

/// Asymptotic limits of `f(t, x) − μx` as `x → +∞` and of `f(t, x) − νx`
/// as `x → −∞`, as functions of `t`, for one pair `(μ, ν)`.
#[derive(Clone, Debug)]
pub struct ScalarLimits<T> {
    /// `liminf_{x→+∞} f − μx`
    pub plus_lo: Source<T>,
    /// `limsup_{x→+∞} f − μx`
    pub plus_hi: Source<T>,
    /// `liminf_{x→−∞} f − νx`
    pub minus_lo: Source<T>,
    /// `limsup_{x→−∞} f − νx`
    pub minus_hi: Source<T>,
    /// Uncertainty of the limit values themselves (zero when supplied exactly).
    pub margin: T,
}

const LIMIT_SAMPLES: usize = 16;

impl<T: Real> ScalarLimits<T> {
    /// Limits known exactly; `lo = hi` when the limit exists.
    pub fn exact(plus: Source<T>, minus: Source<T>) -> Self {
        ScalarLimits {
            plus_lo: plus.clone(),
            plus_hi: plus,
            minus_lo: minus.clone(),
            minus_hi: minus,
            margin: T::zero(),
        }
    }

    /// Extract the limits from `f` by sampling `|x| ∈ [10⁵, 10⁶]`. The margin
    /// is the largest change against the decade `[10⁴, 10⁵]` seen on a grid
    /// of `t` in `[0, horizon]`.
    pub fn numeric(f: Source<T>, p: AsymmetricParams<T>, horizon: T) -> Result<Self> {
        let sample = |f: &Source<T>, t: T, sign: T, coef: T, lo_exp: f64| -> Result<(T, T)> {
            let mut lo = T::infinity();
            let mut hi = T::neg_infinity();
            for k in 0..LIMIT_SAMPLES {
                let x = sign * T::lit(10f64.powf(lo_exp + k as f64 / (LIMIT_SAMPLES - 1) as f64));
                let v = f.eval(t, [x, T::zero()])? - coef * x;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            Ok((lo, hi))
        };
        let mut margin = T::zero();
        for i in 0..=32 {
            let t = horizon * T::from_count(i) / T::lit(32.0);
            for (sign, coef) in [(T::one(), p.mu), (-T::one(), p.nu)] {
                let far = sample(&f, t, sign, coef, 5.0)?;
                let near = sample(&f, t, sign, coef, 4.0)?;
                margin = margin.max((far.0 - near.0).abs()).max((far.1 - near.1).abs());
            }
        }
        let mk = |sign: f64, upper: bool| {
            let f = f.clone();
            let coef = if sign > 0.0 { p.mu } else { p.nu };
            Source::native(move |t: T, _z| {
                let (lo, hi) = sample(&f, t, T::lit(sign), coef, 5.0).unwrap_or((T::nan(), T::nan()));
                if upper {
                    hi
                } else {
                    lo
                }
            })
        };
        Ok(ScalarLimits {
            plus_lo: mk(1.0, false),
            plus_hi: mk(1.0, true),
            minus_lo: mk(-1.0, false),
            minus_hi: mk(-1.0, true),
            margin,
        })
    }

    /// Multiply every limit (and the margin) by `c`.
    pub fn scaled(&self, c: T) -> Self {
        let s = |src: &Source<T>| {
            let src = src.clone();
            Source::native(move |t, z| src.eval(t, z).map_or(T::nan(), |v| c * v))
        };
        ScalarLimits {
            plus_lo: s(&self.plus_lo),
            plus_hi: s(&self.plus_hi),
            minus_lo: s(&self.minus_lo),
            minus_hi: s(&self.minus_hi),
            margin: self.margin * c.abs(),
        }
    }
}

fn scalar_integral<T: Real>(
    limits: &ScalarLimits<T>,
    eig: Eigen,
    p: &AsymmetricParams<T>,
    side: Side,
    horizon: T,
    nodes: usize,
) -> Result<(T, T)> {
    let (pos_src, neg_src) = match side {
        Side::Minus => (&limits.plus_lo, &limits.minus_hi),
        Side::Plus => (&limits.plus_hi, &limits.minus_lo),
    };
    let breaks = eig.arc_breaks(p, horizon);
    let mut total = T::zero();
    let mut abs_mass = T::zero();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = eig.eval(p, T::lit(0.5) * (a + b));
        let src = if mid > T::zero() { pos_src } else { neg_src };
        let err = RefCell::new(None);
        let v = simpson(
            |t| {
                let lim = src.eval(t, [T::zero(), T::zero()]).unwrap_or_else(|e| {
                    err.borrow_mut().get_or_insert(e);
                    T::zero()
                });
                lim * eig.eval(p, t)
            },
            a,
            b,
            nodes,
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        total = total + v;
        abs_mass = abs_mass + simpson(|t| eig.eval(p, t).abs(), a, b, nodes);
    }
    Ok((total, abs_mass))
}

/// `𝓐⁻(eig)` (with `(μ₁, ν₁)`) or `𝓐⁺(eig)` (with `(μ₂, ν₂)`), where `p`
/// are the parameters of the eigen-solution and `limits` are taken
/// relative to the same pair.
pub fn ll_scalar<T: Real>(
    limits: &ScalarLimits<T>,
    eig: Eigen,
    p: &AsymmetricParams<T>,
    side: Side,
    horizon: T,
) -> Result<T> {
    Ok(scalar_integral(limits, eig, p, side, horizon, ARC_NODES)?.0)
}

/// [`ll_scalar`] with a margin from node doubling and the limit uncertainty.
pub fn ll_scalar_estimate<T: Real>(
    limits: &ScalarLimits<T>,
    eig: Eigen,
    p: &AsymmetricParams<T>,
    side: Side,
    horizon: T,
) -> Result<Estimate> {
    let (coarse, _) = scalar_integral(limits, eig, p, side, horizon, ARC_NODES)?;
    let (fine, mass) = scalar_integral(limits, eig, p, side, horizon, 2 * ARC_NODES - 1)?;
    let margin = ((fine - coarse).abs() + limits.margin * mass).to_f64_lossy().max(1e-9);
    Ok(Estimate::exact(fine.to_f64_lossy(), margin))
}

/// One period of `φ_V` with `φ_V(0) = (0, y₀)` and `V(φ_V) ≡ 1/2`.
#[derive(Clone)]
pub struct EigenOrbit<T> {
    pub h: HomogeneousHamiltonian<T>,
    pub period: T,
    orbit: Trajectory<T>,
}

impl<T: Real> fmt::Debug for EigenOrbit<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EigenOrbit")
            .field("h", &self.h)
            .field("period", &self.period)
            .finish()
    }
}

impl<T: Real> EigenOrbit<T> {
    pub fn new(h: &HomogeneousHamiltonian<T>) -> Result<Self> {
        let y0 = T::one() / (T::lit(2.0) * h.v(T::FRAC_PI_2())).sqrt();
        let tau = period(h);
        let opts = FlowOptions {
            rtol: T::lit(1e-12).max(T::epsilon() * T::lit(100.0)),
            ..FlowOptions::with_tol(T::lit(1e-12))
        };
        let orbit = flow_with(&Field::hamiltonian(h.clone()), [T::zero(), y0], tau, &opts)?;
        Ok(EigenOrbit {
            h: h.clone(),
            period: tau,
            orbit,
        })
    }

    pub fn eval(&self, t: T) -> [T; 2] {
        let mut u = t % self.period;
        if u < T::zero() {
            u = u + self.period;
        }
        self.orbit.eval(u).0
    }
}

/// Estimate `𝓙⁻(θ₀)` (side `Minus`, with `V₁`) or `𝓙⁺(θ₀)` (side `Plus`,
/// with `V₂`).
pub fn ll_planar<T: Real>(
    f: &Field<T>,
    orbit: &EigenOrbit<T>,
    theta0: T,
    side: Side,
    horizon: T,
    params: &LLParams,
) -> Result<Estimate> {
    let n_omega = params.omega_points.max(1);
    let base = params.tiers.first().copied().unwrap_or(1.0);
    let clip = T::lit(CLIP);
    let mut clipped = false;
    let mut values = Vec::with_capacity(params.tiers.len());
    for &tier in &params.tiers {
        let lambda = T::lit(tier * params.scale);
        // the window shrinks with λ so that λ·δ² stays fixed
        let delta = params.delta * (base / tier).sqrt();
        let omegas: Vec<T> = (0..n_omega)
            .map(|i| {
                if n_omega == 1 {
                    theta0
                } else {
                    let s = T::lit(-1.0) + T::lit(2.0) * T::from_count(i) / T::from_count(n_omega - 1);
                    theta0 + T::lit(delta) * s
                }
            })
            .collect();
        let err = RefCell::new(None);
        let tier_clipped = Cell::new(false);
        let integrand = |t: T| -> T {
            let mut best: Option<T> = None;
            for &w in &omegas {
                let e = orbit.eval(t + w);
                let z = [lambda * e[0], lambda * e[1]];
                let g = match f.g(t, z) {
                    Ok(g) => g,
                    Err(x) => {
                        err.borrow_mut().get_or_insert(x);
                        return T::zero();
                    }
                };
                let v = g[0] * e[0] + g[1] * e[1] - T::lit(2.0) * lambda * orbit.h.value(e);
                best = Some(match (best, side) {
                    (None, _) => v,
                    (Some(b), Side::Minus) => b.min(v),
                    (Some(b), Side::Plus) => b.max(v),
                });
            }
            let v = best.unwrap_or(T::zero());
            if v.abs() > clip {
                tier_clipped.set(true);
                clip.copysign(v)
            } else {
                v
            }
        };
        let value = simpson(integrand, T::zero(), horizon, params.nodes);
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        clipped |= tier_clipped.get();
        values.push(value.to_f64_lossy());
    }
    let n = values.len();
    let estimate = values[n - 1];
    let drift = |k: usize| (values[k] - values[k - 1]).abs();
    let last = if n >= 2 { drift(n - 1) } else { 0.0 };
    let margin = last.max(MARGIN_FLOOR);
    let mut flags = Vec::new();
    // The drift should shrink from tier to tier. Growth is accepted only as a
    // one-signed divergence, whose sign is then the sign of the limit.
    let growing = n >= 3 && last > 10.0 * MARGIN_FLOOR && last > drift(n - 2);
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let diverging = growing
        && steps.iter().all(|d| d.signum() == steps[0].signum() && *d != 0.0)
        && estimate.signum() == steps[0].signum();
    let unstable = growing && !diverging;
    if diverging {
        let to = if estimate > 0.0 { "+inf" } else { "-inf" };
        flags.push(format!("diverges to {to}: tier values {values:?}"));
    } else if unstable {
        flags.push(format!("tier instability: tier values {values:?}"));
    }
    if clipped {
        flags.push(format!("integrand clipped at ±{CLIP:e}"));
    }
    Ok(Estimate {
        estimate,
        margin,
        flags,
        unstable,
    })
}

/// Evaluate every planar functional named in `reqs`: `𝓙⁻` along `V₁` and
/// `𝓙⁺` along `V₂`, each with its own lap times.
pub fn planar_values<T: Real>(
    f: &Field<T>,
    (h1, laps1): (&HomogeneousHamiltonian<T>, &TimeLaps<T>),
    (h2, laps2): (&HomogeneousHamiltonian<T>, &TimeLaps<T>),
    horizon: T,
    reqs: &[Requirement],
    params: &LLParams,
) -> Result<BTreeMap<Functional, Estimate>> {
    let mut out = BTreeMap::new();
    let mut orbits: [Option<EigenOrbit<T>>; 2] = [None, None];
    for r in reqs {
        let Functional::Planar { side, phase } = r.functional else {
            continue;
        };
        if out.contains_key(&r.functional) {
            continue;
        }
        let (slot, h, laps) = match side {
            Side::Minus => (0, h1, laps1),
            Side::Plus => (1, h2, laps2),
        };
        if orbits[slot].is_none() {
            orbits[slot] = Some(EigenOrbit::new(h)?);
        }
        let orbit = orbits[slot].as_ref().unwrap();
        out.insert(
            r.functional,
            ll_planar(f, orbit, phase.time(laps), side, horizon, params)?,
        );
    }
    Ok(out)
}

/// Evaluate every scalar functional named in `reqs`: `𝓐⁻` with the lower
/// corner and its limits, `𝓐⁺` with the upper corner.
pub fn scalar_values<T: Real>(
    lower: (&AsymmetricParams<T>, &ScalarLimits<T>),
    upper: (&AsymmetricParams<T>, &ScalarLimits<T>),
    horizon: T,
    reqs: &[Requirement],
) -> Result<BTreeMap<Functional, Estimate>> {
    let mut out = BTreeMap::new();
    for r in reqs {
        let Functional::Scalar { side, eigen } = r.functional else {
            continue;
        };
        let (p, lim) = match side {
            Side::Minus => lower,
            Side::Plus => upper,
        };
        out.insert(r.functional, ll_scalar_estimate(lim, eigen, p, side, horizon)?);
    }
    Ok(out)
}
