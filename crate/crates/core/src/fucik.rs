//! The asymmetric oscillator `x'' + μx⁺ − νx⁻ = 0` under Dirichlet conditions:
//! closed-form solutions, the spectrum curves `a/√μ + b/√ν = T/π`, the regions
//! between them and the position of a rectangle `(μ₁,μ₂)×(ν₁,ν₂)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::AsymmetricParams;
use crate::scalar::Real;

fn half_periods<T: Real>(p: &AsymmetricParams<T>) -> (T, T) {
    (T::PI() / p.mu.sqrt(), T::PI() / p.nu.sqrt())
}

fn reduce<T: Real>(p: &AsymmetricParams<T>, t: T) -> (T, T) {
    let (s, r) = half_periods(p);
    let tau = s + r;
    let mut u = t % tau;
    if u < T::zero() {
        u = u + tau;
    }
    (u, s)
}

/// The solution with `φ(0) = 0`, `φ'(0) = 1`: a positive arc of length
/// `π/√μ` followed by a negative arc of length `π/√ν`, repeated.
pub fn phi<T: Real>(p: &AsymmetricParams<T>, t: T) -> T {
    let (u, s) = reduce(p, t);
    if u <= s {
        (p.mu.sqrt() * u).sin() / p.mu.sqrt()
    } else {
        (p.nu.sqrt() * (s - u)).sin() / p.nu.sqrt()
    }
}

pub fn dphi<T: Real>(p: &AsymmetricParams<T>, t: T) -> T {
    let (u, s) = reduce(p, t);
    if u <= s {
        (p.mu.sqrt() * u).cos()
    } else {
        -(p.nu.sqrt() * (s - u)).cos()
    }
}

/// `ψ(t) = φ(t + π/√μ)`: starts with the negative arc.
pub fn psi<T: Real>(p: &AsymmetricParams<T>, t: T) -> T {
    phi(p, t + half_periods(p).0)
}

pub fn dpsi<T: Real>(p: &AsymmetricParams<T>, t: T) -> T {
    dphi(p, t + half_periods(p).0)
}

/// Which of the two Dirichlet eigen-solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eigen {
    Phi,
    Psi,
}

impl Eigen {
    pub fn eval<T: Real>(self, p: &AsymmetricParams<T>, t: T) -> T {
        match self {
            Eigen::Phi => phi(p, t),
            Eigen::Psi => psi(p, t),
        }
    }

    /// Zeros in `[0, horizon]`, sorted, including both ends.
    pub fn arc_breaks<T: Real>(self, p: &AsymmetricParams<T>, horizon: T) -> Vec<T> {
        let (s, r) = half_periods(p);
        let tau = s + r;
        let offset = match self {
            Eigen::Phi => T::zero(),
            Eigen::Psi => -s,
        };
        let mut out = vec![T::zero()];
        let mut k = 0usize;
        loop {
            let base = T::from_count(k) * tau + offset;
            let mut added = false;
            for z in [base, base + s] {
                if z > T::zero() && z < horizon {
                    out.push(z);
                }
                if z < horizon {
                    added = true;
                }
            }
            if !added {
                break;
            }
            k += 1;
        }
        out.push(horizon);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * horizon);
        out
    }
}

/// `λ_k = (π(2k+1)/T)²`, where `C_{k,k+1}` and `C_{k+1,k}` cross the diagonal.
pub fn lambda_k<T: Real>(horizon: T, k: usize) -> T {
    let x = T::PI() * T::from_count(2 * k + 1) / horizon;
    x * x
}

/// `C_{a,b}` with `(a, b) ∈ Γ`: `a + b > 0`, `|a − b| ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpectrumCurve {
    pub a: u32,
    pub b: u32,
}

impl SpectrumCurve {
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a + b == 0 || a.abs_diff(b) > 1 {
            return Err(Error::InvalidParams(format!(
                "({a},{b}) is not an admissible curve index"
            )));
        }
        Ok(SpectrumCurve { a, b })
    }

    /// `a/√μ + b/√ν`.
    pub fn level<T: Real>(&self, mu: T, nu: T) -> T {
        T::from_count(self.a as usize) / mu.sqrt() + T::from_count(self.b as usize) / nu.sqrt()
    }

    /// All admissible curves with `a + b ≤ max_sum`, ordered by `(a+b, a)`.
    pub fn enumerate(max_sum: u32) -> Vec<SpectrumCurve> {
        let mut out = Vec::new();
        for n in 1..=max_sum {
            for a in 0..=n {
                if let Ok(c) = SpectrumCurve::new(a, n - a) {
                    out.push(c);
                }
            }
        }
        out
    }
}

/// `a+b ≤ ⌈2T√μ_max/π⌉ + 2` covers every curve visible in `[0, μ_max]²`.
pub fn curve_bound<T: Real>(horizon: T, mu_max: T) -> u32 {
    let x = (T::lit(2.0) * horizon * mu_max.sqrt() / T::PI()).ceil();
    x.to_u32().unwrap_or(u32::MAX - 2) + 2
}

/// Points `(μ, ν)` of `C_{a,b}` for `n` values of `μ` spread uniformly over
/// `range`. For `b = 0` the curve is the vertical line `μ = (aπ/T)²` and
/// the same range is used for `ν`.
pub fn curve_points<T: Real>(c: SpectrumCurve, horizon: T, range: (T, T), n: usize) -> Result<Vec<(T, T)>> {
    let n = n.max(2);
    let (lo, hi) = range;
    let grid = |i: usize| lo + (hi - lo) * T::from_count(i) / T::from_count(n - 1);
    let level = horizon / T::PI();
    let a = T::from_count(c.a as usize);
    let b = T::from_count(c.b as usize);
    let mut out = Vec::with_capacity(n);
    if c.b == 0 {
        let x = a / level;
        let mu = x * x;
        if mu >= lo && mu <= hi {
            out.extend((0..n).map(|i| (mu, grid(i))));
        }
    } else {
        for i in 0..n {
            let mu = grid(i);
            if !(mu > T::zero()) {
                continue;
            }
            let rest = level - a / mu.sqrt();
            if rest > T::zero() {
                let x = b / rest;
                out.push((mu, x * x));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyCurve { a: c.a, b: c.b });
    }
    Ok(out)
}

/// Curves with at least one point in `(0, max]²`, up to the band of
/// [`spectrum_tol`].
pub fn curves_in_window<T: Real>(horizon: T, max: T) -> Vec<SpectrumCurve> {
    let level = horizon / T::PI();
    let tol = spectrum_tol(horizon);
    SpectrumCurve::enumerate(curve_bound(horizon, max))
        .into_iter()
        .filter(|c| c.level(max, max) <= level + tol)
        .collect()
}

/// Band for "on a curve" decisions: `1e-9·max(1, T/π)` on the level.
pub fn spectrum_tol<T: Real>(horizon: T) -> T {
    T::lit(1e-9) * (horizon / T::PI()).max(T::one())
}

/// Curves through `(μ, ν)` within `tol`.
pub fn curves_through<T: Real>(mu: T, nu: T, horizon: T, tol: T) -> Vec<SpectrumCurve> {
    let level = horizon / T::PI();
    let amax = (level * mu.sqrt()).to_u32().unwrap_or(0) + 2;
    let mut out = Vec::new();
    for a in 0..=amax {
        for b in a.saturating_sub(1)..=a + 1 {
            if let Ok(c) = SpectrumCurve::new(a, b) {
                if (c.level(mu, nu) - level).abs() <= tol {
                    out.push(c);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "snake_case")]
pub enum Region {
    /// Inside `B_k` (in `A_k` or its mirror image).
    B {
        k: usize,
    },
    OnSpectrum {
        curves: Vec<SpectrumCurve>,
    },
    Forbidden,
}

/// Locate `(μ, ν)` relative to the spectrum for horizon `T`.
pub fn region_check<T: Real>(mu: T, nu: T, horizon: T) -> Region {
    let curves = curves_through(mu, nu, horizon, spectrum_tol(horizon));
    if !curves.is_empty() {
        return Region::OnSpectrum { curves };
    }
    let (big, small) = if mu >= nu { (mu, nu) } else { (nu, mu) };
    let s = T::PI() / big.sqrt();
    let r = T::PI() / small.sqrt();
    let p = s + r;
    if horizon < s {
        return Region::B { k: 0 };
    }
    let j_up = (horizon / p).ceil();
    if j_up >= T::one() && j_up * p - s < horizon && horizon < j_up * p {
        return Region::B {
            k: 2 * j_up.to_usize().unwrap() - 1,
        };
    }
    let j_dn = (horizon / p).floor();
    if j_dn >= T::one() && j_dn * p < horizon && horizon < j_dn * p + s {
        return Region::B {
            k: 2 * j_dn.to_usize().unwrap(),
        };
    }
    Region::Forbidden
}

/// Closed corners `(μ₁, ν₁)`, `(μ₂, ν₂)` of the open rectangle `(μ₁,μ₂)×(ν₁,ν₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub mu1: T,
    pub mu2: T,
    pub nu1: T,
    pub nu2: T,
}

impl<T: Real> Rect<T> {
    pub fn new(mu1: T, nu1: T, mu2: T, nu2: T) -> Result<Self> {
        let ok = mu1 > T::zero() && nu1 > T::zero() && mu1 <= mu2 && nu1 <= nu2 && mu2.is_finite() && nu2.is_finite();
        if !ok {
            return Err(Error::InvalidParams(format!(
                "rectangle needs 0 < mu1 <= mu2 and 0 < nu1 <= nu2 (got {mu1}, {nu1}, {mu2}, {nu2})"
            )));
        }
        Ok(Rect { mu1, mu2, nu1, nu2 })
    }

    pub fn lower(&self) -> (T, T) {
        (self.mu1, self.nu1)
    }

    pub fn upper(&self) -> (T, T) {
        (self.mu2, self.nu2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corner {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum RectVerdict {
    Nonresonant {
        k: usize,
    },
    Simple {
        corner: Corner,
        curves: Vec<SpectrumCurve>,
        k: usize,
    },
    Double {
        lower: Vec<SpectrumCurve>,
        upper: Vec<SpectrumCurve>,
        k: usize,
    },
    Invalid {
        reason: String,
    },
}

/// Position of a rectangle relative to the spectrum.
///
/// Every level function `a/√μ + b/√ν` is decreasing in both arguments, so
/// the open rectangle meets `C_{a,b}` exactly when `T/π` lies strictly
/// between its values at the upper and lower corners. If no curve meets the
/// open rectangle it lies in one component of the complement, whose region
/// is read off at the centre.
pub fn rectangle_check<T: Real>(r: &Rect<T>, horizon: T) -> RectVerdict {
    let level = horizon / T::PI();
    let tol = spectrum_tol(horizon);
    let max_sum = curve_bound(horizon, r.mu2.max(r.nu2));
    for c in SpectrumCurve::enumerate(max_sum) {
        let hi = c.level(r.mu1, r.nu1);
        let lo = c.level(r.mu2, r.nu2);
        if lo < level - tol && level + tol < hi {
            return RectVerdict::Invalid {
                reason: format!("open rectangle meets C({},{})", c.a, c.b),
            };
        }
    }
    let half = T::lit(0.5);
    let k = match region_check(half * (r.mu1 + r.mu2), half * (r.nu1 + r.nu2), horizon) {
        Region::B { k } => k,
        Region::Forbidden => {
            return RectVerdict::Invalid {
                reason: "open rectangle lies in the forbidden region".into(),
            }
        }
        Region::OnSpectrum { curves } => {
            // only possible for a degenerate (zero-width) rectangle
            return RectVerdict::Invalid {
                reason: format!("rectangle centre lies on {} spectrum curve(s)", curves.len()),
            };
        }
    };
    let lower = curves_through(r.mu1, r.nu1, horizon, tol);
    let upper = curves_through(r.mu2, r.nu2, horizon, tol);
    match (lower.is_empty(), upper.is_empty()) {
        (true, true) => RectVerdict::Nonresonant { k },
        (false, true) => RectVerdict::Simple {
            corner: Corner::Lower,
            curves: lower,
            k,
        },
        (true, false) => RectVerdict::Simple {
            corner: Corner::Upper,
            curves: upper,
            k,
        },
        (false, false) => RectVerdict::Double { lower, upper, k },
    }
}
