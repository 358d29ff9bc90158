//! Right-hand sides `G(t, z)` of `Jz' = G(t, z)` and their flow with a
//! continuously lifted polar angle.
//!
//! With `J = [[0, −1], [1, 0]]` the velocity is `z' = (G₂, −G₁)`. The angle
//! obeys `θ' = −⟨G(t, z), z⟩ / |z|²` and is integrated as a third state
//! component.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expression, Vars};
use crate::hamiltonian::HomogeneousHamiltonian;
use crate::ode::{integrate, OdeSolution, StepControl};
use crate::scalar::{norm, Real};

pub const DEFAULT_FLOW_TOL: f64 = 1e-9;
pub const FLOW_ATOL: f64 = 1e-12;
pub const FLOW_SAMPLES: usize = 513;
/// Trajectories closer than this fraction of `max(1, |z₀|)` to the origin are rejected.
pub const RHO_MIN_FACTOR: f64 = 1e-8;

type NativeMap<T> = Arc<dyn Fn(T, [T; 2]) -> T + Send + Sync>;

/// A scalar function of `(t, x, y)`: either a parsed expression or a closure.
#[derive(Clone)]
pub enum Source<T> {
    Expr(Expression),
    Native(NativeMap<T>),
}

impl<T: Real> Source<T> {
    pub fn native(f: impl Fn(T, [T; 2]) -> T + Send + Sync + 'static) -> Self {
        Source::Native(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Source::Expr(Expression::constant(c))
    }

    pub fn eval(&self, t: T, z: [T; 2]) -> Result<T> {
        match self {
            Source::Expr(e) => Ok(e.eval_finite(&Vars::at(t, z))?),
            Source::Native(f) => {
                let v = f(t, z);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::InvalidParams(format!("native map returned {v} at t = {t}")))
                }
            }
        }
    }
}

impl<T> fmt::Debug for Source<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Expr(e) => write!(f, "Expr({:?})", e.source()),
            Source::Native(_) => f.write_str("Native"),
        }
    }
}

impl<T> From<Expression> for Source<T> {
    fn from(e: Expression) -> Self {
        Source::Expr(e)
    }
}

/// Asymptotic constants the user asserts for the field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeclaredBounds<T> {
    pub mu1: T,
    pub mu2: T,
    pub nu1: T,
    pub nu2: T,
}

#[derive(Clone)]
pub enum FieldKind<T> {
    /// `G = (1 − γ)∇V₁ + γ∇V₂ + p`, with `γ` clamped to `[0, 1]`.
    Interpolated {
        h1: HomogeneousHamiltonian<T>,
        h2: HomogeneousHamiltonian<T>,
        gamma: Source<T>,
        p: Option<[Source<T>; 2]>,
    },
    /// `x'' + f(t, x) = 0`, i.e. `G(t, (x, y)) = (f(t, x), y)`.
    Scalar { f: Source<T> },
    /// `G` given component-wise.
    Raw { g: [Source<T>; 2] },
}

#[derive(Clone)]
pub struct Field<T> {
    pub kind: FieldKind<T>,
    pub declared_bounds: Option<DeclaredBounds<T>>,
}

impl<T: Real> fmt::Debug for FieldKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldKind::Interpolated { h1, h2, gamma, p } => f
                .debug_struct("Interpolated")
                .field("h1", &h1.label)
                .field("h2", &h2.label)
                .field("gamma", gamma)
                .field("p", p)
                .finish(),
            FieldKind::Scalar { f: src } => f.debug_struct("Scalar").field("f", src).finish(),
            FieldKind::Raw { g } => f.debug_struct("Raw").field("g", g).finish(),
        }
    }
}

impl<T: Real> fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("kind", &self.kind)
            .field("declared_bounds", &self.declared_bounds)
            .finish()
    }
}

impl<T: Real> Field<T> {
    pub fn scalar(f: impl Into<Source<T>>) -> Self {
        Field {
            kind: FieldKind::Scalar { f: f.into() },
            declared_bounds: None,
        }
    }

    pub fn interpolated(
        h1: HomogeneousHamiltonian<T>,
        h2: HomogeneousHamiltonian<T>,
        gamma: impl Into<Source<T>>,
        p: Option<[Source<T>; 2]>,
    ) -> Self {
        Field {
            kind: FieldKind::Interpolated {
                h1,
                h2,
                gamma: gamma.into(),
                p,
            },
            declared_bounds: None,
        }
    }

    pub fn raw(g: [Source<T>; 2]) -> Self {
        Field {
            kind: FieldKind::Raw { g },
            declared_bounds: None,
        }
    }

    /// The autonomous field `∇V`.
    pub fn hamiltonian(h: HomogeneousHamiltonian<T>) -> Self {
        Self::interpolated(h.clone(), h, Source::constant(0.0), None)
    }

    pub fn with_bounds(mut self, b: DeclaredBounds<T>) -> Self {
        self.declared_bounds = Some(b);
        self
    }

    /// `G(t, z)`.
    pub fn g(&self, t: T, z: [T; 2]) -> Result<[T; 2]> {
        match &self.kind {
            FieldKind::Interpolated { h1, h2, gamma, p } => {
                let g1 = h1.gradient(z)?;
                let g2 = h2.gradient(z)?;
                let c = gamma.eval(t, z)?.max(T::zero()).min(T::one());
                let one_c = T::one() - c;
                let mut out = [one_c * g1[0] + c * g2[0], one_c * g1[1] + c * g2[1]];
                if let Some([p1, p2]) = p {
                    out[0] = out[0] + p1.eval(t, z)?;
                    out[1] = out[1] + p2.eval(t, z)?;
                }
                Ok(out)
            }
            FieldKind::Scalar { f } => Ok([f.eval(t, z)?, z[1]]),
            FieldKind::Raw { g } => Ok([g[0].eval(t, z)?, g[1].eval(t, z)?]),
        }
    }

    /// `z' = −J G = (G₂, −G₁)`.
    pub fn velocity(&self, t: T, z: [T; 2]) -> Result<[T; 2]> {
        let g = self.g(t, z)?;
        Ok([g[1], -g[0]])
    }

    /// `θ'(t) = −⟨G, z⟩ / |z|²`.
    pub fn angular_velocity(&self, t: T, z: [T; 2]) -> Result<T> {
        let g = self.g(t, z)?;
        let r2 = z[0] * z[0] + z[1] * z[1];
        Ok(-(g[0] * z[0] + g[1] * z[1]) / r2)
    }

    /// `G(t, 0) = 0`, so the zero function solves every homogeneous BVP.
    pub fn vanishes_at_origin(&self, horizon: T) -> bool {
        let zero = [T::zero(), T::zero()];
        let ts = (0..=16).map(|i| horizon * T::from_count(i) / T::lit(16.0));
        match &self.kind {
            FieldKind::Interpolated { p, .. } => match p {
                None => true,
                Some([p1, p2]) => {
                    // p may not be defined at 0 itself; probe a tiny circle instead
                    let eps = T::lit(1e-12);
                    ts.into_iter().all(|t| {
                        (0..8).all(|k| {
                            let a = T::TAU() * T::from_count(k) / T::lit(8.0);
                            let z = [eps * a.cos(), eps * a.sin()];
                            let bound = T::lit(1e-9);
                            p1.eval(t, z).is_ok_and(|v| v.abs() < bound) && p2.eval(t, z).is_ok_and(|v| v.abs() < bound)
                        })
                    })
                }
            },
            _ => ts
                .into_iter()
                .all(|t| self.g(t, zero).is_ok_and(|g| g[0] == T::zero() && g[1] == T::zero())),
        }
    }

    /// Sample `|p(t, z)| / |z|` along rays out to `|z| = 10⁶` and describe the
    /// first ray on which it does not decay. Only interpolated fields carry
    /// a separate `p`.
    pub fn sublinearity_warning(&self, horizon: T) -> Option<String> {
        let FieldKind::Interpolated { p: Some([p1, p2]), .. } = &self.kind else {
            return None;
        };
        let radii = [T::lit(1e2), T::lit(1e4), T::lit(1e6)];
        for k in 0..8 {
            let a = T::TAU() * T::from_count(k) / T::lit(8.0);
            for i in 0..4 {
                let t = horizon * T::from_count(i) / T::lit(3.0);
                let ratio = |r: T| -> Option<T> {
                    let z = [r * a.cos(), r * a.sin()];
                    let v = [p1.eval(t, z).ok()?, p2.eval(t, z).ok()?];
                    Some(norm(v) / r)
                };
                let (Some(first), Some(last)) = (ratio(radii[0]), ratio(radii[2])) else {
                    return Some(format!("p could not be evaluated on the ray at angle {a}"));
                };
                if last > T::lit(1e-6) && last > first * T::lit(0.1) {
                    return Some(format!(
                        "|p|/|z| does not decay along the ray at angle {a} (t = {t}): {first} -> {last}"
                    ));
                }
            }
        }
        None
    }
}

/// Free-function form of [`Field::velocity`].
pub fn field_eval<T: Real>(f: &Field<T>, t: T, z: [T; 2]) -> Result<[T; 2]> {
    f.velocity(t, z)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_radius: f64,
    pub max_error: f64,
}

/// Samples of a flow on `[0, T]` with the lifted angle and radius.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub ts: Vec<T>,
    pub zs: Vec<[T; 2]>,
    pub thetas: Vec<T>,
    pub rhos: Vec<T>,
    pub stats: FlowStats,
    dense: Option<Arc<OdeSolution<T, 3>>>,
}

/// Put `atan2(z)` on the branch nearest to `lifted`.
fn snap_angle<T: Real>(z: [T; 2], lifted: T) -> T {
    let raw = z[1].atan2(z[0]);
    raw + T::TAU() * ((lifted - raw) / T::TAU()).round()
}

impl<T: Real> Trajectory<T> {
    /// `ΔΘ = Θ(0) − Θ(T)`, positive for clockwise motion.
    pub fn covered_angle(&self) -> T {
        self.thetas[0] - self.thetas[self.thetas.len() - 1]
    }

    pub fn start(&self) -> [T; 2] {
        self.zs[0]
    }

    pub fn end(&self) -> [T; 2] {
        self.zs[self.zs.len() - 1]
    }

    pub fn horizon(&self) -> T {
        self.ts[self.ts.len() - 1]
    }

    /// Point and lifted angle at any `t` in `[0, T]` (dense output; falls
    /// back to linear interpolation for trajectories read from CSV).
    pub fn eval(&self, t: T) -> ([T; 2], T) {
        if let Some(d) = &self.dense {
            let s = d.eval(t);
            let z = [s[0], s[1]];
            return (z, snap_angle(z, s[2]));
        }
        let i = self.ts.partition_point(|&x| x < t).clamp(1, self.ts.len() - 1);
        let (t0, t1) = (self.ts[i - 1], self.ts[i]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { T::zero() };
        let lerp = |a: T, b: T| a + w * (b - a);
        let z = [
            lerp(self.zs[i - 1][0], self.zs[i][0]),
            lerp(self.zs[i - 1][1], self.zs[i][1]),
        ];
        (z, lerp(self.thetas[i - 1], self.thetas[i]))
    }

    pub fn has_dense_output(&self) -> bool {
        self.dense.is_some()
    }

    /// CSV with header `t,x,y,theta,rho` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,theta,rho\n");
        for i in 0..self.ts.len() {
            let row = [self.ts[i], self.zs[i][0], self.zs[i][1], self.thetas[i], self.rhos[i]];
            let cells: Vec<String> = row.iter().map(|v| format!("{:.16e}", v.to_f64_lossy())).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "t,x,y,theta,rho" => {}
            _ => {
                return Err(Error::Csv {
                    line: 1,
                    msg: "expected header `t,x,y,theta,rho`".into(),
                })
            }
        }
        let mut tr = Trajectory {
            ts: vec![],
            zs: vec![],
            thetas: vec![],
            rhos: vec![],
            stats: FlowStats::default(),
            dense: None,
        };
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 5 {
                return Err(Error::Csv {
                    line: i + 1,
                    msg: format!("expected 5 columns, found {}", cells.len()),
                });
            }
            let mut v = [T::zero(); 5];
            for (slot, c) in v.iter_mut().zip(&cells) {
                let x: f64 = c.trim().parse().map_err(|e| Error::Csv {
                    line: i + 1,
                    msg: format!("{e}"),
                })?;
                *slot = T::lit(x);
            }
            tr.ts.push(v[0]);
            tr.zs.push([v[1], v[2]]);
            tr.thetas.push(v[3]);
            tr.rhos.push(v[4]);
        }
        if tr.ts.is_empty() {
            return Err(Error::Csv {
                line: 2,
                msg: "no samples".into(),
            });
        }
        tr.stats.min_radius = tr.rhos.iter().fold(f64::INFINITY, |m, r| m.min(r.to_f64_lossy()));
        Ok(tr)
    }
}

/// Flow options beyond the defaults of [`flow`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub samples: usize,
}

impl<T: Real> FlowOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        // the absolute floor must stay above roundoff in single precision
        let atol = T::lit(FLOW_ATOL).max(T::epsilon() * T::lit(100.0));
        FlowOptions {
            rtol: tol,
            atol,
            samples: FLOW_SAMPLES,
        }
    }
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        Self::with_tol(T::lit(DEFAULT_FLOW_TOL))
    }
}

/// Integrate from `z0` at `t = 0` to `t = horizon`.
pub fn flow<T: Real>(f: &Field<T>, z0: [T; 2], horizon: T, tol: T) -> Result<Trajectory<T>> {
    flow_with(f, z0, horizon, &FlowOptions::with_tol(tol))
}

pub fn flow_with<T: Real>(f: &Field<T>, z0: [T; 2], horizon: T, opts: &FlowOptions<T>) -> Result<Trajectory<T>> {
    let rho0 = norm(z0);
    let rho_min = T::lit(RHO_MIN_FACTOR) * rho0.max(T::one());
    if rho0 < rho_min {
        return Err(Error::NearOrigin {
            t: 0.0,
            rho: rho0.to_f64_lossy(),
        });
    }
    if !(horizon > T::zero()) {
        return Err(Error::InvalidParams(format!(
            "horizon must be positive (got {horizon})"
        )));
    }
    let rhs = |t: T, s: &[T; 3]| -> Result<[T; 3]> {
        let z = [s[0], s[1]];
        let r2 = z[0] * z[0] + z[1] * z[1];
        if r2 < rho_min * rho_min {
            return Err(Error::NearOrigin {
                t: t.to_f64_lossy(),
                rho: r2.sqrt().to_f64_lossy(),
            });
        }
        let v = f.velocity(t, z)?;
        Ok([v[0], v[1], (z[0] * v[1] - z[1] * v[0]) / r2])
    };
    let mut min_radius = rho0;
    let monitor = |t: T, s: &[T; 3]| -> Result<()> {
        let r = s[0].hypot(s[1]);
        min_radius = min_radius.min(r);
        if r < rho_min {
            return Err(Error::NearOrigin {
                t: t.to_f64_lossy(),
                rho: r.to_f64_lossy(),
            });
        }
        Ok(())
    };
    let ctl = StepControl::new(opts.rtol, opts.atol);
    let theta0 = z0[1].atan2(z0[0]);
    let sol = integrate(rhs, T::zero(), [z0[0], z0[1], theta0], horizon, &ctl, monitor)?;
    let n = opts.samples.max(2);
    let mut tr = Trajectory {
        ts: Vec::with_capacity(n),
        zs: Vec::with_capacity(n),
        thetas: Vec::with_capacity(n),
        rhos: Vec::with_capacity(n),
        stats: FlowStats {
            accepted: sol.accepted,
            rejected: sol.rejected,
            min_radius: min_radius.to_f64_lossy(),
            max_error: sol.max_error.to_f64_lossy(),
        },
        dense: None,
    };
    for i in 0..n {
        let t = if i == n - 1 {
            horizon
        } else {
            horizon * T::from_count(i) / T::from_count(n - 1)
        };
        let s = if i == 0 { [z0[0], z0[1], theta0] } else { sol.eval(t) };
        let z = [s[0], s[1]];
        tr.ts.push(t);
        tr.zs.push(z);
        tr.thetas.push(if i == 0 { theta0 } else { snap_angle(z, s[2]) });
        tr.rhos.push(norm(z));
    }
    tr.dense = Some(Arc::new(sol));
    Ok(tr)
}
