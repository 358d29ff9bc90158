//! Shooting along the starting line: sweep `z₀ = σ·u_S`, find sign changes of
//! the signed distance of `Φ(T, z₀)` to the arrival line, bisect, verify.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::LinePair;
use crate::error::{Error, Result};
use crate::field::{flow, Field, FieldKind, Trajectory, DEFAULT_FLOW_TOL};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum SweepStatus {
    Ok,
    NearOrigin,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord<T> {
    pub sigma: T,
    pub arrival: [T; 2],
    pub distance: T,
    pub covered: T,
    pub status: SweepStatus,
}

impl<T: Real> SweepRecord<T> {
    pub fn ok(&self) -> bool {
        self.status == SweepStatus::Ok
    }
}

/// Flow from `σ·u_S` over `[0, T]`.
pub fn shoot<T: Real>(f: &Field<T>, lp: &LinePair<T>, horizon: T, sigma: T, tol: T) -> Result<Trajectory<T>> {
    flow(f, lp.start.point(sigma), horizon, tol)
}

fn record<T: Real>(f: &Field<T>, lp: &LinePair<T>, horizon: T, sigma: T, tol: T) -> SweepRecord<T> {
    match shoot(f, lp, horizon, sigma, tol) {
        Ok(tr) => {
            let end = tr.end();
            SweepRecord {
                sigma,
                arrival: end,
                distance: lp.arrive.signed_distance(end),
                covered: tr.covered_angle(),
                status: SweepStatus::Ok,
            }
        }
        Err(e) => SweepRecord {
            sigma,
            arrival: [T::nan(); 2],
            distance: T::nan(),
            covered: T::nan(),
            status: match e {
                Error::NearOrigin { .. } => SweepStatus::NearOrigin,
                other => SweepStatus::Failed(other.to_string()),
            },
        },
    }
}

/// One record per `σ`, computed in parallel, in input order.
pub fn sweep<T: Real>(f: &Field<T>, lp: &LinePair<T>, horizon: T, sigmas: &[T], tol: T) -> Vec<SweepRecord<T>> {
    sigmas.par_iter().map(|&s| record(f, lp, horizon, s, tol)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    /// Relative tolerance of the sweep integrations.
    pub tol: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub per_decade: usize,
    /// Largest accepted `|signed distance|` at `T`.
    pub residual_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_FLOW_TOL,
            sigma_lo: 1e-3,
            sigma_hi: 1e3,
            per_decade: 25,
            residual_tol: 1e-7,
        }
    }
}

impl SolveOptions {
    /// Symmetric logarithmic grid `±[σ_lo, σ_hi]`, sorted increasingly.
    pub fn grid<T: Real>(&self) -> Vec<T> {
        let decades = (self.sigma_hi / self.sigma_lo).log10().max(0.0);
        let n = ((decades * self.per_decade as f64).round() as usize).max(1);
        let pos: Vec<f64> = (0..=n)
            .map(|i| self.sigma_lo * 10f64.powf(decades * i as f64 / n as f64))
            .collect();
        pos.iter()
            .rev()
            .map(|&s| T::lit(-s))
            .chain(pos.iter().map(|&s| T::lit(s)))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub sigma: T,
    pub trajectory: Trajectory<T>,
    pub residual: T,
    pub window_index: i64,
    /// The root lies inside a run of grid points that all hit the arrival line.
    pub on_continuum: bool,
}

/// JSON summary of a solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSummary {
    pub sigma: f64,
    pub residual: f64,
    pub window_index: i64,
    pub min_radius: f64,
    pub covered_angle: f64,
    pub on_continuum: bool,
}

impl<T: Real> Solution<T> {
    pub fn summary(&self) -> SolutionSummary {
        SolutionSummary {
            sigma: self.sigma.to_f64_lossy(),
            residual: self.residual.to_f64_lossy(),
            window_index: self.window_index,
            min_radius: self.trajectory.stats.min_radius,
            covered_angle: self.trajectory.covered_angle().to_f64_lossy(),
            on_continuum: self.on_continuum,
        }
    }
}

/// Index `j` of the open window `((j−1)π + Δζ, jπ + Δζ)` containing `ΔΘ`.
pub fn window_of<T: Real>(covered: T, delta_zeta: T) -> i64 {
    ((covered - delta_zeta) / T::PI()).floor().to_i64().unwrap_or(i64::MIN) + 1
}

/// A solution lands on `l_A`, so `ΔΘ = (j−1)π + Δζ` for an integer `j`.
pub fn solution_window<T: Real>(covered: T, delta_zeta: T) -> i64 {
    ((covered - delta_zeta) / T::PI()).round().to_i64().unwrap_or(i64::MIN) + 1
}

#[derive(Clone, Debug)]
pub struct SolveReport<T> {
    pub solutions: Vec<Solution<T>>,
    pub records: Vec<SweepRecord<T>>,
    /// `G(t, 0) = 0`: the zero function is a (trivial) solution.
    pub trivial_solution: bool,
    /// A sign change across `σ = 0` was skipped as the trivial root.
    pub trivial_bracket_skipped: bool,
    /// `σ` ranges of grid points that all land on `l_A`.
    pub continua: Vec<(T, T)>,
    /// Sign changes across failed records, left unbracketed.
    pub failure_gaps: Vec<(T, T)>,
    /// Roots found but rejected by the residual check, with their residuals.
    pub rejected: Vec<(T, T)>,
    pub diagnostics: Vec<String>,
}

fn is_zero_record<T: Real>(r: &SweepRecord<T>) -> bool {
    r.ok() && r.distance.abs() <= T::lit(1e-7) * r.sigma.abs().max(T::one())
}

enum Bisection<T> {
    Root(T),
    Failed(String),
}

fn bisect<T: Real>(f: &Field<T>, lp: &LinePair<T>, horizon: T, tol: T, mut a: T, mut da: T, mut b: T) -> Bisection<T> {
    for _ in 0..200 {
        let m = a + (b - a) * T::lit(0.5);
        if (b - a).abs() <= T::lit(1e-12) * m.abs().max(T::one()) || m == a || m == b {
            return Bisection::Root(m);
        }
        let r = record(f, lp, horizon, m, tol);
        if !r.ok() {
            return Bisection::Failed(format!("bisection at sigma = {m} failed: {:?}", r.status));
        }
        if r.distance == T::zero() {
            return Bisection::Root(m);
        }
        if (r.distance > T::zero()) == (da > T::zero()) {
            a = m;
            da = r.distance;
        } else {
            b = m;
        }
    }
    Bisection::Root(a + (b - a) * T::lit(0.5))
}

enum Candidate<T> {
    Bracket(T, T, T),
    Point(T, bool),
}

/// Sweep, bracket, bisect and re-check. See [`SolveOptions`] for the grid.
pub fn solve<T: Real>(f: &Field<T>, lp: &LinePair<T>, horizon: T, opts: &SolveOptions) -> Result<SolveReport<T>> {
    let tol = T::lit(opts.tol);
    let fine = tol / T::lit(10.0);
    let grid: Vec<T> = opts.grid();
    let records = sweep(f, lp, horizon, &grid, tol);
    if records.iter().all(|r| !r.ok()) {
        return Err(Error::AllTrajectoriesFailed);
    }
    let trivial = f.vanishes_at_origin(horizon);
    let mut report = SolveReport {
        solutions: vec![],
        records: vec![],
        trivial_solution: trivial,
        trivial_bracket_skipped: false,
        continua: vec![],
        failure_gaps: vec![],
        rejected: vec![],
        diagnostics: vec![],
    };
    let failed = records.iter().filter(|r| !r.ok()).count();
    if failed > 0 {
        report
            .diagnostics
            .push(format!("{failed} of {} sweep integrations failed", records.len()));
    }

    let zero: Vec<bool> = records.iter().map(is_zero_record).collect();
    let mut candidates = Vec::new();
    // runs of zero records
    let mut i = 0;
    while i < records.len() {
        if !zero[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < records.len()
            && zero[i + 1]
            && (records[i].sigma > T::zero()) == (records[i + 1].sigma > T::zero())
        {
            i += 1;
        }
        let end = i;
        if end - start + 1 >= 3 {
            report.continua.push((records[start].sigma, records[end].sigma));
            // representative: the member closest to |σ| = 1
            let rep = (start..=end)
                .min_by(|&x, &y| {
                    let kx = records[x].sigma.abs().ln().abs();
                    let ky = records[y].sigma.abs().ln().abs();
                    kx.partial_cmp(&ky).unwrap()
                })
                .unwrap();
            candidates.push(Candidate::Point(records[rep].sigma, true));
        } else {
            for k in start..=end {
                let (l, r) = (k.checked_sub(1), k + 1);
                let bracket = match (l, (r < records.len()).then_some(r)) {
                    (Some(l), Some(r))
                        if records[l].ok()
                            && records[r].ok()
                            && !zero[l]
                            && !zero[r]
                            && (records[l].sigma > T::zero()) == (records[r].sigma > T::zero())
                            && (records[l].distance > T::zero()) != (records[r].distance > T::zero()) =>
                    {
                        Some((records[l].sigma, records[l].distance, records[r].sigma))
                    }
                    _ => None,
                };
                candidates.push(match bracket {
                    Some((a, da, b)) => Candidate::Bracket(a, da, b),
                    None => Candidate::Point(records[k].sigma, false),
                });
            }
        }
        i += 1;
    }
    // sign changes between consecutive usable records
    let usable: Vec<usize> = (0..records.len()).filter(|&k| records[k].ok() && !zero[k]).collect();
    for w in usable.windows(2) {
        let (l, r) = (w[0], w[1]);
        let (rl, rr) = (&records[l], &records[r]);
        if (rl.distance > T::zero()) == (rr.distance > T::zero()) {
            continue;
        }
        // zero records in between are handled above
        if (l + 1..r).any(|k| zero[k]) {
            continue;
        }
        if (l + 1..r).any(|k| !records[k].ok()) {
            report.failure_gaps.push((rl.sigma, rr.sigma));
            continue;
        }
        if (rl.sigma < T::zero()) != (rr.sigma < T::zero()) {
            if trivial {
                report.trivial_bracket_skipped = true;
                continue;
            }
            report.diagnostics.push(format!(
                "sign change across sigma = 0 between {} and {}",
                rl.sigma, rr.sigma
            ));
        }
        candidates.push(Candidate::Bracket(rl.sigma, rl.distance, rr.sigma));
    }

    let roots: Vec<std::result::Result<(T, bool), String>> = candidates
        .par_iter()
        .map(|c| match *c {
            Candidate::Point(s, cont) => Ok((s, cont)),
            Candidate::Bracket(a, da, b) => match bisect(f, lp, horizon, fine, a, da, b) {
                Bisection::Root(s) => Ok((s, false)),
                Bisection::Failed(msg) => Err(msg),
            },
        })
        .collect();
    let mut accepted: Vec<(T, bool)> = Vec::new();
    for r in roots {
        match r {
            Ok(x) => accepted.push(x),
            Err(msg) => report.diagnostics.push(msg),
        }
    }
    accepted.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    accepted.dedup_by(|x, y| (x.0 - y.0).abs() <= T::lit(1e-9) * x.0.abs().max(T::one()));

    let checked: Vec<(T, bool, Result<Trajectory<T>>)> = accepted
        .into_par_iter()
        .map(|(s, cont)| (s, cont, shoot(f, lp, horizon, s, fine)))
        .collect();
    for (sigma, on_continuum, tr) in checked {
        match tr {
            Ok(tr) => {
                let residual = lp.arrive.signed_distance(tr.end()).abs();
                if residual < T::lit(opts.residual_tol) {
                    let window_index = solution_window(tr.covered_angle(), lp.delta_zeta);
                    report.solutions.push(Solution {
                        sigma,
                        trajectory: tr,
                        residual,
                        window_index,
                        on_continuum,
                    });
                } else {
                    report.rejected.push((sigma, residual));
                }
            }
            Err(e) => report
                .diagnostics
                .push(format!("re-integration at sigma = {sigma} failed: {e}")),
        }
    }
    if report.solutions.is_empty() {
        report.diagnostics.push(format!(
            "no solution on the grid ±[{}, {}]; the horizon may be outside the existence theory or the grid too small",
            opts.sigma_lo, opts.sigma_hi
        ));
    }
    report.records = records;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub sigma: f64,
    pub boundary_residual: f64,
    /// Distance of `z(0)` from the starting line.
    pub start_residual: f64,
    pub min_radius: f64,
    pub covered_angle: f64,
    pub window_index: i64,
    /// `max |x'' + f(t, x)|` over interior samples, for scalar fields.
    pub scalar_residual: Option<f64>,
    pub trivial: bool,
    pub on_continuum: bool,
}

/// Largest boundary residual [`verify`] tolerates.
pub const VERIFY_LIMIT: f64 = 1e-6;

/// Re-integrate at `tol/100` and report residuals.
pub fn verify<T: Real>(f: &Field<T>, s: &Solution<T>, lp: &LinePair<T>, horizon: T, tol: T) -> Result<VerifyReport> {
    let mut rep = verify_sigma(f, s.sigma, lp, horizon, tol)?;
    rep.on_continuum = s.on_continuum;
    Ok(rep)
}

/// [`verify`] for a bare starting parameter. `σ = 0` is recognised as the
/// trivial root when `G(t, 0) = 0`.
pub fn verify_sigma<T: Real>(f: &Field<T>, sigma: T, lp: &LinePair<T>, horizon: T, tol: T) -> Result<VerifyReport> {
    if sigma == T::zero() && f.vanishes_at_origin(horizon) {
        return Ok(VerifyReport {
            sigma: 0.0,
            boundary_residual: 0.0,
            start_residual: 0.0,
            min_radius: 0.0,
            covered_angle: 0.0,
            window_index: 0,
            scalar_residual: None,
            trivial: true,
            on_continuum: false,
        });
    }
    let tr = shoot(f, lp, horizon, sigma, tol / T::lit(100.0))?;
    let residual = lp.arrive.signed_distance(tr.end()).abs();
    let scalar_residual = match &f.kind {
        FieldKind::Scalar { f: src } => {
            let d = horizon * T::lit(1e-5);
            let mut worst = T::zero();
            for i in 1..tr.ts.len() - 1 {
                let t = tr.ts[i];
                if t - d <= T::zero() || t + d >= horizon {
                    continue;
                }
                let ddx = (tr.eval(t + d).0[1] - tr.eval(t - d).0[1]) / (d + d);
                let x = tr.zs[i][0];
                worst = worst.max((ddx + src.eval(t, [x, tr.zs[i][1]])?).abs());
            }
            Some(worst.to_f64_lossy())
        }
        _ => None,
    };
    let rep = VerifyReport {
        sigma: sigma.to_f64_lossy(),
        boundary_residual: residual.to_f64_lossy(),
        start_residual: lp.start.signed_distance(tr.start()).abs().to_f64_lossy(),
        min_radius: tr.stats.min_radius,
        covered_angle: tr.covered_angle().to_f64_lossy(),
        window_index: solution_window(tr.covered_angle(), lp.delta_zeta),
        scalar_residual,
        trivial: false,
        on_continuum: false,
    };
    if rep.boundary_residual > VERIFY_LIMIT {
        return Err(Error::VerificationFailed {
            residual: rep.boundary_residual,
            limit: VERIFY_LIMIT,
        });
    }
    Ok(rep)
}

/// Windows of `ΔΘ(T, ±R·u_S)` as `R` doubles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowProbe {
    pub radius: f64,
    pub window_plus: i64,
    pub window_minus: i64,
    pub distance_plus: f64,
    pub distance_minus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowStability {
    pub probes: Vec<WindowProbe>,
    /// Both windows agreed with each other and with the previous radius.
    pub stable: bool,
}

impl WindowStability {
    pub fn last(&self) -> Option<&WindowProbe> {
        self.probes.last()
    }
}

pub fn probe_window<T: Real>(f: &Field<T>, lp: &LinePair<T>, horizon: T, radius: T, tol: T) -> Result<WindowProbe> {
    let plus = shoot(f, lp, horizon, radius, tol)?;
    let minus = shoot(f, lp, horizon, -radius, tol)?;
    Ok(WindowProbe {
        radius: radius.to_f64_lossy(),
        window_plus: window_of(plus.covered_angle(), lp.delta_zeta),
        window_minus: window_of(minus.covered_angle(), lp.delta_zeta),
        distance_plus: lp.arrive.signed_distance(plus.end()).to_f64_lossy(),
        distance_minus: lp.arrive.signed_distance(minus.end()).to_f64_lossy(),
    })
}

/// Double `R` from `r0` until the windows at `±R` coincide for two
/// consecutive radii, or `max_doublings` is reached. This is a numerical
/// stand-in for the a-priori radius of the existence argument.
pub fn window_stability<T: Real>(
    f: &Field<T>,
    lp: &LinePair<T>,
    horizon: T,
    r0: T,
    tol: T,
    max_doublings: usize,
) -> Result<WindowStability> {
    let mut probes: Vec<WindowProbe> = Vec::new();
    let mut r = r0;
    for _ in 0..=max_doublings {
        let p = probe_window(f, lp, horizon, r, tol)?;
        let settled = p.window_plus == p.window_minus
            && probes
                .last()
                .is_some_and(|q| q.window_plus == p.window_plus && q.window_minus == p.window_minus);
        probes.push(p);
        if settled {
            return Ok(WindowStability { probes, stable: true });
        }
        r = r + r;
    }
    Ok(WindowStability { probes, stable: false })
}
