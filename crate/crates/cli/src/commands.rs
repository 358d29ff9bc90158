//! The four subcommands. Each returns its exit code, the text for stdout
//! and the files to write, so the caller decides where output goes.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use sturm_core::boundary::LinePair;
use sturm_core::expr::Definitions;
use sturm_core::fucik::{curves_in_window, lambda_k, rectangle_check, Rect, RectVerdict, SpectrumCurve};
use sturm_core::hamiltonian::AsymmetricParams;
use sturm_core::landesman::{
    check_assumption, planar_values, requirements_for_rect, requirements_for_verdict, scalar_values, Functional,
    LLReport, LLVerdict, Requirement, ScalarLimits,
};
use sturm_core::plot::spectrum_svg;
use sturm_core::resonance::{classify, default_tol, resonance_intervals, ClassificationRecord, ResonanceSet, TimeLaps};
use sturm_core::shooting::{solve, verify, SolutionSummary, SolveOptions, VerifyReport};
use sturm_core::Error;

use crate::config::ProblemConfig;
use crate::{CliError, EXIT_LL, EXIT_NO_SOLUTION, EXIT_OK};

const DEFAULT_WINDOW: f64 = 16.0;

/// Flags shared by all subcommands.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub jmax: Option<usize>,
    pub svg: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    /// `(file name, contents)`, written into `--out` when given.
    pub files: Vec<(String, String)>,
}

fn to_json<S: Serialize>(v: &S) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output types serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct LineOut {
    zeta_s: f64,
    zeta_a: f64,
    delta_zeta: f64,
}

impl From<&LinePair<f64>> for LineOut {
    fn from(lp: &LinePair<f64>) -> Self {
        LineOut {
            zeta_s: lp.start.zeta,
            zeta_a: lp.arrive.zeta,
            delta_zeta: lp.delta_zeta,
        }
    }
}

#[derive(Serialize)]
struct ClassifyOut {
    #[serde(rename = "T")]
    t: f64,
    boundary: LineOut,
    laps1: TimeLaps<f64>,
    laps2: TimeLaps<f64>,
    period1: f64,
    period2: f64,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    classification: ClassificationRecord,
}

fn resonance_set(
    cfg: &ProblemConfig,
    defs: &Definitions,
    opts: &Options,
    t: f64,
) -> Result<ResonanceSet<f64>, CliError> {
    let (h1, h2) = cfg.hamiltonians(defs)?;
    let lp = cfg.line_pair(defs)?;
    let j_max = opts.jmax.or(cfg.jmax).unwrap_or(4);
    let mut rs = resonance_intervals(&h1, &h2, &lp, j_max)?;
    rs.extend_beyond(t);
    Ok(rs)
}

/// Resonance intervals and the verdict for `T`.
pub fn cmd_classify(cfg: &ProblemConfig, opts: &Options) -> Result<Outcome, CliError> {
    let defs = cfg.definitions()?;
    let t = cfg.horizon(&defs)?;
    let lp = cfg.line_pair(&defs)?;
    let rs = resonance_set(cfg, &defs, opts, t)?;
    let tol = opts.tol.unwrap_or_else(|| default_tol(t));
    let out = ClassifyOut {
        t,
        boundary: (&lp).into(),
        laps1: rs.laps1,
        laps2: rs.laps2,
        period1: rs.period1,
        period2: rs.period2,
        alphas: rs.alphas.clone(),
        betas: rs.betas.clone(),
        classification: classify(t, &rs, tol).record(),
    };
    let json = to_json(&out);
    Ok(Outcome {
        code: EXIT_OK,
        stdout: json.clone(),
        files: vec![("classify.json".into(), json)],
    })
}

#[derive(Serialize)]
struct LambdaOut {
    k: usize,
    value: f64,
}

#[derive(Serialize)]
struct RectOut {
    mu1: f64,
    nu1: f64,
    mu2: f64,
    nu2: f64,
    verdict: RectVerdict,
}

#[derive(Serialize)]
struct SpectrumOut {
    #[serde(rename = "T")]
    t: f64,
    window: f64,
    curves: Vec<SpectrumCurve>,
    lambda: Vec<LambdaOut>,
    rectangle: Option<RectOut>,
}

/// Spectrum curves and diagonal crossings in a window, with the rectangle
/// verdict when a rectangle is configured.
pub fn cmd_spectrum(cfg: &ProblemConfig, opts: &Options) -> Result<Outcome, CliError> {
    let defs = cfg.definitions()?;
    let t = cfg.horizon(&defs)?;
    let rect = cfg.rect(&defs)?;
    let window = match &cfg.window {
        Some(w) => w.value(&defs)?,
        None => rect.map_or(DEFAULT_WINDOW, |r| DEFAULT_WINDOW.max(1.25 * r.mu2.max(r.nu2))),
    };
    if !(window > 0.0 && window.is_finite()) {
        return Err(CliError::Config(format!("`window` must be positive (got {window})")));
    }
    let lambda = (0..)
        .map(|k| LambdaOut {
            k,
            value: lambda_k(t, k),
        })
        .take_while(|l| l.value <= window)
        .collect();
    let out = SpectrumOut {
        t,
        window,
        curves: curves_in_window(t, window),
        lambda,
        rectangle: rect.map(|r| RectOut {
            mu1: r.mu1,
            nu1: r.nu1,
            mu2: r.mu2,
            nu2: r.nu2,
            verdict: rectangle_check(&r, t),
        }),
    };
    let json = to_json(&out);
    let svg = spectrum_svg(t, window, rect.as_ref())?;
    let stdout = if opts.svg && opts.out.is_none() {
        svg.clone()
    } else {
        json.clone()
    };
    Ok(Outcome {
        code: EXIT_OK,
        stdout,
        files: vec![("spectrum.json".into(), json), ("spectrum.svg".into(), svg)],
    })
}

#[derive(Serialize)]
struct SolutionOut {
    file: String,
    summary: SolutionSummary,
    verification: VerifyReport,
}

#[derive(Serialize)]
struct SolveOut {
    #[serde(rename = "T")]
    t: f64,
    boundary: LineOut,
    options: SolveOptions,
    classification: Option<ClassificationRecord>,
    trivial_solution: bool,
    trivial_bracket_skipped: bool,
    continua: Vec<(f64, f64)>,
    failure_gaps: Vec<(f64, f64)>,
    rejected: Vec<(f64, f64)>,
    diagnostics: Vec<String>,
    solutions: Vec<SolutionOut>,
}

/// Shoot for every solution in the configured `σ` range; exit code 2 when
/// none is found.
pub fn cmd_solve(cfg: &ProblemConfig, opts: &Options) -> Result<Outcome, CliError> {
    let defs = cfg.definitions()?;
    let t = cfg.horizon(&defs)?;
    let lp = cfg.line_pair(&defs)?;
    let field = cfg.field(&defs)?;
    let options = cfg.solve_options(opts.tol);
    let classification = if cfg.v1.is_some() && cfg.v2.is_some() {
        let rs = resonance_set(cfg, &defs, opts, t)?;
        Some(classify(t, &rs, default_tol(t)).record())
    } else {
        None
    };
    let report = match solve(&field, &lp, t, &options) {
        Ok(r) => r,
        Err(Error::AllTrajectoriesFailed) => {
            let out = serde_json::json!({ "T": t, "error": Error::AllTrajectoriesFailed.to_string(), "solutions": [] });
            return Ok(Outcome {
                code: EXIT_NO_SOLUTION,
                stdout: to_json(&out),
                files: vec![("solve.json".into(), to_json(&out))],
            });
        }
        Err(e) => return Err(e.into()),
    };
    let mut files = Vec::new();
    let mut solutions = Vec::new();
    for (i, s) in report.solutions.iter().enumerate() {
        let name = format!("solution_{i}.csv");
        files.push((name.clone(), s.trajectory.to_csv()));
        solutions.push(SolutionOut {
            file: name,
            summary: s.summary(),
            verification: verify(&field, s, &lp, t, options.tol)?,
        });
    }
    let code = if solutions.is_empty() {
        EXIT_NO_SOLUTION
    } else {
        EXIT_OK
    };
    let out = SolveOut {
        t,
        boundary: (&lp).into(),
        options,
        classification,
        trivial_solution: report.trivial_solution,
        trivial_bracket_skipped: report.trivial_bracket_skipped,
        continua: report.continua,
        failure_gaps: report.failure_gaps,
        rejected: report.rejected,
        diagnostics: report.diagnostics,
        solutions,
    };
    let json = to_json(&out);
    files.push(("solve.json".into(), json.clone()));
    Ok(Outcome {
        code,
        stdout: json,
        files,
    })
}

#[derive(Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
enum LLOut {
    Scalar {
        #[serde(rename = "T")]
        t: f64,
        rectangle: RectOut,
        requirements: Vec<Requirement>,
        report: LLReport,
    },
    Planar {
        #[serde(rename = "T")]
        t: f64,
        classification: ClassificationRecord,
        requirements: Vec<Requirement>,
        report: LLReport,
    },
}

fn corner_limits(
    cfg: &ProblemConfig,
    defs: &Definitions,
    given: Option<&crate::config::LimitsSpec>,
    p: AsymmetricParams<f64>,
    t: f64,
) -> Result<Option<ScalarLimits<f64>>, CliError> {
    if let Some(l) = given.map(|g| g.build(defs)).transpose()?.flatten() {
        return Ok(Some(l));
    }
    match cfg.scalar_source(defs) {
        Some(f) => Ok(Some(ScalarLimits::numeric(f?, p, t)?)),
        None => Ok(None),
    }
}

/// Check the Landesman–Lazer conditions that apply. With a rectangle the
/// scalar conditions at its corners are checked, otherwise the planar
/// conditions of the resonance verdict for `V1`, `V2`.
pub fn cmd_ll(cfg: &ProblemConfig, opts: &Options) -> Result<Outcome, CliError> {
    let defs = cfg.definitions()?;
    let t = cfg.horizon(&defs)?;
    let ll = cfg.ll.clone().unwrap_or_default();
    let (out, overall) = if let Some(rect) = cfg.rect(&defs)? {
        let verdict = rectangle_check(&rect, t);
        if let RectVerdict::Invalid { reason } = &verdict {
            return Err(CliError::Config(format!("rectangle is not admissible: {reason}")));
        }
        let reqs = requirements_for_rect(&verdict);
        let Rect { mu1, nu1, mu2, nu2 } = rect;
        let lower_p = AsymmetricParams::new(mu1, nu1)?;
        let upper_p = AsymmetricParams::new(mu2, nu2)?;
        let needs = |minus: bool| {
            reqs.iter().any(|r| matches!(r.functional, Functional::Scalar { side, .. } if (side == sturm_core::landesman::Side::Minus) == minus))
        };
        let empty = || {
            ScalarLimits::exact(
                sturm_core::field::Source::constant(0.0),
                sturm_core::field::Source::constant(0.0),
            )
        };
        let lower = if needs(true) {
            corner_limits(cfg, &defs, ll.lower.as_ref(), lower_p, t)?
        } else {
            Some(empty())
        };
        let upper = if needs(false) {
            corner_limits(cfg, &defs, ll.upper.as_ref(), upper_p, t)?
        } else {
            Some(empty())
        };
        let (Some(lower), Some(upper)) = (lower, upper) else {
            return Err(CliError::Config(
                "scalar limits needed: give `ll.lower`/`ll.upper` or a scalar field".into(),
            ));
        };
        let values = scalar_values((&lower_p, &lower), (&upper_p, &upper), t, &reqs)?;
        let report = check_assumption(&reqs, &values)?;
        let overall = report.overall;
        let out = LLOut::Scalar {
            t,
            rectangle: RectOut {
                mu1,
                nu1,
                mu2,
                nu2,
                verdict,
            },
            requirements: reqs,
            report,
        };
        (out, overall)
    } else {
        let (h1, h2) = cfg.hamiltonians(&defs)?;
        let field = cfg.field(&defs)?;
        let rs = resonance_set(cfg, &defs, opts, t)?;
        let tol = opts.tol.unwrap_or_else(|| default_tol(t));
        let c = classify(t, &rs, tol);
        let reqs = requirements_for_verdict(&c.verdict);
        let params = ll.planar.unwrap_or_default();
        let values = if reqs.is_empty() {
            BTreeMap::new()
        } else {
            planar_values(&field, (&h1, &rs.laps1), (&h2, &rs.laps2), t, &reqs, &params)?
        };
        let mut report = check_assumption(&reqs, &values)?;
        report.params = Some(params);
        let overall = report.overall;
        (
            LLOut::Planar {
                t,
                classification: c.record(),
                requirements: reqs,
                report,
            },
            overall,
        )
    };
    let json = to_json(&out);
    let code = if overall == LLVerdict::Satisfied {
        EXIT_OK
    } else {
        EXIT_LL
    };
    Ok(Outcome {
        code,
        stdout: json.clone(),
        files: vec![("ll.json".into(), json)],
    })
}
