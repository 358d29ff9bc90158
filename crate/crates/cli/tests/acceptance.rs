//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;
use sturm_cli::{cmd_ll, cmd_solve, Options, ProblemConfig};
use sturm_core::boundary::LinePair;
use sturm_core::expr::{Expression, Var};
use sturm_core::field::{flow, Field, Source};
use sturm_core::fucik::{curve_points, lambda_k, Eigen, SpectrumCurve};
use sturm_core::hamiltonian::{make_asymmetric, AngularProfile, AsymmetricParams, HomogeneousHamiltonian};
use sturm_core::landesman::{ll_planar, ll_scalar, EigenOrbit, LLParams, ScalarLimits, Side};
use sturm_core::resonance::{
    classify, default_tol, identity_resonance, period, resonance_intervals, time_laps, Verdict,
};
use sturm_core::shooting::{probe_window, solve, SolveOptions};

struct Check {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Check {
    Check {
        ok,
        detail: detail.into(),
    }
}

fn asym(mu: f64, nu: f64) -> HomogeneousHamiltonian<f64> {
    make_asymmetric(AsymmetricParams { mu, nu }).unwrap()
}

fn harm(mu: f64) -> HomogeneousHamiltonian<f64> {
    HomogeneousHamiltonian::harmonic(mu).unwrap()
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let mut c = f();
    let took = start.elapsed();
    c.detail = format!("{}; {:.2} s", c.detail, took.as_secs_f64());
    if let Some(l) = limit {
        if took > l {
            c.ok = false;
            c.detail = format!("{} exceeds {:.0} s", c.detail, l.as_secs_f64());
        }
    }
    c
}

fn period_oracle() -> Check {
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (mu, nu) = (rng.gen_range(0.1..100.0), rng.gen_range(0.1..100.0));
        let exact = PI / f64::sqrt(mu) + PI / f64::sqrt(nu);
        worst = worst.max((period(&asym(mu, nu)) - exact).abs());
    }
    check(
        worst <= 1e-9,
        format!("max |error| {worst:.2e} over 50 pairs (tol 1e-9)"),
    )
}

fn random_hamiltonian(rng: &mut StdRng) -> HomogeneousHamiltonian<f64> {
    if rng.gen_bool(0.5) {
        asym(rng.gen_range(0.1..50.0), rng.gen_range(0.1..50.0))
    } else {
        // smooth non-asymmetric profile: 2v = sin² + a cos² + b sin²cos² + c sin θ cos³ θ
        let a: f64 = rng.gen_range(0.5..5.0);
        let b: f64 = rng.gen_range(0.0..3.0);
        let c: f64 = rng.gen_range(-0.3..0.3);
        let src = format!(
            "0.5*(sin(theta)^2 + {a}*cos(theta)^2 + {b}*sin(theta)^2*cos(theta)^2 + {c}*sin(theta)*cos(theta)^3)"
        );
        let v = Expression::parse(&src, &[Var::Theta]).unwrap();
        HomogeneousHamiltonian::new(AngularProfile::from_expression(v, None, vec![]).unwrap(), src)
    }
}

fn lap_sum_identity() -> Check {
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut positive = true;
    for _ in 0..50 {
        let h = random_hamiltonian(&mut rng);
        let lp = LinePair::new(rng.gen_range(-1.5..PI / 2.0), rng.gen_range(-1.5..PI / 2.0)).unwrap();
        let l = time_laps(&h, &lp);
        worst = worst.max((l.total() - period(&h)).abs());
        positive &= l.tau1 > 0.0 && l.tau2 > 0.0 && l.sigma1 >= 0.0 && l.sigma2 >= 0.0 && l.tau0 >= 0.0;
    }
    check(
        worst <= 1e-9 && positive,
        format!("max |tau1+sigma1+tau2+sigma2 - period| {worst:.2e} (tol 1e-9), signs ok: {positive}"),
    )
}

fn dirichlet_intervals() -> Check {
    let rs = resonance_intervals(&harm(1.0), &harm(4.0), &LinePair::dirichlet(), 3).unwrap();
    let want = [(PI / 2.0, PI), (PI, 2.0 * PI), (1.5 * PI, 3.0 * PI)];
    let mut worst = 0.0f64;
    for (j, (a, b)) in want.iter().enumerate() {
        worst = worst.max((rs.alpha(j) - a).abs()).max((rs.beta(j) - b).abs());
    }
    let v = classify(PI, &rs, default_tol(PI)).verdict;
    let double = matches!(v, Verdict::Double { .. });
    check(
        worst <= 1e-9 && double,
        format!("max interval error {worst:.2e} (tol 1e-9), classify(pi) = {v:?}"),
    )
}

fn degenerate_consistency() -> Check {
    let setups = [
        (asym(4.0, 1.0), LinePair::dirichlet()),
        (asym(3.0, 0.7), LinePair::new(0.4, -0.9).unwrap()),
    ];
    let mut disagreements = 0;
    let mut checked = 0;
    let mut hits = 0;
    for (h, lp) in &setups {
        let tau = period(h);
        let l = time_laps(h, lp);
        let shifts = [l.tau1, l.tau1 + l.sigma1 + l.tau2, l.tau2, l.tau2 + l.sigma2 + l.tau1];
        let horizon = 3.0 * tau;
        let mut targets: Vec<f64> = (0..4)
            .flat_map(|k| shifts.iter().map(move |s| k as f64 * tau + s))
            .filter(|&t| t <= horizon)
            .collect();
        let grid: Vec<f64> = (0..10_000).map(|i| (i as f64 + 0.5) * horizon / 10_000.0).collect();
        targets.sort_by(f64::total_cmp);
        for t in grid.iter().copied().chain(targets.iter().copied()) {
            let tol = default_tol(t);
            let gap = targets.iter().map(|x| (t - x).abs()).fold(f64::INFINITY, f64::min);
            // skip the band where neither answer is forced
            if gap > tol && gap < 10.0 * tol {
                continue;
            }
            let r = identity_resonance(t, h, lp, tol).unwrap();
            checked += 1;
            hits += usize::from(r.eigen_horizon);
            if r.eigen_horizon != r.classification.verdict.is_boundary_resonant() {
                disagreements += 1;
            }
        }
    }
    check(
        disagreements == 0 && hits > 0,
        format!("{disagreements} disagreements over {checked} horizons ({hits} on identities)"),
    )
}

fn closed_form_case(f: &str, t: f64, sigma: f64, exact: impl Fn(f64) -> f64) -> (bool, String) {
    let field = Field::scalar(Expression::parse(f, &[Var::T, Var::X]).unwrap());
    let rep = solve(&field, &LinePair::dirichlet(), t, &SolveOptions::default()).unwrap();
    let Some(s) = rep.solutions.first() else {
        return (false, format!("{f}: no solution"));
    };
    let dsig = (s.sigma - sigma).abs();
    let sup = (0..=1000)
        .map(|i| {
            let u = t * i as f64 / 1000.0;
            (s.trajectory.eval(u).0[0] - exact(u)).abs()
        })
        .fold(0.0, f64::max);
    (
        rep.solutions.len() == 1 && dsig <= 1e-8 && sup < 1e-7,
        format!("{f}: sigma error {dsig:.1e}, sup error {sup:.1e}"),
    )
}

fn shooting_closed_form() -> Check {
    let mut ok = true;
    let mut parts = vec![];
    let cases: [(&str, f64, f64, fn(f64) -> f64); 2] = [
        ("x - 1", PI / 2.0, -1.0, |t| 1.0 - t.cos() - t.sin()),
        ("4*x - 4", PI / 4.0, -2.0, |t| 1.0 - (2.0 * t).cos() - (2.0 * t).sin()),
    ];
    for (f, t, sigma, exact) in cases {
        let start = Instant::now();
        let (good, msg) = closed_form_case(f, t, sigma, exact);
        let took = start.elapsed().as_secs_f64();
        ok &= good && took < 2.0;
        parts.push(format!("{msg} in {took:.2} s"));
    }
    check(ok, parts.join("; "))
}

fn fucik_membership() -> Check {
    let t = PI;
    let mut worst = 0.0f64;
    let mut n = 0;
    for (a, b, count, range) in [(1, 1, 7, (1.5, 30.0)), (1, 2, 7, (4.5, 30.0)), (2, 1, 6, (9.5, 30.0))] {
        let c = SpectrumCurve::new(a, b).unwrap();
        for (mu, nu) in curve_points(c, t, range, count).unwrap() {
            let y0 = if a >= b { 1.0 } else { -1.0 };
            let tr = flow(&Field::hamiltonian(asym(mu, nu)), [0.0, y0], t, 1e-12).unwrap();
            worst = worst.max(tr.end()[0].abs());
            n += 1;
        }
    }
    // independent diagonal crossing by bisection on C(k, k+1)
    let mut lam_err = 0.0f64;
    for k in 0..6 {
        let c = SpectrumCurve::new(k, k + 1).unwrap();
        let mirror = SpectrumCurve::new(k + 1, k).unwrap();
        let (mut lo, mut hi) = (1e-3, 1e4);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if c.level(m, m) > t / PI {
                lo = m
            } else {
                hi = m
            }
        }
        let lam = 0.5 * (lo + hi);
        lam_err = lam_err.max((lam - lambda_k(t, k as usize)).abs() / lam.max(1.0));
        lam_err = lam_err.max((mirror.level(lam, lam) - t / PI).abs());
    }
    check(
        n == 20 && worst < 1e-7 && lam_err <= 1e-9,
        format!("{n} points, max |x(T)| {worst:.1e} (tol 1e-7), lambda_k error {lam_err:.1e} (tol 1e-9)"),
    )
}

fn angular_bounds() -> Check {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let (mu1, nu1) = (rng.gen_range(0.2..4.0), rng.gen_range(0.2..4.0));
        let (h1, h2) = (
            asym(mu1, nu1),
            asym(mu1 + rng.gen_range(0.0..6.0), nu1 + rng.gen_range(0.0..6.0)),
        );
        let src = format!(
            "0.5 + {:.3}*sin({:.3}*t + {:.3}*theta) + {:.3}*cos(x*y/(1 + x^2 + y^2))",
            rng.gen_range(0.0..0.3),
            rng.gen_range(0.5..4.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-0.2..0.2)
        );
        let gamma: Source<f64> = Expression::parse(&src, &[Var::T, Var::X, Var::Y, Var::Theta])
            .unwrap()
            .into();
        let f = Field::interpolated(h1.clone(), h2.clone(), gamma, None);
        let th0: f64 = rng.gen_range(-PI..PI);
        let tr = flow(&f, [th0.cos(), th0.sin()], 10.0, 1e-10).unwrap();
        for (&t, &z) in tr.ts.iter().zip(&tr.zs) {
            let th = z[1].atan2(z[0]);
            let w = -f.angular_velocity(t, z).unwrap();
            worst = worst.max(2.0 * h1.v(th) - w).max(w - 2.0 * h2.v(th));
        }
    }
    check(
        worst <= 1e-6,
        format!("max bound violation {worst:.1e} over 20 fields (tol 1e-6)"),
    )
}

fn window_dichotomy() -> Check {
    let (h1, h2) = (harm(1.0), harm(2.25));
    let lp = LinePair::dirichlet();
    let t = 1.3 * PI;
    let rs = resonance_intervals(&h1, &h2, &lp, 4).unwrap();
    let Verdict::Nonresonant(j) = classify(t, &rs, default_tol(t)).verdict else {
        return check(false, "T = 1.3 pi is not classified nonresonant");
    };
    let gamma: Source<f64> = Expression::parse("0.5 + 0.4*sin(2*theta)", &[Var::Theta])
        .unwrap()
        .into();
    let p = [
        Source::from(Expression::parse("0.5*sin(t)", &[Var::T]).unwrap()),
        Source::constant(0.0),
    ];
    let f = Field::interpolated(h1, h2, gamma, Some(p));
    let mut ok = true;
    let mut parts = vec![];
    for r in [1e2, 1e3, 1e4] {
        let w = probe_window(&f, &lp, t, r, 1e-10).unwrap();
        let good = w.window_plus == j as i64 && w.window_minus == j as i64 && w.distance_plus * w.distance_minus < 0.0;
        ok &= good;
        parts.push(format!("R={r:.0e}: windows ({}, {})", w.window_plus, w.window_minus));
    }
    check(
        ok,
        format!("Nonresonant({j}); {}; opposite signs: {ok}", parts.join(", ")),
    )
}

fn ll_oracle() -> Check {
    let limits = |plus: &str, minus: &str| {
        let p = Expression::parse(plus, &[Var::T]).unwrap().into();
        let m = Expression::parse(minus, &[Var::T]).unwrap().into();
        ScalarLimits::exact(p, m)
    };
    let one = AsymmetricParams { mu: 1.0, nu: 1.0 };
    let mut worst = 0.0f64;
    for c in [0.0, 1.0, 2.0] {
        let l = limits(&format!("pi/2 - {c}"), &format!("-pi/2 - {c}"));
        let a = ll_scalar(&l, Eigen::Phi, &one, Side::Minus, PI).unwrap();
        worst = worst.max((a - (PI - 2.0 * c)).abs());
    }
    let l = limits("-pi/2", "pi/2");
    let a_plus = ll_scalar(&l, Eigen::Phi, &AsymmetricParams { mu: 4.0, nu: 4.0 }, Side::Plus, PI).unwrap();
    worst = worst.max((a_plus + PI / 2.0).abs());

    let scalar_c1 = ll_scalar(&limits("pi/2 - 1", "-pi/2 - 1"), Eigen::Phi, &one, Side::Minus, PI).unwrap();
    let f = Field::scalar(Expression::parse("x + atan(x) - 1", &[Var::T, Var::X]).unwrap());
    let orbit = EigenOrbit::new(&harm(1.0)).unwrap();
    let tau0 = time_laps(&harm(1.0), &LinePair::dirichlet()).tau0;
    let planar = ll_planar(&f, &orbit, tau0, Side::Minus, PI, &LLParams::default()).unwrap();
    let gap = (planar.estimate - scalar_c1).abs();
    check(
        worst <= 1e-6 && gap <= 1e-2,
        format!("max scalar error {worst:.1e} (tol 1e-6), planar vs scalar {gap:.1e} (tol 1e-2)"),
    )
}

fn end_to_end_double() -> Check {
    let cfg = ProblemConfig::from_json(
        r#"{
            "T": "pi",
            "boundary": "dirichlet",
            "V1": {"harmonic": 1},
            "V2": {"harmonic": 4},
            "field": {"type": "interpolated", "gamma": "0.5*(1 + 0.5*sin(2*t))", "p": ["1", "0"]}
        }"#,
    )
    .unwrap();
    let ll = cmd_ll(&cfg, &Options::default()).unwrap();
    let report: Value = serde_json::from_str(&ll.stdout).unwrap();
    let entries = report["report"]["entries"].as_array().cloned().unwrap_or_default();
    let satisfied = entries.iter().filter(|e| e["verdict"] == "satisfied").count();
    let solved = cmd_solve(&cfg, &Options::default()).unwrap();
    let out: Value = serde_json::from_str(&solved.stdout).unwrap();
    let residuals: Vec<f64> = out["solutions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["summary"]["residual"].as_f64().unwrap())
        .collect();
    let best = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        ll.code == 0 && entries.len() == 4 && satisfied == 4 && !residuals.is_empty() && best < 1e-7,
        format!(
            "verdict {}, {satisfied}/4 conditions satisfied, {} solution(s), best residual {best:.1e}",
            report["classification"]["verdict"],
            residuals.len()
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, Option<u64>, fn() -> Check)> = vec![
        ("period oracle", Some(5), period_oracle),
        ("lap-sum identity", Some(10), lap_sum_identity),
        ("Dirichlet resonance set", Some(1), dirichlet_intervals),
        ("degenerate consistency", None, degenerate_consistency),
        ("shooting vs closed form", None, shooting_closed_form),
        ("spectrum membership", None, fucik_membership),
        ("angular-velocity bounds", None, angular_bounds),
        ("window dichotomy", None, window_dichotomy),
        ("Landesman-Lazer oracle", None, ll_oracle),
        ("end-to-end double resonance", Some(30), end_to_end_double),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let c = timed(limit.map(Duration::from_secs), run);
        failed += usize::from(!c.ok);
        println!(
            "criterion {:>2} {name}: {} ({})",
            i + 1,
            if c.ok { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
