//! Subcommand implementations. Every command fans its samples out on the rayon pool and
//! collects them in plan order, so the files do not depend on scheduling.

use std::f64::consts::PI;

use fsskit::grid::BcVector;
use fsskit::kernels::{cutoff, l2_along_ray, KernelOptions};
use fsskit::picard::{PicardOptions, ThresholdOptions};
use fsskit::propagator::{default_ode_options, Propagator};
use fsskit::scenario::Scenario;
use fsskit::sectors::{compute_sectors, large_sector, Angle, AngularInterval};
use fsskit::solutions::*;
use fsskit::sturm::{pencil_fss, PencilReport};
use fsskit::{Complex64, Error, Solutions, System};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{write_json, Row, Table};
use crate::{Failure, Outcome, Quantity, Run};

/// Tolerance keys accepted in the scenario and by `--tol-override`, with defaults.
const TOLERANCES: &[(&str, f64)] = &[
    ("residual", 1e-7),
    ("ratio_slack", 0.05),
    ("pencil_residual", 1e-6),
    ("perturbation", 1e-2),
    ("residual_target", 1e-9),
    ("eps_fix", 1e-10),
    ("phase_cap", PI / 4.0),
    ("tail_eps", 1e-9),
    ("h_max", 0.125),
    ("r_search", 200.0),
];

pub fn check_tolerance_keys(s: &Scenario) -> Outcome {
    for k in s.tolerances.keys() {
        if !TOLERANCES.iter().any(|(n, _)| n == k) {
            let known: Vec<&str> = TOLERANCES.iter().map(|t| t.0).collect();
            return Err(Failure::Schema(format!("unknown tolerance '{k}' (known: {})", known.join(", "))));
        }
    }
    Ok(())
}

fn tol(s: &Scenario, key: &str) -> f64 {
    let d = TOLERANCES.iter().find(|t| t.0 == key).expect("tolerance key").1;
    s.tolerance(key, d)
}

fn kernel_opts(s: &Scenario) -> KernelOptions {
    KernelOptions {
        phase_cap: tol(s, "phase_cap"),
        tail_eps: tol(s, "tail_eps"),
        h_max: tol(s, "h_max"),
        ..Default::default()
    }
}

fn solve_opts(s: &Scenario, extend: bool) -> SolveOptions {
    SolveOptions {
        kernel: kernel_opts(s),
        picard: PicardOptions { eps_fix: tol(s, "eps_fix"), ..Default::default() },
        residual_target: tol(s, "residual_target"),
        grid_modulus: None,
        extend,
    }
}

fn threshold_opts(s: &Scenario) -> ThresholdOptions {
    ThresholdOptions { r_search: tol(s, "r_search"), samples: 16, bisections: 10, ..Default::default() }
}

fn spec(run: &Run) -> Result<System, Failure> {
    Ok(run.scenario.system_spec()?)
}

/// Planned lambda values; a pencil plan contributes `lambda = i z` for `Im z <= 0`.
fn lambdas(run: &Run) -> Result<Vec<Complex64>, Failure> {
    let plan = &run.scenario.plan;
    let mut pts = plan.lambda_points();
    if run.scenario.system.is_none() {
        pts.extend(plan.z.iter().filter(|z| z[1] <= 0.0).map(|z| Complex64::new(-z[1], z[0])));
    }
    if pts.is_empty() {
        return Err(Failure::Schema("the sampling plan has no lambda values".into()));
    }
    if pts.iter().any(|l| l.norm() == 0.0) {
        return Err(Failure::Schema("lambda = 0 in the sampling plan".into()));
    }
    Ok(pts)
}

fn xs(run: &Run) -> Vec<f64> {
    if run.scenario.plan.x.is_empty() {
        vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0]
    } else {
        run.scenario.plan.x.clone()
    }
}

fn region_label(r: &RegionTag) -> String {
    match r {
        RegionTag::Sector { kappa } => format!("S{kappa}"),
        RegionTag::LargeSector { m, part } => format!("L{m}:{part:?}"),
        RegionTag::Supplemented { m, part } => format!("L{m}:{part:?}+fss"),
    }
}

fn angle(a: &Angle) -> String {
    match a.pi_fraction {
        Some((p, q)) => format!("{p}/{q} pi"),
        None => format!("{:?}", a.radians),
    }
}

/// Splits sample outcomes into systems and threshold failures; other errors abort.
fn triage<K>(results: Vec<(K, fsskit::Result<Solutions>)>) -> Result<(Vec<(K, Solutions)>, Vec<(K, String)>), Failure> {
    let (mut ok, mut failed) = (Vec::new(), Vec::new());
    for (k, r) in results {
        match r {
            Ok(s) => ok.push((k, s)),
            Err(e @ Error::BelowThreshold { .. }) => failed.push((k, e.to_string())),
            Err(e) => return Err(e.into()),
        }
    }
    Ok((ok, failed))
}

const COLUMN_HEADER: &[&str] = &[
    "alpha", "lambda*", "region", "k", "omega*", "iterations", "final_increment", "observed_ratio", "bound_v",
    "bound_v2", "mu", "theta", "gamma", "k_alpha", "truncation", "panels", "residual", "refined",
];

fn column_rows(t: &mut Table, sys: &Solutions) {
    for c in &sys.columns {
        let b = &c.cert.bound;
        t.push(
            Row::new()
                .f(sys.alpha)
                .c(sys.lambda)
                .s(region_label(&sys.region))
                .i(c.label() + 1)
                .c(c.omega)
                .i(c.cert.iterations)
                .f(c.cert.final_increment)
                .f(c.cert.observed_ratio)
                .f(b.bound_v)
                .f(b.bound_v2)
                .f(b.mu)
                .f(b.theta)
                .f(b.gamma)
                .f(b.k_alpha)
                .f(c.cert.truncation)
                .i(c.cert.panels)
                .f(c.residual)
                .b(c.refined),
        );
    }
}

fn value_rows(t: &mut Table, sys: &Solutions, xs: &[f64]) -> Result<(), Failure> {
    for &x in xs {
        if x < 0.0 || (x < sys.alpha && sys.columns.iter().any(|c| c.extension.is_none())) {
            continue;
        }
        let y = sys.y_original(x)?;
        for (kc, c) in sys.columns.iter().enumerate() {
            for j in 0..sys.n() {
                t.push(
                    Row::new()
                        .f(sys.alpha)
                        .c(sys.lambda)
                        .s(region_label(&sys.region))
                        .i(j + 1)
                        .i(c.label() + 1)
                        .f(x)
                        .c(y[(j, kc)]),
                );
            }
        }
    }
    Ok(())
}

const VALUE_HEADER: &[&str] = &["alpha", "lambda*", "region", "j", "k", "x", "y*"];

fn failure_table(failed: &[((f64, Complex64, String), String)]) -> Table {
    let mut t = Table::new(&["alpha", "lambda*", "region", "diagnostic"]);
    for ((a, l, r), m) in failed {
        t.push(Row::new().f(*a).c(*l).s(r.clone()).s(m.clone()));
    }
    t
}

fn certificate_outcome(failed: usize, what: &str) -> Outcome {
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Certificate(format!("{failed} {what} below the contraction threshold (see failures.csv)")))
    }
}

pub fn sectors(run: &Run) -> Outcome {
    let spec = spec(run)?;
    let geom = compute_sectors(spec.b());
    let mut t = Table::new(&["kappa", "lo", "hi", "lo_exact", "hi_exact", "permutation"]);
    for s in &geom.sectors {
        let perm: Vec<String> = s.permutation.iter().map(|p| (p + 1).to_string()).collect();
        t.push(
            Row::new()
                .i(s.kappa)
                .f(s.interval.lo.radians)
                .f(s.interval.hi.radians)
                .s(angle(&s.interval.lo))
                .s(angle(&s.interval.hi))
                .s(perm.join(" ")),
        );
    }
    t.write(&run.out.join("sectors.csv"))?;

    let mut large = Vec::new();
    let mut lt = Table::new(&["m", "sigma", "omega*", "part", "lo", "hi", "lo_exact", "hi_exact"]);
    for &m in &run.scenario.plan.large_sectors {
        if !geom.roots_of_unity {
            return Err(Failure::Schema("large sectors need b to be the roots of unity".into()));
        }
        let ls = large_sector(spec.n(), m, spec.n() == 2)?;
        let parts: [(&str, &AngularInterval); 4] =
            [("omega_m", &ls.omega_m), ("lambda", &ls.lambda), ("gamma1", &ls.gamma1), ("gamma_sigma", &ls.gamma_sigma)];
        for (name, iv) in parts {
            lt.push(
                Row::new()
                    .i(m)
                    .i(ls.sigma)
                    .c(Complex64::new(ls.omega.0, ls.omega.1))
                    .s(name)
                    .f(iv.lo.radians)
                    .f(iv.hi.radians)
                    .s(angle(&iv.lo))
                    .s(angle(&iv.hi)),
            );
        }
        large.push(ls);
    }
    if !large.is_empty() {
        lt.write(&run.out.join("large_sectors.csv"))?;
    }

    let mut pt = Table::new(&["lambda*", "kappa"]);
    for l in lambdas(run)? {
        pt.push(Row::new().c(l).i(sector_of(&spec, l)?));
    }
    pt.write(&run.out.join("lambda_sectors.csv"))?;

    #[derive(Serialize)]
    struct Report<'a> {
        scenario: &'a str,
        geometry: &'a fsskit::sectors::SectorGeometry,
        large_sectors: &'a [fsskit::sectors::LargeSector],
    }
    write_json(&run.out.join("sectors.json"), &Report { scenario: &run.scenario.name, geometry: &geom, large_sectors: &large })
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    systems: usize,
    failures: usize,
    max_residual: f64,
    residual_tolerance: f64,
    seed: Option<u64>,
}

fn residual_outcome(run: &Run, max: f64) -> Outcome {
    let t = tol(&run.scenario, "residual");
    if max < t {
        Ok(())
    } else {
        Err(Failure::Certificate(format!("integral-equation residual {max:.3e} exceeds {t:.1e}")))
    }
}

pub fn fss(run: &Run) -> Outcome {
    let spec = spec(run)?;
    let opts = solve_opts(&run.scenario, true);
    let geom = compute_sectors(spec.b());
    let mut jobs = Vec::new();
    for &alpha in &run.scenario.alphas {
        for l in lambdas(run)? {
            if run.scenario.plan.sectors.is_empty() {
                jobs.push((alpha, l, sector_of(&spec, l)?));
            } else {
                for &k in &run.scenario.plan.sectors {
                    if geom.sector(k)?.interval.contains(l, 1e-12) {
                        jobs.push((alpha, l, k));
                    }
                }
            }
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(a, l, k)| ((a, l, format!("S{k}")), build_fss(&spec, a, k, l, &opts)))
        .collect();
    let (ok, failed) = triage(results)?;

    let (mut ct, mut vt) = (Table::new(COLUMN_HEADER), Table::new(VALUE_HEADER));
    let mut rt = Table::new(&["alpha", "lambda*", "region", "j", "k", "sup_s"]);
    let xs = xs(run);
    let mut max_res = 0.0f64;
    for (_, sys) in &ok {
        column_rows(&mut ct, sys);
        value_rows(&mut vt, sys, &xs)?;
        let rep = extract_residuals(sys)?;
        for (j, row) in rep.sup.iter().enumerate() {
            for (kc, v) in row.iter().enumerate() {
                let k = sys.columns[kc].label() + 1;
                rt.push(Row::new().f(sys.alpha).c(sys.lambda).s(region_label(&sys.region)).i(sys.perm[j] + 1).i(k).f(*v));
            }
        }
        max_res = max_res.max(sys.max_residual());
    }
    ct.write(&run.out.join("fss_columns.csv"))?;
    vt.write(&run.out.join("fss_values.csv"))?;
    rt.write(&run.out.join("fss_residuals.csv"))?;
    failure_table(&failed).write(&run.out.join("failures.csv"))?;
    write_json(
        &run.out.join("fss_summary.json"),
        &Summary {
            scenario: &run.scenario.name,
            systems: ok.len(),
            failures: failed.len(),
            max_residual: max_res,
            residual_tolerance: tol(&run.scenario, "residual"),
            seed: run.scenario.plan.seed,
        },
    )?;
    certificate_outcome(failed.len(), "samples")?;
    residual_outcome(run, max_res)
}

pub fn largesector(run: &Run) -> Outcome {
    let spec = spec(run)?;
    let opts = solve_opts(&run.scenario, true);
    let n = spec.n();
    let mut jobs = Vec::new();
    for &alpha in &run.scenario.alphas {
        for &m in &run.scenario.plan.large_sectors {
            let ls = large_sector(n, m, n == 2)?;
            for l in lambdas(run)? {
                if ls.omega_m.contains(l, 1e-12) {
                    jobs.push((alpha, l, m));
                }
            }
        }
    }
    if jobs.is_empty() {
        eprintln!("note: no planned lambda lies in a planned large sector");
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(a, l, m)| ((a, l, format!("L{m}")), build_large_sector(&spec, a, m, l, None, &opts)))
        .collect();
    let (ok, failed) = triage(results)?;

    // where Lambda overlaps a neighbour, both constructions must agree
    let glue_jobs: Vec<_> = ok
        .iter()
        .filter_map(|((a, l, _), sys)| {
            let RegionTag::LargeSector { m, part: SubRegion::Lambda } = sys.region else { return None };
            let ls = large_sector(n, m, n == 2).ok()?;
            let other = [(SubRegion::Gamma1, ls.gamma1), (SubRegion::GammaSigma, ls.gamma_sigma)]
                .into_iter()
                .find(|(_, iv)| iv.contains(*l, 1e-12))?;
            Some((*a, *l, m, other.0, sys))
        })
        .collect();
    let glue: Vec<(f64, Complex64, usize, SubRegion, f64)> = glue_jobs
        .par_iter()
        .map(|&(a, l, m, part, sys)| -> Result<_, Failure> {
            let other = build_large_sector(&spec, a, m, l, Some(part), &opts)?;
            Ok((a, l, m, part, overlap_defect(sys, &other, sys.columns[0].omega)?))
        })
        .collect::<Result<_, _>>()?;

    let (mut ct, mut vt) = (Table::new(COLUMN_HEADER), Table::new(VALUE_HEADER));
    let xs = xs(run);
    let mut max_res = 0.0f64;
    for (_, sys) in &ok {
        column_rows(&mut ct, sys);
        value_rows(&mut vt, sys, &xs)?;
        max_res = max_res.max(sys.max_residual());
    }
    let mut gt = Table::new(&["alpha", "lambda*", "m", "neighbour", "defect"]);
    for (a, l, m, p, d) in &glue {
        gt.push(Row::new().f(*a).c(*l).i(*m).s(format!("{p:?}")).f(*d));
    }
    ct.write(&run.out.join("largesector_columns.csv"))?;
    vt.write(&run.out.join("largesector_values.csv"))?;
    gt.write(&run.out.join("largesector_gluing.csv"))?;
    failure_table(&failed).write(&run.out.join("failures.csv"))?;
    write_json(
        &run.out.join("largesector_summary.json"),
        &Summary {
            scenario: &run.scenario.name,
            systems: ok.len(),
            failures: failed.len(),
            max_residual: max_res,
            residual_tolerance: tol(&run.scenario, "residual"),
            seed: run.scenario.plan.seed,
        },
    )?;
    certificate_outcome(failed.len(), "samples")?;
    residual_outcome(run, max_res)
}

#[derive(Serialize)]
struct PencilEntry {
    alpha: f64,
    report: PencilReport,
    tolerance: f64,
    pass: bool,
}

fn pencil_reports(run: &Run, samples: Option<&mut Table>) -> Result<(Vec<PencilEntry>, Vec<(f64, Complex64, String)>), Failure> {
    let p = run.scenario.pencil_spec()?;
    let opts = solve_opts(&run.scenario, true);
    if run.scenario.plan.z.is_empty() {
        return Err(Failure::Schema("the sampling plan has no z values".into()));
    }
    let jobs: Vec<(f64, Complex64)> = run
        .scenario
        .alphas
        .iter()
        .flat_map(|&a| run.scenario.plan.z.iter().map(move |z| (a, Complex64::new(z[0], z[1]))))
        .collect();
    let tol = tol(&run.scenario, "pencil_residual");
    let done: Vec<_> = jobs
        .par_iter()
        .map(|&(a, z)| -> Result<_, Failure> {
            match pencil_fss(&p, a, z, &opts) {
                Ok(sol) => {
                    let rep = sol.report()?;
                    let rows = [sol.samples(1)?, sol.samples(2)?];
                    Ok(Ok((a, rep, rows)))
                }
                Err(e @ Error::BelowThreshold { .. }) => Ok(Err((a, z, e.to_string()))),
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<_, _>>()?;
    let (mut entries, mut failed) = (Vec::new(), Vec::new());
    let mut samples = samples;
    for d in done {
        match d {
            Ok((a, report, rows)) => {
                if let Some(t) = samples.as_deref_mut() {
                    let z = Complex64::new(report.z[0], report.z[1]);
                    for (k, col) in rows.iter().enumerate() {
                        for s in col {
                            t.push(
                                Row::new()
                                    .f(a)
                                    .c(z)
                                    .i(k + 1)
                                    .f(s.x)
                                    .f(s.u[0])
                                    .f(s.u[1])
                                    .f(s.u1[0])
                                    .f(s.u1[1])
                                    .f(s.s1[0])
                                    .f(s.s1[1])
                                    .f(s.s2[0])
                                    .f(s.s2[1])
                                    .f(s.residual)
                                    .f(s.quasi),
                            );
                        }
                    }
                }
                let zn = (report.z[0].powi(2) + report.z[1].powi(2)).max(1.0);
                let tolerance = tol * zn;
                let pass = report.residual.iter().all(|&r| r <= tolerance);
                entries.push(PencilEntry { alpha: a, report, tolerance, pass });
            }
            Err(f) => failed.push(f),
        }
    }
    Ok((entries, failed))
}

pub fn sturm(run: &Run) -> Outcome {
    let mut t = Table::new(&["alpha", "z*", "k", "x", "u*", "u1*", "s1*", "s2*", "residual", "quasi"]);
    let (entries, failed) = pencil_reports(run, Some(&mut t))?;
    t.write(&run.out.join("sturm_samples.csv"))?;
    let failed: Vec<_> = failed.into_iter().map(|(a, z, m)| ((a, z, "pencil".to_string()), m)).collect();
    failure_table(&failed).write(&run.out.join("failures.csv"))?;
    write_json(&run.out.join("sturm_reports.json"), &entries)?;
    certificate_outcome(failed.len(), "z values")?;
    match entries.iter().find(|e| !e.pass) {
        Some(e) => Err(Failure::Certificate(format!(
            "regularized residual {:.3e} at z = {:?} exceeds {:.1e}",
            e.report.residual[0].max(e.report.residual[1]),
            e.report.z,
            e.tolerance
        ))),
        None => Ok(()),
    }
}

/// `max_k theta` over the columns of the sector containing `lambda`, with the tail bound.
fn theta_at(spec: &System, alpha: f64, lambda: Complex64, kopts: &KernelOptions) -> fsskit::Result<(f64, f64)> {
    let kappa = sector_of(spec, lambda)?;
    let mut best = (0.0f64, 0.0f64);
    for ctx in fss_contexts(spec, alpha, kappa, kopts)? {
        let t = ctx.theta_sup(lambda)?;
        best = (best.0.max(t.value), best.1.max(t.tail_bound));
    }
    Ok(best)
}

pub fn sweep(run: &Run, q: Quantity) -> Outcome {
    let spec = spec(run)?;
    let kopts = kernel_opts(&run.scenario);
    let opts = solve_opts(&run.scenario, false);
    let alphas = &run.scenario.alphas;
    let name = match q {
        Quantity::Theta => "theta",
        Quantity::Gamma => "gamma",
        Quantity::ResidualSup => "residual_sup",
        Quantity::L2Partial => "l2_partial",
    };
    let path = run.out.join(format!("sweep_{name}.csv"));
    if q == Quantity::L2Partial {
        let plan = &run.scenario.plan;
        if plan.rays.is_empty() {
            return Err(Failure::Schema("l2-partial needs rays in the sampling plan".into()));
        }
        let r0 = plan.radii.iter().copied().fold(f64::INFINITY, f64::min);
        let r0 = if r0.is_finite() { r0 } else { 1.0 };
        let r_max = plan.r_max.unwrap_or(400.0);
        let jobs: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| plan.rays.iter().map(move |&t| (a, t))).collect();
        let reps = jobs
            .par_iter()
            .map(|&(a, t)| {
                let dir = Complex64::from_polar(1.0, t);
                l2_along_ray(|l| theta_at(&spec, a, l, &kopts).map(|v| v.0), dir * r0, dir, r_max, 1e-4)
            })
            .collect::<fsskit::Result<Vec<_>>>()?;
        let mut t = Table::new(&["alpha", "arg", "r0", "R", "partial", "error_estimate", "last_change"]);
        for ((a, arg), rep) in jobs.iter().zip(&reps) {
            for (r, v) in rep.partials {
                t.push(Row::new().f(*a).f(*arg).f(r0).f(r).f(v).f(rep.error_estimate).f(rep.last_change));
            }
        }
        return t.write(&path);
    }
    let jobs: Vec<(f64, Complex64)> = alphas
        .iter()
        .flat_map(|&a| run.scenario.plan.lambda_points().into_iter().map(move |l| (a, l)))
        .collect();
    if jobs.is_empty() {
        return Err(Failure::Schema("the sampling plan has no lambda values".into()));
    }
    let vals = jobs
        .par_iter()
        .map(|&(a, l)| -> fsskit::Result<(f64, f64)> {
            match q {
                Quantity::Theta => theta_at(&spec, a, l, &kopts),
                Quantity::Gamma => Ok((spec.gamma(a, l)?, 0.0)),
                Quantity::ResidualSup => {
                    let sys = build_fss(&spec, a, sector_of(&spec, l)?, l, &opts)?;
                    Ok((extract_residuals(&sys)?.max, sys.max_residual()))
                }
                Quantity::L2Partial => unreachable!(),
            }
        })
        .collect::<fsskit::Result<Vec<_>>>()?;
    let mut t = Table::new(&["alpha", "lambda*", "modulus", "arg", "value", "error_estimate"]);
    for ((a, l), (v, e)) in jobs.iter().zip(vals) {
        t.push(Row::new().f(*a).c(*l).f(l.norm()).f(l.arg()).f(v).f(e));
    }
    t.write(&path)
}

#[derive(Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Kind {
    /// Decides the exit status.
    Certificate,
    /// Reported only.
    Trend,
}

#[derive(Serialize)]
struct Check {
    id: String,
    kind: Kind,
    value: f64,
    tolerance: f64,
    pass: bool,
    detail: String,
}

fn check(id: impl Into<String>, kind: Kind, value: f64, tolerance: f64, pass: bool, detail: impl Into<String>) -> Check {
    Check { id: id.into(), kind, value, tolerance, pass, detail: detail.into() }
}

fn verify_system(run: &Run, spec: &System, checks: &mut Vec<Check>) -> Outcome {
    let s = &run.scenario;
    let opts = solve_opts(s, false);
    let slack = tol(s, "ratio_slack");
    let res_tol = tol(s, "residual");

    for &alpha in &s.alphas {
        let t_cut = cutoff(spec, alpha, &opts.kernel)?;
        let p = Propagator::solve(spec, alpha, t_cut, &default_ode_options())?;
        let r = p.check(spec)?;
        let ok = r.anchor_is_identity
            && r.min_abs_det > 1e-6
            && r.block_zero_exact
            && r.sup_m <= r.exp_a * (1.0 + 1e-12)
            && r.sup_minv <= r.exp_a * (1.0 + 1e-12)
            && r.commutation <= 1e-9;
        checks.push(check(
            format!("propagator alpha={alpha}"),
            Kind::Certificate,
            r.commutation,
            1e-9,
            ok,
            format!("min|det| {:.4}, sup|M| {:.4}, sup|M^-1| {:.4}, e^a {:.4}", r.min_abs_det, r.sup_m, r.sup_minv, r.exp_a),
        ));
    }

    let pts = lambdas(run)?;
    let jobs: Vec<(f64, Complex64)> = s.alphas.iter().flat_map(|&a| pts.iter().map(move |&l| (a, l))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(a, l)| ((a, l), sector_of(spec, l).and_then(|k| build_fss(spec, a, k, l, &opts))))
        .collect();
    let (ok, failed) = triage(results)?;
    for ((a, l), msg) in &failed {
        eprintln!("threshold diagnostic: alpha = {a}, lambda = {l:.4}: {msg}");
        checks.push(check(format!("contraction alpha={a} lambda={l:.4}"), Kind::Certificate, f64::NAN, 0.5, false, msg.clone()));
    }
    let mut bound = 0.0f64;
    let mut excess = f64::NEG_INFINITY;
    let mut res = 0.0f64;
    for (_, sys) in &ok {
        for c in &sys.columns {
            bound = bound.max(c.cert.bound.bound_v2);
            excess = excess.max(c.cert.observed_ratio - c.cert.bound.bound_v2);
        }
        res = res.max(sys.max_residual());
    }
    if !ok.is_empty() {
        let n = ok.len();
        checks.push(check("contraction bound_V2", Kind::Certificate, bound, 0.5, bound < 0.5, format!("{n} systems")));
        checks.push(check("observed ratio - bound_V2", Kind::Certificate, excess, slack, excess <= slack, format!("{n} systems")));
        checks.push(check("integral residual (fss)", Kind::Certificate, res, res_tol, res < res_tol, format!("{n} systems")));

        // the residual check must see a perturbed solution
        let c = &ok[0].1.columns[0];
        let eps = tol(s, "perturbation");
        let bump = BcVector::from_fn(c.z.grid.clone(), spec.n(), |j, _| Complex64::new(if j == 0 { 1.0 } else { 0.0 }, 0.0));
        let r = integral_residual(&c.ctx, c.lambda, &c.forcing, &c.z.axpy(Complex64::new(eps, 0.0), &bump))?;
        checks.push(check("perturbation detected", Kind::Certificate, r, eps / 2.0, r > eps / 2.0, format!("z + {eps:e} e_1")));
    }

    // large sectors
    let n = spec.n();
    let mut ljobs = Vec::new();
    for &m in &s.plan.large_sectors {
        let ls = large_sector(n, m, n == 2)?;
        for &alpha in &s.alphas {
            ljobs.extend(pts.iter().filter(|l| ls.omega_m.contains(**l, 1e-12)).map(|&l| (alpha, l, m)));
        }
    }
    if !ljobs.is_empty() {
        let results: Vec<_> = ljobs
            .par_iter()
            .map(|&(a, l, m)| ((a, l, m), build_large_sector(spec, a, m, l, None, &opts)))
            .collect();
        let (lok, lfailed) = triage(results)?;
        for ((a, l, m), msg) in &lfailed {
            eprintln!("threshold diagnostic: alpha = {a}, lambda = {l:.4}, m = {m}: {msg}");
            checks.push(check(format!("contraction m={m} alpha={a} lambda={l:.4}"), Kind::Certificate, f64::NAN, 0.5, false, msg.clone()));
        }
        let r = lok.iter().fold(0.0f64, |m, (_, sys)| m.max(sys.max_residual()));
        if !lok.is_empty() {
            checks.push(check("integral residual (large sectors)", Kind::Certificate, r, res_tol, r < res_tol, format!("{} systems", lok.len())));
        }
    }

    // Laurent term: gamma_alpha <= sqrt(K_alpha) beyond phi(alpha)
    if spec.laurent_order() > 0 {
        for &alpha in &s.alphas {
            let phi = spec.phi(alpha)?;
            if !phi.is_finite() {
                continue;
            }
            let k = spec.laurent_mass(alpha)?;
            let mut sup = 0.0f64;
            for f in [1.0, 1.1, 1.5, 2.0, 4.0, 10.0, 100.0] {
                for i in 0..24 {
                    sup = sup.max(spec.gamma(alpha, Complex64::from_polar(phi * f, 2.0 * PI * i as f64 / 24.0))?);
                }
            }
            let t = k.sqrt();
            checks.push(check(format!("gamma bound alpha={alpha}"), Kind::Certificate, sup, t, sup <= t * (1.0 + 1e-12), format!("phi {phi:.4}")));
        }
    }

    // empirical trends
    if !s.plan.rays.is_empty() && failed.is_empty() {
        let mut prev = f64::INFINITY;
        for &alpha in &s.alphas {
            match fss_lambda_alpha(spec, alpha, &s.plan.rays, &opts.kernel, &threshold_opts(s)) {
                Ok(rep) => {
                    let v = rep.lambda_alpha;
                    checks.push(check(format!("threshold alpha={alpha}"), Kind::Trend, v, prev, v <= prev * (1.0 + 1e-12), format!("phi {:.4}", rep.phi)));
                    prev = v;
                }
                Err(e @ Error::BelowThreshold { .. }) => {
                    checks.push(check(format!("threshold alpha={alpha}"), Kind::Trend, f64::INFINITY, prev, false, e.to_string()));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    if s.plan.radii.len() >= 2 {
        let (r_lo, r_hi) = s.plan.radii.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        let alpha = s.alphas[0];
        for &arg in &s.plan.rays {
            let sup = |r: f64| -> Option<f64> {
                let (_, sys) = ok.iter().find(|((a, l), _)| *a == alpha && (l.norm() - r).abs() < 1e-12 && (l.arg() - Complex64::from_polar(r, arg).arg()).abs() < 1e-12)?;
                extract_residuals(sys).ok().map(|r| r.max)
            };
            if let (Some(lo), Some(hi)) = (sup(r_lo), sup(r_hi)) {
                let ratio = hi / lo;
                checks.push(check(
                    format!("residual decay arg={arg:.4}"),
                    Kind::Trend,
                    ratio,
                    r_lo / r_hi,
                    hi < lo || hi <= 1e-12,
                    format!("sup|s| {lo:.4e} at |lambda| = {r_lo}, {hi:.4e} at {r_hi}"),
                ));
            }
        }
    }
    Ok(())
}

pub fn verify(run: &Run) -> Outcome {
    let mut checks = Vec::new();
    if run.scenario.system.is_some() {
        verify_system(run, &spec(run)?, &mut checks)?;
    }
    if run.scenario.pencil.is_some() {
        let (entries, failed) = pencil_reports(run, None)?;
        for (a, z, msg) in failed {
            eprintln!("threshold diagnostic: alpha = {a}, z = {z:.4}: {msg}");
            checks.push(check(format!("pencil contraction alpha={a} z={z:.4}"), Kind::Certificate, f64::NAN, 0.5, false, msg));
        }
        for e in entries {
            let r = e.report.residual[0].max(e.report.residual[1]);
            checks.push(check(
                format!("pencil residual alpha={} z={:?}", e.alpha, e.report.z),
                Kind::Certificate,
                r,
                e.tolerance,
                e.pass,
                format!("det at alpha {:.4e}, integral residual {:.2e}", e.report.det_alpha, e.report.integral_residual),
            ));
        }
    }

    let mut t = Table::new(&["id", "kind", "value", "tolerance", "pass", "detail"]);
    for c in &checks {
        let kind = if c.kind == Kind::Certificate { "certificate" } else { "trend" };
        t.push(Row::new().s(c.id.clone()).s(kind).f(c.value).f(c.tolerance).b(c.pass).s(c.detail.clone()));
    }
    t.write(&run.out.join("verify.csv"))?;
    let failed: Vec<&Check> = checks.iter().filter(|c| c.kind == Kind::Certificate && !c.pass).collect();
    #[derive(Serialize)]
    struct Report<'a> {
        scenario: &'a str,
        seed: Option<u64>,
        certificates_pass: bool,
        checks: &'a [Check],
    }
    write_json(
        &run.out.join("verify.json"),
        &Report { scenario: &run.scenario.name, seed: run.scenario.plan.seed, certificates_pass: failed.is_empty(), checks: &checks },
    )?;
    let certs = checks.iter().filter(|c| c.kind == Kind::Certificate).count();
    eprintln!("{}: {}/{certs} certificates pass", run.scenario.name, certs - failed.len());
    match failed.first() {
        None => Ok(()),
        Some(c) => Err(Failure::Certificate(format!("{} failed ({} in total): {}", c.id, failed.len(), c.detail))),
    }
}
