//! The five subcommands. Each writes its files through a [`Sink`] and
//! returns the list of written paths; a numerical failure discovered after
//! the data was written is reported alongside it.

use crate::config::{BranchArg, KOrder, LawSpec, RunConfig, Suite};
use crate::output::{Cell, Sink};
use crate::CliError;
use ferrojet::checks::{self, CheckRow};
use ferrojet::dispersion::{DispersionProfile, Regime};
use ferrojet::dno::DnoOptions;
use ferrojet::operators::KMode;
use ferrojet::solver::{
    convergence_study, gzcs_grid, gzcs_resolution, reconstruct_eta, solve_pfdkdv, solve_pfdnls,
    solve_stationary_kdv, solve_stationary_nls, solve_truncated_gzcs, Branch, GzcsSpec, NewtonOptions, ReducedConfig, Sign,
    SolveReport, StudySpec, SCALED_HALF_LENGTH, SCALED_N,
};
use ferrojet::spectral::{CutoffSpec, SpectralGrid};
use ferrojet::wnl::{coeffs_for, WnlCoeffs};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

/// Files written plus an optional failure to report after writing.
pub struct Outcome {
    pub files: Vec<String>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn done(sink: Sink) -> Self {
        Outcome { files: sink.written, failure: None }
    }

    fn failed_if(sink: Sink, failure: Option<CliError>) -> Self {
        Outcome { files: sink.written, failure }
    }
}

const DISPERSION_K_MAX: f64 = 10.0;
const DISPERSION_SAMPLES: usize = 1024;

pub fn dispersion(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let gamma = cfg.require_gamma()?;
    let p = DispersionProfile::new(gamma)?;
    let k_max = cfg.grid_l.unwrap_or(DISPERSION_K_MAX);
    let n = cfg.grid_n.unwrap_or(DISPERSION_SAMPLES);
    let mut sink = Sink::new(&cfg.out)?;
    sink.csv_f64(
        "dispersion.csv",
        &["k", "f", "c_squared", "g"],
        (0..=n).map(|j| {
            let k = k_max * j as f64 / n as f64;
            vec![k, p.f(k), p.c_squared(k), p.g(k)]
        }),
    )?;
    let w = p.omega;
    let summary = json!({
        "gamma": gamma,
        "regime": p.regime,
        "omega": w,
        "c0_squared": p.c0_squared,
        "g_at_omega": p.g(w),
        "g_prime_at_omega": if p.regime == Regime::Weak { p.g_prime_fd(w) } else { 0.0 },
        "g_second_at_omega": p.g_second_fd(w),
        "k_max": k_max,
        "intervals": n,
    });
    sink.json("dispersion.json", &summary)?;
    println!("dispersion: gamma = {gamma}, regime {:?}, omega = {w}, c0^2 = {}", p.regime, p.c0_squared);
    Ok(Outcome::done(sink))
}

#[derive(Serialize)]
struct WnlDoc<'a> {
    law: LawSpec,
    d0: Option<f64>,
    a1: Option<f64>,
    a2: Option<f64>,
    a3: Option<f64>,
    coefficients: &'a WnlCoeffs,
    extraction: &'a ferrojet::operators::Extraction,
    checks: &'a [CheckRow],
    all_passed: bool,
}

pub fn wnl(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let gamma = cfg.require_gamma()?;
    let law = cfg.law.build();
    let c = coeffs_for(gamma, &law)?;
    let (rows, ex) = checks::extraction_suite(gamma, &law)?;
    let ok = checks::all_passed(&rows);
    let doc = WnlDoc {
        law: cfg.law,
        d0: c.kdv.map(|k| k.d0),
        a1: c.nls.map(|n| n.a1),
        a2: c.nls.map(|n| n.a2),
        a3: c.nls.map(|n| n.a3),
        coefficients: &c,
        extraction: &ex,
        checks: &rows,
        all_passed: ok,
    };
    let mut sink = Sink::new(&cfg.out)?;
    sink.json("wnl.json", &doc)?;
    print_rows("wnl extraction", &rows);
    if let Some(d) = &ex.d_reading {
        println!("D(omega) resolved as {d}");
    }
    let failure = (!ok).then(|| CliError::Numerical("extraction comparisons exceeded their tolerance".into()));
    Ok(Outcome::failed_if(sink, failure))
}

fn resolve_branch(cfg: &RunConfig, gamma: f64) -> Result<BranchArg, CliError> {
    let regime = Regime::classify(gamma)?;
    let b = match (cfg.branch, regime) {
        (_, Regime::Critical) => return Err(CliError::Validation("gamma = 9 admits neither scaling".into())),
        (Some(b), _) => b,
        (None, Regime::Strong) => BranchArg::Kdv,
        (None, Regime::Weak) => BranchArg::NlsPlus,
    };
    match (b, regime) {
        (BranchArg::Kdv, Regime::Weak) => Err(CliError::Validation(format!("branch kdv needs 1 < gamma < 9, got {gamma}"))),
        (BranchArg::NlsPlus | BranchArg::NlsMinus, Regime::Strong) => {
            Err(CliError::Validation(format!("nls branches need gamma > 9, got {gamma}")))
        }
        _ => Ok(b),
    }
}

fn sign_of(b: BranchArg) -> Sign {
    if b == BranchArg::NlsMinus {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

fn reduced_config(cfg: &RunConfig, gamma: f64) -> Result<ReducedConfig, CliError> {
    if let Some(d) = cfg.delta {
        let c = coeffs_for(gamma, &cfg.law.build())?;
        CutoffSpec::new(d, c.omega)?;
    }
    let mut newton = NewtonOptions::default();
    if let Some(t) = cfg.tol {
        newton.tol = t;
    }
    Ok(ReducedConfig { delta: cfg.delta, newton })
}

fn scaled_grid(cfg: &RunConfig) -> Result<std::sync::Arc<SpectralGrid>, CliError> {
    Ok(SpectralGrid::new(cfg.grid_l.unwrap_or(SCALED_HALF_LENGTH), cfg.grid_n.unwrap_or(SCALED_N))?)
}

fn gzcs_spec(cfg: &RunConfig, gamma: f64, eps: f64, branch: BranchArg) -> Result<GzcsSpec, CliError> {
    let mut s = GzcsSpec::new(gamma, eps);
    s.law = cfg.law.build();
    s.sign = sign_of(branch);
    s.mode = match cfg.k_order {
        KOrder::Zero => KMode::Expansion(0),
        KOrder::One => KMode::Expansion(1),
        KOrder::Two => KMode::Expansion(2),
        KOrder::Oracle => KMode::Oracle(DnoOptions::default()),
    };
    s.grid = match (cfg.grid_l, cfg.grid_n) {
        (None, None) => None,
        (Some(l), n) => Some((l, n.map_or_else(|| gzcs_resolution(gamma, l), Ok)?)),
        (None, Some(n)) => Some((gzcs_grid(gamma, eps)?.0, n)),
    };
    if let Some(t) = cfg.tol {
        s.newton.tol = t;
    }
    Ok(s)
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    law: LawSpec,
    k_order: Option<KOrder>,
    #[serde(flatten)]
    report: &'a SolveReport,
}

/// One solve of `branch` (stationary amplitude equation when eps is None).
fn solve_one(cfg: &RunConfig, gamma: f64, branch: BranchArg, eps: Option<f64>) -> Result<SolveReport, CliError> {
    let law = cfg.law.build();
    let rep = match (branch, eps) {
        (BranchArg::Gzcs, Some(e)) => solve_truncated_gzcs(&gzcs_spec(cfg, gamma, e, branch)?)?,
        (BranchArg::Gzcs, None) => return Err(CliError::Validation("branch gzcs needs --epsilon".into())),
        (BranchArg::Kdv, None) => solve_stationary_kdv(&coeffs_for(gamma, &law)?, &scaled_grid(cfg)?, None)?,
        (BranchArg::Kdv, Some(e)) => solve_pfdkdv(gamma, &law, e, &scaled_grid(cfg)?, &reduced_config(cfg, gamma)?)?,
        (b, None) => solve_stationary_nls(&coeffs_for(gamma, &law)?, &scaled_grid(cfg)?, sign_of(b))?,
        (b, Some(e)) => solve_pfdnls(gamma, &law, e, sign_of(b), &scaled_grid(cfg)?, &reduced_config(cfg, gamma)?)?,
    };
    Ok(rep)
}

fn write_solve(sink: &mut Sink, cfg: &RunConfig, rep: &SolveReport) -> Result<(), CliError> {
    let k_order = (rep.branch == Branch::Gzcs).then_some(cfg.k_order);
    sink.json("report.json", &ReportDoc { law: cfg.law, k_order, report: rep })?;
    let u = &rep.solution;
    let z = u.grid().nodes();
    let reference = rep.reference.as_ref().map(|r| r.samples().to_vec());
    let refv = |j: usize| reference.as_ref().map_or(f64::NAN, |r| r[j].re);
    match rep.branch {
        Branch::Gzcs => {
            let eta = u.real_samples();
            sink.csv_f64("profile.csv", &["z", "eta", "seed"], (0..z.len()).map(|j| vec![z[j], eta[j], refv(j)]))?;
        }
        Branch::Kdv => {
            let v = u.real_samples();
            sink.csv_f64("profile.csv", &["Z", "zeta", "zeta_kdv"], (0..z.len()).map(|j| vec![z[j], v[j], refv(j)]))?;
        }
        Branch::NlsPlus | Branch::NlsMinus => {
            let v = u.samples();
            sink.csv_f64(
                "profile.csv",
                &["Z", "zeta_re", "zeta_im", "zeta_nls"],
                (0..z.len()).map(|j| vec![z[j], v[j].re, v[j].im, refv(j)]),
            )?;
        }
    }
    if let (Some(e), true) = (rep.epsilon, rep.branch != Branch::Gzcs) {
        let c = coeffs_for(rep.gamma, &cfg.law.build())?;
        let (l, n) = gzcs_grid(rep.gamma, e)?;
        let target = SpectralGrid::new(l, n)?;
        let eta = reconstruct_eta(u, e, c.regime, c.omega, &target)?;
        let zz = target.nodes();
        let v = eta.real_samples();
        sink.csv_f64("eta.csv", &["z", "eta"], (0..zz.len()).map(|j| vec![zz[j], v[j]]))?;
    }
    Ok(())
}

fn not_converged(rep: &SolveReport) -> CliError {
    CliError::Numerical(format!(
        "{:?} solve at epsilon {:?} did not converge: {}",
        rep.branch,
        rep.epsilon,
        rep.message.clone().unwrap_or_default()
    ))
}

pub fn solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let gamma = cfg.require_gamma()?;
    let branch = resolve_branch(cfg, gamma)?;
    let eps = cfg.epsilons_sorted();
    let mut sink = Sink::new(&cfg.out)?;
    if eps.len() <= 1 {
        let rep = solve_one(cfg, gamma, branch, eps.first().copied())?;
        write_solve(&mut sink, cfg, &rep)?;
        summarize(&rep);
        let failure = (!rep.converged).then(|| not_converged(&rep));
        return Ok(Outcome::failed_if(sink, failure));
    }
    // ladder: members run concurrently, results are merged in epsilon order
    let reports: Vec<Result<SolveReport, CliError>> = eps.par_iter().map(|&e| solve_one(cfg, gamma, branch, Some(e))).collect();
    let mut failure = None;
    let mut index = Vec::new();
    for (&e, r) in eps.iter().zip(reports) {
        match r {
            Ok(rep) => {
                let mut sub = sink.sub(&format!("eps_{e}"))?;
                write_solve(&mut sub, cfg, &rep)?;
                sink.written.extend(sub.written);
                summarize(&rep);
                if !rep.converged && failure.is_none() {
                    failure = Some(not_converged(&rep));
                }
                index.push(json!({"epsilon": e, "converged": rep.converged, "dir": format!("eps_{e}")}));
            }
            Err(err) => {
                println!("epsilon {e}: {err}");
                index.push(json!({"epsilon": e, "converged": false, "error": err.to_string()}));
                failure.get_or_insert(err);
            }
        }
    }
    sink.json("ladder.json", &json!({ "branch": branch, "gamma": gamma, "members": index }))?;
    Ok(Outcome::failed_if(sink, failure))
}

fn summarize(rep: &SolveReport) {
    println!(
        "{:?} gamma={} eps={:?}: converged={} iterations={} residual={:.3e} reference_error={:?}",
        rep.branch, rep.gamma, rep.epsilon, rep.converged, rep.iterations, rep.final_residual_max, rep.reference_error
    );
}

fn print_rows(title: &str, rows: &[CheckRow]) {
    println!("{title}:");
    for r in rows {
        println!("  [{}] {:<52} {:>12.4e}  {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.measured, r.bound.describe());
    }
}

fn write_rows(sink: &mut Sink, name: &str, rows: &[CheckRow]) -> Result<(), CliError> {
    sink.csv(
        &format!("checks_{name}.csv"),
        &["name", "measured", "bound", "passed"],
        rows.iter().map(|r| vec![Cell::S(r.name.clone()), Cell::F(r.measured), Cell::S(r.bound.describe()), Cell::S(r.passed.to_string())]),
    )
}

const EXTRACTION_GAMMAS: [f64; 6] = [3.0, 5.0, 7.0, 10.0, 15.0, 30.0];

fn run_suite(cfg: &RunConfig, suite: Suite, sink: &mut Sink) -> Result<bool, CliError> {
    let (name, rows, extra) = match suite {
        Suite::Specfun => ("specfun", checks::specfun_suite(), json!(null)),
        Suite::Greens => {
            let (rows, table) = checks::greens_suite()?;
            for id in ["G", "H1", "H3"] {
                sink.csv_f64(
                    &format!("greens_{id}.csv"),
                    &["k", "r", "lhs", "rhs", "relerr"],
                    table.iter().filter(|t| t.identity == id).map(|t| vec![t.k, t.r, t.lhs, t.rhs, t.relerr]),
                )?;
            }
            ("greens", rows, json!(null))
        }
        Suite::Dno => ("dno", checks::dno_suite()?, json!(null)),
        Suite::Extraction => {
            let law = cfg.law.build();
            let gammas = cfg.gamma.map_or(EXTRACTION_GAMMAS.to_vec(), |g| vec![g]);
            let mut rows = Vec::new();
            let mut readings = Vec::new();
            for g in gammas {
                let (r, ex) = checks::extraction_suite(g, &law)?;
                rows.extend(r.into_iter().map(|mut c| {
                    c.name = format!("gamma={g}: {}", c.name);
                    c
                }));
                if let Some(d) = &ex.d_reading {
                    println!("gamma = {g}: D(omega) resolved as {d} (competing reading off by {:.3e})", ex.d_alternative_rel_err.unwrap_or(f64::NAN));
                }
                readings.push(ex);
            }
            ("extraction", rows, serde_json::to_value(&readings).unwrap_or_default())
        }
    };
    print_rows(name, &rows);
    write_rows(sink, name, &rows)?;
    let ok = checks::all_passed(&rows);
    sink.json(&format!("checks_{name}.json"), &json!({ "suite": name, "all_passed": ok, "rows": rows, "details": extra }))?;
    Ok(ok)
}

pub fn checks(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let suites = match cfg.suite {
        Some(s) => vec![s],
        None => vec![Suite::Specfun, Suite::Greens, Suite::Dno, Suite::Extraction],
    };
    let mut sink = Sink::new(&cfg.out)?;
    let mut failed = Vec::new();
    for s in suites {
        if !run_suite(cfg, s, &mut sink)? {
            failed.push(format!("{s:?}").to_lowercase());
        }
    }
    let failure = (!failed.is_empty()).then(|| CliError::Numerical(format!("failed suites: {}", failed.join(", "))));
    Ok(Outcome::failed_if(sink, failure))
}

fn default_ladder(branch: BranchArg) -> Vec<f64> {
    match branch {
        BranchArg::Kdv => vec![0.3, 0.2, 0.1, 0.05],
        _ => vec![0.2, 0.1, 0.05],
    }
}

pub fn converge(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let gamma = cfg.require_gamma()?;
    let branch = resolve_branch(cfg, gamma)?;
    let eps = if cfg.epsilon.is_empty() { default_ladder(branch) } else { cfg.epsilons_sorted() };
    let law = cfg.law.build();
    let spec = match branch {
        BranchArg::Kdv => StudySpec::Pfdkdv { gamma, law, cfg: reduced_config(cfg, gamma)? },
        BranchArg::NlsPlus | BranchArg::NlsMinus => {
            StudySpec::Pfdnls { gamma, law, sign: sign_of(branch), cfg: reduced_config(cfg, gamma)? }
        }
        BranchArg::Gzcs => {
            if cfg.grid_l.is_some() || cfg.grid_n.is_some() {
                return Err(CliError::Validation("converge derives the full-equation grid from each epsilon; drop --grid-l/--grid-n".into()));
            }
            StudySpec::Gzcs(gzcs_spec(cfg, gamma, eps[0], branch)?)
        }
    };
    let table = convergence_study(&spec, &eps)?;
    let mut sink = Sink::new(&cfg.out)?;
    sink.csv(
        "convergence.csv",
        &["epsilon", "error", "residual", "iterations", "converged"],
        table.rows.iter().map(|r| {
            vec![
                Cell::F(r.epsilon),
                Cell::F(r.error.unwrap_or(f64::NAN)),
                Cell::F(r.residual.unwrap_or(f64::NAN)),
                Cell::I(r.iterations.map_or(-1, |i| i as i64)),
                Cell::S(r.converged.to_string()),
            ]
        }),
    )?;
    let largest = table.rows.iter().filter(|r| r.converged).map(|r| r.epsilon).fold(None, |a: Option<f64>, e| Some(a.map_or(e, |a| a.max(e))));
    let error_kind = if branch == BranchArg::Gzcs { "normalized deviation" } else { "max |zeta - reference|" };
    sink.json(
        "convergence.json",
        &json!({
            "branch": branch, "gamma": gamma, "law": cfg.law, "error_measure": error_kind,
            "fit": table.fit, "complete": table.complete, "largest_converged_epsilon": largest, "rows": table.rows,
        }),
    )?;
    for r in &table.rows {
        println!("eps={:<6} error={:?} converged={} iterations={:?}", r.epsilon, r.error, r.converged, r.iterations);
    }
    if let Some(f) = table.fit {
        println!("fitted slope {:.4} (rms residual {:.3e})", f.slope, f.rms_residual);
    }
    let failure = (!table.complete).then(|| CliError::Numerical("partial table: at least one ladder member failed".into()));
    Ok(Outcome::failed_if(sink, failure))
}
