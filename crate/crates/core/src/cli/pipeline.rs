//! The four batch commands and their artifacts.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{CauchyDensity, ConfigError, RunConfig};
use crate::akns::{
    akns_residual, potential_bounds_check, reconstruct_potentials, solve_at, PotentialBound,
    PotentialSample,
};
use crate::cauchy::{cauchy_oracle, cauchy_transform, unit_disk_indicator_transform};
use crate::dbar::{
    dbar_residual, estimate_operator_norm, evolve_r, nilpotent_split, solve_psi, ComponentGrids,
    DbarOperator, HolderSampling, SolverConfig, EXP_SLACK,
};
use crate::error::{AknsError, DbarError};
use crate::field::ScalarField;
use crate::geometry::{QuadratureGrid, Region, C64};
use crate::report::{CheckRecord, Provenance, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Cauchy,
    Solve,
    Reconstruct,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Cauchy => "cauchy",
            Command::Solve => "solve",
            Command::Reconstruct => "reconstruct",
            Command::Verify => "verify",
        }
    }
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ExitStatus {
    Success = 0,
    /// A verification record failed, or an artifact could not be written.
    CheckFailed = 1,
    /// The Neumann iteration diverged or the small-norm predicate failed.
    SmallNormViolation = 2,
    NonConvergence = 3,
    ConfigError = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn of_solver_error(e: &DbarError) -> Self {
        match e {
            DbarError::Divergence { .. } => ExitStatus::SmallNormViolation,
            _ => ExitStatus::NonConvergence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub x: f64,
    pub error: String,
}

/// Body of report.json.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub exit_code: i32,
    #[serde(flatten)]
    pub report: VerificationReport,
    pub failures: Vec<Failure>,
    pub summary: BTreeMap<String, f64>,
}

/// Artifacts of one run, written by [`write_artifacts`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub status: ExitStatus,
    pub csv: Option<(String, String)>,
    pub report: RunReport,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write artifacts: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    pub fn status(&self) -> ExitStatus {
        match self {
            PipelineError::Config(_) => ExitStatus::ConfigError,
            PipelineError::Io(_) => ExitStatus::CheckFailed,
        }
    }
}

/// Fixed k points for the x-equation residual, off the real axis and the
/// unit circle.
const AKNS_K_SAMPLES: [(f64, f64); 6] = [
    (0.3, 0.4),
    (-0.5, -0.2),
    (1.3, 0.5),
    (-0.2, 1.4),
    (0.6, -0.1),
    (0.05, 0.02),
];

pub fn run_pipeline(config: &RunConfig, command: Command) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    let mut out = match command {
        Command::Cauchy => run_cauchy(config)?,
        Command::Solve => run_solve(config)?,
        Command::Reconstruct => run_reconstruct(config)?,
        Command::Verify => run_verify(config)?,
    };
    out.report.report.provenance = Some(Provenance {
        config_hash: config.hash(),
        seed: config.seed,
        nr: config.grid.nr,
        ntheta: config.grid.ntheta,
    });
    out.report.exit_code = out.status.code();
    Ok(out)
}

/// Writes the CSV (if any) and report.json into `dir`.
pub fn write_artifacts(out: &RunOutput, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some((name, body)) = &out.csv {
        std::fs::write(dir.join(name), body)?;
    }
    let mut body = serde_json::to_string_pretty(&out.report).map_err(std::io::Error::other)?;
    body.push('\n');
    std::fs::write(dir.join("report.json"), body)
}

fn new_output(command: Command) -> RunOutput {
    RunOutput {
        status: ExitStatus::Success,
        csv: None,
        report: RunReport {
            command: command.name().to_string(),
            exit_code: 0,
            report: VerificationReport::default(),
            failures: Vec::new(),
            summary: BTreeMap::new(),
        },
    }
}

fn csv_body(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn grids(config: &RunConfig) -> Result<Arc<ComponentGrids>, ConfigError> {
    ComponentGrids::new(config.grid.nr, config.grid.ntheta)
        .map(Arc::new)
        .map_err(|e| ConfigError::new("grid", e.to_string()))
}

/// Keeps the more severe of the current status and `s`.
fn escalate(out: &mut RunOutput, s: ExitStatus) {
    out.status = out.status.max(s);
}

fn run_cauchy(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    let mut out = new_output(Command::Cauchy);
    let cc = &config.cauchy;
    let data = config.data();
    let data = &data;
    let density = |z: C64| -> C64 {
        match cc.density {
            CauchyDensity::Indicator => C64::new(1.0, 0.0),
            CauchyDensity::RPlus => data.r_plus(z),
            CauchyDensity::RMinus => data.r_minus(z),
        }
    };
    let grid = Arc::new(
        QuadratureGrid::disk(C64::new(0.0, 0.0), 1.0, config.grid.nr, config.grid.ntheta)
            .map_err(|e| ConfigError::new("grid", e.to_string()))?,
    );
    let field = ScalarField::from_fn(grid.clone(), &density)
        .map_err(|e| ConfigError::new("preset", e.to_string()))?;
    let corrected = cauchy_transform(&field, &cc.targets)
        .map_err(|e| ConfigError::new("cauchy.targets", e.to_string()))?;
    let region = Region::Disk {
        center: C64::new(0.0, 0.0),
        radius: 1.0,
    };
    let oracle: Vec<C64> = cc
        .targets
        .iter()
        .map(|&k| cauchy_oracle(density, region, k, cc.oracle_n))
        .collect::<Result<_, _>>()
        .map_err(|e| ConfigError::new("cauchy", e.to_string()))?;
    let h_oracle = 2.0 / cc.oracle_n as f64;
    let mut rows = Vec::new();
    for (t, &k) in cc.targets.iter().enumerate() {
        for (v, scheme, h) in [
            (corrected.values[t], "corrected", corrected.h),
            (oracle[t], "oracle", h_oracle),
        ] {
            rows.push(vec![
                k.re.to_string(),
                k.im.to_string(),
                v.re.to_string(),
                v.im.to_string(),
                scheme.to_string(),
                h.to_string(),
            ]);
        }
    }
    out.csv = Some((
        "cauchy.csv".into(),
        csv_body(
            &["k_re", "k_im", "value_re", "value_im", "scheme", "h"],
            rows,
        ),
    ));
    let sup_f = field.sup_norm();
    let gap = corrected
        .values
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let r = &mut out.report.report;
    r.push(CheckRecord::upper(
        "scheme_agreement",
        gap,
        10.0 * (corrected.h + h_oracle) * sup_f,
        0.0,
    ));
    if cc.density == CauchyDensity::Indicator {
        let err = |vals: &[C64]| {
            cc.targets
                .iter()
                .zip(vals)
                .map(|(&k, v)| (v - unit_disk_indicator_transform(k)).norm())
                .fold(0.0, f64::max)
        };
        r.push(CheckRecord::upper(
            "closed_form_corrected",
            err(&corrected.values),
            0.0,
            5e-3,
        ));
        r.push(CheckRecord::upper(
            "closed_form_oracle",
            err(&oracle),
            0.0,
            1e-2,
        ));
    }
    if !out.report.report.all_pass() {
        escalate(&mut out, ExitStatus::CheckFailed);
    }
    Ok(out)
}

fn run_solve(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    let mut out = new_output(Command::Solve);
    let g = grids(config)?;
    let data = config.data();
    let xs = config.x_grid.points();
    let results: Vec<_> = xs
        .par_iter()
        .map(|&x| {
            let op = DbarOperator::new(g.clone(), &data, x)?;
            let sol = solve_psi(&op, config.solver)?;
            let dbar = dbar_residual(&op, &sol.psi);
            Ok::<_, DbarError>((
                x,
                sol.iterations,
                sol.residual,
                sol.contraction_ratio(),
                dbar,
                op.max_exponential,
            ))
        })
        .collect();
    let mut rows = Vec::new();
    let (mut worst_res, mut worst_dbar, mut worst_exp) = (0.0f64, 0.0f64, 0.0f64);
    for (x, r) in xs.iter().zip(results) {
        match r {
            Ok((x, it, res, rho, dbar, e)) => {
                worst_res = worst_res.max(res);
                worst_dbar = worst_dbar.max(dbar);
                worst_exp = worst_exp.max(e);
                rows.push(vec![
                    x.to_string(),
                    it.to_string(),
                    res.to_string(),
                    rho.map(|v| v.to_string()).unwrap_or_default(),
                    dbar.to_string(),
                ]);
            }
            Err(e) => {
                escalate(&mut out, ExitStatus::of_solver_error(&e));
                out.report.failures.push(Failure {
                    x: *x,
                    error: e.to_string(),
                });
            }
        }
    }
    out.csv = Some((
        "solve.csv".into(),
        csv_body(
            &[
                "x",
                "solver_iterations",
                "residual",
                "contraction_ratio",
                "dbar_residual",
            ],
            rows,
        ),
    ));
    let r = &mut out.report.report;
    r.push(CheckRecord::upper(
        "fixed_point_residual",
        worst_res,
        config.solver.tol,
        0.0,
    ));
    r.push(CheckRecord::upper(
        "exponential_bound",
        worst_exp,
        1.0,
        EXP_SLACK,
    ));
    out.report
        .summary
        .insert("max_dbar_residual".into(), worst_dbar);
    if !out.report.report.all_pass() {
        escalate(&mut out, ExitStatus::CheckFailed);
    }
    Ok(out)
}

fn potentials_csv(sample: &PotentialSample) -> (String, String) {
    let rows = (0..sample.x.len())
        .map(|i| {
            vec![
                sample.x[i].to_string(),
                sample.u[i].re.to_string(),
                sample.u[i].im.to_string(),
                sample.v[i].re.to_string(),
                sample.v[i].im.to_string(),
                sample.iterations[i].to_string(),
                sample.residual[i].to_string(),
            ]
        })
        .collect();
    (
        "potentials.csv".into(),
        csv_body(
            &[
                "x",
                "u_re",
                "u_im",
                "v_re",
                "v_im",
                "solver_iterations",
                "residual",
            ],
            rows,
        ),
    )
}

/// Reconstructs u, v on the x grid and records failures, residuals and the
/// potential bounds.
fn reconstruct_into(
    config: &RunConfig,
    out: &mut RunOutput,
    g: &Arc<ComponentGrids>,
) -> Result<PotentialSample, PipelineError> {
    let data = config.data();
    let params = config.norm_params()?;
    let sample =
        reconstruct_potentials(g, &data, &config.x_grid.points(), config.solver).map_err(|e| {
            match e {
                AknsError::ZeroInGrid => ConfigError::new("x_grid", e.to_string()),
                other => ConfigError::new("solver", other.to_string()),
            }
        })?;
    for (x, message) in &sample.failures {
        let status = if message.starts_with("Divergence") {
            ExitStatus::SmallNormViolation
        } else {
            ExitStatus::NonConvergence
        };
        escalate(out, status);
        out.report.failures.push(Failure {
            x: *x,
            error: message.clone(),
        });
    }
    let worst_res = sample.residual.iter().cloned().fold(0.0, f64::max);
    let r = &mut out.report.report;
    r.push(CheckRecord::upper(
        "fixed_point_residual",
        worst_res,
        config.solver.tol,
        0.0,
    ));
    let bounds = potential_bounds_check(&sample, &data, &params, PotentialBound::default())
        .map_err(|e| ConfigError::new("preset", e.to_string()))?;
    r.extend(bounds);
    let s = &mut out.report.summary;
    s.insert("sup_u".into(), sample.sup_u());
    s.insert("sup_v".into(), sample.sup_v());
    s.insert("l2_u".into(), sample.l2_u());
    s.insert("l2_v".into(), sample.l2_v());
    s.insert(
        "max_moment_diagonal".into(),
        sample.diagonal.iter().cloned().fold(0.0, f64::max),
    );
    Ok(sample)
}

fn run_reconstruct(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    let mut out = new_output(Command::Reconstruct);
    let g = grids(config)?;
    let sample = reconstruct_into(config, &mut out, &g)?;
    out.csv = Some(potentials_csv(&sample));
    if !out.report.report.all_pass() {
        escalate(&mut out, ExitStatus::CheckFailed);
    }
    Ok(out)
}

/// Grid points closest to +1 and -1 on each side of 0 that exist.
/// x rounded to six decimals for record names, so 0.8999999999999999 reads 0.9.
fn x_tag(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn probe_points(xs: &[f64]) -> Vec<f64> {
    let pick = |sign: f64| {
        xs.iter()
            .copied()
            .filter(|x| x * sign > 0.0)
            .min_by(|a, b| (a - sign).abs().total_cmp(&(b - sign).abs()))
    };
    [pick(1.0), pick(-1.0)].into_iter().flatten().collect()
}

fn run_verify(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    let mut out = new_output(Command::Verify);
    let g = grids(config)?;
    let data = config.data();
    let params = config.norm_params()?;
    let xs = config.x_grid.points();
    let probes = probe_points(&xs);
    let vc = config.verify;

    // exact structure of R at the nodes, every x
    let mut split_err = 0.0f64;
    let mut worst_exp = 0.0f64;
    for &x in &xs {
        for &k in &g.nodes {
            let r = evolve_r(&data, x, k);
            let w = nilpotent_split(&r);
            let e = (w.w_minus + w.w_plus - r).norm()
                + (w.w_minus * w.w_minus).norm()
                + (w.w_plus * w.w_plus).norm();
            split_err = split_err.max(e + r[(0, 0)].norm() + r[(1, 1)].norm());
        }
        match DbarOperator::new(g.clone(), &data, x) {
            Ok(op) => worst_exp = worst_exp.max(op.max_exponential),
            Err(e) => {
                return Err(ConfigError::new("x_grid", e.to_string()).into());
            }
        }
    }
    out.report
        .report
        .push(CheckRecord::upper("split_identity", split_err, 0.0, 0.0));
    out.report.report.push(CheckRecord::upper(
        "exponential_bound",
        worst_exp,
        1.0,
        EXP_SLACK,
    ));

    // randomized norm estimate against the observed contraction
    let ng = Arc::new(
        ComponentGrids::new(vc.norm_grid.nr, vc.norm_grid.ntheta)
            .map_err(|e| ConfigError::new("verify.norm_grid", e.to_string()))?,
    );
    let sampling = HolderSampling {
        pairs: vc.pairs,
        seed: config.seed,
        radius: 2.0,
    };
    let est = estimate_operator_norm(
        &ng,
        &data,
        &params,
        &probes,
        vc.trials,
        config.seed,
        &sampling,
    )
    .map_err(|e| ConfigError::new("verify", e.to_string()))?;
    let small = CheckRecord {
        name: "small_norm_predicate".into(),
        observed: est.norm_lower_bound,
        bound_or_target: 1.0,
        tolerance: 0.0,
        pass: est.small_norm(),
    };
    let small_pass = small.pass;
    out.report.report.push(small);
    out.report
        .summary
        .insert("norm_lower_bound".into(), est.norm_lower_bound);
    let mut rho_max = 0.0f64;
    for &x in &probes {
        let op = DbarOperator::new(ng.clone(), &data, x)
            .map_err(|e| ConfigError::new("x_grid", e.to_string()))?;
        let cfg = SolverConfig {
            tol: config.solver.tol,
            max_iter: config.solver.max_iter.max(200),
        };
        match solve_psi(&op, cfg) {
            Ok(sol) => rho_max = rho_max.max(sol.contraction_ratio().unwrap_or(0.0)),
            Err(e) => {
                escalate(&mut out, ExitStatus::of_solver_error(&e));
                out.report.failures.push(Failure {
                    x,
                    error: e.to_string(),
                });
            }
        }
    }
    out.report.report.push(CheckRecord::upper(
        "contraction_vs_norm_estimate",
        rho_max,
        est.norm_lower_bound,
        0.1,
    ));

    // potentials on the full grid
    let sample = reconstruct_into(config, &mut out, &g)?;
    out.csv = Some(potentials_csv(&sample));

    // Dbar and x-equation residuals at the probe points
    let ks: Vec<C64> = AKNS_K_SAMPLES
        .iter()
        .map(|&(a, b)| C64::new(a, b))
        .collect();
    let mut q_diag = 0.0f64;
    for &x in &probes {
        match solve_at(&g, &data, x, config.solver) {
            Ok((op, sol, m)) => {
                let q = m.q();
                q_diag = q_diag.max(q[(0, 0)].norm()).max(q[(1, 1)].norm());
                let d = dbar_residual(&op, &sol.psi);
                out.report
                    .summary
                    .insert(format!("dbar_residual_x{}", x_tag(x)), d);
            }
            Err(e) => {
                escalate(&mut out, ExitStatus::of_solver_error(&e));
                continue;
            }
        }
        let hx = vc.hx.min(0.5 * x.abs());
        let coarse = akns_residual(&g, &data, x, hx, &ks, config.solver);
        let fine = akns_residual(&g, &data, x, 0.5 * hx, &ks, config.solver);
        match (coarse, fine) {
            (Ok(a), Ok(b)) => {
                let name = format!("akns_residual_refinement_x{}", x_tag(x));
                let record = if a == 0.0 && b == 0.0 {
                    CheckRecord::upper(&name, 0.0, 0.0, 0.0)
                } else {
                    CheckRecord::lower(&name, a / b, 3.5, 0.0)
                };
                out.report.report.push(record);
                out.report
                    .summary
                    .insert(format!("akns_residual_x{}", x_tag(x)), b);
            }
            (Err(e), _) | (_, Err(e)) => {
                let status = match &e {
                    AknsError::Dbar(d) => ExitStatus::of_solver_error(d),
                    _ => ExitStatus::CheckFailed,
                };
                escalate(&mut out, status);
                out.report.failures.push(Failure {
                    x,
                    error: e.to_string(),
                });
            }
        }
    }

    out.report
        .report
        .push(CheckRecord::upper("q_off_diagonal", q_diag, 0.0, 0.0));

    if !small_pass {
        escalate(&mut out, ExitStatus::SmallNormViolation);
    }
    if !out.report.report.all_pass() {
        escalate(&mut out, ExitStatus::CheckFailed);
    }
    Ok(out)
}
