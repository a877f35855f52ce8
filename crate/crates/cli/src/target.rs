use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use spopt_core::applications::{sum_gate, TargetProblem};
use spopt_core::optimizer::{minimize, SolverOptions, SolverResult, SolverStatus};
use spopt_core::symplectic::SymplecticPoint;

use crate::config::{Application, ExperimentConfig, TargetPreset};
use crate::error::{CliError, CliResult};
use crate::output::{trace_csv, worker_pool, write_atomic, write_json};
use crate::scheme::Scheme;

/// Per-(preset, scheme) summary; totals agree with the trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub preset: String,
    pub scheme: Scheme,
    pub status: String,
    pub iterations: usize,
    pub final_cost: f64,
    pub final_grad_norm: f64,
    pub final_feasibility: f64,
    pub max_feasibility: f64,
    pub total_backtracks: usize,
    pub time_s: f64,
    pub trace_file: String,
}

impl RunSummary {
    pub fn new(preset: &str, scheme: Scheme, result: &SolverResult, trace_file: String) -> Self {
        let last = result.trace.last().expect("trace has the initial record");
        RunSummary {
            preset: preset.to_string(),
            scheme,
            status: status_name(result.status).to_string(),
            iterations: result.trace.iterations(),
            final_cost: last.cost,
            final_grad_norm: last.grad_norm,
            final_feasibility: last.feasibility,
            max_feasibility: result.trace.records.iter().map(|r| r.feasibility).fold(0.0, f64::max),
            total_backtracks: result.trace.records.iter().map(|r| r.backtracks).sum(),
            time_s: last.time_s,
            trace_file,
        }
    }
}

pub fn status_name(s: SolverStatus) -> &'static str {
    match s {
        SolverStatus::GradToleranceReached => "converged",
        SolverStatus::MaxIterations => "max_iterations",
        SolverStatus::LineSearchFailed => "line_search_failed",
    }
}

#[derive(Debug, Clone)]
pub struct TargetRun {
    pub preset: TargetPreset,
    pub scheme: Scheme,
    pub result: SolverResult,
    pub summary: RunSummary,
}

#[derive(Debug, Clone)]
pub struct TargetReport {
    pub runs: Vec<TargetRun>,
}

/// Seeded symmetric matrix `(G + Gᵀ)/2` with standard normal `G`.
pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    (&g + g.transpose()) * 0.5
}

/// Problem, starting point and solver settings of a preset.
pub fn target_setup(
    preset: TargetPreset,
    config: &ExperimentConfig,
) -> CliResult<(TargetProblem, SymplecticPoint, SolverOptions)> {
    let base = |niter, gtol| SolverOptions {
        niter,
        gtol,
        record_time: config.record_time,
        ..SolverOptions::default()
    };
    match preset {
        TargetPreset::Sum | TargetPreset::Saddle => {
            let w = sum_gate().into_matrix();
            let x0 = if preset == TargetPreset::Sum {
                DMatrix::identity(4, 4)
            } else {
                let d = [1.728, -1.2, 1.0 / 1.728, -1.0 / 1.2];
                DMatrix::from_fn(4, 4, |i, j| if i == j { d[i] } else { 0.0 })
            };
            Ok((TargetProblem::new(w)?, SymplecticPoint::new(x0)?, base(500, 1e-12)))
        }
        TargetPreset::Artificial => {
            let n = config
                .target
                .artificial_n
                .unwrap_or(if config.paper_scale { 200 } else { 20 });
            if n == 0 {
                return Err(CliError::Config("target: artificial_n must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let v = random_symmetric(n, &mut rng);
            let y = random_symmetric(n, &mut rng);
            let mut w = DMatrix::identity(2 * n, 2 * n);
            w.view_mut((n, 0), (n, n)).copy_from(&v);
            let mut x0 = DMatrix::identity(2 * n, 2 * n);
            x0.view_mut((0, n), (n, n)).copy_from(&y);
            Ok((TargetProblem::new(w)?, SymplecticPoint::new(x0)?, base(1000, 1e-10)))
        }
    }
}

pub fn run_target(config: &ExperimentConfig) -> CliResult<TargetReport> {
    config.check_application(Application::Target)?;
    let schemes = config.schemes_for(Application::Target)?;
    if config.target.presets.is_empty() {
        return Err(CliError::Config("target: preset list is empty".into()));
    }
    let out = config.output_dir();
    let mut cells = Vec::new();
    for &preset in &config.target.presets {
        let (problem, x0, base) = target_setup(preset, config)?;
        let base = config.solver.apply(base)?;
        for &scheme in &schemes {
            let mut opts = scheme.options(&base);
            opts.metric = config.solver.metric(scheme);
            cells.push((preset, scheme, problem.clone(), x0.clone(), opts));
        }
    }
    let pool = worker_pool()?;
    let runs: Vec<TargetRun> = pool.install(|| {
        cells
            .into_par_iter()
            .map(|(preset, scheme, problem, x0, opts)| {
                let result = minimize(&problem, x0, &opts)?;
                let file = format!("target_{}_{}.csv", preset.name(), scheme);
                write_atomic(&out.join(&file), trace_csv(&result.trace).as_bytes())?;
                let summary = RunSummary::new(preset.name(), scheme, &result, file);
                Ok(TargetRun {
                    preset,
                    scheme,
                    result,
                    summary,
                })
            })
            .collect::<CliResult<_>>()
    })?;
    let summaries: Vec<&RunSummary> = runs.iter().map(|r| &r.summary).collect();
    write_json(&out.join("target_summary.json"), &summaries)?;
    Ok(TargetReport { runs })
}
