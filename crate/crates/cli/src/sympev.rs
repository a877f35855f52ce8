use rayon::prelude::*;
use serde::Serialize;
use spopt_core::applications::{spsd_test_matrix, symplectic_eigenpairs, SymplecticSpectrum};
use spopt_core::optimizer::SolverOptions;

use crate::config::{Application, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, table_csv, trace_csv, worker_pool, write_atomic, write_json};
use crate::scheme::Scheme;
use crate::target::{status_name, RunSummary};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SympevSummary {
    #[serde(flatten)]
    pub run: RunSummary,
    pub values: Vec<f64>,
    pub truth: Vec<f64>,
    pub l1_error: f64,
    /// `2 Σ d_j` over the `k` smallest true values.
    pub optimal_cost: f64,
    pub cost_error: f64,
    /// Smallest cost over all iterates.
    pub min_trace_cost: f64,
    pub max_residual: f64,
    pub orthogonality_defect: f64,
    pub time_per_step: f64,
}

#[derive(Debug, Clone)]
pub struct SympevRun {
    pub scheme: Scheme,
    pub spectrum: SymplecticSpectrum,
    pub summary: SympevSummary,
}

#[derive(Debug, Clone)]
pub struct SympevReport {
    pub truth: Vec<f64>,
    pub runs: Vec<SympevRun>,
}

pub fn sympev_options(config: &ExperimentConfig) -> CliResult<SolverOptions> {
    config.solver.apply(SolverOptions {
        niter: 5000,
        gtol: 1e-12,
        gamma_max: 1.0,
        record_time: config.record_time,
        ..SolverOptions::default()
    })
}

pub fn run_sympev(config: &ExperimentConfig) -> CliResult<SympevReport> {
    config.check_application(Application::Sympev)?;
    let schemes = config.schemes_for(Application::Sympev)?;
    let c = &config.sympev;
    let n = c.n.unwrap_or(if config.paper_scale { 1000 } else { 100 });
    if c.k == 0 || c.k > n {
        return Err(CliError::Config(format!("sympev: k = {} must lie in [1, n = {n}]", c.k)));
    }
    if c.m == 0 || c.m >= n || (n as f64 / 5.0).round() < 2.0 {
        return Err(CliError::Config(format!("sympev: need 0 < m < n and n ≥ 8, got m = {}, n = {n}", c.m)));
    }
    let (a, values) = spsd_test_matrix(n, c.m, config.seed)?;
    let truth: Vec<f64> = values[..c.k].to_vec();
    let optimal_cost = 2.0 * truth.iter().sum::<f64>();
    let base = sympev_options(config)?;
    let out = config.output_dir();
    let pool = worker_pool()?;
    let runs: Vec<SympevRun> = pool.install(|| {
        schemes
            .par_iter()
            .map(|&scheme| {
                let mut opts = scheme.options(&base);
                opts.metric = config.solver.metric(scheme);
                let spectrum = symplectic_eigenpairs(&a, c.k, &opts)?;
                let file = format!("sympev_{scheme}.csv");
                write_atomic(&out.join(&file), trace_csv(&spectrum.solver.trace).as_bytes())?;
                let run = RunSummary::new("spsd", scheme, &spectrum.solver, file);
                let l1_error = spectrum.values.iter().zip(&truth).map(|(d, t)| (d - t).abs()).sum();
                let records = &spectrum.solver.trace.records;
                let steps = run.iterations.max(1) as f64;
                let summary = SympevSummary {
                    values: spectrum.values.clone(),
                    truth: truth.clone(),
                    l1_error,
                    optimal_cost,
                    cost_error: (run.final_cost - optimal_cost).abs(),
                    min_trace_cost: records.iter().map(|r| r.cost).fold(f64::INFINITY, f64::min),
                    max_residual: spectrum.residuals.iter().map(|&(p, q)| p.max(q)).fold(0.0, f64::max),
                    orthogonality_defect: spectrum.orthogonality_defect,
                    time_per_step: run.time_s / steps,
                    run,
                };
                Ok(SympevRun {
                    scheme,
                    spectrum,
                    summary,
                })
            })
            .collect::<CliResult<_>>()
    })?;

    let mut rows = Vec::new();
    for r in &runs {
        for (j, (d, t)) in r.spectrum.values.iter().zip(&truth).enumerate() {
            let (ru, rv) = r.spectrum.residuals[j];
            rows.push(format!("{},{},{},{},{},{}", r.scheme, j + 1, num(*d), num(*t), num(ru), num(rv)));
        }
    }
    write_atomic(
        &out.join("sympev_values.csv"),
        table_csv("scheme,j,value,truth,residual_u,residual_v", &rows).as_bytes(),
    )?;
    if config.record_time {
        let rows: Vec<String> = runs
            .iter()
            .map(|r| {
                let s = &r.summary;
                format!(
                    "{},{},{},{},{}",
                    r.scheme,
                    status_name(r.spectrum.status()),
                    s.run.iterations,
                    num(s.run.time_s),
                    num(s.time_per_step)
                )
            })
            .collect();
        write_atomic(
            &out.join("sympev_timing.csv"),
            table_csv("scheme,status,iterations,time_s,time_per_step_s", &rows).as_bytes(),
        )?;
    }
    let summaries: Vec<&SympevSummary> = runs.iter().map(|r| &r.summary).collect();
    write_json(&out.join("sympev_summary.json"), &summaries)?;
    Ok(SympevReport { truth, runs })
}
