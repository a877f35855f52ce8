use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use spopt_core::models::{
    compute_basis, relative_errors, schrodinger_system, simulate_full, sine_gordon_system, vlasov_system, wave_system,
    ErrorReport, HamiltonianSystem, IntegratorOptions, ReducedBasis, ReducedSystem, Reduction, SchrodingerParams,
    SineGordonParams, Trajectory, WaveParams,
};
use spopt_core::optimizer::SolverOptions;

use crate::config::{Application, ExperimentConfig, ModelKind, MorSetup, Treatment};
use crate::error::CliResult;
use crate::output::{num, table_csv, trace_csv, worker_pool, write_atomic, write_json};
use crate::scheme::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    CotLift,
    Optimized(Scheme),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::CotLift => f.write_str("CotLift"),
            Method::Optimized(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorRow {
    pub model: String,
    pub k: usize,
    pub method: String,
    pub treatment: String,
    pub re_x: f64,
    pub re_h: f64,
    /// Full-order simulation time over reduced simulation time; present only
    /// when times are recorded.
    pub aaf: Option<f64>,
    pub projection_cost: f64,
    pub cotlift_cost: f64,
    /// `(cotlift_cost − projection_cost) / cotlift_cost`.
    pub cost_decrease: f64,
    pub basis_iterations: usize,
    pub deim_modes: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct MorResult {
    pub treatment: Treatment,
    pub rom: ReducedSystem,
    pub errors: ErrorReport,
    pub rom_time: f64,
    pub row: MorRow,
}

#[derive(Debug, Clone)]
pub struct MorCell {
    pub k: usize,
    pub method: Method,
    pub basis: ReducedBasis,
    pub results: Vec<MorResult>,
}

#[derive(Debug, Clone)]
pub struct MorReport {
    pub setup: MorSetup,
    pub system: HamiltonianSystem,
    pub full: Trajectory,
    pub cells: Vec<MorCell>,
}

impl MorReport {
    pub fn rows(&self) -> impl Iterator<Item = &MorRow> {
        self.cells.iter().flat_map(|c| c.results.iter().map(|r| &r.row))
    }

    pub fn find(&self, k: usize, method: Method, treatment: Treatment) -> Option<&MorResult> {
        self.cells
            .iter()
            .find(|c| c.k == k && c.method == method)?
            .results
            .iter()
            .find(|r| r.treatment == treatment)
    }
}

#[derive(Debug, Serialize)]
struct MorSummary<'a> {
    setup: &'a MorSetup,
    fom_steps: usize,
    fom_time_s: f64,
    initial_energy: f64,
    fom_energy_drift: f64,
    rows: Vec<&'a MorRow>,
}

pub fn build_system(setup: &MorSetup, seed: u64) -> CliResult<HamiltonianSystem> {
    Ok(match setup.model {
        ModelKind::Wave => wave_system(setup.n, WaveParams::default())?,
        ModelKind::SineGordon => sine_gordon_system(setup.n, SineGordonParams::default())?,
        ModelKind::Schrodinger => schrodinger_system(setup.n, SchrodingerParams::default())?,
        ModelKind::Vlasov => vlasov_system(setup.n, seed)?,
    })
}

pub fn mor_options(config: &ExperimentConfig) -> CliResult<SolverOptions> {
    config.solver.apply(SolverOptions {
        record_time: config.record_time,
        ..Reduction::default_options()
    })
}

fn run_cell(
    sys: &HamiltonianSystem,
    snapshots: &DMatrix<f64>,
    setup: &MorSetup,
    integ: &IntegratorOptions,
    full: &Trajectory,
    k: usize,
    method: Method,
    base: &SolverOptions,
    config: &ExperimentConfig,
) -> CliResult<MorCell> {
    let reduction = match method {
        Method::CotLift => Reduction::CotLift,
        Method::Optimized(s) => {
            let mut o = s.options(base);
            o.metric = config.solver.metric(s);
            Reduction::Optimized(o)
        }
    };
    let reference = setup.center.then(|| sys.initial_state());
    let basis = compute_basis(snapshots, k, &reduction, reference)?;
    let cotlift_cost = match &basis.optimization {
        Some(opt) => opt.trace.records[0].cost,
        None => basis.projection_cost,
    };
    let mut results = Vec::new();
    for &treatment in &setup.treatments {
        let rom = ReducedSystem::assemble(sys, snapshots, &basis, treatment.core())?;
        let traj = rom.simulate(sys, integ)?;
        let errors = relative_errors(sys, full, &rom, &traj)?;
        let row = MorRow {
            model: setup.model.name().to_string(),
            k,
            method: method.to_string(),
            treatment: treatment.name().to_string(),
            re_x: errors.re_x,
            re_h: errors.re_h,
            aaf: config.record_time.then(|| full.wall_time / traj.wall_time.max(f64::MIN_POSITIVE)),
            projection_cost: basis.projection_cost,
            cotlift_cost,
            cost_decrease: (cotlift_cost - basis.projection_cost) / cotlift_cost,
            basis_iterations: basis.optimization.as_ref().map_or(0, |o| o.trace.iterations()),
            deim_modes: rom.deim_indices().map(<[usize]>::len),
        };
        results.push(MorResult {
            treatment,
            rom,
            rom_time: traj.wall_time,
            errors,
            row,
        });
    }
    Ok(MorCell {
        k,
        method,
        basis,
        results,
    })
}

pub fn run_mor(config: &ExperimentConfig) -> CliResult<MorReport> {
    config.check_application(Application::Mor)?;
    let schemes = config.schemes_for(Application::Mor)?;
    let setup = config.mor.resolve(config.paper_scale)?;
    let base = mor_options(config)?;
    let sys = build_system(&setup, config.seed)?;
    let integ = IntegratorOptions::new(setup.ht, setup.t_final);
    let full = simulate_full(&sys, &integ)?;
    let snapshots = full.snapshots(setup.snapshots)?;

    let mut methods = Vec::new();
    if config.mor.cotlift {
        methods.push(Method::CotLift);
    }
    methods.extend(schemes.iter().map(|&s| Method::Optimized(s)));
    let cells: Vec<(usize, Method)> = setup
        .ks
        .iter()
        .flat_map(|&k| methods.iter().map(move |&m| (k, m)))
        .collect();
    let pool = worker_pool()?;
    let cells: Vec<MorCell> = pool.install(|| {
        cells
            .into_par_iter()
            .map(|(k, method)| run_cell(&sys, &snapshots, &setup, &integ, &full, k, method, &base, config))
            .collect::<CliResult<_>>()
    })?;

    let out = config.output_dir();
    let model = setup.model.name();
    for cell in &cells {
        if let Some(opt) = &cell.basis.optimization {
            let file = format!("mor_{model}_k{}_{}_trace.csv", cell.k, cell.method);
            write_atomic(&out.join(file), trace_csv(&opt.trace).as_bytes())?;
        }
    }
    let report = MorReport {
        setup,
        system: sys,
        full,
        cells,
    };
    let error_rows: Vec<String> = report
        .rows()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                r.model,
                r.k,
                r.method,
                r.treatment,
                num(r.re_x),
                num(r.re_h),
                r.aaf.map_or_else(|| "nan".to_string(), num),
                num(r.projection_cost),
                num(r.cost_decrease),
                r.basis_iterations
            )
        })
        .collect();
    write_atomic(
        &out.join(format!("mor_{model}_errors.csv")),
        table_csv(
            "model,k,method,treatment,re_x,re_h,aaf,projection_cost,cost_decrease,basis_iterations",
            &error_rows,
        )
        .as_bytes(),
    )?;
    if config.mor.series {
        let mut rows = Vec::new();
        for cell in &report.cells {
            for r in &cell.results {
                for (i, t) in report.full.times.iter().enumerate() {
                    rows.push(format!(
                        "{model},{},{},{},{},{},{}",
                        cell.k,
                        cell.method,
                        r.treatment.name(),
                        num(*t),
                        num(r.errors.state_series[i]),
                        num(r.errors.energy_series[i])
                    ));
                }
            }
        }
        write_atomic(
            &out.join(format!("mor_{model}_series.csv")),
            table_csv("model,k,method,treatment,t,state_error,energy_error", &rows).as_bytes(),
        )?;
    }
    let has = |t| report.setup.treatments.contains(&t);
    if has(Treatment::PsdDeim) && has(Treatment::StructurePreserving) {
        let mut rows = Vec::new();
        for cell in &report.cells {
            let get = |t| cell.results.iter().find(|r| r.treatment == t).map(|r| &r.errors);
            if let (Some(a), Some(b)) = (get(Treatment::PsdDeim), get(Treatment::StructurePreserving)) {
                rows.push(format!(
                    "{model},{},{},{},{},{},{}",
                    cell.k,
                    cell.method,
                    num(a.re_x),
                    num(a.re_h),
                    num(b.re_x),
                    num(b.re_h)
                ));
            }
        }
        write_atomic(
            &out.join(format!("mor_{model}_deim.csv")),
            table_csv(
                "model,k,method,re_x_psd_deim,re_h_psd_deim,re_x_structure_preserving,re_h_structure_preserving",
                &rows,
            )
            .as_bytes(),
        )?;
    }
    let h0 = report.system.hamiltonian(report.system.initial_state());
    let drift = (0..report.full.len())
        .map(|i| (report.system.hamiltonian(&report.full.state(i)) - h0).abs())
        .fold(0.0, f64::max)
        / h0.abs();
    let summary = MorSummary {
        setup: &report.setup,
        fom_steps: report.full.len() - 1,
        fom_time_s: if config.record_time { report.full.wall_time } else { 0.0 },
        initial_energy: h0,
        fom_energy_drift: drift,
        rows: report.rows().collect(),
    };
    write_json(&out.join(format!("mor_{model}_summary.json")), &summary)?;
    Ok(report)
}
