use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spopt_core::geometry::Metric;
use spopt_core::models::NonlinearTreatment;
use spopt_core::optimizer::SolverOptions;

use crate::error::{CliError, CliResult};
use crate::scheme::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Application {
    Target,
    Sympev,
    Mor,
}

impl std::fmt::Display for Application {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Application::Target => "target",
            Application::Sympev => "sympev",
            Application::Mor => "mor",
        })
    }
}

/// Optional overrides of the solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOverrides {
    pub gtol: Option<f64>,
    pub niter: Option<usize>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub gamma0: Option<f64>,
    pub gamma_min: Option<f64>,
    pub gamma_max: Option<f64>,
    pub alpha: Option<f64>,
    pub max_backtracks: Option<usize>,
    pub rho: Option<f64>,
    pub sr_safeguard: Option<bool>,
}

impl SolverOverrides {
    pub fn apply(&self, mut o: SolverOptions) -> CliResult<SolverOptions> {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { o.$f = v; } )* };
        }
        set!(gtol, niter, beta, delta, gamma0, gamma_min, gamma_max, alpha, max_backtracks, sr_safeguard);
        if let Some(rho) = self.rho {
            if !(rho > 0.0) {
                return Err(CliError::Config(format!("rho must be positive, got {rho}")));
            }
        }
        o.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(o)
    }

    /// Metric of a scheme with the configured `ρ`.
    pub fn metric(&self, scheme: Scheme) -> Metric {
        match (scheme.metric(), self.rho) {
            (Metric::CanonicalLike { .. }, Some(rho)) => Metric::CanonicalLike { rho },
            (m, _) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetPreset {
    Sum,
    Saddle,
    Artificial,
}

impl TargetPreset {
    pub fn name(self) -> &'static str {
        match self {
            TargetPreset::Sum => "sum",
            TargetPreset::Saddle => "saddle",
            TargetPreset::Artificial => "artificial",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetConfig {
    pub presets: Vec<TargetPreset>,
    /// Block size of the artificial preset; 20 at desk scale, 200 with `--paper-scale`.
    pub artificial_n: Option<usize>,
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig {
            presets: vec![TargetPreset::Sum, TargetPreset::Saddle, TargetPreset::Artificial],
            artificial_n: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SympevConfig {
    /// 100 at desk scale, 1000 with `--paper-scale`.
    pub n: Option<usize>,
    pub m: usize,
    pub k: usize,
}

impl Default for SympevConfig {
    fn default() -> Self {
        SympevConfig { n: None, m: 2, k: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Wave,
    SineGordon,
    Schrodinger,
    Vlasov,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Wave => "wave",
            ModelKind::SineGordon => "sine-gordon",
            ModelKind::Schrodinger => "schrodinger",
            ModelKind::Vlasov => "vlasov",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Treatment {
    Exact,
    PsdDeim,
    StructurePreserving,
}

impl Treatment {
    pub fn core(self) -> NonlinearTreatment {
        match self {
            Treatment::Exact => NonlinearTreatment::Exact,
            Treatment::PsdDeim => NonlinearTreatment::PsdDeim,
            Treatment::StructurePreserving => NonlinearTreatment::StructurePreserving,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Treatment::Exact => "exact",
            Treatment::PsdDeim => "psd-deim",
            Treatment::StructurePreserving => "structure-preserving",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorConfig {
    pub model: ModelKind,
    pub n: Option<usize>,
    pub t_final: Option<f64>,
    pub ht: Option<f64>,
    pub snapshots: Option<usize>,
    pub ks: Option<Vec<usize>>,
    pub treatments: Option<Vec<Treatment>>,
    /// Include the cotangent-lift basis as a baseline row.
    pub cotlift: bool,
    /// Write the pointwise error series.
    pub series: bool,
    /// Centre snapshots at the initial state (`x ≈ x₀ + U x̃`).
    pub center: bool,
}

impl Default for MorConfig {
    fn default() -> Self {
        MorConfig {
            model: ModelKind::Wave,
            n: None,
            t_final: None,
            ht: None,
            snapshots: None,
            ks: None,
            treatments: None,
            cotlift: true,
            series: true,
            center: true,
        }
    }
}

/// Fully resolved MOR settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorSetup {
    pub model: ModelKind,
    pub n: usize,
    pub t_final: f64,
    pub ht: f64,
    pub snapshots: usize,
    pub ks: Vec<usize>,
    pub treatments: Vec<Treatment>,
    pub center: bool,
}

impl MorConfig {
    pub fn resolve(&self, paper_scale: bool) -> CliResult<MorSetup> {
        let (n, t, ht, s, ks): (usize, f64, f64, usize, Vec<usize>) = match (self.model, paper_scale) {
            (ModelKind::Wave, false) => (250, 25.0, 0.01, 250, vec![10, 20]),
            (ModelKind::Wave, true) => (500, 50.0, 0.01, 500, vec![10, 20, 40, 80]),
            (ModelKind::SineGordon, false) => (200, 30.0, 0.05, 150, vec![11, 13]),
            (ModelKind::SineGordon, true) => (1001, 90.0, 0.05, 450, vec![11, 13, 15, 17]),
            (ModelKind::Schrodinger, false) => (128, 10.0, 0.01, 250, vec![20, 30]),
            (ModelKind::Schrodinger, true) => (1024, 30.0, 0.01, 750, vec![95, 100, 105, 110]),
            (ModelKind::Vlasov, false) => (200, 0.2, 1e-4, 400, vec![6]),
            (ModelKind::Vlasov, true) => (1000, 0.2, 1e-4, 400, vec![6, 8, 10, 12]),
        };
        let treatments = match (&self.treatments, self.model) {
            (Some(t), _) => t.clone(),
            (None, ModelKind::Wave) => vec![Treatment::Exact],
            (None, ModelKind::Vlasov) => vec![Treatment::PsdDeim, Treatment::StructurePreserving],
            (None, _) => vec![Treatment::PsdDeim],
        };
        let setup = MorSetup {
            model: self.model,
            n: self.n.unwrap_or(n),
            t_final: self.t_final.unwrap_or(t),
            ht: self.ht.unwrap_or(ht),
            snapshots: self.snapshots.unwrap_or(s),
            ks: self.ks.clone().unwrap_or(ks),
            treatments,
            center: self.center,
        };
        if setup.n == 0 || setup.snapshots == 0 || setup.ks.is_empty() || setup.treatments.is_empty() {
            return Err(CliError::Config("mor: n, snapshots, ks and treatments must be nonempty".into()));
        }
        if !(setup.ht > 0.0 && setup.t_final > 0.0) {
            return Err(CliError::Config("mor: ht and t_final must be positive".into()));
        }
        let steps = (setup.t_final / setup.ht).round();
        if (steps * setup.ht - setup.t_final).abs() > 1e-9 * setup.t_final {
            return Err(CliError::Config("mor: t_final must be a multiple of ht".into()));
        }
        if setup.snapshots > steps as usize + 1 {
            return Err(CliError::Config(format!(
                "mor: {} snapshots requested but only {} time instances",
                setup.snapshots,
                steps as usize + 1
            )));
        }
        if let Some(&k) = setup.ks.iter().find(|&&k| k == 0 || k > setup.n || k > 2 * setup.snapshots) {
            return Err(CliError::Config(format!("mor: k = {k} must lie in [1, min(n, 2s)]")));
        }
        Ok(setup)
    }
}

/// One experiment, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub application: Option<Application>,
    pub schemes: Option<Vec<Scheme>>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub paper_scale: bool,
    /// Record wall-clock times; off by default so that outputs are
    /// bit-reproducible.
    pub record_time: bool,
    pub solver: SolverOverrides,
    pub target: TargetConfig,
    pub sympev: SympevConfig,
    pub mor: MorConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            application: None,
            schemes: None,
            seed: 0,
            out: None,
            paper_scale: false,
            record_time: false,
            solver: SolverOverrides::default(),
            target: TargetConfig::default(),
            sympev: SympevConfig::default(),
            mor: MorConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Schemes to run; defaults to all six, or CayleyC and SRE for MOR.
    pub fn schemes_for(&self, app: Application) -> CliResult<Vec<Scheme>> {
        let list = match (&self.schemes, app) {
            (Some(s), _) => s.clone(),
            (None, Application::Mor) => vec![Scheme::CayleyC, Scheme::SRE],
            (None, _) => Scheme::ALL.to_vec(),
        };
        if list.is_empty() {
            return Err(CliError::Config("scheme list is empty".into()));
        }
        let mut seen = list.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != list.len() {
            return Err(CliError::Config("scheme list contains duplicates".into()));
        }
        Ok(list)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("spopt-out"))
    }

    pub fn check_application(&self, app: Application) -> CliResult<()> {
        match self.application {
            Some(a) if a != app => Err(CliError::Config(format!(
                "config is for '{a}' but '{app}' was requested"
            ))),
            _ => Ok(()),
        }
    }
}
