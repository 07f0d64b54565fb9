use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use ionwalk::dynamics::{step_size_from_physical, CarrierScale, FidelityModel};
use ionwalk::grid::PositionGrid;
use ionwalk::probe::k_grid;
use ionwalk::reconstruct::ForwardKind;
use ionwalk::walk::{classical_width_reference, WalkConfig, DEFAULT_SEED, DEFAULT_TRIALS};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Walk,
    Classical,
    Reverse,
    TwoIon,
    Scan,
    Reconstruct,
    WidthCurve,
    NbarCurve,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Walk => "walk",
            Self::Classical => "classical",
            Self::Reverse => "reverse",
            Self::TwoIon => "two_ion",
            Self::Scan => "scan",
            Self::Reconstruct => "reconstruct",
            Self::WidthCurve => "width_curve",
            Self::NbarCurve => "nbar_curve",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub walk: WalkSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub reconstruct: Option<ReconstructSection>,
    #[serde(default)]
    pub rabi: RabiSection,
    #[serde(default)]
    pub width: WidthSection,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output path prefix; files are named `<prefix>_<table>.csv`.
    #[serde(default)]
    pub output: Option<String>,
}

/// Bichromatic pulse in laboratory units.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    /// `Ω / 2π` in Hz.
    pub rabi_frequency_hz: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {
    pub n_steps: usize,
    #[serde(default)]
    pub n_ions: Option<usize>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_model")]
    pub model: FidelityModel,
    #[serde(default)]
    pub n_max: Option<usize>,
    /// Outer step in Δx. Mutually exclusive with `pulse`.
    #[serde(default)]
    pub step_size: Option<f64>,
    #[serde(default)]
    pub pulse: Option<PulseSection>,
    #[serde(default)]
    pub coin_phase: f64,
    #[serde(default)]
    pub carrier_scale: CarrierScale,
    #[serde(default)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default = "default_k_max")]
    pub k_max: f64,
    #[serde(default = "default_k_points")]
    pub points: usize,
    /// Shots per point; 0 records exact expectation values.
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Coupling model used to simulate the probe; defaults to the walk model.
    #[serde(default)]
    pub model: Option<FidelityModel>,
    /// Also record the `|+>_y` (sine) scan.
    #[serde(default = "yes")]
    pub sine: bool,
    /// Steps to scan; defaults to the last step (`scan`) or every step.
    #[serde(default)]
    pub steps: Option<Vec<usize>>,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { k_max: default_k_max(), points: default_k_points(), shots: default_shots(), model: None, sine: true, steps: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    None,
    PScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KineticBoundSetting {
    Value(f64),
    Mode(BoundMode),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSection {
    #[serde(default = "default_forward")]
    pub forward: ForwardKind,
    /// Bound on `<π²>`: a number, `"p_scan"` to estimate it from a momentum
    /// scan, or `"none"`.
    #[serde(default = "default_bound")]
    pub kinetic_bound: KineticBoundSetting,
    #[serde(default)]
    pub even: bool,
    #[serde(default)]
    pub variance_weighting: bool,
    #[serde(default = "default_grid_spacing")]
    pub grid_spacing: f64,
    /// Half-width of the grid; defaults to `step * N + 6`.
    #[serde(default)]
    pub grid_extent: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for ReconstructSection {
    fn default() -> Self {
        Self {
            forward: default_forward(),
            kinetic_bound: default_bound(),
            even: false,
            variance_weighting: false,
            grid_spacing: default_grid_spacing(),
            grid_extent: None,
            tol: None,
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiSection {
    #[serde(default = "default_rabi_points")]
    pub points: usize,
    /// Longest carrier pulse in units of `1/Ω_0`.
    #[serde(default = "default_rabi_t_max")]
    pub t_max: f64,
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub n_cap: Option<usize>,
}

impl Default for RabiSection {
    fn default() -> Self {
        Self { points: default_rabi_points(), t_max: default_rabi_t_max(), shots: 0, n_cap: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthMethod {
    /// `sqrt <x²>` of the simulated state.
    Moments,
    /// Curvature of the simulated probe scan at small k.
    Curvature,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidthSection {
    #[serde(default = "default_width_method")]
    pub method: WidthMethod,
    /// Also tabulate the dephased walk.
    #[serde(default = "yes")]
    pub classical: bool,
}

impl Default for WidthSection {
    fn default() -> Self {
        Self { method: default_width_method(), classical: true }
    }
}

fn default_eta() -> f64 {
    0.06
}
fn default_model() -> FidelityModel {
    FidelityModel::LambDicke
}
fn default_k_max() -> f64 {
    3.0
}
fn default_k_points() -> usize {
    61
}
fn default_shots() -> u64 {
    250
}
fn yes() -> bool {
    true
}
fn default_forward() -> ForwardKind {
    ForwardKind::Linear
}
fn default_bound() -> KineticBoundSetting {
    KineticBoundSetting::Mode(BoundMode::PScan)
}
fn default_grid_spacing() -> f64 {
    0.1
}
fn default_max_iter() -> usize {
    2000
}
fn default_rabi_points() -> usize {
    200
}
fn default_rabi_t_max() -> f64 {
    40.0 * PI
}
fn default_width_method() -> WidthMethod {
    WidthMethod::Moments
}

#[derive(Debug)]
pub enum LoadError {
    Io(std::io::Error),
    Parse(serde_json::Error),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io(e) => write!(f, "cannot read config: {e}"),
            Self::Parse(e) => write!(f, "config does not match schema version {SCHEMA_VERSION}: {e}"),
        }
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, LoadError> {
    let text = std::fs::read_to_string(path).map_err(LoadError::Io)?;
    serde_json::from_str(&text).map_err(LoadError::Parse)
}

/// Validation outcome: failures block a run, warnings do not.
#[derive(Debug, Default, Serialize)]
pub struct Report {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub derived: BTreeMap<String, f64>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Settings resolved from a config and command-line overrides.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub walk: WalkConfig,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn n_ions(&self) -> usize {
        self.walk.n_ions.unwrap_or(if self.experiment == Experiment::TwoIon { 2 } else { 1 })
    }

    pub fn probe_model(&self) -> FidelityModel {
        self.probe.model.unwrap_or(self.walk.model)
    }

    pub fn k_grid(&self) -> Vec<f64> {
        k_grid(self.probe.k_max, self.probe.points)
    }

    pub fn rabi_times(&self) -> Vec<f64> {
        let n = self.rabi.points;
        (0..n).map(|i| self.rabi.t_max * i as f64 / (n.max(2) - 1) as f64).collect()
    }

    pub fn reconstruction_grid(&self, walk: &WalkConfig, n_steps: usize) -> ionwalk::Result<PositionGrid> {
        let r = self.reconstruct.clone().unwrap_or_default();
        let extent = r.grid_extent.unwrap_or(walk.step_size.abs() * n_steps as f64 + 6.0);
        PositionGrid::new(extent, r.grid_spacing)
    }

    pub fn step_size(&self) -> Option<f64> {
        match (self.walk.step_size, self.walk.pulse) {
            (Some(s), None) => Some(s),
            (None, Some(p)) => {
                Some(self.n_ions() as f64 * step_size_from_physical(self.walk.eta, 2.0 * PI * p.rabi_frequency_hz, p.duration_s))
            }
            (None, None) => Some(2.0 * self.n_ions() as f64),
            (Some(_), Some(_)) => None,
        }
    }

    /// Schema and physics checks without running anything.
    pub fn validate(&self, seed_override: Option<u64>) -> (Report, Option<Resolved>) {
        let mut report = Report::default();
        let err = |r: &mut Report, m: String| r.errors.push(m);
        if self.schema_version != SCHEMA_VERSION {
            err(&mut report, format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        let n_ions = self.n_ions();
        match (self.experiment, n_ions) {
            (Experiment::TwoIon, 2) | (_, 1) => {}
            (Experiment::Scan | Experiment::Reconstruct | Experiment::WidthCurve | Experiment::NbarCurve, 2) => {}
            (e, n) => err(&mut report, format!("experiment {} does not support n_ions = {n}", e.name())),
        }
        if !matches!(self.walk.model, FidelityModel::LambDicke | FidelityModel::AllOrder) {
            err(
                &mut report,
                format!("walk model {} only describes the x quadrature; the displacement needs lamb_dicke or all_order", self.walk.model),
            );
        }
        if let Some(p) = self.walk.pulse {
            report.derived.insert("rabi_frequency_hz".into(), p.rabi_frequency_hz);
            report.derived.insert("pulse_duration_s".into(), p.duration_s);
            let d = step_size_from_physical(self.walk.eta, 2.0 * PI * p.rabi_frequency_hz, p.duration_s);
            report.derived.insert("d".into(), d);
        }
        let Some(step) = self.step_size() else {
            err(&mut report, "walk.step_size and walk.pulse are mutually exclusive".into());
            return (report, None);
        };

        let n = self.walk.n_steps;
        let mut walk = match WalkConfig::new(n, n_ions, self.walk.eta, self.walk.model) {
            Ok(w) => w.with_step_size(step),
            Err(e) => {
                err(&mut report, e.to_string());
                return (report, None);
            }
        };
        if let Some(n_max) = self.walk.n_max {
            walk = walk.with_n_max(n_max);
        }
        walk.coin_phase = self.walk.coin_phase;
        walk.carrier_scale = self.walk.carrier_scale;
        let seed = seed_override.or(self.seed).unwrap_or(DEFAULT_SEED);
        walk = walk.with_trials(self.walk.trials.unwrap_or(DEFAULT_TRIALS), seed);
        if let Err(e) = walk.validate() {
            err(&mut report, e.to_string());
        }

        report.derived.insert("step_size".into(), step);
        report.derived.insert("pulse_area".into(), walk.pulse_area());
        report.derived.insert("n_max".into(), walk.params.n_max as f64);
        report.derived.insert("edge_amplitude".into(), walk.edge_amplitude());
        report.derived.insert("required_n_max".into(), walk.required_n_max().ceil());
        report.derived.insert("recommended_n_max".into(), walk.recommended_n_max().ceil());
        report.derived.insert("classical_width_reference".into(), classical_width_reference(step, n));

        let n_max = walk.params.n_max as f64;
        if n_max < walk.required_n_max() {
            err(
                &mut report,
                format!(
                    "n_max adequacy heuristic failed: n_max = {} < alpha² + 6 alpha = {:.0} for the outermost branch alpha = {:.3} after {n} steps",
                    walk.params.n_max,
                    walk.required_n_max(),
                    walk.edge_amplitude()
                ),
            );
        } else if n_max < walk.recommended_n_max() {
            report.warnings.push(format!(
                "n_max = {} is below the conservative (alpha + 3 sqrt alpha)² = {:.0}; the leakage check decides at run time",
                walk.params.n_max,
                walk.recommended_n_max()
            ));
        }

        if !(self.probe.k_max > 0.0 && self.probe.k_max.is_finite()) {
            err(&mut report, format!("probe.k_max must be positive, got {}", self.probe.k_max));
        }
        if self.probe.points < 5 {
            err(&mut report, format!("probe.points must be at least 5, got {}", self.probe.points));
        }
        if let Some(steps) = &self.probe.steps {
            if let Some(&s) = steps.iter().find(|&&s| s > n) {
                err(&mut report, format!("probe.steps contains {s} > n_steps = {n}"));
            }
        }
        if self.experiment == Experiment::NbarCurve && self.rabi.points < 2 {
            err(&mut report, "rabi.points must be at least 2".into());
        }
        if self.experiment == Experiment::WidthCurve && self.width.method == WidthMethod::Curvature {
            let wmax = classical_width_reference(step, n).max(walk.edge_amplitude());
            // the fit window needs five points with signal above 0.6
            let needed = 5.0 * self.probe.k_max / (self.probe.points.max(2) - 1) as f64;
            if needed * wmax > 1.0 {
                report.warnings.push(format!(
                    "k spacing {:.3} may leave fewer than five curvature points for widths near {wmax:.1}",
                    self.probe.k_max / (self.probe.points.max(2) - 1) as f64
                ));
            }
        }

        let needs_grid = self.reconstruct.is_some() || self.experiment == Experiment::Reconstruct;
        let r = self.reconstruct.clone().unwrap_or_default();
        if !(r.grid_spacing > 0.0 && r.grid_spacing.is_finite()) {
            err(&mut report, format!("reconstruct.grid_spacing must be positive, got {}", r.grid_spacing));
        } else {
            let extent = r.grid_extent.unwrap_or(step.abs() * n as f64 + 6.0);
            report.derived.insert("grid_extent".into(), extent);
            report.derived.insert("grid_points".into(), (2.0 * (extent / r.grid_spacing).round() + 1.0).max(3.0));
            let edge = step.abs() * n as f64;
            if needs_grid && extent < edge + 3.0 {
                err(&mut report, format!("grid extent {extent} does not cover the walk edge {edge} plus three packet widths"));
            }
        }
        if let KineticBoundSetting::Value(b) = r.kinetic_bound {
            if !(b > 0.0 && b.is_finite()) {
                err(&mut report, format!("reconstruct.kinetic_bound must be positive, got {b}"));
            }
        }

        let resolved = report.ok().then(|| Resolved { config: self.clone(), walk, seed });
        (report, resolved)
    }
}
