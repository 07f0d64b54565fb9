use std::time::Instant;

use ionwalk::dynamics::FidelityModel;
use ionwalk::fit::polynomial_fit;
use ionwalk::fock::{exact_position_density, MotionalEnsemble};
use ionwalk::grid::{total_variation, PositionGrid};
use ionwalk::probe::{
    carrier_rabi_scan, exact_scan, fit_mean_phonon, simulate_scan, width_from_curvature, ProbeAxis, ProbeScan, SpinPrep, WidthEstimate,
};
use ionwalk::reconstruct::{build_forward_model, estimate_kinetic_bound, reconstruct_density, FourierData, ReconstructOptions};
use ionwalk::walk::{classical_walk, classical_width_reference, quantum_walk, reversed_walk, two_ion_walk, WalkConfig, WalkResult};
use serde::Serialize;

use crate::config::{BoundMode, Experiment, KineticBoundSetting, Resolved, WidthMethod, SCHEMA_VERSION};
use crate::output::Sink;

/// A failure while running, tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.message)
    }
}

type Staged<T> = Result<T, StageError>;

fn at<T, E: std::fmt::Display>(stage: impl Into<String>, r: Result<T, E>) -> Staged<T> {
    r.map_err(|e| StageError { stage: stage.into(), message: e.to_string() })
}

fn timed<T>(stage: &str, f: impl FnOnce() -> Staged<T>) -> Staged<T> {
    let start = Instant::now();
    let out = f();
    log::info!("{stage}: {:.2} s", start.elapsed().as_secs_f64());
    out
}

fn label(n: usize) -> String {
    format!("N{n:02}")
}

/// Independent noise stream per step and measurement channel.
fn stream_seed(seed: u64, step: usize, channel: u64) -> u64 {
    seed ^ (((step as u64) << 8) | channel).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

const CH_COS: u64 = 1;
const CH_SIN: u64 = 2;
const CH_P: u64 = 3;
const CH_RABI: u64 = 4;

#[derive(Debug, Serialize)]
struct StepSummary {
    n: usize,
    rms_x: f64,
    mean_x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_abs_x: Option<f64>,
    w_p: f64,
    nbar: f64,
    tail: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    reconstruction: Option<ReconSummary>,
}

#[derive(Debug, Serialize)]
struct ReconSummary {
    tv_vs_exact: f64,
    objective: f64,
    fisher: f64,
    kinetic_bound: Option<f64>,
    iterations: usize,
    duality_gap: f64,
    odd_residual: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Summary<T: Serialize> {
    schema_version: u32,
    experiment: &'static str,
    seed: u64,
    walk: WalkConfig,
    #[serde(flatten)]
    body: T,
}

struct Runner<'a> {
    r: &'a Resolved,
    sink: Sink,
}

pub fn run(resolved: &Resolved, sink: Sink) -> Staged<Sink> {
    let mut runner = Runner { r: resolved, sink };
    match resolved.config.experiment {
        Experiment::Walk | Experiment::Classical | Experiment::Reverse | Experiment::TwoIon => runner.walk_densities()?,
        Experiment::Scan => runner.scans()?,
        Experiment::Reconstruct => runner.reconstructions()?,
        Experiment::WidthCurve => runner.width_curve()?,
        Experiment::NbarCurve => runner.nbar_curve()?,
    }
    Ok(runner.sink)
}

impl Runner<'_> {
    fn summary<T: Serialize>(&mut self, body: T) -> Staged<()> {
        let s = Summary {
            schema_version: SCHEMA_VERSION,
            experiment: self.r.config.experiment.name(),
            seed: self.r.seed,
            walk: self.r.walk.clone(),
            body,
        };
        at("write", self.sink.json("summary", &s))
    }

    fn simulate(&self, kind: Experiment) -> Staged<WalkResult> {
        let w = &self.r.walk;
        timed("walk", || {
            at(
                "walk",
                match kind {
                    Experiment::Classical => classical_walk(w),
                    Experiment::Reverse => reversed_walk(w),
                    _ if w.params.n_ions == 2 => two_ion_walk(w),
                    _ => quantum_walk(w),
                },
            )
        })
    }

    fn grid(&self) -> Staged<PositionGrid> {
        at("grid", self.r.config.reconstruction_grid(&self.r.walk, self.r.walk.n_steps))
    }

    fn scan(&self, e: &MotionalEnsemble, prep: SpinPrep, axis: ProbeAxis, step: usize, channel: u64) -> ionwalk::Result<ProbeScan> {
        let cfg = &self.r.config;
        let mut model = cfg.probe_model();
        if axis == ProbeAxis::P && matches!(model, FidelityModel::ThirdOrder | FidelityModel::XDiagonal) {
            log::warn!("{model} probe is defined on x only; momentum scans use lamb_dicke");
            model = FidelityModel::LambDicke;
        }
        let ks = cfg.k_grid();
        if cfg.probe.shots == 0 {
            exact_scan(e, prep, &ks, axis, model)
        } else {
            simulate_scan(e, prep, &ks, axis, model, cfg.probe.shots, stream_seed(self.r.seed, step, channel))
        }
    }

    fn step_summary(&self, n: usize, e: &MotionalEnsemble) -> StepSummary {
        StepSummary {
            n,
            rms_x: e.x_second_moment().sqrt(),
            mean_x: e.mean_x(),
            mean_abs_x: None,
            w_p: 2.0 * e.pi_second_moment().sqrt(),
            nbar: e.mean_phonon(),
            tail: e.tail_population(),
            reconstruction: None,
        }
    }

    fn with_density(mut s: StepSummary, grid: &PositionGrid, density: &[f64]) -> StepSummary {
        s.mean_abs_x = Some(grid.points().iter().zip(density).map(|(x, p)| x.abs() * p).sum::<f64>() * grid.spacing());
        s
    }

    fn reconstruct(&mut self, n: usize, e: &MotionalEnsemble, grid: &PositionGrid, exact: &[f64]) -> Staged<ReconSummary> {
        let stage = format!("reconstruct {}", label(n));
        let cfg = self.r.config.reconstruct.clone().unwrap_or_default();
        let cos = at(&stage, self.scan(e, SpinPrep::PlusZ, ProbeAxis::X, n, CH_COS))?;
        let sin = if self.r.config.probe.sine { Some(at(&stage, self.scan(e, SpinPrep::PlusY, ProbeAxis::X, n, CH_SIN))?) } else { None };
        let bound = match cfg.kinetic_bound {
            KineticBoundSetting::Value(b) => Some(b),
            KineticBoundSetting::Mode(BoundMode::None) => None,
            KineticBoundSetting::Mode(BoundMode::PScan) => {
                let p = at(&stage, self.scan(e, SpinPrep::PlusZ, ProbeAxis::P, n, CH_P))?;
                Some(at(&stage, estimate_kinetic_bound(&p))?.bound)
            }
        };
        let data = at(&stage, FourierData::from_scans(&cos, sin.as_ref()))?;
        let model = at(&stage, build_forward_model(&data.k, grid, cfg.forward, self.r.walk.params.eta))?;
        let opts = ReconstructOptions {
            kinetic_bound: bound,
            even: cfg.even,
            variance_weighting: cfg.variance_weighting,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
        };
        let est = at(&stage, reconstruct_density(&data, &model, &opts))?;
        if !est.converged {
            return Err(StageError {
                stage,
                message: format!("solver did not converge in {} iterations (duality gap {:.3e})", est.iterations, est.duality_gap),
            });
        }
        at("write", self.sink.density(&format!("reconstructed_{}", label(n)), grid.points(), &est.density))?;
        Ok(ReconSummary {
            tv_vs_exact: total_variation(grid, &est.density, exact),
            objective: est.objective,
            fisher: est.fisher,
            kinetic_bound: bound,
            iterations: est.iterations,
            duality_gap: est.duality_gap,
            odd_residual: est.odd_residual,
        })
    }

    /// Exact density per snapshot; reconstructed densities too when the
    /// config has a reconstruction block.
    fn walk_densities(&mut self) -> Staged<()> {
        let kind = self.r.config.experiment;
        let result = self.simulate(kind)?;
        let grid = self.grid()?;
        let with_recon = self.r.config.reconstruct.is_some();
        let mut steps = Vec::with_capacity(result.len());
        for i in 0..result.len() {
            let e = at("walk", result.ensemble(i))?;
            let exact = at(format!("density {}", label(i)), exact_position_density(&e, &grid))?;
            at("write", self.sink.density(&format!("density_{}", label(i)), grid.points(), &exact))?;
            let mut s = Self::with_density(self.step_summary(i, &e), &grid, &exact);
            if with_recon && i > 0 {
                s.reconstruction = Some(timed("reconstruct", || self.reconstruct(i, &e, &grid, &exact))?);
            }
            steps.push(s);
        }
        #[derive(Serialize)]
        struct Body {
            steps: Vec<StepSummary>,
            #[serde(skip_serializing_if = "Option::is_none")]
            return_fidelity: Option<f64>,
        }
        let return_fidelity = if kind == Experiment::Reverse { result.return_fidelity() } else { None };
        self.summary(Body { steps, return_fidelity })
    }

    fn reconstructions(&mut self) -> Staged<()> {
        let result = self.simulate(Experiment::Walk)?;
        let grid = self.grid()?;
        let steps_wanted = self.r.config.probe.steps.clone().unwrap_or_else(|| (1..=self.r.walk.n_steps).collect());
        let mut steps = Vec::new();
        for n in steps_wanted {
            let e = at("walk", result.ensemble(n))?;
            let exact = at(format!("density {}", label(n)), exact_position_density(&e, &grid))?;
            at("write", self.sink.density(&format!("exact_{}", label(n)), grid.points(), &exact))?;
            let mut s = Self::with_density(self.step_summary(n, &e), &grid, &exact);
            s.reconstruction = Some(timed("reconstruct", || self.reconstruct(n, &e, &grid, &exact))?);
            steps.push(s);
        }
        #[derive(Serialize)]
        struct Body {
            steps: Vec<StepSummary>,
        }
        self.summary(Body { steps })
    }

    fn scans(&mut self) -> Staged<()> {
        let result = self.simulate(Experiment::Walk)?;
        let steps_wanted = self.r.config.probe.steps.clone().unwrap_or_else(|| vec![self.r.walk.n_steps]);
        #[derive(Serialize)]
        struct ScanSummary {
            n: usize,
            rms_x: f64,
            w_p: f64,
            curvature_w_x: Option<WidthEstimate>,
            curvature_w_p: Option<WidthEstimate>,
        }
        let mut steps = Vec::new();
        for n in steps_wanted {
            let stage = format!("scan {}", label(n));
            let e = at("walk", result.ensemble(n))?;
            let cos = at(&stage, self.scan(&e, SpinPrep::PlusZ, ProbeAxis::X, n, CH_COS))?;
            at("write", self.sink.csv(&format!("scan_{}_x_cos", label(n)), &cos.points))?;
            if self.r.config.probe.sine {
                let sin = at(&stage, self.scan(&e, SpinPrep::PlusY, ProbeAxis::X, n, CH_SIN))?;
                at("write", self.sink.csv(&format!("scan_{}_x_sin", label(n)), &sin.points))?;
            }
            let p = at(&stage, self.scan(&e, SpinPrep::PlusZ, ProbeAxis::P, n, CH_P))?;
            at("write", self.sink.csv(&format!("scan_{}_p_cos", label(n)), &p.points))?;
            let fit = |s: &ProbeScan| match width_from_curvature(s) {
                Ok(w) => Some(w),
                Err(err) => {
                    log::warn!("{stage}: {err}");
                    None
                }
            };
            steps.push(ScanSummary {
                n,
                rms_x: e.x_second_moment().sqrt(),
                w_p: 2.0 * e.pi_second_moment().sqrt(),
                curvature_w_x: fit(&cos),
                curvature_w_p: fit(&p),
            });
        }
        #[derive(Serialize)]
        struct Body {
            k: Vec<f64>,
            steps: Vec<ScanSummary>,
        }
        self.summary(Body { k: self.r.config.k_grid(), steps })
    }

    fn width_table(&self, result: &WalkResult) -> Staged<Vec<WidthRow>> {
        let step = self.r.walk.step_size;
        (0..result.len())
            .map(|n| {
                let e = at("walk", result.ensemble(n))?;
                let w_x = match self.r.config.width.method {
                    WidthMethod::Moments => e.x_second_moment().sqrt(),
                    WidthMethod::Curvature => {
                        let stage = format!("width {}", label(n));
                        let scan = at(&stage, self.scan(&e, SpinPrep::PlusZ, ProbeAxis::X, n, CH_COS))?;
                        at(&stage, width_from_curvature(&scan))?.width
                    }
                };
                Ok(WidthRow {
                    n,
                    w_x,
                    w_x_classical_ref: classical_width_reference(step, n),
                    w_p: 2.0 * e.pi_second_moment().sqrt(),
                    nbar: e.mean_phonon(),
                })
            })
            .collect()
    }

    fn width_curve(&mut self) -> Staged<()> {
        let quantum = self.simulate(Experiment::Walk)?;
        let rows = self.width_table(&quantum)?;
        at("write", self.sink.csv("width", &rows))?;
        let classical_rows = if self.r.config.width.classical {
            let classical = self.simulate(Experiment::Classical)?;
            let rows = self.width_table(&classical)?;
            at("write", self.sink.csv("width_classical", &rows))?;
            Some(rows)
        } else {
            None
        };
        #[derive(Serialize)]
        struct Body {
            method: WidthMethod,
            quantum_exponent: Option<f64>,
            classical_exponent: Option<f64>,
        }
        let exponent = |rows: &[WidthRow]| {
            let (ns, ws): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.n > 0).map(|r| (r.n as f64, r.w_x)).unzip();
            (ns.len() >= 2).then(|| ionwalk::fit::power_law_exponent(&ns, &ws))
        };
        let body = Body {
            method: self.r.config.width.method,
            quantum_exponent: exponent(&rows),
            classical_exponent: classical_rows.as_deref().and_then(exponent),
        };
        self.summary(body)
    }

    fn nbar_curve(&mut self) -> Staged<()> {
        let result = self.simulate(Experiment::Walk)?;
        let cfg = &self.r.config;
        let times = cfg.rabi_times();
        let mut rows = Vec::with_capacity(result.len());
        for n in 0..result.len() {
            let stage = format!("nbar {}", label(n));
            let e = at("walk", result.ensemble(n))?;
            let nbar = e.mean_phonon();
            let scan =
                at(&stage, carrier_rabi_scan(&e, &times, self.r.walk.carrier_scale, cfg.rabi.shots, stream_seed(self.r.seed, n, CH_RABI)))?;
            let fit = at(&stage, fit_mean_phonon(&scan, cfg.rabi.n_cap, Some(nbar)))?;
            if !fit.converged {
                return Err(StageError { stage, message: "population fit did not converge".into() });
            }
            rows.push(NbarRow { n, nbar, nbar_fit: fit.mean_phonon, fit_residual: fit.residual });
        }
        at("write", self.sink.csv("nbar", &rows))?;
        let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let r2 = |ys: Vec<f64>| (ns.len() >= 3).then(|| polynomial_fit(&ns, &ys, 2).1);
        #[derive(Serialize)]
        struct Body {
            quadratic_r2_true: Option<f64>,
            quadratic_r2_fit: Option<f64>,
        }
        let body = Body {
            quadratic_r2_true: r2(rows.iter().map(|r| r.nbar).collect()),
            quadratic_r2_fit: r2(rows.iter().map(|r| r.nbar_fit).collect()),
        };
        self.summary(body)
    }
}

#[derive(Debug, Serialize)]
struct WidthRow {
    #[serde(rename = "N")]
    n: usize,
    w_x: f64,
    w_x_classical_ref: f64,
    w_p: f64,
    nbar: f64,
}

#[derive(Debug, Serialize)]
struct NbarRow {
    #[serde(rename = "N")]
    n: usize,
    nbar: f64,
    nbar_fit: f64,
    fit_residual: f64,
}
