//! Experiment harnesses built on the optimizer and simulator: one optimize
//! pipeline, optimizer/simulator cross-validation, the mesh study, the
//! storage withdrawal curve and the synthetic network generator.

mod mesh;
mod storage_curve;
mod synth;

pub use mesh::{mesh_study, MeshRow, MeshStudy};
pub use storage_curve::{storage_curve, CurveLimit, CurvePoint};
pub use synth::{synth_network, SynthSpec};

use log::info;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ipm::{self, SolverOptions, SolverSolution, Status};
use crate::nlp::Nlp;
use crate::network::{segment_network, NetworkModel};
use crate::transcription::{build_nlp, Counts, TimeGrid, TranscriptionOptions, Transcription, TransientTrajectory};

/// Discretization and solver settings of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    /// Segment length Δ (m).
    pub delta: f64,
    pub dt_hours: f64,
    /// Defaults to the network's own horizon.
    pub horizon_hours: Option<f64>,
    pub transcription: TranscriptionOptions,
    pub solver: SolverOptions,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            delta: 10e3,
            dt_hours: 1.0,
            horizon_hours: None,
            transcription: TranscriptionOptions::default(),
            solver: SolverOptions::default(),
        }
    }
}

/// Result of [`optimize`].
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub transcription: Transcription,
    pub solution: SolverSolution,
    pub trajectory: TransientTrajectory,
    pub counts: Counts,
    /// Largest per-step discrete mass balance defect (kg/s).
    pub max_mass_defect: f64,
    /// Wall time of segmentation and transcription (s).
    pub build_seconds: f64,
}

impl OptimizeOutcome {
    pub fn is_optimal(&self) -> bool {
        self.solution.status == Status::Optimal
    }
}

/// Segments, transcribes and solves `model`.
pub fn optimize(model: &NetworkModel, cfg: &OptimizeConfig) -> Result<OptimizeOutcome> {
    let start = std::time::Instant::now();
    let net = segment_network(model, cfg.delta)?;
    let horizon = cfg.horizon_hours.unwrap_or(model.params.horizon_hours);
    let grid = TimeGrid::new(horizon, cfg.dt_hours)?;
    let tr = build_nlp(&net, &grid, &cfg.transcription)?;
    let counts = Counts {
        n: tr.problem.n(),
        equalities: tr.problem.equality_count(),
        inequalities: tr.problem.inequality_count(),
    };
    let build_seconds = start.elapsed().as_secs_f64();
    info!(
        "transcribed: {} variables, {} equalities, {} inequalities ({:.2} s)",
        counts.n, counts.equalities, counts.inequalities, build_seconds
    );
    let solution = ipm::solve(&tr.problem, &cfg.solver);
    info!("solver: {} after {} iterations ({:.2} s)", solution.status, solution.iterations, solution.seconds);
    let trajectory = tr.extract(&solution.x)?;
    let max_mass_defect = (0..grid.steps).map(|k| tr.mass_balance_defect(&solution.x, k).abs()).fold(0.0, f64::max);
    Ok(OptimizeOutcome { transcription: tr, solution, trajectory, counts, max_mass_defect, build_seconds })
}

/// `Σ|a − b| / Σ|b|`, the mean relative deviation of `a` from the
/// reference `b`.
pub fn mean_relative_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument(format!("series lengths {} and {} differ or are empty", a.len(), b.len())));
    }
    let den: f64 = b.iter().map(|v| v.abs()).sum();
    if den == 0.0 {
        return Err(Error::InvalidArgument("reference series is identically zero".into()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / den)
}

/// Deviation of a simulated trajectory from the optimizer's.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    /// Per original junction: mean relative pressure error.
    pub junction_pressure: Vec<(String, f64)>,
    /// Per storage: mean relative exchange flow error.
    pub storage_flow: Vec<(String, f64)>,
    pub samples: usize,
}

impl CrossValidation {
    pub fn pressure(&self, id: &str) -> Option<f64> {
        self.junction_pressure.iter().find(|(j, _)| j == id).map(|(_, e)| *e)
    }

    pub fn storage(&self, id: &str) -> Option<f64> {
        self.storage_flow.iter().find(|(s, _)| s == id).map(|(_, e)| *e)
    }
}

/// Compares the samples at the optimizer's grid times `t_1 … t_N`. Sample
/// 0 is excluded: it is the given initial state of the simulation, whose
/// algebraic quantities (storage flow among them) are not yet resolved.
pub fn cross_validate(optimized: &TransientTrajectory, simulated: &TransientTrajectory) -> Result<CrossValidation> {
    let times: Vec<usize> = (1..optimized.times_hours.len()).collect();
    let mut picks = Vec::with_capacity(times.len());
    for &i in &times {
        let t = optimized.times_hours[i];
        let s = simulated
            .times_hours
            .iter()
            .position(|&ts| (ts - t).abs() < 1e-9)
            .ok_or_else(|| Error::InvalidArgument(format!("simulation has no sample at t = {t} h")))?;
        picks.push(s);
    }
    let pick = |v: &[f64]| -> Vec<f64> { picks.iter().map(|&s| v[s]).collect() };
    let opt = |v: &[f64]| -> Vec<f64> { times.iter().map(|&i| v[i]).collect() };
    let mut junction_pressure = Vec::new();
    for j in &optimized.junctions {
        let Some(sj) = simulated.junctions.iter().find(|s| s.id == j.id) else { continue };
        junction_pressure.push((j.id.clone(), mean_relative_error(&pick(&sj.pressure), &opt(&j.pressure))?));
    }
    let mut storage_flow = Vec::new();
    for st in &optimized.storages {
        let Some(ss) = simulated.storages.iter().find(|s| s.id == st.id) else { continue };
        storage_flow.push((st.id.clone(), mean_relative_error(&pick(&ss.flow), &opt(&st.flow))?));
    }
    Ok(CrossValidation { junction_pressure, storage_flow, samples: times.len() })
}

#[cfg(test)]
mod tests;
