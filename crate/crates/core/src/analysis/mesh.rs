use log::info;
use serde::Serialize;

use super::{optimize, OptimizeConfig};
use crate::error::{Error, Result};
use crate::network::NetworkModel;
use crate::transcription::TransientTrajectory;

/// Errors of one segment length against the reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshRow {
    pub delta_km: f64,
    /// Time-mean relative storage flow error, averaged over storages.
    pub storage_error: Option<f64>,
    /// Time-mean relative pressure error, averaged over non-slack
    /// original junctions.
    pub pressure_error: f64,
    pub objective: f64,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshStudy {
    pub reference_km: f64,
    pub rows: Vec<MeshRow>,
    /// First failed solve, if any; rows then hold the runs that succeeded.
    pub failure: Option<String>,
}

/// `(1/T)∫|a − b|/|b| dt` over the periodic nodes `0 … N−1`.
fn time_mean_relative(a: &[f64], b: &[f64]) -> f64 {
    let n = b.len() - 1;
    (0..n).map(|k| (a[k] - b[k]).abs() / b[k].abs().max(f64::MIN_POSITIVE)).sum::<f64>() / n as f64
}

fn compare(model: &NetworkModel, fine: &TransientTrajectory, coarse: &TransientTrajectory) -> (Option<f64>, f64) {
    let es = (!fine.storages.is_empty()).then(|| {
        fine.storages.iter().zip(&coarse.storages).map(|(r, c)| time_mean_relative(&c.flow, &r.flow)).sum::<f64>()
            / fine.storages.len() as f64
    });
    let js: Vec<usize> = (0..model.junctions.len()).filter(|&j| !model.junctions[j].is_slack()).collect();
    let ep = if js.is_empty() {
        0.0
    } else {
        js.iter()
            .map(|&j| time_mean_relative(&coarse.junctions[j].pressure, &fine.junctions[j].pressure))
            .sum::<f64>()
            / js.len() as f64
    };
    (es, ep)
}

/// Solves `model` at the reference segment length and at each of
/// `deltas_km`, reporting the mean relative errors of storage flow and
/// junction pressure. The solves run concurrently.
pub fn mesh_study(model: &NetworkModel, cfg: &OptimizeConfig, deltas_km: &[f64], reference_km: f64) -> Result<MeshStudy> {
    if deltas_km.iter().chain([&reference_km]).any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::InvalidArgument("segment lengths must be positive".into()));
    }
    let mut all = vec![reference_km];
    all.extend_from_slice(deltas_km);
    let runs: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = all
            .iter()
            .map(|&d| {
                let c = OptimizeConfig { delta: d * 1e3, ..cfg.clone() };
                s.spawn(move || optimize(model, &c))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("mesh study worker panicked")).collect()
    });

    let mut failure = None;
    let describe = |d: f64, r: &Result<super::OptimizeOutcome>| -> Option<String> {
        match r {
            Err(e) => Some(format!("Δ = {d} km: {e}")),
            Ok(o) if !o.is_optimal() => Some(format!("Δ = {d} km: solver stopped with {}", o.solution.status)),
            Ok(_) => None,
        }
    };
    if let Some(msg) = describe(reference_km, &runs[0]) {
        return Ok(MeshStudy { reference_km, rows: Vec::new(), failure: Some(msg) });
    }
    let reference = runs[0].as_ref().unwrap();
    let mut rows = Vec::new();
    for (d, r) in deltas_km.iter().zip(&runs[1..]) {
        if let Some(msg) = describe(*d, r) {
            failure = Some(msg);
            break;
        }
        let o = r.as_ref().unwrap();
        let (es, ep) = compare(model, &reference.trajectory, &o.trajectory);
        info!("Δ = {d} km: E_s = {es:?}, E_p = {ep:.3e}");
        rows.push(MeshRow {
            delta_km: *d,
            storage_error: es,
            pressure_error: ep,
            objective: o.trajectory.objective.total,
            iterations: o.solution.iterations,
            seconds: o.solution.seconds,
        });
    }
    Ok(MeshStudy { reference_km, rows, failure })
}
