use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{segment_network, NetworkModel};
use crate::physics::gravity_factor;

/// What bounds the withdrawal at one reservoir pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveLimit {
    /// The static column cannot lift gas to the wellhead pressure.
    Static,
    /// Friction in the well.
    Well,
    /// The storage flow bound.
    FlowBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Pa
    pub reservoir_pressure: f64,
    /// Maximal steady withdrawal (kg/s), after the flow bound.
    pub withdrawal: f64,
    /// Withdrawal the well alone admits (kg/s).
    pub well_capacity: f64,
    pub limit: CurveLimit,
}

/// Wellhead density reached by steady upward flux `w ≥ 0` from
/// bottom-hole density `rho_r`, or `None` once the pressure vanishes.
fn wellhead_density(pieces: &[(f64, f64)], rho_r: f64, w: f64) -> Option<f64> {
    let mut rho = rho_r;
    for &(beta, coef) in pieces.iter().rev() {
        let sq = beta.exp() * rho * rho - coef * w * w;
        if sq <= 0.0 {
            return None;
        }
        rho = sq.sqrt();
    }
    Some(rho)
}

/// Maximal steady withdrawal of storage `storage_id` with the wellhead held
/// at `wellhead_pressure` (Pa), at `samples` reservoir pressures spaced
/// evenly between those of the minimum and maximum inventory. The well is
/// segmented at `delta` (m) and the flux found by bisection on the chain.
pub fn storage_curve(
    model: &NetworkModel,
    storage_id: Option<&str>,
    wellhead_pressure: Option<f64>,
    delta: f64,
    samples: usize,
) -> Result<Vec<CurvePoint>> {
    let s = match storage_id {
        Some(id) => model
            .storages
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("no storage `{id}`")))?,
        None if !model.storages.is_empty() => 0,
        None => return Err(Error::InvalidArgument("network has no storage".into())),
    };
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {samples}")));
    }
    let st = &model.storages[s];
    let net = segment_network(model, delta)?;
    let sc = net.scales;
    let a2 = model.params.sound_speed_sq();
    let p_wh = wellhead_pressure.unwrap_or(st.wellhead_pressure_min);
    if !(p_wh > 0.0) {
        return Err(Error::InvalidArgument(format!("wellhead pressure must be positive, got {p_wh}")));
    }
    let target = p_wh / sc.pressure;
    let pieces: Vec<(f64, f64)> = net.storages[s]
        .well_pipes
        .iter()
        .map(|&k| {
            let sp = &net.pipes[k];
            (sp.beta, sp.resistance() * gravity_factor(sp.beta))
        })
        .collect();
    let flux_to_flow = st.well_area() * sc.flux();
    let (p_lo, p_hi) = (st.mass_min / st.volume * a2, st.mass_max / st.volume * a2);

    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let p_r = p_lo + (p_hi - p_lo) * i as f64 / (samples - 1) as f64;
        let rho_r = p_r / sc.pressure;
        let above = |w: f64| wellhead_density(&pieces, rho_r, w).is_some_and(|r| r >= target);
        let w = if !above(0.0) {
            0.0
        } else {
            let mut hi = 1e-3;
            while above(hi) {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if above(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            lo
        };
        let well_capacity = w * flux_to_flow;
        let limit = if w == 0.0 {
            CurveLimit::Static
        } else if well_capacity > st.flow_max {
            CurveLimit::FlowBound
        } else {
            CurveLimit::Well
        };
        out.push(CurvePoint { reservoir_pressure: p_r, withdrawal: well_capacity.min(st.flow_max), well_capacity, limit });
    }
    Ok(out)
}
