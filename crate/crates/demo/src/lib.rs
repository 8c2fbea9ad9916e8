//! Browser demo: steady single-pipe profiles, static well columns and the
//! storage withdrawal curve of the bundled storage network. Every entry
//! point returns a JSON document; the `*_json` functions are the same
//! computations without the JavaScript binding.

use gasflow::analysis::storage_curve;
use gasflow::fixtures;
use gasflow::nondim::{axial_gravity, beta, pa_to_psi, psi_to_pa, ScaleSet, DEFAULT_SOUND_SPEED, GRAVITY};
use gasflow::physics::momentum_outlet_density;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(format!("{name} must be positive, got {v}"))
    }
}

/// Pressure along a pipe carrying a steady flow, marched over `segments`
/// pieces. `rise_m` is the outlet height above the inlet.
#[allow(clippy::too_many_arguments)]
pub fn steady_profile_json(
    inlet_mpa: f64,
    flow_kg_s: f64,
    length_km: f64,
    diameter_m: f64,
    friction: f64,
    rise_m: f64,
    segments: usize,
) -> Result<String, String> {
    positive("inlet pressure", inlet_mpa)?;
    positive("length", length_km)?;
    positive("diameter", diameter_m)?;
    positive("friction factor", friction)?;
    if segments == 0 || !flow_kg_s.is_finite() || !rise_m.is_finite() {
        return Err("need at least one segment and finite flow and rise".into());
    }
    let length = length_km * 1e3;
    if rise_m.abs() > length {
        return Err("rise exceeds the pipe length".into());
    }
    let a = DEFAULT_SOUND_SPEED;
    let sc = ScaleSet::new(length, inlet_mpa * 1e6, a).map_err(|e| e.to_string())?;
    let area = std::f64::consts::PI * diameter_m * diameter_m / 4.0;
    let piece = length / segments as f64;
    let b = beta(axial_gravity((rise_m / length).asin()), piece, a);
    let resistance = friction * piece / diameter_m;
    let phi = flow_kg_s / area / sc.flux();
    let mut rho = 1.0;
    let mut points = vec![json!({ "x_km": 0.0, "pressure_mpa": inlet_mpa })];
    for k in 1..=segments {
        match momentum_outlet_density(rho, phi, resistance, b) {
            Some(r) => rho = r,
            None => {
                return Ok(json!({ "points": points, "choked_at_km": (k - 1) as f64 * piece / 1e3 }).to_string());
            }
        }
        points.push(json!({ "x_km": k as f64 * piece / 1e3, "pressure_mpa": rho * inlet_mpa }));
    }
    Ok(json!({ "points": points, "choked_at_km": null }).to_string())
}

/// Pressures down a resting vertical well of `depth_m` split into
/// `segments` pieces, with the closed-form bottom-hole pressure.
pub fn static_column_json(wellhead_psi: f64, depth_m: f64, segments: usize) -> Result<String, String> {
    positive("wellhead pressure", wellhead_psi)?;
    positive("depth", depth_m)?;
    if segments == 0 {
        return Err("need at least one segment".into());
    }
    let a = DEFAULT_SOUND_SPEED;
    let piece = depth_m / segments as f64;
    // axis pointing down the well
    let b = beta(axial_gravity(-std::f64::consts::FRAC_PI_2), piece, a);
    let mut rho = 1.0;
    let mut points = vec![json!({ "depth_m": 0.0, "pressure_psi": wellhead_psi })];
    for k in 1..=segments {
        rho = momentum_outlet_density(rho, 0.0, 1.0, b).ok_or("column collapsed")?;
        points.push(json!({ "depth_m": k as f64 * piece, "pressure_psi": rho * wellhead_psi }));
    }
    let exact = wellhead_psi * (GRAVITY * depth_m / (a * a)).exp();
    Ok(json!({ "points": points, "bottom_exact_psi": exact, "relative_error": (rho * wellhead_psi / exact - 1.0).abs() })
        .to_string())
}

/// Maximal steady withdrawal of the bundled storage facility against
/// reservoir pressure, with the exchange bound set to `flow_max_kg_s`.
pub fn storage_curve_json(wellhead_psi: f64, flow_max_kg_s: f64, samples: usize) -> Result<String, String> {
    positive("wellhead pressure", wellhead_psi)?;
    positive("flow bound", flow_max_kg_s)?;
    let mut model = fixtures::six_junction_storage();
    model.storages[0].flow_max = flow_max_kg_s;
    let curve = storage_curve(&model, None, Some(psi_to_pa(wellhead_psi)), 100.0, samples).map_err(|e| e.to_string())?;
    let points: Vec<_> = curve
        .iter()
        .map(|p| {
            json!({
                "reservoir_psi": pa_to_psi(p.reservoir_pressure),
                "withdrawal_kg_s": p.withdrawal,
                "well_capacity_kg_s": p.well_capacity,
                "limit": p.limit,
            })
        })
        .collect();
    Ok(json!({ "points": points }).to_string())
}

#[wasm_bindgen]
pub fn steady_profile(
    inlet_mpa: f64,
    flow_kg_s: f64,
    length_km: f64,
    diameter_m: f64,
    friction: f64,
    rise_m: f64,
    segments: usize,
) -> Result<String, JsValue> {
    steady_profile_json(inlet_mpa, flow_kg_s, length_km, diameter_m, friction, rise_m, segments).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn static_column(wellhead_psi: f64, depth_m: f64, segments: usize) -> Result<String, JsValue> {
    static_column_json(wellhead_psi, depth_m, segments).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn withdrawal_curve(wellhead_psi: f64, flow_max_kg_s: f64, samples: usize) -> Result<String, JsValue> {
    storage_curve_json(wellhead_psi, flow_max_kg_s, samples).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn horizontal_profile_matches_closed_form() {
        let v = parse(&steady_profile_json(5.0, 60.0, 80.0, 0.6, 0.01, 0.0, 8).unwrap());
        let last = v["points"].as_array().unwrap().last().unwrap()["pressure_mpa"].as_f64().unwrap() * 1e6;
        let a = DEFAULT_SOUND_SPEED;
        let phi = 60.0 / (std::f64::consts::PI * 0.09);
        let exact = (25e12 - 0.01 * 80e3 / 0.6 * a * a * phi * phi).sqrt();
        assert!((last / exact - 1.0).abs() < 1e-10);
        assert!(v["choked_at_km"].is_null());
    }

    #[test]
    fn overloaded_pipe_chokes() {
        let v = parse(&steady_profile_json(2.0, 2000.0, 100.0, 0.3, 0.01, 0.0, 10).unwrap());
        assert!(v["choked_at_km"].as_f64().is_some());
    }

    #[test]
    fn column_reaches_the_exact_bottom_pressure() {
        let v = parse(&static_column_json(800.0, 1500.0, 30).unwrap());
        assert!(v["relative_error"].as_f64().unwrap() < 1e-12);
        assert!(static_column_json(800.0, -1.0, 3).is_err());
    }

    #[test]
    fn curve_rises_without_the_flow_bound() {
        let v = parse(&storage_curve_json(250.0, 1e4, 20).unwrap());
        let w: Vec<f64> = v["points"].as_array().unwrap().iter().map(|p| p["withdrawal_kg_s"].as_f64().unwrap()).collect();
        assert_eq!(w.len(), 20);
        assert!(w.windows(2).all(|p| p[1] > p[0]));
    }
}
