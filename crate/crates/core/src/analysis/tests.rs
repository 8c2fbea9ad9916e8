use super::*;
use crate::fixtures;
use crate::nondim::{pa_to_psi, GRAVITY};

#[test]
fn relative_error_of_identical_series_is_zero() {
    assert_eq!(mean_relative_error(&[1.0, -2.0], &[1.0, -2.0]).unwrap(), 0.0);
    assert!((mean_relative_error(&[1.1, -2.0], &[1.0, -2.0]).unwrap() - 0.1 / 3.0).abs() < 1e-15);
    assert!(mean_relative_error(&[1.0], &[0.0]).is_err());
    assert!(mean_relative_error(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn storage_curve_is_monotone_and_ends_at_capacity() {
    let model = fixtures::six_junction_storage();
    let curve = storage_curve(&model, None, None, 250.0, 25).unwrap();
    assert_eq!(curve.len(), 25);
    assert!(curve.windows(2).all(|w| w[1].withdrawal >= w[0].withdrawal));
    assert!(curve.windows(2).all(|w| w[1].well_capacity > w[0].well_capacity));
    let last = curve.last().unwrap();
    assert!((pa_to_psi(last.reservoir_pressure) - 1365.0).abs() < 1.0);
    assert!(last.well_capacity > 0.0);
}

#[test]
fn withdrawal_vanishes_at_the_static_crossing() {
    let model = fixtures::six_junction_storage();
    let st = &model.storages[0];
    let a2 = model.params.sound_speed_sq();
    // wellhead pressure that a resting column above the minimum inventory holds
    let p_r = st.mass_min / st.volume * a2;
    let p_static = p_r * (-GRAVITY * st.well_length / a2).exp();
    let at = |p_wh: f64| storage_curve(&model, Some("st1"), Some(p_wh), 100.0, 2).unwrap()[0];
    let crossing = at(p_static * (1.0 + 1e-12));
    assert_eq!(crossing.withdrawal, 0.0);
    assert_eq!(crossing.limit, CurveLimit::Static);
    let below = at(p_static * (1.0 - 1e-6));
    assert!(below.withdrawal > 0.0 && below.withdrawal < 10.0, "{}", below.withdrawal);
}

#[test]
fn single_piece_well_matches_closed_form() {
    let model = fixtures::six_junction_storage();
    let st = &model.storages[0];
    let net = crate::network::segment_network(&model, 1e4).unwrap();
    let sp = &net.pipes[net.storages[0].well_pipes[0]];
    assert_eq!(net.storages[0].well_pipes.len(), 1);
    let sc = net.scales;
    let p_wh = st.wellhead_pressure_min;
    let pt = storage_curve(&model, None, None, 1e4, 3).unwrap()[1];
    let (rr, rw) = (pt.reservoir_pressure / sc.pressure, p_wh / sc.pressure);
    let w = ((sp.beta.exp() * rr * rr - rw * rw) / (sp.resistance() * crate::physics::gravity_factor(sp.beta))).sqrt();
    let expect = w * st.well_area() * sc.flux();
    assert!((pt.well_capacity - expect).abs() < 1e-9 * expect, "{} vs {expect}", pt.well_capacity);
}

#[test]
fn storage_curve_rejects_bad_requests() {
    assert!(storage_curve(&fixtures::six_junction(), None, None, 100.0, 20).is_err());
    let m = fixtures::six_junction_storage();
    assert!(storage_curve(&m, Some("nope"), None, 100.0, 20).is_err());
    assert!(storage_curve(&m, None, Some(-1.0), 100.0, 20).is_err());
    assert!(storage_curve(&m, None, None, 100.0, 1).is_err());
}

#[test]
fn mesh_study_against_itself_is_exact() {
    let model = fixtures::six_junction_storage();
    let cfg = OptimizeConfig { delta: 40e3, ..Default::default() };
    let study = mesh_study(&model, &cfg, &[40.0], 40.0).unwrap();
    assert!(study.failure.is_none(), "{:?}", study.failure);
    assert_eq!(study.rows[0].storage_error, Some(0.0));
    assert_eq!(study.rows[0].pressure_error, 0.0);
    assert!(mesh_study(&model, &cfg, &[0.0], 40.0).is_err());
}

#[test]
fn cross_validation_of_a_trajectory_with_itself_is_zero() {
    let model = fixtures::six_junction_storage();
    let out = optimize(&model, &OptimizeConfig { delta: 40e3, ..Default::default() }).unwrap();
    assert!(out.is_optimal());
    let cv = cross_validate(&out.trajectory, &out.trajectory).unwrap();
    assert_eq!(cv.samples, 24);
    assert_eq!(cv.pressure("3"), Some(0.0));
    assert_eq!(cv.storage("st1"), Some(0.0));
    assert!(out.max_mass_defect < 1e-6, "{}", out.max_mass_defect);
}
