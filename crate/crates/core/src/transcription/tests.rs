use super::*;
use crate::fixtures;
use crate::network::{parse_network, segment_network};
use crate::nlp::derivative_errors;
use crate::physics::momentum_outlet_density;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single_pipe() -> AugmentedNetwork {
    let m = parse_network(
        r#"{
        "junctions": [
            {"id": "a", "pressure_min": 3e6, "pressure_max": 6e6, "slack_pressure": 4e6},
            {"id": "b", "pressure_min": 2e6, "pressure_max": 6e6}
        ],
        "pipes": [{"id": "p", "from": "a", "to": "b", "length": 20000, "diameter": 0.6, "friction_factor": 0.01}],
        "receipts": [{"id": "s", "junction": "a", "flow_max": 200, "price": -1}],
        "deliveries": [{"id": "d", "junction": "b", "flow_max": 100, "price": 3}]
    }"#,
    )
    .unwrap();
    segment_network(&m, 20e3).unwrap()
}

#[test]
fn grid_validation() {
    assert_eq!(TimeGrid::new(24.0, 1.0).unwrap().steps, 24);
    assert_eq!(TimeGrid::new(24.0, 0.25).unwrap().steps, 96);
    assert!(TimeGrid::new(24.0, 0.7).is_err());
    assert!(TimeGrid::new(24.0, 24.0).is_err());
    assert!(TimeGrid::new(24.0, -1.0).is_err());
    let g = TimeGrid::new(24.0, 1.0).unwrap();
    assert_eq!(g.prev(0), 23);
    assert_eq!(g.prev(5), 4);
}

/// Counts enumerated directly from the unsegmented model.
fn counting_oracle(model: &crate::network::NetworkModel, delta: f64, steps: usize) -> (usize, usize, usize) {
    let pieces = |l: f64| ((l / delta) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let subpipes: usize = model.pipes.iter().map(|p| pieces(p.length)).sum::<usize>()
        + model.storages.iter().map(|s| pieces(s.well_length)).sum::<usize>();
    let junctions = model.junctions.len()
        + model.pipes.iter().map(|p| pieces(p.length) - 1).sum::<usize>()
        + model.storages.iter().map(|s| pieces(s.well_length) + 1).sum::<usize>();
    let c = model.compressors.len();
    let s = model.storages.len();
    let t = model.receipts.len() + model.deliveries.len();
    let per_node_vars = junctions + 4 * subpipes + 3 * c + 5 * s + t;
    let per_node_eq = junctions + 4 * subpipes + 2 * c + 4 * s;
    (steps * per_node_vars, steps * per_node_eq, steps * c)
}

#[test]
fn counts_match_enumeration() {
    for (model, delta) in [
        (fixtures::six_junction(), 10e3),
        (fixtures::six_junction(), 25e3),
        (fixtures::six_junction_storage(), 10e3),
    ] {
        let net = segment_network(&model, delta).unwrap();
        let grid = TimeGrid::new(24.0, 1.0).unwrap();
        let t = build_nlp(&net, &grid, &TranscriptionOptions::default()).unwrap();
        let (n, me, mi) = counting_oracle(&model, delta, 24);
        assert_eq!((t.problem.n(), t.problem.equality_count(), t.problem.inequality_count()), (n, me, mi));
        let c = expected_counts(&net, 24);
        assert_eq!((c.n, c.equalities, c.inequalities), (n, me, mi));
    }
}

#[test]
fn six_junction_counts_at_ten_km() {
    // 29 sub-pipes (5 + 8 + 8 + 8), 6 + 25 junctions, 2 compressors, 6 transfers
    let net = segment_network(&fixtures::six_junction(), 10e3).unwrap();
    let t = build_nlp(&net, &TimeGrid::new(24.0, 1.0).unwrap(), &TranscriptionOptions::default()).unwrap();
    assert_eq!(t.problem.n(), 24 * (31 + 4 * 29 + 6 + 6));
    assert_eq!(t.problem.equality_count(), 24 * (31 + 4 * 29 + 4));
    assert_eq!(t.problem.inequality_count(), 48);
}

#[test]
fn slack_density_is_fixed() {
    let net = segment_network(&fixtures::six_junction(), 10e3).unwrap();
    let t = build_nlp(&net, &TimeGrid::new(24.0, 1.0).unwrap(), &TranscriptionOptions::default()).unwrap();
    let (lb, ub) = t.problem.var_bounds();
    for &i in &t.layout.rho[0] {
        assert_eq!(lb[i], 1.0);
        assert_eq!(ub[i], 1.0);
    }
    let i = t.layout.rho[2][0];
    assert!(lb[i] < ub[i]);
}

#[test]
fn bad_kappa_and_crossed_bounds() {
    let net = single_pipe();
    let g = TimeGrid::new(24.0, 12.0).unwrap();
    assert!(build_nlp(&net, &g, &TranscriptionOptions { kappa: 1.5, smoothing: None }).is_err());
    let mut bad = net.clone();
    bad.model.deliveries[0].flow_min = Some(crate::network::Profile::constant(150.0));
    match build_nlp(&bad, &g, &TranscriptionOptions::default()) {
        Err(Error::InfeasibleBounds { name, .. }) => assert!(name.starts_with("f_d[d]"), "{name}"),
        other => panic!("unexpected {other:?}"),
    }
}

/// Steady uniform flow `q` (kg/s) through the single pipe.
fn steady_point(t: &Transcription, q: f64) -> Vec<f64> {
    let sc = t.net.scales;
    let lay = &t.layout;
    let p = &t.net.pipes[0];
    let phi = q / p.area / sc.flux();
    let rho_b = momentum_outlet_density(1.0, phi, p.resistance(), p.beta).unwrap();
    let mut x = t.problem.initial_point();
    for k in 0..t.grid.steps {
        x[lay.rho[0][k]] = 1.0;
        x[lay.rho[1][k]] = rho_b;
        x[lay.phi_plus[0][k]] = phi;
        x[lay.phi_minus[0][k]] = 0.0;
        x[lay.phi_in[0][k]] = phi;
        x[lay.phi_out[0][k]] = phi;
        x[lay.receipt[0][k]] = q / sc.mass_flow();
        x[lay.delivery[0][k]] = q / sc.mass_flow();
    }
    x
}

#[test]
fn two_step_steady_flow_is_feasible() {
    let net = single_pipe();
    let t = build_nlp(&net, &TimeGrid::new(24.0, 12.0).unwrap(), &TranscriptionOptions::default()).unwrap();
    assert_eq!(t.grid.steps, 2);
    let x = steady_point(&t, 80.0);
    let mut c = vec![0.0; t.problem.m()];
    t.problem.constraints(&x, &mut c);
    assert!(c.iter().all(|v| v.abs() < 1e-12), "{c:?}");
    for k in 0..2 {
        assert!(t.mass_balance_defect(&x, k).abs() < 1e-8);
    }
    let traj = t.extract(&x).unwrap();
    let pb = &traj.junctions[1].pressure;
    assert!(pb.windows(2).all(|w| w[0] == w[1]));
    assert!((traj.pipes[0].flow_in[0] - 80.0).abs() < 1e-9);
    // objective: (3 − 1)·80·24 $
    assert!((traj.objective.economic_value - 3840.0).abs() < 1e-8);
    assert!((t.problem.objective(&x) + 0.95 * 3840.0).abs() < 1e-8);
}

#[test]
fn derivatives_match_finite_differences() {
    let model = fixtures::six_junction_storage();
    let net = segment_network(&model, 20e3).unwrap();
    let t = build_nlp(&net, &TimeGrid::new(24.0, 2.0).unwrap(), &TranscriptionOptions::default()).unwrap();
    let p = &t.problem;
    let (lb, ub) = p.var_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let x: Vec<f64> = (0..p.n())
            .map(|i| {
                let (l, u) = (lb[i].max(-0.1), ub[i].min(2.0));
                if l == u { l } else { rng.gen_range(l..u) }
            })
            .collect();
        let lam: Vec<f64> = (0..p.m()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (j, h) = derivative_errors(p, &x, 0.7, &lam);
        assert!(j < 1e-6, "jacobian {j}");
        assert!(h < 1e-5, "hessian {h}");
    }
}

#[test]
fn reservoir_trace_accumulates_bottom_flow() {
    let model = fixtures::six_junction_storage();
    let net = segment_network(&model, 40e3).unwrap();
    let t = build_nlp(&net, &TimeGrid::new(24.0, 1.0).unwrap(), &TranscriptionOptions::default()).unwrap();
    let sc = net.scales;
    let st = &model.storages[0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut x = t.problem.initial_point();
    // reservoir slots consistent with the ODE for random bottom flows
    let mut mass = st.initial_mass;
    for i in 1..=24 {
        let k = i % 24;
        let f: f64 = rng.gen_range(-50.0..50.0);
        x[t.layout.bottom_flow[0][k]] = f / sc.mass_flow();
        mass += f * 3600.0;
        x[t.layout.reservoir[0][k]] = mass / st.volume / sc.density();
    }
    let traj = t.extract(&x).unwrap();
    let tr = &traj.storages[0];
    let mut oracle = st.initial_mass;
    assert_eq!(tr.reservoir_mass[0], oracle);
    for i in 1..=24 {
        oracle += tr.bottom_flow[i] * 3600.0;
        assert!((tr.reservoir_mass[i] - oracle).abs() < 1e-6 * oracle, "{i}");
    }
    // the reservoir equations hold at this point
    let mut c = vec![0.0; t.problem.m()];
    t.problem.constraints(&x, &mut c);
    let rows: Vec<usize> = (0..t.problem.m()).filter(|&r| t.problem.constraint_name(r).starts_with("reservoir[")).collect();
    assert_eq!(rows.len(), 24);
    assert!(rows.iter().all(|&r| c[r].abs() < 1e-10));
}

#[test]
fn periodic_samples_repeat() {
    let net = single_pipe();
    let t = build_nlp(&net, &TimeGrid::new(24.0, 6.0).unwrap(), &TranscriptionOptions::default()).unwrap();
    let x: Vec<f64> = (0..t.problem.n()).map(|i| i as f64 * 1e-3).collect();
    let traj = t.extract(&x).unwrap();
    assert_eq!(traj.times_hours, vec![0.0, 6.0, 12.0, 18.0, 24.0]);
    for j in &traj.junctions {
        assert_eq!(j.pressure[0], j.pressure[4]);
    }
    assert_eq!(traj.pipes[0].flux_in[0], traj.pipes[0].flux_in[4]);
}
