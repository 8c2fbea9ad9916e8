use gasflow::analysis::{optimize, OptimizeConfig};
use gasflow::fixtures;
use gasflow::simulator::InitialState;

#[test]
fn projected_start_reproduces_the_optimizer_at_hour_zero() {
    let out = optimize(&fixtures::six_junction_storage(), &OptimizeConfig::default()).unwrap();
    assert!(out.is_optimal());
    let t = &out.transcription;
    let x = &out.solution.x;
    let init = InitialState::from_trajectory(&t.net, &out.trajectory).unwrap();
    for (j, rho) in init.density.iter().enumerate() {
        assert!((rho - x[t.layout.rho[j][0]]).abs() < 1e-12, "junction {j}");
    }
    for (p, phi) in init.phi_plus.iter().enumerate() {
        let opt = x[t.layout.phi_plus[p][0]];
        assert!((phi - opt).abs() < 1e-6 * opt.abs().max(1.0), "pipe {p}: {phi} vs {opt}");
    }
    assert_eq!(init.reservoir_mass[0], fixtures::six_junction_storage().storages[0].initial_mass);
}
