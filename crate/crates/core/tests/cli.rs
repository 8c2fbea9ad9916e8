use std::fs;
use std::path::Path;

use gasflow::cli::run;

fn gasflow(args: &[&str]) -> i32 {
    run(std::iter::once("gasflow").chain(args.iter().copied()))
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn optimize_output_feeds_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let opt = dir.path().join("opt");
    let sim = dir.path().join("sim");
    let o = opt.to_str().unwrap();
    assert_eq!(gasflow(&["optimize", "--network", "six-junction-storage", "--delta-km", "20", "--out", o]), 0);
    for f in ["summary.json", "junctions.csv", "pipes.csv", "compressors.csv", "storage.csv", "transfers.csv", "controls.json"] {
        assert!(opt.join(f).exists(), "{f}");
    }
    assert_eq!(header(&opt.join("junctions.csv")), "time_h,junction,kind,pressure_pa,density_kg_m3");
    assert_eq!(header(&opt.join("compressors.csv")), "time_h,compressor,ratio,flow_kg_s,work_j_kg,power_w");
    assert_eq!(header(&opt.join("transfers.csv")), "time_h,transfer,junction,direction,flow_kg_s,nomination_kg_s,price");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(opt.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "optimal");
    assert_eq!(summary["counts"], summary["expected_counts"]);

    let s = sim.to_str().unwrap();
    assert_eq!(gasflow(&["simulate", "--network", "six-junction-storage", "--controls", o, "--out", s]), 0);
    assert_eq!(header(&sim.join("storage.csv")), header(&opt.join("storage.csv")));
    let rows = fs::read_to_string(sim.join("junctions.csv")).unwrap().lines().count();
    assert_eq!(rows, fs::read_to_string(opt.join("junctions.csv")).unwrap().lines().count());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("out");
    fs::write(&cfg, format!("network = \"six-junction\"\ndelta-km = 40\nkappa = 0.5\nout = {:?}\n", out)).unwrap();
    assert_eq!(gasflow(&["optimize", "--config", cfg.to_str().unwrap(), "--kappa", "0.8"]), 0);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["kappa"], 0.8);
    assert_eq!(summary["config"]["delta_km"], 40.0);
}

#[test]
fn failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "no-such-key = 1\n").unwrap();
    assert_eq!(gasflow(&["optimize", "--config", bad.to_str().unwrap()]), 1);
    assert_eq!(gasflow(&["optimize", "--network", "missing-network"]), 1);
    assert_eq!(gasflow(&["optimize", "--network", "six-junction", "--kappa", "2"]), 1);
    let out = dir.path().join("short");
    let code = gasflow(&["optimize", "--network", "six-junction", "--max-iter", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn synthetic_documents_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert_eq!(gasflow(&["synth-network", "--junctions", "60", "--compressors", "3", "--storages", "1", "--transfers", "20", "--length-km", "400", "--seed", "5", "--out", p.to_str().unwrap()]), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let model = gasflow::network::read_network(&a).unwrap();
    assert_eq!(model.junctions.len(), 60);
}

#[test]
fn storage_curve_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve");
    assert_eq!(gasflow(&["storage-curve", "--network", "six-junction-storage", "--samples", "21", "--out", out.to_str().unwrap()]), 0);
    let text = fs::read_to_string(out.join("storage_curve.csv")).unwrap();
    assert_eq!(text.lines().count(), 22);
}
