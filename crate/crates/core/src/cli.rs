//! Command-line entry points and run-directory output.
//!
//! Settings resolve in three layers: built-in defaults, then a TOML config
//! file (`--config`) with the same keys as the flags, then the flags.
//! `GASFLOW_LOG` sets the log filter (default `info`).
//!
//! Every command writes one directory. `optimize` and `simulate` produce
//! `summary.json` plus long-format CSVs with one row per sample and entity:
//!
//! | file | columns |
//! |------|---------|
//! | `junctions.csv` | `time_h, junction, kind, pressure_pa, density_kg_m3` |
//! | `pipes.csv` | `time_h, pipe, from, to, flow_in_kg_s, flow_out_kg_s, flux_in_kg_m2s, flux_out_kg_m2s, linepack_kg` |
//! | `compressors.csv` | `time_h, compressor, ratio, flow_kg_s, work_j_kg, power_w` |
//! | `storage.csv` | `time_h, storage, junction, flow_kg_s, bottom_flow_kg_s, regulator_ratio, wellhead_pressure_pa, reservoir_mass_kg, reservoir_pressure_pa` |
//! | `transfers.csv` | `time_h, transfer, junction, direction, flow_kg_s, nomination_kg_s, price` |
//!
//! `optimize` also writes `controls.json`, which `simulate --controls`
//! accepts unchanged (or the run directory holding it).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{self, OptimizeConfig, SynthSpec};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::ipm::SolverOptions;
use crate::network::{read_network, segment_network, write_network, AugmentedNetwork, NetworkModel};
use crate::nondim::{pa_to_psi, psi_to_pa};
use crate::physics::static_column_ratio;
use crate::simulator::{self, ControlSchedule, InitialState, SimulationOptions, StorageControl};
use crate::transcription::{expected_counts, TransientTrajectory};

#[derive(Debug, Parser)]
#[command(name = "gasflow", version, about = "Transient optimal control of gas pipeline networks with storage")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

/// Settings shared by all commands; each may also come from the config file.
#[derive(Debug, Clone, Default, clap::Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Flags {
    /// TOML file with any of these settings, overridden by flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Network document path or built-in fixture name.
    #[arg(long, global = true)]
    pub network: Option<String>,
    /// Segment length Δ (km).
    #[arg(long, global = true)]
    pub delta_km: Option<f64>,
    /// Optimization time step (h).
    #[arg(long, global = true)]
    pub dt_hours: Option<f64>,
    /// Horizon T (h); defaults to the network's.
    #[arg(long, global = true)]
    pub horizon_hours: Option<f64>,
    /// Weight of economic value against compressor energy.
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Solver tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Solver iteration limit.
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Output directory (or file for synth-network).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed of the synthetic generator.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Smoothing ε of `x|x|` in the momentum law.
    #[arg(long, global = true)]
    pub smoothing: Option<f64>,
}

impl Flags {
    /// `self` with unset fields taken from `base`.
    fn over(self, base: Flags) -> Flags {
        Flags {
            config: self.config.or(base.config),
            network: self.network.or(base.network),
            delta_km: self.delta_km.or(base.delta_km),
            dt_hours: self.dt_hours.or(base.dt_hours),
            horizon_hours: self.horizon_hours.or(base.horizon_hours),
            kappa: self.kappa.or(base.kappa),
            tol: self.tol.or(base.tol),
            max_iter: self.max_iter.or(base.max_iter),
            out: self.out.or(base.out),
            seed: self.seed.or(base.seed),
            smoothing: self.smoothing.or(base.smoothing),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StorageModeArg {
    Ratio,
    Flow,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the periodic optimal control problem.
    Optimize,
    /// Replay a control schedule with the transient simulator.
    Simulate {
        /// controls.json or a run directory holding it.
        #[arg(long)]
        controls: PathBuf,
        /// Simulation step (s).
        #[arg(long, default_value_t = 60.0)]
        sim_dt_seconds: f64,
        /// Prescribe the storage regulator ratio or the storage flow.
        #[arg(long, value_enum, default_value_t = StorageModeArg::Ratio)]
        storage_mode: StorageModeArg,
    },
    /// Compare solutions across segment lengths.
    MeshStudy {
        /// Segment lengths (km), comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.5, 5.0, 7.5, 10.0])]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        reference_km: f64,
    },
    /// Maximal steady withdrawal against reservoir pressure.
    StorageCurve {
        /// Storage id; defaults to the first.
        #[arg(long)]
        storage: Option<String>,
        #[arg(long, default_value_t = 25)]
        samples: usize,
        /// Wellhead pressure (psi); defaults to the storage minimum.
        #[arg(long)]
        wellhead_psi: Option<f64>,
    },
    /// Write a seeded synthetic network document.
    SynthNetwork {
        #[arg(long, default_value_t = 506)]
        junctions: usize,
        #[arg(long, default_value_t = 20)]
        compressors: usize,
        #[arg(long, default_value_t = 4)]
        storages: usize,
        #[arg(long, default_value_t = 196)]
        transfers: usize,
        #[arg(long, default_value_t = 3490.0)]
        length_km: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Optimize => "optimize",
            Command::Simulate { .. } => "simulate",
            Command::MeshStudy { .. } => "mesh-study",
            Command::StorageCurve { .. } => "storage-curve",
            Command::SynthNetwork { .. } => "synth-network",
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub network: Option<String>,
    pub delta_km: f64,
    pub dt_hours: f64,
    pub horizon_hours: Option<f64>,
    pub kappa: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub smoothing: Option<f64>,
}

impl RunConfig {
    /// Applies defaults under `flags` (already merged with the config file).
    pub fn resolve(flags: Flags, command: &str) -> Result<RunConfig> {
        let solver = SolverOptions::default();
        let cfg = RunConfig {
            network: flags.network,
            delta_km: flags.delta_km.unwrap_or(10.0),
            dt_hours: flags.dt_hours.unwrap_or(1.0),
            horizon_hours: flags.horizon_hours,
            kappa: flags.kappa.unwrap_or(0.95),
            tol: flags.tol.unwrap_or(solver.tol),
            max_iter: flags.max_iter.unwrap_or(solver.max_iter),
            out: flags.out.unwrap_or_else(|| PathBuf::from("runs").join(command)),
            seed: flags.seed.unwrap_or(0),
            smoothing: flags.smoothing,
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("delta-km", cfg.delta_km)?;
        positive("dt-hours", cfg.dt_hours)?;
        positive("tol", cfg.tol)?;
        if let Some(t) = cfg.horizon_hours {
            positive("horizon-hours", t)?;
        }
        if let Some(e) = cfg.smoothing {
            positive("smoothing", e)?;
        }
        if !(0.0..=1.0).contains(&cfg.kappa) {
            return Err(Error::InvalidArgument(format!("kappa must lie in [0, 1], got {}", cfg.kappa)));
        }
        Ok(cfg)
    }

    fn optimize_config(&self) -> OptimizeConfig {
        let mut c = OptimizeConfig {
            delta: self.delta_km * 1e3,
            dt_hours: self.dt_hours,
            horizon_hours: self.horizon_hours,
            ..Default::default()
        };
        c.transcription.kappa = self.kappa;
        c.transcription.smoothing = self.smoothing;
        c.solver.tol = self.tol;
        c.solver.max_iter = self.max_iter;
        c
    }

    fn load_network(&self) -> Result<NetworkModel> {
        let name = self
            .network
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("no network given (--network or `network` in the config)".into()))?;
        if Path::new(name).exists() {
            return read_network(name);
        }
        fixtures::by_name(name).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "`{name}` is neither a file nor a built-in network ({})",
                fixtures::NAMES.join(", ")
            ))
        })
    }
}

fn read_config(path: &Path) -> Result<Flags> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 on errors, 2 when a solve ends without optimality.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cli: Cli) -> Result<i32> {
    let file = match &cli.flags.config {
        Some(p) => read_config(p)?,
        None => Flags::default(),
    };
    let merged = cli.flags.over(file);
    let explicit_delta = merged.delta_km.is_some();
    let cfg = RunConfig::resolve(merged, cli.command.name())?;
    match cli.command {
        Command::Optimize => cmd_optimize(&cfg),
        Command::Simulate { controls, sim_dt_seconds, storage_mode } => {
            let mode = match storage_mode {
                StorageModeArg::Ratio => StorageControl::Ratio,
                StorageModeArg::Flow => StorageControl::Flow,
            };
            cmd_simulate(&cfg, explicit_delta, &controls, sim_dt_seconds, mode)
        }
        Command::MeshStudy { deltas, reference_km } => cmd_mesh_study(&cfg, &deltas, reference_km),
        Command::StorageCurve { storage, samples, wellhead_psi } => {
            cmd_storage_curve(&cfg, storage.as_deref(), samples, wellhead_psi)
        }
        Command::SynthNetwork { junctions, compressors, storages, transfers, length_km } => {
            let spec = SynthSpec { junctions, compressors, storages, transfers, total_length: length_km * 1e3, seed: cfg.seed };
            cmd_synth_network(&cfg, &spec)
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    w.write_record(header).map_err(|e| Error::Format(e.to_string()))?;
    Ok(w)
}

fn put(w: &mut csv::Writer<fs::File>, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(|e| Error::Format(e.to_string()))
}

fn finish(mut w: csv::Writer<fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

/// Writes the five trajectory CSVs into `dir`.
pub fn write_trajectory(dir: &Path, traj: &TransientTrajectory, net: &AugmentedNetwork) -> Result<()> {
    let t = &traj.times_hours;
    let kinds: BTreeMap<&str, &'static str> = net
        .junctions
        .iter()
        .map(|j| {
            let kind = match j.kind {
                crate::network::JunctionKind::Physical => "physical",
                crate::network::JunctionKind::Internal { .. } => "internal",
                crate::network::JunctionKind::Well { .. } => "well",
            };
            (j.name.as_str(), kind)
        })
        .collect();
    let mut w = csv_writer(&dir.join("junctions.csv"), &["time_h", "junction", "kind", "pressure_pa", "density_kg_m3"])?;
    for (i, ti) in t.iter().enumerate() {
        for j in &traj.junctions {
            let kind = kinds.get(j.id.as_str()).copied().unwrap_or("physical");
            put(&mut w, &[ti.to_string(), j.id.clone(), kind.into(), j.pressure[i].to_string(), j.density[i].to_string()])?;
        }
    }
    finish(w)?;

    let mut w = csv_writer(
        &dir.join("pipes.csv"),
        &[
            "time_h",
            "pipe",
            "from",
            "to",
            "flow_in_kg_s",
            "flow_out_kg_s",
            "flux_in_kg_m2s",
            "flux_out_kg_m2s",
            "linepack_kg",
        ],
    )?;
    for (i, ti) in t.iter().enumerate() {
        for p in &traj.pipes {
            put(
                &mut w,
                &[
                    ti.to_string(),
                    p.id.clone(),
                    p.from.clone(),
                    p.to.clone(),
                    p.flow_in[i].to_string(),
                    p.flow_out[i].to_string(),
                    p.flux_in[i].to_string(),
                    p.flux_out[i].to_string(),
                    p.linepack[i].to_string(),
                ],
            )?;
        }
    }
    finish(w)?;

    let mut w =
        csv_writer(&dir.join("compressors.csv"), &["time_h", "compressor", "ratio", "flow_kg_s", "work_j_kg", "power_w"])?;
    for (i, ti) in t.iter().enumerate() {
        for c in &traj.compressors {
            put(
                &mut w,
                &[
                    ti.to_string(),
                    c.id.clone(),
                    c.ratio[i].to_string(),
                    c.flow[i].to_string(),
                    c.work[i].to_string(),
                    c.power[i].to_string(),
                ],
            )?;
        }
    }
    finish(w)?;

    let mut w = csv_writer(
        &dir.join("storage.csv"),
        &[
            "time_h",
            "storage",
            "junction",
            "flow_kg_s",
            "bottom_flow_kg_s",
            "regulator_ratio",
            "wellhead_pressure_pa",
            "reservoir_mass_kg",
            "reservoir_pressure_pa",
        ],
    )?;
    for (i, ti) in t.iter().enumerate() {
        for s in &traj.storages {
            put(
                &mut w,
                &[
                    ti.to_string(),
                    s.id.clone(),
                    s.junction.clone(),
                    s.flow[i].to_string(),
                    s.bottom_flow[i].to_string(),
                    s.regulator_ratio[i].to_string(),
                    s.wellhead_pressure[i].to_string(),
                    s.reservoir_mass[i].to_string(),
                    s.reservoir_pressure[i].to_string(),
                ],
            )?;
        }
    }
    finish(w)?;

    let mut w = csv_writer(
        &dir.join("transfers.csv"),
        &["time_h", "transfer", "junction", "direction", "flow_kg_s", "nomination_kg_s", "price"],
    )?;
    for (i, ti) in t.iter().enumerate() {
        for r in &traj.transfers {
            let dir = match r.direction {
                crate::network::TransferDirection::Intake => "intake",
                crate::network::TransferDirection::Offtake => "offtake",
            };
            put(
                &mut w,
                &[
                    ti.to_string(),
                    r.id.clone(),
                    r.junction.clone(),
                    dir.into(),
                    r.flow[i].to_string(),
                    r.nomination[i].to_string(),
                    r.price[i].to_string(),
                ],
            )?;
        }
    }
    finish(w)
}

/// Initial state stored with a schedule: pressures of every segmented
/// junction and reservoir masses at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialPressures {
    pub junction_pressure: BTreeMap<String, f64>,
    #[serde(default)]
    pub reservoir_mass: BTreeMap<String, f64>,
}

/// `controls.json`: a schedule, optionally with the segmentation and the
/// initial state it was produced on. A bare schedule also parses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlsDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_km: Option<f64>,
    #[serde(flatten)]
    pub schedule: ControlSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialPressures>,
}

impl ControlsDocument {
    pub fn from_trajectory(traj: &TransientTrajectory, delta_km: f64) -> Result<Self> {
        Ok(ControlsDocument {
            delta_km: Some(delta_km),
            schedule: ControlSchedule::from_trajectory(traj, StorageControl::Ratio)?,
            initial: Some(InitialPressures {
                junction_pressure: traj.junctions.iter().map(|j| (j.id.clone(), j.pressure[0])).collect(),
                reservoir_mass: traj.storages.iter().map(|s| (s.id.clone(), s.reservoir_mass[0])).collect(),
            }),
        })
    }

    /// Simulation start on `net`: the stored state when present, otherwise
    /// rest at the mean slack pressure with static well columns.
    pub fn initial_state(&self, net: &AugmentedNetwork) -> Result<InitialState> {
        let Some(init) = &self.initial else {
            return resting_state(net);
        };
        let p = net
            .junctions
            .iter()
            .map(|j| {
                init.junction_pressure.get(&j.name).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "initial state has no pressure for junction `{}`; was the schedule made with another --delta-km?",
                        j.name
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut s = simulator::project_initial_state(net, &p)?;
        for (k, st) in net.model.storages.iter().enumerate() {
            if let Some(m) = init.reservoir_mass.get(&st.id) {
                s.reservoir_mass[k] = *m;
            }
        }
        Ok(s)
    }
}

/// Network at rest: every junction at the mean slack pressure at t = 0,
/// wells holding a static column above their reservoirs.
pub fn resting_state(net: &AugmentedNetwork) -> Result<InitialState> {
    let slack: Vec<f64> = net.junctions.iter().filter_map(|j| j.slack_pressure.as_ref().map(|p| p.value_at(0.0))).collect();
    let level = if slack.is_empty() {
        0.5 * (net.junctions[0].pressure_min + net.junctions[0].pressure_max)
    } else {
        slack.iter().sum::<f64>() / slack.len() as f64
    };
    let mut p = vec![level; net.junctions.len()];
    let a2 = net.model.params.sound_speed_sq();
    for (s, st) in net.storages.iter().enumerate() {
        let ms = &net.model.storages[s];
        let mut v = ms.initial_mass / ms.volume * a2;
        p[st.bottom_hole] = v;
        for &k in st.well_pipes.iter().rev() {
            v /= static_column_ratio(net.pipes[k].beta);
            p[net.pipes[k].from] = v;
        }
    }
    simulator::project_initial_state(net, &p)
}

fn cmd_optimize(cfg: &RunConfig) -> Result<i32> {
    let model = cfg.load_network()?;
    let oc = cfg.optimize_config();
    let out = analysis::optimize(&model, &oc)?;
    create_dir(&cfg.out)?;
    let net = &out.transcription.net;
    write_trajectory(&cfg.out, &out.trajectory, net)?;
    write_json(&cfg.out.join("controls.json"), &ControlsDocument::from_trajectory(&out.trajectory, cfg.delta_km)?)?;
    let sc = net.scales;
    let o = &out.trajectory.objective;
    let summary = json!({
        "command": "optimize",
        "config": cfg,
        "status": out.solution.status.to_string(),
        "message": out.solution.message,
        "iterations": out.solution.iterations,
        "timings": { "build_s": out.build_seconds, "solve_s": out.solution.seconds },
        "objective": { "J": o.total, "J_P": o.economic_value, "J_E": o.compressor_energy, "kappa": o.kappa },
        "counts": out.counts,
        "expected_counts": expected_counts(net, out.transcription.grid.steps),
        "residuals": out.solution.residuals,
        "max_mass_defect_kg_s": out.max_mass_defect,
        "max_mass_defect_nondim": out.max_mass_defect / sc.mass_flow(),
        "segmented": { "junctions": net.junctions.len(), "pipes": net.pipes.len() },
    });
    write_json(&cfg.out.join("summary.json"), &summary)?;
    println!(
        "{}: J = {:.6e} (J_P = {:.6e} $, J_E = {:.6e} MWh) after {} iterations, {:.2} s -> {}",
        out.solution.status,
        o.total,
        o.economic_value,
        o.compressor_energy,
        out.solution.iterations,
        out.solution.seconds,
        cfg.out.display()
    );
    Ok(if out.is_optimal() { 0 } else { 2 })
}

fn cmd_simulate(cfg: &RunConfig, explicit_delta: bool, controls: &Path, dt_seconds: f64, mode: StorageControl) -> Result<i32> {
    let model = cfg.load_network()?;
    let path = if controls.is_dir() { controls.join("controls.json") } else { controls.to_path_buf() };
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut doc: ControlsDocument = serde_json::from_str(&text)?;
    doc.schedule.storage_mode = mode;
    // the stored state fixes the segmentation unless overridden
    let delta_km = if explicit_delta { cfg.delta_km } else { doc.delta_km.unwrap_or(cfg.delta_km) };
    let net = segment_network(&model, delta_km * 1e3)?;
    let init = doc.initial_state(&net)?;
    let opts = SimulationOptions {
        dt_seconds,
        horizon_hours: cfg.horizon_hours,
        kappa: cfg.kappa,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let r = simulator::simulate(&net, &doc.schedule, &init, &opts)?;
    let seconds = start.elapsed().as_secs_f64();
    create_dir(&cfg.out)?;
    write_trajectory(&cfg.out, &r.trajectory, &net)?;
    let o = &r.trajectory.objective;
    let summary = json!({
        "command": "simulate",
        "config": cfg,
        "controls": path,
        "delta_km": delta_km,
        "dt_seconds": dt_seconds,
        "steps": r.steps,
        "newton_iterations": r.newton_iterations,
        "max_mass_defect_nondim": r.max_mass_defect,
        "warnings": r.warnings,
        "objective": { "J": o.total, "J_P": o.economic_value, "J_E": o.compressor_energy, "kappa": o.kappa },
        "seconds": seconds,
    });
    write_json(&cfg.out.join("summary.json"), &summary)?;
    for w in &r.warnings {
        warn!("{w}");
    }
    println!(
        "simulated {} steps ({} Newton iterations, {:.2} s), mass defect {:.2e} -> {}",
        r.steps,
        r.newton_iterations,
        seconds,
        r.max_mass_defect,
        cfg.out.display()
    );
    Ok(0)
}

fn cmd_mesh_study(cfg: &RunConfig, deltas: &[f64], reference_km: f64) -> Result<i32> {
    let model = cfg.load_network()?;
    let study = analysis::mesh_study(&model, &cfg.optimize_config(), deltas, reference_km)?;
    create_dir(&cfg.out)?;
    let mut w = csv_writer(
        &cfg.out.join("mesh.csv"),
        &["delta_km", "storage_error", "pressure_error", "objective", "iterations", "solve_s"],
    )?;
    for r in &study.rows {
        put(
            &mut w,
            &[
                r.delta_km.to_string(),
                r.storage_error.map(|e| e.to_string()).unwrap_or_default(),
                r.pressure_error.to_string(),
                r.objective.to_string(),
                r.iterations.to_string(),
                r.seconds.to_string(),
            ],
        )?;
    }
    finish(w)?;
    write_json(&cfg.out.join("summary.json"), &json!({ "command": "mesh-study", "config": cfg, "study": study }))?;
    println!("{:>8} {:>12} {:>12}", "delta_km", "E_s", "E_p");
    for r in &study.rows {
        let es = r.storage_error.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into());
        println!("{:>8} {:>12} {:>12.3e}", r.delta_km, es, r.pressure_error);
    }
    if let Some(f) = &study.failure {
        eprintln!("error: {f}");
        return Ok(2);
    }
    Ok(0)
}

fn cmd_storage_curve(cfg: &RunConfig, storage: Option<&str>, samples: usize, wellhead_psi: Option<f64>) -> Result<i32> {
    let model = cfg.load_network()?;
    let curve = analysis::storage_curve(&model, storage, wellhead_psi.map(psi_to_pa), cfg.delta_km * 1e3, samples)?;
    create_dir(&cfg.out)?;
    let mut w = csv_writer(
        &cfg.out.join("storage_curve.csv"),
        &["reservoir_pressure_pa", "reservoir_pressure_psi", "withdrawal_kg_s", "well_capacity_kg_s", "limit"],
    )?;
    for p in &curve {
        let limit = serde_json::to_value(p.limit)?.as_str().unwrap_or_default().to_string();
        put(
            &mut w,
            &[
                p.reservoir_pressure.to_string(),
                pa_to_psi(p.reservoir_pressure).to_string(),
                p.withdrawal.to_string(),
                p.well_capacity.to_string(),
                limit,
            ],
        )?;
    }
    finish(w)?;
    write_json(&cfg.out.join("summary.json"), &json!({ "command": "storage-curve", "config": cfg, "curve": curve }))?;
    for p in &curve {
        println!("{:>9.1} psi  {:>9.3} kg/s", pa_to_psi(p.reservoir_pressure), p.withdrawal);
    }
    Ok(0)
}

fn cmd_synth_network(cfg: &RunConfig, spec: &SynthSpec) -> Result<i32> {
    let model = analysis::synth_network(spec)?;
    let path = if cfg.out.extension().is_some_and(|e| e == "json") {
        if let Some(parent) = cfg.out.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        cfg.out.clone()
    } else {
        create_dir(&cfg.out)?;
        cfg.out.join("network.json")
    };
    write_network(&model, &path)?;
    info!("seed {}: {} junctions, {:.1} km of pipe", spec.seed, model.junctions.len(), model.total_pipe_length() / 1e3);
    println!(
        "{} junctions, {} pipes, {} compressors, {} storages, {} transfers, {:.1} km -> {}",
        model.junctions.len(),
        model.pipes.len(),
        model.compressors.len(),
        model.storages.len(),
        model.receipts.len() + model.deliveries.len(),
        model.total_pipe_length() / 1e3,
        path.display()
    );
    Ok(0)
}

