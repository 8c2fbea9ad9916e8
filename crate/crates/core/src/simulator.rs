//! Forward simulation with implicit Euler and damped Newton.
//!
//! Controls come from a [`ControlSchedule`] on a coarse grid of step
//! `step_hours`; sample `j` (1-based) applies on `((j−1)Δ, jΔ]`, the same
//! convention as the optimizer's backward differences. Every time step
//! solves the full coupled system: pipe mass and momentum, junction
//! balances, compressor boost, wellhead regulator, reservoir dynamics and
//! slack pressures, with the controls pinned by explicit equations.

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::MatMut;
use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::AugmentedNetwork;
use crate::physics::{compressor_work, gravity_factor, momentum_flux, objective_terms, signed_square};
use crate::transcription::{
    CompressorTrace, JunctionTrace, ObjectiveSummary, PipeTrace, StorageTrace, TransferTrace, TransientTrajectory,
};

/// Which storage quantity the schedule prescribes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageControl {
    /// Wellhead regulator ratio α_s; the exchange flow follows.
    #[default]
    Ratio,
    /// Exchange flow f_s; the regulator ratio follows.
    Flow,
}

/// Piecewise-constant controls keyed by entity id. Flows in kg/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub step_hours: f64,
    #[serde(default)]
    pub storage_mode: StorageControl,
    pub compressor_ratio: BTreeMap<String, Vec<f64>>,
    pub receipts: BTreeMap<String, Vec<f64>>,
    pub deliveries: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub storage_ratio: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub storage_flow: BTreeMap<String, Vec<f64>>,
}

impl ControlSchedule {
    /// Controls applied by an optimizer trajectory.
    pub fn from_trajectory(traj: &TransientTrajectory, mode: StorageControl) -> Result<Self> {
        let n = traj.times_hours.len();
        if n < 3 {
            return Err(Error::InvalidArgument("trajectory needs at least two intervals".into()));
        }
        let step_hours = traj.times_hours[1] - traj.times_hours[0];
        let tail = |v: &[f64]| v[1..].to_vec();
        let mut receipts = BTreeMap::new();
        let mut deliveries = BTreeMap::new();
        for t in &traj.transfers {
            let map = match t.direction {
                crate::network::TransferDirection::Intake => &mut receipts,
                crate::network::TransferDirection::Offtake => &mut deliveries,
            };
            map.insert(t.id.clone(), tail(&t.flow));
        }
        Ok(ControlSchedule {
            step_hours,
            storage_mode: mode,
            compressor_ratio: traj.compressors.iter().map(|c| (c.id.clone(), tail(&c.ratio))).collect(),
            receipts,
            deliveries,
            storage_ratio: traj.storages.iter().map(|s| (s.id.clone(), tail(&s.regulator_ratio))).collect(),
            storage_flow: traj.storages.iter().map(|s| (s.id.clone(), tail(&s.flow))).collect(),
        })
    }

    /// Interval index (0-based) holding time `t_hours`.
    fn slot(&self, t_hours: f64, len: usize) -> usize {
        let j = (t_hours / self.step_hours - 1e-9).ceil().max(1.0) as usize;
        (j - 1).min(len - 1)
    }

    /// Grid time whose profiles apply at `t_hours`.
    fn grid_time(&self, t_hours: f64) -> f64 {
        let j = (t_hours / self.step_hours - 1e-9).ceil().max(1.0);
        j * self.step_hours
    }

    fn lookup<'a>(map: &'a BTreeMap<String, Vec<f64>>, what: &str, id: &str) -> Result<&'a [f64]> {
        match map.get(id) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(Error::InvalidArgument(format!("control schedule has no {what} series for `{id}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub dt_seconds: f64,
    /// Output cadence; `None` records every step.
    pub sample_seconds: Option<f64>,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Simulated span; defaults to the network horizon.
    pub horizon_hours: Option<f64>,
    /// Objective weight used for the reported summary.
    pub kappa: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            dt_seconds: 60.0,
            sample_seconds: Some(3600.0),
            newton_tol: 1e-10,
            max_newton: 50,
            horizon_hours: None,
            kappa: 0.95,
        }
    }
}

/// Differential state plus flux guesses, nondimensional.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    /// Densities of all segmented junctions.
    pub density: Vec<f64>,
    pub phi_plus: Vec<f64>,
    pub phi_minus: Vec<f64>,
    /// Reservoir masses (kg).
    pub reservoir_mass: Vec<f64>,
}

/// Consistent start from junction pressures (Pa): the momentum law gives
/// each pipe's mean flux, and the mass imbalance is left to the first
/// implicit step.
pub fn project_initial_state(net: &AugmentedNetwork, pressures: &[f64]) -> Result<InitialState> {
    if pressures.len() != net.junctions.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} junction pressures, got {}",
            net.junctions.len(),
            pressures.len()
        )));
    }
    if let Some(j) = pressures.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "pressure at junction `{}` must be positive, got {}",
            net.junctions[j].name, pressures[j]
        )));
    }
    let density: Vec<f64> = pressures.iter().map(|p| p / net.scales.pressure).collect();
    let phi_plus = net
        .pipes
        .iter()
        .map(|p| momentum_flux(density[p.from], density[p.to], p.resistance(), p.beta))
        .collect();
    Ok(InitialState {
        phi_minus: vec![0.0; net.pipes.len()],
        phi_plus,
        density,
        reservoir_mass: net.model.storages.iter().map(|s| s.initial_mass).collect(),
    })
}

impl InitialState {
    /// State at sample 0 of a trajectory over the same segmentation.
    pub fn from_trajectory(net: &AugmentedNetwork, traj: &TransientTrajectory) -> Result<Self> {
        let p: Vec<f64> = traj.junctions.iter().map(|j| j.pressure[0]).collect();
        let mut s = project_initial_state(net, &p)?;
        for (k, st) in traj.storages.iter().enumerate() {
            s.reservoir_mass[k] = st.reservoir_mass[0];
        }
        Ok(s)
    }
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub trajectory: TransientTrajectory,
    pub steps: usize,
    pub newton_iterations: usize,
    /// Largest per-step mass balance defect (nondimensional mass flow).
    pub max_mass_defect: f64,
    pub warnings: Vec<String>,
}

/// Unknown layout of one time step.
struct Unknowns {
    nj: usize,
    np: usize,
    nc: usize,
    ns: usize,
    slacks: Vec<usize>,
}

impl Unknowns {
    fn rho(&self, j: usize) -> usize {
        j
    }
    fn phi_plus(&self, e: usize) -> usize {
        self.nj + e
    }
    fn phi_minus(&self, e: usize) -> usize {
        self.nj + self.np + e
    }
    fn ratio(&self, c: usize) -> usize {
        self.nj + 2 * self.np + c
    }
    fn flow(&self, c: usize) -> usize {
        self.nj + 2 * self.np + self.nc + c
    }
    fn storage(&self, s: usize, field: usize) -> usize {
        self.nj + 2 * self.np + 2 * self.nc + 4 * s + field
    }
    fn slack(&self, q: usize) -> usize {
        self.nj + 2 * self.np + 2 * self.nc + 4 * self.ns + q
    }
    fn len(&self) -> usize {
        self.nj + 2 * self.np + 2 * self.nc + 4 * self.ns + self.slacks.len()
    }
}

const FS: usize = 0;
const FBH: usize = 1;
const RHO_R: usize = 2;
const ALPHA_S: usize = 3;

/// Controls resolved for one step, nondimensional.
struct StepControls {
    ratio: Vec<f64>,
    receipt: Vec<f64>,
    delivery: Vec<f64>,
    storage: Vec<f64>,
    slack_rho: Vec<f64>,
}

struct System<'a> {
    net: &'a AugmentedNetwork,
    u: Unknowns,
    mode: StorageControl,
    dt: f64,
    names: Vec<String>,
}

impl System<'_> {
    /// Residuals and, optionally, Jacobian triplets.
    fn eval(
        &self,
        x: &[f64],
        prev: &[f64],
        c: &StepControls,
        f: &mut [f64],
        jac: Option<&mut Vec<Triplet<usize, usize, f64>>>,
    ) {
        let net = self.net;
        let u = &self.u;
        let sc = &net.scales;
        let mut jac = jac;
        if let Some(j) = jac.as_mut() {
            j.clear();
        }
        let mut put = |r: usize, col: usize, v: f64| {
            if let Some(j) = jac.as_mut() {
                j.push(Triplet::new(r, col, v));
            }
        };
        let mut row = 0;
        for (e, p) in net.pipes.iter().enumerate() {
            let l = p.length / sc.length / self.dt;
            let (ri, rj) = (u.rho(p.from), u.rho(p.to));
            f[row] = l * (x[ri] + x[rj] - prev[ri] - prev[rj]) + 4.0 * x[u.phi_minus(e)];
            put(row, ri, l);
            put(row, rj, l);
            put(row, u.phi_minus(e), 4.0);
            row += 1;
            let coef = p.resistance() * gravity_factor(p.beta);
            let eb = p.beta.exp();
            let (ss, dss, _) = signed_square(x[u.phi_plus(e)], None);
            f[row] = eb * x[rj] * x[rj] - x[ri] * x[ri] + coef * ss;
            put(row, rj, 2.0 * eb * x[rj]);
            put(row, ri, -2.0 * x[ri]);
            // floored so the Newton matrix stays regular at zero flow
                put(row, u.phi_plus(e), coef * dss.max(2e-6));
            row += 1;
        }
        let base = row;
        for j in 0..u.nj {
            f[base + j] = 0.0;
        }
        for (e, p) in net.pipes.iter().enumerate() {
            let (pp, pm) = (x[u.phi_plus(e)], x[u.phi_minus(e)]);
            f[base + p.from] += p.area * (pp - pm);
            put(base + p.from, u.phi_plus(e), p.area);
            put(base + p.from, u.phi_minus(e), -p.area);
            f[base + p.to] -= p.area * (pp + pm);
            put(base + p.to, u.phi_plus(e), -p.area);
            put(base + p.to, u.phi_minus(e), -p.area);
        }
        for (k, cp) in net.model.compressors.iter().enumerate() {
            f[base + cp.from] += x[u.flow(k)];
            put(base + cp.from, u.flow(k), 1.0);
            f[base + cp.to] -= x[u.flow(k)];
            put(base + cp.to, u.flow(k), -1.0);
        }
        for (t, tr) in net.model.receipts.iter().enumerate() {
            f[base + tr.junction] -= c.receipt[t];
        }
        for (t, tr) in net.model.deliveries.iter().enumerate() {
            f[base + tr.junction] += c.delivery[t];
        }
        for (s, st) in net.storages.iter().enumerate() {
            f[base + st.junction] += x[u.storage(s, FS)];
            put(base + st.junction, u.storage(s, FS), 1.0);
            f[base + st.wellhead] -= x[u.storage(s, FS)];
            put(base + st.wellhead, u.storage(s, FS), -1.0);
            f[base + st.bottom_hole] += x[u.storage(s, FBH)];
            put(base + st.bottom_hole, u.storage(s, FBH), 1.0);
        }
        for (q, &j) in u.slacks.iter().enumerate() {
            f[base + j] -= x[u.slack(q)];
            put(base + j, u.slack(q), -1.0);
        }
        row = base + u.nj;
        for (k, cp) in net.model.compressors.iter().enumerate() {
            let (ri, rj, a) = (u.rho(cp.from), u.rho(cp.to), u.ratio(k));
            f[row] = x[rj] - x[a] * x[ri];
            put(row, rj, 1.0);
            put(row, ri, -x[a]);
            put(row, a, -x[ri]);
            row += 1;
            f[row] = x[a] - c.ratio[k];
            put(row, a, 1.0);
            row += 1;
        }
        for (s, st) in net.storages.iter().enumerate() {
            let model = &net.model.storages[s];
            let (ri, rw, a) = (u.rho(st.junction), u.rho(st.wellhead), u.storage(s, ALPHA_S));
            f[row] = x[ri] - x[a] * x[rw];
            put(row, ri, 1.0);
            put(row, rw, -x[a]);
            put(row, a, -x[rw]);
            row += 1;
            let rr = u.storage(s, RHO_R);
            f[row] = x[u.rho(st.bottom_hole)] - x[rr];
            put(row, u.rho(st.bottom_hole), 1.0);
            put(row, rr, -1.0);
            row += 1;
            let v = model.volume / sc.volume() / self.dt;
            f[row] = v * (x[rr] - prev[rr]) - x[u.storage(s, FBH)];
            put(row, rr, v);
            put(row, u.storage(s, FBH), -1.0);
            row += 1;
            match self.mode {
                StorageControl::Ratio => {
                    f[row] = x[a] - c.storage[s];
                    put(row, a, 1.0);
                }
                StorageControl::Flow => {
                    f[row] = x[u.storage(s, FS)] - c.storage[s];
                    put(row, u.storage(s, FS), 1.0);
                }
            }
            row += 1;
        }
        for (q, &j) in u.slacks.iter().enumerate() {
            f[row] = x[u.rho(j)] - c.slack_rho[q];
            put(row, u.rho(j), 1.0);
            row += 1;
        }
        debug_assert_eq!(row, u.len());
    }

    fn equation_names(net: &AugmentedNetwork, u: &Unknowns) -> Vec<String> {
        let mut names = Vec::with_capacity(u.len());
        for k in 0..net.pipes.len() {
            let n = crate::transcription::sub_pipe_name(net, k);
            names.push(format!("mass[{n}]"));
            names.push(format!("momentum[{n}]"));
        }
        for j in &net.junctions {
            names.push(format!("balance[{}]", j.name));
        }
        for c in &net.model.compressors {
            names.push(format!("boost[{}]", c.id));
            names.push(format!("ratio[{}]", c.id));
        }
        for s in &net.model.storages {
            for what in ["regulator", "bottom-hole", "reservoir", "control"] {
                names.push(format!("{what}[{}]", s.id));
            }
        }
        for &j in &u.slacks {
            names.push(format!("slack[{}]", net.junctions[j].name));
        }
        names
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn worst(v: &[f64]) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) })
}

/// Runs the simulation from `init` under `controls`.
pub fn simulate(
    net: &AugmentedNetwork,
    controls: &ControlSchedule,
    init: &InitialState,
    opts: &SimulationOptions,
) -> Result<SimulationResult> {
    if !(opts.dt_seconds > 0.0) {
        return Err(Error::InvalidArgument(format!("simulation step must be positive, got {}", opts.dt_seconds)));
    }
    let model = &net.model;
    let sc = net.scales;
    let horizon = opts.horizon_hours.unwrap_or(model.params.horizon_hours);
    let steps = (horizon * 3600.0 / opts.dt_seconds).round() as usize;
    if steps == 0 || ((steps as f64) * opts.dt_seconds - horizon * 3600.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "simulation step {} s does not divide the horizon {horizon} h",
            opts.dt_seconds
        )));
    }
    let sample_every = match opts.sample_seconds {
        None => 1,
        Some(s) => {
            let k = (s / opts.dt_seconds).round() as usize;
            if k == 0 || ((k as f64) * opts.dt_seconds - s).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!(
                    "sample interval {s} s is not a multiple of the step {} s",
                    opts.dt_seconds
                )));
            }
            k
        }
    };

    let slacks: Vec<usize> = (0..net.junctions.len()).filter(|&j| net.junctions[j].slack_pressure.is_some()).collect();
    let u = Unknowns {
        nj: net.junctions.len(),
        np: net.pipes.len(),
        nc: model.compressors.len(),
        ns: model.storages.len(),
        slacks,
    };
    let names = System::equation_names(net, &u);
    let sys = System { net, u, mode: controls.storage_mode, dt: opts.dt_seconds / sc.time(), names };
    let u = &sys.u;

    // resolve control series once
    let ratio_series: Vec<&[f64]> = model
        .compressors
        .iter()
        .map(|c| ControlSchedule::lookup(&controls.compressor_ratio, "compressor ratio", &c.id))
        .collect::<Result<_>>()?;
    let receipt_series: Vec<&[f64]> = model
        .receipts
        .iter()
        .map(|t| ControlSchedule::lookup(&controls.receipts, "receipt", &t.id))
        .collect::<Result<_>>()?;
    let delivery_series: Vec<&[f64]> = model
        .deliveries
        .iter()
        .map(|t| ControlSchedule::lookup(&controls.deliveries, "delivery", &t.id))
        .collect::<Result<_>>()?;
    let storage_series: Vec<&[f64]> = model
        .storages
        .iter()
        .map(|s| match controls.storage_mode {
            StorageControl::Ratio => ControlSchedule::lookup(&controls.storage_ratio, "storage ratio", &s.id),
            StorageControl::Flow => ControlSchedule::lookup(&controls.storage_flow, "storage flow", &s.id),
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let at = |series: &[f64], t: f64| series[controls.slot(t, series.len())];
    let controls_at = |t: f64| StepControls {
        ratio: ratio_series.iter().map(|s| at(s, t)).collect(),
        receipt: receipt_series.iter().map(|s| at(s, t) / sc.mass_flow()).collect(),
        delivery: delivery_series.iter().map(|s| at(s, t) / sc.mass_flow()).collect(),
        storage: storage_series
            .iter()
            .map(|s| match controls.storage_mode {
                StorageControl::Ratio => at(s, t),
                StorageControl::Flow => at(s, t) / sc.mass_flow(),
            })
            .collect(),
        slack_rho: u
            .slacks
            .iter()
            .map(|&j| net.junctions[j].slack_pressure.as_ref().unwrap().value_at(controls.grid_time(t)) / sc.pressure)
            .collect(),
    };
    for (k, c) in model.compressors.iter().enumerate() {
        if ratio_series[k].iter().any(|&a| a < 1.0 - 1e-9 || a > c.ratio_max + 1e-9) {
            warnings.push(format!("compressor `{}` ratio leaves [1, {}]", c.id, c.ratio_max));
        }
    }

    // initial unknown vector
    let n = u.len();
    let mut x = vec![0.0; n];
    if init.density.len() != u.nj || init.phi_plus.len() != u.np || init.reservoir_mass.len() != u.ns {
        return Err(Error::InvalidArgument("initial state does not match the segmented network".into()));
    }
    x[..u.nj].copy_from_slice(&init.density);
    for e in 0..u.np {
        x[u.phi_plus(e)] = init.phi_plus[e];
        x[u.phi_minus(e)] = init.phi_minus[e];
    }
    let c0 = controls_at(opts.dt_seconds / 3600.0);
    for k in 0..u.nc {
        x[u.ratio(k)] = c0.ratio[k];
    }
    for (s, st) in net.storages.iter().enumerate() {
        let ms = &model.storages[s];
        x[u.storage(s, RHO_R)] = init.reservoir_mass[s] / ms.volume / sc.density();
        x[u.storage(s, ALPHA_S)] = (x[u.rho(st.junction)] / x[u.rho(st.wellhead)]).clamp(0.1, 10.0);
    }

    let mut samples = vec![(0.0, x.clone())];
    let mut total_newton = 0;
    let mut max_defect = 0.0f64;
    let mut f = vec![0.0; n];
    let mut ftrial = vec![0.0; n];
    let mut trip = Vec::with_capacity(8 * n);
    let mut symbolic: Option<faer::sparse::linalg::solvers::SymbolicLu<usize>> = None;
    let mut reservoir_flagged = vec![false; u.ns];

    for step in 1..=steps {
        let t_h = step as f64 * opts.dt_seconds / 3600.0;
        let c = controls_at(t_h);
        let prev = x.clone();
        let mut converged = false;
        for it in 0..opts.max_newton {
            sys.eval(&x, &prev, &c, &mut f, Some(&mut trip));
            let (wi, wv) = worst(&f);
            if !wv.is_finite() {
                break;
            }
            if wv <= opts.newton_tol {
                converged = true;
                total_newton += it;
                break;
            }
            let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
                .map_err(|e| Error::Linear(format!("{e:?}")))?;
            if symbolic.is_none() {
                symbolic = Some(
                    faer::sparse::linalg::solvers::SymbolicLu::try_new(mat.symbolic())
                        .map_err(|e| Error::Linear(format!("{e:?}")))?,
                );
            }
            let lu = faer::sparse::linalg::solvers::Lu::try_new_with_symbolic(symbolic.clone().unwrap(), mat.as_ref())
                .map_err(|e| Error::Simulation {
                    step,
                    time_s: step as f64 * opts.dt_seconds,
                    residual: wv,
                    name: format!("singular Newton matrix ({e:?}) near {}", sys.names[wi]),
                })?;
            let mut dx: Vec<f64> = f.iter().map(|v| -v).collect();
            lu.solve_in_place(MatMut::from_column_major_slice_mut(&mut dx, n, 1));
            // damped step on the residual norm
            let f0 = norm2(&f);
            let mut lambda = 1.0;
            let mut xt = x.clone();
            loop {
                for i in 0..n {
                    xt[i] = x[i] + lambda * dx[i];
                }
                sys.eval(&xt, &prev, &c, &mut ftrial, None);
                let ft = norm2(&ftrial);
                if ft.is_finite() && (ft <= (1.0 - 1e-4 * lambda) * f0 || lambda < 1e-6) {
                    break;
                }
                lambda *= 0.5;
            }
            std::mem::swap(&mut x, &mut xt);
        }
        if !converged {
            sys.eval(&x, &prev, &c, &mut f, None);
            let (wi, wv) = worst(&f);
            return Err(Error::Simulation {
                step,
                time_s: step as f64 * opts.dt_seconds,
                residual: wv,
                name: sys.names[wi].clone(),
            });
        }
        max_defect = max_defect.max(mass_defect(net, u, &x, &prev, &c, sys.dt).abs());
        for (s, ms) in model.storages.iter().enumerate() {
            let mass = x[u.storage(s, RHO_R)] * sc.density() * ms.volume;
            if !reservoir_flagged[s] && (mass < ms.mass_min || mass > ms.mass_max) {
                reservoir_flagged[s] = true;
                let msg = format!("storage `{}` mass {mass:.4e} kg leaves its bounds at t = {t_h:.3} h", ms.id);
                warn!("{msg}");
                warnings.push(msg);
            }
        }
        if step % sample_every == 0 {
            samples.push((t_h, x.clone()));
        }
    }
    debug!("simulation: {steps} steps, {total_newton} Newton iterations, mass defect {max_defect:.2e}");

    let trajectory = build_trajectory(net, u, controls, &samples, &controls_at, opts.dt_seconds, opts.kappa)?;
    Ok(SimulationResult { trajectory, steps, newton_iterations: total_newton, max_mass_defect: max_defect, warnings })
}

/// Rate of change of stored mass minus net intake for one step.
fn mass_defect(net: &AugmentedNetwork, u: &Unknowns, x: &[f64], prev: &[f64], c: &StepControls, dt: f64) -> f64 {
    let sc = &net.scales;
    let stored = |v: &[f64]| -> f64 {
        let pack: f64 = net
            .pipes
            .iter()
            .map(|p| 0.5 * (v[u.rho(p.from)] + v[u.rho(p.to)]) * p.area * p.length / sc.length)
            .sum();
        let res: f64 = net
            .model
            .storages
            .iter()
            .enumerate()
            .map(|(s, st)| v[u.storage(s, RHO_R)] * st.volume / sc.volume())
            .sum();
        pack + res
    };
    let intake: f64 = c.receipt.iter().sum::<f64>() - c.delivery.iter().sum::<f64>()
        + (0..u.slacks.len()).map(|q| x[u.slack(q)]).sum::<f64>();
    (stored(x) - stored(prev)) / dt - intake
}

fn build_trajectory(
    net: &AugmentedNetwork,
    u: &Unknowns,
    controls: &ControlSchedule,
    samples: &[(f64, Vec<f64>)],
    controls_at: &dyn Fn(f64) -> StepControls,
    dt_seconds: f64,
    kappa: f64,
) -> Result<TransientTrajectory> {
    let model = &net.model;
    let sc = &net.scales;
    let col = |f: &dyn Fn(&[f64]) -> f64| -> Vec<f64> { samples.iter().map(|(_, x)| f(x)).collect() };
    let times_hours = samples.iter().map(|(t, _)| *t).collect();
    let junctions = net
        .junctions
        .iter()
        .enumerate()
        .map(|(j, jn)| JunctionTrace {
            id: jn.name.clone(),
            pressure: col(&|x| x[u.rho(j)] * sc.pressure),
            density: col(&|x| x[u.rho(j)] * sc.density()),
        })
        .collect();
    let pipes = model
        .pipes
        .iter()
        .enumerate()
        .map(|(p, pipe)| {
            let chain = &net.pipe_chains[p];
            let (first, last) = (chain[0], *chain.last().unwrap());
            let flux_in = col(&|x| (x[u.phi_plus(first)] - x[u.phi_minus(first)]) * sc.flux());
            let flux_out = col(&|x| (x[u.phi_plus(last)] + x[u.phi_minus(last)]) * sc.flux());
            PipeTrace {
                id: pipe.id.clone(),
                from: model.junctions[pipe.from].id.clone(),
                to: model.junctions[pipe.to].id.clone(),
                flow_in: flux_in.iter().map(|v| v * pipe.area()).collect(),
                flow_out: flux_out.iter().map(|v| v * pipe.area()).collect(),
                flux_in,
                flux_out,
                linepack: col(&|x| {
                    chain
                        .iter()
                        .map(|&e| {
                            let sp = &net.pipes[e];
                            0.5 * (x[u.rho(sp.from)] + x[u.rho(sp.to)]) * sc.density() * sp.area * sp.length
                        })
                        .sum()
                }),
            }
        })
        .collect();
    let mut compressors = Vec::new();
    for (k, cp) in model.compressors.iter().enumerate() {
        let ratio = col(&|x| x[u.ratio(k)]);
        let flow = col(&|x| x[u.flow(k)] * sc.mass_flow());
        let work = ratio.iter().map(|&a| compressor_work(a, &cp.gas)).collect::<Result<Vec<_>>>()?;
        compressors.push(CompressorTrace {
            id: cp.id.clone(),
            power: work.iter().zip(&flow).map(|(w, f)| w * f).collect(),
            ratio,
            flow,
            work,
        });
    }
    // sample 0 has no step of its own; report the controls of the first step
    let first = dt_seconds / 3600.0;
    let ctl: Vec<StepControls> = samples.iter().map(|(t, _)| controls_at(if *t == 0.0 { first } else { *t })).collect();
    let mut transfers = Vec::new();
    for (list, receipts) in [(&model.receipts, true), (&model.deliveries, false)] {
        for (i, tr) in list.iter().enumerate() {
            let flow: Vec<f64> = ctl
                .iter()
                .map(|c| if receipts { c.receipt[i] } else { c.delivery[i] } * sc.mass_flow())
                .collect();
            let grid_t: Vec<f64> =
                samples.iter().map(|(t, _)| controls.grid_time(if *t == 0.0 { first } else { *t })).collect();
            transfers.push(TransferTrace {
                id: tr.id.clone(),
                junction: model.junctions[tr.junction].id.clone(),
                direction: tr.direction,
                flow,
                nomination: grid_t.iter().map(|&t| tr.flow_max.value_at(t % model.params.horizon_hours)).collect(),
                price: grid_t.iter().map(|&t| tr.price.value_at(t % model.params.horizon_hours)).collect(),
            });
        }
    }
    let storages = model
        .storages
        .iter()
        .enumerate()
        .map(|(s, st)| {
            let aug = &net.storages[s];
            let mass = col(&|x| x[u.storage(s, RHO_R)] * sc.density() * st.volume);
            StorageTrace {
                id: st.id.clone(),
                junction: model.junctions[st.junction].id.clone(),
                flow: col(&|x| x[u.storage(s, FS)] * sc.mass_flow()),
                bottom_flow: col(&|x| x[u.storage(s, FBH)] * sc.mass_flow()),
                regulator_ratio: col(&|x| x[u.storage(s, ALPHA_S)]),
                wellhead_pressure: col(&|x| x[u.rho(aug.wellhead)] * sc.pressure),
                reservoir_pressure: mass.iter().map(|m| m / st.volume * model.params.sound_speed_sq()).collect(),
                reservoir_mass: mass,
            }
        })
        .collect();
    // objective over the sampled intervals (sample 0 excluded)
    let dt_h = if samples.len() > 1 { samples[1].0 - samples[0].0 } else { 0.0 };
    let tr_terms: Vec<Vec<(f64, f64)>> = transfers
        .iter()
        .map(|t: &TransferTrace| t.price.iter().zip(&t.flow).skip(1).map(|(p, f)| (*p, *f)).collect())
        .collect();
    let comp_terms: Vec<Vec<(f64, f64)>> = compressors
        .iter()
        .map(|c: &CompressorTrace| c.work.iter().zip(&c.flow).skip(1).map(|(w, f)| (*w, *f)).collect())
        .collect();
    let objective: ObjectiveSummary = (objective_terms(&tr_terms, &comp_terms, dt_h, kappa)?, kappa).into();
    Ok(TransientTrajectory { times_hours, junctions, pipes, compressors, transfers, storages, objective })
}
