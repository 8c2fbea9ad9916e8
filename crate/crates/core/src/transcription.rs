//! Direct transcription of the periodic optimal control problem.
//!
//! Every grid node `k = 0..N` carries one copy of each algebraic variable.
//! Time derivatives are backward differences with wraparound, so node 0
//! also stands for the end of the horizon and the pipeline state is
//! periodic by construction. Reservoir densities are the exception: their
//! slot `k ≥ 1` is the value at `t_k`, slot 0 the value at `T`, and the
//! first difference starts from the initial inventory.
//!
//! Per node, with `|V|` junctions and `|P|` sub-pipes of the segmented
//! network, `|C|` compressors (`|C₂|` bidirectional), `S` storages, `R`
//! receipts and `D` deliveries:
//!
//! ```text
//! n   = N (|V| + 4|P| + 3|C| + 5S + R + D)
//! m_E = N (|V| + 4|P| + 2|C| + 4S)
//! m_I = N (|C| + |C₂|)
//! ```

use crate::error::{Error, Result};
use crate::ipm::SolverSolution;
use crate::network::{AugmentedNetwork, CompressorKind, JunctionKind, PipeOrigin, TransferDirection};
use crate::nlp::{Expr, ExprBuilder, ExprProblem, Nlp, Term};
use crate::physics::{gravity_factor, objective_terms, static_column_ratio, work_coefficients, ObjectiveTerms};
use serde::Serialize;

/// Uniform periodic time grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub horizon_hours: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Grid with step `dt_hours`, which must divide the horizon.
    pub fn new(horizon_hours: f64, dt_hours: f64) -> Result<Self> {
        if !(horizon_hours > 0.0 && dt_hours > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon and time step must be positive, got {horizon_hours} h and {dt_hours} h"
            )));
        }
        let n = (horizon_hours / dt_hours).round();
        if (n * dt_hours - horizon_hours).abs() > 1e-9 * horizon_hours {
            return Err(Error::InvalidArgument(format!(
                "time step {dt_hours} h does not divide the horizon {horizon_hours} h"
            )));
        }
        if n < 2.0 {
            return Err(Error::InvalidArgument("the time grid needs at least two steps".into()));
        }
        Ok(TimeGrid { horizon_hours, steps: n as usize })
    }

    pub fn dt_hours(&self) -> f64 {
        self.horizon_hours / self.steps as f64
    }

    /// Time of node `k` (h); node 0 is `t = 0`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt_hours()
    }

    /// Predecessor on the periodic grid.
    pub fn prev(&self, k: usize) -> usize {
        (k + self.steps - 1) % self.steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranscriptionOptions {
    /// Weight of economic value versus compressor energy.
    pub kappa: f64,
    /// Smoothing ε of `x|x|` in the momentum law, if any.
    pub smoothing: Option<f64>,
}

impl Default for TranscriptionOptions {
    fn default() -> Self {
        TranscriptionOptions { kappa: 0.95, smoothing: None }
    }
}

/// Variable indices, `[entity][node]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layout {
    pub rho: Vec<Vec<usize>>,
    pub phi_plus: Vec<Vec<usize>>,
    pub phi_minus: Vec<Vec<usize>>,
    pub phi_in: Vec<Vec<usize>>,
    pub phi_out: Vec<Vec<usize>>,
    pub ratio: Vec<Vec<usize>>,
    pub flow: Vec<Vec<usize>>,
    pub work: Vec<Vec<usize>>,
    pub regulator: Vec<Vec<usize>>,
    pub storage_flow: Vec<Vec<usize>>,
    pub wellhead_flow: Vec<Vec<usize>>,
    pub bottom_flow: Vec<Vec<usize>>,
    pub reservoir: Vec<Vec<usize>>,
    pub receipt: Vec<Vec<usize>>,
    pub delivery: Vec<Vec<usize>>,
}

/// Expected problem dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub n: usize,
    pub equalities: usize,
    pub inequalities: usize,
}

/// Dimensions predicted by the counting formula in the module docs.
pub fn expected_counts(net: &AugmentedNetwork, steps: usize) -> Counts {
    let v = net.junctions.len();
    let p = net.pipes.len();
    let c = net.model.compressors.len();
    let c2 = net.model.compressors.iter().filter(|c| c.kind == CompressorKind::Bidirectional).count();
    let s = net.storages.len();
    let (r, d) = (net.model.receipts.len(), net.model.deliveries.len());
    Counts {
        n: steps * (v + 4 * p + 3 * c + 5 * s + r + d),
        equalities: steps * (v + 4 * p + 2 * c + 4 * s),
        inequalities: steps * (c + c2),
    }
}

/// Display name of a sub-pipe.
pub fn sub_pipe_name(net: &AugmentedNetwork, k: usize) -> String {
    match net.pipes[k].origin {
        PipeOrigin::Pipe { pipe, index } => {
            let id = &net.model.pipes[pipe].id;
            if net.pipe_chains[pipe].len() == 1 {
                id.clone()
            } else {
                format!("{id}/{}", index + 1)
            }
        }
        PipeOrigin::Well { storage, index } => format!("{}:well/{}", net.model.storages[storage].id, index + 1),
    }
}

/// A transcribed problem together with the data needed to interpret it.
#[derive(Debug, Clone)]
pub struct Transcription {
    pub net: AugmentedNetwork,
    pub grid: TimeGrid,
    pub options: TranscriptionOptions,
    pub layout: Layout,
    pub problem: ExprProblem,
}

struct Ctx {
    grid: TimeGrid,
    b: ExprBuilder,
    lay: Layout,
}

impl Ctx {
    fn block(&mut self, count: usize, mut f: impl FnMut(usize, usize) -> (String, f64, f64, f64)) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(count);
        for e in 0..count {
            let mut row = Vec::with_capacity(self.grid.steps);
            for k in 0..self.grid.steps {
                // crossed bounds are reported by `ExprBuilder::build`
                let (name, lb, ub, x0) = f(e, k);
                let x0 = if lb <= ub { x0.clamp(lb, ub) } else { x0 };
                row.push(self.b.var(format!("{name}@{k}"), lb, ub, x0));
            }
            out.push(row);
        }
        out
    }
}

/// Builds the NLP. Bounds that cross are reported by variable name.
pub fn build_nlp(net: &AugmentedNetwork, grid: &TimeGrid, options: &TranscriptionOptions) -> Result<Transcription> {
    if !(0.0..=1.0).contains(&options.kappa) {
        return Err(Error::InvalidArgument(format!("kappa must lie in [0, 1], got {}", options.kappa)));
    }
    if let Some(eps) = options.smoothing {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("smoothing must be positive, got {eps}")));
        }
    }
    let sc = net.scales;
    let model = &net.model;
    let n_steps = grid.steps;
    let a2 = sc.sound_speed_sq();
    let rho0 = sc.density();
    let fscale = sc.mass_flow();
    let dt_h = grid.dt_hours();
    let dt = dt_h * 3600.0 / sc.time();
    let nd_rho = |p: f64| p / sc.pressure;
    let hour = |k: usize| grid.time(k);

    let mut cx = Ctx { grid: *grid, b: ExprBuilder::new(), lay: Layout::default() };

    // starting guesses
    let slack_mean = {
        let v: Vec<f64> = net.junctions.iter().filter_map(|j| j.slack_pressure.as_ref().map(|p| p.value_at(0.0))).collect();
        if v.is_empty() {
            sc.pressure
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let mut rho_start: Vec<f64> = net
        .junctions
        .iter()
        .map(|j| nd_rho(slack_mean.clamp(j.pressure_min, j.pressure_max)))
        .collect();
    for (s, st) in net.storages.iter().enumerate() {
        let r0 = model.storages[s].initial_mass / model.storages[s].volume / rho0;
        // static column from the reservoir up to the wellhead
        let mut rho = r0;
        for &k in st.well_pipes.iter().rev() {
            rho /= static_column_ratio(net.pipes[k].beta);
            rho_start[net.pipes[k].from] = rho;
        }
        rho_start[st.bottom_hole] = r0;
    }

    cx.lay.rho = cx.block(net.junctions.len(), |j, k| {
        let jn = &net.junctions[j];
        match &jn.slack_pressure {
            Some(p) => {
                let v = nd_rho(p.value_at(hour(k)));
                (format!("rho[{}]", jn.name), v, v, v)
            }
            None => (format!("rho[{}]", jn.name), nd_rho(jn.pressure_min), nd_rho(jn.pressure_max), rho_start[j]),
        }
    });
    let np = net.pipes.len();
    let names: Vec<String> = (0..np).map(|k| sub_pipe_name(net, k)).collect();
    let inf = f64::INFINITY;
    cx.lay.phi_plus = cx.block(np, |e, _| (format!("phi+[{}]", names[e]), -inf, inf, 0.0));
    cx.lay.phi_minus = cx.block(np, |e, _| (format!("phi-[{}]", names[e]), -inf, inf, 0.0));
    cx.lay.phi_in = cx.block(np, |e, _| (format!("phi_in[{}]", names[e]), -inf, inf, 0.0));
    cx.lay.phi_out = cx.block(np, |e, _| (format!("phi_out[{}]", names[e]), -inf, inf, 0.0));

    let comps = &model.compressors;
    let mut work_coef = Vec::with_capacity(comps.len());
    for c in comps {
        work_coef.push(work_coefficients(&c.gas)?);
    }
    cx.lay.ratio = cx.block(comps.len(), |c, _| (format!("alpha[{}]", comps[c].id), 1.0, comps[c].ratio_max, 1.0));
    cx.lay.flow = cx.block(comps.len(), |c, _| {
        let fmax = comps[c].flow_max / fscale;
        let lo = match comps[c].kind {
            CompressorKind::Unidirectional => 0.0,
            CompressorKind::Bidirectional => -fmax,
        };
        (format!("f[{}]", comps[c].id), lo, fmax, 0.0)
    });
    cx.lay.work = cx.block(comps.len(), |c, _| {
        let (kw, m) = work_coef[c];
        (format!("W[{}]", comps[c].id), 0.0, kw * (comps[c].ratio_max.powf(m) - 1.0) / a2, 0.0)
    });

    let sts = &model.storages;
    cx.lay.regulator = cx.block(sts.len(), |s, _| {
        let am = sts[s].regulator_ratio_max;
        let st = &net.storages[s];
        let guess = rho_start[st.junction] / rho_start[st.wellhead];
        (format!("alpha_s[{}]", sts[s].id), 1.0 / am, am, guess)
    });
    let sflow = |s: usize| sts[s].flow_max / fscale;
    cx.lay.storage_flow = cx.block(sts.len(), |s, _| (format!("f_s[{}]", sts[s].id), -sflow(s), sflow(s), 0.0));
    cx.lay.wellhead_flow = cx.block(sts.len(), |s, _| (format!("f_wh[{}]", sts[s].id), -sflow(s), sflow(s), 0.0));
    cx.lay.bottom_flow = cx.block(sts.len(), |s, _| (format!("f_bh[{}]", sts[s].id), -sflow(s), sflow(s), 0.0));
    cx.lay.reservoir = cx.block(sts.len(), |s, _| {
        let st = &sts[s];
        let r = |m: f64| m / st.volume / rho0;
        (format!("rho_r[{}]", st.id), r(st.mass_min), r(st.mass_max), r(st.initial_mass))
    });

    for (list, tag) in [(&model.receipts, "f_r"), (&model.deliveries, "f_d")] {
        let block = cx.block(list.len(), |t, k| {
            let tr = &list[t];
            let ub = tr.flow_max.value_at(hour(k)) / fscale;
            let lb = tr.flow_min.as_ref().map_or(0.0, |p| p.value_at(hour(k)) / fscale);
            (format!("{tag}[{}]", tr.id), lb, ub, 0.5 * (lb + ub))
        });
        if tag == "f_r" {
            cx.lay.receipt = block;
        } else {
            cx.lay.delivery = block;
        }
    }

    let Ctx { mut b, lay, .. } = cx;

    // incidence
    let nj = net.junctions.len();
    let mut pipes_out = vec![Vec::new(); nj];
    let mut pipes_in = vec![Vec::new(); nj];
    for (e, p) in net.pipes.iter().enumerate() {
        pipes_out[p.from].push(e);
        pipes_in[p.to].push(e);
    }
    let mut wellhead_of = vec![None; nj];
    let mut bottom_of = vec![None; nj];
    for (s, st) in net.storages.iter().enumerate() {
        wellhead_of[st.wellhead] = Some(s);
        bottom_of[st.bottom_hole] = Some(s);
    }

    for k in 0..n_steps {
        let kp = grid.prev(k);
        for (e, p) in net.pipes.iter().enumerate() {
            let name = &names[e];
            let l = p.length / sc.length;
            let (ri, rj) = (lay.rho[p.from][k], lay.rho[p.to][k]);
            b.equality(
                format!("mass[{name}]@{k}"),
                Expr::new()
                    .lin(ri, l / dt)
                    .lin(lay.rho[p.from][kp], -l / dt)
                    .lin(rj, l / dt)
                    .lin(lay.rho[p.to][kp], -l / dt)
                    .lin(lay.phi_minus[e][k], 4.0),
            );
            b.equality(
                format!("momentum[{name}]@{k}"),
                Expr::new()
                    .sq(rj, p.beta.exp())
                    .sq(ri, -1.0)
                    .signed_sq(lay.phi_plus[e][k], p.resistance() * gravity_factor(p.beta)),
            );
            b.equality(
                format!("inlet[{name}]@{k}"),
                Expr::new().lin(lay.phi_in[e][k], 1.0).lin(lay.phi_plus[e][k], -1.0).lin(lay.phi_minus[e][k], 1.0),
            );
            b.equality(
                format!("outlet[{name}]@{k}"),
                Expr::new().lin(lay.phi_out[e][k], 1.0).lin(lay.phi_plus[e][k], -1.0).lin(lay.phi_minus[e][k], -1.0),
            );
        }

        // junction balances: outflow − inflow = 0
        let mut bal: Vec<Expr> = vec![Expr::new(); nj];
        for (e, p) in net.pipes.iter().enumerate() {
            bal[p.from].push(Term::Lin(lay.phi_in[e][k], p.area));
            bal[p.to].push(Term::Lin(lay.phi_out[e][k], -p.area));
        }
        for (c, cp) in comps.iter().enumerate() {
            bal[cp.from].push(Term::Lin(lay.flow[c][k], 1.0));
            bal[cp.to].push(Term::Lin(lay.flow[c][k], -1.0));
        }
        for (t, tr) in model.receipts.iter().enumerate() {
            bal[tr.junction].push(Term::Lin(lay.receipt[t][k], -1.0));
        }
        for (t, tr) in model.deliveries.iter().enumerate() {
            bal[tr.junction].push(Term::Lin(lay.delivery[t][k], 1.0));
        }
        for (s, st) in net.storages.iter().enumerate() {
            bal[st.junction].push(Term::Lin(lay.storage_flow[s][k], 1.0));
            bal[st.wellhead].push(Term::Lin(lay.wellhead_flow[s][k], -1.0));
            bal[st.bottom_hole].push(Term::Lin(lay.bottom_flow[s][k], 1.0));
        }
        for (j, e) in bal.into_iter().enumerate() {
            b.equality(format!("balance[{}]@{k}", net.junctions[j].name), e);
        }

        for (c, cp) in comps.iter().enumerate() {
            let (alpha, f, w) = (lay.ratio[c][k], lay.flow[c][k], lay.work[c][k]);
            b.equality(
                format!("boost[{}]@{k}", cp.id),
                Expr::new().lin(lay.rho[cp.to][k], 1.0).bil(alpha, lay.rho[cp.from][k], -1.0),
            );
            let (kw, m) = work_coef[c];
            b.equality(
                format!("work[{}]@{k}", cp.id),
                Expr::new().lin(w, 1.0).pow(alpha, -kw / a2, m).constant(kw / a2),
            );
            b.row(
                format!("power[{}]@{k}", cp.id),
                Expr::new().bil(w, f, 1.0),
                -inf,
                cp.power_max / sc.power(),
            );
            if cp.kind == CompressorKind::Bidirectional {
                b.row(
                    format!("direction[{}]@{k}", cp.id),
                    Expr::new().lin(f, 1.0).bil(f, alpha, -1.0),
                    -inf,
                    0.0,
                );
            }
        }

        for (s, st) in net.storages.iter().enumerate() {
            let id = &sts[s].id;
            b.equality(
                format!("regulator[{id}]@{k}"),
                Expr::new().lin(lay.rho[st.junction][k], 1.0).bil(lay.regulator[s][k], lay.rho[st.wellhead][k], -1.0),
            );
            b.equality(
                format!("wellhead[{id}]@{k}"),
                Expr::new().lin(lay.storage_flow[s][k], 1.0).lin(lay.wellhead_flow[s][k], -1.0),
            );
            b.equality(
                format!("bottom-hole[{id}]@{k}"),
                Expr::new().lin(lay.rho[st.bottom_hole][k], 1.0).lin(lay.reservoir[s][k], -1.0),
            );
            let v = sts[s].volume / sc.volume();
            let mut e = Expr::new().lin(lay.reservoir[s][k], v / dt).lin(lay.bottom_flow[s][k], -1.0);
            if k == 1 {
                e = e.constant(-v / dt * sts[s].initial_mass / sts[s].volume / rho0);
            } else {
                e = e.lin(lay.reservoir[s][kp], -v / dt);
            }
            b.equality(format!("reservoir[{id}]@{k}"), e);
        }

        // objective: Δt·Σ_k [κ(−price·f) + (1 − κ)·W f / 1e6]
        let kappa = options.kappa;
        for (list, idx) in [(&model.receipts, &lay.receipt), (&model.deliveries, &lay.delivery)] {
            for (t, tr) in list.iter().enumerate() {
                let price = tr.price.value_at(hour(k));
                if price != 0.0 && kappa != 0.0 {
                    b.add_objective(Term::Lin(idx[t][k], -kappa * price * fscale * dt_h));
                }
            }
        }
        if kappa < 1.0 {
            for c in 0..comps.len() {
                b.add_objective(Term::Bil(lay.work[c][k], lay.flow[c][k], (1.0 - kappa) * dt_h * sc.power() / 1e6));
            }
        }
    }

    let problem = b.build(options.smoothing)?;
    debug_assert_eq!(
        (problem.n(), problem.equality_count(), problem.inequality_count()),
        {
            let c = expected_counts(net, n_steps);
            (c.n, c.equalities, c.inequalities)
        }
    );
    Ok(Transcription { net: net.clone(), grid: *grid, options: *options, layout: lay, problem })
}

/// Time series of one named entity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub id: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JunctionTrace {
    pub id: String,
    /// Pa
    pub pressure: Vec<f64>,
    /// kg/m³
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipeTrace {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Endpoint mass fluxes (kg/(m²·s)).
    pub flux_in: Vec<f64>,
    pub flux_out: Vec<f64>,
    /// Endpoint mass flows (kg/s).
    pub flow_in: Vec<f64>,
    pub flow_out: Vec<f64>,
    /// Mass held in the pipe (kg).
    pub linepack: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressorTrace {
    pub id: String,
    pub ratio: Vec<f64>,
    /// kg/s
    pub flow: Vec<f64>,
    /// J/kg
    pub work: Vec<f64>,
    /// W
    pub power: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferTrace {
    pub id: String,
    pub junction: String,
    pub direction: TransferDirection,
    /// kg/s
    pub flow: Vec<f64>,
    pub nomination: Vec<f64>,
    pub price: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StorageTrace {
    pub id: String,
    pub junction: String,
    /// Exchange with the network (kg/s), positive when injecting.
    pub flow: Vec<f64>,
    /// Flow into the reservoir at the bottom-hole (kg/s).
    pub bottom_flow: Vec<f64>,
    pub regulator_ratio: Vec<f64>,
    /// Pa
    pub wellhead_pressure: Vec<f64>,
    /// kg
    pub reservoir_mass: Vec<f64>,
    /// Pa
    pub reservoir_pressure: Vec<f64>,
}

/// Physical-unit trajectory on `t_0 … t_N`; index `N` repeats node 0 for
/// periodic quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransientTrajectory {
    pub times_hours: Vec<f64>,
    pub junctions: Vec<JunctionTrace>,
    /// Original pipes; fluxes at their two ends.
    pub pipes: Vec<PipeTrace>,
    pub compressors: Vec<CompressorTrace>,
    pub transfers: Vec<TransferTrace>,
    pub storages: Vec<StorageTrace>,
    pub objective: ObjectiveSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveSummary {
    /// $
    pub economic_value: f64,
    /// MW·h
    pub compressor_energy: f64,
    pub total: f64,
    pub kappa: f64,
}

impl From<(ObjectiveTerms, f64)> for ObjectiveSummary {
    fn from((t, kappa): (ObjectiveTerms, f64)) -> Self {
        ObjectiveSummary { economic_value: t.profit, compressor_energy: t.energy, total: t.total, kappa }
    }
}

impl Transcription {
    /// Node index feeding trajectory sample `i ∈ 0..=N`.
    fn node(&self, i: usize) -> usize {
        i % self.grid.steps
    }

    /// Economic value and energy recomputed in physical units.
    pub fn objective_terms(&self, x: &[f64]) -> Result<ObjectiveTerms> {
        let (lay, m, sc) = (&self.layout, &self.net.model, &self.net.scales);
        let n = self.grid.steps;
        let mut transfers = Vec::new();
        for (list, idx) in [(&m.receipts, &lay.receipt), (&m.deliveries, &lay.delivery)] {
            for (t, tr) in list.iter().enumerate() {
                transfers.push(
                    (0..n)
                        .map(|k| (tr.price.value_at(self.grid.time(k)), x[idx[t][k]] * sc.mass_flow()))
                        .collect(),
                );
            }
        }
        let comps: Vec<Vec<(f64, f64)>> = (0..m.compressors.len())
            .map(|c| {
                (0..n)
                    .map(|k| (x[lay.work[c][k]] * sc.specific_work(), x[lay.flow[c][k]] * sc.mass_flow()))
                    .collect()
            })
            .collect();
        objective_terms(&transfers, &comps, self.grid.dt_hours(), self.options.kappa)
    }

    pub fn extract(&self, x: &[f64]) -> Result<TransientTrajectory> {
        let net = &self.net;
        let (lay, m, sc) = (&self.layout, &net.model, &net.scales);
        let n = self.grid.steps;
        let samples = 0..=n;
        let times_hours = samples.clone().map(|i| self.grid.time(i)).collect();
        let series = |idx: &Vec<usize>, f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            samples.clone().map(|i| f(x[idx[self.node(i)]])).collect()
        };
        let junctions = net
            .junctions
            .iter()
            .enumerate()
            .map(|(j, jn)| JunctionTrace {
                id: jn.name.clone(),
                pressure: series(&lay.rho[j], &|r| r * sc.pressure),
                density: series(&lay.rho[j], &|r| r * sc.density()),
            })
            .collect();
        let pipes = m
            .pipes
            .iter()
            .enumerate()
            .map(|(p, pipe)| {
                let chain = &net.pipe_chains[p];
                let (first, last) = (chain[0], *chain.last().unwrap());
                let area = pipe.area();
                let linepack = samples
                    .clone()
                    .map(|i| {
                        let k = self.node(i);
                        chain
                            .iter()
                            .map(|&e| {
                                let sp = &net.pipes[e];
                                0.5 * (x[lay.rho[sp.from][k]] + x[lay.rho[sp.to][k]]) * sc.density() * sp.area * sp.length
                            })
                            .sum()
                    })
                    .collect();
                let flux_in = series(&lay.phi_in[first], &|v| v * sc.flux());
                let flux_out = series(&lay.phi_out[last], &|v| v * sc.flux());
                PipeTrace {
                    id: pipe.id.clone(),
                    from: m.junctions[pipe.from].id.clone(),
                    to: m.junctions[pipe.to].id.clone(),
                    flow_in: flux_in.iter().map(|v| v * area).collect(),
                    flow_out: flux_out.iter().map(|v| v * area).collect(),
                    flux_in,
                    flux_out,
                    linepack,
                }
            })
            .collect();
        let compressors = m
            .compressors
            .iter()
            .enumerate()
            .map(|(c, cp)| {
                let flow = series(&lay.flow[c], &|v| v * sc.mass_flow());
                let work = series(&lay.work[c], &|v| v * sc.specific_work());
                CompressorTrace {
                    id: cp.id.clone(),
                    ratio: series(&lay.ratio[c], &|v| v),
                    power: work.iter().zip(&flow).map(|(w, f)| w * f).collect(),
                    flow,
                    work,
                }
            })
            .collect();
        let mut transfers = Vec::new();
        for (list, idx) in [(&m.receipts, &lay.receipt), (&m.deliveries, &lay.delivery)] {
            for (t, tr) in list.iter().enumerate() {
                transfers.push(TransferTrace {
                    id: tr.id.clone(),
                    junction: m.junctions[tr.junction].id.clone(),
                    direction: tr.direction,
                    flow: series(&idx[t], &|v| v * sc.mass_flow()),
                    nomination: samples.clone().map(|i| tr.flow_max.value_at(self.grid.time(self.node(i)))).collect(),
                    price: samples.clone().map(|i| tr.price.value_at(self.grid.time(self.node(i)))).collect(),
                });
            }
        }
        let storages = m
            .storages
            .iter()
            .enumerate()
            .map(|(s, st)| {
                let aug = &net.storages[s];
                let reservoir_mass: Vec<f64> = samples
                    .clone()
                    .map(|i| if i == 0 { st.initial_mass } else { x[lay.reservoir[s][self.node(i)]] * sc.density() * st.volume })
                    .collect();
                StorageTrace {
                    id: st.id.clone(),
                    junction: m.junctions[st.junction].id.clone(),
                    flow: series(&lay.storage_flow[s], &|v| v * sc.mass_flow()),
                    bottom_flow: series(&lay.bottom_flow[s], &|v| v * sc.mass_flow()),
                    regulator_ratio: series(&lay.regulator[s], &|v| v),
                    wellhead_pressure: series(&lay.rho[aug.wellhead], &|r| r * sc.pressure),
                    reservoir_pressure: reservoir_mass.iter().map(|mass| mass / st.volume * m.params.sound_speed_sq()).collect(),
                    reservoir_mass,
                }
            })
            .collect();
        Ok(TransientTrajectory {
            times_hours,
            junctions,
            pipes,
            compressors,
            transfers,
            storages,
            objective: (self.objective_terms(x)?, self.options.kappa).into(),
        })
    }

    /// Discrete mass balance defect at node `k` (kg/s): rate of change of
    /// linepack plus reservoir inventory minus net intake. Zero for any
    /// point satisfying the equality constraints.
    pub fn mass_balance_defect(&self, x: &[f64], k: usize) -> f64 {
        let net = &self.net;
        let (lay, m, sc) = (&self.layout, &net.model, &net.scales);
        let kp = self.grid.prev(k);
        let dt = self.grid.dt_hours() * 3600.0;
        let pack = |k: usize| -> f64 {
            net.pipes
                .iter()
                .map(|sp| 0.5 * (x[lay.rho[sp.from][k]] + x[lay.rho[sp.to][k]]) * sc.density() * sp.area * sp.length)
                .sum()
        };
        let reservoir = |k: usize, prev: bool| -> f64 {
            m.storages
                .iter()
                .enumerate()
                .map(|(s, st)| {
                    if prev && k == 1 {
                        st.initial_mass
                    } else {
                        x[lay.reservoir[s][if prev { kp } else { k }]] * sc.density() * st.volume
                    }
                })
                .sum()
        };
        let intake: f64 = (0..m.receipts.len()).map(|t| x[lay.receipt[t][k]]).sum::<f64>()
            - (0..m.deliveries.len()).map(|t| x[lay.delivery[t][k]]).sum::<f64>();
        (pack(k) - pack(kp) + reservoir(k, false) - reservoir(k, true)) / dt - intake * sc.mass_flow()
    }

    /// Names of junction kinds for reporting.
    pub fn junction_kind(&self, j: usize) -> &'static str {
        match self.net.junctions[j].kind {
            JunctionKind::Physical => "physical",
            JunctionKind::Internal { .. } => "internal",
            JunctionKind::Well { .. } => "well",
        }
    }

    /// Warm start from a previous solution of the same layout.
    pub fn warm_start(&mut self, solution: &SolverSolution) {
        if solution.x.len() == self.problem.n() {
            self.problem.set_initial_point(solution.x.clone());
        }
    }
}

#[cfg(test)]
mod tests;
