//! Seeded synthetic networks for scalability runs.
//!
//! The distributions are our own choices, not calibrated to any real system:
//! slack junctions at 5 MPa root a forest of random recursive trees that is
//! closed into one network by loop pipes; pipe lengths are uniform weights
//! rescaled to the requested total; diameters grow with the number of
//! junctions a pipe feeds; compressors replace trunk pipes and are
//! unidirectional away from the slacks; deliveries carry a daily two-peak nomination of 1 to 4
//! kg/s; storages copy the six-junction storage facility.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{
    Compressor, CompressorKind, Junction, NetworkModel, Params, Pipe, Profile, Storage, Transfer, TransferDirection,
};
use crate::nondim::psi_to_pa;

/// Requested entity counts of a synthetic network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub junctions: usize,
    pub compressors: usize,
    pub storages: usize,
    /// Receipts plus deliveries.
    pub transfers: usize,
    /// Total pipe length (m).
    pub total_length: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Counts of the large system used for scalability runs: 506
    /// junctions, 20 compressors, 4 storages, 196 transfers, 3490 km.
    pub fn large(seed: u64) -> Self {
        SynthSpec { junctions: 506, compressors: 20, storages: 4, transfers: 196, total_length: 3490e3, seed }
    }
}

const SLACK_PRESSURE: f64 = 5.0e6;

/// Daily nomination shape shared with the six-junction fixtures.
fn nomination(base: f64) -> Profile {
    Profile::new(
        [(0.0, 0.95), (6.0, 1.15), (10.0, 1.0), (17.0, 1.2), (21.0, 1.0)]
            .iter()
            .map(|&(t, f)| (t, base * f))
            .collect(),
    )
}

fn round_to(x: f64, unit: f64) -> f64 {
    (x / unit).round() * unit
}

/// Generates a network with exactly the requested counts.
pub fn synth_network(spec: &SynthSpec) -> Result<NetworkModel> {
    let n = spec.junctions;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 junctions, got {n}")));
    }
    let slacks = (n / 100).max(1);
    if spec.compressors + 1 > n - slacks {
        return Err(Error::InvalidArgument(format!("{} compressors do not fit {n} junctions", spec.compressors)));
    }
    if spec.storages > n - slacks {
        return Err(Error::InvalidArgument(format!("{} storages do not fit {n} junctions", spec.storages)));
    }
    if spec.transfers < slacks + 1 || spec.transfers - slacks > n - slacks {
        return Err(Error::InvalidArgument(format!(
            "{} transfers do not fit {n} junctions with {slacks} slack receipts",
            spec.transfers
        )));
    }
    if !(spec.total_length > 0.0) {
        return Err(Error::InvalidArgument("total pipe length must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // forest: junction i >= slacks joins tree i mod slacks below a node of
    // the later half of that tree, keeping depth logarithmic
    let mut members: Vec<Vec<usize>> = (0..slacks).map(|r| vec![r]).collect();
    let mut parent = vec![usize::MAX; n];
    for i in slacks..n {
        let tree = &mut members[i % slacks];
        let lo = tree.len() / 2;
        parent[i] = tree[rng.gen_range(lo..tree.len())];
        tree.push(i);
    }
    let mut subtree = vec![1usize; n];
    for i in (slacks..n).rev() {
        subtree[parent[i]] += subtree[i];
    }

    // compressors sit on the trunk edges with the largest subtrees
    let mut trunk: Vec<usize> = (slacks..n).collect();
    trunk.sort_by_key(|&i| std::cmp::Reverse(subtree[i]));
    let comp_edges: Vec<usize> = trunk[..spec.compressors].to_vec();
    let is_comp = |i: usize| comp_edges.contains(&i);

    // loops: one link between consecutive trees, then random chords
    let mut chords: Vec<(usize, usize)> = (1..slacks)
        .map(|t| {
            let a = *members[t - 1].choose(&mut rng).unwrap();
            let b = *members[t].choose(&mut rng).unwrap();
            (a.max(b), a.min(b))
        })
        .filter(|(a, b)| a != b)
        .collect();
    let extra = n / 20;
    while chords.len() < extra + slacks.saturating_sub(1) && n > 3 {
        let a = rng.gen_range(slacks..n);
        let b = rng.gen_range(0..n);
        if a != b && parent[a] != b && parent[b] != a && !chords.contains(&(a.max(b), a.min(b))) {
            chords.push((a.max(b), a.min(b)));
        }
    }

    let params = Params::default();
    let gas = params.gas;
    let junctions: Vec<Junction> = (0..n)
        .map(|j| Junction {
            id: format!("j{j}"),
            pressure_min: 3.0e6,
            pressure_max: 7.0e6,
            slack_pressure: (j < slacks).then(|| Profile::constant(SLACK_PRESSURE)),
        })
        .collect();

    // pipe lengths: uniform weights rescaled to the total, rounded to 10 m
    let tree_pipes: Vec<usize> = (slacks..n).filter(|&i| !is_comp(i)).collect();
    let count = tree_pipes.len() + chords.len();
    let weights: Vec<f64> = (0..count).map(|_| rng.gen_range(0.5..1.5)).collect();
    let wsum: f64 = weights.iter().sum();
    let lengths: Vec<f64> = weights.iter().map(|w| round_to(w / wsum * spec.total_length, 10.0).max(10.0)).collect();
    let diameter = |feeds: usize| -> f64 {
        let share = feeds as f64 / (n as f64 / slacks as f64);
        round_to((0.3 + 0.6 * share.powf(0.4)).clamp(0.3, 0.9), 0.05)
    };
    let mut pipes = Vec::with_capacity(count);
    for (k, &i) in tree_pipes.iter().enumerate() {
        pipes.push(Pipe {
            id: format!("p{}", k + 1),
            from: parent[i],
            to: i,
            length: lengths[k],
            diameter: diameter(subtree[i]),
            friction: 0.01,
            inclination: 0.0,
        });
    }
    for (c, &(a, b)) in chords.iter().enumerate() {
        let k = tree_pipes.len() + c;
        pipes.push(Pipe {
            id: format!("p{}", k + 1),
            from: b,
            to: a,
            length: lengths[k],
            diameter: 0.4,
            friction: 0.01,
            inclination: 0.0,
        });
    }
    let compressors: Vec<Compressor> = comp_edges
        .iter()
        .enumerate()
        .map(|(c, &i)| Compressor {
            id: format!("c{}", c + 1),
            from: parent[i],
            to: i,
            kind: CompressorKind::Unidirectional,
            ratio_max: 1.6,
            flow_max: 500.0,
            power_max: 2.0e7,
            gas,
        })
        .collect();

    // transfers: a receipt at every slack, the rest on distinct junctions
    let mut free: Vec<usize> = (slacks..n).collect();
    free.shuffle(&mut rng);
    let others = spec.transfers - slacks;
    let extra_receipts = others / 8;
    let mut receipts: Vec<Transfer> = (0..slacks)
        .map(|j| Transfer {
            id: format!("r{}", j + 1),
            junction: j,
            direction: TransferDirection::Intake,
            flow_max: Profile::constant(round_to(600.0 / slacks as f64 + 100.0, 1.0)),
            flow_min: None,
            price: Profile::constant(-1.24),
        })
        .collect();
    let mut deliveries = Vec::new();
    for (k, &j) in free[..others].iter().enumerate() {
        if k < extra_receipts {
            receipts.push(Transfer {
                id: format!("r{}", receipts.len() + 1),
                junction: j,
                direction: TransferDirection::Intake,
                flow_max: Profile::constant(round_to(rng.gen_range(5.0..20.0), 0.5)),
                flow_min: None,
                price: Profile::constant(round_to(rng.gen_range(-1.5..-1.0), 0.01)),
            });
        } else {
            deliveries.push(Transfer {
                id: format!("d{}", deliveries.len() + 1),
                junction: j,
                direction: TransferDirection::Offtake,
                flow_max: nomination(round_to(rng.gen_range(1.0..4.0), 0.25)),
                flow_min: None,
                price: Profile::constant(round_to(rng.gen_range(2.5..5.0), 0.25)),
            });
        }
    }

    let mut sites: Vec<usize> = (slacks..n).collect();
    sites.shuffle(&mut rng);
    let storages: Vec<Storage> = sites[..spec.storages]
        .iter()
        .enumerate()
        .map(|(s, &j)| Storage {
            id: format!("st{}", s + 1),
            junction: j,
            volume: 9_099_797.308,
            mass_min: 3.5e8,
            mass_max: 6.2e8,
            initial_mass: 4.96e8,
            well_length: 1000.0,
            well_diameter: 0.5,
            well_friction: 0.01,
            regulator_ratio_max: 2.5,
            flow_max: 300.0,
            wellhead_pressure_min: psi_to_pa(250.0),
            wellhead_pressure_max: psi_to_pa(1400.0),
        })
        .collect();

    Ok(NetworkModel { params, junctions, pipes, compressors, storages, receipts, deliveries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{to_document, validate};

    #[test]
    fn large_counts_are_exact() {
        let m = synth_network(&SynthSpec::large(7)).unwrap();
        assert_eq!(m.junctions.len(), 506);
        assert_eq!(m.compressors.len(), 20);
        assert_eq!(m.storages.len(), 4);
        assert_eq!(m.receipts.len() + m.deliveries.len(), 196);
        assert!((m.total_pipe_length() - 3490e3).abs() < 5e3, "{}", m.total_pipe_length());
        assert!(validate(&m).is_empty(), "{:?}", validate(&m));
    }

    #[test]
    fn seed_fixes_the_document() {
        let a = to_document(&synth_network(&SynthSpec::large(3)).unwrap()).to_string();
        let b = to_document(&synth_network(&SynthSpec::large(3)).unwrap()).to_string();
        let c = to_document(&synth_network(&SynthSpec::large(4)).unwrap()).to_string();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn small_counts_give_a_six_junction_shape() {
        let spec = SynthSpec { junctions: 6, compressors: 2, storages: 1, transfers: 6, total_length: 290e3, seed: 1 };
        let m = synth_network(&spec).unwrap();
        assert_eq!((m.junctions.len(), m.compressors.len(), m.storages.len()), (6, 2, 1));
        assert_eq!(m.receipts.len(), 1);
        assert_eq!(m.deliveries.len(), 5);
        assert_eq!(m.pipes.len() + m.compressors.len(), 5);
        assert!(validate(&m).is_empty());
    }

    #[test]
    fn network_is_connected() {
        let m = synth_network(&SynthSpec::large(11)).unwrap();
        let n = m.junctions.len();
        let mut adj = vec![Vec::new(); n];
        for (a, b) in m.pipes.iter().map(|p| (p.from, p.to)).chain(m.compressors.iter().map(|c| (c.from, c.to))) {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn impossible_counts_are_rejected() {
        let spec = SynthSpec { junctions: 4, compressors: 5, storages: 0, transfers: 2, total_length: 1e3, seed: 0 };
        assert!(synth_network(&spec).is_err());
    }
}
