//! Spatial discretization: pipes are split into equal sub-pipes no longer
//! than Δ and every storage well becomes a vertical chain of sub-pipes
//! running from the wellhead down to the bottom-hole.

use super::{pipe_area, Junction, NetworkModel, Pipe, Profile};
use crate::error::{Error, Result};
use crate::nondim::{beta, ScaleSet, GRAVITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JunctionKind {
    Physical,
    /// Added inside original pipe `pipe`.
    Internal { pipe: usize },
    /// Belongs to the well of storage `storage`.
    Well { storage: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugJunction {
    pub name: String,
    pub kind: JunctionKind,
    /// Pressure bounds (Pa).
    pub pressure_min: f64,
    pub pressure_max: f64,
    pub slack_pressure: Option<Profile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipeOrigin {
    Pipe { pipe: usize, index: usize },
    Well { storage: usize, index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubPipe {
    pub origin: PipeOrigin,
    pub from: usize,
    pub to: usize,
    /// Length (m).
    pub length: f64,
    pub diameter: f64,
    pub friction: f64,
    pub g_parallel: f64,
    pub area: f64,
    pub beta: f64,
}

impl SubPipe {
    /// `λ·L/D`, the friction coefficient of the nondimensional momentum law.
    pub fn resistance(&self) -> f64 {
        self.friction * self.length / self.diameter
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugStorage {
    /// Network junction the wellhead regulator connects to.
    pub junction: usize,
    pub wellhead: usize,
    pub bottom_hole: usize,
    /// Well sub-pipes ordered from wellhead to bottom-hole.
    pub well_pipes: Vec<usize>,
}

/// The discretized graph. Original junctions keep their indices; internal
/// and well junctions are appended after them.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedNetwork {
    pub model: NetworkModel,
    pub delta: f64,
    pub scales: ScaleSet,
    pub junctions: Vec<AugJunction>,
    pub pipes: Vec<SubPipe>,
    /// Sub-pipes of each original pipe, ordered from its `from` end.
    pub pipe_chains: Vec<Vec<usize>>,
    pub storages: Vec<AugStorage>,
}

fn piece_count(length: f64, delta: f64) -> usize {
    // The relative slack keeps re-segmentation of an already segmented
    // network from splitting pieces that exceed Δ by one ulp.
    ((length / delta) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Splits every pipe into `⌈L/Δ⌉` equal sub-pipes and discretizes wells.
pub fn segment_network(model: &NetworkModel, delta: f64) -> Result<AugmentedNetwork> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!("segment length must be positive, got {delta}")));
    }
    let a = model.params.sound_speed;
    let mut junctions: Vec<AugJunction> = model
        .junctions
        .iter()
        .map(|j| AugJunction {
            name: j.id.clone(),
            kind: JunctionKind::Physical,
            pressure_min: j.pressure_min,
            pressure_max: j.pressure_max,
            slack_pressure: j.slack_pressure.clone(),
        })
        .collect();
    let mut pipes = Vec::new();
    let mut pipe_chains = Vec::with_capacity(model.pipes.len());

    for (k, p) in model.pipes.iter().enumerate() {
        let n = piece_count(p.length, delta);
        let piece = p.length / n as f64;
        let (lo, hi) = {
            let (a, b) = (&model.junctions[p.from], &model.junctions[p.to]);
            (a.pressure_min.min(b.pressure_min), a.pressure_max.max(b.pressure_max))
        };
        let mut chain = Vec::with_capacity(n);
        let mut prev = p.from;
        for i in 0..n {
            let next = if i + 1 == n {
                p.to
            } else {
                junctions.push(AugJunction {
                    name: format!("{}#{}", p.id, i + 1),
                    kind: JunctionKind::Internal { pipe: k },
                    pressure_min: lo,
                    pressure_max: hi,
                    slack_pressure: None,
                });
                junctions.len() - 1
            };
            chain.push(pipes.len());
            pipes.push(SubPipe {
                origin: PipeOrigin::Pipe { pipe: k, index: i },
                from: prev,
                to: next,
                length: piece,
                diameter: p.diameter,
                friction: p.friction,
                g_parallel: p.g_parallel(),
                area: p.area(),
                beta: beta(p.g_parallel(), piece, a),
            });
            prev = next;
        }
        pipe_chains.push(chain);
    }

    let mut storages = Vec::with_capacity(model.storages.len());
    for (k, s) in model.storages.iter().enumerate() {
        let n = piece_count(s.well_length, delta);
        let piece = s.well_length / n as f64;
        let mut node = |name: String| {
            junctions.push(AugJunction {
                name,
                kind: JunctionKind::Well { storage: k },
                pressure_min: s.wellhead_pressure_min,
                pressure_max: s.wellhead_pressure_max,
                slack_pressure: None,
            });
            junctions.len() - 1
        };
        let wellhead = node(format!("{}:wellhead", s.id));
        let mut well_pipes = Vec::with_capacity(n);
        let mut prev = wellhead;
        for i in 0..n {
            let next = node(if i + 1 == n {
                format!("{}:bottom-hole", s.id)
            } else {
                format!("{}:well#{}", s.id, i + 1)
            });
            well_pipes.push(pipes.len());
            pipes.push(SubPipe {
                origin: PipeOrigin::Well { storage: k, index: i },
                from: prev,
                to: next,
                length: piece,
                diameter: s.well_diameter,
                friction: s.well_friction,
                g_parallel: GRAVITY,
                area: pipe_area(s.well_diameter),
                beta: beta(GRAVITY, piece, a),
            });
            prev = next;
        }
        storages.push(AugStorage {
            junction: s.junction,
            wellhead,
            bottom_hole: prev,
            well_pipes,
        });
    }

    Ok(AugmentedNetwork {
        model: model.clone(),
        delta,
        scales: model.params.scales(),
        junctions,
        pipes,
        pipe_chains,
        storages,
    })
}

impl AugmentedNetwork {
    pub fn junction_count(&self) -> usize {
        self.junctions.len()
    }

    /// Number of junctions added by segmentation of pipes (wells excluded).
    pub fn internal_junction_count(&self) -> usize {
        self.junctions
            .iter()
            .filter(|j| matches!(j.kind, JunctionKind::Internal { .. }))
            .count()
    }

    /// Flattens the pipe segmentation back into a plain model whose pipes
    /// are the sub-pipes. Wells stay attached to their storages.
    pub fn to_model(&self) -> NetworkModel {
        let mut m = self.model.clone();
        m.junctions = self
            .junctions
            .iter()
            .filter(|j| !matches!(j.kind, JunctionKind::Well { .. }))
            .map(|j| Junction {
                id: j.name.clone(),
                pressure_min: j.pressure_min,
                pressure_max: j.pressure_max,
                slack_pressure: j.slack_pressure.clone(),
            })
            .collect();
        m.pipes = self
            .pipes
            .iter()
            .filter_map(|sp| match sp.origin {
                PipeOrigin::Pipe { pipe, index } => {
                    let orig = &self.model.pipes[pipe];
                    let id = if self.pipe_chains[pipe].len() == 1 {
                        orig.id.clone()
                    } else {
                        format!("{}/{}", orig.id, index + 1)
                    };
                    Some(Pipe {
                        id,
                        from: sp.from,
                        to: sp.to,
                        length: sp.length,
                        ..orig.clone()
                    })
                }
                PipeOrigin::Well { .. } => None,
            })
            .collect();
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn single_pipe(length: f64) -> NetworkModel {
        parse_network(&format!(
            r#"{{
            "junctions": [
                {{"id": "a", "pressure_min": 3e6, "pressure_max": 6e6, "slack_pressure": 4e6}},
                {{"id": "b", "pressure_min": 2e6, "pressure_max": 5e6}}
            ],
            "pipes": [{{"id": "p", "from": "a", "to": "b", "length": {length}, "diameter": 0.6, "friction_factor": 0.01}}]
        }}"#
        ))
        .unwrap()
    }

    #[test]
    fn fifty_km_at_ten() {
        let aug = segment_network(&single_pipe(50e3), 10e3).unwrap();
        assert_eq!(aug.pipes.len(), 5);
        assert_eq!(aug.internal_junction_count(), 4);
        assert!(aug.pipes.iter().all(|p| p.length == 10e3 && p.beta == 0.0));
        let inner = &aug.junctions[2];
        assert_eq!((inner.pressure_min, inner.pressure_max), (2e6, 6e6));
    }

    #[test]
    fn boundary_length_is_unchanged() {
        let aug = segment_network(&single_pipe(10e3), 10e3).unwrap();
        assert_eq!(aug.pipes.len(), 1);
        assert_eq!(aug.junctions.len(), 2);
    }

    #[test]
    fn eighty_km_at_seven_and_a_half() {
        let aug = segment_network(&single_pipe(80e3), 7.5e3).unwrap();
        assert_eq!(aug.pipes.len(), 11);
        for p in &aug.pipes {
            assert_relative_eq!(p.length, 80e3 / 11.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn nonpositive_delta_rejected() {
        assert!(segment_network(&single_pipe(1e3), 0.0).is_err());
        assert!(segment_network(&single_pipe(1e3), -5.0).is_err());
    }

    #[test]
    fn wells_run_downward() {
        let m = crate::fixtures::six_junction_storage();
        let aug = segment_network(&m, 300.0).unwrap();
        let st = &aug.storages[0];
        assert_eq!(st.well_pipes.len(), 4);
        assert_eq!(aug.pipes[st.well_pipes[0]].from, st.wellhead);
        assert_eq!(aug.pipes[*st.well_pipes.last().unwrap()].to, st.bottom_hole);
        for w in st.well_pipes.windows(2) {
            assert_eq!(aug.pipes[w[0]].to, aug.pipes[w[1]].from);
        }
        assert!(st.well_pipes.iter().all(|&k| aug.pipes[k].beta < 0.0));
        let total: f64 = st.well_pipes.iter().map(|&k| aug.pipes[k].length).sum();
        assert_relative_eq!(total, m.storages[0].well_length, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn length_is_conserved(length in 1.0f64..2e5, delta in 100.0f64..2e4) {
            let aug = segment_network(&single_pipe(length), delta).unwrap();
            let total: f64 = aug.pipe_chains[0].iter().map(|&k| aug.pipes[k].length).sum();
            prop_assert!((total - length).abs() <= 1e-12 * length * aug.pipes.len() as f64);
            prop_assert!(aug.pipes.iter().all(|p| p.length <= delta * (1.0 + 1e-12)));
        }

        #[test]
        fn resegmenting_is_idempotent(length in 1.0f64..2e5, delta in 100.0f64..2e4) {
            let aug = segment_network(&single_pipe(length), delta).unwrap();
            let again = segment_network(&aug.to_model(), delta).unwrap();
            prop_assert_eq!(again.internal_junction_count(), 0);
            prop_assert_eq!(again.junctions.len(), aug.junctions.len());
        }
    }
}
