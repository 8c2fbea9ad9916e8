//! Physical network description, input documents, validation and spatial
//! discretization.

mod document;
mod segment;
mod validate;

pub use document::{parse_network, parse_network_unchecked, read_network, to_document, write_network};
pub use segment::{
    segment_network, AugmentedNetwork, AugJunction, AugStorage, JunctionKind, PipeOrigin, SubPipe,
};
pub use validate::{validate, Finding};

use serde::{Deserialize, Serialize};

use crate::nondim::{axial_gravity, ScaleSet, DEFAULT_NOMINAL_PRESSURE, DEFAULT_NOMINAL_TIME, DEFAULT_SOUND_SPEED};

/// Piecewise-constant time series given as `(hour, value)` breakpoints.
/// The value at `t` is the value of the last breakpoint at or before `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    points: Vec<(f64, f64)>,
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile {
            points: vec![(0.0, value)],
        }
    }

    /// Breakpoints are sorted by hour; duplicate hours keep the later entry.
    pub fn new(mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        points.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 = later.1;
                true
            } else {
                false
            }
        });
        Profile { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn is_constant(&self) -> bool {
        self.points.windows(2).all(|w| w[0].1 == w[1].1)
    }

    /// True when the first breakpoint is at or before hour 0.
    pub fn covers_start(&self) -> bool {
        self.points.first().is_some_and(|p| p.0 <= 0.0)
    }

    pub fn value_at(&self, hour: f64) -> f64 {
        let idx = self.points.partition_point(|p| p.0 <= hour + 1e-9);
        match idx {
            0 => self.points.first().map_or(0.0, |p| p.1),
            i => self.points[i - 1].1,
        }
    }

    pub fn min(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Profile {
        Profile {
            points: self.points.iter().map(|&(t, v)| (t, f(v))).collect(),
        }
    }
}

/// Global constants of a network document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Optimization horizon T (h).
    pub horizon_hours: f64,
    /// Isothermal sound speed a (m/s).
    pub sound_speed: f64,
    /// Nominal pressure p₀ (Pa).
    pub nominal_pressure: f64,
    /// Nominal length ℓ (m).
    pub nominal_length: f64,
    pub gas: GasProperties,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            horizon_hours: 24.0,
            sound_speed: DEFAULT_SOUND_SPEED,
            nominal_pressure: DEFAULT_NOMINAL_PRESSURE,
            nominal_length: DEFAULT_SOUND_SPEED * DEFAULT_NOMINAL_TIME,
            gas: GasProperties::default(),
        }
    }
}

impl Params {
    pub fn scales(&self) -> ScaleSet {
        ScaleSet {
            length: self.nominal_length,
            pressure: self.nominal_pressure,
            sound_speed: self.sound_speed,
        }
    }

    pub fn sound_speed_sq(&self) -> f64 {
        self.sound_speed * self.sound_speed
    }
}

/// Gas constants entering the adiabatic compressor work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasProperties {
    /// Ratio of specific heats γ.
    pub gamma: f64,
    /// Gas gravity G.
    pub gravity: f64,
    /// Compression temperature (K).
    pub temperature: f64,
}

impl Default for GasProperties {
    fn default() -> Self {
        GasProperties {
            gamma: 1.4,
            gravity: 0.6,
            temperature: 288.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub id: String,
    /// Operating pressure bounds (Pa).
    pub pressure_min: f64,
    pub pressure_max: f64,
    /// Externally fixed pressure (Pa) for slack junctions.
    pub slack_pressure: Option<Profile>,
}

impl Junction {
    pub fn is_slack(&self) -> bool {
        self.slack_pressure.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipe {
    pub id: String,
    pub from: usize,
    pub to: usize,
    /// Length (m).
    pub length: f64,
    /// Diameter (m).
    pub diameter: f64,
    /// Darcy-Weisbach friction factor.
    pub friction: f64,
    /// Angle above the horizontal (rad), positive when `to` is higher.
    pub inclination: f64,
}

impl Pipe {
    /// Gravity component along the `from → to` axis (m/s²).
    pub fn g_parallel(&self) -> f64 {
        axial_gravity(self.inclination)
    }

    pub fn area(&self) -> f64 {
        pipe_area(self.diameter)
    }
}

pub fn pipe_area(diameter: f64) -> f64 {
    std::f64::consts::PI * diameter * diameter / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompressorKind {
    /// Flow only from suction to discharge.
    Unidirectional,
    /// Reverse flow allowed, but only uncompressed.
    Bidirectional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compressor {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub kind: CompressorKind,
    pub ratio_max: f64,
    /// Flow bound (kg/s).
    pub flow_max: f64,
    /// Power bound (W).
    pub power_max: f64,
    pub gas: GasProperties,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Storage {
    pub id: String,
    pub junction: usize,
    /// Reservoir volume (m³).
    pub volume: f64,
    /// Base gas and capacity (kg).
    pub mass_min: f64,
    pub mass_max: f64,
    pub initial_mass: f64,
    /// Well geometry (m).
    pub well_length: f64,
    pub well_diameter: f64,
    pub well_friction: f64,
    /// Wellhead compressor/regulator bound α_max > 1.
    pub regulator_ratio_max: f64,
    /// Exchange flow bound (kg/s).
    pub flow_max: f64,
    /// Pressure bounds for the well junctions (Pa).
    pub wellhead_pressure_min: f64,
    pub wellhead_pressure_max: f64,
}

impl Storage {
    pub fn well_area(&self) -> f64 {
        pipe_area(self.well_diameter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferDirection {
    Intake,
    Offtake,
}

/// A receipt (intake) or delivery (off-take) point.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    pub id: String,
    pub junction: usize,
    pub direction: TransferDirection,
    /// Nomination (kg/s).
    pub flow_max: Profile,
    pub flow_min: Option<Profile>,
    /// Price in $ per (kg/s)·h.
    pub price: Profile,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkModel {
    pub params: Params,
    pub junctions: Vec<Junction>,
    pub pipes: Vec<Pipe>,
    pub compressors: Vec<Compressor>,
    pub storages: Vec<Storage>,
    pub receipts: Vec<Transfer>,
    pub deliveries: Vec<Transfer>,
}

impl NetworkModel {
    pub fn junction_index(&self, id: &str) -> Option<usize> {
        self.junctions.iter().position(|j| j.id == id)
    }

    pub fn total_pipe_length(&self) -> f64 {
        self.pipes.iter().map(|p| p.length).sum()
    }

    pub fn transfers(&self) -> impl Iterator<Item = &Transfer> {
        self.receipts.iter().chain(self.deliveries.iter())
    }

    /// Returns a copy with new nominal constants; the physics is unchanged.
    pub fn with_scales(&self, nominal_length: f64, nominal_pressure: f64) -> NetworkModel {
        let mut m = self.clone();
        m.params.nominal_length = nominal_length;
        m.params.nominal_pressure = nominal_pressure;
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_holds_last_breakpoint() {
        let p = Profile::new(vec![(6.0, 2.0), (0.0, 1.0), (12.0, 3.0)]);
        assert_eq!(p.value_at(0.0), 1.0);
        assert_eq!(p.value_at(5.99), 1.0);
        assert_eq!(p.value_at(6.0), 2.0);
        assert_eq!(p.value_at(23.0), 3.0);
        assert!(p.covers_start());
        assert!(!p.is_constant());
        assert_eq!(p.min(), 1.0);
        assert_eq!(p.max(), 3.0);
    }

    #[test]
    fn duplicate_breakpoints_keep_last() {
        let p = Profile::new(vec![(0.0, 1.0), (0.0, 5.0)]);
        assert_eq!(p.points(), &[(0.0, 5.0)]);
    }
}
