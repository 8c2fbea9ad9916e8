//! Nominal scales used to make the flow equations dimensionless.
//!
//! With nominal length `ℓ`, nominal pressure `p₀` and sound speed `a`, the
//! derived scales are `ρ₀ = p₀/a²`, `φ₀ = a·ρ₀`, `t₀ = ℓ/a`, `V₀ = ℓ·1 m²`,
//! `m₀ = ρ₀·V₀` and mass flow `φ₀·1 m²`. Specific compressor work is scaled
//! by `a²` and power by `a²·φ₀·1 m²`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity (m/s²).
pub const GRAVITY: f64 = 9.81;

/// Pascal per psi.
pub const PA_PER_PSI: f64 = 6894.757;

/// Default isothermal sound speed (m/s).
pub const DEFAULT_SOUND_SPEED: f64 = 371.66;

/// Default nominal pressure (Pa).
pub const DEFAULT_NOMINAL_PRESSURE: f64 = 4.0e6;

/// Default nominal time `t₀` (s); the nominal length is `a·t₀`.
pub const DEFAULT_NOMINAL_TIME: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantityKind {
    Pressure,
    Density,
    Flux,
    MassFlow,
    Time,
    Length,
    Volume,
    Mass,
    Power,
    SpecificWork,
}

impl QuantityKind {
    pub const ALL: [QuantityKind; 10] = [
        QuantityKind::Pressure,
        QuantityKind::Density,
        QuantityKind::Flux,
        QuantityKind::MassFlow,
        QuantityKind::Time,
        QuantityKind::Length,
        QuantityKind::Volume,
        QuantityKind::Mass,
        QuantityKind::Power,
        QuantityKind::SpecificWork,
    ];
}

impl FromStr for QuantityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "pressure" => QuantityKind::Pressure,
            "density" => QuantityKind::Density,
            "flux" => QuantityKind::Flux,
            "mass-flow" | "flow" => QuantityKind::MassFlow,
            "time" => QuantityKind::Time,
            "length" => QuantityKind::Length,
            "volume" => QuantityKind::Volume,
            "mass" => QuantityKind::Mass,
            "power" => QuantityKind::Power,
            "specific-work" | "work" => QuantityKind::SpecificWork,
            _ => return Err(Error::UnknownKind(s.to_string())),
        })
    }
}

/// Nominal constants. Immutable once built; every derived scale is computed
/// from the three primary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSet {
    /// Nominal length ℓ (m).
    pub length: f64,
    /// Nominal pressure p₀ (Pa).
    pub pressure: f64,
    /// Sound speed a (m/s).
    pub sound_speed: f64,
}

impl Default for ScaleSet {
    fn default() -> Self {
        ScaleSet {
            length: DEFAULT_SOUND_SPEED * DEFAULT_NOMINAL_TIME,
            pressure: DEFAULT_NOMINAL_PRESSURE,
            sound_speed: DEFAULT_SOUND_SPEED,
        }
    }
}

impl ScaleSet {
    pub fn new(length: f64, pressure: f64, sound_speed: f64) -> Result<Self> {
        for (name, v) in [
            ("nominal length", length),
            ("nominal pressure", pressure),
            ("sound speed", sound_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(ScaleSet {
            length,
            pressure,
            sound_speed,
        })
    }

    /// `a²` (m²/s²), the ratio p/ρ of the ideal-gas state equation.
    pub fn sound_speed_sq(&self) -> f64 {
        self.sound_speed * self.sound_speed
    }

    pub fn density(&self) -> f64 {
        self.pressure / self.sound_speed_sq()
    }

    pub fn flux(&self) -> f64 {
        self.sound_speed * self.density()
    }

    pub fn time(&self) -> f64 {
        self.length / self.sound_speed
    }

    pub fn volume(&self) -> f64 {
        self.length
    }

    pub fn mass(&self) -> f64 {
        self.density() * self.volume()
    }

    pub fn mass_flow(&self) -> f64 {
        self.flux()
    }

    pub fn specific_work(&self) -> f64 {
        self.sound_speed_sq()
    }

    pub fn power(&self) -> f64 {
        self.specific_work() * self.mass_flow()
    }

    /// The nominal value of one quantity kind, in SI units.
    pub fn nominal(&self, kind: QuantityKind) -> f64 {
        match kind {
            QuantityKind::Pressure => self.pressure,
            QuantityKind::Density => self.density(),
            QuantityKind::Flux => self.flux(),
            QuantityKind::MassFlow => self.mass_flow(),
            QuantityKind::Time => self.time(),
            QuantityKind::Length => self.length,
            QuantityKind::Volume => self.volume(),
            QuantityKind::Mass => self.mass(),
            QuantityKind::Power => self.power(),
            QuantityKind::SpecificWork => self.specific_work(),
        }
    }

    pub fn scale(&self, value: f64, kind: QuantityKind) -> f64 {
        value / self.nominal(kind)
    }

    pub fn unscale(&self, value: f64, kind: QuantityKind) -> f64 {
        value * self.nominal(kind)
    }

    /// Scales a quantity whose kind is given by name.
    pub fn scale_named(&self, value: f64, kind: &str) -> Result<f64> {
        Ok(self.scale(value, kind.parse()?))
    }

    pub fn unscale_named(&self, value: f64, kind: &str) -> Result<f64> {
        Ok(self.unscale(value, kind.parse()?))
    }

    /// Time in hours to nondimensional time.
    pub fn hours(&self, hours: f64) -> f64 {
        self.scale(hours * 3600.0, QuantityKind::Time)
    }

    pub fn pressure_to_density(&self, pressure_pa: f64) -> f64 {
        pressure_pa / self.sound_speed_sq()
    }

    pub fn density_to_pressure(&self, density: f64) -> f64 {
        density * self.sound_speed_sq()
    }
}

/// Gravity exponent of a straight pipe segment: `β = −2 g∥ L / a²`, with
/// `L` the physical length and `g∥` the gravity component along the pipe
/// axis. Zero for horizontal pipes, negative for a downward-pointing axis.
pub fn beta(g_parallel: f64, length_m: f64, sound_speed: f64) -> f64 {
    -2.0 * g_parallel * length_m / (sound_speed * sound_speed)
}

/// Axial gravity component for a pipe inclined by `theta` (rad) above the
/// horizontal, with the axis pointing up-slope.
pub fn axial_gravity(theta: f64) -> f64 {
    -GRAVITY * theta.sin()
}

pub fn psi_to_pa(psi: f64) -> f64 {
    psi * PA_PER_PSI
}

pub fn pa_to_psi(pa: f64) -> f64 {
    pa / PA_PER_PSI
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn identity_pressure_scaling() {
        let s = ScaleSet::default();
        assert_relative_eq!(s.scale(4.0e6, QuantityKind::Pressure), 1.0);
    }

    #[test]
    fn day_in_nominal_time() {
        let s = ScaleSet::new(371_660.0, 4.0e6, 371.66).unwrap();
        assert_relative_eq!(s.time(), 1000.0, max_relative = 1e-12);
        assert_relative_eq!(s.scale(86_400.0, QuantityKind::Time), 86.4, max_relative = 1e-12);
        assert_relative_eq!(s.hours(24.0), 86.4, max_relative = 1e-12);
    }

    #[test]
    fn derived_relations_hold() {
        let s = ScaleSet::new(2.0e5, 5.0e6, 350.0).unwrap();
        assert_eq!(s.density(), 5.0e6 / (350.0 * 350.0));
        assert_eq!(s.flux(), 350.0 * s.density());
        assert_eq!(s.time(), 2.0e5 / 350.0);
        assert_eq!(s.mass(), s.density() * 2.0e5);
        assert_eq!(s.power(), 350.0 * 350.0 * s.flux());
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let s = ScaleSet::default();
        assert!(matches!(s.scale_named(1.0, "temperature"), Err(Error::UnknownKind(_))));
        assert_relative_eq!(s.scale_named(4.0e6, "pressure").unwrap(), 1.0);
    }

    #[test]
    fn nonpositive_scales_rejected() {
        assert!(ScaleSet::new(0.0, 1.0, 1.0).is_err());
        assert!(ScaleSet::new(1.0, -1.0, 1.0).is_err());
        assert!(ScaleSet::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn beta_values() {
        let a = 138_131.0_f64.sqrt();
        assert_eq!(beta(0.0, 1000.0, a), 0.0);
        // vertical well sub-pipe, axis pointing down: g∥ = +g
        assert_relative_eq!(beta(GRAVITY, 1000.0, a), -2.0 * 9.81 * 1000.0 / 138_131.0, max_relative = 1e-12);
        assert_relative_eq!(beta(GRAVITY, 1000.0, a), -0.14204, max_relative = 1e-4);
        // 30° up-slope
        let b = beta(axial_gravity(30f64.to_radians()), 1000.0, a);
        assert_relative_eq!(b, 0.07102, max_relative = 1e-4);
    }

    proptest! {
        #[test]
        fn scale_round_trip(v in -1e9f64..1e9, k in 0usize..10, l in 1e3f64..1e6, p in 1e5f64..1e7) {
            let s = ScaleSet::new(l, p, 371.66).unwrap();
            let kind = QuantityKind::ALL[k];
            let back = s.unscale(s.scale(v, kind), kind);
            prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }
    }
}
