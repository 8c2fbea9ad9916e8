//! Component equations in nondimensional form.
//!
//! Densities, fluxes and flows are scaled as in [`crate::nondim`]. Pipe
//! lengths enter the mass law nondimensionally and the momentum law through
//! the physical ratio `λL/D`. Time derivatives are with respect to
//! nondimensional time.

use crate::error::{Error, Result};
use crate::network::GasProperties;

/// Specific gas constant factor of the adiabatic work formula (J/(kg·K)
/// times gas gravity).
pub const WORK_GAS_CONSTANT: f64 = 286.76;

/// `(e^β − 1)/β`, with its limit 1 at β = 0.
pub fn gravity_factor(beta: f64) -> f64 {
    if beta.abs() < 1e-4 {
        // Truncation error of the cubic term is below 1e-17 here.
        1.0 + beta / 2.0 + beta * beta / 6.0 + beta * beta * beta / 24.0
    } else {
        beta.exp_m1() / beta
    }
}

/// `x|x|`, or the smooth variant `x·√(x² + ε²)`, with first and second
/// derivatives.
pub fn signed_square(x: f64, smoothing: Option<f64>) -> (f64, f64, f64) {
    match smoothing {
        None => (x * x.abs(), 2.0 * x.abs(), 2.0 * x.signum() * (x != 0.0) as u8 as f64),
        Some(eps) => {
            let r = (x * x + eps * eps).sqrt();
            let d1 = r + x * x / r;
            let d2 = (3.0 * x * r * r - x * x * x) / (r * r * r);
            (x * r, d1, d2)
        }
    }
}

/// Symmetric/antisymmetric flux pair of a pipe and its endpoint fluxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeState {
    pub rho_i: f64,
    pub rho_j: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
}

impl PipeState {
    pub fn phi_in(&self) -> f64 {
        self.phi_plus - self.phi_minus
    }

    pub fn phi_out(&self) -> f64 {
        self.phi_plus + self.phi_minus
    }

    pub fn from_endpoint_fluxes(rho_i: f64, rho_j: f64, phi_in: f64, phi_out: f64) -> Self {
        PipeState {
            rho_i,
            rho_j,
            phi_plus: 0.5 * (phi_in + phi_out),
            phi_minus: 0.5 * (phi_out - phi_in),
        }
    }
}

/// `L(ρ̇_i + ρ̇_j) + 4φ⁻`.
pub fn pipe_mass_residual(rho_dot_i: f64, rho_dot_j: f64, phi_minus: f64, length: f64) -> f64 {
    length * (rho_dot_i + rho_dot_j) + 4.0 * phi_minus
}

/// `e^β ρ_j² − ρ_i² + (λL/D)·(e^β − 1)/β·φ⁺|φ⁺|`.
pub fn pipe_momentum_residual(rho_i: f64, rho_j: f64, phi_plus: f64, resistance: f64, beta: f64) -> f64 {
    beta.exp() * rho_j * rho_j - rho_i * rho_i + resistance * gravity_factor(beta) * phi_plus * phi_plus.abs()
}

/// Outlet density solving the momentum law for given inlet density and
/// flux, or `None` when the pressure would drop to zero.
pub fn momentum_outlet_density(rho_i: f64, phi_plus: f64, resistance: f64, beta: f64) -> Option<f64> {
    let sq = (rho_i * rho_i - resistance * gravity_factor(beta) * phi_plus * phi_plus.abs()) / beta.exp();
    (sq > 0.0).then(|| sq.sqrt())
}

/// Flux that carries density `rho_i` to `rho_j` through a sub-pipe.
pub fn momentum_flux(rho_i: f64, rho_j: f64, resistance: f64, beta: f64) -> f64 {
    let q = (rho_i * rho_i - beta.exp() * rho_j * rho_j) / (resistance * gravity_factor(beta));
    q.signum() * q.abs().sqrt()
}

/// Density ratio bottom/top of a static gas column of total gravity
/// exponent `beta` (sum over the column).
pub fn static_column_ratio(beta: f64) -> f64 {
    (-0.5 * beta).exp()
}

/// Residuals of a compressor: the equality `ρ_j − αρ_i` and, for the
/// bidirectional kind, the inequality `f(1 − α) ≤ 0`. The unidirectional
/// kind instead requires `f ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressorResiduals {
    pub boost: f64,
    /// Value that must be non-positive.
    pub direction: f64,
}

pub fn compressor_residuals(
    rho_i: f64,
    rho_j: f64,
    alpha: f64,
    flow: f64,
    kind: crate::network::CompressorKind,
) -> CompressorResiduals {
    use crate::network::CompressorKind::*;
    CompressorResiduals {
        boost: rho_j - alpha * rho_i,
        direction: match kind {
            Unidirectional => -flow,
            Bidirectional => flow * (1.0 - alpha),
        },
    }
}

fn check_gas(gas: &GasProperties) -> Result<()> {
    if !(gas.gamma > 1.0 && gas.gravity > 0.0 && gas.temperature > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "compressor work needs gamma > 1, positive gravity and temperature, got {gas:?}"
        )));
    }
    Ok(())
}

/// Coefficient `K` and exponent `m` of `W = K(α^m − 1)` (J/kg).
pub fn work_coefficients(gas: &GasProperties) -> Result<(f64, f64)> {
    check_gas(gas)?;
    let m = (gas.gamma - 1.0) / gas.gamma;
    let k = gas.gamma * gas.temperature / (gas.gamma - 1.0) * WORK_GAS_CONSTANT / gas.gravity;
    Ok((k, m))
}

/// Adiabatic compression work per unit mass (J/kg).
pub fn compressor_work(alpha: f64, gas: &GasProperties) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("compression ratio must be positive, got {alpha}")));
    }
    let (k, m) = work_coefficients(gas)?;
    Ok(k * (alpha.powf(m) - 1.0))
}

/// `dW/dα` (J/kg).
pub fn compressor_work_derivative(alpha: f64, gas: &GasProperties) -> Result<f64> {
    let (k, m) = work_coefficients(gas)?;
    Ok(k * m * alpha.powf(m - 1.0))
}

/// `V ρ̇ − f_bh`.
pub fn reservoir_residual(rho_dot: f64, bottom_hole_flow: f64, volume: f64) -> f64 {
    volume * rho_dot - bottom_hole_flow
}

/// Whether a reservoir density keeps the stored mass within bounds.
pub fn reservoir_mass_ok(rho: f64, volume: f64, mass_min: f64, mass_max: f64) -> bool {
    let m = rho * volume;
    m >= mass_min && m <= mass_max
}

/// `ρ_i − α_s ρ_wh`.
pub fn regulator_residual(rho_junction: f64, rho_wellhead: f64, alpha: f64) -> f64 {
    rho_junction - alpha * rho_wellhead
}

pub fn regulator_in_range(alpha: f64, alpha_max: f64) -> bool {
    alpha >= 1.0 / alpha_max && alpha <= alpha_max
}

/// Mass flows meeting at one junction. Pipe terms are `(flux, area)`:
/// for a pipe leaving the junction the flux is its inlet flux, for a pipe
/// entering it the outlet flux.
#[derive(Debug, Clone, Default)]
pub struct JunctionFlows {
    pub pipes_out: Vec<(f64, f64)>,
    pub pipes_in: Vec<(f64, f64)>,
    pub compressors_out: Vec<f64>,
    pub compressors_in: Vec<f64>,
    pub receipts: Vec<f64>,
    pub deliveries: Vec<f64>,
    pub storages: Vec<f64>,
}

/// Outflow minus inflow: `Σ φ_in A (leaving) − Σ φ_out A (entering) +
/// Σ f (compressors leaving) − Σ f (entering) − Σ f_r + Σ f_d + Σ f_s`.
pub fn nodal_balance_residual(j: &JunctionFlows) -> f64 {
    let out: f64 = j.pipes_out.iter().map(|(p, a)| p * a).sum::<f64>() + j.compressors_out.iter().sum::<f64>();
    let inn: f64 = j.pipes_in.iter().map(|(p, a)| p * a).sum::<f64>() + j.compressors_in.iter().sum::<f64>();
    out - inn - j.receipts.iter().sum::<f64>() + j.deliveries.iter().sum::<f64>() + j.storages.iter().sum::<f64>()
}

/// Objective parts over one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveTerms {
    /// Economic value J_P ($).
    pub profit: f64,
    /// Compressor energy J_E (MW·h).
    pub energy: f64,
    /// `κ(−J_P) + (1 − κ)J_E`.
    pub total: f64,
}

pub fn combine_objective(profit: f64, energy: f64, kappa: f64) -> Result<ObjectiveTerms> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidArgument(format!("kappa must lie in [0, 1], got {kappa}")));
    }
    Ok(ObjectiveTerms {
        profit,
        energy,
        total: kappa * (-profit) + (1.0 - kappa) * energy,
    })
}

/// Trapezoid rule on a periodic grid of step `dt`: the end value repeats
/// the first, so the rule reduces to `dt·Σ g_k`.
pub fn periodic_trapezoid(values: &[f64], dt: f64) -> f64 {
    dt * values.iter().sum::<f64>()
}

/// Per-sample inputs to the objective, in physical units: `(price, flow)`
/// for every transfer point and `(work J/kg, flow kg/s)` for every
/// compressor, on a periodic grid of step `dt_hours`.
pub fn objective_terms(
    transfers: &[Vec<(f64, f64)>],
    compressors: &[Vec<(f64, f64)>],
    dt_hours: f64,
    kappa: f64,
) -> Result<ObjectiveTerms> {
    let profit = transfers
        .iter()
        .map(|s| periodic_trapezoid(&s.iter().map(|(c, f)| c * f).collect::<Vec<_>>(), dt_hours))
        .sum();
    let energy = compressors
        .iter()
        .map(|s| periodic_trapezoid(&s.iter().map(|(w, f)| w * f / 1e6).collect::<Vec<_>>(), dt_hours))
        .sum();
    combine_objective(profit, energy, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::CompressorKind;
    use crate::nondim::{beta, ScaleSet, GRAVITY};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const A2: f64 = 138_131.0;

    #[test]
    fn mass_residual_cases() {
        assert_eq!(pipe_mass_residual(0.0, 0.0, 0.0, 3.0), 0.0);
        assert_eq!(pipe_mass_residual(1.0, 1.0, -0.5, 1.0), 0.0);
        let s = PipeState { rho_i: 1.0, rho_j: 1.0, phi_plus: 2.0, phi_minus: 0.0 };
        assert_eq!(s.phi_in(), s.phi_out());
    }

    #[test]
    fn no_flow_no_gravity_equal_densities() {
        assert_eq!(pipe_momentum_residual(1.3, 1.3, 0.0, 5.0, 0.0), 0.0);
        assert!(pipe_momentum_residual(1.3, 1.2, 0.0, 5.0, 0.0) != 0.0);
    }

    #[test]
    fn horizontal_pressure_drop_closed_form() {
        // 4 MPa inlet, 100 kg/m²/s over 10 km of 0.6 m pipe.
        let s = ScaleSet::new(371_660.0, 4e6, A2.sqrt()).unwrap();
        let phi = 100.0 / s.flux();
        let rho_j = momentum_outlet_density(s.pressure_to_density(4e6) / s.density(), phi, 0.01 * 1e4 / 0.6, 0.0).unwrap();
        let p_j = rho_j * s.pressure;
        let oracle = (16e12 - 0.01 * 1e4 * A2 / 0.6 * 100.0 * 100.0f64).sqrt();
        assert_relative_eq!(p_j, oracle, max_relative = 1e-12);
        assert_relative_eq!(p_j / 1e6, 3.9711, max_relative = 1e-4);
    }

    #[test]
    fn static_well_column() {
        let b = beta(GRAVITY, 1000.0, A2.sqrt());
        assert_relative_eq!(b, -0.14204, max_relative = 1e-4);
        let rho_bottom = momentum_outlet_density(1.0, 0.0, 20.0, b).unwrap();
        assert_relative_eq!(rho_bottom, (GRAVITY * 1000.0 / A2).exp(), max_relative = 1e-14);
        assert_relative_eq!(rho_bottom, 1.07360, max_relative = 1e-5);
        assert_relative_eq!(static_column_ratio(b), rho_bottom, max_relative = 1e-15);
    }

    #[test]
    fn compressor_cases() {
        let r = compressor_residuals(1.0, 1.0, 1.0, -3.0, CompressorKind::Bidirectional);
        assert_eq!(r.boost, 0.0);
        assert!(r.direction <= 0.0);
        let r = compressor_residuals(2.0, 3.0, 1.5, -10.0, CompressorKind::Bidirectional);
        assert_eq!(r.boost, 0.0);
        assert_eq!(r.direction, 5.0);
        assert!(compressor_residuals(1.0, 1.0, 1.0, -1.0, CompressorKind::Unidirectional).direction > 0.0);
    }

    #[test]
    fn work_values() {
        let gas = GasProperties::default();
        assert_eq!(compressor_work(1.0, &gas).unwrap(), 0.0);
        let oracle = 1.4 * 288.7 / 0.4 * (286.76 / 0.6) * (2f64.powf(2.0 / 7.0) - 1.0);
        assert_relative_eq!(compressor_work(2.0, &gas).unwrap(), oracle, max_relative = 1e-14);
        assert_relative_eq!(2f64.powf(2.0 / 7.0), 1.21901, max_relative = 1e-5);
        assert_relative_eq!(oracle, 1.0577e5, max_relative = 1e-4);
        assert!(compressor_work(2.0, &GasProperties { gamma: 1.0, ..gas }).is_err());
        assert!(compressor_work(-1.0, &gas).is_err());
    }

    #[test]
    fn regulator_cases() {
        assert_eq!(regulator_residual(2.0, 2.0, 1.0), 0.0);
        assert_eq!(regulator_residual(2.0, 4.0, 0.5), 0.0);
        assert!(!regulator_in_range(0.3, 2.5));
        assert!(!regulator_in_range(2.6, 2.5));
        assert!(regulator_in_range(0.4, 2.5));
    }

    #[test]
    fn reservoir_constant_injection() {
        // V ρ̇ = f integrates to Δm = f τ.
        let (v, f, tau) = (9.1e6 / 371_660.0, 0.3, 5.0);
        let rho_dot = f / v;
        assert_eq!(reservoir_residual(rho_dot, f, v), 0.0);
        assert_relative_eq!(v * rho_dot * tau, f * tau, max_relative = 1e-15);
        assert_eq!(reservoir_residual(0.0, 0.0, v), 0.0);
        assert!(reservoir_mass_ok(4.96e8 / 9.1e6, 9.1e6, 3.5e8, 6.2e8));
    }

    #[test]
    fn nodal_balance_cases() {
        let a = 0.28;
        let j = JunctionFlows {
            receipts: vec![150.0],
            pipes_out: vec![(150.0 / a, a)],
            ..Default::default()
        };
        assert_relative_eq!(nodal_balance_residual(&j), 0.0, epsilon = 1e-12);
        // injecting into storage draws gas from the junction
        let j = JunctionFlows { receipts: vec![10.0], storages: vec![10.0], ..Default::default() };
        assert_eq!(nodal_balance_residual(&j), 0.0);
    }

    #[test]
    fn objective_weights() {
        let t = combine_objective(100.0, 7.0, 1.0).unwrap();
        assert_eq!(t.total, -100.0);
        assert_eq!(combine_objective(100.0, 7.0, 0.0).unwrap().total, 7.0);
        assert!(combine_objective(1.0, 1.0, 1.5).is_err());
        // 10 kg/s at 5 $ per (kg/s)·h for 24 h
        let t = objective_terms(&[vec![(5.0, 10.0); 24]], &[], 1.0, 1.0).unwrap();
        assert_relative_eq!(t.profit, 10.0 * 5.0 * 24.0, max_relative = 1e-15);
    }

    #[test]
    fn signed_square_derivatives() {
        for &x in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
            for eps in [None, Some(1e-3)] {
                let h = 1e-6;
                let (_, d1, d2) = signed_square(x, eps);
                let fd1 = (signed_square(x + h, eps).0 - signed_square(x - h, eps).0) / (2.0 * h);
                assert_relative_eq!(d1, fd1, epsilon = 1e-6, max_relative = 1e-6);
                if x != 0.0 {
                    let fd2 = (signed_square(x + h, eps).1 - signed_square(x - h, eps).1) / (2.0 * h);
                    assert_relative_eq!(d2, fd2, epsilon = 1e-5, max_relative = 1e-5);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn small_beta_limit(b in -1e-8f64..1e-8, ri in 0.5f64..2.0, rj in 0.5f64..2.0, phi in -3.0f64..3.0) {
            let inclined = pipe_momentum_residual(ri, rj, phi, 2.0, b);
            let flat = pipe_momentum_residual(ri, rj, phi, 2.0, 0.0);
            prop_assert!((inclined - flat).abs() <= 1e-7 * flat.abs().max(ri * ri));
        }

        #[test]
        fn gravity_factor_is_continuous(b in -2e-4f64..2e-4) {
            let series = gravity_factor(b);
            let direct = if b == 0.0 { 1.0 } else { b.exp_m1() / b };
            prop_assert!((series - direct).abs() <= 1e-12);
        }

        #[test]
        fn flipping_orientation_is_equivalent(ri in 0.5f64..2.0, phi in -3.0f64..3.0, r in 0.1f64..10.0) {
            if let Some(rj) = momentum_outlet_density(ri, phi, r, 0.0) {
                // the reversed pipe carries the negated flux from j to i
                prop_assert!(pipe_momentum_residual(rj, ri, -phi, r, 0.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn work_is_monotone(alpha in 1.0f64..3.0) {
            let gas = GasProperties::default();
            let w = compressor_work(alpha, &gas).unwrap();
            prop_assert!(w >= 0.0);
            let h = 1e-6;
            let fd = (compressor_work(alpha + h, &gas).unwrap() - compressor_work(alpha - h, &gas).unwrap()) / (2.0 * h);
            let d = compressor_work_derivative(alpha, &gas).unwrap();
            prop_assert!(d > 0.0);
            prop_assert!((fd - d).abs() <= 1e-6 * d);
        }
    }
}
