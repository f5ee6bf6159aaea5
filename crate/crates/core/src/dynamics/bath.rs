//! Ohmic bath spectral density and the golden-rule relaxation rate from the
//! first excited state to the ground state, with the dominant system-bath
//! coupling in the sigma^z direction.

use super::{DynamicsError, K4Model, SCHEDULE_UNIT_RAD_PER_US};

/// 17 mK in GHz-equivalent schedule units (k_B T / h).
pub const BATH_TEMPERATURE_17MK: f64 = 0.3542;

/// Rates below this floor are reported as an infinite relaxation time.
const RATE_FLOOR_PER_US: f64 = 1e-30;

/// Ohmic bath with exponential cutoff; all parameters in schedule energy
/// units.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct OhmicBath {
    pub eta: f64,
    pub omega_c: f64,
    pub temperature: f64,
}

impl OhmicBath {
    /// Documented stand-in parameters: eta = 0.08, cutoff at 8 B(1), bath at
    /// roughly 17 mK.
    pub fn default_for_peak(b_max: f64) -> OhmicBath {
        OhmicBath { eta: 0.08, omega_c: 8.0 * b_max, temperature: BATH_TEMPERATURE_17MK }
    }

    /// One-sided spectral density
    /// S(w) = 2 pi eta w exp(-|w|/w_c) / (1 - exp(-w/T)), finite at w = 0.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        if (omega / self.temperature).abs() < 1e-8 {
            return two_pi * self.eta * self.temperature;
        }
        two_pi * self.eta * omega * (-omega.abs() / self.omega_c).exp()
            / (1.0 - (-omega / self.temperature).exp())
    }
}

/// Golden-rule decay rate in 1/us given the summed squared matrix element
/// `me2 = sum_c |<psi0| 2 S^z_c |psi1>|^2` and the excitation energy in
/// schedule units.
pub fn relaxation_rate_per_us(me2: f64, omega10: f64, bath: &OhmicBath) -> f64 {
    me2 * bath.spectral_density(omega10) * SCHEDULE_UNIT_RAD_PER_US
}

/// Relaxation time 1 / Gamma in microseconds for the lowest two eigenstates
/// of a model; infinite when the matrix element vanishes.
pub fn relaxation_time_us(
    model: &K4Model,
    psi0: &[f64],
    psi1: &[f64],
    omega10: f64,
    bath: &OhmicBath,
) -> Result<f64, DynamicsError> {
    if omega10 <= 0.0 {
        return Err(DynamicsError::NonPositiveGap(omega10));
    }
    let me2: f64 = model.sz_matrix_elements(psi0, psi1).iter().map(|m| m * m).sum();
    let rate = relaxation_rate_per_us(me2, omega10, bath);
    if rate < RATE_FLOOR_PER_US {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / rate)
    }
}
