//! Stationary three-level Raman susceptibility, its Doppler average, and the
//! density-matrix steady-state oracle.
//!
//! All frequencies are in units of γ, so γ = 1 inside every formula here.
//! The sign convention is χ = (N|d|²/ħγ)·ρ₁₂/g: Im χ > 0 is absorption and the
//! medium step multiplies the probe by exp(2iπk⟨χ⟩Δz).

mod doppler;
mod faddeeva;
mod oracle;
mod table;

pub use doppler::{
    build_velocity_quadrature, chi_doppler_adaptive, chi_doppler_averaged, chi_doppler_exact, AveragingMethod,
    DopplerModel, VelocityQuadrature,
};
pub use faddeeva::faddeeva;
pub use oracle::{
    oracle_sweep, random_draw, steady_state, steady_state_oracle, DensityMatrix, OracleComparison, OracleOptions,
    SteadyState,
};
pub use table::{build_chi_table, ChiTable, TableOptions};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// Below this |𝒟| the closed form is treated as degenerate.
pub const DENOMINATOR_FLOOR: f64 = 1e-30;

/// Local field strengths, |g|² and |G|² in units of γ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub probe_abs2: f64,
    pub control_abs2: f64,
}

impl FieldPoint {
    pub fn new(probe_abs2: f64, control_abs2: f64) -> Self {
        debug_assert!(probe_abs2 >= 0.0 && control_abs2 >= 0.0);
        Self {
            probe_abs2,
            control_abs2,
        }
    }

    /// From Rabi amplitudes |g| and |G|.
    pub fn from_amplitudes(probe: f64, control: f64) -> Self {
        Self::new(probe * probe, control * control)
    }
}

/// Detunings and ground-state decay entering the single-atom response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanLine {
    pub delta_p: f64,
    pub delta_c: f64,
    pub big_gamma: f64,
}

impl RamanLine {
    pub fn new(delta_p: f64, delta_c: f64, big_gamma: f64) -> Self {
        Self {
            delta_p,
            delta_c,
            big_gamma,
        }
    }

    pub fn from_params(params: &PhysicalParams) -> Self {
        Self::new(params.delta_p, params.delta_c(), params.big_gamma)
    }

    pub fn delta_r(&self) -> f64 {
        self.delta_p - self.delta_c
    }

    /// Both one-photon detunings shifted by kv; δ_R is unchanged.
    pub fn shifted(&self, kv: f64) -> Self {
        Self::new(self.delta_p - kv, self.delta_c - kv, self.big_gamma)
    }
}

/// Numerator 𝒩 of the stationary susceptibility (γ = 1).
pub fn numerator(point: FieldPoint, line: &RamanLine) -> Complex64 {
    let g2 = point.probe_abs2;
    let cg2 = point.control_abs2;
    let gam = line.big_gamma;
    let dr = line.delta_r();
    let i = Complex64::i();
    let raman = i * gam - dr;
    let first = raman * (cg2 + (1.0 - i * line.delta_p) * (gam - i * dr));
    let second = g2 * (raman + gam * (line.delta_c + line.delta_p));
    cg2 * (first + second)
}

/// Denominator 𝒟 of the stationary susceptibility (γ = 1); real and positive
/// for physical inputs.
///
/// The |G|⁴ cross term is `2|G|²(Γ − δ_R Δp)`. That sign is what the
/// steady state of the density-matrix equations requires; `steady_state_oracle`
/// checks it.
pub fn denominator(point: FieldPoint, line: &RamanLine) -> f64 {
    let g2 = point.probe_abs2;
    let cg2 = point.control_abs2;
    let gam = line.big_gamma;
    let dr = line.delta_r();
    let dp = line.delta_p;
    let dc = line.delta_c;
    let s = gam * gam + dr * dr;
    let g4 = g2 * g2;
    let cg4 = cg2 * cg2;

    g4 * g2
        + g4 * (3.0 * cg2 * (1.0 + 2.0 * gam) + 2.0 * (gam + dr * dc))
        + cg2 * (s * (1.0 + dp * dp) + 2.0 * cg2 * (gam - dr * dp) + cg4)
        + g2 * (3.0 * cg4 * (1.0 + 2.0 * gam)
            + (1.0 + dc * dc) * s
            + (4.0 * gam + 6.0 * gam * gam + 4.0 * dr * dr + gam * (dc + dp).powi(2)) * cg2)
}

/// Stationary susceptibility χ = prefactor · 𝒩/𝒟, all orders in both fields.
pub fn chi_stationary(point: FieldPoint, line: &RamanLine, prefactor_over_gamma: f64) -> Result<Complex64> {
    let num = numerator(point, line);
    // The overall |G|² factor makes χ vanish identically without control.
    if num == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let den = denominator(point, line);
    if !(den.abs() >= DENOMINATOR_FLOOR) {
        return Err(Error::Domain(format!(
            "|D| = {den:e} at |g|^2 = {}, |G|^2 = {}, delta_p = {}, delta_R = {}, Gamma = {}",
            point.probe_abs2,
            point.control_abs2,
            line.delta_p,
            line.delta_r(),
            line.big_gamma
        )));
    }
    Ok(num * (prefactor_over_gamma / den))
}
