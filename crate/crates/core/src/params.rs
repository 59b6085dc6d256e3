//! Physical and numerical parameters.
//!
//! Frequencies other than `gamma` are stored in units of the excited-state
//! decay rate γ; lengths are in cm (Gaussian-CGS throughout, so the medium
//! index is `n = 1 + 2πχ`).

use std::f64::consts::PI;

use crate::error::{Error, Result, Violation};

/// Rb D1 line, 794.98 nm.
pub const DEFAULT_WAVELENGTH_CM: f64 = 794.98e-7;
/// Doppler width used for the susceptibility maps and propagation runs.
pub const DEFAULT_DOPPLER_WIDTH: f64 = 70.0;

const BOLTZMANN_J_PER_K: f64 = 1.380_649e-23;
const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Spontaneous decay rate on each arm, rad/s.
    pub gamma: f64,
    /// Ground-state coherence decay Γ / γ.
    pub big_gamma: f64,
    /// Probe detuning Δp / γ.
    pub delta_p: f64,
    /// Raman detuning δ_R = Δp − Δc, in units of γ.
    pub delta_r: f64,
    /// Doppler width D / γ.
    pub doppler_width: f64,
    /// Number density, atoms/cm³.
    pub density: f64,
    /// Wavelength, cm.
    pub wavelength: f64,
}

impl PhysicalParams {
    /// Control detuning Δc / γ.
    pub fn delta_c(&self) -> f64 {
        self.delta_p - self.delta_r
    }

    /// k = 2π/λ in 1/cm.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn to_rad_s(&self, value_over_gamma: f64) -> f64 {
        value_over_gamma * self.gamma
    }

    pub fn from_rad_s(&self, rad_s: f64) -> f64 {
        rad_s / self.gamma
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let finite = [
            ("gamma", self.gamma),
            ("big_gamma", self.big_gamma),
            ("delta_p", self.delta_p),
            ("delta_R", self.delta_r),
            ("doppler_width", self.doppler_width),
            ("density", self.density),
            ("wavelength", self.wavelength),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                out.push(Violation::new(name, format!("{name} must be finite")));
            }
        }
        if !(self.gamma > 0.0) {
            out.push(Violation::new("gamma", "gamma must be positive"));
        }
        if !(self.big_gamma >= 0.0) {
            out.push(Violation::new("big_gamma", "big_gamma must be >= 0"));
        }
        if !(self.doppler_width >= 0.0) {
            out.push(Violation::new("doppler_width", "doppler_width must be >= 0"));
        }
        if !(self.density > 0.0) {
            out.push(Violation::new("density", "density must be positive"));
        }
        if !(self.wavelength > 0.0) {
            out.push(Violation::new("wavelength", "wavelength must be positive"));
        }
        out
    }
}

/// N|d|²/ħ in rad/s, with |d|² from the Weisskopf–Wigner rate of one arm:
/// d² = 3ħγλ³/(32π³), hence N|d|²/ħ = 3Nλ³γ/(32π³).
pub fn dipole_prefactor(params: &PhysicalParams) -> f64 {
    3.0 * params.density * params.wavelength.powi(3) * params.gamma / (32.0 * PI.powi(3))
}

/// Dimensionless susceptibility scale N|d|²/(ħγ).
pub fn prefactor_over_gamma(params: &PhysicalParams) -> f64 {
    dipole_prefactor(params) / params.gamma
}

/// D = sqrt(k_B T ω² / (M c²)) in rad/s, for temperature in K, atomic mass in kg
/// and optical angular frequency ω in rad/s.
pub fn doppler_width_from_temperature(temperature_k: f64, mass_kg: f64, omega_rad_s: f64) -> f64 {
    (BOLTZMANN_J_PER_K * temperature_k * omega_rad_s * omega_rad_s
        / (mass_kg * SPEED_OF_LIGHT_M_S * SPEED_OF_LIGHT_M_S))
        .sqrt()
}

/// Transverse grid and longitudinal stepping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Full width of the square transverse domain, cm.
    pub extent: f64,
    /// Longitudinal step, cm.
    pub dz: f64,
    /// Cell length L, cm.
    pub cell_length: f64,
}

impl GridSpec {
    pub fn dx(&self) -> f64 {
        self.extent / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.extent / self.ny as f64
    }

    pub fn n_steps(&self) -> usize {
        (self.cell_length / self.dz).round() as usize
    }

    /// Number of samples across a feature of the given full width along the coarser axis.
    pub fn samples_across(&self, feature_width: f64) -> f64 {
        feature_width / self.dx().max(self.dy())
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, n) in [("nx", self.nx), ("ny", self.ny)] {
            if n < 2 || !n.is_power_of_two() {
                out.push(Violation::new(
                    name,
                    format!("{name} must be a power of two >= 2 (got {n})"),
                ));
            }
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            out.push(Violation::new("extent", "extent must be positive"));
        }
        if !(self.dz > 0.0 && self.dz.is_finite()) {
            out.push(Violation::new("dz", "dz must be positive"));
        }
        if !(self.cell_length > 0.0 && self.cell_length.is_finite()) {
            out.push(Violation::new("cell_length", "cell_length must be positive"));
        } else if self.dz > 0.0 && self.n_steps() == 0 {
            out.push(Violation::new("dz", "dz must not exceed cell_length"));
        }
        out
    }

    /// Checks that a feature of full width `feature_width` gets at least `min_samples` samples.
    pub fn check_resolution(&self, feature_width: f64, min_samples: f64) -> Option<Violation> {
        let samples = self.samples_across(feature_width);
        (samples < min_samples).then(|| {
            Violation::new(
                "extent",
                format!(
                    "grid spacing {:.3e} cm gives {samples:.1} samples across the narrowest probe feature ({feature_width:.3e} cm); at least {min_samples} required",
                    self.dx().max(self.dy())
                ),
            )
        })
    }
}

/// Returns the configuration unchanged if every invariant holds, else all violations.
pub fn validate(params: PhysicalParams, grid: GridSpec) -> Result<(PhysicalParams, GridSpec)> {
    let mut violations = params.violations();
    violations.extend(grid.violations());
    if violations.is_empty() {
        Ok((params, grid))
    } else {
        Err(Error::Invalid(violations))
    }
}
