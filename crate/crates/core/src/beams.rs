//! Analytic control and probe fields.
//!
//! The control is the l = 1, p = 0 Laguerre–Gaussian mode, evaluated in closed
//! form at every z (undepleted pump). Probes are sampled at the cell entry.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result, Violation};
use crate::params::GridSpec;
use crate::solver::ComplexField2D;

/// Default double-Gaussian centres, ±70 µm.
pub const DEFAULT_DOUBLE_OFFSET_CM: f64 = 70e-4;
pub const DEFAULT_SECH_PEAKS: usize = 3;
/// Default sech peak spacing, 120 µm.
pub const DEFAULT_SECH_SPACING_CM: f64 = 120e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlBeamSpec {
    /// Peak Rabi amplitude G⁰ / γ.
    pub g0: f64,
    /// Waist w_c, cm.
    pub waist: f64,
    /// Waist position z₀ from the cell entry, cm.
    pub waist_position: f64,
    pub wavelength: f64,
}

impl ControlBeamSpec {
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// z_R = πw_c²/λ.
    pub fn rayleigh_length(&self) -> f64 {
        PI * self.waist * self.waist / self.wavelength
    }

    /// w(z) = w_c·√(1 + ((z − z₀)/z_R)²).
    pub fn width_at(&self, z: f64) -> f64 {
        let xi = (z - self.waist_position) / self.rayleigh_length();
        self.waist * (1.0 + xi * xi).sqrt()
    }

    /// Radius of the intensity ring, w(z)/√2.
    pub fn ring_radius(&self, z: f64) -> f64 {
        self.width_at(z) / 2f64.sqrt()
    }

    /// Peak of |G|² over the plane at z, reached on the ring.
    pub fn peak_intensity(&self, z: f64) -> f64 {
        let w = self.width_at(z);
        self.g0 * self.g0 * self.waist * self.waist / (2.0 * w * w) * (-1f64).exp()
    }

    /// Peak of |G|² over the slab z ∈ [z_a, z_b].
    pub fn peak_intensity_between(&self, z_a: f64, z_b: f64) -> f64 {
        let closest = self.waist_position.clamp(z_a.min(z_b), z_a.max(z_b));
        self.peak_intensity(closest)
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.g0 >= 0.0 && self.g0.is_finite()) {
            out.push(Violation::new("control.g0", "g0 must be >= 0"));
        }
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            out.push(Violation::new("control.waist", "waist must be positive"));
        }
        if !self.waist_position.is_finite() {
            out.push(Violation::new(
                "control.waist_position",
                "waist_position must be finite",
            ));
        }
        if !(self.wavelength > 0.0) {
            out.push(Violation::new("control.wavelength", "wavelength must be positive"));
        }
        out
    }
}

/// G(x, y, z) = G⁰·(w_c r/w_z²)·exp(−ikr²/(2q) + iθ), q = i z_R − z + z₀.
pub fn control_field(spec: &ControlBeamSpec, x: f64, y: f64, z: f64) -> Complex64 {
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let r = r2.sqrt();
    let w = spec.width_at(z);
    let q = Complex64::new(spec.waist_position - z, spec.rayleigh_length());
    let theta = y.atan2(x);
    let exponent = Complex64::new(0.0, -spec.wavenumber() * r2 / 2.0) / q + Complex64::new(0.0, theta);
    spec.g0 * (spec.waist * r / (w * w)) * exponent.exp()
}

/// |G(x, y, z)|², without the phase.
pub fn control_intensity(spec: &ControlBeamSpec, x: f64, y: f64, z: f64) -> f64 {
    let r2 = x * x + y * y;
    let w2 = spec.width_at(z).powi(2);
    let a = spec.g0 * spec.waist / w2;
    a * a * r2 * (-2.0 * r2 / w2).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    Gaussian,
    DoubleGaussian,
    SechMulti,
}

impl ProbeKind {
    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Gaussian => "gaussian",
            ProbeKind::DoubleGaussian => "double_gaussian",
            ProbeKind::SechMulti => "sech_multi",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(ProbeKind::Gaussian),
            "double_gaussian" => Some(ProbeKind::DoubleGaussian),
            "sech_multi" => Some(ProbeKind::SechMulti),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    /// Peak Rabi amplitude g⁰ / γ of each component.
    pub g0: f64,
    /// w_p for Gaussians, w₁ for sech peaks, cm.
    pub width: f64,
    /// x-offsets of the components, cm.
    pub centers: Vec<f64>,
}

impl ProbeSpec {
    pub fn gaussian(g0: f64, width: f64) -> Self {
        Self {
            kind: ProbeKind::Gaussian,
            g0,
            width,
            centers: Vec::new(),
        }
    }

    pub fn double_gaussian(g0: f64, width: f64, offset: f64) -> Self {
        Self {
            kind: ProbeKind::DoubleGaussian,
            g0,
            width,
            centers: vec![-offset, offset],
        }
    }

    /// `n` equal sech peaks, evenly spaced and centred on x = 0.
    pub fn sech_multi(g0: f64, width: f64, n: usize, spacing: f64) -> Self {
        let mid = (n as f64 - 1.0) / 2.0;
        Self {
            kind: ProbeKind::SechMulti,
            g0,
            width,
            centers: (0..n).map(|i| (i as f64 - mid) * spacing).collect(),
        }
    }

    /// Narrowest feature, for the grid-resolution check.
    pub fn feature_width(&self) -> f64 {
        self.width
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.g0 >= 0.0 && self.g0.is_finite()) {
            out.push(Violation::new("probe.g0", "g0 must be >= 0"));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            out.push(Violation::new("probe.width", "width must be positive"));
        }
        let expected = match self.kind {
            ProbeKind::Gaussian => self.centers.len() <= 1,
            ProbeKind::DoubleGaussian => self.centers.len() == 2,
            ProbeKind::SechMulti => !self.centers.is_empty(),
        };
        if !expected {
            out.push(Violation::new(
                "probe.centers",
                format!("{} probe cannot have {} centers", self.kind.name(), self.centers.len()),
            ));
        }
        let mut sorted = self.centers.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            out.push(Violation::new("probe.centers", "centers must be distinct"));
        }
        out
    }
}

fn expect_kind(spec: &ProbeSpec, kind: ProbeKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::Invalid(vec![Violation::new(
            "probe.kind",
            format!("expected {} probe, got {}", kind.name(), spec.kind.name()),
        )]));
    }
    let v = spec.violations();
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(v))
    }
}

/// g⁰·exp(−r²/w_p²), centred on the optional single centre (else the origin).
pub fn gaussian_probe(spec: &ProbeSpec, grid: &GridSpec) -> Result<ComplexField2D> {
    expect_kind(spec, ProbeKind::Gaussian)?;
    let x0 = spec.centers.first().copied().unwrap_or(0.0);
    let w2 = spec.width * spec.width;
    Ok(ComplexField2D::from_fn(grid, |x, y| {
        let r2 = (x - x0) * (x - x0) + y * y;
        Complex64::new(spec.g0 * (-r2 / w2).exp(), 0.0)
    }))
}

/// Sum of two Gaussians of width w_p at (x₁, 0) and (x₂, 0).
pub fn double_gaussian_probe(spec: &ProbeSpec, grid: &GridSpec) -> Result<ComplexField2D> {
    expect_kind(spec, ProbeKind::DoubleGaussian)?;
    let w2 = spec.width * spec.width;
    Ok(ComplexField2D::from_fn(grid, |x, y| {
        let v: f64 = spec
            .centers
            .iter()
            .map(|&c| (-((x - c) * (x - c) + y * y) / w2).exp())
            .sum();
        Complex64::new(spec.g0 * v, 0.0)
    }))
}

/// g⁰·Σᵢ sech(√((x − xᵢ)² + y²)/w₁).
pub fn sech_multipeak_probe(spec: &ProbeSpec, grid: &GridSpec) -> Result<ComplexField2D> {
    expect_kind(spec, ProbeKind::SechMulti)?;
    Ok(ComplexField2D::from_fn(grid, |x, y| {
        let v: f64 = spec
            .centers
            .iter()
            .map(|&c| 1.0 / (((x - c) * (x - c) + y * y).sqrt() / spec.width).cosh())
            .sum();
        Complex64::new(spec.g0 * v, 0.0)
    }))
}

pub fn probe_field(spec: &ProbeSpec, grid: &GridSpec) -> Result<ComplexField2D> {
    match spec.kind {
        ProbeKind::Gaussian => gaussian_probe(spec, grid),
        ProbeKind::DoubleGaussian => double_gaussian_probe(spec, grid),
        ProbeKind::SechMulti => sech_multipeak_probe(spec, grid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DEFAULT_WAVELENGTH_CM;
    use proptest::prelude::*;

    fn lg() -> ControlBeamSpec {
        ControlBeamSpec {
            g0: 1.0,
            waist: 120e-4,
            waist_position: 5.0,
            wavelength: DEFAULT_WAVELENGTH_CM,
        }
    }

    fn grid() -> GridSpec {
        GridSpec {
            nx: 256,
            ny: 256,
            extent: 0.24,
            dz: 0.005,
            cell_length: 5.0,
        }
    }

    #[test]
    fn vortex_core_is_dark() {
        for z in [0.0, 2.5, 5.0, 9.0] {
            assert_eq!(control_field(&lg(), 0.0, 0.0, z), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rayleigh_length_for_120_um_waist() {
        let zr = lg().rayleigh_length();
        assert!((zr - 5.7).abs() < 0.01, "{zr}");
    }

    #[test]
    fn entry_ring_radius() {
        let c = lg();
        let w = c.width_at(0.0);
        assert!((w - 159.7e-4).abs() < 0.2e-4, "{w}");
        let r = c.ring_radius(0.0);
        assert!(r > 112e-4 && r < 115e-4, "{r}");
        // brute-force maximum of the sampled intensity along x
        let (mut best, mut arg) = (0.0, 0.0);
        for k in 0..20000 {
            let x = k as f64 * 1e-6;
            let i = control_intensity(&c, x, 0.0, 0.0);
            if i > best {
                best = i;
                arg = x;
            }
        }
        assert!((arg - r).abs() < 1.5e-6);
        assert!((best - c.peak_intensity(0.0)).abs() < 1e-9);
    }

    #[test]
    fn waist_plane_reduces_to_simple_mode() {
        let c = lg();
        for &(x, y) in &[(30e-4, 10e-4), (-80e-4, 50e-4), (1e-4, -200e-4)] {
            let r = f64::hypot(x, y);
            let expected = Complex64::from_polar(
                c.g0 * r / c.waist * (-(r * r) / (c.waist * c.waist)).exp(),
                f64::atan2(y, x),
            );
            let got = control_field(&c, x, y, c.waist_position);
            assert!((got - expected).norm() < 1e-14, "{got} vs {expected}");
        }
    }

    #[test]
    fn ring_grows_from_waist_to_entry() {
        let c = lg();
        let ratio = c.ring_radius(0.0) / c.ring_radius(5.0);
        assert!((ratio - c.width_at(0.0) / c.waist).abs() < 1e-12);
    }

    #[test]
    fn intensity_matches_field_modulus() {
        let c = lg();
        for &(x, y, z) in &[(0.01, 0.003, 0.0), (-0.02, 0.0, 1.7), (0.0, 0.012, 4.9)] {
            let a = control_field(&c, x, y, z).norm_sqr();
            let b = control_intensity(&c, x, y, z);
            assert!((a - b).abs() <= 1e-13 * b.max(1e-300));
        }
    }

    #[test]
    fn gaussian_probe_values() {
        let spec = ProbeSpec::gaussian(0.2, 48e-4);
        let f = gaussian_probe(&spec, &grid()).unwrap();
        let c = 128;
        assert_eq!(f.at(c, c), Complex64::new(0.2, 0.0));
        let g = GridSpec {
            extent: 48e-4 * 256.0 / 8.0,
            ..grid()
        };
        let f = gaussian_probe(&spec, &g).unwrap();
        // x = 8·dx = w_p
        assert!((f.at(c + 8, c).re - 0.2 / std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn probe_rayleigh_length() {
        let zr = PI * 48e-4f64.powi(2) / DEFAULT_WAVELENGTH_CM;
        assert!((zr - 0.91).abs() < 0.005, "{zr}");
    }

    #[test]
    fn double_gaussian_is_mirror_symmetric() {
        let spec = ProbeSpec::double_gaussian(0.2, 48e-4, DEFAULT_DOUBLE_OFFSET_CM);
        let f = double_gaussian_probe(&spec, &grid()).unwrap();
        for i in 1..256 {
            for j in [0, 100, 128, 200] {
                assert_eq!(f.at(i, j), f.at(256 - i, j));
            }
        }
    }

    #[test]
    fn coincident_gaussians_double_the_amplitude() {
        let spec = ProbeSpec {
            kind: ProbeKind::DoubleGaussian,
            g0: 0.2,
            width: 48e-4,
            centers: vec![-1e-12, 1e-12],
        };
        let f = double_gaussian_probe(&spec, &grid()).unwrap();
        assert!((f.at(128, 128).re - 0.4).abs() < 1e-15);
    }

    #[test]
    fn default_double_gaussian_is_resolved() {
        let spec = ProbeSpec::double_gaussian(0.2, 48e-4, DEFAULT_DOUBLE_OFFSET_CM);
        let g = GridSpec {
            nx: 1024,
            ny: 1024,
            ..grid()
        };
        let f = double_gaussian_probe(&spec, &g).unwrap();
        let row: Vec<f64> = (0..1024).map(|i| f.at(i, 512).re).collect();
        let peak = row.iter().cloned().fold(0.0, f64::max);
        let valley = row[512];
        assert!(peak / valley > 2.0, "{peak} / {valley}");
    }

    #[test]
    fn sech_values() {
        let spec = ProbeSpec::sech_multi(0.2, 35e-4, 1, 0.0);
        let f = sech_multipeak_probe(&spec, &grid()).unwrap();
        assert_eq!(f.at(128, 128), Complex64::new(0.2, 0.0));
        let g = GridSpec {
            extent: 35e-4 * 256.0 / 8.0,
            ..grid()
        };
        let f = sech_multipeak_probe(&spec, &g).unwrap();
        assert!((f.at(136, 128).re / 0.2 - 0.648_054_273_663_885_4).abs() < 1e-14);
    }

    #[test]
    fn three_sech_peaks_are_resolved() {
        let spec = ProbeSpec::sech_multi(0.2, 35e-4, DEFAULT_SECH_PEAKS, DEFAULT_SECH_SPACING_CM);
        let f = sech_multipeak_probe(&spec, &grid()).unwrap();
        let row: Vec<f64> = (0..256).map(|i| f.at(i, 128).re).collect();
        let maxima = (1..255)
            .filter(|&i| row[i] > row[i - 1] && row[i] >= row[i + 1])
            .count();
        assert_eq!(maxima, 3);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let spec = ProbeSpec::gaussian(0.2, 48e-4);
        assert!(double_gaussian_probe(&spec, &grid()).is_err());
        let bad = ProbeSpec {
            centers: vec![1e-3, 1e-3],
            ..ProbeSpec::double_gaussian(0.2, 48e-4, 1e-3)
        };
        assert!(!bad.violations().is_empty());
    }

    proptest! {
        #[test]
        fn control_magnitude_is_rotation_invariant(r in 0.0f64..0.05, a in 0.0f64..std::f64::consts::TAU, b in 0.0f64..std::f64::consts::TAU, z in 0.0f64..5.0) {
            let c = lg();
            let m1 = control_field(&c, r * a.cos(), r * a.sin(), z).norm();
            let m2 = control_field(&c, r * b.cos(), r * b.sin(), z).norm();
            prop_assert!((m1 - m2).abs() <= 1e-12 * m1.max(1e-300));
        }

        #[test]
        fn control_winding_number_is_one(r in 1e-3f64..0.03, z in 0.0f64..5.0) {
            let c = lg();
            let n = 64;
            let mut total = 0.0;
            let mut prev = control_field(&c, r, 0.0, z).arg();
            for k in 1..=n {
                let t = 2.0 * PI * k as f64 / n as f64;
                let a = control_field(&c, r * t.cos(), r * t.sin(), z).arg();
                let mut d = a - prev;
                if d > PI { d -= 2.0 * PI; }
                if d < -PI { d += 2.0 * PI; }
                total += d;
                prev = a;
            }
            prop_assert!((total - 2.0 * PI).abs() < 1e-9);
        }

        #[test]
        fn probes_are_even_in_y(g0 in 0.01f64..1.0, w in 20e-4f64..60e-4, a in 10e-4f64..100e-4) {
            for spec in [ProbeSpec::gaussian(g0, w), ProbeSpec::double_gaussian(g0, w, a), ProbeSpec::sech_multi(g0, w, 3, a)] {
                let f = probe_field(&spec, &grid()).unwrap();
                for i in [0, 64, 128, 200] {
                    for j in 1..128 {
                        prop_assert_eq!(f.at(i, j), f.at(i, 256 - j));
                    }
                }
            }
        }
    }
}
