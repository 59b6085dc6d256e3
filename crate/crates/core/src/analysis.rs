//! Observables extracted from probe fields.

use std::f64::consts::PI;

use crate::beams::{control_intensity, ControlBeamSpec};
use crate::error::{Error, Result};
use crate::solver::ComplexField2D;
use crate::susceptibility::{DopplerModel, FieldPoint};

/// Relative threshold below which row maxima are not reported as peaks.
pub const PEAK_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRecord {
    pub z: f64,
    pub width: f64,
    pub total_power: f64,
    pub peak_positions: Vec<f64>,
}

impl DiagnosticRecord {
    pub fn measure(field: &ComplexField2D) -> Result<Self> {
        Ok(Self {
            z: field.z,
            width: beam_width(field)?,
            total_power: field.power(),
            peak_positions: peak_positions(field, 0.0),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunDiagnostics {
    pub input_power: f64,
    pub records: Vec<DiagnosticRecord>,
}

impl RunDiagnostics {
    pub fn new(input_power: f64) -> Self {
        Self {
            input_power,
            records: Vec::new(),
        }
    }

    /// Appends a record; z must increase.
    pub fn push(&mut self, record: DiagnosticRecord) {
        if let Some(last) = self.records.last() {
            assert!(
                record.z > last.z,
                "diagnostic z must increase ({} after {})",
                record.z,
                last.z
            );
        }
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&DiagnosticRecord> {
        self.records.last()
    }
}

fn intensity_moments(field: &ComplexField2D) -> Result<(f64, f64, f64)> {
    let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..field.nx {
        let x = field.x(i);
        for j in 0..field.ny {
            let w = field.at(i, j).norm_sqr();
            s += w;
            sx += w * x;
            sy += w * field.y(j);
        }
    }
    if !(s > 0.0) {
        return Err(Error::ZeroPower);
    }
    Ok((s, sx / s, sy / s))
}

/// √(2⟨r²⟩) about the intensity centroid; equals w for g⁰·exp(−r²/w²).
pub fn beam_width(field: &ComplexField2D) -> Result<f64> {
    let (s, cx, cy) = intensity_moments(field)?;
    let mut m2 = 0.0;
    for i in 0..field.nx {
        let dx = field.x(i) - cx;
        for j in 0..field.ny {
            let dy = field.y(j) - cy;
            m2 += field.at(i, j).norm_sqr() * (dx * dx + dy * dy);
        }
    }
    Ok((2.0 * m2 / s).sqrt())
}

/// Width from a least-squares fit of ln I = a − 2r²/w² over samples above
/// 1/e² of the peak, about the centroid.
pub fn beam_width_radial_fit(field: &ComplexField2D) -> Result<f64> {
    let (_, cx, cy) = intensity_moments(field)?;
    let peak = field.max_intensity();
    let floor = peak * (-2f64).exp();
    let (mut n, mut su, mut sv, mut suu, mut suv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..field.nx {
        let dx = field.x(i) - cx;
        for j in 0..field.ny {
            let v = field.at(i, j).norm_sqr();
            if v >= floor {
                let dy = field.y(j) - cy;
                let u = dx * dx + dy * dy;
                let l = v.ln();
                n += 1.0;
                su += u;
                sv += l;
                suu += u * u;
                suv += u * l;
            }
        }
    }
    let slope = (n * suv - su * sv) / (n * suu - su * su);
    if !(slope < 0.0) {
        return Err(Error::Domain("radial fit needs a decaying profile".into()));
    }
    Ok((-2.0 / slope).sqrt())
}

/// Σ|g_out|² / Σ|g_in|².
pub fn transmission(input: &ComplexField2D, output: &ComplexField2D) -> Result<f64> {
    assert!(input.same_grid(output), "fields live on different grids");
    let p_in: f64 = input.values.iter().map(|v| v.norm_sqr()).sum();
    if !(p_in > 0.0) {
        return Err(Error::ZeroPower);
    }
    let p_out: f64 = output.values.iter().map(|v| v.norm_sqr()).sum();
    Ok(p_out / p_in)
}

/// x-positions of local intensity maxima along the row nearest y = `axis_y`,
/// refined by a 3-point parabola; maxima under 5% of the row maximum are dropped.
pub fn peak_positions(field: &ComplexField2D, axis_y: f64) -> Vec<f64> {
    let j = ((axis_y / field.dy()).round() as i64 + (field.ny / 2) as i64).clamp(0, field.ny as i64 - 1) as usize;
    let row: Vec<f64> = (0..field.nx).map(|i| field.at(i, j).norm_sqr()).collect();
    let top = row.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Vec::new();
    }
    let dx = field.dx();
    let mut out = Vec::new();
    for i in 1..field.nx - 1 {
        let (a, b, c) = (row[i - 1], row[i], row[i + 1]);
        if b > a && b >= c && b >= PEAK_THRESHOLD * top {
            let curvature = a - 2.0 * b + c;
            let offset = if curvature < 0.0 {
                0.5 * (a - c) / curvature
            } else {
                0.0
            };
            out.push(field.x(i) + offset * dx);
        }
    }
    out
}

/// (r, ⟨χ⟩(r)) along a radius at plane z with a uniform probe |g| = `probe_level`.
pub fn radial_chi_profile(
    model: &DopplerModel,
    control: &ControlBeamSpec,
    z: f64,
    probe_level: f64,
    r_max: f64,
    samples: usize,
) -> Result<Vec<(f64, num_complex::Complex64)>> {
    (0..samples)
        .map(|n| {
            let r = r_max * n as f64 / (samples - 1) as f64;
            let point = FieldPoint::new(probe_level * probe_level, control_intensity(control, r, 0.0, z));
            Ok((r, model.chi(point)?))
        })
        .collect()
}

/// Samples used by `index_contrast` over r ∈ [0, 3w(z)].
pub const INDEX_CONTRAST_SAMPLES: usize = 601;

/// Δn = 2π·(max − min) of Re⟨χ⟩ over r ∈ [0, 3w(z)].
pub fn index_contrast(model: &DopplerModel, control: &ControlBeamSpec, z: f64, probe_level: f64) -> Result<f64> {
    let profile = radial_chi_profile(
        model,
        control,
        z,
        probe_level,
        3.0 * control.width_at(z),
        INDEX_CONTRAST_SAMPLES,
    )?;
    let (lo, hi) = profile
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, c)| {
            (lo.min(c.re), hi.max(c.re))
        });
    Ok(2.0 * PI * (hi - lo))
}
