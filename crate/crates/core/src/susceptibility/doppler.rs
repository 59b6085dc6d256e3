//! Maxwellian velocity averaging of the stationary susceptibility.
//!
//! Two routes are provided. `chi_doppler_averaged` sums χ over a
//! `VelocityQuadrature` (Gauss–Hermite). `chi_doppler_exact` uses the fact that
//! χ(kv) is a linear-over-quadratic rational function of kv: after a partial
//! fraction split each term averages to a Faddeeva function. The exact route is
//! the default because the velocity integrand carries light-shifted Raman
//! resonances a few γ wide, which Gauss–Hermite rules resolve only with very
//! many nodes.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::faddeeva::faddeeva;
use super::{chi_stationary, FieldPoint, RamanLine};
use crate::error::{Error, Result};
use crate::params::{prefactor_over_gamma, PhysicalParams};

/// Nodes kv (units of γ) and probability weights for ∫P(kv) f(kv) d(kv).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl VelocityQuadrature {
    /// Single node at rest; used when the Doppler width vanishes.
    pub fn at_rest() -> Self {
        Self {
            nodes: vec![0.0],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ wᵢ f(kvᵢ), summed in node order.
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, mut f: F) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(Complex64::new(0.0, 0.0), |acc, (&kv, &w)| acc + w * f(kv))
    }
}

/// Gauss–Hermite rule mapped by kv = √2·D·t onto the Maxwellian of width D.
///
/// Nodes and weights come from the symmetric Jacobi matrix of the Hermite
/// recurrence (Golub–Welsch); only the first eigenvector components are tracked.
pub fn build_velocity_quadrature(doppler_width: f64, n_nodes: usize) -> VelocityQuadrature {
    assert!(
        n_nodes >= 2 && n_nodes.is_multiple_of(2),
        "n_nodes must be even and >= 2, got {n_nodes}"
    );
    if doppler_width == 0.0 {
        return VelocityQuadrature::at_rest();
    }
    let n = n_nodes;
    let mut diag = vec![0.0; n];
    let mut off: Vec<f64> = (0..n)
        .map(|i| if i + 1 < n { ((i + 1) as f64 / 2.0).sqrt() } else { 0.0 })
        .collect();
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    let converged = tridiagonal_ql(&mut diag, &mut off, &mut first);
    assert!(converged, "Gauss-Hermite eigen-solve did not converge for n = {n}");

    let mut pairs: Vec<(f64, f64)> = diag.into_iter().zip(first.into_iter().map(|v| v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Enforce exact mirror symmetry of the rule.
    let scale = 2f64.sqrt() * doppler_width;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let t = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[j].1 + pairs[i].1);
        nodes[i] = -t * scale;
        nodes[j] = t * scale;
        weights[i] = w;
        weights[j] = w;
    }
    VelocityQuadrature { nodes, weights }
}

/// Implicit QL iteration for a symmetric tridiagonal matrix (`off[i]` couples
/// rows i and i+1, `off[n-1]` is ignored). On return `diag` holds the
/// eigenvalues and `first` the first components of the eigenvectors.
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], first: &mut [f64]) -> bool {
    let n = diag.len();
    if n == 0 {
        return true;
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return false;
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let mut f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                f = first[i + 1];
                first[i + 1] = s * first[i] + c * f;
                first[i] = c * first[i] - s * f;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    true
}

/// Σᵢ wᵢ χ(Δp − kvᵢ, Δc − kvᵢ); δ_R is the same for every velocity class.
pub fn chi_doppler_averaged(
    point: FieldPoint,
    params: &PhysicalParams,
    quad: &VelocityQuadrature,
) -> Result<Complex64> {
    let line = RamanLine::from_params(params);
    let pref = prefactor_over_gamma(params);
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (&kv, &w)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
        let chi = chi_stationary(point, &line.shifted(kv), pref).map_err(|e| match e {
            Error::Domain(msg) => Error::Domain(format!("velocity node {i} (kv = {kv}): {msg}")),
            other => other,
        })?;
        acc += w * chi;
    }
    Ok(acc)
}

/// Gauss–Hermite average with node doubling from `start_nodes` until two
/// successive results agree to `tolerance` (relative). Returns the value and
/// the node count used.
pub fn chi_doppler_adaptive(
    point: FieldPoint,
    params: &PhysicalParams,
    start_nodes: usize,
    tolerance: f64,
    max_nodes: usize,
) -> Result<(Complex64, usize)> {
    if params.doppler_width == 0.0 {
        let quad = VelocityQuadrature::at_rest();
        return Ok((chi_doppler_averaged(point, params, &quad)?, 1));
    }
    let mut n = start_nodes;
    let mut previous = chi_doppler_averaged(point, params, &build_velocity_quadrature(params.doppler_width, n))?;
    while n < max_nodes {
        n *= 2;
        let next = chi_doppler_averaged(point, params, &build_velocity_quadrature(params.doppler_width, n))?;
        let scale = next.norm();
        if scale == 0.0 || (next - previous).norm() <= tolerance * scale {
            return Ok((next, n));
        }
        previous = next;
    }
    Err(Error::NonConvergence {
        steps: n,
        residual: f64::NAN,
    })
}

/// Coefficients of χ(u) = prefactor·|G|²·(a0 + a1·u)/(d2·u² + d1·u + d0) with u = Δp − kv.
#[derive(Debug, Clone, Copy)]
pub(crate) struct VelocityRational {
    pub a0: Complex64,
    pub a1: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
}

impl VelocityRational {
    pub(crate) fn new(point: FieldPoint, big_gamma: f64, delta_r: f64) -> Self {
        let g2 = point.probe_abs2;
        let cg2 = point.control_abs2;
        let gam = big_gamma;
        let dr = delta_r;
        let s = gam * gam + dr * dr;
        let g4 = g2 * g2;
        let cg4 = cg2 * cg2;
        let a0 = Complex64::new(-dr, gam) * cg2 + Complex64::new(0.0, s) + g2 * Complex64::new(-dr - gam * dr, gam);
        let a1 = s + 2.0 * gam * g2;
        let d2 = (cg2 + g2) * s + 4.0 * gam * g2 * cg2;
        let d1 = -2.0 * dr * (cg4 - g4 + g2 * s + 2.0 * gam * g2 * cg2);
        let d0 = g4 * g2
            + g4 * (3.0 * cg2 * (1.0 + 2.0 * gam) + 2.0 * gam - 2.0 * dr * dr)
            + cg2 * (s + 2.0 * cg2 * gam + cg4)
            + g2 * (3.0 * cg4 * (1.0 + 2.0 * gam)
                + s * (1.0 + dr * dr)
                + cg2 * (4.0 * gam + 6.0 * gam * gam + 4.0 * dr * dr + gam * dr * dr));
        Self { a0, a1, d0, d1, d2 }
    }
}

/// E[1/(x − q)] for x ~ N(0, σ²), Im q ≠ 0.
fn mean_inverse(q: Complex64, sigma: f64) -> Complex64 {
    let s = 2f64.sqrt() * sigma;
    let zeta = q / s;
    let i_sqrt_pi = Complex64::new(0.0, PI.sqrt());
    if zeta.im >= 0.0 {
        i_sqrt_pi * faddeeva(zeta) / s
    } else {
        (i_sqrt_pi * faddeeva(zeta.conj())).conj() / s
    }
}

/// Closed-form Maxwellian average of the stationary susceptibility.
pub fn chi_doppler_exact(point: FieldPoint, params: &PhysicalParams) -> Result<Complex64> {
    let line = RamanLine::from_params(params);
    let pref = prefactor_over_gamma(params);
    if params.doppler_width == 0.0 {
        return chi_stationary(point, &line, pref);
    }
    if point.control_abs2 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let r = VelocityRational::new(point, params.big_gamma, params.delta_r);
    if r.a0 == Complex64::new(0.0, 0.0) && r.a1 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let disc = 4.0 * r.d2 * r.d0 - r.d1 * r.d1;
    if !(r.d2 > 0.0) || !(disc > 0.0) {
        return Err(Error::Domain(format!(
            "velocity denominator has a real root (d2 = {:e}, discriminant = {disc:e}) at |g|^2 = {}, |G|^2 = {}",
            r.d2, point.probe_abs2, point.control_abs2
        )));
    }
    let upper = Complex64::new(-r.d1 / (2.0 * r.d2), disc.sqrt() / (2.0 * r.d2));
    let lower = upper.conj();
    let res_upper = (r.a0 + r.a1 * upper) / (r.d2 * (upper - lower));
    let res_lower = (r.a0 + r.a1 * lower) / (r.d2 * (lower - upper));
    // With u = Δp − x: 1/(u − p) = −1/(x − (Δp − p)).
    let dp = params.delta_p;
    let sigma = params.doppler_width;
    let avg = -res_upper * mean_inverse(dp - upper, sigma) - res_lower * mean_inverse(dp - lower, sigma);
    Ok(avg * (pref * point.control_abs2))
}

/// How the Doppler average is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum AveragingMethod {
    Exact,
    Quadrature(VelocityQuadrature),
}

/// A Doppler-averaged susceptibility model for fixed atomic parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerModel {
    pub params: PhysicalParams,
    pub method: AveragingMethod,
}

impl DopplerModel {
    pub fn exact(params: PhysicalParams) -> Self {
        Self {
            params,
            method: AveragingMethod::Exact,
        }
    }

    pub fn gauss_hermite(params: PhysicalParams, n_nodes: usize) -> Self {
        Self {
            params,
            method: AveragingMethod::Quadrature(build_velocity_quadrature(params.doppler_width, n_nodes)),
        }
    }

    pub fn chi(&self, point: FieldPoint) -> Result<Complex64> {
        match &self.method {
            AveragingMethod::Exact => chi_doppler_exact(point, &self.params),
            AveragingMethod::Quadrature(q) => chi_doppler_averaged(point, &self.params, q),
        }
    }
}
