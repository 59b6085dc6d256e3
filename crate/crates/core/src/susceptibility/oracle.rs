//! Steady state of the Λ-system density-matrix equations by time integration.
//!
//! Independent of the closed form in the parent module: the equations of motion
//! are integrated from ρ₃₃ = 1 and χ is read off ρ₁₂. Both decay arms have rate
//! γ = 1, the ground-state coherence decays at Γ, and ρ₃₃ = 1 − ρ₁₁ − ρ₂₂.
//!
//! Integration runs in two phases. An adaptive Dormand–Prince phase follows
//! the optical transients. Backward-Euler steps of growing length then carry
//! the state through the slow optical-pumping relaxation (rates down to
//! ~g²/Δp²) until the time derivative is below tolerance.

use num_complex::Complex64;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{chi_stationary, FieldPoint, RamanLine};
use crate::error::{Error, Result};

const DIM: usize = 8;
type State = [f64; DIM];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Steady state is declared when max |dρ/dt| falls below this (γ units).
    pub tolerance: f64,
    /// Duration of the explicit phase, in 1/γ.
    pub explicit_time: f64,
    /// Total step budget over both phases.
    pub max_steps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            explicit_time: 30.0,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub rho12: Complex64,
    pub rho13: Complex64,
    pub rho23: Complex64,
}

impl DensityMatrix {
    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho22 + self.rho33
    }

    fn from_state(y: &State) -> Self {
        Self {
            rho11: y[0],
            rho22: y[1],
            rho33: 1.0 - y[0] - y[1],
            rho12: Complex64::new(y[2], y[3]),
            rho13: Complex64::new(y[4], y[5]),
            rho23: Complex64::new(y[6], y[7]),
        }
    }
}

/// Outcome of a steady-state integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// max |dρ/dt| at the returned state.
    pub residual: f64,
    pub steps: usize,
    /// Largest |Tr ρ − 1| seen along the trajectory.
    pub max_trace_error: f64,
}

struct Equations {
    g: f64,
    cg: f64,
    delta_p: f64,
    delta_c: f64,
    big_gamma: f64,
}

impl Equations {
    fn rhs(&self, y: &State) -> State {
        let (g, cg) = (self.g, self.cg);
        let i = Complex64::i();
        let r11 = y[0];
        let r22 = y[1];
        let r33 = 1.0 - r11 - r22;
        let r12 = Complex64::new(y[2], y[3]);
        let r13 = Complex64::new(y[4], y[5]);
        let r23 = Complex64::new(y[6], y[7]);
        let r21 = r12.conj();
        let r32 = r23.conj();

        let d11 = -2.0 * r11 + 2.0 * g * r12.im + 2.0 * cg * r13.im;
        let d22 = r11 - 2.0 * g * r12.im;
        let d12 = -Complex64::new(1.0, self.delta_p) * r12 + i * g * r22 + i * cg * r32 - i * g * r11;
        let d13 = -Complex64::new(1.0, self.delta_c) * r13 + i * g * r23 + i * cg * r33 - i * cg * r11;
        let d23 = -Complex64::new(self.big_gamma, -(self.delta_p - self.delta_c)) * r23 + i * g * r13 - i * cg * r21;
        [d11, d22, d12.re, d12.im, d13.re, d13.im, d23.re, d23.im]
    }
}

fn max_abs(v: &State) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for j in 0..DIM {
            out[j] += h * c * k[j];
        }
    }
    out
}

fn trace_error(y: &State) -> f64 {
    (DensityMatrix::from_state(y).trace() - 1.0).abs()
}

/// Integrates the density-matrix equations to steady state.
pub fn steady_state(point: FieldPoint, line: &RamanLine, opts: &OracleOptions) -> Result<SteadyState> {
    let eq = Equations {
        g: point.probe_abs2.sqrt(),
        cg: point.control_abs2.sqrt(),
        delta_p: line.delta_p,
        delta_c: line.delta_c,
        big_gamma: line.big_gamma,
    };
    let mut y: State = [0.0; DIM];
    let mut steps = 0usize;
    let mut max_trace_error = 0.0f64;

    // Dormand–Prince 5(4).
    const A21: f64 = 1.0 / 5.0;
    const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
    const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
    const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
    const A6: [f64; 5] = [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ];
    const B: [f64; 6] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let (rtol, atol) = (1e-10, 1e-13);
    let mut t = 0.0;
    let mut h: f64 = 1e-3;
    let mut k1 = eq.rhs(&y);
    while t < opts.explicit_time {
        if steps >= opts.max_steps {
            return Err(Error::NonConvergence {
                steps,
                residual: max_abs(&eq.rhs(&y)),
            });
        }
        h = h.min(opts.explicit_time - t);
        let k2 = eq.rhs(&axpy(&y, h, &[(A21, &k1)]));
        let k3 = eq.rhs(&axpy(&y, h, &[(A3[0], &k1), (A3[1], &k2)]));
        let k4 = eq.rhs(&axpy(&y, h, &[(A4[0], &k1), (A4[1], &k2), (A4[2], &k3)]));
        let k5 = eq.rhs(&axpy(&y, h, &[(A5[0], &k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]));
        let k6 = eq.rhs(&axpy(
            &y,
            h,
            &[(A6[0], &k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)],
        ));
        let y_new = axpy(
            &y,
            h,
            &[(B[0], &k1), (B[2], &k3), (B[3], &k4), (B[4], &k5), (B[5], &k6)],
        );
        let k7 = eq.rhs(&y_new);
        let mut err = 0.0f64;
        for j in 0..DIM {
            let e = h * (E[0] * k1[j] + E[2] * k3[j] + E[3] * k4[j] + E[4] * k5[j] + E[5] * k6[j] + E[6] * k7[j]);
            let scale = atol + rtol * y[j].abs().max(y_new[j].abs());
            err = err.max((e / scale).abs());
        }
        steps += 1;
        if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
            max_trace_error = max_trace_error.max(trace_error(&y));
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }

    // Linear continuation: the equations are affine, dy/dt = M y + c.
    let c = eq.rhs(&[0.0; DIM]);
    let mut m = [[0.0; DIM]; DIM];
    for j in 0..DIM {
        let mut e = [0.0; DIM];
        e[j] = 1.0;
        let col = eq.rhs(&e);
        for i in 0..DIM {
            m[i][j] = col[i] - c[i];
        }
    }
    let mut h: f64 = 1.0;
    loop {
        let residual = max_abs(&eq.rhs(&y));
        if steps >= opts.max_steps {
            return Err(Error::NonConvergence { steps, residual });
        }
        let mut a = [[0.0; DIM]; DIM];
        let mut b = [0.0; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                a[i][j] = if i == j { 1.0 } else { 0.0 } - h * m[i][j];
            }
            b[i] = y[i] + h * c[i];
        }
        let y_new = solve(a, b).ok_or(Error::NonConvergence { steps, residual })?;
        steps += 1;
        let moved = y_new.iter().zip(&y).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        y = y_new;
        max_trace_error = max_trace_error.max(trace_error(&y));
        let residual = max_abs(&eq.rhs(&y));
        if residual < opts.tolerance && moved < opts.tolerance {
            return Ok(SteadyState {
                rho: DensityMatrix::from_state(&y),
                residual,
                steps,
                max_trace_error,
            });
        }
        h = (h * 4.0).min(1e18);
    }
}

/// χ = prefactor · ρ₁₂/g at steady state. Requires g ≠ 0.
pub fn steady_state_oracle(
    point: FieldPoint,
    line: &RamanLine,
    prefactor_over_gamma: f64,
    opts: &OracleOptions,
) -> Result<Complex64> {
    if point.probe_abs2 == 0.0 {
        return Err(Error::Domain(
            "susceptibility from rho12/g needs a nonzero probe".into(),
        ));
    }
    let ss = steady_state(point, line, opts)?;
    Ok(ss.rho.rho12 / point.probe_abs2.sqrt() * prefactor_over_gamma)
}

/// One draw of the closed-form vs oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    pub point: FieldPoint,
    pub line: RamanLine,
    pub closed_form: Complex64,
    pub oracle: Complex64,
    pub relative_error: f64,
}

/// Ranges of the seeded sweep: |g|, |G| ∈ [0.01, 2], Δp ∈ [−300, 300],
/// δ_R ∈ [−0.1, 0.1], Γ log-uniform in [1e-4, 1e-2].
pub fn random_draw<R: Rng>(rng: &mut R) -> (FieldPoint, RamanLine) {
    let g: f64 = rng.random_range(0.01..=2.0);
    let cg: f64 = rng.random_range(0.01..=2.0);
    let dp = rng.random_range(-300.0..=300.0);
    let dr = rng.random_range(-0.1..=0.1);
    let gam = 10f64.powf(rng.random_range(-4.0..=-2.0));
    (FieldPoint::from_amplitudes(g, cg), RamanLine::new(dp, dp - dr, gam))
}

/// Compares `chi_stationary` with the oracle on `draws` seeded random draws.
pub fn oracle_sweep(
    seed: u64,
    draws: usize,
    prefactor_over_gamma: f64,
    opts: &OracleOptions,
) -> Result<Vec<OracleComparison>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<_> = (0..draws).map(|_| random_draw(&mut rng)).collect();
    cases
        .into_par_iter()
        .map(|(point, line)| {
            let closed_form = chi_stationary(point, &line, prefactor_over_gamma)?;
            let oracle = steady_state_oracle(point, &line, prefactor_over_gamma, opts)?;
            Ok(OracleComparison {
                point,
                line,
                closed_form,
                oracle,
                relative_error: (oracle - closed_form).norm() / closed_form.norm(),
            })
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: [[f64; DIM]; DIM], mut b: State) -> Option<State> {
    for col in 0..DIM {
        let pivot = (col..DIM).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..DIM {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..DIM {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = [0.0; DIM];
    for row in (0..DIM).rev() {
        let mut s = b[row];
        for k in row + 1..DIM {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}
