//! Concurrence, initial states and disentanglement-time bounds.

use nalgebra::{Matrix4, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::DensityMatrix4;
use crate::rates::CouplingSet;
use crate::spectral::SpectralData;

/// Largest tolerated `|Im|` of an eigenvalue of `ξ(ρ)`.
pub const XI_IMAG_TOL: f64 = 1e-8;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `σ^y ⊗ σ^y` in the basis `|++⟩, |+−⟩, |−+⟩, |−−⟩`.
fn spin_flip() -> Matrix4<Complex64> {
    let mut s = Matrix4::zeros();
    s[(0, 3)] = c(-1.0);
    s[(1, 2)] = c(1.0);
    s[(2, 1)] = c(1.0);
    s[(3, 0)] = c(-1.0);
    s
}

/// Unitary discrete Fourier matrix.
fn dft4() -> Matrix4<Complex64> {
    Matrix4::from_fn(|j, k| Complex64::from_polar(0.5, std::f64::consts::FRAC_PI_2 * (j * k) as f64))
}

/// `ξ(ρ) = ρ (σ^y⊗σ^y) ρ* (σ^y⊗σ^y)`
pub fn xi(rho: &DensityMatrix4) -> Matrix4<Complex64> {
    let s = spin_flip();
    let r = rho.matrix();
    r * s * r.map(|z| z.conj()) * s
}

/// Complex eigenvalues of `ξ(ρ)`, sorted by descending real part.
pub fn xi_spectrum(rho: &DensityMatrix4) -> Result<[Complex64; 4]> {
    let x = xi(rho);
    // Work with the traceless part at unit scale: near-thermal states give a
    // nearly scalar ξ on which the shifted QR iteration can stall. A fixed
    // unitary rotation or a looser deflation threshold are tried after that.
    let shift = x.trace() / 4.0;
    let dev = x - Matrix4::from_diagonal_element(shift);
    let scale = dev.norm();
    if scale == 0.0 || scale < 1e-300 {
        return Ok([shift; 4]);
    }
    let d = dev.unscale(scale);
    let f = dft4();
    let rotated = f * d * f.adjoint();
    let ev = [
        (d, 1e-15),
        (rotated, 1e-15),
        (rotated, 1e-13),
        (d, 1e-11),
        (rotated, 1e-10),
    ]
    .into_iter()
    .find_map(|(m, eps)| Schur::try_new(m, eps, 10_000).and_then(|s| s.eigenvalues()))
    .ok_or_else(|| Error::EigenSolver(format!("{x}")))?
    .map(|z| z * scale + shift);
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(|a, b| b.re.total_cmp(&a.re));
    Ok(out)
}

/// Real eigenvalues of `ξ(ρ)`, descending and unclamped. Fails when an
/// imaginary part exceeds [`XI_IMAG_TOL`].
pub fn xi_eigenvalues(rho: &DensityMatrix4) -> Result<[f64; 4]> {
    let ev = xi_spectrum(rho)?;
    let max_imag = ev.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if max_imag > XI_IMAG_TOL {
        return Err(Error::ApproximationArtifact { max_imag });
    }
    Ok(ev.map(|z| z.re))
}

fn wootters(ev: &[f64; 4]) -> f64 {
    let r = ev.map(|v| v.max(0.0).sqrt());
    (r[0] - r[1] - r[2] - r[3]).clamp(0.0, 1.0)
}

/// `max{0, √ν₁ − √ν₂ − √ν₃ − √ν₄}` with negative `ν_i` set to zero.
///
/// For a positive semidefinite `ρ = ΨΨ†` the `√ν_i` are the singular values
/// of `Ψᵀ(σ^y⊗σ^y)Ψ`; that route is used there because taking square roots
/// of eigenvalues at round-off level would cost half the digits. Otherwise
/// the eigenvalues of `ξ(ρ)` are clamped.
pub fn concurrence(rho: &DensityMatrix4) -> Result<f64> {
    if let Some(lambda) = sqrt_xi_psd(rho) {
        return Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).clamp(0.0, 1.0));
    }
    Ok(wootters(&xi_eigenvalues(rho)?))
}

/// Singular values of `Ψᵀ(σ^y⊗σ^y)Ψ`, descending, or `None` if `ρ` has an
/// eigenvalue below round-off.
fn sqrt_xi_psd(rho: &DensityMatrix4) -> Option<[f64; 4]> {
    let eig = rho.matrix().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&p| p < -PSD_TOL) {
        return None;
    }
    let scale = eig.eigenvalues.map(|p| c(p.max(0.0).sqrt()));
    let psi = eig.eigenvectors * Matrix4::from_diagonal(&scale);
    let y = psi.transpose() * spin_flip() * psi;
    let sv = y.singular_values();
    let mut out = [sv[0], sv[1], sv[2], sv[3]];
    out.sort_by(|a, b| b.total_cmp(a));
    Some(out)
}

const PSD_TOL: f64 = 1e-14;

/// Concurrence of a possibly slightly non-positive state, with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcurrenceReport {
    pub value: f64,
    /// Smallest real part among the eigenvalues of `ξ` before clamping.
    pub min_xi: f64,
    /// Largest `|Im|` among the eigenvalues of `ξ`.
    pub max_imag: f64,
    /// `min_xi < −10ϰ²` or `max_imag > 10ϰ²` (with a round-off floor of
    /// [`XI_IMAG_TOL`]): the clamp hides more than the `O(ϰ²)` error of the
    /// approximation.
    pub artifact: bool,
}

/// Like [`concurrence`] but never fails on complex eigenvalues: real parts
/// are used and the excursion is reported.
pub fn concurrence_report(rho: &DensityMatrix4, kappa_max: f64) -> Result<ConcurrenceReport> {
    let ev = xi_spectrum(rho)?;
    let max_imag = ev.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    let re = ev.map(|z| z.re);
    let min_xi = re.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = (10.0 * kappa_max * kappa_max).max(XI_IMAG_TOL);
    let value = match sqrt_xi_psd(rho) {
        Some(l) => (l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0),
        None => wootters(&re),
    };
    Ok(ConcurrenceReport {
        value,
        min_xi,
        max_imag,
        artifact: min_xi < -threshold || max_imag > threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// `ψ ∝ a₁|++⟩ + a₂|−−⟩`; amplitudes as `[re, im]`.
    Superposition { a1: [f64; 2], a2: [f64; 2] },
    /// Product of `(|+⟩−|−⟩)/√2` and `(|+⟩+|−⟩)/√2`.
    Braun,
    /// Full matrix given as real and imaginary parts.
    Explicit { re: [[f64; 4]; 4], im: [[f64; 4]; 4] },
}

impl InitialState {
    pub fn superposition(a1: Complex64, a2: Complex64) -> Self {
        InitialState::Superposition {
            a1: [a1.re, a1.im],
            a2: [a2.re, a2.im],
        }
    }

    /// `ψ` with `p₁(0) = p` and real positive amplitudes.
    pub fn with_p(p: f64) -> Self {
        Self::superposition(c(p.sqrt()), c((1.0 - p).sqrt()))
    }
}

pub fn initial_state(spec: &InitialState) -> Result<DensityMatrix4> {
    match spec {
        InitialState::Superposition { a1, a2 } => {
            let a1 = Complex64::new(a1[0], a1[1]);
            let a2 = Complex64::new(a2[0], a2[1]);
            let norm = a1.norm_sqr() + a2.norm_sqr();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::invalid("initial_state", "a1 and a2 must not both be zero"));
            }
            let psi = [a1, c(0.0), c(0.0), a2].map(|z| z / norm.sqrt());
            let m = Matrix4::from_fn(|i, j| psi[i] * psi[j].conj());
            DensityMatrix4::new(m)
        }
        InitialState::Braun => {
            let sign = [1.0, 1.0, -1.0, -1.0];
            DensityMatrix4::new(Matrix4::from_fn(|i, j| c(0.25 * sign[i] * sign[j])))
        }
        InitialState::Explicit { re, im } => {
            let m = Matrix4::from_fn(|i, j| Complex64::new(re[i][j], im[i][j]));
            let rho = DensityMatrix4::new(m)?;
            if rho.min_eigenvalue() < -1e-10 {
                return Err(Error::invalid("initial_state", "matrix is not positive semidefinite"));
            }
            Ok(rho)
        }
    }
}

/// Inputs to the disentanglement-time bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisentanglementInputs {
    pub p: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta5: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub kappa_max: f64,
    pub c_a: f64,
    pub c_b: f64,
}

impl DisentanglementInputs {
    /// Direct construction; `δ±` are derived from `δ₂, δ₃`.
    pub fn new(p: f64, delta2: f64, delta3: f64, delta5: f64, kappa_max: f64) -> Self {
        DisentanglementInputs {
            p,
            delta2,
            delta3,
            delta5,
            delta_plus: delta2.max(delta3),
            delta_minus: delta2.min(delta3),
            kappa_max,
            c_a: 1.0,
            c_b: 1.0,
        }
    }

    /// `δ₂ = (λ₁²+μ₁²)σ_g(B₁)`, `δ₃ = (λ₂²+μ₂²)σ_g(B₂)`,
    /// `δ₅ = δ₂ + δ₃ + [(κ₁+κ₂)² + ν₁² + ν₂²]σ_f(0)`.
    pub fn from_couplings(p: f64, cp: &CouplingSet, sd: &SpectralData) -> Self {
        let d2 = cp.exchange_sq(1) * sd.sigma_g_b1;
        let d3 = cp.exchange_sq(2) * sd.sigma_g_b2;
        let ks = cp.kappa1 + cp.kappa2;
        let d5 = d2 + d3 + (ks * ks + cp.nu1 * cp.nu1 + cp.nu2 * cp.nu2) * sd.sigma_f_0;
        Self::new(p, d2, d3, d5, cp.kappa_max())
    }

    pub fn with_constants(mut self, c_a: f64, c_b: f64) -> Self {
        self.c_a = c_a;
        self.c_b = c_b;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    /// Concurrence vanishes for all `t ≥ t_a`.
    pub t_a: f64,
    /// Concurrence is positive for all `t ≤ t_b`.
    pub t_b: f64,
    pub terms_a: [f64; 3],
    pub terms_b: [f64; 3],
}

pub fn disentanglement_bounds(d: &DisentanglementInputs) -> Result<Bounds> {
    if !(d.p > 0.0 && d.p < 1.0) {
        return Err(Error::BoundsPrecondition(format!("0 < p < 1, got p = {}", d.p)));
    }
    if !(d.delta2 > 0.0 && d.delta3 > 0.0) {
        return Err(Error::BoundsPrecondition(format!(
            "delta2, delta3 > 0, got {} and {}",
            d.delta2, d.delta3
        )));
    }
    if !(d.kappa_max > 0.0) {
        return Err(Error::BoundsPrecondition(format!("kappa_max > 0, got {}", d.kappa_max)));
    }
    if !(d.c_a > 0.0 && d.c_b > 0.0) {
        return Err(Error::BoundsPrecondition(format!(
            "positive constants, got C_A = {}, C_B = {}",
            d.c_a, d.c_b
        )));
    }
    if d.delta5 < d.delta2 + d.delta3 - 1e-15 * d.delta5.abs() {
        return Err(Error::BoundsPrecondition(format!(
            "delta5 >= delta2 + delta3, got {} < {}",
            d.delta5,
            d.delta2 + d.delta3
        )));
    }
    let pq = d.p * (1.0 - d.p);
    let k2 = d.kappa_max * d.kappa_max;
    let d23 = d.delta2 + d.delta3;
    let terms_a = [
        (d.c_a * pq.sqrt() / k2).ln() / d.delta5,
        (d.c_a * pq / k2).ln() / d23,
        d.c_a / d23,
    ];
    let terms_b = [
        (d.c_b * pq).ln_1p() / d23,
        (d.c_b * k2).ln_1p() / d.delta_plus,
        d.c_b / (d.delta5 - 0.5 * d.delta_minus),
    ];
    Ok(Bounds {
        t_a: terms_a.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        t_b: terms_b.iter().copied().fold(f64::INFINITY, f64::min),
        terms_a,
        terms_b,
    })
}
