//! Lowest-order thermalization and cluster decoherence rates.
//!
//! The expressions are exactly quadratic in the couplings; `O(ϰ⁴)` terms
//! are not modeled. `γ₂` carries `(κ₁²+ν₁²)σ_f(0)` and `γ₃` carries
//! `(κ₂²+ν₂²)σ_f(0)`, with `Y₂`, `Y₃` built from qubit 2 and qubit 1
//! respectively.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralData;
use crate::system::SystemParams;

/// Energy-exchange (λ local, μ collective) and energy-conserving
/// (κ local, ν collective) couplings for both qubits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingSet {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub nu1: f64,
    pub nu2: f64,
}

impl CouplingSet {
    /// Same couplings on both qubits.
    pub fn symmetric(lambda: f64, mu: f64, kappa: f64, nu: f64) -> Self {
        CouplingSet {
            lambda1: lambda,
            lambda2: lambda,
            mu1: mu,
            mu2: mu,
            kappa1: kappa,
            kappa2: kappa,
            nu1: nu,
            nu2: nu,
        }
    }

    /// `ϰ = max_j {|κ_j|, |λ_j|, |μ_j|, |ν_j|}`
    pub fn kappa_max(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        self.lambda1 == self.lambda2 && self.mu1 == self.mu2 && self.kappa1 == self.kappa2 && self.nu1 == self.nu2
    }

    pub fn scaled(&self, s: f64) -> Self {
        let a = self.as_array().map(|x| x * s);
        Self::from_array(a)
    }

    /// `λ_j² + μ_j²`
    pub fn exchange_sq(&self, qubit: usize) -> f64 {
        match qubit {
            1 => self.lambda1 * self.lambda1 + self.mu1 * self.mu1,
            _ => self.lambda2 * self.lambda2 + self.mu2 * self.mu2,
        }
    }

    fn as_array(&self) -> [f64; 8] {
        [
            self.lambda1,
            self.lambda2,
            self.mu1,
            self.mu2,
            self.kappa1,
            self.kappa2,
            self.nu1,
            self.nu2,
        ]
    }

    fn from_array(a: [f64; 8]) -> Self {
        CouplingSet {
            lambda1: a[0],
            lambda2: a[1],
            mu1: a[2],
            mu2: a[3],
            kappa1: a[4],
            kappa2: a[5],
            nu1: a[6],
            nu2: a[7],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("couplings", "all couplings must be finite"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSet {
    pub gamma_th: f64,
    pub gamma2_dec: f64,
    pub gamma3_dec: f64,
    pub gamma4_dec: f64,
    pub gamma5_dec: f64,
    pub y2: f64,
    pub y3: f64,
    /// `(λ_j²+μ_j²)σ_g(B_j)`; `gamma_th` is their minimum.
    pub thermal_qubit: [f64; 2],
    pub kappa_max: f64,
}

impl RateSet {
    /// `[γ^th, γ₂, γ₃, γ₄, γ₅]`
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.gamma_th,
            self.gamma2_dec,
            self.gamma3_dec,
            self.gamma4_dec,
            self.gamma5_dec,
        ]
    }

    pub fn labels() -> [&'static str; 5] {
        ["gamma_th", "gamma2_dec", "gamma3_dec", "gamma4_dec", "gamma5_dec"]
    }

    /// `τ = 1/γ`, infinite for a vanishing rate.
    pub fn times(&self) -> [f64; 5] {
        self.as_array().map(|g| if g > 0.0 { 1.0 / g } else { f64::INFINITY })
    }

    /// `ln(ϰ⁻²)/γ`: how long a cluster can be followed before it sinks
    /// into the `O(ϰ²)` remainder. `None` when `γ ≤ 0` or `ϰ ≥ 1`.
    pub fn validity_horizons(&self) -> [Option<f64>; 5] {
        let k = self.kappa_max;
        self.as_array().map(|g| {
            if g > 0.0 && k > 0.0 && k < 1.0 {
                Some((k * k).recip().ln() / g)
            } else {
                None
            }
        })
    }
}

/// `|Im √(4κ₁²κ₂²r² − i x²σ² − 4iκ₁κ₂ x r r')|`, principal branch.
fn y_term(c: &CouplingSet, x: f64, sigma: f64, r: f64, r_prime: f64) -> f64 {
    let kk = c.kappa1 * c.kappa2;
    let radicand = Complex64::new(
        4.0 * kk * kk * r * r,
        -(x * x * sigma * sigma) - 4.0 * kk * x * r * r_prime,
    );
    radicand.sqrt().im.abs()
}

pub fn lowest_order_rates(c: &CouplingSet, sd: &SpectralData, sys: &SystemParams) -> RateSet {
    let x1 = c.exchange_sq(1);
    let x2 = c.exchange_sq(2);
    let s1 = sd.sigma_g_b1;
    let s2 = sd.sigma_g_b2;
    let sf = sd.sigma_f_0;
    let r = sd.r_f;

    let y2 = y_term(c, x2, s2, r, sd.r_prime(2, sys));
    let y3 = y_term(c, x1, s1, r, sd.r_prime(1, sys));

    let thermal_qubit = [x1 * s1, x2 * s2];
    let half = 0.5 * x1 * s1 + 0.5 * x2 * s2;
    let full = x1 * s1 + x2 * s2;
    let nu_sq = c.nu1 * c.nu1 + c.nu2 * c.nu2;
    let kd = c.kappa1 - c.kappa2;
    let ks = c.kappa1 + c.kappa2;

    RateSet {
        gamma_th: thermal_qubit[0].min(thermal_qubit[1]),
        gamma2_dec: half - y2 + (c.kappa1 * c.kappa1 + c.nu1 * c.nu1) * sf,
        gamma3_dec: half - y3 + (c.kappa2 * c.kappa2 + c.nu2 * c.nu2) * sf,
        gamma4_dec: full + (kd * kd + nu_sq) * sf,
        gamma5_dec: full + (ks * ks + nu_sq) * sf,
        y2,
        y3,
        thermal_qubit,
        kappa_max: c.kappa_max(),
    }
}

/// Single qubit coupled through one channel (`λ₁ = κ₁ = λ`, `f = g`).
///
/// Returns `(γ^th, γ^dec)` with `γ^th = ½πλ²σ_h(B)` and
/// `γ^dec = γ^th/2 + πλ²σ_h(0)`; `σ_h(B)` is read from `sigma_g_b1` and
/// `σ_h(0)` from `sigma_f_0`. These carry an explicit π that
/// [`lowest_order_rates`] does not: `γ^th = (π/2)·thermal_qubit[0]`.
pub fn spin_boson_rates(lambda: f64, sd: &SpectralData) -> (f64, f64) {
    let l2 = lambda * lambda;
    let th = 0.5 * std::f64::consts::PI * l2 * sd.sigma_g_b1;
    (th, 0.5 * th + l2 * std::f64::consts::PI * sd.sigma_f_0)
}

/// `min Im ε` over a cluster's resonance energies. For `e = 0` the
/// equilibrium mode (the entry closest to zero) is dropped first.
pub fn cluster_rate(e: f64, resonance_energies: &[Complex64]) -> Result<f64> {
    let mut eps: Vec<Complex64> = resonance_energies.to_vec();
    if e == 0.0 && !eps.is_empty() {
        let zero = eps
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        eps.remove(zero);
    }
    eps.iter()
        .map(|z| z.im)
        .min_by(f64::total_cmp)
        .ok_or(Error::EmptyResonanceList)
}
