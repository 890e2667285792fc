//! Reservoir spectral functions.
//!
//! A form factor is `h(r, Σ) = r^p e^{-r^m} h₁(Σ)`; only the angular weight
//! `∫|h₁|² dΣ` enters, so everything here reduces to one radial integral.
//! All quantities are dimensionless.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_breakpoints, Tolerance};
use crate::system::SystemParams;

/// Default principal-value cutoff.
pub const DEFAULT_CUTOFF: f64 = 100.0;

/// Ultraviolet decay of the radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decay {
    /// `e^{-r}` (m = 1)
    Exponential,
    /// `e^{-r²}` (m = 2)
    Gaussian,
    /// Pure power law. Only usable where a sharp cutoff is supplied.
    None,
}

impl Decay {
    fn from_m(m: u8) -> Result<Self> {
        match m {
            0 => Ok(Decay::None),
            1 => Ok(Decay::Exponential),
            2 => Ok(Decay::Gaussian),
            _ => Err(Error::invalid(
                "m",
                format!("expected 1 or 2 (0 for no decay), got {m}"),
            )),
        }
    }

    pub fn m(self) -> u8 {
        match self {
            Decay::None => 0,
            Decay::Exponential => 1,
            Decay::Gaussian => 2,
        }
    }

    /// `e^{-2 r^m}`, the squared decay factor.
    fn squared(self, r: f64) -> f64 {
        match self {
            Decay::None => 1.0,
            Decay::Exponential => (-2.0 * r).exp(),
            Decay::Gaussian => (-2.0 * r * r).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFormFactor", into = "RawFormFactor")]
pub struct FormFactor {
    /// `p = n - 1/2`
    n: u32,
    decay: Decay,
    angular_weight: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawFormFactor {
    p: f64,
    m: u8,
    #[serde(default = "unit")]
    angular_weight: f64,
}

fn unit() -> f64 {
    1.0
}

impl TryFrom<RawFormFactor> for FormFactor {
    type Error = Error;

    fn try_from(raw: RawFormFactor) -> Result<Self> {
        FormFactor::new(raw.p, raw.m, raw.angular_weight)
    }
}

impl From<FormFactor> for RawFormFactor {
    fn from(f: FormFactor) -> Self {
        RawFormFactor {
            p: f.p(),
            m: f.decay.m(),
            angular_weight: f.angular_weight,
        }
    }
}

impl FormFactor {
    /// `p` must be `-1/2 + n` for some `n ≥ 0`; `m` is 1 or 2, or 0 for a
    /// profile without ultraviolet decay.
    pub fn new(p: f64, m: u8, angular_weight: f64) -> Result<Self> {
        let shifted = p + 0.5;
        let n = shifted.round();
        if !(shifted >= -1e-12) || (shifted - n).abs() > 1e-12 {
            return Err(Error::invalid(
                "p",
                format!("expected -1/2 + n with n = 0, 1, ..., got {p}"),
            ));
        }
        if !(angular_weight > 0.0) || !angular_weight.is_finite() {
            return Err(Error::invalid(
                "angular_weight",
                format!("must be positive, got {angular_weight}"),
            ));
        }
        Ok(FormFactor {
            n: n as u32,
            decay: Decay::from_m(m)?,
            angular_weight,
        })
    }

    /// Infrared-singular profile `r^{-1/2} e^{-r}`: the energy-conserving
    /// default, with finite nonzero `σ_f(0)`.
    pub fn default_conserving() -> Self {
        FormFactor {
            n: 0,
            decay: Decay::Exponential,
            angular_weight: 1.0,
        }
    }

    /// Ohmic profile `r^{1/2} e^{-r}`: the energy-exchange default.
    pub fn default_exchange() -> Self {
        FormFactor {
            n: 1,
            decay: Decay::Exponential,
            angular_weight: 1.0,
        }
    }

    /// Pure `√r` profile with no ultraviolet decay.
    pub fn ohmic_power_law() -> Self {
        FormFactor {
            n: 1,
            decay: Decay::None,
            angular_weight: 1.0,
        }
    }

    pub fn p(&self) -> f64 {
        self.n as f64 - 0.5
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn angular_weight(&self) -> f64 {
        self.angular_weight
    }

    pub fn with_angular_weight(mut self, w: f64) -> Result<Self> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::invalid("angular_weight", format!("must be positive, got {w}")));
        }
        self.angular_weight = w;
        Ok(self)
    }

    /// `∫_{S²} |h(r, Σ)|² dΣ`
    pub fn radial_sq(&self, r: f64) -> f64 {
        // r^{2p} = r^{2n-1}
        let power = if self.n == 0 {
            1.0 / r
        } else {
            r.powi(2 * self.n as i32 - 1)
        };
        self.angular_weight * power * self.decay.squared(r)
    }

    /// Radius past which `e^{-2r^m}` has dropped below ~1e-30 of its peak.
    pub(crate) fn support_radius(&self) -> Option<f64> {
        match self.decay {
            Decay::Exponential => Some(35.0 + self.n as f64),
            Decay::Gaussian => Some(6.0 + 0.5 * (self.n as f64).sqrt()),
            Decay::None => None,
        }
    }
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// `σ_h(x) = 4π x² coth(βx) ∫|h(2x, Σ)|² dΣ`, with the `x ↓ 0` limit at zero.
pub fn sigma(x: f64, beta: f64, h: &FormFactor) -> Result<f64> {
    check_beta(beta)?;
    if !(x >= 0.0) {
        return Err(Error::Domain { op: "sigma", value: x });
    }
    if x == 0.0 {
        // x² coth(βx) (2x)^{2p} → x/β · (2x)^{2n-1}: finite only for n = 0.
        return Ok(if h.n == 0 {
            2.0 * PI * h.angular_weight / beta
        } else {
            0.0
        });
    }
    Ok(4.0 * PI * x * x * coth(beta * x) * h.radial_sq(2.0 * x))
}

/// `σ⁻_g(x) = 2π x² e^{βx}/sinh(βx) ∫|g(2x, Σ)|² dΣ`.
pub fn sigma_minus(x: f64, beta: f64, g: &FormFactor) -> Result<f64> {
    check_beta(beta)?;
    if !(x > 0.0) {
        return Err(Error::Domain {
            op: "sigma_minus",
            value: x,
        });
    }
    // e^{βx}/sinh(βx) = 2 / (1 - e^{-2βx})
    let bose = 2.0 / -(-2.0 * beta * x).exp_m1();
    Ok(2.0 * PI * x * x * bose * g.radial_sq(2.0 * x))
}

/// Spectral integrand of `r_g`: `u² ∫|g(|u|,Σ)|²dΣ coth(β|u|/2)`, even in `u`.
fn pv_numerator(u: f64, beta: f64, g: &FormFactor) -> f64 {
    let a = u.abs();
    if a == 0.0 {
        // u² |u|^{2n-1} · 2/(β|u|) = (2/β)|u|^{2n}
        return if g.n == 0 { 2.0 * g.angular_weight / beta } else { 0.0 };
    }
    a * a * g.radial_sq(a) * coth(0.5 * beta * a)
}

/// `r_g(x) = ½ P.V.∫_{-u_c}^{u_c} u² |g(|u|)|² coth(β|u|/2) / (u − 2x) du`.
///
/// The numerator `F` is even, so the window folds onto `[0, u_c]` with
/// kernel `2u₀/(u² − u₀²)`, `u₀ = 2x`; this avoids cancelling the two halves
/// when `F` grows. With `G(u) = 2u₀F(u)/(u + u₀)` the pole is removed
/// analytically: `[G(u) − G(u₀)]/(u − u₀)` is integrated numerically and
/// `G(u₀) ln((u_c − u₀)/u₀)` is added back.
pub fn pv_r_g(x: f64, beta: f64, g: &FormFactor, u_c: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(x >= 0.0) {
        return Err(Error::Domain { op: "pv_r_g", value: x });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if !(u_c > 4.0 * x) {
        return Err(Error::CutoffTooSmall { u_c, x });
    }
    let u0 = 2.0 * x;
    let big_g = |u: f64| 2.0 * u0 * pv_numerator(u, beta, g) / (u + u0);
    let g0 = big_g(u0);
    let regular = |u: f64| (big_g(u) - g0) / (u - u0);
    let mut points = vec![0.0, u0];
    // a few extra panels help the exponential tail when u_c is large
    let mut edge = 4.0 * u0.max(1.0);
    while edge < u_c {
        points.push(edge);
        edge *= 4.0;
    }
    points.push(u_c);
    points.sort_by(f64::total_cmp);
    let est = integrate_breakpoints(regular, &points, Tolerance::tight()).map_err(|e| with_context(e, "r_g"))?;
    let log_part = g0 * ((u_c - u0) / u0).ln();
    Ok(0.5 * (est.value + log_part))
}

/// `r_f = P.V.∫_{ℝ³} |f|²/|k| d³k = W ∫₀^∞ r^{2p+1} e^{-2r^m} dr`.
pub fn pv_r_f(f: &FormFactor) -> Result<f64> {
    let Some(r_max) = f.support_radius() else {
        return Err(Error::Divergent(
            "r_f needs an ultraviolet-decaying form factor (m = 1 or 2)".into(),
        ));
    };
    let points = radial_panels(r_max);
    let est = integrate_breakpoints(|r| r * f.radial_sq(r), &points, Tolerance::tight())
        .map_err(|e| with_context(e, "r_f"))?;
    Ok(est.value)
}

pub(crate) fn radial_panels(r_max: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut edge = 0.25;
    while edge < r_max {
        pts.push(edge);
        edge *= 2.0;
    }
    pts.push(r_max);
    pts
}

fn with_context(e: Error, what: &str) -> Error {
    match e {
        Error::Quadrature { context, value, error } => Error::Quadrature {
            context: format!("{what}: {context}"),
            value,
            error,
        },
        other => other,
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("beta", format!("must be positive, got {beta}")))
    }
}

/// `σ_g(B₂)/σ_g(B₁) = (B₂/B₁)³ coth(βB₂)/coth(βB₁)` for a `√r` profile.
pub fn ohmic_sigma_ratio(sys: &SystemParams) -> f64 {
    let (b1, b2, beta) = (sys.b1(), sys.b2(), sys.beta());
    (b2 / b1).powi(3) * coth(beta * b2) / coth(beta * b1)
}

/// `e^{2βx}/(e^{2βx}+1)`, the factor relating `σ⁻` to `σ`.
pub fn emission_fraction(x: f64, beta: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * beta * x).exp())
}

/// How the reservoir integrals were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralSource {
    /// σ_g(B₁) = r_g(B₁) = σ_f(0) = r_f = 1.
    Renormalized,
    Quadrature {
        f: FormFactor,
        g: FormFactor,
    },
}

/// Reservoir integrals at the qubit frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub sigma_g_b1: f64,
    pub sigma_g_b2: f64,
    pub sigma_g_minus_b1: f64,
    pub sigma_g_minus_b2: f64,
    pub r_g_b1: f64,
    pub r_g_b2: f64,
    pub sigma_f_0: f64,
    pub r_f: f64,
    pub u_c: f64,
    pub source: SpectralSource,
}

impl SpectralData {
    /// Renormalized units: `σ_g(B₁) = r_g(B₁) = σ_f(0) = r_f = 1`, `σ_g(B₂)`
    /// from the ohmic ratio, `r_g(B₂) = r_g(B₁)` and `σ⁻` from the
    /// emission fraction.
    pub fn renormalized(sys: &SystemParams) -> Self {
        let beta = sys.beta();
        let sigma_g_b2 = ohmic_sigma_ratio(sys);
        SpectralData {
            sigma_g_b1: 1.0,
            sigma_g_b2,
            sigma_g_minus_b1: emission_fraction(sys.b1(), beta),
            sigma_g_minus_b2: emission_fraction(sys.b2(), beta) * sigma_g_b2,
            r_g_b1: 1.0,
            r_g_b2: 1.0,
            sigma_f_0: 1.0,
            r_f: 1.0,
            u_c: DEFAULT_CUTOFF,
            source: SpectralSource::Renormalized,
        }
    }

    /// Evaluate every integral from explicit form factors.
    pub fn from_form_factors(sys: &SystemParams, f: &FormFactor, g: &FormFactor, u_c: f64) -> Result<Self> {
        let beta = sys.beta();
        let (b1, b2) = (sys.b1(), sys.b2());
        Ok(SpectralData {
            sigma_g_b1: sigma(b1, beta, g)?,
            sigma_g_b2: sigma(b2, beta, g)?,
            sigma_g_minus_b1: sigma_minus(b1, beta, g)?,
            sigma_g_minus_b2: sigma_minus(b2, beta, g)?,
            r_g_b1: pv_r_g(b1, beta, g, u_c)?,
            r_g_b2: pv_r_g(b2, beta, g, u_c)?,
            sigma_f_0: sigma(0.0, beta, f)?,
            r_f: pv_r_f(f)?,
            u_c,
            source: SpectralSource::Quadrature { f: *f, g: *g },
        })
    }

    pub fn sigma_g(&self, qubit: usize) -> f64 {
        match qubit {
            1 => self.sigma_g_b1,
            _ => self.sigma_g_b2,
        }
    }

    /// `r_j' = 4B_j² ∫|g(2B_j, Σ)|² dΣ = σ_g(B_j) tanh(βB_j)/π`.
    pub fn r_prime(&self, qubit: usize, sys: &SystemParams) -> f64 {
        let b = if qubit == 1 { sys.b1() } else { sys.b2() };
        self.sigma_g(qubit) * (sys.beta() * b).tanh() / PI
    }
}

/// Decay constants and Lamb shifts in terms of independent renormalized
/// couplings (λ = μ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedParams {
    /// α₁..α₄
    pub alpha: [f64; 4],
    /// β₁..β₃
    pub lamb_shift: [f64; 3],
}

pub fn reduce_parameters(lambda: f64, kappa: f64, nu: f64, sys: &SystemParams) -> ReducedParams {
    let l2 = 2.0 * lambda * lambda;
    let k2 = kappa * kappa;
    ReducedParams {
        alpha: [l2, l2 * ohmic_sigma_ratio(sys), k2, nu * nu],
        lamb_shift: [l2, l2, -k2],
    }
}
