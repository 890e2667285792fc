//! Purely energy-conserving model (`λ = μ = 0`, `κ₁ = κ₂`, `ν₁ = ν₂`).
//!
//! It has a closed-form solution in terms of two memory functions `S(t)` and
//! `Γ(t)`, which makes it the reference against which the resonance
//! approximation is measured. Replacing `S(t) → r_f t/2` and
//! `Γ(t) → σ_f(0) t/4` in the exact solution gives the resonance form.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagator::DensityMatrix4;
use crate::quadrature::{integrate_breakpoints, Tolerance};
use crate::spectral::{FormFactor, SpectralData};
use crate::system::{hamiltonian_eigenvalues, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Phase coefficients `a_mn`.
pub const A: [[f64; 4]; 4] = [
    [0.0, -4.0, -4.0, 0.0],
    [4.0, 0.0, 0.0, 4.0],
    [4.0, 0.0, 0.0, 4.0],
    [0.0, -4.0, -4.0, 0.0],
];

/// Local (κ) decoherence coefficients `b_mn`.
pub const B: [[f64; 4]; 4] = [
    [0.0, 4.0, 4.0, 16.0],
    [4.0, 0.0, 0.0, 4.0],
    [4.0, 0.0, 0.0, 4.0],
    [16.0, 4.0, 4.0, 0.0],
];

/// Collective (ν) decoherence coefficients `c_mn`.
pub const C: [[f64; 4]; 4] = [
    [0.0, 4.0, 4.0, 8.0],
    [4.0, 0.0, 8.0, 4.0],
    [4.0, 8.0, 0.0, 4.0],
    [8.0, 4.0, 4.0, 0.0],
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryValues {
    pub s: f64,
    pub gamma: f64,
}

impl MemoryValues {
    /// Long-time linearization `S = r_f t/2`, `Γ = σ_f(0) t/4`.
    pub fn linearized(t: f64, sd: &SpectralData) -> Self {
        MemoryValues {
            s: 0.5 * sd.r_f * t,
            gamma: 0.25 * sd.sigma_f_0 * t,
        }
    }
}

/// `S(t) = ½∫|f|²(|k|t − sin|k|t)/|k|² d³k` and
/// `Γ(t) = ∫|f|² coth(β|k|/2) sin²(|k|t/2)/|k|² d³k`, both reduced to radial
/// integrals.
#[derive(Debug, Clone, Copy)]
pub struct MemoryFunctions {
    f: FormFactor,
    beta: f64,
    r_max: f64,
    tol: Tolerance,
}

const MAX_PANELS: usize = 20_000;

impl MemoryFunctions {
    pub fn new(f: FormFactor, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::invalid("beta", format!("must be positive, got {beta}")));
        }
        let Some(r_max) = f.support_radius() else {
            return Err(Error::Divergent(
                "memory functions need an ultraviolet-decaying form factor (m = 1 or 2)".into(),
            ));
        };
        Ok(MemoryFunctions {
            f,
            beta,
            r_max,
            tol: Tolerance::default(),
        })
    }

    pub fn form_factor(&self) -> &FormFactor {
        &self.f
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Panel edges: `1/t`, then one per period `2π/t`.
    fn panels(&self, t: f64) -> Vec<f64> {
        let mut pts = vec![0.0];
        let first = (1.0 / t).min(self.r_max);
        // resolve the r^{2p} e^{-2r^m} envelope near the origin as well
        let mut edge = first.min(0.25);
        while edge < first {
            pts.push(edge);
            edge *= 2.0;
        }
        pts.push(first);
        let period = 2.0 * PI / t;
        let n = ((self.r_max - first) / period).ceil() as usize;
        let stride = n.div_ceil(MAX_PANELS).max(1);
        let mut k = stride;
        loop {
            let x = first + k as f64 * period;
            if x >= self.r_max {
                break;
            }
            pts.push(x);
            k += stride;
        }
        pts.push(self.r_max);
        pts.dedup();
        pts
    }

    pub fn s(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let f = self.f;
        let integrand = |r: f64| {
            let x = r * t;
            let core = if x < 1e-3 {
                let x3 = x * x * x;
                x3 / 6.0 - x3 * x * x / 120.0
            } else {
                x - x.sin()
            };
            // the r² of d³k cancels the 1/|k|² of the kernel
            f.radial_sq(r) * core
        };
        let est = integrate_breakpoints(integrand, &self.panels(t), self.tol).map_err(|e| at_time(e, "S", t))?;
        Ok(0.5 * est.value)
    }

    pub fn gamma(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let f = self.f;
        let beta = self.beta;
        let integrand = |r: f64| {
            if r == 0.0 {
                return 0.0;
            }
            let s = (0.5 * r * t).sin();
            f.radial_sq(r) * s * s / (0.5 * beta * r).tanh()
        };
        let est = integrate_breakpoints(integrand, &self.panels(t), self.tol).map_err(|e| at_time(e, "Gamma", t))?;
        Ok(est.value)
    }

    pub fn eval(&self, t: f64) -> Result<MemoryValues> {
        Ok(MemoryValues {
            s: self.s(t)?,
            gamma: self.gamma(t)?,
        })
    }
}

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            op: "memory_functions",
            value: t,
        })
    }
}

fn at_time(e: Error, what: &str, t: f64) -> Error {
    match e {
        Error::Quadrature { context, value, error } => Error::Quadrature {
            context: format!("{what}(t = {t}): {context}"),
            value,
            error,
        },
        other => other,
    }
}

/// `(S, Γ)` precomputed on a time grid. Filled once, then read-only.
#[derive(Debug, Clone, Default)]
pub struct MemoryTable {
    values: HashMap<u64, MemoryValues>,
}

impl MemoryTable {
    /// Evaluate every grid point in parallel.
    pub fn fill(mf: &MemoryFunctions, grid: &[f64]) -> Result<Self> {
        let values = grid
            .par_iter()
            .map(|&t| mf.eval(t).map(|v| (t.to_bits(), v)))
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(MemoryTable { values })
    }

    pub fn get(&self, t: f64) -> Option<MemoryValues> {
        self.values.get(&t.to_bits()).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Exact solution at time `t` given the memory-function values there.
pub fn exact_evolve(
    rho0: &DensityMatrix4,
    t: f64,
    kappa: f64,
    nu: f64,
    sys: &SystemParams,
    mem: MemoryValues,
) -> DensityMatrix4 {
    let e = hamiltonian_eigenvalues(sys);
    let k2 = kappa * kappa;
    let n2 = nu * nu;
    let r = rho0.matrix();
    let out = Matrix4::from_fn(|m, n| {
        let phase = -t * (e[m] - e[n]) + k2 * A[m][n] * mem.s;
        let decay = -(k2 * B[m][n] + n2 * C[m][n]) * mem.gamma;
        r[(m, n)] * (I * phase + decay).exp()
    });
    DensityMatrix4::from_upper_unchecked(out, false)
}

/// Resonance approximation of the energy-conserving model.
///
/// The `(2,3)` element decays at `2ν²σ_f(0)`, consistent with the
/// coefficient matrices of the exact solution and with the general
/// propagator.
pub fn resonance_evolve_ec(
    rho0: &DensityMatrix4,
    t: f64,
    kappa: f64,
    nu: f64,
    sys: &SystemParams,
    sd: &SpectralData,
) -> DensityMatrix4 {
    let e = hamiltonian_eigenvalues(sys);
    let k2 = kappa * kappa;
    let n2 = nu * nu;
    let sf = sd.sigma_f_0;
    let r = rho0.matrix();
    let bohr = |m: usize, n: usize| (-I * t * (e[m] - e[n])).exp();
    let mut out = Matrix4::<Complex64>::zeros();
    for m in 0..4 {
        out[(m, m)] = r[(m, m)];
    }
    let side = (-I * 2.0 * t * k2 * sd.r_f).exp() * (-t * (k2 + n2) * sf).exp();
    for n in [1, 2] {
        out[(0, n)] = bohr(0, n) * side * r[(0, n)];
    }
    out[(0, 3)] = bohr(0, 3) * (-t * (4.0 * k2 + 2.0 * n2) * sf).exp() * r[(0, 3)];
    out[(1, 2)] = bohr(1, 2) * (-2.0 * t * n2 * sf).exp() * r[(1, 2)];
    let side = (I * 2.0 * t * k2 * sd.r_f).exp() * (-t * (k2 + n2) * sf).exp();
    for m in [1, 2] {
        out[(m, 3)] = bohr(m, 3) * side * r[(m, 3)];
    }
    DensityMatrix4::from_upper_unchecked(out, true)
}

/// `|exact − resonance|`, entrywise maximum, at every grid point.
pub fn deviation_profile(
    rho0: &DensityMatrix4,
    t_grid: &[f64],
    kappa: f64,
    nu: f64,
    sys: &SystemParams,
    table: &MemoryTable,
    sd: &SpectralData,
) -> Result<Vec<f64>> {
    t_grid
        .iter()
        .map(|&t| {
            let mem = table
                .get(t)
                .ok_or_else(|| Error::invalid("t_grid", format!("t = {t} missing from memory table")))?;
            let a = exact_evolve(rho0, t, kappa, nu, sys, mem);
            let b = resonance_evolve_ec(rho0, t, kappa, nu, sys, sd);
            Ok(a.max_abs_diff(&b))
        })
        .collect()
}

/// Supremum of [`deviation_profile`] over the grid.
pub fn deviation(
    rho0: &DensityMatrix4,
    t_grid: &[f64],
    kappa: f64,
    nu: f64,
    sys: &SystemParams,
    table: &MemoryTable,
    sd: &SpectralData,
) -> Result<f64> {
    Ok(deviation_profile(rho0, t_grid, kappa, nu, sys, table, sd)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Grid for deviation scans on `[0, t_end]`: 100 logarithmic points on
/// `[10⁻³, 1]` to resolve the quadratic onset of `Γ`, then step `0.5`.
pub fn deviation_grid(t_end: f64) -> Vec<f64> {
    let mut t = vec![0.0];
    t.extend((0..100).map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / 100.0)));
    let n = ((t_end - 1.0) / 0.5).ceil().max(0.0) as usize;
    t.extend((0..=n).map(|i| (1.0 + 0.5 * i as f64).min(t_end)));
    t.dedup();
    t
}

/// Deviation of the resonance form from the exact solution for several `κ`
/// at fixed `ν`, with the log-log slope of deviation against `κ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationScaling {
    pub nu: f64,
    pub kappa: Vec<f64>,
    /// Maximum over the whole grid.
    pub deviation: Vec<f64>,
    /// Maximum over the first and second half of the time range.
    pub early: Vec<f64>,
    pub late: Vec<f64>,
    /// Least-squares slope of `ln deviation` against `ln κ`.
    pub slope: f64,
}

/// `sd` must carry `r_f` and `σ_f(0)` of the form factor behind `table`.
pub fn deviation_scaling(
    rho0: &DensityMatrix4,
    grid: &[f64],
    kappas: &[f64],
    nu: f64,
    sys: &SystemParams,
    table: &MemoryTable,
    sd: &SpectralData,
) -> Result<DeviationScaling> {
    if kappas.len() < 2 || kappas.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::invalid("kappa", "need at least two positive values"));
    }
    let half = 0.5 * grid.iter().copied().fold(0.0, f64::max);
    let mut out = DeviationScaling {
        nu,
        kappa: kappas.to_vec(),
        deviation: Vec::new(),
        early: Vec::new(),
        late: Vec::new(),
        slope: f64::NAN,
    };
    for &k in kappas {
        let prof = deviation_profile(rho0, grid, k, nu, sys, table, sd)?;
        let max_where = |keep: &dyn Fn(f64) -> bool| {
            grid.iter()
                .zip(&prof)
                .filter(|(t, _)| keep(**t))
                .fold(0.0f64, |m, (_, d)| m.max(*d))
        };
        out.deviation.push(max_where(&|_| true));
        out.early.push(max_where(&|t| t <= half));
        out.late.push(max_where(&|t| t >= half));
    }
    let xs: Vec<f64> = kappas.iter().map(|k| k.ln()).collect();
    let ys: Vec<f64> = out.deviation.iter().map(|d| d.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    out.slope = sxy / sxx;
    Ok(out)
}
