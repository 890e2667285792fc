//! Closed-form resonance propagator for qubit-symmetric couplings.
//!
//! The density matrix splits into independently evolving clusters of index
//! pairs sharing a Bohr energy. Populations relax through three decay rates
//! `δ₂, δ₃, δ₄ = δ₂+δ₃`; the clusters `{(3,1),(4,2)}` and `{(2,1),(4,3)}`
//! mix through a 2×2 level-shift block; `(3,2)` and `(4,1)` evolve alone.
//! Only elements below the diagonal are propagated; the rest follow by
//! conjugation, so Hermiticity holds exactly.
//!
//! Every resonance energy `ε` includes its Bohr frequency: with all
//! couplings off, `ε_{2B₁} = 2B₁` and `[ρ_t]₃₁ = e^{2iB₁t}[ρ₀]₃₁`.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::CouplingSet;
use crate::spectral::SpectralData;
use crate::system::{Cluster, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this `|B|` the 2×2 blocks are treated as decoupled.
pub const DEGENERATE_B: f64 = 1e-14;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// 4×4 density matrix in the basis `|++⟩, |+−⟩, |−+⟩, |−−⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4 {
    m: Matrix4<Complex64>,
    approximate: bool,
}

impl DensityMatrix4 {
    /// Validate Hermiticity and unit trace to `1e-10`, then symmetrize.
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("rho", "entries must be finite"));
        }
        let herm_err = (m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if herm_err > 1e-10 {
            return Err(Error::invalid("rho", format!("not Hermitian (deviation {herm_err:e})")));
        }
        let tr = m.trace();
        if (tr - c(1.0)).norm() > 1e-10 {
            return Err(Error::invalid("rho", format!("trace is {tr}, expected 1")));
        }
        Ok(Self::hermitian_part(m, false))
    }

    /// Build from the entries on and above the diagonal.
    pub fn from_upper(m: Matrix4<Complex64>) -> Result<Self> {
        let mut full = m;
        for i in 0..4 {
            full[(i, i)] = c(m[(i, i)].re);
            for j in 0..i {
                full[(i, j)] = m[(j, i)].conj();
            }
        }
        Self::new(full)
    }

    fn hermitian_part(m: Matrix4<Complex64>, approximate: bool) -> Self {
        let h = (m + m.adjoint()) * c(0.5);
        DensityMatrix4 { m: h, approximate }
    }

    pub(crate) fn from_lower_unchecked(m: Matrix4<Complex64>, approximate: bool) -> Self {
        let mut full = m;
        for i in 0..4 {
            full[(i, i)] = c(m[(i, i)].re);
            for j in (i + 1)..4 {
                full[(i, j)] = m[(j, i)].conj();
            }
        }
        DensityMatrix4 { m: full, approximate }
    }

    pub(crate) fn from_upper_unchecked(m: Matrix4<Complex64>, approximate: bool) -> Self {
        let mut full = m;
        for i in 0..4 {
            full[(i, i)] = c(m[(i, i)].re);
            for j in 0..i {
                full[(i, j)] = m[(j, i)].conj();
            }
        }
        DensityMatrix4 { m: full, approximate }
    }

    /// `[ρ]_{mn}` with 1-based indices.
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.m[(m - 1, n - 1)]
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.m
    }

    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn populations(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.m[(i, i)].re)
    }

    /// Eigenvalues of the Hermitian matrix, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let ev = self.m.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Largest entrywise modulus of the difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix4) -> f64 {
        (self.m - other.m).iter().fold(0.0, |a, z| a.max(z.norm()))
    }
}

/// Resonance energies, mixing coefficients and population decay rates.
#[derive(Debug, Clone, Serialize)]
pub struct ResonanceData {
    /// `ε_{2B₁}^{(1)}, ε_{2B₁}^{(2)}` for the cluster `{(3,1),(4,2)}`.
    pub eps_2b1: [Complex64; 2],
    /// `ε_{2B₂}^{(1)}, ε_{2B₂}^{(2)}` for the cluster `{(2,1),(4,3)}`.
    pub eps_2b2: [Complex64; 2],
    /// `ε_{2(B₁−B₂)}`, element `(3,2)`.
    pub eps_minus: Complex64,
    /// `ε_{2(B₁+B₂)}`, element `(4,1)`.
    pub eps_plus: Complex64,
    /// `(y₊, y₋)`; `None` when the block is decoupled.
    pub y: Option<[Complex64; 2]>,
    /// `(y'₊, y'₋)`
    pub y_prime: Option<[Complex64; 2]>,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub e1: f64,
    pub e2: f64,
    pub z: f64,
    /// `e^{-βE_m}/Z`
    pub gibbs: [f64; 4],
    /// Level-shift block for `{(3,1),(4,2)}`, Bohr frequency included.
    pub block_2b1: [[Complex64; 2]; 2],
    /// Level-shift block for `{(2,1),(4,3)}`, Bohr frequency included.
    pub block_2b2: [[Complex64; 2]; 2],
}

impl ResonanceData {
    /// Clusters whose two resonances coincide (Condition (F) fails).
    pub fn condition_f_violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if split_too_small(&self.eps_2b1) {
            out.push("2B1");
        }
        if split_too_small(&self.eps_2b2) {
            out.push("2B2");
        }
        out
    }

    pub fn is_degenerate(&self) -> bool {
        self.y.is_none() || self.y_prime.is_none()
    }
}

fn split_too_small(eps: &[Complex64; 2]) -> bool {
    let scale = eps[0].norm().max(eps[1].norm()).max(1.0);
    (eps[0] - eps[1]).norm() <= 1e-13 * scale
}

/// Output of one 2×2 block: roots of the characteristic polynomial in the
/// a fixed ordering and the matching left-eigenvector coefficients.
struct Block {
    eps: [Complex64; 2],
    y: Option<[Complex64; 2]>,
    m: [[Complex64; 2]; 2],
}

/// `a, b, cc` are the coefficients `A, B, C`; `e` is the Gibbs factor of
/// the spectator qubit; `bohr` is added to both roots.
fn mixing_block(a: Complex64, b: Complex64, cc: Complex64, e: f64, bohr: f64) -> Block {
    let m = [[c(bohr) + a + cc + b * e, -b], [-b * e, c(bohr) + a - cc + b]];
    if b.norm() < DEGENERATE_B {
        return Block {
            eps: [c(bohr) + a + cc, c(bohr) + a - cc],
            y: None,
            m,
        };
    }
    let d = b * b * (1.0 + e) * (1.0 + e) + 4.0 * cc * (b * (e - 1.0) + cc);
    let s = 0.5 * d.sqrt();
    let centre = a + 0.5 * b * (1.0 + e);
    // Roots relative to the Bohr frequency; k = 1 takes +√D. The smaller one
    // comes from the product of the roots, as centre ± s cancels badly when
    // the Gibbs factor is large.
    let (p, q) = (centre + s, centre - s);
    let prod = a * a - cc * cc + b * (a + cc) + b * e * (a - cc);
    let r = if p.norm() >= q.norm() {
        [p, if p.norm() > 0.0 { prod / p } else { q }]
    } else {
        [prod / q, q]
    };
    // Left eigenvector (1, y_k): from the first column
    // y = (a + C + Be − r)/(Be), from the second y = B/(a − C + B − r);
    // use whichever subtracts the more distant diagonal entry.
    let y = r.map(|rk| {
        let first = a + cc + b * e - rk;
        let second = a - cc + b - rk;
        if first.norm() >= second.norm() {
            first / (b * e)
        } else {
            b / second
        }
    });
    Block {
        eps: r.map(|rk| c(bohr) + rk),
        y: Some(y),
        m,
    }
}

pub fn resonance_data(cp: &CouplingSet, sd: &SpectralData, sys: &SystemParams) -> Result<ResonanceData> {
    cp.validate()?;
    if !cp.is_symmetric() {
        return Err(Error::NonSymmetricCouplings(format!("{cp:?}")));
    }
    let x = cp.lambda1 * cp.lambda1 + cp.mu1 * cp.mu1;
    let k2 = cp.kappa1 * cp.kappa1;
    let n2 = cp.nu1 * cp.nu1;
    let (e1, e2) = sys.gibbs_factors();
    let (b1, b2) = (sys.b1(), sys.b2());

    let cc = c(-2.0 * k2 * sd.r_f);
    let dephase = I * (k2 + n2) * sd.sigma_f_0;

    let a1 = I * x * 0.5 * sd.sigma_g_b1 + dephase - x * sd.r_g_b1;
    let bb1 = I * x * sd.sigma_g_minus_b2;
    let blk1 = mixing_block(a1, bb1, cc, e2, 2.0 * b1);

    let a2 = I * x * 0.5 * sd.sigma_g_b2 + dephase - x * sd.r_g_b2;
    let bb2 = I * x * sd.sigma_g_minus_b1;
    let blk2 = mixing_block(a2, bb2, cc, e1, 2.0 * b2);

    let both = I * x * (sd.sigma_g_b1 + sd.sigma_g_b2);
    let eps_minus = c(2.0 * (b1 - b2)) + both + I * 2.0 * n2 * sd.sigma_f_0 + x * (sd.r_g_b1 - sd.r_g_b2);
    let eps_plus = c(2.0 * (b1 + b2)) + both + I * (4.0 * k2 + 2.0 * n2) * sd.sigma_f_0 - x * (sd.r_g_b1 + sd.r_g_b2);

    let delta2 = x * sd.sigma_g_b2;
    let delta3 = x * sd.sigma_g_b1;
    Ok(ResonanceData {
        eps_2b1: blk1.eps,
        eps_2b2: blk2.eps,
        eps_minus,
        eps_plus,
        y: blk1.y,
        y_prime: blk2.y,
        delta2,
        delta3,
        delta4: delta2 + delta3,
        e1,
        e2,
        z: sys.partition_function(),
        gibbs: sys.gibbs_weights(),
        block_2b1: blk1.m,
        block_2b2: blk2.m,
    })
}

/// Population transfer matrix split by decay channel: `P(t) = Σ_j M_j e^{-tδ_j}`
/// with `δ₀ = 0`. Row `m`, column `k` multiplies `[ρ₀]_kk` in `[ρ_t]_mm`.
fn population_modes(rd: &ResonanceData) -> [[[f64; 4]; 4]; 4] {
    let (e1, e2) = (rd.e1, rd.e2);
    let (i1, i2) = (1.0 / e1, 1.0 / e2);
    // Coefficients of (1, e^{-tδ₂}, e^{-tδ₃}, e^{-tδ₄}) per (m, k). The table
    // is the product of two single-qubit relaxation chains (qubit 1 at δ₃,
    // qubit 2 at δ₂); entries (1,3), (1,4) and (3,3) follow that product.
    let coef: [[[f64; 4]; 4]; 4] = [
        [
            [1.0, e2, e1, e1 * e2],
            [1.0, -1.0, e1, -e1],
            [1.0, e2, -1.0, -e2],
            [1.0, -1.0, -1.0, 1.0],
        ],
        [
            [1.0, -1.0, e1, -e1],
            [1.0, i2, e1, e1 * i2],
            [1.0, -1.0, -1.0, 1.0],
            [1.0, i2, -1.0, -i2],
        ],
        [
            [1.0, e2, -1.0, -e2],
            [1.0, -1.0, -1.0, 1.0],
            [1.0, e2, i1, e2 * i1],
            [1.0, -1.0, i1, -i1],
        ],
        [
            [1.0, -1.0, -1.0, 1.0],
            [1.0, i2, -1.0, -i2],
            [1.0, -1.0, i1, -i1],
            [1.0, i2, i1, i1 * i2],
        ],
    ];
    let mut modes = [[[0.0; 4]; 4]; 4];
    for (j, mode) in modes.iter_mut().enumerate() {
        for m in 0..4 {
            for k in 0..4 {
                mode[m][k] = rd.gibbs[m] * coef[m][k][j];
            }
        }
    }
    modes
}

fn population_matrix(t: f64, rd: &ResonanceData) -> [[f64; 4]; 4] {
    let modes = population_modes(rd);
    let decay = [
        1.0,
        (-t * rd.delta2).exp(),
        (-t * rd.delta3).exp(),
        (-t * rd.delta4).exp(),
    ];
    let mut p = [[0.0; 4]; 4];
    for m in 0..4 {
        for k in 0..4 {
            p[m][k] = (0..4).map(|j| modes[j][m][k] * decay[j]).sum();
        }
    }
    p
}

/// 2×2 propagator for a mixing block in its natural order.
fn block_propagator(
    t: f64,
    eps: &[Complex64; 2],
    y: Option<[Complex64; 2]>,
    e: f64,
    m: &[[Complex64; 2]; 2],
) -> [[Complex64; 2]; 2] {
    match y {
        None => {
            // decoupled: the block matrix is diagonal
            let p0 = (I * t * m[0][0]).exp();
            let p1 = (I * t * m[1][1]).exp();
            [[p0, Complex64::default()], [Complex64::default(), p1]]
        }
        Some(_) if split_too_small(eps) => {
            let g = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]) * (I * t);
            let x = g.exp();
            [[x[(0, 0)], x[(0, 1)]], [x[(1, 0)], x[(1, 1)]]]
        }
        Some(ys) => {
            let mut out = [[Complex64::default(); 2]; 2];
            for k in 0..2 {
                let yk = ys[k];
                let wave = (I * t * eps[k]).exp();
                if wave == Complex64::default() {
                    continue;
                }
                // column vector (1, e y_k), row vector (1, y_k), normalized by
                // 1 + e y_k²; written so that a huge Gibbs factor stays finite
                let q = e * yk * yk;
                let w = 1.0 / (1.0 + q);
                let qw = if q.norm() < 1.0 { q * w } else { 1.0 - w };
                let eyw = if q.norm() < 1.0 {
                    e * yk * w
                } else {
                    1.0 / (yk + 1.0 / (e * yk))
                };
                out[0][0] += wave * w;
                out[0][1] += wave * yk * w;
                out[1][0] += wave * eyw;
                out[1][1] += wave * qw;
            }
            out
        }
    }
}

/// Propagate `rho0` to time `t ≥ 0`.
pub fn evolve(rho0: &DensityMatrix4, t: f64, rd: &ResonanceData) -> DensityMatrix4 {
    let r = rho0.matrix();
    let mut out = Matrix4::<Complex64>::zeros();

    let p = population_matrix(t, rd);
    for m in 0..4 {
        out[(m, m)] = c((0..4).map(|k| p[m][k] * r[(k, k)].re).sum());
    }

    // {(3,1),(4,2)}
    let u = block_propagator(t, &rd.eps_2b1, rd.y, rd.e2, &rd.block_2b1);
    let (x31, x42) = (r[(2, 0)], r[(3, 1)]);
    out[(2, 0)] = u[0][0] * x31 + u[0][1] * x42;
    out[(3, 1)] = u[1][0] * x31 + u[1][1] * x42;

    // {(2,1),(4,3)}
    let u = block_propagator(t, &rd.eps_2b2, rd.y_prime, rd.e1, &rd.block_2b2);
    let (x21, x43) = (r[(1, 0)], r[(3, 2)]);
    out[(1, 0)] = u[0][0] * x21 + u[0][1] * x43;
    out[(3, 2)] = u[1][0] * x21 + u[1][1] * x43;

    out[(2, 1)] = (I * t * rd.eps_minus).exp() * r[(2, 1)];
    out[(3, 0)] = (I * t * rd.eps_plus).exp() * r[(3, 0)];

    DensityMatrix4::from_lower_unchecked(out, true)
}

/// Which block a below-or-on-diagonal pair belongs to, and its position.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Population(usize),
    Mix1(usize),
    Mix2(usize),
    Minus,
    Plus,
}

fn lower_slot(m: usize, n: usize) -> Option<Slot> {
    Some(match (m, n) {
        (k, l) if k == l && (1..=4).contains(&k) => Slot::Population(k - 1),
        (3, 1) => Slot::Mix1(0),
        (4, 2) => Slot::Mix1(1),
        (2, 1) => Slot::Mix2(0),
        (4, 3) => Slot::Mix2(1),
        (3, 2) => Slot::Minus,
        (4, 1) => Slot::Plus,
        _ => return None,
    })
}

fn check_index(m: usize, n: usize) -> Result<()> {
    if (1..=4).contains(&m) && (1..=4).contains(&n) {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { m, n, dim: 4 })
    }
}

/// Coefficient of `[ρ₀]_{kl}` in `[ρ_t]_{mn}`; zero across clusters.
pub fn amplitude(t: f64, m: usize, n: usize, k: usize, l: usize, rd: &ResonanceData) -> Result<Complex64> {
    check_index(m, n)?;
    check_index(k, l)?;
    if m < n {
        if k > l {
            return Ok(Complex64::default());
        }
        return Ok(amplitude(t, n, m, l, k, rd)?.conj());
    }
    let (Some(a), Some(b)) = (lower_slot(m, n), lower_slot(k, l)) else {
        return Ok(Complex64::default());
    };
    Ok(match (a, b) {
        (Slot::Population(i), Slot::Population(j)) => c(population_matrix(t, rd)[i][j]),
        (Slot::Mix1(i), Slot::Mix1(j)) => block_propagator(t, &rd.eps_2b1, rd.y, rd.e2, &rd.block_2b1)[i][j],
        (Slot::Mix2(i), Slot::Mix2(j)) => block_propagator(t, &rd.eps_2b2, rd.y_prime, rd.e1, &rd.block_2b2)[i][j],
        (Slot::Minus, Slot::Minus) => (I * t * rd.eps_minus).exp(),
        (Slot::Plus, Slot::Plus) => (I * t * rd.eps_plus).exp(),
        _ => Complex64::default(),
    })
}

fn generator_entry(m: usize, n: usize, k: usize, l: usize, rd: &ResonanceData) -> Complex64 {
    if m < n {
        if k > l {
            return Complex64::default();
        }
        return generator_entry(n, m, l, k, rd).conj();
    }
    let (Some(a), Some(b)) = (lower_slot(m, n), lower_slot(k, l)) else {
        return Complex64::default();
    };
    match (a, b) {
        (Slot::Population(i), Slot::Population(j)) => {
            let modes = population_modes(rd);
            c(-(rd.delta2 * modes[1][i][j] + rd.delta3 * modes[2][i][j] + rd.delta4 * modes[3][i][j]))
        }
        (Slot::Mix1(i), Slot::Mix1(j)) => I * rd.block_2b1[i][j],
        (Slot::Mix2(i), Slot::Mix2(j)) => I * rd.block_2b2[i][j],
        (Slot::Minus, Slot::Minus) => I * rd.eps_minus,
        (Slot::Plus, Slot::Plus) => I * rd.eps_plus,
        _ => Complex64::default(),
    }
}

/// `G_C = d/dt A_C(t)` at `t = 0`, rows and columns in the order of
/// `cluster.pairs`. `exp(tG_C)` reproduces [`amplitude`] on the cluster.
pub fn cluster_generator(cluster: &Cluster, rd: &ResonanceData) -> Result<DMatrix<Complex64>> {
    let k = cluster.pairs.len();
    if k == 0 {
        return Err(Error::invalid("cluster", "cluster has no index pairs"));
    }
    for &(m, n) in &cluster.pairs {
        check_index(m, n)?;
    }
    Ok(DMatrix::from_fn(k, k, |i, j| {
        let (m, n) = cluster.pairs[i];
        let (p, q) = cluster.pairs[j];
        generator_entry(m, n, p, q, rd)
    }))
}
