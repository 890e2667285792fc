//! Experiment configuration, figure protocols, parameter sweeps and output.
//!
//! A run is described by an [`ExperimentConfig`] read from TOML. Every sweep
//! point is an independent trajectory of the resonance propagator sampled on
//! a [`TimeGrid`]; points are evaluated in parallel and assembled in sorted
//! order, so identical configs give bitwise-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Matrix4;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{concurrence_report, initial_state, InitialState};
use crate::error::{Error, Result};
use crate::propagator::{evolve, resonance_data, DensityMatrix4};
use crate::rates::{lowest_order_rates, CouplingSet};
use crate::spectral::{FormFactor, SpectralData, DEFAULT_CUTOFF};
use crate::system::SystemParams;

/// Default number of grid points.
pub const DEFAULT_POINTS: usize = 2000;
/// Default end of the grid in units of `ϰ⁻²`.
pub const DEFAULT_HORIZON: f64 = 4.0;
/// Default start of the grid in units of `ϰ⁻²`.
pub const DEFAULT_START: f64 = 1e-3;
/// The grid is logarithmic below `LOG_SPLIT/ϰ²` and linear above.
pub const LOG_SPLIT: f64 = 0.1;
const LOG_SHARE: f64 = 0.2;
/// Concurrence below `UNRELIABLE_FACTOR·ϰ²` is within the approximation error.
pub const UNRELIABLE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    /// Base couplings; sweep lists replace the swept entries.
    pub couplings: CouplingSet,
    pub sweep: SweepRanges,
    pub time: TimeGridSpec,
    pub initial_state: InitialState,
    pub spectral: SpectralConfig,
    pub bounds: BoundsConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: SystemParams::new(1.0, 1.25, 1.0).expect("valid defaults"),
            couplings: CouplingSet::default(),
            sweep: SweepRanges::default(),
            time: TimeGridSpec::default(),
            initial_state: InitialState::Braun,
            spectral: SpectralConfig::default(),
            bounds: BoundsConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Values for the symmetric couplings. `lambda` sets `λ = μ` on both qubits.
/// `nu_over_kappa` gives `ν` relative to each `κ` and excludes `nu`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepRanges {
    pub kappa: Option<Vec<f64>>,
    pub nu: Option<Vec<f64>>,
    pub nu_over_kappa: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rescaling {
    #[default]
    None,
    /// `κ²t`
    Kappa2,
    /// `(κ²+ν²)t`
    Kappa2PlusNu2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeGridSpec {
    /// Absolute start; defaults to `10⁻³/ϰ²`.
    pub t_start: Option<f64>,
    /// Absolute end; defaults to `horizon/ϰ²`.
    pub t_end: Option<f64>,
    pub horizon: f64,
    pub n_points: usize,
    pub rescaling: Rescaling,
}

impl Default for TimeGridSpec {
    fn default() -> Self {
        TimeGridSpec {
            t_start: None,
            t_end: None,
            horizon: DEFAULT_HORIZON,
            n_points: DEFAULT_POINTS,
            rescaling: Rescaling::None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMode {
    #[default]
    Renormalized,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub mode: SpectralMode,
    /// Energy-conserving form factor, used in raw mode.
    pub f: FormFactor,
    /// Energy-exchange form factor, used in raw mode.
    pub g: FormFactor,
    pub u_c: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            mode: SpectralMode::Renormalized,
            f: FormFactor::default_conserving(),
            g: FormFactor::default_exchange(),
            u_c: DEFAULT_CUTOFF,
        }
    }
}

impl SpectralConfig {
    pub fn data(&self, sys: &SystemParams) -> Result<SpectralData> {
        match self.mode {
            SpectralMode::Renormalized => Ok(SpectralData::renormalized(sys)),
            SpectralMode::Raw => SpectralData::from_form_factors(sys, &self.f, &self.g, self.u_c),
        }
    }
}

/// Initial population `p` and the undetermined constants of the
/// disentanglement-time bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub p: f64,
    pub c_a: f64,
    pub c_b: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            p: 0.5,
            c_a: 1.0,
            c_b: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            prefix: "series".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.couplings.validate()?;
        let t = &self.time;
        if t.n_points < 2 {
            return Err(Error::Config(format!(
                "time.n_points must be at least 2, got {}",
                t.n_points
            )));
        }
        if !(t.horizon > 0.0) || !t.horizon.is_finite() {
            return Err(Error::Config("time.horizon must be positive".into()));
        }
        if let (Some(a), Some(b)) = (t.t_start, t.t_end) {
            if !(a < b) {
                return Err(Error::Config(format!(
                    "time.t_start = {a} must be below time.t_end = {b}"
                )));
            }
        }
        for (name, list) in [
            ("kappa", &self.sweep.kappa),
            ("nu", &self.sweep.nu),
            ("nu_over_kappa", &self.sweep.nu_over_kappa),
            ("lambda", &self.sweep.lambda),
        ] {
            if let Some(v) = list {
                if v.is_empty() {
                    return Err(Error::Config(format!("sweep.{name} must not be empty")));
                }
                if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::Config(format!(
                        "sweep.{name} entries must be finite and non-negative"
                    )));
                }
            }
        }
        if self.sweep.nu.is_some() && self.sweep.nu_over_kappa.is_some() {
            return Err(Error::Config("sweep.nu and sweep.nu_over_kappa are exclusive".into()));
        }
        if !self.couplings.is_symmetric() && self.sweep != SweepRanges::default() {
            return Err(Error::Config("sweeps need qubit-symmetric base couplings".into()));
        }
        initial_state(&self.initial_state)?;
        Ok(())
    }

    /// Sweep points sorted by `(κ, ν, λ)` without duplicates.
    pub fn points(&self) -> Vec<CouplingSet> {
        let base = self.couplings;
        let kappas = self.sweep.kappa.clone().unwrap_or_else(|| vec![base.kappa1]);
        let lambdas = self.sweep.lambda.clone();
        let mut pts = Vec::new();
        for &k in &kappas {
            let nus: Vec<f64> = match (&self.sweep.nu, &self.sweep.nu_over_kappa) {
                (Some(n), _) => n.clone(),
                (None, Some(r)) => r.iter().map(|x| x * k).collect(),
                (None, None) => vec![base.nu1],
            };
            for &n in &nus {
                match &lambdas {
                    Some(ls) => {
                        for &l in ls {
                            pts.push(with_symmetric(base, Some(k), Some(n), Some(l)));
                        }
                    }
                    None => pts.push(with_symmetric(base, Some(k), Some(n), None)),
                }
            }
        }
        pts.sort_by(|a, b| sweep_key(a).partial_cmp(&sweep_key(b)).expect("finite couplings"));
        pts.dedup();
        pts
    }
}

fn with_symmetric(mut c: CouplingSet, kappa: Option<f64>, nu: Option<f64>, lambda: Option<f64>) -> CouplingSet {
    if let Some(k) = kappa {
        c.kappa1 = k;
        c.kappa2 = k;
    }
    if let Some(n) = nu {
        c.nu1 = n;
        c.nu2 = n;
    }
    if let Some(l) = lambda {
        c.lambda1 = l;
        c.lambda2 = l;
        c.mu1 = l;
        c.mu2 = l;
    }
    c
}

fn sweep_key(c: &CouplingSet) -> (f64, f64, f64, f64) {
    (c.kappa1, c.nu1, c.lambda1, c.mu1)
}

/// Sample times with their rescaled counterparts.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t: Vec<f64>,
    pub rescaled: Vec<f64>,
}

impl TimeGrid {
    /// Logarithmic spacing below `0.1/ϰ²`, linear above; explicit bounds in
    /// `spec` override the defaults.
    pub fn new(spec: &TimeGridSpec, c: &CouplingSet) -> Result<Self> {
        let k2 = c.kappa_max().powi(2);
        let scale = |x: f64| if k2 > 0.0 { Some(x / k2) } else { None };
        let need = || Error::Config("all couplings vanish: set time.t_start and time.t_end".into());
        let t0 = spec.t_start.or_else(|| scale(DEFAULT_START)).ok_or_else(need)?;
        let t1 = spec.t_end.or_else(|| scale(spec.horizon)).ok_or_else(need)?;
        if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() || t0 < 0.0 {
            return Err(Error::Config(format!("time grid [{t0}, {t1}] is empty or invalid")));
        }
        let n = spec.n_points;
        let split = scale(LOG_SPLIT).filter(|&s| s > t0 && s < t1 && t0 > 0.0);
        let t = match split {
            Some(s) => {
                let n_log = ((n as f64 * LOG_SHARE).round() as usize).clamp(1, n - 1);
                let (l0, l1) = (t0.ln(), s.ln());
                let mut t: Vec<f64> = (0..n_log)
                    .map(|i| (l0 + (l1 - l0) * i as f64 / n_log as f64).exp())
                    .collect();
                t[0] = t0;
                let n_lin = n - n_log;
                t.extend((0..n_lin).map(|i| {
                    if i + 1 == n_lin {
                        t1
                    } else {
                        s + (t1 - s) * i as f64 / (n_lin - 1).max(1) as f64
                    }
                }));
                t
            }
            None => linspace(t0, t1, n),
        };
        let factor = match spec.rescaling {
            Rescaling::None => 1.0,
            Rescaling::Kappa2 => c.kappa1 * c.kappa1,
            Rescaling::Kappa2PlusNu2 => c.kappa1 * c.kappa1 + c.nu1 * c.nu1,
        };
        let rescaled = t.iter().map(|x| x * factor).collect();
        Ok(TimeGrid { t, rescaled })
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub rescaled_t: f64,
    pub rho: DensityMatrix4,
    pub concurrence: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub label: String,
    pub couplings: CouplingSet,
    pub rows: Vec<SeriesRow>,
}

/// One line of a summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub label: String,
    pub kappa: f64,
    pub nu: f64,
    pub lambda: f64,
    pub c_max: f64,
    pub t_max: f64,
    pub rescaled_t_max: f64,
    /// Largest local maximum after concurrence first stops decreasing
    /// past the main peak.
    pub revival_t: Option<f64>,
    pub revival_c: Option<f64>,
    /// `t_max(λ) − t_max(λ=0)` at the same `κ, ν`.
    pub delta_t: Option<f64>,
    /// `c_max < 10ϰ²`
    pub unreliable: bool,
    /// `ln(ϰ⁻²)/γ` for `γ^th, γ₂..γ₅^dec`.
    pub horizons: [Option<f64>; 5],
}

fn label(c: &CouplingSet) -> String {
    format!("k{}_n{}_l{}", short(c.kappa1), short(c.nu1), short(c.lambda1))
}

/// Ten decimals with trailing zeros removed, so `0.05·0.12` reads `0.006`.
fn short(x: f64) -> String {
    let s = format!("{x:.10}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Trajectory of one coupling point on its default grid.
pub fn simulate(cfg: &ExperimentConfig, c: &CouplingSet, sd: &SpectralData) -> Result<TimeSeries> {
    let grid = TimeGrid::new(&cfg.time, c)?;
    let rd = resonance_data(c, sd, &cfg.system)?;
    let rho0 = initial_state(&cfg.initial_state)?;
    let kmax = c.kappa_max();
    let rows = grid
        .t
        .par_iter()
        .zip(grid.rescaled.par_iter())
        .map(|(&t, &rt)| {
            let rho = evolve(&rho0, t, &rd);
            let rep = concurrence_report(&rho, kmax)?;
            let min_eig = rho.min_eigenvalue();
            Ok(SeriesRow {
                t,
                rescaled_t: rt,
                rho,
                concurrence: rep.value,
                min_eig,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries {
        label: label(c),
        couplings: *c,
        rows,
    })
}

/// Peak, revival and validity horizons of a series.
pub fn summarize(ts: &TimeSeries, sd: &SpectralData, sys: &SystemParams) -> SeriesSummary {
    let c: Vec<f64> = ts.rows.iter().map(|r| r.concurrence).collect();
    let imax = c
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > c[best] { i } else { best });
    let (mut revival_t, mut revival_c) = (None, None);
    if !c.is_empty() {
        let mut j = imax;
        while j + 1 < c.len() && c[j + 1] < c[j] {
            j += 1;
        }
        if j + 1 < c.len() {
            let k = (j + 1..c.len()).fold(j + 1, |best, i| if c[i] > c[best] { i } else { best });
            if c[k] > 0.0 && k + 1 < c.len() {
                revival_t = Some(ts.rows[k].t);
                revival_c = Some(c[k]);
            }
        }
    }
    let cp = &ts.couplings;
    let kmax = cp.kappa_max();
    let (c_max, t_max, rescaled_t_max) = match ts.rows.get(imax) {
        Some(r) => (r.concurrence, r.t, r.rescaled_t),
        None => (0.0, f64::NAN, f64::NAN),
    };
    SeriesSummary {
        label: ts.label.clone(),
        kappa: cp.kappa1,
        nu: cp.nu1,
        lambda: cp.lambda1,
        c_max,
        t_max,
        rescaled_t_max,
        revival_t,
        revival_c,
        delta_t: None,
        unreliable: c_max < UNRELIABLE_FACTOR * kmax * kmax,
        horizons: lowest_order_rates(cp, sd, sys).validity_horizons(),
    }
}

/// Series for every sweep point, in sorted order.
pub fn simulate_all(cfg: &ExperimentConfig) -> Result<Vec<TimeSeries>> {
    cfg.validate()?;
    let sd = cfg.spectral.data(&cfg.system)?;
    cfg.points().par_iter().map(|c| simulate(cfg, c, &sd)).collect()
}

/// Summary table over the sweep points, sorted by `(κ, ν, λ)`.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SeriesSummary>> {
    cfg.validate()?;
    let sd = cfg.spectral.data(&cfg.system)?;
    let mut out = cfg
        .points()
        .par_iter()
        .map(|c| simulate(cfg, c, &sd).map(|ts| summarize(&ts, &sd, &cfg.system)))
        .collect::<Result<Vec<_>>>()?;
    if cfg.sweep.lambda.is_some() {
        fill_delta_t(&mut out);
    }
    Ok(out)
}

fn fill_delta_t(rows: &mut [SeriesSummary]) {
    let refs: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.lambda == 0.0)
        .map(|r| (r.kappa, r.nu, r.t_max))
        .collect();
    for r in rows.iter_mut() {
        r.delta_t = refs
            .iter()
            .find(|(k, n, _)| *k == r.kappa && *n == r.nu)
            .map(|(_, _, t0)| r.t_max - t0);
    }
}

/// Series and summaries produced for one figure.
#[derive(Debug, Clone)]
pub struct FigureOutput {
    pub figure: u8,
    pub series: Vec<TimeSeries>,
    pub summaries: Vec<SeriesSummary>,
}

/// Default configuration for figure `n`.
pub fn figure_config(n: u8) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    cfg.output.prefix = format!("fig{n}");
    let s = &mut cfg.sweep;
    match n {
        1 => {
            s.kappa = Some(vec![0.01, 0.1, 1.0]);
            cfg.time.rescaling = Rescaling::Kappa2;
        }
        2 => {
            s.kappa = Some(vec![0.01, 0.02]);
            s.nu_over_kappa = Some((0..=24).map(|i| 0.05 * i as f64).collect());
            cfg.time.rescaling = Rescaling::Kappa2;
        }
        3 => {
            s.kappa = Some(vec![0.02, 0.03, 0.05, 0.1]);
            s.nu = Some(vec![0.005]);
            cfg.time.rescaling = Rescaling::Kappa2PlusNu2;
        }
        4 | 6 => {
            s.kappa = Some(vec![0.02]);
            s.nu = Some(vec![0.0]);
            s.lambda = Some(vec![0.0, 0.0005, 0.001, 0.002, 0.003]);
        }
        5 => {
            s.kappa = Some(vec![0.02]);
            s.nu = Some(vec![0.0, 0.01]);
            s.lambda = Some((0..=16).map(|i| 0.00025 * i as f64).collect());
        }
        _ => return Err(Error::Config(format!("figure must be 1..6, got {n}"))),
    }
    Ok(cfg)
}

fn check_protocol(n: u8, cfg: &ExperimentConfig, pts: &[CouplingSet]) -> Result<()> {
    let bad = |why: &str| Err(Error::Config(format!("figure {n}: {why}")));
    match n {
        1 if pts.iter().any(|c| c.lambda1 != 0.0 || c.mu1 != 0.0 || c.nu1 != 0.0) => bad("needs λ = μ = ν = 0"),
        2 | 3 if pts.iter().any(|c| c.lambda1 != 0.0 || c.mu1 != 0.0) => bad("needs λ = μ = 0"),
        3 if pts.iter().any(|c| c.kappa1 <= c.nu1) => bad("needs κ > ν"),
        4 | 6 if pts.iter().any(|c| c.nu1 != 0.0) => bad("needs ν = 0"),
        5 if !pts.iter().any(|c| c.lambda1 == 0.0) => bad("λ sweep must contain 0 for the time shift"),
        1..=6 if pts.iter().any(|c| c.lambda1 != c.mu1) => bad("needs λ = μ"),
        1..=6 => match cfg.initial_state {
            InitialState::Braun => Ok(()),
            _ => bad("starts from the Braun product state"),
        },
        _ => Err(Error::Config(format!("figure must be 1..6, got {n}"))),
    }
}

/// Run the protocol of figure `n` with the sweep given in `cfg`.
///
/// Figure 2 returns series only for the smallest `κ` (panel a) and summaries
/// for every point (panel b). Figure 5 carries `delta_t` in its summaries.
pub fn run_figure(n: u8, cfg: &ExperimentConfig) -> Result<FigureOutput> {
    cfg.validate()?;
    let pts = cfg.points();
    check_protocol(n, cfg, &pts)?;
    let sd = cfg.spectral.data(&cfg.system)?;
    let series = pts
        .par_iter()
        .map(|c| simulate(cfg, c, &sd))
        .collect::<Result<Vec<_>>>()?;
    let mut summaries: Vec<SeriesSummary> = series.iter().map(|ts| summarize(ts, &sd, &cfg.system)).collect();
    if cfg.sweep.lambda.is_some() {
        fill_delta_t(&mut summaries);
    }
    let series = if n == 2 {
        let k0 = pts[0].kappa1;
        series.into_iter().filter(|s| s.couplings.kappa1 == k0).collect()
    } else {
        series
    };
    Ok(FigureOutput {
        figure: n,
        series,
        summaries,
    })
}

const UPPER: [(usize, usize); 6] = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

/// Column names of a series CSV.
pub fn series_header() -> Vec<String> {
    let mut h = vec!["t".to_string(), "rescaled_t".to_string()];
    let diag = (1..=4).map(|i| (i, i));
    for (m, n) in UPPER.into_iter().chain(diag) {
        h.push(format!("re_rho{m}{n}"));
        h.push(format!("im_rho{m}{n}"));
    }
    h.push("concurrence".into());
    h.push("min_eig".into());
    h
}

/// 17 significant digits, enough to recover every `f64` exactly.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_series_csv(path: &Path, ts: &TimeSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(series_header()).map_err(csv_err(path))?;
    for r in &ts.rows {
        let mut rec = vec![num(r.t), num(r.rescaled_t)];
        let diag = (1..=4).map(|i| (i, i));
        for (m, n) in UPPER.into_iter().chain(diag) {
            let z = r.rho.get(m, n);
            rec.push(num(z.re));
            rec.push(num(z.im));
        }
        rec.push(num(r.concurrence));
        rec.push(num(r.min_eig));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// A parsed series CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub rescaled_t: f64,
    /// Upper off-diagonal entries then the diagonal, as in the header.
    pub entries: [Complex64; 10],
    pub concurrence: f64,
    pub min_eig: f64,
}

impl CsvRow {
    /// Rebuild the Hermitian matrix from the stored entries.
    pub fn density_matrix(&self) -> Result<DensityMatrix4> {
        let mut m = Matrix4::<Complex64>::zeros();
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            m[(i - 1, j - 1)] = self.entries[k];
        }
        for i in 0..4 {
            m[(i, i)] = self.entries[6 + i];
        }
        DensityMatrix4::from_upper(m)
    }
}

pub fn read_series_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    if header != series_header() {
        return Err(Error::Config(format!("{}: unexpected header", path.display())));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let v = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let entries = std::array::from_fn(|k| Complex64::new(v[2 + 2 * k], v[3 + 2 * k]));
        out.push(CsvRow {
            t: v[0],
            rescaled_t: v[1],
            entries,
            concurrence: v[22],
            min_eig: v[23],
        });
    }
    Ok(out)
}

pub fn write_summary_csv(path: &Path, rows: &[SeriesSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header: Vec<String> = [
        "label",
        "kappa",
        "nu",
        "lambda",
        "c_max",
        "t_max",
        "rescaled_t_max",
        "revival_t",
        "revival_c",
        "delta_t",
        "unreliable",
    ]
    .map(String::from)
    .to_vec();
    header.extend(["th", "dec2", "dec3", "dec4", "dec5"].map(|s| format!("horizon_{s}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for r in rows {
        let mut rec = vec![
            r.label.clone(),
            num(r.kappa),
            num(r.nu),
            num(r.lambda),
            num(r.c_max),
            num(r.t_max),
            num(r.rescaled_t_max),
            opt(r.revival_t),
            opt(r.revival_c),
            opt(r.delta_t),
            r.unreliable.to_string(),
        ];
        rec.extend(r.horizons.iter().map(|h| opt(*h)));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    /// CSV files plus a matplotlib script that reads them.
    Plot,
}

/// Write one CSV per series, a summary CSV and, for [`OutputFormat::Plot`],
/// a plot script. Returns the written paths.
pub fn emit(
    dir: &Path,
    prefix: &str,
    series: &[TimeSeries],
    summaries: &[SeriesSummary],
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for ts in series {
        let p = dir.join(format!("{prefix}_{}.csv", ts.label));
        write_series_csv(&p, ts)?;
        written.push(p);
    }
    let summary = dir.join(format!("{prefix}_summary.csv"));
    write_summary_csv(&summary, summaries)?;
    if format == OutputFormat::Plot {
        let files: Vec<String> = written
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect();
        let script = dir.join(format!("{prefix}_plot.py"));
        fs::write(&script, plot_script(prefix, &files)).map_err(io_err(&script))?;
        written.push(script);
    }
    written.push(summary);
    Ok(written)
}

/// Python source plotting concurrence against rescaled time for each file,
/// all on one figure, and a normalized `C/C_max` panel.
pub fn plot_script(prefix: &str, csv_files: &[String]) -> String {
    let mut s = String::new();
    s.push_str(
        "import csv\nimport os\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n",
    );
    s.push_str("HERE = os.path.dirname(os.path.abspath(__file__))\nFILES = [\n");
    for f in csv_files {
        let _ = writeln!(s, "    {f:?},");
    }
    s.push_str("]\n\n");
    s.push_str(
        "fig, (ax, axn) = plt.subplots(1, 2, figsize=(11, 4))\n\
         for name in FILES:\n\
         \x20   with open(os.path.join(HERE, name)) as fh:\n\
         \x20       rows = list(csv.DictReader(fh))\n\
         \x20   x = [float(r[\"rescaled_t\"]) for r in rows]\n\
         \x20   c = [float(r[\"concurrence\"]) for r in rows]\n\
         \x20   top = max(c) if c and max(c) > 0 else 1.0\n\
         \x20   ax.plot(x, c, label=name)\n\
         \x20   axn.plot(x, [v / top for v in c], label=name)\n\
         ax.set_xlabel(\"rescaled t\")\n\
         ax.set_ylabel(\"C\")\n\
         axn.set_xlabel(\"rescaled t\")\n\
         axn.set_ylabel(\"C / C_max\")\n\
         ax.legend(fontsize=6)\n\
         fig.tight_layout()\n",
    );
    let _ = writeln!(s, "fig.savefig(os.path.join(HERE, {:?}))", format!("{prefix}.png"));
    s
}
