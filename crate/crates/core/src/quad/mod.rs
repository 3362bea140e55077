//! Integration of `(n, n)`-densities over `ℙⁿ`.
//!
//! Densities are pulled back to one affine chart `ζ_c = 1` and integrated
//! against Lebesgue measure on `Cⁿ = R^{2n}`. The factor converting the
//! top-blade coefficient into that measure is not fixed by hand: it is
//! pinned by [`calibrate`], which integrates `α_{1,1}ⁿ`.
//!
//! Monte Carlo runs are split into fixed blocks of samples, each drawn from
//! its own ChaCha stream and reduced in block order, so the estimate depends
//! only on the seed and not on the thread count.

mod calibrate;
mod certify;

pub use calibrate::{calibrate, conventional_constant, Calibration, CalibrationStore};
pub use certify::{
    certify_integral, nearest_rational, regularized_residual_study, reproduce_section,
    CoefficientEstimate, EpsRow, IntegralCertificate, NearestRational, DEFAULT_EPS,
    RATIONAL_DENOMINATOR,
};

use std::f64::consts::PI;
use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certsolver::SolverError;
use crate::polyring::PolyError;
use crate::projkernel::{KernelError, KernelPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Log-polar product grid; `n = 1` only.
    ChartGrid,
    /// Independent per-coordinate importance sampling in the chart.
    ChartMonteCarlo,
    /// Fubini–Study sampling through the unit sphere of `C^{n+1}`.
    SphereMonteCarlo,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::ChartGrid => "chart-grid",
            Strategy::ChartMonteCarlo => "chart-montecarlo",
            Strategy::SphereMonteCarlo => "sphere-montecarlo",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = QuadError;
    fn from_str(s: &str) -> Result<Self, QuadError> {
        match s {
            "chart-grid" | "grid" => Ok(Strategy::ChartGrid),
            "chart-montecarlo" | "chart-mc" => Ok(Strategy::ChartMonteCarlo),
            "sphere-montecarlo" | "sphere-mc" => Ok(Strategy::SphereMonteCarlo),
            _ => Err(QuadError::Config(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("{rejected} of {total} samples rejected")]
    TooManyRejections { rejected: usize, total: usize },
    #[error("standard error {std_error:.3e} above threshold {threshold:.3e}")]
    NotConverged { std_error: f64, threshold: f64 },
    #[error("no calibration stored for n = {n}, strategy {strategy}")]
    NotCalibrated { n: usize, strategy: Strategy },
    #[error("calibration failed: {0}")]
    CalibrationFailed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub strategy: Strategy,
    pub samples: usize,
    pub seed: u64,
    pub eps: Option<f64>,
    pub eps_sequence: Option<Vec<f64>>,
    /// Affine chart `ζ_chart = 1`.
    pub chart: usize,
    /// Fail when any estimate has a larger standard error.
    pub max_std_error: Option<f64>,
    /// Fail when more than this fraction of draws is rejected.
    pub max_rejection_fraction: f64,
    /// Worker threads; `None` uses the global pool. Has no effect on results.
    pub threads: Option<usize>,
}

impl QuadConfig {
    pub fn new(strategy: Strategy, samples: usize, seed: u64) -> Self {
        QuadConfig {
            strategy,
            samples,
            seed,
            eps: None,
            eps_sequence: None,
            chart: 0,
            max_std_error: None,
            max_rejection_fraction: 0.01,
            threads: None,
        }
    }

    pub fn with_eps(mut self, eps: Option<f64>) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self, n: usize) -> Result<(), QuadError> {
        if self.samples == 0 {
            return Err(QuadError::Config("samples must be at least 1".into()));
        }
        if self.strategy == Strategy::ChartGrid && n != 1 {
            return Err(QuadError::Config(format!(
                "chart-grid needs n = 1, got n = {n}"
            )));
        }
        if self.chart > n {
            return Err(QuadError::Config(format!(
                "chart {} out of range for n = {n}",
                self.chart
            )));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(QuadError::Config("eps must be positive".into()));
            }
        }
        if let Some(seq) = &self.eps_sequence {
            if seq.is_empty() || seq.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                return Err(QuadError::Config(
                    "eps sequence must be nonempty and positive".into(),
                ));
            }
            if seq.windows(2).any(|w| w[1] >= w[0]) {
                return Err(QuadError::Config(
                    "eps sequence must be strictly decreasing".into(),
                ));
            }
        }
        if self.threads == Some(0) {
            return Err(QuadError::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: Complex64,
    /// Monte Carlo standard error, or the fine/coarse grid difference.
    pub std_error: f64,
    pub samples_used: usize,
    pub rejected: usize,
}

impl IntegralEstimate {
    pub fn scaled(&self, c: Complex64) -> IntegralEstimate {
        IntegralEstimate {
            value: self.value * c,
            std_error: self.std_error * c.norm(),
            ..*self
        }
    }
}

const BLOCK: usize = 2048;
const MAX_REDRAWS: usize = 16;

/// Chart point `ζ` (with `ζ_chart = 1`) from chart coordinates `t`.
fn chart_point(t: &[Complex64], chart: usize) -> Vec<Complex64> {
    let mut z = Vec::with_capacity(t.len() + 1);
    z.extend_from_slice(&t[..chart]);
    z.push(Complex64::new(1.0, 0.0));
    z.extend_from_slice(&t[chart..]);
    z
}

/// One draw: chart coordinates and their sampling density.
fn draw(strategy: Strategy, n: usize, rng: &mut ChaCha8Rng) -> (Vec<Complex64>, f64) {
    match strategy {
        Strategy::SphereMonteCarlo => {
            let x: Vec<Complex64> = (0..=n)
                .map(|_| {
                    Complex64::new(
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    )
                })
                .collect();
            let t: Vec<Complex64> = x[1..].iter().map(|v| v / x[0]).collect();
            let s: f64 = 1.0 + t.iter().map(Complex64::norm_sqr).sum::<f64>();
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            (t, fact / PI.powi(n as i32) * s.powi(-(n as i32 + 1)))
        }
        Strategy::ChartMonteCarlo | Strategy::ChartGrid => {
            let mut p = 1.0;
            let t = (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    let s = u / (1.0 - u);
                    let th = 2.0 * PI * rng.random::<f64>();
                    p *= 1.0 / (PI * (1.0 + s) * (1.0 + s));
                    Complex64::from_polar(s.sqrt(), th)
                })
                .collect();
            (t, p)
        }
    }
}

struct BlockSum {
    sum: Vec<Complex64>,
    sumsq: Vec<f64>,
    count: usize,
    rejected: usize,
}

fn run_in_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, QuadError> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| QuadError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn check_rejections(rejected: usize, total: usize, config: &QuadConfig) -> Result<(), QuadError> {
    if rejected as f64 > config.max_rejection_fraction * total.max(1) as f64 {
        return Err(QuadError::TooManyRejections { rejected, total });
    }
    Ok(())
}

fn monte_carlo<F>(
    n: usize,
    dim: usize,
    config: &QuadConfig,
    density: &F,
) -> Result<Vec<IntegralEstimate>, QuadError>
where
    F: Fn(&[Complex64]) -> Option<Vec<Complex64>> + Sync,
{
    let nblocks = config.samples.div_ceil(BLOCK);
    let blocks: Vec<BlockSum> = run_in_pool(config.threads, || {
        (0..nblocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(b as u64);
                let count = BLOCK.min(config.samples - b * BLOCK);
                let mut acc = BlockSum {
                    sum: vec![Complex64::new(0.0, 0.0); dim],
                    sumsq: vec![0.0; dim],
                    count,
                    rejected: 0,
                };
                for _ in 0..count {
                    for _ in 0..MAX_REDRAWS {
                        let (t, p) = draw(config.strategy, n, &mut rng);
                        let zeta = chart_point(&t, config.chart);
                        match density(&zeta) {
                            Some(v) if v.iter().all(|x| x.is_finite()) && p > 0.0 => {
                                for (k, x) in v.iter().enumerate() {
                                    let w = x / p;
                                    acc.sum[k] += w;
                                    acc.sumsq[k] += w.norm_sqr();
                                }
                                break;
                            }
                            _ => acc.rejected += 1,
                        }
                    }
                }
                acc
            })
            .collect()
    })?;
    let mut sum = vec![Complex64::new(0.0, 0.0); dim];
    let mut sumsq = vec![0.0; dim];
    let (mut count, mut rejected) = (0, 0);
    for b in &blocks {
        for k in 0..dim {
            sum[k] += b.sum[k];
            sumsq[k] += b.sumsq[k];
        }
        count += b.count;
        rejected += b.rejected;
    }
    check_rejections(rejected, count + rejected, config)?;
    let nf = count as f64;
    Ok((0..dim)
        .map(|k| {
            let mean = sum[k] / nf;
            let var = if count > 1 {
                ((sumsq[k] / nf - mean.norm_sqr()) * nf / (nf - 1.0)).max(0.0)
            } else {
                0.0
            };
            IntegralEstimate {
                value: mean,
                std_error: (var / nf).sqrt(),
                samples_used: count,
                rejected,
            }
        })
        .collect())
}

/// Half-width of the log-radius range covered by the grid.
const GRID_LOG_RADIUS: f64 = 18.0;
const GRID_ORDER: usize = 16;

fn grid_sum<F>(
    panels: usize,
    nphi: usize,
    config: &QuadConfig,
    dim: usize,
    density: &F,
) -> Result<(Vec<Complex64>, usize, usize), QuadError>
where
    F: Fn(&[Complex64]) -> Option<Vec<Complex64>> + Sync,
{
    let rule = GaussLegendre::new(NonZeroUsize::new(GRID_ORDER).expect("nonzero order"));
    let h = 2.0 * GRID_LOG_RADIUS / panels as f64;
    let radial: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let a = -GRID_LOG_RADIUS + p as f64 * h;
            rule.as_node_weight_pairs()
                .iter()
                .map(move |(x, w)| (a + 0.5 * h * (x + 1.0), 0.5 * h * w))
        })
        .collect();
    let dphi = 2.0 * PI / nphi as f64;
    // each radial ring is one unit of parallel work
    let rings: Vec<(Vec<Complex64>, usize)> = run_in_pool(config.threads, || {
        radial
            .par_iter()
            .map(|&(u, wu)| {
                let r = u.exp();
                let mut acc = vec![Complex64::new(0.0, 0.0); dim];
                let mut rejected = 0;
                for j in 0..nphi {
                    let phi = (j as f64 + 0.5) * dphi;
                    let zeta = chart_point(&[Complex64::from_polar(r, phi)], config.chart);
                    match density(&zeta) {
                        Some(v) if v.iter().all(|x| x.is_finite()) => {
                            // dx dy = r² du dφ
                            let w = wu * dphi * r * r;
                            for (a, x) in acc.iter_mut().zip(&v) {
                                *a += x * w;
                            }
                        }
                        _ => rejected += 1,
                    }
                }
                (acc, rejected)
            })
            .collect()
    })?;
    let mut total = vec![Complex64::new(0.0, 0.0); dim];
    let mut rejected = 0;
    for (acc, rej) in &rings {
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
        rejected += rej;
    }
    Ok((total, radial.len() * nphi, rejected))
}

fn chart_grid<F>(
    dim: usize,
    config: &QuadConfig,
    density: &F,
) -> Result<Vec<IntegralEstimate>, QuadError>
where
    F: Fn(&[Complex64]) -> Option<Vec<Complex64>> + Sync,
{
    let panels = ((config.samples as f64).sqrt() / GRID_ORDER as f64)
        .ceil()
        .max(16.0) as usize;
    let nphi = (config.samples.div_ceil(panels * GRID_ORDER))
        .max(8)
        .next_multiple_of(2);
    let (fine, used, rej) = grid_sum(panels, nphi, config, dim, density)?;
    let (coarse, used_c, rej_c) = grid_sum(panels.div_ceil(2), nphi / 2, config, dim, density)?;
    check_rejections(rej + rej_c, used + used_c, config)?;
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| IntegralEstimate {
            value: *f,
            std_error: (f - c).norm(),
            samples_used: used,
            rejected: rej,
        })
        .collect())
}

/// `∫ density dV` over the chart, Lebesgue measure on `Cⁿ`, for a vector of
/// densities at once. The callback receives `ζ` with `ζ_chart = 1` and
/// returns `None` to reject a point.
pub fn integrate_raw<F>(
    n: usize,
    dim: usize,
    config: &QuadConfig,
    density: F,
) -> Result<Vec<IntegralEstimate>, QuadError>
where
    F: Fn(&[Complex64]) -> Option<Vec<Complex64>> + Sync,
{
    config.validate(n)?;
    let out = match config.strategy {
        Strategy::ChartGrid => chart_grid(dim, config, &density)?,
        Strategy::ChartMonteCarlo | Strategy::SphereMonteCarlo => {
            monte_carlo(n, dim, config, &density)?
        }
    };
    if let Some(t) = config.max_std_error {
        if let Some(worst) = out.iter().map(|e| e.std_error).reduce(f64::max) {
            if worst > t {
                return Err(QuadError::NotConverged {
                    std_error: worst,
                    threshold: t,
                });
            }
        }
    }
    Ok(out)
}

/// `∫_{ℙⁿ}` of a top-degree density given by its chart coefficient, with the
/// calibrated orientation constant applied.
pub fn integrate_pn<F>(
    n: usize,
    config: &QuadConfig,
    cal: &Calibration,
    density: F,
) -> Result<IntegralEstimate, QuadError>
where
    F: Fn(&KernelPoint) -> Option<Complex64> + Sync,
{
    cal.check_applies(n, config.strategy)?;
    let raw = integrate_raw(n, 1, config, |zeta| {
        let pt = KernelPoint::bare(zeta.to_vec(), None, Some(config.chart)).ok()?;
        density(&pt).map(|v| vec![v])
    })?;
    Ok(raw[0].scaled(cal.constant))
}
