//! Monte Carlo of the post-selection statistic and maximum-likelihood
//! estimation of `g` from success/failure counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::config_space::{gaussian_fisher_breakdown, gaussian_success_probability, GaussianMeter};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::phase_space::{phase_fisher_breakdown, phase_success_probability, CoherentMeter};
use crate::qubit::SelectionPair;

const MONOTONE_SAMPLES: usize = 64;
const GRID_POINTS: usize = 257;
const G_TOLERANCE: f64 = 1e-10;
/// Half-width of the default window in units of `1/√(N F_p)`.
const WINDOW_WIDTHS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum Scenario {
    ConfigGauss(GaussianMeter),
    Phase(CoherentMeter),
}

impl Scenario {
    pub fn success_probability(&self, pair: &SelectionPair, g: f64) -> Result<f64> {
        match self {
            Scenario::ConfigGauss(m) => Ok(gaussian_success_probability(m, pair, g)),
            Scenario::Phase(m) => phase_success_probability(m, pair, g),
        }
    }

    /// Fisher information of one success/failure outcome.
    pub fn post_selection_fi(&self, pair: &SelectionPair, g: f64) -> Result<f64> {
        match self {
            Scenario::ConfigGauss(m) => Ok(gaussian_fisher_breakdown(m, pair, g).f_p),
            Scenario::Phase(m) => Ok(phase_fisher_breakdown(m, pair, g)?.f_p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialConfig {
    pub scenario: Scenario,
    pub pair: SelectionPair,
    pub g_true: f64,
    /// Number of post-selection trials `N`.
    pub trials: u64,
    pub seed: u64,
    /// Estimation window; `None` selects [`default_window`].
    pub window: Option<(f64, f64)>,
}

impl TrialConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !self.g_true.is_finite() {
            return Err(Error::InvalidParameter(format!("g_true = {}", self.g_true)));
        }
        if let Some((lo, hi)) = self.window {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!("window [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialCounts {
    pub n_success: u64,
    pub n_fail: u64,
}

impl TrialCounts {
    pub fn total(&self) -> u64 {
        self.n_success + self.n_fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub g_true: f64,
    pub g_hat_mean: f64,
    /// Unbiased sample variance of the estimates.
    pub g_hat_variance: f64,
    /// `1 / (N F_p(g_true))`.
    pub crb: f64,
    pub repeats: usize,
}

impl EstimateSummary {
    /// `variance / crb`; 1 for an efficient estimator.
    pub fn efficiency_ratio(&self) -> f64 {
        self.g_hat_variance / self.crb
    }

    /// Standard error of the mean estimate.
    pub fn standard_error(&self) -> f64 {
        (self.g_hat_variance / self.repeats as f64).sqrt()
    }
}

fn draw_counts(config: &TrialConfig, stream: u64) -> Result<TrialCounts> {
    config.validate()?;
    let p = config.scenario.success_probability(&config.pair, config.g_true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let binomial = Binomial::new(config.trials, p.clamp(0.0, 1.0))
        .map_err(|e| Error::InvalidParameter(format!("binomial({}, {p}): {e}", config.trials)))?;
    let n_success = binomial.sample(&mut rng);
    Ok(TrialCounts {
        n_success,
        n_fail: config.trials - n_success,
    })
}

/// Success count drawn from `Binomial(N, p_d(g_true))`, reproducible from the seed.
pub fn simulate_postselection(config: &TrialConfig) -> Result<TrialCounts> {
    draw_counts(config, 0)
}

/// `a ln(a / q)` with `0 ln 0 = 0`, written so that it stays accurate for `q ≈ a`.
fn divergence_term(a: f64, q: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if q <= 0.0 {
        f64::INFINITY
    } else {
        -a * ((q - a) / a).ln_1p()
    }
}

/// Log-likelihood per trial, shifted by a count-dependent constant: minus
/// the divergence between the observed frequency and `p_d(g)`.
fn scaled_log_likelihood(freq: f64, p: f64) -> f64 {
    -(divergence_term(freq, p) + divergence_term(1.0 - freq, 1.0 - p))
}

fn check_monotone<F: Fn(f64) -> Result<f64>>(p_of: &F, lo: f64, hi: f64) -> Result<()> {
    let mut prev = p_of(lo)?;
    let mut direction = 0.0f64;
    for i in 1..MONOTONE_SAMPLES {
        let g = lo + (hi - lo) * i as f64 / (MONOTONE_SAMPLES - 1) as f64;
        let p = p_of(g)?;
        let step = (p - prev).signum();
        if p == prev || (direction != 0.0 && step != direction) {
            return Err(Error::NonIdentifiable {
                lo,
                hi,
                reason: format!("p_d is not strictly monotone near g = {g}"),
            });
        }
        direction = step;
        prev = p;
    }
    Ok(())
}

/// Maximum-likelihood `g` on `window` from success/failure counts.
///
/// `p_d` must be strictly monotone across the window (checked on 64 evenly
/// spaced points). The best point of a 257-point grid is refined by golden
/// section to `1e−10`; an optimum at the edge of the window returns the edge.
pub fn mle_from_counts(
    counts: TrialCounts,
    scenario: &Scenario,
    pair: &SelectionPair,
    window: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!("window [{lo}, {hi}] is empty")));
    }
    if counts.total() == 0 {
        return Err(Error::InvalidParameter("no trials recorded".into()));
    }
    let p_of = |g: f64| scenario.success_probability(pair, g);
    check_monotone(&p_of, lo, hi)?;

    let freq = counts.n_success as f64 / counts.total() as f64;
    let objective = |g: f64| -> Result<f64> { Ok(scaled_log_likelihood(freq, p_of(g)?)) };

    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &g) in grid.iter().enumerate() {
        let v = objective(g)?;
        if v > best_val {
            best = i;
            best_val = v;
        }
    }

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(GRID_POINTS - 1)];
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    while b - a > G_TOLERANCE {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = objective(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = objective(x1)?;
        }
    }
    let refined = 0.5 * (a + b);
    let refined_val = objective(refined)?;
    if best == 0 && best_val >= refined_val {
        return Ok(lo);
    }
    if best == GRID_POINTS - 1 && best_val >= refined_val {
        return Ok(hi);
    }
    Ok(refined)
}

/// `[max(0, g − 10/√(N F_p)), g + 10/√(N F_p)]`.
pub fn default_window(config: &TrialConfig) -> Result<(f64, f64)> {
    let f_p = config.scenario.post_selection_fi(&config.pair, config.g_true)?;
    if !(f_p > 0.0) {
        return Err(zero_information(config));
    }
    let half = WINDOW_WIDTHS / (config.trials as f64 * f_p).sqrt();
    Ok(((config.g_true - half).max(0.0), config.g_true + half))
}

fn zero_information(config: &TrialConfig) -> Error {
    Error::NonIdentifiable {
        lo: config.g_true,
        hi: config.g_true,
        reason: "post-selection carries no information about g".into(),
    }
}

/// Repeated simulation and estimation; repeat `k` draws from stream `k` of
/// the configured seed, so the result does not depend on `exec`.
pub fn crb_experiment(config: &TrialConfig, repeats: usize, exec: Execution) -> Result<EstimateSummary> {
    config.validate()?;
    if repeats < 2 {
        return Err(Error::InvalidParameter("at least two repeats are needed for a variance".into()));
    }
    let f_p = config.scenario.post_selection_fi(&config.pair, config.g_true)?;
    if !(f_p > 0.0) {
        return Err(zero_information(config));
    }
    let window = match config.window {
        Some(w) => w,
        None => default_window(config)?,
    };
    let estimates: Vec<f64> = exec
        .map_range(repeats, |k| {
            let counts = draw_counts(config, k as u64)?;
            mle_from_counts(counts, &config.scenario, &config.pair, window)
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let m = repeats as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let variance = estimates.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(EstimateSummary {
        g_true: config.g_true,
        g_hat_mean: mean,
        g_hat_variance: variance,
        crb: 1.0 / (config.trials as f64 * f_p),
        repeats,
    })
}
