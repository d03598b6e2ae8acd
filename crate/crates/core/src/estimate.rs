//! Simulated experiments and maximum-likelihood estimation.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fisher::{cfim, fisher_report, FisherError};
use crate::linalg::{spd_inverse, symmetric_eig, RealMatrix};
use crate::model::{evaluate, Model, ModelError};
use crate::optimize::nelder_mead;
use crate::povm::Povm;
use crate::rng::stream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fisher(#[from] FisherError),
    #[error("measurement has dimension {got}, model has {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("need at least two trials and one shot")]
    TooFewSamples,
    #[error("every trial was excluded")]
    NoUsableTrials,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialConfig {
    pub true_x: Vec<f64>,
    /// Shots per trial.
    pub n_c: u64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_grid")]
    pub grid_per_axis: usize,
}

fn default_grid() -> usize {
    64
}

/// Multinomial counts of `n` shots, by sequential binomial draws.
pub fn sample_outcomes<R: Rng + ?Sized>(probs: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut left = n;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    for (k, p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        let p = p.max(0.0);
        if k + 1 == probs.len() {
            counts[k] = left;
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let c = Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0);
        counts[k] = c;
        left -= c;
        mass -= p;
    }
    counts
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MleFit {
    pub x: Vec<f64>,
    pub log_likelihood: f64,
    /// Likelihood is flat or the measurement does not identify all parameters here.
    pub degenerate: bool,
    pub on_boundary: bool,
}

fn probabilities(model: &Model, povm: &Povm, x: &[f64]) -> Vec<f64> {
    let rho = model.rho(x);
    povm.elements
        .iter()
        .map(|e| rho.trace_product(e).re)
        .collect()
}

fn log_likelihood(model: &Model, povm: &Povm, counts: &[u64], x: &[f64]) -> f64 {
    probabilities(model, povm, x)
        .iter()
        .zip(counts)
        .filter(|(_, &c)| c > 0)
        .map(|(p, &c)| c as f64 * p.max(1e-300).ln())
        .sum()
}

/// Maps a point back into the domain: wraps periodic parameters, clamps the rest.
fn project(model: &Model, x: &[f64]) -> Vec<f64> {
    model
        .params
        .iter()
        .zip(x)
        .map(|(p, &v)| {
            if p.periodic {
                p.domain.lo + (v - p.domain.lo).rem_euclid(p.domain.width())
            } else {
                v.clamp(p.domain.lo, p.domain.hi)
            }
        })
        .collect()
}

/// Grid scan followed by Nelder-Mead refinement to `1e-8` in parameter space.
pub fn mle_fit(
    model: &Model,
    povm: &Povm,
    counts: &[u64],
    grid_per_axis: usize,
) -> Result<MleFit, EstimateError> {
    if povm.dim() != model.dim {
        return Err(EstimateError::Dimension {
            got: povm.dim(),
            expected: model.dim,
        });
    }
    let n = model.n_params();
    let g = grid_per_axis.max(2);
    let axes: Vec<Vec<f64>> = model
        .params
        .iter()
        .map(|p| {
            (0..g)
                .map(|k| {
                    if p.periodic {
                        p.domain.lo + p.domain.width() * k as f64 / g as f64
                    } else {
                        p.domain.lo + p.domain.width() * k as f64 / (g - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let mut best = (vec![0.0; n], f64::NEG_INFINITY);
    let mut worst = f64::INFINITY;
    let mut idx = vec![0usize; n];
    loop {
        let x: Vec<f64> = idx.iter().enumerate().map(|(i, &k)| axes[i][k]).collect();
        let ll = log_likelihood(model, povm, counts, &x);
        worst = worst.min(ll);
        if ll > best.1 {
            best = (x, ll);
        }
        let mut i = 0;
        while i < n {
            idx[i] += 1;
            if idx[i] < g {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    let step: Vec<f64> = model
        .params
        .iter()
        .map(|p| p.domain.width() / g as f64)
        .collect();
    let mut obj = |x: &[f64]| -log_likelihood(model, povm, counts, &project(model, x));
    let (x, v) = nelder_mead(&mut obj, &best.0, &step, 1e-9, 0.0, 20_000);
    let x = project(model, &x);
    let log_likelihood = -v;
    let on_boundary = model.params.iter().zip(&x).any(|(p, &v)| {
        !p.periodic
            && ((v - p.domain.lo) <= 1e-6 * p.domain.width()
                || (p.domain.hi - v) <= 1e-6 * p.domain.width())
    });
    let flat = (best.1 - worst).abs() <= 1e-9 * (1.0 + best.1.abs());
    let identifiable = evaluate(model, &x)
        .ok()
        .and_then(|pt| cfim(&pt, povm).ok())
        .map(|c| {
            let (vals, _) = symmetric_eig(&c.matrix);
            let top = vals.iter().fold(0.0f64, |a, &b| a.max(b));
            top > 0.0 && vals[0] > 1e-8 * top
        })
        .unwrap_or(false);
    Ok(MleFit {
        x,
        log_likelihood,
        degenerate: flat || !identifiable,
        on_boundary,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub estimate: Vec<f64>,
    pub log_likelihood: f64,
    pub degenerate: bool,
    pub on_boundary: bool,
}

impl TrialRow {
    pub fn excluded(&self) -> bool {
        self.degenerate || self.on_boundary
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub n_c: u64,
    pub trials: usize,
    pub used: usize,
    pub excluded: usize,
    /// Exclusions stay at or below 1% of trials.
    pub valid: bool,
    pub mean: Vec<f64>,
    pub bias: Vec<f64>,
    /// `N_C` times the sample covariance (denominator `used - 1`).
    pub scaled_covariance: RealMatrix,
    /// `N_C` times the mean squared error matrix around the true value.
    pub scaled_mse: RealMatrix,
    pub cfim_inverse: Option<RealMatrix>,
    pub qfim_inverse: Option<RealMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialsOutput {
    pub rows: Vec<TrialRow>,
    pub report: CovarianceReport,
}

fn run_one(
    model: &Model,
    povm: &Povm,
    probs: &[f64],
    cfg: &TrialConfig,
    t: usize,
) -> Result<TrialRow, EstimateError> {
    let mut rng = stream(cfg.seed, t as u64);
    let counts = sample_outcomes(probs, cfg.n_c, &mut rng);
    let fit = mle_fit(model, povm, &counts, cfg.grid_per_axis)?;
    Ok(TrialRow {
        trial: t,
        estimate: fit.x,
        log_likelihood: fit.log_likelihood,
        degenerate: fit.degenerate,
        on_boundary: fit.on_boundary,
    })
}

/// Repeated experiments at `true_x`. Trial `t` draws from stream `t` of the seed,
/// so results do not depend on scheduling.
pub fn run_trials(
    model: &Model,
    povm: &Povm,
    cfg: &TrialConfig,
) -> Result<TrialsOutput, EstimateError> {
    if cfg.trials < 2 || cfg.n_c == 0 {
        return Err(EstimateError::TooFewSamples);
    }
    if povm.dim() != model.dim {
        return Err(EstimateError::Dimension {
            got: povm.dim(),
            expected: model.dim,
        });
    }
    let point = evaluate(model, &cfg.true_x)?;
    let probs = probabilities(model, povm, &cfg.true_x);

    #[cfg(feature = "parallel")]
    let rows: Result<Vec<TrialRow>, EstimateError> = {
        use rayon::prelude::*;
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_one(model, povm, &probs, cfg, t))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<TrialRow>, EstimateError> = (0..cfg.trials)
        .map(|t| run_one(model, povm, &probs, cfg, t))
        .collect();
    let rows = rows?;

    let n = model.n_params();
    let used: Vec<Vec<f64>> = rows
        .iter()
        .filter(|r| !r.excluded())
        .map(|r| {
            // deviations from the truth, wrapped for periodic parameters
            r.estimate
                .iter()
                .zip(&cfg.true_x)
                .zip(&model.params)
                .map(|((e, t), p)| {
                    let d = e - t;
                    if p.periodic {
                        let w = p.domain.width();
                        d - w * (d / w).round()
                    } else {
                        d
                    }
                })
                .collect()
        })
        .collect();
    if used.len() < 2 {
        return Err(EstimateError::NoUsableTrials);
    }
    let m = used.len() as f64;
    let bias: Vec<f64> = (0..n)
        .map(|i| used.iter().map(|d| d[i]).sum::<f64>() / m)
        .collect();
    let ncf = cfg.n_c as f64;
    let scaled_covariance = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    ncf * used
                        .iter()
                        .map(|d| (d[i] - bias[i]) * (d[j] - bias[j]))
                        .sum::<f64>()
                        / (m - 1.0)
                })
                .collect()
        })
        .collect();
    let scaled_mse = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| ncf * used.iter().map(|d| d[i] * d[j]).sum::<f64>() / m)
                .collect()
        })
        .collect();
    let excluded = rows.len() - used.len();
    let fc = cfim(&point, povm)?;
    let fq = fisher_report(&point)?;
    let report = CovarianceReport {
        n_c: cfg.n_c,
        trials: cfg.trials,
        used: used.len(),
        excluded,
        valid: excluded as f64 <= 0.01 * cfg.trials as f64,
        mean: bias.iter().zip(&cfg.true_x).map(|(b, t)| t + b).collect(),
        bias,
        scaled_covariance,
        scaled_mse,
        cfim_inverse: spd_inverse(&fc.matrix),
        qfim_inverse: spd_inverse(&fq.qfim),
    };
    Ok(TrialsOutput { rows, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multinomial_conserves_shots() {
        let mut rng = stream(7, 0);
        let c = sample_outcomes(&[0.2, 0.5, 0.3], 1000, &mut rng);
        assert_eq!(c.iter().sum::<u64>(), 1000);
        let mut rng2 = stream(7, 0);
        assert_eq!(c, sample_outcomes(&[0.2, 0.5, 0.3], 1000, &mut rng2));
    }

    #[test]
    fn zero_probability_outcomes_stay_empty() {
        let mut rng = stream(1, 3);
        let c = sample_outcomes(&[0.0, 1.0, 0.0], 50, &mut rng);
        assert_eq!(c, vec![0, 50, 0]);
    }
}
