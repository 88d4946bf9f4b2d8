use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Offset keeping β small near t = 0.
pub const COSINE_S: f64 = 0.008;
pub const MAX_BETA: f64 = 0.999;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    SquaredCosine,
}

/// Variance schedule indexed by `t ∈ 1..=T`; slot 0 holds the clean state
/// (`ᾱ_0 = 1`, `β_0 = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    pub kind: ScheduleKind,
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

pub fn make_schedule(steps: usize, kind: ScheduleKind) -> Result<NoiseSchedule> {
    if steps < 2 {
        return Err(Error::Config(format!("diffusion needs at least 2 steps, got {steps}")));
    }
    let f = |t: f64| ((t / steps as f64 + COSINE_S) / (1.0 + COSINE_S) * std::f64::consts::FRAC_PI_2).cos().powi(2);
    let mut betas = vec![0.0; steps + 1];
    let mut alpha_bars = vec![1.0; steps + 1];
    for t in 1..=steps {
        betas[t] = (1.0 - f(t as f64) / f(t as f64 - 1.0)).min(MAX_BETA);
        // Cumulative product of the clipped betas, so β and ᾱ always agree.
        alpha_bars[t] = alpha_bars[t - 1] * (1.0 - betas[t]);
    }
    Ok(NoiseSchedule { kind, betas, alpha_bars })
}

impl NoiseSchedule {
    pub fn steps(&self) -> usize {
        self.betas.len() - 1
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        1.0 - self.betas[t]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t]
    }

    /// Variance of q(x_{t-1} | x_t, x_0); zero at t = 1.
    pub fn posterior_variance(&self, t: usize) -> f64 {
        self.betas[t] * (1.0 - self.alpha_bars[t - 1]) / (1.0 - self.alpha_bars[t])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_monotonicity() {
        let s = make_schedule(1000, ScheduleKind::SquaredCosine).unwrap();
        // Closed form at t = 1 without the cumulative product.
        let f = |t: f64| ((t / 1000.0 + 0.008) / 1.008 * std::f64::consts::FRAC_PI_2).cos().powi(2);
        assert!((s.alpha_bar(1) - f(1.0) / f(0.0)).abs() < 1e-12);
        assert!(s.alpha_bar(1) > 0.999);
        assert!(s.alpha_bar(1000) < 1e-3);
        for t in 1..=1000 {
            assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
            assert!(s.beta(t) > 0.0 && s.beta(t) < 1.0);
            if t > 1 {
                assert!(s.beta(t) >= s.beta(t - 1));
            }
        }
        assert_eq!(s.posterior_variance(1), 0.0);
    }

    #[test]
    fn betas_reproduce_alpha_bar() {
        let s = make_schedule(1000, ScheduleKind::SquaredCosine).unwrap();
        let mut prod = 1.0;
        for t in 1..=1000 {
            prod *= 1.0 - s.beta(t);
            assert!((prod - s.alpha_bar(t)).abs() < 1e-12);
        }
        assert!(make_schedule(1, ScheduleKind::SquaredCosine).is_err());
    }
}
