//! Exact ε-predictor for a Gaussian target, used to test the sampler
//! without training.

use ndarray::Array2;

use crate::diffusion::{DenoiseInput, Denoiser, NoiseSchedule};
use crate::{Error, Result};

/// Target `x_0 ~ N(mean, diag(var))` in normalized coordinates.
#[derive(Clone, Debug)]
pub struct AnalyticDenoiser {
    pub mean: Array2<f64>,
    pub var: Array2<f64>,
    schedule: NoiseSchedule,
}

pub fn analytic_score_denoiser(mean: Array2<f64>, var: Array2<f64>, schedule: NoiseSchedule) -> Result<AnalyticDenoiser> {
    if mean.dim() != var.dim() {
        return Err(Error::ShapeMismatch { expected: format!("{:?}", mean.dim()), got: format!("{:?}", var.dim()) });
    }
    if mean.iter().chain(var.iter()).any(|v| !v.is_finite()) || var.iter().any(|v| *v < 0.0) {
        return Err(Error::Config("analytic target must be finite with non-negative variance".into()));
    }
    Ok(AnalyticDenoiser { mean, var, schedule })
}

impl Denoiser for AnalyticDenoiser {
    /// `x_t ~ N(√ᾱ μ, ᾱσ² + 1 − ᾱ)`, so `E[ε | x_t] = √(1−ᾱ)(x_t − √ᾱ μ)/(ᾱσ² + 1 − ᾱ)`.
    fn predict_eps(&self, input: &DenoiseInput<'_>) -> Result<Array2<f64>> {
        if input.x_t.dim() != self.mean.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.mean.dim()),
                got: format!("{:?}", input.x_t.dim()),
            });
        }
        let ab = self.schedule.alpha_bar(input.t);
        let mut out = input.x_t - &(&self.mean * ab.sqrt());
        ndarray::Zip::from(&mut out).and(&self.var).for_each(|e, &v| *e *= (1.0 - ab).sqrt() / (ab * v + 1.0 - ab));
        Ok(out)
    }
}
