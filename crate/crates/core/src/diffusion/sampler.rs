use ndarray::{s, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::schedule::{make_schedule, NoiseSchedule, ScheduleKind};
use super::{DenoiseInput, Denoiser};
use crate::guidance::{composite_gradient_lenient, GuidanceConfig, Term};
use crate::nn::geometry_features;
use crate::scene::{Scene, StateVector, STATE_DIM};
use crate::{seed, Error, Result};

const NOISE_STREAM: u64 = 0x4E01;
const GEOMETRY_STREAM: u64 = 0x6E0;

/// How the guidance gradient moves the posterior mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceShift {
    /// `μ ← μ − ∇G`.
    #[default]
    Direct,
    /// `μ ← μ − σ_t² ∇G`.
    PosteriorVariance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub steps: usize,
    pub schedule: ScheduleKind,
    pub seed: u64,
    /// Positions are divided by this before diffusion.
    pub pos_scale: f64,
    /// Recompute geometry features every this many steps.
    pub geometry_every: usize,
    pub geometry_points: usize,
    pub guidance_shift: GuidanceShift,
    /// Clamp the implied clean state x̂_0 to `[-clip_x0, clip_x0]` before
    /// forming the posterior mean; 0 disables clamping.
    pub clip_x0: f64,
    pub record_trace: bool,
    #[serde(skip)]
    pub guidance: GuidanceConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            schedule: ScheduleKind::SquaredCosine,
            seed: 0,
            pos_scale: 4.0,
            geometry_every: 10,
            geometry_points: 256,
            guidance_shift: GuidanceShift::Direct,
            clip_x0: 2.0,
            record_trace: true,
            guidance: GuidanceConfig::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::Config("sampler: steps must be at least 2".into()));
        }
        if !(self.pos_scale > 0.0) || self.geometry_every == 0 || self.geometry_points == 0 {
            return Err(Error::Config("sampler: pos_scale, geometry_every and geometry_points must be positive".into()));
        }
        if !(self.clip_x0 >= 0.0) {
            return Err(Error::Config("sampler: clip_x0 must be non-negative".into()));
        }
        self.guidance.validate(self.steps)
    }
}

/// Guidance energies at the state entering step `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: usize,
    pub g_c: f64,
    pub g_h: f64,
    pub g_r: f64,
}

#[derive(Clone, Debug)]
pub struct SampleOutput {
    pub scene: Scene,
    pub trace: Vec<TraceEntry>,
}

pub fn normalize(x: &StateVector, pos_scale: f64) -> Array2<f64> {
    let mut z = x.0.clone();
    z.slice_mut(s![.., 0..3]).mapv_inplace(|v| v / pos_scale);
    z
}

pub fn denormalize(z: &Array2<f64>, pos_scale: f64) -> StateVector {
    let mut x = z.clone();
    x.slice_mut(s![.., 0..3]).mapv_inplace(|v| v * pos_scale);
    StateVector(x)
}

/// `x_t = √ᾱ_t x_0 + √(1 − ᾱ_t) ε`.
pub fn forward_sample(x0: &Array2<f64>, t: usize, eps: &Array2<f64>, sched: &NoiseSchedule) -> Array2<f64> {
    let ab = sched.alpha_bar(t);
    x0 * ab.sqrt() + eps * (1.0 - ab).sqrt()
}

/// One ancestral step. `shift` (already weighted, in normalized
/// coordinates) is subtracted from the posterior mean; `noise` is scaled by
/// the posterior standard deviation and ignored at `t = 1`.
///
/// With `clip = Some(c)` the mean is formed from x̂_0 clamped to `[-c, c]`.
/// Near `t = T` the ε-form divides by `√α_t ≈ 0.03`, so an imperfect ε̂
/// is otherwise amplified every step.
pub fn reverse_step(
    x_t: &Array2<f64>,
    t: usize,
    eps_hat: &Array2<f64>,
    clip: Option<f64>,
    shift: Option<&Array2<f64>>,
    noise: Option<&Array2<f64>>,
    sched: &NoiseSchedule,
) -> Array2<f64> {
    let ab = sched.alpha_bar(t);
    let mut mean = match clip {
        None => (x_t - &(eps_hat * (sched.beta(t) / (1.0 - ab).sqrt()))) / sched.alpha(t).sqrt(),
        Some(c) => {
            let x0 = ((x_t - &(eps_hat * (1.0 - ab).sqrt())) / ab.sqrt()).mapv(|v| v.clamp(-c, c));
            let ab_prev = if t > 1 { sched.alpha_bar(t - 1) } else { 1.0 };
            x0 * (ab_prev.sqrt() * sched.beta(t) / (1.0 - ab)) + x_t * (sched.alpha(t).sqrt() * (1.0 - ab_prev) / (1.0 - ab))
        }
    };
    if let Some(g) = shift {
        mean -= g;
    }
    match noise {
        Some(z) if t > 1 => mean + z * sched.posterior_variance(t).sqrt(),
        _ => mean,
    }
}

fn standard_normal<R: Rng>(rng: &mut R, n: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, STATE_DIM), || rng.sample(StandardNormal))
}

/// Energies recorded in traces, independent of the weights.
fn trace_entry(scene: &Scene, t: usize, cfg: &GuidanceConfig) -> TraceEntry {
    let e = |term| crate::guidance::energy_term(scene, term, cfg);
    TraceEntry { t, g_c: e(Term::Collision), g_h: e(Term::Gravity), g_r: e(Term::Relation) }
}

/// Runs the reverse chain from pure noise and writes the result into a copy
/// of `template`.
pub fn sample_scene(template: &Scene, denoiser: &dyn Denoiser, cfg: &SamplerConfig) -> Result<SampleOutput> {
    cfg.validate()?;
    let sched = make_schedule(cfg.steps, cfg.schedule)?;
    let n = template.len();
    let mut rng = seed::rng(cfg.seed, &[NOISE_STREAM]);
    let mut z = standard_normal(&mut rng, n);
    let mut trace = Vec::new();
    let mut geometry = None;
    let mut tokens = None;
    let guided = !cfg.guidance.is_off();
    for t in (1..=cfg.steps).rev() {
        let needs_scene = cfg.record_trace || denoiser.uses_geometry() || (guided && t < cfg.guidance.guidance_start_t);
        let scene = if needs_scene { Some(template.with_state(&denormalize(&z, cfg.pos_scale))?) } else { None };
        if cfg.record_trace {
            trace.push(trace_entry(scene.as_ref().unwrap(), t, &cfg.guidance));
        }
        if denoiser.uses_geometry() && (geometry.is_none() || (cfg.steps - t) % cfg.geometry_every == 0) {
            let sd = seed::derive(cfg.seed, &[GEOMETRY_STREAM, t as u64]);
            let g = geometry_features(scene.as_ref().unwrap(), cfg.geometry_points, sd)?;
            tokens = denoiser.encode_geometry(&g)?;
            geometry = Some(g);
        }
        let eps_hat = denoiser.predict_eps(&DenoiseInput {
            x_t: &z,
            t,
            template,
            geometry: geometry.as_ref(),
            geometry_tokens: tokens.as_ref(),
        })?;
        let shift = if guided && t < cfg.guidance.guidance_start_t {
            let report = composite_gradient_lenient(scene.as_ref().unwrap(), &cfg.guidance);
            // d/dz = d/dx · dx/dz; positions were divided by pos_scale.
            let mut g = report.gradient;
            g.slice_mut(s![.., 0..3]).mapv_inplace(|v| v * cfg.pos_scale);
            if cfg.guidance_shift == GuidanceShift::PosteriorVariance {
                g *= sched.posterior_variance(t);
            }
            Some(g)
        } else {
            None
        };
        let noise = if t > 1 { Some(standard_normal(&mut rng, n)) } else { None };
        let clip = (cfg.clip_x0 > 0.0).then_some(cfg.clip_x0);
        z = reverse_step(&z, t, &eps_hat, clip, shift.as_ref(), noise.as_ref(), &sched);
        if let Some((k, v)) = z.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                t,
                detail: format!("object {} coordinate {} became {v}", k / STATE_DIM, k % STATE_DIM),
            });
        }
    }
    let scene = template.with_state(&denormalize(&z, cfg.pos_scale))?;
    if cfg.record_trace {
        trace.push(trace_entry(&scene, 0, &cfg.guidance));
    }
    Ok(SampleOutput { scene, trace })
}
