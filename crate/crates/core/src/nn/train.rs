//! ε-prediction training with AdamW.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::geometry_features;
use super::model::{Model, ModelConfig};
use crate::diffusion::{forward_sample, make_schedule, normalize, ScheduleKind};
use crate::scene::{Scene, STATE_DIM};
use crate::{seed, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    pub d: usize,
    pub layers: usize,
    pub heads: usize,
    pub n_geo: usize,
    pub m_train: usize,
    pub shape_tokens: usize,
    pub d_edge: usize,
    pub use_geometry: bool,
    pub pos_scale: f64,
    pub diffusion_steps: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            lr: 1e-4,
            weight_decay: 1e-4,
            batch_size: 16,
            steps: 2000,
            seed: 0,
            d: m.d,
            layers: m.layers,
            heads: m.heads,
            n_geo: m.n_geo,
            m_train: 256,
            shape_tokens: m.shape_tokens,
            d_edge: m.d_edge,
            use_geometry: m.use_geometry,
            pos_scale: m.pos_scale,
            diffusion_steps: 1000,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            d: self.d,
            layers: self.layers,
            heads: self.heads,
            n_geo: self.n_geo,
            shape_tokens: self.shape_tokens,
            d_edge: self.d_edge,
            use_geometry: self.use_geometry,
            pos_scale: self.pos_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.lr, self.pos_scale, self.adam_eps].iter().all(|v| *v > 0.0 && v.is_finite());
        let betas = (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2);
        if !pos || !betas || !(self.weight_decay >= 0.0) {
            return Err(Error::Config("train: lr, pos_scale, adam_eps must be positive; betas in [0, 1)".into()));
        }
        if self.batch_size == 0 || self.m_train == 0 || self.diffusion_steps < 2 {
            return Err(Error::Config("train: batch_size and m_train must be positive, diffusion_steps ≥ 2".into()));
        }
        self.model_config().validate()
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub model: Model,
    /// Mean batch loss at every step, before that step's update.
    pub losses: Vec<f64>,
}

/// AdamW state.
struct Adam {
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: i32,
}

impl Adam {
    fn new(model: &Model) -> Self {
        let zeros: Vec<_> = model.params.shapes().into_iter().map(Array2::zeros).collect();
        Self { m: zeros.clone(), v: zeros, t: 0 }
    }

    fn step(&mut self, model: &mut Model, grads: &[Array2<f64>], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (k, p) in model.params.tensors_mut().iter_mut().enumerate() {
            ndarray::Zip::from(p).and(&mut self.m[k]).and(&mut self.v[k]).and(&grads[k]).for_each(|p, m, v, &g| {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                *p -= cfg.lr * cfg.weight_decay * *p;
                *p -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + cfg.adam_eps);
            });
        }
    }
}

/// Loss and gradient of one randomly corrupted scene.
fn sample_loss(model: &Model, scene: &Scene, cfg: &TrainConfig, sched: &crate::diffusion::NoiseSchedule, seed_value: u64) -> Result<(f64, Vec<Array2<f64>>)> {
    let mut rng = seed::rng(seed_value, &[]);
    let t = rng.random_range(1..=cfg.diffusion_steps);
    let eps = Array2::from_shape_simple_fn((scene.len(), STATE_DIM), || rng.sample::<f64, _>(StandardNormal));
    let x0 = normalize(&scene.flatten(), cfg.pos_scale);
    let x_t = forward_sample(&x0, t, &eps, sched);
    let geo = if cfg.use_geometry {
        let noisy = scene.with_state(&crate::diffusion::denormalize(&x_t, cfg.pos_scale))?;
        Some(geometry_features(&noisy, cfg.m_train, seed::derive(seed_value, &[1]))?)
    } else {
        None
    };
    model.loss_and_grad(&x_t, t, scene, geo.as_ref(), &eps)
}

pub fn train(scenes: &[Scene], cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let model = Model::init(cfg.model_config(), cfg.seed)?;
    train_from(model, scenes, cfg, |_, _| {})
}

/// Continues training `model`; `on_step(step, loss)` is called after each
/// step in order.
pub fn train_from(mut model: Model, scenes: &[Scene], cfg: &TrainConfig, mut on_step: impl FnMut(usize, f64)) -> Result<TrainOutput> {
    cfg.validate()?;
    if scenes.is_empty() {
        return Err(Error::Config("train: the dataset is empty".into()));
    }
    if model.cfg != cfg.model_config() {
        return Err(Error::Checkpoint("model dimensions differ from the training configuration".into()));
    }
    let sched = make_schedule(cfg.diffusion_steps, ScheduleKind::SquaredCosine)?;
    let mut adam = Adam::new(&model);
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let mut rng = seed::rng(cfg.seed, &[0x7A1, step as u64]);
        let picks: Vec<(usize, u64)> = (0..cfg.batch_size).map(|_| (rng.random_range(0..scenes.len()), rng.random())).collect();
        let results: Vec<Result<(f64, Vec<Array2<f64>>)>> =
            picks.par_iter().map(|&(i, s)| sample_loss(&model, &scenes[i], cfg, &sched, s)).collect();
        // Fixed-order reduction keeps runs identical for any thread count.
        let mut loss = 0.0;
        let mut grads: Vec<Array2<f64>> = model.params.shapes().into_iter().map(Array2::zeros).collect();
        for r in results {
            let (l, g) = r?;
            loss += l;
            for (acc, gk) in grads.iter_mut().zip(&g) {
                *acc += gk;
            }
        }
        let b = cfg.batch_size as f64;
        loss /= b;
        if !loss.is_finite() || grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::DivergedTraining { step, loss });
        }
        grads.iter_mut().for_each(|g| *g /= b);
        adam.step(&mut model, &grads, cfg);
        losses.push(loss);
        on_step(step, loss);
    }
    Ok(TrainOutput { model, losses })
}
