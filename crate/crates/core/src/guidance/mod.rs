//! Differentiable collision, gravity and support-relation guidance.

pub mod energy;
pub mod pose;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::scene::{Scene, StateVector, STATE_DIM};
use crate::{Error, Result};
pub use energy::{Context, GravitySupport, RelationTerm, Term, GAP_SLACK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMode {
    Analytic,
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceConfig {
    pub lambda_c: f64,
    pub lambda_h: f64,
    pub lambda_r: f64,
    pub eps_gap: f64,
    pub theta_h: f64,
    /// Guidance is applied for `t < guidance_start_t`.
    pub guidance_start_t: usize,
    pub grad_mode: GradMode,
    /// Objects without a supporter fall back to the floor when their lowest
    /// vertex is at most this far above it.
    pub floor_snap_distance: f64,
    pub fd_step: f64,
    pub ray_res: usize,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            lambda_c: 7.5e-3,
            lambda_h: 1e-3,
            lambda_r: 1e-3,
            eps_gap: 0.005,
            theta_h: 0.05,
            guidance_start_t: 200,
            grad_mode: GradMode::Analytic,
            floor_snap_distance: 0.5,
            fd_step: 1e-4,
            ray_res: crate::geom::raycast::DEFAULT_RAY_RES,
        }
    }
}

impl GuidanceConfig {
    pub fn off() -> Self {
        Self { lambda_c: 0.0, lambda_h: 0.0, lambda_r: 0.0, ..Self::default() }
    }

    pub fn validate(&self, steps: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("guidance: {m}")));
        if [self.lambda_c, self.lambda_h, self.lambda_r].iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return bad("weights must be finite and non-negative");
        }
        if !(self.eps_gap >= 0.0) || !(self.theta_h >= 0.0) {
            return bad("eps_gap and theta_h must be non-negative");
        }
        if self.guidance_start_t > steps {
            return bad("guidance_start_t exceeds the number of diffusion steps");
        }
        if !(self.fd_step > 0.0) || self.ray_res == 0 || !(self.floor_snap_distance >= 0.0) {
            return bad("fd_step, ray_res and floor_snap_distance must be positive");
        }
        Ok(())
    }

    pub fn is_off(&self) -> bool {
        self.lambda_c == 0.0 && self.lambda_h == 0.0 && self.lambda_r == 0.0
    }

    pub fn weight(&self, term: Term) -> f64 {
        match term {
            Term::Collision => self.lambda_c,
            Term::Gravity => self.lambda_h,
            Term::Relation => self.lambda_r,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveCounts {
    pub collision_pairs: usize,
    pub gravity_objects: usize,
    pub relation_pairs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GuidanceReport {
    pub g_c: f64,
    pub g_h: f64,
    pub g_r: f64,
    /// Gradient of `λ_C G_C + λ_H G_H + λ_R G_R` with respect to the N×9 state.
    pub gradient: Array2<f64>,
    pub active: ActiveCounts,
}

impl GuidanceReport {
    pub fn weighted_total(&self, cfg: &GuidanceConfig) -> f64 {
        cfg.lambda_c * self.g_c + cfg.lambda_h * self.g_h + cfg.lambda_r * self.g_r
    }
}

pub fn collision_energy(scene: &Scene) -> f64 {
    energy_term(scene, Term::Collision, &GuidanceConfig::default())
}

pub fn gravity_energy(scene: &Scene, cfg: &GuidanceConfig) -> f64 {
    energy_term(scene, Term::Gravity, cfg)
}

pub fn relation_energy(scene: &Scene) -> f64 {
    energy_term(scene, Term::Relation, &GuidanceConfig::default())
}

/// One unweighted energy at the scene's current poses.
pub fn energy_term(scene: &Scene, term: Term, cfg: &GuidanceConfig) -> f64 {
    // The collision pair set is only built when its weight is non-zero.
    let cfg = GuidanceConfig { lambda_c: 1.0, ..cfg.clone() };
    let ctx = Context::new(scene, &cfg);
    energy::term_value(scene, &ctx, term, &cfg, &mut Vec::new())
}

/// Unweighted gradient of one energy, analytic with frozen discrete sets.
pub fn term_gradient(scene: &Scene, term: Term, cfg: &GuidanceConfig) -> Array2<f64> {
    let cfg = GuidanceConfig { lambda_c: 1.0, ..cfg.clone() };
    let ctx = Context::new(scene, &cfg);
    energy::term_gradient(scene, &ctx, term, &cfg)
}

/// Unweighted gradient of one energy by central differences on the state.
pub fn term_gradient_fd(scene: &Scene, term: Term, cfg: &GuidanceConfig) -> Array2<f64> {
    let x = scene.flatten();
    let h = cfg.fd_step;
    let mut g = Array2::zeros(x.0.raw_dim());
    let eval = |x: &StateVector| energy_term(&scene.with_state(x).expect("same shape"), term, cfg);
    for j in 0..x.rows() {
        for k in 0..STATE_DIM {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.0[[j, k]] += h;
            xm.0[[j, k]] -= h;
            g[[j, k]] = (eval(&xp) - eval(&xm)) / (2.0 * h);
        }
    }
    g
}

/// Discrete choices (pair sets, supporters, active branches) at this state.
pub fn discrete_signature(scene: &Scene, cfg: &GuidanceConfig) -> Vec<u64> {
    let cfg = GuidanceConfig { lambda_c: 1.0, ..cfg.clone() };
    energy::signature(scene, &Context::new(scene, &cfg), &cfg)
}

/// Energies and the weighted gradient. Fails on any non-finite entry.
pub fn composite_gradient(scene: &Scene, cfg: &GuidanceConfig) -> Result<GuidanceReport> {
    let report = composite_gradient_unchecked(scene, cfg);
    for (j, row) in report.gradient.outer_iter().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { object: j });
        }
    }
    Ok(report)
}

/// As [`composite_gradient`], but non-finite rows are zeroed and logged.
pub fn composite_gradient_lenient(scene: &Scene, cfg: &GuidanceConfig) -> GuidanceReport {
    let mut report = composite_gradient_unchecked(scene, cfg);
    for (j, mut row) in report.gradient.outer_iter_mut().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            log::warn!("{}; row zeroed", Error::NonFiniteGradient { object: j });
            row.fill(0.0);
        }
    }
    report
}

fn composite_gradient_unchecked(scene: &Scene, cfg: &GuidanceConfig) -> GuidanceReport {
    let ctx = Context::new(scene, cfg);
    let value = |t: Term| energy::term_value(scene, &ctx, t, cfg, &mut Vec::new());
    let (g_c, g_h, g_r) = (value(Term::Collision), value(Term::Gravity), value(Term::Relation));
    let mut gradient = Array2::zeros((scene.len(), STATE_DIM));
    for term in Term::ALL {
        let w = cfg.weight(term);
        if w == 0.0 {
            continue;
        }
        let g = match cfg.grad_mode {
            GradMode::Analytic => energy::term_gradient(scene, &ctx, term, cfg),
            GradMode::FiniteDifference => term_gradient_fd(scene, term, cfg),
        };
        gradient.scaled_add(w, &g);
    }
    let gravity_objects = scene
        .objects
        .iter()
        .enumerate()
        .filter(|(i, _)| !matches!(ctx.gravity[*i], GravitySupport::Exempt))
        .count();
    GuidanceReport {
        g_c,
        g_h,
        g_r,
        gradient,
        active: ActiveCounts {
            collision_pairs: ctx.pairs.len(),
            gravity_objects,
            relation_pairs: ctx.relations.iter().filter(|r| !r.outside.is_empty()).count(),
        },
    }
}
