//! Relation stability under repeated jittered settling.

use rand_distr::{Distribution, Normal};

use crate::scene::{derive_relations, Scene};
use crate::{seed, Error, Result};

use super::recall::{edge_agreement, EdgeCount};
use super::settle::settle;
use super::MetricsConfig;

/// Jitters every object position with N(0, σ²) per axis.
pub fn jittered(scene: &Scene, sigma: f64, seed_value: u64) -> Result<Scene> {
    let mut s = scene.clone();
    if sigma == 0.0 {
        return Ok(s);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("jitter: {e}")))?;
    let mut rng = seed::rng(seed_value, &[0x5717]);
    for o in &mut s.objects {
        for k in 0..3 {
            o.position[k] += normal.sample(&mut rng);
        }
    }
    Ok(s)
}

/// Non-`none` relation edges of `scene` (as derived from its poses) that
/// survive settling, summed over `cfg.stability_runs` jittered runs.
/// `scene_index` keeps jitter streams of different scenes apart.
pub fn scene_stability(scene: &Scene, scene_index: usize, cfg: &MetricsConfig) -> Result<EdgeCount> {
    let before = derive_relations(scene);
    let mut c = EdgeCount::default();
    for run in 0..cfg.stability_runs {
        let s = jittered(scene, cfg.jitter, seed::derive(cfg.seed, &[0x57AB, scene_index as u64, run as u64]))?;
        let out = settle(&s, &cfg.settle);
        if !out.converged {
            log::warn!("scene {scene_index} run {run}: settling did not converge in {} passes", out.iterations);
        }
        c = c.add(edge_agreement(&before, &derive_relations(&out.scene))?);
    }
    Ok(c)
}

/// Micro-averaged over runs and edges of the whole set.
pub fn stability(scenes: &[Scene], cfg: &MetricsConfig) -> Result<f64> {
    let mut c = EdgeCount::default();
    for (k, s) in scenes.iter().enumerate() {
        c = c.add(scene_stability(s, k, cfg)?);
    }
    Ok(c.fraction())
}
