//! Physical-plausibility metrics and the settling simulator behind the
//! stability score.

pub mod collision;
pub mod recall;
pub mod settle;
pub mod stability;
pub mod support;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scene::{RelationGraphs, RelationRules, Scene};
use crate::{Error, Result};

pub use collision::{col_mesh_rate, flagged_objects, penetration_depth};
pub use recall::{edge_agreement, grecall, EdgeCount};
pub use settle::{potential_energy, settle, SettleConfig, SettleOutcome};
pub use stability::{scene_stability, stability};
pub use support::{asd, support_distances};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Surface points per object for penetration and support distances.
    pub samples: usize,
    pub depth_threshold: f64,
    pub stability_runs: usize,
    /// Position noise σ applied before each settling run.
    pub jitter: f64,
    pub seed: u64,
    pub settle: SettleConfig,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            depth_threshold: 0.01,
            stability_runs: 10,
            jitter: 0.002,
            seed: 0,
            settle: SettleConfig::default(),
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.stability_runs == 0 {
            return Err(Error::Config("metrics: samples and stability_runs must be positive".into()));
        }
        if !(self.depth_threshold >= 0.0) || !(self.jitter >= 0.0) {
            return Err(Error::Config("metrics: depth_threshold and jitter must be non-negative".into()));
        }
        self.settle.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub index: usize,
    pub objects: usize,
    pub flagged: usize,
    pub col_mesh: f64,
    pub grecall: f64,
    pub recall_edges: usize,
    pub support_distances: Vec<f64>,
    pub asd: Option<f64>,
    pub stability: f64,
    pub stability_edges: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub col_mesh: f64,
    pub grecall: f64,
    /// Absent when no scene has a support edge.
    pub asd: Option<f64>,
    pub stability: f64,
    pub scenes: Vec<SceneMetrics>,
}

fn scene_metrics(index: usize, scene: &Scene, truth: &RelationGraphs, cfg: &MetricsConfig) -> Result<SceneMetrics> {
    let flags = flagged_objects(scene, cfg)?;
    let flagged = flags.iter().filter(|&&f| f).count();
    let rec = recall::scene_recall(scene, truth, &RelationRules::default())?;
    let dists = support_distances(scene, cfg)?;
    let st = scene_stability(scene, index, cfg)?;
    Ok(SceneMetrics {
        index,
        objects: scene.len(),
        flagged,
        col_mesh: flagged as f64 / scene.len() as f64,
        grecall: rec.fraction(),
        recall_edges: rec.total,
        asd: (!dists.is_empty()).then(|| dists.iter().sum::<f64>() / dists.len() as f64),
        support_distances: dists,
        stability: st.fraction(),
        stability_edges: st.total,
    })
}

/// Scores generated scenes against ground-truth graphs. Scenes are
/// evaluated in parallel; aggregates are micro-averages in scene order.
pub fn evaluate(scenes: &[Scene], truth: &[RelationGraphs], cfg: &MetricsConfig) -> Result<MetricReport> {
    cfg.validate()?;
    if scenes.len() != truth.len() {
        return Err(Error::GraphSizeMismatch(format!("{} scenes, {} graphs", scenes.len(), truth.len())));
    }
    let per: Vec<SceneMetrics> = scenes
        .par_iter()
        .zip(truth.par_iter())
        .enumerate()
        .map(|(k, (s, g))| scene_metrics(k, s, g, cfg))
        .collect::<Result<_>>()?;

    let objects: usize = per.iter().map(|m| m.objects).sum();
    let flagged: usize = per.iter().map(|m| m.flagged).sum();
    let weighted = |f: fn(&SceneMetrics) -> (f64, usize)| -> f64 {
        let (num, den) = per.iter().map(f).fold((0.0, 0), |(a, b), (x, n)| (a + x * n as f64, b + n));
        if den == 0 {
            1.0
        } else {
            num / den as f64
        }
    };
    let dists: Vec<f64> = per.iter().flat_map(|m| m.support_distances.iter().copied()).collect();
    Ok(MetricReport {
        col_mesh: if objects == 0 { 0.0 } else { flagged as f64 / objects as f64 },
        grecall: weighted(|m| (m.grecall, m.recall_edges)),
        asd: (!dists.is_empty()).then(|| dists.iter().sum::<f64>() / dists.len() as f64),
        stability: weighted(|m| (m.stability, m.stability_edges)),
        scenes: per,
    })
}

/// Scores scenes against the graphs they carry.
pub fn evaluate_self(scenes: &[Scene], cfg: &MetricsConfig) -> Result<MetricReport> {
    let truth: Vec<RelationGraphs> = scenes.iter().map(|s| s.graphs.clone()).collect();
    evaluate(scenes, &truth, cfg)
}

/// Fixed-order text table of the aggregate scores.
pub fn report_table(report: &MetricReport) -> String {
    let asd = report.asd.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.4}"));
    format!(
        "{:>10} {:>10} {:>10} {:>10}\n{:>10.4} {:>10.4} {:>10} {:>10.4}\n",
        "Col_mesh", "GRecall", "ASD", "Stability", report.col_mesh, report.grecall, asd, report.stability
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::fixtures::cubes;
    use nalgebra::Vector3;

    fn quick() -> MetricsConfig {
        MetricsConfig { stability_runs: 2, samples: 500, ..MetricsConfig::default() }
    }

    #[test]
    fn aggregates_are_micro_averages() {
        let a = cubes(&[Vector3::new(0.0, 0.5, 0.0), Vector3::new(0.8, 0.5, 0.0)], &[]);
        let b = cubes(&[Vector3::new(0.0, 0.5, 0.0), Vector3::new(3.0, 0.5, 0.0), Vector3::new(0.0, 1.52, 0.0)], &[(2, 0)]);
        let r = evaluate_self(&[a, b], &quick()).unwrap();
        assert_eq!(r.scenes[0].flagged, 2);
        assert_eq!(r.scenes[1].flagged, 0);
        assert!((r.col_mesh - 2.0 / 5.0).abs() < 1e-15);
        assert!((r.asd.unwrap() - 0.02).abs() < 1e-12);
        for v in [r.col_mesh, r.grecall, r.stability] {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn report_round_trips_and_table_order_is_fixed() {
        let s = cubes(&[Vector3::new(0.0, 0.5, 0.0)], &[]);
        let r = evaluate_self(&[s], &quick()).unwrap();
        assert_eq!(r.asd, None);
        let back: MetricReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        let t = report_table(&r);
        let head: Vec<&str> = t.lines().next().unwrap().split_whitespace().collect();
        assert_eq!(head, ["Col_mesh", "GRecall", "ASD", "Stability"]);
        assert!(t.contains("n/a"));
    }

    #[test]
    fn config_rejects_unknown_and_invalid_fields() {
        assert!(serde_json::from_str::<MetricsConfig>(r#"{"sample": 10}"#).is_err());
        let c: MetricsConfig = serde_json::from_str(r#"{"stability_runs": 0}"#).unwrap();
        assert!(c.validate().is_err());
    }
}
