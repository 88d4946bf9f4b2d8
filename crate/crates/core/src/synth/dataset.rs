//! Train/test corpora written as scene JSON files plus a manifest.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generator::{gen_scene, GenSpec};
use crate::scene::io::{load_scene, save_scene};
use crate::scene::Scene;
use crate::{seed, Error, Result};

const TRAIN_STREAM: u64 = 0x7EA1;
const TEST_STREAM: u64 = 0x7E57;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// Scene files relative to the manifest's directory.
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub spec: GenSpec,
    /// Generator seed of each file, train files first.
    pub seeds: Vec<u64>,
}

pub fn split_counts(count: usize, split_ratio: f64) -> (usize, usize) {
    let train = ((count as f64) * split_ratio).round() as usize;
    let train = train.min(count);
    (train, count - train)
}

pub fn scene_seeds(base_seed: u64, n_train: usize, n_test: usize) -> Vec<u64> {
    (0..n_train as u64)
        .map(|k| seed::derive(base_seed, &[TRAIN_STREAM, k]))
        .chain((0..n_test as u64).map(|k| seed::derive(base_seed, &[TEST_STREAM, k])))
        .collect()
}

/// Generates `count` scenes into `out_dir/{train,test}/` and writes the manifest.
pub fn gen_dataset(spec: &GenSpec, count: usize, split_ratio: f64, base_seed: u64, out_dir: &Path) -> Result<Manifest> {
    if count < 2 {
        return Err(Error::Config("dataset count must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&split_ratio) {
        return Err(Error::Config("split ratio must lie in [0, 1]".into()));
    }
    spec.validate()?;
    let (n_train, n_test) = split_counts(count, split_ratio);
    let seeds = scene_seeds(base_seed, n_train, n_test);
    let names: Vec<String> = (0..count)
        .map(|k| if k < n_train { format!("train/scene_{k:05}.json") } else { format!("test/scene_{:05}.json", k - n_train) })
        .collect();
    std::fs::create_dir_all(out_dir.join("train"))?;
    std::fs::create_dir_all(out_dir.join("test"))?;
    names.par_iter().zip(seeds.par_iter()).try_for_each(|(name, &s)| -> Result<()> {
        let scene = gen_scene(spec, s)?;
        save_scene(&out_dir.join(name), &scene)
    })?;
    let manifest = Manifest {
        train: names[..n_train].to_vec(),
        test: names[n_train..].to_vec(),
        spec: spec.clone(),
        seeds,
    };
    std::fs::write(out_dir.join(MANIFEST_NAME), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Train and test scenes listed in a manifest.
pub fn load_dataset(manifest_path: &Path) -> Result<(Vec<Scene>, Vec<Scene>)> {
    let m = load_manifest(manifest_path)?;
    let dir: PathBuf = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let load = |names: &[String]| names.iter().map(|n| load_scene(&dir.join(n))).collect::<Result<Vec<_>>>();
    Ok((load(&m.train)?, load(&m.test)?))
}
