use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use physlayout::diffusion::{make_schedule, normalize, sample_scene, Denoiser, SampleOutput, SamplerConfig};
use physlayout::guidance::GuidanceConfig;
use physlayout::metrics::{evaluate, report_table, scene_stability, settle};
use physlayout::nn::{analytic_score_denoiser, load_checkpoint, save_checkpoint, train_from, Model};
use physlayout::scene::io::{load_scene, save_scene, scene_to_obj};
use physlayout::scene::{RelationGraphs, Scene};
use physlayout::seed;
use physlayout::synth::dataset::{load_manifest, MANIFEST_NAME};
use physlayout::synth::gen_dataset;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Scene files named by `path`: a manifest (file or directory containing
/// one) contributes the chosen split, any other directory all of its
/// top-level `.json` files in name order, and a file itself.
pub fn scene_files(path: &Path, split: Split) -> Result<Vec<PathBuf>, CliError> {
    let manifest = if path.is_dir() { path.join(MANIFEST_NAME) } else { path.to_path_buf() };
    if manifest.is_file() && manifest.file_name().is_some_and(|n| n == MANIFEST_NAME) {
        let m = load_manifest(&manifest)?;
        let dir = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
        let names = if split == Split::Train { m.train } else { m.test };
        return Ok(names.iter().map(|n| dir.join(n)).collect());
    }
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(io_err(path, "no such file or directory"));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| io_err(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_scenes(path: &Path, split: Split) -> Result<Vec<Scene>, CliError> {
    let files = scene_files(path, split)?;
    if files.is_empty() {
        return Err(io_err(path, "no scene files found"));
    }
    files.iter().map(|f| load_scene(f).map_err(|e| io_err(f, e))).collect()
}

pub fn gen_data(cfg: &RunConfig, count: Option<usize>, out: Option<PathBuf>) -> Result<(), CliError> {
    let out = out.unwrap_or_else(|| cfg.output_dir.join("data"));
    let count = count.unwrap_or(cfg.dataset.count);
    create_dir(&out)?;
    let m = gen_dataset(&cfg.gen, count, cfg.dataset.split_ratio, cfg.seed, &out)?;
    println!("wrote {} train + {} test scenes", m.train.len(), m.test.len());
    println!("{}", out.join(MANIFEST_NAME).display());
    Ok(())
}

pub fn train(cfg: &RunConfig, data: &Path, out: Option<PathBuf>, resume: Option<&Path>) -> Result<(), CliError> {
    let out = out.unwrap_or_else(|| cfg.output_dir.join("train"));
    let scenes = load_scenes(data, Split::Train)?;
    let model = match resume {
        Some(p) => {
            let (m, _) = load_checkpoint(p)?;
            if m.cfg != cfg.train.model_config() {
                return Err(CliError::Config(format!(
                    "checkpoint {} has model dimensions {:?}, config asks for {:?}",
                    p.display(),
                    m.cfg,
                    cfg.train.model_config()
                )));
            }
            m
        }
        None => Model::init(cfg.train.model_config(), cfg.train.seed)?,
    };
    create_dir(&out)?;
    let mut csv = String::from("step,loss\n");
    let start = Instant::now();
    let every = (cfg.train.steps / 20).max(1);
    let result = train_from(model, &scenes, &cfg.train, |step, loss| {
        let _ = writeln!(csv, "{step},{loss}");
        if (step + 1) % every == 0 {
            log::info!("step {:>6} loss {loss:.5} ({:.1?})", step + 1, start.elapsed());
        }
    });
    // The loss log is useful even when training diverges.
    write_file(&out.join("loss.csv"), &csv)?;
    let result = result?;
    save_checkpoint(&out.join("checkpoint.json"), &result.model, Some(&cfg.train))?;
    let last = result.losses.last().copied().unwrap_or(f64::NAN);
    println!("final loss {last:.6} after {} steps", result.losses.len());
    println!("{}", out.join("checkpoint.json").display());
    Ok(())
}

#[derive(Serialize)]
struct TraceFile<'a> {
    template: String,
    seed: u64,
    guided: bool,
    trace: &'a [physlayout::diffusion::TraceEntry],
}

pub struct SampleArgs<'a> {
    pub ckpt: Option<&'a Path>,
    pub analytic: bool,
    pub templates: &'a Path,
    pub out: Option<PathBuf>,
    pub no_guidance: bool,
}

/// Seed of the chain for template `k`.
pub fn chain_seed(base: u64, k: usize) -> u64 {
    seed::derive(base, &[0x5A3, k as u64])
}

pub fn sample(cfg: &RunConfig, args: SampleArgs<'_>) -> Result<(), CliError> {
    let out = args.out.unwrap_or_else(|| cfg.output_dir.join("samples"));
    let files = scene_files(args.templates, Split::Test)?;
    let templates: Vec<Scene> = files.iter().map(|f| load_scene(f).map_err(|e| io_err(f, e))).collect::<Result<_, _>>()?;
    if templates.is_empty() {
        return Err(io_err(args.templates, "no templates found"));
    }
    let mut base = cfg.sampler.clone();
    if args.no_guidance {
        base.guidance = GuidanceConfig { guidance_start_t: base.guidance.guidance_start_t, ..GuidanceConfig::off() };
    }
    let model = match (args.ckpt, args.analytic) {
        (Some(p), false) => {
            let (m, train) = load_checkpoint(p)?;
            if let Some(t) = train {
                if t.diffusion_steps != base.steps {
                    return Err(CliError::Config(format!(
                        "checkpoint was trained with {} diffusion steps, sampler.steps is {}",
                        t.diffusion_steps, base.steps
                    )));
                }
            }
            if m.cfg.pos_scale != base.pos_scale {
                return Err(CliError::Config("checkpoint pos_scale differs from sampler.pos_scale".into()));
            }
            Some(m)
        }
        (None, true) => None,
        _ => return Err(CliError::Config("pass exactly one of --ckpt or --analytic".into())),
    };
    create_dir(&out)?;
    create_dir(&out.join("traces"))?;
    let sched = make_schedule(base.steps, base.schedule)?;
    let run = |k: usize, template: &Scene| -> Result<(SampleOutput, f64), CliError> {
        let cfg_k = SamplerConfig { seed: chain_seed(cfg.seed, k), ..base.clone() };
        let start = Instant::now();
        let output = match &model {
            Some(m) => sample_scene(template, m, &cfg_k)?,
            None => {
                let mean = normalize(&template.flatten(), base.pos_scale);
                let var = ndarray::Array2::from_elem(mean.dim(), cfg.analytic_variance);
                let d = analytic_score_denoiser(mean, var, sched.clone())?;
                sample_scene(template, &d as &dyn Denoiser, &cfg_k)?
            }
        };
        Ok((output, start.elapsed().as_secs_f64()))
    };
    let results: Vec<Result<(SampleOutput, f64), CliError>> =
        templates.par_iter().enumerate().map(|(k, t)| run(k, t)).collect();
    let mut total = 0.0;
    for (k, r) in results.into_iter().enumerate() {
        let (output, secs) = r?;
        total += secs;
        save_scene(&out.join(format!("scene_{k:05}.json")), &output.scene)?;
        let trace = TraceFile {
            template: files[k].display().to_string(),
            seed: chain_seed(cfg.seed, k),
            guided: !base.guidance.is_off(),
            trace: &output.trace,
        };
        write_file(
            &out.join("traces").join(format!("trace_{k:05}.json")),
            &serde_json::to_string_pretty(&trace).map_err(physlayout::Error::from)?,
        )?;
        println!("scene {k:>4}: {secs:.2}s");
    }
    println!("sampled {} scenes, mean {:.2}s per scene", templates.len(), total / templates.len() as f64);
    println!("{}", out.display());
    Ok(())
}

pub fn eval(cfg: &RunConfig, scenes: &Path, truth: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let out = out.unwrap_or_else(|| cfg.output_dir.join("report.json"));
    let generated = load_scenes(scenes, Split::Test)?;
    let reference = load_scenes(truth, Split::Test)?;
    if generated.len() != reference.len() {
        return Err(CliError::Config(format!(
            "{} generated scenes but {} ground-truth scenes",
            generated.len(),
            reference.len()
        )));
    }
    let graphs: Vec<RelationGraphs> = reference.iter().map(|s| s.graphs.clone()).collect();
    let start = Instant::now();
    let report = evaluate(&generated, &graphs, &cfg.metrics)?;
    let secs = start.elapsed().as_secs_f64();
    print!("{}", report_table(&report));
    println!("evaluated {} scenes, {:.3}s per scene", generated.len(), secs / generated.len() as f64);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_file(&out, &serde_json::to_string_pretty(&report).map_err(physlayout::Error::from)?)?;
    println!("{}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct SimulateScene {
    index: usize,
    source: String,
    converged: bool,
    iterations: usize,
    toppled: Vec<usize>,
    stability: f64,
    edges: usize,
}

#[derive(Serialize)]
struct SimulateReport {
    runs: usize,
    jitter: f64,
    stability: f64,
    scenes: Vec<SimulateScene>,
}

pub fn simulate(cfg: &RunConfig, scenes: &Path, runs: Option<usize>, out: Option<PathBuf>) -> Result<(), CliError> {
    let out = out.unwrap_or_else(|| cfg.output_dir.join("settled"));
    let files = scene_files(scenes, Split::Test)?;
    let input: Vec<Scene> = files.iter().map(|f| load_scene(f).map_err(|e| io_err(f, e))).collect::<Result<_, _>>()?;
    let mut metrics = cfg.metrics.clone();
    if let Some(r) = runs {
        metrics.stability_runs = r;
    }
    metrics.validate()?;
    create_dir(&out)?;
    let results: Vec<_> = input
        .par_iter()
        .enumerate()
        .map(|(k, s)| Ok::<_, CliError>((settle(s, &metrics.settle), scene_stability(s, k, &metrics)?)))
        .collect();
    let mut per = Vec::new();
    let (mut matched, mut total) = (0, 0);
    for (k, r) in results.into_iter().enumerate() {
        let (settled, st) = r?;
        save_scene(&out.join(format!("scene_{k:05}.json")), &settled.scene)?;
        matched += st.matched;
        total += st.total;
        per.push(SimulateScene {
            index: k,
            source: files[k].display().to_string(),
            converged: settled.converged,
            iterations: settled.iterations,
            toppled: settled.toppled,
            stability: st.fraction(),
            edges: st.total,
        });
    }
    let report = SimulateReport {
        runs: metrics.stability_runs,
        jitter: metrics.jitter,
        stability: if total == 0 { 1.0 } else { matched as f64 / total as f64 },
        scenes: per,
    };
    write_file(&out.join("stability.json"), &serde_json::to_string_pretty(&report).map_err(physlayout::Error::from)?)?;
    println!("stability {:.4} over {} scenes × {} runs", report.stability, input.len(), report.runs);
    println!("{}", out.display());
    Ok(())
}

pub fn export_obj(scene: &Path, out: &Path) -> Result<(), CliError> {
    let s = load_scene(scene).map_err(|e| io_err(scene, e))?;
    write_file(out, &scene_to_obj(&s))?;
    println!("{}", out.display());
    Ok(())
}
