//! Trains the toy denoiser on a freshly generated corpus and prints the
//! loss every 100 steps.
//!
//! cargo run --release -p physlayout --example toy_train -- [steps] [scenes] [lr]

use std::time::Instant;

use physlayout::nn::{train_from, Model, TrainConfig};
use physlayout::synth::{gen_scene, GenSpec};

fn main() -> physlayout::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let steps = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let count = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(200);
    let lr = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1e-4);
    let spec = GenSpec { n_max: 8, ..Default::default() };
    let scenes = (0..count).map(|s| gen_scene(&spec, s)).collect::<physlayout::Result<Vec<_>>>()?;
    let cfg = TrainConfig { steps, lr, ..Default::default() };
    let start = Instant::now();
    let mut window = Vec::new();
    let out = train_from(Model::init(cfg.model_config(), cfg.seed)?, &scenes, &cfg, |step, loss| {
        window.push(loss);
        if (step + 1) % 100 == 0 {
            let mean = window.iter().sum::<f64>() / window.len() as f64;
            println!("step {:5}  loss {mean:.4}  {:.1}s", step + 1, start.elapsed().as_secs_f64());
            window.clear();
        }
    })?;
    println!("first {:.4} last {:.4}", out.losses[0], out.losses[out.losses.len() - 1]);
    Ok(())
}
