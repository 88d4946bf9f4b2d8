//! Library-level round trips: corpus on disk, checkpoints, guided sampling.

use nalgebra::Vector3;
use ndarray::Array2;
use physlayout::diffusion::{make_schedule, normalize, sample_scene, SamplerConfig};
use physlayout::guidance::{energy_term, GuidanceConfig, Term};
use physlayout::metrics::edge_agreement;
use physlayout::nn::checkpoint::{checkpoint_from_json, checkpoint_to_json};
use physlayout::nn::{analytic_score_denoiser, geometry_features, train, TrainConfig};
use physlayout::scene::io::{scene_from_json, scene_to_json, scene_to_obj};
use physlayout::scene::derive_relations;
use physlayout::synth::fixtures::cubes;
use physlayout::synth::{gen_dataset, gen_scene, load_dataset, GenSpec};

fn tiny_train() -> TrainConfig {
    TrainConfig {
        steps: 4,
        batch_size: 2,
        d: 16,
        heads: 2,
        n_geo: 2,
        d_edge: 4,
        m_train: 16,
        shape_tokens: 2,
        diffusion_steps: 30,
        ..TrainConfig::default()
    }
}

#[test]
fn corpus_on_disk_matches_the_generator() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GenSpec { n_max: 5, ..GenSpec::default() };
    let manifest = gen_dataset(&spec, 6, 0.5, 17, dir.path()).unwrap();
    assert_eq!((manifest.train.len(), manifest.test.len()), (3, 3));
    let (tr, te) = load_dataset(&dir.path().join("manifest.json")).unwrap();
    for (scene, seed) in tr.iter().chain(&te).zip(&manifest.seeds) {
        assert_eq!(*scene, gen_scene(&spec, *seed).unwrap());
        for term in Term::ALL {
            assert_eq!(energy_term(scene, term, &GuidanceConfig::default()), 0.0);
        }
        let agree = edge_agreement(&scene.graphs, &derive_relations(scene)).unwrap();
        assert_eq!(agree.matched, agree.total);
        assert_eq!(scene_from_json(&scene_to_json(scene)).unwrap(), *scene);
    }
}

#[test]
fn checkpoint_round_trip_preserves_predictions_and_samples() {
    let scenes: Vec<_> = (0..4).map(|k| gen_scene(&GenSpec { n_max: 4, ..GenSpec::default() }, k).unwrap()).collect();
    let cfg = tiny_train();
    let out = train(&scenes, &cfg).unwrap();
    assert_eq!(out.losses.len(), 4);
    assert!(out.losses.iter().all(|l| l.is_finite()));
    let (back, saved) = checkpoint_from_json(&checkpoint_to_json(&out.model, Some(&cfg))).unwrap();
    assert_eq!(saved.as_ref(), Some(&cfg));

    let s = &scenes[1];
    let x = normalize(&s.flatten(), cfg.pos_scale);
    let geo = geometry_features(s, 16, 3).unwrap();
    assert_eq!(back.predict(&x, 7, s, Some(&geo)).unwrap(), out.model.predict(&x, 7, s, Some(&geo)).unwrap());

    let sc = SamplerConfig {
        steps: 30,
        geometry_points: 16,
        seed: 5,
        guidance: GuidanceConfig { guidance_start_t: 10, ..GuidanceConfig::default() },
        ..SamplerConfig::default()
    };
    let a = sample_scene(s, &out.model, &sc).unwrap();
    let b = sample_scene(s, &back, &sc).unwrap();
    assert_eq!(a.scene, b.scene);
    assert_eq!(a.trace, b.trace);
    assert!(a.scene.flatten().is_finite());
}

/// A tight Gaussian centred on an overlapping layout: without guidance the
/// chain reproduces the overlap, with guidance the collision energy drops.
#[test]
fn guidance_lowers_collision_energy_of_sampled_layouts() {
    let template = cubes(&[Vector3::new(0.0, 0.505, 0.0), Vector3::new(0.7, 0.505, 0.0)], &[]);
    let base = SamplerConfig { steps: 200, record_trace: false, ..SamplerConfig::default() };
    let mean = normalize(&template.flatten(), base.pos_scale);
    let var = Array2::from_elem(mean.raw_dim(), 1e-4);
    let d = analytic_score_denoiser(mean, var, make_schedule(base.steps, base.schedule).unwrap()).unwrap();
    let guidance = GuidanceConfig { guidance_start_t: 100, ..GuidanceConfig::default() };
    let mut totals = [0.0; 2];
    for seed in 0..6 {
        for (slot, g) in [GuidanceConfig::off(), guidance.clone()].into_iter().enumerate() {
            let cfg = SamplerConfig { seed, guidance: GuidanceConfig { guidance_start_t: 100, ..g }, ..base.clone() };
            let s = sample_scene(&template, &d, &cfg).unwrap().scene;
            totals[slot] += energy_term(&s, Term::Collision, &GuidanceConfig::default());
        }
    }
    assert!(totals[0] > 0.0);
    assert!(totals[1] < totals[0], "guided {} vs unguided {}", totals[1], totals[0]);
}

#[test]
fn obj_export_has_one_named_object_per_scene_object() {
    let s = gen_scene(&GenSpec::default(), 4).unwrap();
    let obj = scene_to_obj(&s);
    assert_eq!(obj.lines().filter(|l| l.starts_with("o ")).count(), s.len());
    let verts: usize = s.objects.iter().map(|o| o.mesh.vertices().len()).sum();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), verts);
}
