//! Graph-attention ε-network.
//!
//! Per block: cross-attention from each object to its own shape tokens,
//! cross-attention to its own perceiver-distilled geometry tokens, graph
//! self-attention over all objects with an edge-feature bias on the logits,
//! then an MLP. Every sub-block is pre-norm with a residual, and every norm
//! is modulated by the timestep embedding.

use ndarray::{s, Array2, Array3};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::GeometryFeatures;
use super::params::{gaussian, Binder, Params};
use crate::ad::tape::{Tape, Var};
use crate::diffusion::{DenoiseInput, Denoiser};
use crate::scene::{PhysicalRel, RelationGraphs, Scene, SpatialRel, DESCRIPTOR_LEN, STATE_DIM};
use crate::{seed, Error, Result};

/// Fourier frequencies per position coordinate.
pub const POS_FREQS: usize = 3;
pub const POS_ENC_DIM: usize = 3 * POS_FREQS * 2;
/// Signed distances are clamped to this magnitude before encoding.
pub const SCD_CLAMP: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    pub layers: usize,
    pub heads: usize,
    pub n_geo: usize,
    pub shape_tokens: usize,
    pub d_edge: usize,
    pub use_geometry: bool,
    pub pos_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { d: 64, layers: 2, heads: 4, n_geo: 8, shape_tokens: 4, d_edge: 32, use_geometry: true, pos_scale: 4.0 }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.layers == 0 || self.heads == 0 || self.n_geo == 0 || self.shape_tokens == 0 || self.d_edge == 0 {
            return Err(Error::Config("model: all dimensions must be positive".into()));
        }
        if self.d % self.heads != 0 || self.d % 2 != 0 {
            return Err(Error::Config(format!("model: d = {} must be even and divisible by heads = {}", self.d, self.heads)));
        }
        if !(self.pos_scale > 0.0) {
            return Err(Error::Config("model: pos_scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub cfg: ModelConfig,
    pub params: Params,
}

fn fan_in(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    gaussian(rng, rows, cols, 1.0 / (rows as f64).sqrt())
}

fn push_linear(p: &mut Params, rng: &mut ChaCha8Rng, name: &str, i: usize, o: usize) {
    p.push(&format!("{name}.w"), fan_in(rng, i, o));
    p.push(&format!("{name}.b"), Array2::zeros((1, o)));
}

fn push_attention(p: &mut Params, rng: &mut ChaCha8Rng, name: &str, d: usize) {
    for part in ["q", "k", "v", "o"] {
        p.push(&format!("{name}.{part}.w"), fan_in(rng, d, d));
    }
}

/// Sinusoidal embedding of the timestep.
pub fn timestep_embedding(t: usize, d: usize) -> Array2<f64> {
    let half = d / 2;
    Array2::from_shape_fn((1, d), |(_, k)| {
        let f = (-(10_000f64.ln()) * (k % half) as f64 / half as f64).exp();
        let a = t as f64 * f;
        if k < half {
            a.sin()
        } else {
            a.cos()
        }
    })
}

/// `[sin(2^k π p_c), cos(2^k π p_c)]` over normalized positions.
pub fn position_encoding(x: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn((x.nrows(), POS_ENC_DIM), |(i, j)| {
        let (c, rest) = (j / (2 * POS_FREQS), j % (2 * POS_FREQS));
        let a = (1 << (rest / 2)) as f64 * std::f64::consts::PI * x[[i, c]];
        if rest % 2 == 0 {
            a.sin()
        } else {
            a.cos()
        }
    })
}

#[derive(Clone, Copy)]
enum GeoInput<'g> {
    Raw(Option<&'g GeometryFeatures>),
    Encoded(&'g Array2<f64>),
}

struct Ctx<'a> {
    tape: Tape,
    bind: Binder<'a>,
    tact: Var,
}

impl Model {
    pub fn init(cfg: ModelConfig, seed_value: u64) -> Result<Model> {
        cfg.validate()?;
        let mut rng = seed::rng(seed_value, &[0x1417]);
        let (d, de) = (cfg.d, cfg.d_edge);
        let mut p = Params::default();
        push_linear(&mut p, &mut rng, "time.0", d, d);
        push_linear(&mut p, &mut rng, "time.1", d, d);
        push_linear(&mut p, &mut rng, "node_in", STATE_DIM + POS_ENC_DIM, d);
        push_linear(&mut p, &mut rng, "shape_in", DESCRIPTOR_LEN, cfg.shape_tokens * d);
        p.push("edge.spatial", gaussian(&mut rng, SpatialRel::ALL.len(), de, 1.0));
        p.push("edge.physical", gaussian(&mut rng, PhysicalRel::ALL.len(), de, 1.0));
        push_linear(&mut p, &mut rng, "edge.proj", 2 * de, de);
        if cfg.use_geometry {
            push_linear(&mut p, &mut rng, "geo.point.0", 4, d);
            push_linear(&mut p, &mut rng, "geo.point.1", d, d);
            p.push("geo.latents", gaussian(&mut rng, cfg.n_geo, d, 1.0));
            push_attention(&mut p, &mut rng, "geo.attn", d);
            push_linear(&mut p, &mut rng, "geo.mlp.0", d, 2 * d);
            push_linear(&mut p, &mut rng, "geo.mlp.1", 2 * d, d);
        }
        let sub = if cfg.use_geometry { ["shape", "geo", "graph", "mlp"].as_slice() } else { ["shape", "graph", "mlp"].as_slice() };
        for l in 0..cfg.layers {
            for s in sub {
                // Small modulation so the timestep matters from the start.
                p.push(&format!("block{l}.{s}.ada.w"), gaussian(&mut rng, d, 2 * d, 0.1 / (d as f64).sqrt()));
                p.push(&format!("block{l}.{s}.ada.b"), Array2::zeros((1, 2 * d)));
            }
            push_attention(&mut p, &mut rng, &format!("block{l}.shape"), d);
            if cfg.use_geometry {
                push_attention(&mut p, &mut rng, &format!("block{l}.geo"), d);
            }
            push_attention(&mut p, &mut rng, &format!("block{l}.graph"), d);
            p.push(&format!("block{l}.graph.bias.w"), fan_in(&mut rng, de, cfg.heads));
            push_linear(&mut p, &mut rng, &format!("block{l}.mlp.0"), d, 2 * d);
            push_linear(&mut p, &mut rng, &format!("block{l}.mlp.1"), 2 * d, d);
        }
        p.push("out.ada.w", gaussian(&mut rng, d, 2 * d, 0.1 / (d as f64).sqrt()));
        p.push("out.ada.b", Array2::zeros((1, 2 * d)));
        // Zero head: the untrained network predicts ε̂ = 0.
        p.push("out.head.w", Array2::zeros((d, STATE_DIM)));
        p.push("out.head.b", Array2::zeros((1, STATE_DIM)));
        Ok(Model { cfg, params: p })
    }

    /// Replaces the zero output head with random weights; used by tests
    /// that need every parameter to influence the output.
    pub fn randomize_head(&mut self, seed_value: u64) {
        let mut rng = seed::rng(seed_value, &[0x4EAD]);
        let d = self.cfg.d;
        *self.params.get_mut("out.head.w") = fan_in(&mut rng, d, STATE_DIM);
        *self.params.get_mut("out.head.b") = gaussian(&mut rng, 1, STATE_DIM, 0.1);
    }

    fn ada_ln(&self, c: &mut Ctx, h: Var, name: &str) -> Var {
        let d = self.cfg.d;
        let ln = c.tape.layer_norm(h);
        let ss = c.bind.linear(&mut c.tape, &format!("{name}.ada"), c.tact);
        let scale = c.tape.slice_cols(ss, 0, d);
        let shift = c.tape.slice_cols(ss, d, 2 * d);
        let one_plus = c.tape.affine(scale, 1.0, 1.0);
        let m = c.tape.mul_row(ln, one_plus);
        c.tape.add_row(m, shift)
    }

    fn attend(&self, c: &mut Ctx, name: &str, q_in: Var, kv: Var, ranges: Vec<(usize, usize)>, bias: Option<Var>) -> Var {
        let q = c.bind.linear_nobias(&mut c.tape, &format!("{name}.q"), q_in);
        let k = c.bind.linear_nobias(&mut c.tape, &format!("{name}.k"), kv);
        let v = c.bind.linear_nobias(&mut c.tape, &format!("{name}.v"), kv);
        let a = c.tape.attention(q, k, v, self.cfg.heads, ranges, bias);
        c.bind.linear_nobias(&mut c.tape, &format!("{name}.o"), a)
    }

    fn mlp(&self, c: &mut Ctx, name: &str, x: Var) -> Var {
        let h = c.bind.linear(&mut c.tape, &format!("{name}.0"), x);
        let h = c.tape.silu(h);
        c.bind.linear(&mut c.tape, &format!("{name}.1"), h)
    }

    fn edge_var(&self, c: &mut Ctx, graphs: &RelationGraphs) -> Var {
        let n = graphs.len();
        let mut rho = Vec::with_capacity(n * n);
        let mut kappa = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                rho.push(graphs.spatial(i, j).index());
                kappa.push(graphs.physical(i, j).index());
            }
        }
        let ts = c.bind.var(&mut c.tape, "edge.spatial");
        let tk = c.bind.var(&mut c.tape, "edge.physical");
        let a = c.tape.gather_rows(ts, &rho);
        let b = c.tape.gather_rows(tk, &kappa);
        let e = c.tape.concat(&[a, b]);
        let e = c.bind.linear(&mut c.tape, "edge.proj", e);
        c.tape.silu(e)
    }

    /// Edge features `E[i][j]`, N×N×d_edge.
    pub fn edge_features(&self, graphs: &RelationGraphs) -> Array3<f64> {
        let mut tape = Tape::new();
        let tact = tape.input(Array2::zeros((1, 1)));
        let mut c = Ctx { tape, bind: Binder::new(&self.params), tact };
        let e = self.edge_var(&mut c, graphs);
        let n = graphs.len();
        c.tape.value(e).clone().into_shape_with_order((n, n, self.cfg.d_edge)).expect("N²×d_e")
    }

    fn geometry_input(&self, geo: &GeometryFeatures) -> Array2<f64> {
        let (n, m, _) = geo.0.dim();
        let s = self.cfg.pos_scale;
        Array2::from_shape_fn((n * m, 4), |(r, ch)| {
            let v = geo.0[[r / m, r % m, ch]];
            if ch < 3 {
                v / s
            } else {
                v.clamp(-SCD_CLAMP, SCD_CLAMP)
            }
        })
    }

    /// Perceiver over the per-object point features: N·n_geo latent tokens.
    fn encode_geometry_var(&self, c: &mut Ctx, geo: &GeometryFeatures, n: usize) -> Result<Var> {
        let cfg = &self.cfg;
        if geo.objects() != n {
            return Err(Error::ShapeMismatch { expected: format!("{n} objects of geometry"), got: geo.objects().to_string() });
        }
        let m = geo.points();
        let pts = c.tape.input(self.geometry_input(geo));
        let pf = c.bind.linear(&mut c.tape, "geo.point.0", pts);
        let pf = c.tape.silu(pf);
        let pf = c.bind.linear(&mut c.tape, "geo.point.1", pf);
        let pf = c.tape.layer_norm(pf);
        let lat = c.bind.var(&mut c.tape, "geo.latents");
        let idx: Vec<usize> = (0..n).flat_map(|_| 0..cfg.n_geo).collect();
        let lat = c.tape.gather_rows(lat, &idx);
        let q = c.tape.layer_norm(lat);
        let ranges = (0..n).flat_map(|i| std::iter::repeat((i * m, (i + 1) * m)).take(cfg.n_geo)).collect();
        let a = self.attend(c, "geo.attn", q, pf, ranges, None);
        let g = c.tape.add(lat, a);
        let gn = c.tape.layer_norm(g);
        let f = self.mlp(c, "geo.mlp", gn);
        Ok(c.tape.add(g, f))
    }

    /// Geometry tokens for inference. They depend only on the features, so a
    /// sampler can reuse them until the features are refreshed.
    pub fn encode_geometry(&self, geo: &GeometryFeatures) -> Result<Array2<f64>> {
        if !self.cfg.use_geometry {
            return Err(Error::Config("model was built without the geometry branch".into()));
        }
        let mut tape = Tape::new();
        let tact = tape.input(Array2::zeros((1, 1)));
        let mut c = Ctx { tape, bind: Binder::new(&self.params), tact };
        let v = self.encode_geometry_var(&mut c, geo, geo.objects())?;
        Ok(c.tape.value(v).clone())
    }

    /// Builds the forward graph; returns the tape state and the N×9 output.
    fn forward<'a>(&'a self, x_t: &Array2<f64>, t: usize, template: &Scene, geo: GeoInput<'_>) -> Result<(Ctx<'a>, Var)> {
        let n = template.len();
        if x_t.dim() != (n, STATE_DIM) {
            return Err(Error::ShapeMismatch { expected: format!("{n}×{STATE_DIM}"), got: format!("{:?}", x_t.dim()) });
        }
        if template.graphs.len() != n {
            return Err(Error::GraphSizeMismatch(format!("{n} objects, {} graph nodes", template.graphs.len())));
        }
        let cfg = &self.cfg;
        let d = cfg.d;
        let mut tape = Tape::new();
        let te = tape.input(timestep_embedding(t, d));
        let mut c = Ctx { tape, bind: Binder::new(&self.params), tact: te };
        let h = c.bind.linear(&mut c.tape, "time.0", te);
        let h = c.tape.silu(h);
        let temb = c.bind.linear(&mut c.tape, "time.1", h);
        c.tact = c.tape.silu(temb);

        let mut feat = Array2::zeros((n, STATE_DIM + POS_ENC_DIM));
        feat.slice_mut(s![.., ..STATE_DIM]).assign(x_t);
        feat.slice_mut(s![.., STATE_DIM..]).assign(&position_encoding(x_t));
        let feat = c.tape.input(feat);
        let mut h = c.bind.linear(&mut c.tape, "node_in", feat);

        let desc = Array2::from_shape_fn((n, DESCRIPTOR_LEN), |(i, k)| template.objects[i].shape_desc[k]);
        let desc = c.tape.input(desc);
        let st = c.bind.linear(&mut c.tape, "shape_in", desc);
        let st = c.tape.reshape(st, n * cfg.shape_tokens, d);
        let shape_ranges: Vec<_> = (0..n).map(|i| (i * cfg.shape_tokens, (i + 1) * cfg.shape_tokens)).collect();

        let edges = self.edge_var(&mut c, &template.graphs);

        let geo_tokens = match (cfg.use_geometry, geo) {
            (false, _) => None,
            (true, GeoInput::Raw(Some(g))) => Some(self.encode_geometry_var(&mut c, g, n)?),
            (true, GeoInput::Raw(None)) => return Err(Error::Config("model expects geometry features".into())),
            (true, GeoInput::Encoded(tokens)) => {
                if tokens.dim() != (n * cfg.n_geo, d) {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{}×{d} geometry tokens", n * cfg.n_geo),
                        got: format!("{:?}", tokens.dim()),
                    });
                }
                Some(c.tape.input(tokens.clone()))
            }
        };
        let geo_ranges: Vec<_> = (0..n).map(|i| (i * cfg.n_geo, (i + 1) * cfg.n_geo)).collect();

        for l in 0..cfg.layers {
            let hn = self.ada_ln(&mut c, h, &format!("block{l}.shape"));
            let a = self.attend(&mut c, &format!("block{l}.shape"), hn, st, shape_ranges.clone(), None);
            h = c.tape.add(h, a);
            if let Some(g) = geo_tokens {
                let hn = self.ada_ln(&mut c, h, &format!("block{l}.geo"));
                let a = self.attend(&mut c, &format!("block{l}.geo"), hn, g, geo_ranges.clone(), None);
                h = c.tape.add(h, a);
            }
            let hn = self.ada_ln(&mut c, h, &format!("block{l}.graph"));
            let bias = c.bind.linear_nobias(&mut c.tape, &format!("block{l}.graph.bias"), edges);
            let a = self.attend(&mut c, &format!("block{l}.graph"), hn, hn, vec![(0, n); n], Some(bias));
            h = c.tape.add(h, a);
            let hn = self.ada_ln(&mut c, h, &format!("block{l}.mlp"));
            let f = self.mlp(&mut c, &format!("block{l}.mlp"), hn);
            h = c.tape.add(h, f);
        }
        let hn = self.ada_ln(&mut c, h, "out");
        let out = c.bind.linear(&mut c.tape, "out.head", hn);
        Ok((c, out))
    }

    /// ε̂ for a normalized state.
    pub fn predict(&self, x_t: &Array2<f64>, t: usize, template: &Scene, geo: Option<&GeometryFeatures>) -> Result<Array2<f64>> {
        let (c, out) = self.forward(x_t, t, template, GeoInput::Raw(geo))?;
        Ok(c.tape.value(out).clone())
    }

    /// As [`Model::predict`] with tokens from [`Model::encode_geometry`].
    pub fn predict_encoded(&self, x_t: &Array2<f64>, t: usize, template: &Scene, tokens: &Array2<f64>) -> Result<Array2<f64>> {
        let (c, out) = self.forward(x_t, t, template, GeoInput::Encoded(tokens))?;
        Ok(c.tape.value(out).clone())
    }

    /// MSE against `target` and its gradient for every parameter.
    pub fn loss_and_grad(
        &self,
        x_t: &Array2<f64>,
        t: usize,
        template: &Scene,
        geo: Option<&GeometryFeatures>,
        target: &Array2<f64>,
    ) -> Result<(f64, Vec<Array2<f64>>)> {
        let (mut c, out) = self.forward(x_t, t, template, GeoInput::Raw(geo))?;
        let loss = c.tape.mse(out, target.clone());
        let value = c.tape.value(loss)[[0, 0]];
        Ok((value, c.tape.backward(loss, &self.params.shapes())))
    }
}

impl Denoiser for Model {
    fn predict_eps(&self, input: &DenoiseInput<'_>) -> Result<Array2<f64>> {
        match input.geometry_tokens {
            Some(tokens) if self.cfg.use_geometry => self.predict_encoded(input.x_t, input.t, input.template, tokens),
            _ => self.predict(input.x_t, input.t, input.template, input.geometry),
        }
    }

    fn uses_geometry(&self) -> bool {
        self.cfg.use_geometry
    }

    fn encode_geometry(&self, geo: &GeometryFeatures) -> Result<Option<Array2<f64>>> {
        if self.cfg.use_geometry {
            self.encode_geometry(geo).map(Some)
        } else {
            Ok(None)
        }
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector3;
    use ndarray::Axis;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::nn::geometry_features;
    use crate::synth::fixtures::{boxes, cubes};

    fn small_cfg() -> ModelConfig {
        ModelConfig { d: 16, heads: 2, n_geo: 2, shape_tokens: 2, d_edge: 4, ..Default::default() }
    }

    fn three_objects() -> Scene {
        let mut s = boxes(
            &[
                (Vector3::new(1.0, 0.8, 1.2), Vector3::new(0.0, 0.4, 0.0)),
                (Vector3::new(0.3, 0.3, 0.3), Vector3::new(0.1, 0.95, 0.2)),
                (Vector3::new(0.5, 1.5, 0.5), Vector3::new(2.0, 0.75, -1.0)),
            ],
            &[(1, 0)],
        );
        s.graphs.set_spatial_pair(0, 2, SpatialRel::LeftOf);
        s
    }

    fn random_state(n: usize, seed_value: u64) -> Array2<f64> {
        let mut rng = seed::rng(seed_value, &[]);
        Array2::from_shape_simple_fn((n, STATE_DIM), || rng.random_range(-1.0..1.0))
    }

    #[test]
    fn permutation_equivariance() {
        let mut m = Model::init(small_cfg(), 3).unwrap();
        m.randomize_head(4);
        let s = three_objects();
        let x = random_state(3, 5);
        let geo = geometry_features(&s, 32, 6).unwrap();
        let out = m.predict(&x, 417, &s, Some(&geo)).unwrap();
        let perm = [2, 0, 1];
        let inv: Vec<usize> = (0..3).map(|k| perm.iter().position(|&p| p == k).unwrap()).collect();
        let ps = s.permuted(&perm);
        let px = x.select(Axis(0), &inv);
        let pg = GeometryFeatures(geo.0.select(Axis(0), &inv));
        let pout = m.predict(&px, 417, &ps, Some(&pg)).unwrap();
        for i in 0..3 {
            for k in 0..STATE_DIM {
                assert!((pout[[perm[i], k]] - out[[i, k]]).abs() < 1e-9);
            }
        }
        assert!(out.iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn cached_geometry_tokens_give_identical_output() {
        let mut m = Model::init(small_cfg(), 8).unwrap();
        m.randomize_head(9);
        let s = three_objects();
        let x = random_state(3, 10);
        let geo = geometry_features(&s, 32, 11).unwrap();
        let tokens = m.encode_geometry(&geo).unwrap();
        assert_eq!(tokens.dim(), (3 * m.cfg.n_geo, m.cfg.d));
        assert_eq!(m.predict_encoded(&x, 77, &s, &tokens).unwrap(), m.predict(&x, 77, &s, Some(&geo)).unwrap());
        assert!(m.predict_encoded(&x, 77, &s, &tokens.slice(s![..2, ..]).to_owned()).is_err());
    }

    #[test]
    fn output_shapes_for_many_sizes() {
        let m = Model::init(ModelConfig { use_geometry: false, ..small_cfg() }, 1).unwrap();
        for n in [1, 2, 7, 16] {
            let centres: Vec<_> = (0..n).map(|i| Vector3::new(i as f64 * 2.0, 0.5, 0.0)).collect();
            let s = cubes(&centres, &[]);
            let out = m.predict(&random_state(n, n as u64), 10, &s, None).unwrap();
            assert_eq!(out.dim(), (n, STATE_DIM));
            assert!(out.iter().all(|v| *v == 0.0), "zero head");
        }
        let s = cubes(&[Vector3::zeros()], &[]);
        assert!(matches!(m.predict(&random_state(2, 0), 10, &s, None), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn parameter_gradients_match_finite_differences() {
        let mut m = Model::init(small_cfg(), 8).unwrap();
        m.randomize_head(9);
        let s = cubes(&[Vector3::new(0.0, 0.5, 0.0), Vector3::new(0.6, 0.7, 0.1)], &[(1, 0)]);
        let x = random_state(2, 10);
        let geo = geometry_features(&s, 16, 11).unwrap();
        let target = random_state(2, 12);
        let (_, grads) = m.loss_and_grad(&x, 250, &s, Some(&geo), &target).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 100 {
            let p = rng.random_range(0..m.params.len());
            let k = rng.random_range(0..m.params.tensors()[p].len());
            let cols = m.params.tensors()[p].ncols();
            let (r, c) = (k / cols, k % cols);
            let orig = m.params.tensors()[p][[r, c]];
            let mut eval = |v: f64| {
                m.params.tensors_mut()[p][[r, c]] = v;
                m.loss_and_grad(&x, 250, &s, Some(&geo), &target).unwrap().0
            };
            let fd = (eval(orig + h) - eval(orig - h)) / (2.0 * h);
            m.params.tensors_mut()[p][[r, c]] = orig;
            let an = grads[p][[r, c]];
            let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-4);
            assert!(rel < 1e-4, "{}[{r},{c}]: {an} vs {fd}", m.params.names()[p]);
            checked += 1;
        }
    }

    #[test]
    fn edge_and_time_conditioning_matter() {
        let mut m = Model::init(small_cfg(), 20).unwrap();
        m.randomize_head(21);
        let s = three_objects();
        let x = random_state(3, 22);
        let geo = geometry_features(&s, 16, 23).unwrap();
        let base = m.predict(&x, 10, &s, Some(&geo)).unwrap();
        let late = m.predict(&x, 900, &s, Some(&geo)).unwrap();
        assert!((&base - &late).iter().any(|d| d.abs() > 1e-6));
        let mut s2 = s.clone();
        s2.graphs.set_physical(1, 0, PhysicalRel::None);
        let other = m.predict(&x, 10, &s2, Some(&geo)).unwrap();
        assert!((&base - &other).iter().any(|d| d.abs() > 1e-6));
    }

    #[test]
    fn edge_features_follow_labels() {
        let m = Model::init(small_cfg(), 30).unwrap();
        let empty = RelationGraphs::empty(3);
        let e = m.edge_features(&empty);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(e.slice(s![i, j, ..]), e.slice(s![0, 0, ..]));
            }
        }
        let g = three_objects().graphs;
        let e = m.edge_features(&g);
        let perm = [1, 2, 0];
        let pe = m.edge_features(&g.permuted(&perm));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(pe.slice(s![perm[i], perm[j], ..]), e.slice(s![i, j, ..]));
            }
        }
        let mut g2 = g.clone();
        g2.set_spatial_pair(1, 2, SpatialRel::Behind);
        let e2 = m.edge_features(&g2);
        for i in 0..3 {
            for j in 0..3 {
                let same = e2.slice(s![i, j, ..]) == e.slice(s![i, j, ..]);
                assert_eq!(same, !((i, j) == (1, 2) || (i, j) == (2, 1)), "({i},{j})");
            }
        }
    }
}
