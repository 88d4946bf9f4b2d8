//! Reverse-mode automatic differentiation over row-major matrices.
//!
//! A [`Tape`] records each operation with its output value. `backward`
//! walks the records in reverse and accumulates adjoints. Parameters are
//! leaves tagged with their index in the caller's parameter list, so a
//! gradient for every parameter can be read back after one sweep.

use ndarray::{s, Array2, ArrayView2, Axis};

pub const LN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    /// Adds a 1×c row to every row.
    AddRow(Var, Var),
    /// Multiplies every row elementwise by a 1×c row.
    MulRow(Var, Var),
    Affine(Var, f64),
    Silu(Var),
    LayerNorm { x: Var, inv_std: Vec<f64> },
    Concat(Vec<Var>),
    Slice(Var, usize),
    Gather(Var, Vec<usize>),
    Reshape(Var),
    Attention(Box<AttnRecord>),
    Mse(Var, Array2<f64>),
}

#[derive(Debug)]
struct AttnRecord {
    q: Var,
    k: Var,
    v: Var,
    bias: Option<Var>,
    heads: usize,
    ranges: Vec<(usize, usize)>,
    /// Softmax weights, `probs[(i * heads + h)]` over the key range of `i`.
    probs: Vec<Vec<f64>>,
}

#[derive(Debug)]
struct Node {
    value: Array2<f64>,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn input(&mut self, x: Array2<f64>) -> Var {
        self.push(x, Op::Input)
    }

    pub fn param(&mut self, index: usize, x: &Array2<f64>) -> Var {
        self.push(x.clone(), Op::Param(index))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::Mul(a, b))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let v = self.value(a) + self.value(row);
        self.push(v, Op::AddRow(a, row))
    }

    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        let v = self.value(a) * self.value(row);
        self.push(v, Op::MulRow(a, row))
    }

    /// `scale · a + shift`.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Var {
        let v = self.value(a).mapv(|x| scale * x + shift);
        self.push(v, Op::Affine(a, scale))
    }

    pub fn silu(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(silu);
        self.push(v, Op::Silu(a))
    }

    /// Per-row normalization to zero mean and unit variance, no affine.
    pub fn layer_norm(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let c = xv.ncols() as f64;
        let mut out = xv.clone();
        let mut inv_std = Vec::with_capacity(xv.nrows());
        for mut row in out.rows_mut() {
            let mean = row.sum() / c;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c;
            let is = 1.0 / (var + LN_EPS).sqrt();
            row.mapv_inplace(|v| (v - mean) * is);
            inv_std.push(is);
        }
        self.push(out, Op::LayerNorm { x, inv_std })
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let views: Vec<ArrayView2<f64>> = parts.iter().map(|p| self.value(*p).view()).collect();
        let v = ndarray::concatenate(Axis(1), &views).expect("concat needs equal row counts");
        self.push(v, Op::Concat(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let v = self.value(a).slice(s![.., start..end]).to_owned();
        self.push(v, Op::Slice(a, start))
    }

    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Var {
        let v = self.value(a).select(Axis(0), idx);
        self.push(v, Op::Gather(a, idx.to_vec()))
    }

    /// Row-major reshape; the element order is unchanged.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let v = self.value(a).as_standard_layout().to_owned().into_shape_with_order((rows, cols)).expect("element count");
        self.push(v, Op::Reshape(a))
    }

    /// Multi-head scaled dot-product attention. Query `i` attends to keys
    /// `ranges[i].0..ranges[i].1`; `bias`, if given, is `(Nq·Nk)×heads` and
    /// is added to the logits.
    pub fn attention(
        &mut self,
        q: Var,
        k: Var,
        v: Var,
        heads: usize,
        ranges: Vec<(usize, usize)>,
        bias: Option<Var>,
    ) -> Var {
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        let (nq, d) = qv.dim();
        let nk = kv.nrows();
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let (qs, ks, vs) = (contiguous(qv), contiguous(kv), contiguous(vv));
        let bias_v = bias.map(|b| contiguous(self.value(b)));
        let mut out = vec![0.0; nq * d];
        let mut probs = Vec::with_capacity(nq * heads);
        for i in 0..nq {
            let (s0, s1) = ranges[i];
            for h in 0..heads {
                let off = h * dh;
                let qi = &qs[i * d + off..i * d + off + dh];
                let mut p: Vec<f64> = (s0..s1)
                    .map(|j| {
                        let b = bias_v.as_ref().map_or(0.0, |b| b[(i * nk + j) * heads + h]);
                        scale * dot(qi, &ks[j * d + off..j * d + off + dh]) + b
                    })
                    .collect();
                let m = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for x in p.iter_mut() {
                    *x = (*x - m).exp();
                    z += *x;
                }
                let o = &mut out[i * d + off..i * d + off + dh];
                for (pj, j) in p.iter_mut().zip(s0..s1) {
                    *pj /= z;
                    axpy(*pj, &vs[j * d + off..j * d + off + dh], o);
                }
                probs.push(p);
            }
        }
        let out = Array2::from_shape_vec((nq, d), out).expect("nq×d");
        self.push(out, Op::Attention(Box::new(AttnRecord { q, k, v, bias, heads, ranges, probs })))
    }

    /// Mean squared error against a constant target, as a 1×1 value.
    pub fn mse(&mut self, a: Var, target: Array2<f64>) -> Var {
        let diff = self.value(a) - &target;
        let v = diff.mapv(|x| x * x).mean().unwrap_or(0.0);
        self.push(Array2::from_elem((1, 1), v), Op::Mse(a, target))
    }

    /// Adjoints of every node for the scalar `loss`; entry `k` of the result
    /// is the gradient for parameter index `k` (zero if unused).
    pub fn backward(&self, loss: Var, param_shapes: &[(usize, usize)]) -> Vec<Array2<f64>> {
        let mut adj: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        adj[loss.0] = Some(Array2::ones(self.nodes[loss.0].value.raw_dim()));
        let mut grads: Vec<Array2<f64>> = param_shapes.iter().map(|s| Array2::zeros(*s)).collect();
        fn acc(adj: &mut [Option<Array2<f64>>], v: Var, g: Array2<f64>) {
            match &mut adj[v.0] {
                Some(a) => *a += &g,
                slot => *slot = Some(g),
            }
        }
        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param(p) => grads[*p] += &g,
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    acc(&mut adj, *a, ga);
                    acc(&mut adj, *b, gb);
                }
                Op::Add(a, b) => {
                    acc(&mut adj, *a, g.clone());
                    acc(&mut adj, *b, g);
                }
                Op::Mul(a, b) => {
                    acc(&mut adj, *a, &g * self.value(*b));
                    acc(&mut adj, *b, &g * self.value(*a));
                }
                Op::AddRow(a, r) => {
                    acc(&mut adj, *r, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(&mut adj, *a, g);
                }
                Op::MulRow(a, r) => {
                    let gr = (&g * self.value(*a)).sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut adj, *r, gr);
                    acc(&mut adj, *a, &g * self.value(*r));
                }
                Op::Affine(a, scale) => acc(&mut adj, *a, g * *scale),
                Op::Silu(a) => {
                    let mut ga = g;
                    ndarray::Zip::from(&mut ga).and(self.value(*a)).for_each(|gv, &x| {
                        let sg = 1.0 / (1.0 + (-x).exp());
                        *gv *= sg * (1.0 + x * (1.0 - sg));
                    });
                    acc(&mut adj, *a, ga);
                }
                Op::LayerNorm { x, inv_std } => {
                    let y = &node.value;
                    let c = y.ncols() as f64;
                    let mut gx = Array2::zeros(y.raw_dim());
                    for r in 0..y.nrows() {
                        let (gy, yr) = (g.row(r), y.row(r));
                        let mean_g = gy.sum() / c;
                        let mean_gy = gy.dot(&yr) / c;
                        for k in 0..y.ncols() {
                            gx[[r, k]] = inv_std[r] * (gy[k] - mean_g - yr[k] * mean_gy);
                        }
                    }
                    acc(&mut adj, *x, gx);
                }
                Op::Concat(parts) => {
                    let mut c0 = 0;
                    for p in parts {
                        let w = self.value(*p).ncols();
                        acc(&mut adj, *p, g.slice(s![.., c0..c0 + w]).to_owned());
                        c0 += w;
                    }
                }
                Op::Slice(a, start) => {
                    let mut ga = Array2::zeros(self.value(*a).raw_dim());
                    ga.slice_mut(s![.., *start..*start + g.ncols()]).assign(&g);
                    acc(&mut adj, *a, ga);
                }
                Op::Gather(a, rows) => {
                    let mut ga = Array2::zeros(self.value(*a).raw_dim());
                    for (k, &r) in rows.iter().enumerate() {
                        let mut dst = ga.row_mut(r);
                        dst += &g.row(k);
                    }
                    acc(&mut adj, *a, ga);
                }
                Op::Reshape(a) => {
                    let shape = self.value(*a).raw_dim();
                    acc(&mut adj, *a, g.into_shape_with_order(shape).expect("element count"));
                }
                Op::Attention(rec) => self.attention_backward(rec, &g, &mut adj),
                Op::Mse(a, target) => {
                    let n = target.len().max(1) as f64;
                    let ga = (self.value(*a) - target) * (2.0 * g[[0, 0]] / n);
                    acc(&mut adj, *a, ga);
                }
            }
        }
        grads
    }

    fn attention_backward(&self, rec: &AttnRecord, g: &Array2<f64>, adj: &mut [Option<Array2<f64>>]) {
        let (qv, kv, vv) = (self.value(rec.q), self.value(rec.k), self.value(rec.v));
        let (nq, d) = qv.dim();
        let nk = kv.nrows();
        let heads = rec.heads;
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let (qs, ks, vs, gs) = (contiguous(qv), contiguous(kv), contiguous(vv), contiguous(g));
        let mut gq = vec![0.0; qs.len()];
        let mut gk = vec![0.0; ks.len()];
        let mut gv = vec![0.0; vs.len()];
        let mut gb = rec.bias.map(|b| vec![0.0; self.value(b).len()]);
        let mut dp = Vec::new();
        for i in 0..nq {
            let (s0, s1) = rec.ranges[i];
            for h in 0..heads {
                let off = h * dh;
                let p = &rec.probs[i * heads + h];
                let go = &gs[i * d + off..i * d + off + dh];
                dp.clear();
                dp.extend((s0..s1).map(|j| dot(go, &vs[j * d + off..j * d + off + dh])));
                let avg: f64 = p.iter().zip(&dp).map(|(a, b)| a * b).sum();
                for (n, j) in (s0..s1).enumerate() {
                    let dl = p[n] * (dp[n] - avg);
                    axpy(p[n], go, &mut gv[j * d + off..j * d + off + dh]);
                    axpy(scale * dl, &ks[j * d + off..j * d + off + dh], &mut gq[i * d + off..i * d + off + dh]);
                    axpy(scale * dl, &qs[i * d + off..i * d + off + dh], &mut gk[j * d + off..j * d + off + dh]);
                    if let Some(gb) = gb.as_mut() {
                        gb[(i * nk + j) * heads + h] += dl;
                    }
                }
            }
        }
        let acc = |adj: &mut [Option<Array2<f64>>], v: Var, g: Array2<f64>| match &mut adj[v.0] {
            Some(a) => *a += &g,
            slot => *slot = Some(g),
        };
        let shaped = |v: Vec<f64>, like: &Array2<f64>| Array2::from_shape_vec(like.raw_dim(), v).expect("same size");
        acc(adj, rec.q, shaped(gq, qv));
        acc(adj, rec.k, shaped(gk, kv));
        acc(adj, rec.v, shaped(gv, vv));
        if let (Some(b), Some(gb)) = (rec.bias, gb) {
            acc(adj, b, shaped(gb, self.value(b)));
        }
    }
}

fn contiguous(a: &Array2<f64>) -> std::borrow::Cow<'_, [f64]> {
    match a.as_slice() {
        Some(s) => std::borrow::Cow::Borrowed(s),
        None => std::borrow::Cow::Owned(a.iter().copied().collect()),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_simple_fn((r, c), || rng.random_range(-1.0..1.0))
    }

    /// Builds a graph touching every op from three parameters and returns
    /// the loss value.
    fn build(tape: &mut Tape, p: &[Array2<f64>]) -> Var {
        let a = tape.param(0, &p[0]); // 6×8
        let w = tape.param(1, &p[1]); // 8×8
        let b = tape.param(2, &p[2]); // 1×8
        let bias_w = tape.param(3, &p[3]); // 36×2
        let x = tape.matmul(a, w);
        let x = tape.add_row(x, b);
        let x = tape.layer_norm(x);
        let y = tape.mul_row(x, b);
        let y = tape.silu(y);
        let y = tape.affine(y, 1.5, 0.2);
        let z = tape.mul(y, x);
        let z = tape.add(z, x);
        let left = tape.slice_cols(z, 0, 4);
        let right = tape.slice_cols(z, 4, 8);
        let cat = tape.concat(&[right, left]);
        let g = tape.gather_rows(cat, &[5, 0, 2, 2, 1, 3]);
        let r = tape.reshape(g, 12, 4);
        let r = tape.reshape(r, 6, 8);
        let ranges = vec![(0, 6), (0, 3), (2, 6), (1, 2), (0, 6), (3, 5)];
        let att = tape.attention(r, z, cat, 2, ranges.clone(), Some(bias_w));
        let att2 = tape.attention(att, r, z, 2, ranges, None);
        tape.mse(att2, Array2::from_elem((6, 8), 0.3))
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut params = vec![rand_mat(&mut rng, 6, 8), rand_mat(&mut rng, 8, 8), rand_mat(&mut rng, 1, 8), rand_mat(&mut rng, 36, 2)];
        let shapes: Vec<_> = params.iter().map(|p| p.dim()).collect();
        let mut tape = Tape::new();
        let loss = build(&mut tape, &params);
        let grads = tape.backward(loss, &shapes);
        let h = 1e-6;
        for pi in 0..params.len() {
            for idx in 0..params[pi].len() {
                let (r, c) = (idx / params[pi].ncols(), idx % params[pi].ncols());
                let orig = params[pi][[r, c]];
                params[pi][[r, c]] = orig + h;
                let mut t = Tape::new();
                let l = build(&mut t, &params);
                let up = t.value(l)[[0, 0]];
                params[pi][[r, c]] = orig - h;
                let mut t = Tape::new();
                let l = build(&mut t, &params);
                let down = t.value(l)[[0, 0]];
                params[pi][[r, c]] = orig;
                let fd = (up - down) / (2.0 * h);
                let an = grads[pi][[r, c]];
                // FD round-off is ~1e-10 absolute, hence the floor.
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-4);
                assert!(rel < 1e-5, "param {pi}[{r},{c}]: {an} vs {fd}");
            }
        }
    }

    #[test]
    fn attention_rows_are_convex_combinations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut tape = Tape::new();
        let q = tape.input(rand_mat(&mut rng, 3, 4));
        let k = tape.input(rand_mat(&mut rng, 5, 4));
        let v = tape.input(Array2::from_elem((5, 4), 2.5));
        let o = tape.attention(q, k, v, 2, vec![(0, 5), (1, 2), (2, 5)], None);
        assert!(tape.value(o).iter().all(|x| (x - 2.5).abs() < 1e-12));
    }
}
