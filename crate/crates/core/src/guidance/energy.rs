//! The three guidance energies, written once over a generic scalar.
//!
//! A [`Context`] fixes every discrete choice at the current state (colliding
//! face pairs, supporters, minimising rays, outside vertices). Energies are
//! then evaluated either in `f64` or in [`Dual`] numbers, which gives exact
//! derivatives of the piecewise-smooth energy with those choices frozen.

use nalgebra::Vector3;

use super::pose::Pose;
use super::GuidanceConfig;
use crate::ad::{Dual, Real, V3};
use crate::geom::bvh::Bvh;
use crate::geom::collide::{find_collision_pairs_with, CollisionPair};
use crate::geom::hull::{xz, Hull2D};
use crate::geom::raycast::{gap_from_hit, vertical_gap_detail, GapHit};
use crate::scene::{Scene, TriMesh, STATE_DIM};

/// Penetration below the support clearance by less than this counts as
/// resting; it absorbs rounding in `p + R v`.
pub const GAP_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    Collision,
    Gravity,
    Relation,
}

impl Term {
    pub const ALL: [Term; 3] = [Term::Collision, Term::Gravity, Term::Relation];
}

#[derive(Clone, Debug, PartialEq)]
pub enum GravitySupport {
    Exempt,
    /// Measured against the floor from the given lowest vertex.
    Floor { vertex: usize },
    Object { supporter: usize, hit: GapHit },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationTerm {
    pub supported: usize,
    pub supporter: usize,
    /// Supporter vertices forming its XZ hull, counter-clockwise.
    pub hull: Vec<usize>,
    /// Vertices of the supported object projecting outside that hull.
    pub outside: Vec<usize>,
}

/// Discrete state frozen for one evaluation.
#[derive(Clone, Debug)]
pub struct Context {
    pub rows: Vec<[f64; STATE_DIM]>,
    pub posed: Vec<TriMesh>,
    pub pairs: Vec<CollisionPair>,
    pub gravity: Vec<GravitySupport>,
    pub relations: Vec<RelationTerm>,
    pub floor_height: f64,
}

impl Context {
    pub fn new(scene: &Scene, cfg: &GuidanceConfig) -> Context {
        let x = scene.flatten();
        let rows: Vec<[f64; STATE_DIM]> =
            (0..scene.len()).map(|j| std::array::from_fn(|k| x.0[[j, k]])).collect();
        let posed: Vec<TriMesh> = scene
            .objects
            .iter()
            .zip(&rows)
            .map(|(o, r)| {
                let pose = Pose::from_row(r);
                let m = nalgebra::Matrix3::from_columns(&[pose.cols[0].re(), pose.cols[1].re(), pose.cols[2].re()]);
                o.mesh.transformed(&m, &pose.p.re())
            })
            .collect();
        let pairs = if cfg.lambda_c > 0.0 && posed.len() > 1 {
            let bvhs: Vec<Bvh> = posed.iter().map(|m| Bvh::build(m).expect("non-empty mesh")).collect();
            find_collision_pairs_with(&posed, &bvhs)
        } else {
            Vec::new()
        };
        let gravity = (0..scene.len())
            .map(|i| {
                if let Some(j) = scene.graphs.supporter_of(i) {
                    match vertical_gap_detail(&posed[i], &posed[j], cfg.ray_res) {
                        Some(hit) => GravitySupport::Object { supporter: j, hit },
                        None => GravitySupport::Exempt,
                    }
                } else {
                    let (k, y) = lowest_vertex(&posed[i]);
                    if y - scene.floor_height <= cfg.floor_snap_distance {
                        GravitySupport::Floor { vertex: k }
                    } else {
                        GravitySupport::Exempt
                    }
                }
            })
            .collect();
        let relations = scene
            .graphs
            .support_pairs()
            .into_iter()
            .map(|(i, j)| {
                let pts: Vec<_> = posed[j].vertices().iter().map(xz).collect();
                let hull = Hull2D::from_points(&pts);
                let outside = posed[i]
                    .vertices()
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| hull.distance(&xz(v)) > 0.0)
                    .map(|(k, _)| k)
                    .collect();
                RelationTerm { supported: i, supporter: j, hull: hull.source, outside }
            })
            .collect();
        Context { rows, posed, pairs, gravity, relations, floor_height: scene.floor_height }
    }
}

fn lowest_vertex(m: &TriMesh) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, v) in m.vertices().iter().enumerate() {
        if v.y < best.1 {
            best = (k, v.y);
        }
    }
    best
}

/// Depth of the deepest vertex of `t` behind the plane of `plane`.
fn depth_behind<S: Real>(t: &[V3<S>; 3], plane: &[V3<S>; 3], rec: &mut Vec<u64>) -> S {
    let n = (plane[1] - plane[0]).cross(&(plane[2] - plane[0]));
    let n = n.scale(S::cst(1.0) / n.norm());
    let mut best = S::zero();
    let mut arg = 3;
    for (k, v) in t.iter().enumerate() {
        let d = -n.dot(&(*v - plane[0]));
        if d.re() > best.re() {
            best = d;
            arg = k;
        }
    }
    rec.push(arg as u64);
    best
}

/// Per-pair collision penalty: the shallower of the two one-sided
/// penetration depths. Zero for touching pairs.
pub fn pair_penalty<S: Real>(a: &[V3<S>; 3], b: &[V3<S>; 3], rec: &mut Vec<u64>) -> S {
    let ab = depth_behind(a, b, rec);
    let ba = depth_behind(b, a, rec);
    if ab.re() <= ba.re() {
        rec.push(0);
        ab
    } else {
        rec.push(1);
        ba
    }
}

fn segment_distance<S: Real>(p: (S, S), a: (S, S), b: (S, S), rec: &mut Vec<u64>) -> S {
    let (ex, ez) = (b.0 - a.0, b.1 - a.1);
    let len2 = ex * ex + ez * ez;
    let t = if len2.re() > 0.0 { ((p.0 - a.0) * ex + (p.1 - a.1) * ez) / len2 } else { S::zero() };
    let t = if t.re() <= 0.0 {
        rec.push(0);
        S::zero()
    } else if t.re() >= 1.0 {
        rec.push(2);
        S::cst(1.0)
    } else {
        rec.push(1);
        t
    };
    let (dx, dz) = (p.0 - (a.0 + ex * t), p.1 - (a.1 + ez * t));
    (dx * dx + dz * dz).sqrt()
}

/// Distance from an outside point to a convex polygon's boundary.
fn outside_distance<S: Real>(p: (S, S), poly: &[(S, S)], rec: &mut Vec<u64>) -> S {
    let n = poly.len();
    if n == 1 {
        let (dx, dz) = (p.0 - poly[0].0, p.1 - poly[0].1);
        return (dx * dx + dz * dz).sqrt();
    }
    let edges = if n == 2 { 1 } else { n };
    let mut scratch = Vec::new();
    let mut best = segment_distance(p, poly[0], poly[1 % n], &mut scratch);
    let mut arg = 0;
    for k in 1..edges {
        let mut s = Vec::new();
        let d = segment_distance(p, poly[k], poly[(k + 1) % n], &mut s);
        if d.re() < best.re() {
            best = d;
            arg = k;
            scratch = s;
        }
    }
    rec.push(arg as u64);
    rec.extend(scratch);
    best
}

/// Source of per-object poses over a scalar type.
trait Poser<S> {
    fn pose(&self, obj: usize) -> Pose<S>;
}

struct PlainPoses<'a>(&'a [[f64; STATE_DIM]]);

impl Poser<f64> for PlainPoses<'_> {
    fn pose(&self, obj: usize) -> Pose<f64> {
        Pose::from_row(&self.0[obj])
    }
}

/// Seeds object `a` in slots 0..9 and object `b` in 9..18.
struct PairPoses<'a> {
    rows: &'a [[f64; STATE_DIM]],
    a: usize,
    b: usize,
}

impl Poser<Dual<18>> for PairPoses<'_> {
    fn pose(&self, obj: usize) -> Pose<Dual<18>> {
        if obj == self.a {
            Pose::seeded(&self.rows[obj], 0)
        } else if obj == self.b {
            Pose::seeded(&self.rows[obj], 9)
        } else {
            let row = &self.rows[obj];
            let c = |k: usize| Dual::constant(row[k]);
            Pose::new([c(0), c(1), c(2)], std::array::from_fn(|k| c(3 + k)))
        }
    }
}

fn collision_pair<S: Real>(scene: &Scene, pair: &CollisionPair, poser: &impl Poser<S>, rec: &mut Vec<u64>) -> S {
    let tri = |obj: usize, f: usize| -> [V3<S>; 3] {
        let pose = poser.pose(obj);
        let m = &scene.objects[obj].mesh;
        m.faces()[f].map(|k| pose.apply(&m.vertices()[k]))
    };
    pair_penalty(&tri(pair.obj_a, pair.face_a), &tri(pair.obj_b, pair.face_b), rec)
}

/// Signed clearance minus `eps_gap` for object `i`, or `None` if exempt.
fn gravity_residual<S: Real>(
    scene: &Scene,
    ctx: &Context,
    i: usize,
    poser: &impl Poser<S>,
    cfg: &GuidanceConfig,
) -> Option<S> {
    let mi = &scene.objects[i].mesh;
    let pi = poser.pose(i);
    let d = match &ctx.gravity[i] {
        GravitySupport::Exempt => return None,
        GravitySupport::Floor { vertex } => pi.apply(&mi.vertices()[*vertex]).y - ctx.floor_height,
        GravitySupport::Object { supporter, hit } => {
            let mj = &scene.objects[*supporter].mesh;
            let pj = poser.pose(*supporter);
            gap_from_hit(hit, mi, mj, |k| pi.apply(&mi.vertices()[k]), |k| pj.apply(&mj.vertices()[k]))
        }
    };
    Some(d - cfg.eps_gap)
}

fn gravity_violation<S: Real>(r: S, cfg: &GuidanceConfig, rec: &mut Vec<u64>) -> S {
    if r.re() > cfg.theta_h {
        rec.push(1);
        r
    } else if r.re() < -GAP_SLACK {
        rec.push(2);
        -r
    } else {
        rec.push(0);
        S::zero()
    }
}

fn relation_pair<S: Real>(scene: &Scene, term: &RelationTerm, poser: &impl Poser<S>, rec: &mut Vec<u64>) -> S {
    if term.outside.is_empty() {
        return S::zero();
    }
    let (mi, mj) = (&scene.objects[term.supported].mesh, &scene.objects[term.supporter].mesh);
    let (pi, pj) = (poser.pose(term.supported), poser.pose(term.supporter));
    let poly: Vec<(S, S)> = term
        .hull
        .iter()
        .map(|&k| {
            let v = pj.apply(&mj.vertices()[k]);
            (v.x, v.z)
        })
        .collect();
    let mut sum = S::zero();
    for &k in &term.outside {
        let v = pi.apply(&mi.vertices()[k]);
        sum += outside_distance((v.x, v.z), &poly, rec);
    }
    sum * (1.0 / term.outside.len() as f64)
}

/// Value of one energy with the discrete choices of `ctx`.
pub fn term_value(scene: &Scene, ctx: &Context, term: Term, cfg: &GuidanceConfig, rec: &mut Vec<u64>) -> f64 {
    let poser = PlainPoses(&ctx.rows);
    match term {
        Term::Collision => {
            if ctx.pairs.is_empty() {
                return 0.0;
            }
            let s: f64 = ctx.pairs.iter().map(|p| collision_pair(scene, p, &poser, rec)).sum();
            s / ctx.pairs.len() as f64
        }
        Term::Gravity => (0..scene.len())
            .filter_map(|i| gravity_residual(scene, ctx, i, &poser, cfg))
            .map(|r| gravity_violation(r, cfg, rec))
            .sum(),
        Term::Relation => {
            if ctx.relations.is_empty() {
                return 0.0;
            }
            let s: f64 = ctx.relations.iter().map(|t| relation_pair(scene, t, &poser, rec)).sum();
            s / ctx.relations.len() as f64
        }
    }
}

fn scatter(grad: &mut ndarray::Array2<f64>, d: &Dual<18>, a: usize, b: usize, w: f64) {
    for k in 0..STATE_DIM {
        grad[[a, k]] += w * d.d[k];
        if b != a {
            grad[[b, k]] += w * d.d[9 + k];
        }
    }
}

/// Exact gradient of one energy with respect to the N×9 state, discrete
/// choices frozen at `ctx`.
pub fn term_gradient(scene: &Scene, ctx: &Context, term: Term, cfg: &GuidanceConfig) -> ndarray::Array2<f64> {
    let n = scene.len();
    let mut grad = ndarray::Array2::zeros((n, STATE_DIM));
    let mut rec = Vec::new();
    match term {
        Term::Collision => {
            let w = 1.0 / ctx.pairs.len().max(1) as f64;
            for p in &ctx.pairs {
                let poser = PairPoses { rows: &ctx.rows, a: p.obj_a, b: p.obj_b };
                let d = collision_pair(scene, p, &poser, &mut rec);
                scatter(&mut grad, &d, p.obj_a, p.obj_b, w);
            }
        }
        Term::Gravity => {
            for i in 0..n {
                let b = match &ctx.gravity[i] {
                    GravitySupport::Object { supporter, .. } => *supporter,
                    _ => i,
                };
                let poser = PairPoses { rows: &ctx.rows, a: i, b };
                if let Some(r) = gravity_residual(scene, ctx, i, &poser, cfg) {
                    let v = gravity_violation(r, cfg, &mut rec);
                    scatter(&mut grad, &v, i, b, 1.0);
                }
            }
        }
        Term::Relation => {
            let w = 1.0 / ctx.relations.len().max(1) as f64;
            for t in &ctx.relations {
                let poser = PairPoses { rows: &ctx.rows, a: t.supported, b: t.supporter };
                let d = relation_pair(scene, t, &poser, &mut rec);
                scatter(&mut grad, &d, t.supported, t.supporter, w);
            }
        }
    }
    grad
}

/// Fingerprint of every discrete choice made at this state; equal
/// fingerprints at nearby states mean the same smooth piece.
pub fn signature(scene: &Scene, ctx: &Context, cfg: &GuidanceConfig) -> Vec<u64> {
    let mut rec = Vec::new();
    for p in &ctx.pairs {
        rec.extend([p.obj_a, p.face_a, p.obj_b, p.face_b].map(|v| v as u64));
    }
    rec.push(u64::MAX);
    for g in &ctx.gravity {
        match g {
            GravitySupport::Exempt => rec.push(0),
            GravitySupport::Floor { vertex } => rec.extend([1, *vertex as u64]),
            GravitySupport::Object { supporter, hit } => {
                rec.extend([2, *supporter as u64, hit.column.0 as u64, hit.column.1 as u64]);
                rec.extend([hit.upper_face as u64, hit.lower_face as u64]);
                rec.extend(hit.bounds.iter().map(|b| (b.vertex as u64) << 1 | b.upper as u64));
            }
        }
    }
    rec.push(u64::MAX);
    for t in &ctx.relations {
        rec.extend(t.hull.iter().map(|&v| v as u64));
        rec.push(u64::MAX - 1);
        rec.extend(t.outside.iter().map(|&v| v as u64));
        rec.push(u64::MAX - 1);
    }
    for term in Term::ALL {
        rec.push(u64::MAX);
        term_value(scene, ctx, term, cfg, &mut rec);
    }
    rec
}

/// Convenience for tests and diagnostics: all posed vertices of an object.
pub fn posed_vertices(ctx: &Context, obj: usize) -> &[Vector3<f64>] {
    ctx.posed[obj].vertices()
}
