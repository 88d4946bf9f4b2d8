//! Geometric kernel: bounding volumes, triangle intersection, surface
//! sampling, signed Chamfer distances, XZ hulls and vertical ray casts.

pub mod aabb;
pub mod bvh;
pub mod chamfer;
pub mod collide;
pub mod distance;
pub mod hull;
pub mod raycast;
pub mod sample;
pub mod tritri;

pub use aabb::Aabb3;
pub use bvh::Bvh;
pub use chamfer::{signed_chamfer, PointGrid, NO_OTHERS_SENTINEL};
pub use collide::{find_collision_pairs, CollisionPair};
pub use hull::{point_to_hull_distance, xz_hull, Hull2D};
pub use raycast::{vertical_gap, NO_OVERLAP};
pub use sample::{sample_surface, SurfaceSample};
pub use tritri::tri_tri_intersect;
