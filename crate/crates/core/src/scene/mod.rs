//! Scene domain types: meshes, objects, relation graphs, rotation encoding,
//! diffusion state packing and pose-derived relation labels.

pub mod derive;
pub mod descriptor;
pub mod io;
pub mod mesh;
pub mod relations;
pub mod rotation;
pub mod types;

pub use derive::{derive_relations, RelationRules};
pub use descriptor::{shape_descriptor, ShapeDescriptor, DESCRIPTOR_LEN};
pub use mesh::TriMesh;
pub use relations::{PhysicalRel, RelationGraphs, SpatialRel};
pub use rotation::{matrix_to_rot6d, rot6d_to_matrix, Rot6, IDENTITY_6D};
pub use types::{flatten_scene, posed_mesh, posed_mesh_lenient, unflatten, Scene, SceneObject, StateVector, STATE_DIM};
