use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use ndarray::Array2;

use super::descriptor::{shape_descriptor, ShapeDescriptor};
use super::relations::RelationGraphs;
use super::rotation::{rot6d_to_matrix, rot6d_to_matrix_lenient, Rot6};
use super::TriMesh;
use crate::{Error, Result};

/// Width of one object's row in the diffusion state: position ‖ 6-D rotation.
pub const STATE_DIM: usize = 9;

/// One rigid object. The mesh lives in the canonical object frame and is
/// shared between copies of the scene.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneObject {
    pub id: usize,
    pub category: String,
    pub mesh: Arc<TriMesh>,
    pub position: Vector3<f64>,
    pub rotation: Rot6,
    pub shape_desc: ShapeDescriptor,
}

impl SceneObject {
    pub fn new(
        id: usize,
        category: impl Into<String>,
        mesh: Arc<TriMesh>,
        position: Vector3<f64>,
        rotation: Rot6,
    ) -> Self {
        let shape_desc = shape_descriptor(&mesh).expect("TriMesh is never empty");
        Self { id, category: category.into(), mesh, position, rotation, shape_desc }
    }

    pub fn rotation_matrix(&self) -> Result<Matrix3<f64>> {
        rot6d_to_matrix(&self.rotation)
    }

    pub fn rotation_matrix_lenient(&self) -> Matrix3<f64> {
        rot6d_to_matrix_lenient(&self.rotation)
    }
}

/// World-frame mesh `v' = R v + p` of an object.
pub fn posed_mesh(obj: &SceneObject) -> Result<TriMesh> {
    Ok(obj.mesh.transformed(&obj.rotation_matrix()?, &obj.position))
}

/// Like [`posed_mesh`] but degenerate rotations decode to the identity.
pub fn posed_mesh_lenient(obj: &SceneObject) -> TriMesh {
    obj.mesh.transformed(&obj.rotation_matrix_lenient(), &obj.position)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub graphs: RelationGraphs,
    pub floor_height: f64,
}

impl Scene {
    pub fn new(objects: Vec<SceneObject>, graphs: RelationGraphs, floor_height: f64) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::InvalidScene("a scene needs at least one object".into()));
        }
        if graphs.len() != objects.len() {
            return Err(Error::GraphSizeMismatch(format!(
                "{} objects but {}×{} graphs",
                objects.len(),
                graphs.len(),
                graphs.len()
            )));
        }
        for (k, o) in objects.iter().enumerate() {
            if o.id != k {
                return Err(Error::InvalidScene(format!("object at index {k} has id {}", o.id)));
            }
        }
        graphs.validate()?;
        Ok(Self { objects, graphs, floor_height })
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn flatten(&self) -> StateVector {
        flatten_scene(self)
    }

    /// Copy of this scene with poses taken from `x`.
    pub fn with_state(&self, x: &StateVector) -> Result<Scene> {
        unflatten(x, self)
    }

    pub fn posed_meshes(&self) -> Result<Vec<TriMesh>> {
        self.objects.iter().map(posed_mesh).collect()
    }

    pub fn posed_meshes_lenient(&self) -> Vec<TriMesh> {
        self.objects.iter().map(posed_mesh_lenient).collect()
    }

    /// Relabels objects so that old object `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Scene {
        let mut objects = self.objects.clone();
        for (i, o) in self.objects.iter().enumerate() {
            let mut o = o.clone();
            o.id = perm[i];
            objects[perm[i]] = o;
        }
        Scene { objects, graphs: self.graphs.permuted(perm), floor_height: self.floor_height }
    }

    pub fn translated(&self, t: &Vector3<f64>) -> Scene {
        let mut s = self.clone();
        for o in &mut s.objects {
            o.position += t;
        }
        s.floor_height += t.y;
        s
    }
}

/// N×9 diffusion state, row `j` = `[p_j ‖ r_j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(pub Array2<f64>);

impl StateVector {
    pub fn new(x: Array2<f64>) -> Result<Self> {
        if x.ncols() != STATE_DIM {
            return Err(Error::ShapeMismatch {
                expected: format!("N×{STATE_DIM}"),
                got: format!("{}×{}", x.nrows(), x.ncols()),
            });
        }
        Ok(Self(x))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn position(&self, j: usize) -> Vector3<f64> {
        Vector3::new(self.0[[j, 0]], self.0[[j, 1]], self.0[[j, 2]])
    }

    pub fn rotation(&self, j: usize) -> Rot6 {
        std::array::from_fn(|k| self.0[[j, 3 + k]])
    }
}

pub fn flatten_scene(scene: &Scene) -> StateVector {
    let mut x = Array2::zeros((scene.len(), STATE_DIM));
    for (j, o) in scene.objects.iter().enumerate() {
        for k in 0..3 {
            x[[j, k]] = o.position[k];
        }
        for k in 0..6 {
            x[[j, 3 + k]] = o.rotation[k];
        }
    }
    StateVector(x)
}

pub fn unflatten(x: &StateVector, template: &Scene) -> Result<Scene> {
    if x.rows() != template.len() || x.0.ncols() != STATE_DIM {
        return Err(Error::ShapeMismatch {
            expected: format!("{}×{STATE_DIM}", template.len()),
            got: format!("{}×{}", x.rows(), x.0.ncols()),
        });
    }
    let mut scene = template.clone();
    for (j, o) in scene.objects.iter_mut().enumerate() {
        o.position = x.position(j);
        o.rotation = x.rotation(j);
    }
    Ok(scene)
}
