use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ad::tape::{Tape, Var};

/// Named parameter tensors in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    names: Vec<String>,
    tensors: Vec<Array2<f64>>,
    index: BTreeMap<String, usize>,
}

impl Params {
    pub fn push(&mut self, name: &str, t: Array2<f64>) -> usize {
        assert!(!self.index.contains_key(name), "duplicate parameter {name}");
        self.index.insert(name.to_owned(), self.names.len());
        self.names.push(name.to_owned());
        self.tensors.push(t);
        self.names.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn id(&self, name: &str) -> usize {
        *self.index.get(name).unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get(&self, name: &str) -> &Array2<f64> {
        &self.tensors[self.id(name)]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Array2<f64> {
        let k = self.id(name);
        &mut self.tensors[k]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Array2<f64>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.tensors
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.tensors.iter().map(|t| t.dim()).collect()
    }

    /// Total number of scalars.
    pub fn count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Gaussian matrix with standard deviation `std`.
pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || std * rng.sample::<f64, _>(StandardNormal))
}

/// Pushes parameters onto a tape once each, on first use.
pub struct Binder<'a> {
    pub params: &'a Params,
    vars: Vec<Option<Var>>,
}

impl<'a> Binder<'a> {
    pub fn new(params: &'a Params) -> Self {
        Self { params, vars: vec![None; params.len()] }
    }

    pub fn var(&mut self, tape: &mut Tape, name: &str) -> Var {
        let k = self.params.id(name);
        *self.vars[k].get_or_insert_with(|| tape.param(k, &self.params.tensors[k]))
    }

    /// `x W + b` with parameters `{name}.w` and `{name}.b`.
    pub fn linear(&mut self, tape: &mut Tape, name: &str, x: Var) -> Var {
        let w = self.var(tape, &format!("{name}.w"));
        let b = self.var(tape, &format!("{name}.b"));
        let y = tape.matmul(x, w);
        tape.add_row(y, b)
    }

    /// `x W` with parameter `{name}.w`.
    pub fn linear_nobias(&mut self, tape: &mut Tape, name: &str, x: Var) -> Var {
        let w = self.var(tape, &format!("{name}.w"));
        tape.matmul(x, w)
    }
}
