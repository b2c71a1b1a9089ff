//! Valence-tagged tensor components at a point, both as plain values
//! ([`TensorField`]) and as Taylor expansions ([`JetTensor`]).
//!
//! Components are stored row-major over the slots: slot 0 is the most
//! significant index. A covariant derivative prepends its derivative slot,
//! so `(∇T)[a, i, j]` is `(∇_a T)_{ij}`.

use serde::Serialize;

use crate::error::GeometryError;
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Slot {
    Lower,
    Upper,
}

/// `(covariant, contravariant)` slot counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Valence {
    pub covariant: usize,
    pub contravariant: usize,
}

impl Valence {
    pub fn of(slots: &[Slot]) -> Valence {
        let covariant = slots.iter().filter(|s| **s == Slot::Lower).count();
        Valence {
            covariant,
            contravariant: slots.len() - covariant,
        }
    }
}

/// Declared index symmetries that are checked on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Symmetry {
    /// Symmetric in the first two slots.
    Symmetric,
    /// Antisymmetric in the first two slots.
    AntisymmetricPair,
    /// Pair antisymmetry, pair exchange and the first Bianchi identity.
    RiemannType,
}

pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

pub(crate) fn flat_index(n: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

pub(crate) fn unflatten(n: usize, rank: usize, mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for slot in (0..rank).rev() {
        idx[slot] = flat % n;
        flat /= n;
    }
    idx
}

/// Tensor components at a single point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorField {
    pub dimension: usize,
    pub slots: Vec<Slot>,
    pub components: Vec<f64>,
    pub base_point: Vec<f64>,
    pub symmetry: Option<Symmetry>,
}

impl TensorField {
    pub fn new(dimension: usize, slots: Vec<Slot>, components: Vec<f64>, base_point: Vec<f64>) -> Result<Self, GeometryError> {
        let expected = dimension.pow(slots.len() as u32);
        if components.len() != expected {
            return Err(GeometryError::ContractViolation(format!(
                "tensor of rank {} in dimension {dimension} needs {expected} components, got {}",
                slots.len(),
                components.len()
            )));
        }
        Ok(TensorField {
            dimension,
            slots,
            components,
            base_point,
            symmetry: None,
        })
    }

    pub fn zeros(dimension: usize, slots: Vec<Slot>, base_point: Vec<f64>) -> Self {
        let len = dimension.pow(slots.len() as u32);
        TensorField {
            dimension,
            slots,
            components: vec![0.0; len],
            base_point,
            symmetry: None,
        }
    }

    /// Tags the tensor with a symmetry, failing if it does not hold to
    /// [`SYMMETRY_TOLERANCE`] (relative to the largest component).
    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Result<Self, GeometryError> {
        let defect = self.symmetry_defect(symmetry);
        let scale = 1.0 + self.max_abs();
        if defect > SYMMETRY_TOLERANCE * scale {
            return Err(GeometryError::ContractViolation(format!(
                "declared {symmetry:?} symmetry violated by {defect:e}"
            )));
        }
        self.symmetry = Some(symmetry);
        Ok(self)
    }

    pub fn valence(&self) -> Valence {
        Valence::of(&self.slots)
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.rank());
        self.components[flat_index(self.dimension, idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let k = flat_index(self.dimension, idx);
        self.components[k] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Largest violation of the given symmetry.
    pub fn symmetry_defect(&self, symmetry: Symmetry) -> f64 {
        let n = self.dimension;
        let mut worst: f64 = 0.0;
        match symmetry {
            Symmetry::Symmetric | Symmetry::AntisymmetricPair => {
                let sign = if symmetry == Symmetry::Symmetric { 1.0 } else { -1.0 };
                for flat in 0..self.components.len() {
                    let mut idx = unflatten(n, self.rank(), flat);
                    let v = self.components[flat];
                    idx.swap(0, 1);
                    worst = worst.max((v - sign * self.get(&idx)).abs());
                }
            }
            Symmetry::RiemannType => {
                for flat in 0..self.components.len() {
                    let idx = unflatten(n, 4, flat);
                    let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
                    let r = self.get(&[i, j, k, l]);
                    worst = worst
                        .max((r + self.get(&[j, i, k, l])).abs())
                        .max((r + self.get(&[i, j, l, k])).abs())
                        .max((r - self.get(&[k, l, i, j])).abs())
                        .max((r + self.get(&[j, k, i, l]) + self.get(&[k, i, j, l])).abs());
                }
            }
        }
        worst
    }

    pub fn sub(&self, other: &TensorField) -> TensorField {
        assert_eq!(self.slots, other.slots, "slot mismatch");
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a - b)
            .collect();
        TensorField {
            components,
            symmetry: None,
            ..self.clone()
        }
    }
}

/// Tensor whose components are Taylor expansions about a common point.
#[derive(Debug, Clone)]
pub struct JetTensor {
    pub dimension: usize,
    pub slots: Vec<Slot>,
    pub components: Vec<Jet>,
}

impl JetTensor {
    pub fn new(dimension: usize, slots: Vec<Slot>, components: Vec<Jet>) -> Self {
        assert_eq!(components.len(), dimension.pow(slots.len() as u32));
        JetTensor {
            dimension,
            slots,
            components,
        }
    }

    pub fn scalar(value: Jet) -> Self {
        let n = value.nvars();
        JetTensor::new(n, Vec::new(), vec![value])
    }

    pub fn from_fn(dimension: usize, slots: Vec<Slot>, mut f: impl FnMut(&[usize]) -> Jet) -> Self {
        let rank = slots.len();
        let components = (0..dimension.pow(rank as u32))
            .map(|flat| f(&unflatten(dimension, rank, flat)))
            .collect();
        JetTensor {
            dimension,
            slots,
            components,
        }
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn order(&self) -> usize {
        self.components.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.components[flat_index(self.dimension, idx)]
    }

    /// Values at the base point.
    pub fn values(&self, base_point: &[f64]) -> TensorField {
        TensorField {
            dimension: self.dimension,
            slots: self.slots.clone(),
            components: self.components.iter().map(Jet::value).collect(),
            base_point: base_point.to_vec(),
            symmetry: None,
        }
    }

    /// `∇T` with the derivative slot first. `christoffel` holds `Γ^k_{ij}`
    /// laid out as `[k, i, j]`.
    pub fn covariant_derivative(&self, christoffel: &JetTensor) -> JetTensor {
        let n = self.dimension;
        let rank = self.rank();
        let mut slots = Vec::with_capacity(rank + 1);
        slots.push(Slot::Lower);
        slots.extend_from_slice(&self.slots);
        JetTensor::from_fn(n, slots, |idx| {
            let a = idx[0];
            let inner = &idx[1..];
            let mut acc = self.get(inner).derivative(a);
            let mut moved = inner.to_vec();
            for (s, slot) in self.slots.iter().enumerate() {
                let orig = inner[s];
                for c in 0..n {
                    moved[s] = c;
                    match slot {
                        Slot::Lower => {
                            let term = christoffel.get(&[c, a, orig]) * self.get(&moved);
                            acc -= term;
                        }
                        Slot::Upper => acc.add_product(christoffel.get(&[orig, a, c]), self.get(&moved)),
                    }
                }
                moved[s] = orig;
            }
            acc
        })
    }

    /// Contracts the first two (covariant) slots with an inverse metric.
    pub fn trace_first_pair(&self, inverse_metric: &JetTensor) -> JetTensor {
        let n = self.dimension;
        assert!(self.rank() >= 2);
        JetTensor::from_fn(n, self.slots[2..].to_vec(), |rest| {
            let mut idx = vec![0, 0];
            idx.extend_from_slice(rest);
            let mut acc: Option<Jet> = None;
            for a in 0..n {
                for b in 0..n {
                    idx[0] = a;
                    idx[1] = b;
                    let term = inverse_metric.get(&[a, b]) * self.get(&idx);
                    acc = Some(match acc {
                        Some(s) => s + term,
                        None => term,
                    });
                }
            }
            acc.expect("dimension >= 1")
        })
    }

    /// Contracts the first (covariant) slot against a vector field.
    pub fn contract_first(&self, vector: &[Jet]) -> JetTensor {
        let n = self.dimension;
        JetTensor::from_fn(n, self.slots[1..].to_vec(), |rest| {
            let mut idx = vec![0];
            idx.extend_from_slice(rest);
            let mut acc = self.get(&idx) * &vector[0];
            for (a, v) in vector.iter().enumerate().skip(1) {
                idx[0] = a;
                acc.add_product(self.get(&idx), v);
            }
            acc
        })
    }

    pub fn sub(&self, other: &JetTensor) -> JetTensor {
        assert_eq!(self.slots, other.slots);
        JetTensor {
            dimension: self.dimension,
            slots: self.slots.clone(),
            components: self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect(),
        }
    }
}
