//! The curvature operator on bivectors, the Lie-algebra square `R^#`, and
//! the Weyl decomposition.
//!
//! Bivectors `E_i ∧ E_j` (`i < j`, lexicographic) of a g-orthonormal frame
//! form an orthonormal basis of `∧²`, and act on vectors as
//! `(E_i∧E_j)(x) = ⟨E_i,x⟩E_j − ⟨E_j,x⟩E_i`. As skew matrices the inner
//! product is `⟨A,B⟩ = ½ tr(AᵀB)` and the bracket is the commutator.
//!
//! The operator is paired so that `⟨𝓡(X∧Y), W∧Z⟩ = R(X,Y,Z,W)`; the unit
//! sphere then has `𝓡 = I`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::chart::{Expansion, MetricFamily};
use crate::error::{GeometryError, Result};
use crate::tensor::{unflatten, Slot, Symmetry, TensorField};

/// Orthonormal basis of `∧²ℝⁿ` with its structure constants.
#[derive(Debug, Clone)]
pub struct BivectorBasis {
    pub dimension: usize,
    pub pairs: Vec<(usize, usize)>,
    /// `C[(α·N + β)·N + γ] = ⟨[φ_α, φ_β], φ_γ⟩`.
    structure: Vec<f64>,
}

impl BivectorBasis {
    pub fn new(dimension: usize) -> BivectorBasis {
        let mut pairs = Vec::new();
        for i in 0..dimension {
            for j in i + 1..dimension {
                pairs.push((i, j));
            }
        }
        let mut basis = BivectorBasis {
            dimension,
            pairs,
            structure: Vec::new(),
        };
        let big_n = basis.len();
        let elements: Vec<DMatrix<f64>> = (0..big_n).map(|a| basis.element(a)).collect();
        let mut structure = vec![0.0; big_n * big_n * big_n];
        for a in 0..big_n {
            for b in 0..big_n {
                let bracket = &elements[a] * &elements[b] - &elements[b] * &elements[a];
                for c in 0..big_n {
                    structure[(a * big_n + b) * big_n + c] = inner(&bracket, &elements[c]);
                }
            }
        }
        basis.structure = structure;
        basis
    }

    /// `N = n(n−1)/2`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Basis index and sign of `E_i ∧ E_j`; `None` when `i == j`.
    pub fn index_of(&self, i: usize, j: usize) -> Option<(usize, f64)> {
        if i == j {
            return None;
        }
        let (lo, hi, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        // position of (lo, hi) in lexicographic order
        let n = self.dimension;
        let idx = lo * (2 * n - lo - 1) / 2 + (hi - lo - 1);
        Some((idx, sign))
    }

    /// `φ_α` as an `n × n` skew matrix acting on frame components.
    pub fn element(&self, alpha: usize) -> DMatrix<f64> {
        let (i, j) = self.pairs[alpha];
        let mut m = DMatrix::zeros(self.dimension, self.dimension);
        m[(j, i)] = 1.0;
        m[(i, j)] = -1.0;
        m
    }

    pub fn structure_constant(&self, a: usize, b: usize, c: usize) -> f64 {
        let big_n = self.len();
        self.structure[(a * big_n + b) * big_n + c]
    }

    /// Largest violation of total antisymmetry of `C_{αβγ}`.
    pub fn structure_antisymmetry_defect(&self) -> f64 {
        let big_n = self.len();
        let mut worst: f64 = 0.0;
        for a in 0..big_n {
            for b in 0..big_n {
                for c in 0..big_n {
                    let v = self.structure_constant(a, b, c);
                    worst = worst
                        .max((v + self.structure_constant(b, a, c)).abs())
                        .max((v + self.structure_constant(a, c, b)).abs())
                        .max((v - self.structure_constant(b, c, a)).abs());
                }
            }
        }
        worst
    }

    /// `A_γ[α, β] = C_{αβγ}`.
    fn structure_slice(&self, gamma: usize) -> DMatrix<f64> {
        let big_n = self.len();
        DMatrix::from_fn(big_n, big_n, |a, b| self.structure_constant(a, b, gamma))
    }
}

/// `½ tr(AᵀB)`.
pub fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    0.5 * a.component_mul(b).sum()
}

/// An algebraic (0,4) tensor in an orthonormal frame, `T[a,b,c,d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraicCurvature {
    pub dimension: usize,
    pub components: Vec<f64>,
}

impl AlgebraicCurvature {
    pub fn zeros(dimension: usize) -> AlgebraicCurvature {
        AlgebraicCurvature {
            dimension,
            components: vec![0.0; dimension.pow(4)],
        }
    }

    pub fn from_fn(dimension: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> AlgebraicCurvature {
        let components = (0..dimension.pow(4))
            .map(|flat| {
                let i = unflatten(dimension, 4, flat);
                f(i[0], i[1], i[2], i[3])
            })
            .collect();
        AlgebraicCurvature { dimension, components }
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.dimension;
        self.components[((a * n + b) * n + c) * n + d]
    }

    /// The unit-sphere tensor `g_{jk}g_{il} − g_{ik}g_{jl}` scaled by `k`.
    pub fn constant_curvature(dimension: usize, k: f64) -> AlgebraicCurvature {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        AlgebraicCurvature::from_fn(dimension, |i, j, kk, l| k * (d(j, kk) * d(i, l) - d(i, kk) * d(j, l)))
    }

    /// Random algebraic curvature tensor: a sum of Kulkarni–Nomizu
    /// products of random symmetric matrices.
    pub fn random(dimension: usize, rng: &mut impl Rng) -> AlgebraicCurvature {
        let mut out = AlgebraicCurvature::zeros(dimension);
        let sym = |rng: &mut dyn rand::RngCore| {
            let a = DMatrix::from_fn(dimension, dimension, |_, _| rng.gen_range(-1.0..1.0));
            (&a + a.transpose()) * 0.5
        };
        for _ in 0..dimension + 2 {
            let h = sym(rng);
            let k = sym(rng);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let kn = kulkarni_nomizu_matrices(&h, &k);
            for (o, v) in out.components.iter_mut().zip(&kn.components) {
                *o += sign * v;
            }
        }
        out
    }

    /// `M_{(ij),(kl)} = T(E_i, E_j, E_l, E_k)`.
    pub fn operator_matrix(&self, basis: &BivectorBasis) -> DMatrix<f64> {
        let big_n = basis.len();
        DMatrix::from_fn(big_n, big_n, |a, b| {
            let (i, j) = basis.pairs[a];
            let (k, l) = basis.pairs[b];
            self.get(i, j, l, k)
        })
    }

    /// Inverse of [`AlgebraicCurvature::operator_matrix`] on tensors with
    /// the pair antisymmetries.
    pub fn from_operator_matrix(matrix: &DMatrix<f64>, basis: &BivectorBasis) -> AlgebraicCurvature {
        AlgebraicCurvature::from_fn(basis.dimension, |a, b, c, d| {
            match (basis.index_of(a, b), basis.index_of(d, c)) {
                (Some((p, sp)), Some((q, sq))) => sp * sq * matrix[(p, q)],
                _ => 0.0,
            }
        })
    }

    /// `Ric(b,c) = Σ_a T(a,b,c,a)`.
    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.dimension;
        DMatrix::from_fn(n, n, |b, c| (0..n).map(|a| self.get(a, b, c, a)).sum())
    }

    pub fn scal(&self) -> f64 {
        self.ricci().trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn sub(&self, other: &AlgebraicCurvature) -> AlgebraicCurvature {
        AlgebraicCurvature {
            dimension: self.dimension,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn to_tensor(&self, base_point: &[f64]) -> TensorField {
        TensorField {
            dimension: self.dimension,
            slots: vec![Slot::Lower; 4],
            components: self.components.clone(),
            base_point: base_point.to_vec(),
            symmetry: None,
        }
    }

    pub fn from_tensor(t: &TensorField) -> AlgebraicCurvature {
        assert_eq!(t.rank(), 4);
        AlgebraicCurvature {
            dimension: t.dimension,
            components: t.components.clone(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// The curvature operator at a point with its sorted spectrum.
#[derive(Debug, Clone)]
pub struct CurvatureOperator {
    pub dimension: usize,
    pub matrix: DMatrix<f64>,
    /// Ascending.
    pub spectrum: Vec<f64>,
    /// Columns are unit eigenvectors in bivector coordinates, aligned
    /// with `spectrum`.
    pub eigenvectors: DMatrix<f64>,
    /// Coordinate components of the g-orthonormal frame (columns).
    pub frame: DMatrix<f64>,
}

/// Ascending eigen-decomposition with a deterministic sign per
/// eigenvector (largest-magnitude component positive).
pub fn sorted_eigen(matrix: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = matrix.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v.iter().copied().fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
        let s = if pivot < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(col, &(v * s));
    }
    (values, vectors)
}

impl CurvatureOperator {
    pub fn from_matrix(matrix: DMatrix<f64>, frame: DMatrix<f64>) -> Result<CurvatureOperator> {
        let asym = (&matrix - matrix.transpose()).abs().max();
        if asym > 1e-10 * (1.0 + matrix.abs().max()) {
            return Err(GeometryError::ContractViolation(format!("curvature operator asymmetric by {asym:e}")));
        }
        let dimension = frame.nrows();
        if matrix.nrows() != dimension * dimension.saturating_sub(1) / 2 {
            return Err(GeometryError::ContractViolation("operator size does not match frame".into()));
        }
        let (spectrum, eigenvectors) = sorted_eigen(&matrix);
        Ok(CurvatureOperator {
            dimension,
            matrix,
            spectrum,
            eigenvectors,
            frame,
        })
    }

    pub fn from_expansion(e: &Expansion, basis: &BivectorBasis) -> Result<CurvatureOperator> {
        let r = frame_riemann(e);
        CurvatureOperator::from_matrix(r.operator_matrix(basis), e.frame().clone())
    }
}

/// Riemann tensor in the orthonormal frame of an expansion.
pub fn frame_riemann(e: &Expansion) -> AlgebraicCurvature {
    AlgebraicCurvature::from_tensor(&e.to_frame(&e.riemann.values(&e.point)))
}

pub fn curvature_operator(m: &MetricFamily, x: &[f64]) -> Result<CurvatureOperator> {
    let e = Expansion::new(m, x, 2)?;
    CurvatureOperator::from_expansion(&e, &BivectorBasis::new(m.dimension()))
}

/// `R^#` from the B-tensor `B(X,Y,W,Z) = −Σ g(R(X,E_i)Y, R(W,E_i)Z)`,
/// assembled as `B(X,Z,Y,W) − B(X,W,Y,Z)` so that it pairs with
/// bivectors exactly like `R`.
pub fn sharp_b_algebraic(r: &AlgebraicCurvature) -> AlgebraicCurvature {
    let n = r.dimension;
    // g(R(X,E_i)Y, E_p) = R(X,E_i,Y,E_p)
    let b = AlgebraicCurvature::from_fn(n, |x, y, w, z| {
        let mut acc = 0.0;
        for i in 0..n {
            for p in 0..n {
                acc += r.get(x, i, y, p) * r.get(w, i, z, p);
            }
        }
        -acc
    });
    AlgebraicCurvature::from_fn(n, |x, y, z, w| b.get(x, z, y, w) - b.get(x, w, y, z))
}

/// `R^#` (B-tensor route) at `x`, as frame components.
pub fn sharp_via_b(m: &MetricFamily, x: &[f64]) -> Result<TensorField> {
    let e = Expansion::new(m, x, 2)?;
    Ok(sharp_b_algebraic(&frame_riemann(&e)).to_tensor(x))
}

/// `R^#_{γδ} = ½ Σ_{αβ} ⟨[𝓡φ_α, 𝓡φ_β], φ_γ⟩⟨[φ_α, φ_β], φ_δ⟩`.
pub fn sharp_matrix(matrix: &DMatrix<f64>, basis: &BivectorBasis) -> Result<DMatrix<f64>> {
    let big_n = basis.len();
    if matrix.nrows() != big_n || matrix.ncols() != big_n {
        return Err(GeometryError::ContractViolation(format!(
            "operator is {}x{}, bivector basis has {big_n} elements",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    // Σ_{μν} M_{μα} M_{νβ} C_{μνγ} = (Mᵀ A_γ M)_{αβ}
    let slices: Vec<DMatrix<f64>> = (0..big_n).map(|g| basis.structure_slice(g)).collect();
    let pulled: Vec<DMatrix<f64>> = slices.iter().map(|a| matrix.transpose() * a * matrix).collect();
    Ok(DMatrix::from_fn(big_n, big_n, |g, d| 0.5 * pulled[g].component_mul(&slices[d]).sum()))
}

pub fn sharp_via_structure_constants(op: &CurvatureOperator, basis: &BivectorBasis) -> Result<DMatrix<f64>> {
    if op.dimension != basis.dimension {
        return Err(GeometryError::ContractViolation(format!(
            "operator frame has dimension {}, basis {}",
            op.dimension, basis.dimension
        )));
    }
    sharp_matrix(&op.matrix, basis)
}

/// `(h∘k)(x,y,z,w) = h(x,w)k(y,z) + h(y,z)k(x,w) − h(x,z)k(y,w) − h(y,w)k(x,z)`.
pub fn kulkarni_nomizu_matrices(h: &DMatrix<f64>, k: &DMatrix<f64>) -> AlgebraicCurvature {
    AlgebraicCurvature::from_fn(h.nrows(), |x, y, z, w| {
        h[(x, w)] * k[(y, z)] + h[(y, z)] * k[(x, w)] - h[(x, z)] * k[(y, w)] - h[(y, w)] * k[(x, z)]
    })
}

fn as_matrix(t: &TensorField) -> DMatrix<f64> {
    let n = t.dimension;
    DMatrix::from_fn(n, n, |i, j| t.get(&[i, j]))
}

pub fn kulkarni_nomizu(h: &TensorField, k: &TensorField) -> Result<TensorField> {
    for (name, t) in [("h", h), ("k", k)] {
        if t.slots != [Slot::Lower, Slot::Lower] {
            return Err(GeometryError::ContractViolation(format!("{name} must be a (0,2) tensor")));
        }
        t.clone()
            .with_symmetry(Symmetry::Symmetric)
            .map_err(|_| GeometryError::ContractViolation(format!("{name} is not symmetric")))?;
    }
    if h.dimension != k.dimension || h.base_point != k.base_point {
        return Err(GeometryError::ContractViolation("factors live at different points".into()));
    }
    kulkarni_nomizu_matrices(&as_matrix(h), &as_matrix(k))
        .to_tensor(&h.base_point)
        .with_symmetry(Symmetry::RiemannType)
}

/// `W` and `R − W` for a curvature tensor written against metric `g`.
#[derive(Debug, Clone)]
pub struct WeylDecomposition {
    pub weyl: TensorField,
    pub schouten_part: TensorField,
}

/// Weyl decomposition in an arbitrary basis with Gram matrix `g`:
/// `R = W + (1/(n−2)) Ric∘g − scal/(2(n−1)(n−2)) g∘g`.
pub fn weyl_algebraic(r: &AlgebraicCurvature, g: &DMatrix<f64>) -> Result<(AlgebraicCurvature, AlgebraicCurvature)> {
    let n = r.dimension;
    if n < 3 {
        return Err(GeometryError::UnsupportedDimension {
            operation: "weyl_decompose",
            dimension: n,
        });
    }
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| GeometryError::ContractViolation("singular Gram matrix".into()))?;
    let ric = DMatrix::from_fn(n, n, |b, c| {
        let mut acc = 0.0;
        for a in 0..n {
            for d in 0..n {
                acc += ginv[(a, d)] * r.get(a, b, c, d);
            }
        }
        acc
    });
    let scal = ginv.component_mul(&ric).sum();
    let nf = n as f64;
    let ricg = kulkarni_nomizu_matrices(&ric, g);
    let gg = kulkarni_nomizu_matrices(g, g);
    let schouten = AlgebraicCurvature {
        dimension: n,
        components: ricg
            .components
            .iter()
            .zip(&gg.components)
            .map(|(a, b)| a / (nf - 2.0) - scal / (2.0 * (nf - 1.0) * (nf - 2.0)) * b)
            .collect(),
    };
    Ok((r.sub(&schouten), schouten))
}

/// Weyl decomposition at `x` in coordinate components.
pub fn weyl_decompose(m: &MetricFamily, x: &[f64]) -> Result<WeylDecomposition> {
    let n = m.dimension();
    if n < 3 {
        return Err(GeometryError::UnsupportedDimension {
            operation: "weyl_decompose",
            dimension: n,
        });
    }
    let e = Expansion::new(m, x, 2)?;
    let r = AlgebraicCurvature::from_tensor(&e.riemann.values(x));
    let (w, s) = weyl_algebraic(&r, &m.metric_at(x))?;
    Ok(WeylDecomposition {
        weyl: w.to_tensor(x),
        schouten_part: s.to_tensor(x),
    })
}

/// Largest trace of a (0,4) tensor over any pair of slots, with inverse
/// metric `ginv`.
pub fn max_trace(t: &AlgebraicCurvature, ginv: &DMatrix<f64>) -> f64 {
    let n = t.dimension;
    let mut worst: f64 = 0.0;
    let slot_pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    for &(p, q) in &slot_pairs {
        let free: Vec<usize> = (0..4).filter(|s| *s != p && *s != q).collect();
        for u in 0..n {
            for v in 0..n {
                let mut acc = 0.0;
                let mut idx = [0usize; 4];
                idx[free[0]] = u;
                idx[free[1]] = v;
                for a in 0..n {
                    for b in 0..n {
                        idx[p] = a;
                        idx[q] = b;
                        acc += ginv[(a, b)] * t.get(idx[0], idx[1], idx[2], idx[3]);
                    }
                }
                worst = worst.max(acc.abs());
            }
        }
    }
    worst
}
