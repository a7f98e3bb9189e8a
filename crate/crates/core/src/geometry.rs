//! Block geometry: diagonal scaling metrics, block layouts and the assembled
//! norm `‖z‖_E = sqrt(Σ α_i ⟨P_i z_i, z_i⟩)` together with its dual.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{check_dim, Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Diagonal positive-definite scaling `P` defining `‖w‖ = sqrt(⟨P w, w⟩)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledMetric {
    weights: Vector,
}

impl ScaledMetric {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Parameter("metric must have dimension >= 1".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Parameter(format!(
                "metric weights must be positive and finite, got {w}"
            )));
        }
        Ok(Self {
            weights: Vector::from_vec(weights),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            weights: Vector::from_element(dim.max(1), 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &Vector {
        &self.weights
    }

    pub fn is_identity(&self) -> bool {
        self.weights.iter().all(|w| *w == 1.0)
    }

    /// `P w`.
    pub fn apply(&self, w: &Vector) -> Vector {
        w.component_mul(&self.weights)
    }

    /// `P⁻¹ g`.
    pub fn apply_inv(&self, g: &Vector) -> Vector {
        g.component_div(&self.weights)
    }

    /// `P^{1/2} w`.
    pub fn apply_sqrt(&self, w: &Vector) -> Vector {
        w.zip_map(&self.weights, |a, p| a * p.sqrt())
    }

    /// `P^{-1/2} g`.
    pub fn apply_inv_sqrt(&self, g: &Vector) -> Vector {
        g.zip_map(&self.weights, |a, p| a / p.sqrt())
    }

    pub fn norm_sq(&self, w: &Vector) -> f64 {
        w.iter().zip(self.weights.iter()).map(|(a, p)| p * a * a).sum()
    }

    pub fn norm(&self, w: &Vector) -> f64 {
        self.norm_sq(w).sqrt()
    }

    pub fn dual_norm_sq(&self, g: &Vector) -> f64 {
        g.iter().zip(self.weights.iter()).map(|(a, p)| a * a / p).sum()
    }

    pub fn dual_norm(&self, g: &Vector) -> f64 {
        self.dual_norm_sq(g).sqrt()
    }

    /// `P^{-1/2} H P^{-1/2}`, the matrix `H` expressed in the metric.
    pub fn congruence(&self, h: &Matrix) -> Matrix {
        let s = self.weights.map(|p| 1.0 / p.sqrt());
        Matrix::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * s[i] * s[j])
    }
}

/// Offsets of the agent blocks inside a joint vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Parameter(
                "block layout needs at least one block, each of dimension >= 1".into(),
            ));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for d in &dims {
            offsets.push(acc);
            acc += d;
        }
        Ok(Self { dims, offsets })
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, i: usize) -> usize {
        self.dims[i]
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn block<'a>(&self, z: &'a Vector, i: usize) -> DVectorView<'a, f64> {
        z.rows(self.offsets[i], self.dims[i])
    }

    pub fn block_owned(&self, z: &Vector, i: usize) -> Vector {
        self.block(z, i).into_owned()
    }

    pub fn set_block(&self, z: &mut Vector, i: usize, value: &Vector) {
        z.rows_mut(self.offsets[i], self.dims[i]).copy_from(value);
    }

    pub fn assemble(&self, blocks: &[Vector]) -> Result<Vector> {
        check_dim("block count", self.num_blocks(), blocks.len())?;
        let mut z = Vector::zeros(self.total());
        for (i, b) in blocks.iter().enumerate() {
            check_dim("block dimension", self.dims[i], b.len())?;
            self.set_block(&mut z, i, b);
        }
        Ok(z)
    }

    pub fn split(&self, z: &Vector) -> Vec<Vector> {
        (0..self.num_blocks()).map(|i| self.block_owned(z, i)).collect()
    }
}

/// Product metric `E = ⊕ α_i P_i` over the agent blocks.
#[derive(Debug, Clone)]
pub struct AssembledMetric {
    layout: BlockLayout,
    metrics: Vec<ScaledMetric>,
    alpha: Vec<f64>,
}

impl AssembledMetric {
    pub fn new(metrics: Vec<ScaledMetric>, alpha: Vec<f64>) -> Result<Self> {
        check_dim("assembled metric weights", metrics.len(), alpha.len())?;
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::Parameter(format!(
                "block weights alpha must be positive, got {a}"
            )));
        }
        let layout = BlockLayout::new(metrics.iter().map(ScaledMetric::dim).collect())?;
        Ok(Self {
            layout,
            metrics,
            alpha,
        })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn metric(&self, i: usize) -> &ScaledMetric {
        &self.metrics[i]
    }

    fn check(&self, v: &Vector) -> Result<()> {
        check_dim("assembled vector", self.layout.total(), v.len())
    }

    pub fn norm_sq(&self, z: &Vector) -> Result<f64> {
        self.check(z)?;
        Ok((0..self.metrics.len())
            .map(|i| self.alpha[i] * self.metrics[i].norm_sq(&self.layout.block_owned(z, i)))
            .sum())
    }

    pub fn norm(&self, z: &Vector) -> Result<f64> {
        self.norm_sq(z).map(f64::sqrt)
    }

    pub fn dual_norm_sq(&self, g: &Vector) -> Result<f64> {
        self.check(g)?;
        Ok((0..self.metrics.len())
            .map(|i| self.metrics[i].dual_norm_sq(&self.layout.block_owned(g, i)) / self.alpha[i])
            .sum())
    }

    pub fn dual_norm(&self, g: &Vector) -> Result<f64> {
        self.dual_norm_sq(g).map(f64::sqrt)
    }

    /// `⊕ α_i P_i z_i`.
    pub fn apply(&self, z: &Vector) -> Result<Vector> {
        self.check(z)?;
        let mut out = z.clone();
        for i in 0..self.metrics.len() {
            let b = self.metrics[i].apply(&self.layout.block_owned(z, i)) * self.alpha[i];
            self.layout.set_block(&mut out, i, &b);
        }
        Ok(out)
    }

    /// `⊕ α_i⁻¹ P_i⁻¹ g_i`.
    pub fn apply_inv(&self, g: &Vector) -> Result<Vector> {
        self.check(g)?;
        let mut out = g.clone();
        for i in 0..self.metrics.len() {
            let b = self.metrics[i].apply_inv(&self.layout.block_owned(g, i)) / self.alpha[i];
            self.layout.set_block(&mut out, i, &b);
        }
        Ok(out)
    }
}

/// `‖z‖_E` for the metrics `P_i` weighted by `α_i`.
pub fn assembled_norm(z: &Vector, metrics: &[ScaledMetric], alpha: &[f64]) -> Result<f64> {
    AssembledMetric::new(metrics.to_vec(), alpha.to_vec())?.norm(z)
}

/// `‖g‖_{E*} = sqrt(Σ α_i⁻¹ ⟨g_i, P_i⁻¹ g_i⟩)`.
pub fn assembled_dual_norm(g: &Vector, metrics: &[ScaledMetric], alpha: &[f64]) -> Result<f64> {
    AssembledMetric::new(metrics.to_vec(), alpha.to_vec())?.dual_norm(g)
}
