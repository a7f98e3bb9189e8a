use std::fmt;
use std::sync::Arc;

use crate::accounting::Ledger;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{BlockLayout, Matrix, ScaledMetric, Vector};
use crate::linalg::{min_eigenvalue, spectral_norm};
use crate::problems::composite::CompositeTerm;

/// Block oracle `z ↦ V_i(z)` reading the joint point.
pub type BlockOracle = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// The joint monotone operator.
#[derive(Clone)]
pub enum Operator {
    /// `V(z) = M z − q`.
    Affine { m: Matrix, q: Vector },
    Custom(Vec<BlockOracle>),
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Affine { m, q } => f
                .debug_struct("Affine")
                .field("m", m)
                .field("q", q)
                .finish(),
            Operator::Custom(v) => write!(f, "Custom({} blocks)", v.len()),
        }
    }
}

/// K-agent monotone inclusion `0 ∈ V(z) + ∂ψ(z)`.
#[derive(Debug, Clone)]
pub struct VipInstance {
    pub name: String,
    pub layout: BlockLayout,
    pub metrics: Vec<ScaledMetric>,
    pub psis: Vec<CompositeTerm>,
    pub operator: Operator,
    /// `L_ij`: Lipschitz constant of `V_i` in `z_j`.
    pub lipschitz: Matrix,
    /// `D_i`: distance bound from `z0_i` to a solution.
    pub radii: Vec<f64>,
    pub z0: Vector,
    pub costs: Vec<f64>,
    /// Blocks whose frozen-remote operator is the gradient of a convex function.
    pub gradient_blocks: Vec<bool>,
    pub solution: Option<Vector>,
}

impl VipInstance {
    pub fn num_blocks(&self) -> usize {
        self.layout.num_blocks()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_blocks();
        check_dim("metric count", k, self.metrics.len())?;
        check_dim("composite count", k, self.psis.len())?;
        check_dim("radius count", k, self.radii.len())?;
        check_dim("cost count", k, self.costs.len())?;
        check_dim("gradient flag count", k, self.gradient_blocks.len())?;
        check_dim("lipschitz rows", k, self.lipschitz.nrows())?;
        check_dim("lipschitz cols", k, self.lipschitz.ncols())?;
        check_dim("z0", self.layout.total(), self.z0.len())?;
        for i in 0..k {
            check_dim("block metric", self.layout.dim(i), self.metrics[i].dim())?;
            self.psis[i].validate(&self.metrics[i])?;
            let zi = self.layout.block_owned(&self.z0, i);
            if self.psis[i].value(&self.metrics[i], &zi).is_infinite() {
                return Err(Error::Parameter(format!("z0 block {i} outside dom ψ")));
            }
        }
        if self.lipschitz.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Parameter("Lipschitz entries must be ≥ 0".into()));
        }
        if self.radii.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Parameter("radii D_i must be > 0".into()));
        }
        if self.costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Parameter("costs must be ≥ 0".into()));
        }
        match &self.operator {
            Operator::Affine { m, q } => {
                check_dim("operator rows", self.layout.total(), m.nrows())?;
                check_dim("operator cols", self.layout.total(), m.ncols())?;
                check_dim("operator offset", self.layout.total(), q.len())?;
            }
            Operator::Custom(v) => check_dim("block oracle count", k, v.len())?,
        }
        Ok(())
    }

    /// `V_i(z)`, evaluated without charging a ledger.
    pub fn block_operator(&self, i: usize, z: &Vector) -> Vector {
        match &self.operator {
            Operator::Affine { m, q } => {
                let (o, d) = (self.layout.offset(i), self.layout.dim(i));
                m.rows(o, d) * z - q.rows(o, d)
            }
            Operator::Custom(v) => v[i](z),
        }
    }

    /// `V(z)`, evaluated without charging a ledger.
    pub fn operator(&self, z: &Vector) -> Vector {
        match &self.operator {
            Operator::Affine { m, q } => m * z - q,
            Operator::Custom(_) => {
                let parts: Vec<Vector> = (0..self.num_blocks())
                    .map(|i| self.block_operator(i, z))
                    .collect();
                self.layout.assemble(&parts).expect("block oracle dims")
            }
        }
    }

    /// Agent `i` queries its oracle at `z`; the query is charged to `ledger`.
    pub fn query(&self, i: usize, z: &Vector, ledger: &mut Ledger) -> Vector {
        let r = self.block_operator(i, z);
        ledger.record_query(i, z, &r);
        r
    }

    /// `L̄_ij = max{L_ij, L_ji}`.
    pub fn lbar(&self, i: usize, j: usize) -> f64 {
        self.lipschitz[(i, j)].max(self.lipschitz[(j, i)])
    }

    /// `A_i = D_i Σ_{j≠i} L̄_ij D_j`.
    pub fn cross_conditioning(&self) -> Vec<f64> {
        let k = self.num_blocks();
        (0..k)
            .map(|i| {
                self.radii[i]
                    * (0..k)
                        .filter(|j| *j != i)
                        .map(|j| self.lbar(i, j) * self.radii[j])
                        .sum::<f64>()
            })
            .collect()
    }

    /// `B_i = L̄_ii D_i²`.
    pub fn diagonal_conditioning(&self) -> Vec<f64> {
        (0..self.num_blocks())
            .map(|i| self.lipschitz[(i, i)] * self.radii[i].powi(2))
            .collect()
    }

    /// Whether the joint point lies in `dom ψ`.
    pub fn in_domain(&self, z: &Vector) -> bool {
        (0..self.num_blocks()).all(|i| {
            self.psis[i]
                .value(&self.metrics[i], &self.layout.block_owned(z, i))
                .is_finite()
        })
    }

    pub fn psi_value(&self, z: &Vector) -> f64 {
        (0..self.num_blocks())
            .map(|i| self.psis[i].value(&self.metrics[i], &self.layout.block_owned(z, i)))
            .sum()
    }

    /// Lipschitz matrix of an affine operator measured in the block metrics.
    pub fn affine_lipschitz(layout: &BlockLayout, metrics: &[ScaledMetric], m: &Matrix) -> Matrix {
        let k = layout.num_blocks();
        Matrix::from_fn(k, k, |i, j| {
            let (oi, di) = (layout.offset(i), layout.dim(i));
            let (oj, dj) = (layout.offset(j), layout.dim(j));
            let blk = m.view((oi, oj), (di, dj));
            let si = metrics[i].weights();
            let sj = metrics[j].weights();
            let scaled = Matrix::from_fn(di, dj, |a, b| blk[(a, b)] / (si[a] * sj[b]).sqrt());
            spectral_norm(&scaled)
        })
    }
}

/// Monotone polymatrix operator `V_i(z) = Σ_j A_ij z_j − b_i` with skew
/// off-diagonal blocks and symmetric PSD diagonal blocks.
pub fn make_polymatrix_vip(dims: &[usize], a: &Matrix, b: &Vector, radii: &[f64]) -> Result<VipInstance> {
    let layout = BlockLayout::new(dims.to_vec())?;
    let n = layout.total();
    check_dim("polymatrix rows", n, a.nrows())?;
    check_dim("polymatrix cols", n, a.ncols())?;
    check_dim("polymatrix b", n, b.len())?;
    let k = layout.num_blocks();
    check_dim("polymatrix radii", k, radii.len())?;
    let tol = 1e-12 * (1.0 + a.amax());
    for i in 0..k {
        for j in 0..k {
            let (oi, di) = (layout.offset(i), layout.dim(i));
            let (oj, dj) = (layout.offset(j), layout.dim(j));
            let aij = a.view((oi, oj), (di, dj));
            let aji = a.view((oj, oi), (dj, di));
            if i == j {
                if (aij - aij.transpose()).amax() > tol {
                    return Err(Error::Parameter(format!("diagonal block {i} not symmetric")));
                }
                if min_eigenvalue(&aij.into_owned()) < -1e-10 * (1.0 + a.amax()) {
                    return Err(Error::Parameter(format!("diagonal block {i} not PSD")));
                }
            } else if (aij + aji.transpose()).amax() > tol {
                return Err(Error::Parameter(format!(
                    "skew condition A_ji = −A_ijᵀ violated for ({i}, {j})"
                )));
            }
        }
    }
    let metrics: Vec<ScaledMetric> = dims.iter().map(|d| ScaledMetric::identity(*d)).collect();
    let lipschitz = VipInstance::affine_lipschitz(&layout, &metrics, a);
    let inst = VipInstance {
        name: "polymatrix".into(),
        psis: vec![CompositeTerm::Zero; k],
        operator: Operator::Affine {
            m: a.clone(),
            q: b.clone(),
        },
        lipschitz,
        radii: radii.to_vec(),
        z0: Vector::zeros(n),
        costs: vec![1.0; k],
        gradient_blocks: vec![true; k],
        solution: None,
        layout,
        metrics,
    };
    inst.validate()?;
    Ok(inst)
}
