//! Problem instances, composite terms and generators.

pub mod composite;
pub mod format;
pub mod generators;
pub mod saddle;
pub mod vip;

pub use composite::CompositeTerm;
pub use format::{Instance, InstanceFile, InstanceKind};
pub use saddle::{
    make_bilinear_sp, make_quadratic_sp, make_weakly_coupled_scsc, GradFn, QuadraticSaddle,
    SaddleConstants, SaddleInstance, SaddleModel, Side,
};
pub use vip::{make_polymatrix_vip, BlockOracle, Operator, VipInstance};

use crate::geometry::{ScaledMetric, Vector};
use crate::error::Result;

/// `argmin_w (1/(2 step))‖w − v‖²_P + ψ(w)`.
pub fn prox_composite(term: &CompositeTerm, metric: &ScaledMetric, v: &Vector, step: f64) -> Result<Vector> {
    term.prox(metric, v, step)
}

/// Balls `B_i = {‖z_i − center_i‖_{P_i} ≤ D_i}` intersected with `dom ψ`.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub center: Vector,
    pub radii: Vec<f64>,
}

impl DomainSpec {
    pub fn from_saddle(inst: &SaddleInstance) -> Self {
        Self {
            center: inst.z0(),
            radii: vec![inst.declared.d_x, inst.declared.d_y],
        }
    }

    pub fn from_vip(inst: &VipInstance) -> Self {
        Self {
            center: inst.z0.clone(),
            radii: inst.radii.clone(),
        }
    }
}

/// Anything that can be viewed as a block VIP.
pub trait BlockProblem {
    fn to_vip(&self) -> VipInstance;
}

impl BlockProblem for SaddleInstance {
    fn to_vip(&self) -> VipInstance {
        SaddleInstance::to_vip(self)
    }
}

impl BlockProblem for VipInstance {
    fn to_vip(&self) -> VipInstance {
        self.clone()
    }
}
