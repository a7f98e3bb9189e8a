use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{BlockLayout, Matrix, ScaledMetric, Vector};
use crate::linalg::{min_eigenvalue, spectral_norm};
use crate::problems::composite::CompositeTerm;
use crate::problems::vip::{Operator, VipInstance};

/// Partial-gradient oracle `(x, y) ↦ covector`.
pub type GradFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

/// Quadratic coupling
/// `f(x, y) = ½xᵀH_x x − g_xᵀx + yᵀCx − ½yᵀH_y y + g_yᵀy + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSaddle {
    pub h_x: Matrix,
    pub g_x: Vector,
    pub c: Matrix,
    pub h_y: Matrix,
    pub g_y: Vector,
    pub offset: f64,
}

impl QuadraticSaddle {
    pub fn new(h_x: Matrix, g_x: Vector, c: Matrix, h_y: Matrix, g_y: Vector) -> Result<Self> {
        let nx = g_x.len();
        let ny = g_y.len();
        check_dim("H_x rows", nx, h_x.nrows())?;
        check_dim("H_x cols", nx, h_x.ncols())?;
        check_dim("H_y rows", ny, h_y.nrows())?;
        check_dim("H_y cols", ny, h_y.ncols())?;
        check_dim("coupling rows", ny, c.nrows())?;
        check_dim("coupling cols", nx, c.ncols())?;
        for (name, h) in [("H_x", &h_x), ("H_y", &h_y)] {
            let scale = 1.0 + h.amax();
            if (h - h.transpose()).amax() > 1e-12 * scale {
                return Err(Error::Parameter(format!("{name} must be symmetric")));
            }
            if min_eigenvalue(h) < -1e-10 * scale {
                return Err(Error::Parameter(format!("{name} must be positive semidefinite")));
            }
        }
        Ok(Self {
            h_x,
            g_x,
            c,
            h_y,
            g_y,
            offset: 0.0,
        })
    }

    pub fn nx(&self) -> usize {
        self.g_x.len()
    }

    pub fn ny(&self) -> usize {
        self.g_y.len()
    }

    pub fn grad_x(&self, x: &Vector, y: &Vector) -> Vector {
        &self.h_x * x - &self.g_x + self.c.tr_mul(y)
    }

    pub fn grad_y(&self, x: &Vector, y: &Vector) -> Vector {
        &self.c * x - &self.h_y * y + &self.g_y
    }

    pub fn value(&self, x: &Vector, y: &Vector) -> f64 {
        0.5 * x.dot(&(&self.h_x * x)) - self.g_x.dot(x) + y.dot(&(&self.c * x))
            - 0.5 * y.dot(&(&self.h_y * y))
            + self.g_y.dot(y)
            + self.offset
    }

    /// `V(z) = M z − q` with `M = [[H_x, Cᵀ], [−C, H_y]]`, `q = (g_x, g_y)`.
    pub fn operator_matrix(&self) -> (Matrix, Vector) {
        let (nx, ny) = (self.nx(), self.ny());
        let mut m = Matrix::zeros(nx + ny, nx + ny);
        m.view_mut((0, 0), (nx, nx)).copy_from(&self.h_x);
        m.view_mut((0, nx), (nx, ny)).copy_from(&self.c.transpose());
        m.view_mut((nx, 0), (ny, nx)).copy_from(&(-&self.c));
        m.view_mut((nx, nx), (ny, ny)).copy_from(&self.h_y);
        let mut q = Vector::zeros(nx + ny);
        q.rows_mut(0, nx).copy_from(&self.g_x);
        q.rows_mut(nx, ny).copy_from(&self.g_y);
        (m, q)
    }
}

/// The coupling function of a saddle instance.
#[derive(Clone)]
pub enum SaddleModel {
    Quadratic(QuadraticSaddle),
    Custom { grad_x: GradFn, grad_y: GradFn },
}

impl fmt::Debug for SaddleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SaddleModel::Quadratic(q) => f.debug_tuple("Quadratic").field(q).finish(),
            SaddleModel::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// Declared problem constants `(L_x, L_xy, L_y, D_x, D_y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleConstants {
    pub l_x: f64,
    pub l_xy: f64,
    pub l_y: f64,
    pub d_x: f64,
    pub d_y: f64,
}

/// Two-agent saddle problem `min_x max_y f(x, y) + ψ_x(x) − ψ_y(y)`.
#[derive(Debug, Clone)]
pub struct SaddleInstance {
    pub name: String,
    pub model: SaddleModel,
    pub metric_x: ScaledMetric,
    pub metric_y: ScaledMetric,
    pub psi_x: CompositeTerm,
    pub psi_y: CompositeTerm,
    pub x0: Vector,
    pub y0: Vector,
    pub declared: SaddleConstants,
    pub costs: [f64; 2],
    pub solution: Option<(Vector, Vector)>,
}

impl SaddleInstance {
    /// Instance with identity metrics, zero composites and `z0 = 0`.
    pub fn from_quadratic(name: &str, q: QuadraticSaddle, d_x: f64, d_y: f64) -> Result<Self> {
        let (nx, ny) = (q.nx(), q.ny());
        let metric_x = ScaledMetric::identity(nx);
        let metric_y = ScaledMetric::identity(ny);
        let declared = SaddleConstants {
            l_x: spectral_norm(&q.h_x),
            l_xy: spectral_norm(&q.c),
            l_y: spectral_norm(&q.h_y),
            d_x,
            d_y,
        };
        let inst = Self {
            name: name.to_string(),
            model: SaddleModel::Quadratic(q),
            metric_x,
            metric_y,
            psi_x: CompositeTerm::Zero,
            psi_y: CompositeTerm::Zero,
            x0: Vector::zeros(nx),
            y0: Vector::zeros(ny),
            declared,
            costs: [1.0, 1.0],
            solution: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let (nx, ny) = (self.nx(), self.ny());
        check_dim("x0", self.metric_x.dim(), nx)?;
        check_dim("y0", self.metric_y.dim(), ny)?;
        self.psi_x.validate(&self.metric_x)?;
        self.psi_y.validate(&self.metric_y)?;
        if let SaddleModel::Quadratic(q) = &self.model {
            check_dim("quadratic x dimension", nx, q.nx())?;
            check_dim("quadratic y dimension", ny, q.ny())?;
        }
        let d = &self.declared;
        for (name, v) in [
            ("L_x", d.l_x),
            ("L_xy", d.l_xy),
            ("L_y", d.l_y),
            ("D_x", d.d_x),
            ("D_y", d.d_y),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!("declared {name} = {v} invalid")));
            }
        }
        if self.psi_x.value(&self.metric_x, &self.x0).is_infinite()
            || self.psi_y.value(&self.metric_y, &self.y0).is_infinite()
        {
            return Err(Error::Parameter("z0 must lie in dom ψ".into()));
        }
        if self.costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Parameter("oracle costs must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.x0.len()
    }

    pub fn ny(&self) -> usize {
        self.y0.len()
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout::new(vec![self.nx(), self.ny()]).expect("nonempty blocks")
    }

    pub fn quadratic(&self) -> Option<&QuadraticSaddle> {
        match &self.model {
            SaddleModel::Quadratic(q) => Some(q),
            SaddleModel::Custom { .. } => None,
        }
    }

    /// `∇_x f(x, y)`.
    pub fn grad_x(&self, x: &Vector, y: &Vector) -> Vector {
        match &self.model {
            SaddleModel::Quadratic(q) => q.grad_x(x, y),
            SaddleModel::Custom { grad_x, .. } => grad_x(x, y),
        }
    }

    /// `∇_y f(x, y)`.
    pub fn grad_y(&self, x: &Vector, y: &Vector) -> Vector {
        match &self.model {
            SaddleModel::Quadratic(q) => q.grad_y(x, y),
            SaddleModel::Custom { grad_y, .. } => grad_y(x, y),
        }
    }

    /// The y-agent's operator component `−∇_y f(x, y)`.
    pub fn oracle_y(&self, x: &Vector, y: &Vector) -> Vector {
        -self.grad_y(x, y)
    }

    pub fn value(&self, x: &Vector, y: &Vector) -> Option<f64> {
        self.quadratic().map(|q| q.value(x, y))
    }

    pub fn z0(&self) -> Vector {
        self.layout()
            .assemble(&[self.x0.clone(), self.y0.clone()])
            .expect("matching blocks")
    }

    pub fn with_metrics(mut self, metric_x: ScaledMetric, metric_y: ScaledMetric) -> Result<Self> {
        self.metric_x = metric_x;
        self.metric_y = metric_y;
        if let SaddleModel::Quadratic(q) = &self.model {
            self.declared.l_x = spectral_norm(&self.metric_x.congruence(&q.h_x));
            self.declared.l_y = spectral_norm(&self.metric_y.congruence(&q.h_y));
            let s_x = self.metric_x.weights().map(|p| 1.0 / p.sqrt());
            let s_y = self.metric_y.weights().map(|p| 1.0 / p.sqrt());
            let scaled = Matrix::from_fn(q.c.nrows(), q.c.ncols(), |i, j| {
                q.c[(i, j)] * s_y[i] * s_x[j]
            });
            self.declared.l_xy = spectral_norm(&scaled);
        }
        self.validate()?;
        Ok(self)
    }

    /// The saddle problem as a two-block VIP with `V = (∇_x f, −∇_y f)`.
    pub fn to_vip(&self) -> VipInstance {
        let layout = self.layout();
        let d = self.declared;
        let operator = match &self.model {
            SaddleModel::Quadratic(q) => {
                let (m, q) = q.operator_matrix();
                Operator::Affine { m, q }
            }
            SaddleModel::Custom { grad_x, grad_y } => {
                let (nx, ny) = (self.nx(), self.ny());
                let gx = grad_x.clone();
                let gy = grad_y.clone();
                Operator::Custom(vec![
                    Arc::new(move |z: &Vector| {
                        gx(&z.rows(0, nx).into_owned(), &z.rows(nx, ny).into_owned())
                    }),
                    Arc::new(move |z: &Vector| {
                        -gy(&z.rows(0, nx).into_owned(), &z.rows(nx, ny).into_owned())
                    }),
                ])
            }
        };
        let solution = self.solution.as_ref().map(|(x, y)| {
            layout
                .assemble(&[x.clone(), y.clone()])
                .expect("solution dims")
        });
        VipInstance {
            name: self.name.clone(),
            layout,
            metrics: vec![self.metric_x.clone(), self.metric_y.clone()],
            psis: vec![self.psi_x.clone(), self.psi_y.clone()],
            operator,
            lipschitz: Matrix::from_row_slice(2, 2, &[d.l_x, d.l_xy, d.l_xy, d.l_y]),
            radii: vec![d.d_x, d.d_y],
            z0: self.z0(),
            costs: self.costs.to_vec(),
            gradient_blocks: vec![true, true],
            solution,
        }
    }
}

/// `f(x, y) = ⟨A x − b, y⟩` with `A ∈ R^{n_y × n_x}`.
pub fn make_bilinear_sp(a: &Matrix, b: &Vector, d_x: f64, d_y: f64) -> Result<SaddleInstance> {
    check_dim("bilinear b", a.nrows(), b.len())?;
    let (ny, nx) = a.shape();
    let q = QuadraticSaddle::new(
        Matrix::zeros(nx, nx),
        Vector::zeros(nx),
        a.clone(),
        Matrix::zeros(ny, ny),
        -b,
    )?;
    SaddleInstance::from_quadratic("bilinear", q, d_x, d_y)
}

/// Which agent owns the quadratic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

/// `f = ½‖A x − b‖²` (side x) or `f = −½‖A y − b‖²` (side y); the other
/// agent has a one-dimensional dummy variable with zero gradient.
pub fn make_quadratic_sp(a: &Matrix, b: &Vector, side: Side, d_x: f64, d_y: f64) -> Result<SaddleInstance> {
    check_dim("quadratic b", a.nrows(), b.len())?;
    let n = a.ncols();
    let h = a.tr_mul(a);
    let g = a.tr_mul(b);
    let offset = 0.5 * b.norm_squared();
    let mut q = match side {
        Side::X => QuadraticSaddle::new(h, g, Matrix::zeros(1, n), Matrix::zeros(1, 1), Vector::zeros(1))?,
        Side::Y => QuadraticSaddle::new(Matrix::zeros(1, 1), Vector::zeros(1), Matrix::zeros(n, 1), h, g)?,
    };
    q.offset = match side {
        Side::X => offset,
        Side::Y => -offset,
    };
    let name = match side {
        Side::X => "quadratic-x",
        Side::Y => "quadratic-y",
    };
    SaddleInstance::from_quadratic(name, q, d_x, d_y)
}

/// `f(x, y) = (μ_x/2)‖x‖² − (μ_y/2)‖y‖² + c⟨x, y⟩` with saddle at the origin.
pub fn make_weakly_coupled_scsc(mu_x: f64, mu_y: f64, c: f64, n: usize) -> Result<SaddleInstance> {
    if !(mu_x > 0.0 && mu_y > 0.0 && c >= 0.0) || n == 0 {
        return Err(Error::Parameter("need μ_x, μ_y > 0, c ≥ 0, n ≥ 1".into()));
    }
    let id = Matrix::identity(n, n);
    let q = QuadraticSaddle::new(&id * mu_x, Vector::zeros(n), &id * c, &id * mu_y, Vector::zeros(n))?;
    let mut inst = SaddleInstance::from_quadratic("weakly-coupled", q, 1.0, 1.0)?;
    inst.x0 = Vector::from_element(n, 1.0);
    inst.y0 = Vector::from_element(n, 1.0);
    let r = (n as f64).sqrt();
    inst.declared.d_x = r;
    inst.declared.d_y = r;
    inst.solution = Some((Vector::zeros(n), Vector::zeros(n)));
    Ok(inst)
}
