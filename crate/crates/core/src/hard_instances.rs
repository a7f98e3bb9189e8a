//! Worst-case lower-bound machinery: the rescaled tridiagonal construction,
//! Krylov subspaces `H^k(A, b) = span{Aᵀb, (AᵀA)Aᵀb, …, (AᵀA)^{k−1}Aᵀb}`,
//! a brute-force least-squares residual oracle, and the three hard
//! saddle subclasses.

use crate::error::{Error, Result};
use crate::geometry::{Matrix, Vector};
use crate::linalg::{orthonormal_basis, residual_to_span};
use crate::problems::saddle::{make_bilinear_sp, make_quadratic_sp, SaddleInstance, Side};

/// The pair `(A, b)` with `A = (L/2)[B_p 0; 0 0]`, `b = γ(L/2)[u; 0]`.
#[derive(Debug, Clone)]
pub struct KrylovInstance {
    pub a: Matrix,
    pub b: Vector,
    pub l: f64,
    pub d: f64,
    pub k: usize,
    pub p: usize,
    pub gamma: f64,
    pub v_star: Vector,
}

impl KrylovInstance {
    /// `½‖A v − b‖²`.
    pub fn objective(&self, v: &Vector) -> f64 {
        0.5 * (&self.a * v - &self.b).norm_squared()
    }

    /// Closed-form `min_{v ∈ H^k} ½‖Av − b‖² = L²γ²/(16(k+1))` at the
    /// construction's own `k`.
    pub fn closed_form_residual(&self) -> f64 {
        self.l.powi(2) * self.gamma.powi(2) / (16.0 * (self.k as f64 + 1.0))
    }

    /// `3L²D²/(32(k+1)²)`.
    pub fn residual_lower_bound(&self) -> f64 {
        3.0 * self.l.powi(2) * self.d.powi(2) / (32.0 * (self.k as f64 + 1.0).powi(2))
    }
}

/// `(2, −1)` tridiagonal `M_p`.
pub fn tridiagonal_m(p: usize) -> Matrix {
    Matrix::from_fn(p, p, |i, j| {
        if i == j {
            2.0
        } else if i.abs_diff(j) == 1 {
            -1.0
        } else {
            0.0
        }
    })
}

/// `(p+1) × p` lower bidiagonal `B_p` with `B_pᵀB_p = M_p`.
pub fn bidiagonal_b(p: usize) -> Matrix {
    Matrix::from_fn(p + 1, p, |i, j| {
        if i == j {
            1.0
        } else if i == j + 1 {
            -1.0
        } else {
            0.0
        }
    })
}

pub fn worst_case_instance(l: f64, d: f64, k: usize, m: usize, n: usize) -> Result<KrylovInstance> {
    if !(l >= 0.0 && d >= 0.0 && l.is_finite() && d.is_finite()) {
        return Err(Error::Parameter("L and D must be finite and ≥ 0".into()));
    }
    let p = 2 * k + 1;
    if k < 1 || m < 1 || p + 1 > m || p > n {
        return Err(Error::Parameter(format!(
            "need 1 ≤ k ≤ (min(m−1, n) − 1)/2; got k = {k}, m = {m}, n = {n}"
        )));
    }
    let pf = p as f64;
    let gamma = d * (6.0 * (pf + 1.0) / (pf * (2.0 * pf + 1.0))).sqrt();
    let mut a = Matrix::zeros(m, n);
    a.view_mut((0, 0), (p + 1, p))
        .copy_from(&(bidiagonal_b(p) * (l / 2.0)));
    let mut b = Vector::zeros(m);
    b[0] = gamma * (l / 2.0) * pf / (pf + 1.0);
    for i in 1..=p {
        b[i] = -gamma * (l / 2.0) / (pf + 1.0);
    }
    let mut v_star = Vector::zeros(n);
    for i in 0..p {
        v_star[i] = gamma * (pf - i as f64) / (pf + 1.0);
    }
    Ok(KrylovInstance {
        a,
        b,
        l,
        d,
        k,
        p,
        gamma,
        v_star,
    })
}

/// Orthonormal basis of `H^k(A, b)`, built by modified Gram–Schmidt with
/// re-orthogonalization.
#[derive(Debug, Clone)]
pub struct KrylovBasis {
    pub vectors: Vec<Vector>,
}

impl KrylovBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Distance from `v` to the subspace.
    pub fn residual(&self, v: &Vector) -> f64 {
        residual_to_span(&self.vectors, v)
    }

    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        self.residual(v) <= tol * (1.0 + v.norm())
    }

    /// Columns as a matrix `n × dim`.
    pub fn matrix(&self, n: usize) -> Matrix {
        if self.vectors.is_empty() {
            return Matrix::zeros(n, 0);
        }
        Matrix::from_columns(&self.vectors)
    }
}

pub fn krylov_basis(a: &Matrix, b: &Vector, k: usize) -> KrylovBasis {
    let mut gens = Vec::with_capacity(k);
    let mut g = a.tr_mul(b);
    for _ in 0..k {
        gens.push(g.clone());
        g = a.tr_mul(&(a * &g));
    }
    KrylovBasis {
        vectors: orthonormal_basis(gens.iter(), 1e-12),
    }
}

/// `min_{v ∈ H^k(A,b)} ½‖Av − b‖²` by orthogonal factorization of the
/// basis-restricted least-squares system.
pub fn krylov_min_residual(inst: &KrylovInstance, k: usize) -> f64 {
    min_residual_over(&inst.a, &inst.b, k)
}

pub fn min_residual_over(a: &Matrix, b: &Vector, k: usize) -> f64 {
    let basis = krylov_basis(a, b, k);
    if basis.dim() == 0 {
        return 0.5 * b.norm_squared();
    }
    let aq = a * basis.matrix(a.ncols());
    let q = aq.qr().q();
    let proj = &q * q.tr_mul(b);
    0.5 * (b - proj).norm_squared()
}

/// Hard subclass selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubclassKind {
    X,
    Y,
    Xy,
}

impl std::str::FromStr for SubclassKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(SubclassKind::X),
            "y" => Ok(SubclassKind::Y),
            "xy" => Ok(SubclassKind::Xy),
            other => Err(Error::Parameter(format!("unknown subclass kind {other:?}"))),
        }
    }
}

/// A hard saddle instance together with its construction.
#[derive(Debug, Clone)]
pub struct HardInstance {
    pub kind: SubclassKind,
    pub saddle: SaddleInstance,
    pub construction: KrylovInstance,
}

/// Builds the x, y or bilinear hard subclass.
///
/// `dims = (n_x, n_y)`. The quadratic kinds use a `(n+1) × n` matrix on
/// the active side and a one-dimensional dummy on the other. The bilinear
/// kind uses `A ∈ R^{n_y × n_x}`.
pub fn make_subclass_instance(
    kind: SubclassKind,
    l: f64,
    d_x: f64,
    d_y: f64,
    k: usize,
    dims: (usize, usize),
) -> Result<HardInstance> {
    let (nx, ny) = dims;
    let (saddle, construction) = match kind {
        SubclassKind::X => {
            let c = worst_case_instance(l.sqrt(), d_x, k, nx + 1, nx)?;
            let mut s = make_quadratic_sp(&c.a, &c.b, Side::X, d_x, d_y)?;
            s.solution = Some((c.v_star.clone(), Vector::zeros(1)));
            (s, c)
        }
        SubclassKind::Y => {
            let c = worst_case_instance(l.sqrt(), d_y, k, ny + 1, ny)?;
            let mut s = make_quadratic_sp(&c.a, &c.b, Side::Y, d_x, d_y)?;
            s.solution = Some((Vector::zeros(1), c.v_star.clone()));
            (s, c)
        }
        SubclassKind::Xy => {
            let c = worst_case_instance(l, d_x, k, ny, nx)?;
            let mut s = make_bilinear_sp(&c.a, &c.b, d_x, d_y)?;
            s.solution = Some((c.v_star.clone(), Vector::zeros(ny)));
            (s, c)
        }
    };
    let mut saddle = saddle;
    saddle.name = format!("hard-{kind:?}-k{k}").to_lowercase();
    Ok(HardInstance {
        kind,
        saddle,
        construction,
    })
}
