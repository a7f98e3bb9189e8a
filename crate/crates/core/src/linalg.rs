//! Small dense linear-algebra helpers shared by the evaluation and
//! lower-bound code.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::geometry::{Matrix, Vector};

/// Largest singular value of `a`.
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let gram = if a.nrows() >= a.ncols() {
        a.transpose() * a
    } else {
        a * a.transpose()
    };
    max_eigenvalue(&gram).max(0.0).sqrt()
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(h: &Matrix) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    let sym = (h + h.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(h: &Matrix) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    let sym = (h + h.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Solution of `min ½uᵀMu + dᵀu` subject to `‖u‖ ≤ radius` for symmetric PSD `M`.
#[derive(Debug, Clone)]
pub struct TrustRegionSolution {
    pub value: f64,
    pub point: Vector,
    pub multiplier: f64,
}

/// Exact convex trust-region solve by eigendecomposition and bisection on
/// the secular equation. Handles the hard case (zero curvature directions
/// with vanishing linear term).
pub fn trust_region_min(m: &Matrix, d: &Vector, radius: f64) -> Result<TrustRegionSolution> {
    let n = d.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension {
            context: "trust-region matrix",
            expected: n,
            found: m.nrows(),
        });
    }
    if !(radius >= 0.0) {
        return Err(Error::Parameter("trust-region radius must be >= 0".into()));
    }
    if radius == 0.0 || n == 0 {
        return Ok(TrustRegionSolution {
            value: 0.0,
            point: Vector::zeros(n),
            multiplier: 0.0,
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lam: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    let scale = lam.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if lam.iter().any(|l| *l < -1e-9 * scale.max(1.0)) {
        return Err(Error::Numerical(
            "trust-region matrix is not positive semidefinite".into(),
        ));
    }
    let dt = eig.eigenvectors.transpose() * d;
    let dnorm = d.norm();
    let zero_tol = 1e-12 * scale.max(1e-300);
    let null_tol = 1e-12 * dnorm.max(1e-300);

    let norm_at = |nu: f64| -> f64 {
        lam.iter()
            .zip(dt.iter())
            .map(|(l, c)| {
                let den = l.max(0.0) + nu;
                if den <= 0.0 {
                    if c.abs() <= null_tol {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (c / den).powi(2)
                }
            })
            .sum::<f64>()
            .sqrt()
    };

    let interior_ok = lam
        .iter()
        .zip(dt.iter())
        .all(|(l, c)| *l > zero_tol || c.abs() <= null_tol);
    let nu = if interior_ok && norm_at(0.0) <= radius {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = dnorm / radius;
        while norm_at(hi) > radius {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if norm_at(mid) > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };

    let coeffs = Vector::from_iterator(
        n,
        lam.iter().zip(dt.iter()).map(|(l, c)| {
            let den = l.max(0.0) + nu;
            if den <= zero_tol && c.abs() <= null_tol {
                0.0
            } else {
                -c / den
            }
        }),
    );
    let point = &eig.eigenvectors * &coeffs;
    let value = lam
        .iter()
        .zip(dt.iter())
        .zip(coeffs.iter())
        .map(|((l, c), u)| 0.5 * l.max(0.0) * u * u + c * u)
        .sum();
    Ok(TrustRegionSolution {
        value,
        point,
        multiplier: nu,
    })
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Columns whose
/// residual norm falls below `rel_tol` times their original norm are dropped.
pub fn orthonormal_basis<'a, I>(columns: I, rel_tol: f64) -> Vec<Vector>
where
    I: IntoIterator<Item = &'a Vector>,
{
    let mut basis: Vec<Vector> = Vec::new();
    for c in columns {
        let original = c.norm();
        if original == 0.0 || !original.is_finite() {
            continue;
        }
        let mut r = c.clone();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&r);
                r.axpy(-proj, q, 1.0);
            }
        }
        let rn = r.norm();
        if rn > rel_tol * original {
            basis.push(r / rn);
        }
    }
    basis
}

/// Norm of the component of `v` orthogonal to the span of an orthonormal basis.
pub fn residual_to_span(basis: &[Vector], v: &Vector) -> f64 {
    let mut r = v.clone();
    for _ in 0..2 {
        for q in basis {
            let proj = q.dot(&r);
            r.axpy(-proj, q, 1.0);
        }
    }
    r.norm()
}

/// Eight-point Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit() -> [(f64, f64); 8] {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let mut out = [(0.0, 0.0); 8];
    for k in 0..4 {
        out[2 * k] = (0.5 * (1.0 - X[k]), 0.5 * W[k]);
        out[2 * k + 1] = (0.5 * (1.0 + X[k]), 0.5 * W[k]);
    }
    out
}
