//! Seeded random instance generators with known solutions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{Matrix, Vector};
use crate::linalg::spectral_norm;
use crate::problems::saddle::{QuadraticSaddle, SaddleInstance};
use crate::problems::vip::{make_polymatrix_vip, VipInstance};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Random vector of Euclidean norm `radius`.
pub fn sphere_point(n: usize, radius: f64, rng: &mut ChaCha8Rng) -> Vector {
    let g = gaussian_vector(n, rng);
    let nrm = g.norm();
    if nrm == 0.0 {
        let mut e = Vector::zeros(n);
        e[0] = radius;
        return e;
    }
    g * (radius / nrm)
}

/// Random matrix with spectral norm exactly `norm`.
pub fn matrix_with_norm(rows: usize, cols: usize, norm: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let g = gaussian_matrix(rows, cols, rng);
    let s = spectral_norm(&g);
    if s == 0.0 || norm == 0.0 {
        return Matrix::zeros(rows, cols);
    }
    g * (norm / s)
}

/// Random symmetric matrix with eigenvalues drawn uniformly from `[lo, hi]`.
pub fn random_spd(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Matrix {
    use rand::Rng;
    let q = gaussian_matrix(n, n, rng).qr().q();
    let mut eig: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    if n > 0 {
        eig[0] = hi;
    }
    let d = Matrix::from_diagonal(&Vector::from_vec(eig));
    let h = &q * d * q.transpose();
    (&h + h.transpose()) * 0.5
}

/// Tridiagonal `(2, −1)` matrix scaled to spectral norm at most `norm`;
/// ill-conditioned, the standard hard quadratic.
pub fn tridiagonal_hessian(n: usize, norm: f64) -> Matrix {
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            0.5 * norm
        } else if i.abs_diff(j) == 1 {
            -0.25 * norm
        } else {
            0.0
        }
    })
}

/// Bilinear `⟨Ax − b, y⟩` with `‖A‖ = l_xy`, a saddle at distance exactly
/// `d_x` (and `d_y` when `n_y > n_x`) from the origin.
pub fn random_bilinear(nx: usize, ny: usize, l_xy: f64, d_x: f64, d_y: f64, seed: u64) -> Result<SaddleInstance> {
    if nx == 0 || ny == 0 {
        return Err(Error::Parameter("dimensions must be ≥ 1".into()));
    }
    let mut r = rng(seed);
    let a = matrix_with_norm(ny, nx, l_xy, &mut r);
    let x_star = sphere_point(nx, d_x, &mut r);
    // y* must satisfy Aᵀy* = 0: project a random vector onto null(Aᵀ).
    let y_star = if ny > nx && l_xy > 0.0 {
        let g = gaussian_vector(ny, &mut r);
        let svd = a.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors");
        let rank = svd.singular_values.iter().filter(|s| **s > 1e-12 * l_xy).count();
        let mut p = g.clone();
        for k in 0..rank {
            let col = u.column(k);
            p -= col * col.dot(&g);
        }
        let n = p.norm();
        if n > 0.0 {
            p * (d_y / n)
        } else {
            Vector::zeros(ny)
        }
    } else {
        Vector::zeros(ny)
    };
    let b = &a * &x_star;
    let q = QuadraticSaddle::new(Matrix::zeros(nx, nx), Vector::zeros(nx), a, Matrix::zeros(ny, ny), -b)?;
    let mut inst = SaddleInstance::from_quadratic("random-bilinear", q, d_x, d_y)?;
    inst.solution = Some((x_star, y_star));
    Ok(inst)
}

/// Quadratic saddle with ill-conditioned local terms `‖H_x‖ ≤ l_x`,
/// `‖H_y‖ ≤ l_y`, coupling `‖C‖ = l_xy`, and a known saddle at distances
/// `(d_x, d_y)` from the origin.
pub fn random_mixed(n: usize, l_x: f64, l_xy: f64, l_y: f64, d_x: f64, d_y: f64, seed: u64) -> Result<SaddleInstance> {
    if n == 0 {
        return Err(Error::Parameter("dimension must be ≥ 1".into()));
    }
    let mut r = rng(seed);
    let h_x = tridiagonal_hessian(n, l_x);
    let h_y = tridiagonal_hessian(n, l_y);
    let c = matrix_with_norm(n, n, l_xy, &mut r);
    let x_star = sphere_point(n, d_x, &mut r);
    let y_star = sphere_point(n, d_y, &mut r);
    let g_x = &h_x * &x_star + c.tr_mul(&y_star);
    let g_y = &h_y * &y_star - &c * &x_star;
    let q = QuadraticSaddle::new(h_x, g_x, c, h_y, g_y)?;
    let mut inst = SaddleInstance::from_quadratic("random-mixed", q, d_x, d_y)?;
    inst.solution = Some((x_star, y_star));
    Ok(inst)
}

/// Polymatrix VIP with `K` blocks, off-diagonal `‖A_ij‖ = l_off`, diagonal
/// PSD blocks of norm `l_diag`, and a known solution with `‖z*_i‖ = d_i`.
pub fn random_polymatrix(dims: &[usize], l_off: f64, l_diag: f64, radii: &[f64], seed: u64) -> Result<VipInstance> {
    let k = dims.len();
    if radii.len() != k {
        return Err(Error::Parameter("one radius per block required".into()));
    }
    let mut r = rng(seed);
    let n: usize = dims.iter().sum();
    let offs: Vec<usize> = dims
        .iter()
        .scan(0, |acc, d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let mut a = Matrix::zeros(n, n);
    for i in 0..k {
        if l_diag > 0.0 {
            let h = random_spd(dims[i], 0.0, l_diag, &mut r);
            a.view_mut((offs[i], offs[i]), (dims[i], dims[i])).copy_from(&h);
        }
        for j in (i + 1)..k {
            let aij = matrix_with_norm(dims[i], dims[j], l_off, &mut r);
            a.view_mut((offs[j], offs[i]), (dims[j], dims[i]))
                .copy_from(&(-aij.transpose()));
            a.view_mut((offs[i], offs[j]), (dims[i], dims[j])).copy_from(&aij);
        }
    }
    let mut z_star = Vector::zeros(n);
    for i in 0..k {
        z_star
            .rows_mut(offs[i], dims[i])
            .copy_from(&sphere_point(dims[i], radii[i], &mut r));
    }
    let b = &a * &z_star;
    let mut inst = make_polymatrix_vip(dims, &a, &b, radii)?;
    inst.solution = Some(z_star);
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_solution_is_stationary() {
        let inst = random_bilinear(4, 6, 2.0, 1.0, 0.5, 3).unwrap();
        let (x, y) = inst.solution.clone().unwrap();
        assert!(inst.grad_x(&x, &y).amax() < 1e-12);
        assert!(inst.grad_y(&x, &y).amax() < 1e-12);
        assert!((x.norm() - 1.0).abs() < 1e-12);
        assert!((y.norm() - 0.5).abs() < 1e-12);
        assert!((inst.declared.l_xy - 2.0).abs() < 1e-10);
    }

    #[test]
    fn mixed_solution_is_stationary() {
        let inst = random_mixed(5, 10.0, 1.0, 2.0, 1.0, 1.0, 9).unwrap();
        let (x, y) = inst.solution.clone().unwrap();
        assert!(inst.grad_x(&x, &y).amax() < 1e-12);
        assert!(inst.grad_y(&x, &y).amax() < 1e-12);
        assert!(inst.declared.l_x <= 10.0 + 1e-12);
    }

    #[test]
    fn polymatrix_solution_is_zero_of_operator() {
        let inst = random_polymatrix(&[2, 3, 1], 1.0, 0.5, &[1.0, 1.0, 2.0], 5).unwrap();
        let z = inst.solution.clone().unwrap();
        assert!(inst.operator(&z).amax() < 1e-12);
        assert!((inst.lbar(0, 2) - 1.0).abs() < 1e-10);
    }
}
