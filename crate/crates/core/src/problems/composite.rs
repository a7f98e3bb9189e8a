//! Simple composite terms `ψ` with closed-form proximal maps in a diagonal
//! metric.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{ScaledMetric, Vector};

/// Tolerance used for domain membership checks.
pub const DOMAIN_TOL: f64 = 1e-10;

/// A proper closed convex function with an easy proximal map.
///
/// `Ball` is the indicator of `{w : ‖w - center‖_P ≤ radius}` measured in
/// the block metric, `Box` the indicator of a coordinate box, and
/// `QuadraticReg` the function `(μ/2)‖w - center‖²_P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[derive(Default)]
pub enum CompositeTerm {
    #[default]
    Zero,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    QuadraticReg { mu: f64, center: Vec<f64> },
    Sum { a: Box<CompositeTerm>, b: Box<CompositeTerm> },
}


fn vec_of(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

impl CompositeTerm {
    pub fn sum(a: Box<CompositeTerm>, b: Box<CompositeTerm>) -> Self {
        CompositeTerm::Sum { a, b }
    }

    pub fn ball(center: &Vector, radius: f64) -> Self {
        CompositeTerm::Ball {
            center: center.iter().cloned().collect(),
            radius,
        }
    }

    pub fn quadratic(mu: f64, center: &Vector) -> Self {
        CompositeTerm::QuadraticReg {
            mu,
            center: center.iter().cloned().collect(),
        }
    }

    /// Validates dimensions and parameters against a block metric.
    pub fn validate(&self, metric: &ScaledMetric) -> Result<()> {
        let n = metric.dim();
        match self {
            CompositeTerm::Zero => Ok(()),
            CompositeTerm::Ball { center, radius } => {
                check_dim("ball center", n, center.len())?;
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::Parameter(format!("ball radius {radius} invalid")));
                }
                Ok(())
            }
            CompositeTerm::Box { lower, upper } => {
                check_dim("box lower", n, lower.len())?;
                check_dim("box upper", n, upper.len())?;
                if lower.iter().zip(upper).any(|(l, u)| l > u) {
                    return Err(Error::Parameter("box lower bound exceeds upper".into()));
                }
                Ok(())
            }
            CompositeTerm::QuadraticReg { mu, center } => {
                check_dim("quadratic center", n, center.len())?;
                if !(mu.is_finite() && *mu >= 0.0) {
                    return Err(Error::Parameter(format!("quadratic weight {mu} invalid")));
                }
                Ok(())
            }
            CompositeTerm::Sum { a, b } => {
                a.validate(metric)?;
                b.validate(metric)
            }
        }
    }

    /// True when the domain is the whole space.
    pub fn has_full_domain(&self) -> bool {
        match self {
            CompositeTerm::Zero | CompositeTerm::QuadraticReg { .. } => true,
            CompositeTerm::Ball { .. } | CompositeTerm::Box { .. } => false,
            CompositeTerm::Sum { a, b } => a.has_full_domain() && b.has_full_domain(),
        }
    }

    /// True when `ψ` vanishes on its domain.
    pub fn is_indicator_like(&self) -> bool {
        match self {
            CompositeTerm::Zero | CompositeTerm::Ball { .. } | CompositeTerm::Box { .. } => true,
            CompositeTerm::QuadraticReg { mu, .. } => *mu == 0.0,
            CompositeTerm::Sum { a, b } => a.is_indicator_like() && b.is_indicator_like(),
        }
    }

    /// Returns `ψ + (μ/2)‖· - center‖²_P` up to an additive constant.
    pub fn add_quadratic(&self, mu: f64, center: &Vector) -> CompositeTerm {
        match self {
            CompositeTerm::Zero => CompositeTerm::quadratic(mu, center),
            CompositeTerm::QuadraticReg { mu: m0, center: c0 } => {
                let total = m0 + mu;
                if total == 0.0 {
                    return CompositeTerm::quadratic(0.0, center);
                }
                let c = (vec_of(c0) * *m0 + center * mu) / total;
                CompositeTerm::quadratic(total, &c)
            }
            CompositeTerm::Sum { a, b } => match (a.as_ref(), b.as_ref()) {
                (q @ CompositeTerm::QuadraticReg { .. }, other)
                | (other, q @ CompositeTerm::QuadraticReg { .. }) => CompositeTerm::sum(
                    Box::new(q.add_quadratic(mu, center)),
                    Box::new(other.clone()),
                ),
                _ => CompositeTerm::sum(
                    Box::new(CompositeTerm::quadratic(mu, center)),
                    Box::new(self.clone()),
                ),
            },
            other => CompositeTerm::sum(
                Box::new(CompositeTerm::quadratic(mu, center)),
                Box::new(other.clone()),
            ),
        }
    }

    /// Splits a sum into its quadratic part and the remaining term.
    fn split_quadratic(&self) -> Option<(f64, Vector, &CompositeTerm)> {
        if let CompositeTerm::Sum { a, b } = self {
            match (a.as_ref(), b.as_ref()) {
                (CompositeTerm::QuadraticReg { mu, center }, other)
                | (other, CompositeTerm::QuadraticReg { mu, center }) => {
                    return Some((*mu, vec_of(center), other));
                }
                _ => {}
            }
        }
        None
    }

    /// Value of `ψ(w)`; `+∞` outside the domain.
    pub fn value(&self, metric: &ScaledMetric, w: &Vector) -> f64 {
        match self {
            CompositeTerm::Zero => 0.0,
            CompositeTerm::Ball { center, radius } => {
                let d = metric.norm(&(w - vec_of(center)));
                if d <= radius * (1.0 + DOMAIN_TOL) + DOMAIN_TOL {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            CompositeTerm::Box { lower, upper } => {
                let inside = w
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(x, (l, u))| *x >= l - DOMAIN_TOL && *x <= u + DOMAIN_TOL);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            CompositeTerm::QuadraticReg { mu, center } => {
                0.5 * mu * metric.norm_sq(&(w - vec_of(center)))
            }
            CompositeTerm::Sum { a, b } => a.value(metric, w) + b.value(metric, w),
        }
    }

    /// `argmin_w ψ(w) + (1/(2 step))‖w - v‖²_P`.
    pub fn prox(&self, metric: &ScaledMetric, v: &Vector, step: f64) -> Result<Vector> {
        check_dim("prox input", metric.dim(), v.len())?;
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Parameter(format!("prox step {step} must be positive")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("prox input is not finite".into()));
        }
        match self {
            CompositeTerm::Zero => Ok(v.clone()),
            CompositeTerm::Ball { .. } | CompositeTerm::Box { .. } => self.project_domain(metric, v),
            CompositeTerm::QuadraticReg { mu, center } => {
                Ok((v + vec_of(center) * (step * mu)) / (1.0 + step * mu))
            }
            CompositeTerm::Sum { a, b } => {
                if let Some((mu, c, other)) = self.split_quadratic() {
                    let shifted = (v + c * (step * mu)) / (1.0 + step * mu);
                    other.prox(metric, &shifted, step / (1.0 + step * mu))
                } else if a.has_full_domain() && a.is_indicator_like() {
                    b.prox(metric, v, step)
                } else if b.has_full_domain() && b.is_indicator_like() {
                    a.prox(metric, v, step)
                } else if a.is_indicator_like() && b.is_indicator_like() {
                    self.project_domain(metric, v)
                } else {
                    Err(Error::Parameter(
                        "prox of a sum needs a quadratic or indicator summand".into(),
                    ))
                }
            }
        }
    }

    /// `argmin_w ⟨g, w⟩ + ψ(w)`, when it exists in closed form.
    pub fn min_linear(&self, metric: &ScaledMetric, g: &Vector) -> Result<Option<Vector>> {
        check_dim("linear term", metric.dim(), g.len())?;
        match self {
            CompositeTerm::QuadraticReg { mu, center } if *mu > 0.0 => {
                Ok(Some(vec_of(center) - metric.apply_inv(g) / *mu))
            }
            CompositeTerm::Ball { center, radius } => {
                let n = metric.dual_norm(g);
                if n == 0.0 {
                    return Ok(Some(vec_of(center)));
                }
                Ok(Some(vec_of(center) - metric.apply_inv(g) * (radius / n)))
            }
            CompositeTerm::Box { lower, upper } => Ok(Some(Vector::from_iterator(
                g.len(),
                g.iter().zip(lower.iter().zip(upper)).map(|(gi, (l, u))| {
                    if *gi > 0.0 {
                        *l
                    } else if *gi < 0.0 {
                        *u
                    } else {
                        0.5 * (l + u)
                    }
                }),
            ))),
            CompositeTerm::Sum { .. } => match self.split_quadratic() {
                Some((mu, c, other)) if mu > 0.0 => {
                    let p = c - metric.apply_inv(g) / mu;
                    Ok(Some(other.prox(metric, &p, 1.0 / mu)?))
                }
                _ => Ok(None),
            },
            _ => Ok(None),
        }
    }

    /// Projection onto `dom ψ` in the metric `P`.
    pub fn project_domain(&self, metric: &ScaledMetric, v: &Vector) -> Result<Vector> {
        check_dim("projection input", metric.dim(), v.len())?;
        match self {
            CompositeTerm::Zero | CompositeTerm::QuadraticReg { .. } => Ok(v.clone()),
            CompositeTerm::Ball { center, radius } => {
                let c = vec_of(center);
                let d = v - &c;
                let n = metric.norm(&d);
                if !n.is_finite() {
                    return Err(Error::Numerical("projection input is not finite".into()));
                }
                if n <= *radius {
                    Ok(v.clone())
                } else {
                    Ok(c + d * (radius / n))
                }
            }
            CompositeTerm::Box { lower, upper } => Ok(Vector::from_iterator(
                v.len(),
                v.iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(x, (l, u))| x.clamp(*l, *u)),
            )),
            CompositeTerm::Sum { a, b } => {
                if a.has_full_domain() {
                    return b.project_domain(metric, v);
                }
                if b.has_full_domain() {
                    return a.project_domain(metric, v);
                }
                // Dykstra's alternating projections onto the intersection.
                let mut x = v.clone();
                let mut p = Vector::zeros(v.len());
                let mut q = Vector::zeros(v.len());
                for _ in 0..500 {
                    let y = a.project_domain(metric, &(&x + &p))?;
                    p = &x + &p - &y;
                    let x_new = b.project_domain(metric, &(&y + &q))?;
                    q = &y + &q - &x_new;
                    let moved = metric.norm(&(&x_new - &x));
                    x = x_new;
                    if moved <= 1e-14 * (1.0 + metric.norm(&x)) {
                        break;
                    }
                }
                Ok(x)
            }
        }
    }

    /// Whether `g` (a covector) lies in `∂ψ(w)` up to `tol`.
    pub fn is_subgradient(&self, metric: &ScaledMetric, w: &Vector, g: &Vector, tol: f64) -> bool {
        if w.len() != metric.dim() || g.len() != metric.dim() {
            return false;
        }
        let scale = 1.0 + g.amax();
        match self {
            CompositeTerm::Zero => g.amax() <= tol * scale,
            CompositeTerm::QuadraticReg { mu, center } => {
                let expect = metric.apply(&(w - vec_of(center))) * *mu;
                (g - expect).amax() <= tol * scale
            }
            CompositeTerm::Ball { center, radius } => {
                let d = w - vec_of(center);
                let n = metric.norm(&d);
                if n > radius * (1.0 + tol) + tol {
                    return false;
                }
                if n < radius * (1.0 - tol) - tol || n == 0.0 {
                    return g.amax() <= tol * scale;
                }
                // normal cone at the boundary: g = κ P d with κ ≥ 0
                let pd = metric.apply(&d);
                let kappa = g.dot(&d) / pd.dot(&d);
                kappa >= -tol && (g - pd * kappa).amax() <= tol * scale
            }
            CompositeTerm::Box { lower, upper } => {
                w.iter()
                    .zip(g.iter())
                    .zip(lower.iter().zip(upper))
                    .all(|((x, gi), (l, u))| {
                        let t = tol * scale;
                        if *x < l - tol || *x > u + tol {
                            return false;
                        }
                        let at_l = (x - l).abs() <= tol;
                        let at_u = (x - u).abs() <= tol;
                        match (at_l, at_u) {
                            (true, true) => true,
                            (true, false) => *gi <= t,
                            (false, true) => *gi >= -t,
                            (false, false) => gi.abs() <= t,
                        }
                    })
            }
            CompositeTerm::Sum { a, b } => {
                if let Some((mu, c, other)) = self.split_quadratic() {
                    let rest = g - metric.apply(&(w - c)) * mu;
                    other.is_subgradient(metric, w, &rest, tol)
                } else if a.has_full_domain() && a.is_indicator_like() {
                    b.is_subgradient(metric, w, g, tol)
                } else if b.has_full_domain() && b.is_indicator_like() {
                    a.is_subgradient(metric, w, g, tol)
                } else {
                    false
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ball_prox_is_radial_projection() {
        let m = ScaledMetric::identity(2);
        let t = CompositeTerm::ball(&Vector::zeros(2), 1.0);
        let p = t.prox(&m, &Vector::from_vec(vec![3.0, 4.0]), 7.0).unwrap();
        assert_relative_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn ball_radius_zero_gives_center() {
        let m = ScaledMetric::identity(2);
        let c = Vector::from_vec(vec![1.0, -1.0]);
        let t = CompositeTerm::ball(&c, 0.0);
        assert_eq!(t.prox(&m, &Vector::from_vec(vec![5.0, 5.0]), 1.0).unwrap(), c);
    }

    #[test]
    fn nonfinite_input_is_numerical_error() {
        let m = ScaledMetric::identity(1);
        let t = CompositeTerm::ball(&Vector::zeros(1), 1.0);
        assert!(matches!(
            t.prox(&m, &Vector::from_vec(vec![f64::NAN]), 1.0),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn quadratic_prox_closed_form() {
        let m = ScaledMetric::new(vec![2.0]).unwrap();
        let t = CompositeTerm::quadratic(3.0, &Vector::from_vec(vec![1.0]));
        // argmin 1.5 * 2 (w-1)^2 + (1/(2*0.5)) * 2 (w-4)^2 = 3 (w-1)^2 + 2 (w-4)^2
        let p = t.prox(&m, &Vector::from_vec(vec![4.0]), 0.5).unwrap();
        assert_relative_eq!(p[0], (3.0 + 8.0) / 5.0, epsilon = 1e-14);
    }

    #[test]
    fn sum_of_quadratic_and_box() {
        let m = ScaledMetric::identity(1);
        let t = CompositeTerm::Box {
            lower: vec![-1.0],
            upper: vec![1.0],
        }
        .add_quadratic(1.0, &Vector::from_vec(vec![0.0]));
        let p = t.prox(&m, &Vector::from_vec(vec![10.0]), 1.0).unwrap();
        assert_relative_eq!(p[0], 1.0);
        let p = t.prox(&m, &Vector::from_vec(vec![1.0]), 1.0).unwrap();
        assert_relative_eq!(p[0], 0.5);
    }

    #[test]
    fn prox_output_subgradient_membership() {
        let m = ScaledMetric::new(vec![1.0, 3.0]).unwrap();
        let terms = vec![
            CompositeTerm::Zero,
            CompositeTerm::ball(&Vector::from_vec(vec![0.5, 0.0]), 0.7),
            CompositeTerm::Box {
                lower: vec![-0.2, -1.0],
                upper: vec![0.3, 0.1],
            },
            CompositeTerm::quadratic(2.0, &Vector::from_vec(vec![1.0, 1.0])),
            CompositeTerm::ball(&Vector::zeros(2), 0.5).add_quadratic(4.0, &Vector::zeros(2)),
        ];
        let v = Vector::from_vec(vec![2.0, -1.5]);
        let s = 0.7;
        for t in terms {
            let w = t.prox(&m, &v, s).unwrap();
            let g = m.apply(&(&v - &w)) / s;
            assert!(t.is_subgradient(&m, &w, &g, 1e-9), "{t:?}");
        }
    }
}
