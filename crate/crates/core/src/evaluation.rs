//! Restricted duality gaps and closed-form complexity bounds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Matrix, ScaledMetric, Vector};
use crate::linalg::{gauss_legendre_unit, spectral_norm, trust_region_min};
use crate::problems::{CompositeTerm, DomainSpec, Operator, SaddleInstance, VipInstance};

/// Projected-gradient steps of the gap estimator.
pub const ESTIMATOR_STEPS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GapMethod {
    /// Exact trust-region maximization of a quadratic model.
    TrustRegion,
    /// Projected-gradient inner maximization.
    ProjectedGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapResult {
    pub value: f64,
    pub exact: bool,
    pub method: GapMethod,
}

/// Accuracy measure used to stop a solver.
pub trait GapOracle: Sync {
    fn gap(&self, candidate: &Vector) -> Result<GapResult>;
}

/// `ψ` as `½wᵀHw + bᵀw + k` when it is quadratic on its full domain.
fn psi_quadratic(term: &CompositeTerm, metric: &ScaledMetric) -> Option<(Matrix, Vector, f64)> {
    let n = metric.dim();
    match term {
        CompositeTerm::Zero => Some((Matrix::zeros(n, n), Vector::zeros(n), 0.0)),
        CompositeTerm::QuadraticReg { mu, center } => {
            let c = Vector::from_column_slice(center);
            let pc = metric.apply(&c);
            Some((
                Matrix::from_diagonal(&(metric.weights() * *mu)),
                -&pc * *mu,
                0.5 * mu * c.dot(&pc),
            ))
        }
        CompositeTerm::Sum { a, b } => {
            let (ha, ba, ka) = psi_quadratic(a, metric)?;
            let (hb, bb, kb) = psi_quadratic(b, metric)?;
            Some((ha + hb, ba + bb, ka + kb))
        }
        _ => None,
    }
}

/// `min ½uᵀHu + bᵀu + k` over `‖u − center‖_P ≤ radius`.
fn ball_quadratic_min(
    h: &Matrix,
    b: &Vector,
    k: f64,
    center: &Vector,
    metric: &ScaledMetric,
    radius: f64,
) -> Result<f64> {
    let hc = h * center;
    let base = 0.5 * center.dot(&hc) + b.dot(center) + k;
    let grad = hc + b;
    let m = metric.congruence(&(0.5 * (h + h.transpose())));
    let d = metric.apply_inv_sqrt(&grad);
    Ok(base + trust_region_min(&m, &d, radius)?.value)
}

/// `∇ψ` of the finite part of `ψ` (zero for indicators).
fn psi_smooth_grad(term: &CompositeTerm, metric: &ScaledMetric, w: &Vector) -> Vector {
    match term {
        CompositeTerm::QuadraticReg { mu, center } => {
            metric.apply(&(w - Vector::from_column_slice(center))) * *mu
        }
        CompositeTerm::Sum { a, b } => psi_smooth_grad(a, metric, w) + psi_smooth_grad(b, metric, w),
        _ => Vector::zeros(w.len()),
    }
}

fn psi_modulus(term: &CompositeTerm) -> f64 {
    match term {
        CompositeTerm::QuadraticReg { mu, .. } => *mu,
        CompositeTerm::Sum { a, b } => psi_modulus(a) + psi_modulus(b),
        _ => 0.0,
    }
}

/// Feasible set `B ∩ dom ψ` as a single composite term.
fn feasible_set(psi: &CompositeTerm, center: &Vector, radius: f64) -> CompositeTerm {
    let ball = CompositeTerm::ball(center, radius);
    if psi.has_full_domain() {
        ball
    } else {
        CompositeTerm::sum(Box::new(ball), Box::new(psi.clone()))
    }
}

/// `∫₀¹ ⟨g(a + s(b − a)), b − a⟩ ds` by Gauss-Legendre quadrature.
fn line_integral(a: &Vector, b: &Vector, g: &dyn Fn(&Vector) -> Vector) -> f64 {
    let d = b - a;
    gauss_legendre_unit()
        .iter()
        .map(|(s, w)| w * g(&(a + &d * *s)).dot(&d))
        .sum()
}

/// Maximizes `h(u)` over `set` starting from `start` by projected gradient
/// ascent in the metric; `grad` is `∇h` and `value_gain(u)` is `h(u) − h(start)`.
/// Returns the best gain seen.
fn projected_ascent(
    start: &Vector,
    set: &CompositeTerm,
    metric: &ScaledMetric,
    lipschitz: f64,
    grad: &dyn Fn(&Vector) -> Vector,
    value_gain: &dyn Fn(&Vector) -> f64,
) -> Result<f64> {
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1e12 };
    let mut u = set.project_domain(metric, start)?;
    let mut best = value_gain(&u);
    for _ in 0..ESTIMATOR_STEPS {
        let g = grad(&u);
        let next = set.project_domain(metric, &(&u + metric.apply_inv(&g) * step))?;
        let moved = metric.norm(&(&next - &u));
        u = next;
        let val = value_gain(&u);
        if val > best {
            best = val;
        }
        if moved <= 1e-15 * (1.0 + metric.norm(&u)) {
            break;
        }
    }
    Ok(best)
}

/// Restricted primal-dual gap of a saddle instance.
#[derive(Debug, Clone)]
pub struct SaddleGap {
    pub instance: SaddleInstance,
    pub domain: DomainSpec,
}

impl SaddleGap {
    pub fn new(instance: &SaddleInstance) -> Self {
        Self {
            domain: DomainSpec::from_saddle(instance),
            instance: instance.clone(),
        }
    }

    pub fn with_domain(instance: &SaddleInstance, domain: DomainSpec) -> Self {
        Self {
            instance: instance.clone(),
            domain,
        }
    }

    fn exact(&self, x: &Vector, y: &Vector) -> Result<Option<f64>> {
        let inst = &self.instance;
        let q = match inst.quadratic() {
            Some(q) => q,
            None => return Ok(None),
        };
        let (px, py) = match (
            psi_quadratic(&inst.psi_x, &inst.metric_x),
            psi_quadratic(&inst.psi_y, &inst.metric_y),
        ) {
            (Some(a), Some(b)) => (a, b),
            _ => return Ok(None),
        };
        let layout = inst.layout();
        let cx = layout.block_owned(&self.domain.center, 0);
        let cy = layout.block_owned(&self.domain.center, 1);
        // φ_x(u) = f(u, ȳ) + ψ_x(u)
        let hx = &q.h_x + &px.0;
        let bx = -&q.g_x + q.c.tr_mul(y) + &px.1;
        let kx = -0.5 * y.dot(&(&q.h_y * y)) + q.g_y.dot(y) + q.offset + px.2;
        let min_x = ball_quadratic_min(&hx, &bx, kx, &cx, &inst.metric_x, self.domain.radii[0])?;
        // φ_y(u) = −f(x̄, u) + ψ_y(u)
        let hy = &q.h_y + &py.0;
        let by = -&q.g_y - &q.c * x + &py.1;
        let ky = -(0.5 * x.dot(&(&q.h_x * x)) - q.g_x.dot(x) + q.offset) + py.2;
        let min_y = ball_quadratic_min(&hy, &by, ky, &cy, &inst.metric_y, self.domain.radii[1])?;
        let psi_x = inst.psi_x.value(&inst.metric_x, x);
        let psi_y = inst.psi_y.value(&inst.metric_y, y);
        Ok(Some(psi_x - min_y - min_x + psi_y))
    }

    fn estimate(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let inst = &self.instance;
        let layout = inst.layout();
        let d = inst.declared;
        let cx = layout.block_owned(&self.domain.center, 0);
        let cy = layout.block_owned(&self.domain.center, 1);
        let (mx, my) = (&inst.metric_x, &inst.metric_y);

        // max_u f(x̄, u) − ψ_y(u) − [f(x̄, ȳ) − ψ_y(ȳ)]
        let set_y = feasible_set(&inst.psi_y, &cy, self.domain.radii[1]);
        let psi_y_bar = inst.psi_y.value(my, y);
        let gain_y = projected_ascent(
            y,
            &set_y,
            my,
            d.l_y + psi_modulus(&inst.psi_y),
            &|u| inst.grad_y(x, u) - psi_smooth_grad(&inst.psi_y, my, u),
            &|u| line_integral(y, u, &|w| inst.grad_y(x, w)) - inst.psi_y.value(my, u) + psi_y_bar,
        )?;
        // max_u f(x̄, ȳ) + ψ_x(x̄) − f(u, ȳ) − ψ_x(u)
        let set_x = feasible_set(&inst.psi_x, &cx, self.domain.radii[0]);
        let psi_x_bar = inst.psi_x.value(mx, x);
        let gain_x = projected_ascent(
            x,
            &set_x,
            mx,
            d.l_x + psi_modulus(&inst.psi_x),
            &|u| -inst.grad_x(u, y) - psi_smooth_grad(&inst.psi_x, mx, u),
            &|u| -line_integral(x, u, &|w| inst.grad_x(w, y)) + psi_x_bar - inst.psi_x.value(mx, u),
        )?;
        Ok(gain_x + gain_y)
    }
}

impl GapOracle for SaddleGap {
    fn gap(&self, candidate: &Vector) -> Result<GapResult> {
        let layout = self.instance.layout();
        crate::error::check_dim("gap candidate", layout.total(), candidate.len())?;
        let x = layout.block_owned(candidate, 0);
        let y = layout.block_owned(candidate, 1);
        if let Some(v) = self.exact(&x, &y)? {
            return Ok(GapResult {
                value: v,
                exact: true,
                method: GapMethod::TrustRegion,
            });
        }
        Ok(GapResult {
            value: self.estimate(&x, &y)?,
            exact: false,
            method: GapMethod::ProjectedGradient,
        })
    }
}

/// Restricted VIP gap `sup_{z ∈ B∩Q} ⟨V(z), z̄ − z⟩ + ψ(z̄) − ψ(z)`.
#[derive(Debug, Clone)]
pub struct VipGap {
    pub instance: VipInstance,
    pub domain: DomainSpec,
}

impl VipGap {
    pub fn new(instance: &VipInstance) -> Self {
        Self {
            domain: DomainSpec::from_vip(instance),
            instance: instance.clone(),
        }
    }

    pub fn with_domain(instance: &VipInstance, domain: DomainSpec) -> Self {
        Self {
            instance: instance.clone(),
            domain,
        }
    }

    fn exact(&self, z: &Vector) -> Result<Option<f64>> {
        let inst = &self.instance;
        let (m, q) = match &inst.operator {
            Operator::Affine { m, q } => (m, q),
            Operator::Custom(_) => return Ok(None),
        };
        let layout = &inst.layout;
        let s = 0.5 * (m + m.transpose());
        let k = layout.num_blocks();
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let blk = s.view((layout.offset(i), layout.offset(j)), (layout.dim(i), layout.dim(j)));
                if blk.amax() > 1e-12 * (1.0 + m.amax()) {
                    return Ok(None);
                }
            }
        }
        let quads: Option<Vec<_>> = (0..k)
            .map(|i| psi_quadratic(&inst.psis[i], &inst.metrics[i]))
            .collect();
        let quads = match quads {
            Some(v) => v,
            None => return Ok(None),
        };
        let h = m.tr_mul(z) + q;
        let mut total = -q.dot(z) + inst.psi_value(z);
        for (i, (hp, bp, kp)) in quads.into_iter().enumerate() {
            let (o, d) = (layout.offset(i), layout.dim(i));
            let s_ii = s.view((o, o), (d, d)).into_owned();
            let hess = s_ii * 2.0 + hp;
            let lin = -h.rows(o, d).into_owned() + bp;
            let center = layout.block_owned(&self.domain.center, i);
            total -= ball_quadratic_min(&hess, &lin, kp, &center, &inst.metrics[i], self.domain.radii[i])?;
        }
        Ok(Some(total))
    }

    fn jacobian_t(&self, z: &Vector, w: &Vector) -> Vector {
        match &self.instance.operator {
            Operator::Affine { m, .. } => m.tr_mul(w),
            Operator::Custom(_) => {
                let n = z.len();
                let base = self.instance.operator(z);
                let h = 1e-6 * (1.0 + z.amax());
                let mut out = Vector::zeros(n);
                for c in 0..n {
                    let mut zp = z.clone();
                    zp[c] += h;
                    let col = (self.instance.operator(&zp) - &base) / h;
                    out[c] = col.dot(w);
                }
                out
            }
        }
    }

    fn estimate(&self, zbar: &Vector) -> Result<f64> {
        let inst = &self.instance;
        let layout = &inst.layout;
        let k = layout.num_blocks();
        let sets: Vec<CompositeTerm> = (0..k)
            .map(|i| {
                feasible_set(
                    &inst.psis[i],
                    &layout.block_owned(&self.domain.center, i),
                    self.domain.radii[i],
                )
            })
            .collect();
        let lv = match &inst.operator {
            Operator::Affine { m, .. } => {
                let w: Vec<f64> = inst.metrics.iter().flat_map(|p| p.weights().iter().cloned()).collect();
                let s = Vector::from_vec(w).map(|p| 1.0 / p.sqrt());
                spectral_norm(&Matrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)] * s[r] * s[c]))
            }
            Operator::Custom(_) => (0..k)
                .map(|i| (0..k).map(|j| inst.lbar(i, j)).sum::<f64>())
                .fold(0.0, f64::max),
        };
        let lmod = (0..k).map(|i| psi_modulus(&inst.psis[i])).fold(0.0, f64::max);
        let lip = 2.0 * lv + lmod;
        let step = if lip > 0.0 { 1.0 / lip } else { 1e12 };
        let psi_bar = inst.psi_value(zbar);
        let objective = |z: &Vector| inst.operator(z).dot(&(zbar - z)) + psi_bar - inst.psi_value(z);
        let project = |z: &Vector| -> Result<Vector> {
            let mut out = Vector::zeros(z.len());
            for i in 0..k {
                let b = sets[i].project_domain(&inst.metrics[i], &layout.block_owned(z, i))?;
                layout.set_block(&mut out, i, &b);
            }
            Ok(out)
        };
        let mut z = project(zbar)?;
        let mut best = objective(&z);
        for _ in 0..ESTIMATOR_STEPS {
            let mut g = self.jacobian_t(&z, &(zbar - &z)) - inst.operator(&z);
            for i in 0..k {
                let (o, d) = (layout.offset(i), layout.dim(i));
                let zi = layout.block_owned(&z, i);
                let gi = inst.metrics[i].apply_inv(&(g.rows(o, d) - psi_smooth_grad(&inst.psis[i], &inst.metrics[i], &zi)));
                g.rows_mut(o, d).copy_from(&gi);
            }
            let next = project(&(&z + g * step))?;
            let moved = (&next - &z).norm();
            z = next;
            best = best.max(objective(&z));
            if moved <= 1e-15 * (1.0 + z.norm()) {
                break;
            }
        }
        Ok(best)
    }
}

impl GapOracle for VipGap {
    fn gap(&self, candidate: &Vector) -> Result<GapResult> {
        crate::error::check_dim("gap candidate", self.instance.layout.total(), candidate.len())?;
        if let Some(v) = self.exact(candidate)? {
            return Ok(GapResult {
                value: v,
                exact: true,
                method: GapMethod::TrustRegion,
            });
        }
        Ok(GapResult {
            value: self.estimate(candidate)?,
            exact: false,
            method: GapMethod::ProjectedGradient,
        })
    }
}

/// Gap of a saddle instance at `candidate` over the default balls.
pub fn restricted_gap(instance: &SaddleInstance, candidate: &Vector, domain: &DomainSpec) -> Result<GapResult> {
    SaddleGap::with_domain(instance, domain.clone()).gap(candidate)
}

/// VIP gap at `candidate`.
pub fn restricted_vip_gap(instance: &VipInstance, candidate: &Vector, domain: &DomainSpec) -> Result<GapResult> {
    VipGap::with_domain(instance, domain.clone()).gap(candidate)
}

/// `θ = D_x D̂_y/(D̂_x D_y) + D_y D̂_x/(D̂_y D_x)`.
pub fn theta_factor(d_x: f64, d_y: f64, d_hat_x: f64, d_hat_y: f64) -> Result<f64> {
    if [d_x, d_y, d_hat_x, d_hat_y].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Parameter("θ needs positive distances".into()));
    }
    Ok(d_x * d_hat_y / (d_hat_x * d_y) + d_y * d_hat_x / (d_hat_y * d_x))
}

/// Problem constants entering the saddle bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub l_x: f64,
    pub l_xy: f64,
    pub l_y: f64,
    pub d_x: f64,
    pub d_y: f64,
    pub d_hat_x: f64,
    pub d_hat_y: f64,
    pub epsilon: f64,
    pub c_x: f64,
    pub c_y: f64,
}

impl BoundParams {
    /// Exact distance estimates and unit costs.
    pub fn new(l_x: f64, l_xy: f64, l_y: f64, d_x: f64, d_y: f64, epsilon: f64) -> Self {
        Self {
            l_x,
            l_xy,
            l_y,
            d_x,
            d_y,
            d_hat_x: d_x,
            d_hat_y: d_y,
            epsilon,
            c_x: 1.0,
            c_y: 1.0,
        }
    }

    pub fn from_instance(inst: &SaddleInstance, epsilon: f64) -> Self {
        let d = inst.declared;
        Self {
            c_x: inst.costs[0],
            c_y: inst.costs[1],
            ..Self::new(d.l_x, d.l_xy, d.l_y, d.d_x, d.d_y, epsilon)
        }
    }

    pub fn with_estimates(mut self, d_hat_x: f64, d_hat_y: f64) -> Self {
        self.d_hat_x = d_hat_x;
        self.d_hat_y = d_hat_y;
        self
    }

    pub fn with_costs(mut self, c_x: f64, c_y: f64) -> Self {
        self.c_x = c_x;
        self.c_y = c_y;
        self
    }
}

/// Upper and lower complexity bounds for a saddle instance. Catalyst
/// entries are leading expressions without constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    pub theta: f64,
    pub dmsp_comm: f64,
    pub dmsp_oracle: f64,
    /// Outer iterations `T` of the decoupled method.
    pub dmsp_iterations: u64,
    pub dmsp_queries_x: f64,
    pub dmsp_queries_y: f64,
    pub dmvip_comm: f64,
    pub eg_comm: f64,
    pub eg_oracle: f64,
    pub cat_eg_comm: f64,
    pub catcat_comm: f64,
    pub catcat_oracle: f64,
    pub lower_comm: f64,
    pub lower_oracle: f64,
}

/// Weights of the decoupled saddle method: `α_x = L_xy D̂_y/D̂_x`,
/// `α_y = L_xy D̂_x/D̂_y`, or the decoupled fallback when `L_xy = 0`.
pub fn dmsp_weights(p: &BoundParams) -> [f64; 2] {
    if p.l_xy > 0.0 {
        [p.l_xy * p.d_hat_y / p.d_hat_x, p.l_xy * p.d_hat_x / p.d_hat_y]
    } else {
        let lambda = 2.0;
        [
            p.epsilon / (2.0 * lambda * p.d_hat_x * p.d_hat_x),
            p.epsilon / (2.0 * lambda * p.d_hat_y * p.d_hat_y),
        ]
    }
}

pub fn complexity_bounds(p: &BoundParams) -> Result<BoundsReport> {
    if !(p.epsilon.is_finite() && p.epsilon > 0.0) {
        return Err(Error::Parameter("ε must be > 0".into()));
    }
    let eps = p.epsilon;
    let theta = theta_factor(p.d_x, p.d_y, p.d_hat_x, p.d_hat_y)?;
    let cross = p.l_xy * p.d_x * p.d_y / eps;
    let diag_x = p.l_x * p.d_x * p.d_x / eps;
    let diag_y = p.l_y * p.d_y * p.d_y / eps;
    let lambda = 2.0;
    let alpha = dmsp_weights(p);
    let t = crate::dm::outer_iteration_bound(&alpha, &[p.d_x, p.d_y], lambda, eps);
    let per_agent = |l: f64, a: f64| t as f64 * (1.0 + 34.0 * (9.0 * l / (2.0 * a * lambda)).sqrt());
    let dmsp_oracle = (p.c_x + p.c_y) * theta * cross
        + 102.0 * cross.sqrt() * (p.c_x * diag_x.sqrt() + p.c_y * diag_y.sqrt());
    let eg_comm = theta * cross + diag_x + diag_y;
    let log = (1.0 / eps).ln().max(1.0);
    let l_max = p.l_x.max(p.l_y).max(p.l_xy);
    let hat_cross = p.d_hat_x * p.d_hat_y / eps;
    let hat_x = (p.l_x * p.d_hat_x * p.d_hat_x / eps).sqrt();
    let hat_y = (p.l_y * p.d_hat_y * p.d_hat_y / eps).sqrt();
    let lower_comm = ((2.0 / 3.0) * cross - 2.0).max(0.0);
    let lower_oracle = ((p.c_x + p.c_y) / 9.0 * cross
        + p.c_x / 3.0 * (3.0 * diag_x / 32.0).sqrt()
        + p.c_y / 3.0 * (3.0 * diag_y / 32.0).sqrt()
        - 2.0 * (p.c_x + p.c_y) / 3.0)
        .max(0.0);
    Ok(BoundsReport {
        theta,
        dmsp_comm: 2.0 + 2.0 * theta * cross,
        dmsp_oracle,
        dmsp_iterations: t,
        dmsp_queries_x: per_agent(p.l_x, alpha[0]),
        dmsp_queries_y: per_agent(p.l_y, alpha[1]),
        dmvip_comm: 2.0 + 4.0 * cross,
        eg_comm,
        eg_oracle: (p.c_x + p.c_y) * eg_comm,
        cat_eg_comm: (l_max * hat_cross + hat_x + hat_y) * log * log,
        catcat_comm: p.l_xy * hat_cross * log.powi(3),
        catcat_oracle: (p.c_x + p.c_y) * ((l_max * p.l_xy).sqrt() * hat_cross + hat_x + hat_y) * log.powi(4),
        lower_comm,
        lower_oracle,
    })
}

/// Bounds for a block VIP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VipBoundsReport {
    /// `2 + Σ_{i≠j} 2 L̄_ij D_i D_j / ε`.
    pub dmvip_comm: f64,
    /// Weighted oracle bound; present only when every block uses the
    /// accelerated inner solver.
    pub dmvip_oracle: Option<f64>,
    pub dmvip_iterations: u64,
    pub dmvip_queries: Vec<f64>,
    /// Order-only extragradient rounds `Σ (A_i + B_i)/ε`.
    pub eg_comm: f64,
    /// Cross-coupled conditioning `A_i = D_i Σ_{j≠i} L̄_ij D_j`.
    pub cross: Vec<f64>,
    /// Diagonal conditioning `B_i = L̄_ii D_i²`.
    pub diagonal: Vec<f64>,
}

pub fn vip_bounds(inst: &VipInstance, epsilon: f64) -> Result<VipBoundsReport> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Parameter("ε must be > 0".into()));
    }
    let cross = inst.cross_conditioning();
    let diagonal = inst.diagonal_conditioning();
    let k = inst.num_blocks();
    let radii = &inst.radii;
    let lambda_for = |alpha: &[f64]| {
        let lc = crate::dm::coupled_conditioning(&inst.lipschitz, radii, alpha);
        if lc > 0.0 {
            2.0 * lc
        } else {
            2.0
        }
    };
    let alpha = crate::dm::decoupled_weights(&inst.lipschitz, radii, epsilon, 2.0);
    let lambda = lambda_for(&alpha);
    let t = crate::dm::outer_iteration_bound(&alpha, radii, lambda, epsilon);
    let queries: Vec<f64> = (0..k)
        .map(|i| {
            let l = inst.lipschitz[(i, i)];
            t as f64 * (1.0 + 34.0 * (9.0 * l / (2.0 * alpha[i] * lambda)).sqrt())
        })
        .collect();
    let dmvip_oracle = inst
        .gradient_blocks
        .iter()
        .all(|g| *g)
        .then(|| queries.iter().zip(&inst.costs).map(|(q, c)| q * c).sum());
    Ok(VipBoundsReport {
        dmvip_comm: 2.0 + 2.0 * cross.iter().sum::<f64>() / epsilon,
        dmvip_oracle,
        dmvip_iterations: t,
        dmvip_queries: queries,
        eg_comm: (cross.iter().sum::<f64>() + diagonal.iter().sum::<f64>()) / epsilon,
        cross,
        diagonal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_bilinear_sp, make_quadratic_sp, Side};

    #[test]
    fn bilinear_closed_form_gap() {
        let inst = make_bilinear_sp(&Matrix::from_element(1, 1, 1.0), &Vector::zeros(1), 1.0, 1.0).unwrap();
        let g = SaddleGap::new(&inst).gap(&Vector::from_vec(vec![0.5, 0.3])).unwrap();
        assert!(g.exact);
        assert!((g.value - 0.8).abs() < 1e-12);
    }

    #[test]
    fn quadratic_subclass_gap() {
        let inst = make_quadratic_sp(
            &Matrix::from_element(1, 1, 1.0),
            &Vector::from_element(1, 1.0),
            Side::X,
            1.0,
            1.0,
        )
        .unwrap();
        let z = Vector::zeros(inst.layout().total());
        let g = SaddleGap::new(&inst).gap(&z).unwrap();
        assert!((g.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gap_zero_at_saddle() {
        let inst = make_bilinear_sp(&Matrix::from_element(1, 1, 2.0), &Vector::zeros(1), 1.0, 1.0).unwrap();
        let g = SaddleGap::new(&inst).gap(&Vector::zeros(2)).unwrap();
        assert!(g.value.abs() < 1e-9);
    }

    #[test]
    fn theta_examples() {
        assert!((theta_factor(1.0, 2.0, 3.0, 6.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((theta_factor(1.0, 1.0, 2.0, 1.0).unwrap() - 2.5).abs() < 1e-15);
        assert!(theta_factor(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn bound_examples() {
        let r = complexity_bounds(&BoundParams::new(0.0, 1.0, 0.0, 1.0, 1.0, 0.1)).unwrap();
        assert!((r.dmsp_comm - 42.0).abs() < 1e-9);
        assert!((r.lower_comm - (2.0 / 0.3 - 2.0)).abs() < 1e-9);
        let r = complexity_bounds(&BoundParams::new(10.0, 1.0, 0.0, 1.0, 1.0, 0.1)).unwrap();
        assert!((r.eg_comm - 120.0).abs() < 1e-9);
        assert!((r.eg_oracle - 240.0).abs() < 1e-9);
    }

    #[test]
    fn estimator_matches_closed_form() {
        let inst = make_bilinear_sp(
            &Matrix::from_row_slice(2, 2, &[1.0, 0.5, -0.3, 0.8]),
            &Vector::from_vec(vec![0.2, -0.1]),
            1.0,
            1.0,
        )
        .unwrap();
        let sg = SaddleGap::new(&inst);
        let z = Vector::from_vec(vec![0.3, -0.2, 0.1, 0.4]);
        let exact = sg.gap(&z).unwrap().value;
        let est = sg.estimate(&z.rows(0, 2).into_owned(), &z.rows(2, 2).into_owned()).unwrap();
        assert!((exact - est).abs() <= 1e-4 * exact.abs());
    }
}
