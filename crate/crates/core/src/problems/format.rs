//! TOML instance files.
//!
//! Every instance is a flat table with a `kind` key. Matrices are
//! row-major lists of rows, vectors are plain lists.
//!
//! ```toml
//! kind = "bilinear"
//! a = [[1.0, 0.0], [0.0, 2.0]]
//! b = [1.0, 0.0]
//! d = [1.0, 1.0]
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Matrix, Vector};
use crate::hard_instances::{make_subclass_instance, SubclassKind};
use crate::problems::composite::CompositeTerm;
use crate::problems::generators::{random_bilinear, random_mixed, random_polymatrix};
use crate::problems::saddle::{
    make_bilinear_sp, make_quadratic_sp, make_weakly_coupled_scsc, QuadraticSaddle, SaddleInstance, SaddleModel,
    Side,
};
use crate::problems::vip::{make_polymatrix_vip, Operator, VipInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Saddle,
    Bilinear,
    QuadraticX,
    QuadraticY,
    Polymatrix,
    WeaklyCoupled,
    RandomBilinear,
    RandomMixed,
    RandomPolymatrix,
    Hard,
}

/// On-disk description of an instance. Unused keys must be absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub kind: Option<InstanceKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_x: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_y: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    /// Distance bounds, one per agent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    /// Declared Lipschitz constants: `[L_x, L_xy, L_y]` for saddles, the
    /// row-major `K × K` table for VIPs. Must not undercut the computed ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<CompositeTerm>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_xy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_off: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_diag: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    /// `"x"`, `"y"` or `"xy"` for `kind = "hard"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subclass: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

/// A built instance.
#[derive(Debug, Clone)]
pub enum Instance {
    Saddle(SaddleInstance),
    Vip(VipInstance),
}

impl Instance {
    pub fn name(&self) -> &str {
        match self {
            Instance::Saddle(s) => &s.name,
            Instance::Vip(v) => &v.name,
        }
    }

    pub fn num_agents(&self) -> usize {
        match self {
            Instance::Saddle(_) => 2,
            Instance::Vip(v) => v.num_blocks(),
        }
    }

    pub fn costs(&self) -> Vec<f64> {
        match self {
            Instance::Saddle(s) => s.costs.to_vec(),
            Instance::Vip(v) => v.costs.clone(),
        }
    }

    pub fn to_vip(&self) -> VipInstance {
        match self {
            Instance::Saddle(s) => s.to_vip(),
            Instance::Vip(v) => v.clone(),
        }
    }
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn need<'a, T>(v: &'a Option<T>, key: &str, kind: InstanceKind) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| cfg(format!("key `{key}` is required for kind {kind:?}")))
}

pub fn matrix_from_rows(rows: &[Vec<f64>], key: &str) -> Result<Matrix> {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != n) {
        return Err(cfg(format!("matrix `{key}` has rows of unequal length")));
    }
    Ok(Matrix::from_fn(m, n, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect()
}

fn vec_of(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

fn to_list(v: &Vector) -> Vec<f64> {
    v.iter().cloned().collect()
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| cfg(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| cfg(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| cfg(e.to_string()))
    }

    fn radii(&self, kind: InstanceKind, count: usize) -> Result<Vec<f64>> {
        let d = need(&self.d, "d", kind)?;
        if d.len() != count {
            return Err(cfg(format!("`d` needs {count} entries, found {}", d.len())));
        }
        Ok(d.clone())
    }

    /// Builds the instance. `default_seed` is used by random kinds without a
    /// `seed` key.
    pub fn build(&self, default_seed: u64) -> Result<Instance> {
        let kind = self.kind.ok_or_else(|| cfg("key `kind` is required"))?;
        let seed = self.seed.unwrap_or(default_seed);
        let mut inst = match kind {
            InstanceKind::Saddle => {
                let g_x = vec_of(need(&self.g_x, "g_x", kind)?);
                let g_y = vec_of(need(&self.g_y, "g_y", kind)?);
                let (nx, ny) = (g_x.len(), g_y.len());
                let opt = |m: &Option<Vec<Vec<f64>>>, key: &str, r: usize, c: usize| -> Result<Matrix> {
                    match m {
                        Some(rows) => matrix_from_rows(rows, key),
                        None => Ok(Matrix::zeros(r, c)),
                    }
                };
                let mut q = QuadraticSaddle::new(
                    opt(&self.h_x, "h_x", nx, nx)?,
                    g_x,
                    opt(&self.c, "c", ny, nx)?,
                    opt(&self.h_y, "h_y", ny, ny)?,
                    g_y,
                )?;
                q.offset = self.offset.unwrap_or(0.0);
                let d = self.radii(kind, 2)?;
                Instance::Saddle(SaddleInstance::from_quadratic("saddle", q, d[0], d[1])?)
            }
            InstanceKind::Bilinear | InstanceKind::QuadraticX | InstanceKind::QuadraticY => {
                let a = matrix_from_rows(need(&self.a, "a", kind)?, "a")?;
                let b = vec_of(need(&self.b, "b", kind)?);
                let d = self.radii(kind, 2)?;
                Instance::Saddle(match kind {
                    InstanceKind::Bilinear => make_bilinear_sp(&a, &b, d[0], d[1])?,
                    InstanceKind::QuadraticX => make_quadratic_sp(&a, &b, Side::X, d[0], d[1])?,
                    _ => make_quadratic_sp(&a, &b, Side::Y, d[0], d[1])?,
                })
            }
            InstanceKind::Polymatrix => {
                let dims = need(&self.dims, "dims", kind)?;
                let a = matrix_from_rows(need(&self.a, "a", kind)?, "a")?;
                let b = vec_of(need(&self.b, "b", kind)?);
                let d = self.radii(kind, dims.len())?;
                Instance::Vip(make_polymatrix_vip(dims, &a, &b, &d)?)
            }
            InstanceKind::WeaklyCoupled => Instance::Saddle(make_weakly_coupled_scsc(
                *need(&self.mu_x, "mu_x", kind)?,
                *need(&self.mu_y, "mu_y", kind)?,
                *need(&self.coupling, "coupling", kind)?,
                self.n.unwrap_or(1),
            )?),
            InstanceKind::RandomBilinear => {
                let dims = need(&self.dims, "dims", kind)?;
                if dims.len() != 2 {
                    return Err(cfg("`dims` must be [n_x, n_y]"));
                }
                let d = self.radii(kind, 2)?;
                Instance::Saddle(random_bilinear(
                    dims[0],
                    dims[1],
                    *need(&self.l_xy, "l_xy", kind)?,
                    d[0],
                    d[1],
                    seed,
                )?)
            }
            InstanceKind::RandomMixed => {
                let d = self.radii(kind, 2)?;
                Instance::Saddle(random_mixed(
                    *need(&self.n, "n", kind)?,
                    *need(&self.l_x, "l_x", kind)?,
                    *need(&self.l_xy, "l_xy", kind)?,
                    *need(&self.l_y, "l_y", kind)?,
                    d[0],
                    d[1],
                    seed,
                )?)
            }
            InstanceKind::RandomPolymatrix => {
                let dims = need(&self.dims, "dims", kind)?;
                let d = self.radii(kind, dims.len())?;
                Instance::Vip(random_polymatrix(
                    dims,
                    *need(&self.l_off, "l_off", kind)?,
                    self.l_diag.unwrap_or(0.0),
                    &d,
                    seed,
                )?)
            }
            InstanceKind::Hard => {
                let sub: SubclassKind = need(&self.subclass, "subclass", kind)?.parse()?;
                let l = match sub {
                    SubclassKind::X => need(&self.l_x, "l_x", kind)?,
                    SubclassKind::Y => need(&self.l_y, "l_y", kind)?,
                    SubclassKind::Xy => need(&self.l_xy, "l_xy", kind)?,
                };
                let dims = need(&self.dims, "dims", kind)?;
                if dims.len() != 2 {
                    return Err(cfg("`dims` must be [n_x, n_y]"));
                }
                let d = self.radii(kind, 2)?;
                let h = make_subclass_instance(sub, *l, d[0], d[1], *need(&self.k, "k", kind)?, (dims[0], dims[1]))?;
                Instance::Saddle(h.saddle)
            }
        };
        self.apply_overrides(&mut inst)?;
        Ok(inst)
    }

    fn apply_overrides(&self, inst: &mut Instance) -> Result<()> {
        match inst {
            Instance::Saddle(s) => {
                if let Some(name) = &self.name {
                    s.name = name.clone();
                }
                if let Some(psi) = &self.psi {
                    if psi.len() != 2 {
                        return Err(cfg("`psi` needs two entries for a saddle"));
                    }
                    s.psi_x = psi[0].clone();
                    s.psi_y = psi[1].clone();
                }
                if let Some(z0) = &self.z0 {
                    let (x0, y0) = split2(z0, s.nx(), "z0")?;
                    s.x0 = x0;
                    s.y0 = y0;
                }
                if let Some(sol) = &self.solution {
                    s.solution = Some(split2(sol, s.nx(), "solution")?);
                }
                if let Some(c) = &self.costs {
                    if c.len() != 2 {
                        return Err(cfg("`costs` needs two entries for a saddle"));
                    }
                    s.costs = [c[0], c[1]];
                }
                if let Some(l) = &self.l {
                    if l.len() != 3 {
                        return Err(cfg("`l` must be [L_x, L_xy, L_y] for a saddle"));
                    }
                    let dc = &mut s.declared;
                    for (new, old, key) in [(l[0], dc.l_x, "L_x"), (l[1], dc.l_xy, "L_xy"), (l[2], dc.l_y, "L_y")] {
                        if new < old * (1.0 - 1e-10) {
                            return Err(cfg(format!("declared {key} = {new} is below the computed {old}")));
                        }
                    }
                    dc.l_x = l[0];
                    dc.l_xy = l[1];
                    dc.l_y = l[2];
                }
                s.validate()
            }
            Instance::Vip(v) => {
                let k = v.num_blocks();
                if let Some(name) = &self.name {
                    v.name = name.clone();
                }
                if let Some(psi) = &self.psi {
                    if psi.len() != k {
                        return Err(cfg(format!("`psi` needs {k} entries")));
                    }
                    v.psis = psi.clone();
                }
                if let Some(z0) = &self.z0 {
                    if z0.len() != v.layout.total() {
                        return Err(cfg("`z0` has the wrong length"));
                    }
                    v.z0 = vec_of(z0);
                }
                if let Some(sol) = &self.solution {
                    if sol.len() != v.layout.total() {
                        return Err(cfg("`solution` has the wrong length"));
                    }
                    v.solution = Some(vec_of(sol));
                }
                if let Some(c) = &self.costs {
                    if c.len() != k {
                        return Err(cfg(format!("`costs` needs {k} entries")));
                    }
                    v.costs = c.clone();
                }
                if let Some(l) = &self.l {
                    if l.len() != k * k {
                        return Err(cfg(format!("`l` must hold {} entries", k * k)));
                    }
                    let new = Matrix::from_row_slice(k, k, l);
                    if new.iter().zip(v.lipschitz.iter()).any(|(a, b)| *a < b * (1.0 - 1e-10)) {
                        return Err(cfg("declared Lipschitz table undercuts the computed one"));
                    }
                    v.lipschitz = new;
                }
                v.validate()
            }
        }
    }

    /// Explicit description of an instance with a quadratic model.
    pub fn from_saddle(s: &SaddleInstance) -> Result<Self> {
        let q = match &s.model {
            SaddleModel::Quadratic(q) => q,
            SaddleModel::Custom { .. } => return Err(cfg("custom oracles cannot be serialized")),
        };
        let dc = s.declared;
        let mut z0 = to_list(&s.x0);
        z0.extend(s.y0.iter());
        Ok(Self {
            kind: Some(InstanceKind::Saddle),
            name: Some(s.name.clone()),
            h_x: Some(matrix_to_rows(&q.h_x)),
            g_x: Some(to_list(&q.g_x)),
            c: Some(matrix_to_rows(&q.c)),
            h_y: Some(matrix_to_rows(&q.h_y)),
            g_y: Some(to_list(&q.g_y)),
            offset: (q.offset != 0.0).then_some(q.offset),
            d: Some(vec![dc.d_x, dc.d_y]),
            l: Some(vec![dc.l_x, dc.l_xy, dc.l_y]),
            z0: Some(z0),
            solution: s.solution.as_ref().map(|(x, y)| {
                let mut v = to_list(x);
                v.extend(y.iter());
                v
            }),
            costs: Some(s.costs.to_vec()),
            psi: Some(vec![s.psi_x.clone(), s.psi_y.clone()]),
            ..Default::default()
        })
    }

    /// Explicit description of an affine VIP.
    pub fn from_vip(v: &VipInstance) -> Result<Self> {
        let (m, q) = match &v.operator {
            Operator::Affine { m, q } => (m, q),
            Operator::Custom(_) => return Err(cfg("custom oracles cannot be serialized")),
        };
        Ok(Self {
            kind: Some(InstanceKind::Polymatrix),
            name: Some(v.name.clone()),
            a: Some(matrix_to_rows(m)),
            b: Some(to_list(q)),
            d: Some(v.radii.clone()),
            l: Some(v.lipschitz.transpose().iter().cloned().collect()),
            z0: Some(to_list(&v.z0)),
            solution: v.solution.as_ref().map(to_list),
            costs: Some(v.costs.clone()),
            psi: Some(v.psis.clone()),
            dims: Some(v.layout.dims().to_vec()),
            ..Default::default()
        })
    }
}

fn split2(v: &[f64], nx: usize, key: &str) -> Result<(Vector, Vector)> {
    if v.len() < nx {
        return Err(cfg(format!("`{key}` is too short")));
    }
    Ok((vec_of(&v[..nx]), vec_of(&v[nx..])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_from_text() {
        let f = InstanceFile::parse(
            r#"
kind = "bilinear"
a = [[1.0]]
b = [0.0]
d = [1.0, 1.0]
z0 = [1.0, 1.0]
solution = [0.0, 0.0]
"#,
        )
        .unwrap();
        let Instance::Saddle(s) = f.build(0).unwrap() else { panic!() };
        assert_eq!(s.declared.l_xy, 1.0);
        assert_eq!(s.x0[0], 1.0);
        assert_eq!(s.solution.unwrap().1[0], 0.0);
    }

    #[test]
    fn unknown_key_reports_name() {
        let err = InstanceFile::parse("kind = \"bilinear\"\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn missing_key() {
        let f = InstanceFile::parse("kind = \"bilinear\"\nb = [0.0]\n").unwrap();
        assert!(f.build(0).unwrap_err().to_string().contains("`a`"));
    }

    #[test]
    fn declared_constant_cannot_undercut() {
        let f = InstanceFile::parse("kind = \"bilinear\"\na = [[2.0]]\nb = [0.0]\nd = [1.0, 1.0]\nl = [0.0, 1.0, 0.0]\n").unwrap();
        assert!(f.build(0).is_err());
    }

    #[test]
    fn saddle_roundtrip() {
        let s = random_mixed(3, 2.0, 1.0, 0.5, 1.0, 1.0, 4).unwrap();
        let text = InstanceFile::from_saddle(&s).unwrap().to_toml().unwrap();
        let Instance::Saddle(t) = InstanceFile::parse(&text).unwrap().build(0).unwrap() else { panic!() };
        assert_eq!(t.quadratic(), s.quadratic());
        assert_eq!(t.declared, s.declared);
        assert_eq!(t.solution, s.solution);
    }

    #[test]
    fn vip_roundtrip() {
        let v = random_polymatrix(&[2, 1, 2], 1.0, 0.5, &[1.0, 2.0, 1.0], 2).unwrap();
        let text = InstanceFile::from_vip(&v).unwrap().to_toml().unwrap();
        let Instance::Vip(w) = InstanceFile::parse(&text).unwrap().build(0).unwrap() else { panic!() };
        assert_eq!(w.lipschitz, v.lipschitz);
        assert_eq!(w.solution, v.solution);
        assert_eq!(w.z0, v.z0);
    }

    #[test]
    fn random_kind_uses_default_seed() {
        let f = InstanceFile::parse("kind = \"random_bilinear\"\ndims = [2, 3]\nl_xy = 1.0\nd = [1.0, 1.0]\n").unwrap();
        let a = f.build(5).unwrap();
        let b = f.build(5).unwrap();
        let c = f.build(6).unwrap();
        let q = |i: &Instance| match i {
            Instance::Saddle(s) => s.quadratic().unwrap().clone(),
            _ => panic!(),
        };
        assert_eq!(q(&a), q(&b));
        assert_ne!(q(&a), q(&c));
    }
}
