//! Experiment runner behind the `dsp` binary: TOML configs, result rows,
//! CSV and SVG output, and the `run`, `hard-instance`, `verify` and
//! `bounds` subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accounting::{verify_gradient_span, Ledger, RunStatus, Visibility};
use crate::dm::{dm_sp_run_with, dm_vip_run_with, DmRunOptions};
use crate::error::{Error, Result};
use crate::evaluation::{complexity_bounds, vip_bounds, BoundParams, GapOracle, SaddleGap, VipGap};
use crate::hard_instances::{make_subclass_instance, min_residual_over, SubclassKind};
use crate::problems::generators::{gaussian_vector, rng};
use crate::problems::{CompositeTerm, Instance, InstanceFile};
use crate::solvers_baseline::{dgda_run, eg_run, DgdaParams, EgParams};

/// Exit status of the binary.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// The decoupled method; the saddle or VIP variant is picked per instance.
    Dm,
    Eg,
    Dgda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub kind: SolverKind,
    #[serde(default)]
    pub label: Option<String>,
    /// Distance estimates for saddle instances; defaults to the declared radii.
    #[serde(default)]
    pub d_hat: Option<Vec<f64>>,
    #[serde(default)]
    pub arm_factor: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub max_rounds: Option<usize>,
    #[serde(default)]
    pub gap_stride: Option<usize>,
    #[serde(default)]
    pub tau: Option<usize>,
    #[serde(default)]
    pub eta: Option<Vec<f64>>,
}

impl SolverSpec {
    pub fn new(kind: SolverKind) -> Self {
        Self {
            kind,
            label: None,
            d_hat: None,
            arm_factor: None,
            max_iterations: None,
            max_rounds: None,
            gap_stride: None,
            tau: None,
            eta: None,
        }
    }

    fn name(&self, inst: &Instance) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match (self.kind, inst) {
            (SolverKind::Dm, Instance::Saddle(_)) => "dm-sp".into(),
            (SolverKind::Dm, Instance::Vip(_)) => "dm-vip".into(),
            (SolverKind::Eg, _) => "eg".into(),
            (SolverKind::Dgda, _) => "dgda".into(),
        }
    }
}

/// One `[[instance]]` table: either `file = "..."` or inline instance keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub id: String,
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(flatten)]
    pub inline: toml::Table,
}

impl InstanceEntry {
    pub fn inline(id: &str, spec: &InstanceFile) -> Result<Self> {
        let inline = toml::Table::try_from(spec).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            id: id.into(),
            file: None,
            inline,
        })
    }

    fn spec(&self, base: &Path) -> Result<InstanceFile> {
        match &self.file {
            Some(f) => {
                if !self.inline.is_empty() {
                    return Err(Error::Config(format!(
                        "instance `{}`: `file` excludes inline keys",
                        self.id
                    )));
                }
                let path = if f.is_absolute() { f.clone() } else { base.join(f) };
                InstanceFile::load(&path)
            }
            None => self
                .inline
                .clone()
                .try_into()
                .map_err(|e| Error::Config(format!("instance `{}`: {e}", self.id))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub check_bounds: bool,
    /// Fill `wall_ms`; off by default so outputs are byte-reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(rename = "instance", default)]
    pub instances: Vec<InstanceEntry>,
    #[serde(rename = "solver", default)]
    pub solvers: Vec<SolverSpec>,
    /// Directory that relative instance paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::Config("`epsilons` must not be empty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::Config(format!("epsilon {e} must be finite and > 0")));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("`jobs` must be ≥ 1".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for inst in &self.instances {
            if !seen.insert(&inst.id) {
                return Err(Error::Config(format!("duplicate instance id `{}`", inst.id)));
            }
        }
        Ok(())
    }

    /// Builds every instance, keyed by id.
    pub fn build_instances(&self) -> Result<Vec<(String, Instance)>> {
        self.instances
            .iter()
            .map(|e| {
                let inst = e
                    .spec(&self.base_dir)?
                    .build(self.seed)
                    .map_err(|err| Error::Config(format!("instance `{}`: {err}", e.id)))?;
                Ok((e.id.clone(), inst))
            })
            .collect()
    }
}

/// One `(instance, solver, ε)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub instance_id: String,
    pub solver: String,
    pub epsilon: f64,
    pub rounds: usize,
    pub queries: Vec<u64>,
    pub weighted_cost: f64,
    pub gap: Option<f64>,
    pub gap_exact: Option<bool>,
    pub bound_comm: Option<f64>,
    pub bound_oracle: Option<f64>,
    pub compliant: Option<bool>,
    pub wall_ms: Option<u64>,
    /// Run status or failure message; not written to the CSV.
    pub status: Option<String>,
}

impl ResultRow {
    pub fn violates(&self) -> bool {
        self.compliant == Some(false)
    }
}

struct Outcome {
    status: RunStatus,
    gap: Option<(f64, bool)>,
    bound_comm: Option<f64>,
    bound_oracle: Option<f64>,
}

fn d_hat_for(spec: &SolverSpec, s: &crate::problems::SaddleInstance) -> Result<(f64, f64)> {
    match &spec.d_hat {
        None => Ok((s.declared.d_x, s.declared.d_y)),
        Some(d) if d.len() == 2 => Ok((d[0], d[1])),
        Some(_) => Err(Error::Config("`d_hat` must be [D̂_x, D̂_y]".into())),
    }
}

fn solve(inst: &Instance, spec: &SolverSpec, eps: f64, ledger: &mut Ledger) -> Result<Outcome> {
    let gap_of = |g: &Option<crate::evaluation::GapResult>| g.as_ref().map(|g| (g.value, g.exact));
    match (spec.kind, inst) {
        (SolverKind::Dm, _) => {
            let mut opts = DmRunOptions {
                max_iterations: spec.max_iterations,
                ..Default::default()
            };
            if let Some(f) = spec.arm_factor {
                opts.arm_factor = f;
            }
            if let Some(s) = spec.gap_stride {
                opts.gap_stride = s;
            }
            match inst {
                Instance::Saddle(s) => {
                    let (dx, dy) = d_hat_for(spec, s)?;
                    let r = dm_sp_run_with(s, eps, dx, dy, ledger, &opts)?;
                    let b = r.bounds.expect("saddle bounds");
                    Ok(Outcome {
                        status: r.status,
                        gap: gap_of(&r.gap),
                        bound_comm: Some(b.dmsp_comm),
                        bound_oracle: Some(s.costs[0] * b.dmsp_queries_x + s.costs[1] * b.dmsp_queries_y),
                    })
                }
                Instance::Vip(v) => {
                    let r = dm_vip_run_with(v, eps, ledger, &opts)?;
                    let b = r.vip_bounds.expect("vip bounds");
                    Ok(Outcome {
                        status: r.status,
                        gap: gap_of(&r.gap),
                        bound_comm: Some(b.dmvip_comm),
                        bound_oracle: b.dmvip_oracle,
                    })
                }
            }
        }
        (SolverKind::Eg, Instance::Saddle(s)) => {
            let (dx, dy) = d_hat_for(spec, s)?;
            let mut p = EgParams::for_saddle(s, eps, dx, dy);
            if let Some(m) = spec.max_rounds {
                p.max_rounds = m;
            }
            if let Some(st) = spec.gap_stride {
                p.gap_stride = st;
            }
            let r = eg_run(&s.to_vip(), &p, ledger, &SaddleGap::new(s))?;
            let b = complexity_bounds(&BoundParams::from_instance(s, eps).with_estimates(dx, dy))?;
            Ok(Outcome {
                status: r.status,
                gap: gap_of(&r.gap),
                bound_comm: Some(b.eg_comm),
                bound_oracle: Some(b.eg_oracle),
            })
        }
        (SolverKind::Eg, Instance::Vip(v)) => {
            let mut p = EgParams::for_vip(v, eps);
            if let Some(m) = spec.max_rounds {
                p.max_rounds = m;
            }
            if let Some(st) = spec.gap_stride {
                p.gap_stride = st;
            }
            let r = eg_run(v, &p, ledger, &VipGap::new(v))?;
            Ok(Outcome {
                status: r.status,
                gap: gap_of(&r.gap),
                bound_comm: None,
                bound_oracle: None,
            })
        }
        (SolverKind::Dgda, _) => {
            let tau = spec.tau.unwrap_or(5);
            let max_rounds = spec.max_rounds.unwrap_or(500);
            let (vip, mut p, gap): (_, _, Box<dyn GapOracle>) = match inst {
                Instance::Saddle(s) => (
                    s.to_vip(),
                    DgdaParams::for_saddle(s, tau, max_rounds, eps),
                    Box::new(SaddleGap::new(s)),
                ),
                Instance::Vip(v) => (
                    v.clone(),
                    DgdaParams::for_vip(v, tau, max_rounds, eps),
                    Box::new(VipGap::new(v)),
                ),
            };
            if let Some(eta) = &spec.eta {
                p.eta = match eta.len() {
                    1 => vec![eta[0]; vip.num_blocks()],
                    n if n == vip.num_blocks() => eta.clone(),
                    _ => return Err(Error::Config("`eta` needs one entry or one per agent".into())),
                };
            }
            let r = dgda_run(&vip, &p, ledger, Some(gap.as_ref()))?;
            Ok(Outcome {
                status: r.status,
                gap: gap_of(&r.gap),
                bound_comm: None,
                bound_oracle: None,
            })
        }
    }
}

fn bounds_apply(kind: SolverKind, inst: &Instance) -> bool {
    matches!((kind, inst), (SolverKind::Dm, _) | (SolverKind::Eg, Instance::Saddle(_)))
}

/// Runs one cell with a fresh ledger. Solver failures end up in the row.
pub fn run_cell(id: &str, inst: &Instance, spec: &SolverSpec, eps: f64, timing: bool) -> ResultRow {
    let mut ledger = Ledger::with_costs(inst.costs()).without_trace();
    let start = Instant::now();
    let outcome = solve(inst, spec, eps, &mut ledger);
    let wall_ms = timing.then(|| start.elapsed().as_millis() as u64);
    let rounds = ledger.round();
    let weighted_cost = ledger.weighted_oracle_cost();
    let mut row = ResultRow {
        instance_id: id.into(),
        solver: spec.name(inst),
        epsilon: eps,
        rounds,
        queries: ledger.queries().to_vec(),
        weighted_cost,
        gap: None,
        gap_exact: None,
        bound_comm: None,
        bound_oracle: None,
        compliant: None,
        wall_ms,
        status: None,
    };
    match outcome {
        Ok(o) => {
            row.status = Some(o.status.as_str().into());
            row.bound_comm = o.bound_comm;
            row.bound_oracle = o.bound_oracle;
            if o.status != RunStatus::Diverged {
                if let Some((g, exact)) = o.gap {
                    row.gap = Some(g);
                    row.gap_exact = Some(exact);
                }
                if let Some(bc) = o.bound_comm {
                    let within_oracle = o.bound_oracle.is_none_or(|bo| weighted_cost <= bo * (1.0 + 1e-12));
                    row.compliant = Some(o.status.reached_target() && rounds as f64 <= bc && within_oracle);
                }
            }
        }
        Err(e) => {
            row.status = Some(format!("failed: {e}"));
            if bounds_apply(spec.kind, inst) {
                row.compliant = Some(false);
            }
        }
    }
    row
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs the full grid; rows come back sorted by `(instance, solver, ε)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let instances = config.build_instances()?;
    let mut cells = Vec::new();
    for (id, inst) in &instances {
        for spec in &config.solvers {
            for eps in &config.epsilons {
                cells.push((id.as_str(), inst, spec, *eps));
            }
        }
    }
    let mut rows: Vec<ResultRow> = pool(config.jobs)?.install(|| {
        cells
            .par_iter()
            .map(|(id, inst, spec, eps)| run_cell(id, inst, spec, *eps, config.timing))
            .collect()
    });
    rows.sort_by(|a, b| {
        a.instance_id
            .cmp(&b.instance_id)
            .then_with(|| a.solver.cmp(&b.solver))
            .then_with(|| a.epsilon.total_cmp(&b.epsilon))
    });
    Ok(rows)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn csv_header(agents: usize) -> Vec<String> {
    let mut h: Vec<String> = ["instance_id", "solver", "epsilon", "rounds"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..agents).map(|i| format!("queries_{i}")));
    h.extend(
        [
            "weighted_cost",
            "gap",
            "gap_exact",
            "bound_comm",
            "bound_oracle",
            "compliant",
            "wall_ms",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

/// CSV text for `rows`, with one query column per agent of the widest row.
pub fn results_csv(rows: &[ResultRow]) -> Result<String> {
    let agents = rows.iter().map(|r| r.queries.len()).max().unwrap_or(2);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header(agents))?;
    for r in rows {
        let mut rec = vec![
            r.instance_id.clone(),
            r.solver.clone(),
            r.epsilon.to_string(),
            r.rounds.to_string(),
        ];
        rec.extend((0..agents).map(|i| r.queries.get(i).map(|q| q.to_string()).unwrap_or_default()));
        rec.extend([
            r.weighted_cost.to_string(),
            opt(&r.gap),
            opt(&r.gap_exact),
            opt(&r.bound_comm),
            opt(&r.bound_oracle),
            opt(&r.compliant),
            opt(&r.wall_ms),
        ]);
        w.write_record(rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Config(format!("bad value {s:?} in column {name}")))
}

fn opt_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(s, name).map(Some)
    }
}

/// Parses CSV produced by [`results_csv`]; `status` is not stored there.
pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers()?.clone();
    let agents = header.iter().filter(|h| h.starts_with("queries_")).count();
    if header.iter().collect::<Vec<_>>() != csv_header(agents) {
        return Err(Error::Config("unexpected CSV header".into()));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let g = |i: usize| rec.get(i).unwrap_or("");
        let mut queries = Vec::new();
        for i in 0..agents {
            if let Some(q) = opt_field(g(4 + i), "queries")? {
                queries.push(q);
            }
        }
        let o = 4 + agents;
        rows.push(ResultRow {
            instance_id: g(0).into(),
            solver: g(1).into(),
            epsilon: field(g(2), "epsilon")?,
            rounds: field(g(3), "rounds")?,
            queries,
            weighted_cost: field(g(o), "weighted_cost")?,
            gap: opt_field(g(o + 1), "gap")?,
            gap_exact: opt_field(g(o + 2), "gap_exact")?,
            bound_comm: opt_field(g(o + 3), "bound_comm")?,
            bound_oracle: opt_field(g(o + 4), "bound_oracle")?,
            compliant: opt_field(g(o + 5), "compliant")?,
            wall_ms: opt_field(g(o + 6), "wall_ms")?,
            status: None,
        });
    }
    Ok(rows)
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    parse_results_csv(&std::fs::read_to_string(path)?)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Log–log plot of rounds against `1/ε`, one polyline per solver.
pub fn rounds_svg(instance_id: &str, rows: &[&ResultRow]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.rounds > 0)
        .map(|r| ((1.0 / r.epsilon).log10(), (r.rounds as f64).log10()))
        .collect();
    let range = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else {
            let (lo, hi) = (lo.floor(), hi.ceil());
            (lo, if hi > lo { hi } else { lo + 1.0 })
        }
    };
    let (x0, x1) = range(|p| p.0);
    let (y0, y1) = range(|p| p.1);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, xml_escape(instance_id));
    let _ = writeln!(
        s,
        r##"<path d="M{m} {m} V{} H{}" fill="none" stroke="#333"/>"##,
        h - m,
        w - m
    );
    for d in (x0 as i32)..=(x1 as i32) {
        let x = sx(d as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="#333"/><text x="{x:.1}" y="{}" text-anchor="middle">1e{d}</text>"##,
            h - m,
            h - m + 5.0,
            h - m + 18.0
        );
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = sy(d as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{y:.1}" x2="{m}" y2="{y:.1}" stroke="#333"/><text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"##,
            m - 5.0,
            m - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">1/epsilon</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">rounds</text>"#,
        h / 2.0,
        h / 2.0
    );

    let mut by_solver: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.rounds > 0) {
        by_solver
            .entry(r.solver.as_str())
            .or_default()
            .push(((1.0 / r.epsilon).log10(), (r.rounds as f64).log10()));
    }
    for (k, (solver, mut line)) in by_solver.into_iter().enumerate() {
        line.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = line
            .iter()
            .map(|(x, y)| format!("{:.1},{:.1}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
        for (x, y) in &line {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, sx(*x), sy(*y));
        }
        let ly = m + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            w - m - 110.0,
            w - m - 90.0,
            w - m - 85.0,
            ly + 4.0,
            xml_escape(solver)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes `results.csv` and one SVG per instance; returns the written paths.
pub fn emit_outputs(rows: &[ResultRow], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("results.csv");
    std::fs::write(&csv_path, results_csv(rows)?)?;
    let mut written = vec![csv_path];
    let mut groups: BTreeMap<&str, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(&r.instance_id).or_default().push(r);
    }
    for (id, group) in groups {
        let path = dir.join(format!("{}.svg", file_stem(id)));
        std::fs::write(&path, rounds_svg(id, &group))?;
        written.push(path);
    }
    Ok(written)
}

/// Outcome of one invariant check of the `verify` suite.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: String, passed: bool, detail: String) -> VerifyOutcome {
    VerifyOutcome { name, passed, detail }
}

/// Instances checked by `verify` when no config is given.
pub fn default_verify_instances(seed: u64) -> Result<Vec<(String, Instance)>> {
    use crate::problems::generators::{random_bilinear, random_mixed, random_polymatrix};
    let hard = make_subclass_instance(SubclassKind::Xy, 1.0, 1.0, 1.0, 4, (10, 10))?;
    Ok(vec![
        ("bilinear".into(), Instance::Saddle(random_bilinear(4, 6, 1.0, 1.0, 1.0, seed)?)),
        ("mixed".into(), Instance::Saddle(random_mixed(6, 10.0, 1.0, 1.0, 1.0, 1.0, seed)?)),
        ("polymatrix".into(), Instance::Vip(random_polymatrix(&[3, 2, 2], 1.0, 0.5, &[1.0, 1.0, 1.0], seed)?)),
        ("hard-xy".into(), Instance::Saddle(hard.saddle)),
    ])
}

fn monotonicity_check(vip: &crate::problems::VipInstance, seed: u64) -> (bool, f64) {
    let mut r = rng(seed);
    let n = vip.layout.total();
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let z = gaussian_vector(n, &mut r);
        let w = gaussian_vector(n, &mut r) * r.gen_range(0.01..10.0);
        let d = &z - &w;
        let val = (vip.operator(&z) - vip.operator(&w)).dot(&d) / d.norm_squared().max(1e-300);
        worst = worst.min(val);
    }
    (worst >= -1e-10, worst)
}

fn lipschitz_check(vip: &crate::problems::VipInstance, seed: u64) -> (bool, f64) {
    let mut r = rng(seed ^ 0x5eed);
    let k = vip.num_blocks();
    let n = vip.layout.total();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let z = gaussian_vector(n, &mut r);
        let j = r.gen_range(0..k);
        let mut w = z.clone();
        let step = gaussian_vector(vip.layout.dim(j), &mut r);
        let blk = &vip.layout.block_owned(&z, j) + &step;
        vip.layout.set_block(&mut w, j, &blk);
        let dz = vip.metrics[j].norm(&step);
        for i in 0..k {
            let dv = vip.metrics[i].dual_norm(&(vip.block_operator(i, &z) - vip.block_operator(i, &w)));
            let bound = vip.lipschitz[(i, j)] * dz;
            worst = worst.max((dv - bound) / (1.0 + bound));
        }
    }
    (worst <= 1e-8, worst)
}

/// Span check of every agent's final candidate block against its own
/// recorded responses; only meaningful for unconstrained instances.
fn span_check(inst: &Instance, eps: f64) -> Result<Option<(bool, f64)>> {
    let vip = inst.to_vip();
    if vip.psis.iter().any(|p| *p != CompositeTerm::Zero) {
        return Ok(None);
    }
    let mut ledger = Ledger::with_costs(vip.costs.clone());
    let candidate = match inst {
        Instance::Saddle(s) => {
            let p = EgParams::for_saddle(s, eps, s.declared.d_x, s.declared.d_y);
            eg_run(&vip, &p, &mut ledger, &SaddleGap::new(s))?.candidate
        }
        Instance::Vip(v) => eg_run(v, &EgParams::for_vip(v, eps), &mut ledger, &VipGap::new(v))?.candidate,
    };
    let mut worst = 0.0f64;
    let mut ok = true;
    for i in 0..vip.num_blocks() {
        let c = vip.layout.block_owned(&candidate, i);
        let o = vip.layout.block_owned(&vip.z0, i);
        let chk = verify_gradient_span(&ledger, i, &c, &o, &vip.metrics[i], Visibility::All);
        ok &= chk.inside;
        worst = worst.max(chk.residual);
    }
    Ok(Some((ok, worst)))
}

/// Runs the invariant suite on the given instances.
pub fn verify_suite(instances: &[(String, Instance)], epsilon: f64, seed: u64) -> Vec<VerifyOutcome> {
    let mut out = Vec::new();
    for (id, inst) in instances {
        let vip = inst.to_vip();
        let (ok, worst) = monotonicity_check(&vip, seed);
        out.push(outcome(
            format!("{id}: monotonicity"),
            ok,
            format!("min normalized <V(z)-V(w), z-w> = {worst:.3e}"),
        ));
        let (ok, worst) = lipschitz_check(&vip, seed);
        out.push(outcome(
            format!("{id}: declared Lipschitz constants"),
            ok,
            format!("worst relative excess {worst:.3e}"),
        ));
        let spec = SolverSpec::new(SolverKind::Dm);
        let row = run_cell(id, inst, &spec, epsilon, false);
        let status = row.status.clone().unwrap_or_default();
        let within_comm = row.bound_comm.is_some_and(|b| row.rounds as f64 <= b);
        let ok = !status.starts_with("failed") && status != "budget-exhausted" && within_comm;
        out.push(outcome(
            format!("{id}: {} runtime checks and communication bound", row.solver),
            ok,
            format!(
                "{status}, {} rounds (bound {}), gap {}, oracle cost {} (query bound {})",
                row.rounds,
                row.bound_comm.map(|b| format!("{b:.1}")).unwrap_or_default(),
                row.gap.map(|g| format!("{g:.3e}")).unwrap_or_default(),
                row.weighted_cost,
                row.bound_oracle.map(|b| format!("{b:.1}")).unwrap_or_else(|| "n/a".into())
            ),
        ));
        match span_check(inst, epsilon) {
            Ok(Some((ok, worst))) => out.push(outcome(
                format!("{id}: gradient-span confinement (eg)"),
                ok,
                format!("worst residual {worst:.2e}"),
            )),
            Ok(None) => {}
            Err(e) => out.push(outcome(format!("{id}: gradient-span confinement (eg)"), false, e.to_string())),
        }
    }
    out
}

#[derive(Debug, Parser)]
#[command(name = "dsp", version, about = "Decoupled saddle-point solvers with exact communication accounting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Experiment config (run, verify) or instance file (bounds).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the experiment grid.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Exit with status 1 when a run violates its bound.
    #[arg(long, global = true)]
    pub check_bounds: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment grid and write results.csv plus one SVG per instance.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Emit a worst-case instance and its Krylov residual table.
    HardInstance {
        #[command(flatten)]
        common: CommonArgs,
        /// x, y or xy.
        #[arg(long, default_value = "xy")]
        subclass: String,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 1.0)]
        d_x: f64,
        #[arg(long, default_value_t = 1.0)]
        d_y: f64,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        nx: usize,
        #[arg(long, default_value_t = 10)]
        ny: usize,
    },
    /// Run the invariant suite on the config's instances or a default set.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Print complexity bounds for an instance file or explicit constants.
    Bounds {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        l_x: f64,
        #[arg(long, default_value_t = 1.0)]
        l_xy: f64,
        #[arg(long, default_value_t = 0.0)]
        l_y: f64,
        #[arg(long, default_value_t = 1.0)]
        d_x: f64,
        #[arg(long, default_value_t = 1.0)]
        d_y: f64,
        #[arg(long)]
        d_hat_x: Option<f64>,
        #[arg(long)]
        d_hat_y: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c_x: f64,
        #[arg(long, default_value_t = 1.0)]
        c_y: f64,
    },
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Parameter(_) | Error::Dimension { .. })
}

fn report(e: Error) -> i32 {
    eprintln!("error: {e}");
    if is_config_error(&e) {
        EXIT_CONFIG
    } else {
        EXIT_VIOLATION
    }
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run { common } => cmd_run(&common),
        Command::HardInstance {
            common,
            subclass,
            l,
            d_x,
            d_y,
            k,
            nx,
            ny,
        } => cmd_hard(&common, &subclass, l, (d_x, d_y), k, (nx, ny)),
        Command::Verify { common, epsilon } => cmd_verify(&common, epsilon),
        Command::Bounds {
            common,
            epsilon,
            l_x,
            l_xy,
            l_y,
            d_x,
            d_y,
            d_hat_x,
            d_hat_y,
            c_x,
            c_y,
        } => {
            let p = BoundParams::new(l_x, l_xy, l_y, d_x, d_y, epsilon)
                .with_estimates(d_hat_x.unwrap_or(d_x), d_hat_y.unwrap_or(d_y))
                .with_costs(c_x, c_y);
            cmd_bounds(&common, p)
        }
    };
    result.unwrap_or_else(report)
}

fn cmd_run(common: &CommonArgs) -> Result<i32> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("run needs --config".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.jobs.is_some() {
        cfg.jobs = common.jobs;
    }
    cfg.check_bounds |= common.check_bounds;
    cfg.validate()?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|o| cfg.base_dir.join(o)))
        .unwrap_or_else(|| PathBuf::from("results"));
    let rows = run_experiment(&cfg)?;
    for r in &rows {
        println!(
            "{:<20} {:<8} eps={:<8} rounds={:<6} gap={:<12} bound={:<10} {} [{}]",
            r.instance_id,
            r.solver,
            r.epsilon,
            r.rounds,
            r.gap.map(|g| format!("{g:.3e}")).unwrap_or_default(),
            r.bound_comm.map(|b| format!("{b:.1}")).unwrap_or_default(),
            match r.compliant {
                Some(true) => "ok",
                Some(false) => "VIOLATION",
                None => "-",
            },
            r.status.as_deref().unwrap_or("")
        );
    }
    let files = emit_outputs(&rows, &out)?;
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(if cfg.check_bounds && rows.iter().any(ResultRow::violates) {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    })
}

fn cmd_hard(common: &CommonArgs, subclass: &str, l: f64, d: (f64, f64), k: usize, dims: (usize, usize)) -> Result<i32> {
    let kind: SubclassKind = subclass.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
    let h = make_subclass_instance(kind, l, d.0, d.1, k, dims)?;
    let c = &h.construction;
    println!("{:>3} {:>14}", "j", "min residual");
    for j in 1..=k {
        println!("{j:>3} {:>14.6e}", min_residual_over(&c.a, &c.b, j));
    }
    println!("closed form at k = {k}: {:.6e}", c.closed_form_residual());
    println!("lower bound at k = {k}: {:.6e}", c.residual_lower_bound());
    let text = InstanceFile::from_saddle(&h.saddle)?.to_toml()?;
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}.toml", file_stem(&h.saddle.name)));
            std::fs::write(&path, text)?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

fn cmd_verify(common: &CommonArgs, epsilon: f64) -> Result<i32> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Config("epsilon must be > 0".into()));
    }
    let (instances, seed) = match &common.config {
        Some(p) => {
            let mut cfg = ExperimentConfig::load(p)?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let seed = cfg.seed;
            (cfg.build_instances()?, seed)
        }
        None => {
            let seed = common.seed.unwrap_or(0);
            (default_verify_instances(seed)?, seed)
        }
    };
    let results = pool(common.jobs)?.install(|| verify_suite(&instances, epsilon, seed));
    let mut failed = 0;
    for r in &results {
        println!("[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        failed += usize::from(!r.passed);
    }
    println!("{} of {} checks passed", results.len() - failed, results.len());
    Ok(if failed > 0 { EXIT_VIOLATION } else { EXIT_OK })
}

fn cmd_bounds(common: &CommonArgs, p: BoundParams) -> Result<i32> {
    let text = match &common.config {
        Some(path) => match InstanceFile::load(path)?.build(common.seed.unwrap_or(0))? {
            Instance::Saddle(s) => {
                let q = BoundParams::from_instance(&s, p.epsilon);
                toml::to_string(&complexity_bounds(&q)?)
            }
            Instance::Vip(v) => toml::to_string(&vip_bounds(&v, p.epsilon)?),
        },
        None => toml::to_string(&complexity_bounds(&p)?),
    }
    .map_err(|e| Error::Config(e.to_string()))?;
    print!("{text}");
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_bilinear() -> InstanceFile {
        InstanceFile::parse(
            "kind = \"bilinear\"\na = [[1.0]]\nb = [0.0]\nd = [1.0, 1.0]\nz0 = [1.0, 1.0]\nsolution = [0.0, 0.0]\n",
        )
        .unwrap()
    }

    fn config(solvers: Vec<SolverSpec>) -> ExperimentConfig {
        ExperimentConfig {
            seed: 1,
            epsilons: vec![0.2, 0.1, 0.05],
            check_bounds: true,
            timing: false,
            out: None,
            jobs: Some(2),
            instances: vec![InstanceEntry::inline("unit", &scalar_bilinear()).unwrap()],
            solvers,
            base_dir: PathBuf::new(),
        }
    }

    #[test]
    fn grid_cardinality_and_order() {
        let cfg = config(vec![SolverSpec::new(SolverKind::Dm), SolverSpec::new(SolverKind::Eg)]);
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].solver, "dm-sp");
        assert_eq!(rows[0].epsilon, 0.05);
        assert!(rows.iter().all(|r| r.compliant == Some(true)), "{rows:#?}");
    }

    #[test]
    fn dm_row_at_tenth() {
        let cfg = config(vec![SolverSpec::new(SolverKind::Dm)]);
        let rows = run_experiment(&cfg).unwrap();
        let r = rows.iter().find(|r| r.epsilon == 0.1).unwrap();
        assert!(r.rounds <= 42);
        assert_eq!(r.bound_comm, Some(42.0));
        assert_eq!(r.compliant, Some(true));
    }

    #[test]
    fn diverged_dgda_row_has_empty_fields() {
        let f = InstanceFile::parse("kind = \"weakly_coupled\"\nmu_x = 1.0\nmu_y = 1.0\ncoupling = 2.0\n").unwrap();
        let inst = f.build(0).unwrap();
        let mut spec = SolverSpec::new(SolverKind::Dgda);
        spec.tau = Some(50);
        spec.eta = Some(vec![0.5]);
        spec.max_rounds = Some(200);
        let row = run_cell("strong", &inst, &spec, 1e-6, false);
        assert_eq!(row.status.as_deref(), Some("diverged"));
        assert_eq!(row.compliant, None);
        assert_eq!(row.gap, None);
        let csv = results_csv(&[row]).unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(",,,,,,"));
    }

    #[test]
    fn empty_rows_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_outputs(&[], dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(
            text,
            "instance_id,solver,epsilon,rounds,queries_0,queries_1,weighted_cost,gap,gap_exact,bound_comm,bound_oracle,compliant,wall_ms\n"
        );
    }

    #[test]
    fn six_rows_give_one_csv_one_svg_and_roundtrip() {
        let cfg = config(vec![SolverSpec::new(SolverKind::Dm), SolverSpec::new(SolverKind::Eg)]);
        let rows = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_outputs(&rows, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let back = read_results_csv(&files[0]).unwrap();
        let stripped: Vec<ResultRow> = rows.iter().cloned().map(|r| ResultRow { status: None, ..r }).collect();
        assert_eq!(back, stripped);
        let svg = std::fs::read_to_string(&files[1]).unwrap();
        assert!(svg.starts_with("<svg") && svg.matches("<polyline").count() == 2);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ExperimentConfig::parse("epsilons = []"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("epsilons = [-1.0]"), Err(Error::Config(_))));
        let err = ExperimentConfig::parse("epsilons = [0.1]\n[[solver]]\nkind = \"newton\"\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn parses_inline_and_file_instances() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("inst.toml"), scalar_bilinear().to_toml().unwrap()).unwrap();
        let text = r#"
seed = 3
epsilons = [0.1]

[[instance]]
id = "file"
file = "inst.toml"

[[instance]]
id = "inline"
kind = "random_bilinear"
dims = [2, 3]
l_xy = 1.0
d = [1.0, 1.0]

[[solver]]
kind = "dm"
"#;
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, text).unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        let built = cfg.build_instances().unwrap();
        assert_eq!(built.len(), 2);
        assert_eq!(built[1].1.num_agents(), 2);
    }
}
