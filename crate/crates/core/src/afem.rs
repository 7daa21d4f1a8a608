//! The adaptive loop Solve, Estimate, Mark, Refine; traces, empirical
//! convergence rates and extrapolated reference eigenvalues.

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_mass, assemble_stiffness};
use crate::eigen::{lower_bound, principal_angle_nc, separation, solve_gevp, ClusterSolution, EigenMethod};
use crate::error::{Error, Result};
use crate::estimator::{dorfler_mark, estimate, EdgeWeight, EstimatorField};
use crate::mesh::{uniform_refine, BisectionRule, BoundaryPart, Geometry, MarkSet, Triangulation};
use crate::space::{BrokenFunction, MorleySpace};

/// The cluster `J = {n + 1, ..., n + N}` (1-based eigenvalue indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterWindow {
    pub n: usize,
    #[serde(rename = "N")]
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Dörfler marking and newest-vertex bisection.
    #[default]
    Adaptive,
    /// Every edge bisected on every level, for comparison runs.
    Uniform,
}

/// Boundary conditions: a named configuration or one part per polygon segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BcSpec {
    Named(String),
    Segments(Vec<BoundaryPart>),
}

impl BcSpec {
    pub fn parts(&self, geometry: Geometry) -> Result<Vec<BoundaryPart>> {
        match self {
            BcSpec::Named(name) => geometry.named_bc(name).map_err(|e| Error::Config(e.to_string())),
            BcSpec::Segments(parts) if parts.len() == geometry.num_segments() => Ok(parts.clone()),
            BcSpec::Segments(parts) => Err(Error::Config(format!(
                "{} boundary labels for the {} segments of '{}'",
                parts.len(),
                geometry.num_segments(),
                geometry.name()
            ))),
        }
    }
}

fn default_theta() -> f64 {
    0.5
}
fn default_max_levels() -> usize {
    12
}
fn default_max_ndof() -> usize {
    20_000
}
fn default_buffer() -> usize {
    4
}
fn default_c() -> f64 {
    1.0
}
fn default_eta_floor() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfemConfig {
    pub geometry: Geometry,
    /// Mesh document replacing the preset triangulation of `geometry`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_file: Option<String>,
    pub bc: BcSpec,
    #[serde(rename = "J")]
    pub cluster: ClusterWindow,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_max_levels")]
    pub max_levels: usize,
    /// No further refinement once a level reaches this many unknowns.
    #[serde(default = "default_max_ndof")]
    pub max_ndof: usize,
    /// Eigenpairs computed beyond the cluster for the separation diagnostic.
    #[serde(default = "default_buffer")]
    pub buffer: usize,
    /// Constant of the lower eigenvalue bound; bounds hold only if it is valid.
    #[serde(rename = "C", default = "default_c")]
    pub lower_bound_c: f64,
    #[serde(default)]
    pub deterministic: bool,
    /// Uniform refinements applied to the initial mesh before the loop.
    #[serde(default)]
    pub initial_refinements: usize,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub bisection: BisectionRule,
    #[serde(default)]
    pub edge_weight: EdgeWeight,
    #[serde(default)]
    pub eigen_method: EigenMethod,
    #[serde(default = "default_eta_floor")]
    pub eta_floor: f64,
    /// Record the angle between each level's cluster space and the final one.
    #[serde(default)]
    pub angles: bool,
}

impl AfemConfig {
    pub fn new(geometry: Geometry, bc: &str, n: usize, len: usize) -> Self {
        AfemConfig {
            geometry,
            mesh_file: None,
            bc: BcSpec::Named(bc.to_string()),
            cluster: ClusterWindow { n, len },
            theta: default_theta(),
            max_levels: default_max_levels(),
            max_ndof: default_max_ndof(),
            buffer: default_buffer(),
            lower_bound_c: default_c(),
            deterministic: false,
            initial_refinements: 0,
            strategy: Strategy::Adaptive,
            bisection: BisectionRule::Newest,
            edge_weight: EdgeWeight::Element,
            eigen_method: EigenMethod::Auto,
            eta_floor: default_eta_floor(),
            angles: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta = {} is not in (0, 1]", self.theta)));
        }
        if self.cluster.len < 1 {
            return Err(Error::Config("the cluster needs N >= 1".into()));
        }
        if self.buffer < 2 {
            return Err(Error::Config("buffer must be at least 2".into()));
        }
        if !(self.lower_bound_c >= 0.0) {
            return Err(Error::Config("C must be non-negative".into()));
        }
        self.bc.parts(self.geometry)?;
        Ok(())
    }

    pub fn initial_mesh(&self) -> Result<Triangulation> {
        let parts = self.bc.parts(self.geometry)?;
        let mut mesh = match &self.mesh_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Triangulation::from_json(&text)?
            }
            None => self.geometry.build(&parts)?,
        };
        for _ in 0..self.initial_refinements {
            mesh = uniform_refine(&mesh);
        }
        Ok(mesh)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub ndof: usize,
    pub ntri: usize,
    pub h_max: f64,
    pub eta2: f64,
    pub marked: usize,
    pub sep_mj: f64,
    pub sin_angle: Option<f64>,
    pub wall_s: f64,
    pub eigenvalues: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    pub mesh_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfemTrace {
    pub cluster: ClusterWindow,
    pub levels: Vec<LevelRecord>,
}

/// Fixed leading columns of a trace file; `lambda_j` and `lower_j` follow for each `j` in `J`.
pub const TRACE_COLUMNS: [&str; 9] = ["level", "ndof", "ntri", "h_max", "eta2", "marked", "sep_mj", "sin_angle", "wall_s"];

impl AfemTrace {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = TRACE_COLUMNS.iter().map(|s| s.to_string()).collect();
        let js = self.cluster.n + 1..=self.cluster.n + self.cluster.len;
        h.extend(js.clone().map(|j| format!("lambda_{j}")));
        h.extend(js.map(|j| format!("lower_{j}")));
        h
    }

    /// Numbers use the shortest decimal form that reads back to the same value.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        for r in &self.levels {
            let mut row = vec![
                r.level.to_string(),
                r.ndof.to_string(),
                r.ntri.to_string(),
                format!("{:?}", r.h_max),
                format!("{:?}", r.eta2),
                r.marked.to_string(),
                format!("{:?}", r.sep_mj),
                r.sin_angle.map(|s| format!("{s:?}")).unwrap_or_default(),
                format!("{:?}", r.wall_s),
            ];
            row.extend(r.eigenvalues.iter().map(|v| format!("{v:?}")));
            row.extend(r.lower_bounds.iter().map(|v| format!("{v:?}")));
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn ndofs(&self) -> Vec<f64> {
        self.levels.iter().map(|r| r.ndof as f64).collect()
    }

    pub fn eta2(&self) -> Vec<f64> {
        self.levels.iter().map(|r| r.eta2).collect()
    }

    /// `lambda_{n+1+k}` per level.
    pub fn eigenvalue(&self, k: usize) -> Vec<f64> {
        self.levels.iter().map(|r| r.eigenvalues[k]).collect()
    }
}

/// What the loop hands to an observer after each Estimate/Mark step.
pub struct LevelData<'a> {
    pub level: usize,
    pub space: &'a MorleySpace,
    pub cluster: &'a ClusterSolution,
    pub estimator: &'a EstimatorField,
    pub marks: &'a MarkSet,
}

pub struct AfemOutcome {
    pub trace: AfemTrace,
    pub space: MorleySpace,
    pub cluster: ClusterSolution,
}

pub fn run_afem(config: &AfemConfig) -> Result<AfemOutcome> {
    run_afem_with(config, |_| Ok(()))
}

/// Eigenpairs of the discrete problem on one mesh: all computed pairs
/// (cluster plus buffer) and the separation report.
pub fn solve_level(space: &MorleySpace, n: usize, len: usize, buffer: usize, method: EigenMethod) -> Result<(ClusterSolution, f64)> {
    if space.ndof() < n + len {
        return Err(Error::Dimension(format!(
            "the space has {} unknowns, fewer than the {} eigenpairs the cluster needs",
            space.ndof(),
            n + len
        )));
    }
    let count = (n + len + buffer).min(space.ndof());
    let all = solve_gevp(&assemble_stiffness(space), &assemble_mass(space), count, method)?;
    let sep = separation(&all.eigenvalues, n, len)?;
    let m_j = if sep.truncated { f64::NAN } else { sep.m_j };
    Ok((all.window(n, len)?, m_j))
}

pub fn run_afem_with(config: &AfemConfig, mut observe: impl FnMut(&LevelData) -> Result<()>) -> Result<AfemOutcome> {
    config.validate()?;
    let ClusterWindow { n, len } = config.cluster;
    let mut mesh = config.initial_mesh()?;
    let mut levels = Vec::new();
    let mut history: Vec<(Triangulation, Vec<BrokenFunction>)> = Vec::new();
    let mut level = 0;
    loop {
        let start = Instant::now();
        let space = MorleySpace::new(mesh)?;
        let (cluster, m_j) = solve_level(&space, n, len, config.buffer, config.eigen_method)?;
        let field = estimate(&space, &cluster, config.edge_weight)?;
        let h_max = space.mesh().h_max();
        let stop = level >= config.max_levels || space.ndof() >= config.max_ndof || field.total < config.eta_floor;
        let marks = match (stop, config.strategy) {
            (true, _) => MarkSet::new(),
            (false, Strategy::Adaptive) => dorfler_mark(&field, config.theta)?,
            (false, Strategy::Uniform) => MarkSet::all(space.mesh()),
        };
        let wall = if config.deterministic { 0.0 } else { start.elapsed().as_secs_f64() };
        levels.push(LevelRecord {
            level,
            ndof: space.ndof(),
            ntri: space.mesh().num_triangles(),
            h_max,
            eta2: field.total,
            marked: marks.len(),
            sep_mj: m_j,
            sin_angle: None,
            wall_s: wall,
            eigenvalues: cluster.eigenvalues.clone(),
            lower_bounds: cluster.eigenvalues.iter().map(|&l| lower_bound(l, h_max, config.lower_bound_c)).collect(),
            mesh_hash: space.mesh().fingerprint(),
        });
        observe(&LevelData { level, space: &space, cluster: &cluster, estimator: &field, marks: &marks })?;
        if config.angles {
            history.push((space.mesh().clone(), cluster.vectors.iter().map(|v| space.to_broken(v)).collect()));
        }
        if stop {
            let mut trace = AfemTrace { cluster: config.cluster, levels };
            if config.angles {
                let fine = space.mesh();
                let reference = history.last().unwrap().1.clone();
                for (record, (m, fs)) in trace.levels.iter_mut().zip(&history) {
                    let prolonged = fs.iter().map(|f| f.prolong(m, fine)).collect::<Result<Vec<_>>>()?;
                    record.sin_angle = Some(principal_angle_nc(&reference, &prolonged, fine)?);
                }
            }
            return Ok(AfemOutcome { trace, space, cluster });
        }
        mesh = match config.strategy {
            Strategy::Adaptive => space.mesh().refine(&marks, config.bisection),
            Strategy::Uniform => uniform_refine(space.mesh()),
        };
        level += 1;
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("a slope needs at least two points".into()));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("rates need positive quantities".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all abscissae coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Slope of `log q` against `log(ndof - ndof_0 + 1)` over the last half of the levels.
pub fn convergence_rate(ndof: &[f64], quantity: &[f64]) -> Result<f64> {
    if ndof.len() != quantity.len() || ndof.len() < 4 {
        return Err(Error::InvalidArgument("a rate needs at least four levels".into()));
    }
    convergence_rate_last(ndof, quantity, ndof.len().div_ceil(2))
}

/// As [`convergence_rate`] over the last `count` levels.
pub fn convergence_rate_last(ndof: &[f64], quantity: &[f64], count: usize) -> Result<f64> {
    if count > ndof.len() || ndof.len() != quantity.len() {
        return Err(Error::InvalidArgument(format!("{count} levels requested from a trace of {}", ndof.len())));
    }
    let n0 = ndof[0];
    let start = ndof.len() - count;
    let x: Vec<f64> = ndof[start..].iter().map(|d| d - n0 + 1.0).collect();
    fit_slope(&x, &quantity[start..])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: f64,
    /// Observed ratio of successive differences.
    pub ratio: f64,
    pub uncertainty: f64,
    /// False when the sequence is not monotone or does not contract.
    pub reliable: bool,
}

/// Aitken/Richardson limit from the last three terms, with the assumed
/// order taken from the observed ratio of differences.
pub fn richardson(seq: &[f64]) -> Result<Extrapolation> {
    if seq.len() < 3 {
        return Err(Error::InvalidArgument("extrapolation needs three terms".into()));
    }
    let k = seq.len() - 1;
    let (d1, d2) = (seq[k - 1] - seq[k - 2], seq[k] - seq[k - 1]);
    let monotone = seq.windows(2).all(|w| w[1] <= w[0]) || seq.windows(2).all(|w| w[1] >= w[0]);
    if d2 == 0.0 {
        return Ok(Extrapolation { limit: seq[k], ratio: f64::INFINITY, uncertainty: 0.0, reliable: monotone });
    }
    let ratio = d1 / d2;
    let correction = d2 / (ratio - 1.0);
    let limit = seq[k] + correction;
    let uncertainty = if seq.len() >= 4 {
        (limit - richardson(&seq[..k])?.limit).abs()
    } else {
        correction.abs()
    };
    Ok(Extrapolation { limit, ratio, uncertainty, reliable: monotone && ratio > 1.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEigenvalues {
    pub ndof: Vec<usize>,
    pub h_max: Vec<f64>,
    /// One sequence per cluster index, over the uniform levels.
    pub sequences: Vec<Vec<f64>>,
    pub limits: Vec<Extrapolation>,
}

/// Uniform refinement of the preset until a level has at least `target_ndof`
/// unknowns, with extrapolated limits of each eigenvalue in the cluster.
pub fn reference_eigenvalues(
    geometry: Geometry,
    parts: &[BoundaryPart],
    cluster: ClusterWindow,
    target_ndof: usize,
    method: EigenMethod,
) -> Result<ReferenceEigenvalues> {
    let mut mesh = geometry.build(parts)?;
    let mut out = ReferenceEigenvalues { ndof: Vec::new(), h_max: Vec::new(), sequences: vec![Vec::new(); cluster.len], limits: Vec::new() };
    loop {
        let space = MorleySpace::new(mesh)?;
        if space.ndof() >= cluster.n + cluster.len {
            let (c, _) = solve_level(&space, cluster.n, cluster.len, 2, method)?;
            out.ndof.push(space.ndof());
            out.h_max.push(space.mesh().h_max());
            for (s, l) in out.sequences.iter_mut().zip(&c.eigenvalues) {
                s.push(*l);
            }
        }
        if space.ndof() >= target_ndof && out.ndof.len() >= 3 {
            break;
        }
        mesh = uniform_refine(space.mesh());
    }
    out.limits = out.sequences.iter().map(|s| richardson(s)).collect::<Result<_>>()?;
    Ok(out)
}

/// `sin` of the largest energy-product angle between two cluster spaces,
/// given as coefficient vectors on a mesh and on one of its refinements.
pub fn angle_to_reference(
    level_space: &MorleySpace,
    level_vectors: &[Vec<f64>],
    reference_space: &MorleySpace,
    reference_vectors: &[Vec<f64>],
) -> Result<f64> {
    if level_vectors.len() != reference_vectors.len() {
        return Err(Error::Dimension(format!(
            "cluster dimensions differ ({} vs {})",
            level_vectors.len(),
            reference_vectors.len()
        )));
    }
    let fine = reference_space.mesh();
    let x = level_vectors.iter().map(|v| level_space.prolong(v, fine)).collect::<Result<Vec<_>>>()?;
    let y: Vec<BrokenFunction> = reference_vectors.iter().map(|v| reference_space.to_broken(v)).collect();
    principal_angle_nc(&y, &x, fine)
}

/// A trace file read back as named numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl TraceTable {
    pub fn read(r: impl Read) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    if s.is_empty() {
                        Ok(None)
                    } else {
                        s.parse::<f64>().map(Some).map_err(|_| Error::InvalidArgument(format!("non-numeric trace entry '{s}'")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(TraceTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidArgument(format!("trace has no column '{name}'")))?;
        self.rows
            .iter()
            .map(|r| r.get(k).copied().flatten().ok_or_else(|| Error::InvalidArgument(format!("missing value in column '{name}'"))))
            .collect()
    }

    /// Name of the first `lambda_j` column.
    pub fn first_lambda(&self) -> Result<String> {
        self.header
            .iter()
            .find(|h| h.starts_with("lambda_"))
            .cloned()
            .ok_or_else(|| Error::InvalidArgument("trace has no eigenvalue column".into()))
    }
}
