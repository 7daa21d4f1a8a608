//! Command-line driver: `run`, `rates`, `reference`, `helmholtz-audit` and
//! `mesh-export`.
//!
//! Exit status: 0 success, 2 usage or input errors, 3 numerical failure,
//! 4 failed identity audit. `PLATE_AFEM_THREADS` bounds the number of
//! worker threads used by element loops.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::afem::{
    convergence_rate, reference_eigenvalues, richardson, run_afem_with, AfemConfig, ClusterWindow, TraceTable,
};
use crate::eigen::EigenMethod;
use crate::error::{Error, Result};
use crate::helmholtz::{audit, AuditReport};
use crate::mesh::{uniform_refine, Geometry};
use crate::space::MorleySpace;

#[derive(Debug, Parser)]
#[command(name = "plate-afem", version, about = "Adaptive Morley finite elements for plate eigenvalue clusters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Eta2,
    #[value(name = "lambda_err", alias = "lambda-err")]
    LambdaErr,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the adaptive loop and write the per-level trace.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory receiving the mesh and estimator of every level.
        #[arg(long)]
        dump_mesh: Option<PathBuf>,
        /// Zero wall times so that repeated runs give identical files.
        #[arg(long)]
        deterministic: bool,
        /// Ignore unknown configuration keys instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Empirical convergence rate of a trace over its last half.
    Rates {
        trace: PathBuf,
        #[arg(long, value_enum)]
        quantity: Quantity,
        /// Limit used for `lambda_err`; extrapolated from the trace if absent.
        #[arg(long)]
        reference: Option<f64>,
    },
    /// Extrapolated eigenvalues from uniform refinement.
    Reference {
        #[arg(long)]
        geometry: String,
        #[arg(long)]
        bc: String,
        /// Cluster as a 1-based index `j` or range `j-k`.
        #[arg(long = "J")]
        cluster: String,
        #[arg(long, default_value_t = 20_000)]
        ndof: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the Euler formulae and the dimension identity of the discrete
    /// Helmholtz decomposition, and decompose random tensor fields.
    HelmholtzAudit {
        #[arg(long, default_value = "square")]
        geometry: String,
        /// A named configuration; all of clamped, simply_supported and mixed if absent.
        #[arg(long)]
        bc: Option<String>,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a preset mesh as a JSON document.
    MeshExport {
        #[arg(long)]
        geometry: String,
        #[arg(long)]
        bc: String,
        #[arg(long, default_value_t = 0)]
        refine: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Echo of a run for provenance next to its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: AfemConfig,
    pub version: String,
    pub mesh_hashes: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_s: f64,
}

/// Parses a configuration document; unknown keys are errors when `strict`.
pub fn parse_config(text: &str, strict: bool) -> Result<AfemConfig> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if !strict {
        let known = serde_json::to_value(AfemConfig::new(Geometry::Square, "clamped", 0, 1))?;
        let known = known.as_object().expect("configuration serialises to an object");
        if let Some(obj) = value.as_object_mut() {
            obj.retain(|k, _| k == "mesh_file" || known.contains_key(k));
        }
    }
    let config: AfemConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

fn parse_geometry(s: &str) -> Result<Geometry> {
    Geometry::parse(s)
}

fn parse_cluster(s: &str) -> Result<ClusterWindow> {
    let bad = || Error::InvalidArgument(format!("cluster '{s}' is not an index j >= 1 or a range j-k"));
    let (a, b) = match s.split_once('-') {
        Some((a, b)) => (a.trim().parse::<usize>().map_err(|_| bad())?, b.trim().parse::<usize>().map_err(|_| bad())?),
        None => {
            let j = s.trim().parse::<usize>().map_err(|_| bad())?;
            (j, j)
        }
    };
    if a == 0 || b < a {
        return Err(bad());
    }
    Ok(ClusterWindow { n: a - 1, len: b - a + 1 })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(config: &Path, out: &Path, dump: Option<&Path>, deterministic: bool, lenient: bool) -> Result<()> {
    let start = Instant::now();
    let text = fs::read_to_string(config)?;
    let mut cfg = parse_config(&text, !lenient)?;
    cfg.deterministic |= deterministic;
    let mut outputs = vec![out.display().to_string()];
    if let Some(dir) = dump {
        fs::create_dir_all(dir)?;
    }
    let outcome = run_afem_with(&cfg, |level| {
        if let Some(dir) = dump {
            let mesh_path = dir.join(format!("mesh_{:03}.json", level.level));
            write_file(&mesh_path, level.space.mesh().to_json().as_bytes())?;
            let eta_path = dir.join(format!("eta_{:03}.csv", level.level));
            let mut buf = Vec::new();
            level.estimator.write_csv(level.space.mesh(), &mut buf)?;
            write_file(&eta_path, &buf)?;
            outputs.push(mesh_path.display().to_string());
            outputs.push(eta_path.display().to_string());
        }
        Ok(())
    })?;
    let mut buf = Vec::new();
    outcome.trace.write_csv(&mut buf)?;
    write_file(out, &buf)?;
    let manifest_path = manifest_path(out);
    let manifest = RunManifest {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        mesh_hashes: outcome.trace.levels.iter().map(|l| l.mesh_hash.clone()).collect(),
        outputs,
        wall_s: if cfg.deterministic { 0.0 } else { start.elapsed().as_secs_f64() },
    };
    write_file(&manifest_path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    let last = outcome.trace.levels.last().expect("the loop records level 0");
    eprintln!(
        "{} levels, final ndof {}, eta2 {:e}, lambda {:?}",
        outcome.trace.levels.len(),
        last.ndof,
        last.eta2,
        last.eigenvalues
    );
    Ok(())
}

/// `trace.csv` -> `trace.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn rates(trace: &Path, quantity: Quantity, reference: Option<f64>) -> Result<()> {
    let table = TraceTable::read(File::open(trace)?)?;
    let ndof = table.column("ndof")?;
    let values = match quantity {
        Quantity::Eta2 => table.column("eta2")?,
        Quantity::LambdaErr => {
            let lambda = table.column(&table.first_lambda()?)?;
            let limit = match reference {
                Some(r) => r,
                None => {
                    let e = richardson(&lambda)?;
                    if !e.reliable {
                        return Err(Error::InvalidArgument(
                            "eigenvalue sequence is not monotone; pass --reference".into(),
                        ));
                    }
                    e.limit
                }
            };
            lambda.iter().map(|l| (limit - l).abs()).collect()
        }
    };
    let slope = convergence_rate(&ndof, &values)?;
    println!("{slope:?}");
    Ok(())
}

#[derive(Serialize)]
struct ReferenceReport<'a> {
    geometry: &'a str,
    bc: &'a str,
    cluster: ClusterWindow,
    #[serde(flatten)]
    result: &'a crate::afem::ReferenceEigenvalues,
}

fn reference(geometry: &str, bc: &str, cluster: &str, ndof: usize, out: Option<&Path>) -> Result<()> {
    let g = parse_geometry(geometry)?;
    let parts = g.named_bc(bc)?;
    let window = parse_cluster(cluster)?;
    let r = reference_eigenvalues(g, &parts, window, ndof, EigenMethod::Auto)?;
    let report = ReferenceReport { geometry: g.name(), bc, cluster: window, result: &r };
    emit(out, &serde_json::to_string_pretty(&report)?)
}

#[derive(Serialize)]
struct AuditEntry {
    geometry: String,
    bc: String,
    level: usize,
    #[serde(flatten)]
    report: AuditReport,
}

fn helmholtz_audit(geometry: &str, bc: Option<&str>, levels: usize, samples: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let g = parse_geometry(geometry)?;
    let bcs: Vec<&str> = match bc {
        Some(b) => vec![b],
        None => vec!["clamped", "simply_supported", "mixed"],
    };
    let mut entries = Vec::new();
    for b in bcs {
        let mut mesh = g.build(&g.named_bc(b)?)?;
        for level in 0..=levels {
            let space = MorleySpace::new(mesh.clone())?;
            let report = audit(&space, samples, seed)?;
            entries.push(AuditEntry { geometry: g.name().into(), bc: b.into(), level, report });
            mesh = uniform_refine(&mesh);
        }
    }
    emit(out, &serde_json::to_string_pretty(&entries)?)?;
    let failed: Vec<String> = entries
        .iter()
        .filter(|e| !e.report.passed())
        .map(|e| format!("{} {} level {}", e.geometry, e.bc, e.level))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::AuditFailure(failed.join(", ")))
    }
}

fn mesh_export(geometry: &str, bc: &str, refine: usize, out: &Path) -> Result<()> {
    let g = parse_geometry(geometry)?;
    let mut mesh = g.build(&g.named_bc(bc)?)?;
    for _ in 0..refine {
        mesh = uniform_refine(&mesh);
    }
    write_file(out, mesh.to_json().as_bytes())
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, dump_mesh, deterministic, lenient } => {
            run(&config, &out, dump_mesh.as_deref(), deterministic, lenient)
        }
        Command::Rates { trace, quantity, reference } => rates(&trace, quantity, reference),
        Command::Reference { geometry, bc, cluster, ndof, out } => reference(&geometry, &bc, &cluster, ndof, out.as_deref()),
        Command::HelmholtzAudit { geometry, bc, levels, samples, seed, out } => {
            helmholtz_audit(&geometry, bc.as_deref(), levels, samples, seed, out.as_deref())
        }
        Command::MeshExport { geometry, bc, refine, out } => mesh_export(&geometry, &bc, refine, &out),
    }
}

/// Applies `PLATE_AFEM_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("PLATE_AFEM_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("PLATE_AFEM_THREADS='{v}' is not a positive integer")))?;
        // a pool that is already initialised keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let result = configure_threads().and_then(|_| dispatch(cli));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}

/// Buffered file writer creating parent directories.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_arguments() {
        assert_eq!(parse_cluster("1").unwrap(), ClusterWindow { n: 0, len: 1 });
        assert_eq!(parse_cluster("2-3").unwrap(), ClusterWindow { n: 1, len: 2 });
        assert!(parse_cluster("0").is_err());
        assert!(parse_cluster("3-2").is_err());
    }

    #[test]
    fn config_strictness() {
        let doc = r#"{"geometry":"square","bc":"clamped","J":{"n":0,"N":1},"colour":"blue"}"#;
        assert!(matches!(parse_config(doc, true), Err(Error::Config(_))));
        let c = parse_config(doc, false).unwrap();
        assert_eq!(c.theta, 0.5);
        assert!(matches!(
            parse_config(r#"{"geometry":"square","bc":"clamped","J":{"n":0,"N":1},"theta":1.5}"#, true),
            Err(Error::Config(_))
        ));
        assert!(parse_config(r#"{"geometry":"square","bc":"clamped","J":{"n":0,"N":0}}"#, true).is_err());
        assert!(parse_config(r#"{"geometry":"square","bc":"clamped","J":{"n":-1,"N":1}}"#, true).is_err());
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(main_with_args(["plate-afem", "frobnicate"]), 2);
        assert_eq!(main_with_args(["plate-afem", "run", "--config", "/nonexistent/cfg.json", "--out", "/tmp/x.csv"]), 2);
    }
}
