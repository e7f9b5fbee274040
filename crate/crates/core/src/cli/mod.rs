//! Command drivers behind the `shapelab` binary: run configuration, result
//! records with provenance, the seeded corpus and one function per subcommand.
//!
//! Every command writes its outputs into `RunConfig::out` and returns a
//! [`Outcome`]; the binary maps outcomes and errors to exit codes
//! ([`EXIT_SUCCESS`], [`EXIT_CHECK_FAILED`], [`EXIT_USAGE`]).

mod commands;
pub mod corpus;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ShapeError};
use crate::fields::SolverOptions;
use crate::geometry::io::{read_document, Document};
use crate::geometry::{rasterize_star, GridDomain, GridSpec, StarBoundary};
use crate::riesz::kernel::DEFAULT_ORDER;
use crate::riesz::RieszKernelTable;

pub use commands::{
    cmd_eval, cmd_necklace, cmd_optimize, cmd_surgery, cmd_sweep, parse_mode_spec, EvalArgs,
    NecklaceArgs, NecklaceOutput, OptimizeArgs, OptimizeSummary, StartShape, SurgeryArgs,
    SurgerySummary, SweepArgs, SweepRow, SweepSummary,
};
pub use corpus::{cmd_gen_corpus, cmd_verify, Check, CorpusArgs, Manifest, VerifyRow, VerifySummary};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Exit code for an error: input and usage problems give 2, failures while
/// computing give 1.
pub fn exit_code(e: &ShapeError) -> i32 {
    match e {
        ShapeError::Parse { .. }
        | ShapeError::Io(_)
        | ShapeError::Domain(_)
        | ShapeError::SpecMismatch(_)
        | ShapeError::Precondition(_)
        | ShapeError::Construction(_)
        | ShapeError::Regularity(_) => EXIT_USAGE,
        _ => EXIT_CHECK_FAILED,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Settings shared by every subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Cells per axis; `None` lets each command pick its default.
    pub grid: Option<usize>,
    pub tol: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    /// Descent iteration cap.
    pub max_iter: Option<usize>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: None,
            tol: 1e-8,
            seed: 0,
            out: PathBuf::from("out"),
            threads: None,
            max_iter: None,
            format: OutputFormat::Json,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(ShapeError::Domain(format!("--tol must lie in (0, 1), got {}", self.tol)));
        }
        if let Some(g) = self.grid {
            if g < 8 {
                return Err(ShapeError::Domain(format!("--grid must be at least 8, got {g}")));
            }
        }
        if self.threads == Some(0) {
            return Err(ShapeError::Domain("--threads must be positive".into()));
        }
        Ok(())
    }

    pub fn cells_or(&self, default: usize) -> usize {
        self.grid.unwrap_or(default)
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions::with_tol(self.tol)
    }

    pub fn output(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }
}

/// Where a number came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub code_version: String,
    pub dimension: usize,
    pub cells_per_axis: usize,
    pub spacing: f64,
    pub origin: Vec<f64>,
    pub tol: f64,
    pub seed: u64,
    /// Name of the Riesz kernel table used, when a Riesz energy was computed.
    pub kernel_table: Option<String>,
}

impl Provenance {
    pub fn new(spec: &GridSpec, cfg: &RunConfig, alpha: Option<f64>) -> Self {
        Self {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            dimension: spec.dim(),
            cells_per_axis: spec.cells_per_axis(),
            spacing: spec.spacing(),
            origin: spec.origin()[..spec.dim()].to_vec(),
            tol: cfg.tol,
            seed: cfg.seed,
            kernel_table: alpha.map(|a| kernel_table_id(spec, a)),
        }
    }
}

pub fn kernel_table_id(spec: &GridSpec, alpha: f64) -> String {
    RieszKernelTable::cache_file_name(spec, alpha, DEFAULT_ORDER)
        .trim_end_matches(".json")
        .to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord<T> {
    pub experiment: String,
    /// SHA-256 of the input document, or of the generating configuration.
    pub input_hash: String,
    pub payload: T,
    pub provenance: Provenance,
}

impl<T: Serialize + for<'de> Deserialize<'de>> ResultRecord<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ShapeError::parse("record", e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, (self.to_json() + "\n").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// A loaded input: the domain plus the hash of the file it came from.
#[derive(Clone, Debug)]
pub struct LoadedInput {
    pub domain: GridDomain,
    pub star: Option<StarBoundary>,
    pub hash: String,
}

/// Square planar box that holds the star with a margin of a quarter radius.
pub fn star_grid(star: &StarBoundary, cells: usize) -> Result<GridSpec> {
    let r = star.max_radius();
    let c = star.center;
    let side = 2.5 * r + 2.0 * c[0].abs().max(c[1].abs());
    GridSpec::centered(2, cells, side)
}

/// Domain documents are used as stored; star documents are rasterized on
/// `cells` per axis.
pub fn load_input(path: &Path, cells: usize) -> Result<LoadedInput> {
    let bytes = std::fs::read(path)?;
    let hash = sha256_hex(&bytes);
    match read_document(path)? {
        Document::Domain(d) => Ok(LoadedInput {
            domain: d.domain,
            star: None,
            hash,
        }),
        Document::Star(s) => {
            let spec = star_grid(&s, cells)?;
            Ok(LoadedInput {
                domain: rasterize_star(&s, &spec)?,
                star: Some(s),
                hash,
            })
        }
    }
}

/// Installs the global rayon pool once; later calls are ignored.
pub fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialized");
        }
    }
}

/// Result of a command as seen by the binary.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub checks_ok: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.checks_ok {
            EXIT_SUCCESS
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{evaluate_all, PenaltyParams};
    use crate::geometry::{make_ball, BallSpec};

    #[test]
    fn record_round_trip() {
        let spec = GridSpec::centered(2, 48, 1.4).unwrap();
        let dom = make_ball(&spec, &BallSpec::with_measure(2, [0.0; 3], 1.0)).unwrap();
        let rep = evaluate_all(&dom, &PenaltyParams::unconstrained(0.1, 1.5).unwrap(), true).unwrap();
        let rec = ResultRecord {
            experiment: "eval".into(),
            input_hash: sha256_hex(b"x"),
            payload: rep,
            provenance: Provenance::new(&spec, &RunConfig::default(), Some(1.5)),
        };
        let back = ResultRecord::from_json(&rec.to_json()).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&ShapeError::parse("rows", "bad")), EXIT_USAGE);
        assert_eq!(exit_code(&ShapeError::Domain("eps".into())), EXIT_USAGE);
        assert_eq!(
            exit_code(&ShapeError::Solver { iterations: 3, residual: 1.0 }),
            EXIT_CHECK_FAILED
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
