//! Command-line front end: `mine`, `augment`, `build-dataset`, `evaluate`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_workspace, AugmentConfig};
use crate::dataset::{self, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::eval::{self, CoverageBackend, ScoreOptions};
use crate::fuzz::FuzzOptions;
use crate::miner::{mine_pairs, FocalTestPair};
use crate::pool::default_jobs;
use crate::project::{discover_packages, scan_workspace};
use crate::select::SelectionConfig;
use crate::toolchain::Toolchain;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_ENV: i32 = 2;

pub const MINED_FILE: &str = "mined.jsonl";
pub const AUGMENTED_FILE: &str = "augmented.jsonl";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const CONFIG_DUMP: &str = "config.json";

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub workspace_root: PathBuf,
    pub n_samples: usize,
    pub max_len: usize,
    pub timeout_secs: u64,
    pub rng_seed: u64,
    pub token_budget: usize,
    pub output_dir: PathBuf,
    pub jobs: usize,
    pub sink_limit: usize,
    pub verify_compile: bool,
    pub k: usize,
    pub test_timeout_secs: u64,
    pub coverage: CoverageBackend,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fuzz = FuzzOptions::default();
        let sel = SelectionConfig::default();
        RunConfig {
            workspace_root: PathBuf::from("."),
            n_samples: sel.n_samples,
            max_len: sel.max_len,
            timeout_secs: fuzz.timeout.as_secs(),
            rng_seed: sel.rng_seed,
            token_budget: DEFAULT_BUDGET,
            output_dir: PathBuf::from("augtest-out"),
            jobs: default_jobs(),
            sink_limit: fuzz.sink_limit,
            verify_compile: false,
            k: eval::scoring::DEFAULT_K,
            test_timeout_secs: eval::scoring::DEFAULT_TEST_TIMEOUT.as_secs(),
            coverage: CoverageBackend::default(),
        }
    }
}

impl RunConfig {
    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            n_samples: self.n_samples,
            max_len: self.max_len,
            rng_seed: self.rng_seed,
        }
    }

    pub fn augment(&self) -> AugmentConfig {
        AugmentConfig {
            selection: self.selection(),
            fuzz: FuzzOptions {
                timeout: Duration::from_secs(self.timeout_secs),
                sink_limit: self.sink_limit,
            },
            jobs: self.jobs,
            verify_compile: self.verify_compile,
        }
    }

    pub fn scoring(&self) -> ScoreOptions {
        ScoreOptions {
            k: self.k,
            test_timeout: Duration::from_secs(self.test_timeout_secs),
            coverage: self.coverage,
        }
    }

    fn validate(&self) -> Result<()> {
        self.selection().validate()?;
        if self.token_budget == 0 {
            return Err(Error::Config("token_budget must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Config file contents; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    workspace_root: Option<PathBuf>,
    n_samples: Option<usize>,
    max_len: Option<usize>,
    timeout_secs: Option<u64>,
    rng_seed: Option<u64>,
    token_budget: Option<usize>,
    output_dir: Option<PathBuf>,
    jobs: Option<usize>,
    sink_limit: Option<usize>,
    verify_compile: Option<bool>,
    k: Option<usize>,
    test_timeout_secs: Option<u64>,
    coverage: Option<CoverageBackend>,
}

/// Shared flags. Each may also come from an `AUGTEST_*` variable.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with RunConfig keys.
    #[arg(long, env = "AUGTEST_CONFIG", global = true)]
    config: Option<PathBuf>,
    #[arg(long, env = "AUGTEST_WORKSPACE_ROOT", global = true)]
    workspace_root: Option<PathBuf>,
    /// Seeds kept per fuzz target.
    #[arg(long, env = "AUGTEST_N_SAMPLES", global = true)]
    n_samples: Option<usize>,
    /// Seeds must be shorter than this many bytes.
    #[arg(long, env = "AUGTEST_MAX_LEN", global = true)]
    max_len: Option<usize>,
    /// Fuzzing time per target.
    #[arg(long, env = "AUGTEST_TIMEOUT_SECS", global = true)]
    timeout_secs: Option<u64>,
    #[arg(long, env = "AUGTEST_RNG_SEED", global = true)]
    rng_seed: Option<u64>,
    #[arg(long, env = "AUGTEST_TOKEN_BUDGET", global = true)]
    token_budget: Option<usize>,
    #[arg(long, env = "AUGTEST_OUTPUT_DIR", global = true)]
    output_dir: Option<PathBuf>,
    /// Worker count for fuzzing and scoring.
    #[arg(long, env = "AUGTEST_JOBS", global = true)]
    jobs: Option<usize>,
    #[arg(long, env = "AUGTEST_SINK_LIMIT", global = true)]
    sink_limit: Option<usize>,
    /// Compile the generated tests inside the instrumented copy.
    #[arg(long, env = "AUGTEST_VERIFY_COMPILE", global = true)]
    verify_compile: Option<bool>,
    /// Assertions scored per candidate.
    #[arg(long, env = "AUGTEST_K", global = true)]
    k: Option<usize>,
    #[arg(long, env = "AUGTEST_TEST_TIMEOUT_SECS", global = true)]
    test_timeout_secs: Option<u64>,
    /// `llvm-cov` or `grcov`.
    #[arg(long, env = "AUGTEST_COVERAGE", global = true)]
    coverage: Option<CoverageBackend>,
}

impl ConfigArgs {
    /// Flags and environment over the config file over defaults.
    pub fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        let d = RunConfig::default();
        macro_rules! pick {
            ($f:ident) => {
                self.$f.clone().or(file.$f).unwrap_or(d.$f)
            };
        }
        let cfg = RunConfig {
            workspace_root: pick!(workspace_root),
            n_samples: pick!(n_samples),
            max_len: pick!(max_len),
            timeout_secs: pick!(timeout_secs),
            rng_seed: pick!(rng_seed),
            token_budget: pick!(token_budget),
            output_dir: pick!(output_dir),
            jobs: pick!(jobs).max(1),
            sink_limit: pick!(sink_limit),
            verify_compile: pick!(verify_compile),
            k: pick!(k),
            test_timeout_secs: pick!(test_timeout_secs),
            coverage: pick!(coverage),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(name = "augtest", version, about = "Unit-test training data from fuzz targets")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract existing unit tests and pair them with focal functions.
    Mine,
    /// Fuzz every target and turn selected seeds into unit tests.
    Augment,
    /// Merge mined and augmented pairs into the dataset.
    BuildDataset {
        /// Defaults to `<output_dir>/mined.jsonl`.
        #[arg(long)]
        mined: Option<PathBuf>,
        /// Defaults to `<output_dir>/augmented.jsonl`.
        #[arg(long)]
        augmented: Option<PathBuf>,
    },
    /// Score generated tests against benchmark tasks.
    Evaluate {
        /// Task file or directory of task files.
        #[arg(long)]
        tasks: PathBuf,
        /// JSON lines of `{task_id, completion}`.
        #[arg(long)]
        candidates: PathBuf,
    },
}

/// Writes via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn write_pairs(path: &Path, pairs: &[FocalTestPair]) -> Result<()> {
    let mut buf = Vec::new();
    for p in pairs {
        serde_json::to_writer(&mut buf, p)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

pub fn read_pairs(path: &Path) -> Result<Vec<FocalTestPair>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

fn repo_name(root: &Path) -> String {
    root.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "repo".into())
}

fn canonical_root(cfg: &RunConfig) -> Result<PathBuf> {
    let root = &cfg.workspace_root;
    root.canonicalize().map_err(|_| Error::MissingManifest(root.clone()))
}

pub fn cmd_mine(cfg: &RunConfig) -> Result<usize> {
    let root = canonical_root(cfg)?;
    let repo = repo_name(&root);
    let mut pairs = Vec::new();
    let mut summary = serde_json::Map::new();
    let (mut tests, mut calls, mut diagnostics) = (0, 0, Vec::new());
    for pkg in discover_packages(&root)? {
        let ws = scan_workspace(&pkg)?;
        let report = mine_pairs(&ws);
        tests += report.tests_extracted;
        calls += report.focal_calls_seen;
        diagnostics.extend(ws.diagnostics.iter().cloned());
        diagnostics.extend(report.diagnostics);
        pairs.extend(report.pairs.into_iter().map(|mut p| {
            p.repo_id = repo.clone();
            p
        }));
    }
    summary.insert("tests_extracted".into(), tests.into());
    summary.insert("focal_calls_seen".into(), calls.into());
    summary.insert("pairs_formed".into(), pairs.len().into());
    summary.insert("diagnostics".into(), diagnostics.into());
    write_pairs(&cfg.output_dir.join(MINED_FILE), &pairs)?;
    write_json(&cfg.output_dir.join("mine-report.json"), &summary)?;
    info!("mined {} pairs from {tests} tests", pairs.len());
    Ok(pairs.len())
}

pub fn cmd_augment(cfg: &RunConfig, tc: &Toolchain) -> Result<usize> {
    let root = canonical_root(cfg)?;
    let repo = repo_name(&root);
    let work = cfg.output_dir.join("work");
    let acfg = cfg.augment();
    let mut pairs = Vec::new();
    let mut reports = Vec::new();
    for pkg in discover_packages(&root)? {
        let ws = scan_workspace(&pkg)?;
        let report = augment_workspace(&ws, Some(&root), &work, &acfg, tc)?;
        pairs.extend(report.pairs.iter().cloned().map(|mut p| {
            p.repo_id = repo.clone();
            p
        }));
        reports.push(serde_json::json!({
            "package": ws.crate_name,
            "targets": report.targets,
            "tests": report.tests.len(),
            "tests_compile": report.tests_compile,
            "diagnostics": report.diagnostics,
        }));
    }
    write_pairs(&cfg.output_dir.join(AUGMENTED_FILE), &pairs)?;
    write_json(&cfg.output_dir.join("augment-report.json"), &reports)?;
    info!("augmented {} pairs", pairs.len());
    Ok(pairs.len())
}

pub fn cmd_build(cfg: &RunConfig, mined: &Path, augmented: &Path) -> Result<dataset::CorpusStats> {
    let mut pairs = read_pairs(mined)?;
    pairs.extend(read_pairs(augmented)?);
    let (records, stats) = dataset::build(&pairs, cfg.token_budget, None);
    // Dataset and sidecar are produced in a scratch directory and renamed
    // into place together.
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let scratch = tempfile::TempDir::new_in(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let tmp = scratch.path().join(DATASET_FILE);
    dataset::serialize_with_stats(&records, &stats, &tmp)?;
    let out = cfg.output_dir.join(DATASET_FILE);
    for (from, to) in [(dataset::sidecar_path(&tmp), dataset::sidecar_path(&out)), (tmp, out)] {
        fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
    }
    Ok(stats)
}

pub fn cmd_eval(cfg: &RunConfig, tasks: &Path, candidates: &Path, tc: &Toolchain) -> Result<eval::EvalReport> {
    let tasks = eval::load_tasks(tasks)?;
    let completions = eval::load_completions(candidates)?;
    let report = eval::evaluate(&tasks, &completions, &cfg.scoring(), cfg.jobs, tc)?;
    write_json(&cfg.output_dir.join("eval-report.json"), &report)?;
    write_atomic(&cfg.output_dir.join("eval-report.txt"), report.table().as_bytes())?;
    print!("{}", report.table());
    Ok(report)
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_environmental() {
        EXIT_ENV
    } else {
        EXIT_USER
    }
}

fn dispatch(cli: Cli, tc: &Toolchain) -> Result<()> {
    let cfg = cli.config.resolve()?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    write_json(&cfg.output_dir.join(CONFIG_DUMP), &cfg)?;
    match cli.command {
        Command::Mine => cmd_mine(&cfg).map(drop),
        Command::Augment => cmd_augment(&cfg, tc).map(drop),
        Command::BuildDataset { mined, augmented } => {
            let mined = mined.unwrap_or_else(|| cfg.output_dir.join(MINED_FILE));
            let augmented = augmented.unwrap_or_else(|| cfg.output_dir.join(AUGMENTED_FILE));
            cmd_build(&cfg, &mined, &augmented).map(drop)
        }
        Command::Evaluate { tasks, candidates } => cmd_eval(&cfg, &tasks, &candidates, tc).map(drop),
    }
}

/// Parses `args` and runs the chosen subcommand; returns the exit code.
pub fn run<I, T>(args: I, tc: &Toolchain) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USER } else { EXIT_OK };
        }
    };
    match dispatch(cli, tc) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
