//! Experiment harness: configuration, synthesis, single runs, Monte-Carlo
//! batches and their CSV, JSON and SVG artifacts.
//!
//! Output files, all under the configured `out` directory:
//!
//! | command | files |
//! |---------|-------|
//! | synth   | `qtable.bin`, `synth_report.json` |
//! | run     | `run_<mode>.json`, `run_<mode>.svg`, `audit_<mode>.jsonl` when auditing |
//! | mc      | `mc_<mode>.csv`, `mc_<mode>_summary.json` |
//! | plot    | `run_<mode>.svg` re-rendered from `run_<mode>.json` |

mod config;
mod stats;
mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runtime::{episode_seed, execute_episode, execute_unmodified, Mode, RunConfig, RunRecord, RuntimeError};
use crate::stl::StlError;
use crate::surrogate::{SurrogateError, SurrogateModel};
use crate::synthesis::{synthesize, QTable, SynthesisError, SynthesisReport};
use crate::world::WorldError;

pub use config::{apply_override, load_experiment, Experiment, ExperimentConfig, PlotConfig};
pub use stats::{write_csv, BatchStats};
pub use svg::render_svg;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("no Q-table at {0}; run `synth` first")]
    MissingQTable(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    /// Process exit code: 1 usage, 2 domain, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Domain(_) => 2,
            HarnessError::MissingQTable(_) | HarnessError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for HarnessError {
            fn from(e: $t) -> Self {
                HarnessError::Domain(e.to_string())
            }
        }
    )*};
}
domain_from!(StlError, RuntimeError, SurrogateError);

impl From<WorldError> for HarnessError {
    fn from(e: WorldError) -> Self {
        match e {
            WorldError::Io(source) => HarnessError::io("scene", source),
            other => HarnessError::Domain(other.to_string()),
        }
    }
}

impl From<SynthesisError> for HarnessError {
    fn from(e: SynthesisError) -> Self {
        match e {
            SynthesisError::Io(source) => HarnessError::io("qtable", source),
            SynthesisError::World(w) => w.into(),
            other => HarnessError::Domain(other.to_string()),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// Synthesis report as written to `synth_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub gate: String,
    pub spec: String,
    pub qtable: String,
    #[serde(flatten)]
    pub report: SynthesisReport,
}

pub fn qtable_path(exp: &Experiment) -> PathBuf {
    exp.out_dir().join("qtable.bin")
}

/// Train the policy, apply the gate and write `qtable.bin` and
/// `synth_report.json`.
pub fn cmd_synth(exp: &Experiment) -> Result<SynthSummary, HarnessError> {
    let out = synthesize(&exp.scene, &exp.spec, &exp.config.synthesis)?;
    let path = qtable_path(exp);
    write_file(&path, &out.q.to_bytes())?;
    let summary = SynthSummary {
        gate: if out.report.gate_passed { "pass" } else { "fail" }.into(),
        spec: exp.spec.to_string(),
        qtable: "qtable.bin".into(),
        report: out.report,
    };
    write_json(&exp.out_dir().join("synth_report.json"), &summary)?;
    Ok(summary)
}

/// Load the Q-table written by [`cmd_synth`].
pub fn load_qtable(exp: &Experiment) -> Result<QTable, HarnessError> {
    let path = qtable_path(exp);
    if !path.exists() {
        return Err(HarnessError::MissingQTable(path));
    }
    Ok(QTable::load(&path)?)
}

/// Everything an episode needs, loaded once per command.
pub struct Runner<'a> {
    exp: &'a Experiment,
    q: Option<QTable>,
    fm: SurrogateModel,
}

impl<'a> Runner<'a> {
    pub fn new(exp: &'a Experiment, mode: Mode) -> Result<Self, HarnessError> {
        let q = match mode {
            Mode::Shielded => Some(load_qtable(exp)?),
            Mode::Unmodified => None,
        };
        let fm = SurrogateModel::new(&exp.scene, &exp.config.instruction, &exp.config.surrogate)?;
        Ok(Self { exp, q, fm })
    }

    pub fn run(&self, seed: u64) -> Result<RunRecord, HarnessError> {
        let cfg = RunConfig {
            seed,
            ..self.exp.config.run.clone()
        };
        let (scene, spec) = (&self.exp.scene, &self.exp.spec);
        Ok(match &self.q {
            Some(q) => execute_episode(scene, spec, q, &self.fm, &cfg)?,
            None => execute_unmodified(scene, spec, &self.fm, &cfg)?,
        })
    }
}

/// One episode with the configured run seed; writes the record, its SVG and
/// the audit log when enabled.
pub fn cmd_run(exp: &Experiment, mode: Mode) -> Result<RunRecord, HarnessError> {
    let record = Runner::new(exp, mode)?.run(exp.config.run.seed)?;
    let dir = exp.out_dir();
    write_json(&dir.join(format!("run_{mode}.json")), &record)?;
    let svg = render_svg(&exp.scene, &record, exp.config.plot.scale);
    write_file(&dir.join(format!("run_{mode}.svg")), svg.as_bytes())?;
    if exp.config.run.audit {
        let mut buf = Vec::new();
        for a in &record.audit {
            serde_json::to_writer(&mut buf, a).expect("serializable");
            buf.push(b'\n');
        }
        write_file(&dir.join(format!("audit_{mode}.jsonl")), &buf)?;
    }
    Ok(record)
}

/// Run `n_runs` episodes with seeds derived from the master run seed and
/// the episode index. Results are in index order regardless of scheduling.
pub fn run_batch(exp: &Experiment, mode: Mode) -> Result<Vec<RunRecord>, HarnessError> {
    let runner = Runner::new(exp, mode)?;
    let master = exp.config.run.seed;
    (0..exp.config.n_runs)
        .into_par_iter()
        .map(|i| runner.run(episode_seed(master, i as u64)))
        .collect()
}

/// Monte-Carlo batch; writes `mc_<mode>.csv` and `mc_<mode>_summary.json`.
pub fn cmd_montecarlo(exp: &Experiment, mode: Mode) -> Result<BatchStats, HarnessError> {
    let records = run_batch(exp, mode)?;
    let stats = BatchStats::from_records(&records);
    let dir = exp.out_dir();
    let mut csv = Vec::new();
    write_csv(&mut csv, &records).map_err(|e| HarnessError::io(dir.join(format!("mc_{mode}.csv")), e))?;
    write_file(&dir.join(format!("mc_{mode}.csv")), &csv)?;
    write_json(
        &dir.join(format!("mc_{mode}_summary.json")),
        &serde_json::json!({
            "mode": mode,
            "spec": exp.spec.to_string(),
            "stats": stats,
            "end_at_goal_rate": end_at_goal_rate(&records),
        }),
    )?;
    Ok(stats)
}

/// Percentage of episodes whose main task ended near the instruction goal.
pub fn end_at_goal_rate(records: &[RunRecord]) -> f64 {
    let hits = records.iter().filter(|r| r.end_at_goal).count();
    100.0 * hits as f64 / records.len().max(1) as f64
}

/// Re-render `run_<mode>.svg` from a stored `run_<mode>.json`.
pub fn cmd_plot(exp: &Experiment, mode: Mode) -> Result<PathBuf, HarnessError> {
    let dir = exp.out_dir();
    let src = dir.join(format!("run_{mode}.json"));
    let text = fs::read_to_string(&src).map_err(|e| HarnessError::io(&src, e))?;
    let record: RunRecord =
        serde_json::from_str(&text).map_err(|e| HarnessError::Domain(format!("{}: {e}", src.display())))?;
    let svg = render_svg(&exp.scene, &record, exp.config.plot.scale);
    let dst = dir.join(format!("run_{mode}.svg"));
    write_file(&dst, svg.as_bytes())?;
    Ok(dst)
}

/// Human-readable one-line summary of a batch.
pub fn describe(stats: &BatchStats, mode: Mode) -> String {
    let mut s = Vec::new();
    write!(
        s,
        "{mode}: n = {}, STL {:.1}%, main {:.1}%, mean projected {:.2}, mean fallbacks {:.2}",
        stats.n, stats.stl_rate, stats.main_rate, stats.mean_projected, stats.mean_fallbacks
    )
    .expect("write to Vec");
    String::from_utf8(s).expect("ascii")
}
