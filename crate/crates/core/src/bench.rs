//! Repeated runs with metrics rows in CSV or JSON.
//!
//! Every trial runs with the configured seed, so all rows of a benchmark
//! agree except for the trial index and the wall time.

use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::congest::{PhaseStats, RoundLedger};
use crate::error::{Error, Result};
use crate::expander::expander_decomposition;
use crate::graph::Graph;
use crate::low_diam::low_diam_decomposition;
use crate::rng::seeded;
use crate::sparse_cut::{nearly_balanced_sparse_cut, CutProblem};
use crate::triangles::triangle_enumeration;

/// The algorithm a benchmark runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    SparseCut,
    Lowdiam,
    Decompose,
    Triangles,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse-cut" => Ok(Task::SparseCut),
            "lowdiam" => Ok(Task::Lowdiam),
            "decompose" => Ok(Task::Decompose),
            "triangles" => Ok(Task::Triangles),
            _ => Err(Error::BadParameter(format!("unknown task {s:?}"))),
        }
    }
}

pub const DEFAULT_PHI: f64 = 0.01;
pub const DEFAULT_BETA: f64 = 0.1;
pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_TRIANGLE_EPSILON: f64 = 1.0 / 6.0;

/// One trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub task: Task,
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub trial: usize,
    pub rounds: u64,
    pub messages: u64,
    pub max_bits: u64,
    /// Task-specific size of the result: cut volume, cut edges, removed
    /// edges or triangles.
    pub outcome: u64,
    pub wall_ms: f64,
}

impl MetricsRow {
    /// Equal up to trial index and wall time.
    pub fn same_metrics(&self, other: &MetricsRow) -> bool {
        MetricsRow { trial: 0, wall_ms: 0.0, ..self.clone() } == MetricsRow { trial: 0, wall_ms: 0.0, ..other.clone() }
    }
}

/// Rows plus the per-phase ledger of each trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: RunConfig,
    pub rows: Vec<MetricsRow>,
    pub phases: Vec<Vec<PhaseStats>>,
}

/// Runs `task` once on `g` and returns its outcome size and ledger.
pub fn run_task(cfg: &RunConfig, task: Task, g: &Graph) -> Result<(u64, RoundLedger)> {
    let mut net = cfg.network(g);
    let mut rng = seeded(cfg.seed);
    let outcome = match task {
        Task::SparseCut => {
            let all: Vec<_> = (0..g.n()).collect();
            let work = g.contract(&all);
            let res = nearly_balanced_sparse_cut(
                &mut net,
                CutProblem::whole(g, &all, &work),
                cfg.phi.unwrap_or(DEFAULT_PHI),
                &cfg.cut_config(),
                &mut rng,
            )?;
            res.cut.map_or(0, |c| c.volume())
        }
        Task::Lowdiam => {
            let out = low_diam_decomposition(&mut net, g, cfg.beta.unwrap_or(DEFAULT_BETA), &cfg.low_diam_config(), &mut rng)?;
            out.cut_edges.len() as u64
        }
        Task::Decompose => {
            let eps = cfg.epsilon.unwrap_or(DEFAULT_EPSILON);
            expander_decomposition(&mut net, g, eps, cfg.k, &cfg.decomp_config(), &mut rng)?.removed.total() as u64
        }
        Task::Triangles => {
            let eps = cfg.epsilon.unwrap_or(DEFAULT_TRIANGLE_EPSILON);
            triangle_enumeration(&mut net, g, eps, cfg.k, &cfg.triangle_config(), &mut rng)?.triangles.len() as u64
        }
    };
    Ok((outcome, net.into_ledger()))
}

/// Runs `cfg.trials` trials of `task` on `g`.
pub fn bench(cfg: &RunConfig, task: Task, g: &Graph) -> Result<BenchReport> {
    let mut rows = Vec::new();
    let mut phases = Vec::new();
    for trial in 0..cfg.trials.max(1) {
        let start = Instant::now();
        let (outcome, ledger) = run_task(cfg, task, g)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let total = ledger.total();
        rows.push(MetricsRow {
            task,
            graph: cfg.graph_label(),
            n: g.n(),
            m: g.m(),
            seed: cfg.seed,
            trial,
            rounds: total.rounds,
            messages: total.messages,
            max_bits: total.max_bits,
            outcome,
            wall_ms,
        });
        phases.push(ledger.phases().to_vec());
    }
    Ok(BenchReport { config: cfg.clone(), rows, phases })
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Writes rows with a header line.
pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<MetricsRow>> {
    csv::Reader::from_reader(input).deserialize().collect::<std::result::Result<_, _>>().map_err(csv_error)
}
