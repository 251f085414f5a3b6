//! Experiment harness behind the `dpmst` command-line tool: graph
//! generation, single runs and repeated benchmark sweeps with CSV output.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use dpmst::graph::{exact_mst, gen_complete_graph, read_edge_list, write_edge_list, WeightDist};
use dpmst::mst_private::{
    fast_pamst, pamst_baseline, post_process_gaussian, post_process_laplace, utility_bound, Neighborhood,
    PrivacySpec,
};
use dpmst::{Graph, RngStream, WeightAssignment};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const THREADS_ENV: &str = "DPMST_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] dpmst::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

impl BenchError {
    /// 2 for bad parameters, 3 for bad or unreadable data.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Usage(_) | BenchError::Core(dpmst::Error::InvalidParam(_)) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    FastPamst,
    Pamst,
    PostGauss,
    PostLaplace,
    Exact,
}

impl Algo {
    pub const ALL: [Algo; 5] = [
        Algo::FastPamst,
        Algo::Pamst,
        Algo::PostGauss,
        Algo::PostLaplace,
        Algo::Exact,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algo::FastPamst => "fast-pamst",
            Algo::Pamst => "pamst",
            Algo::PostGauss => "post-gauss",
            Algo::PostLaplace => "post-laplace",
            Algo::Exact => "exact",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Algo::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Algo::ALL.iter().map(|a| a.tag()).collect();
                format!("unknown algorithm `{s}` (expected one of {})", known.join(", "))
            })
    }
}

/// Total privacy budget of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Rho(f64),
    Epsilon(f64),
}

impl Budget {
    fn spec(self, sensitivity: f64) -> Result<PrivacySpec> {
        Ok(match self {
            Budget::Rho(rho) => PrivacySpec::zcdp(rho, sensitivity)?,
            Budget::Epsilon(eps) => PrivacySpec::pure(eps, sensitivity)?,
        })
    }

    fn rho(self) -> Option<f64> {
        match self {
            Budget::Rho(r) => Some(r),
            Budget::Epsilon(_) => None,
        }
    }

    fn epsilon(self) -> Option<f64> {
        match self {
            Budget::Epsilon(e) => Some(e),
            Budget::Rho(_) => None,
        }
    }
}

/// One algorithm run. Empty `rho`/`epsilon`/`utility_bound` cells mean the
/// value does not apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algo: String,
    pub n: usize,
    pub m: usize,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub sensitivity: f64,
    pub seed: u64,
    pub tree_weight: f64,
    pub opt_weight: f64,
    pub error: f64,
    pub elapsed_ns: u64,
    pub samples_drawn: u64,
    pub comparisons: u64,
    pub utility_bound: Option<f64>,
}

/// Medians over the repetitions of one (algorithm, n) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algo: String,
    pub n: usize,
    pub reps: usize,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub sensitivity: f64,
    pub median_error: f64,
    pub median_elapsed_ns: f64,
    pub median_samples_drawn: f64,
    pub median_comparisons: f64,
    pub utility_bound: Option<f64>,
}

/// Median with the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Runs one algorithm on one weighted graph. The algorithm's randomness is
/// drawn from a substream of `seed` labelled by the algorithm.
pub fn run_algo(
    algo: Algo,
    g: &Graph,
    w: &WeightAssignment,
    budget: Budget,
    seed: u64,
) -> Result<RunRecord> {
    let spec = budget.spec(w.sensitivity())?;
    let mut rng = RngStream::new(seed).substream(algo.tag());
    let mut bound = None;
    let result = match algo {
        Algo::FastPamst => {
            let (t, ledger) = fast_pamst(&mut rng, g, w, &spec)?;
            bound = ledger.utility_bound;
            t
        }
        Algo::Pamst => pamst_baseline(&mut rng, g, w, &spec)?.0,
        Algo::PostGauss => post_process_gaussian(&mut rng, g, w, &spec)?,
        Algo::PostLaplace => post_process_laplace(&mut rng, g, w, &spec, Neighborhood::LInf)?,
        Algo::Exact => {
            let started = Instant::now();
            let mut t = exact_mst(g, w)?;
            t.counters.elapsed = started.elapsed();
            t
        }
    };
    Ok(RunRecord {
        algo: algo.tag().to_string(),
        n: g.vertex_count(),
        m: g.edge_count(),
        rho: budget.rho(),
        epsilon: budget.epsilon(),
        sensitivity: w.sensitivity(),
        seed,
        tree_weight: result.true_weight,
        opt_weight: result.opt_weight,
        error: result.error,
        elapsed_ns: result.counters.elapsed.as_nanos().min(u64::MAX as u128) as u64,
        samples_drawn: result.counters.samples_drawn,
        comparisons: result.counters.comparisons,
        utility_bound: bound,
    })
}

/// Writes a generated complete graph as a CSV edge list.
pub fn cmd_gen(n: usize, seed: u64, dist: WeightDist, out: &Path) -> Result<()> {
    let (g, w) = gen_complete_graph(n, seed, dist)?;
    let mut file = BufWriter::new(File::create(out)?);
    write_edge_list(&mut file, &g, &w)?;
    file.flush()?;
    Ok(())
}

/// Reads a graph, runs one algorithm and appends the record to `out`
/// (writing the header when the file is new or empty).
pub fn cmd_run(
    algo: Algo,
    graph: &Path,
    budget: Budget,
    sensitivity: f64,
    seed: u64,
    out: &Path,
) -> Result<RunRecord> {
    let (g, w) = read_edge_list(BufReader::new(File::open(graph)?), sensitivity)?;
    let record = run_algo(algo, &g, &w, budget, seed)?;
    append_records(out, std::slice::from_ref(&record))?;
    Ok(record)
}

fn append_records<T: Serialize>(out: &Path, rows: &[T]) -> Result<()> {
    let fresh = std::fs::metadata(out).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(out)?;
    let mut writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn write_records<T: Serialize>(out: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(out)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads records written by [`cmd_run`] or [`cmd_bench`].
pub fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<Result<Vec<T>, _>>()?)
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub algos: Vec<Algo>,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub budget: Budget,
    pub sensitivity: f64,
    pub seed: u64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

fn derived_seed(stream: RngStream) -> u64 {
    let mut s = stream;
    s.next_u64()
}

/// Graph seed of repetition `rep` at size `n`; shared by every algorithm.
pub fn graph_seed(master: u64, n: usize, rep: usize) -> u64 {
    derived_seed(
        RngStream::new(master)
            .substream_indexed("graph", n as u64)
            .substream_indexed("rep", rep as u64),
    )
}

/// Noise seed of `algo` for repetition `rep` at size `n`. Independent of
/// which other algorithms take part in the sweep.
pub fn run_seed(master: u64, algo: Algo, n: usize, rep: usize) -> u64 {
    derived_seed(
        RngStream::new(master)
            .substream(algo.tag())
            .substream_indexed("n", n as u64)
            .substream_indexed("rep", rep as u64),
    )
}

/// Worker count from `DPMST_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(BenchError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

/// Runs every (algorithm, n, rep) combination on fresh seeded graphs and
/// returns all records, ordered by algorithm, then n, then rep.
pub fn bench_records(cfg: &BenchConfig) -> Result<Vec<RunRecord>> {
    if cfg.reps == 0 {
        return Err(BenchError::Usage("reps must be at least 1".into()));
    }
    if cfg.algos.is_empty() || cfg.n_list.is_empty() {
        return Err(BenchError::Usage("need at least one algorithm and one n".into()));
    }
    cfg.budget.spec(cfg.sensitivity)?;
    let jobs: Vec<(Algo, usize, usize)> = cfg
        .algos
        .iter()
        .flat_map(|&a| {
            cfg.n_list
                .iter()
                .flat_map(move |&n| (0..cfg.reps).map(move |r| (a, n, r)))
        })
        .collect();
    let run_job = |&(algo, n, rep): &(Algo, usize, usize)| -> Result<RunRecord> {
        let (g, w) = gen_complete_graph(n, graph_seed(cfg.seed, n, rep), WeightDist::Uniform01)?;
        let w = w.with_sensitivity(cfg.sensitivity)?;
        run_algo(algo, &g, &w, cfg.budget, run_seed(cfg.seed, algo, n, rep))
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| BenchError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(run_job).collect())
}

/// Collapses records into one median row per (algorithm, n), in first
/// appearance order.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in records {
        let key = (r.algo.clone(), r.n);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(algo, n)| {
            let cell: Vec<&RunRecord> = records.iter().filter(|r| r.algo == algo && r.n == n).collect();
            let med = |f: fn(&RunRecord) -> f64| median(&cell.iter().map(|r| f(r)).collect::<Vec<_>>());
            let first = cell[0];
            let bound = match (algo.as_str(), first.rho) {
                ("fast-pamst", Some(rho)) => utility_bound(n, rho, first.sensitivity, 1.0 / n as f64).ok(),
                _ => None,
            };
            SummaryRow {
                algo,
                n,
                reps: cell.len(),
                rho: first.rho,
                epsilon: first.epsilon,
                sensitivity: first.sensitivity,
                median_error: med(|r| r.error),
                median_elapsed_ns: med(|r| r.elapsed_ns as f64),
                median_samples_drawn: med(|r| r.samples_drawn as f64),
                median_comparisons: med(|r| r.comparisons as f64),
                utility_bound: bound,
            }
        })
        .collect()
}

/// Runs a sweep, writes the median table to `out` and, if given, every
/// individual record to `raw`.
pub fn cmd_bench(cfg: &BenchConfig, out: &Path, raw: Option<&Path>) -> Result<Vec<SummaryRow>> {
    let records = bench_records(cfg)?;
    if let Some(raw) = raw {
        write_records(raw, &records)?;
    }
    let rows = summarize(&records);
    write_records(out, &rows)?;
    Ok(rows)
}
