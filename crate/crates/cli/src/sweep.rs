//! Grid sweeps: every grid point times every repetition, run in parallel and
//! written in grid order by a single writer.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use anyhow::{Context, Result};
use rayon::prelude::*;

use kcenter::algorithms::{Algorithm, FirstCenter, STAGE_CAP};
use kcenter::dataset::{parse_key_values, SyntheticSpec};
use kcenter::Real;

use crate::commands::output;
use crate::exit::usage;
use crate::rows::{execute, resolve_model, Dataset, ResultRow, RunSpec, SourceSpec, HEADER};
use crate::{ModelArg, NormArg, Precision, SweepArgs};

const KEYS: [&str; 22] = [
    "data",
    "matrix",
    "synthetic",
    "normalize",
    "model",
    "sigma2",
    "algo",
    "n",
    "k",
    "delta",
    "z",
    "c_alpha",
    "reps",
    "seed",
    "first_center",
    "check_greedy",
    "precision",
    "stage_cap",
    "max_pulls",
    "out",
    "aggregate",
    "jobs",
];

/// A parsed sweep spec file.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub source: SourceSpec,
    pub model: Option<ModelArg>,
    pub sigma2: Vec<Option<f64>>,
    pub algo: Vec<Algorithm>,
    /// `None` uses every point.
    pub n: Vec<Option<usize>>,
    pub k: Vec<usize>,
    pub delta: Vec<f64>,
    pub z: Vec<f64>,
    pub c_alpha: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub first_center: FirstCenter,
    pub check_greedy: bool,
    pub precision: Precision,
    pub stage_cap: u64,
    pub max_pulls: Option<u64>,
    pub out: Option<PathBuf>,
    pub aggregate: Option<PathBuf>,
    pub jobs: Option<usize>,
}

fn list<V>(
    kv: &BTreeMap<String, String>,
    key: &str,
    default: Option<Vec<V>>,
    parse: impl Fn(&str) -> Result<V>,
) -> Result<Vec<V>> {
    let Some(raw) = kv.get(key) else {
        return default.ok_or_else(|| usage(format!("sweep spec needs `{key}`")));
    };
    let items: Vec<&str> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(usage(format!("grid `{key}` is empty")));
    }
    items.into_iter().map(parse).collect()
}

fn num<V: std::str::FromStr>(key: &str) -> impl Fn(&str) -> Result<V> + '_ {
    move |s| {
        s.parse()
            .map_err(|_| usage(format!("bad value for `{key}`: {s}")))
    }
}

fn single<V>(
    kv: &BTreeMap<String, String>,
    key: &str,
    default: V,
    parse: impl Fn(&str) -> Result<V>,
) -> Result<V> {
    match kv.get(key) {
        Some(s) => parse(s.trim()),
        None => Ok(default),
    }
}

impl ExperimentSpec {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let kv = parse_key_values(text).map_err(|e| usage(e.to_string()))?;
        if let Some(bad) = kv.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(usage(format!("unknown sweep key `{bad}`")));
        }
        let rel = |s: &str| base.join(s);
        let normalize = single(&kv, "normalize", NormArg::Centered, |s| {
            <NormArg as clap::ValueEnum>::from_str(s, false)
                .map_err(|_| usage(format!("unknown normalization `{s}`")))
        })?;
        let source = match (kv.get("data"), kv.get("matrix"), kv.get("synthetic")) {
            (Some(p), None, None) => SourceSpec::Points(rel(p), normalize),
            (None, Some(p), None) => SourceSpec::Matrix(rel(p)),
            (None, None, Some(s)) if s == "reference" => {
                SourceSpec::Synthetic(SyntheticSpec::reference())
            }
            (None, None, Some(p)) => {
                let path = rel(p);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let kv = parse_key_values(&text).map_err(|e| usage(e.to_string()))?;
                SourceSpec::Synthetic(SyntheticSpec::from_key_values(&kv)?)
            }
            _ => {
                return Err(usage(
                    "sweep spec needs exactly one of `data`, `matrix`, `synthetic`",
                ))
            }
        };
        let model = match kv.get("model") {
            Some(s) => Some(ModelArg::parse(s.trim())?),
            None => None,
        };
        Ok(Self {
            source,
            model,
            sigma2: list(&kv, "sigma2", Some(vec![None]), |s| num("sigma2")(s).map(Some))?,
            algo: list(&kv, "algo", None, |s| {
                s.parse::<Algorithm>().map_err(|e| usage(e.to_string()))
            })?,
            n: list(&kv, "n", Some(vec![None]), |s| num("n")(s).map(Some))?,
            k: list(&kv, "k", None, num("k"))?,
            delta: list(&kv, "delta", Some(vec![0.1]), num("delta"))?,
            z: list(&kv, "z", Some(vec![0.0]), num("z"))?,
            c_alpha: list(&kv, "c_alpha", Some(vec![kcenter::bandit::C_ALPHA]), num("c_alpha"))?,
            reps: match single(&kv, "reps", 20, num("reps"))? {
                0 => return Err(usage("reps must be at least 1")),
                r => r,
            },
            seed: single(&kv, "seed", 0, num("seed"))?,
            first_center: single(&kv, "first_center", FirstCenter::Index(0), |s| {
                s.parse().map_err(|e: kcenter::Error| usage(e.to_string()))
            })?,
            check_greedy: single(&kv, "check_greedy", true, num("check_greedy"))?,
            precision: single(&kv, "precision", Precision::F64, Precision::parse)?,
            stage_cap: single(&kv, "stage_cap", STAGE_CAP, num("stage_cap"))?,
            max_pulls: single(&kv, "max_pulls", None, |s| num("max_pulls")(s).map(Some))?,
            out: kv.get("out").map(|s| rel(s)),
            aggregate: kv.get("aggregate").map(|s| rel(s)),
            jobs: single(&kv, "jobs", None, |s| num("jobs")(s).map(Some))?,
        })
    }

    /// The grid in a fixed nesting order (algo, sigma2, n, k, delta, z, c_alpha).
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &algo in &self.algo {
            for &sigma2 in &self.sigma2 {
                for &n in &self.n {
                    for &k in &self.k {
                        for &delta in &self.delta {
                            for &z in &self.z {
                                for &c_alpha in &self.c_alpha {
                                    out.push(GridPoint {
                                        algo,
                                        sigma2,
                                        n,
                                        k,
                                        delta,
                                        z,
                                        c_alpha,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub algo: Algorithm,
    pub sigma2: Option<f64>,
    pub n: Option<usize>,
    pub k: usize,
    pub delta: f64,
    pub z: f64,
    pub c_alpha: f64,
}

impl GridPoint {
    /// Stable text form; the run seed hashes this, not the grid position.
    pub fn canonical(&self) -> String {
        let o = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        format!(
            "algo={};sigma2={};n={};k={};delta={};z={};c_alpha={}",
            self.algo,
            o(self.sigma2.map(|s| s.to_string())),
            o(self.n.map(|s| s.to_string())),
            self.k,
            self.delta,
            self.z,
            self.c_alpha
        )
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// `base XOR mix(hash(point, rep))`.
pub fn run_seed(base: u64, point: &GridPoint, rep: usize) -> u64 {
    let key = format!("{};rep={rep}", point.canonical());
    base ^ splitmix64(fnv1a(key.as_bytes()))
}

struct Job {
    index: usize,
    point: usize,
    rep: usize,
}

fn run_job<T: Real>(data: &Dataset<T>, spec: &ExperimentSpec, pt: &GridPoint, rep: usize) -> ResultRow {
    let seed = run_seed(spec.seed, pt, rep);
    let model = resolve_model(pt.algo, spec.model, pt.sigma2, spec.source.is_matrix());
    let run_spec = RunSpec {
        algo: pt.algo,
        model: *model.as_ref().unwrap_or(&ModelArg::Ds),
        sigma2: pt.sigma2,
        k: pt.k,
        delta: pt.delta,
        z: pt.z,
        c_alpha: pt.c_alpha,
        first_center: spec.first_center,
        seed,
        max_pulls: spec.max_pulls,
        stage_cap: spec.stage_cap,
        check_greedy: spec.check_greedy,
        precision: spec.precision,
        trace: false,
    };
    let n = pt.n.unwrap_or(data.len());
    let mut row = ResultRow::new(&run_spec, n, data.dims(), rep);
    let outcome = model
        .and_then(|_| run_spec.check(spec.source.is_matrix()))
        .and_then(|_| {
            if n == data.len() {
                execute(data, &run_spec, &mut row)
            } else {
                execute(&data.prefix(n)?, &run_spec, &mut row)
            }
        });
    if let Err(e) = outcome {
        row.error = format!("{e:#}");
    }
    row
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.spec)
        .with_context(|| format!("reading {}", a.spec.display()))?;
    let base = a.spec.parent().unwrap_or(Path::new("."));
    let spec = ExperimentSpec::parse(&text, base)?;
    let out = a
        .out
        .clone()
        .or_else(|| spec.out.clone())
        .ok_or_else(|| usage("sweep needs an output path (`out=` or --out)"))?;
    let agg = spec
        .aggregate
        .clone()
        .unwrap_or_else(|| out.with_extension("agg.csv"));
    let jobs = a.jobs.or(spec.jobs);

    let rows = match spec.precision {
        Precision::F64 => execute_grid::<f64>(&spec, &out, jobs)?,
        Precision::F32 => execute_grid::<f32>(&spec, &out, jobs)?,
    };
    write_aggregate(&spec.points(), &rows, spec.reps, &agg)?;
    let failures = rows.iter().filter(|r| !r.error.is_empty()).count();
    eprintln!(
        "{} runs written to {} ({failures} failed); aggregate in {}",
        rows.len(),
        out.display(),
        agg.display()
    );
    Ok(())
}

fn execute_grid<T: Real>(
    spec: &ExperimentSpec,
    out: &Path,
    jobs: Option<usize>,
) -> Result<Vec<ResultRow>> {
    let data: Dataset<T> = spec.source.load()?;
    let points = spec.points();
    let work: Vec<Job> = (0..points.len())
        .flat_map(|p| (0..spec.reps).map(move |r| (p, r)))
        .enumerate()
        .map(|(index, (point, rep))| Job { index, point, rep })
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().context("building the worker pool")?;

    let mut w = csv::Writer::from_writer(output(Some(out))?);
    w.write_record(HEADER)?;
    let mut rows = Vec::with_capacity(work.len());
    let (tx, rx) = mpsc::channel::<(usize, ResultRow)>();
    std::thread::scope(|s| -> Result<()> {
        let (data, points, work) = (&data, &points, &work);
        s.spawn(move || {
            pool.install(|| {
                work.par_iter().for_each_with(tx, |tx, job| {
                    let row = run_job(data, spec, &points[job.point], job.rep);
                    let _ = tx.send((job.index, row));
                })
            })
        });
        let mut pending = BTreeMap::new();
        for (index, row) in rx {
            pending.insert(index, row);
            while let Some(row) = pending.remove(&rows.len()) {
                w.write_record(row.record())?;
                w.flush()?;
                rows.push(row);
            }
        }
        Ok(())
    })?;
    Ok(rows)
}

/// Median of a sorted slice; the mean of the middle two for even lengths.
pub fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

const AGG_HEADER: [&str; 14] = [
    "algo",
    "model",
    "sigma2",
    "precision",
    "n",
    "k",
    "delta",
    "z",
    "c_alpha",
    "reps",
    "failures",
    "median_queries",
    "mean_queries",
    "match_rate",
];

fn write_aggregate(points: &[GridPoint], rows: &[ResultRow], reps: usize, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(output(Some(path))?);
    w.write_record(AGG_HEADER)?;
    for (p, chunk) in points.iter().zip(rows.chunks(reps)) {
        let ok: Vec<&ResultRow> = chunk.iter().filter(|r| r.error.is_empty()).collect();
        let mut q: Vec<f64> = ok
            .iter()
            .filter_map(|r| r.queries_total.map(|x| x as f64))
            .collect();
        q.sort_by(f64::total_cmp);
        let mean = (!q.is_empty()).then(|| q.iter().sum::<f64>() / q.len() as f64);
        let checked: Vec<bool> = ok.iter().filter_map(|r| r.matched_greedy).collect();
        let rate = (!checked.is_empty())
            .then(|| checked.iter().filter(|&&m| m).count() as f64 / checked.len() as f64);
        let first = &chunk[0];
        let s = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            p.algo.name().to_string(),
            first.model.clone(),
            s(p.sigma2),
            first.precision.clone(),
            first.n.to_string(),
            p.k.to_string(),
            p.delta.to_string(),
            p.z.to_string(),
            p.c_alpha.to_string(),
            chunk.len().to_string(),
            (chunk.len() - ok.len()).to_string(),
            s(median(&q)),
            s(mean),
            s(rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}
