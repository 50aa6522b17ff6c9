//! Result rows and the shared single-run path used by `run` and `sweep`.

use std::time::Instant;

use anyhow::{Context, Result};

use kcenter::algorithms::{greedy_exact, Algorithm, FirstCenter, RunConfig, RunResult};
use kcenter::dataset::{
    generate_synthetic, load_distance_matrix, load_points, DistanceMatrix, Normalization,
    PointSet, SyntheticSpec,
};
use kcenter::oracles::{OracleModel, OracleSession};
use kcenter::{DataSource, Real};

use crate::exit::usage;
use crate::{ModelArg, NormArg, Precision};

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Centered => Normalization::Centered,
            NormArg::Unit => Normalization::Unit,
            NormArg::AsIs => Normalization::AsIs,
        }
    }
}

impl ModelArg {
    pub fn name(self) -> &'static str {
        match self {
            ModelArg::Ds => "ds",
            ModelArg::Ns => "ns",
            ModelArg::Bernoulli => "bernoulli",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ds" => Ok(ModelArg::Ds),
            "ns" => Ok(ModelArg::Ns),
            "bernoulli" => Ok(ModelArg::Bernoulli),
            _ => Err(usage(format!("unknown model `{s}`"))),
        }
    }
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            _ => Err(usage(format!("unknown precision `{s}`"))),
        }
    }
}

/// Where a dataset comes from, before it is loaded at a given precision.
#[derive(Debug, Clone)]
pub enum SourceSpec {
    Points(std::path::PathBuf, NormArg),
    Matrix(std::path::PathBuf),
    Synthetic(SyntheticSpec),
}

impl SourceSpec {
    pub fn is_matrix(&self) -> bool {
        matches!(self, SourceSpec::Matrix(_))
    }

    pub fn load<T: Real>(&self) -> Result<Dataset<T>> {
        Ok(match self {
            SourceSpec::Points(p, norm) => Dataset::Points(
                load_points(p, (*norm).into())
                    .with_context(|| format!("loading points from {}", p.display()))?,
            ),
            SourceSpec::Matrix(p) => Dataset::Matrix(
                load_distance_matrix(p)
                    .with_context(|| format!("loading distance matrix from {}", p.display()))?,
            ),
            SourceSpec::Synthetic(spec) => Dataset::Points(generate_synthetic(spec)?),
        })
    }
}

pub enum Dataset<T> {
    Points(PointSet<T>),
    Matrix(DistanceMatrix<T>),
}

impl<T: Real> Dataset<T> {
    pub fn source(&self) -> DataSource<'_, T> {
        match self {
            Dataset::Points(p) => DataSource::Points(p),
            Dataset::Matrix(d) => DataSource::Matrix(d),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Points(p) => p.len(),
            Dataset::Matrix(d) => d.len(),
        }
    }

    pub fn dims(&self) -> Option<usize> {
        match self {
            Dataset::Points(p) => Some(p.dims()),
            Dataset::Matrix(_) => None,
        }
    }

    /// The first `n` points.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        Ok(match self {
            Dataset::Points(p) => Dataset::Points(p.prefix(n)?),
            Dataset::Matrix(d) => Dataset::Matrix(d.prefix(n)?),
        })
    }
}

/// Fills in the oracle model when it was not given explicitly.
pub fn resolve_model(
    algo: Algorithm,
    model: Option<ModelArg>,
    sigma2: Option<f64>,
    matrix: bool,
) -> Result<ModelArg> {
    if let Some(m) = model {
        return Ok(m);
    }
    let noisy = match (sigma2, matrix) {
        (Some(_), _) => Some(ModelArg::Ns),
        (None, true) => Some(ModelArg::Bernoulli),
        (None, false) => None,
    };
    match algo {
        Algorithm::DsUcb | Algorithm::DsTs => Ok(ModelArg::Ds),
        Algorithm::NsTs | Algorithm::NsTands => noisy.ok_or_else(|| {
            usage(format!(
                "{algo} on points needs --sigma2 (or --model bernoulli)"
            ))
        }),
        Algorithm::Greedy | Algorithm::Random => Ok(noisy.unwrap_or(ModelArg::Ds)),
    }
}

pub fn oracle_model<T: Real>(model: ModelArg, sigma2: Option<f64>) -> Result<OracleModel<T>> {
    Ok(match model {
        ModelArg::Ds => OracleModel::DimensionSampling,
        ModelArg::Bernoulli => OracleModel::BernoulliDistance,
        ModelArg::Ns => {
            let s = sigma2.ok_or_else(|| usage("the ns model needs --sigma2"))?;
            if !(s >= 0.0 && s.is_finite()) {
                return Err(usage(format!("--sigma2 must be finite and >= 0, got {s}")));
            }
            OracleModel::NoisyDistance { sigma2: T::lit(s) }
        }
    })
}

/// Everything needed for one run, independent of the dataset.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub algo: Algorithm,
    pub model: ModelArg,
    pub sigma2: Option<f64>,
    pub k: usize,
    pub delta: f64,
    pub z: f64,
    pub c_alpha: f64,
    pub first_center: FirstCenter,
    pub seed: u64,
    pub max_pulls: Option<u64>,
    pub stage_cap: u64,
    pub check_greedy: bool,
    pub precision: Precision,
    pub trace: bool,
}

impl RunSpec {
    pub fn config<T: Real>(&self) -> RunConfig<T> {
        let mut cfg = RunConfig::new(self.k, T::lit(self.delta)).with_z(T::lit(self.z));
        cfg.first_center = self.first_center;
        cfg.c_alpha = T::lit(self.c_alpha);
        cfg.max_pulls = self.max_pulls;
        cfg.stage_cap = self.stage_cap;
        cfg.trace_margins = self.trace;
        cfg
    }

    /// Rejects algorithm/model combinations before any query is made.
    pub fn check(&self, matrix: bool) -> Result<()> {
        let model: OracleModel<f64> = oracle_model(self.model, self.sigma2)?;
        if !self.algo.supports(&model) {
            return Err(usage(format!(
                "{} cannot run on the {} model",
                self.algo,
                self.model.name()
            )));
        }
        if matrix && self.model == ModelArg::Ds {
            return Err(usage("the ds model needs a points file, not a distance matrix"));
        }
        Ok(())
    }
}

/// One output line: the configuration, then what happened.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultRow {
    pub algo: String,
    pub model: String,
    pub sigma2: Option<f64>,
    pub precision: String,
    pub n: usize,
    pub m: Option<usize>,
    pub k: usize,
    pub delta: f64,
    pub z: f64,
    pub c_alpha: f64,
    pub first_center: Option<usize>,
    pub seed: u64,
    pub rep: usize,
    pub queries_total: Option<u64>,
    pub matched_greedy: Option<bool>,
    pub wall_ms: u128,
    pub centers: Vec<usize>,
    pub stage_queries: Vec<u64>,
    pub error: String,
}

pub const HEADER: [&str; 19] = [
    "algo",
    "model",
    "sigma2",
    "precision",
    "n",
    "m",
    "k",
    "delta",
    "z",
    "c_alpha",
    "first_center",
    "seed",
    "rep",
    "queries_total",
    "matched_greedy",
    "wall_ms",
    "centers",
    "stage_queries",
    "error",
];

fn opt<V: ToString>(v: Option<V>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn join<V: ToString>(xs: &[V]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

impl ResultRow {
    pub fn new(spec: &RunSpec, n: usize, m: Option<usize>, rep: usize) -> Self {
        Self {
            algo: spec.algo.name().into(),
            model: spec.model.name().into(),
            sigma2: spec.sigma2,
            precision: spec.precision.name().into(),
            n,
            m,
            k: spec.k,
            delta: spec.delta,
            z: spec.z,
            c_alpha: spec.c_alpha,
            first_center: match spec.first_center {
                FirstCenter::Index(i) => Some(i),
                FirstCenter::Random => None,
            },
            seed: spec.seed,
            rep,
            ..Self::default()
        }
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            self.algo.clone(),
            self.model.clone(),
            opt(self.sigma2),
            self.precision.clone(),
            self.n.to_string(),
            opt(self.m),
            self.k.to_string(),
            self.delta.to_string(),
            self.z.to_string(),
            self.c_alpha.to_string(),
            opt(self.first_center),
            self.seed.to_string(),
            self.rep.to_string(),
            opt(self.queries_total),
            opt(self.matched_greedy.map(u8::from)),
            self.wall_ms.to_string(),
            join(&self.centers),
            join(&self.stage_queries),
            self.error.clone(),
        ]
    }
}

/// Runs `spec` once on `data` and fills `row` with the outcome.
pub fn execute<T: Real>(
    data: &Dataset<T>,
    spec: &RunSpec,
    row: &mut ResultRow,
) -> Result<RunResult> {
    let model = oracle_model::<T>(spec.model, spec.sigma2)?;
    let cfg = spec.config::<T>();
    let start = Instant::now();
    let mut session = OracleSession::new(data.source(), model, spec.seed)?;
    let mut res = kcenter::run(spec.algo, &mut session, &cfg)?;
    row.wall_ms = start.elapsed().as_millis();
    if spec.check_greedy {
        let first = res.centers.as_slice()[0];
        let g = greedy_exact(data.source(), spec.k, first)?;
        res.matched_greedy = Some(g.centers == res.centers);
    }
    row.first_center = Some(res.centers.as_slice()[0]);
    row.queries_total = Some(res.queries());
    row.matched_greedy = res.matched_greedy;
    row.centers = res.centers.as_slice().to_vec();
    row.stage_queries = res.ledger.per_stage.clone();
    Ok(res)
}
