use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use kcenter::dataset::{
    generate_rademacher, generate_similarity_matrix, generate_synthetic, parse_key_values,
    save_distance_matrix, save_points_bin, save_points_csv, SyntheticSpec,
};
use kcenter::diagnostics::{hardness_report, ReportConfig};
use kcenter::maximin::{rate_envelope, t_star as solve_t_star, AscentConfig, MaximinInstance};
use kcenter::{Real, RunResult};

use crate::exit::usage;
use crate::rows::{execute, resolve_model, Dataset, ResultRow, RunSpec, SourceSpec, HEADER};
use crate::{DiagArgs, Format, GenArgs, GenKind, Precision, RunArgs, SourceArgs, TStarArgs};

pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_spec_file(path: &Path) -> Result<std::collections::BTreeMap<String, String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_key_values(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn gen(a: &GenArgs) -> Result<()> {
    match a.kind {
        GenKind::Blobs => {
            let spec = if a.reference {
                SyntheticSpec::reference()
            } else if let Some(path) = &a.spec {
                SyntheticSpec::from_key_values(&read_spec_file(path)?)?
            } else {
                SyntheticSpec {
                    clusters: a.clusters,
                    per_cluster: a.per,
                    m: a.m,
                    spread: a.spread,
                    seed: a.seed,
                    latent_dim: a.latent_dim,
                }
            };
            write_points(&generate_synthetic::<f64>(&spec)?, a)
        }
        GenKind::Rademacher => write_points(&generate_rademacher::<f64>(a.n, a.m, a.seed)?, a),
        GenKind::Similarity => {
            if a.format == Format::Bin {
                return Err(usage("distance matrices are written as CSV only"));
            }
            let dm = generate_similarity_matrix::<f64>(
                a.n,
                a.latent_dim.unwrap_or(2),
                a.temperature,
                a.seed,
            )?;
            Ok(save_distance_matrix(&dm, &a.out)?)
        }
    }
}

fn write_points(ps: &kcenter::PointSet, a: &GenArgs) -> Result<()> {
    match a.format {
        Format::Csv => save_points_csv(ps, &a.out)?,
        Format::Bin => save_points_bin(ps, &a.out)?,
    }
    Ok(())
}

pub fn source_spec(s: &SourceArgs) -> Result<SourceSpec> {
    match (&s.data, &s.matrix) {
        (Some(p), None) => Ok(SourceSpec::Points(p.clone(), s.normalize)),
        (None, Some(p)) => Ok(SourceSpec::Matrix(p.clone())),
        _ => Err(usage("give exactly one of --data or --matrix")),
    }
}

pub fn run(a: &RunArgs) -> Result<()> {
    let source = source_spec(&a.source)?;
    let spec = RunSpec {
        algo: a.algo,
        model: resolve_model(a.algo, a.model, a.sigma2, source.is_matrix())?,
        sigma2: a.sigma2,
        k: a.k,
        delta: a.delta,
        z: a.z,
        c_alpha: a.c_alpha,
        first_center: a.first_center,
        seed: a.seed,
        max_pulls: a.max_pulls,
        stage_cap: a.stage_cap,
        check_greedy: a.check_greedy,
        precision: a.precision,
        trace: a.trace.is_some(),
    };
    spec.check(source.is_matrix())?;
    let (row, res) = match a.precision {
        Precision::F64 => run_at::<f64>(&source, &spec)?,
        Precision::F32 => run_at::<f32>(&source, &spec)?,
    };

    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(HEADER)?;
    w.write_record(row.record())?;
    w.flush()?;

    if let Some(path) = &a.ledger {
        let mut f = output(Some(path))?;
        res.ledger.write_csv(&mut f)?;
        f.flush()?;
    }
    if let Some(path) = &a.trace {
        let mut f = output(Some(path))?;
        writeln!(f, "stage,round,margin")?;
        for (p, st) in res.stages.iter().enumerate() {
            for (r, m) in st.margins.iter().enumerate() {
                writeln!(f, "{},{},{}", p + 1, r, m)?;
            }
        }
        f.flush()?;
    }
    Ok(())
}

fn run_at<T: Real>(source: &SourceSpec, spec: &RunSpec) -> Result<(ResultRow, RunResult)> {
    let data: Dataset<T> = source.load()?;
    let mut row = ResultRow::new(spec, data.len(), data.dims(), 0);
    let res = execute(&data, spec, &mut row)?;
    Ok((row, res))
}

pub fn diag(a: &DiagArgs) -> Result<()> {
    let k = a.k.ok_or_else(|| usage("diag needs --k"))?;
    let data: Dataset<f64> = if a.rademacher {
        Dataset::Points(generate_rademacher(a.n, a.m, a.seed)?)
    } else {
        source_spec(&a.source)?.load()?
    };
    let cfg = ReportConfig {
        k,
        first_center: a.first_center,
        delta: a.delta,
        dims: data.dims(),
        c: a.c,
        sigma2: a.sigma2,
        gamma: a.gamma,
    };
    let src = data.source();
    let report = hardness_report(&src, &cfg)?;
    let traj = kcenter::diagnostics::GreedyTrajectory::compute(&src, k, a.first_center)?;

    let mut w = output(a.out.as_deref())?;
    writeln!(w, "kind,v,i,p,value")?;
    for (i, s) in traj.centers.iter().enumerate() {
        writeln!(w, "center,{s},{},,", i + 1)?;
    }
    for (p, b) in traj.bottleneck.iter().enumerate() {
        writeln!(w, "bottleneck,,,{},{b}", p + 1)?;
    }
    for (&(v, i, p), m) in &report.m_terms {
        writeln!(w, "m,{v},{i},{p},{m}")?;
    }
    if let Some(ub) = report.ub_value {
        writeln!(w, "ub,,,,{ub}")?;
        writeln!(w, "c,,,,{}", report.c)?;
    }
    writeln!(w, "lb,,,,{}", report.lb_value)?;
    let rademacher = matches!(&data, Dataset::Points(p) if p.is_rademacher());
    writeln!(w, "lb_in_scope,,,,{}", u8::from(rademacher))?;
    if let Some(t) = report.tstar_sum {
        writeln!(w, "tstar_sum,,,,{t}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_means(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| kcenter::Error::Parse {
                path: path.to_path_buf(),
                line: line + 1,
                msg: e.to_string(),
            })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn t_star(a: &TStarArgs) -> Result<()> {
    let rows = read_means(&a.means)?;
    let mut inst = MaximinInstance::from_rows(&rows)?;
    if a.sigma2 != 1.0 {
        inst = inst.rescaled(a.sigma2)?;
    }
    let cfg = AscentConfig::with_iterations(a.iterations);
    let res = solve_t_star(&inst, &cfg)?;
    let (na, nb) = (inst.boxes(), inst.arms());

    let mut w = output(a.out.as_deref())?;
    writeln!(w, "kind,box,arm,value")?;
    for (i, row) in rows.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            writeln!(w, "mean,{i},{j},{x}")?;
        }
    }
    for i in 0..na {
        for j in 0..nb {
            writeln!(w, "omega,{i},{j},{}", res.omega.get(i, j))?;
        }
    }
    writeln!(w, "t_star,,,{}", res.t_star)?;
    writeln!(w, "f_value,,,{}", res.value)?;
    writeln!(w, "lipschitz,,,{}", res.lipschitz)?;
    writeln!(
        w,
        "envelope,,,{}",
        rate_envelope(res.lipschitz, na, nb, a.iterations)
    )?;
    w.flush()?;
    Ok(())
}
