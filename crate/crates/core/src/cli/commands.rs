use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde_json::{json, Value};

use crate::cli::config::{ModelKind, RunConfig, TrajectoryFormat};
use crate::cli::{CompareArgs, DataArgs, EstimatorArgs, ExperimentArgs, FitArgs, ModelArgs, OutputArgs, SimulateArgs};
use crate::error::{Error, Result};
use crate::estimators::Trajectory;
use crate::harness::{
    run_replications_with, sample_poisson_mixture, sample_ppca1, Algorithm, EstimatorSpec, ExperimentPlan, RngSpec,
    RunOptions,
};
use crate::io::{param_json, read_dataset_file, trajectory_json, write_dataset, write_json_file, write_trajectory_csv};
use crate::model::{normalized_loglik, LatentModel};
use crate::models::{MixtureParam, PoissonMixture, Ppca1, Ppca1Param};

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn merge_model(cfg: &mut RunConfig, a: &ModelArgs) {
    let m = &mut cfg.model;
    macro_rules! set {
        ($($f:ident),*) => { $( if a.$f.is_some() { m.$f = a.$f.clone(); } )* };
    }
    set!(
        dim,
        u,
        lambda,
        weights,
        means,
        init_u,
        init_lambda,
        init_weights,
        init_means
    );
    if a.kind.is_some() {
        m.kind = a.kind;
    }
}

fn merge_data(cfg: &mut RunConfig, a: &DataArgs) {
    if a.data_path.is_some() {
        cfg.data.path = a.data_path.clone();
    }
    if a.n.is_some() {
        cfg.data.n = a.n;
    }
    if a.seed.is_some() {
        cfg.data.seed = a.seed;
    }
}

fn merge_output(cfg: &mut RunConfig, a: &OutputArgs) {
    let o = &mut cfg.output;
    if a.out_path.is_some() {
        o.path = a.out_path.clone();
    }
    if a.summary.is_some() {
        o.summary = a.summary.clone();
    }
    if a.format.is_some() {
        o.format = a.format;
    }
    if a.record.is_some() {
        o.record = a.record;
    }
}

fn apply_estimator_args(spec: &mut EstimatorSpec, a: &EstimatorArgs) {
    macro_rules! set {
        ($($f:ident),*) => { $( if a.$f.is_some() { spec.$f = a.$f.clone(); } )* };
    }
    set!(
        name,
        alpha,
        freeze,
        minibatch,
        iterations,
        tours,
        scan,
        scan_seed,
        averaging_start,
        prior
    );
    if let Some(algo) = a.algorithm {
        spec.algorithm = algo;
    }
}

fn model_kind(cfg: &RunConfig) -> Result<ModelKind> {
    cfg.model
        .kind
        .ok_or_else(|| Error::Config("no model kind: pass --model ppca1 or --model poisson-mix".into()))
}

fn ppca_truth(cfg: &RunConfig) -> Result<Ppca1Param> {
    let m = &cfg.model;
    let u =
        m.u.clone()
            .ok_or_else(|| Error::Config("PPCA simulation needs the loading `u`".into()))?;
    let lambda = m
        .lambda
        .ok_or_else(|| Error::Config("PPCA simulation needs `lambda`".into()))?;
    if let Some(d) = m.dim {
        if d != u.len() {
            return Err(Error::Config(format!(
                "`dim` is {d} but `u` has {} coordinates",
                u.len()
            )));
        }
    }
    let theta = Ppca1Param::new(u, lambda);
    Ppca1::new(theta.u.len())
        .and_then(|model| model.validate_param(&theta))
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(theta)
}

fn mixture_truth(cfg: &RunConfig) -> Result<MixtureParam> {
    let m = &cfg.model;
    let w = m
        .weights
        .clone()
        .ok_or_else(|| Error::Config("mixture simulation needs `weights`".into()))?;
    let b = m
        .means
        .clone()
        .ok_or_else(|| Error::Config("mixture simulation needs `means`".into()))?;
    if w.len() != b.len() {
        return Err(Error::Config(format!("{} weights but {} means", w.len(), b.len())));
    }
    let theta = MixtureParam::poisson(&w, &b);
    PoissonMixture::poisson(w.len())
        .and_then(|model| model.validate_param(&theta))
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(theta)
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::Config("simulation needs an explicit --seed".into()))
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(File::create(p).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?)
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub(super) fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    merge_model(&mut cfg, &a.model);
    if a.n.is_some() {
        cfg.data.n = a.n;
    }
    if a.seed.is_some() {
        cfg.data.seed = a.seed;
    }
    if a.out.is_some() {
        cfg.output.path = a.out.clone();
    }
    let n = cfg.data.n.ok_or_else(|| Error::Config("simulation needs --n".into()))?;
    let seed = require_seed(cfg.data.seed)?;
    let mut rng = RngSpec::new(seed).replication(0);
    let mut out = open_output(&cfg.output.path)?;
    let meta = match model_kind(&cfg)? {
        ModelKind::Ppca1 => {
            let theta = ppca_truth(&cfg)?;
            let data = sample_ppca1(&theta, n, &mut rng)?;
            write_dataset(&mut out, &data, theta.u.len())?;
            json!({"model": "ppca1", "dim": theta.u.len(), "theta_true": param_json(&Ppca1::new(theta.u.len())?, &theta),
                   "n": n, "seed": seed})
        }
        ModelKind::PoissonMixture => {
            let theta = mixture_truth(&cfg)?;
            let data = sample_poisson_mixture(&theta, n, &mut rng)?;
            write_dataset(&mut out, &data, 1)?;
            json!({"model": "poisson-mixture", "components": theta.n_components(),
                   "theta_true": param_json(&PoissonMixture::poisson(theta.n_components())?, &theta), "n": n, "seed": seed})
        }
    };
    out.flush()?;
    if let Some(p) = &cfg.output.path {
        write_json_file(&sidecar(p), &meta)?;
        info!("wrote {n} observations to {}", p.display());
    }
    Ok(())
}

/// A model, its data and the estimators' starting point.
enum Problem {
    Ppca(Ppca1, Vec<Vec<f64>>, Ppca1Param),
    Poisson(PoissonMixture, Vec<u64>, MixtureParam),
}

fn load_problem(cfg: &RunConfig) -> Result<Problem> {
    cfg.check_data_source()?;
    let kind = model_kind(cfg)?;
    let m = &cfg.model;
    match kind {
        ModelKind::Ppca1 => {
            let data = match &cfg.data.path {
                Some(p) => {
                    let (data, width): (Vec<Vec<f64>>, usize) = read_dataset_file(p)?;
                    if let Some(d) = m.dim {
                        if d != width {
                            return Err(Error::Data(format!(
                                "{} has {width} columns but the model has dimension {d}",
                                p.display()
                            )));
                        }
                    }
                    data
                }
                None => {
                    let truth = ppca_truth(cfg)?;
                    sample_ppca1(
                        &truth,
                        cfg.data.n.unwrap_or(0),
                        &mut RngSpec::new(require_seed(cfg.data.seed)?).replication(0),
                    )?
                }
            };
            let dim = match (data.first(), m.dim, &m.u) {
                (Some(y), _, _) => y.len(),
                (None, Some(d), _) => d,
                (None, None, Some(u)) => u.len(),
                (None, None, None) => return Err(Error::Data("empty data set".into())),
            };
            let model = Ppca1::new(dim)?;
            let init_u = m.init_u.clone().unwrap_or_else(|| vec![0.5 / (dim as f64).sqrt(); dim]);
            let theta0 = Ppca1Param::new(init_u, m.init_lambda.unwrap_or(1.0));
            model
                .validate_param(&theta0)
                .map_err(|e| Error::Config(format!("initial point: {e}")))?;
            for (t, y) in data.iter().enumerate() {
                model
                    .validate_obs(y)
                    .map_err(|e| Error::Data(format!("observation {}: {e}", t + 1)))?;
            }
            Ok(Problem::Ppca(model, data, theta0))
        }
        ModelKind::PoissonMixture => {
            let data = match &cfg.data.path {
                Some(p) => {
                    let (data, width): (Vec<u64>, usize) = read_dataset_file(p)?;
                    if width != 1 {
                        return Err(Error::Data(format!(
                            "{} has {width} columns; counts need one",
                            p.display()
                        )));
                    }
                    data
                }
                None => {
                    let truth = mixture_truth(cfg)?;
                    sample_poisson_mixture(
                        &truth,
                        cfg.data.n.unwrap_or(0),
                        &mut RngSpec::new(require_seed(cfg.data.seed)?).replication(0),
                    )?
                }
            };
            let means = m
                .init_means
                .clone()
                .ok_or_else(|| Error::Config("mixture fits need initial means (--init-means)".into()))?;
            let k = means.len();
            let weights = m.init_weights.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
            if weights.len() != k {
                return Err(Error::Config(format!(
                    "{} initial weights but {k} initial means",
                    weights.len()
                )));
            }
            let model = PoissonMixture::poisson(k).map_err(|e| Error::Config(e.to_string()))?;
            let theta0 = MixtureParam::poisson(&weights, &means);
            model
                .validate_param(&theta0)
                .map_err(|e| Error::Config(format!("initial point: {e}")))?;
            Ok(Problem::Poisson(model, data, theta0))
        }
    }
}

struct FitResult {
    label: String,
    summary: Value,
    csv_rows: Vec<u8>,
    json: Value,
}

fn fit_one<M: LatentModel>(
    model: &M,
    data: &[M::Obs],
    theta0: &M::Param,
    spec: &EstimatorSpec,
    cfg: &RunConfig,
) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::Data("cannot fit an empty data set".into()));
    }
    spec.validate()?;
    let opts = RunOptions {
        record: cfg.output.record.unwrap_or_default().into(),
        predictive_loglik: true,
        scan_seed: None,
    };
    let start = Instant::now();
    let traj: Trajectory<M::Param, M::Stat> = spec.run(model, data, theta0, &opts)?;
    let seconds = start.elapsed().as_secs_f64();
    let final_ll = normalized_loglik(model, &traj.final_theta, data)?;
    let averaged_ll = traj
        .averaged_theta
        .as_ref()
        .map(|t| normalized_loglik(model, t, data))
        .transpose()?;
    let label = spec.label();
    info!(
        "{label}: {} steps in {seconds:.3} s, final normalised log-likelihood {final_ll}",
        traj.last_step
    );
    let summary = json!({
        "estimator": label,
        "spec": spec,
        "n": data.len(),
        "steps": traj.last_step,
        "final_theta": param_json(model, &traj.final_theta),
        "averaged_theta": traj.averaged_theta.as_ref().map(|t| param_json(model, t)),
        "final_loglik": final_ll,
        "averaged_loglik": averaged_ll,
        "tour_logliks": traj.tour_logliks,
        "frozen_steps": traj.frozen_steps.len(),
        "projected_steps": traj.projected_steps.len(),
        "wall_clock_seconds": seconds,
    });
    let mut csv_rows = Vec::new();
    write_trajectory_csv(&mut csv_rows, model, &traj)?;
    Ok(FitResult {
        label,
        summary,
        csv_rows,
        json: trajectory_json(model, &traj),
    })
}

fn fit_all(cfg: &RunConfig, specs: &[EstimatorSpec]) -> Result<Vec<FitResult>> {
    match load_problem(cfg)? {
        Problem::Ppca(model, data, theta0) => specs.iter().map(|s| fit_one(&model, &data, &theta0, s, cfg)).collect(),
        Problem::Poisson(model, data, theta0) => {
            specs.iter().map(|s| fit_one(&model, &data, &theta0, s, cfg)).collect()
        }
    }
}

fn write_summary(path: &Option<PathBuf>, value: &Value) -> Result<()> {
    match path {
        Some(p) => write_json_file(p, value),
        None => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, value)?;
            writeln!(out)?;
            Ok(())
        }
    }
}

pub(super) fn fit(a: FitArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    merge_model(&mut cfg, &a.model);
    merge_data(&mut cfg, &a.data);
    merge_output(&mut cfg, &a.output);
    let mut spec = match (&cfg.estimator, a.estimator.algorithm) {
        (Some(s), _) => s.clone(),
        (None, Some(algo)) => EstimatorSpec::new(algo),
        (None, None) => return Err(Error::Config("no estimator: pass --algo".into())),
    };
    apply_estimator_args(&mut spec, &a.estimator);
    let result = fit_all(&cfg, std::slice::from_ref(&spec))?.remove(0);
    if let Some(path) = &cfg.output.path {
        match cfg.output.format.unwrap_or_default() {
            TrajectoryFormat::Csv => std::fs::write(path, &result.csv_rows)
                .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?,
            TrajectoryFormat::Json => write_json_file(path, &result.json)?,
        }
    }
    write_summary(&cfg.output.summary, &result.summary)
}

pub(super) fn compare(a: CompareArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    merge_model(&mut cfg, &a.model);
    merge_data(&mut cfg, &a.data);
    merge_output(&mut cfg, &a.output);
    let specs: Vec<EstimatorSpec> = match &a.algos {
        Some(algos) => algos.iter().map(|&algo| shared_spec(algo, &a.estimator)).collect(),
        None if !cfg.estimators.is_empty() => cfg.estimators.clone(),
        None => {
            return Err(Error::Config(
                "no estimators: pass --algos or list `estimators` in the config".into(),
            ))
        }
    };
    let mut labels: Vec<String> = specs.iter().map(EstimatorSpec::label).collect();
    labels.sort();
    labels.dedup();
    if labels.len() != specs.len() {
        return Err(Error::Config("estimator names must be distinct".into()));
    }
    let results = fit_all(&cfg, &specs)?;

    let mut out = open_output(&cfg.output.path)?;
    for (i, r) in results.iter().enumerate() {
        let text = std::str::from_utf8(&r.csv_rows).map_err(|e| Error::Data(e.to_string()))?;
        for (j, line) in text.lines().enumerate() {
            if j == 0 && i > 0 {
                continue;
            }
            let first = if j == 0 { "estimator" } else { r.label.as_str() };
            writeln!(out, "{},{line}", csv_field(first))?;
        }
    }
    out.flush()?;
    let merged = json!({
        "estimators": results.iter().map(|r| r.summary.clone()).collect::<Vec<_>>(),
    });
    let summary_path = cfg.output.summary.clone();
    if summary_path.is_none() && cfg.output.path.is_none() {
        return Ok(());
    }
    write_summary(&summary_path, &merged)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// An estimator of the given algorithm taking only the shared flags that
/// apply to it.
fn shared_spec(algo: Algorithm, a: &EstimatorArgs) -> EstimatorSpec {
    let mut s = EstimatorSpec::new(algo);
    match algo {
        Algorithm::Batch => s.iterations = a.iterations.or(a.tours),
        Algorithm::Online => {
            s.alpha = a.alpha;
            s.freeze = a.freeze;
            s.minibatch = a.minibatch;
            s.tours = a.tours;
            s.scan = a.scan;
            s.scan_seed = a.scan_seed;
            s.averaging_start = a.averaging_start;
            s.prior = a.prior.clone();
        }
        Algorithm::Incremental => {
            s.freeze = a.freeze;
            s.tours = a.tours;
        }
        Algorithm::Titterington => {
            s.alpha = a.alpha;
            s.tours = a.tours;
            s.scan = a.scan;
            s.scan_seed = a.scan_seed;
        }
    }
    s
}

pub(super) fn experiment(a: ExperimentArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.plan)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", a.plan.display())))?;
    let mut plan = ExperimentPlan::from_json(&text).map_err(|e| e.context(a.plan.display()))?;
    if let Some(seed) = a.seed {
        plan.master_seed = seed;
    }
    let start = Instant::now();
    let report = run_replications_with(&plan, a.workers)?;
    info!(
        "{}: {} rows, {} failed runs, {:.1} s",
        plan.name,
        report.rows.len(),
        report.failures.len(),
        start.elapsed().as_secs_f64()
    );
    match &a.out {
        Some(prefix) => {
            let with_ext = |ext: &str| {
                let mut s = prefix.as_os_str().to_owned();
                s.push(ext);
                PathBuf::from(s)
            };
            let csv_path = with_ext(".csv");
            let file = File::create(&csv_path)
                .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", csv_path.display()))))?;
            report.write_csv(file)?;
            let json_path = with_ext(".json");
            std::fs::write(&json_path, report.to_json()? + "\n")
                .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", json_path.display()))))?;
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(())
}
