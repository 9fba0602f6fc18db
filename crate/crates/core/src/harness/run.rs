use std::borrow::Cow;

use log::{info, warn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::plan::{DataMode, EstimatorSpec, ExperimentPlan, ModelSpec, RunOptions};
use crate::harness::report::{ExperimentReport, ReplicationFailure, ReportRow};
use crate::harness::rng::{RngSpec, StreamPurpose};
use crate::harness::sampling::{sample_poisson_mixture, sample_ppca1};
use crate::harness::stats::{fisher_band_ppca_norm_u, FisherBand, Summary};
use crate::model::{normalized_loglik, LatentModel};

/// A replication's data set and initial parameter.
type Prepared<'a, M> = (Cow<'a, [<M as LatentModel>::Obs]>, <M as LatentModel>::Param);

/// Run every replication of `plan` on the global worker pool.
pub fn run_replications(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    run_replications_with(plan, None)
}

/// Run every replication of `plan` on `workers` threads (default: all cores).
/// The report does not depend on the number of workers.
pub fn run_replications_with(plan: &ExperimentPlan, workers: Option<usize>) -> Result<ExperimentReport> {
    plan.validate()?;
    match workers {
        None => dispatch(plan),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(|| dispatch(plan)),
    }
}

#[derive(Debug, Clone)]
enum Metric {
    Loglik,
    Coord(usize),
    SumOfSquares(usize),
}

fn resolve_metrics<M: LatentModel>(model: &M, names: &[String], extra: &[(&str, Metric)]) -> Result<Vec<Metric>> {
    let labels = model.param_labels();
    names
        .iter()
        .map(|name| {
            if name == "loglik" {
                return Ok(Metric::Loglik);
            }
            if let Some((_, m)) = extra.iter().find(|(n, _)| n == name) {
                return Ok(m.clone());
            }
            labels
                .iter()
                .position(|l| l == name)
                .map(Metric::Coord)
                .ok_or_else(|| Error::Config(format!("unknown metric {name:?}; expected loglik or one of {labels:?}")))
        })
        .collect()
}

fn dispatch(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    match &plan.model {
        ModelSpec::Ppca1 { .. } => {
            let (model, truth) = plan.model.ppca1_truth()?;
            let init = plan.model.ppca1_init(model.dim())?;
            let metrics = resolve_metrics(
                &model,
                &plan.metrics,
                &[("norm_u_sq", Metric::SumOfSquares(model.dim()))],
            )?;
            let (lambda, norm) = (truth.lambda, truth.norm_u_sq());
            let band = |metric: &str, n: usize| -> Result<Option<FisherBand>> {
                if metric == "norm_u_sq" {
                    fisher_band_ppca_norm_u(lambda, norm, n).map(Some)
                } else {
                    Ok(None)
                }
            };
            run_model(plan, &model, &truth, sample_ppca1, |_| Ok(init.clone()), &metrics, band)
        }
        ModelSpec::PoissonMixture { .. } => {
            let (model, truth) = plan.model.mixture_truth()?;
            let metrics = resolve_metrics(&model, &plan.metrics, &[])?;
            run_model(
                plan,
                &model,
                &truth,
                sample_poisson_mixture,
                |rng| plan.model.mixture_init(rng),
                &metrics,
                |_, _| Ok(None),
            )
        }
    }
}

/// Values of one estimator in one replication: `[checkpoint][metric]`, plus
/// the metrics of the averaged parameter when averaging is requested.
struct EstimatorValues {
    values: Vec<Vec<f64>>,
    averaged: Option<Vec<f64>>,
}

fn evaluate<M: LatentModel>(model: &M, theta: &M::Param, data: &[M::Obs], metrics: &[Metric]) -> Result<Vec<f64>> {
    let coords = model.param_coords(theta);
    metrics
        .iter()
        .map(|m| {
            let v = match m {
                Metric::Loglik => normalized_loglik(model, theta, data)?,
                Metric::Coord(i) => coords[*i],
                Metric::SumOfSquares(k) => coords[..*k].iter().map(|c| c * c).sum(),
            };
            if v.is_nan() {
                Err(Error::Domain("tracked value is NaN".into()))
            } else {
                Ok(v)
            }
        })
        .collect()
}

fn run_one<M: LatentModel>(
    spec: &EstimatorSpec,
    model: &M,
    data: &[M::Obs],
    theta0: &M::Param,
    metrics: &[Metric],
    scan_seed: u64,
) -> Result<EstimatorValues> {
    let n = data.len();
    let opts = RunOptions {
        record: spec.checkpoint_policy(n),
        predictive_loglik: false,
        scan_seed: Some(scan_seed),
    };
    let traj = spec.run(model, data, theta0, &opts)?;
    let values = spec
        .checkpoints(n)
        .into_iter()
        .map(|c| {
            let step = spec.checkpoint_step(c, n);
            let rec = traj
                .record_at(step)
                .ok_or_else(|| Error::Argument(format!("step {step} missing from the trajectory")))?;
            evaluate(model, &rec.theta, data, metrics)
        })
        .collect::<Result<Vec<_>>>()?;
    let averaged = traj
        .averaged_theta
        .as_ref()
        .map(|t| evaluate(model, t, data, metrics))
        .transpose()?;
    Ok(EstimatorValues { values, averaged })
}

fn run_model<M, S, I, B>(
    plan: &ExperimentPlan,
    model: &M,
    truth: &M::Param,
    sample: S,
    init: I,
    metrics: &[Metric],
    band: B,
) -> Result<ExperimentReport>
where
    M: LatentModel,
    S: Fn(&M::Param, usize, &mut ChaCha8Rng) -> Result<Vec<M::Obs>> + Sync,
    I: Fn(&mut ChaCha8Rng) -> Result<M::Param> + Sync,
    B: Fn(&str, usize) -> Result<Option<FisherBand>>,
{
    let rng = RngSpec::new(plan.master_seed);
    let reps = plan.replications;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut failed_replications = 0usize;

    for (g, &n) in plan.sizes.iter().enumerate() {
        let g = g as u64;
        info!("{}: N = {n}, {reps} replications", plan.name);
        let fixed = match plan.data {
            DataMode::Fixed => Some(sample(truth, n, &mut rng.stream(StreamPurpose::FixedData, g, 0))?),
            DataMode::Fresh => None,
        };

        let outcomes: Vec<Vec<std::result::Result<EstimatorValues, String>>> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let prepared = (|| -> Result<Prepared<'_, M>> {
                    let data = match &fixed {
                        Some(d) => Cow::Borrowed(d.as_slice()),
                        None => Cow::Owned(sample(truth, n, &mut rng.stream(StreamPurpose::Data, g, r))?),
                    };
                    let theta0 = init(&mut rng.stream(StreamPurpose::Init, g, r))?;
                    Ok((data, theta0))
                })();
                let (data, theta0) = match prepared {
                    Ok(p) => p,
                    Err(e) => return plan.estimators.iter().map(|_| Err(e.to_string())).collect(),
                };
                let mut scan = rng.stream(StreamPurpose::Scan, g, r);
                plan.estimators
                    .iter()
                    .map(|spec| {
                        let scan_seed: u64 = scan.random();
                        run_one(spec, model, &data, &theta0, metrics, scan_seed).map_err(|e| e.to_string())
                    })
                    .collect()
            })
            .collect();

        for (r, per_est) in outcomes.iter().enumerate() {
            let mut any = false;
            for (spec, out) in plan.estimators.iter().zip(per_est) {
                if let Err(msg) = out {
                    warn!("{} N={n} replication {r}: {msg}", spec.label());
                    failures.push(ReplicationFailure {
                        estimator: spec.label(),
                        n,
                        replication: r as u64,
                        message: msg.clone(),
                    });
                    any = true;
                }
            }
            if any {
                failed_replications += 1;
            }
        }

        for (j, spec) in plan.estimators.iter().enumerate() {
            let label = spec.label();
            let unit = spec.checkpoint_unit();
            let checkpoints = spec.checkpoints(n);
            let column = |pick: &dyn Fn(&EstimatorValues) -> Option<f64>| -> Vec<Option<f64>> {
                outcomes.iter().map(|o| o[j].as_ref().ok().and_then(pick)).collect()
            };
            let mut push = |estimator: &str, checkpoint: u64, metric: &str, values: Vec<Option<f64>>| -> Result<()> {
                let ok: Vec<f64> = values.iter().flatten().copied().collect();
                rows.push(ReportRow {
                    estimator: estimator.to_string(),
                    n,
                    unit,
                    checkpoint,
                    metric: metric.to_string(),
                    summary: if ok.is_empty() { None } else { Some(Summary::of(&ok)?) },
                    band: band(metric, n)?,
                    values: plan.keep_values.then_some(values),
                });
                Ok(())
            };
            for (ci, &c) in checkpoints.iter().enumerate() {
                for (mi, metric) in plan.metrics.iter().enumerate() {
                    push(&label, c, metric, column(&|v| Some(v.values[ci][mi])))?;
                }
            }
            if spec.averaging_start.is_some() {
                let last = *checkpoints.last().expect("at least one checkpoint");
                let avg_label = format!("{label}+avg");
                for (mi, metric) in plan.metrics.iter().enumerate() {
                    push(
                        &avg_label,
                        last,
                        metric,
                        column(&|v| v.averaged.as_ref().map(|a| a[mi])),
                    )?;
                }
            }
        }
    }

    let total = reps * plan.sizes.len();
    if failed_replications * 100 > total {
        return Err(Error::Replications {
            failed: failed_replications,
            total,
        });
    }
    Ok(ExperimentReport {
        name: plan.name.clone(),
        master_seed: plan.master_seed,
        replications: reps,
        rows,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::plan::MeansInit;

    fn poisson_plan(reps: usize) -> ExperimentPlan {
        let mut online = EstimatorSpec::online(0.6);
        online.tours = Some(2);
        ExperimentPlan {
            name: "unit".into(),
            master_seed: 11,
            replications: reps,
            sizes: vec![40],
            data: DataMode::Fixed,
            model: ModelSpec::PoissonMixture {
                weights: vec![0.8, 0.2],
                means: vec![1.0, 3.0],
                init_weights: None,
                init_means: MeansInit::Uniform { low: 0.5, high: 5.0 },
            },
            estimators: vec![EstimatorSpec::batch(2), online, EstimatorSpec::incremental(2)],
            metrics: vec!["loglik".into(), "mean1".into()],
            keep_values: true,
        }
    }

    #[test]
    fn single_replication_collapses_quantiles() {
        let report = run_replications(&poisson_plan(1)).unwrap();
        assert!(!report.rows.is_empty());
        for row in &report.rows {
            let s = row.summary.unwrap();
            let v = row.values.as_ref().unwrap()[0].unwrap();
            for x in [s.q05, s.q25, s.q50, s.q75, s.q95, s.mean] {
                assert_eq!(x, v);
            }
        }
        assert_eq!(report.series("batch", 40, "loglik").len(), 3);
        assert_eq!(report.series("online-0.6", 40, "loglik").len(), 3);
    }

    #[test]
    fn worker_count_does_not_change_the_report() {
        let plan = poisson_plan(6);
        let a = run_replications_with(&plan, Some(1)).unwrap();
        let b = run_replications_with(&plan, Some(3)).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn unknown_metric_is_a_config_error() {
        let mut plan = poisson_plan(1);
        plan.metrics = vec!["lambda".into()];
        assert!(matches!(run_replications(&plan), Err(Error::Config(_))));
    }

    #[test]
    fn averaging_adds_rows() {
        let mut plan = poisson_plan(2);
        plan.estimators[1].averaging_start = Some(0.5);
        let report = run_replications(&plan).unwrap();
        assert!(report.row("online-0.6+avg", 40, 2, "loglik").is_some());
    }
}
