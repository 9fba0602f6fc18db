//! A replicated experiment from a JSON plan, summarised as quantiles.

use online_em::harness::{run_replications, ExperimentPlan};

const PLAN: &str = r#"{
    "name": "ppca-online-vs-batch",
    "master_seed": 42,
    "replications": 100,
    "sizes": [500, 5000],
    "data": "fresh",
    "model": {"kind": "ppca1", "dim": 5, "true_norm_u": 1.0, "true_lambda": 2.0},
    "estimators": [
        {"algorithm": "batch", "iterations": 10},
        {"algorithm": "online", "alpha": 0.6, "averaging_start": 0.5}
    ],
    "metrics": ["norm_u_sq"]
}"#;

fn main() -> online_em::Result<()> {
    let report = run_replications(&ExperimentPlan::from_json(PLAN)?)?;
    for label in ["batch", "online-0.6", "online-0.6+avg"] {
        for n in [500, 5000] {
            let row = *report.series(label, n, "norm_u_sq").last().expect("rows present");
            let s = row.summary.as_ref().expect("successful replications");
            let band = row
                .band
                .as_ref()
                .map(|b| format!(" band [{:.3}, {:.3}]", b.lower, b.upper))
                .unwrap_or_default();
            println!(
                "{label:>15} N={n:>5}: q25 {:.3} median {:.3} q75 {:.3}{band}",
                s.q25, s.q50, s.q75
            );
        }
    }
    report.write_csv(std::io::stdout().lock())
}
