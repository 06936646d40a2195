use std::path::Path;

use survboost::data::load_dataset_with;
use survboost::metrics::{write_brier_curve_csv, write_reports_csv, write_reports_json};
use survboost::nonparametric::censoring_km;
use survboost::survival_boost::load_any;
use survboost::synth::SynthOracle;
use survboost::{CensoringEstimator, Error, Predictor};

use crate::args::EvaluateArgs;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::scoring::{fmt4, print_table, score};

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into())
}

pub fn run(a: &EvaluateArgs, cfg: &RunConfig) -> CliResult<()> {
    let schema = cfg.schema(&a.schema);
    let eval = cfg.eval(&a.eval);
    let oracle = a.oracle.as_ref().map(SynthOracle::load).transpose()?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;

    let mut header = vec!["model".to_string(), "ibs".to_string()];
    header.extend(eval.quantiles.iter().map(|q| format!("acc@q{q}")));
    header.push("s_cen_log".into());
    let mut rows = Vec::new();

    for path in &a.models {
        let model = load_any(path)?;
        let data = load_dataset_with(&a.data, &schema, model.feature_info())?;
        if data.k_events > model.k_events() {
            return Err(Error::Validation(format!(
                "data has event type {} but model {} knows {} event types",
                data.k_events,
                path.display(),
                model.k_events()
            ))
            .into());
        }
        let data = data.with_k_events(model.k_events())?;
        let km;
        let g: &dyn CensoringEstimator = match &oracle {
            Some(o) => {
                if o.config.n_features != data.n_features() {
                    return Err(Error::DimensionMismatch {
                        expected: o.config.n_features,
                        got: data.n_features(),
                    }
                    .into());
                }
                o
            }
            None => {
                km = censoring_km(&data)?;
                &km
            }
        };
        let s = score(&model, &data, g, &eval)?;
        if s.n_clamped > 0 {
            eprintln!("note: {}: {} log arguments clamped in s_cen_log_simple", path.display(), s.n_clamped);
        }

        let name = stem(path);
        write_reports_json(&s.reports, a.out_dir.join(format!("{name}.metrics.json")))?;
        write_reports_csv(&s.reports, a.out_dir.join(format!("{name}.metrics.csv")))?;
        write_brier_curve_csv(&s.ibs_grid, &s.brier_curve, a.out_dir.join(format!("{name}.brier.csv")))?;

        let mut row = vec![name];
        row.extend(
            s.reports
                .iter()
                .filter(|r| r.name == "ibs" || r.name == "accuracy_in_time" || r.name == "s_cen_log_simple")
                .map(|r| fmt4(r.value)),
        );
        rows.push(row);
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    print_table(&header, &rows);
    Ok(())
}
