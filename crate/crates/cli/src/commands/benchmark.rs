use std::fmt::Write as _;
use std::time::Instant;

use survboost::data::{load_dataset, split};
use survboost::metrics::{accuracy_in_time, default_ibs_grid, horizon_quantiles, integrated_brier_score};
use survboost::nonparametric::censoring_km;
use survboost::predictor::MarginalModel;
use survboost::survival_boost::fit;
use survboost::synth::generate;
use survboost::{CensoringEstimator, Predictor, TimeGrid};

use crate::args::{BenchmarkArgs, ModelChoice};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::scoring::{fmt4, print_table};

fn label(m: ModelChoice) -> &'static str {
    match m {
        ModelChoice::SurvivalBoost => "survival_boost",
        ModelChoice::AalenJohansen => "aalen_johansen",
        ModelChoice::KaplanMeier => "kaplan_meier",
        ModelChoice::Oracle => "oracle",
    }
}

pub fn run(a: &BenchmarkArgs, cfg: &RunConfig, seed: u64) -> CliResult<()> {
    let eval = cfg.eval(&a.eval);
    let (data, oracle) = match &a.data {
        Some(p) => (load_dataset(p, &cfg.schema(&a.schema))?, None),
        None => {
            let (d, o) = generate(&cfg.synth(&a.synth, seed))?;
            (d, Some(o))
        }
    };
    let models = a.models.clone().unwrap_or_else(|| {
        vec![
            ModelChoice::SurvivalBoost,
            ModelChoice::AalenJohansen,
            ModelChoice::KaplanMeier,
        ]
    });
    if models.contains(&ModelChoice::Oracle) && oracle.is_none() {
        return Err(CliError::Usage("the oracle model needs synthetic data (omit --data)".into()));
    }

    let (train, test) = split(&data, a.test_fraction.unwrap_or(eval.test_fraction), seed)?;
    let test = test.with_k_events(data.k_events)?;
    let km;
    let g: &dyn CensoringEstimator = match &oracle {
        Some(o) => o,
        None => {
            km = censoring_km(&test)?;
            &km
        }
    };
    let grid = default_ibs_grid(&test, eval.grid_size)?;
    let median = horizon_quantiles(&test, &[0.5])?[0];
    let at_median = TimeGrid::single(median)?;
    let sb_config = cfg.boost(&a.boost, seed);
    let k = data.k_events as usize;

    let mut rows = Vec::new();
    for &m in &models {
        let start = Instant::now();
        let model: Box<dyn Predictor> = match m {
            ModelChoice::SurvivalBoost => Box::new(fit(&train, &sb_config)?),
            ModelChoice::AalenJohansen => Box::new(MarginalModel::aalen_johansen(&train)?),
            ModelChoice::KaplanMeier => Box::new(MarginalModel::kaplan_meier(&train)?),
            ModelChoice::Oracle => Box::new(oracle.clone().expect("checked above")),
        };
        let fit_secs = start.elapsed().as_secs_f64();
        let ibs = integrated_brier_score(&model.predict_cif(&test.features, &grid)?, &test, g)?;
        let probs = model.predict_cif(&test.features, &at_median)?.horizon_slice(0);
        let acc = accuracy_in_time(&probs, &test, median)?;
        let mut row = vec![label(m).to_string(), fmt4(ibs.value)];
        row.extend(ibs.per_event_values.iter().flatten().map(|v| fmt4(*v)));
        row.push(fmt4(acc.value));
        row.push(fmt_secs(fit_secs));
        rows.push((row, ibs, acc.value, fit_secs));
    }

    let mut header = vec!["model".to_string(), "ibs".to_string()];
    header.extend((1..=k).map(|c| format!("ibs_{c}")));
    header.push("acc_median".into());
    header.push("fit_secs".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let table: Vec<Vec<String>> = rows.iter().map(|r| r.0.clone()).collect();
    print_table(&header_refs, &table);

    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut out = header.join(",");
        out.push('\n');
        for ((row, ibs, acc, secs), &m) in rows.iter().zip(&models) {
            write!(out, "{},{}", label(m), ibs.value).unwrap();
            for v in ibs.per_event_values.iter().flatten() {
                write!(out, ",{v}").unwrap();
            }
            writeln!(out, ",{acc},{secs}").unwrap();
            debug_assert_eq!(row[0], label(m));
        }
        let path = dir.join("benchmark.csv");
        std::fs::write(&path, out).map_err(|e| CliError::io(&path, e))?;
    }
    eprintln!(
        "{} train / {} test rows, {} events, horizon for accuracy {median:.4}",
        train.n_rows(),
        test.n_rows(),
        k
    );
    Ok(())
}

fn fmt_secs(s: f64) -> String {
    if s >= 0.01 {
        format!("{s:.2}")
    } else {
        format!("{s:.1e}")
    }
}
