use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use survboost::data::{load_dataset, split};
use survboost::metrics::{default_ibs_grid, integrated_brier_score, DEFAULT_IBS_POINTS};
use survboost::nonparametric::censoring_km;
use survboost::predictor::MarginalModel;
use survboost::survival_boost::{fit, save_any, AnyModel, FitLog, Trainer};
use survboost::{Dataset, Exec, Predictor, SurvivalBoostConfig, SurvivalModel};

use super::{check_output, sibling};
use crate::args::{Estimator, TrainArgs};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::scoring::{fmt4, print_table};

const SEARCH_HOLDOUT: f64 = 0.2;

pub fn run(a: &TrainArgs, cfg: &RunConfig, seed: u64) -> CliResult<()> {
    let log_path = a.log.clone().unwrap_or_else(|| sibling(&a.model, "log.csv"));
    check_output(&a.model)?;
    check_output(&log_path)?;
    if let Some(dir) = &a.curves_dir {
        check_output(&dir.join("x"))?;
    }
    let data = load_dataset(&a.data, &cfg.schema(&a.schema))?;
    let model = match a.estimator {
        Estimator::SurvivalBoost => {
            let mut sb = cfg.boost(&a.boost, seed);
            if let Some(n) = a.search {
                sb = search(&data, &sb, n, seed, &sibling(&a.model, "search.csv"))?;
            }
            let (m, log) = fit_logged(&data, &sb)?;
            write_log(&log, &log_path)?;
            AnyModel::SurvivalBoost(m)
        }
        Estimator::AalenJohansen => AnyModel::Marginal(MarginalModel::aalen_johansen(&data)?),
        Estimator::KaplanMeier => AnyModel::Marginal(MarginalModel::kaplan_meier(&data)?),
    };
    save_any(&model, &a.model)?;
    if let Some(dir) = &a.curves_dir {
        write_curves(&model, dir)?;
    }
    eprintln!(
        "trained {} on {} rows ({} events); model written to {}",
        model.kind(),
        data.n_rows(),
        data.k_events,
        a.model.display()
    );
    Ok(())
}

/// Step functions as two-column CSVs: marginal survival and CIFs, or the
/// censoring KM a boosted model was seeded with.
fn write_curves(model: &AnyModel, dir: &Path) -> CliResult<()> {
    match model {
        AnyModel::Marginal(m) => {
            m.survival.write_csv(dir.join("survival.csv"))?;
            for (k, f) in m.cifs.iter().enumerate() {
                f.write_csv(dir.join(format!("cif_{}.csv", k + 1)))?;
            }
        }
        AnyModel::SurvivalBoost(m) => m.km_censoring.write_csv(dir.join("censoring_km.csv"))?,
    }
    Ok(())
}

fn fit_logged(data: &Dataset, config: &SurvivalBoostConfig) -> CliResult<(SurvivalModel, FitLog)> {
    let mut trainer = Trainer::new(data, config, Exec::default())?;
    let n = config.gbt.n_iterations.max(1);
    let mut total = 0.0;
    for r in 0..n {
        let log = trainer.step()?;
        total += log.elapsed_secs;
        if (r + 1) % 10 == 0 || r + 1 == n {
            eprintln!(
                "round {:>4}/{n}  loss {:.5}  ({:.1}s)",
                r + 1,
                log.loss_after,
                total
            );
        }
    }
    Ok(trainer.into_model()?)
}

fn write_log(log: &FitLog, path: &Path) -> CliResult<()> {
    let mut out = String::from("round,loss_before,loss_after,censoring_loss,n_rows,elapsed_secs\n");
    for r in &log.rounds {
        let cens = r.censoring_loss.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.round, r.loss_before, r.loss_after, cens, r.n_rows, r.elapsed_secs
        )
        .unwrap();
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    learning_rate: f64,
    n_iterations: usize,
    max_depth: usize,
    n_horizons: usize,
}

impl Trial {
    fn sample(rng: &mut impl Rng) -> Self {
        Self {
            learning_rate: rng.random_range(0.01f64.ln()..0.5f64.ln()).exp(),
            n_iterations: rng.random_range(20..=200),
            max_depth: rng.random_range(2..=10),
            n_horizons: rng.random_range(1..=5),
        }
    }

    fn apply(&self, base: &SurvivalBoostConfig) -> SurvivalBoostConfig {
        let mut c = base.clone();
        c.gbt.learning_rate = self.learning_rate;
        c.gbt.n_iterations = self.n_iterations;
        c.gbt.max_depth = self.max_depth;
        c.n_horizons_per_row = self.n_horizons;
        c
    }
}

/// Random search scored by holdout IBS with Kaplan-Meier censoring weights.
fn search(
    data: &Dataset,
    base: &SurvivalBoostConfig,
    n: usize,
    seed: u64,
    report: &Path,
) -> CliResult<SurvivalBoostConfig> {
    if n == 0 {
        return Err(CliError::Usage("--search needs at least one trial".into()));
    }
    let (train, valid) = split(data, SEARCH_HOLDOUT, seed)?;
    let valid = valid.with_k_events(data.k_events)?;
    let g = censoring_km(&valid)?;
    let grid = default_ibs_grid(&valid, DEFAULT_IBS_POINTS)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut rows = Vec::with_capacity(n);
    let mut best: Option<(f64, Trial)> = None;
    for i in 0..n {
        let t = Trial::sample(&mut rng);
        let model = fit(&train, &t.apply(base))?;
        let cif = model.predict_cif(&valid.features, &grid)?;
        let ibs = integrated_brier_score(&cif, &valid, &g)?.value;
        eprintln!(
            "trial {:>3}/{n}  lr {:.4}  rounds {:>3}  depth {:>2}  horizons {}  ibs {:.5}",
            i + 1,
            t.learning_rate,
            t.n_iterations,
            t.max_depth,
            t.n_horizons,
            ibs
        );
        if best.is_none_or(|(b, _)| ibs < b) {
            best = Some((ibs, t));
        }
        rows.push((t, ibs));
    }

    let mut csv = String::from("trial,learning_rate,n_iterations,max_depth,n_horizons,ibs\n");
    for (i, (t, ibs)) in rows.iter().enumerate() {
        writeln!(
            csv,
            "{i},{},{},{},{},{ibs}",
            t.learning_rate, t.n_iterations, t.max_depth, t.n_horizons
        )
        .unwrap();
    }
    std::fs::write(report, csv).map_err(|e| CliError::io(report, e))?;

    let (ibs, t) = best.expect("at least one trial");
    print_table(
        &["learning_rate", "n_iterations", "max_depth", "n_horizons", "holdout_ibs"],
        &[vec![
            fmt4(t.learning_rate),
            t.n_iterations.to_string(),
            t.max_depth.to_string(),
            t.n_horizons.to_string(),
            fmt4(ibs),
        ]],
    );
    Ok(t.apply(base))
}
