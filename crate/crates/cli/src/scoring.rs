//! Metric battery shared by `evaluate` and `benchmark`.

use survboost::metrics::{
    accuracy_in_time, brier_curve, c_index_at, default_ibs_grid, horizon_quantiles,
    integrated_brier_score, s_cen_log_simple, s_cen_nodes, MetricReport,
};
use survboost::{CensoringEstimator, Dataset, Error, Predictor, TimeGrid};

use crate::config::EvalConfig;
use crate::error::CliResult;

pub struct Scores {
    pub reports: Vec<MetricReport>,
    pub ibs_grid: TimeGrid,
    pub brier_curve: Vec<Vec<f64>>,
    /// Log arguments clamped inside `S_Cen-log-simple`.
    pub n_clamped: usize,
}

pub fn score(
    model: &dyn Predictor,
    test: &Dataset,
    g: &dyn CensoringEstimator,
    cfg: &EvalConfig,
) -> CliResult<Scores> {
    let grid = default_ibs_grid(test, cfg.grid_size)?;
    let cif = model.predict_cif(&test.features, &grid)?;
    let mut reports = vec![integrated_brier_score(&cif, test, g)?];
    let curve = brier_curve(&cif, test, g)?;

    for h in horizon_quantiles(test, &cfg.quantiles)? {
        let at = model.predict_cif(&test.features, &TimeGrid::single(h)?)?;
        reports.push(accuracy_in_time(&at.horizon_slice(0), test, h)?);
        if cfg.c_index {
            for k in 1..=test.k_events {
                match c_index_at(&at.cif_column(0, k as usize), test, h, k) {
                    Ok(r) => reports.push(r),
                    Err(Error::NoComparablePairs) => {
                        eprintln!("note: no comparable pairs for event {k} at horizon {h}")
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }

    let nodes = s_cen_nodes(test.t_max, cfg.b)?;
    let at_nodes = model.predict_cif(&test.features, &nodes)?;
    let s = s_cen_log_simple(&at_nodes, test)?;
    reports.push(MetricReport {
        name: "s_cen_log_simple".into(),
        value: s.value,
        per_event_values: None,
        grid: nodes.horizons().to_vec(),
        n_effective: test.n_rows(),
    });

    Ok(Scores {
        reports,
        ibs_grid: grid,
        brier_curve: curve,
        n_clamped: s.n_clamped,
    })
}

/// Prints left-aligned columns padded to the widest cell.
pub fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        println!("{}", padded.join("  ").trim_end());
    };
    line(header.to_vec());
    for r in rows {
        line(r.iter().map(String::as_str).collect());
    }
}

pub fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}
