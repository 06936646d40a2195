use std::fmt::Write as _;

use survboost::data::load_features;
use survboost::metrics::DEFAULT_IBS_POINTS;
use survboost::survival_boost::load_any;
use survboost::{Predictor, TimeGrid};

use super::check_output;
use crate::args::PredictArgs;
use crate::error::{CliError, CliResult};

pub fn run(a: &PredictArgs) -> CliResult<()> {
    check_output(&a.out)?;
    let model = load_any(&a.model)?;
    let x = load_features(&a.data, model.feature_info())?;
    let grid = match &a.grid {
        Some(g) => TimeGrid::new(g.clone())?,
        None => TimeGrid::evenly_spaced(model.t_max(), a.grid_size.unwrap_or(DEFAULT_IBS_POINTS))?,
    };
    let mut cif = model.predict_cif(&x, &grid)?;
    if a.monotone {
        cif = cif.monotone();
    }

    let k = model.k_events();
    let mut out = String::from("row,horizon,survival");
    for c in 1..=k {
        write!(out, ",cif_{c}").unwrap();
    }
    out.push('\n');
    for i in 0..cif.n_rows() {
        for (j, h) in grid.horizons().iter().enumerate() {
            write!(out, "{i},{h}").unwrap();
            for v in cif.slice(i, j) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
    }
    std::fs::write(&a.out, out).map_err(|e| CliError::io(&a.out, e))?;
    eprintln!(
        "wrote {} rows x {} horizons to {}",
        cif.n_rows(),
        grid.len(),
        a.out.display()
    );
    Ok(())
}
