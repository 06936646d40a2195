use survboost::data::split;
use survboost::synth::generate;

use super::{check_output, sibling};
use crate::args::SynthArgs;
use crate::config::RunConfig;
use crate::error::CliResult;

pub fn run(a: &SynthArgs, cfg: &RunConfig, seed: u64) -> CliResult<()> {
    let oracle_path = a.oracle_out.clone().unwrap_or_else(|| sibling(&a.out, "oracle.json"));
    for p in [Some(&a.out), Some(&oracle_path), a.test_out.as_ref()].into_iter().flatten() {
        check_output(p)?;
    }
    let sc = cfg.synth(&a.synth, seed);
    let (data, oracle) = generate(&sc)?;
    oracle.save(&oracle_path)?;
    eprintln!(
        "generated {} rows ({} events, censoring rate {:.3}); oracle written to {}",
        data.n_rows(),
        data.k_events,
        data.censoring_rate(),
        oracle_path.display()
    );
    match &a.test_out {
        Some(test_path) => {
            let frac = a.test_fraction.unwrap_or(cfg.evaluate.test_fraction);
            let (train, test) = split(&data, frac, seed)?;
            train.write_csv(&a.out)?;
            test.write_csv(test_path)?;
            eprintln!(
                "{} training rows to {}, {} test rows to {}",
                train.n_rows(),
                a.out.display(),
                test.n_rows(),
                test_path.display()
            );
        }
        None => {
            data.write_csv(&a.out)?;
            eprintln!("{} rows to {}", data.n_rows(), a.out.display());
        }
    }
    Ok(())
}
