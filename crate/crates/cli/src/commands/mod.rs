mod region;
mod simulate;
mod sweep;
mod verify;

pub use region::region;
pub use simulate::simulate;
pub use sweep::sweep;
pub use verify::verify;

use crate::config::{RunConfig, ScenarioConfig};
use crate::error::CliError;
use strongcoord::codec::{build_code, build_code_auto, CodeMode, SchemeSpec};
use strongcoord::rng::derive_seed;
use strongcoord::verify::{average_reports, evaluate_scheme, EvalMode, SimulationReport};

/// The configured scheme at `n = 1` and zero rates, or a config error naming the command.
fn base_scheme(cfg: &ScenarioConfig, command: &str) -> Result<SchemeSpec, CliError> {
    cfg.scheme(cfg.run.seed, 1, 0.0, 0.0)?
        .ok_or_else(|| CliError::Config(format!("scheme: `{command}` needs a scheme (chain, split or witness)")))
}

/// Evaluates one grid point; the report carries the run seed.
///
/// Exact mode averages `code_seeds` independently drawn codes; Monte Carlo simulates the
/// first code only, hashing lazily when the sequence space is too large to enumerate.
fn evaluate_point(spec: &SchemeSpec, run: &RunConfig) -> Result<SimulationReport, CliError> {
    let mut report = evaluate_codes(spec, run)?;
    report.seed = run.seed;
    Ok(report)
}

fn evaluate_codes(spec: &SchemeSpec, run: &RunConfig) -> Result<SimulationReport, CliError> {
    let seed = run.seed;
    match run.mode {
        EvalMode::Exact => {
            let reports = (0..run.code_seeds)
                .map(|i| {
                    let s = derive_seed(seed, i as u64);
                    let code = build_code(spec, s, CodeMode::Exact)?;
                    evaluate_scheme(&code, EvalMode::Exact, 0, s)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(average_reports(&reports)?)
        }
        EvalMode::MonteCarlo => {
            if run.code_seeds > 1 {
                log::warn!("montecarlo mode simulates one code; ignoring code_seeds = {}", run.code_seeds);
            }
            let s = derive_seed(seed, 0);
            let code = build_code_auto(spec, s)?;
            Ok(evaluate_scheme(&code, EvalMode::MonteCarlo, run.trials, s)?)
        }
    }
}
