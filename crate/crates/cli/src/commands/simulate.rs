use super::{base_scheme, evaluate_point};
use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::Sink;
use strongcoord::verify::CSV_HEADER;

pub fn simulate(cfg: &ScenarioConfig, sink: &Sink) -> Result<(), CliError> {
    let run = &cfg.run;
    let (r0, r) = match (run.r0, run.r) {
        (Some(r0), Some(r)) => (r0, r),
        _ => return Err(CliError::Config("run: `simulate` needs both `r0` and `r`".into())),
    };
    if run.n_list.is_empty() {
        return Err(CliError::Config("run.n_list: no blocklengths to simulate".into()));
    }
    let base = base_scheme(cfg, "simulate")?;
    let mut reports = Vec::with_capacity(run.n_list.len());
    for &n in &run.n_list {
        let spec = base.with_params(n, r0, r)?;
        log::info!("simulating n = {n}, r0 = {r0}, r = {r}");
        reports.push(evaluate_point(&spec, run)?);
    }
    if sink.format.json() {
        sink.jsonl("simulate.jsonl", &reports)?;
    }
    if sink.format.csv() {
        let rows: Vec<Vec<String>> = reports.iter().map(|r| r.csv_record()).collect();
        sink.csv("simulate.csv", &CSV_HEADER, &rows)?;
    }
    Ok(())
}
