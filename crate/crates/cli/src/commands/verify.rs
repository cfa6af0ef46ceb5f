use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{cell, Sink};
use crate::Fault;
use serde::Serialize;
use strongcoord::prob::{tv_distance, JointPmf};
use strongcoord::rng::derive_seed;
use strongcoord::verify::{extraction_sweep, lemma_suite_with, ExtractionSweep, LemmaRow, TvFn};
use strongcoord::Result as CoreResult;

/// Stream of the extraction binning seeds, kept apart from the lemma streams.
const EXTRACTION_STREAM: u64 = 0xE7_0000;

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct Summary<'a> {
    seed: u64,
    passed: bool,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct Failures<'a> {
    seed: u64,
    lemmas: Vec<&'a LemmaRow>,
    checks: Vec<&'a Check>,
}

fn broken_tv(p: &JointPmf, q: &JointPmf) -> CoreResult<f64> {
    Ok(2.0 * tv_distance(p, q)?)
}

/// Sub-threshold rates must decay and sit at least ten times below every super-threshold rate.
fn extraction_checks(sweep: &ExtractionSweep) -> Vec<Check> {
    let below: Vec<_> = sweep.series.iter().filter(|s| s.rate < sweep.threshold).collect();
    let above: Vec<_> = sweep.series.iter().filter(|s| s.rate > sweep.threshold).collect();
    let mut checks = Vec::new();
    for s in &below {
        checks.push(Check {
            name: format!("extraction_decay@{}", s.rate),
            passed: s.slope.is_some_and(|k| k < 0.0) || s.terminal == 0.0,
            detail: format!("log2 slope {:?}, terminal {}", s.slope, s.terminal),
        });
        for a in &above {
            checks.push(Check {
                name: format!("extraction_separation@{}/{}", s.rate, a.rate),
                passed: a.terminal >= 10.0 * s.terminal,
                detail: format!("terminal {} vs {}", s.terminal, a.terminal),
            });
        }
    }
    checks
}

pub fn verify(cfg: &ScenarioConfig, sink: &Sink, fault: Option<Fault>) -> Result<(), CliError> {
    let run = &cfg.run;
    let tv: TvFn = match fault {
        Some(Fault::BrokenTv) => broken_tv,
        None => tv_distance,
    };
    log::info!("running {} cases per lemma check", run.lemma_trials);
    let table = lemma_suite_with(run.seed, run.lemma_trials, tv)?;
    let mut checks: Vec<Check> = table
        .rows
        .iter()
        .map(|r| Check {
            name: r.name.clone(),
            passed: r.violations == 0,
            detail: format!("{} violations in {} cases, worst margin {}", r.violations, r.cases, r.worst_margin),
        })
        .collect();
    if sink.format.json() {
        sink.json("lemmas.json", &table)?;
    }
    if sink.format.csv() {
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.name.clone(),
                    r.cases.to_string(),
                    r.violations.to_string(),
                    r.worst_margin.to_string(),
                ]
            })
            .collect();
        sink.csv("lemmas.csv", &["check", "cases", "violations", "worst_margin"], &rows)?;
    }

    if let Some(spec) = cfg.scheme(run.seed, 1, 0.0, 0.0)? {
        let ex = &run.extraction;
        let [u, w, _, _, z, v] = spec.labels();
        let threshold = spec.thresholds()?.h_w_given_uzv;
        let rates: Vec<f64> = ex.offsets.iter().map(|o| threshold + o).filter(|r| *r >= 0.0).collect();
        let seeds: Vec<u64> = (0..ex.seeds as u64).map(|i| derive_seed(run.seed, EXTRACTION_STREAM + i)).collect();
        if rates.is_empty() || ex.n_list.is_empty() || seeds.is_empty() {
            log::warn!("extraction sweep skipped: no rates, blocklengths or seeds");
        } else {
            log::info!("extraction sweep at rates {rates:?} around H(W|UZV) = {threshold}");
            let sweep = extraction_sweep(&spec.chain()?, &[u, z, v], w, &ex.n_list, &rates, &seeds)?;
            checks.extend(extraction_checks(&sweep));
            if sink.format.json() {
                sink.json("extraction.json", &sweep)?;
            }
            if sink.format.csv() {
                let rows: Vec<Vec<String>> = sweep
                    .points
                    .iter()
                    .map(|p| vec![p.rate.to_string(), p.n.to_string(), p.bins.to_string(), p.divergence.to_string()])
                    .collect();
                sink.csv("extraction.csv", &["rate", "n", "bins", "divergence"], &rows)?;
                let series: Vec<Vec<String>> = sweep
                    .series
                    .iter()
                    .map(|s| {
                        vec![
                            s.rate.to_string(),
                            cell(s.slope),
                            s.terminal.to_string(),
                            sweep.threshold.to_string(),
                        ]
                    })
                    .collect();
                sink.csv("extraction_series.csv", &["rate", "log2_slope", "terminal", "threshold"], &series)?;
            }
        }
    } else {
        log::info!("no scheme configured; extraction sweep skipped");
    }

    let passed = checks.iter().all(|c| c.passed);
    sink.json(
        "verify.json",
        &Summary {
            seed: run.seed,
            passed,
            checks: &checks,
        },
    )?;
    if passed {
        return Ok(());
    }
    let failures = Failures {
        seed: run.seed,
        lemmas: table.rows.iter().filter(|r| r.violations > 0).collect(),
        checks: checks.iter().filter(|c| !c.passed).collect(),
    };
    sink.json("failures.json", &failures)?;
    let names: Vec<&str> = failures.checks.iter().map(|c| c.name.as_str()).collect();
    Err(CliError::Property(format!(
        "{} failed; replayable cases in {}",
        names.join(", "),
        sink.path("failures.json").display()
    )))
}
