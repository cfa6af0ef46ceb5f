use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{cell, Sink};
use serde::Serialize;
use strongcoord::prob::{Alphabet, Kernel};
use strongcoord::region::{min_r0_corollary, min_r0_inner, secrecy_capacity, ProblemSpec, RatePoint, SecrecyCapacity};
use strongcoord::rng::derive_seed;
use strongcoord::Error;

#[derive(Serialize)]
struct Refusal {
    margin: f64,
    minimizer: Vec<f64>,
}

#[derive(Serialize)]
struct RegionPoint {
    eve_crossover: Option<f64>,
    inner: RatePoint,
    more_capable: bool,
    corollary: Option<RatePoint>,
    corollary_refusal: Option<Refusal>,
    secrecy_capacity: SecrecyCapacity,
}

#[derive(Serialize)]
struct RegionOutput<'a> {
    seed: u64,
    points: &'a [RegionPoint],
}

const CSV_COLUMNS: [&str; 9] = [
    "eve_crossover",
    "inner_r0_min",
    "inner_feasible",
    "inner_boundary",
    "more_capable",
    "more_capable_margin",
    "corollary_r0_min",
    "corollary_boundary",
    "secrecy_capacity",
];

/// Keeps `P_{Y|X}` and replaces the eavesdropper's output by `BSC(q)(X)`.
fn with_bsc_eve(channel: &Kernel, q: f64) -> Result<Kernel, CliError> {
    let x = &channel.given()[0];
    if x.size != 2 {
        return Err(CliError::Config(format!(
            "run.eve_crossovers: a binary symmetric eavesdropper needs a binary input, `{}` has {} letters",
            x.label, x.size
        )));
    }
    let (y, z) = (&channel.axes()[0], &channel.axes()[1]);
    let rows: Vec<Vec<f64>> = (0..2)
        .map(|xi| {
            let row = channel.row(xi);
            let py = (0..y.size).map(|yi| row[yi * z.size..(yi + 1) * z.size].iter().sum::<f64>());
            py.flat_map(|p| (0..2).map(move |zi| p * if zi == xi { 1.0 - q } else { q }))
                .collect()
        })
        .collect();
    Ok(Kernel::from_rows(
        vec![x.clone()],
        vec![y.clone(), Alphabet::new(z.label.clone(), 2)],
        &rows,
    )?)
}

pub fn region(cfg: &ScenarioConfig, sink: &Sink) -> Result<(), CliError> {
    let run = &cfg.run;
    let cases: Vec<(Option<f64>, ProblemSpec)> = if run.eve_crossovers.is_empty() {
        vec![(None, cfg.problem.clone())]
    } else {
        run.eve_crossovers
            .iter()
            .map(|&q| Ok((Some(q), cfg.problem.with_channel(with_bsc_eve(cfg.problem.channel(), q)?)?)))
            .collect::<Result<_, CliError>>()?
    };
    let mut points = Vec::with_capacity(cases.len());
    for (i, (q, problem)) in cases.into_iter().enumerate() {
        let seed = derive_seed(run.seed, i as u64);
        log::info!("solving case {i} (eve crossover {q:?})");
        let inner = min_r0_inner(&problem, &run.search, seed)?;
        let (corollary, corollary_refusal) = match min_r0_corollary(&problem, &run.search, seed) {
            Ok(p) => (Some(p), None),
            Err(Error::NotMoreCapable { margin, minimizer }) => (None, Some(Refusal { margin, minimizer })),
            Err(e) => return Err(e.into()),
        };
        let secrecy_capacity = secrecy_capacity(problem.channel(), run.search.grid_resolution, seed)?;
        points.push(RegionPoint {
            eve_crossover: q,
            inner,
            more_capable: corollary.is_some(),
            corollary,
            corollary_refusal,
            secrecy_capacity,
        });
    }
    if sink.format.json() {
        sink.json(
            "region.json",
            &RegionOutput {
                seed: run.seed,
                points: &points,
            },
        )?;
    }
    if sink.format.csv() {
        let rows: Vec<Vec<String>> = points
            .iter()
            .map(|p| {
                let margin = p
                    .corollary
                    .as_ref()
                    .and_then(|c| c.diagnostics.more_capable_margin)
                    .or(p.corollary_refusal.as_ref().map(|r| r.margin));
                vec![
                    cell(p.eve_crossover),
                    cell(p.inner.r0_min),
                    p.inner.feasible.to_string(),
                    p.inner.boundary.to_string(),
                    p.more_capable.to_string(),
                    cell(margin),
                    cell(p.corollary.as_ref().and_then(|c| c.r0_min)),
                    p.corollary.as_ref().map(|c| c.boundary.to_string()).unwrap_or_default(),
                    p.secrecy_capacity.c_s.to_string(),
                ]
            })
            .collect();
        sink.csv("region.csv", &CSV_COLUMNS, &rows)?;
    }
    Ok(())
}
