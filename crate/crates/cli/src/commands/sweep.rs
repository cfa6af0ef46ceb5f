use super::{base_scheme, evaluate_point};
use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::Sink;
use serde::Serialize;
use std::fs;
use strongcoord::codec::Thresholds;
use strongcoord::verify::{EvalMode, CSV_HEADER};

const CSV_FILE: &str = "sweep.csv";
const JSONL_FILE: &str = "sweep.jsonl";

#[derive(Serialize)]
struct SweepMeta<'a> {
    thresholds: Thresholds,
    seed: u64,
    mode: EvalMode,
    code_seeds: usize,
    trials: usize,
    n_list: &'a [usize],
    r0: &'a [f64],
    r: &'a [f64],
}

/// Grid key of one row: `(n, r0, r, mode, seed)`.
#[derive(Clone, Debug, PartialEq)]
struct Key {
    n: usize,
    r0: f64,
    r: f64,
    mode: String,
    seed: u64,
}

impl Key {
    fn matches(&self, other: &Key) -> bool {
        self.n == other.n
            && self.mode == other.mode
            && self.seed == other.seed
            && (self.r0 - other.r0).abs() <= 1e-12
            && (self.r - other.r).abs() <= 1e-12
    }
}

struct Stored {
    key: Key,
    body: Vec<String>,
}

fn header() -> Vec<&'static str> {
    let mut h = CSV_HEADER.to_vec();
    h.extend(["decode_error", "admitted"]);
    h
}

fn read_csv(sink: &Sink) -> Result<Vec<Stored>, CliError> {
    let path = sink.path(CSV_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rd = csv::ReaderBuilder::new().from_path(&path)?;
    if rd.headers()?.iter().collect::<Vec<_>>() != header() {
        log::warn!("{} has a different header; recomputing it", path.display());
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let body: Vec<String> = rec.iter().map(str::to_string).collect();
        let parsed = (|| {
            Some(Key {
                n: body[0].parse().ok()?,
                r0: body[1].parse().ok()?,
                r: body[2].parse().ok()?,
                mode: body[3].clone(),
                seed: body[10].parse().ok()?,
            })
        })();
        match parsed {
            Some(key) => out.push(Stored { key, body }),
            None => log::warn!("skipping unreadable row in {}", path.display()),
        }
    }
    Ok(out)
}

fn read_jsonl(sink: &Sink) -> Result<Vec<Stored>, CliError> {
    let path = sink.path(JSONL_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(&path)?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let parsed = serde_json::from_str::<serde_json::Value>(line).ok().and_then(|v| {
            Some(Key {
                n: v.get("n")?.as_u64()? as usize,
                r0: v.get("r0")?.as_f64()?,
                r: v.get("r")?.as_f64()?,
                mode: v.get("mode")?.as_str()?.to_string(),
                seed: v.get("seed")?.as_u64()?,
            })
        });
        match parsed {
            Some(key) => out.push(Stored {
                key,
                body: vec![line.to_string()],
            }),
            None => log::warn!("skipping unreadable line in {}", path.display()),
        }
    }
    Ok(out)
}

/// Takes the stored row for `key`, if any.
fn take(rows: &mut Vec<Stored>, key: &Key) -> Option<Vec<String>> {
    let i = rows.iter().position(|s| s.key.matches(key))?;
    Some(rows.remove(i).body)
}

/// Evaluates every `(r0, r, n)` grid point not already present in the outputs.
///
/// Rows are keyed by `(n, r0, r, mode, seed)` and written in grid order; stored rows that
/// are not part of the current grid are kept after it.
pub fn sweep(cfg: &ScenarioConfig, sink: &Sink) -> Result<(), CliError> {
    let run = &cfg.run;
    let grid = run
        .rate_grid
        .as_ref()
        .filter(|g| !g.r0.is_empty() && !g.r.is_empty() && !run.n_list.is_empty())
        .ok_or_else(|| CliError::Config("run.rate_grid: the sweep grid is empty (needs r0, r and n_list)".into()))?;
    let base = base_scheme(cfg, "sweep")?;
    let thresholds = base.thresholds()?;

    let mut old_csv = if sink.format.csv() { read_csv(sink)? } else { Vec::new() };
    let mut old_json = if sink.format.json() { read_jsonl(sink)? } else { Vec::new() };
    let (mut csv_rows, mut json_lines) = (Vec::new(), Vec::new());
    let (mut reused, mut computed) = (0usize, 0usize);
    for &r0 in &grid.r0 {
        for &r in &grid.r {
            for &n in &run.n_list {
                let key = Key {
                    n,
                    r0,
                    r,
                    mode: run.mode.to_string(),
                    seed: run.seed,
                };
                let have_csv = take(&mut old_csv, &key);
                let have_json = take(&mut old_json, &key);
                let done = (!sink.format.csv() || have_csv.is_some()) && (!sink.format.json() || have_json.is_some());
                if done {
                    reused += 1;
                    csv_rows.extend(have_csv);
                    json_lines.extend(have_json.map(|mut b| b.remove(0)));
                    continue;
                }
                log::info!("sweep point n = {n}, r0 = {r0}, r = {r}");
                let report = evaluate_point(&base.with_params(n, r0, r)?, run)?;
                computed += 1;
                let mut row = report.csv_record();
                row.push(report.decode_error.to_string());
                row.push(thresholds.admits(r0, r).to_string());
                csv_rows.push(row);
                json_lines.push(serde_json::to_string(&report)?);
            }
        }
    }
    if !old_csv.is_empty() || !old_json.is_empty() {
        log::warn!("keeping {} stored rows outside the current grid", old_csv.len().max(old_json.len()));
    }
    csv_rows.extend(old_csv.into_iter().map(|s| s.body));
    json_lines.extend(old_json.into_iter().map(|mut s| s.body.remove(0)));
    log::info!("sweep: {computed} points computed, {reused} reused");

    sink.json(
        "sweep_meta.json",
        &SweepMeta {
            thresholds,
            seed: run.seed,
            mode: run.mode,
            code_seeds: run.code_seeds,
            trials: run.trials,
            n_list: &run.n_list,
            r0: &grid.r0,
            r: &grid.r,
        },
    )?;
    if sink.format.csv() {
        sink.csv(CSV_FILE, &header(), &csv_rows)?;
    }
    if sink.format.json() {
        sink.lines(JSONL_FILE, &json_lines)?;
    }
    Ok(())
}
