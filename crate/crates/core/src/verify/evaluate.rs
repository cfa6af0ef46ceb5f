//! Coordination and secrecy metrics of one realized code.

use super::estimate::{bootstrap, metrics_from_counts, CellShape, Intervals};
use crate::codec::{
    conditional_laws, extract_and_fix_f, law_axes, rc_run_with, seq_axes, seq_count, window, BinningCode, CodeMode, ExtractionMode,
    Resample,
};
use crate::error::{Error, Result};
use crate::prob::{checked_len, mutual_information, tv_distance, MAX_TENSOR_ENTRIES};
use crate::rng::{derive_seed, rng_from};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How the metrics are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// From the exact law of `(U^n, Z^n, V^n)` given the fixed `F`.
    Exact,
    /// Plug-in estimates over a leading window of simulated passes.
    #[serde(rename = "montecarlo")]
    MonteCarlo,
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvalMode::Exact => "exact",
            EvalMode::MonteCarlo => "montecarlo",
        })
    }
}

/// Metrics of one code at one blocklength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub n: usize,
    pub r0: f64,
    pub r: f64,
    pub realized_r0: f64,
    pub realized_r: f64,
    pub common_bins: u64,
    pub extra_bins: u64,
    pub mode: EvalMode,
    pub code_mode: CodeMode,
    pub seed: u64,
    /// Number of independently seeded codes averaged into this report.
    pub codes: usize,
    pub chosen_f: u64,
    /// Score of the chosen `f` during extraction; `None` when there was nothing to choose from.
    pub extraction_tv: Option<f64>,
    /// `tv(P_{U^nV^n}, P̄_{UV}^{⊗n})`, over the window in Monte Carlo mode.
    pub coordination_gap: f64,
    /// `I(U^nV^n; Z^n)` in bits, over the window in Monte Carlo mode.
    pub leakage: f64,
    /// `tv(P_{U^nV^nZ^n}, P̄_{UV}^{⊗n} P̄_Z^{⊗n})`, over the window in Monte Carlo mode.
    pub joint_secrecy_tv: f64,
    /// Probability (or observed frequency) of a decoding error.
    pub decode_error: f64,
    /// Upper bound on the leakage implied by `joint_secrecy_tv` over `|U×V|^w` letters.
    pub leakage_bound: f64,
    /// Symbols per block the metrics refer to.
    pub window: usize,
    pub trials: usize,
    pub flagged_trace_count: usize,
    /// Bootstrap intervals (Monte Carlo mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<Intervals>,
}

/// Column order of [`SimulationReport::csv_record`].
pub const CSV_HEADER: [&str; 11] = [
    "n",
    "r0",
    "r",
    "mode",
    "gap",
    "leakage",
    "leakage_ci_lo",
    "leakage_ci_hi",
    "joint_tv",
    "flagged",
    "seed",
];

impl SimulationReport {
    /// One CSV row in [`CSV_HEADER`] order; interval columns are empty in exact mode.
    pub fn csv_record(&self) -> Vec<String> {
        let (lo, hi) = match &self.ci {
            Some(ci) => (ci.leakage.lo.to_string(), ci.leakage.hi.to_string()),
            None => (String::new(), String::new()),
        };
        vec![
            self.n.to_string(),
            self.r0.to_string(),
            self.r.to_string(),
            self.mode.to_string(),
            self.coordination_gap.to_string(),
            self.leakage.to_string(),
            lo,
            hi,
            self.joint_secrecy_tv.to_string(),
            self.flagged_trace_count.to_string(),
            self.seed.to_string(),
        ]
    }

    /// Whether the leakage respects the bound implied by the joint secrecy distance.
    pub fn bound_holds(&self, slack: f64) -> bool {
        self.leakage <= self.leakage_bound + slack
    }
}

/// Averages exact-mode reports of codes built with different seeds at the same blocklength and rates.
///
/// Metrics are replaced by their means over the ensemble, which is the quantity the
/// random-binning argument controls; the first report supplies the remaining fields.
pub fn average_reports(reports: &[SimulationReport]) -> Result<SimulationReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidArgument("no reports to average".into()))?;
    if reports
        .iter()
        .any(|r| r.n != first.n || r.mode != EvalMode::Exact || r.r0 != first.r0 || r.r != first.r)
    {
        return Err(Error::InvalidArgument(
            "only exact reports of one grid point can be averaged".into(),
        ));
    }
    let m = reports.len() as f64;
    let mean = |f: fn(&SimulationReport) -> f64| reports.iter().map(f).sum::<f64>() / m;
    let mut out = first.clone();
    out.codes = reports.len();
    out.coordination_gap = mean(|r| r.coordination_gap);
    out.leakage = mean(|r| r.leakage);
    out.joint_secrecy_tv = mean(|r| r.joint_secrecy_tv);
    out.decode_error = mean(|r| r.decode_error);
    out.leakage_bound = mean(|r| r.leakage_bound);
    out.extraction_tv = reports.iter().map(|r| r.extraction_tv).sum::<Option<f64>>().map(|s| s / m);
    Ok(out)
}

/// `V log2(|A| / V)` with `V = 2 tv`, the mutual-information ceiling for a joint
/// at ℓ1 distance `V` from a product law. Zero when `V = 0`.
pub fn leakage_ceiling(tv: f64, letters: f64) -> f64 {
    let v = 2.0 * tv;
    if v <= 0.0 {
        0.0
    } else {
        v * (letters / v).log2()
    }
}

/// Trials per histogram chunk; chunks are summed in order.
const CHUNK: usize = 4096;

/// Evaluates `code` with `F` fixed by extraction.
///
/// Exact mode needs an exact-mode code whose law tensor fits the budget. Monte Carlo mode
/// fixes `F` exactly when that is affordable and by sampled scoring otherwise, then runs
/// `trials` passes with seeds derived from `seed`.
pub fn evaluate_scheme(code: &BinningCode, mode: EvalMode, trials: usize, seed: u64) -> Result<SimulationReport> {
    let spec = code.spec();
    let n = spec.n();
    let (realized_r0, realized_r) = spec.realized_rates();
    let d = spec.dims();
    let exact_ok = code.mode() == CodeMode::Exact && checked_len(&law_axes(code), "conditional law tensor").is_ok();
    let mut report = SimulationReport {
        n,
        r0: spec.r0(),
        r: spec.r(),
        realized_r0,
        realized_r,
        common_bins: code.common_bins(),
        extra_bins: code.extra_bins(),
        mode,
        code_mode: code.mode(),
        seed,
        codes: 1,
        chosen_f: 0,
        extraction_tv: None,
        coordination_gap: 0.0,
        leakage: 0.0,
        joint_secrecy_tv: 0.0,
        decode_error: 0.0,
        leakage_bound: 0.0,
        window: n,
        trials: 0,
        flagged_trace_count: 0,
        ci: None,
    };
    match mode {
        EvalMode::Exact => {
            if code.mode() != CodeMode::Exact {
                return Err(Error::InvalidArgument("exact evaluation needs an exact-mode code".into()));
            }
            let ex = extract_and_fix_f(code, ExtractionMode::Exact)?;
            let laws = conditional_laws(code, ex.chosen_f, false)?;
            let [u, _, _, _, z, v] = spec.labels();
            let uv_axes = seq_axes(&[u, v], n);
            let uv_refs: Vec<&str> = uv_axes.iter().map(String::as_str).collect();
            let z_axes = seq_axes(&[z], n);
            let z_refs: Vec<&str> = z_axes.iter().map(String::as_str).collect();
            report.chosen_f = ex.chosen_f;
            report.extraction_tv = Some(ex.conditional_tv);
            report.coordination_gap = tv_distance(&laws.rc.marginalize(&uv_refs)?, &spec.target_uv()?)?;
            report.joint_secrecy_tv = tv_distance(&laws.rc, &spec.target_secure()?)?;
            report.leakage = mutual_information(&laws.rc, &uv_refs, &z_refs)?;
            report.decode_error = laws.decode_error;
        }
        EvalMode::MonteCarlo => {
            if trials == 0 {
                return Err(Error::InvalidArgument("Monte Carlo evaluation needs at least one trial".into()));
            }
            let ex = if exact_ok {
                extract_and_fix_f(code, ExtractionMode::Exact)?
            } else {
                extract_and_fix_f(
                    code,
                    ExtractionMode::Sampled {
                        candidates: 8,
                        trials: trials.min(20_000),
                        seed: derive_seed(seed, 0xE),
                    },
                )?
            };
            let f = ex.chosen_f;
            report.chosen_f = f;
            report.extraction_tv = ex.conditional_tv.is_finite().then_some(ex.conditional_tv);
            let w = window(n);
            let too_big = |what: &str| Error::budget(what, u128::MAX, MAX_TENSOR_ENTRIES as u128);
            let shape = CellShape {
                nu: seq_count(d.u, w).ok_or_else(|| too_big("U window"))? as usize,
                nz: seq_count(d.z, w).ok_or_else(|| too_big("Z window"))? as usize,
                nv: seq_count(d.v, w).ok_or_else(|| too_big("V window"))? as usize,
            };
            let cells = shape.nu as u128 * shape.nz as u128 * shape.nv as u128;
            if cells > MAX_TENSOR_ENTRIES as u128 {
                return Err(Error::budget("Monte Carlo histogram", cells, MAX_TENSOR_ENTRIES as u128));
            }
            let windowed = spec.with_params(w, 0.0, 0.0)?;
            let target_uv = windowed.target_uv()?;
            let target_secure = windowed.target_secure()?;
            let chunks: Vec<Result<(Vec<u64>, usize, usize)>> = (0..trials.div_ceil(CHUNK))
                .into_par_iter()
                .map(|k| {
                    let mut counts = vec![0u64; shape.cells()];
                    let (mut flagged, mut errors) = (0, 0);
                    for i in k * CHUNK..((k + 1) * CHUNK).min(trials) {
                        let s = derive_seed(seed, i as u64);
                        let c = rng_from(derive_seed(s, 1)).random_range(0..code.common_bins());
                        let t = rc_run_with(code, s, c, f, Resample::Common)?;
                        if t.flagged {
                            flagged += 1;
                            continue;
                        }
                        if !t.decode_ok {
                            errors += 1;
                        }
                        let (mut iu, mut iz, mut iv) = (0, 0, 0);
                        for j in 0..w {
                            iu = iu * d.u + t.u_seq[j];
                            iz = iz * d.z + t.z_seq[j];
                            iv = iv * d.v + t.v_seq[j];
                        }
                        counts[(iu * shape.nz + iz) * shape.nv + iv] += 1;
                    }
                    Ok((counts, flagged, errors))
                })
                .collect();
            let mut counts = vec![0u64; shape.cells()];
            let (mut flagged, mut errors) = (0, 0);
            for ch in chunks {
                let (c, fl, er) = ch?;
                counts.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
                flagged += fl;
                errors += er;
            }
            let kept = trials - flagged;
            if kept == 0 {
                return Err(Error::InvalidArgument("every Monte Carlo pass was flagged".into()));
            }
            let m = metrics_from_counts(&counts, shape, target_uv.probs(), target_secure.probs());
            report.coordination_gap = m.gap;
            report.leakage = m.leakage;
            report.joint_secrecy_tv = m.joint_tv;
            report.decode_error = errors as f64 / kept as f64;
            report.window = w;
            report.trials = trials;
            report.flagged_trace_count = flagged;
            report.ci = Some(bootstrap(
                &counts,
                shape,
                target_uv.probs(),
                target_secure.probs(),
                derive_seed(seed, 0xB0),
            ));
        }
    }
    let letters = (d.u as f64 * d.v as f64).powi(report.window as i32);
    report.leakage_bound = leakage_ceiling(report.joint_secrecy_tv, letters);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::scheme::tests::toy;
    use crate::codec::{build_code, SchemeSpec};
    use crate::prob::{Alphabet, Kernel, Pmf};

    /// U uniform binary, W = X = U, noiseless Y = X, Z independent of X, V = W.
    fn noiseless(n: usize) -> SchemeSpec {
        let ax = |l: &str| Alphabet::new(l, 2);
        SchemeSpec::new(
            Pmf::uniform("U", 2).unwrap(),
            Kernel::identity(ax("U"), "W").unwrap(),
            Kernel::from_rows(
                vec![ax("U"), ax("W")],
                vec![ax("X")],
                &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            )
            .unwrap(),
            Kernel::from_rows(
                vec![ax("X")],
                vec![ax("Y"), ax("Z")],
                &[vec![0.5, 0.5, 0.0, 0.0], vec![0.0, 0.0, 0.5, 0.5]],
            )
            .unwrap(),
            Kernel::from_rows(
                vec![ax("W"), ax("Y")],
                vec![ax("V")],
                &[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]],
            )
            .unwrap(),
            n,
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_scheme_is_perfect() {
        for n in 2..=4 {
            let code = build_code(&noiseless(n), 1, CodeMode::Exact).unwrap();
            let r = evaluate_scheme(&code, EvalMode::Exact, 0, 0).unwrap();
            assert!(
                r.coordination_gap < 1e-12 && r.leakage < 1e-12 && r.joint_secrecy_tv < 1e-12,
                "{r:?}"
            );
            assert_eq!(r.decode_error, 0.0);
            assert!(r.ci.is_none());
        }
    }

    #[test]
    fn averaging_takes_means() {
        let reps: Vec<SimulationReport> = (0..3)
            .map(|seed| {
                let code = build_code(&toy(), seed, CodeMode::Exact).unwrap();
                evaluate_scheme(&code, EvalMode::Exact, 0, 0).unwrap()
            })
            .collect();
        let avg = average_reports(&reps).unwrap();
        assert_eq!(avg.codes, 3);
        let want = reps.iter().map(|r| r.coordination_gap).sum::<f64>() / 3.0;
        assert!((avg.coordination_gap - want).abs() < 1e-15);
        assert!(average_reports(&[]).is_err());
    }

    #[test]
    fn zero_trials_is_an_error() {
        let code = build_code(&toy(), 1, CodeMode::Exact).unwrap();
        assert!(evaluate_scheme(&code, EvalMode::MonteCarlo, 0, 0).is_err());
    }

    #[test]
    fn exact_report_respects_the_metric_relations() {
        let code = build_code(&toy(), 4, CodeMode::Exact).unwrap();
        let r = evaluate_scheme(&code, EvalMode::Exact, 0, 0).unwrap();
        assert!(r.joint_secrecy_tv + 1e-12 >= r.coordination_gap);
        assert!(r.bound_holds(1e-9));
        assert!((0.0..=1.0).contains(&r.coordination_gap));
        assert_eq!(r.csv_record().len(), CSV_HEADER.len());
        assert_eq!(r.csv_record()[6], "");
    }

    #[test]
    fn monte_carlo_is_deterministic_and_brackets_exact() {
        let code = build_code(&toy(), 4, CodeMode::Exact).unwrap();
        let exact = evaluate_scheme(&code, EvalMode::Exact, 0, 0).unwrap();
        let a = evaluate_scheme(&code, EvalMode::MonteCarlo, 20_000, 3).unwrap();
        let b = evaluate_scheme(&code, EvalMode::MonteCarlo, 20_000, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.chosen_f, exact.chosen_f);
        let ci = a.ci.unwrap();
        assert!((a.joint_secrecy_tv - exact.joint_secrecy_tv).abs() < 4.0 * ci.joint_tv.sd + 0.02);
        assert!((a.leakage - exact.leakage).abs() < 4.0 * ci.leakage.sd + 0.01);
    }
}
