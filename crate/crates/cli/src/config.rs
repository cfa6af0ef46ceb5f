//! Scenario files: the coordination problem, how to build a scheme for it, and run parameters.

use crate::error::CliError;
use serde::Deserialize;
use std::path::Path;
use strongcoord::codec::SchemeSpec;
use strongcoord::prob::{tv_distance, JointPmf, Kernel};
use strongcoord::region::{min_r0_inner, ProblemSpec, SearchBudget};
use strongcoord::verify::EvalMode;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub scheme: Option<SchemeConfig>,
    #[serde(default)]
    pub run: RunConfig,
}

/// How the auxiliary chain is obtained. Source and channel always come from the problem.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeConfig {
    /// Explicit `P_{W|U}`, `P_{X|UW}` and `P_{V|WY}`.
    Chain {
        p_w_given_u: Kernel,
        p_x_given_uw: Kernel,
        p_v_given_wy: Kernel,
    },
    /// Source part `P_{W1|U}, P_{V|W1}` and an independent channel part `P_{W2X}`.
    Split {
        p_w1_given_u: Kernel,
        p_v_given_w1: Kernel,
        p_w2x: JointPmf,
    },
    /// The witness of the inner-bound search.
    Witness,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub mode: EvalMode,
    pub n_list: Vec<usize>,
    pub r0: Option<f64>,
    pub r: Option<f64>,
    /// Independently seeded codes averaged per grid point in exact mode.
    pub code_seeds: usize,
    /// Monte Carlo passes per grid point.
    pub trials: usize,
    pub search: SearchBudget,
    /// Replace the eavesdropper output by `BSC(q)(X)` for each listed `q`.
    pub eve_crossovers: Vec<f64>,
    pub rate_grid: Option<RateGrid>,
    pub lemma_trials: usize,
    pub extraction: ExtractionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            mode: EvalMode::Exact,
            n_list: vec![2, 3, 4],
            r0: None,
            r: None,
            code_seeds: 1,
            trials: 100_000,
            search: SearchBudget::default(),
            eve_crossovers: Vec::new(),
            rate_grid: None,
            lemma_trials: 500,
            extraction: ExtractionConfig::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateGrid {
    pub r0: Vec<f64>,
    pub r: Vec<f64>,
}

/// Randomness-extraction sweep with `B = W` and `A = (U, Z, V)`.
#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub n_list: Vec<usize>,
    /// Rates relative to `H(W|UZV)`; negative offsets must show decay.
    pub offsets: Vec<f64>,
    pub seeds: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            n_list: vec![2, 3, 4, 5, 6],
            offsets: vec![-0.3, 0.3],
            seeds: 16,
        }
    }
}

/// Largest ℓ1 gap tolerated between the scheme's `P_{UV}` and the problem's.
const TARGET_TOL: f64 = 1e-6;

pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let at = if at == "." { "<root>".to_string() } else { at };
        CliError::Config(format!("{}: at `{at}`: {}", path.display(), e.inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    fn validate(&self) -> Result<(), CliError> {
        let r = &self.run;
        if r.n_list.contains(&0) {
            return Err(CliError::Config("run.n_list: blocklengths must be at least 1".into()));
        }
        for (name, v) in [("run.r0", r.r0), ("run.r", r.r)] {
            if let Some(x) = v {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(CliError::Config(format!("{name}: rate must be a nonnegative number, got {x}")));
                }
            }
        }
        if r.code_seeds == 0 {
            return Err(CliError::Config("run.code_seeds: at least one code is needed".into()));
        }
        if let Some(q) = r.eve_crossovers.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(CliError::Config(format!("run.eve_crossovers: {q} is not a probability")));
        }
        if let Some(g) = &r.rate_grid {
            if let Some(x) = g.r0.iter().chain(&g.r).find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(CliError::Config(format!(
                    "run.rate_grid: rate must be a nonnegative number, got {x}"
                )));
            }
        }
        if r.extraction.n_list.contains(&0) {
            return Err(CliError::Config("run.extraction.n_list: blocklengths must be at least 1".into()));
        }
        Ok(())
    }

    /// The scheme at blocklength `n` and rates `(r0, r)`; `None` when the config has no scheme.
    pub fn scheme(&self, seed: u64, n: usize, r0: f64, r: f64) -> Result<Option<SchemeSpec>, CliError> {
        let p = &self.problem;
        let spec = match &self.scheme {
            None => return Ok(None),
            Some(SchemeConfig::Chain {
                p_w_given_u,
                p_x_given_uw,
                p_v_given_wy,
            }) => SchemeSpec::new(
                p.source().clone(),
                p_w_given_u.clone(),
                p_x_given_uw.clone(),
                p.channel().clone(),
                p_v_given_wy.clone(),
                n,
                r0,
                r,
            )
            .map_err(|e| CliError::Config(format!("scheme.chain: {e}")))?,
            Some(SchemeConfig::Split {
                p_w1_given_u,
                p_v_given_w1,
                p_w2x,
            }) => SchemeSpec::from_split(p.source(), p.channel(), p_w1_given_u, p_v_given_w1, p_w2x, n, r0, r)
                .map_err(|e| CliError::Config(format!("scheme.split: {e}")))?,
            Some(SchemeConfig::Witness) => {
                let point = min_r0_inner(p, &self.run.search, seed)?;
                let w = point
                    .witness
                    .filter(|_| point.feasible)
                    .ok_or_else(|| CliError::Config("scheme: the inner-bound search found no feasible witness".into()))?;
                SchemeSpec::from_split(
                    p.source(),
                    p.channel(),
                    &w.decomposition.p_w1_given_u,
                    &w.decomposition.p_v_given_w1,
                    &w.input.p_w2x,
                    n,
                    r0,
                    r,
                )?
            }
        };
        self.check_target(&spec)?;
        Ok(Some(spec))
    }

    /// The scheme's `P_{UV}` must be the problem's `P_U P̄_{V|U}`.
    fn check_target(&self, spec: &SchemeSpec) -> Result<(), CliError> {
        let [u, _, _, _, _, v] = spec.labels();
        let got = spec.chain()?.marginalize(&[u, v])?;
        let want = self.problem.source().to_joint().extend(self.problem.target())?;
        if got.axes() != want.axes() {
            return Err(CliError::Config(format!(
                "scheme: produces axes {:?} but the problem targets {:?}",
                got.labels(),
                want.labels()
            )));
        }
        let l1 = 2.0 * tv_distance(&got, &want)?;
        if l1 > TARGET_TOL {
            return Err(CliError::Config(format!(
                "scheme: induced P_UV is {l1:.3e} (l1) away from the problem's source and target"
            )));
        }
        Ok(())
    }
}
