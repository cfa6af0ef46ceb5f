//! Joint search over source-side factorizations and channel inputs.
//!
//! The source side yields a Pareto set of exact factorizations in `(I(W1;U), I(UV;W1))`.
//! For each distinct `I(W1;U)` level the channel side maximizes the advantage subject to
//! `I(W2;Y)` reaching that level. The two pools are then paired under the constraint.

use super::decompose::{self, reduce, to_decomposition, AuxDecomposition, Candidate, Target};
use super::problem::{ProblemSpec, W1_LABEL, W2_LABEL};
use super::wiretap::{
    self, is_more_capable, search_inputs, to_input, wiretap_advantage, Channel, ChannelCandidate, InputForm, WiretapInput,
};
use super::{SearchBudget, CONSTRAINT_SLACK, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::prob::{compose_chain, mutual_information, tv_distance, JointPmf, Kernel};
use crate::rng::derive_seed;
use serde::{Deserialize, Serialize};

/// Tolerance of the independent re-evaluation of a witness.
pub const WITNESS_TOL: f64 = 1e-6;
/// Rates within this distance are treated as equal when breaking ties.
const TIE_TOL: f64 = 1e-9;
/// Weights on `I(W;U)` of the source-side searches; larger weights trace lower `I(W;U)`.
const LAMBDAS: [f64; 4] = [0.0, 0.5, 2.0, 8.0];

/// A pair of auxiliaries together with their informations, recomputed from the kernels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub decomposition: AuxDecomposition,
    pub input: WiretapInput,
    pub i_w1_u: f64,
    pub i_uv_w1: f64,
    pub i_w2_y: f64,
    pub i_w2_z: f64,
    pub advantage: f64,
}

/// What the search saw, reported whether or not it succeeded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Exact factorizations on the Pareto set.
    pub source_candidates: usize,
    /// Channel inputs on the Pareto set.
    pub channel_candidates: usize,
    /// Smallest factorization residual reached.
    pub best_residual: f64,
    /// `I(W1;U)` levels given to the channel search.
    pub tau_levels: Vec<f64>,
    /// Largest `I(W2;Y)` found.
    pub max_i_w2_y: f64,
    /// Smallest `I(W1;U) - max I(W2;Y)` over exact factorizations; positive means infeasible.
    pub constraint_shortfall: Option<f64>,
    /// Minimum of `I(X;Y) - I(X;Z)` from the more-capable check, when it was run.
    pub more_capable_margin: Option<f64>,
}

/// Smallest common-randomness rate found, with the witness attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    /// `None` when no witness satisfies the constraints.
    pub r0_min: Option<f64>,
    pub feasible: bool,
    /// The witness meets `I(W1;U) <= I(W2;Y)` with less than [`WITNESS_TOL`] to spare.
    pub boundary: bool,
    pub witness: Option<Witness>,
    pub diagnostics: Diagnostics,
}

/// Searches the inner bound for the smallest `max(0, I(UV;W1) - [I(W2;Y) - I(W2;Z)])`
/// subject to `I(W1;U) <= I(W2;Y)`.
pub fn min_r0_inner(spec: &ProblemSpec, budget: &SearchBudget, seed: u64) -> Result<RatePoint> {
    let (_, w2_cap) = spec.cardinality_caps();
    solve(spec, budget, seed, InputForm::Joint(w2_cap), None)
}

/// Searches the more-capable region, where `W2 = X`, for the smallest
/// `max(0, I(UV;W) - [I(X;Y) - I(X;Z)])` subject to `I(W;U) <= I(X;Y)`.
///
/// Refuses channels that fail [`is_more_capable`].
pub fn min_r0_corollary(spec: &ProblemSpec, budget: &SearchBudget, seed: u64) -> Result<RatePoint> {
    let mc = is_more_capable(
        spec.channel(),
        budget.more_capable_resolution,
        budget.more_capable_samples,
        derive_seed(seed, 0x3C),
    )?;
    if !mc.holds {
        return Err(Error::NotMoreCapable {
            margin: mc.margin,
            minimizer: mc.minimizer,
        });
    }
    solve(spec, budget, seed, InputForm::Direct, Some(mc.margin))
}

fn solve(spec: &ProblemSpec, budget: &SearchBudget, seed: u64, form: InputForm, margin: Option<f64>) -> Result<RatePoint> {
    let t = Target::new(spec.source(), spec.target())?;
    let ch = Channel::new(spec.channel())?;
    let (w1_cap, _) = spec.cardinality_caps();

    let mut pool: Vec<Candidate> = Vec::new();
    let mut best_residual = f64::INFINITY;
    for k in 1..=w1_cap {
        for (li, &lambda) in LAMBDAS.iter().enumerate() {
            let s = derive_seed(seed, (k * LAMBDAS.len() + li) as u64);
            let (found, fallback) = decompose::search(&t, k, budget, lambda, s);
            best_residual = best_residual.min(fallback.residual);
            for c in &found {
                best_residual = best_residual.min(c.residual);
            }
            pool.extend(found.iter().map(|c| reduce(&t, c)));
        }
    }
    let pool = decompose::pareto(pool);

    let taus = tau_levels(&pool, budget.tau_levels);
    let mut inputs: Vec<ChannelCandidate> = Vec::new();
    for (i, &tau) in taus.iter().enumerate() {
        inputs.extend(search_inputs(&ch, form, tau, budget, derive_seed(seed, 0x1000 + i as u64)));
    }
    let inputs = wiretap::pareto(inputs);
    let max_c = inputs.iter().map(|c| c.c).fold(0.0, f64::max);

    let mut diagnostics = Diagnostics {
        source_candidates: pool.len(),
        channel_candidates: inputs.len(),
        best_residual,
        tau_levels: taus,
        max_i_w2_y: max_c,
        constraint_shortfall: pool.iter().map(|s| s.a - max_c).reduce(f64::min),
        more_capable_margin: margin,
    };

    let Some((s, c)) = best_pair(&pool, &inputs) else {
        log::warn!("no feasible witness: {diagnostics:?}");
        return Ok(RatePoint {
            r0_min: None,
            feasible: false,
            boundary: false,
            witness: None,
            diagnostics,
        });
    };
    let [u, v, x, _, _] = spec.alphabets();
    let decomposition = to_decomposition(&t, s, u, v, W1_LABEL)?;
    let input = to_input(c, x, W2_LABEL)?;
    let witness = reevaluate(spec, decomposition, input)?;
    if witness.decomposition.residual > RESIDUAL_TOL || witness.i_w1_u > witness.i_w2_y + WITNESS_TOL {
        // The dense search and the independent evaluation disagree; report rather than hide it.
        log::warn!("witness failed re-evaluation: {witness:?}");
        diagnostics.constraint_shortfall = Some(witness.i_w1_u - witness.i_w2_y);
        return Ok(RatePoint {
            r0_min: None,
            feasible: false,
            boundary: false,
            witness: Some(witness),
            diagnostics,
        });
    }
    Ok(RatePoint {
        r0_min: Some((witness.i_uv_w1 - witness.advantage).max(0.0)),
        feasible: true,
        boundary: witness.i_w2_y - witness.i_w1_u < WITNESS_TOL,
        witness: Some(witness),
        diagnostics,
    })
}

/// Distinct `I(W1;U)` values of the pool, thinned to at most `max_levels` (keeping both ends),
/// together with the unconstrained level 0.
fn tau_levels(pool: &[Candidate], max_levels: usize) -> Vec<f64> {
    let mut a: Vec<f64> = pool.iter().map(|c| c.a).collect();
    a.sort_by(f64::total_cmp);
    a.dedup_by(|x, y| (*x - *y).abs() <= 1e-9);
    let m = max_levels.max(2);
    if a.len() > m {
        let last = a.len() - 1;
        a = (0..m).map(|i| a[i * last / (m - 1)]).collect();
    }
    if a.first().map_or(true, |&x| x > 1e-9) {
        a.insert(0, 0.0);
    }
    a
}

fn lex(p: &[f64], q: &[f64]) -> std::cmp::Ordering {
    p.iter()
        .zip(q)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(p.len().cmp(&q.len()))
}

/// Minimizes `max(0, b - d)` over pairs with `c >= a`; near-ties go to the smaller `|W1|`,
/// then the smaller `|W2|`, then lexicographically smaller parameters.
fn best_pair<'a>(pool: &'a [Candidate], inputs: &'a [ChannelCandidate]) -> Option<(&'a Candidate, &'a ChannelCandidate)> {
    let mut pairs: Vec<(f64, &Candidate, &ChannelCandidate)> = Vec::new();
    for s in pool {
        for c in inputs {
            if c.c >= s.a - CONSTRAINT_SLACK {
                pairs.push(((s.b - c.d).max(0.0), s, c));
            }
        }
    }
    let r = pairs.iter().map(|p| p.0).reduce(f64::min)?;
    pairs
        .into_iter()
        .filter(|p| p.0 <= r + TIE_TOL)
        .min_by(|p, q| {
            p.1.k
                .cmp(&q.1.k)
                .then(p.2.k.cmp(&q.2.k))
                .then(lex(&p.1.x, &q.1.x))
                .then(lex(&p.2.x, &q.2.x))
        })
        .map(|p| (p.1, p.2))
}

/// Recomputes every quantity of a witness from its kernels alone.
fn reevaluate(spec: &ProblemSpec, decomposition: AuxDecomposition, input: WiretapInput) -> Result<Witness> {
    let source: Kernel = spec.source().clone().into();
    let chain = compose_chain(&[source, decomposition.p_w1_given_u.clone(), decomposition.p_v_given_w1.clone()])?;
    let [u, v, _, _, _] = spec.alphabets();
    let (u, v) = (u.label.as_str(), v.label.as_str());
    let i_w1_u = mutual_information(&chain, &[W1_LABEL], &[u])?;
    let i_uv_w1 = mutual_information(&chain, &[u, v], &[W1_LABEL])?;
    let model = chain.marginalize(&[u, v])?;
    let wanted: JointPmf = spec.source().to_joint().extend(spec.target())?;
    let residual = 2.0 * tv_distance(&model, &wanted)?;
    let adv = wiretap_advantage(&input, spec.channel())?;
    Ok(Witness {
        decomposition: AuxDecomposition { residual, ..decomposition },
        input,
        i_w1_u,
        i_uv_w1,
        i_w2_y: adv.i_w2_y,
        i_w2_z: adv.i_w2_z,
        advantage: adv.advantage,
    })
}
