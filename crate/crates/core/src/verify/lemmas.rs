//! Randomized checks of the total-variation, coloring and i.i.d.-approximation inequalities.

use crate::error::Result;
use crate::prob::{iid_power, mutual_information, seq_labels, tv_distance, Alphabet, JointPmf};
use crate::rng::{derive_seed, rng_from, Rng};
use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Slack for inequalities between computed quantities.
pub const INEQ_TOL: f64 = 1e-12;
/// Tolerance for the equality in the kernel-invariance check.
pub const EQ_TOL: f64 = 1e-9;
/// Failing cases kept per check.
const KEEP_FAILURES: usize = 5;

/// Total variation function under test; [`tv_distance`] unless a fault is injected.
pub type TvFn = fn(&JointPmf, &JointPmf) -> Result<f64>;

/// One failing case, with the inputs needed to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailingCase {
    pub case: usize,
    pub margin: f64,
    pub inputs: serde_json::Value,
}

/// Outcome of one check across all cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    /// Smallest `bound - value` over all cases; negative means a violation.
    pub worst_margin: f64,
    pub failures: Vec<FailingCase>,
}

/// Results of [`lemma_suite`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaTable {
    pub seed: u64,
    pub rows: Vec<LemmaRow>,
}

impl LemmaTable {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.violations == 0)
    }
}

type CaseFn = fn(&mut Rng, TvFn) -> Result<(f64, serde_json::Value)>;

/// Names of the checks, in table order.
pub const CHECKS: [&str; 6] = [
    "tv_marginal_monotone",
    "tv_shared_kernel_invariant",
    "tv_pointwise_kernel",
    "coloring_lower_pinsker",
    "coloring_upper",
    "iid_dependence_monotone",
];

/// Runs every check on `trials` seeded instances.
pub fn lemma_suite(seed: u64, trials: usize) -> Result<LemmaTable> {
    lemma_suite_with(seed, trials, tv_distance)
}

/// [`lemma_suite`] with a replaceable total variation function.
pub fn lemma_suite_with(seed: u64, trials: usize, tv: TvFn) -> Result<LemmaTable> {
    let fns: [CaseFn; 6] = [
        marginal_monotone,
        shared_kernel,
        pointwise_kernel,
        coloring_lower,
        coloring_upper,
        iid_dependence,
    ];
    let mut rows = Vec::with_capacity(fns.len());
    for (id, (name, f)) in CHECKS.iter().zip(fns).enumerate() {
        let stream = derive_seed(seed, id as u64);
        let results: Vec<Result<(f64, serde_json::Value)>> = (0..trials)
            .into_par_iter()
            .map(|case| f(&mut rng_from(derive_seed(stream, case as u64)), tv))
            .collect();
        let mut row = LemmaRow {
            name: name.to_string(),
            cases: trials,
            violations: 0,
            worst_margin: f64::INFINITY,
            failures: Vec::new(),
        };
        for (case, r) in results.into_iter().enumerate() {
            let (margin, inputs) = r?;
            row.worst_margin = row.worst_margin.min(margin);
            if margin < 0.0 || margin.is_nan() {
                row.violations += 1;
                if row.failures.len() < KEEP_FAILURES {
                    row.failures.push(FailingCase { case, margin, inputs });
                }
            }
        }
        rows.push(row);
    }
    Ok(LemmaTable { seed, rows })
}

/// A pmf with Dirichlet(1) weights, sharpened by a random power so that near-degenerate laws appear.
fn random_probs(rng: &mut Rng, k: usize) -> Vec<f64> {
    let power = [1.0, 1.0, 2.0, 4.0][rng.random_range(0..4)];
    let w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).map(|x: f64| x.powf(power)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn random_joint(rng: &mut Rng, axes: Vec<Alphabet>) -> Result<JointPmf> {
    let len = axes.iter().map(|a| a.size).product();
    JointPmf::from_weights(axes, random_probs(rng, len))
}

fn ab(rng: &mut Rng, amin: usize) -> (Alphabet, Alphabet) {
    (
        Alphabet::new("A", rng.random_range(amin..amin + 3)),
        Alphabet::new("B", rng.random_range(2..5)),
    )
}

/// Joint `P_A · K` for a kernel given by rows.
fn with_kernel(pa: &[f64], rows: &[Vec<f64>], a: &Alphabet, b: &Alphabet) -> Result<JointPmf> {
    let mut p = Vec::with_capacity(a.size * b.size);
    for (i, &x) in pa.iter().enumerate() {
        p.extend(rows[i].iter().map(|&k| x * k));
    }
    JointPmf::from_weights(vec![a.clone(), b.clone()], p)
}

fn marginal_monotone(rng: &mut Rng, tv: TvFn) -> Result<(f64, serde_json::Value)> {
    let (a, b) = ab(rng, 2);
    let p = random_joint(rng, vec![a.clone(), b.clone()])?;
    let q = random_joint(rng, vec![a, b])?;
    let margin = tv(&p, &q)? - tv(&p.marginalize(&["A"])?, &q.marginalize(&["A"])?)? + INEQ_TOL;
    Ok((margin, serde_json::json!({ "p": p, "q": q })))
}

fn shared_kernel(rng: &mut Rng, tv: TvFn) -> Result<(f64, serde_json::Value)> {
    let (a, b) = ab(rng, 2);
    let pa = random_probs(rng, a.size);
    let qa = random_probs(rng, a.size);
    let rows: Vec<Vec<f64>> = (0..a.size).map(|_| random_probs(rng, b.size)).collect();
    let pj = with_kernel(&pa, &rows, &a, &b)?;
    let qj = with_kernel(&qa, &rows, &a, &b)?;
    let pm = JointPmf::from_weights(vec![a.clone()], pa)?;
    let qm = JointPmf::from_weights(vec![a], qa)?;
    let margin = EQ_TOL - (tv(&pj, &qj)? - tv(&pm, &qm)?).abs();
    Ok((margin, serde_json::json!({ "p_a": pm, "q_a": qm, "kernel": rows })))
}

fn pointwise_kernel(rng: &mut Rng, tv: TvFn) -> Result<(f64, serde_json::Value)> {
    let (a, b) = ab(rng, 2);
    let pa = random_probs(rng, a.size);
    let qa = random_probs(rng, a.size);
    let k: Vec<Vec<f64>> = (0..a.size).map(|_| random_probs(rng, b.size)).collect();
    let k2: Vec<Vec<f64>> = (0..a.size).map(|_| random_probs(rng, b.size)).collect();
    let pj = with_kernel(&pa, &k, &a, &b)?;
    let qj = with_kernel(&qa, &k2, &a, &b)?;
    let eps = tv(&pj, &qj)?;
    let mut best = f64::INFINITY;
    for i in 0..a.size {
        let r1 = JointPmf::from_weights(vec![b.clone()], k[i].clone())?;
        let r2 = JointPmf::from_weights(vec![b.clone()], k2[i].clone())?;
        best = best.min(tv(&r1, &r2)?);
    }
    Ok((2.0 * eps - best + INEQ_TOL, serde_json::json!({ "p": pj, "q": qj })))
}

/// A joint over `A × B` with `|A| >= 4`, mixed toward independence by a random weight.
fn coloring_case(rng: &mut Rng, tv: TvFn) -> Result<(f64, f64, JointPmf)> {
    let (a, b) = ab(rng, 4);
    let r = random_joint(rng, vec![a.clone(), b.clone()])?;
    let lam: f64 = [1.0, 0.5, 0.1, 0.01][rng.random_range(0..4)];
    let prod = r.marginalize(&["A"])?.product(&r.marginalize(&["B"])?)?;
    let mix: Vec<f64> = r
        .probs()
        .iter()
        .zip(prod.probs())
        .map(|(&x, &y)| lam * x + (1.0 - lam) * y)
        .collect();
    let p = JointPmf::from_weights(vec![a, b], mix)?;
    let indep = p.marginalize(&["A"])?.product(&p.marginalize(&["B"])?)?;
    let v = 2.0 * tv(&p, &indep)?;
    let i = mutual_information(&p, &["A"], &["B"])?;
    Ok((v, i, p))
}

fn coloring_lower(rng: &mut Rng, tv: TvFn) -> Result<(f64, serde_json::Value)> {
    let (v, i, p) = coloring_case(rng, tv)?;
    let margin = i - v * v / (2.0 * std::f64::consts::LN_2) + INEQ_TOL;
    Ok((margin, serde_json::json!({ "p": p })))
}

fn coloring_upper(rng: &mut Rng, tv: TvFn) -> Result<(f64, serde_json::Value)> {
    let (v, i, p) = coloring_case(rng, tv)?;
    let size = p.axes()[0].size as f64;
    let bound = if v > 0.0 { v * (size / v).log2() } else { 0.0 };
    Ok((bound - i + INEQ_TOL, serde_json::json!({ "p": p })))
}

/// Radii at which the i.i.d.-approximation check is evaluated, largest first.
pub const IID_RADII: [f64; 4] = [0.2, 0.1, 0.05, 0.01];

/// `Σ_t I(A_t; A_∼t)` for a law over `A[1..n]`.
pub fn dependence_sum(p: &JointPmf) -> Result<f64> {
    let labels: Vec<String> = p.labels().iter().map(|s| s.to_string()).collect();
    let mut s = 0.0;
    for t in 0..labels.len() {
        let rest: Vec<&str> = labels
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != t)
            .map(|(_, l)| l.as_str())
            .collect();
        s += mutual_information(p, &[&labels[t]], &rest)?;
    }
    Ok(s)
}

/// Mixes `P̄^{⊗3}` with a random law `R` so that the distance to `P̄^{⊗3}` equals each radius,
/// and checks that the dependence sum shrinks with the radius.
fn iid_dependence(rng: &mut Rng, tv: TvFn) -> Result<(f64, serde_json::Value)> {
    let n = 3;
    let k = rng.random_range(2..4);
    let single = JointPmf::from_weights(vec![Alphabet::new("A", k)], random_probs(rng, k))?;
    let base = iid_power(&single, n)?;
    let axes: Vec<Alphabet> = seq_labels("A", n).into_iter().map(|l| Alphabet::new(l, k)).collect();
    let mut r = random_joint(rng, axes.clone())?;
    while tv(&r, &base)? < IID_RADII[0] {
        r = random_joint(rng, axes.clone())?;
    }
    let d = tv(&r, &base)?;
    let mut sums = Vec::with_capacity(IID_RADII.len());
    for eps in IID_RADII {
        let lam = eps / d;
        let mix: Vec<f64> = base
            .probs()
            .iter()
            .zip(r.probs())
            .map(|(&b, &x)| (1.0 - lam) * b + lam * x)
            .collect();
        sums.push(dependence_sum(&JointPmf::from_weights(axes.clone(), mix)?)?);
    }
    let margin = sums.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min) + INEQ_TOL;
    Ok((margin, serde_json::json!({ "p_bar": single, "r": r, "sums": sums })))
}
