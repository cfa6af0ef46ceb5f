//! Factorizations `P̄_{V|U} = Σ_w P_{W|U} P_{V|W}` of the target through an auxiliary.
//!
//! The search works on the joint `Q(u, w) = P_U(u) P(w|u)` and the rows `B(w, ·) = P(v|w)`.
//! The model `Σ_w Q(u, w) B(w, v)` is pulled toward `J(u, v) = P_U(u) P̄(v|u)` by
//! expectation–maximization steps (the nonnegative factorization updates that decrease
//! `D(J ‖ model)`), and coordinate exchange lowers `I(UV; W) + λ I(W; U)` between projections.

use super::simplex::{dirichlet, exchange, mi_matrix, ExchangeOpts};
use super::{SearchBudget, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::prob::{Alphabet, Kernel, Pmf};
use crate::rng::{derive_seed, rng_from};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// A factorization of the target through `W1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxDecomposition {
    pub w1_size: usize,
    pub p_w1_given_u: Kernel,
    pub p_v_given_w1: Kernel,
    /// `Σ_{u,v} P_U(u) |Σ_w P(w|u) P(v|w) - P̄(v|u)|`.
    pub residual: f64,
}

/// Expectation–maximization steps per projection during the local search.
const PROJECT_STEPS: usize = 30;
/// Upper limit on the final polishing steps.
const POLISH_STEPS: usize = 20_000;
/// Weight of the residual in the search objective.
const RESIDUAL_WEIGHT: f64 = 50.0;

/// Dense problem data shared by all restarts.
pub(crate) struct Target {
    pub nu: usize,
    pub nv: usize,
    pub pu: Vec<f64>,
    /// `J(u, v)`, row-major.
    pub joint: Vec<f64>,
}

impl Target {
    pub fn new(source: &Pmf, target: &Kernel) -> Result<Self> {
        let nu = source.alphabet().size;
        if target.rows() != nu || target.given().len() != 1 || target.axes().len() != 1 {
            return Err(Error::Shape("target must be a kernel from the source alphabet to one axis".into()));
        }
        let nv = target.cols();
        let pu = source.probs().to_vec();
        let mut joint = vec![0.0; nu * nv];
        for u in 0..nu {
            for v in 0..nv {
                joint[u * nv + v] = pu[u] * target.row(u)[v];
            }
        }
        Ok(Target { nu, nv, pu, joint })
    }
}

/// A candidate in the dense layout `[Q (u-major, |U|×k), B (w-major, k×|V|)]`.
#[derive(Clone, Debug)]
pub(crate) struct Candidate {
    pub k: usize,
    pub x: Vec<f64>,
    pub residual: f64,
    /// `I(W; U)`.
    pub a: f64,
    /// `I(UV; W)`.
    pub b: f64,
}

fn em_step(t: &Target, k: usize, x: &mut [f64], scratch: &mut Vec<f64>) {
    let (nu, nv) = (t.nu, t.nv);
    let qlen = nu * k;
    scratch.clear();
    scratch.resize(qlen + k * nv, 0.0);
    let (q, b) = x.split_at(qlen);
    let (nq, nb) = scratch.split_at_mut(qlen);
    let mut r = vec![0.0; k];
    for u in 0..nu {
        for v in 0..nv {
            let j = t.joint[u * nv + v];
            if j <= 0.0 {
                continue;
            }
            let mut m = 0.0;
            for w in 0..k {
                r[w] = q[u * k + w] * b[w * nv + v];
                m += r[w];
            }
            for w in 0..k {
                let share = if m > 0.0 { r[w] / m } else { 1.0 / k as f64 };
                nq[u * k + w] += j * share;
                nb[w * nv + v] += j * share;
            }
        }
    }
    for w in 0..k {
        let row = &mut nb[w * nv..(w + 1) * nv];
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|p| *p /= s);
        } else {
            row.copy_from_slice(&b[w * nv..(w + 1) * nv]);
        }
    }
    x.copy_from_slice(scratch);
}

pub(crate) fn residual(t: &Target, k: usize, x: &[f64]) -> f64 {
    let (q, b) = x.split_at(t.nu * k);
    let mut s = 0.0;
    for u in 0..t.nu {
        for v in 0..t.nv {
            let m: f64 = (0..k).map(|w| q[u * k + w] * b[w * t.nv + v]).sum();
            s += (m - t.joint[u * t.nv + v]).abs();
        }
    }
    s
}

/// `(I(W;U), I(UV;W))` of the model joint.
pub(crate) fn informations(t: &Target, k: usize, x: &[f64]) -> (f64, f64) {
    let (q, b) = x.split_at(t.nu * k);
    let a = mi_matrix(q, t.nu, k);
    // Joint over (u, v, w) laid out as rows (u, v) and columns w.
    let mut j = vec![0.0; t.nu * t.nv * k];
    for u in 0..t.nu {
        for v in 0..t.nv {
            for w in 0..k {
                j[(u * t.nv + v) * k + w] = q[u * k + w] * b[w * t.nv + v];
            }
        }
    }
    (a, mi_matrix(&j, t.nu * t.nv, k))
}

fn evaluate(t: &Target, k: usize, x: Vec<f64>) -> Candidate {
    let residual = residual(t, k, &x);
    let (a, b) = informations(t, k, &x);
    Candidate { k, x, residual, a, b }
}

fn polish(t: &Target, k: usize, x: &mut [f64]) {
    let mut scratch = Vec::new();
    let mut last = residual(t, k, x);
    for i in 0..POLISH_STEPS {
        if last <= 1e-13 {
            break;
        }
        em_step(t, k, x, &mut scratch);
        if i % 100 == 99 {
            let r = residual(t, k, x);
            if r > last * 0.999_999 {
                break;
            }
            last = r;
        }
    }
}

/// Exact structural starting points: `W = U`, `W = V` and constant `W`.
fn structural(t: &Target, k: usize) -> Vec<Vec<f64>> {
    let (nu, nv) = (t.nu, t.nv);
    let uniform = vec![1.0 / nv as f64; nv];
    let mut out = Vec::new();
    let blank = || vec![0.0; nu * k + k * nv];
    if k >= nu {
        let mut x = blank();
        for u in 0..nu {
            x[u * k + u] = t.pu[u];
        }
        for w in 0..k {
            let row: Vec<f64> = if w < nu && t.pu[w] > 0.0 {
                t.joint[w * nv..(w + 1) * nv].iter().map(|p| p / t.pu[w]).collect()
            } else {
                uniform.clone()
            };
            x[nu * k + w * nv..nu * k + (w + 1) * nv].copy_from_slice(&row);
        }
        out.push(x);
    }
    if k >= nv {
        let mut x = blank();
        for u in 0..nu {
            for v in 0..nv {
                x[u * k + v] = t.joint[u * nv + v];
            }
        }
        for w in 0..k {
            let row = &mut x[nu * k + w * nv..nu * k + (w + 1) * nv];
            if w < nv {
                row[w] = 1.0;
            } else {
                row.copy_from_slice(&uniform);
            }
        }
        out.push(x);
    }
    let mut x = blank();
    for u in 0..nu {
        x[u * k] = t.pu[u];
    }
    for w in 0..k {
        let row: Vec<f64> = if w == 0 {
            (0..nv).map(|v| (0..nu).map(|u| t.joint[u * nv + v]).sum()).collect()
        } else {
            uniform.clone()
        };
        x[nu * k + w * nv..nu * k + (w + 1) * nv].copy_from_slice(&row);
    }
    out.push(x);
    out
}

fn blocks(t: &Target, k: usize) -> Vec<Range<usize>> {
    let mut b: Vec<Range<usize>> = (0..t.nu).map(|u| u * k..(u + 1) * k).collect();
    let off = t.nu * k;
    b.extend((0..k).map(|w| off + w * t.nv..off + (w + 1) * t.nv));
    b
}

/// Keeps the candidates not dominated in `(a, b)`; ties keep the earlier one.
pub(crate) fn pareto(mut c: Vec<Candidate>) -> Vec<Candidate> {
    c.sort_by(|p, q| p.a.total_cmp(&q.a).then(p.b.total_cmp(&q.b)).then(p.k.cmp(&q.k)));
    let mut out: Vec<Candidate> = Vec::new();
    for x in c {
        if out.last().map_or(true, |l| x.b < l.b - 1e-12) {
            out.push(x);
        }
    }
    out
}

/// One search over auxiliaries of size `k`, returning every exact point visited (Pareto-filtered)
/// and the candidate with the smallest residual.
pub(crate) fn search(t: &Target, k: usize, budget: &SearchBudget, lambda: f64, seed: u64) -> (Vec<Candidate>, Candidate) {
    let starts: Vec<Vec<f64>> = {
        let mut s = structural(t, k);
        for r in 0..budget.restarts {
            let mut rng = rng_from(derive_seed(seed, r as u64));
            let mut x: Vec<f64> = (0..t.nu).flat_map(|u| dirichlet(&mut rng, k, t.pu[u])).collect();
            for _ in 0..k {
                x.extend(dirichlet(&mut rng, t.nv, 1.0));
            }
            s.push(x);
        }
        s
    };
    let blocks = blocks(t, k);
    let runs: Vec<(Vec<Candidate>, Candidate)> = starts
        .into_par_iter()
        .map(|mut x| {
            let mut scratch = Vec::new();
            polish(t, k, &mut x);
            let mut exact = Vec::new();
            let mut eval = |y: &mut Vec<f64>| {
                for _ in 0..PROJECT_STEPS {
                    em_step(t, k, y, &mut scratch);
                }
                let (a, b) = informations(t, k, y);
                b + lambda * a + RESIDUAL_WEIGHT * residual(t, k, y)
            };
            let mut visit = |y: &[f64], _f: f64| {
                let c = evaluate(t, k, y.to_vec());
                if c.residual <= RESIDUAL_TOL {
                    exact.push(c);
                }
            };
            let opts = ExchangeOpts {
                initial_step: 0.1,
                min_step: 1e-7,
                max_evals: budget.max_evals,
            };
            exchange(&mut x, &blocks, &mut eval, &mut visit, opts);
            polish(t, k, &mut x);
            let fin = evaluate(t, k, x);
            if fin.residual <= RESIDUAL_TOL {
                exact.push(fin.clone());
            }
            (pareto(exact), fin)
        })
        .collect();
    let mut pool = Vec::new();
    let mut best: Option<Candidate> = None;
    for (ex, fin) in runs {
        pool.extend(ex);
        let better = match &best {
            None => true,
            Some(b) => rank_key(&fin) < rank_key(b),
        };
        if better {
            best = Some(fin);
        }
    }
    (pareto(pool), best.expect("at least one start"))
}

/// Drops `W` letters without mass and merges letters with the same row of `P(v|w)`.
/// The factorization is unchanged and neither information grows.
pub(crate) fn reduce(t: &Target, c: &Candidate) -> Candidate {
    let (k, nu, nv) = (c.k, t.nu, t.nv);
    let (q, b) = c.x.split_at(nu * k);
    let mut keep: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for w in 0..k {
        let col: Vec<f64> = (0..nu).map(|u| q[u * k + w]).collect();
        if col.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        let row = &b[w * nv..(w + 1) * nv];
        match keep
            .iter_mut()
            .find(|(_, r)| r.iter().zip(row).all(|(x, y)| (x - y).abs() <= 1e-12))
        {
            Some((qc, _)) => qc.iter_mut().zip(&col).for_each(|(x, y)| *x += y),
            None => keep.push((col, row.to_vec())),
        }
    }
    if keep.len() == k || keep.is_empty() {
        return c.clone();
    }
    let k2 = keep.len();
    let mut x = vec![0.0; nu * k2];
    for (w, (col, _)) in keep.iter().enumerate() {
        for u in 0..nu {
            x[u * k2 + w] = col[u];
        }
    }
    for (_, row) in &keep {
        x.extend_from_slice(row);
    }
    evaluate(t, k2, x)
}

/// Orders candidates by residual above tolerance, then by `I(UV;W)`.
fn rank_key(c: &Candidate) -> (u8, f64) {
    if c.residual <= RESIDUAL_TOL {
        (0, c.b)
    } else {
        (1, c.residual)
    }
}

/// Converts a dense candidate into kernels labelled `U → W1 → V`.
pub(crate) fn to_decomposition(t: &Target, c: &Candidate, u: &Alphabet, v: &Alphabet, w_label: &str) -> Result<AuxDecomposition> {
    let k = c.k;
    let (q, b) = c.x.split_at(t.nu * k);
    let mut a = vec![0.0; t.nu * k];
    for uu in 0..t.nu {
        let s: f64 = q[uu * k..(uu + 1) * k].iter().sum();
        for w in 0..k {
            a[uu * k + w] = if s > 0.0 { q[uu * k + w] / s } else { 1.0 / k as f64 };
        }
    }
    let w = Alphabet::new(w_label, k);
    let b = b.to_vec();
    Ok(AuxDecomposition {
        w1_size: k,
        p_w1_given_u: Kernel::new(vec![u.clone()], vec![w.clone()], renormalize_rows(a, k))?,
        p_v_given_w1: Kernel::new(vec![w], vec![v.clone()], renormalize_rows(b, t.nv))?,
        residual: c.residual,
    })
}

fn renormalize_rows(mut p: Vec<f64>, cols: usize) -> Vec<f64> {
    for row in p.chunks_mut(cols) {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
    p
}

/// Searches for the factorization with `w_size` auxiliary letters that minimizes the residual,
/// preferring the smallest `I(UV; W)` among those within tolerance. Deterministic given `seed`.
pub fn decompose_markov(source: &Pmf, target: &Kernel, w_size: usize, budget: &SearchBudget, seed: u64) -> Result<AuxDecomposition> {
    if w_size == 0 {
        return Err(Error::InvalidArgument("auxiliary alphabet needs at least one letter".into()));
    }
    let t = Target::new(source, target)?;
    let (pool, fallback) = search(&t, w_size, budget, 0.0, seed);
    let best = pool.iter().min_by(|p, q| p.b.total_cmp(&q.b)).cloned().unwrap_or(fallback);
    to_decomposition(&t, &best, source.alphabet(), &target.axes()[0], super::problem::W1_LABEL)
}
