//! Fixing the extra-randomness index, and the extraction divergence behind it.

use super::code::{BinHasher, BinningCode};
use super::exact::conditional_laws;
use super::run::{rc_run_with, Resample};
use super::scheme::{decode_index, seq_count};
use crate::error::{Error, Result};
use crate::prob::{iid_power, tv_distance, tv_slices, JointPmf, MAX_TENSOR_ENTRIES};
use crate::rng::{derive_seed, rng_from};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How candidate values of `F` are scored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtractionMode {
    /// Every `f`, scored by `tv(P^RB_{UZV|F=f}, P^RC_{UZV|F=f})`.
    Exact,
    /// Up to `candidates` seeded values of `f`, each scored by the total variation between
    /// the empirical random-coding law of a leading window of at most four symbols and the
    /// matching i.i.d. chain marginal.
    Sampled { candidates: usize, trials: usize, seed: u64 },
}

/// The chosen extra-randomness index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub chosen_f: u64,
    pub conditional_tv: f64,
    /// Score of every `f` (exact mode only).
    pub per_f_table: Option<Vec<f64>>,
    /// `tv(P^RB_{UZVF}, P^RC_{UZVF})` (exact mode only).
    pub unconditioned_tv: Option<f64>,
}

/// Picks the `f` with the smallest score, ties going to the smaller index.
pub fn extract_and_fix_f(code: &BinningCode, mode: ExtractionMode) -> Result<ExtractionResult> {
    match mode {
        ExtractionMode::Exact => extract_exact(code),
        ExtractionMode::Sampled { candidates, trials, seed } => extract_sampled(code, candidates, trials, seed),
    }
}

fn argmin(scores: &[(u64, f64)]) -> (u64, f64) {
    scores
        .iter()
        .copied()
        .fold((u64::MAX, f64::INFINITY), |best, s| if s.1 < best.1 { s } else { best })
}

fn extract_exact(code: &BinningCode) -> Result<ExtractionResult> {
    let nf = code.extra_bins();
    if nf > MAX_TENSOR_ENTRIES as u64 {
        return Err(Error::budget("extra-randomness bins", nf as u128, MAX_TENSOR_ENTRIES as u128));
    }
    let rows: Vec<Result<(f64, f64)>> = (0..nf)
        .into_par_iter()
        .map(|f| {
            let q = 1.0 / nf as f64;
            let laws = match conditional_laws(code, f, true) {
                // An extra bin no source sequence can reach is never chosen.
                Err(Error::InvalidDistribution(_)) => return Ok((1.0, q)),
                other => other?,
            };
            Ok(match &laws.rb {
                Some(rb) => {
                    let l1: f64 = rb
                        .probs()
                        .iter()
                        .zip(laws.rc.probs())
                        .map(|(&a, &b)| (laws.rb_mass * a - q * b).abs())
                        .sum();
                    (tv_distance(rb, &laws.rc)?, l1)
                }
                None => (1.0, q),
            })
        })
        .collect();
    let mut table = Vec::with_capacity(nf as usize);
    let mut l1 = 0.0;
    for r in rows {
        let (t, part) = r?;
        table.push(t);
        l1 += part;
    }
    let scored: Vec<(u64, f64)> = table.iter().enumerate().map(|(f, &t)| (f as u64, t)).collect();
    let (chosen_f, conditional_tv) = argmin(&scored);
    let unconditioned = (0.5 * l1).min(1.0);
    if conditional_tv > 2.0 * unconditioned + 1e-12 {
        log::warn!("best conditional tv {conditional_tv} exceeds twice the unconditioned tv {unconditioned}");
    }
    Ok(ExtractionResult {
        chosen_f,
        conditional_tv,
        per_f_table: Some(table),
        unconditioned_tv: Some(unconditioned),
    })
}

/// Leading window length used by Monte Carlo estimates.
pub fn window(n: usize) -> usize {
    n.min(4)
}

fn extract_sampled(code: &BinningCode, candidates: usize, trials: usize, seed: u64) -> Result<ExtractionResult> {
    if candidates == 0 || trials == 0 {
        return Err(Error::InvalidArgument("sampled extraction needs candidates and trials".into()));
    }
    let nf = code.extra_bins();
    let fs: Vec<u64> = if nf <= candidates as u64 {
        (0..nf).collect()
    } else {
        let mut rng = rng_from(derive_seed(seed, 0xF));
        let mut v: Vec<u64> = sample(&mut rng, nf.min(1 << 30) as usize, candidates)
            .into_iter()
            .map(|x| x as u64)
            .collect();
        v.sort_unstable();
        v
    };
    if fs.len() == 1 {
        return Ok(ExtractionResult {
            chosen_f: fs[0],
            conditional_tv: f64::NAN,
            per_f_table: None,
            unconditioned_tv: None,
        });
    }
    let spec = code.spec();
    let w = window(spec.n());
    let [u, _, _, _, z, v] = spec.labels();
    let target = iid_power(&spec.chain()?.marginalize(&[u, z, v])?, w)?;
    let d = spec.dims();
    let cells = target.len();
    let mut scores = Vec::new();
    for &f in &fs {
        let hist: Vec<Result<Option<usize>>> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let s = derive_seed(seed, (f << 32) ^ i as u64);
                let c = rng_from(derive_seed(s, 1)).random_range(0..code.common_bins());
                let t = rc_run_with(code, s, c, f, Resample::Common)?;
                if t.flagged {
                    return Ok(None);
                }
                let mut idx = 0usize;
                for k in 0..w {
                    idx = ((idx * d.u + t.u_seq[k]) * d.z + t.z_seq[k]) * d.v + t.v_seq[k];
                }
                Ok(Some(idx))
            })
            .collect();
        let mut counts = vec![0.0; cells];
        let mut kept = 0.0;
        for h in hist {
            if let Some(i) = h? {
                counts[i] += 1.0;
                kept += 1.0;
            }
        }
        let score = if kept > 0.0 {
            counts.iter_mut().for_each(|c| *c /= kept);
            tv_slices(&counts, target.probs())
        } else {
            1.0
        };
        scores.push((f, score));
    }
    let (chosen_f, conditional_tv) = argmin(&scores);
    Ok(ExtractionResult {
        chosen_f,
        conditional_tv,
        per_f_table: None,
        unconditioned_tv: None,
    })
}

use rand::Rng as _;

/// Exact `D(P_{A^n K} ‖ P_{A^n} Q_K)` in bits, where `K = φ(B^n)` for the keyed hash
/// binning into `bins` bins, `(A, B)` are drawn i.i.d. from `single`, and `Q_K` is uniform.
///
/// Letters of `A` with identical conditional rows `P_{B|A=a}` are merged first,
/// since the divergence depends on `a^n` only through those rows.
pub fn extraction_divergence(single: &JointPmf, a_axes: &[&str], b_axis: &str, n: usize, bins: u64, hasher: BinHasher) -> Result<f64> {
    if n == 0 || bins == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and at least one bin".into()));
    }
    let mut keep: Vec<&str> = a_axes.to_vec();
    keep.push(b_axis);
    let j = single.marginalize(&keep)?;
    let kb = j.axes().last().expect("B axis").size;
    let ka = j.len() / kb;
    // Classes of A letters sharing a conditional row.
    let mut classes: Vec<(f64, Vec<f64>)> = Vec::new();
    for a in 0..ka {
        let row = &j.probs()[a * kb..(a + 1) * kb];
        let m: f64 = row.iter().sum();
        if m == 0.0 {
            continue;
        }
        let cond: Vec<f64> = row.iter().map(|&p| p / m).collect();
        match classes
            .iter_mut()
            .find(|(_, r)| r.iter().zip(&cond).all(|(x, y)| x.to_bits() == y.to_bits()))
        {
            Some(cl) => cl.0 += m,
            None => classes.push((m, cond)),
        }
    }
    let nb = seq_count(kb, n).filter(|&c| c <= MAX_TENSOR_ENTRIES as u64).ok_or_else(|| {
        Error::budget(
            "B^n for the extraction divergence",
            (kb as u128).saturating_pow(n as u32),
            MAX_TENSOR_ENTRIES as u128,
        )
    })? as usize;
    let ncls = classes.len();
    let na = seq_count(ncls, n).ok_or_else(|| Error::budget("class sequences", u128::MAX, 1 << 40))?;
    let work = (na as u128) * (nb as u128);
    if work > 1u128 << 36 {
        return Err(Error::budget("extraction divergence evaluations", work, 1u128 << 36));
    }
    let mut seq = vec![0usize; n];
    let bin_of: Vec<u64> = (0..nb)
        .map(|i| {
            decode_index(i as u64, kb, &mut seq);
            hasher.bin(&seq, bins)
        })
        .collect();
    // Bins compacted to the ones actually hit.
    let mut used: Vec<u64> = bin_of.clone();
    used.sort_unstable();
    used.dedup();
    let compact: Vec<usize> = bin_of.iter().map(|b| used.binary_search(b).expect("present")).collect();
    let log_k = (bins as f64).log2();
    const BLOCK: u64 = 256;
    let blocks = na.div_ceil(BLOCK);
    let parts: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut cseq = vec![0usize; n];
            let mut vec_b: Vec<f64> = Vec::with_capacity(nb);
            let mut tmp: Vec<f64> = Vec::with_capacity(nb);
            let mut pf = vec![0.0; used.len()];
            let mut acc = 0.0;
            for s in blk * BLOCK..((blk + 1) * BLOCK).min(na) {
                decode_index(s, ncls, &mut cseq);
                let pa: f64 = cseq.iter().map(|&c| classes[c].0).product();
                if pa == 0.0 {
                    continue;
                }
                vec_b.clear();
                vec_b.push(1.0);
                for &c in &cseq {
                    tmp.clear();
                    for &p in &vec_b {
                        tmp.extend(classes[c].1.iter().map(|&q| p * q));
                    }
                    std::mem::swap(&mut vec_b, &mut tmp);
                }
                pf.iter_mut().for_each(|x| *x = 0.0);
                for (i, &p) in vec_b.iter().enumerate() {
                    pf[compact[i]] += p;
                }
                let d: f64 = pf.iter().filter(|&&p| p > 0.0).map(|&p| p * (p.log2() + log_k)).sum();
                acc += pa * d;
            }
            acc
        })
        .collect();
    Ok(parts.iter().sum::<f64>().max(0.0))
}
