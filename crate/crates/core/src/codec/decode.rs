//! Maximum a posteriori decoding of `W^n` inside a bin pair, with `Y^n` as side information.

use super::code::{BinningCode, CodeMode};
use super::scheme::decode_index;
use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Relative score tolerance under which two candidates count as tied.
const TIE_TOL: f64 = 1e-12;

/// Candidates examined by the lazy decoder before giving up.
pub const LAZY_DECODE_CAP: usize = 1 << 20;

/// Output of the bin decoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub w_hat: Vec<usize>,
    /// False when the bin pair held no candidate and the fallback was returned.
    pub in_bin: bool,
}

/// Returns the most likely `w^n` with `φ1(w^n) = c` and `φ2(w^n) = f` under
/// `Π_t P(w_t, y_t)`, breaking ties towards the lexicographically smallest sequence.
///
/// An empty bin pair yields the all-zero sequence with `in_bin = false`.
pub fn sw_decode(code: &BinningCode, y: &[usize], c: u64, f: u64) -> Result<Decoded> {
    code.check_bins(c, f)?;
    let n = code.n();
    let d = code.spec().dims();
    if y.len() != n || y.iter().any(|&s| s >= d.y) {
        return Err(Error::InvalidArgument("side information sequence has the wrong shape".into()));
    }
    match code.mode() {
        CodeMode::Exact => decode_exact(code, y, c, f),
        CodeMode::Lazy => decode_lazy(code, y, c, f),
    }
}

fn score(code: &BinningCode, w: &[usize], y: &[usize]) -> f64 {
    let d = &code.spec().dense;
    w.iter().zip(y).map(|(&w, &y)| d.pwy[w * d.dims.y + y]).product()
}

fn decode_exact(code: &BinningCode, y: &[usize], c: u64, f: u64) -> Result<Decoded> {
    let n = code.n();
    let k = code.spec().dims().w;
    let members = code.members(c, f)?;
    if members.is_empty() {
        return Ok(Decoded {
            w_hat: vec![0; n],
            in_bin: false,
        });
    }
    let mut w = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, 0u32);
    for &i in members {
        decode_index(i as u64, k, &mut w);
        let s = score(code, &w, y);
        if s > best.0 * (1.0 + TIE_TOL) || best.0 == f64::NEG_INFINITY {
            best = (s, i);
        }
    }
    decode_index(best.1 as u64, k, &mut w);
    Ok(Decoded { w_hat: w, in_bin: true })
}

/// Log-score used by the lazy search; impossible symbols stay finite so ties remain ordered.
fn log_score(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        -1e6
    }
}

struct Node {
    score: f64,
    ranks: Vec<u16>,
    last: usize,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        self.score.total_cmp(&o.score).then_with(|| o.ranks.cmp(&self.ranks))
    }
}

/// Best-first enumeration of `W^n` in decreasing score; each rank vector has a
/// unique parent (decrement its last nonzero coordinate), so nothing is visited twice.
fn decode_lazy(code: &BinningCode, y: &[usize], c: u64, f: u64) -> Result<Decoded> {
    let n = code.n();
    let d = &code.spec().dense;
    let k = d.dims.w;
    let sorted: Vec<Vec<(usize, f64)>> = y
        .iter()
        .map(|&yt| {
            let mut col: Vec<(usize, f64)> = (0..k).map(|w| (w, log_score(d.pwy[w * d.dims.y + yt]))).collect();
            col.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            col
        })
        .collect();
    let total = |r: &[u16]| -> f64 { r.iter().enumerate().map(|(t, &q)| sorted[t][q as usize].1).sum() };
    let mut heap = BinaryHeap::new();
    let root = vec![0u16; n];
    heap.push(Node {
        score: total(&root),
        ranks: root,
        last: 0,
    });
    let mut found: Option<(f64, Vec<usize>)> = None;
    let mut seq = vec![0usize; n];
    let mut pops = 0usize;
    while let Some(node) = heap.pop() {
        if let Some((s, _)) = &found {
            if node.score < s - TIE_TOL * s.abs().max(1.0) {
                break;
            }
        }
        pops += 1;
        if pops > LAZY_DECODE_CAP {
            break;
        }
        for t in 0..n {
            seq[t] = sorted[t][node.ranks[t] as usize].0;
        }
        if code.phi1(&seq) == c && code.phi2(&seq) == f {
            match &mut found {
                None => found = Some((node.score, seq.clone())),
                Some((_, best)) => {
                    if seq < *best {
                        *best = seq.clone();
                    }
                }
            }
        }
        for t in node.last..n {
            if (node.ranks[t] as usize) + 1 < k {
                let mut r = node.ranks.clone();
                r[t] += 1;
                let s = node.score - sorted[t][node.ranks[t] as usize].1 + sorted[t][r[t] as usize].1;
                heap.push(Node {
                    score: s,
                    ranks: r,
                    last: t,
                });
            }
        }
    }
    Ok(match found {
        Some((_, w_hat)) => Decoded { w_hat, in_bin: true },
        None => Decoded {
            w_hat: vec![0; n],
            in_bin: false,
        },
    })
}
