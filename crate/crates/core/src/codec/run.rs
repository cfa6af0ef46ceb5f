//! One pass of the random-coding scheme.

use super::code::{BinningCode, CodeMode};
use super::decode::sw_decode;
use super::scheme::decode_index;
use crate::error::Result;
use crate::rng::{rng_from, Rng};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

/// Redraws allowed when the posterior on a bin pair is empty.
pub const MAX_RESAMPLES: u32 = 16;

/// Which indices are redrawn when the posterior on a bin pair is empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resample {
    /// Redraw both `c` and `f`.
    Both,
    /// Keep `f` pinned and redraw only `c`.
    Common,
}

/// Every variable of one pass.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub u_seq: Vec<usize>,
    pub w_seq: Vec<usize>,
    pub x_seq: Vec<usize>,
    pub y_seq: Vec<usize>,
    pub z_seq: Vec<usize>,
    pub w_hat_seq: Vec<usize>,
    pub v_seq: Vec<usize>,
    pub c: u64,
    pub f: u64,
    pub decode_ok: bool,
    pub resamples: u32,
    /// Set when every redraw hit an empty posterior; `w_seq` was then drawn ignoring the bins.
    pub flagged: bool,
}

fn draw(rng: &mut Rng, probs: &[f64]) -> usize {
    let mut t = rng.random::<f64>();
    for (i, &p) in probs.iter().enumerate() {
        if t < p {
            return i;
        }
        t -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Runs the encoder, channel and decoder once with bin indices `(c, f)`.
pub fn rc_run(code: &BinningCode, seed: u64, c: u64, f: u64) -> Result<Trace> {
    rc_run_with(code, seed, c, f, Resample::Both)
}

/// [`rc_run`] with an explicit resampling policy.
pub fn rc_run_with(code: &BinningCode, seed: u64, c: u64, f: u64, policy: Resample) -> Result<Trace> {
    code.check_bins(c, f)?;
    let mut rng = rng_from(seed);
    let d = &code.spec().dense;
    let dims = d.dims;
    let n = code.n();
    let u_seq: Vec<usize> = (0..n).map(|_| draw(&mut rng, &d.pu)).collect();
    let (mut c, mut f) = (c, f);
    let mut resamples = 0;
    let mut w_seq = None;
    loop {
        if let Some(w) = sample_posterior(code, &mut rng, &u_seq, c, f)? {
            w_seq = Some(w);
            break;
        }
        if resamples == MAX_RESAMPLES {
            break;
        }
        resamples += 1;
        c = rng.random_range(0..code.common_bins());
        if policy == Resample::Both {
            f = rng.random_range(0..code.extra_bins());
        }
    }
    let flagged = w_seq.is_none();
    let w_seq = w_seq.unwrap_or_else(|| {
        u_seq
            .iter()
            .map(|&u| draw(&mut rng, &d.pw_u[u * dims.w..(u + 1) * dims.w]))
            .collect()
    });
    let mut x_seq = Vec::with_capacity(n);
    let mut y_seq = Vec::with_capacity(n);
    let mut z_seq = Vec::with_capacity(n);
    let yz = dims.y * dims.z;
    for t in 0..n {
        let uw = u_seq[t] * dims.w + w_seq[t];
        let x = draw(&mut rng, &d.px_uw[uw * dims.x..(uw + 1) * dims.x]);
        let o = draw(&mut rng, &d.pyz_x[x * yz..(x + 1) * yz]);
        x_seq.push(x);
        y_seq.push(o / dims.z);
        z_seq.push(o % dims.z);
    }
    let dec = sw_decode(code, &y_seq, c, f)?;
    let v_seq = (0..n)
        .map(|t| {
            let row = (dec.w_hat[t] * dims.y + y_seq[t]) * dims.v;
            draw(&mut rng, &d.pv_wy[row..row + dims.v])
        })
        .collect();
    Ok(Trace {
        decode_ok: dec.w_hat == w_seq,
        u_seq,
        w_seq,
        x_seq,
        y_seq,
        z_seq,
        w_hat_seq: dec.w_hat,
        v_seq,
        c,
        f,
        resamples,
        flagged,
    })
}

/// Draws `w^n` from `Π P(w_t|u_t)` restricted to the bin pair, or `None` when that has no mass.
fn sample_posterior(code: &BinningCode, rng: &mut Rng, u: &[usize], c: u64, f: u64) -> Result<Option<Vec<usize>>> {
    let d = &code.spec().dense;
    let k = d.dims.w;
    let n = u.len();
    match code.mode() {
        CodeMode::Exact => {
            let members = code.members(c, f)?;
            let mut seq = vec![0usize; n];
            let weights: Vec<f64> = members
                .iter()
                .map(|&i| {
                    decode_index(i as u64, k, &mut seq);
                    seq.iter().zip(u).map(|(&w, &u)| d.pw_u[u * k + w]).product()
                })
                .collect();
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                return Ok(None);
            }
            let mut t = rng.random::<f64>() * total;
            let mut pick = members.len() - 1;
            for (j, &wgt) in weights.iter().enumerate() {
                if t < wgt {
                    pick = j;
                    break;
                }
                t -= wgt;
            }
            while weights[pick] == 0.0 {
                pick -= 1;
            }
            decode_index(members[pick] as u64, k, &mut seq);
            Ok(Some(seq))
        }
        CodeMode::Lazy => {
            // Rejection sampling; the expected number of draws is the number of bin pairs.
            let pairs = code.common_bins().saturating_mul(code.extra_bins());
            let tries = pairs.saturating_mul(64).min(1 << 24);
            let mut seq = vec![0usize; n];
            for _ in 0..tries {
                for t in 0..n {
                    seq[t] = draw(rng, &d.pw_u[u[t] * k..(u[t] + 1) * k]);
                }
                if code.phi1(&seq) == c && code.phi2(&seq) == f {
                    return Ok(Some(seq));
                }
            }
            Ok(None)
        }
    }
}
