//! Channel-side quantities: the wiretap advantage of an input, the more-capable test and
//! the secrecy capacity.

use super::simplex::{dirichlet, exchange, for_each_grid_point, grid_size, mi_matrix, ExchangeOpts};
use super::{SearchBudget, CONSTRAINT_SLACK};
use crate::error::{Error, Result};
use crate::prob::{mutual_information, Alphabet, JointPmf, Kernel};
use crate::rng::{derive_seed, rng_from};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Channel input law together with the auxiliary `W2` prefixed to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WiretapInput {
    pub w2_size: usize,
    /// Joint over `(W2, X)`.
    pub p_w2x: JointPmf,
}

/// `I(W2;Y)`, `I(W2;Z)` and their difference, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Advantage {
    pub i_w2_y: f64,
    pub i_w2_z: f64,
    pub advantage: f64,
}

/// Builds `(W2, X, Y, Z) = P_{W2X} P_{YZ|X}` and evaluates the two informations.
pub fn wiretap_advantage(input: &WiretapInput, channel: &Kernel) -> Result<Advantage> {
    if channel.given().len() != 1 || channel.axes().len() != 2 {
        return Err(Error::Shape("channel must map X to (Y, Z)".into()));
    }
    let j = input.p_w2x.extend(channel)?;
    let w = input.p_w2x.axes()[0].label.as_str();
    let (y, z) = (channel.axes()[0].label.as_str(), channel.axes()[1].label.as_str());
    let i_w2_y = mutual_information(&j, &[w], &[y])?;
    let i_w2_z = mutual_information(&j, &[w], &[z])?;
    Ok(Advantage {
        i_w2_y,
        i_w2_z,
        advantage: i_w2_y - i_w2_z,
    })
}

/// Per-output marginal kernels of the channel.
pub(crate) struct Channel {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub py_x: Vec<f64>,
    pub pz_x: Vec<f64>,
}

impl Channel {
    pub fn new(channel: &Kernel) -> Result<Self> {
        if channel.given().len() != 1 || channel.axes().len() != 2 {
            return Err(Error::Shape("channel must map X to (Y, Z)".into()));
        }
        let nx = channel.given()[0].size;
        let (ny, nz) = (channel.axes()[0].size, channel.axes()[1].size);
        let mut py_x = vec![0.0; nx * ny];
        let mut pz_x = vec![0.0; nx * nz];
        for x in 0..nx {
            let row = channel.row(x);
            for y in 0..ny {
                for z in 0..nz {
                    py_x[x * ny + y] += row[y * nz + z];
                    pz_x[x * nz + z] += row[y * nz + z];
                }
            }
        }
        Ok(Channel { nx, ny, nz, py_x, pz_x })
    }

    /// `(I(W;Y), I(W;Z))` for a joint over `(W, X)` with `k` letters of `W`.
    pub fn informations(&self, p: &[f64], k: usize) -> (f64, f64) {
        let push = |kern: &[f64], n: usize| {
            let mut j = vec![0.0; k * n];
            for w in 0..k {
                for x in 0..self.nx {
                    let m = p[w * self.nx + x];
                    if m > 0.0 {
                        for o in 0..n {
                            j[w * n + o] += m * kern[x * n + o];
                        }
                    }
                }
            }
            mi_matrix(&j, k, n)
        };
        (push(&self.py_x, self.ny), push(&self.pz_x, self.nz))
    }

    /// `I(X;Y) - I(X;Z)` and `I(X;Y)` for an input law.
    pub fn input_terms(&self, px: &[f64]) -> (f64, f64) {
        let mut diag = vec![0.0; self.nx * self.nx];
        for x in 0..self.nx {
            diag[x * self.nx + x] = px[x];
        }
        let (c, e) = self.informations(&diag, self.nx);
        (c - e, c)
    }
}

/// A channel-side candidate: a joint over `(W2, X)` in the dense layout, or an input law when `w2 = x`.
#[derive(Clone, Debug)]
pub(crate) struct ChannelCandidate {
    pub k: usize,
    /// Joint over `(W2, X)`, `W2`-major.
    pub x: Vec<f64>,
    /// `I(W2;Y)`.
    pub c: f64,
    /// `I(W2;Y) - I(W2;Z)`.
    pub d: f64,
}

/// Keeps candidates not dominated in `(c, d)`, both to be maximized.
pub(crate) fn pareto(mut v: Vec<ChannelCandidate>) -> Vec<ChannelCandidate> {
    v.sort_by(|p, q| q.c.total_cmp(&p.c).then(q.d.total_cmp(&p.d)).then(p.k.cmp(&q.k)));
    let mut out: Vec<ChannelCandidate> = Vec::new();
    for x in v {
        if out.last().map_or(true, |l| x.d > l.d + 1e-12) {
            out.push(x);
        }
    }
    out
}

/// Drops `W2` letters without mass and merges letters with the same conditional `P(x|w2)`.
pub(crate) fn reduce_input(p: &[f64], k: usize, nx: usize) -> (Vec<f64>, usize) {
    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    for w in 0..k {
        let row = &p[w * nx..(w + 1) * nx];
        let m: f64 = row.iter().sum();
        if m <= 0.0 {
            continue;
        }
        let cond: Vec<f64> = row.iter().map(|x| x / m).collect();
        match rows
            .iter_mut()
            .find(|(_, c)| c.iter().zip(&cond).all(|(a, b)| (a - b).abs() <= 1e-12))
        {
            Some(r) => r.0 += m,
            None => rows.push((m, cond)),
        }
    }
    let k2 = rows.len().max(1);
    let mut out = Vec::with_capacity(k2 * nx);
    for (m, c) in &rows {
        out.extend(c.iter().map(|x| m * x));
    }
    if rows.is_empty() {
        out = vec![1.0 / nx as f64; nx];
    }
    (out, k2)
}

/// How the channel input is parametrized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum InputForm {
    /// A joint over `(W2, X)` with `k` letters of `W2`.
    Joint(usize),
    /// An input law with `W2 = X`.
    Direct,
}

/// Maximizes `I(W2;Y) - I(W2;Z)` subject to `I(W2;Y) >= tau`, returning every feasible point
/// visited (Pareto-filtered in `(c, d)`).
pub(crate) fn search_inputs(ch: &Channel, form: InputForm, tau: f64, budget: &SearchBudget, seed: u64) -> Vec<ChannelCandidate> {
    let nx = ch.nx;
    let (len, k) = match form {
        InputForm::Joint(k) => (k * nx, k),
        InputForm::Direct => (nx, nx),
    };
    let expand = |s: &[f64]| -> Vec<f64> {
        match form {
            InputForm::Joint(_) => s.to_vec(),
            InputForm::Direct => {
                let mut d = vec![0.0; nx * nx];
                for x in 0..nx {
                    d[x * nx + x] = s[x];
                }
                d
            }
        }
    };
    let score = |s: &[f64]| -> (f64, f64, f64) {
        let (c, e) = ch.informations(&expand(s), k);
        let d = c - e;
        (-d + 10.0 * (tau - c).max(0.0), c, d)
    };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    // Uniform input with W2 = X (or its embedding).
    let mut uni = vec![0.0; len];
    for x in 0..nx {
        match form {
            InputForm::Joint(_) => uni[(x % k) * nx + x] += 1.0 / nx as f64,
            InputForm::Direct => uni[x] = 1.0 / nx as f64,
        }
    }
    starts.push(uni);
    if grid_size(len, budget.grid_resolution) <= budget.grid_points as u128 {
        let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
        for_each_grid_point(len, budget.grid_resolution, |p| scored.push((score(p).0, p.to_vec())));
        // Stable sort keeps lexicographic grid order among ties.
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        starts.extend(scored.into_iter().take(budget.restarts.max(1)).map(|s| s.1));
    }
    for r in 0..budget.restarts {
        starts.push(dirichlet(&mut rng_from(derive_seed(seed, r as u64)), len, 1.0));
    }
    let runs: Vec<Vec<ChannelCandidate>> = starts
        .into_par_iter()
        .map(|mut s| {
            let mut found = Vec::new();
            let mut eval = |y: &mut Vec<f64>| score(y).0;
            let mut visit = |y: &[f64], _f: f64| {
                let (_, c, d) = score(y);
                if c >= tau - CONSTRAINT_SLACK {
                    let (x, k2) = match form {
                        InputForm::Joint(k) => reduce_input(y, k, nx),
                        InputForm::Direct => (expand(y), nx),
                    };
                    found.push(ChannelCandidate { k: k2, x, c, d });
                }
            };
            let opts = ExchangeOpts {
                initial_step: 0.1,
                min_step: 1e-10,
                max_evals: budget.max_evals,
            };
            exchange(&mut s, std::slice::from_ref(&(0..len)), &mut eval, &mut visit, opts);
            pareto(found)
        })
        .collect();
    pareto(runs.into_iter().flatten().collect())
}

/// Result of [`is_more_capable`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoreCapable {
    pub holds: bool,
    /// Smallest `I(X;Y) - I(X;Z)` found.
    pub margin: f64,
    pub minimizer: Vec<f64>,
    /// Grid resolution actually used.
    pub resolution: usize,
}

/// Tolerance below zero still accepted as more capable.
pub const MORE_CAPABLE_TOL: f64 = 1e-9;
/// Grid points evaluated at most by the input-law scans.
pub const MAX_GRID_POINTS: u128 = 1 << 20;

/// Largest resolution not above `m` whose grid fits [`MAX_GRID_POINTS`].
fn fit_resolution(k: usize, mut m: usize) -> usize {
    while m > 1 && grid_size(k, m) > MAX_GRID_POINTS {
        m -= 1;
    }
    m.max(1)
}

/// Scans `I(X;Y) - I(X;Z)` over an input grid and `samples` seeded random inputs.
pub fn is_more_capable(channel: &Kernel, grid_resolution: usize, samples: usize, seed: u64) -> Result<MoreCapable> {
    let ch = Channel::new(channel)?;
    let m = fit_resolution(ch.nx, grid_resolution.max(1));
    if m != grid_resolution {
        log::warn!("more-capable grid coarsened from 1/{grid_resolution} to 1/{m}");
    }
    let mut best = (f64::INFINITY, Vec::new());
    for_each_grid_point(ch.nx, m, |p| {
        let (d, _) = ch.input_terms(p);
        if d < best.0 {
            best = (d, p.to_vec());
        }
    });
    let sampled: Vec<(f64, Vec<f64>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let p = dirichlet(&mut rng_from(derive_seed(seed, i as u64)), ch.nx, 1.0);
            (ch.input_terms(&p).0, p)
        })
        .collect();
    for (d, p) in sampled {
        if d < best.0 {
            best = (d, p);
        }
    }
    Ok(MoreCapable {
        holds: best.0 >= -MORE_CAPABLE_TOL,
        margin: best.0,
        minimizer: best.1,
        resolution: m,
    })
}

/// Result of [`secrecy_capacity`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecrecyCapacity {
    pub c_s: f64,
    pub argmax_px: Vec<f64>,
}

/// `max_{P_X} I(X;Y) - I(X;Z)` by a grid scan refined with coordinate exchange.
pub fn secrecy_capacity(channel: &Kernel, grid_resolution: usize, seed: u64) -> Result<SecrecyCapacity> {
    let ch = Channel::new(channel)?;
    let m = fit_resolution(ch.nx, grid_resolution.max(1));
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
    for_each_grid_point(ch.nx, m, |p| scored.push((ch.input_terms(p).0, p.to_vec())));
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut starts: Vec<Vec<f64>> = scored.into_iter().take(4).map(|s| s.1).collect();
    for r in 0..4 {
        starts.push(dirichlet(&mut rng_from(derive_seed(seed, r)), ch.nx, 1.0));
    }
    let refined: Vec<(f64, Vec<f64>)> = starts
        .into_par_iter()
        .map(|mut p| {
            let mut eval = |y: &mut Vec<f64>| -ch.input_terms(y).0;
            let f = exchange(
                &mut p,
                std::slice::from_ref(&(0..ch.nx)),
                &mut eval,
                &mut |_, _| {},
                ExchangeOpts {
                    min_step: 1e-10,
                    ..ExchangeOpts::default()
                },
            );
            (-f, p)
        })
        .collect();
    let best = refined
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |b, r| if r.0 > b.0 + 1e-15 { r } else { b });
    Ok(SecrecyCapacity {
        c_s: best.0.max(0.0),
        argmax_px: best.1,
    })
}

/// Wraps a dense joint over `(W2, X)` as a [`WiretapInput`].
pub(crate) fn to_input(c: &ChannelCandidate, x: &Alphabet, w_label: &str) -> Result<WiretapInput> {
    Ok(WiretapInput {
        w2_size: c.k,
        p_w2x: JointPmf::from_weights(vec![Alphabet::new(w_label, c.k), x.clone()], c.x.clone())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;

    fn bin(l: &str) -> Alphabet {
        Alphabet::new(l, 2)
    }

    /// `Y = BSC(qy)(X)` and `Z = BSC(qz)(X)`, conditionally independent.
    pub(crate) fn two_bsc(qy: f64, qz: f64) -> Kernel {
        let mut rows = Vec::new();
        for x in 0..2 {
            let mut r = vec![0.0; 4];
            for y in 0..2 {
                for z in 0..2 {
                    let py = if y == x { 1.0 - qy } else { qy };
                    let pz = if z == x { 1.0 - qz } else { qz };
                    r[y * 2 + z] = py * pz;
                }
            }
            rows.push(r);
        }
        Kernel::from_rows(vec![bin("X")], vec![bin("Y"), bin("Z")], &rows).unwrap()
    }

    fn copy_input() -> WiretapInput {
        WiretapInput {
            w2_size: 2,
            p_w2x: JointPmf::new(vec![bin("W2"), bin("X")], vec![0.5, 0.0, 0.0, 0.5]).unwrap(),
        }
    }

    #[test]
    fn independent_input_has_no_advantage() {
        let inp = WiretapInput {
            w2_size: 2,
            p_w2x: JointPmf::new(vec![bin("W2"), bin("X")], vec![0.25; 4]).unwrap(),
        };
        let a = wiretap_advantage(&inp, &two_bsc(0.0, 0.11)).unwrap();
        assert!(a.i_w2_y.abs() < 1e-12 && a.i_w2_z.abs() < 1e-12 && a.advantage.abs() < 1e-12);
    }

    #[test]
    fn noiseless_main_channel_advantage_is_eve_entropy() {
        let a = wiretap_advantage(&copy_input(), &two_bsc(0.0, 0.11)).unwrap();
        // h(0.11) from its definition.
        let h = -(0.11f64 * 0.11f64.log2() + 0.89 * 0.89f64.log2());
        assert!((a.advantage - h).abs() < 1e-12);
        assert!((a.advantage - 0.4999).abs() < 1e-3);
    }

    #[test]
    fn equal_outputs_have_no_advantage() {
        let ch = Kernel::from_rows(
            vec![bin("X")],
            vec![bin("Y"), bin("Z")],
            &[vec![0.9, 0.0, 0.0, 0.1], vec![0.1, 0.0, 0.0, 0.9]],
        )
        .unwrap();
        assert!(wiretap_advantage(&copy_input(), &ch).unwrap().advantage.abs() < 1e-12);
    }

    #[test]
    fn degraded_eavesdropper_is_more_capable() {
        let r = is_more_capable(&two_bsc(0.1, 0.3), 64, 64, 0).unwrap();
        assert!(r.holds && r.margin >= -1e-12);
        let s = is_more_capable(&two_bsc(0.3, 0.1), 64, 64, 0).unwrap();
        assert!(!s.holds);
        let at_uniform = (1.0 - binary_entropy(0.3)) - (1.0 - binary_entropy(0.1));
        assert!(s.margin <= at_uniform + 1e-12);
    }

    #[test]
    fn identical_outputs_have_zero_margin() {
        let ch = Kernel::from_rows(
            vec![bin("X")],
            vec![bin("Y"), bin("Z")],
            &[vec![0.8, 0.0, 0.0, 0.2], vec![0.3, 0.0, 0.0, 0.7]],
        )
        .unwrap();
        let r = is_more_capable(&ch, 32, 16, 0).unwrap();
        assert!(r.holds && r.margin.abs() < 1e-12);
        assert!(secrecy_capacity(&ch, 16, 0).unwrap().c_s.abs() < 1e-12);
    }

    #[test]
    fn secrecy_capacity_of_a_noiseless_main_channel() {
        for q in [0.11, 0.25, 0.5] {
            let s = secrecy_capacity(&two_bsc(0.0, q), 16, 3).unwrap();
            assert!((s.c_s - binary_entropy(q)).abs() < 1e-9, "q={q}: {}", s.c_s);
            assert!((s.argmax_px[0] - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn reduction_merges_identical_conditionals() {
        let (p, k) = reduce_input(&[0.1, 0.3, 0.0, 0.0, 0.2, 0.6], 3, 2);
        assert_eq!(k, 1);
        assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.9).abs() < 1e-12 || (p[0] - 0.3).abs() < 1e-12);
    }
}
