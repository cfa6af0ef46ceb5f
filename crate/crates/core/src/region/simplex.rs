//! Search primitives on products of probability simplices.

use crate::rng::Rng;
use rand_distr::{Distribution, Exp1};
use std::ops::Range;

/// A Dirichlet(1) point scaled to total `mass`.
pub(crate) fn dirichlet(rng: &mut Rng, k: usize, mass: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| mass * x / s).collect()
}

/// Number of points of the simplex grid with `k` coordinates and resolution `1/m`.
pub fn grid_size(k: usize, m: usize) -> u128 {
    // C(m + k - 1, k - 1), computed incrementally to stay exact.
    let mut c: u128 = 1;
    for i in 1..k as u128 {
        c = c * (m as u128 + i) / i;
    }
    c
}

/// Calls `f` on every point of the grid `{x : x_i = c_i / m, Σ c_i = m}` in lexicographic order of `c`.
pub fn for_each_grid_point(k: usize, m: usize, mut f: impl FnMut(&[f64])) {
    if k == 0 {
        return;
    }
    let mut c = vec![0usize; k];
    c[k - 1] = m;
    let mut x = vec![0.0; k];
    loop {
        for i in 0..k {
            x[i] = c[i] as f64 / m as f64;
        }
        f(&x);
        // Next composition: bump the rightmost coordinate that has mass to its right.
        let mut i = k - 1;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            let rest: usize = c[i + 1..].iter().sum();
            if rest > 0 {
                c[i] += 1;
                let rest = rest - 1;
                for v in c[i + 1..].iter_mut() {
                    *v = 0;
                }
                c[k - 1] = rest;
                break;
            }
        }
    }
}

/// Settings of [`exchange`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct ExchangeOpts {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evals: usize,
}

impl Default for ExchangeOpts {
    fn default() -> Self {
        ExchangeOpts {
            initial_step: 0.25,
            min_step: 1e-9,
            max_evals: 200_000,
        }
    }
}

/// Coordinate exchange: repeatedly moves mass between two coordinates of the same block,
/// keeping a move when it lowers `eval`, and halves the step once a full sweep fails.
///
/// `eval` may adjust its argument in place (a projection); the adjusted point is what is kept.
/// Every visited accepted point is reported to `visit`.
pub(crate) fn exchange(
    x: &mut Vec<f64>,
    blocks: &[Range<usize>],
    eval: &mut dyn FnMut(&mut Vec<f64>) -> f64,
    visit: &mut dyn FnMut(&[f64], f64),
    opts: ExchangeOpts,
) -> f64 {
    let mut f = eval(x);
    visit(x, f);
    let mut step = opts.initial_step;
    let mut evals = 1;
    let mut y = x.clone();
    while step >= opts.min_step && evals < opts.max_evals {
        let mut improved = false;
        for b in blocks {
            for i in b.clone() {
                for j in b.clone() {
                    if i == j || x[i] <= 0.0 {
                        continue;
                    }
                    let d = step.min(x[i]);
                    y.clone_from(x);
                    y[i] -= d;
                    y[j] += d;
                    if d == x[i] {
                        y[i] = 0.0;
                    }
                    let fy = eval(&mut y);
                    evals += 1;
                    if fy < f - 1e-14 {
                        std::mem::swap(x, &mut y);
                        f = fy;
                        improved = true;
                        visit(x, f);
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    f
}

/// `Σ p log2 p` negated, skipping zeros.
pub(crate) fn h(p: impl IntoIterator<Item = f64>) -> f64 {
    -p.into_iter().filter(|&x| x > 0.0).map(|x| x * x.log2()).sum::<f64>()
}

/// `I(row; col)` of a row-major `rows × cols` joint.
pub(crate) fn mi_matrix(j: &[f64], rows: usize, cols: usize) -> f64 {
    let r = (0..rows).map(|a| j[a * cols..(a + 1) * cols].iter().sum::<f64>());
    let c = (0..cols).map(|b| (0..rows).map(|a| j[a * cols + b]).sum::<f64>());
    (h(r) + h(c) - h(j.iter().copied())).max(0.0)
}
