//! Finite probability objects over labelled axes.
//!
//! Tensors are stored row-major: the last axis varies fastest. A [`Kernel`] stores
//! one row per joint value of its `given` axes, each row a distribution over its own axes.

mod info;
mod json;

pub use info::{
    binary_entropy, entropy, entropy_bits, entropy_given, kl_divergence, mi_given, mutual_information, tv_distance, tv_slices, Divergence,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Maximum number of entries in any materialized tensor.
pub const MAX_TENSOR_ENTRIES: usize = 1 << 24;

/// Tolerance for normalization checks.
pub const SUM_TOL: f64 = 1e-9;

/// A finite alphabet with a short label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    pub label: String,
    pub size: usize,
}

impl Alphabet {
    pub fn new(label: impl Into<String>, size: usize) -> Self {
        Alphabet { label: label.into(), size }
    }
}

/// Label of the `t`-th (1-based) copy of `label` in a block of `n` symbols.
pub fn seq_label(label: &str, t: usize) -> String {
    format!("{label}[{t}]")
}

/// Labels `label[1] .. label[n]`.
pub fn seq_labels(label: &str, n: usize) -> Vec<String> {
    (1..=n).map(|t| seq_label(label, t)).collect()
}

pub(crate) fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; sizes.len()];
    for k in (0..sizes.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * sizes[k + 1];
    }
    s
}

/// Number of entries in the product of `axes`, refusing anything above the tensor budget.
pub fn checked_len(axes: &[Alphabet], what: &str) -> Result<usize> {
    let mut total: u128 = 1;
    for a in axes {
        total = total.saturating_mul(a.size as u128);
    }
    if total > MAX_TENSOR_ENTRIES as u128 {
        return Err(Error::budget(what, total, MAX_TENSOR_ENTRIES as u128));
    }
    Ok(total as usize)
}

fn check_axes(axes: &[Alphabet]) -> Result<()> {
    let mut seen = HashSet::new();
    for a in axes {
        if a.size == 0 {
            return Err(Error::InvalidArgument(format!("axis `{}` has size 0", a.label)));
        }
        if !seen.insert(a.label.as_str()) {
            return Err(Error::DuplicateAxis(a.label.clone()));
        }
    }
    Ok(())
}

fn check_entries(probs: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
        }
        sum += p;
    }
    Ok(sum)
}

/// Visits every flat index of a tensor with shape `sizes` together with the
/// flat index obtained from `out_strides` (a zero stride drops the axis).
pub(crate) fn for_each_mapped(sizes: &[usize], out_strides: &[usize], mut f: impl FnMut(usize, usize)) {
    let total: usize = sizes.iter().product();
    let k = sizes.len();
    let mut digits = vec![0usize; k];
    let mut out = 0usize;
    for i in 0..total {
        f(i, out);
        let mut a = k;
        while a > 0 {
            a -= 1;
            digits[a] += 1;
            out += out_strides[a];
            if digits[a] < sizes[a] {
                break;
            }
            out -= out_strides[a] * sizes[a];
            digits[a] = 0;
        }
    }
}

/// A joint distribution over named axes.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    axes: Vec<Alphabet>,
    probs: Vec<f64>,
}

impl JointPmf {
    /// Validates labels, shape, nonnegativity and normalization.
    pub fn new(axes: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        check_axes(&axes)?;
        let len = checked_len(&axes, "joint tensor")?;
        if probs.len() != len {
            return Err(Error::Shape(format!("axes imply {len} entries, got {}", probs.len())));
        }
        let sum = check_entries(&probs)?;
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(JointPmf { axes, probs })
    }

    /// Builds a distribution proportional to nonnegative `weights`.
    pub fn from_weights(axes: Vec<Alphabet>, mut weights: Vec<f64>) -> Result<Self> {
        check_axes(&axes)?;
        let len = checked_len(&axes, "joint tensor")?;
        if weights.len() != len {
            return Err(Error::Shape(format!("axes imply {len} entries, got {}", weights.len())));
        }
        let sum = check_entries(&weights)?;
        if sum <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(JointPmf { axes, probs: weights })
    }

    /// The distribution with no axes and unit mass.
    pub fn unit() -> Self {
        JointPmf {
            axes: Vec::new(),
            probs: vec![1.0],
        }
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.label.as_str()).collect()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.label == label)
            .ok_or_else(|| Error::UnknownAxis(label.to_string()))
    }

    /// Probability of the outcome with per-axis coordinates `index`.
    pub fn get(&self, index: &[usize]) -> f64 {
        let s = strides(&self.sizes());
        let flat: usize = index.iter().zip(&s).map(|(i, s)| i * s).sum();
        self.probs[flat]
    }

    /// Marginal over `keep`, with axes in the order given.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPmf> {
        let mut pos = Vec::with_capacity(keep.len());
        let mut seen = HashSet::new();
        for &l in keep {
            if !seen.insert(l) {
                return Err(Error::DuplicateAxis(l.to_string()));
            }
            pos.push(self.position(l)?);
        }
        let out_axes: Vec<Alphabet> = pos.iter().map(|&p| self.axes[p].clone()).collect();
        let out_sizes: Vec<usize> = out_axes.iter().map(|a| a.size).collect();
        let os = strides(&out_sizes);
        let mut in_out = vec![0usize; self.axes.len()];
        for (k, &p) in pos.iter().enumerate() {
            in_out[p] = os[k];
        }
        let mut out = vec![0.0; out_sizes.iter().product()];
        for_each_mapped(&self.sizes(), &in_out, |i, o| out[o] += self.probs[i]);
        Ok(JointPmf {
            axes: out_axes,
            probs: out,
        })
    }

    /// Renames every axis through `f`.
    pub fn relabel(&self, f: impl Fn(&str) -> String) -> Result<JointPmf> {
        let axes = self.axes.iter().map(|a| Alphabet::new(f(&a.label), a.size)).collect::<Vec<_>>();
        check_axes(&axes)?;
        Ok(JointPmf {
            axes,
            probs: self.probs.clone(),
        })
    }

    /// Outer product with a distribution over disjoint axes.
    pub fn product(&self, other: &JointPmf) -> Result<JointPmf> {
        let mut axes = self.axes.clone();
        axes.extend(other.axes.iter().cloned());
        check_axes(&axes)?;
        checked_len(&axes, "product tensor")?;
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for &a in &self.probs {
            probs.extend(other.probs.iter().map(|&b| a * b));
        }
        Ok(JointPmf { axes, probs })
    }

    /// Appends the axes of `kernel`, drawn conditionally on its `given` axes.
    pub fn extend(&self, kernel: &Kernel) -> Result<JointPmf> {
        let mut row_strides = vec![0usize; self.axes.len()];
        let ks = strides(&kernel.given.iter().map(|a| a.size).collect::<Vec<_>>());
        for (k, g) in kernel.given.iter().enumerate() {
            let p = self.position(&g.label)?;
            if self.axes[p].size != g.size {
                return Err(Error::Shape(format!(
                    "axis `{}` has size {} but the kernel expects {}",
                    g.label, self.axes[p].size, g.size
                )));
            }
            row_strides[p] = ks[k];
        }
        let mut axes = self.axes.clone();
        axes.extend(kernel.axes.iter().cloned());
        check_axes(&axes)?;
        checked_len(&axes, "composed tensor")?;
        let cols = kernel.cols();
        let mut probs = vec![0.0; self.len() * cols];
        let mut dead = None;
        for_each_mapped(&self.sizes(), &row_strides, |i, r| {
            let p = self.probs[i];
            if p == 0.0 {
                return;
            }
            let row = kernel.row(r);
            if kernel.row_mass[r] == 0.0 {
                dead = Some(r);
            }
            for (dst, &k) in probs[i * cols..(i + 1) * cols].iter_mut().zip(row) {
                *dst = p * k;
            }
        });
        if let Some(r) = dead {
            return Err(Error::InvalidDistribution(format!(
                "kernel row {r} is unreachable-marked but carries probability"
            )));
        }
        Ok(JointPmf { axes, probs })
    }
}

/// A distribution over a single alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        let j = JointPmf::new(vec![alphabet], probs)?;
        let JointPmf { mut axes, probs } = j;
        Ok(Pmf {
            alphabet: axes.remove(0),
            probs,
        })
    }

    pub fn uniform(label: &str, size: usize) -> Result<Self> {
        Pmf::new(Alphabet::new(label, size), vec![1.0 / size as f64; size])
    }

    /// Binary distribution with `P(1) = p`.
    pub fn bernoulli(label: &str, p: f64) -> Result<Self> {
        Pmf::new(Alphabet::new(label, 2), vec![1.0 - p, p])
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn to_joint(&self) -> JointPmf {
        JointPmf {
            axes: vec![self.alphabet.clone()],
            probs: self.probs.clone(),
        }
    }
}

impl From<Pmf> for JointPmf {
    fn from(p: Pmf) -> Self {
        JointPmf {
            axes: vec![p.alphabet],
            probs: p.probs,
        }
    }
}

/// A row-stochastic conditional distribution of `axes` given `given`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    given: Vec<Alphabet>,
    axes: Vec<Alphabet>,
    probs: Vec<f64>,
    row_mass: Vec<f64>,
}

impl Kernel {
    /// Validates shapes; each row must sum to one, or be all zero (an unreachable row).
    pub fn new(given: Vec<Alphabet>, axes: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::EmptyAxes);
        }
        let mut all = given.clone();
        all.extend(axes.iter().cloned());
        check_axes(&all)?;
        let rows = checked_len(&given, "kernel rows")?;
        let cols = checked_len(&axes, "kernel columns")?;
        checked_len(&all, "kernel")?;
        if probs.len() != rows * cols {
            return Err(Error::Shape(format!("kernel implies {} entries, got {}", rows * cols, probs.len())));
        }
        check_entries(&probs)?;
        let mut row_mass = Vec::with_capacity(rows);
        for r in 0..rows {
            let s: f64 = probs[r * cols..(r + 1) * cols].iter().sum();
            if s != 0.0 && (s - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidDistribution(format!("kernel row {r} sums to {s}")));
            }
            row_mass.push(s);
        }
        Ok(Kernel {
            given,
            axes,
            probs,
            row_mass,
        })
    }

    /// Builds a kernel from explicit rows.
    pub fn from_rows(given: Vec<Alphabet>, axes: Vec<Alphabet>, rows: &[Vec<f64>]) -> Result<Self> {
        Kernel::new(given, axes, rows.concat())
    }

    /// `to = from` with probability one.
    pub fn identity(from: Alphabet, to_label: &str) -> Result<Self> {
        let k = from.size;
        let mut probs = vec![0.0; k * k];
        for i in 0..k {
            probs[i * k + i] = 1.0;
        }
        Kernel::new(vec![from], vec![Alphabet::new(to_label, k)], probs)
    }

    /// Binary symmetric kernel with crossover `q`.
    pub fn bsc(from: &str, to: &str, q: f64) -> Result<Self> {
        Kernel::new(
            vec![Alphabet::new(from, 2)],
            vec![Alphabet::new(to, 2)],
            vec![1.0 - q, q, q, 1.0 - q],
        )
    }

    pub fn given(&self) -> &[Alphabet] {
        &self.given
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn rows(&self) -> usize {
        self.row_mass.len()
    }

    pub fn cols(&self) -> usize {
        self.probs.len() / self.rows().max(1)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.probs[r * c..(r + 1) * c]
    }

    /// Whether row `r` is all zero.
    pub fn is_unreachable(&self, r: usize) -> bool {
        self.row_mass[r] == 0.0
    }

    /// Same kernel with its axes renamed through `f`.
    pub fn relabel(&self, f: impl Fn(&str) -> String) -> Result<Kernel> {
        let g = self.given.iter().map(|a| Alphabet::new(f(&a.label), a.size)).collect();
        let o = self.axes.iter().map(|a| Alphabet::new(f(&a.label), a.size)).collect();
        Kernel::new(g, o, self.probs.clone())
    }
}

impl From<Pmf> for Kernel {
    fn from(p: Pmf) -> Self {
        Kernel {
            given: Vec::new(),
            axes: vec![p.alphabet],
            probs: p.probs,
            row_mass: vec![1.0],
        }
    }
}

impl From<JointPmf> for Kernel {
    fn from(p: JointPmf) -> Self {
        Kernel {
            given: Vec::new(),
            axes: p.axes,
            probs: p.probs,
            row_mass: vec![1.0],
        }
    }
}

/// Marginal of `p` over `keep`, axes in the order given.
pub fn marginalize(p: &JointPmf, keep: &[&str]) -> Result<JointPmf> {
    p.marginalize(keep)
}

/// A conditional kernel together with the rows whose conditioning event had zero mass.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditioned {
    pub kernel: Kernel,
    /// Rows replaced by the uniform distribution because their event has probability zero.
    pub degenerate_rows: Vec<usize>,
}

/// Conditional distribution of `target` given `given`.
pub fn condition(p: &JointPmf, target: &[&str], given: &[&str]) -> Result<Conditioned> {
    if target.is_empty() {
        return Err(Error::EmptyAxes);
    }
    if let Some(o) = target.iter().find(|t| given.contains(t)) {
        return Err(Error::OverlappingAxes(o.to_string()));
    }
    let mut keep: Vec<&str> = given.to_vec();
    keep.extend_from_slice(target);
    let m = p.marginalize(&keep)?;
    let g = given.len();
    let given_axes = m.axes[..g].to_vec();
    let target_axes = m.axes[g..].to_vec();
    let cols: usize = target_axes.iter().map(|a| a.size).product();
    let mut probs = m.probs;
    let mut degenerate_rows = Vec::new();
    for (r, row) in probs.chunks_mut(cols).enumerate() {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        } else {
            row.iter_mut().for_each(|x| *x = 1.0 / cols as f64);
            degenerate_rows.push(r);
        }
    }
    let kernel = Kernel::new(given_axes, target_axes, probs)?;
    Ok(Conditioned { kernel, degenerate_rows })
}

/// Multiplies the factors in order; each kernel's `given` axes must already be present.
pub fn compose_chain(factors: &[Kernel]) -> Result<JointPmf> {
    let mut joint = JointPmf::unit();
    for k in factors {
        joint = joint.extend(k)?;
    }
    Ok(joint)
}

/// The i.i.d. product of `n` copies of `p`; the copy of axis `A` at time `t` is `A[t]`.
pub fn iid_power(p: &JointPmf, n: usize) -> Result<JointPmf> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let required = (p.len() as u128).saturating_pow(n as u32);
    if required > MAX_TENSOR_ENTRIES as u128 {
        return Err(Error::budget("i.i.d. power tensor", required, MAX_TENSOR_ENTRIES as u128));
    }
    let mut out = p.relabel(|l| seq_label(l, 1))?;
    for t in 2..=n {
        out = out.product(&p.relabel(|l| seq_label(l, t))?)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ax(l: &str, s: usize) -> Alphabet {
        Alphabet::new(l, s)
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            JointPmf::new(vec![ax("A", 2)], vec![0.5, 0.6]),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(JointPmf::new(vec![ax("A", 2)], vec![0.5]), Err(Error::Shape(_))));
        assert!(matches!(
            JointPmf::new(vec![ax("A", 2), ax("A", 2)], vec![0.25; 4]),
            Err(Error::DuplicateAxis(_))
        ));
        assert!(JointPmf::new(vec![ax("A", 2)], vec![1.5, -0.5]).is_err());
        assert!(Kernel::new(vec![ax("A", 2)], vec![ax("B", 2)], vec![0.5, 0.5, 0.9, 0.2]).is_err());
    }

    #[test]
    fn zero_rows_are_unreachable() {
        let k = Kernel::new(vec![ax("A", 2)], vec![ax("B", 2)], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(k.is_unreachable(1));
        let p = Pmf::new(ax("A", 2), vec![1.0, 0.0]).unwrap();
        let j = compose_chain(&[p.into(), k.clone()]).unwrap();
        assert_eq!(j.probs(), &[0.5, 0.5, 0.0, 0.0]);
        let q = Pmf::uniform("A", 2).unwrap();
        assert!(compose_chain(&[q.into(), k]).is_err());
    }

    #[test]
    fn marginalize_reorders_axes() {
        let j = JointPmf::new(vec![ax("A", 2), ax("B", 3)], vec![0.1, 0.2, 0.0, 0.3, 0.1, 0.3]).unwrap();
        let m = j.marginalize(&["B", "A"]).unwrap();
        assert_eq!(m.labels(), vec!["B", "A"]);
        assert_eq!(m.probs(), &[0.1, 0.3, 0.2, 0.1, 0.0, 0.3]);
        let a = j.marginalize(&["A"]).unwrap();
        assert!((a.probs()[0] - 0.3).abs() < 1e-15);
        assert!(matches!(j.marginalize(&["C"]), Err(Error::UnknownAxis(_))));
    }

    #[test]
    fn condition_flags_zero_rows() {
        let j = JointPmf::new(vec![ax("A", 3), ax("B", 2)], vec![0.2, 0.2, 0.0, 0.0, 0.15, 0.45]).unwrap();
        let c = condition(&j, &["B"], &["A"]).unwrap();
        assert_eq!(c.degenerate_rows, vec![1]);
        assert_eq!(c.kernel.row(0), &[0.5, 0.5]);
        assert_eq!(c.kernel.row(1), &[0.5, 0.5]);
        assert!((c.kernel.row(2)[1] - 0.75).abs() < 1e-12);
        assert!(matches!(condition(&j, &["A"], &["A"]), Err(Error::OverlappingAxes(_))));
    }

    #[test]
    fn identity_chain_copies_source() {
        let p = Pmf::new(ax("U", 3), vec![0.2, 0.3, 0.5]).unwrap();
        let id = Kernel::identity(ax("U", 3), "V").unwrap();
        let j = compose_chain(&[p.clone().into(), id]).unwrap();
        for u in 0..3 {
            for v in 0..3 {
                let want = if u == v { p.probs()[u] } else { 0.0 };
                assert_eq!(j.get(&[u, v]), want);
            }
        }
        assert_eq!(j.marginalize(&["U"]).unwrap().probs(), p.probs());
    }

    #[test]
    fn dangling_wiring_is_rejected() {
        let p = Pmf::uniform("U", 2).unwrap();
        let k = Kernel::bsc("X", "Y", 0.1).unwrap();
        assert!(matches!(compose_chain(&[p.into(), k]), Err(Error::UnknownAxis(_))));
    }

    #[test]
    fn chain_conditional_matches_brute_force() {
        // U -> W -> V with a binary toy; the conditional of V given U is the kernel product.
        let pu = Pmf::new(ax("U", 2), vec![0.3, 0.7]).unwrap();
        let pw = Kernel::from_rows(vec![ax("U", 2)], vec![ax("W", 3)], &[vec![0.5, 0.25, 0.25], vec![0.1, 0.1, 0.8]]).unwrap();
        let pv = Kernel::from_rows(
            vec![ax("W", 3)],
            vec![ax("V", 2)],
            &[vec![0.9, 0.1], vec![0.4, 0.6], vec![0.2, 0.8]],
        )
        .unwrap();
        let j = compose_chain(&[pu.into(), pw.clone(), pv.clone()]).unwrap();
        let c = condition(&j, &["V"], &["U"]).unwrap();
        for u in 0..2 {
            for v in 0..2 {
                let mut s = 0.0;
                for w in 0..3 {
                    s += pw.row(u)[w] * pv.row(w)[v];
                }
                assert!((c.kernel.row(u)[v] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn iid_power_small_cases() {
        let p = Pmf::bernoulli("A", 0.5).unwrap().to_joint();
        let p3 = iid_power(&p, 3).unwrap();
        assert_eq!(p3.labels(), vec!["A[1]", "A[2]", "A[3]"]);
        assert!(p3.probs().iter().all(|&x| (x - 0.125).abs() < 1e-15));
        let q = Pmf::bernoulli("A", 0.3).unwrap().to_joint();
        let q1 = iid_power(&q, 1).unwrap();
        assert_eq!(q1.probs(), q.probs());
        let big = Pmf::uniform("A", 4096).unwrap().to_joint();
        assert!(matches!(iid_power(&big, 3), Err(Error::Budget { .. })));
    }
}
