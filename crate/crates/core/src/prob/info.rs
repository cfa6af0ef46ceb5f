//! Distances, entropies and informations. All logarithms are base 2.

use super::JointPmf;
use crate::error::{Error, Result};

/// Shannon entropy of a weight vector, with `0 log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
    h.max(0.0)
}

/// Binary entropy function.
pub fn binary_entropy(q: f64) -> f64 {
    entropy_bits(&[q, 1.0 - q])
}

/// Half the l1 distance between two equally long slices.
pub fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    (0.5 * s).min(1.0)
}

fn same_shape(p: &JointPmf, q: &JointPmf) -> Result<()> {
    if p.axes() != q.axes() {
        return Err(Error::Shape(format!("axes {:?} vs {:?}", p.axes(), q.axes())));
    }
    Ok(())
}

/// Total variation distance, `½ Σ |p − q|`.
pub fn tv_distance(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    same_shape(p, q)?;
    Ok(tv_slices(p.probs(), q.probs()))
}

/// Result of a KL divergence evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Divergence {
    /// Divergence in bits; `f64::INFINITY` when `p` puts mass where `q` has none.
    pub bits: f64,
    /// Mass of `p` outside the support of `q`.
    pub violating_mass: f64,
}

impl Divergence {
    pub fn is_finite(&self) -> bool {
        self.bits.is_finite()
    }
}

/// `D(p ‖ q)` in bits.
pub fn kl_divergence(p: &JointPmf, q: &JointPmf) -> Result<Divergence> {
    same_shape(p, q)?;
    let mut d = 0.0;
    let mut violating_mass = 0.0;
    for (&a, &b) in p.probs().iter().zip(q.probs()) {
        if a > 0.0 {
            if b > 0.0 {
                d += a * (a / b).log2();
            } else {
                violating_mass += a;
            }
        }
    }
    let bits = if violating_mass > 0.0 { f64::INFINITY } else { d.max(0.0) };
    Ok(Divergence { bits, violating_mass })
}

fn disjoint(a: &[&str], b: &[&str]) -> Result<()> {
    match a.iter().find(|x| b.contains(x)) {
        Some(x) => Err(Error::OverlappingAxes(x.to_string())),
        None => Ok(()),
    }
}

fn joint_entropy(p: &JointPmf, axes: &[&str]) -> Result<f64> {
    if axes.is_empty() {
        return Ok(0.0);
    }
    Ok(entropy_bits(p.marginalize(axes)?.probs()))
}

fn union<'a>(a: &[&'a str], b: &[&'a str]) -> Vec<&'a str> {
    let mut v = a.to_vec();
    v.extend_from_slice(b);
    v
}

/// `H(axes)`.
pub fn entropy(p: &JointPmf, axes: &[&str]) -> Result<f64> {
    if axes.is_empty() {
        return Err(Error::EmptyAxes);
    }
    joint_entropy(p, axes)
}

/// `H(target | given)`.
pub fn entropy_given(p: &JointPmf, target: &[&str], given: &[&str]) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::EmptyAxes);
    }
    disjoint(target, given)?;
    let h = joint_entropy(p, &union(target, given))? - joint_entropy(p, given)?;
    Ok(h.max(0.0))
}

/// `I(a; b)`.
pub fn mutual_information(p: &JointPmf, a: &[&str], b: &[&str]) -> Result<f64> {
    mi_given(p, a, b, &[])
}

/// `I(a; b | c)`.
pub fn mi_given(p: &JointPmf, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyAxes);
    }
    disjoint(a, b)?;
    disjoint(a, c)?;
    disjoint(b, c)?;
    let ac = union(a, c);
    let bc = union(b, c);
    let abc = union(&ac, b);
    let i = joint_entropy(p, &ac)? + joint_entropy(p, &bc)? - joint_entropy(p, &abc)? - joint_entropy(p, c)?;
    Ok(i.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{compose_chain, iid_power, Alphabet, Kernel, Pmf};

    fn bern(p: f64) -> JointPmf {
        Pmf::bernoulli("A", p).unwrap().to_joint()
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        // ½(|0.5−0.7| + |0.5−0.3|) = 0.2
        assert!((tv_distance(&bern(0.5), &bern(0.3)).unwrap() - 0.2).abs() < 1e-15);
        let other = Pmf::bernoulli("B", 0.3).unwrap().to_joint();
        assert!(matches!(tv_distance(&bern(0.5), &other), Err(Error::Shape(_))));
    }

    #[test]
    fn tv_of_powers_is_nondecreasing() {
        let (p, q) = (bern(0.35), bern(0.6));
        let mut last = 0.0;
        for n in 1..=4 {
            let t = tv_distance(&iid_power(&p, n).unwrap(), &iid_power(&q, n).unwrap()).unwrap();
            assert!(t >= last - 1e-15);
            last = t;
        }
    }

    #[test]
    fn kl_examples() {
        let d = kl_divergence(&bern(0.5), &bern(0.25)).unwrap();
        // 0.5 log2(0.5/0.75) + 0.5 log2(0.5/0.25)
        let want = 0.5 * (2.0f64 / 3.0).log2() + 0.5;
        assert!((d.bits - want).abs() < 1e-12);
        assert!((d.bits - 0.2075).abs() < 1e-4);
        assert_eq!(kl_divergence(&bern(0.4), &bern(0.4)).unwrap().bits, 0.0);
        let inf = kl_divergence(&bern(1.0), &bern(0.0)).unwrap();
        assert!(!inf.is_finite());
        assert_eq!(inf.violating_mass, 1.0);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&bern(0.5), &["A"]).unwrap(), 1.0);
        assert_eq!(entropy(&bern(1.0), &["A"]).unwrap(), 0.0);
        assert!(matches!(entropy(&bern(0.5), &[]), Err(Error::EmptyAxes)));
    }

    #[test]
    fn bsc_information() {
        let x = Pmf::uniform("X", 2).unwrap();
        let j = compose_chain(&[x.into(), Kernel::bsc("X", "Y", 0.25).unwrap()]).unwrap();
        let i = mutual_information(&j, &["X"], &["Y"]).unwrap();
        // 1 − h(0.25), h(0.25) = −0.25 log2 0.25 − 0.75 log2 0.75
        let h = 0.5 + 0.75 * (4.0f64 / 3.0).log2();
        assert!((i - (1.0 - h)).abs() < 1e-12);
        assert!((i - 0.1887).abs() < 1e-4);
        assert!(matches!(mutual_information(&j, &["X"], &["X"]), Err(Error::OverlappingAxes(_))));
    }

    #[test]
    fn correlated_and_independent_pairs() {
        let a = Pmf::uniform("A", 2).unwrap();
        let copy = compose_chain(&[a.clone().into(), Kernel::identity(Alphabet::new("A", 2), "B").unwrap()]).unwrap();
        assert!((mutual_information(&copy, &["A"], &["B"]).unwrap() - 1.0).abs() < 1e-15);
        let prod = a.to_joint().product(&Pmf::bernoulli("B", 0.2).unwrap().to_joint()).unwrap();
        assert!(mutual_information(&prod, &["A"], &["B"]).unwrap() < 1e-15);
    }

    #[test]
    fn conditional_mi_of_markov_chain_vanishes() {
        let a = Pmf::bernoulli("A", 0.3).unwrap();
        let j = compose_chain(&[a.into(), Kernel::bsc("A", "B", 0.1).unwrap(), Kernel::bsc("B", "C", 0.2).unwrap()]).unwrap();
        assert!(mi_given(&j, &["A"], &["C"], &["B"]).unwrap() < 1e-12);
        assert!(mi_given(&j, &["A"], &["B"], &["C"]).unwrap() > 0.1);
    }
}
