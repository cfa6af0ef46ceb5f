use super::scheme::{decode_index, seq_count, SchemeSpec};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, mix64, reduce};
use serde::{Deserialize, Serialize};

/// Largest `|W|^n` for which bin tables are materialized.
pub const MAX_EXACT_SEQUENCES: u64 = 1 << 20;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// How the bin maps are held in memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeMode {
    /// Bin tables over all of `W^n`; supports exact distributions.
    Exact,
    /// Bins computed on demand by hashing; Monte Carlo only.
    Lazy,
}

/// A keyed hash from sequences to bins; each key gives an independent uniform binning.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinHasher {
    key: u64,
}

impl BinHasher {
    pub fn new(key: u64) -> Self {
        BinHasher { key }
    }

    pub fn hash(&self, seq: &[usize]) -> u64 {
        let mut h = self.key;
        for &s in seq {
            h = mix64(h ^ (s as u64 + 1).wrapping_mul(GOLDEN));
        }
        mix64(h ^ seq.len() as u64)
    }

    /// Bin of `seq` among `count` bins.
    pub fn bin(&self, seq: &[usize], count: u64) -> u64 {
        reduce(self.hash(seq), count)
    }
}

/// Hasher for the common-randomness binning of a code built from `seed`.
pub fn common_hasher(seed: u64) -> BinHasher {
    BinHasher::new(derive_seed(seed, 1))
}

/// Hasher for the extra-randomness binning of a code built from `seed`.
pub fn extra_hasher(seed: u64) -> BinHasher {
    BinHasher::new(derive_seed(seed, 2))
}

#[derive(Clone, Debug)]
struct Tables {
    phi1: Vec<u64>,
    phi2: Vec<u64>,
    /// Sequence indices sorted by `(phi1, phi2, index)`.
    order: Vec<u32>,
}

/// A realized pair of random binnings of `W^n`.
#[derive(Clone, Debug)]
pub struct BinningCode {
    spec: SchemeSpec,
    seed: u64,
    mode: CodeMode,
    common_bins: u64,
    extra_bins: u64,
    phi1: BinHasher,
    phi2: BinHasher,
    tables: Option<Tables>,
}

/// Draws the two bin maps for `spec` from `seed`.
pub fn build_code(spec: &SchemeSpec, seed: u64, mode: CodeMode) -> Result<BinningCode> {
    let common_bins = spec.common_bins();
    let extra_bins = spec.extra_bins();
    let (phi1, phi2) = (common_hasher(seed), extra_hasher(seed));
    let tables = match mode {
        CodeMode::Lazy => None,
        CodeMode::Exact => {
            let dims = spec.dims();
            let count = seq_count(dims.w, spec.n()).filter(|&c| c <= MAX_EXACT_SEQUENCES).ok_or_else(|| {
                Error::budget(
                    format!("exact binning of W^n (n = {}); use lazy mode", spec.n()),
                    (dims.w as u128).saturating_pow(spec.n() as u32),
                    MAX_EXACT_SEQUENCES as u128,
                )
            })?;
            let mut seq = vec![0usize; spec.n()];
            let mut t1 = Vec::with_capacity(count as usize);
            let mut t2 = Vec::with_capacity(count as usize);
            for i in 0..count {
                decode_index(i, dims.w, &mut seq);
                t1.push(phi1.bin(&seq, common_bins));
                t2.push(phi2.bin(&seq, extra_bins));
            }
            let mut order: Vec<u32> = (0..count as u32).collect();
            order.sort_by_key(|&i| (t1[i as usize], t2[i as usize], i));
            Some(Tables { phi1: t1, phi2: t2, order })
        }
    };
    Ok(BinningCode {
        spec: spec.clone(),
        seed,
        mode,
        common_bins,
        extra_bins,
        phi1,
        phi2,
        tables,
    })
}

/// Exact tables when they fit, lazy hashing otherwise.
pub fn build_code_auto(spec: &SchemeSpec, seed: u64) -> Result<BinningCode> {
    let fits = seq_count(spec.dims().w, spec.n()).is_some_and(|c| c <= MAX_EXACT_SEQUENCES);
    build_code(spec, seed, if fits { CodeMode::Exact } else { CodeMode::Lazy })
}

impl BinningCode {
    pub fn spec(&self) -> &SchemeSpec {
        &self.spec
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn mode(&self) -> CodeMode {
        self.mode
    }
    pub fn n(&self) -> usize {
        self.spec.n()
    }
    pub fn common_bins(&self) -> u64 {
        self.common_bins
    }
    pub fn extra_bins(&self) -> u64 {
        self.extra_bins
    }

    /// `φ1(w^n)`.
    pub fn phi1(&self, seq: &[usize]) -> u64 {
        self.phi1.bin(seq, self.common_bins)
    }

    /// `φ2(w^n)`.
    pub fn phi2(&self, seq: &[usize]) -> u64 {
        self.phi2.bin(seq, self.extra_bins)
    }

    /// Bins of sequence number `idx` (exact mode).
    pub fn bins_of_index(&self, idx: usize) -> Option<(u64, u64)> {
        self.tables.as_ref().map(|t| (t.phi1[idx], t.phi2[idx]))
    }

    /// Number of sequences in `W^n` (exact mode).
    pub fn sequence_count(&self) -> Option<usize> {
        self.tables.as_ref().map(|t| t.phi1.len())
    }

    /// Indices of the sequences with `φ1 = c` and `φ2 = f`, in increasing order.
    pub fn members(&self, c: u64, f: u64) -> Result<&[u32]> {
        self.check_bins(c, f)?;
        let t = self
            .tables
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("bin membership lists need an exact-mode code".into()))?;
        let key = |i: &u32| (t.phi1[*i as usize], t.phi2[*i as usize]);
        let lo = t.order.partition_point(|i| key(i) < (c, f));
        let hi = t.order.partition_point(|i| key(i) <= (c, f));
        Ok(&t.order[lo..hi])
    }

    /// Sequence indices with `φ2 = f`, grouped by increasing `φ1`.
    pub(crate) fn members_of_extra(&self, f: u64) -> Result<Vec<(u64, &[u32])>> {
        let mut out = Vec::new();
        let t = self
            .tables
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("bin membership lists need an exact-mode code".into()))?;
        let mut i = 0;
        while i < t.order.len() {
            let c = t.phi1[t.order[i] as usize];
            let hi = i + t.order[i..].partition_point(|j| t.phi1[*j as usize] == c);
            let block = &t.order[i..hi];
            let lo = block.partition_point(|j| t.phi2[*j as usize] < f);
            let up = block.partition_point(|j| t.phi2[*j as usize] <= f);
            if up > lo {
                out.push((c, &block[lo..up]));
            }
            i = hi;
        }
        Ok(out)
    }

    /// Occupancy of every common-randomness bin (exact mode).
    pub fn common_occupancy(&self) -> Option<Vec<u64>> {
        let t = self.tables.as_ref()?;
        let mut occ = vec![0u64; usize::try_from(self.common_bins).ok()?];
        for &c in &t.phi1 {
            occ[c as usize] += 1;
        }
        Some(occ)
    }

    pub(crate) fn check_bins(&self, c: u64, f: u64) -> Result<()> {
        if c >= self.common_bins || f >= self.extra_bins {
            return Err(Error::InvalidArgument(format!(
                "bin pair ({c}, {f}) outside {} x {}",
                self.common_bins, self.extra_bins
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::scheme::tests::toy;

    #[test]
    fn single_bin_is_constant() {
        let s = toy().with_params(1, 0.0, 0.0).unwrap();
        let code = build_code(&s, 3, CodeMode::Exact).unwrap();
        assert_eq!(code.common_bins(), 1);
        assert_eq!(code.members(0, 0).unwrap(), &[0, 1]);
    }

    #[test]
    fn same_seed_same_maps() {
        let s = toy().with_params(6, 0.5, 0.3).unwrap();
        let a = build_code(&s, 11, CodeMode::Exact).unwrap();
        let b = build_code(&s, 11, CodeMode::Exact).unwrap();
        let c = build_code(&s, 12, CodeMode::Exact).unwrap();
        let mut diff = false;
        for i in 0..64 {
            assert_eq!(a.bins_of_index(i), b.bins_of_index(i));
            diff |= a.bins_of_index(i) != c.bins_of_index(i);
        }
        assert!(diff);
    }

    #[test]
    fn lazy_and_exact_maps_agree() {
        let s = toy().with_params(5, 0.6, 0.4).unwrap();
        let e = build_code(&s, 5, CodeMode::Exact).unwrap();
        let l = build_code(&s, 5, CodeMode::Lazy).unwrap();
        let mut seq = [0usize; 5];
        for i in 0..32u64 {
            decode_index(i, 2, &mut seq);
            assert_eq!(e.bins_of_index(i as usize), Some((l.phi1(&seq), l.phi2(&seq))));
        }
        assert!(l.members(0, 0).is_err());
    }

    #[test]
    fn members_partition_the_space() {
        let s = toy().with_params(7, 0.5, 0.3).unwrap();
        let code = build_code(&s, 9, CodeMode::Exact).unwrap();
        let mut total = 0;
        for c in 0..code.common_bins() {
            for f in 0..code.extra_bins() {
                let m = code.members(c, f).unwrap();
                assert!(m.windows(2).all(|w| w[0] < w[1]));
                for &i in m {
                    assert_eq!(code.bins_of_index(i as usize), Some((c, f)));
                }
                total += m.len();
            }
        }
        assert_eq!(total, 128);
        for f in 0..code.extra_bins() {
            let groups = code.members_of_extra(f).unwrap();
            for (c, m) in groups {
                assert_eq!(m, code.members(c, f).unwrap());
            }
        }
        assert!(code.members(code.common_bins(), 0).is_err());
    }

    #[test]
    fn exact_budget_is_enforced() {
        let s = toy().with_params(21, 0.1, 0.0).unwrap();
        assert!(matches!(build_code(&s, 0, CodeMode::Exact), Err(Error::Budget { .. })));
        assert_eq!(build_code_auto(&s, 0).unwrap().mode(), CodeMode::Lazy);
    }
}
