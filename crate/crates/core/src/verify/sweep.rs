//! Extraction divergence across blocklengths and rates.

use crate::codec::{bin_count, extra_hasher, extraction_divergence};
use crate::error::{Error, Result};
use crate::prob::{entropy_given, JointPmf};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Mean divergence at one `(rate, n)` grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rate: f64,
    pub n: usize,
    pub bins: u64,
    /// `D(P_{A^n K} ‖ P_{A^n} Q_K)` in bits, averaged over the binning seeds.
    pub divergence: f64,
    pub per_seed: Vec<f64>,
}

/// Divergence series of one rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub rate: f64,
    /// Least-squares slope of `log2 D` against `n`; `None` with fewer than two positive points.
    pub slope: Option<f64>,
    /// Divergence at the largest `n`.
    pub terminal: f64,
}

/// Results of [`extraction_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSweep {
    pub a_axes: Vec<String>,
    pub b_axis: String,
    /// `H(B|A)`, the largest rate at which extraction succeeds.
    pub threshold: f64,
    pub n_list: Vec<usize>,
    pub rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub points: Vec<SweepPoint>,
    pub series: Vec<RateSeries>,
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Exact extraction divergence of `B = b_axis` binned at each rate, with side information
/// `A = a_axes`, for every `n` and binning seed. Rates and blocklengths are sorted first.
pub fn extraction_sweep(
    single: &JointPmf,
    a_axes: &[&str],
    b_axis: &str,
    n_list: &[usize],
    rates: &[f64],
    seeds: &[u64],
) -> Result<ExtractionSweep> {
    if n_list.is_empty() || rates.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "extraction sweep needs blocklengths, rates and seeds".into(),
        ));
    }
    let mut n_list = n_list.to_vec();
    n_list.sort_unstable();
    n_list.dedup();
    let mut rates = rates.to_vec();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    let grid: Vec<(f64, usize)> = rates.iter().flat_map(|&r| n_list.iter().map(move |&n| (r, n))).collect();
    let points: Vec<Result<SweepPoint>> = grid
        .par_iter()
        .map(|&(rate, n)| {
            let bins = bin_count(n, rate)?;
            let per_seed = seeds
                .iter()
                .map(|&s| extraction_divergence(single, a_axes, b_axis, n, bins, extra_hasher(s)))
                .collect::<Result<Vec<f64>>>()?;
            Ok(SweepPoint {
                rate,
                n,
                bins,
                divergence: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
                per_seed,
            })
        })
        .collect();
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    let series = rates
        .iter()
        .map(|&rate| {
            let pts: Vec<&SweepPoint> = points.iter().filter(|p| p.rate == rate).collect();
            let pos: Vec<(f64, f64)> = pts
                .iter()
                .filter(|p| p.divergence > 0.0)
                .map(|p| (p.n as f64, p.divergence.log2()))
                .collect();
            let slope = (pos.len() >= 2).then(|| {
                let (x, y): (Vec<f64>, Vec<f64>) = pos.into_iter().unzip();
                ls_slope(&x, &y)
            });
            RateSeries {
                rate,
                slope,
                terminal: pts.last().map(|p| p.divergence).unwrap_or(0.0),
            }
        })
        .collect();
    Ok(ExtractionSweep {
        a_axes: a_axes.iter().map(|s| s.to_string()).collect(),
        b_axis: b_axis.to_string(),
        threshold: entropy_given(single, &[b_axis], a_axes)?,
        n_list,
        rates,
        seeds: seeds.to_vec(),
        points,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::scheme::tests::toy;

    #[test]
    fn slope_of_a_line() {
        assert!((ls_slope(&[1.0, 2.0, 3.0], &[5.0, 3.0, 1.0]) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn one_bin_gives_zero_divergence() {
        let chain = toy().chain().unwrap();
        let s = extraction_sweep(&chain, &["U", "Z", "V"], "W", &[2, 3], &[0.0], &[0, 1]).unwrap();
        assert!(s.points.iter().all(|p| p.divergence == 0.0 && p.bins == 1));
        assert_eq!(s.series[0].slope, None);
    }

    #[test]
    fn grid_is_sorted_and_divergences_nonnegative() {
        let chain = toy().chain().unwrap();
        let s = extraction_sweep(&chain, &["U", "Z", "V"], "W", &[3, 2], &[0.9, 0.2], &[4]).unwrap();
        assert_eq!(s.rates, vec![0.2, 0.9]);
        assert_eq!(s.n_list, vec![2, 3]);
        assert!(s.points.iter().all(|p| p.divergence >= 0.0));
        assert!(s.threshold > 0.0 && s.threshold <= 1.0);
    }
}
