use crate::error::{Error, Result};
use crate::prob::{compose_chain, entropy_given, iid_power, seq_labels, Alphabet, JointPmf, Kernel, Pmf};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

/// Labels reserved for the two bin indices.
pub const COMMON_LABEL: &str = "C";
pub const EXTRA_LABEL: &str = "F";

/// Single-letter chain `P_U P_{W|U} P_{X|UW} P_{YZ|X} P_{V|WY}` together with a
/// blocklength and the two binning rates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeSpec {
    #[serde(rename = "source")]
    p_u: Pmf,
    p_w_given_u: Kernel,
    p_x_given_uw: Kernel,
    channel: Kernel,
    p_v_given_wy: Kernel,
    n: usize,
    r0: f64,
    r: f64,
    #[serde(skip)]
    pub(crate) dense: Dense,
}

/// Alphabet sizes of the six chain variables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Dims {
    pub u: usize,
    pub w: usize,
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub v: usize,
}

/// Flattened kernels used by the inner loops.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct Dense {
    pub dims: Dims,
    pub pu: Vec<f64>,
    /// `[u * w + w]`
    pub pw_u: Vec<f64>,
    /// `[(u * W + w) * X + x]`
    pub px_uw: Vec<f64>,
    /// `[x * (Y * Z) + y * Z + z]`
    pub pyz_x: Vec<f64>,
    /// `[(w * Y + y) * V + v]`
    pub pv_wy: Vec<f64>,
    /// `P(y, z | u, w)` with `x` summed out, `[(u * W + w) * (Y * Z) + y * Z + z]`
    pub pyz_uw: Vec<f64>,
    /// Single-letter `P(w, y)`, `[w * Y + y]`.
    pub pwy: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeIn {
    source: Pmf,
    p_w_given_u: Kernel,
    p_x_given_uw: Kernel,
    channel: Kernel,
    p_v_given_wy: Kernel,
    n: usize,
    r0: f64,
    r: f64,
}

impl<'de> Deserialize<'de> for SchemeSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = SchemeIn::deserialize(d)?;
        SchemeSpec::new(s.source, s.p_w_given_u, s.p_x_given_uw, s.channel, s.p_v_given_wy, s.n, s.r0, s.r).map_err(de::Error::custom)
    }
}

fn expect_given(k: &Kernel, name: &str, want: &[&Alphabet]) -> Result<()> {
    let got: Vec<&Alphabet> = k.given().iter().collect();
    if got != want {
        return Err(Error::Shape(format!("{name} must be conditioned on {:?}, found {:?}", want, got)));
    }
    Ok(())
}

fn expect_outputs(k: &Kernel, name: &str, count: usize) -> Result<()> {
    if k.axes().len() != count {
        return Err(Error::Shape(format!(
            "{name} must have {count} output axes, found {}",
            k.axes().len()
        )));
    }
    Ok(())
}

impl SchemeSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p_u: Pmf,
        p_w_given_u: Kernel,
        p_x_given_uw: Kernel,
        channel: Kernel,
        p_v_given_wy: Kernel,
        n: usize,
        r0: f64,
        r: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("blocklength n must be at least 1".into()));
        }
        if !(r0.is_finite() && r0 >= 0.0 && r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidArgument(format!("rates must be nonnegative, got r0={r0}, r={r}")));
        }
        expect_outputs(&p_w_given_u, "p_w_given_u", 1)?;
        expect_outputs(&p_x_given_uw, "p_x_given_uw", 1)?;
        expect_outputs(&channel, "channel", 2)?;
        expect_outputs(&p_v_given_wy, "p_v_given_wy", 1)?;
        let ua = p_u.alphabet();
        let wa = &p_w_given_u.axes()[0];
        let xa = &p_x_given_uw.axes()[0];
        let (ya, za) = (&channel.axes()[0], &channel.axes()[1]);
        expect_given(&p_w_given_u, "p_w_given_u", &[ua])?;
        expect_given(&p_x_given_uw, "p_x_given_uw", &[ua, wa])?;
        expect_given(&channel, "channel", &[xa])?;
        expect_given(&p_v_given_wy, "p_v_given_wy", &[wa, ya])?;
        let va = &p_v_given_wy.axes()[0];
        let labels = [ua, wa, xa, ya, za, va];
        for (i, a) in labels.iter().enumerate() {
            if a.label.contains('[') || a.label == COMMON_LABEL || a.label == EXTRA_LABEL {
                return Err(Error::InvalidArgument(format!("axis label `{}` is reserved", a.label)));
            }
            if labels[..i].iter().any(|b| b.label == a.label) {
                return Err(Error::DuplicateAxis(a.label.clone()));
            }
        }
        let dims = Dims {
            u: ua.size,
            w: wa.size,
            x: xa.size,
            y: ya.size,
            z: za.size,
            v: va.size,
        };
        let dense = Dense::build(dims, &p_u, &p_w_given_u, &p_x_given_uw, &channel, &p_v_given_wy);
        let s = SchemeSpec {
            p_u,
            p_w_given_u,
            p_x_given_uw,
            channel,
            p_v_given_wy,
            n,
            r0,
            r,
            dense,
        };
        bin_count(n, r0)?;
        bin_count(n, r)?;
        Ok(s)
    }

    /// Builds a scheme whose auxiliary splits as `W = (W1, W2)` with the source part
    /// `P_{W1|U}, P_{V|W1}` independent of the channel part `P_{W2 X}`.
    ///
    /// The resulting chain has `P(w|u) = P(w1|u) P(w2)`, `P(x|u,w) = P(x|w2)` and
    /// `P(v|w,y) = P(v|w1)`, with `w = w1 * |W2| + w2`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_split(
        source: &Pmf,
        channel: &Kernel,
        p_w1_given_u: &Kernel,
        p_v_given_w1: &Kernel,
        p_w2x: &JointPmf,
        n: usize,
        r0: f64,
        r: f64,
    ) -> Result<Self> {
        let nu = source.alphabet().size;
        if p_w1_given_u.given().len() != 1 || p_w1_given_u.given()[0].size != nu || p_w1_given_u.axes().len() != 1 {
            return Err(Error::Shape("p_w1_given_u must map the source alphabet to one axis".into()));
        }
        let n1 = p_w1_given_u.axes()[0].size;
        if p_v_given_w1.given().len() != 1 || p_v_given_w1.given()[0].size != n1 || p_v_given_w1.axes().len() != 1 {
            return Err(Error::Shape("p_v_given_w1 must map W1 to one axis".into()));
        }
        if channel.given().len() != 1 || channel.axes().len() != 2 {
            return Err(Error::Shape("channel must map X to (Y, Z)".into()));
        }
        let nx = channel.given()[0].size;
        if p_w2x.axes().len() != 2 || p_w2x.axes()[1].size != nx {
            return Err(Error::Shape(
                "p_w2x must be a joint over (W2, X) with X matching the channel".into(),
            ));
        }
        let n2 = p_w2x.axes()[0].size;
        let nv = p_v_given_w1.axes()[0].size;
        let (ny, nw) = (channel.axes()[0].size, n1 * n2);
        let ua = source.alphabet().clone();
        let wa = Alphabet::new(
            aux_label(&[
                &ua.label,
                &channel.given()[0].label,
                &channel.axes()[0].label,
                &channel.axes()[1].label,
                &p_v_given_w1.axes()[0].label,
            ]),
            nw,
        );
        let xa = channel.given()[0].clone();
        let ya = channel.axes()[0].clone();
        let va = p_v_given_w1.axes()[0].clone();

        let pw2x = p_w2x.probs();
        let pw2: Vec<f64> = (0..n2).map(|a| pw2x[a * nx..(a + 1) * nx].iter().sum()).collect();
        let mut pw_u = vec![0.0; nu * nw];
        for u in 0..nu {
            for w1 in 0..n1 {
                for w2 in 0..n2 {
                    pw_u[u * nw + w1 * n2 + w2] = p_w1_given_u.row(u)[w1] * pw2[w2];
                }
            }
        }
        let mut px_uw = vec![0.0; nu * nw * nx];
        for u in 0..nu {
            for w in 0..nw {
                let w2 = w % n2;
                let row = &mut px_uw[(u * nw + w) * nx..(u * nw + w + 1) * nx];
                if pw2[w2] > 0.0 {
                    for x in 0..nx {
                        row[x] = pw2x[w2 * nx + x] / pw2[w2];
                    }
                } else {
                    row.iter_mut().for_each(|p| *p = 1.0 / nx as f64);
                }
            }
        }
        let mut pv_wy = vec![0.0; nw * ny * nv];
        for w in 0..nw {
            for y in 0..ny {
                let dst = &mut pv_wy[(w * ny + y) * nv..(w * ny + y + 1) * nv];
                dst.copy_from_slice(p_v_given_w1.row(w / n2));
            }
        }
        SchemeSpec::new(
            source.clone(),
            Kernel::new(vec![ua.clone()], vec![wa.clone()], pw_u)?,
            Kernel::new(vec![ua, wa.clone()], vec![xa], px_uw)?,
            channel.clone(),
            Kernel::new(vec![wa, ya], vec![va], pv_wy)?,
            n,
            r0,
            r,
        )
    }

    /// Same chain at a different blocklength and rates.
    pub fn with_params(&self, n: usize, r0: f64, r: f64) -> Result<Self> {
        SchemeSpec::new(
            self.p_u.clone(),
            self.p_w_given_u.clone(),
            self.p_x_given_uw.clone(),
            self.channel.clone(),
            self.p_v_given_wy.clone(),
            n,
            r0,
            r,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r0(&self) -> f64 {
        self.r0
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn dims(&self) -> Dims {
        self.dense.dims
    }
    pub fn p_u(&self) -> &Pmf {
        &self.p_u
    }
    pub fn p_w_given_u(&self) -> &Kernel {
        &self.p_w_given_u
    }
    pub fn p_x_given_uw(&self) -> &Kernel {
        &self.p_x_given_uw
    }
    pub fn channel(&self) -> &Kernel {
        &self.channel
    }
    pub fn p_v_given_wy(&self) -> &Kernel {
        &self.p_v_given_wy
    }

    /// Axis labels in chain order `(U, W, X, Y, Z, V)`.
    pub fn labels(&self) -> [&str; 6] {
        [
            &self.p_u.alphabet().label,
            &self.p_w_given_u.axes()[0].label,
            &self.p_x_given_uw.axes()[0].label,
            &self.channel.axes()[0].label,
            &self.channel.axes()[1].label,
            &self.p_v_given_wy.axes()[0].label,
        ]
    }

    /// Number of common-randomness bins `⌈2^{n r0}⌉`.
    pub fn common_bins(&self) -> u64 {
        bin_count(self.n, self.r0).expect("validated at construction")
    }

    /// Number of extra-randomness bins `⌈2^{n r}⌉`.
    pub fn extra_bins(&self) -> u64 {
        bin_count(self.n, self.r).expect("validated at construction")
    }

    /// Rates actually realized by the rounded bin counts.
    pub fn realized_rates(&self) -> (f64, f64) {
        let n = self.n as f64;
        ((self.common_bins() as f64).log2() / n, (self.extra_bins() as f64).log2() / n)
    }

    /// The single-letter joint over `(U, W, X, Y, Z, V)`.
    pub fn chain(&self) -> Result<JointPmf> {
        compose_chain(&[
            self.p_u.clone().into(),
            self.p_w_given_u.clone(),
            self.p_x_given_uw.clone(),
            self.channel.clone(),
            self.p_v_given_wy.clone(),
        ])
    }

    /// The analytic rate thresholds of the chain.
    pub fn thresholds(&self) -> Result<Thresholds> {
        let j = self.chain()?;
        let [u, w, _, y, z, v] = self.labels();
        Ok(Thresholds {
            h_w_given_y: entropy_given(&j, &[w], &[y])?,
            h_w_given_u: entropy_given(&j, &[w], &[u])?,
            h_w_given_uzv: entropy_given(&j, &[w], &[u, z, v])?,
        })
    }

    /// `P̄_{UV}^{⊗n}` with axes `U[1..n], V[1..n]`.
    pub fn target_uv(&self) -> Result<JointPmf> {
        let [u, _, _, _, _, v] = self.labels();
        let single = self.chain()?.marginalize(&[u, v])?;
        let keep = seq_axes(&[u, v], self.n);
        iid_power(&single, self.n)?.marginalize(&keep.iter().map(String::as_str).collect::<Vec<_>>())
    }

    /// `P̄_{UV}^{⊗n} ⊗ P̄_Z^{⊗n}` with axes `U[1..n], Z[1..n], V[1..n]`.
    pub fn target_secure(&self) -> Result<JointPmf> {
        let [u, _, _, _, z, v] = self.labels();
        let chain = self.chain()?;
        let uv = iid_power(&chain.marginalize(&[u, v])?, self.n)?;
        let zz = iid_power(&chain.marginalize(&[z])?, self.n)?;
        let keep = seq_axes(&[u, z, v], self.n);
        uv.product(&zz)?.marginalize(&keep.iter().map(String::as_str).collect::<Vec<_>>())
    }

    /// `P̄_{UZV}^{⊗n}` with axes `U[1..n], Z[1..n], V[1..n]`.
    pub fn target_uzv(&self) -> Result<JointPmf> {
        let [u, _, _, _, z, v] = self.labels();
        let single = self.chain()?.marginalize(&[u, z, v])?;
        let keep = seq_axes(&[u, z, v], self.n);
        iid_power(&single, self.n)?.marginalize(&keep.iter().map(String::as_str).collect::<Vec<_>>())
    }
}

/// Labels `A[1..n]` for each `A` in `labels`, grouped by variable.
pub fn seq_axes(labels: &[&str], n: usize) -> Vec<String> {
    labels.iter().flat_map(|l| seq_labels(l, n)).collect()
}

fn aux_label(taken: &[&str]) -> String {
    ["W", "W12", "Waux"]
        .iter()
        .find(|c| !taken.contains(c))
        .map(|s| s.to_string())
        .unwrap_or_else(|| "W_aux".into())
}

/// Conditional entropies bounding the admissible rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub h_w_given_y: f64,
    pub h_w_given_u: f64,
    pub h_w_given_uzv: f64,
}

impl Thresholds {
    /// Whether `(r0, r)` lies strictly inside the decoding, resolvability and extraction constraints.
    pub fn admits(&self, r0: f64, r: f64) -> bool {
        self.h_w_given_y < r + r0 && r + r0 < self.h_w_given_u && r < self.h_w_given_uzv
    }
}

/// `⌈2^{n rate}⌉`, at least one.
pub fn bin_count(n: usize, rate: f64) -> Result<u64> {
    let e = n as f64 * rate;
    if e > 62.0 {
        let required = if e >= 127.0 { u128::MAX } else { e.exp2().ceil() as u128 };
        return Err(Error::budget("bin count", required, 1u128 << 62));
    }
    let c = (e.exp2() - 1e-9).ceil();
    Ok((c as u64).max(1))
}

impl Dense {
    fn build(d: Dims, pu: &Pmf, pw: &Kernel, px: &Kernel, ch: &Kernel, pv: &Kernel) -> Dense {
        let yz = d.y * d.z;
        let mut pyz_uw = vec![0.0; d.u * d.w * yz];
        for uw in 0..d.u * d.w {
            let row = px.row(uw);
            for (x, &px_x) in row.iter().enumerate() {
                if px_x == 0.0 {
                    continue;
                }
                for (k, &q) in ch.row(x).iter().enumerate() {
                    pyz_uw[uw * yz + k] += px_x * q;
                }
            }
        }
        let mut pwy = vec![0.0; d.w * d.y];
        for u in 0..d.u {
            for w in 0..d.w {
                let m = pu.probs()[u] * pw.row(u)[w];
                for y in 0..d.y {
                    let s: f64 = pyz_uw[(u * d.w + w) * yz + y * d.z..(u * d.w + w) * yz + (y + 1) * d.z]
                        .iter()
                        .sum();
                    pwy[w * d.y + y] += m * s;
                }
            }
        }
        Dense {
            dims: d,
            pu: pu.probs().to_vec(),
            pw_u: pw.probs().to_vec(),
            px_uw: px.probs().to_vec(),
            pyz_x: ch.probs().to_vec(),
            pv_wy: pv.probs().to_vec(),
            pyz_uw,
            pwy,
        }
    }
}

/// Number of sequences of length `n` over `k` symbols, if it fits in a `u64`.
pub fn seq_count(k: usize, n: usize) -> Option<u64> {
    (k as u64).checked_pow(n as u32)
}

/// Writes the symbols of sequence `idx` (first symbol most significant) into `out`.
pub fn decode_index(mut idx: u64, k: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = (idx % k as u64) as usize;
        idx /= k as u64;
    }
}

/// Inverse of [`decode_index`].
pub fn encode_index(seq: &[usize], k: usize) -> u64 {
    seq.iter().fold(0u64, |acc, &s| acc * k as u64 + s as u64)
}
