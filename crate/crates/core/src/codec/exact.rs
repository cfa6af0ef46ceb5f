//! Exact induced distributions of the binning scheme at small blocklengths.
//!
//! Exact random-coding distributions take the limit of the redraw policy: when a
//! bin pair carries no posterior mass for the realized source sequence, the pair
//! is drawn uniformly among those that do.

use super::code::{BinningCode, CodeMode};
use super::decode::sw_decode;
use super::scheme::{decode_index, seq_axes, seq_count, Dims, COMMON_LABEL, EXTRA_LABEL};
use crate::error::{Error, Result};
use crate::prob::{checked_len, Alphabet, JointPmf, MAX_TENSOR_ENTRIES};
use std::collections::HashMap;

fn require_exact(code: &BinningCode) -> Result<()> {
    if code.mode() != CodeMode::Exact {
        return Err(Error::InvalidArgument("exact distributions need an exact-mode code".into()));
    }
    Ok(())
}

fn space(k: usize, n: usize, what: &str) -> Result<usize> {
    seq_count(k, n)
        .filter(|&c| c <= MAX_TENSOR_ENTRIES as u64)
        .map(|c| c as usize)
        .ok_or_else(|| Error::budget(what, (k as u128).saturating_pow(n as u32), MAX_TENSOR_ENTRIES as u128))
}

/// All sequences of length `n` over `k` symbols, flattened.
fn all_seqs(k: usize, n: usize, count: usize) -> Vec<usize> {
    let mut out = vec![0usize; count * n];
    for (i, chunk) in out.chunks_mut(n).enumerate() {
        decode_index(i as u64, k, chunk);
    }
    out
}

fn full_axes(code: &BinningCode) -> Vec<Alphabet> {
    let s = code.spec();
    let n = s.n();
    let d = s.dims();
    let sizes = [d.u, d.w, d.x, d.y, d.z, d.v];
    let mut axes = Vec::new();
    for (l, &k) in s.labels().iter().zip(&sizes) {
        for name in seq_axes(&[l], n) {
            axes.push(Alphabet::new(name, k));
        }
    }
    axes.push(Alphabet::new(COMMON_LABEL, code.common_bins() as usize));
    axes.push(Alphabet::new(EXTRA_LABEL, code.extra_bins() as usize));
    axes
}

struct Spaces {
    d: Dims,
    n: usize,
    nu: usize,
    nw: usize,
    nx: usize,
    ny: usize,
    nz: usize,
    nv: usize,
    us: Vec<usize>,
    ws: Vec<usize>,
    xs: Vec<usize>,
    ys: Vec<usize>,
    zs: Vec<usize>,
    vs: Vec<usize>,
}

impl Spaces {
    fn new(code: &BinningCode) -> Result<Spaces> {
        let d = code.spec().dims();
        let n = code.n();
        let nu = space(d.u, n, "U^n")?;
        let nw = space(d.w, n, "W^n")?;
        let nx = space(d.x, n, "X^n")?;
        let ny = space(d.y, n, "Y^n")?;
        let nz = space(d.z, n, "Z^n")?;
        let nv = space(d.v, n, "V^n")?;
        Ok(Spaces {
            d,
            n,
            nu,
            nw,
            nx,
            ny,
            nz,
            nv,
            us: all_seqs(d.u, n, nu),
            ws: all_seqs(d.w, n, nw),
            xs: all_seqs(d.x, n, nx),
            ys: all_seqs(d.y, n, ny),
            zs: all_seqs(d.z, n, nz),
            vs: all_seqs(d.v, n, nv),
        })
    }
    fn seq<'a>(&self, table: &'a [usize], i: usize) -> &'a [usize] {
        &table[i * self.n..(i + 1) * self.n]
    }
}

/// Exact `P^RB` over `(U^n, W^n, X^n, Y^n, Z^n, V^n, C, F)`: the i.i.d. chain with
/// `C = φ1(W^n)` and `F = φ2(W^n)` appended.
pub fn rb_joint_exact(code: &BinningCode) -> Result<JointPmf> {
    require_exact(code)?;
    let axes = full_axes(code);
    let len = checked_len(&axes, "random-binning tensor")?;
    let sp = Spaces::new(code)?;
    let dn = &code.spec().dense;
    let (d, nc, nf) = (sp.d, code.common_bins() as usize, code.extra_bins() as usize);
    let mut probs = vec![0.0; len];
    for u in 0..sp.nu {
        let us = sp.seq(&sp.us, u);
        let pu: f64 = us.iter().map(|&a| dn.pu[a]).product();
        for w in 0..sp.nw {
            let ws = sp.seq(&sp.ws, w);
            let pw: f64 = pu * us.iter().zip(ws).map(|(&a, &b)| dn.pw_u[a * d.w + b]).product::<f64>();
            if pw == 0.0 {
                continue;
            }
            let (c, f) = code.bins_of_index(w).expect("exact mode");
            for x in 0..sp.nx {
                let xs = sp.seq(&sp.xs, x);
                let px = pw * (0..sp.n).map(|t| dn.px_uw[(us[t] * d.w + ws[t]) * d.x + xs[t]]).product::<f64>();
                if px == 0.0 {
                    continue;
                }
                for y in 0..sp.ny {
                    let ys = sp.seq(&sp.ys, y);
                    for z in 0..sp.nz {
                        let zs = sp.seq(&sp.zs, z);
                        let pyz = px
                            * (0..sp.n)
                                .map(|t| dn.pyz_x[xs[t] * d.y * d.z + ys[t] * d.z + zs[t]])
                                .product::<f64>();
                        if pyz == 0.0 {
                            continue;
                        }
                        for v in 0..sp.nv {
                            let vs = sp.seq(&sp.vs, v);
                            let p = pyz * (0..sp.n).map(|t| dn.pv_wy[(ws[t] * d.y + ys[t]) * d.v + vs[t]]).product::<f64>();
                            let idx = (((((u * sp.nw + w) * sp.nx + x) * sp.ny + y) * sp.nz + z) * sp.nv + v) * nc * nf
                                + c as usize * nf
                                + f as usize;
                            probs[idx] += p;
                        }
                    }
                }
            }
        }
    }
    JointPmf::new(axes, probs)
}

/// Exact `P^RC` over `(U^n, W^n, X^n, Y^n, Z^n, V^n, C, F)`: uniform bin indices, the
/// bin-restricted posterior on `W^n`, the channel, and `V^n` generated from the decoded `Ŵ^n`.
pub fn rc_joint_exact(code: &BinningCode) -> Result<JointPmf> {
    require_exact(code)?;
    let axes = full_axes(code);
    let len = checked_len(&axes, "random-coding tensor")?;
    let sp = Spaces::new(code)?;
    let dn = &code.spec().dense;
    let (d, nc, nf) = (sp.d, code.common_bins() as usize, code.extra_bins() as usize);
    let mut probs = vec![0.0; len];
    let mut decoded: HashMap<(u64, u64, usize), Vec<usize>> = HashMap::new();
    for u in 0..sp.nu {
        let us = sp.seq(&sp.us, u);
        let pu: f64 = us.iter().map(|&a| dn.pu[a]).product();
        let pw_of = |w: usize| -> f64 {
            let ws = sp.seq(&sp.ws, w);
            us.iter().zip(ws).map(|(&a, &b)| dn.pw_u[a * d.w + b]).product()
        };
        let mut mass = vec![0.0; nc * nf];
        for w in 0..sp.nw {
            let (c, f) = code.bins_of_index(w).expect("exact mode");
            mass[c as usize * nf + f as usize] += pw_of(w);
        }
        let valid = mass.iter().filter(|&&m| m > 0.0).count();
        for w in 0..sp.nw {
            let pw = pw_of(w);
            if pw == 0.0 {
                continue;
            }
            let ws = sp.seq(&sp.ws, w);
            let (c, f) = code.bins_of_index(w).expect("exact mode");
            let weight = pu * pw / mass[c as usize * nf + f as usize] / valid as f64;
            for x in 0..sp.nx {
                let xs = sp.seq(&sp.xs, x);
                let px = weight * (0..sp.n).map(|t| dn.px_uw[(us[t] * d.w + ws[t]) * d.x + xs[t]]).product::<f64>();
                if px == 0.0 {
                    continue;
                }
                for y in 0..sp.ny {
                    let ys = sp.seq(&sp.ys, y);
                    let w_hat = match decoded.get(&(c, f, y)) {
                        Some(v) => v.clone(),
                        None => {
                            let v = sw_decode(code, ys, c, f)?.w_hat;
                            decoded.insert((c, f, y), v.clone());
                            v
                        }
                    };
                    for z in 0..sp.nz {
                        let zs = sp.seq(&sp.zs, z);
                        let pyz = px
                            * (0..sp.n)
                                .map(|t| dn.pyz_x[xs[t] * d.y * d.z + ys[t] * d.z + zs[t]])
                                .product::<f64>();
                        if pyz == 0.0 {
                            continue;
                        }
                        for v in 0..sp.nv {
                            let vs = sp.seq(&sp.vs, v);
                            let p = pyz * (0..sp.n).map(|t| dn.pv_wy[(w_hat[t] * d.y + ys[t]) * d.v + vs[t]]).product::<f64>();
                            let idx = (((((u * sp.nw + w) * sp.nx + x) * sp.ny + y) * sp.nz + z) * sp.nv + v) * nc * nf
                                + c as usize * nf
                                + f as usize;
                            probs[idx] += p;
                        }
                    }
                }
            }
        }
    }
    JointPmf::new(axes, probs)
}

/// Laws of `(U^n, Z^n, V^n)` given a pinned extra-randomness index `F = f`.
#[derive(Clone, Debug)]
pub struct ConditionalLaws {
    pub f: u64,
    /// Random-coding law with `f` pinned and `C` uniform over bins that carry posterior mass.
    pub rc: JointPmf,
    /// Random-binning law conditioned on `F = f`; `None` when `P^RB(F = f) = 0`.
    pub rb: Option<JointPmf>,
    /// `P^RB(F = f)`.
    pub rb_mass: f64,
    /// `P^RC(Ŵ^n ≠ W^n | F = f)`.
    pub decode_error: f64,
    /// Source probability of sequences for which no common bin carries posterior mass given `f`.
    pub unsupported_mass: f64,
}

/// Axes `U[1..n], Z[1..n], V[1..n]` used by [`ConditionalLaws`].
pub fn law_axes(code: &BinningCode) -> Vec<Alphabet> {
    let s = code.spec();
    let d = s.dims();
    let [u, _, _, _, z, v] = s.labels();
    let mut axes = Vec::new();
    for (l, k) in [(u, d.u), (z, d.z), (v, d.v)] {
        for name in seq_axes(&[l], s.n()) {
            axes.push(Alphabet::new(name, k));
        }
    }
    axes
}

/// Sparse single-letter support of `P(y, z | u, w)`.
fn letter_support(code: &BinningCode) -> Vec<Vec<(usize, usize, f64)>> {
    let dn = &code.spec().dense;
    let d = dn.dims;
    let yz = d.y * d.z;
    (0..d.u * d.w)
        .map(|uw| {
            (0..yz)
                .filter_map(|k| {
                    let p = dn.pyz_uw[uw * yz + k];
                    (p > 0.0).then_some((k / d.z, k % d.z, p))
                })
                .collect()
        })
        .collect()
}

/// Expands the per-letter supports into `(y^n, z^n, p)` triples.
fn expand(
    support: &[Vec<(usize, usize, f64)>],
    d: Dims,
    us: &[usize],
    ws: &[usize],
    buf: &mut Vec<(usize, usize, f64)>,
    tmp: &mut Vec<(usize, usize, f64)>,
) {
    buf.clear();
    buf.push((0, 0, 1.0));
    for t in 0..us.len() {
        let letter = &support[us[t] * d.w + ws[t]];
        tmp.clear();
        for &(y, z, p) in buf.iter() {
            for &(a, b, q) in letter {
                tmp.push((y * d.y + a, z * d.z + b, p * q));
            }
        }
        std::mem::swap(buf, tmp);
    }
}

/// `P(v^n | w^n, y^n)` over all of `V^n`.
fn v_row(code: &BinningCode, ws: &[usize], ys: &[usize], out: &mut Vec<f64>) {
    let dn = &code.spec().dense;
    let d = dn.dims;
    out.clear();
    out.push(1.0);
    for t in 0..ws.len() {
        let row = &dn.pv_wy[(ws[t] * d.y + ys[t]) * d.v..(ws[t] * d.y + ys[t] + 1) * d.v];
        let prev = std::mem::take(out);
        for &p in &prev {
            out.extend(row.iter().map(|&q| p * q));
        }
    }
}

/// Computes the laws of `(U^n, Z^n, V^n)` given `F = f`, without materializing the full tensor.
pub fn conditional_laws(code: &BinningCode, f: u64, with_rb: bool) -> Result<ConditionalLaws> {
    require_exact(code)?;
    code.check_bins(0, f)?;
    let axes = law_axes(code);
    let len = checked_len(&axes, "conditional law tensor")?;
    let n = code.n();
    let dn = &code.spec().dense;
    let d = dn.dims;
    let nu = space(d.u, n, "U^n")?;
    let ny = space(d.y, n, "Y^n")?;
    let nz = space(d.z, n, "Z^n")?;
    let nv = space(d.v, n, "V^n")?;
    let us_all = all_seqs(d.u, n, nu);
    let pu: Vec<f64> = us_all.chunks(n).map(|s| s.iter().map(|&a| dn.pu[a]).product()).collect();
    let groups = code.members_of_extra(f)?;
    let support = letter_support(code);

    let mut wbuf = vec![0usize; n];
    let pw = |ws: &[usize], us: &[usize]| -> f64 { us.iter().zip(ws).map(|(&a, &b)| dn.pw_u[a * d.w + b]).product() };

    // Posterior normalizers per (group, u).
    let mut mass = vec![0.0; groups.len() * nu];
    for (g, (_, members)) in groups.iter().enumerate() {
        for &w in members.iter() {
            decode_index(w as u64, d.w, &mut wbuf);
            for u in 0..nu {
                mass[g * nu + u] += pw(&wbuf, &us_all[u * n..(u + 1) * n]);
            }
        }
    }
    let valid: Vec<usize> = (0..nu)
        .map(|u| (0..groups.len()).filter(|&g| mass[g * nu + u] > 0.0).count())
        .collect();
    let unsupported_mass: f64 = (0..nu).filter(|&u| valid[u] == 0).map(|u| pu[u]).sum();

    let mut rc = vec![0.0; len];
    let mut rb = if with_rb { vec![0.0; len] } else { Vec::new() };
    let mut rb_mass = 0.0;
    let mut decode_error = 0.0;
    let (mut buf, mut tmp) = (Vec::new(), Vec::new());
    let mut ys = vec![0usize; n];
    let mut vrow = Vec::new();
    let mut true_rows: HashMap<usize, Vec<f64>> = HashMap::new();
    for (g, (c, members)) in groups.iter().enumerate() {
        let mut w_hat: Vec<Option<(u32, Vec<f64>)>> = vec![None; ny];
        for &w in members.iter() {
            decode_index(w as u64, d.w, &mut wbuf);
            true_rows.clear();
            for u in 0..nu {
                let us = &us_all[u * n..(u + 1) * n];
                let p = pw(&wbuf, us);
                if p == 0.0 {
                    continue;
                }
                expand(&support, d, us, &wbuf, &mut buf, &mut tmp);
                let m = mass[g * nu + u];
                let rc_weight = pu[u] * p / m / valid[u] as f64;
                let rb_weight = pu[u] * p;
                rb_mass += rb_weight;
                for &(y, z, q) in &buf {
                    let slot = &mut w_hat[y];
                    if slot.is_none() {
                        decode_index(y as u64, d.y, &mut ys);
                        let dec = sw_decode(code, &ys, *c, f)?;
                        let idx = super::scheme::encode_index(&dec.w_hat, d.w) as u32;
                        v_row(code, &dec.w_hat, &ys, &mut vrow);
                        *slot = Some((idx, vrow.clone()));
                    }
                    let (idx, row) = slot.as_ref().expect("filled above");
                    let base = (u * nz + z) * nv;
                    let a = rc_weight * q;
                    for (dst, &r) in rc[base..base + nv].iter_mut().zip(row) {
                        *dst += a * r;
                    }
                    if *idx != w {
                        decode_error += a;
                    }
                    if with_rb {
                        let row = true_rows.entry(y).or_insert_with(|| {
                            decode_index(y as u64, d.y, &mut ys);
                            let mut r = Vec::new();
                            v_row(code, &wbuf, &ys, &mut r);
                            r
                        });
                        let b = rb_weight * q;
                        for (dst, &r) in rb[base..base + nv].iter_mut().zip(row.iter()) {
                            *dst += b * r;
                        }
                    }
                }
            }
        }
    }
    let supported = 1.0 - unsupported_mass;
    if supported <= 0.0 {
        return Err(Error::InvalidDistribution(format!(
            "no source sequence has posterior mass in extra bin {f}"
        )));
    }
    rc.iter_mut().for_each(|p| *p /= supported);
    decode_error /= supported;
    let rb = if with_rb && rb_mass > 0.0 {
        rb.iter_mut().for_each(|p| *p /= rb_mass);
        Some(JointPmf::new(axes.clone(), rb)?)
    } else {
        None
    };
    Ok(ConditionalLaws {
        f,
        rc: JointPmf::new(axes, rc)?,
        rb,
        rb_mass,
        decode_error,
        unsupported_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::code::build_code;
    use crate::codec::scheme::tests::toy;
    use crate::prob::{iid_power, tv_distance};

    fn labels(p: &JointPmf) -> Vec<String> {
        p.labels().iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rb_marginal_is_iid_chain() {
        let s = toy().with_params(2, 0.5, 0.5).unwrap();
        let code = build_code(&s, 3, CodeMode::Exact).unwrap();
        let rb = rb_joint_exact(&code).unwrap();
        let iid = iid_power(&s.chain().unwrap(), 2).unwrap();
        let keep = labels(&iid);
        let m = rb.marginalize(&keep.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
        assert!(tv_distance(&m, &iid).unwrap() <= 1e-12);
    }

    #[test]
    fn rc_has_uniform_indices_when_bins_are_full() {
        // Full-support W|U and one bin per index: every pair carries mass.
        let s = toy().with_params(2, 0.5, 0.5).unwrap();
        let full = |code: &BinningCode| (0..2).all(|c| (0..2).all(|f| !code.members(c, f).unwrap().is_empty()));
        let code = (0..200)
            .map(|seed| build_code(&s, seed, CodeMode::Exact).unwrap())
            .find(full)
            .expect("some seed occupies every bin pair");
        let rc = rc_joint_exact(&code).unwrap();
        let c = rc.marginalize(&["C"]).unwrap();
        let f = rc.marginalize(&["F"]).unwrap();
        for p in c.probs().iter().chain(f.probs()) {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_laws_match_full_tensors() {
        let s = toy().with_params(2, 0.5, 0.5).unwrap();
        let code = build_code(&s, 3, CodeMode::Exact).unwrap();
        let rb = rb_joint_exact(&code).unwrap();
        let rc = rc_joint_exact(&code).unwrap();
        let keep: Vec<String> = law_axes(&code).into_iter().map(|a| a.label).collect();
        let mut keep_f: Vec<&str> = vec!["F"];
        keep_f.extend(keep.iter().map(String::as_str));
        let rb_f = rb.marginalize(&keep_f).unwrap();
        let rc_f = rc.marginalize(&keep_f).unwrap();
        let block = rb_f.len() / 2;
        for f in 0..2u64 {
            let laws = conditional_laws(&code, f, true).unwrap();
            let lo = f as usize * block;
            let mb: f64 = rb_f.probs()[lo..lo + block].iter().sum();
            let mc: f64 = rc_f.probs()[lo..lo + block].iter().sum();
            assert!((laws.rb_mass - mb).abs() < 1e-12);
            for (i, (&a, &b)) in rb_f.probs()[lo..lo + block].iter().zip(&rc_f.probs()[lo..lo + block]).enumerate() {
                assert!((laws.rb.as_ref().unwrap().probs()[i] - a / mb).abs() < 1e-12);
                assert!((laws.rc.probs()[i] - b / mc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn budget_errors_name_the_limit() {
        let s = toy().with_params(5, 1.0, 1.0).unwrap();
        let code = build_code(&s, 0, CodeMode::Exact).unwrap();
        match rb_joint_exact(&code) {
            Err(Error::Budget { budget, .. }) => assert_eq!(budget, MAX_TENSOR_ENTRIES as u128),
            other => panic!("expected a budget error, got {other:?}"),
        }
    }
}
