//! Property tests of the invariants shared across the probability toolkit, the codec and the
//! metrics.

use proptest::prelude::*;
use strongcoord::codec::{build_code, rb_joint_exact, rc_joint_exact, seq_axes, CodeMode, SchemeSpec, COMMON_LABEL, EXTRA_LABEL};
use strongcoord::prob::{compose_chain, iid_power, mutual_information, tv_distance, Alphabet, JointPmf, Kernel, Pmf};
use strongcoord::verify::{evaluate_scheme, metrics_from_counts, CellShape, EvalMode};

fn weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_map(|mut w| {
        // Keep at least one positive entry.
        w[0] += 1e-3;
        w
    })
}

fn joint(sizes: Vec<usize>, labels: &'static [&'static str]) -> impl Strategy<Value = JointPmf> {
    let len = sizes.iter().product();
    weights(len).prop_map(move |w| {
        let axes = sizes.iter().zip(labels).map(|(&k, l)| Alphabet::new(*l, k)).collect();
        JointPmf::from_weights(axes, w).unwrap()
    })
}

fn stochastic_rows(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(weights(cols), rows).prop_map(|rs| {
        rs.into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|x| x / s).collect()
            })
            .collect()
    })
}

fn toy_scheme(pw: Vec<Vec<f64>>, eps: f64, n: usize, r0: f64, r: f64) -> SchemeSpec {
    let a = |l: &str| Alphabet::new(l, 2);
    let ch = Kernel::from_rows(
        vec![a("X")],
        vec![a("Y"), a("Z")],
        &[
            vec![(1.0 - eps) * 0.8, (1.0 - eps) * 0.2, eps * 0.8, eps * 0.2],
            vec![eps * 0.3, eps * 0.7, (1.0 - eps) * 0.3, (1.0 - eps) * 0.7],
        ],
    )
    .unwrap();
    let px = Kernel::from_rows(
        vec![a("U"), a("W")],
        vec![a("X")],
        &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
    )
    .unwrap();
    let pv = Kernel::from_rows(
        vec![a("W"), a("Y")],
        vec![a("V")],
        &[vec![0.9, 0.1], vec![0.7, 0.3], vec![0.2, 0.8], vec![0.1, 0.9]],
    )
    .unwrap();
    SchemeSpec::new(
        Pmf::uniform("U", 2).unwrap(),
        Kernel::from_rows(vec![a("U")], vec![a("W")], &pw).unwrap(),
        px,
        ch,
        pv,
        n,
        r0,
        r,
    )
    .unwrap()
}

fn names(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn composed_chains_are_normalized(p in joint(vec![3], &["A"]), rows in stochastic_rows(3, 4)) {
        let k = Kernel::from_rows(vec![Alphabet::new("A", 3)], vec![Alphabet::new("B", 4)], &rows).unwrap();
        let j = compose_chain(&[p.into(), k]).unwrap();
        prop_assert!((j.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(j.probs().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn marginal_tv_never_exceeds_joint_tv(p in joint(vec![3, 4], &["A", "B"]), q in joint(vec![3, 4], &["A", "B"])) {
        let full = tv_distance(&p, &q).unwrap();
        let marg = tv_distance(&p.marginalize(&["A"]).unwrap(), &q.marginalize(&["A"]).unwrap()).unwrap();
        prop_assert!(marg <= full + 1e-12);
    }

    #[test]
    fn shared_kernel_preserves_tv(p in joint(vec![4], &["A"]), q in joint(vec![4], &["A"]), rows in stochastic_rows(4, 3)) {
        let k = Kernel::from_rows(vec![Alphabet::new("A", 4)], vec![Alphabet::new("B", 3)], &rows).unwrap();
        let before = tv_distance(&p, &q).unwrap();
        let after = tv_distance(&p.extend(&k).unwrap(), &q.extend(&k).unwrap()).unwrap();
        prop_assert!((before - after).abs() <= 1e-9);
    }

    #[test]
    fn mutual_information_ignores_symbol_names(p in joint(vec![3, 3], &["A", "B"]), perm in Just([2usize, 0, 1])) {
        let i = mutual_information(&p, &["A"], &["B"]).unwrap();
        // Permute the symbols of A.
        let mut probs = vec![0.0; 9];
        for a in 0..3 {
            for b in 0..3 {
                probs[perm[a] * 3 + b] = p.probs()[a * 3 + b];
            }
        }
        let q = JointPmf::new(p.axes().to_vec(), probs).unwrap();
        prop_assert!((mutual_information(&q, &["A"], &["B"]).unwrap() - i).abs() < 1e-12);
    }

    #[test]
    fn coloring_bounds_hold(p in joint(vec![4, 3], &["A", "B"])) {
        // Distance of the joint from the product of its marginals, in the un-halved convention.
        let pa = p.marginalize(&["A"]).unwrap();
        let pb = p.marginalize(&["B"]).unwrap();
        let prod = pa.product(&pb).unwrap();
        let v = 2.0 * tv_distance(&p, &prod).unwrap();
        let i = mutual_information(&p, &["A"], &["B"]).unwrap();
        prop_assert!(v * v / (2.0 * std::f64::consts::LN_2) <= i + 1e-12);
        if v > 0.0 {
            prop_assert!(i <= v * (12.0 / v).log2() + 1e-12);
        }
    }

    #[test]
    fn plug_in_metrics_are_nonnegative(counts in prop::collection::vec(0u64..50, 8)) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let shape = CellShape { nu: 2, nz: 2, nv: 2 };
        let m = metrics_from_counts(&counts, shape, &[0.25; 4], &[0.125; 8]);
        prop_assert!(m.leakage >= 0.0 && m.gap >= 0.0 && m.joint_tv >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn binning_joint_marginal_is_the_iid_chain(
        pw in stochastic_rows(2, 2),
        eps in 0.0f64..0.3,
        n in 1usize..=2,
        r0 in 0.0f64..1.0,
        r in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let spec = toy_scheme(pw, eps, n, r0, r);
        let code = build_code(&spec, seed, CodeMode::Exact).unwrap();
        let rb = rb_joint_exact(&code).unwrap();
        let keep = seq_axes(&spec.labels(), n);
        let marg = rb.marginalize(&names(&keep)).unwrap();
        let iid = iid_power(&spec.chain().unwrap(), n).unwrap().marginalize(&names(&keep)).unwrap();
        prop_assert!(tv_distance(&marg, &iid).unwrap() <= 1e-12);
    }

    #[test]
    fn tv_shrinks_along_the_marginal_chain(
        pw in stochastic_rows(2, 2),
        eps in 0.0f64..0.3,
        r0 in 0.0f64..1.0,
        r in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let n = 2;
        let spec = toy_scheme(pw, eps, n, r0, r);
        let code = build_code(&spec, seed, CodeMode::Exact).unwrap();
        let (rb, rc) = (rb_joint_exact(&code).unwrap(), rc_joint_exact(&code).unwrap());
        let full = tv_distance(&rb, &rc).unwrap();
        let mut mid = seq_axes(&["U", "X", "Y", "Z", "V"], n);
        mid.push(EXTRA_LABEL.to_string());
        let mut low = seq_axes(&["U", "Z", "V"], n);
        low.push(EXTRA_LABEL.to_string());
        let tv_of = |keep: &[String]| tv_distance(&rb.marginalize(&names(keep)).unwrap(), &rc.marginalize(&names(keep)).unwrap()).unwrap();
        let (m, l) = (tv_of(&mid), tv_of(&low));
        prop_assert!(full + 1e-12 >= m && m + 1e-12 >= l, "{full} {m} {l}");
        let c = rc.marginalize(&[COMMON_LABEL]).unwrap();
        prop_assert!((c.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_metrics_are_coherent(
        pw in stochastic_rows(2, 2),
        eps in 0.0f64..0.3,
        n in 1usize..=3,
        r0 in 0.0f64..1.2,
        r in 0.0f64..1.2,
        seed in any::<u64>(),
    ) {
        let spec = toy_scheme(pw, eps, n, r0, r);
        let code = build_code(&spec, seed, CodeMode::Exact).unwrap();
        let rep = evaluate_scheme(&code, EvalMode::Exact, 0, seed).unwrap();
        prop_assert!(rep.joint_secrecy_tv + 1e-12 >= rep.coordination_gap);
        prop_assert!(rep.leakage >= 0.0);
        prop_assert!(rep.bound_holds(1e-9), "leakage {} bound {}", rep.leakage, rep.leakage_bound);
    }
}
