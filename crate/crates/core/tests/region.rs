//! Region solver against closed forms and brute-force grids.

use strongcoord::prob::{compose_chain, mutual_information, Alphabet, Kernel, Pmf};
use strongcoord::region::{
    decompose_markov, min_r0_corollary, min_r0_inner, secrecy_capacity, ProblemSpec, RatePoint, SearchBudget, WITNESS_TOL,
};

fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

fn bin(l: &str) -> Alphabet {
    Alphabet::new(l, 2)
}

fn two_bsc(qy: f64, qz: f64) -> Kernel {
    let flip = |q: f64, a: usize, b: usize| if a == b { 1.0 - q } else { q };
    let rows: Vec<Vec<f64>> = (0..2)
        .map(|x| (0..4).map(|i| flip(qy, x, i / 2) * flip(qz, x, i % 2)).collect())
        .collect();
    Kernel::from_rows(vec![bin("X")], vec![bin("Y"), bin("Z")], &rows).unwrap()
}

/// `Y = Z = BSC(q)(X)`, the same output twice.
fn twin(q: f64) -> Kernel {
    let rows: Vec<Vec<f64>> = (0..2)
        .map(|x| {
            if x == 0 {
                vec![1.0 - q, 0.0, 0.0, q]
            } else {
                vec![q, 0.0, 0.0, 1.0 - q]
            }
        })
        .collect();
    Kernel::from_rows(vec![bin("X")], vec![bin("Y"), bin("Z")], &rows).unwrap()
}

fn problem(ch: Kernel, target: Kernel) -> ProblemSpec {
    ProblemSpec::new(Pmf::uniform("U", 2).unwrap(), ch, target).unwrap()
}

fn copy() -> Kernel {
    Kernel::identity(bin("U"), "V").unwrap()
}

/// Brute-force `max I(X;Y) - I(X;Z)` for `Y = X` and `Z = BSC(q)(X)` on the grid `P_X(1) = i/256`,
/// optionally restricted to inputs with `I(X;Y) >= floor`.
fn grid_advantage(q: f64, floor: f64) -> f64 {
    (0..=256)
        .map(|i| i as f64 / 256.0)
        .filter(|&p| h(p) >= floor - 1e-12)
        .map(|p| h(p) - (h(p * (1.0 - q) + (1.0 - p) * q) - h(q)))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Re-derives every witness quantity with nothing but the returned kernels.
fn check_witness(p: &RatePoint, spec: &ProblemSpec) {
    let w = p.witness.as_ref().unwrap();
    let src: Kernel = spec.source().clone().into();
    let j = compose_chain(&[src, w.decomposition.p_w1_given_u.clone(), w.decomposition.p_v_given_w1.clone()]).unwrap();
    let i_uv_w1 = mutual_information(&j, &["U", "V"], &["W1"]).unwrap();
    let i_w1_u = mutual_information(&j, &["U"], &["W1"]).unwrap();
    let k = w.input.p_w2x.extend(spec.channel()).unwrap();
    let c = mutual_information(&k, &["W2"], &["Y"]).unwrap();
    let e = mutual_information(&k, &["W2"], &["Z"]).unwrap();
    assert!(i_w1_u <= c + WITNESS_TOL);
    assert!((p.r0_min.unwrap() - (i_uv_w1 - (c - e)).max(0.0)).abs() <= WITNESS_TOL);
    let (w1_cap, w2_cap) = spec.cardinality_caps();
    assert!(w.decomposition.w1_size <= w1_cap && w.input.w2_size <= w2_cap);
    // Composition against the target.
    let uv = j.marginalize(&["U", "V"]).unwrap();
    let want = spec.source().to_joint().extend(spec.target()).unwrap();
    let l1: f64 = uv.probs().iter().zip(want.probs()).map(|(a, b)| (a - b).abs()).sum();
    assert!(l1 <= 1e-6, "residual {l1}");
}

#[test]
fn corollary_matches_closed_form_and_grid() {
    for q in [0.11, 0.25, 0.5] {
        let spec = problem(two_bsc(0.0, q), copy());
        let p = min_r0_corollary(&spec, &SearchBudget::default(), 11).unwrap();
        let closed = (1.0 - h(q)).max(0.0);
        let grid = (1.0 - grid_advantage(q, 1.0)).max(0.0);
        let r = p.r0_min.unwrap();
        assert!((r - closed).abs() < 1e-3, "q={q}: r0 {r} vs {closed}");
        assert!((r - grid).abs() < 1e-3, "q={q}: r0 {r} vs grid {grid}");
        check_witness(&p, &spec);

        let cs = secrecy_capacity(spec.channel(), 16, 11).unwrap();
        assert!((cs.c_s - h(q)).abs() < 1e-3 && (cs.c_s - grid_advantage(q, 0.0)).abs() < 1e-3);
    }
}

#[test]
fn identical_outputs_reduce_to_the_best_decomposition() {
    // Wyner's common information of a doubly symmetric binary source with crossover p.
    let p: f64 = 0.2;
    let a1 = (1.0 - (1.0 - 2.0 * p).sqrt()) / 2.0;
    let wyner = 1.0 + h(p) - 2.0 * h(a1);
    let spec = problem(twin(0.0), Kernel::bsc("U", "V", p).unwrap());
    let b = SearchBudget::default();
    let r = min_r0_corollary(&spec, &b, 4).unwrap();
    check_witness(&r, &spec);
    let w = r.witness.as_ref().unwrap();
    assert!(w.advantage.abs() < 1e-12);

    let best = (1..=5)
        .map(|k| decompose_markov(spec.source(), spec.target(), k, &b, 100 + k as u64).unwrap())
        .filter(|d| d.residual <= 1e-6)
        .map(|d| {
            let j = compose_chain(&[spec.source().clone().into(), d.p_w1_given_u, d.p_v_given_w1]).unwrap();
            mutual_information(&j, &["U", "V"], &["W1"]).unwrap()
        })
        .fold(f64::INFINITY, f64::min);
    let r0 = r.r0_min.unwrap();
    assert!((r0 - best).abs() < 1e-3, "r0 {r0} vs best decomposition {best}");
    assert!((r0 - wyner).abs() < 1e-3, "r0 {r0} vs common information {wyner}");

    let copy_spec = problem(twin(0.0), copy());
    let c = min_r0_corollary(&copy_spec, &b, 4).unwrap();
    assert!((c.r0_min.unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn inner_and_corollary_agree_on_a_more_capable_channel() {
    let spec = problem(two_bsc(0.0, 0.25), copy());
    let b = SearchBudget::default();
    let i = min_r0_inner(&spec, &b, 3).unwrap();
    let c = min_r0_corollary(&spec, &b, 3).unwrap();
    check_witness(&i, &spec);
    assert!((i.r0_min.unwrap() - c.r0_min.unwrap()).abs() < 1e-3);
}

#[test]
fn degrading_the_eavesdropper_never_raises_the_rate() {
    let b = SearchBudget::default();
    let mut last = f64::INFINITY;
    for q in [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5] {
        let spec = problem(two_bsc(0.05, q), Kernel::bsc("U", "V", 0.2).unwrap());
        let p = min_r0_inner(&spec, &b, 21).unwrap();
        check_witness(&p, &spec);
        let r = p.r0_min.unwrap();
        assert!(r <= last + 1e-6, "q={q}: {r} > {last}");
        last = r;
    }
}

#[test]
fn noiseless_twin_channel_has_no_cheaper_witness_on_a_grid() {
    // Any exact factorization of V = U makes U a function of W, so I(UV;W) = H(U) = 1 while the
    // advantage is identically zero. The grid confirms the advantage over all inputs.
    let spec = problem(twin(0.0), copy());
    let p = min_r0_inner(&spec, &SearchBudget::default(), 0).unwrap();
    assert!((p.r0_min.unwrap() - 1.0).abs() < 1e-9);
    assert!(grid_advantage(0.0, 0.0).abs() < 1e-12);
    check_witness(&p, &spec);
}
