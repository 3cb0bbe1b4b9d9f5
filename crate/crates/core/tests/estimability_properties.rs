use nalgebra::DMatrix;
use rand::Rng;
use sme_core::estimability::triangular;
use sme_core::rng::{seeded, standard_normal_matrix};
use sme_core::{
    check_estimability, dimension_bound_check, four_cycle_graph, is_n_estimable, trace_inner,
    ModelSpace, SymMatrix,
};

/// Modified Gram–Schmidt under the trace inner product, run twice; drops
/// directions that vanish.
fn orthogonalize(mats: &[SymMatrix]) -> Vec<SymMatrix> {
    let mut out: Vec<SymMatrix> = Vec::new();
    for m in mats {
        let scale = trace_inner(m, m).unwrap().sqrt();
        let mut v = m.clone();
        for _ in 0..2 {
            for q in &out {
                let c = trace_inner(&v, q).unwrap();
                v = v.axpy(-c, q).unwrap();
            }
        }
        let norm = trace_inner(&v, &v).unwrap().sqrt();
        if norm > 1e-8 * scale {
            out.push(v.scale(1.0 / norm));
        }
    }
    out
}

fn space(p: usize, gens: Vec<SymMatrix>) -> ModelSpace {
    let labels = (0..gens.len()).map(|u| format!("g{u}")).collect();
    ModelSpace::new(p, gens, labels).unwrap()
}

fn random_sym<R: Rng>(r: &mut R, p: usize) -> SymMatrix {
    let a = standard_normal_matrix(r, p, p);
    SymMatrix::from_dense(&((&a + a.transpose()) * 0.5)).unwrap()
}

/// Random `d`-dimensional space; the first generator is `I_p` when
/// `with_identity`.
fn random_space<R: Rng>(r: &mut R, p: usize, d: usize, with_identity: bool) -> ModelSpace {
    let mut raw = Vec::new();
    if with_identity {
        raw.push(SymMatrix::identity(p));
    }
    while raw.len() < d {
        raw.push(random_sym(r, p));
    }
    space(p, orthogonalize(&raw))
}

fn congruent(l: &ModelSpace, a: &DMatrix<f64>) -> ModelSpace {
    let mapped: Vec<SymMatrix> = l
        .generators()
        .iter()
        .map(|g| SymMatrix::from_dense(&(a * g.to_dense() * a.transpose())).unwrap())
        .collect();
    space(l.p(), orthogonalize(&mapped))
}

fn sub_space(l: &ModelSpace, keep: &[usize]) -> ModelSpace {
    space(l.p(), keep.iter().map(|&u| l.generators()[u].clone()).collect())
}

#[test]
fn subspaces_of_estimable_spaces_are_estimable() {
    let mut r = seeded(11);
    let mut checked = 0;
    for case in 0..30 {
        let p = r.random_range(3..=5);
        let n = r.random_range(1..p);
        let d = r.random_range(2..=triangular(p) - triangular(p - n));
        let l = random_space(&mut r, p, d, case % 2 == 0);
        if !is_n_estimable(&l, n, case, 3) {
            continue;
        }
        for _ in 0..4 {
            let keep: Vec<usize> = (0..l.dim()).filter(|_| r.random_bool(0.5)).collect();
            if keep.is_empty() {
                continue;
            }
            checked += 1;
            assert!(is_n_estimable(&sub_space(&l, &keep), n, case + 100, 3), "case {case} keep {keep:?}");
        }
    }
    assert!(checked >= 20, "only {checked} subspaces checked");
}

#[test]
fn estimability_is_monotone_in_n() {
    let mut r = seeded(12);
    for case in 0..20u64 {
        let p = r.random_range(3..=6);
        let d = r.random_range(1..=triangular(p));
        let l = random_space(&mut r, p, d, false);
        let mut seen = false;
        for n in 1..=p {
            let est = is_n_estimable(&l, n, case, 3);
            assert!(!seen || est, "case {case}: estimable below n = {n} but not at it");
            seen |= est;
        }
        assert!(seen, "every space is p-estimable");
    }
}

#[test]
fn congruence_preserves_the_verdict() {
    let mut r = seeded(13);
    let mut spaces = vec![
        (ModelSpace::from_graph(&four_cycle_graph()), 2),
        (ModelSpace::from_graph(&four_cycle_graph()), 3),
        (ModelSpace::jordan_counterexample(), 1),
        (ModelSpace::jordan_counterexample(), 2),
    ];
    for _ in 0..8 {
        let p = r.random_range(3..=5);
        let d = r.random_range(1..=triangular(p));
        let n = r.random_range(1..=p);
        spaces.push((random_space(&mut r, p, d, false), n));
    }
    for (i, (l, n)) in spaces.iter().enumerate() {
        let before = is_n_estimable(l, *n, 1, 3);
        for _ in 0..3 {
            let a = standard_normal_matrix(&mut r, l.p(), l.p()) + DMatrix::identity(l.p(), l.p()) * 2.0;
            let image = congruent(l, &a);
            assert_eq!(image.dim(), l.dim());
            assert_eq!(is_n_estimable(&image, *n, 2, 3), before, "space {i}, n = {n}");
        }
    }
}

#[test]
fn spaces_with_identity_are_estimable_one_short_of_p() {
    let mut r = seeded(14);
    for p in 3..=5 {
        let n = p - 1;
        for _ in 0..5 {
            let d = r.random_range(1..=triangular(p) - 1);
            let l = random_space(&mut r, p, d, true);
            assert!(l.contains_identity());
            assert!(is_n_estimable(&l, n, 7, 3), "p = {p}, d = {d}");
        }
    }
}

#[test]
fn failing_the_bound_implies_not_estimable() {
    let mut r = seeded(15);
    for case in 0..40u64 {
        let p = r.random_range(2..=5);
        let n = r.random_range(1..p);
        let bound = triangular(p) - triangular(p - n);
        let d = r.random_range(bound + 1..=triangular(p));
        let l = random_space(&mut r, p, d, case % 3 == 0);
        assert!(!dimension_bound_check(l.dim(), p, n));
        let report = check_estimability(&l, n, case, 3);
        assert!(!report.estimable, "case {case}: p={p} n={n} d={}", l.dim());
        assert!(report.best_relative_singular_value <= 1e-10);
    }
}

#[test]
fn counterexample_satisfies_bound_but_is_not_estimable() {
    let l = ModelSpace::jordan_counterexample();
    assert!(dimension_bound_check(4, 4, 1));
    let report = check_estimability(&l, 1, 3, 5);
    assert!(!report.estimable);
    assert!(is_n_estimable(&l, 2, 3, 3));
}
