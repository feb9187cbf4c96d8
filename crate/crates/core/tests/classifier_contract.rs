use changeattr::models::{AffineScorer, Link, RecurrentClassifier, WindowMlp};
use changeattr::{
    argmax_increase, rng, select_target_class, wrapper_eval, wrapper_eval_perturbed, Classifier,
    TimeSeries, WindowSpec,
};
use ndarray::{Array1, Array2, Array3};
use proptest::prelude::*;

fn window(w: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut r = rng::rng(seed);
    Array2::from_shape_simple_fn((w, d), || rng::symmetric(&mut r, 1.5))
}

/// Largest central-difference mismatch (step 1e-4), relative to the largest gradient entry.
fn fd_error(f: &dyn Classifier, x: &Array2<f64>, class: usize) -> f64 {
    let g = f.grad(x.view(), class).unwrap();
    let scale = g.iter().fold(1e-8_f64, |m, v| m.max(v.abs()));
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for ((t, d), gv) in g.indexed_iter() {
        let mut xp = x.clone();
        xp[[t, d]] += h;
        let mut xm = x.clone();
        xm[[t, d]] -= h;
        let fd = (f.predict(xp.view()).unwrap()[class] - f.predict(xm.view()).unwrap()[class])
            / (2.0 * h);
        worst = worst.max((fd - gv).abs() / scale);
    }
    worst
}

fn models(w: usize, d: usize, c: usize, seed: u64) -> Vec<Box<dyn Classifier>> {
    vec![
        Box::new(AffineScorer::new(w, d, c, Link::Softmax, seed)),
        Box::new(WindowMlp::new(w, d, 5, c, seed)),
        Box::new(RecurrentClassifier::new(w, d, 4, c, seed)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn probabilistic_models_honour_the_contract(w in 2usize..9, d in 1usize..4, c in 2usize..4, seed in any::<u64>()) {
        let x = window(w, d, seed.wrapping_add(1));
        for f in models(w, d, c, seed) {
            let p = f.predict(x.view()).unwrap();
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.sum() - 1.0).abs() <= 1e-9);
            prop_assert_eq!(p.clone(), f.predict(x.view()).unwrap());
            for class in 0..c {
                prop_assert!(fd_error(f.as_ref(), &x, class) <= 1e-4);
                prop_assert_eq!(f.grad(x.view(), class).unwrap(), f.grad(x.view(), class).unwrap());
            }
            prop_assert!(f.predict(window(w + 1, d, 0).view()).is_err());
        }
    }

    #[test]
    fn wrapper_is_a_difference_of_simplex_points(seed in any::<u64>(), t1 in 3usize..15, gap in 0usize..4) {
        let spec = WindowSpec::new(4, 3).unwrap();
        let ts = TimeSeries::unlabeled("s", window(20, 2, seed)).unwrap();
        let f = WindowMlp::new(4, 2, 5, 3, seed);
        let g = wrapper_eval(&f, &ts, &spec, t1, t1 + gap).unwrap();
        prop_assert!(g.sum().abs() <= 1e-9);
        prop_assert!(g.mapv(f64::abs).sum() <= 2.0);
        if gap == 0 {
            prop_assert!(g.iter().all(|&v| v == 0.0));
        }
        let direct = wrapper_eval_perturbed(&f, ts.rows(t1 - 3, t1), ts.rows(t1 + gap - 3, t1 + gap)).unwrap();
        prop_assert_eq!(g, direct);
    }

    #[test]
    fn target_class_follows_class_permutation(seed in any::<u64>()) {
        let (w, d, c) = (3, 2, 4);
        let spec = WindowSpec::new(w, c).unwrap();
        let ts = TimeSeries::unlabeled("s", window(12, d, seed)).unwrap();
        let base = AffineScorer::new(w, d, c, Link::Softmax, seed);
        let perm = [2, 0, 3, 1];
        // new class i is old class perm[i]
        let weights = Array3::from_shape_fn((w, d, c), |(t, f, k)| base.weight(t, f, perm[k]));
        let permuted = AffineScorer::from_parts(&weights, &Array1::zeros(c), Link::Softmax).unwrap();
        let a = select_target_class(&base, &ts, &spec, 5, 7).unwrap();
        let b = select_target_class(&permuted, &ts, &spec, 5, 7).unwrap();
        prop_assert_eq!(perm[b.target_class], a.target_class);
        prop_assert!((a.delta - b.delta).abs() <= 1e-12);
    }
}

#[test]
fn argmax_ignores_a_common_shift() {
    let p1 = ndarray::array![0.1, 0.6, 0.3];
    let p2 = ndarray::array![0.3, 0.3, 0.4];
    let shifted = &p2 + 0.25;
    assert_eq!(
        argmax_increase(&p1, &p2).0,
        argmax_increase(&p1, &shifted).0
    );
}

#[test]
fn zero_affine_scores_are_the_bias() {
    let b = ndarray::array![0.25, -1.5];
    let f = AffineScorer::from_parts(&Array3::zeros((4, 2, 2)), &b, Link::IdentityScore).unwrap();
    let x = window(4, 2, 9);
    assert_eq!(f.predict(x.view()).unwrap(), b);
    assert!(f.grad(x.view(), 1).unwrap().iter().all(|&v| v == 0.0));
    assert!(!f.is_probabilistic());
}
