use changeattr::models::WindowMlp;
use changeattr::paths::{swing_attribute, IntegratorConfig};
use changeattr::{
    rng, select_target_class, AttributionMap, Attributor, Method, MethodConfig, TimeSeries,
    WindowSpec,
};
use ndarray::Array2;

fn series(len: usize, dim: usize, seed: u64) -> TimeSeries {
    let mut r = rng::rng(seed);
    // a random walk, so consecutive windows are close like real data
    let mut values = Array2::zeros((len, dim));
    for t in 1..len {
        for d in 0..dim {
            values[[t, d]] = values[[t - 1, d]] + rng::symmetric(&mut r, 0.5);
        }
    }
    TimeSeries::unlabeled(format!("walk-{seed}"), values).unwrap()
}

#[test]
fn every_method_emits_the_same_shape() {
    let spec = WindowSpec::new(6, 2).unwrap();
    let ts = series(30, 3, 1);
    let f = WindowMlp::new(6, 3, 5, 2, 2);
    for gap in 1..6 {
        let target = select_target_class(&f, &ts, &spec, 12, 12 + gap).unwrap();
        for m in Method::ALL {
            let map = MethodConfig::new(m)
                .attribute(&f, &ts, &spec, &target)
                .unwrap();
            assert_eq!(map.values.dim(), (gap + 6, 3), "{m}");
            assert_eq!(map.start_time, 7);
            assert_eq!(map.method_name, m.name());
            map.check_shape(&spec, 3).unwrap();
        }
    }
}

#[test]
fn maps_round_trip_through_json() {
    let spec = WindowSpec::new(6, 2).unwrap();
    let ts = series(30, 3, 2);
    let f = WindowMlp::new(6, 3, 5, 2, 3);
    let target = select_target_class(&f, &ts, &spec, 12, 13).unwrap();
    let map = MethodConfig::new(Method::Swing)
        .attribute(&f, &ts, &spec, &target)
        .unwrap();
    let text = serde_json::to_string(&map).unwrap();
    assert!(text.starts_with("{\"method\":\"swing\",\"t1\":12,\"t2\":13,\"class\":"));
    let back: AttributionMap = serde_json::from_str(&text).unwrap();
    assert_eq!(back, map);
}

#[test]
fn hidden_unit_order_does_not_matter() {
    let spec = WindowSpec::new(6, 2).unwrap();
    let ts = series(40, 2, 3);
    let f = WindowMlp::new(6, 2, 7, 2, 4);
    let twin = f.permute_hidden_units(&[3, 6, 0, 5, 1, 2, 4]).unwrap();
    let cfg = IntegratorConfig::default();
    for t1 in [7, 15, 30] {
        for gap in [1, 3] {
            let target = select_target_class(&f, &ts, &spec, t1, t1 + gap).unwrap();
            let a = swing_attribute(&f, &ts, &spec, &target, &cfg, 1).unwrap();
            let b = swing_attribute(&twin, &ts, &spec, &target, &cfg, 1).unwrap();
            let worst = (&a.values - &b.values)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(worst <= 1e-9, "{worst}");
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let spec = WindowSpec::new(6, 2).unwrap();
    let ts = series(30, 3, 4);
    let f = WindowMlp::new(6, 3, 5, 2, 5);
    let target = select_target_class(&f, &ts, &spec, 12, 14).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                MethodConfig::new(Method::Swing)
                    .attribute(&f, &ts, &spec, &target)
                    .unwrap()
            })
    };
    assert_eq!(run(1).values, run(4).values);
}
