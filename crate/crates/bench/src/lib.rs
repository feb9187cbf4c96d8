//! Fixtures shared by the benchmarks.

use changeattr::datagen::{gen_switch_feature, SwitchFeatureConfig};
use changeattr::models::RecurrentClassifier;
use changeattr::{select_target_class, ChangeTarget, TimeSeries, WindowSpec};

pub struct Fixture {
    pub model: RecurrentClassifier,
    pub series: Vec<TimeSeries>,
    pub spec: WindowSpec,
    pub target: ChangeTarget,
}

/// An untrained recurrent classifier (H=16) on Switch-Feature data with
/// window `w`, and a target `t -> t + gap` on the first series.
pub fn fixture(w: usize, gap: usize) -> Fixture {
    let series = gen_switch_feature(&SwitchFeatureConfig {
        num_series: 4,
        seq_len: 2 * w + 10,
        window: w,
        seed: 1,
        ..SwitchFeatureConfig::default()
    })
    .expect("generator config is valid");
    let spec = WindowSpec::new(w, 2).expect("w >= 2");
    let model = RecurrentClassifier::new(w, 3, 16, 2, 1);
    let target =
        select_target_class(&model, &series[0], &spec, w + 2, w + 2 + gap).expect("target fits");
    Fixture {
        model,
        series,
        spec,
        target,
    }
}
