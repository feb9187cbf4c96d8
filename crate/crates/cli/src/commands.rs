use std::io::Write;

use changeattr::datagen::{gen_delayed_spike, gen_switch_feature, make_splits};
use changeattr::metrics::{evaluate_suite, MetricSummary, SampleRef, SuiteConfig, METRIC_NAMES};
use changeattr::models::{
    train_sgd, windows_from_series, AffineScorer, Checkpoint, Link, Model, RecurrentClassifier,
    TrainConfig, WindowMlp,
};
use changeattr::paths::IntegratorConfig;
use changeattr::{
    AttributionMap, Attributor, Classifier, Method, MethodConfig, MetricReport, TimeSeries,
    WindowSpec,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{
    AttribCmdConfig, Dataset, GenDataConfig, ModelKind, ReportCmdConfig, SplitName, TrainCmdConfig,
};
use crate::error::{CliError, Result};
use crate::layout::{self, Layout};
use crate::targets::{choose_targets, TargetPlan};

pub fn gen_data(out: &Layout, cfg: &GenDataConfig) -> Result<()> {
    let series = match cfg.dataset {
        Dataset::SwitchFeature => gen_switch_feature(&cfg.switch_feature())?,
        Dataset::DelayedSpike => gen_delayed_spike(&cfg.delayed_spike())?,
    };
    let splits = make_splits(series.len(), cfg.split, cfg.seed)?;
    let dir = out.dir("data")?;
    let stem = cfg.stem();
    let path = dir.join(format!("{stem}.jsonl"));
    let mut w = layout::create(&path)?;
    changeattr::series::write_jsonl(&mut w, &series)?;
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let generator = match cfg.dataset {
        Dataset::SwitchFeature => serde_json::to_value(cfg.switch_feature()),
        Dataset::DelayedSpike => serde_json::to_value(cfg.delayed_spike()),
    }
    .map_err(changeattr::Error::from)?;
    let sidecar = json!({"dataset": cfg.dataset, "split": cfg.split, "generator": generator});
    layout::write_json(&dir.join(format!("{stem}.config.json")), &sidecar)?;
    layout::write_json(&dir.join(format!("{stem}.splits.json")), &splits)?;
    println!(
        "wrote {} series to {} (train {}, val {}, test {})",
        series.len(),
        path.display(),
        splits.train.len(),
        splits.val.len(),
        splits.test.len()
    );
    Ok(())
}

fn pick(series: &[TimeSeries], idx: &[usize]) -> Result<Vec<TimeSeries>> {
    idx.iter()
        .map(|&i| {
            series.get(i).cloned().ok_or_else(|| {
                changeattr::Error::Schema(format!("split refers to series {i} of {}", series.len()))
                    .into()
            })
        })
        .collect()
}

fn accuracy(f: &dyn Classifier, series: &[TimeSeries], spec: &WindowSpec) -> Result<Option<f64>> {
    let windows = windows_from_series(series, spec)?;
    if windows.is_empty() {
        return Ok(None);
    }
    let hits = windows
        .par_iter()
        .map(|(x, y)| {
            let p = f.predict(x.view())?;
            let best = (0..p.len()).fold(0, |b, c| if p[c] > p[b] { c } else { b });
            Ok(usize::from(best == *y))
        })
        .collect::<changeattr::Result<Vec<_>>>()?;
    Ok(Some(hits.iter().sum::<usize>() as f64 / hits.len() as f64))
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainSidecar {
    config: TrainCmdConfig,
    loss_trace: Vec<f64>,
    accuracy: Map<String, Value>,
}

pub fn train(out: &Layout, cfg: &TrainCmdConfig) -> Result<()> {
    let data_path = out.data_path(&cfg.data);
    let series = layout::read_series(&data_path)?;
    let first = series.first().ok_or(changeattr::Error::EmptyDataset)?;
    let features = first.num_features();
    let classes = series
        .iter()
        .flat_map(|s| s.labels.iter().copied())
        .max()
        .unwrap_or(0)
        .max(1)
        + 1;
    let spec = WindowSpec::new(cfg.window, classes)?;
    let splits = layout::read_splits(&data_path).ok();
    let train_set = match &splits {
        Some(s) => pick(&series, &s.train)?,
        None => series.clone(),
    };
    let data = windows_from_series(&train_set, &spec)?;
    let tc = TrainConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        l2: cfg.l2,
    };
    let (w, h, c, seed) = (cfg.window, cfg.hidden, classes, cfg.seed);
    let (model, report) = match cfg.model {
        ModelKind::Recurrent => {
            let (m, r) = train_sgd(
                RecurrentClassifier::new(w, features, h, c, seed),
                &data,
                &tc,
            )?;
            (Model::Recurrent(m), r)
        }
        ModelKind::Mlp => {
            let (m, r) = train_sgd(WindowMlp::new(w, features, h, c, seed), &data, &tc)?;
            (Model::Mlp(m), r)
        }
        ModelKind::Affine => {
            let (m, r) = train_sgd(
                AffineScorer::new(w, features, c, Link::Softmax, seed),
                &data,
                &tc,
            )?;
            (Model::Affine(m), r)
        }
    };

    let mut acc = Map::new();
    let named: Vec<(&str, Vec<TimeSeries>)> = match &splits {
        Some(s) => vec![
            ("train", train_set),
            ("val", pick(&series, &s.val)?),
            ("test", pick(&series, &s.test)?),
        ],
        None => vec![("all", series.clone())],
    };
    for (name, set) in &named {
        acc.insert((*name).into(), json!(accuracy(&model, set, &spec)?));
    }

    let dir = out.dir("models")?;
    let stem = cfg
        .name
        .clone()
        .unwrap_or_else(|| cfg.data.trim_end_matches(".jsonl").to_string());
    let path = dir.join(format!("{stem}.json"));
    Checkpoint::from_model(&model, cfg.seed).save(&path)?;
    let sidecar = TrainSidecar {
        config: cfg.clone(),
        loss_trace: report.loss_trace.clone(),
        accuracy: acc.clone(),
    };
    layout::write_json(&dir.join(format!("{stem}.train.json")), &sidecar)?;
    println!(
        "trained {} model, loss {:.4} -> {:.4}; wrote {}",
        model.kind(),
        report.loss_trace[0],
        report.loss_trace.last().copied().unwrap_or(f64::NAN),
        path.display()
    );
    for (name, a) in &acc {
        if let Some(a) = a.as_f64() {
            println!("  {name} accuracy {a:.4}");
        }
    }
    Ok(())
}

/// Everything `attribute` and `evaluate` share: data, model, attributor and targets.
pub struct Prepared {
    pub series: Vec<TimeSeries>,
    pub model: Model,
    pub spec: WindowSpec,
    pub method: MethodConfig,
    pub samples: Vec<SampleRef>,
}

pub fn prepare(out: &Layout, cfg: &AttribCmdConfig) -> Result<Prepared> {
    let method = MethodConfig {
        method: cfg.method()?,
        integrator: IntegratorConfig::new(cfg.n_samples)?,
        offset: cfg.offset,
        seed: cfg.seed,
    };
    if cfg.offset == 0 && matches!(method.method, Method::Swing | Method::Rbs) {
        return Err(CliError::Config("offset must be at least 1".into()));
    }
    let data_path = out.data_path(&cfg.data);
    let series = layout::read_series(&data_path)?;
    let model = layout::read_model(&out.model_path(cfg.model_stem()))?;
    let (window, features) = model.input_shape();
    if let Some(ts) = series.iter().find(|s| s.num_features() != features) {
        return Err(changeattr::Error::Schema(format!(
            "series {} has {} features, the model expects {features}",
            ts.series_id,
            ts.num_features()
        ))
        .into());
    }
    let spec = WindowSpec::new(window, model.num_classes())?;
    let indices: Vec<usize> = match cfg.split {
        SplitName::All => (0..series.len()).collect(),
        split => {
            let s = layout::read_splits(&data_path)?;
            match split {
                SplitName::Train => s.train,
                SplitName::Val => s.val,
                _ => s.test,
            }
        }
    };
    // Targets depend on the offset but not on the method, so every method
    // in a comparison explains the same changes.
    let plan = TargetPlan {
        gap: cfg.gap,
        history: cfg.offset,
        per_series: cfg.targets_per_series,
        seed: cfg.seed,
    };
    let samples = choose_targets(&model, &series, &indices, &spec, &plan)?;
    if samples.is_empty() {
        return Err(changeattr::Error::EmptyDataset.into());
    }
    Ok(Prepared {
        series,
        model,
        spec,
        method,
        samples,
    })
}

#[derive(Serialize)]
struct AttributionRecord<'a> {
    sample: usize,
    series_id: &'a str,
    #[serde(flatten)]
    map: &'a AttributionMap,
}

pub fn attribute(out: &Layout, cfg: &AttribCmdConfig) -> Result<()> {
    let p = prepare(out, cfg)?;
    let maps = p
        .samples
        .par_iter()
        .map(|s| {
            p.method
                .attribute(&p.model, &p.series[s.series], &p.spec, &s.target)
        })
        .collect::<changeattr::Result<Vec<_>>>()?;

    let dir = out.dir("attrib")?;
    let name = p.method.name().to_string();
    let json_path = dir.join(format!("{name}.jsonl"));
    let csv_path = dir.join(format!("{name}.csv"));
    let mut jw = layout::create(&json_path)?;
    let mut cw = csv::Writer::from_writer(layout::create(&csv_path)?);
    let csv_err = |e: csv::Error| CliError::io(&csv_path, std::io::Error::other(e));
    cw.write_record([
        "sample",
        "series_id",
        "t1",
        "t2",
        "time",
        "feature",
        "value",
    ])
    .map_err(csv_err)?;
    for (i, (s, map)) in p.samples.iter().zip(&maps).enumerate() {
        let id = &p.series[s.series].series_id;
        let rec = AttributionRecord {
            sample: i,
            series_id: id,
            map,
        };
        serde_json::to_writer(&mut jw, &rec).map_err(changeattr::Error::from)?;
        writeln!(jw).map_err(|e| CliError::io(&json_path, e))?;
        for ((r, d), v) in map.values.indexed_iter() {
            cw.serialize((
                i,
                id,
                map.target.t1,
                map.target.t2,
                map.start_time + r,
                d,
                v,
            ))
            .map_err(csv_err)?;
        }
    }
    jw.flush().map_err(|e| CliError::io(&json_path, e))?;
    cw.flush().map_err(|e| CliError::io(&csv_path, e))?;
    let worst = maps
        .iter()
        .map(|m| (m.total() - m.target.delta).abs())
        .fold(0.0, f64::max);
    println!(
        "{name}: {} maps written to {} (max |sum - delta| = {worst:.3e})",
        maps.len(),
        json_path.display()
    );
    Ok(())
}

pub fn evaluate(out: &Layout, cfg: &AttribCmdConfig) -> Result<MetricReport> {
    let p = prepare(out, cfg)?;
    let suite = SuiteConfig {
        k: cfg.k,
        substitution: cfg.substitution,
    };
    let report = evaluate_suite(&p.model, &p.series, &p.samples, &p.method, &p.spec, &suite)?;
    let dir = out.dir("reports")?;
    let name = p.method.name();
    let csv_path = dir.join(format!("{name}.csv"));
    let mut w = layout::create(&csv_path)?;
    report.write_csv(&mut w)?;
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    layout::write_json(
        &dir.join(format!("{name}.summary.json")),
        &report.summary_json(),
    )?;

    println!(
        "{name}: {} targets, K={}, {} (x1e3 except corr)",
        report.samples.len(),
        report.k,
        report.substitution.name()
    );
    for (metric, s) in report.summaries() {
        println!(
            "  {metric:<6} {:>20}  n={} missing={}",
            s.display(4),
            s.n,
            s.missing
        );
    }
    Ok(report)
}

/// One method's summary as read back from `<method>.summary.json`.
fn read_summary(path: &std::path::Path) -> Result<(String, Vec<MetricSummary>)> {
    let v: Value = layout::read_json(path)?;
    let schema = |what: &str| changeattr::Error::Schema(format!("{}: {what}", path.display()));
    let method = v
        .get("method")
        .and_then(Value::as_str)
        .ok_or_else(|| schema("missing \"method\""))?
        .to_string();
    let metrics = METRIC_NAMES
        .iter()
        .map(|m| {
            let entry = v
                .get(*m)
                .cloned()
                .ok_or_else(|| schema(&format!("missing {m:?}")))?;
            serde_json::from_value(entry).map_err(|e| schema(&format!("{m}: {e}")))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((method, metrics))
}

fn method_rank(name: &str) -> (usize, String) {
    let pos = Method::ALL
        .iter()
        .position(|m| m.name() == name)
        .unwrap_or(Method::ALL.len());
    (pos, name.to_string())
}

pub fn report(out: &Layout, cfg: &ReportCmdConfig) -> Result<()> {
    let dir = out.root.join("reports");
    let mut names = cfg.methods.clone();
    if names.is_empty() {
        let entries = std::fs::read_dir(&dir).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::MissingFile(dir.clone()),
            _ => CliError::io(&dir, e),
        })?;
        for entry in entries {
            let entry = entry.map_err(|e| CliError::io(&dir, e))?;
            let file = entry.file_name().to_string_lossy().into_owned();
            if let Some(stem) = file.strip_suffix(".summary.json") {
                names.push(stem.to_string());
            }
        }
        names.sort_by_key(|n| method_rank(n));
    } else {
        for n in &names {
            n.parse::<Method>()?;
        }
    }
    if names.is_empty() {
        return Err(CliError::MissingFile(dir.join("*.summary.json")));
    }
    let rows = names
        .iter()
        .map(|n| read_summary(&dir.join(format!("{n}.summary.json"))))
        .collect::<Result<Vec<_>>>()?;

    let table = dir.join("table.csv");
    let mut w = csv::Writer::from_writer(layout::create(&table)?);
    let csv_err = |e: csv::Error| CliError::io(&table, std::io::Error::other(e));
    let mut header = vec!["method".to_string()];
    for m in METRIC_NAMES {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_stderr"));
    }
    w.write_record(&header).map_err(csv_err)?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (method, metrics) in &rows {
        let mut rec = vec![method.clone()];
        for s in metrics {
            rec.push(cell(s.mean));
            rec.push(cell(s.stderr));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(&table, e))?;

    print!("{:<10}", "method");
    for m in METRIC_NAMES {
        print!(" {m:>16}");
    }
    println!();
    for (method, metrics) in &rows {
        print!("{method:<10}");
        for s in metrics {
            print!(" {:>16}", s.display(3));
        }
        println!();
    }
    println!("values x1e3 except corr; wrote {}", table.display());
    Ok(())
}
