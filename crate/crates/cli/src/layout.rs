use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use changeattr::datagen::Splits;
use changeattr::models::{Checkpoint, Model};
use changeattr::TimeSeries;

use crate::error::{CliError, Result};

/// `out/{data,models,attrib,reports}`.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn dir(&self, sub: &str) -> Result<PathBuf> {
        let d = self.root.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| CliError::io(&d, e))?;
        Ok(d)
    }

    /// A stem names `out/data/<stem>.jsonl`; anything ending in `.jsonl` is a path.
    pub fn data_path(&self, stem: &str) -> PathBuf {
        if stem.ends_with(".jsonl") {
            PathBuf::from(stem)
        } else {
            self.root.join("data").join(format!("{stem}.jsonl"))
        }
    }

    pub fn model_path(&self, stem: &str) -> PathBuf {
        if stem.ends_with(".json") {
            PathBuf::from(stem)
        } else {
            self.root.join("models").join(format!("{stem}.json"))
        }
    }
}

pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}"))
}

fn open(path: &Path) -> Result<File> {
    if !path.exists() {
        return Err(CliError::MissingFile(path.to_path_buf()));
    }
    File::open(path).map_err(|e| CliError::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(changeattr::Error::from)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn read_series(path: &Path) -> Result<Vec<TimeSeries>> {
    Ok(changeattr::series::read_jsonl(BufReader::new(open(path)?))?)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let reader = BufReader::new(open(path)?);
    Ok(serde_json::from_reader(reader).map_err(changeattr::Error::from)?)
}

pub fn read_model(path: &Path) -> Result<Model> {
    open(path)?;
    Ok(Checkpoint::load(path)?.into_model()?)
}

pub fn read_splits(data: &Path) -> Result<Splits> {
    read_json(&sibling(data, ".splits.json"))
}
