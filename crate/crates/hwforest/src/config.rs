//! Run configuration.
//!
//! The file format is flat `key = value` text. `#` starts a comment, blank
//! lines are ignored, and unknown keys are rejected. A `preset` line (`full`
//! or `desk`) is applied before every other key regardless of its position.
//!
//! ```text
//! preset = desk
//! format = idx
//! train = data/mnist5k/images-idx3-ubyte.gz
//! train.labels = data/mnist5k/labels-idx1-ubyte.gz
//! grains = [4, 6, 8]
//! screening = window
//! ```

use std::path::{Path, PathBuf};

use hwforest_core::{CascadeConfig, ForestKind, GrainConfig, ScanConfig, Screening, TaRule};
use serde::Serialize;

use crate::csv_io::{CsvOptions, Encoding, LabelColumn};
use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "HWFOREST_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Full-size forests, stride-1 scanning over every patch.
    Full,
    /// Reduced sizes that finish in minutes on one core.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Idx,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DataPaths {
    pub path: PathBuf,
    /// Label file, IDX only.
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub hash: Vec<bool>,
    pub screening: Vec<Screening>,
    /// Cross-validation folds over the training data; 1 uses the configured
    /// train/test split once.
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub preset: Preset,
    pub format: DataFormat,
    pub train: Option<DataPaths>,
    pub test: Option<DataPaths>,
    pub validation: Option<DataPaths>,
    pub validation_fraction: f64,
    pub subsample: f64,
    pub csv: CsvOptions,
    pub cascade: CascadeConfig,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub model: Option<PathBuf>,
    pub dumps: bool,
    /// Bin count used whenever binning screening is selected.
    pub binning_bins: usize,
    pub bench: BenchConfig,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let (trees, folds, levels, scan_trees, stride, patch_subsample) = match preset {
            Preset::Full => (50, 5, 10, 30, 1, 1.0),
            Preset::Desk => (30, 3, 5, 20, 2, 0.1),
        };
        RunConfig {
            preset,
            format: DataFormat::Idx,
            train: None,
            test: None,
            validation: None,
            validation_fraction: 0.2,
            subsample: 1.0,
            csv: CsvOptions::default(),
            cascade: CascadeConfig {
                forests: vec![ForestKind::Random, ForestKind::CompletelyRandom],
                trees_per_forest: trees,
                cv_folds: folds,
                max_levels: levels,
                screening: Screening::Window,
                ta_rule: TaRule::default(),
                seed: 0,
                scan: Some(ScanConfig {
                    grains: [4, 6, 8].iter().map(|&w| GrainConfig::new(w, stride, scan_trees)).collect(),
                    hash_screen: true,
                    patch_subsample,
                }),
            },
            threads: None,
            out: PathBuf::from("out"),
            model: None,
            dumps: false,
            binning_bins: 100,
            bench: BenchConfig { hash: vec![true, false], screening: vec![Screening::Window], folds: 1 },
        }
    }

    pub fn scan_mut(&mut self) -> &mut ScanConfig {
        self.cascade.scan.get_or_insert_with(ScanConfig::default)
    }

    /// Parses config text; relative data paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::ConfigSyntax {
                line: n + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let preset = match pairs.iter().find(|(k, _)| k == "preset") {
            Some((_, v)) => parse_preset(v)?,
            None => Preset::Full,
        };
        let mut cfg = RunConfig::preset(preset);
        for (k, v) in &pairs {
            if k != "preset" {
                cfg.set(k, v, base)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let paths = |slot: &mut Option<DataPaths>, v: &str| {
            let labels = slot.take().and_then(|d| d.labels);
            *slot = Some(DataPaths { path: path(v), labels });
        };
        let labels = |slot: &mut Option<DataPaths>, v: &str| match slot {
            Some(d) => d.labels = Some(path(v)),
            None => *slot = Some(DataPaths { path: PathBuf::new(), labels: Some(path(v)) }),
        };
        match key {
            "format" => {
                self.format = match value {
                    "idx" => DataFormat::Idx,
                    "csv" => DataFormat::Csv,
                    _ => return Err(Error::value(key, "expected idx or csv")),
                }
            }
            "train" => paths(&mut self.train, value),
            "train.labels" => labels(&mut self.train, value),
            "test" => paths(&mut self.test, value),
            "test.labels" => labels(&mut self.test, value),
            "validation" => paths(&mut self.validation, value),
            "validation.labels" => labels(&mut self.validation, value),
            "validation.fraction" => self.validation_fraction = fraction(key, value)?,
            "subsample" => self.subsample = fraction(key, value)?,
            "seed" => self.cascade.seed = number(key, value)?,
            "threads" => self.threads = Some(positive(key, value)?),
            "out" => self.out = path(value),
            "model" => self.model = Some(path(value)),
            "dumps" => self.dumps = switch(key, value)?,
            "csv.header" => self.csv.has_header = switch(key, value)?,
            "csv.delimiter" => {
                self.csv.delimiter = match value {
                    "tab" | "\\t" => b'\t',
                    v if v.len() == 1 => v.as_bytes()[0],
                    _ => return Err(Error::value(key, "expected a single character")),
                }
            }
            "csv.label_column" => self.csv.label_column = value.parse::<LabelColumn>().unwrap_or(LabelColumn::Last),
            "cascade.forests" => {
                self.cascade.forests = list(value)
                    .map(|f| match f {
                        "random" => Ok(ForestKind::Random),
                        "completely_random" => Ok(ForestKind::CompletelyRandom),
                        _ => Err(Error::value(key, format!("unknown forest kind {f:?}"))),
                    })
                    .collect::<Result<_>>()?
            }
            "cascade.trees" => self.cascade.trees_per_forest = positive(key, value)?,
            "cascade.folds" => self.cascade.cv_folds = number(key, value)?,
            "cascade.max_levels" => self.cascade.max_levels = positive(key, value)?,
            "screening" => self.cascade.screening = parse_screening(value, self.binning_bins)?,
            "screening.bins" => {
                let bins = positive(key, value)?;
                if let Screening::Binning { .. } = self.cascade.screening {
                    self.cascade.screening = Screening::Binning { bins };
                }
                self.bench.screening.iter_mut().for_each(|s| {
                    if let Screening::Binning { .. } = s {
                        *s = Screening::Binning { bins };
                    }
                });
                self.binning_bins = bins;
            }
            "ta.error_fraction" => self.cascade.ta_rule.error_fraction = fraction_incl_zero(key, value)?,
            "grains" => {
                let sizes = parse_grains(value).map_err(|m| Error::value(key, m))?;
                let (stride, trees) = self.grain_defaults();
                self.scan_mut().grains = sizes.into_iter().map(|w| GrainConfig::new(w, stride, trees)).collect();
            }
            "stride" => {
                let s = positive(key, value)?;
                self.scan_mut().grains.iter_mut().for_each(|g| g.stride = s);
            }
            "scan.trees" => {
                let t = positive(key, value)?;
                self.scan_mut().grains.iter_mut().for_each(|g| g.n_trees = t);
            }
            "scan.hash_screen" => self.scan_mut().hash_screen = switch(key, value)?,
            "scan.patch_subsample" => self.scan_mut().patch_subsample = fraction(key, value)?,
            "bench.hash" => self.bench.hash = list(value).map(|v| switch(key, v)).collect::<Result<_>>()?,
            "bench.screening" => {
                let bins = self.binning_bins;
                self.bench.screening = list(value).map(|v| parse_screening(v, bins)).collect::<Result<_>>()?
            }
            "bench.folds" => self.bench.folds = positive(key, value)?,
            k if k.starts_with("encode.") => {
                let col = &k["encode.".len()..];
                let enc: Encoding = value.parse().map_err(|m: String| Error::value(key, m))?;
                self.csv.encodings.insert(col.to_string(), enc);
            }
            _ => return Err(Error::UnknownConfigKey(key.to_string())),
        }
        Ok(())
    }

    fn grain_defaults(&self) -> (usize, usize) {
        self.cascade.scan.as_ref().and_then(|s| s.grains.first()).map_or((1, 30), |g| (g.stride, g.n_trees))
    }

    /// Effective worker count: explicit setting, then the environment.
    pub fn resolved_threads(&self) -> Result<Option<usize>> {
        if self.threads.is_some() {
            return Ok(self.threads);
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => positive(THREADS_ENV, v.trim()).map(Some),
            _ => Ok(None),
        }
    }

    /// Checks that every configured input file exists.
    pub fn check_paths(&self, need_test: bool) -> Result<()> {
        let train = self.train.as_ref().ok_or(Error::MissingSetting("train"))?;
        let mut all = vec![("train", train)];
        if need_test {
            all.push(("test", self.test.as_ref().ok_or(Error::MissingSetting("test"))?));
        } else if let Some(t) = &self.test {
            all.push(("test", t));
        }
        if let Some(v) = &self.validation {
            all.push(("validation", v));
        }
        for (_, d) in all {
            check_data_paths(self.format, d)?;
        }
        Ok(())
    }
}

pub(crate) fn check_data_paths(format: DataFormat, d: &DataPaths) -> Result<()> {
    let missing = |p: &Path| Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"));
    if !d.path.is_file() {
        return Err(missing(&d.path));
    }
    if format == DataFormat::Idx {
        let labels = d.labels.as_ref().ok_or(Error::MissingSetting("<set>.labels"))?;
        if !labels.is_file() {
            return Err(missing(labels));
        }
    }
    Ok(())
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.trim_matches(|c| c == '[' || c == ']').split(',').map(str::trim).filter(|s| !s.is_empty())
}

pub fn parse_grains(v: &str) -> std::result::Result<Vec<usize>, String> {
    let sizes: Vec<usize> = list(v)
        .map(|s| s.parse::<usize>().ok().filter(|&w| w > 0).ok_or_else(|| format!("bad window size {s:?}")))
        .collect::<std::result::Result<_, _>>()?;
    if sizes.is_empty() {
        return Err("at least one window size is required".into());
    }
    Ok(sizes)
}

pub fn parse_screening(v: &str, bins: usize) -> Result<Screening> {
    match v {
        "window" => Ok(Screening::Window),
        "binning" => Ok(Screening::Binning { bins }),
        "none" => Ok(Screening::None),
        _ => Err(Error::value("screening", format!("expected window, binning or none, got {v:?}"))),
    }
}

fn parse_preset(v: &str) -> Result<Preset> {
    match v {
        "full" => Ok(Preset::Full),
        "desk" => Ok(Preset::Desk),
        _ => Err(Error::value("preset", "expected full or desk")),
    }
}

pub fn switch(key: &str, v: &str) -> Result<bool> {
    match v {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::value(key, format!("expected on or off, got {v:?}"))),
    }
}

fn number<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::value(key, format!("not a valid number: {v:?}")))
}

fn positive(key: &str, v: &str) -> Result<usize> {
    let n: usize = number(key, v)?;
    if n == 0 {
        return Err(Error::value(key, "must be at least 1"));
    }
    Ok(n)
}

fn fraction(key: &str, v: &str) -> Result<f64> {
    let f: f64 = number(key, v)?;
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::value(key, "must lie in (0, 1]"));
    }
    Ok(f)
}

fn fraction_incl_zero(key: &str, v: &str) -> Result<f64> {
    let f: f64 = number(key, v)?;
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::value(key, "must lie in [0, 1]"));
    }
    Ok(f)
}
