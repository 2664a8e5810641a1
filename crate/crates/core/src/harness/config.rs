//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment. Keys are the long CLI flag
//! names with `-` or `_` interchangeable; later settings override earlier
//! ones, so a file can be loaded first and flags applied on top.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::committee::{CommitteeConfig, CommitteeMethod};
use crate::data::DATA_ROOT_ENV;
use crate::error::{Error, Result};
use crate::mlp::{CoverLoss, MixerMode, MlpConfig};
use crate::par::Execution;
use crate::perceptron::{PatternLoss, PerceptronConfig, PerceptronMethod};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Perceptron,
    Committee,
    Mlp,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Perceptron => "perceptron",
            Model::Committee => "committee",
            Model::Mlp => "mlp",
        })
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perceptron" => Ok(Model::Perceptron),
            "committee" => Ok(Model::Committee),
            "mlp" => Ok(Model::Mlp),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

/// Settings shared by every model.
pub const COMMON_KEYS: &[&str] = &["model", "trials", "seed", "workers", "exec", "timing", "out"];

pub const PERCEPTRON_KEYS: &[&str] = &[
    "n", "alpha", "m", "method", "kernel", "mu", "sigma", "sperm", "dest_s", "gamma", "tmax", "tmin", "dt", "loss",
];

pub const COMMITTEE_KEYS: &[&str] = &[
    "data", "n", "k", "m", "method", "kernel", "mu", "sigma", "sperm", "dest_s", "batch", "epochs", "lr", "lr_decay",
    "beta0", "beta_growth", "loss_stop", "init_scale", "coupling", "coupling_growth", "coupling_max",
    "sign_collapse", "p_train", "p_test", "class_a", "class_b", "threshold",
];

pub const MLP_KEYS: &[&str] = &[
    "data", "arch", "m", "kernel", "mu", "sigma", "sperm", "mode", "blocks", "shared_mixers", "cover_loss", "lr",
    "momentum", "nesterov", "batch", "epochs", "init_noise", "eval_batch", "train_limit", "test_limit",
    "checkpoint", "precision",
];

/// Keys accepted for `model`, common ones first.
pub fn keys(model: Model) -> Vec<&'static str> {
    let own = match model {
        Model::Perceptron => PERCEPTRON_KEYS,
        Model::Committee => COMMITTEE_KEYS,
        Model::Mlp => MLP_KEYS,
    };
    COMMON_KEYS.iter().chain(own).copied().collect()
}

/// Canonical key spelling: lower case, `-` as `_`.
pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Where committee data comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum CommitteeData {
    /// random committee teacher, regenerated per trial from its seed
    Synthetic { n: usize, p_train: usize, p_test: usize },
    /// two classes of an IDX directory, binarized and subsampled per trial
    Images {
        dir: PathBuf,
        class_a: u8,
        class_b: u8,
        threshold: f64,
        p_train: usize,
        p_test: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpRun {
    pub model: MlpConfig,
    /// IDX directory; relative paths resolve under the data root
    pub data: Option<PathBuf>,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    /// write each trial's covers to `<checkpoint>.trial<t>.mcvr`
    pub checkpoint: Option<PathBuf>,
    pub precision_bits: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: Model,
    pub trials: usize,
    pub base_seed: u64,
    /// 0 keeps the default pool size
    pub workers: usize,
    pub exec: Execution,
    /// record wall-clock milliseconds (off: the column is written as 0)
    pub timing: bool,
    pub out: Option<PathBuf>,
    pub perceptron: PerceptronConfig,
    pub committee: CommitteeConfig,
    pub committee_data: CommitteeData,
    pub mlp: MlpRun,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',').map(|x| parse(key, x.trim())).collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn opt_usize(key: &str, v: &str) -> Result<Option<usize>> {
    if v.is_empty() || v == "all" {
        Ok(None)
    } else {
        parse(key, v).map(Some)
    }
}

impl ExperimentConfig {
    /// Defaults for `model`: the desk-scale protocol of each experiment.
    pub fn new(model: Model) -> Self {
        let perceptron = PerceptronConfig {
            n: 500,
            sigma: 3.0,
            ..PerceptronConfig::default()
        };
        let mlp = MlpRun {
            model: MlpConfig::default(),
            data: None,
            train_limit: None,
            test_limit: None,
            checkpoint: None,
            precision_bits: 64,
        };
        ExperimentConfig {
            model,
            trials: 1,
            base_seed: 0,
            workers: 0,
            exec: Execution::Parallel,
            timing: true,
            out: None,
            perceptron,
            committee: CommitteeConfig::default(),
            committee_data: CommitteeData::Synthetic {
                n: 200,
                p_train: 1000,
                p_test: 2000,
            },
            mlp,
        }
    }

    /// Apply one setting. Keys not accepted by the model are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        let v = value.trim();
        if !keys(self.model).contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown key {key:?} for model {}", self.model)));
        }
        match key.as_str() {
            "model" => {
                let m: Model = v.parse()?;
                if m != self.model {
                    return Err(Error::Config(format!("config is for model {m}, running {}", self.model)));
                }
            }
            "trials" => self.trials = parse(&key, v)?,
            "seed" => self.base_seed = parse(&key, v)?,
            "workers" => self.workers = parse(&key, v)?,
            "exec" => {
                self.exec = match v {
                    "parallel" => Execution::Parallel,
                    "sequential" => Execution::Sequential,
                    _ => return Err(Error::Config(format!("exec: expected parallel|sequential, got {v:?}"))),
                }
            }
            "timing" => self.timing = parse_bool(&key, v)?,
            "out" => self.out = (!v.is_empty()).then(|| PathBuf::from(v)),
            _ => match self.model {
                Model::Perceptron => self.set_perceptron(&key, v)?,
                Model::Committee => self.set_committee(&key, v)?,
                Model::Mlp => self.set_mlp(&key, v)?,
            },
        }
        Ok(())
    }

    fn set_perceptron(&mut self, key: &str, v: &str) -> Result<()> {
        let p = &mut self.perceptron;
        match key {
            "n" => p.n = parse(key, v)?,
            "alpha" => p.alpha = parse(key, v)?,
            "m" => p.m = parse(key, v)?,
            "method" => p.method = v.parse::<PerceptronMethod>()?,
            "kernel" => p.kernel = v.to_string(),
            "mu" => p.mu = parse(key, v)?,
            "sigma" => p.sigma = parse(key, v)?,
            "sperm" => p.s_perm = parse(key, v)?,
            "dest_s" => p.dest_s = parse(key, v)?,
            "gamma" => p.gamma = parse(key, v)?,
            "tmax" => p.schedule.t_max = parse(key, v)?,
            "tmin" => p.schedule.t_min = parse(key, v)?,
            "dt" => p.schedule.dt = parse(key, v)?,
            "loss" => {
                p.loss = match v {
                    "errors" => PatternLoss::Errors,
                    "hinge" => PatternLoss::Hinge,
                    _ => return Err(Error::Config(format!("loss: expected errors|hinge, got {v:?}"))),
                }
            }
            _ => unreachable!("key list and match disagree: {key}"),
        }
        Ok(())
    }

    fn set_committee(&mut self, key: &str, v: &str) -> Result<()> {
        let c = &mut self.committee;
        let s = &mut c.schedule;
        match key {
            "data" => {
                let (p_train, p_test) = self.committee_data.sizes();
                self.committee_data = if v == "synthetic" {
                    CommitteeData::Synthetic { n: 200, p_train, p_test }
                } else {
                    CommitteeData::Images {
                        dir: PathBuf::from(v),
                        class_a: 0,
                        class_b: 1,
                        threshold: 0.5,
                        p_train,
                        p_test,
                    }
                };
            }
            "n" => match &mut self.committee_data {
                CommitteeData::Synthetic { n, .. } => *n = parse(key, v)?,
                CommitteeData::Images { .. } => {
                    return Err(Error::Config("n is fixed by the image size for image data".into()))
                }
            },
            "p_train" | "p_test" => {
                let x: usize = parse(key, v)?;
                let (tr, te) = match &mut self.committee_data {
                    CommitteeData::Synthetic { p_train, p_test, .. } | CommitteeData::Images { p_train, p_test, .. } => {
                        (p_train, p_test)
                    }
                };
                *(if key == "p_train" { tr } else { te }) = x;
            }
            "class_a" | "class_b" | "threshold" => match &mut self.committee_data {
                CommitteeData::Images {
                    class_a,
                    class_b,
                    threshold,
                    ..
                } => match key {
                    "class_a" => *class_a = parse(key, v)?,
                    "class_b" => *class_b = parse(key, v)?,
                    _ => *threshold = parse(key, v)?,
                },
                CommitteeData::Synthetic { .. } => {
                    return Err(Error::Config(format!("{key} needs image data (set data first)")))
                }
            },
            "k" => c.k = parse(key, v)?,
            "m" => c.m = parse(key, v)?,
            "method" => c.method = v.parse::<CommitteeMethod>()?,
            "kernel" => c.kernel = v.to_string(),
            "mu" => c.mu = parse(key, v)?,
            "sigma" => c.sigma = parse(key, v)?,
            "sperm" => c.s_perm = parse(key, v)?,
            "dest_s" => c.dest_s = parse(key, v)?,
            "batch" => s.batch = parse(key, v)?,
            "epochs" => s.max_epochs = parse(key, v)?,
            "lr" => s.lr_0 = parse(key, v)?,
            "lr_decay" => s.lr_decay = parse(key, v)?,
            "beta0" => s.beta_0 = parse(key, v)?,
            "beta_growth" => s.beta_growth = parse(key, v)?,
            "loss_stop" => s.loss_stop = parse(key, v)?,
            "init_scale" => c.init_scale = parse(key, v)?,
            "coupling" => c.coupling_0 = parse(key, v)?,
            "coupling_growth" => c.coupling_growth = parse(key, v)?,
            "coupling_max" => c.coupling_max = parse(key, v)?,
            "sign_collapse" => c.sign_collapse = parse_bool(key, v)?,
            _ => unreachable!("key list and match disagree: {key}"),
        }
        Ok(())
    }

    fn set_mlp(&mut self, key: &str, v: &str) -> Result<()> {
        let run = &mut self.mlp;
        let c = &mut run.model;
        match key {
            "data" => run.data = (!v.is_empty()).then(|| PathBuf::from(v)),
            "arch" => c.dims = parse_list(key, v)?,
            "m" => c.m = parse(key, v)?,
            "kernel" => c.kernel = v.to_string(),
            "mu" => c.mu = parse(key, v)?,
            "sigma" => c.sigma = parse(key, v)?,
            "sperm" => c.s_perm = parse(key, v)?,
            "mode" => c.mode = v.parse::<MixerMode>()?,
            "blocks" => c.blocks = if v.is_empty() || v == "default" { None } else { Some(parse_list(key, v)?) },
            "shared_mixers" => c.shared_mixers = parse_bool(key, v)?,
            "cover_loss" => c.cover_loss = v.parse::<CoverLoss>()?,
            "lr" => c.lr = parse(key, v)?,
            "momentum" => c.momentum = parse(key, v)?,
            "nesterov" => c.nesterov = parse_bool(key, v)?,
            "batch" => c.batch = parse(key, v)?,
            "epochs" => c.epochs = parse(key, v)?,
            "init_noise" => c.init_noise = parse(key, v)?,
            "eval_batch" => c.eval_batch = parse(key, v)?,
            "train_limit" => run.train_limit = opt_usize(key, v)?,
            "test_limit" => run.test_limit = opt_usize(key, v)?,
            "checkpoint" => run.checkpoint = (!v.is_empty()).then(|| PathBuf::from(v)),
            "precision" => {
                run.precision_bits = match v {
                    "32" | "f32" => 32,
                    "64" | "f64" => 64,
                    _ => return Err(Error::Config(format!("precision: expected 32|64, got {v:?}"))),
                }
            }
            _ => unreachable!("key list and match disagree: {key}"),
        }
        Ok(())
    }

    /// Apply the settings of a flat config text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", lineno + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Every setting of this model as `key = value` pairs; feeding them back
    /// through [`ExperimentConfig::set`] reproduces the config.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let mut out: Vec<(&'static str, String)> = vec![
            ("model", self.model.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.base_seed.to_string()),
            ("workers", self.workers.to_string()),
            (
                "exec",
                match self.exec {
                    Execution::Parallel => "parallel",
                    Execution::Sequential => "sequential",
                }
                .into(),
            ),
            ("timing", self.timing.to_string()),
            ("out", self.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
        ];
        match self.model {
            Model::Perceptron => {
                let p = &self.perceptron;
                out.extend([
                    ("n", p.n.to_string()),
                    ("alpha", p.alpha.to_string()),
                    ("m", p.m.to_string()),
                    ("method", p.method.to_string()),
                    ("kernel", p.kernel.clone()),
                    ("mu", p.mu.to_string()),
                    ("sigma", p.sigma.to_string()),
                    ("sperm", p.s_perm.to_string()),
                    ("dest_s", p.dest_s.to_string()),
                    ("gamma", p.gamma.to_string()),
                    ("tmax", p.schedule.t_max.to_string()),
                    ("tmin", p.schedule.t_min.to_string()),
                    ("dt", p.schedule.dt.to_string()),
                    (
                        "loss",
                        match p.loss {
                            PatternLoss::Errors => "errors",
                            PatternLoss::Hinge => "hinge",
                        }
                        .into(),
                    ),
                ]);
            }
            Model::Committee => {
                let c = &self.committee;
                let s = &c.schedule;
                match &self.committee_data {
                    CommitteeData::Synthetic { n, p_train, p_test } => out.extend([
                        ("data", "synthetic".to_string()),
                        ("n", n.to_string()),
                        ("p_train", p_train.to_string()),
                        ("p_test", p_test.to_string()),
                    ]),
                    CommitteeData::Images {
                        dir,
                        class_a,
                        class_b,
                        threshold,
                        p_train,
                        p_test,
                    } => out.extend([
                        ("data", dir.display().to_string()),
                        ("class_a", class_a.to_string()),
                        ("class_b", class_b.to_string()),
                        ("threshold", threshold.to_string()),
                        ("p_train", p_train.to_string()),
                        ("p_test", p_test.to_string()),
                    ]),
                }
                out.extend([
                    ("k", c.k.to_string()),
                    ("m", c.m.to_string()),
                    ("method", c.method.to_string()),
                    ("kernel", c.kernel.clone()),
                    ("mu", c.mu.to_string()),
                    ("sigma", c.sigma.to_string()),
                    ("sperm", c.s_perm.to_string()),
                    ("dest_s", c.dest_s.to_string()),
                    ("batch", s.batch.to_string()),
                    ("epochs", s.max_epochs.to_string()),
                    ("lr", s.lr_0.to_string()),
                    ("lr_decay", s.lr_decay.to_string()),
                    ("beta0", s.beta_0.to_string()),
                    ("beta_growth", s.beta_growth.to_string()),
                    ("loss_stop", s.loss_stop.to_string()),
                    ("init_scale", c.init_scale.to_string()),
                    ("coupling", c.coupling_0.to_string()),
                    ("coupling_growth", c.coupling_growth.to_string()),
                    ("coupling_max", c.coupling_max.to_string()),
                    ("sign_collapse", c.sign_collapse.to_string()),
                ]);
            }
            Model::Mlp => {
                let r = &self.mlp;
                let c = &r.model;
                let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_else(|| "all".into());
                out.extend([
                    ("data", r.data.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
                    ("arch", join(&c.dims)),
                    ("m", c.m.to_string()),
                    ("kernel", c.kernel.clone()),
                    ("mu", c.mu.to_string()),
                    ("sigma", c.sigma.to_string()),
                    ("sperm", c.s_perm.to_string()),
                    ("mode", c.mode.to_string()),
                    ("blocks", c.blocks.as_deref().map(join).unwrap_or_else(|| "default".into())),
                    ("shared_mixers", c.shared_mixers.to_string()),
                    ("cover_loss", c.cover_loss.to_string()),
                    ("lr", c.lr.to_string()),
                    ("momentum", c.momentum.to_string()),
                    ("nesterov", c.nesterov.to_string()),
                    ("batch", c.batch.to_string()),
                    ("epochs", c.epochs.to_string()),
                    ("init_noise", c.init_noise.to_string()),
                    ("eval_batch", c.eval_batch.to_string()),
                    ("train_limit", opt(r.train_limit)),
                    ("test_limit", opt(r.test_limit)),
                    ("checkpoint", r.checkpoint.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
                    ("precision", r.precision_bits.to_string()),
                ]);
            }
        }
        out
    }

    /// The config as flat text.
    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Checks that need no data: parameter ranges and kernel construction.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        let bad = |e: Error| Error::Config(e.to_string());
        match self.model {
            Model::Perceptron => {
                let p = &self.perceptron;
                p.schedule.validate().map_err(bad)?;
                if p.n == 0 || !(p.alpha > 0.0) || p.effective_m() == 0 {
                    return Err(Error::Config("need n >= 1, alpha > 0, m >= 1".into()));
                }
                if p.method == PerceptronMethod::Mcover {
                    crate::routing::kernel_from_spec(&p.kernel, p.m, p.mu, p.sigma).map_err(bad)?;
                    if p.dest_s == 0 || p.dest_s > p.n || p.s_perm == 0 {
                        return Err(Error::Config("need 1 <= dest_s <= n and sperm >= 1".into()));
                    }
                }
            }
            Model::Committee => {
                self.committee.validate().map_err(bad)?;
                let c = &self.committee;
                if c.method == CommitteeMethod::Mcover {
                    crate::routing::kernel_from_spec(&c.kernel, c.m, c.mu, c.sigma).map_err(bad)?;
                }
                let (p_train, p_test) = self.committee_data.sizes();
                if p_train == 0 || p_test == 0 {
                    return Err(Error::Config("p_train and p_test must be >= 1".into()));
                }
            }
            Model::Mlp => {
                let c = &self.mlp.model;
                c.architecture().map_err(bad)?;
                crate::routing::kernel_from_spec(&c.kernel, c.m, c.mu, c.sigma).map_err(bad)?;
                if c.batch == 0 || !(c.lr > 0.0) || !(0.0..1.0).contains(&c.momentum) || c.eval_batch == 0 {
                    return Err(Error::Config("need batch >= 1, lr > 0, 0 <= momentum < 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Resolved MLP data directory: an absolute or existing `data` path as
    /// given, otherwise joined onto the data root (`MCOVER_DATA`).
    pub fn mlp_data_dir(&self) -> Result<PathBuf> {
        resolve_data_dir(self.mlp.data.as_deref())
    }
}

/// Resolve a dataset directory against the `MCOVER_DATA` root.
pub fn resolve_data_dir(given: Option<&Path>) -> Result<PathBuf> {
    let root = std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from);
    match (given, root) {
        (Some(p), _) if p.is_absolute() || p.exists() => Ok(p.to_path_buf()),
        (Some(p), Some(root)) => Ok(root.join(p)),
        (Some(p), None) => Ok(p.to_path_buf()),
        (None, Some(root)) => Ok(root),
        (None, None) => Err(Error::Config(format!("no data directory: pass data=<dir> or set {DATA_ROOT_ENV}"))),
    }
}

impl CommitteeData {
    pub fn sizes(&self) -> (usize, usize) {
        match self {
            CommitteeData::Synthetic { p_train, p_test, .. } | CommitteeData::Images { p_train, p_test, .. } => {
                (*p_train, *p_test)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        for model in [Model::Perceptron, Model::Committee, Model::Mlp] {
            let mut a = ExperimentConfig::new(model);
            a.set("trials", "7").unwrap();
            a.set("m", "4").unwrap();
            a.set("seed", "123").unwrap();
            let mut b = ExperimentConfig::new(model);
            b.apply_text(&a.to_text()).unwrap();
            assert_eq!(a, b, "{model}");
        }
    }

    #[test]
    fn unknown_and_foreign_keys_are_rejected() {
        let mut c = ExperimentConfig::new(Model::Perceptron);
        assert!(matches!(c.set("bogus", "1"), Err(Error::Config(_))));
        // committee-only key
        assert!(c.set("k", "9").is_err());
        assert!(c.apply_text("model = mlp").is_err());
        assert!(c.apply_text("alpha 1.5").is_err());
        assert!(c.set("alpha", "one").is_err());
    }

    #[test]
    fn flags_and_comments() {
        let mut c = ExperimentConfig::new(Model::Perceptron);
        c.apply_text("# desk scale\nn = 50  # small\ndest-s = 5\n\nmethod=rsa\n").unwrap();
        assert_eq!((c.perceptron.n, c.perceptron.dest_s), (50, 5));
        assert_eq!(c.perceptron.method, PerceptronMethod::Rsa);
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::new(Model::Perceptron);
        c.validate().unwrap();
        c.set("sigma", "-1").unwrap();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(Model::Committee);
        c.set("k", "4").unwrap();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(Model::Mlp);
        c.set("blocks", "3,3").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn committee_image_keys_need_image_data() {
        let mut c = ExperimentConfig::new(Model::Committee);
        assert!(c.set("class_a", "3").is_err());
        c.set("p_train", "500").unwrap();
        c.set("data", "/tmp/fashion").unwrap();
        c.set("class_a", "3").unwrap();
        assert!(matches!(c.committee_data, CommitteeData::Images { class_a: 3, p_train: 500, .. }));
    }
}
