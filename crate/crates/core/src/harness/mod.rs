//! Experiment orchestration: seeded trials, sweeps, long-form CSV tables and
//! their summaries.

pub mod config;
pub mod stats;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub use config::{keys, normalize_key, resolve_data_dir, CommitteeData, ExperimentConfig, Model, MlpRun};
pub use stats::{quantile_95, summarize, Summary};

use crate::committee::{train_and_evaluate, CommitteeConfig};
use crate::data::{binarize_two_class, read_mnist_dir, synthetic_committee_teacher, BinaryTwoClassSet, IdxDataset};
use crate::error::{Error, Result};
use crate::mlp::checkpoint::{self, Precision};
use crate::mlp::{head, train_mlp, MlpData};
use crate::par::{map_indexed, Execution};
use crate::perceptron::run_trial as run_perceptron;
use crate::seed::{self, stream};

pub const PERCEPTRON_COLUMNS: &[&str] = &[
    "trial", "seed", "method", "N", "alpha", "M", "mu", "sigma", "R", "eps_g", "final_energy", "sweeps", "wall_ms",
];

pub const COMMITTEE_COLUMNS: &[&str] = &[
    "trial", "seed", "method", "n", "K", "M", "kernel", "mu", "sigma", "P", "test_error", "train_error", "final_loss",
    "epochs", "status", "data_sha256", "wall_ms",
];

pub const MLP_COLUMNS: &[&str] = &[
    "trial", "seed", "method", "arch", "M", "kernel", "mu", "sigma", "mode", "test_error", "train_loss", "epochs",
    "flops_per_batch", "status", "data_sha256", "wall_ms",
];

/// Columns prepended to every long-form sweep row.
pub const SWEEP_COLUMNS: &[&str] = &["sweep_param", "sweep_value"];

pub const SUMMARY_TAIL: &[&str] = &["metric", "n", "n_finite", "mean", "sd", "se", "ci95", "display"];

pub fn columns(model: Model) -> &'static [&'static str] {
    match model {
        Model::Perceptron => PERCEPTRON_COLUMNS,
        Model::Committee => COMMITTEE_COLUMNS,
        Model::Mlp => MLP_COLUMNS,
    }
}

/// Headline metric of a model's rows.
pub fn primary_metric(model: Model) -> &'static str {
    match model {
        Model::Perceptron => "eps_g",
        Model::Committee | Model::Mlp => "test_error",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    /// values in the order of [`columns`]
    pub values: Vec<String>,
    /// headline metric; NaN when the trial diverged or failed
    pub metric: f64,
    pub diverged: bool,
    pub error: Option<String>,
}

/// Rows of one `run_trials` call, ordered by trial index.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialBatch {
    pub model: Model,
    pub results: Vec<TrialResult>,
}

impl TrialBatch {
    pub fn any_diverged(&self) -> bool {
        self.results.iter().any(|r| r.diverged)
    }

    pub fn metrics(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.metric).collect()
    }

    pub fn summary(&self) -> Summary {
        summarize(&self.metrics())
    }

    pub fn table(&self) -> Table {
        Table {
            header: columns(self.model).iter().map(|s| s.to_string()).collect(),
            rows: self.results.iter().map(|r| r.values.clone()).collect(),
        }
    }
}

/// A header plus string rows: the in-memory form of every CSV written here.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    pub fn read_from<R: Read>(r: R) -> Result<Table> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.iter().map(str::to_string).collect();
        let rows = rdr
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Table { header, rows })
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Table> {
        Table::read_from(std::fs::File::open(path)?)
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn perceptron_rows(cfg: &ExperimentConfig, exec: Execution) -> Vec<TrialResult> {
    let p = &cfg.perceptron;
    map_indexed(exec, cfg.trials, |t| {
        let seed = cfg.base_seed + t as u64;
        let mut v = vec![
            t.to_string(),
            seed.to_string(),
            p.method.to_string(),
            p.n.to_string(),
            num(p.alpha),
            p.effective_m().to_string(),
            num(p.mu),
            num(p.sigma),
        ];
        match run_perceptron(p, seed) {
            Ok(o) => {
                let ms = if cfg.timing { o.wall_ms } else { 0 };
                v.extend([num(o.r), num(o.eps_g), num(o.final_energy), o.sweeps.to_string(), ms.to_string()]);
                TrialResult {
                    trial: t,
                    seed,
                    values: v,
                    metric: o.eps_g,
                    diverged: false,
                    error: None,
                }
            }
            Err(e) => {
                v.extend(["NaN", "NaN", "NaN", "0", "0"].map(String::from));
                TrialResult {
                    trial: t,
                    seed,
                    values: v,
                    metric: f64::NAN,
                    diverged: false,
                    error: Some(e.to_string()),
                }
            }
        }
    })
}

enum CommitteeSource {
    Synthetic { n: usize, p_train: usize, p_test: usize },
    Images {
        train: IdxDataset,
        test: IdxDataset,
        class_a: u8,
        class_b: u8,
        threshold: f64,
        p_train: usize,
        p_test: usize,
    },
}

impl CommitteeSource {
    fn load(data: &CommitteeData) -> Result<Self> {
        Ok(match data {
            CommitteeData::Synthetic { n, p_train, p_test } => CommitteeSource::Synthetic {
                n: *n,
                p_train: *p_train,
                p_test: *p_test,
            },
            CommitteeData::Images {
                dir,
                class_a,
                class_b,
                threshold,
                p_train,
                p_test,
            } => {
                let dir = resolve_data_dir(Some(dir))?;
                CommitteeSource::Images {
                    train: read_mnist_dir(&dir, true)?,
                    test: read_mnist_dir(&dir, false)?,
                    class_a: *class_a,
                    class_b: *class_b,
                    threshold: *threshold,
                    p_train: *p_train,
                    p_test: *p_test,
                }
            }
        })
    }

    fn sha256(&self) -> String {
        match self {
            CommitteeSource::Synthetic { .. } => "synthetic".into(),
            CommitteeSource::Images { train, test, .. } => digest(&[train, test]),
        }
    }

    /// Train/test sets of one trial.
    fn draw(&self, k: usize, seed: u64) -> Result<(BinaryTwoClassSet, BinaryTwoClassSet)> {
        let mut rng = stream(seed, seed::INSTANCE);
        match self {
            CommitteeSource::Synthetic { n, p_train, p_test } => {
                let s = synthetic_committee_teacher(*n, k, *p_train, *p_test, &mut rng)?;
                Ok((s.train, s.test))
            }
            CommitteeSource::Images {
                train,
                test,
                class_a,
                class_b,
                threshold,
                p_train,
                p_test,
            } => Ok((
                binarize_two_class(train, *class_a, *class_b, *threshold, Some(*p_train), &mut rng)?,
                binarize_two_class(test, *class_a, *class_b, *threshold, Some(*p_test), &mut rng)?,
            )),
        }
    }
}

fn digest(sets: &[&IdxDataset]) -> String {
    sets.iter()
        .flat_map(|d| [d.provenance.images_sha256.as_str(), d.provenance.labels_sha256.as_str()])
        .collect::<Vec<_>>()
        .join(";")
}

fn committee_rows(cfg: &ExperimentConfig, exec: Execution, inner: Execution) -> Result<Vec<TrialResult>> {
    let c: &CommitteeConfig = &cfg.committee;
    let source = CommitteeSource::load(&cfg.committee_data)?;
    let sha = source.sha256();
    Ok(map_indexed(exec, cfg.trials, |t| {
        let seed = cfg.base_seed + t as u64;
        let outcome = source
            .draw(c.k, seed)
            .and_then(|(train, test)| Ok((train.n, train.len(), train_and_evaluate(c, &train, &test, seed, inner)?)));
        let (n, p) = outcome.as_ref().map(|(n, p, _)| (*n, *p)).unwrap_or((0, 0));
        let mut v = vec![
            t.to_string(),
            seed.to_string(),
            c.method.to_string(),
            n.to_string(),
            c.k.to_string(),
            c.effective_m().to_string(),
            c.kernel.clone(),
            num(c.mu),
            num(c.sigma),
            p.to_string(),
        ];
        let (metric, diverged, error) = match outcome {
            Ok((_, _, o)) => {
                let ms = if cfg.timing { o.wall_ms } else { 0 };
                let status = if o.diverged { "diverged" } else { "ok" };
                v.extend([
                    num(o.test_error),
                    num(o.train_error),
                    num(o.final_loss),
                    o.epochs.to_string(),
                    status.into(),
                    sha.clone(),
                    ms.to_string(),
                ]);
                (o.test_error, o.diverged, None)
            }
            Err(e) => {
                v.extend(["NaN", "NaN", "NaN", "0", "error", &sha, "0"].map(String::from));
                (f64::NAN, false, Some(e.to_string()))
            }
        };
        TrialResult {
            trial: t,
            seed,
            values: v,
            metric,
            diverged,
            error,
        }
    }))
}

/// Load the train/test IDX pair named by an MLP run, truncated to its limits.
pub fn load_mlp_data(cfg: &ExperimentConfig) -> Result<(MlpData, MlpData, String)> {
    let dir = cfg.mlp_data_dir()?;
    let train = read_mnist_dir(&dir, true)?;
    let test = read_mnist_dir(&dir, false)?;
    let sha = digest(&[&train, &test]);
    let limit = |d: MlpData, n: Option<usize>| -> Result<MlpData> {
        match n {
            Some(n) if n > d.len() => Err(Error::Size {
                requested: n,
                available: d.len(),
            }),
            Some(n) => Ok(head(&d, n)),
            None => Ok(d),
        }
    };
    Ok((
        limit(MlpData::from_idx(&train), cfg.mlp.train_limit)?,
        limit(MlpData::from_idx(&test), cfg.mlp.test_limit)?,
        sha,
    ))
}

/// Checkpoint path of trial `t`.
pub fn checkpoint_path(base: &Path, t: usize) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(format!(".trial{t}.mcvr"));
    PathBuf::from(s)
}

fn mlp_rows(cfg: &ExperimentConfig, exec: Execution, inner: Execution) -> Result<Vec<TrialResult>> {
    let run = &cfg.mlp;
    let c = &run.model;
    let (train, test, sha) = load_mlp_data(cfg)?;
    let method = if c.m == 1 { "vanilla" } else { "mcover" };
    let arch = c.dims.iter().map(ToString::to_string).collect::<Vec<_>>().join("-");
    Ok(map_indexed(exec, cfg.trials, |t| {
        let seed = cfg.base_seed + t as u64;
        let mut v = vec![
            t.to_string(),
            seed.to_string(),
            method.to_string(),
            arch.clone(),
            c.m.to_string(),
            c.kernel.clone(),
            num(c.mu),
            num(c.sigma),
            c.mode.to_string(),
        ];
        let outcome = train_mlp(c, &train, &test, seed, inner).and_then(|o| {
            if let Some(base) = &run.checkpoint {
                let precision = if run.precision_bits == 32 { Precision::F32 } else { Precision::F64 };
                checkpoint::save(checkpoint_path(base, t), &o.covers, precision)?;
            }
            Ok(o)
        });
        let (metric, diverged, error) = match outcome {
            Ok(o) => {
                let ms = if cfg.timing { o.wall_ms } else { 0 };
                v.extend([
                    num(o.test_error),
                    num(o.train_loss),
                    o.epochs.to_string(),
                    o.flops_per_batch.total().to_string(),
                    (if o.diverged { "diverged" } else { "ok" }).into(),
                    sha.clone(),
                    ms.to_string(),
                ]);
                (o.test_error, o.diverged, None)
            }
            Err(e) => {
                v.extend(["NaN", "NaN", "0", "0", "error", &sha, "0"].map(String::from));
                (f64::NAN, false, Some(e.to_string()))
            }
        };
        TrialResult {
            trial: t,
            seed,
            values: v,
            metric,
            diverged,
            error,
        }
    }))
}

/// Run `cfg.trials` trials with seeds `base_seed + t`. Trials run on the
/// worker pool when `exec` is parallel; rows come back in trial order.
/// Errors here are configuration or data-loading problems; a failing trial
/// only marks its own row.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<TrialBatch> {
    cfg.validate()?;
    crate::par::set_worker_count(cfg.workers);
    let exec = cfg.exec;
    // with several trials in flight the per-trial kernels stay sequential
    let inner = if cfg.trials > 1 { Execution::Sequential } else { exec };
    let results = match cfg.model {
        Model::Perceptron => perceptron_rows(cfg, exec),
        Model::Committee => committee_rows(cfg, exec, inner)?,
        Model::Mlp => mlp_rows(cfg, exec, inner)?,
    };
    Ok(TrialBatch {
        model: cfg.model,
        results,
    })
}

/// One group of a summary table.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSummary {
    pub key: Vec<String>,
    pub metric: String,
    pub summary: Summary,
}

/// Group `table` rows by the `by` columns (first-appearance order) and
/// summarize `metric` within each group.
pub fn summarize_table(table: &Table, by: &[&str], metric: &str) -> Result<Vec<GroupSummary>> {
    let key_idx = by
        .iter()
        .map(|c| table.column(c).ok_or_else(|| Error::Config(format!("no column {c:?} to group by"))))
        .collect::<Result<Vec<_>>>()?;
    let m_idx = table
        .column(metric)
        .ok_or_else(|| Error::Config(format!("no metric column {metric:?}")))?;
    let mut groups: Vec<(Vec<String>, Vec<f64>)> = Vec::new();
    for row in &table.rows {
        let key: Vec<String> = key_idx.iter().map(|&i| row[i].clone()).collect();
        let x = row[m_idx].trim().parse::<f64>().unwrap_or(f64::NAN);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, xs)) => xs.push(x),
            None => groups.push((key, vec![x])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(key, xs)| GroupSummary {
            key,
            metric: metric.to_string(),
            summary: summarize(&xs),
        })
        .collect())
}

/// Summary rows as a table: the grouping columns, then [`SUMMARY_TAIL`].
pub fn summary_table(by: &[&str], groups: &[GroupSummary]) -> Table {
    Table {
        header: by.iter().chain(SUMMARY_TAIL).map(|s| s.to_string()).collect(),
        rows: groups
            .iter()
            .map(|g| {
                let s = &g.summary;
                let mut r = g.key.clone();
                r.extend([
                    g.metric.clone(),
                    s.n.to_string(),
                    s.n_finite.to_string(),
                    num(s.mean),
                    num(s.sd),
                    num(s.se),
                    num(s.ci95),
                    s.display(),
                ]);
                r
            })
            .collect(),
    }
}

/// Default grouping for a long-form table: sweep columns when present, then
/// the method.
pub fn default_grouping(table: &Table) -> Vec<&'static str> {
    SWEEP_COLUMNS
        .iter()
        .chain(&["method"])
        .copied()
        .filter(|c| table.column(c).is_some())
        .collect()
}

/// Parameters `sweep` knows how to vary, with their config keys.
pub fn sweep_key(param: &str) -> Result<&'static str> {
    match normalize_key(param).as_str() {
        "alpha" => Ok("alpha"),
        "sigma" => Ok("sigma"),
        "mu" => Ok("mu"),
        "m" => Ok("m"),
        other => Err(Error::Config(format!("cannot sweep {other:?} (alpha|sigma|mu|M)"))),
    }
}

/// `count` evenly spaced values from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub param: String,
    /// long-form rows, sweep columns first
    pub long: Table,
    pub summary: Vec<GroupSummary>,
    pub any_diverged: bool,
    /// per value, `(trial, message)` of failed trials
    pub errors: Vec<(String, usize, String)>,
}

impl SweepOutput {
    pub fn summary_table(&self) -> Table {
        summary_table(&default_grouping(&self.long), &self.summary)
    }
}

/// Run `run_trials` once per value of `param`, all with the same seeds.
pub fn sweep(cfg: &ExperimentConfig, param: &str, values: &[String]) -> Result<SweepOutput> {
    let key = sweep_key(param)?;
    let shown = if key == "m" { "M" } else { key };
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut long = Table {
        header: SWEEP_COLUMNS.iter().chain(columns(cfg.model)).map(|s| s.to_string()).collect(),
        rows: Vec::new(),
    };
    let mut any_diverged = false;
    let mut errors = Vec::new();
    // validate every point before spending time on any of them
    let points = values
        .iter()
        .map(|v| {
            let mut c = cfg.clone();
            c.set(key, v)?;
            c.validate()?;
            Ok((v.clone(), c))
        })
        .collect::<Result<Vec<_>>>()?;
    for (value, c) in points {
        let batch = run_trials(&c)?;
        any_diverged |= batch.any_diverged();
        for r in batch.results {
            if let Some(e) = r.error {
                errors.push((value.clone(), r.trial, e));
            }
            let mut row = vec![shown.to_string(), value.clone()];
            row.extend(r.values);
            long.rows.push(row);
        }
    }
    let by = default_grouping(&long);
    let summary = summarize_table(&long, &by, primary_metric(cfg.model))?;
    Ok(SweepOutput {
        param: shown.to_string(),
        long,
        summary,
        any_diverged,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_perceptron() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(Model::Perceptron);
        c.apply_text("n = 21\nalpha = 1.2\nm = 2\ndest_s = 3\nsperm = 4\ntmax = 0.3\ntmin = 0.1\ndt = 0.02\ntrials = 3\ntiming = false")
            .unwrap();
        c
    }

    #[test]
    fn trials_are_ordered_and_reproducible() {
        let c = tiny_perceptron();
        let a = run_trials(&c).unwrap();
        assert_eq!(a.results.len(), 3);
        assert!(a.results.iter().enumerate().all(|(i, r)| r.trial == i && r.seed == i as u64));
        let mut seq = c.clone();
        seq.exec = Execution::Sequential;
        let b = run_trials(&seq).unwrap();
        assert_eq!(a.table().to_csv_string().unwrap(), b.table().to_csv_string().unwrap());
    }

    #[test]
    fn header_matches_schema() {
        let c = tiny_perceptron();
        let csv = run_trials(&c).unwrap().table().to_csv_string().unwrap();
        assert_eq!(
            csv.lines().next().unwrap(),
            "trial,seed,method,N,alpha,M,mu,sigma,R,eps_g,final_energy,sweeps,wall_ms"
        );
    }

    #[test]
    fn single_value_sweep_is_run_trials_plus_summary() {
        let c = tiny_perceptron();
        let s = sweep(&c, "alpha", &["1.2".into()]).unwrap();
        let direct = run_trials(&c).unwrap();
        assert_eq!(s.long.rows.len(), 3);
        for (row, r) in s.long.rows.iter().zip(&direct.results) {
            assert_eq!(&row[2..], &r.values[..]);
        }
        assert_eq!(s.summary.len(), 1);
        assert_eq!(s.summary[0].summary, direct.summary());
    }

    #[test]
    fn single_cover_rows_ignore_sigma() {
        let mut c = tiny_perceptron();
        c.set("m", "1").unwrap();
        let s = sweep(&c, "sigma", &["0.5".into(), "3".into()]).unwrap();
        let eps = s.long.column("eps_g").unwrap();
        for t in 0..3 {
            assert_eq!(s.long.rows[t][eps], s.long.rows[t + 3][eps]);
        }
    }

    #[test]
    fn sweep_rejects_bad_points_up_front() {
        let c = tiny_perceptron();
        assert!(sweep(&c, "sigma", &["1".into(), "-1".into()]).is_err());
        assert!(sweep(&c, "gamma", &["1".into()]).is_err());
    }

    #[test]
    fn alpha_grid() {
        let g = uniform_grid(1.2, 1.9, 8);
        assert_eq!(g.len(), 8);
        assert!((g[1] - 1.3).abs() < 1e-12 && (g[7] - 1.9).abs() < 1e-12);
    }

    #[test]
    fn summary_groups_in_order() {
        let t = Table {
            header: vec!["method".into(), "x".into()],
            rows: vec![
                vec!["b".into(), "0".into()],
                vec!["a".into(), "1".into()],
                vec!["b".into(), "1".into()],
                vec!["a".into(), "NaN".into()],
            ],
        };
        let g = summarize_table(&t, &["method"], "x").unwrap();
        assert_eq!(g[0].key, vec!["b"]);
        assert!((g[0].summary.se - 0.3536).abs() < 1e-4);
        assert_eq!((g[1].summary.n, g[1].summary.n_finite), (2, 1));
        let out = summary_table(&["method"], &g).to_csv_string().unwrap();
        assert!(out.starts_with("method,metric,n,n_finite,mean,sd,se,ci95,display\n"));
        assert!(summarize_table(&t, &["nope"], "x").is_err());
    }

    #[test]
    fn csv_quoting_round_trips() {
        let t = Table {
            header: vec!["a".into(), "b".into()],
            rows: vec![vec!["x,y".into(), "say \"hi\"".into()]],
        };
        let s = t.to_csv_string().unwrap();
        assert!(s.contains("\"x,y\"") && s.contains("\"say \"\"hi\"\"\""));
        assert_eq!(Table::read_from(s.as_bytes()).unwrap(), t);
    }

    #[test]
    fn committee_divergence_is_a_row() {
        let mut c = ExperimentConfig::new(Model::Committee);
        c.apply_text("n = 15\nk = 3\nm = 2\np_train = 20\np_test = 20\nepochs = 3\nbatch = 10\ntrials = 2\nlr = inf\nsperm = 3\ndest_s = 4")
            .unwrap();
        let b = run_trials(&c).unwrap();
        assert_eq!(b.results.len(), 2);
        assert!(b.any_diverged());
        assert!(b.results.iter().all(|r| r.metric.is_nan()));
        let status = columns(Model::Committee).iter().position(|&c| c == "status").unwrap();
        assert_eq!(b.results[0].values[status], "diverged");
    }

    #[test]
    fn checkpoint_names() {
        assert_eq!(checkpoint_path(Path::new("out/run"), 3), PathBuf::from("out/run.trial3.mcvr"));
    }
}
