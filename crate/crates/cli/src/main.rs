//! `mcover`: run M-cover experiments and write CSV results.
//!
//! Exit status: 0 success, 2 bad configuration or unreadable data, 3 when a
//! trial diverged (results are still written), 1 anything else.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use mcover::data::DATA_ROOT_ENV;
use mcover::harness::{
    self, default_grouping, keys, run_trials, summarize_table, summary_table, sweep, uniform_grid, ExperimentConfig,
    Model, Table,
};
use mcover::Error;

const BOOL_KEYS: &[&str] = &["timing", "nesterov", "sign_collapse", "shared_mixers"];

fn key_help(key: &str) -> &'static str {
    match key {
        "trials" => "independent trials (seeds seed, seed+1, ...)",
        "seed" => "base seed",
        "workers" => "worker threads (0 = all cores)",
        "exec" => "parallel | sequential",
        "timing" => "record wall_ms (false writes 0, for byte-identical reruns)",
        "out" => "CSV output path (stdout when omitted)",
        "n" => "input dimension",
        "alpha" => "loading P/N",
        "m" => "number of covers",
        "method" => "training method",
        "kernel" => "ring | uniform | identity",
        "mu" => "ring shift",
        "sigma" => "ring width",
        "sperm" => "sampled routing permutations",
        "dest_s" => "destination channels",
        "gamma" => "replica coupling (rsa)",
        "tmax" | "tmin" | "dt" => "annealing schedule",
        "loss" => "errors | hinge",
        "data" => "synthetic, or a directory of IDX files (relative to $MCOVER_DATA)",
        "k" => "hidden units (odd)",
        "arch" => "layer widths, e.g. 784,512,512,10",
        "mode" => "empirical | exact",
        "blocks" => "blocks per layer, e.g. 16,8,8 (default)",
        "cover_loss" => "sum | mean of the per-cover losses",
        "checkpoint" => "write covers to <path>.trial<t>.mcvr",
        "precision" => "checkpoint precision, 32 | 64",
        "train_limit" | "test_limit" => "use only the first rows",
        _ => "",
    }
}

fn common_args(cmd: Command) -> Command {
    cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("flat key = value config, applied first"),
    )
    .arg(
        Arg::new("set")
            .long("set")
            .value_name("KEY=VALUE")
            .action(ArgAction::Append)
            .help("override one setting (repeatable), applied last"),
    )
}

fn model_command(model: Model, about: &'static str) -> Command {
    let mut cmd = common_args(Command::new(model.to_string()).about(about));
    for key in keys(model).into_iter().filter(|&k| k != "model") {
        let mut arg = Arg::new(key).long(key.replace('_', "-")).help(key_help(key));
        if BOOL_KEYS.contains(&key) {
            arg = arg.num_args(0..=1).default_missing_value("true");
        }
        cmd = cmd.arg(arg);
    }
    cmd
}

fn cli() -> Command {
    Command::new("mcover")
        .about("M-cover permutation routing experiments")
        .subcommand_required(true)
        .after_help(format!("Dataset root: ${DATA_ROOT_ENV}"))
        .subcommand(model_command(Model::Perceptron, "binary perceptron teacher-student annealing"))
        .subcommand(model_command(Model::Committee, "committee machine trained with SGD"))
        .subcommand(model_command(Model::Mlp, "multilayer perceptron on IDX image data"))
        .subcommand(
            common_args(Command::new("sweep").about("repeat trials over a grid of alpha, sigma, mu or M"))
                .arg(Arg::new("model").long("model").required(true).help("perceptron | committee | mlp"))
                .arg(Arg::new("param").long("param").required(true).help("alpha | sigma | mu | M"))
                .arg(
                    Arg::new("values")
                        .long("values")
                        .value_name("V1,V2,...")
                        .conflicts_with("grid")
                        .help("explicit values"),
                )
                .arg(
                    Arg::new("grid")
                        .long("grid")
                        .value_name("LO:HI:COUNT")
                        .help("evenly spaced values, endpoints included"),
                )
                .arg(Arg::new("out").long("out").required(true).help("long-form CSV"))
                .arg(
                    Arg::new("summary")
                        .long("summary")
                        .help("summary CSV (default: <out stem>.summary.csv)"),
                ),
        )
        .subcommand(
            Command::new("summarize")
                .about("mean, standard error and 95% CI of a long-form CSV")
                .arg(Arg::new("input").required(true).help("long-form CSV"))
                .arg(Arg::new("by").long("by").value_name("COL,...").help("grouping columns"))
                .arg(Arg::new("metric").long("metric").help("metric column (default eps_g or test_error)"))
                .arg(Arg::new("out").long("out").help("summary CSV (stdout when omitted)")),
        )
}

/// An error with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::BadMagic { .. }
            | Error::Truncated { .. }
            | Error::CountMismatch { .. }
            | Error::Size { .. }
            | Error::UnsupportedSize { .. }
            | Error::DegenerateKernel => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(message: String) -> Failure {
    Failure { code: 2, message }
}

fn apply_common(cfg: &mut ExperimentConfig, m: &ArgMatches) -> Result<(), Failure> {
    if let Some(path) = m.get_one::<String>("config") {
        cfg.apply_file(path)?;
    }
    Ok(())
}

fn apply_sets(cfg: &mut ExperimentConfig, m: &ArgMatches) -> Result<(), Failure> {
    for kv in m.get_many::<String>("set").into_iter().flatten() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| config_error(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k, v)?;
    }
    Ok(())
}

fn build_config(model: Model, m: &ArgMatches) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::new(model);
    apply_common(&mut cfg, m)?;
    for key in keys(model).into_iter().filter(|&k| k != "model") {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    apply_sets(&mut cfg, m)?;
    cfg.validate()?;
    Ok(cfg)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".cfg");
    PathBuf::from(s)
}

fn write_table(table: &Table, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => table.write_path(p)?,
        None => table.write_to(std::io::stdout().lock())?,
    }
    Ok(())
}

fn run_model(model: Model, m: &ArgMatches) -> Result<u8, Failure> {
    let cfg = build_config(model, m)?;
    let batch = run_trials(&cfg)?;
    write_table(&batch.table(), cfg.out.as_deref())?;
    if let Some(out) = &cfg.out {
        std::fs::write(sidecar(out), cfg.to_text()).map_err(Error::from)?;
    }
    let failed: Vec<_> = batch.results.iter().filter_map(|r| r.error.as_ref().map(|e| (r.trial, e))).collect();
    for (t, e) in &failed {
        eprintln!("trial {t}: {e}");
    }
    let s = batch.summary();
    let metric = harness::primary_metric(model);
    eprintln!(
        "{metric}: {} (n = {}, finite = {}, se = {:.4})",
        s.display(),
        s.n,
        s.n_finite,
        s.se
    );
    Ok(if batch.any_diverged() {
        3
    } else if !failed.is_empty() {
        1
    } else {
        0
    })
}

fn sweep_values(m: &ArgMatches) -> Result<Vec<String>, Failure> {
    if let Some(v) = m.get_one::<String>("values") {
        return Ok(v.split(',').map(|s| s.trim().to_string()).collect());
    }
    let grid = m
        .get_one::<String>("grid")
        .ok_or_else(|| config_error("sweep needs --values or --grid".into()))?;
    let parts: Vec<&str> = grid.split(':').collect();
    let bad = || config_error(format!("--grid expects LO:HI:COUNT, got {grid:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    Ok(uniform_grid(lo, hi, count).into_iter().map(|x| format!("{x}")).collect())
}

fn run_sweep(m: &ArgMatches) -> Result<u8, Failure> {
    let model: Model = m.get_one::<String>("model").expect("required").parse()?;
    let mut cfg = ExperimentConfig::new(model);
    apply_common(&mut cfg, m)?;
    apply_sets(&mut cfg, m)?;
    cfg.validate()?;
    let values = sweep_values(m)?;
    let out = PathBuf::from(m.get_one::<String>("out").expect("required"));
    let summary_path = m.get_one::<String>("summary").map(PathBuf::from).unwrap_or_else(|| {
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.with_file_name(format!("{stem}.summary.csv"))
    });
    let result = sweep(&cfg, m.get_one::<String>("param").expect("required"), &values)?;
    result.long.write_path(&out)?;
    result.summary_table().write_path(&summary_path)?;
    std::fs::write(sidecar(&out), cfg.to_text()).map_err(Error::from)?;
    for (v, t, e) in &result.errors {
        eprintln!("{} = {v}, trial {t}: {e}", result.param);
    }
    let mut err = std::io::stderr().lock();
    for g in &result.summary {
        let _ = writeln!(err, "{}: {}", g.key.join(" "), g.summary.display());
    }
    Ok(if result.any_diverged {
        3
    } else if !result.errors.is_empty() {
        1
    } else {
        0
    })
}

fn run_summarize(m: &ArgMatches) -> Result<u8, Failure> {
    let input = m.get_one::<String>("input").expect("required");
    let table = Table::read_path(input)?;
    let by: Vec<String> = match m.get_one::<String>("by") {
        Some(b) => b.split(',').map(|s| s.trim().to_string()).collect(),
        None => default_grouping(&table).into_iter().map(String::from).collect(),
    };
    let by: Vec<&str> = by.iter().map(String::as_str).collect();
    let metric = match m.get_one::<String>("metric") {
        Some(x) => x.clone(),
        None => ["eps_g", "test_error"]
            .into_iter()
            .find(|c| table.column(c).is_some())
            .ok_or_else(|| config_error("no eps_g or test_error column; pass --metric".into()))?
            .to_string(),
    };
    let groups = summarize_table(&table, &by, &metric)?;
    write_table(&summary_table(&by, &groups), m.get_one::<String>("out").map(Path::new))?;
    Ok(0)
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let result = match matches.subcommand() {
        Some(("perceptron", m)) => run_model(Model::Perceptron, m),
        Some(("committee", m)) => run_model(Model::Committee, m),
        Some(("mlp", m)) => run_model(Model::Mlp, m),
        Some(("sweep", m)) => run_sweep(m),
        Some(("summarize", m)) => run_summarize(m),
        _ => unreachable!("subcommand required"),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }
}
