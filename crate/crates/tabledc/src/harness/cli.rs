//! Command-line front end.
//!
//! One thin binary with five subcommands: `pretrain`, `train`, `evaluate`,
//! `ablate`, `bench-scale`. Flags override config-file keys; errors leave
//! through stderr as one JSON object carrying the phase and a stable error
//! code, with a nonzero exit status.

use super::{
    ablate, bench_scalability, run_pipeline, run_pretrain, BenchOptions, HarnessError,
    KernelChoice, MatrixFormat, PipelineError, Profile, RunConfig,
};
use crate::autoencoder::HiddenActivation;
use crate::head::{Distance, InitMethod};
use crate::metrics::evaluate;

const USAGE: &str = "usage: tabledc <pretrain|train|evaluate|ablate|bench-scale> [flags]

shared flags:
  --input PATH          embedding matrix (csv or bin)
  --format csv|bin      input encoding (default csv)
  --header              skip the first csv line
  --labels PATH         ground-truth labels, one integer per line
  --out DIR             output directory (default tabledc-out)
  --config PATH         flat JSON config file; flags override its keys
  --k N                 number of clusters
  --alpha F             clustering-loss weight (default 0.9)
  --gamma F             kernel bandwidth (default 1.0)
  --nu F                Student's-t degrees of freedom (default 1.0)
  --delta F             covariance scale (default 0.01)
  --epsilon F           normalization guard (default 1e-10)
  --pretrain-epochs N   autoencoder epochs (profile default)
  --epochs N            joint-training epochs (profile default)
  --lr F                joint-training learning rate (default 1e-3)
  --pretrain-lr F       pretraining learning rate (default 1e-3)
  --init birch|kmeans|kmeanspp      center initialization (default birch)
  --distance mahalanobis|euclidean|cosine   (default mahalanobis)
  --kernel cauchy|students-t|normal         (default cauchy)
  --seed N              random seed (default 0)
  --profile schema|entity|domain    epoch presets (default schema)
  --hidden-dims A,B,..  encoder widths after the input layer
  --activation relu|sigmoid         hidden nonlinearity (default relu)
  --threshold F         CF-tree threshold (grid-searched when absent)
  --branching N         CF-tree branching factor (default 50)
  --leaf-capacity N     CF-tree leaf capacity (default 50)
  --restarts N          k-means restarts (default 20)
  --target-refresh N    epochs between target updates (default 1)
  --batch-size N        pretraining batch size (default full batch)
  --freeze-centers      keep centers fixed at their initialization
  --ae-state PATH       reuse a pretraining snapshot

evaluate flags:
  --pred PATH           predicted labels to score against --labels

bench-scale flags:
  --k-grid A,B,..       cluster counts (default 100,200,400,800)
  --bench-n N           synthetic rows when no --input (default 5000)
  --bench-d N           synthetic columns when no --input (default 100)
  --warmup N            unmeasured epochs per grid point (default 2)
  --measure N           measured epochs per grid point (default 5)
";

enum CliError {
    Usage(String),
    Pipeline(PipelineError),
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Pipeline(e)
    }
}

fn config_error(e: HarnessError) -> CliError {
    CliError::Pipeline(PipelineError {
        phase: "config",
        source: e,
    })
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on a
/// pipeline error, 2 on a usage error.
pub fn run(args: &[String]) -> i32 {
    match execute(args) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("{msg}");
            eprintln!("{USAGE}");
            2
        }
        Err(CliError::Pipeline(e)) => {
            let json = serde_json::json!({
                "error": {
                    "phase": e.phase,
                    "code": e.code(),
                    "message": e.source.to_string(),
                }
            });
            eprintln!("{json}");
            1
        }
    }
}

struct Flags {
    pairs: Vec<(String, String)>,
    switches: Vec<String>,
}

impl Flags {
    fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn has(&self, key: &str) -> bool {
        self.switches.iter().any(|s| s == key)
    }
}

const SWITCHES: &[&str] = &["header", "freeze-centers"];

fn parse_flags(args: &[String]) -> Result<Flags, CliError> {
    let mut pairs = Vec::new();
    let mut switches = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        let Some(name) = arg.strip_prefix("--") else {
            return Err(CliError::Usage(format!("unexpected argument {arg:?}")));
        };
        if let Some((key, value)) = name.split_once('=') {
            pairs.push((key.to_string(), value.to_string()));
            i += 1;
            continue;
        }
        if SWITCHES.contains(&name) {
            switches.push(name.to_string());
            i += 1;
            continue;
        }
        let Some(value) = args.get(i + 1) else {
            return Err(CliError::Usage(format!("flag --{name} needs a value")));
        };
        pairs.push((name.to_string(), value.clone()));
        i += 2;
    }
    Ok(Flags { pairs, switches })
}

fn bad_flag(key: &str, value: &str, expected: &str) -> HarnessError {
    HarnessError::InvalidFlag(format!("--{key} {value:?}: expected {expected}"))
}

fn parse_f64(key: &str, value: &str) -> Result<f64, HarnessError> {
    value.parse().map_err(|_| bad_flag(key, value, "a number"))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, HarnessError> {
    value
        .parse()
        .map_err(|_| bad_flag(key, value, "a non-negative integer"))
}

fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>, HarnessError> {
    value
        .split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| bad_flag(key, value, "a comma-separated integer list"))
        })
        .collect()
}

/// Applies one `--key value` pair to the run configuration.
fn apply_flag(cfg: &mut RunConfig, key: &str, value: &str) -> Result<(), HarnessError> {
    match key {
        "input" => cfg.input = value.to_string(),
        "labels" => cfg.labels = Some(value.to_string()),
        "out" => cfg.out = value.to_string(),
        "ae-state" => cfg.ae_state = Some(value.to_string()),
        "format" => {
            cfg.format = match value {
                "csv" => MatrixFormat::Csv,
                "bin" => MatrixFormat::Bin,
                _ => return Err(bad_flag(key, value, "csv or bin")),
            }
        }
        "k" => cfg.k = parse_usize(key, value)?,
        "alpha" => cfg.alpha = parse_f64(key, value)?,
        "gamma" => cfg.gamma = parse_f64(key, value)?,
        "nu" => cfg.nu = parse_f64(key, value)?,
        "delta" => cfg.delta = parse_f64(key, value)?,
        "epsilon" => cfg.epsilon = parse_f64(key, value)?,
        "lr" => cfg.lr = parse_f64(key, value)?,
        "pretrain-lr" => cfg.pretrain_lr = parse_f64(key, value)?,
        "threshold" => cfg.birch_threshold = Some(parse_f64(key, value)?),
        "pretrain-epochs" => cfg.pretrain_epochs = Some(parse_usize(key, value)?),
        "epochs" => cfg.epochs = Some(parse_usize(key, value)?),
        "branching" => cfg.birch_branching = parse_usize(key, value)?,
        "leaf-capacity" => cfg.birch_leaf_capacity = parse_usize(key, value)?,
        "restarts" => cfg.restarts = parse_usize(key, value)?,
        "target-refresh" => cfg.target_refresh = parse_usize(key, value)?,
        "batch-size" => cfg.batch_size = Some(parse_usize(key, value)?),
        "seed" => {
            cfg.seed = value
                .parse()
                .map_err(|_| bad_flag(key, value, "a 64-bit unsigned integer"))?
        }
        "hidden-dims" => cfg.hidden_dims = Some(parse_usize_list(key, value)?),
        "init" => {
            cfg.init = match value {
                "birch" => InitMethod::Birch,
                "kmeans" => InitMethod::KMeans,
                "kmeanspp" => InitMethod::KMeansPlusPlus,
                _ => return Err(bad_flag(key, value, "birch, kmeans, or kmeanspp")),
            }
        }
        "distance" => {
            cfg.distance = match value {
                "mahalanobis" => Distance::Mahalanobis,
                "euclidean" => Distance::Euclidean,
                "cosine" => Distance::Cosine,
                _ => return Err(bad_flag(key, value, "mahalanobis, euclidean, or cosine")),
            }
        }
        "kernel" => {
            cfg.kernel = match value {
                "cauchy" => KernelChoice::Cauchy,
                "students-t" => KernelChoice::StudentsT,
                "normal" => KernelChoice::Normal,
                _ => return Err(bad_flag(key, value, "cauchy, students-t, or normal")),
            }
        }
        "profile" => {
            cfg.profile = Some(match value {
                "schema" => Profile::Schema,
                "entity" => Profile::Entity,
                "domain" => Profile::Domain,
                _ => return Err(bad_flag(key, value, "schema, entity, or domain")),
            })
        }
        "activation" => {
            cfg.activation = match value {
                "relu" => HiddenActivation::Relu,
                "sigmoid" => HiddenActivation::Sigmoid,
                _ => return Err(bad_flag(key, value, "relu or sigmoid")),
            }
        }
        // handled by the caller
        "config" | "pred" | "k-grid" | "bench-n" | "bench-d" | "warmup" | "measure" => {}
        _ => {
            return Err(HarnessError::InvalidFlag(format!("unknown flag --{key}")));
        }
    }
    Ok(())
}

fn build_config(flags: &Flags) -> Result<RunConfig, CliError> {
    let mut cfg = match flags.get("config") {
        Some(path) => RunConfig::from_file(path).map_err(config_error)?,
        None => RunConfig::new("", 0),
    };
    for (key, value) in &flags.pairs {
        apply_flag(&mut cfg, key, value).map_err(config_error)?;
    }
    if flags.has("header") {
        cfg.header = true;
    }
    if flags.has("freeze-centers") {
        cfg.centers_trainable = false;
    }
    Ok(cfg)
}

fn execute(args: &[String]) -> Result<(), CliError> {
    let Some(command) = args.first() else {
        return Err(CliError::Usage("missing subcommand".into()));
    };
    let flags = parse_flags(&args[1..])?;

    match command.as_str() {
        "pretrain" => {
            let cfg = build_config(&flags)?;
            let (state_path, losses) = run_pretrain(&cfg)?;
            let summary = serde_json::json!({
                "ae_state": state_path,
                "epochs": losses.len(),
                "initial_loss": losses.first(),
                "final_loss": losses.last(),
            });
            println!("{summary}");
            Ok(())
        }
        "train" => {
            let cfg = build_config(&flags)?;
            let report = run_pipeline(&cfg)?;
            let summary = serde_json::json!({
                "report": report.files.report,
                "labels": report.files.labels,
                "losses": report.files.losses,
                "metrics": report.metrics,
            });
            println!("{summary}");
            Ok(())
        }
        "evaluate" => {
            let pred_path = flags
                .get("pred")
                .ok_or_else(|| CliError::Usage("evaluate needs --pred".into()))?;
            let truth_path = flags
                .get("labels")
                .ok_or_else(|| CliError::Usage("evaluate needs --labels".into()))?;
            let pred = super::io::load_labels(pred_path).map_err(|e| {
                CliError::Pipeline(PipelineError {
                    phase: "load",
                    source: e,
                })
            })?;
            let truth = super::io::load_labels(truth_path).map_err(|e| {
                CliError::Pipeline(PipelineError {
                    phase: "load",
                    source: e,
                })
            })?;
            let report = evaluate(&truth, &pred).map_err(|e| {
                CliError::Pipeline(PipelineError {
                    phase: "evaluate",
                    source: e.into(),
                })
            })?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{json}");
            if let Some(out) = flags.get("out") {
                let dir = std::path::PathBuf::from(out);
                std::fs::create_dir_all(&dir)
                    .and_then(|_| std::fs::write(dir.join("evaluation.json"), format!("{json}\n")))
                    .map_err(|source| {
                        CliError::Pipeline(PipelineError {
                            phase: "write",
                            source: HarnessError::Io {
                                path: out.to_string(),
                                source,
                            },
                        })
                    })?;
            }
            Ok(())
        }
        "ablate" => {
            let cfg = build_config(&flags)?;
            let report = ablate(&cfg)?;
            let summary = serde_json::json!({
                "csv": report.csv,
                "cells": report.cells.len(),
                "failed": report.cells.iter().filter(|c| c.error.is_some()).count(),
            });
            println!("{summary}");
            Ok(())
        }
        "bench-scale" => {
            let cfg = build_config(&flags)?;
            let mut opts = BenchOptions::default();
            if let Some(grid) = flags.get("k-grid") {
                opts.k_grid = parse_usize_list("k-grid", grid).map_err(config_error)?;
            }
            if let Some(n) = flags.get("bench-n") {
                opts.n = parse_usize("bench-n", n).map_err(config_error)?;
            }
            if let Some(d) = flags.get("bench-d") {
                opts.d = parse_usize("bench-d", d).map_err(config_error)?;
            }
            if let Some(w) = flags.get("warmup") {
                opts.warmup_epochs = parse_usize("warmup", w).map_err(config_error)?;
            }
            if let Some(m) = flags.get("measure") {
                opts.measured_epochs = parse_usize("measure", m).map_err(config_error)?;
                if opts.measured_epochs == 0 {
                    return Err(CliError::Usage("--measure must be at least 1".into()));
                }
            }
            let report = bench_scalability(&cfg, &opts)?;
            let summary = serde_json::json!({
                "csv": report.csv,
                "points": report.points,
                "hardware": report.hardware,
            });
            println!("{summary}");
            Ok(())
        }
        other => Err(CliError::Usage(format!("unknown subcommand {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn missing_subcommand_is_a_usage_error() {
        assert_eq!(run(&[]), 2);
        assert_eq!(run(&args(&["frobnicate"])), 2);
    }

    #[test]
    fn flag_parsing_shapes() {
        let flags = parse_flags(&args(&["--k", "5", "--header", "--alpha=0.5"]))
            .ok()
            .unwrap();
        assert_eq!(flags.get("k"), Some("5"));
        assert_eq!(flags.get("alpha"), Some("0.5"));
        assert!(flags.has("header"));
        assert!(!flags.has("freeze-centers"));
    }

    #[test]
    fn later_flags_win() {
        let flags = parse_flags(&args(&["--k", "5", "--k", "9"])).ok().unwrap();
        assert_eq!(flags.get("k"), Some("9"));
    }

    #[test]
    fn unknown_flag_is_rejected() {
        let flags = parse_flags(&args(&["--bogus", "1"])).ok().unwrap();
        let mut cfg = RunConfig::new("", 0);
        assert!(apply_flag(&mut cfg, "bogus", "1").is_err());
        drop(flags);
    }

    #[test]
    fn overrides_apply_over_defaults() {
        let flags = parse_flags(&args(&[
            "--input",
            "x.csv",
            "--k",
            "4",
            "--kernel",
            "students-t",
            "--nu",
            "2.0",
            "--freeze-centers",
            "--hidden-dims",
            "32,16,8",
        ]))
        .ok()
        .unwrap();
        let cfg = build_config(&flags).ok().unwrap();
        assert_eq!(cfg.input, "x.csv");
        assert_eq!(cfg.k, 4);
        assert_eq!(cfg.kernel, KernelChoice::StudentsT);
        assert_eq!(cfg.nu, 2.0);
        assert!(!cfg.centers_trainable);
        assert_eq!(cfg.hidden_dims, Some(vec![32, 16, 8]));
    }

    #[test]
    fn train_without_input_exits_nonzero() {
        assert_eq!(run(&args(&["train", "--k", "3"])), 1);
    }
}
