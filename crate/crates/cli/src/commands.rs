use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use curlab::latent_model::{sample_batch, sample_block_batch};
use curlab::losses::{ExactLosses, LossKind};
use curlab::representation::RepresentationFile;
use curlab::training::{erm_block, erm_descent, erm_finite, DescentOptions, FunctionClass};
use curlab::verifier::{
    digest_value, render_report, run_checks, run_counterexample, run_random_suite,
    sweep_block_size, sweep_negative_samples, sweep_sample_size, Counterexample, ScenarioParams,
    SweepTable,
};
use curlab::Model;

use crate::config::ExperimentConfig;
use crate::{Axis, Cli, CliError, Command, EXIT_FAILED, EXIT_OK};

pub fn dispatch(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Counterexample {
            name,
            n,
            r,
            k,
            no_best,
        } => counterexample(cli, name, *n, *r, *k, !*no_best),
        Command::Verify => verify(cli, &load_config(cli)?),
        Command::Sweep { axis } => sweep(cli, &load_config(cli)?, *axis),
        Command::Train => train(cli, &load_config(cli)?),
    }
}

/// Config from --config (defaults otherwise) with --seed applied.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
        if let Some(suite) = cfg.suite.as_mut() {
            suite.seed = s;
        }
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Result<PathBuf, CliError> {
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)?;
    Ok(())
}

fn timestamp(cli: &Cli) -> Option<u64> {
    if cli.no_timestamp {
        return None;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

fn config_digest(cfg: &ExperimentConfig) -> String {
    digest_value(&serde_json::to_value(cfg).expect("config serializes"))
}

fn verify(cli: &Cli, cfg: &ExperimentConfig) -> Result<u8, CliError> {
    let opts = cfg.check_options();
    let mut checks = Vec::new();
    if let Some(model) = cfg.resolve_model()? {
        match cfg.resolve_representation(&model)? {
            Some(f) => checks.extend(run_checks(&f, &model, &cfg.checks, &opts)?),
            None => {
                return Err(CliError::Config(
                    "representation: required to verify checks on the configured model".into(),
                ))
            }
        }
    }
    if let Some(suite) = &cfg.suite {
        checks.extend(run_random_suite(&cfg.checks, suite.pairs, suite.seed, &opts)?);
    }
    let scenarios = cfg
        .counterexamples
        .iter()
        .map(|s| run_counterexample(s.name, &s.params()))
        .collect::<Result<Vec<_>, _>>()?;
    if checks.is_empty() && scenarios.is_empty() {
        return Err(CliError::Config(
            "nothing to verify: give model + representation, suite, or counterexamples".into(),
        ));
    }
    let (text, summary) = render_report(&checks, &scenarios, &config_digest(cfg), timestamp(cli));
    let dir = out_dir(cli, Some(cfg))?;
    write(&dir.join("report.jsonl"), &text)?;
    println!(
        "{} checks: {} passed, {} failed ({})",
        summary.total,
        summary.passed,
        summary.failed,
        dir.join("report.jsonl").display()
    );
    for c in checks.iter().filter(|c| !c.pass) {
        println!("FAIL {} lhs={} rhs={} slack={}", c.id, c.lhs, c.rhs, c.slack);
    }
    Ok(if summary.failed == 0 { EXIT_OK } else { EXIT_FAILED })
}

fn counterexample(
    cli: &Cli,
    name: &str,
    n: usize,
    r: f64,
    k: usize,
    best_classifier: bool,
) -> Result<u8, CliError> {
    let which: Counterexample = name.parse()?;
    let params = ScenarioParams {
        n,
        r,
        k,
        best_classifier,
    };
    let report = run_counterexample(which, &params)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{json}");
    print!("{}", report.table());
    if cli.out.is_some() {
        let dir = out_dir(cli, None)?;
        write(&dir.join("scenario.json"), &format!("{json}\n"))?;
    }
    Ok(if report.matches_prediction {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn need_class(cfg: &ExperimentConfig, model: &Model) -> Result<FunctionClass<f64>, CliError> {
    cfg.resolve_class(model)?
        .ok_or_else(|| CliError::Config("function_class: required by this command".into()))
}

fn write_csv(path: &Path, table: &SweepTable) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.columns)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn sweep(cli: &Cli, cfg: &ExperimentConfig, axis: Axis) -> Result<u8, CliError> {
    let model = cfg.require_model()?;
    let kind = LossKind::of(cfg.loss);
    let m = cfg.m[0];
    let table = match axis {
        Axis::K => {
            let class = need_class(cfg, &model)?;
            let s = sweep_negative_samples(&model, &class, kind, &cfg.k, m, &cfg.seeds)?;
            println!("{}", s.verdict);
            s.table
        }
        Axis::M => {
            let class = need_class(cfg, &model)?;
            sweep_sample_size(&model, &class, kind, &cfg.m, &cfg.seeds)?
        }
        Axis::B => {
            let f = cfg.resolve_representation(&model)?.ok_or_else(|| {
                CliError::Config("representation: required by the b axis".into())
            })?;
            sweep_block_size(&model, &f, kind, &cfg.b, m, &cfg.seeds)?
        }
    };
    let dir = out_dir(cli, Some(cfg))?;
    let path = dir.join("sweep.csv");
    write_csv(&path, &table)?;
    println!("{} rows ({})", table.rows.len(), path.display());
    Ok(EXIT_OK)
}

fn train(cli: &Cli, cfg: &ExperimentConfig) -> Result<u8, CliError> {
    let model = cfg.require_model()?;
    let class = need_class(cfg, &model)?;
    let kind = LossKind::of(cfg.loss);
    let (k, m, seed) = (cfg.k[0], cfg.m[0], cfg.seeds[0]);
    let opts = DescentOptions {
        steps: cfg.steps,
        step_size: cfg.step_size,
        seed,
        init: None,
    };
    let fit = match (&class, cfg.block) {
        (FunctionClass::Finite(_), None) => {
            erm_finite(&class, &model, &sample_batch(&model, k, m, seed)?, kind)?
        }
        (FunctionClass::Finite(_), Some(_)) => {
            return Err(CliError::Config(
                "block: block training needs a table or linear function class".into(),
            ))
        }
        (_, Some(b)) => erm_block(&class, &model, &sample_block_batch(&model, b, m, seed)?, kind, &opts)?,
        (_, None) => erm_descent(&class, &model, &sample_batch(&model, k, m, seed)?, kind, &opts)?,
    };
    let population = ExactLosses::new(&fit.f_hat, &model, kind)
        .and_then(|e| match cfg.block {
            Some(b) => e.block(b),
            None => e.unsup(k),
        })
        .ok();
    let dir = out_dir(cli, Some(cfg))?;
    let path = dir.join("representation.json");
    let file = RepresentationFile::from_representation(&fit.f_hat, &model);
    write(&path, &format!("{}\n", file.to_json()))?;
    let summary = serde_json::json!({
        "empirical_loss": fit.empirical_loss,
        "population_loss": population,
        "selected_index": fit.selected_index,
        "trace_len": fit.trace.len(),
        "output": path.display().to_string(),
    });
    println!("{summary}");
    Ok(EXIT_OK)
}
