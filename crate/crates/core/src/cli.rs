//! Command-line interface of the `sorc` binary.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::clustering::ClusteringMethod;
use crate::container::save_stack;
use crate::csv_import::import_csv;
use crate::report::{read_scores, render_sections, ReportSpec};
use crate::synthetic::{generate_synthetic, Regularity, SyntheticSpec};
use crate::workflow::{enumerate_setups, run_workflow, RunOptions, WorkflowConfig, WorkflowError};

#[derive(Debug, Parser)]
#[command(name = "sorc", version, about = "Rank pipelines for channel-image co-localization clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute the configured grid and write scores, reports and manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (0 = all cores); overrides the config file.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        no_cache: bool,
    },
    /// Convert a per-pixel CSV table into a stack container.
    ImportCsv { input: PathBuf, output: PathBuf },
    /// Write a synthetic stack with known cluster structure.
    Synth {
        #[arg(long)]
        regularity: Regularity,
        #[arg(long)]
        clusters: usize,
        #[arg(long)]
        per_cluster: usize,
        #[arg(long)]
        noise: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the ground-truth labels, one per line.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Image side length in pixels.
        #[arg(long, default_value_t = SyntheticSpec::DEFAULT_SIZE)]
        size: usize,
    },
    /// Render bar-chart tables from an exported score CSV.
    Report {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "dataset")]
        dataset: String,
    },
    /// Print the setups a config would run.
    Enumerate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Failure with its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl ToString) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }

    fn input(message: impl ToString) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    fn internal(message: impl ToString) -> Self {
        Self {
            code: 3,
            message: message.to_string(),
        }
    }
}

impl From<WorkflowError> for CliError {
    fn from(e: WorkflowError) -> Self {
        Self {
            code: e.exit_code(),
            message: e.to_string(),
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

/// Executes a parsed command, returning the text to print on success.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run {
            config,
            threads,
            no_cache,
        } => {
            let cfg = WorkflowConfig::load(&config).map_err(CliError::config)?;
            let options = RunOptions {
                threads,
                use_cache: no_cache.then_some(false),
                fail_function: None,
            };
            let outcome = run_workflow(&cfg, &options)?;
            let mut text = format!(
                "{} setups, outputs in {}\n",
                outcome.records.len(),
                cfg.output.display()
            );
            for m in ClusteringMethod::ALL {
                let best = outcome
                    .records
                    .iter()
                    .filter(|r| r.setup.clustering == m)
                    .max_by(|a, b| a.sorc.total_cmp(&b.sorc).then_with(|| b.setup.cmp(&a.setup)));
                if let Some(r) = best {
                    text.push_str(&format!("best {}: {} (score {:.4})\n", m.display_name(), r.setup.label(), r.sorc));
                }
            }
            Ok(text)
        }
        Command::ImportCsv { input, output } => {
            let stack = import_csv(&input).map_err(|e| CliError::input(format!("{}: {e}", input.display())))?;
            save_stack(&stack, &output).map_err(CliError::internal)?;
            Ok(format!(
                "{}x{} pixels, {} channels, {} spectra\n",
                stack.height(),
                stack.width(),
                stack.channels(),
                stack.mask().count()
            ))
        }
        Command::Synth {
            regularity,
            clusters,
            per_cluster,
            noise,
            seed,
            out,
            labels,
            size,
        } => {
            let spec = SyntheticSpec::new(regularity, per_cluster, clusters, noise, seed).with_size(size, size);
            let data = generate_synthetic(&spec).map_err(CliError::config)?;
            save_stack(&data.stack, &out).map_err(CliError::internal)?;
            if let Some(path) = labels {
                let text: String = data.labels.iter().map(|l| format!("{l}\n")).collect();
                write(&path, &text)?;
            }
            Ok(format!("{} channels written to {}\n", data.stack.channels(), out.display()))
        }
        Command::Report {
            scores,
            top,
            out,
            dataset,
        } => {
            if top == Some(0) {
                return Err(CliError::config("--top must be positive"));
            }
            let records = read_scores(&scores).map_err(CliError::input)?;
            let mut methods: Vec<_> = records.iter().map(|r| r.setup.clustering).collect();
            methods.sort();
            methods.dedup();
            let specs: Vec<ReportSpec> = methods
                .iter()
                .map(|&m| ReportSpec {
                    title: m.display_name().to_string(),
                    dataset: dataset.clone(),
                    clustering: Some(m),
                    top_n: top,
                    records: records.clone(),
                })
                .collect();
            let html = render_sections(&dataset, &specs).map_err(CliError::input)?;
            write(&out, &html)?;
            Ok(format!("report written to {}\n", out.display()))
        }
        Command::Enumerate { config } => {
            let cfg = WorkflowConfig::load(&config).map_err(CliError::config)?;
            let setups = enumerate_setups(&cfg).map_err(CliError::config)?;
            let mut text: String = setups
                .iter()
                .map(|s| format!("{}\t{}\n", s.label(), s.clustering.slug()))
                .collect();
            text.push_str(&format!("{} setups\n", setups.len()));
            Ok(text)
        }
    }
}

/// Parses `args` and runs; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
