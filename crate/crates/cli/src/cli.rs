use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{EnsembleSource, ExperimentConfig, PresetSpec, Variant};
use crate::error::CliError;
use crate::format::{write_json, OutputFormat};
use crate::stages::{self, Pipeline};

/// Exit code for command-line usage errors.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "darktraj", version, about = "Dark subspaces and invariant measures of Kraus ensembles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check stochasticity; report fixed point, irreducibility and period.
    Validate,
    /// Run every stage and write atlas, chi, group, samples and summary.
    Pipeline,
    /// Darkness-gap, s(n) and Cesàro W1 curves with fitted log-slopes.
    Convergence,
    /// Discover maximal dark subspaces.
    Dark,
    /// Estimate the invariant measure of the dark chain.
    Chi,
    /// Smart family, group closure and transitivity verdict.
    Group,
    /// Sample an ergodic invariant measure and test its invariance.
    Ergodic,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Experiment config document (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in example 1, 2 or 3.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub example: Option<u8>,
    /// Ensemble document (JSON).
    #[arg(long, global = true, conflicts_with = "example")]
    pub ensemble: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Example 1 angle regime.
    #[arg(long, global = true, value_enum)]
    pub variant: Option<Variant>,
    #[arg(long, global = true)]
    pub theta_x: Option<f64>,
    #[arg(long, global = true)]
    pub theta_z: Option<f64>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub phi: Option<f64>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub with_v3: bool,
    #[arg(long, global = true)]
    pub tol_stochastic: Option<f64>,
    #[arg(long, global = true)]
    pub tol_invariance_se: Option<f64>,
}

impl CommonArgs {
    fn has_preset_flags(&self) -> bool {
        self.variant.is_some()
            || self.theta_x.is_some()
            || self.theta_z.is_some()
            || self.theta.is_some()
            || self.phi.is_some()
            || self.q.is_some()
            || self.with_v3
    }

    fn patch(&self, spec: &mut PresetSpec) {
        spec.variant = self.variant.or(spec.variant);
        spec.theta_x = self.theta_x.or(spec.theta_x);
        spec.theta_z = self.theta_z.or(spec.theta_z);
        spec.theta = self.theta.or(spec.theta);
        spec.phi = self.phi.or(spec.phi);
        spec.q = self.q.or(spec.q);
        spec.with_v3 |= self.with_v3;
    }

    /// The config file (or defaults) with command-line overrides applied.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = self.example {
            let mut spec = PresetSpec {
                number: n,
                ..Default::default()
            };
            self.patch(&mut spec);
            cfg.ensemble = Some(EnsembleSource::Example(spec));
        } else if let Some(p) = &self.ensemble {
            cfg.ensemble = Some(EnsembleSource::File(p.clone()));
        } else if self.has_preset_flags() {
            match &mut cfg.ensemble {
                Some(EnsembleSource::Example(spec)) => self.patch(spec),
                _ => return Err(CliError::Config("preset flags need --example".into())),
            }
        }
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(t) = self.tol_stochastic {
            cfg.tolerances.stochastic = t;
        }
        if let Some(t) = self.tol_invariance_se {
            cfg.tolerances.invariance_se = t;
        }
        cfg.check()?;
        Ok(cfg)
    }
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("darktraj-out"));
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn print_json<T: serde::Serialize>(value: &T, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io("<stdout>", e))?;
    writeln!(stdout, "{text}").map_err(|e| CliError::io("<stdout>", e))
}

fn table_path(dir: &Path, name: &str, cfg: &ExperimentConfig) -> PathBuf {
    dir.join(format!("{name}.{}", cfg.format.extension()))
}

/// Runs one command; the JSON report goes to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = cli.common.resolve()?;
    if let Command::Validate = cli.command {
        let e = cfg.ensemble()?;
        let report = stages::validate(&e, cfg.tolerances.stochastic)?;
        print_json(&report, stdout)?;
        if let Some(dir) = &cfg.out {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            write_json(&dir.join("validate.json"), &report)?;
        }
        if !report.stochastic {
            return Err(CliError::Stochasticity {
                residual: report.stochasticity_residual,
                tolerance: cfg.tolerances.stochastic,
            });
        }
        return match report.irreducible {
            Some(true) => Ok(()),
            _ => Err(CliError::Reducible),
        };
    }

    let mut pipe = Pipeline::new(&cfg)?;
    let dir = out_dir(&cfg)?;
    match cli.command {
        Command::Validate => unreachable!("handled above"),
        Command::Dark => {
            let atlas = pipe.atlas_doc()?;
            write_json(&dir.join("atlas.json"), &atlas)?;
            print_json(&atlas, stdout)?;
        }
        Command::Chi => {
            write_json(&dir.join("atlas.json"), &pipe.atlas_doc()?)?;
            let chi = pipe.chi_doc()?;
            write_json(&dir.join("chi.json"), &chi)?;
            print_json(&chi, stdout)?;
        }
        Command::Group => {
            write_json(&dir.join("atlas.json"), &pipe.atlas_doc()?)?;
            write_json(&dir.join("chi.json"), &pipe.chi_doc()?)?;
            let group = pipe.group_doc()?;
            write_json(&dir.join("group.json"), &group)?;
            print_json(&group, stdout)?;
        }
        Command::Ergodic => {
            let ergodic = pipe.ergodic_doc()?;
            write_json(&dir.join("ergodic.json"), &ergodic)?;
            pipe.samples_table()?.write(&table_path(&dir, "samples", &cfg), cfg.format)?;
            print_json(&ergodic, stdout)?;
        }
        Command::Pipeline => {
            write_json(&dir.join("ensemble.json"), &stages::ensemble_doc(&pipe.ensemble))?;
            let atlas = pipe.atlas_doc()?;
            let chi = pipe.chi_doc()?;
            let group = pipe.group_doc()?;
            let ergodic = pipe.ergodic_doc()?;
            write_json(&dir.join("atlas.json"), &atlas)?;
            write_json(&dir.join("chi.json"), &chi)?;
            write_json(&dir.join("group.json"), &group)?;
            write_json(&dir.join("ergodic.json"), &ergodic)?;
            pipe.samples_table()?.write(&table_path(&dir, "samples", &cfg), cfg.format)?;
            let summary = stages::summarize(&atlas, &chi, &group, &ergodic)?;
            write_json(&dir.join("summary.json"), &summary)?;
            print_json(&summary, stdout)?;
        }
        Command::Convergence => {
            let curves = stages::convergence(&mut pipe)?;
            curves.darkness_gap.write(&table_path(&dir, "darkness_gap", &cfg), cfg.format)?;
            curves.s_n.write(&table_path(&dir, "s_n", &cfg), cfg.format)?;
            curves.w1.write(&table_path(&dir, "w1", &cfg), cfg.format)?;
            write_json(&dir.join("convergence.json"), &curves.summary)?;
            print_json(&curves.summary, stdout)?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            err.exit_code()
        }
    }
}
