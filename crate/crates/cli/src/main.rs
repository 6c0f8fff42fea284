//! `gobrem` command-line frontend.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use gobrem::channel::Channel;
use gobrem::config::RunConfig;
use gobrem::mdp::{policy_iteration, Policy};
use gobrem::output::{self, KpiRow, OutputHeader};
use gobrem::rem::Rem;
use gobrem::ric::A1PolicyMessage;
use gobrem::sim::{self, ControllerSpec, RunOptions, SimOutput};
use gobrem::Execution;

#[derive(Parser)]
#[command(name = "gobrem", version, about = "REM-driven grid-of-beams beam management")]
struct Cli {
    /// Run every loop on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Traffic seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Channel (shadowing) seed override.
    #[arg(long)]
    channel_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Populate a REM with probe passes along the road.
    BuildRem {
        #[command(flatten)]
        common: Common,
        /// Probe traversals per direction.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        passes: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a policy on a REM by policy iteration.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        rem: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the A1 message carrying the policy.
        #[arg(long)]
        a1: Option<PathBuf>,
    },
    /// Run the road scenario under one controller.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        controller: ControllerKind,
        #[arg(long, default_value_t = 5.0)]
        delta_ho: f64,
        /// Policy artifact (required for `--controller policy`).
        #[arg(long)]
        policy: Option<PathBuf>,
        /// REM the policy must have been trained on.
        #[arg(long)]
        rem: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarise kpi.csv / rsrp_samples.csv files found under a directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.10)]
        percentile: f64,
    },
    /// REM, both policies, and all controllers in one go.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the shadowing field as CSV.
    Shadowing {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerKind {
    Baseline,
    Policy,
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<gobrem::Error>() {
            Some(e) if e.is_config() => 2,
            _ => 1,
        };
        Failure { code, err }
    }
}

impl From<gobrem::Error> for Failure {
    fn from(e: gobrem::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        err: anyhow::anyhow!(msg.into()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match run(cli.command, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seeds.traffic = s;
        }
        if let Some(s) = self.channel_seed {
            cfg.seeds.channel = s;
        }
        Ok(cfg)
    }
}

fn header(cfg: &RunConfig) -> OutputHeader {
    OutputHeader {
        channel_seed: cfg.seeds.channel,
        traffic_seed: cfg.seeds.traffic,
        config_sha256: cfg.checksum(),
    }
}

fn channel(cfg: &RunConfig, exec: Execution) -> Result<Channel, Failure> {
    info!("generating channel (seed {})", cfg.seeds.channel);
    Ok(Channel::generate(&cfg.channel_config(), exec)?)
}

fn build_rem(cfg: &RunConfig, ch: &Channel, exec: Execution) -> Result<Rem, Failure> {
    info!("populating REM with {} passes", cfg.rem.passes);
    Ok(sim::populate_rem(
        &cfg.scenario(),
        ch,
        cfg.rem_layout()?,
        cfg.rem.passes,
        cfg.seeds.traffic,
        exec,
    )?)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::from)
}

fn write_run(dir: &Path, h: &OutputHeader, runs: &[SimOutput]) -> Result<(), Failure> {
    create_dir(dir)?;
    let rows: Vec<KpiRow> = runs.iter().map(|r| KpiRow::from(&r.report)).collect();
    output::write_kpi_csv(&dir.join(output::KPI_FILE), h, &rows)?;
    let reports: Vec<_> = runs.iter().map(|r| &r.report).collect();
    output::write_samples_csv(&dir.join(output::SAMPLES_FILE), h, &reports)?;
    if let [only] = runs {
        output::write_trace_csv(&dir.join(output::TRACE_FILE), h, &only.trace)?;
        output::write_decisions_csv(&dir.join(output::DECISIONS_FILE), h, &only.decisions)?;
    }
    Ok(())
}

fn policy_spec(cfg: &RunConfig, policy: &Policy) -> Result<ControllerSpec, Failure> {
    Ok(ControllerSpec::Policy {
        message: A1PolicyMessage::new(policy, 0),
        xapp: cfg.xapp_config(cfg.grid()?, cfg.speeds()),
    })
}

fn run(cmd: Command, exec: Execution) -> Result<(), Failure> {
    match cmd {
        Command::BuildRem { common, passes, out } => {
            let mut cfg = common.resolve()?;
            if let Some(p) = passes {
                cfg.rem.passes = p as usize;
            }
            let ch = channel(&cfg, exec)?;
            let rem = build_rem(&cfg, &ch, exec)?;
            rem.write(&out)?;
            println!("{} {}", rem.checksum(), out.display());
        }
        Command::Train {
            config,
            rem,
            beta,
            gamma,
            out,
            a1,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(b) = beta {
                cfg.solver.beta = b;
            }
            if let Some(g) = gamma {
                cfg.solver.gamma = g;
            }
            cfg.validate()?;
            let rem = Rem::read(&rem)?;
            let outcome = policy_iteration(&rem, &cfg.training(exec)?)?;
            outcome.policy.write(&out)?;
            if let Some(path) = a1 {
                let msg = A1PolicyMessage::new(&outcome.policy, 0);
                std::fs::write(&path, msg.to_text()).with_context(|| format!("writing {}", path.display()))?;
            }
            println!(
                "{} policy: {} states, {} improvement rounds -> {}",
                outcome.policy.label(),
                outcome.policy.len(),
                outcome.rounds,
                out.display()
            );
        }
        Command::Simulate {
            common,
            controller,
            delta_ho,
            policy,
            rem,
            out,
        } => {
            let cfg = common.resolve()?;
            let spec = match controller {
                ControllerKind::Baseline => ControllerSpec::Baseline { delta_ho_db: delta_ho },
                ControllerKind::Policy => {
                    let path = policy.ok_or_else(|| usage("--controller policy requires --policy <file>"))?;
                    let p = Policy::read(&path)?;
                    if let Some(rem) = rem {
                        A1PolicyMessage::new(&p, 0).verify(&Rem::read(&rem)?.checksum())?;
                    }
                    policy_spec(&cfg, &p)?
                }
            };
            let ch = channel(&cfg, exec)?;
            let opts = RunOptions {
                exec,
                ..RunOptions::default()
            };
            let res = sim::run(&cfg.scenario(), &spec, &ch, opts)?;
            write_run(&out, &header(&cfg), std::slice::from_ref(&res))?;
            println!(
                "{}: {:.4} reselections/user/s, {:.4} RLF/user/s",
                res.report.controller,
                res.report.reselection_rate(),
                res.report.rlf_rate()
            );
        }
        Command::Report { input, percentile } => {
            if !(0.0..=1.0).contains(&percentile) {
                return Err(usage(format!("percentile must be in [0, 1], got {percentile}")));
            }
            let (rows, samples) = collect_runs(&input)?;
            if rows.is_empty() {
                return Err(Failure {
                    code: 1,
                    err: anyhow::anyhow!("no {} found under {}", output::KPI_FILE, input.display()),
                });
            }
            let summary = output::summarize(&rows, &samples, percentile)?;
            print!("{}", output::summary_table(&summary, percentile));
            let path = input.join(output::SUMMARY_FILE);
            std::fs::write(&path, output::summary_csv(&summary, percentile))
                .with_context(|| format!("writing {}", path.display()))?;
        }
        Command::Pipeline { common, out } => {
            let cfg = common.resolve()?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            create_dir(&dir)?;
            let ch = channel(&cfg, exec)?;
            let rem = build_rem(&cfg, &ch, exec)?;
            rem.write(&dir.join("rem.txt"))?;
            let scenario = cfg.scenario();
            let opts = RunOptions {
                record_trace: false,
                exec,
                ..RunOptions::default()
            };
            let mut runs = Vec::new();
            for delta in [3.0, 5.0, 7.0] {
                info!("simulating baseline {delta} dB");
                runs.push(sim::run(&scenario, &ControllerSpec::Baseline { delta_ho_db: delta }, &ch, opts)?);
            }
            for beta in [1.0, 0.0] {
                let mut c = cfg.clone();
                c.solver.beta = beta;
                let outcome = policy_iteration(&rem, &c.training(exec)?)?;
                let name = format!("policy_beta{beta}.txt");
                outcome.policy.write(&dir.join(name))?;
                info!("simulating {}", outcome.policy.label());
                runs.push(sim::run(&scenario, &policy_spec(&cfg, &outcome.policy)?, &ch, opts)?);
            }
            write_run(&dir, &header(&cfg), &runs)?;
            let (rows, samples) = collect_runs(&dir)?;
            let summary = output::summarize(&rows, &samples, 0.10)?;
            print!("{}", output::summary_table(&summary, 0.10));
            std::fs::write(dir.join(output::SUMMARY_FILE), output::summary_csv(&summary, 0.10))
                .context("writing summary")?;
        }
        Command::Shadowing { common, out } => {
            let cfg = common.resolve()?;
            let ch = channel(&cfg, exec)?;
            let file = std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            ch.shadowing
                .write_csv(std::io::BufWriter::new(file))
                .with_context(|| format!("writing {}", out.display()))?;
        }
    }
    Ok(())
}

type Samples = std::collections::BTreeMap<String, Vec<f64>>;

/// All kpi.csv rows under `dir` plus the samples next to them.
fn collect_runs(dir: &Path) -> Result<(Vec<KpiRow>, Samples), Failure> {
    if !dir.is_dir() {
        return Err(anyhow::anyhow!("{} is not a directory", dir.display()).into());
    }
    let mut rows = Vec::new();
    let mut samples = Samples::new();
    let mut stack = vec![dir.to_path_buf()];
    let mut kpi_files = Vec::new();
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).with_context(|| format!("reading {}", d.display()))? {
            let p = entry.context("listing directory")?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n == output::KPI_FILE) {
                kpi_files.push(p);
            }
        }
    }
    kpi_files.sort();
    for kpi in kpi_files {
        let text = std::fs::read_to_string(&kpi).with_context(|| format!("reading {}", kpi.display()))?;
        rows.extend(output::parse_kpi_csv(&text)?);
        let s = kpi.with_file_name(output::SAMPLES_FILE);
        if s.exists() {
            let text = std::fs::read_to_string(&s).with_context(|| format!("reading {}", s.display()))?;
            for (k, v) in output::parse_samples_csv(&text)? {
                samples.entry(k).or_default().extend(v);
            }
        }
    }
    Ok((rows, samples))
}
