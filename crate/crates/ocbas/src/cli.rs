//! Command line front end.

use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ocbas_core::normal;
use ocbas_core::renewal::{DiscretePmf, PosteriorSpec, ReplicationCount};
use ocbas_core::testbeds::smoke::{self, SmokeTestbed, SourceDomain, DEFAULT_HORIZON};
use ocbas_core::testbeds::synthetic::truncated_gaussian_pmf;
use ocbas_core::testbeds::TimeModel;
use ocbas_core::{DesignId, Policy};

use crate::harness::{self, ExperimentPlan, PolicySetup};
use crate::{output, HarnessError, Testbed};

#[derive(Debug, Parser)]
#[command(
    name = "ocbas",
    version,
    about = "Computing budget allocation with stochastic simulation time"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the probability of correct selection of EA, OCBA and OCBAS
    /// over a grid of total budgets.
    Pcs(PcsArgs),
    /// Mean response time of the 16 symmetry-distinct smoke sensor placements.
    SmokeTable(SmokeTableArgs),
    /// Exact distribution of the number of replications that fit in a budget.
    Dist(DistArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestbedArg {
    /// 10 designs, replication time uniform on [11-j, 9+j]
    SyntheticUniform,
    /// 10 designs, truncated discrete Gaussian replication time with spread j
    SyntheticGaussian,
    /// 10 designs, time 5 or 15 correlated with the noise sign through p
    Correlated,
    /// 16 sensor placements, performance equals replication time
    Smoke,
}

#[derive(Debug, Args)]
#[command(after_help = "\
Defaults: synthetic testbeds use OCBA n0=5, dn=10 and OCBAS/EA T0=50, dT=100;
the smoke testbed uses OCBA n0=20, dn=10 and OCBAS/EA T0=200, dT=100.")]
pub struct PcsArgs {
    #[arg(long, value_enum)]
    pub testbed: TestbedArg,
    /// Spread index j (1..=10) of the synthetic time models
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=10))]
    pub spread: u32,
    /// Correlation parameter p in [0, 1] of the correlated testbed
    #[arg(long, default_value_t = 0.5, value_parser = parse_probability)]
    pub p: f64,
    /// Total budgets as start:stop:step (inclusive)
    #[arg(long)]
    pub budgets: BudgetGrid,
    /// Comma-separated subset of ea, ocba, ocbas
    #[arg(long, default_value = "ea,ocba,ocbas", value_delimiter = ',')]
    pub policies: Vec<Policy>,
    #[arg(long, default_value_t = 1000)]
    pub macro_reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output path; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = one per core); output does not depend on it
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Smoke censoring bound in time slots
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: u64,
    /// OCBAS and EA warm-up time per design [default: 50, smoke 200]
    #[arg(long)]
    pub t0: Option<u64>,
    /// OCBAS and EA time increment per round [default: 100]
    #[arg(long)]
    pub delta_t: Option<u64>,
    /// OCBA warm-up replications per design [default: 5, smoke 20]
    #[arg(long)]
    pub n0: Option<u64>,
    /// OCBA replications added per round [default: 10]
    #[arg(long)]
    pub delta_n: Option<u64>,
    /// Where a smoke fire may start
    #[arg(long, value_enum, default_value_t = SourceDomainArg::Interior)]
    pub source_domain: SourceDomainArg,
    /// Replications per smoke design used to fix the true best
    #[arg(long, default_value_t = 100_000)]
    pub truth_reps: u64,
}

#[derive(Debug, Args)]
pub struct SmokeTableArgs {
    /// Replications per design
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output path; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: u64,
    /// Where a fire may start
    #[arg(long, value_enum, default_value_t = SourceDomainArg::Interior)]
    pub source_domain: SourceDomainArg,
    /// Print the orbit representatives and orbit sizes, then exit
    #[arg(long)]
    pub list_orbits: bool,
    /// Write the empirical response-time PMF of this design index (1..=16)
    /// instead of the table
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=16))]
    pub pmf: Option<u32>,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// Replication time model: const:V, uniform:LO,HI, gaussian:I,J
    /// (truncated discrete Gaussian of design I, spread J) or
    /// pmf:START:W1,W2,... (weights from START on)
    #[arg(long)]
    pub time: TimeSpec,
    /// Time budget
    #[arg(long)]
    pub budget: u64,
    /// Also print the posterior CDF of the design mean on a grid
    #[arg(long)]
    pub posterior: bool,
    /// Sample mean of the design
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mean: f64,
    /// Observation noise standard deviation
    #[arg(long, required_if_eq("posterior", "true"))]
    pub sigma: Option<f64>,
    /// Normal prior MEAN,SD used when no replication may complete
    #[arg(long, allow_hyphen_values = true)]
    pub prior_normal: Option<NormalPrior>,
    /// Number of grid points (odd counts include the mean itself)
    #[arg(long, default_value_t = 41)]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceDomainArg {
    /// The 81 lattice points strictly inside the boundary
    Interior,
    /// All 121 lattice points
    Full,
}

impl From<SourceDomainArg> for SourceDomain {
    fn from(a: SourceDomainArg) -> Self {
        match a {
            SourceDomainArg::Interior => SourceDomain::Interior,
            SourceDomainArg::Full => SourceDomain::Full,
        }
    }
}

/// Inclusive `start:stop:step` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetGrid(pub Vec<u64>);

impl FromStr for BudgetGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.trim().parse::<u64>().map_err(|e| format!("{p:?}: {e}"));
        let (start, stop, step) = match parts.as_slice() {
            [single] => {
                let v = num(single)?;
                (v, v, 1)
            }
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err("expected start:stop:step or a single budget".into()),
        };
        if step == 0 || start == 0 || stop < start {
            return Err("need 0 < start <= stop and step > 0".into());
        }
        Ok(BudgetGrid((start..=stop).step_by(step as usize).collect()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSpec(pub DiscretePmf);

impl FromStr for TimeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = s.split_once(':').ok_or("expected KIND:ARGS")?;
        let ints = |r: &str| -> Result<Vec<u64>, String> {
            r.split(',')
                .map(|p| p.trim().parse::<u64>().map_err(|e| format!("{p:?}: {e}")))
                .collect()
        };
        let pmf = match kind {
            "const" => match ints(rest)?.as_slice() {
                [v] if *v >= 1 => Ok(DiscretePmf::point_mass(*v)),
                _ => return Err("const takes one value >= 1".into()),
            },
            "uniform" => match ints(rest)?.as_slice() {
                [lo, hi] if *lo >= 1 => DiscretePmf::uniform(*lo, *hi),
                _ => return Err("uniform takes LO,HI with LO >= 1".into()),
            },
            "gaussian" => match ints(rest)?.as_slice() {
                [i, j] if (1..=10).contains(i) => {
                    truncated_gaussian_pmf(DesignId::new(*i as u32), *j as u32)
                }
                _ => return Err("gaussian takes I,J with I in 1..=10".into()),
            },
            "pmf" => {
                let (start, weights) = rest.split_once(':').ok_or("pmf takes START:W1,W2,...")?;
                let start: u64 = start
                    .trim()
                    .parse()
                    .map_err(|e| format!("{start:?}: {e}"))?;
                if start == 0 {
                    return Err("replication times start at 1".into());
                }
                let weights = weights
                    .split(',')
                    .map(|w| w.trim().parse::<f64>().map_err(|e| format!("{w:?}: {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                DiscretePmf::from_weights(start, weights)
            }
            _ => return Err(format!("unknown time model {kind:?}")),
        };
        pmf.map(TimeSpec).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalPrior {
    pub mean: f64,
    pub sd: f64,
}

impl FromStr for NormalPrior {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (m, sd) = s.split_once(',').ok_or("expected MEAN,SD")?;
        let mean = m.trim().parse::<f64>().map_err(|e| e.to_string())?;
        let sd = sd.trim().parse::<f64>().map_err(|e| e.to_string())?;
        if sd.is_nan() || sd <= 0.0 {
            return Err("prior SD must be positive".into());
        }
        Ok(NormalPrior { mean, sd })
    }
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err("must lie in [0, 1]".into())
    }
}

/// Failure of a subcommand; usage errors map to exit code 2, the rest to 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        CliError::Runtime(e.into())
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Pcs(args) => cmd_pcs(&args, stdout, stderr),
        Command::SmokeTable(args) => cmd_smoke_table(&args, stdout),
        Command::Dist(args) => cmd_dist(&args, stdout),
    }
}

fn io_err(e: io::Error) -> CliError {
    CliError::Runtime(e.into())
}

pub fn cmd_pcs(
    args: &PcsArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let mut testbed = match args.testbed {
        TestbedArg::SyntheticUniform => Testbed::synthetic(TimeModel::UniformSpread(args.spread)),
        TestbedArg::SyntheticGaussian => {
            Testbed::synthetic(TimeModel::TruncatedGaussian(args.spread))
        }
        TestbedArg::Correlated => Testbed::synthetic(TimeModel::CorrelatedTwoPoint(args.p)),
        // provisional true best so the plan validates before any simulation
        TestbedArg::Smoke => Ok(Testbed::Smoke(
            SmokeTestbed::representatives()
                .with_horizon(args.horizon)
                .with_source_domain(args.source_domain.into())
                .with_true_best(DesignId::new(1)),
        )),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut policies: Vec<Policy> = Vec::new();
    for p in &args.policies {
        if !policies.contains(p) {
            policies.push(*p);
        }
    }
    let policies = policies
        .into_iter()
        .map(|policy| {
            let mut setup = testbed.default_setup(policy);
            let (warmup, increment) = match policy {
                Policy::Ocba => (args.n0, args.delta_n),
                _ => (args.t0, args.delta_t),
            };
            setup.warmup = warmup.unwrap_or(setup.warmup);
            setup.increment = increment.unwrap_or(setup.increment);
            setup
        })
        .collect::<Vec<PolicySetup>>();
    let mut plan = ExperimentPlan {
        testbed: testbed.clone(),
        policies,
        budgets: args.budgets.0.clone(),
        macro_reps: args.macro_reps,
        base_seed: args.seed,
    };
    plan.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if args.testbed == TestbedArg::Smoke && args.truth_reps == 0 {
        return Err(CliError::Usage("--truth-reps must be at least 1".into()));
    }

    let result = harness::with_workers(args.workers, || -> Result<_, HarnessError> {
        if let Testbed::Smoke(provisional) = &testbed {
            let (smoke, _) =
                harness::smoke_with_truth(provisional.clone(), args.truth_reps, args.seed)?;
            testbed = Testbed::Smoke(smoke);
            plan.testbed = testbed.clone();
        }
        harness::run_pcs_experiment(&plan)
    })??;

    let summary: &mut dyn Write = match &args.out {
        Some(path) => {
            output::write_csv(&result, path)?;
            stdout
        }
        None => {
            output::write_pcs(&result, &mut *stdout).map_err(|e| CliError::Runtime(e.into()))?;
            stderr
        }
    };
    writeln!(
        summary,
        "testbed {}, {} macro-replications, seed {}",
        plan.testbed, args.macro_reps, args.seed
    )
    .map_err(io_err)?;
    writeln!(
        summary,
        "{:<6} {:>8} {:>8} {:>8} {:>12}",
        "policy", "budget", "pcs", "se", "consumed"
    )
    .map_err(io_err)?;
    for r in &result.rows {
        writeln!(
            summary,
            "{:<6} {:>8} {:>8.4} {:>8.4} {:>12.1}",
            r.policy.name(),
            r.budget,
            r.pcs,
            r.std_err,
            r.mean_consumed_time
        )
        .map_err(io_err)?;
    }
    if !result.failures.is_empty() {
        for f in &result.failures {
            writeln!(
                summary,
                "failed: {} at budget {} (replication {}): {}",
                f.policy, f.budget, f.replication, f.message
            )
            .map_err(io_err)?;
        }
        return Err(CliError::Runtime(anyhow::anyhow!(
            "{} experiment cell(s) failed",
            result.failures.len()
        )));
    }
    Ok(())
}

pub fn cmd_smoke_table(args: &SmokeTableArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.list_orbits {
        let orbits = smoke::symmetry_reduce(&smoke::enumerate_placements());
        writeln!(stdout, "index,representative,orbit_size").map_err(io_err)?;
        for (i, o) in orbits.iter().enumerate() {
            writeln!(
                stdout,
                "{},\"{}\",{}",
                i + 1,
                o.representative,
                o.members.len()
            )
            .map_err(io_err)?;
        }
        let total: usize = orbits.iter().map(|o| o.members.len()).sum();
        writeln!(
            stdout,
            "# {} orbits covering {} placements",
            orbits.len(),
            total
        )
        .map_err(io_err)?;
        return Ok(());
    }
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if args.horizon == 0 {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    let testbed = SmokeTestbed::representatives()
        .with_horizon(args.horizon)
        .with_source_domain(args.source_domain.into());
    let mut buf = Vec::new();
    harness::with_workers(args.workers, || -> Result<(), HarnessError> {
        match args.pmf {
            Some(index) => {
                let pmf =
                    harness::empirical_pmf(&testbed, DesignId::new(index), args.reps, args.seed)?;
                output::write_pmf(&pmf, ["response_time", "frequency"], &mut buf)
            }
            None => {
                let table = harness::estimate_smoke_table(&testbed, args.reps, args.seed)?;
                output::write_smoke_table(&table, &mut buf)
            }
        }
        .map_err(|source| HarnessError::Csv {
            path: args.out.clone().unwrap_or_else(|| "<stdout>".into()),
            source,
        })
    })??;
    emit(&buf, args.out.as_ref(), stdout)
}

fn emit(buf: &[u8], out: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, buf).map_err(|source| {
            HarnessError::Io {
                path: path.clone(),
                source,
            }
            .into()
        }),
        None => stdout.write_all(buf).map_err(io_err),
    }
}

pub fn cmd_dist(args: &DistArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let pmf = &args.time.0;
    let count =
        ReplicationCount::new(pmf, args.budget).map_err(|e| CliError::Usage(e.to_string()))?;
    writeln!(stdout, "replications,probability").map_err(io_err)?;
    for (c, p) in count.pmf() {
        writeln!(stdout, "{c},{p}").map_err(io_err)?;
    }
    if !args.posterior {
        return Ok(());
    }
    let sigma = args
        .sigma
        .ok_or_else(|| CliError::Usage("--posterior needs --sigma".into()))?;
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(CliError::Usage("--sigma must be positive".into()));
    }
    if args.grid_points < 2 {
        return Err(CliError::Usage("--grid-points must be at least 2".into()));
    }
    let spec = PosteriorSpec {
        mean: args.mean,
        sigma,
        time_pmf: pmf.clone(),
        budget: args.budget,
        prior_cdf: args.prior_normal.map(|NormalPrior { mean, sd }| {
            Arc::new(move |x: f64| normal::cdf((x - mean) / sd)) as ocbas_core::renewal::PriorCdf
        }),
    };
    let posterior = spec.posterior().map_err(|e| CliError::Runtime(e.into()))?;
    // +-4 standard deviations of the sample mean at the expected count
    let half_width = 4.0 * sigma / count.mean().max(1.0).sqrt();
    let mid = (args.grid_points - 1) as f64 / 2.0;
    writeln!(stdout).map_err(io_err)?;
    writeln!(stdout, "x,cdf").map_err(io_err)?;
    for i in 0..args.grid_points {
        let x = args.mean + (i as f64 - mid) / mid * half_width;
        writeln!(stdout, "{x},{}", posterior.cdf(x)).map_err(io_err)?;
    }
    Ok(())
}
