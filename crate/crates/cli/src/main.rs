use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use offload_cli::commands::{self, AnalyzeInput, Exit, PolicySpec, DEFAULT_RHOS, POLICY_FILE, VALUE_FILE};
use offload_cli::format::fmt_g;
use offload_cli::RunConfig;
use offload_core::Baseline;

/// Delay-optimal service mode selection for a two-stage offloading queue.
///
/// Exit codes: 0 success, 1 usage or config error, 2 check failure,
/// 3 value iteration did not converge.
#[derive(Parser, Debug)]
#[command(name = "offload", version)]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for simulations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true, env = "OFFLOAD_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    rho: Option<f64>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    mu0: Option<f64>,
    #[arg(long = "K", global = true)]
    k: Option<f64>,
    #[arg(long, global = true)]
    f: Option<f64>,
    #[arg(long, global = true)]
    n_max: Option<u32>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<u64>,
    #[arg(long, global = true)]
    margin: Option<u32>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    warmup: Option<f64>,
    #[arg(long, global = true)]
    replications: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Value iteration; writes value.bin, policy.bin and solve.json.
    Solve {
        /// Continue from the value checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Policy grid of one (i2, i1) slice as CSV.
    Grid {
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        i2: u32,
        #[arg(long, default_value_t = 1)]
        i1: u32,
        /// Output file (default `<out-dir>/grid_i2<i2>_i1<i1>.csv`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Structure checks on a solved policy or a baseline.
    Analyze {
        #[arg(long, conflicts_with = "baseline")]
        policy: Option<PathBuf>,
        #[arg(long, conflicts_with = "baseline")]
        values: Option<PathBuf>,
        /// Analyze `offload_only` or `non_idling` instead of artifacts.
        #[arg(long)]
        baseline: Option<Baseline>,
    },
    /// Independent replications of one policy.
    Simulate {
        /// `optimal`, `offload_only`, `non_idling`, or a policy file.
        #[arg(long, default_value = "optimal")]
        policy: PolicySpec,
        /// Write every event of replication 0 to this CSV.
        #[arg(long)]
        event_log: Option<PathBuf>,
    },
    /// Mean delay against utilization for several policies.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        rhos: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "optimal,offload_only,non_idling")]
        policies: Vec<PolicySpec>,
    },
    /// Paired comparison of two policies on coupled sample paths.
    Couple {
        #[arg(long)]
        a: PolicySpec,
        #[arg(long)]
        b: PolicySpec,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.rho {
        cfg.set_rho(v);
    }
    if let Some(v) = o.lambda {
        cfg.set_lambda(v);
    }
    if let Some(v) = o.alpha {
        cfg.set_alpha(v);
    }
    if let Some(v) = o.beta {
        cfg.set_beta(v);
    }
    let m = &mut cfg.model;
    m.mu0 = o.mu0.or(m.mu0);
    m.k = o.k.or(m.k);
    m.f = o.f.or(m.f);
    let s = &mut cfg.solver;
    s.n_max = o.n_max.or(s.n_max);
    s.tol = o.tol.or(s.tol);
    s.max_iters = o.max_iters.or(s.max_iters);
    s.margin = o.margin.or(s.margin);
    let sim = &mut cfg.sim;
    sim.horizon = o.horizon.or(sim.horizon);
    sim.warmup = o.warmup.or(sim.warmup);
    sim.replications = o.replications.or(sim.replications);
    sim.seed = cli.seed.or(sim.seed);
    if let Some(dir) = &cli.out_dir {
        cfg.output.out_dir = Some(dir.clone());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Exit> {
    let cfg = build_config(&cli)?;
    let out_dir = cfg.out_dir();
    match cli.cmd {
        Cmd::Solve { resume } => {
            let r = commands::cmd_solve(&cfg, resume)?;
            let m = &r.metadata;
            println!(
                "status={} iterations={} residual={} error_bound={} nu={} alpha={} beta={}",
                m.status,
                m.iterations,
                fmt_g(m.residual),
                fmt_g(m.error_bound),
                fmt_g(m.nu),
                fmt_g(m.alpha),
                fmt_g(m.beta)
            );
            println!("wrote {}", r.out_dir.display());
            Ok(r.exit)
        }
        Cmd::Grid {
            policy,
            i2,
            i1,
            output,
        } => {
            let path = commands::cmd_grid(&cfg, policy.as_deref(), i2, i1, output.as_deref())?;
            println!("wrote {}", path.display());
            Ok(Exit::Ok)
        }
        Cmd::Analyze {
            policy,
            values,
            baseline,
        } => {
            let input = match baseline {
                Some(b) => AnalyzeInput::Baseline(b),
                None => {
                    let default_values = out_dir.join(VALUE_FILE);
                    AnalyzeInput::Artifacts {
                        policy: policy.unwrap_or_else(|| out_dir.join(POLICY_FILE)),
                        values: values.or_else(|| default_values.exists().then_some(default_values)),
                    }
                }
            };
            let r = commands::cmd_analyze(&cfg, &input)?;
            print!("{}", r.text);
            Ok(r.exit)
        }
        Cmd::Simulate { policy, event_log } => {
            let r = commands::cmd_simulate(&cfg, &policy, event_log.as_deref())?;
            let d = &r.summary.report;
            println!(
                "policy={} mean_delay={} ci_halfwidth={} avg_jobs={} little_law={} conserves_jobs={}",
                d.policy,
                fmt_g(d.sojourn.mean),
                fmt_g(d.sojourn.half_width),
                fmt_g(d.time_avg_jobs.mean),
                r.summary.little_law,
                r.summary.conserves_jobs
            );
            if let Some(a) = &r.summary.event_log_audit {
                println!("event_log=ok events={} arrivals={} departures={}", a.events, a.arrivals, a.departures);
            }
            if let Some(v) = &r.summary.event_log_violation {
                eprintln!("event log violation: {v}");
            }
            Ok(r.exit)
        }
        Cmd::Sweep { rhos, policies } => {
            let rhos = if rhos.is_empty() { DEFAULT_RHOS.to_vec() } else { rhos };
            let r = commands::cmd_sweep(&cfg, &rhos, &policies)?;
            print!("{}", r.csv);
            Ok(r.exit)
        }
        Cmd::Couple { a, b } => {
            let r = commands::cmd_couple(&cfg, &a, &b)?;
            print!("{}", r.text);
            Ok(r.exit)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Exit::Config.code())
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(exit) => ExitCode::from(exit.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Exit::Config.code())
        }
    }
}
