//! Command-line surface: analyze, optimize, sweep, simulate, serve.
//!
//! Every command is deterministic given its config and seed. Exit codes:
//! 0 success, 2 config error, 3 handshake/parameter-hash error, 4
//! runtime/session error. The `COINFLIP_LOG` environment variable sets the
//! log level.

use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bounds::CheatReport;
use crate::config::Config;
use crate::engine::tcp::{serve, ServeOptions};
use crate::engine::{run_many, run_session, Role, SessionConfig, SessionSeeds, StrategyKind};
use crate::error::Error;
use crate::fairness::{
    abort_rows_to_csv, distance_rows_to_csv, optimize_params, sweep_abort, sweep_distance,
};

#[derive(Parser)]
#[command(name = "coinflip", version, about = "Quantum coin-flipping laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepMode {
    Abort,
    Distance,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyPair {
    /// Honest sender and receiver.
    Honest,
    /// Optimal-state cheating sender against an honest receiver.
    CheatingAlice,
    /// Photon-aware cheating receiver against an honest sender.
    CheatingBob,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Alice,
    Bob,
    Channel,
}

#[derive(Subcommand)]
enum Command {
    /// Print the cheating-probability report for a configuration.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Search the mu grid for the operating point with the smallest fair
    /// cheating probability at the abort target.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's honest-abort target.
        #[arg(long)]
        target_h: Option<f64>,
    },
    /// Emit a sweep curve as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: SweepMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run Monte-Carlo protocol sessions and print a summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        sessions: u64,
        #[arg(long, value_enum, default_value_t = StrategyPair::Honest)]
        strategy: StrategyPair,
        /// Coin value a cheating strategy aims for.
        #[arg(long, default_value_t = 0)]
        target_bit: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write one transcript file per session into this directory.
        #[arg(long)]
        transcripts: Option<PathBuf>,
    },
    /// Run one endpoint of a TCP session triple.
    Serve {
        #[arg(long, value_enum)]
        role: RoleArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bind address for the channel role (ADDR:PORT).
        #[arg(long)]
        listen: Option<String>,
        /// Channel address for the party roles (ADDR:PORT).
        #[arg(long)]
        connect: Option<String>,
        #[arg(long, default_value_t = 1)]
        sessions: u64,
        /// Transcript directory (channel role).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-message timeout in seconds.
        #[arg(long, default_value_t = 30)]
        timeout: u64,
    },
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) => 2,
        Error::ParamsMismatch { .. } => 3,
        _ => 4,
    }
}

fn fail(err: Error) -> i32 {
    eprintln!("error: {err}");
    exit_code_for(&err)
}

/// Parses the process arguments and runs the selected command, returning
/// the process exit code.
pub fn main_entry() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter("COINFLIP_LOG")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => 0,
        Err(err) => fail(err),
    }
}

fn run(command: Command) -> crate::error::Result<()> {
    match command {
        Command::Analyze { config } => {
            let cfg = Config::load(&config)?;
            let report = CheatReport::analyze(&cfg.params)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Optimize { config, target_h } => {
            let cfg = Config::load(&config)?;
            let target = target_h.unwrap_or(cfg.target_abort);
            let opt = optimize_params(&cfg.params, &cfg.mu_grid, target)?;
            let out = serde_json::json!({
                "target_abort": target,
                "mu": opt.mu,
                "rounds": opt.rounds,
                "y": opt.y,
                "p_fair": opt.p_fair,
                "report": opt.report,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
        Command::Sweep { config, mode, out } => {
            let cfg = Config::load(&config)?;
            let csv = match mode {
                SweepMode::Abort => {
                    let rows = sweep_abort(&cfg.params, &cfg.mu_grid, &cfg.abort_sweep)?;
                    for row in &rows {
                        if let Err(e) = &row.outcome {
                            log::warn!("abort row H={} infeasible: {e}", row.h);
                        }
                    }
                    abort_rows_to_csv(&rows)
                }
                SweepMode::Distance => {
                    let rows = sweep_distance(&cfg, cfg.target_abort)?;
                    for row in &rows {
                        if let Err(e) = &row.outcome {
                            log::warn!("distance row km={} infeasible: {e}", row.km);
                        }
                    }
                    distance_rows_to_csv(&rows)
                }
            };
            std::fs::write(&out, csv)?;
            log::info!("wrote {}", out.display());
            Ok(())
        }
        Command::Simulate {
            config,
            sessions,
            strategy,
            target_bit,
            seed,
            transcripts,
        } => {
            let cfg = Config::load(&config)?;
            if target_bit > 1 {
                return Err(Error::Config("target bit must be 0 or 1".into()));
            }
            let (alice, bob) = match strategy {
                StrategyPair::Honest => (StrategyKind::Honest, StrategyKind::Honest),
                StrategyPair::CheatingAlice => (
                    StrategyKind::CheatingAlicePm { target: target_bit },
                    StrategyKind::Honest,
                ),
                StrategyPair::CheatingBob => (
                    StrategyKind::Honest,
                    StrategyKind::CheatingBobPhotonAware { target: target_bit },
                ),
            };
            let session_cfg = SessionConfig::for_strategies(cfg.params.clone(), &alice, &bob);
            if sessions == 0 {
                println!("{}", serde_json::json!({ "sessions": 0 }));
                return Ok(());
            }
            if let Some(dir) = &transcripts {
                std::fs::create_dir_all(dir)?;
                let seeds = SessionSeeds::from_master(seed);
                let mut stats = crate::engine::RunStats::default();
                for sid in 0..sessions {
                    let t = run_session(alice, bob, &session_cfg, seeds, sid)?;
                    std::fs::write(dir.join(format!("session_{sid:06}.jsonl")), t.to_jsonl())?;
                    stats = merged(stats, &t, target_bit);
                }
                print_summary(&stats, target_bit);
            } else {
                let stats = run_many(alice, bob, &session_cfg, seed, sessions, target_bit)?;
                print_summary(&stats, target_bit);
            }
            Ok(())
        }
        Command::Serve {
            role,
            config,
            seed,
            listen,
            connect,
            sessions,
            out,
            timeout,
        } => {
            let cfg = Config::load(&config)?;
            let opts = ServeOptions {
                role: match role {
                    RoleArg::Alice => Role::Alice,
                    RoleArg::Bob => Role::Bob,
                    RoleArg::Channel => Role::Channel,
                },
                listen,
                connect,
                sessions,
                seed,
                out_dir: out,
                timeout: Duration::from_secs(timeout),
            };
            let summary = serve(&opts, &cfg.params, 10_000)?;
            let accepted = summary
                .verdicts
                .iter()
                .filter(|v| v.coin().is_some())
                .count();
            println!(
                "{}",
                serde_json::json!({
                    "role": format!("{}", summary.role),
                    "sessions": summary.verdicts.len(),
                    "accepted": accepted,
                    "verdicts": summary.verdicts,
                })
            );
            Ok(())
        }
    }
}

fn merged(
    mut stats: crate::engine::RunStats,
    t: &crate::engine::Transcript,
    target: u8,
) -> crate::engine::RunStats {
    let mut one = crate::engine::RunStats::default();
    one.sessions = 1;
    match &t.verdict {
        crate::engine::SessionVerdict::Accepted { coin } => {
            one.accepted = 1;
            one.coin_zero = (*coin == 0) as u64;
            one.coin_on_target = (*coin == target) as u64;
        }
        crate::engine::SessionVerdict::Aborted { .. } => one.aborted = 1,
        crate::engine::SessionVerdict::Incomplete => {}
    }
    stats.merge(&one);
    stats
}

fn print_summary(stats: &crate::engine::RunStats, target: u8) {
    let summary = serde_json::json!({
        "sessions": stats.sessions,
        "accepted": stats.accepted,
        "aborted": stats.aborted,
        "abort_rate": stats.abort_rate(),
        "no_detection": stats.no_detection,
        "outcome_mismatch": stats.outcome_mismatch,
        "coin_zero": stats.coin_zero,
        "target_bit": target,
        "target_rate": stats.coin_on_target as f64 / stats.sessions.max(1) as f64,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
}
