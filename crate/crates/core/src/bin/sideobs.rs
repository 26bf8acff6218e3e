use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sideobs::bounds::{
    adversarial_instance, asymptotic_allocation, minimax_bound_value, relaxed_bound, BoundBudget, RegimeChoice,
};
use sideobs::config::ConfigFile;
use sideobs::graph::{classify, FeedbackGraph};
use sideobs::harness::{run_batch, scaling_sweep, write_csv};

#[derive(Parser)]
#[command(name = "sideobs", version, about = "Regret bounds and simulations for bandits with Gaussian side observations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Observability classes, independence and weak domination numbers.
    Classify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Finite-time relaxed lower bound, optionally with the asymptotic program.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        budget: f64,
        #[arg(long)]
        horizon: u64,
        #[arg(long)]
        asymptotic: bool,
        /// Uniform standard deviation for the asymptotic program.
        #[arg(long, requires = "asymptotic")]
        sigma: Option<f64>,
    },
    /// Worst-case mean vector and minimax bound for the config's observation structure.
    Adversarial {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
        regime: RegimeArg,
        #[arg(long)]
        horizon: u64,
        #[arg(long)]
        alpha: f64,
    },
    /// Replicated episodes; writes regret traces as CSV and a summary to stdout.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// One batch per horizon and the fitted regret-growth exponent.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        horizons: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Auto,
    Strong,
    Weak,
}

impl From<RegimeArg> for RegimeChoice {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Auto => RegimeChoice::Auto,
            RegimeArg::Strong => RegimeChoice::Strong,
            RegimeArg::Weak => RegimeChoice::Weak,
        }
    }
}

type Failure = String;

fn fail(e: impl std::fmt::Display) -> Failure {
    e.to_string()
}

fn uniform_sigma(cfg: &ConfigFile) -> Result<f64, Failure> {
    cfg.sigma
        .uniform_sigma()
        .ok_or_else(|| "sigma: needs uniform finite variances".to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("out: {}: {e}", path.display()))
}

fn classify_cmd(config: &Path) -> Result<Value, Failure> {
    let cfg = ConfigFile::load(config).map_err(fail)?;
    let graph = cfg.graph().map_err(fail)?;
    let r = classify(&graph);
    Ok(json!({
        "regime": r.regime.name(),
        "kappa": r.independence_number,
        "rho": r.weak_domination_number,
        "strong_actions": r.strong_actions,
        "weak_actions": r.weak_actions,
        "witness_independent_set": r.independent_witness,
        "witness_dominating_set": r.dominating_witness,
        "exact": r.exact,
    }))
}

fn bounds_cmd(config: &Path, budget: f64, horizon: u64, asymptotic: bool, sigma: Option<f64>) -> Result<Value, Failure> {
    let cfg = ConfigFile::load(config).map_err(fail)?;
    let env = cfg.environment().map_err(fail)?;
    let budget = BoundBudget::new(budget, horizon).map_err(fail)?;
    let report = relaxed_bound(&env, &budget).map_err(fail)?;
    let per_action: Vec<Value> = report
        .per_action
        .iter()
        .map(|q| json!({"action": q.action, "eps_plus": q.eps_plus, "eps_minus": q.eps_minus, "m": q.m}))
        .collect();
    let mut out = json!({
        "b_prime": report.value,
        "status": report.status,
        "allocation": report.allocation,
        "per_action": per_action,
        "note": report.note,
    });
    if asymptotic {
        let s = match sigma {
            Some(s) => s,
            None => uniform_sigma(&cfg)?,
        };
        let graph = FeedbackGraph::from_sigma(&env.sigma).map_err(fail)?;
        let a = asymptotic_allocation(&graph, &env.theta, s).map_err(fail)?;
        out["asymptotic_value"] = json!(a.value);
        out["asymptotic_allocation"] = json!(a.allocation);
        out["asymptotic_note"] = json!(a.note);
    }
    Ok(out)
}

fn adversarial_cmd(config: &Path, regime: RegimeArg, horizon: u64, alpha: f64) -> Result<Value, Failure> {
    let cfg = ConfigFile::load(config).map_err(fail)?;
    let graph = cfg.graph().map_err(fail)?;
    let sigma = uniform_sigma(&cfg)?;
    let inst = adversarial_instance(&graph, cfg.d_cap, sigma, horizon, alpha, regime.into()).map_err(fail)?;
    let mm = minimax_bound_value(&graph, cfg.d_cap, sigma, horizon, alpha).map_err(fail)?;
    let budget = BoundBudget::new(inst.budget, horizon).map_err(fail)?;
    let relaxed = relaxed_bound(&inst.env, &budget).map_err(fail)?;
    Ok(json!({
        "regime": inst.regime.name(),
        "construction": inst.construction,
        "theta": inst.env.theta,
        "D": cfg.d_cap,
        "epsilon": inst.epsilon,
        "budget": inst.budget,
        "best": inst.best,
        "runners_up": inst.runners_up,
        "kappa": inst.kappa,
        "rho": inst.rho,
        "relaxed_bound": relaxed.value,
        "relaxed_status": relaxed.status,
        "minimax_value": mm.value,
        "minimax_regret_bound": mm.regret_bound,
        "minimax_valid": mm.valid,
    }))
}

fn simulate_cmd(config: &Path, out: &Path) -> Result<Value, Failure> {
    let cfg = ConfigFile::load(config).map_err(fail)?;
    let sim = cfg.simulation().map_err(fail)?;
    let batch = run_batch(&sim).map_err(|e| format!("algorithm: {e}"))?;
    write_csv(create(out)?, std::slice::from_ref(&batch)).map_err(fail)?;
    Ok(json!({
        "algorithm": batch.algorithm,
        "env_id": batch.env_id,
        "replications": sim.replications,
        "checkpoints": batch.stats.checkpoints,
    }))
}

fn sweep_cmd(config: &Path, horizons: &[u64], out: &Path) -> Result<Value, Failure> {
    let cfg = ConfigFile::load(config).map_err(fail)?;
    let result = scaling_sweep(&cfg, horizons).map_err(fail)?;
    write_csv(create(out)?, &result.batches).map_err(fail)?;
    serde_json::to_value(result.summary()).map_err(fail)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify { config } => classify_cmd(config),
        Command::Bounds {
            config,
            budget,
            horizon,
            asymptotic,
            sigma,
        } => bounds_cmd(config, *budget, *horizon, *asymptotic, *sigma),
        Command::Adversarial {
            config,
            regime,
            horizon,
            alpha,
        } => adversarial_cmd(config, *regime, *horizon, *alpha),
        Command::Simulate { config, out } => simulate_cmd(config, out),
        Command::Sweep { config, horizons, out } => sweep_cmd(config, horizons, out),
    };
    match result {
        Ok(value) => {
            let text = serde_json::to_string_pretty(&value).expect("json values serialize");
            // a closed stdout is not a failure of the computation
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
