//! Command-line surface.
//!
//! Exit codes: 0 = feasible / check passed, 1 = infeasible / check failed,
//! 2 = any error (bad usage, unparsable files, mode mismatches).

use std::fs;
use std::io::{Read, Write};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;

use envyfix_core::arith::{ceil_div, gcd_list};
use envyfix_core::bounded::{dispatch, Mode};
use envyfix_core::generators::{
    gen_binpacking, gen_clique, gen_indset, gen_random, BinPackingInput, RandomSpec, SupplyProfile,
};
use envyfix_core::oracle::{oracle_bounded, DEFAULT_ENUMERATION_CAP};
use envyfix_core::unbounded::vectors_proportional;
use envyfix_core::{Extension, Instance, Supply};

use crate::format::{
    parse_graph, parse_instance, parse_verdict, serialize_instance, serialize_verdict, VerdictDoc,
    WitnessDoc,
};

#[derive(Debug, Parser)]
#[command(
    name = "envyfix",
    version,
    about = "Decide whether envy in a fixed initial allocation can be removed by adding pool items"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an instance file ("-" reads stdin) and print a verdict
    Solve {
        file: String,
        /// auto, unbounded, branch, ilp, or hybrid
        #[arg(long, default_value = "auto")]
        mode: String,
        /// Write the verdict here instead of stdout
        #[arg(long)]
        out: Option<String>,
    },
    /// Re-check a verdict file against its instance
    Check { instance: String, verdict: String },
    /// Decide by brute-force enumeration of extensions up to a size bound
    Oracle {
        file: String,
        /// Size bound; defaults to the instance budget when finite
        #[arg(long)]
        k: Option<u64>,
        /// Enumeration cap (number of extensions checked)
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
    /// Emit instance files
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Print the envy edges of the initial allocation
    EnvyGraph { file: String },
}

#[derive(Debug, Subcommand)]
enum GenerateCmd {
    /// Instance that is feasible iff the graph has a clique of size l
    Clique {
        /// Graph file ("-" reads stdin)
        graph: String,
        #[arg(long)]
        l: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Instance that is feasible at budget l iff the graph has an
    /// independent set of size l
    Indset {
        /// Graph file ("-" reads stdin)
        graph: String,
        #[arg(long)]
        l: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Instance that is feasible iff the weights pack into the bins exactly
    Binpacking {
        /// Comma-separated weights, e.g. --u 1,1,2
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<u64>,
        #[arg(long)]
        bins: u64,
        #[arg(long)]
        binsize: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Seeded random instance
    Random(RandomArgs),
}

#[derive(Debug, Args)]
struct RandomArgs {
    #[arg(long)]
    agents: usize,
    #[arg(long)]
    pool: usize,
    /// Number of initially allocated items (defaults to the agent count)
    #[arg(long)]
    initial_items: Option<usize>,
    #[arg(long, default_value_t = 10)]
    max_value: u64,
    /// "inf", "finite:MAX", or "mixed:MAX"
    #[arg(long, default_value = "inf")]
    supplies: String,
    /// "inf" or an integer
    #[arg(long, default_value = "inf")]
    budget: String,
    /// Force the first N agents into one proportionality class
    #[arg(long)]
    proportional_group: Option<usize>,
    /// Restrict all valuations to {0, 1}
    #[arg(long)]
    binary: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<String>,
}

fn read_input(path: &str) -> Result<Vec<u8>, String> {
    if path == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| format!("cannot read stdin: {e}"))?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| format!("cannot read {path}: {e}"))
    }
}

fn write_output(out: Option<&str>, content: &str) -> Result<(), String> {
    match out {
        None | Some("-") => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .map_err(|e| format!("cannot write stdout: {e}"))?;
            Ok(())
        }
        Some(path) => fs::write(path, content).map_err(|e| format!("cannot write {path}: {e}")),
    }
}

fn parse_supply_profile(s: &str) -> Result<SupplyProfile, String> {
    if s == "inf" {
        return Ok(SupplyProfile::AllInfinite);
    }
    if let Some(max) = s.strip_prefix("finite:") {
        let max = max
            .parse::<u64>()
            .map_err(|_| format!("bad supply bound in `{s}`"))?;
        return Ok(SupplyProfile::FiniteAtMost(max));
    }
    if let Some(max) = s.strip_prefix("mixed:") {
        let max = max
            .parse::<u64>()
            .map_err(|_| format!("bad supply bound in `{s}`"))?;
        return Ok(SupplyProfile::Mixed(max));
    }
    Err(format!(
        "bad --supplies `{s}`: expected inf, finite:MAX, or mixed:MAX"
    ))
}

fn parse_budget(s: &str) -> Result<Supply, String> {
    if s == "inf" {
        return Ok(Supply::Infinite);
    }
    s.parse::<u64>()
        .map(Supply::Finite)
        .map_err(|_| format!("bad --budget `{s}`: expected inf or an integer"))
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    match execute(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Solve { file, mode, out } => {
            let mode: Mode = mode.parse().map_err(|e| format!("{e}"))?;
            let inst = parse_instance(&read_input(&file)?).map_err(|e| e.to_string())?;
            let (kind, verdict) = dispatch(&inst, mode).map_err(|e| e.to_string())?;
            let doc = VerdictDoc::from_verdict(kind.as_str(), &verdict);
            write_output(out.as_deref(), &serialize_verdict(&doc))?;
            Ok(if verdict.is_feasible() { 0 } else { 1 })
        }
        Command::Check { instance, verdict } => {
            let inst = parse_instance(&read_input(&instance)?).map_err(|e| e.to_string())?;
            let doc = parse_verdict(&read_input(&verdict)?).map_err(|e| e.to_string())?;
            let failures = check_verdict(&inst, &doc)?;
            if failures.is_empty() {
                println!("ok");
                Ok(0)
            } else {
                for failure in failures {
                    eprintln!("check failed: {failure}");
                }
                Ok(1)
            }
        }
        Command::Oracle { file, k, cap } => {
            let inst = parse_instance(&read_input(&file)?).map_err(|e| e.to_string())?;
            let k = match (k, inst.budget) {
                (Some(k), _) => k,
                (None, Supply::Finite(b)) => b,
                (None, Supply::Infinite) => {
                    return Err("oracle needs --k when the instance budget is infinite".into())
                }
            };
            let verdict = oracle_bounded(&inst, k, cap).map_err(|e| e.to_string())?;
            let doc = VerdictDoc::from_verdict("oracle", &verdict);
            write_output(None, &serialize_verdict(&doc))?;
            Ok(if verdict.is_feasible() { 0 } else { 1 })
        }
        Command::Generate(what) => {
            let (inst, out) = match what {
                GenerateCmd::Clique { graph, l, out } => {
                    let g = parse_graph(&read_input(&graph)?).map_err(|e| e.to_string())?;
                    (gen_clique(&g, l).map_err(|e| e.to_string())?, out)
                }
                GenerateCmd::Indset { graph, l, out } => {
                    let g = parse_graph(&read_input(&graph)?).map_err(|e| e.to_string())?;
                    (gen_indset(&g, l).map_err(|e| e.to_string())?, out)
                }
                GenerateCmd::Binpacking {
                    u,
                    bins,
                    binsize,
                    out,
                } => {
                    let bp = BinPackingInput::new(u, bins, binsize).map_err(|e| e.to_string())?;
                    (gen_binpacking(&bp).map_err(|e| e.to_string())?, out)
                }
                GenerateCmd::Random(args) => {
                    let spec = RandomSpec {
                        agents: args.agents,
                        pool: args.pool,
                        initial_items: args.initial_items.unwrap_or(args.agents),
                        max_value: args.max_value,
                        supplies: parse_supply_profile(&args.supplies)?,
                        budget: parse_budget(&args.budget)?,
                        proportional_group: args.proportional_group,
                        binary: args.binary,
                        seed: args.seed,
                    };
                    (gen_random(&spec).map_err(|e| e.to_string())?, args.out)
                }
            };
            write_output(out.as_deref(), &serialize_instance(&inst))?;
            Ok(0)
        }
        Command::EnvyGraph { file } => {
            let inst = parse_instance(&read_input(&file)?).map_err(|e| e.to_string())?;
            let graph = inst
                .envy_graph(&Extension::new())
                .map_err(|e| e.to_string())?;
            let mut lines = String::new();
            for edge in &graph.edges {
                lines.push_str(&format!(
                    "{} -> {}: {}\n",
                    edge.envier, edge.envied, edge.gap
                ));
            }
            write_output(None, &lines)?;
            Ok(0)
        }
    }
}

/// Recomputes what a verdict claims. Returns the list of discrepancies.
fn check_verdict(inst: &Instance, doc: &VerdictDoc) -> Result<Vec<String>, String> {
    let mut failures = Vec::new();
    if doc.feasible {
        let ext = doc.extension().map_err(|e| e.to_string())?;
        for violation in inst.validate_extension(&ext) {
            failures.push(violation.to_string());
        }
        if failures.is_empty() {
            match inst.is_envy_free(&ext) {
                Ok(true) => {}
                Ok(false) => failures.push("extension does not eliminate envy".into()),
                Err(e) => failures.push(e.to_string()),
            }
        }
        if let Some(size) = &doc.size {
            if size.parse::<BigUint>().ok() != Some(ext.size()) {
                failures.push(format!(
                    "declared size {size} does not match the extension (actual {})",
                    ext.size()
                ));
            }
        }
        return Ok(failures);
    }
    match &doc.witness {
        None => failures.push("infeasible verdict carries no witness".into()),
        Some(WitnessDoc::ZeroValueEnvy { agent, envied }) => {
            if !inst.has_agent(agent) || !inst.has_agent(envied) {
                failures.push("witness references unknown agents".into());
            } else {
                if !inst.all_zero_pool_values(agent) {
                    failures.push(format!("{agent} does not value the whole pool at zero"));
                }
                if inst.initial_gap(agent, envied) <= 0 {
                    failures.push(format!("{agent} does not initially envy {envied}"));
                }
            }
        }
        Some(WitnessDoc::NegativeCycle {
            class_members,
            cycle,
        }) => {
            failures.extend(check_negative_cycle(inst, class_members, cycle));
        }
        Some(WitnessDoc::SearchExhausted { .. }) => {
            // Exhaustion is only re-checkable by redoing the search.
            println!("note: search-exhausted witnesses are accepted as-is");
        }
    }
    Ok(failures)
}

/// A negative-cycle witness is valid when the named agents are pairwise
/// proportional over the pool and the rounded envy gaps along the cycle sum
/// to a positive number: any solution would need the relative utilities to
/// strictly increase around a loop.
fn check_negative_cycle(
    inst: &Instance,
    class_members: &[String],
    cycle: &[String],
) -> Vec<String> {
    let mut failures = Vec::new();
    if cycle.len() < 2 {
        return vec!["cycle must name at least two agents".into()];
    }
    for agent in cycle {
        if !class_members.contains(agent) {
            failures.push(format!("cycle agent {agent} is not in the named class"));
        }
        if !inst.has_agent(agent) {
            failures.push(format!("unknown agent {agent} in cycle"));
            return failures;
        }
    }
    for window in class_members.windows(2) {
        if !vectors_proportional(
            &inst.pool_values_of(&window[0]),
            &inst.pool_values_of(&window[1]),
        ) {
            failures.push(format!(
                "{} and {} are not proportional over the pool",
                window[0], window[1]
            ));
        }
    }
    let mut total: i128 = 0;
    for i in 0..cycle.len() {
        let a = &cycle[i];
        let b = &cycle[(i + 1) % cycle.len()];
        let d = match gcd_list(&inst.pool_values_of(a)) {
            Ok(d) => d,
            Err(_) => {
                failures.push(format!("{a} values the whole pool at zero"));
                return failures;
            }
        };
        total += ceil_div(inst.initial_gap(a, b), d as i128).expect("positive gcd");
    }
    if total <= 0 {
        failures.push(format!(
            "cycle gaps sum to {total}, which does not prove infeasibility"
        ));
    }
    failures
}
