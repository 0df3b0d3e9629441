mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Linear bilevel programming toolkit.
#[derive(Debug, Parser)]
#[command(name = "blp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the optimistic bilevel program in FILE.
    Solve(SolveArgs),
    /// Evaluate the follower's reaction at a fixed leader decision.
    Eval(EvalArgs),
    /// Generate an instance file.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve with both methods and report whether they agree.
    Compare(CompareArgs),
    /// Cournot, Stackelberg and capacity-constrained duopoly equilibria.
    Duopoly(DuopolyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Sos1,
    Bigm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SearchOrder {
    Best,
    Dfs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ApproachArg {
    Optimistic,
    Pessimistic,
    Neutral,
    All,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "sos1")]
    pub method: Method,
    /// Big-M constant: a positive number, or `auto` for the certified value.
    #[arg(long, value_name = "REAL|auto")]
    pub bigm: Option<String>,
    #[arg(long, value_enum, default_value = "best")]
    pub strategy: SearchOrder,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub file: PathBuf,
    /// Leader decision, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, value_enum, default_value = "all")]
    pub approach: ApproachArg,
    /// Also report the vertices of the ε-optimal reaction set.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Bilevel encoding of a 0-1 knapsack instance.
    Knapsack(KnapsackArgs),
    /// Seeded random instance with a bounded joint region.
    Random(RandomArgs),
}

#[derive(Debug, Args)]
pub struct KnapsackArgs {
    /// Item weights, comma separated, each at least 1.
    #[arg(long)]
    pub weights: String,
    #[arg(long)]
    pub cap: u64,
    /// Leader penalty on fractional choices: a positive number or `auto`.
    #[arg(long, default_value = "auto")]
    pub penalty: String,
    /// Output file; standard output when omitted.
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RandomArgs {
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Random follower rows on top of the box rows.
    #[arg(long, default_value_t = 2)]
    pub mf: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10.0)]
    pub radius: f64,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "best")]
    pub strategy: SearchOrder,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DuopolyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub p0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub c: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub capacity: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Eval(a) => commands::eval(a),
        Command::Gen(GenCommand::Knapsack(a)) => commands::gen_knapsack(a),
        Command::Gen(GenCommand::Random(a)) => commands::gen_random(a),
        Command::Compare(a) => commands::compare(a),
        Command::Duopoly(a) => commands::duopoly(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
