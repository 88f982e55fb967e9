//! `arbor`: command-line front end for the self-similar group engine.
//!
//! Exit codes: 0 success, 1 a mathematical check failed, 2 bad input, 3 a budget ran out.

mod commands;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arbor_core::quotient::{QuotientCache, CACHE_DIR_ENV};
use arbor_core::{parse_automaton, Automaton, Budgets};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

pub const SCHEMA_ID: &str = "arbor-report/1";

#[derive(Parser, Debug)]
#[command(name = "arbor", version, about = "Computations in self-similar groups given by automata")]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for cached level quotients.
    #[arg(long, global = true, env = CACHE_DIR_ENV)]
    cache_dir: Option<PathBuf>,
    #[command(flatten)]
    budgets: BudgetArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    /// Largest permutation table, in leaves.
    #[arg(long, global = true)]
    budget_table: Option<usize>,
    /// Section words explored per closure or equality test.
    #[arg(long, global = true)]
    budget_closure: Option<usize>,
    /// Largest enumerated level quotient.
    #[arg(long, global = true)]
    budget_quotient: Option<usize>,
    /// Largest nucleus.
    #[arg(long, global = true)]
    budget_nucleus: Option<usize>,
    /// Generations of the nucleus closure.
    #[arg(long, global = true)]
    budget_generations: Option<usize>,
    /// Word length of membership searches.
    #[arg(long, global = true)]
    budget_word_len: Option<usize>,
    /// Elements visited by membership searches.
    #[arg(long, global = true)]
    budget_word_elements: Option<usize>,
    /// Highest level of the membership sieve.
    #[arg(long, global = true)]
    budget_sieve: Option<usize>,
    /// Candidates examined per search run.
    #[arg(long, global = true)]
    budget_search: Option<usize>,
}

impl BudgetArgs {
    fn resolve(&self) -> Budgets {
        let d = Budgets::default();
        Budgets {
            table_leaves: self.budget_table.unwrap_or(d.table_leaves),
            closure_nodes: self.budget_closure.unwrap_or(d.closure_nodes),
            quotient_elements: self.budget_quotient.unwrap_or(d.quotient_elements),
            nucleus_elements: self.budget_nucleus.unwrap_or(d.nucleus_elements),
            nucleus_generations: self.budget_generations.unwrap_or(d.nucleus_generations),
            word_search_len: self.budget_word_len.unwrap_or(d.word_search_len),
            word_search_elements: self.budget_word_elements.unwrap_or(d.word_search_elements),
            sieve_level: self.budget_sieve.unwrap_or(d.sieve_level),
            search_candidates: self.budget_search.unwrap_or(d.search_candidates),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the canonical form of an automaton file.
    Format { file: PathBuf },
    /// Nucleus of a contracting group.
    Nucleus { file: PathBuf },
    /// Classify the ends fixed by one element.
    Ends {
        file: PathBuf,
        #[arg(long)]
        element: String,
    },
    /// Check that every reduced word fixes no ends or infinitely many.
    Dichotomy {
        file: PathBuf,
        #[arg(long)]
        word_len: usize,
    },
    /// Order and fixed-point distribution of a level quotient.
    Quotient {
        file: PathBuf,
        #[arg(short)]
        n: usize,
    },
    /// Exhaustive subindependence check for cone sets.
    Subindep {
        file: PathBuf,
        #[arg(short)]
        n: usize,
        #[arg(short)]
        m: usize,
    },
    /// Conditional probability that the number of fixed vertices grows.
    Martingale {
        file: PathBuf,
        #[arg(short)]
        n: usize,
        #[arg(short)]
        m: usize,
        #[arg(short)]
        r: usize,
    },
    /// Proportion of elements fixing a leaf, level by level.
    Fpp {
        file: PathBuf,
        #[arg(long)]
        max_level: usize,
        /// Monte-Carlo draws per level.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Evidence that the group is virtually super strongly fractal.
    Vssf {
        file: PathBuf,
        #[arg(long)]
        max_n: usize,
        #[arg(long)]
        max_m: usize,
    },
    /// The three-condition test on a kneading automaton.
    Prop4 { file: PathBuf },
    /// Enumerate small automata and test the kneading conditions.
    Search {
        /// Alphabet sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        alphabet: Vec<usize>,
        /// Largest number of nontrivial states.
        #[arg(long)]
        states: usize,
        /// Start at this frontier, e.g. "alphabet=2 states=1 next=17".
        #[arg(long)]
        resume: Option<String>,
        /// Frontier file: read to resume, rewritten after the run.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {diagnostic}")]
    Parse {
        path: PathBuf,
        diagnostic: arbor_core::Diagnostic,
    },
    #[error(transparent)]
    Core(#[from] arbor_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_budget() => 3,
            _ => 2,
        }
    }
}

/// How a command ended, in terms of the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    CheckFailed,
    BudgetExhausted,
}

impl Status {
    fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::CheckFailed => 1,
            Status::BudgetExhausted => 3,
        }
    }
}

pub struct Outcome {
    pub status: Status,
    pub text: String,
    pub result: serde_json::Value,
    /// Extra JSON lines printed before the report (search rows).
    pub records: Vec<serde_json::Value>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: &'static str,
    command: &'a str,
    automaton: Option<String>,
    status: Status,
    result: &'a serde_json::Value,
}

pub struct Context {
    pub budgets: Budgets,
    pub seed: u64,
    pub cache: Option<QuotientCache>,
}

fn load(path: &Path) -> Result<Automaton, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_automaton(&text).map_err(|e| match e {
        arbor_core::Error::Parse(diagnostic) => CliError::Parse {
            path: path.to_path_buf(),
            diagnostic,
        },
        e => e.into(),
    })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Format { .. } => "format",
        Command::Nucleus { .. } => "nucleus",
        Command::Ends { .. } => "ends",
        Command::Dichotomy { .. } => "dichotomy",
        Command::Quotient { .. } => "quotient",
        Command::Subindep { .. } => "subindep",
        Command::Martingale { .. } => "martingale",
        Command::Fpp { .. } => "fpp",
        Command::Vssf { .. } => "vssf",
        Command::Prop4 { .. } => "prop4",
        Command::Search { .. } => "search",
    }
}

fn run(cli: &Cli) -> Result<(Option<Automaton>, Outcome), CliError> {
    let ctx = Context {
        budgets: cli.budgets.resolve(),
        seed: cli.seed,
        cache: cli.cache_dir.clone().map(QuotientCache::new),
    };
    let file = match &cli.command {
        Command::Search { .. } => None,
        Command::Format { file }
        | Command::Nucleus { file }
        | Command::Ends { file, .. }
        | Command::Dichotomy { file, .. }
        | Command::Quotient { file, .. }
        | Command::Subindep { file, .. }
        | Command::Martingale { file, .. }
        | Command::Fpp { file, .. }
        | Command::Vssf { file, .. }
        | Command::Prop4 { file } => Some(file),
    };
    let aut = file.map(|f| load(f)).transpose()?;
    let a = || aut.as_ref().expect("file-based command");
    let outcome = match &cli.command {
        Command::Format { .. } => commands::format(a()),
        Command::Nucleus { .. } => commands::nucleus(&ctx, a())?,
        Command::Ends { element, .. } => commands::ends(&ctx, a(), element)?,
        Command::Dichotomy { word_len, .. } => commands::dichotomy(&ctx, a(), *word_len)?,
        Command::Quotient { n, .. } => commands::quotient(&ctx, a(), *n)?,
        Command::Subindep { n, m, .. } => commands::subindep(&ctx, a(), *n, *m)?,
        Command::Martingale { n, m, r, .. } => commands::martingale(&ctx, a(), *n, *m, *r)?,
        Command::Fpp { max_level, samples, .. } => commands::fpp(&ctx, a(), *max_level, *samples)?,
        Command::Vssf { max_n, max_m, .. } => commands::vssf(&ctx, a(), *max_n, *max_m)?,
        Command::Prop4 { .. } => commands::prop4(&ctx, a())?,
        Command::Search {
            alphabet,
            states,
            resume,
            checkpoint,
        } => commands::search(&ctx, alphabet, *states, resume.as_deref(), checkpoint.as_deref())?,
    };
    Ok((aut, outcome))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((aut, outcome)) => {
            if cli.json {
                for r in &outcome.records {
                    println!("{r}");
                }
                let env = Envelope {
                    schema: SCHEMA_ID,
                    command: command_name(&cli.command),
                    automaton: aut.as_ref().map(Automaton::content_hash_hex),
                    status: outcome.status,
                    result: &outcome.result,
                };
                println!("{}", serde_json::to_string(&env).expect("reports serialize"));
            } else {
                print!("{}", outcome.text);
            }
            ExitCode::from(outcome.status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let codes: Vec<u8> = [Status::Ok, Status::CheckFailed, Status::BudgetExhausted]
            .into_iter()
            .map(Status::exit_code)
            .collect();
        assert_eq!(codes, [0, 1, 3]);
        let overflow = CliError::Core(arbor_core::Error::QuotientOverflow { level: 4, budget: 10 });
        assert_eq!(overflow.exit_code(), 3);
    }

    #[test]
    fn budget_flags_override_defaults() {
        let cli = Cli::parse_from(["arbor", "--budget-quotient", "7", "search", "--alphabet", "2", "--states", "1"]);
        let b = cli.budgets.resolve();
        assert_eq!(b.quotient_elements, 7);
        assert_eq!(b.table_leaves, Budgets::default().table_leaves);
    }

    #[test]
    fn the_command_line_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
