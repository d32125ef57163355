//! Command-line front end.
//!
//! - `minimize <file>`: parse, encode and minimize a system; print the
//!   partition of its states and/or the quotient system.
//! - `gen`: emit a seeded random system file.
//! - `check`: run the interface axiom suites and the partition-structure
//!   differential tests.
//!
//! Exit codes: 0 success, 2 parse/type/usage errors, 3 oracle mismatch,
//! 4 I/O or arithmetic-overflow failures. Partitions go to standard output;
//! statistics go to standard error as `key=value` lines.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::encoding::{
    self, apply_initial_partition, encode, project_result, quotient_spec, render_partition,
    text::{parse_initial_partition, parse_spec_text, render_spec},
    EncodedCoalgebra,
};
use crate::engine::{self, RunStats};
use crate::interfaces::axioms;
use crate::oracle;

#[derive(Parser, Debug)]
#[command(
    name = "partref",
    about = "Minimize state-based systems up to behavioural equivalence",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum OutputMode {
    Partition,
    Coalgebra,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum InputFormat {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Minimize a system file up to behavioural equivalence.
    Minimize {
        file: PathBuf,
        /// What to print: the state partition, the quotient system, or both.
        #[arg(long, value_enum, default_value_t = OutputMode::Partition)]
        output: OutputMode,
        /// Initial-partition file (`class <name>: s1 s2 ...` lines).
        #[arg(long)]
        initial: Option<PathBuf>,
        /// Cross-check the result against the brute-force minimizer.
        #[arg(long)]
        oracle: bool,
        /// Print run statistics to standard error.
        #[arg(long)]
        stats: bool,
        #[arg(long, value_enum, default_value_t = InputFormat::Text)]
        format: InputFormat,
    },
    /// Generate a seeded random system file.
    Gen {
        /// Transition-type term, e.g. "P (A x X)".
        #[arg(long)]
        functor: String,
        #[arg(long)]
        states: u32,
        /// Entry budget for the outermost collection layer.
        #[arg(long)]
        edges: u64,
        #[arg(long)]
        seed: u64,
        /// Bound on generated weights and multiplicities.
        #[arg(long, default_value_t = 9)]
        weight_range: i64,
        /// Alphabet sizes as NAME=SIZE (repeatable; default size 2).
        #[arg(long = "alphabet", value_parser = parse_alphabet_size)]
        alphabet: Vec<(String, u32)>,
        /// Write to a file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the self-checks: interface axiom suites and partition structure
    /// tests.
    Check {
        /// Comma-separated suite names (default: all shipped interfaces).
        #[arg(long, value_delimiter = ',')]
        interfaces: Option<Vec<String>>,
        /// Random cases per suite.
        #[arg(long, default_value_t = 10_000)]
        cases: u64,
        #[arg(long, default_value_t = 2977)]
        seed: u64,
    },
}

fn parse_alphabet_size(s: &str) -> Result<(String, u32), String> {
    match s.split_once('=') {
        Some((name, size)) => {
            let size: u32 = size.parse().map_err(|_| format!("bad size in `{s}`"))?;
            Ok((name.to_string(), size))
        }
        None => Err(format!("expected NAME=SIZE, got `{s}`")),
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    OracleMismatch,
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) => 2,
            CliError::OracleMismatch => 3,
            CliError::Resource(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Parse(m) => write!(f, "{m}"),
            CliError::OracleMismatch => {
                write!(f, "engine and brute-force minimizer disagree")
            }
            CliError::Resource(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Everything `minimize` produces, separated for testing.
pub struct MinimizeOutcome {
    pub partition_text: String,
    pub coalgebra_text: Option<String>,
    pub stats: RunStats,
}

/// The full minimize pipeline on in-memory input.
pub fn minimize_source(
    source: &str,
    format: InputFormat,
    initial: Option<&str>,
    with_oracle: bool,
    want_coalgebra: bool,
) -> Result<MinimizeOutcome, CliError> {
    let spec = match format {
        InputFormat::Text => parse_spec_text(source),
        InputFormat::Json => encoding::json::parse_spec_json(source),
    }
    .map_err(|e| CliError::Parse(e.to_string()))?;

    let mut enc: EncodedCoalgebra = encode(&spec).map_err(|e| match e {
        encoding::EncodeError::Type(m) => CliError::Parse(m),
        encoding::EncodeError::Overflow => CliError::Resource(e.to_string()),
    })?;
    if let Some(initial) = initial {
        let classes =
            parse_initial_partition(initial).map_err(|e| CliError::Parse(e.to_string()))?;
        apply_initial_partition(&mut enc, &classes).map_err(CliError::Parse)?;
    }
    if with_oracle && enc.num_states() > oracle::MAX_ORACLE_STATES {
        return Err(CliError::Usage(format!(
            "--oracle is capped at {} encoded states (this system has {})",
            oracle::MAX_ORACLE_STATES,
            enc.num_states()
        )));
    }

    let (partition, stats) =
        engine::run(&enc).map_err(|e| CliError::Resource(e.to_string()))?;

    if with_oracle {
        let naive =
            oracle::naive_minimize(&enc).map_err(|e| CliError::Resource(e.to_string()))?;
        if !oracle::partitions_equal(&naive, &partition, 0..enc.num_states() as u32) {
            return Err(CliError::OracleMismatch);
        }
    }

    let blocks = project_result(&enc, &partition.block_assignment());
    let partition_text = render_partition(&enc, &blocks);
    let coalgebra_text = if want_coalgebra {
        let quotient =
            quotient_spec(&spec, &blocks).map_err(|e| CliError::Resource(e.to_string()))?;
        Some(render_spec(&quotient))
    } else {
        None
    };
    Ok(MinimizeOutcome {
        partition_text,
        coalgebra_text,
        stats,
    })
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Resource(format!("cannot read {}: {e}", path.display())))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Command::Minimize {
            file,
            output,
            initial,
            oracle: with_oracle,
            stats,
            format,
        } => {
            let source = read_file(&file)?;
            let initial_src = match &initial {
                Some(p) => Some(read_file(p)?),
                None => None,
            };
            let outcome = minimize_source(
                &source,
                format,
                initial_src.as_deref(),
                with_oracle,
                output != OutputMode::Partition,
            )?;
            match output {
                OutputMode::Partition => print!("{}", outcome.partition_text),
                OutputMode::Coalgebra => {
                    print!("{}", outcome.coalgebra_text.as_deref().unwrap_or(""))
                }
                OutputMode::Both => {
                    print!("{}", outcome.partition_text);
                    println!();
                    print!("{}", outcome.coalgebra_text.as_deref().unwrap_or(""));
                }
            }
            if stats {
                eprint!("{}", outcome.stats.render());
            }
            Ok(())
        }
        Command::Gen {
            functor,
            states,
            edges,
            seed,
            weight_range,
            alphabet,
            out,
        } => {
            let params = crate::gen::GenParams {
                functor,
                states,
                edges,
                seed,
                weight_range,
                alphabet_sizes: alphabet,
            };
            let text = crate::gen::generate(&params).map_err(|e| CliError::Usage(e.0))?;
            match out {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| CliError::Resource(format!("cannot write {}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Check {
            interfaces,
            cases,
            seed,
        } => {
            let names: Vec<String> = match interfaces {
                None => axioms::SUITE_NAMES.iter().map(|s| s.to_string()).collect(),
                Some(list) => {
                    let list: Vec<String> =
                        list.into_iter().filter(|s| !s.is_empty()).collect();
                    if list.is_empty() {
                        return Err(CliError::Usage(
                            "no interfaces selected for checking".into(),
                        ));
                    }
                    list
                }
            };
            let mut failed = false;
            for name in &names {
                match axioms::run_suite(name, cases, seed) {
                    Ok(report) => {
                        println!("interface {}: ok ({} cases)", report.name, report.cases)
                    }
                    Err(msg) => {
                        failed = true;
                        println!("interface {name}: FAILED\n  {msg}");
                    }
                }
            }
            match crate::partition::differential_check(seed, 200) {
                Ok(()) => println!("partition structure: ok (200 rounds)"),
                Err(msg) => {
                    failed = true;
                    println!("partition structure: FAILED\n  {msg}");
                }
            }
            if failed {
                Err(CliError::Parse("self-check failed".into()))
            } else {
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimize_source_renders_partition() {
        let src = "functor: P X\nstate x0: {x1, x2}\nstate x1: {x1, x2}\nstate x2: {x3, x4}\nstate x3: {}\nstate x4: {}\n";
        let out = minimize_source(src, InputFormat::Text, None, true, false).unwrap();
        assert_eq!(out.partition_text, "x0 x1\nx2\nx3 x4\n");
    }

    #[test]
    fn quotient_output_reminimizes_to_itself() {
        let src = "functor: Q X\nstate x0: {x1: 1/2, x2: 3/2}\nstate x1: {x1: 1, x2: 1}\nstate x2: {x3: 1, x4: -1}\nstate x3: {}\nstate x4: {}\n";
        let out = minimize_source(src, InputFormat::Text, None, false, true).unwrap();
        let quotient = out.coalgebra_text.unwrap();
        let again = minimize_source(&quotient, InputFormat::Text, None, true, true).unwrap();
        // already minimal: every block is a singleton
        for line in again.partition_text.lines() {
            assert_eq!(line.split_whitespace().count(), 1);
        }
        assert_eq!(again.coalgebra_text.unwrap(), quotient);
    }

    #[test]
    fn initial_partition_refines_result() {
        let src = "functor: P X\nstate x0: {x1, x2}\nstate x1: {x1, x2}\nstate x2: {x3, x4}\nstate x3: {}\nstate x4: {}\n";
        let classes = "class live: x0 x1 x2 x3\nclass marked: x4\n";
        let out =
            minimize_source(src, InputFormat::Text, Some(classes), true, false).unwrap();
        assert_eq!(out.partition_text, "x0 x1\nx2\nx3\nx4\n");
        // a single class changes nothing
        let all_one = "class c: x0 x1 x2 x3 x4\n";
        let out =
            minimize_source(src, InputFormat::Text, Some(all_one), true, false).unwrap();
        assert_eq!(out.partition_text, "x0 x1\nx2\nx3 x4\n");
        // every state its own class: discrete from the start
        let discrete = "class a: x0\nclass b: x1\nclass c: x2\nclass d: x3\nclass e: x4\n";
        let out =
            minimize_source(src, InputFormat::Text, Some(discrete), true, false).unwrap();
        assert_eq!(out.partition_text.lines().count(), 5);
    }

    #[test]
    fn unknown_state_in_classes_is_an_error() {
        let src = "functor: P X\nstate a: {}\n";
        let err = match minimize_source(src, InputFormat::Text, Some("class c: nosuch\n"), false, false)
        {
            Err(e) => e,
            Ok(_) => panic!("unknown state accepted"),
        };
        assert_eq!(err.exit_code(), 2);
    }
}
