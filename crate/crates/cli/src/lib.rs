//! Command implementations for the `metric-wb` binary. Each command returns
//! its exit status and output instead of printing, so it can be tested
//! in-process.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use log::{debug, info};
use metric_wb::bisim::{bisim_distance, BisimError, LmcConfig};
use metric_wb::dist::{fmt_rational, Rational};
use metric_wb::semantics::Evaluator;
use metric_wb::syntax::{
    check_affine, parse, typecheck, Term, TypingContext,
};
use metric_wb::templates::{open_value_templates, tensor_templates, DEFAULT_TEMPLATE_SIZE};
use metric_wb::trace::{trace_accept, trace_distance_lb, Trace};
use metric_wb::tuple::{
    expair, expair_trace, fmt_tuple_trace, parse_tuple_trace, program_tuple_trace_prob,
    tuple_distance_lb, tuple_trace_prob, FamilyRow, TupleState,
};
use serde_json::{json, Value as Json};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "metric-wb", version, about = "Exact behavioural distances for affine probabilistic lambda terms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and affinity-check a term.
    Check {
        /// Inline term. Omit when using --file.
        term: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
        /// Also infer a simple type.
        #[arg(long)]
        typed: bool,
    },
    /// Evaluate a program to its value distribution.
    Eval { term: String },
    /// Acceptance probability of a trace.
    TraceProb {
        term: String,
        trace: String,
        /// Read the trace as a tuple trace and start from the singleton tuple.
        #[arg(long)]
        tuple: bool,
    },
    /// Distance between two programs.
    Distance {
        #[arg(long, value_enum, default_value_t = Kind::Trace)]
        kind: Kind,
        term1: String,
        term2: String,
        /// Comma-separated argument values.
        #[arg(long, default_value = "I")]
        universe: String,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        state_cap: usize,
        #[arg(long, default_value_t = DEFAULT_TEMPLATE_SIZE)]
        template_size: u64,
    },
    /// Replay the built-in tuple examples.
    Examples {
        #[arg(long, value_enum, default_value_t = Which::All)]
        which: Which,
        #[arg(long, default_value_t = 5)]
        n: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Trace,
    Bisim,
    Tuple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Expair,
    MnNn,
    All,
}

/// Exit status plus what goes to stdout and stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: impl Into<String>) -> Self {
        Outcome {
            code: EXIT_OK,
            stdout: stdout.into(),
            stderr: String::new(),
        }
    }

    fn json(value: Json) -> Self {
        Self::ok(serde_json::to_string(&value).expect("json values serialize"))
    }

    fn user(msg: impl Into<String>) -> Self {
        Outcome {
            code: EXIT_USER,
            stdout: String::new(),
            stderr: format!("error: {}", msg.into()),
        }
    }

    fn internal(msg: impl Into<String>) -> Self {
        Outcome {
            code: EXIT_INTERNAL,
            stdout: String::new(),
            stderr: format!("internal error: {}", msg.into()),
        }
    }
}

/// Parse arguments (including the program name) and run.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli.command),
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    code: EXIT_USER,
                    stdout: String::new(),
                    stderr: rendered,
                }
            } else {
                Outcome::ok(rendered)
            }
        }
    }
}

pub fn run(command: Command) -> Outcome {
    debug!("running {command:?}");
    match command {
        Command::Check { term, file, typed } => cmd_check(term, file, typed),
        Command::Eval { term } => cmd_eval(&term),
        Command::TraceProb { term, trace, tuple } => cmd_trace_prob(&term, &trace, tuple),
        Command::Distance {
            kind,
            term1,
            term2,
            universe,
            max_len,
            depth,
            state_cap,
            template_size,
        } => cmd_distance(&DistanceArgs {
            kind,
            term1,
            term2,
            universe,
            max_len,
            depth,
            state_cap,
            template_size,
        }),
        Command::Examples { which, n } => cmd_examples(which, n),
    }
}

fn parse_program(text: &str) -> Result<Term, Outcome> {
    let t = parse(text).map_err(|e| Outcome::user(e.to_string()))?;
    check_affine(&TypingContext::empty(), &t).map_err(|e| Outcome::user(e.to_string()))?;
    Ok(t)
}

fn collapse(r: Result<Outcome, Outcome>) -> Outcome {
    r.unwrap_or_else(|e| e)
}

pub fn cmd_check(term: Option<String>, file: Option<PathBuf>, typed: bool) -> Outcome {
    let text = match (term, file) {
        (Some(t), None) => t,
        (None, Some(path)) => match std::fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) => return Outcome::user(format!("cannot read {}: {e}", path.display())),
        },
        (Some(_), Some(_)) => return Outcome::user("give either a term or --file, not both"),
        (None, None) => return Outcome::user("no term given"),
    };
    collapse((|| {
        let t = parse_program(text.trim())?;
        if typed {
            let ty = typecheck(&t).map_err(|e| Outcome::user(e.to_string()))?;
            return Ok(Outcome::ok(format!("ok: {ty}")));
        }
        Ok(Outcome::ok("ok"))
    })())
}

pub fn cmd_eval(term: &str) -> Outcome {
    collapse((|| {
        let t = parse_program(term)?;
        let d = Evaluator::shared()
            .eval_checked(&t)
            .map_err(|e| Outcome::user(e.to_string()))?;
        Ok(Outcome::json(d.to_json()))
    })())
}

pub fn cmd_trace_prob(term: &str, trace: &str, tuple: bool) -> Outcome {
    collapse((|| {
        let t = parse_program(term)?;
        let p: Rational = if tuple {
            let s = parse_tuple_trace(trace).map_err(|e| Outcome::user(e.to_string()))?;
            program_tuple_trace_prob(&t, &s)
        } else {
            let s = Trace::parse(trace).map_err(|e| Outcome::user(e.to_string()))?;
            trace_accept(&t, &s)
        };
        Ok(Outcome::json(json!({"probability": fmt_rational(&p)})))
    })())
}

/// Split on commas outside brackets.
pub fn split_universe(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '<' | '⟨' => depth += 1,
            ')' | '>' | '⟩' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts.into_iter().map(str::trim).filter(|p| !p.is_empty()).collect()
}

#[derive(Debug, Clone)]
pub struct DistanceArgs {
    pub kind: Kind,
    pub term1: String,
    pub term2: String,
    pub universe: String,
    pub max_len: usize,
    pub depth: usize,
    pub state_cap: usize,
    pub template_size: u64,
}

pub fn cmd_distance(args: &DistanceArgs) -> Outcome {
    collapse((|| {
        let m = parse_program(&args.term1)?;
        let n = parse_program(&args.term2)?;
        let mut universe = Vec::new();
        for part in split_universe(&args.universe) {
            let v = parse_program(part)?;
            if !v.is_value() {
                return Err(Outcome::user(format!("universe entry {v} is not a value")));
            }
            universe.push(v);
        }
        let pairs = m.contains_pairs() || n.contains_pairs();
        let tensor_bodies = if pairs {
            tensor_templates(&universe, args.template_size)
        } else {
            Vec::new()
        };
        info!(
            "distance kind {:?}, {} universe values, {} tensor bodies",
            args.kind,
            universe.len(),
            tensor_bodies.len()
        );
        let out = match args.kind {
            Kind::Trace => {
                trace_distance_lb(&m, &n, &universe, &tensor_bodies, args.max_len).to_json()
            }
            Kind::Bisim => {
                let mut config = LmcConfig::new(universe, args.depth);
                config.tensor_bodies = tensor_bodies;
                config.state_cap = args.state_cap;
                match bisim_distance(&m, &n, &config) {
                    Ok(d) => d.to_json(&config),
                    Err(e @ BisimError::BudgetExceeded(_)) => return Err(Outcome::user(e.to_string())),
                    Err(e @ BisimError::Eval(_)) => return Err(Outcome::user(e.to_string())),
                    Err(e @ BisimError::NonConvergence(_)) => {
                        return Err(Outcome::internal(e.to_string()))
                    }
                }
            }
            Kind::Tuple => {
                let templates = open_value_templates(&universe, args.template_size);
                tuple_distance_lb(&m, &n, &templates, args.max_len).to_json()
            }
        };
        Ok(Outcome::json(out))
    })())
}

fn expair_report() -> Json {
    let (noisy, clean) = expair();
    let s = expair_trace();
    let templates = open_value_templates(&[Term::identity()], DEFAULT_TEMPLATE_SIZE);
    let lb = tuple_distance_lb(&noisy, &clean, &templates, 3);
    json!({
        "noisy": noisy.to_string(),
        "clean": clean.to_string(),
        "trace": fmt_tuple_trace(&s),
        "pr_noisy": fmt_rational(&tuple_trace_prob(&TupleState::singleton(noisy.clone()), &s)),
        "pr_clean": fmt_rational(&tuple_trace_prob(&TupleState::singleton(clean.clone()), &s)),
        "distance": fmt_rational(&lb.distance),
        "witness": fmt_tuple_trace(&lb.witness),
    })
}

fn mn_nn_report(n: u32) -> Json {
    let rows: Vec<Json> = (0..=n).map(|k| FamilyRow::compute(k).to_json()).collect();
    Json::Array(rows)
}

pub fn cmd_examples(which: Which, n: u32) -> Outcome {
    if n > 62 {
        return Outcome::user("--n must be at most 62");
    }
    let report = match which {
        Which::Expair => json!({"expair": expair_report()}),
        Which::MnNn => json!({"mn_nn": mn_nn_report(n)}),
        Which::All => json!({"expair": expair_report(), "mn_nn": mn_nn_report(n)}),
    };
    Outcome::json(report)
}
