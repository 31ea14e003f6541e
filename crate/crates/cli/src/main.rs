//! `dtq`: count, sample and score random decision trees, evaluate the tail
//! bounds, and run the reproducible experiments.
//!
//! Exit status is 0 when everything asked for holds, 1 when an experiment
//! check or a report verification fails, and 2 for usage or input errors.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dtq_core::bounds::{self, Bound};
use dtq_core::harness::{self, Experiment, ExperimentConfig, Format, Report};
use dtq_core::sensitivity::{avg_sensitivity_bruteforce, avg_sensitivity_structural, truth_table};
use dtq_core::{codec, counting, Model, RandomStream, Sampler};

#[derive(Parser)]
#[command(name = "dtq", version, about = "Random decision trees: counts, samples, sensitivity, bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact number of trees of depth at most d in a class.
    Count(CountArgs),
    /// Draw trees from a random model, one per line in the text format.
    Sample(SampleArgs),
    /// Exact average sensitivity of each tree in a file.
    Sens(SensArgs),
    /// Evaluate one of the closed-form bounds; prints JSON.
    Bound {
        #[command(subcommand)]
        bound: BoundCommand,
    },
    /// Run an experiment and write its report.
    Exp(ExpArgs),
    /// Recompute the aggregates of a written report and compare.
    Verify {
        /// Report file, CSV or JSON.
        file: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Class {
    Shapes,
    Structures,
    Labeled,
    Mindepth,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long, value_enum)]
    class: Class,
    #[arg(long)]
    d: usize,
    /// Number of variables; needed for structures and labeled.
    #[arg(long)]
    vars: Option<usize>,
    /// Depth threshold for mindepth: counts shapes with every leaf deeper.
    #[arg(long, allow_negative_numbers = true)]
    h: Option<i64>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_parser = parse_model)]
    model: Model,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    vars: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u64,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Structural,
    Brute,
}

#[derive(Args)]
struct SensArgs {
    /// Tree file; reads stdin when omitted.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "structural")]
    method: Method,
    /// Variables for the truth table; defaults to the largest index used + 1.
    #[arg(long)]
    vars: Option<usize>,
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Quantum query lower bound (1/2)(1 - 2 eps)^2 s.
    Shi {
        #[arg(long)]
        sbar: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Probability of a leaf at depth at most h.
    Lemma5 {
        #[arg(long)]
        d: u32,
        #[arg(long, allow_negative_numbers = true)]
        h: i64,
    },
    /// Two-term tail on low average sensitivity.
    Theorem1 {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        eps: f64,
    },
    /// Bounded-differences tail exp(-2 delta^2 / (L eta^2)).
    Mcdiarmid {
        #[arg(long = "L")]
        leaves: u64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Speed-up constant (1 - eps)/54.
    Alpha {
        #[arg(long)]
        eps: f64,
    },
    /// Looser tail with h = d - c log2 d.
    Loose {
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = bounds::LOOSE_TAIL_C)]
        c: f64,
    },
    /// The concentration step with every quantity spelled out.
    Chain {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Args)]
struct ExpArgs {
    #[arg(value_parser = parse_experiment)]
    kind: Experiment,
    #[arg(long, value_parser = parse_model, default_value = "full-uniform")]
    model: Model,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    vars: usize,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, allow_negative_numbers = true)]
    h: Option<i64>,
    #[arg(long, value_parser = parse_format, default_value = "csv")]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses one per core. Never changes the output.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Parse the written report back and recompute its aggregates.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 512)]
    assignments: u64,
    #[arg(long, default_value_t = 64)]
    max_flips: usize,
    #[arg(long, default_value_t = 16)]
    exhaustive_leaf_cap: usize,
    #[arg(long, default_value_t = 14)]
    exact_depth_cap: usize,
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse().map_err(|e: dtq_core::Error| e.to_string())
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse().map_err(|e: dtq_core::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: dtq_core::Error| e.to_string())
}

enum Failure {
    Usage(String),
    Assertion(String),
}

impl From<dtq_core::Error> for Failure {
    fn from(e: dtq_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Count(args) => count(args),
        Command::Sample(args) => sample(args),
        Command::Sens(args) => sens(args),
        Command::Bound { bound } => bound_cmd(bound),
        Command::Exp(args) => exp(args),
        Command::Verify { file } => verify_file(&file),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("dtq: {msg}");
            ExitCode::from(2)
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn count(args: CountArgs) -> Outcome {
    let need_vars = || {
        args.vars
            .ok_or_else(|| Failure::Usage("this class needs --vars".into()))
    };
    let value = match args.class {
        Class::Shapes => counting::count_shapes(args.d),
        Class::Structures => counting::count_structures(args.d, need_vars()?)?,
        Class::Labeled => counting::count_labeled(args.d, need_vars()?)?,
        Class::Mindepth => {
            let h = args
                .h
                .ok_or_else(|| Failure::Usage("mindepth needs --h".into()))?;
            counting::count_min_depth_shapes(args.d, h)
        }
    };
    println!("{value}");
    Ok(())
}

fn sample(args: SampleArgs) -> Outcome {
    let sampler = Sampler::new(args.model, args.d, args.vars)?;
    let mut text = String::new();
    for i in 0..args.count {
        let tree = sampler.sample(&mut RandomStream::substream(args.seed, i));
        text.push_str(&codec::to_text(&tree));
        text.push('\n');
    }
    write_output(args.out.as_deref(), &text)
}

fn sens(args: SensArgs) -> Outcome {
    let text = match &args.input {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?,
        None => {
            let mut buf = String::new();
            io::stdin().read_to_string(&mut buf)?;
            buf
        }
    };
    let trees = codec::from_text_many(&text)?;
    if trees.is_empty() {
        return Err(Failure::Usage("no trees in input".into()));
    }
    for tree in trees {
        let value = match args.method {
            Method::Structural => avg_sensitivity_structural(&tree),
            Method::Brute => {
                let n = args.vars.unwrap_or_else(|| tree.min_vars());
                avg_sensitivity_bruteforce(&truth_table(&tree, n)?)
            }
        };
        println!("{value} {}", value.to_f64());
    }
    Ok(())
}

fn bound_json(b: &Bound) -> Value {
    json!({ "raw": b.raw, "clamped": b.clamped, "log2": b.log2 })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(a), Value::Object(b)) = (&mut base, extra) {
        a.extend(b);
    }
    base
}

fn bound_cmd(cmd: BoundCommand) -> Outcome {
    let value = match cmd {
        BoundCommand::Shi { sbar, eps } => {
            // A query count, not a probability: nothing to clamp.
            let v = bounds::shi_lower_bound(sbar, eps)?;
            json!({ "bound": "shi", "raw": v, "clamped": v, "log2": v.log2() })
        }
        BoundCommand::Lemma5 { d, h } => {
            let t = bounds::leaf_depth_tail(d, h);
            merge(
                bound_json(&t.bound),
                json!({ "bound": "lemma5", "d": d, "h": h, "in_range": t.in_range }),
            )
        }
        BoundCommand::Theorem1 { d, eps } => {
            let t = bounds::theorem1_tail(d, eps)?;
            merge(
                bound_json(&t.total),
                json!({
                    "bound": "theorem1",
                    "d": d,
                    "epsilon": eps,
                    "h": t.h,
                    "threshold": t.threshold,
                    "leaf_term": bound_json(&t.leaf_term),
                    "concentration_term": bound_json(&t.concentration_term),
                }),
            )
        }
        BoundCommand::Mcdiarmid { leaves, eta, delta } => merge(
            bound_json(&bounds::mcdiarmid_tail(leaves, eta, delta)?),
            json!({ "bound": "mcdiarmid", "L": leaves, "eta": eta, "delta": delta }),
        ),
        BoundCommand::Alpha { eps } => {
            let a = bounds::alpha_for(eps)?;
            json!({ "bound": "alpha", "epsilon": eps, "raw": a, "clamped": a, "log2": a.log2() })
        }
        BoundCommand::Loose { d, c } => {
            let t = bounds::loose_tail(d, c)?;
            merge(
                bound_json(&t.total),
                json!({
                    "bound": "loose",
                    "d": d,
                    "c": c,
                    "h": t.h,
                    "threshold": t.threshold,
                    "slack": t.slack,
                    "in_range": t.in_range,
                    "leaf_term": bound_json(&t.leaf_term),
                    "concentration_term": bound_json(&t.concentration_term),
                }),
            )
        }
        BoundCommand::Chain { d, eps } => {
            let c = bounds::concentration_chain(d, eps)?;
            merge(
                bound_json(&c.mcdiarmid),
                json!({
                    "bound": "chain",
                    "d": d,
                    "epsilon": eps,
                    "L": c.leaves,
                    "eta": c.eta.to_string(),
                    "delta": c.delta,
                    "closed_form_delta": bound_json(&c.closed_form_delta),
                    "closed_form_epsilon": bound_json(&c.closed_form_epsilon),
                }),
            )
        }
    };
    println!("{}", serde_json::to_string_pretty(&value).expect("JSON value"));
    Ok(())
}

fn exp(args: ExpArgs) -> Outcome {
    let mut config = ExperimentConfig::new(args.kind, args.model, args.d, args.vars);
    config.samples = args.samples;
    config.seed = args.seed;
    config.epsilon = args.eps;
    config.h = args.h;
    config.workers = args.workers;
    config.assignments = args.assignments;
    config.max_flips = args.max_flips;
    config.exhaustive_leaf_cap = args.exhaustive_leaf_cap;
    config.exact_depth_cap = args.exact_depth_cap;

    let report = harness::run(&config)?;
    let text = report.render(args.format);
    write_output(args.out.as_deref(), &text)?;
    if args.verify {
        let written = match &args.out {
            Some(path) => fs::read_to_string(path)?,
            None => text,
        };
        check_verification(&Report::parse(&written)?)?;
    }
    check_report(&report)
}

fn verify_file(path: &Path) -> Outcome {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let report = Report::parse(&text)?;
    check_verification(&report)?;
    eprintln!("verified: aggregates, theory values and checks match the rows");
    Ok(())
}

fn check_verification(report: &Report) -> Outcome {
    let diffs = harness::verify(report)?;
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "verification failed:\n  {}",
            diffs.join("\n  ")
        )))
    }
}

fn check_report(report: &Report) -> Outcome {
    let failed: Vec<String> = report
        .failures()
        .map(|c| format!("FAILED {}: {}", c.name, c.detail))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(failed.join("\n")))
    }
}
