use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ird::bench::{
    evaluate_box, explain_point, run_experiment, BoxDocument, ExperimentConfig, ExplainSetup,
    ModelKind, SchemeKind, Typing,
};
use ird::predictor::CartParams;
use ird::{Method, TaskMode};

#[derive(Parser)]
#[command(
    name = "ird",
    version,
    about = "Interpretable regional descriptors for tabular models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explain one point and print the descriptor as a table.
    Explain(ExplainArgs),
    /// Run a benchmark described by a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-measure a saved box document.
    Evaluate {
        #[arg(long = "box")]
        box_file: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "train")]
        eval: SchemeKind,
        /// Uniform samples drawn in the largest local box for `--eval sampled`.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    target: String,
    /// tree, cart, linear, logistic or external (reads IRD_PREDICTOR_CMD)
    #[arg(long)]
    model: ModelKind,
    #[arg(long)]
    point_index: usize,
    /// CSV with feature columns; the point is taken from it instead of the data.
    #[arg(long)]
    point_file: Option<PathBuf>,
    /// binary, regression or external (the predictor emits the top-class probability)
    #[arg(long, default_value = "binary")]
    mode: TaskMode,
    #[arg(long, default_value = "maxbox")]
    method: Method,
    #[arg(long)]
    postproc: bool,
    #[arg(long, default_value = "train")]
    scheme: SchemeKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated feature names that may not change.
    #[arg(long, value_delimiter = ',')]
    immutable: Vec<String>,
    /// Column typing as JSON, e.g. '{"columns": {"job": {"ordinal": ["a", "b"]}}}'.
    #[arg(long)]
    typing: Option<String>,
    #[arg(long, default_value_t = 5)]
    max_depth: usize,
    #[arg(long, default_value_t = 5)]
    min_leaf: usize,
    /// Where to write the JSON box document.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn explain(args: ExplainArgs) -> ird::Result<()> {
    let typing = match &args.typing {
        Some(t) => serde_json::from_str::<Typing>(t)?,
        None => Typing::default(),
    };
    let setup = ExplainSetup {
        data: args.data,
        target: args.target,
        typing,
        model: args.model,
        cart: CartParams {
            max_depth: args.max_depth,
            min_leaf: args.min_leaf,
        },
        mode: args.mode,
        method: args.method,
        scheme: args.scheme,
        multiplier: 2.0,
        postproc: args.postproc,
        seed: args.seed,
        immutable: args.immutable,
        grid_steps: ird::localization::DEFAULT_GRID_STEPS,
        point_index: args.point_index,
        point_file: args.point_file,
    };
    let (report, doc) = explain_point(&setup)?;
    print!("{}", report.render_text());
    if let Some(out) = args.out {
        std::fs::write(&out, serde_json::to_string_pretty(&doc)?)?;
        log::info!("box document written to {}", out.display());
    }
    Ok(())
}

fn run(cli: Cli) -> ird::Result<()> {
    match cli.command {
        Command::Explain(args) => explain(args),
        Command::Bench { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let output = run_experiment(&cfg)?;
            output.write(&out)?;
            print!("{}", output.summary());
            println!("results written to {}", out.display());
            Ok(())
        }
        Command::Evaluate {
            box_file,
            data,
            eval,
            samples,
            seed,
        } => {
            let doc: BoxDocument = serde_json::from_str(&std::fs::read_to_string(&box_file)?)?;
            let q = evaluate_box(&doc, &data, eval, samples, seed)?;
            println!("{}", serde_json::to_string_pretty(&q)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
