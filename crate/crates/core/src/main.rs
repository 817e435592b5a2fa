use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semtopo::config::{Overrides, PipelineConfig};
use semtopo::{pipeline, scene, Result};

#[derive(Parser)]
#[command(name = "semtopo", version, about = "Turn a narrative text into a two-layer 3D scene")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment and filter the corpus, print counts.
    Ingest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the full pipeline and write a scene file.
    Run(RunArgs),
    /// Check a scene file.
    Validate {
        scene: PathBuf,
        /// Also re-hash the input files recorded in the scene.
        #[arg(long)]
        verify_inputs: bool,
    },
    /// Print headline counts of a scene file as JSON.
    Summary { scene: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Use the built-in hashed embedder instead of a vector file.
    #[arg(long)]
    fallback_embed: bool,
    #[arg(long)]
    sentiment: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "scene.json")]
    out: PathBuf,
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("summary serializes"));
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = PipelineConfig::load(&args.config)?;
    config.apply(&Overrides {
        embeddings: args.embeddings,
        fallback_embed: args.fallback_embed,
        sentiment: args.sentiment,
        lexicon: args.lexicon,
        gazetteer: args.gazetteer,
        annotations: args.annotations,
        seed: args.seed,
    });
    let out = pipeline::run_pipeline(&config)?;
    scene::write_scene(&args.out, &out.scene)?;
    print_json(&scene::summarize(&out.scene));
    Ok(())
}

fn validate(path: &Path, verify_inputs: bool) -> Result<()> {
    let doc = scene::read_scene(path)?;
    if verify_inputs {
        scene::verify_inputs(&doc)?;
    }
    println!("{}: ok", path.display());
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest { config } => {
            let config = PipelineConfig::load(&config)?;
            print_json(&pipeline::ingest(&config)?.stats());
            Ok(())
        }
        Command::Run(args) => run(args),
        Command::Validate {
            scene,
            verify_inputs,
        } => validate(&scene, verify_inputs),
        Command::Summary { scene } => {
            print_json(&scene::summarize(&scene::read_scene(&scene)?));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            log::debug!("root cause: {:?}", e.root());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
