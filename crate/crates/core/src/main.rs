use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

use testbench::campaign::{run_campaign, summarize_rundir, CampaignError, CampaignOptions};
use testbench::context::{extract_build_descriptor, Exemplar, Framework};
use testbench::corpus::{build_manifest, parse_repo_list, read_corpus, snapshot_source, write_corpus};
use testbench::execution::{CommandRunner, DEFAULT_MUTATION_TIMEOUT};
use testbench::prompting::parse_campaign;
use testbench::reporting::render_summary;
use testbench::smells::{detect_smells, parse_test_class, FocalClass};

#[derive(Parser)]
#[command(name = "testbench", version, about = "Generate and assess LLM-written unit tests for Java projects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Snapshot repositories and map focal classes to their tests.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Show what the harness infers about a project's build.
    Context {
        #[command(subcommand)]
        action: ContextAction,
    },
    Campaign {
        #[command(subcommand)]
        action: CampaignAction,
    },
    Smells {
        #[command(subcommand)]
        action: SmellsAction,
    },
    Report {
        #[command(subcommand)]
        action: ReportAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    Build {
        /// One `<url-or-path> [branch]` per line.
        #[arg(long)]
        repos: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where clones are kept.
        #[arg(long, default_value = "repos")]
        workdir: PathBuf,
    },
}

#[derive(Subcommand)]
enum ContextAction {
    Inspect { root: PathBuf },
}

#[derive(Subcommand)]
enum CampaignAction {
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Concurrent model requests.
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
        /// Per build goal, in seconds.
        #[arg(long, default_value_t = 600)]
        timeout: u64,
        /// Base URL for models that do not name one.
        #[arg(long)]
        endpoint: Option<String>,
        /// Do not assess the projects' own tests.
        #[arg(long)]
        skip_human: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameworkArg {
    Junit4,
    Junit5,
    Testng,
    Auto,
}

#[derive(Subcommand)]
enum SmellsAction {
    /// Print the smell profile of a test class as JSON.
    Analyze {
        test: PathBuf,
        #[arg(long)]
        focal: PathBuf,
        #[arg(long, value_enum, default_value_t = FrameworkArg::Auto)]
        framework: FrameworkArg,
    },
}

#[derive(Subcommand)]
enum ReportAction {
    /// Recompute the summary table of a run directory.
    Summarize {
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }
}

impl From<CampaignError> for Failure {
    fn from(e: CampaignError) -> Self {
        Self {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn corpus_build(repos: &Path, out: &Path, workdir: &Path) -> Result<(), Failure> {
    let mut manifests = Vec::new();
    for source in parse_repo_list(&read(repos)?) {
        let snapshot = match snapshot_source(&source, workdir) {
            Ok(s) => s,
            Err(e) => {
                tracing::error!("{}: {e}", source.location);
                continue;
            }
        };
        let (manifest, warnings) = build_manifest(snapshot);
        for w in warnings {
            tracing::warn!("{w}");
        }
        tracing::info!(
            "{}: {} pairs, {} with tests",
            manifest.snapshot.repo_id,
            manifest.pairs.len(),
            manifest.stats.test_class_count
        );
        manifests.push(manifest);
    }
    write_corpus(&manifests, out).map_err(Failure::config)
}

fn campaign_run(
    config: &Path,
    manifest: &Path,
    out: &Path,
    parallelism: usize,
    timeout: u64,
    endpoint: Option<String>,
    skip_human: bool,
) -> Result<(), Failure> {
    let campaign = parse_campaign(&read(config)?).map_err(|e| Failure::config(format!("{}: {e}", config.display())))?;
    let manifests = read_corpus(manifest).map_err(|e| Failure::config(format!("{}: {e}", manifest.display())))?;

    let mut opts = CampaignOptions::new(out);
    opts.parallelism = parallelism;
    opts.skip_human = skip_human;
    if let Some(endpoint) = endpoint {
        opts.default_endpoint = endpoint;
    }
    if let Some(example) = &campaign.example {
        let base = config.parent().unwrap_or(Path::new("."));
        opts.example = Exemplar::load(
            &base.join(&example.focal),
            &base.join(&example.test),
            &example.testing_framework,
            &example.java_version,
        )
        .map_err(Failure::config)?;
    }

    let goal_timeout = Duration::from_secs(timeout);
    let runner = CommandRunner::new(&out.join("logs"))
        .with_timeouts(goal_timeout, goal_timeout.max(DEFAULT_MUTATION_TIMEOUT));
    let outcome = run_campaign(&campaign, &manifests, &opts, &runner)?;
    print!("{}", render_summary(&outcome.summary));
    Ok(())
}

fn smells_analyze(test: &Path, focal: &Path, framework: FrameworkArg) -> Result<(), Failure> {
    let framework = match framework {
        FrameworkArg::Junit4 => Framework::JUnit4,
        FrameworkArg::Junit5 => Framework::JUnit5,
        FrameworkArg::Testng => Framework::TestNG,
        FrameworkArg::Auto => Framework::Unknown,
    };
    let model = parse_test_class(&read(test)?, framework)
        .map_err(|e| Failure::config(format!("{}: {e}", test.display())))?;
    let profile = detect_smells(&model, &FocalClass::from_source(&read(focal)?));
    println!("{}", serde_json::to_string_pretty(&profile).expect("profile serializes"));
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Corpus {
            action: CorpusAction::Build { repos, out, workdir },
        } => corpus_build(&repos, &out, &workdir),
        Command::Context {
            action: ContextAction::Inspect { root },
        } => {
            let descriptor = extract_build_descriptor(&root).map_err(Failure::config)?;
            println!("{}", serde_json::to_string_pretty(&descriptor).expect("descriptor serializes"));
            Ok(())
        }
        Command::Campaign {
            action:
                CampaignAction::Run {
                    config,
                    manifest,
                    out,
                    parallelism,
                    timeout,
                    endpoint,
                    skip_human,
                },
        } => campaign_run(&config, &manifest, &out, parallelism, timeout, endpoint, skip_human),
        Command::Smells {
            action: SmellsAction::Analyze { test, focal, framework },
        } => smells_analyze(&test, &focal, framework),
        Command::Report {
            action: ReportAction::Summarize { out },
        } => {
            print!("{}", render_summary(&summarize_rundir(&out)?));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
