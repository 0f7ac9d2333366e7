//! The end-to-end loop: prompt every model with every template for every
//! focal class, then build, filter, measure and report.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use futures::stream::{self, StreamExt};
use serde_json::json;

use crate::context::{build_prompt_context, extract_build_descriptor, BuildDescriptor, Exemplar};
use crate::corpus::{CorpusManifest, FocalPair};
use crate::execution::{
    green_suite_filter, parse_coverage_report, parse_mutation_report, BuildRunner, ExecutionError,
    Goal, ReportLocations, Scope,
};
use crate::generation::{
    extract_code, place_test_class, ChatClient, GeneratedTest, ModelSpec, RetryPolicy, TestStatus,
    DEFAULT_ENDPOINT,
};
use crate::instrumentation::{ensure_coverage_tool, ensure_mutation_tool, ToolVersions};
use crate::journal::{RunJournal, Workspace};
use crate::prompting::{check_token_budget, instantiate_prompt, CampaignConfig, CounterRegistry};
use crate::reporting::{
    assemble_row, emit_csv, render_summary, summarize, AssessmentRow, AttemptOutcome,
    AttemptRecord, CampaignSummary, RowSource, HUMAN_MODEL, HUMAN_PROMPT,
};
use crate::smells::{detect_smells, parse_test_class, FocalClass};

pub const ATTEMPTS_FILE: &str = "attempts.jsonl";
pub const CSV_FILE: &str = "assessment.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const SUMMARY_JSON: &str = "summary.json";

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Toolchain(ExecutionError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CampaignError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CampaignError::Toolchain(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CampaignError {
    let context = context.into();
    move |source| CampaignError::Io { context, source }
}

#[derive(Clone)]
pub struct CampaignOptions {
    pub rundir: PathBuf,
    /// Concurrent model requests.
    pub parallelism: usize,
    /// Used for models without their own endpoint.
    pub default_endpoint: String,
    pub skip_human: bool,
    pub tool_versions: ToolVersions,
    /// Overrides the build system's default report paths.
    pub reports: Option<ReportLocations>,
    pub example: Exemplar,
    pub counters: CounterRegistry,
    pub retry: RetryPolicy,
}

impl CampaignOptions {
    pub fn new(rundir: &Path) -> Self {
        Self {
            rundir: rundir.to_path_buf(),
            parallelism: 4,
            default_endpoint: DEFAULT_ENDPOINT.to_string(),
            skip_human: false,
            tool_versions: ToolVersions::default(),
            reports: None,
            example: Exemplar::bundled(),
            counters: CounterRegistry::default(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub rows: Vec<AssessmentRow>,
    pub attempts: Vec<AttemptRecord>,
    pub summary: CampaignSummary,
}

type Key = (String, String, String, String);

fn key_of(r: &AttemptRecord) -> Key {
    (r.model.clone(), r.prompt_name.clone(), r.project.clone(), r.focal_fqn.clone())
}

/// Append-only attempt log; the resume point of a campaign.
struct AttemptLog {
    path: PathBuf,
    records: Mutex<Vec<AttemptRecord>>,
}

impl AttemptLog {
    fn open(rundir: &Path) -> Result<Self, CampaignError> {
        let path = rundir.join(ATTEMPTS_FILE);
        let mut records = Vec::new();
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(io_err(path.display().to_string()))?;
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                match serde_json::from_str::<AttemptRecord>(line) {
                    Ok(r) => records.push(r),
                    // A torn last line from an interrupted run is dropped.
                    Err(e) => tracing::warn!("{}:{}: skipping unreadable record: {e}", path.display(), i + 1),
                }
            }
        }
        Ok(Self {
            path,
            records: Mutex::new(records),
        })
    }

    fn done(&self) -> BTreeSet<Key> {
        self.records.lock().unwrap().iter().map(key_of).collect()
    }

    fn push(&self, record: AttemptRecord, journal: &RunJournal) -> Result<(), CampaignError> {
        journal.record("attempt", serde_json::to_value(&record).unwrap_or_default());
        let line = serde_json::to_string(&record).expect("records serialize");
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(io_err(self.path.display().to_string()))?;
        writeln!(file, "{line}").map_err(io_err(self.path.display().to_string()))?;
        self.records.lock().unwrap().push(record);
        Ok(())
    }

    fn all(&self) -> Vec<AttemptRecord> {
        self.records.lock().unwrap().clone()
    }
}

fn record(
    model: &str,
    prompt: &str,
    project: &str,
    focal_fqn: &str,
    outcome: AttemptOutcome,
    detail: Option<String>,
) -> AttemptRecord {
    AttemptRecord {
        model: model.to_string(),
        prompt_name: prompt.to_string(),
        project: project.to_string(),
        focal_fqn: focal_fqn.to_string(),
        outcome,
        detail,
        row: None,
    }
}

struct Job<'a> {
    spec: ModelSpec,
    token_limit: u64,
    prompt: &'a crate::prompting::PromptTemplate,
    pair: &'a FocalPair,
}

/// Prompt, budget-check, request and extract for one attempt. `Err` is
/// the terminal record of an attempt that produced no code.
async fn generate(
    job: Job<'_>,
    root: &Path,
    repo: &str,
    descriptor: &BuildDescriptor,
    opts: &CampaignOptions,
    client: &ChatClient,
) -> Result<GeneratedTest, AttemptRecord> {
    let (model, prompt_name, focal) = (&job.spec.model, &job.prompt.name, &job.pair.focal_fqn);
    let fail = |outcome, detail: String| record(model, prompt_name, repo, focal, outcome, Some(detail));

    let ctx = build_prompt_context(root, job.pair, descriptor, Some(&opts.example))
        .map_err(|e| fail(AttemptOutcome::Failed, e.to_string()))?;
    let messages =
        instantiate_prompt(job.prompt, &ctx).map_err(|e| fail(AttemptOutcome::Failed, e.to_string()))?;
    let counter = opts.counters.for_model(model);
    check_token_budget(&messages, job.token_limit, counter.as_ref())
        .map_err(|e| fail(AttemptOutcome::BudgetExceeded, e.to_string()))?;

    let attempt_id = format!("{model}/{prompt_name}/{repo}/{focal}");
    let reply = client
        .request_completion(&job.spec, &messages, &attempt_id)
        .await
        .map_err(|e| fail(AttemptOutcome::EndpointError, e.to_string()))?;
    let source = extract_code(&reply)
        .ok_or_else(|| fail(AttemptOutcome::RejectedNoCode, "reply contains no Java code".into()))?;
    Ok(GeneratedTest {
        model: model.clone(),
        prompt_name: prompt_name.clone(),
        repo_id: repo.to_string(),
        focal_fqn: focal.clone(),
        raw_reply: reply,
        source: Some(source),
        placed_path: None,
        status: TestStatus::Placed,
    })
}

struct Project<'a> {
    root: &'a Path,
    repo: &'a str,
    descriptor: BuildDescriptor,
    locations: ReportLocations,
    pairs: BTreeMap<&'a str, &'a FocalPair>,
}

fn metrics_row(
    project: &Project<'_>,
    runner: &dyn BuildRunner,
    test: &GeneratedTest,
    human: bool,
) -> Result<AssessmentRow, String> {
    let pair = project
        .pairs
        .get(test.focal_fqn.as_str())
        .ok_or_else(|| format!("{} is not in the manifest", test.focal_fqn))?;
    let test_fqn = test.test_fqn().ok_or("cannot name the test class")?;
    let module = project.root.join(pair.module_prefix());
    let system = project.descriptor.system;

    let run = |goal: Goal, report: &Path, scope: Scope| -> Result<String, String> {
        let _ = fs::remove_file(report);
        let outcome = runner
            .run_build(project.root, system, goal, &scope)
            .map_err(|e| e.to_string())?;
        if !outcome.success {
            return Err(format!("{goal} build failed (log: {})", outcome.raw_log_path.display()));
        }
        fs::read_to_string(report).map_err(|e| format!("{goal} report {}: {e}", report.display()))
    };

    let cov_path = module.join(&project.locations.coverage);
    let cov_xml = run(
        Goal::Coverage,
        &cov_path,
        Scope {
            tests: vec![test_fqn.clone()],
            target_classes: vec![],
        },
    )?;
    let cov = parse_coverage_report(&cov_xml, &test.focal_fqn).map_err(|e| e.to_string())?;

    let mut_path = module.join(&project.locations.mutation);
    let mut_xml = run(
        Goal::Mutation,
        &mut_path,
        Scope {
            tests: vec![test_fqn],
            target_classes: vec![test.focal_fqn.clone()],
        },
    )?;
    let mutation = parse_mutation_report(&mut_xml, &test.focal_fqn).map_err(|e| e.to_string())?;

    let focal_src = fs::read_to_string(project.root.join(&pair.focal_path)).map_err(|e| e.to_string())?;
    let source = test.source.as_deref().unwrap_or_default();
    let smells = match parse_test_class(source, project.descriptor.framework) {
        Ok(model) => detect_smells(&model, &FocalClass::from_source(&focal_src)),
        Err(e) => return Err(format!("test class does not parse: {e}")),
    };

    let row_source = if human {
        RowSource::Human {
            project: project.repo,
            focal_fqn: &test.focal_fqn,
            green: test.status == TestStatus::Green,
        }
    } else {
        RowSource::Generated(test)
    };
    assemble_row(row_source, &cov, &mutation, &smells).map_err(|e| e.to_string())
}

/// Instrument, place, filter and measure one (model, prompt) group, then
/// restore the checkout.
fn assess_group(
    project: &Project<'_>,
    runner: &dyn BuildRunner,
    mut tests: Vec<GeneratedTest>,
    human: bool,
    opts: &CampaignOptions,
    journal: &RunJournal,
    log: &AttemptLog,
) -> Result<(), CampaignError> {
    let mut ws = Workspace::new(project.root).with_backups(&opts.rundir.join("backups").join(project.repo));
    let result = assess_in(project, runner, &mut tests, human, opts, journal, log, &mut ws);
    ws.restore()
        .map_err(io_err(format!("restoring {}", project.root.display())))?;
    result
}

#[allow(clippy::too_many_arguments)]
fn assess_in(
    project: &Project<'_>,
    runner: &dyn BuildRunner,
    tests: &mut [GeneratedTest],
    human: bool,
    opts: &CampaignOptions,
    journal: &RunJournal,
    log: &AttemptLog,
    ws: &mut Workspace,
) -> Result<(), CampaignError> {
    let finish = |t: &GeneratedTest, outcome: AttemptOutcome, detail: Option<String>, row: Option<AssessmentRow>| {
        let mut r = record(&t.model, &t.prompt_name, project.repo, &t.focal_fqn, outcome, detail);
        r.row = row;
        log.push(r, journal)
    };

    let instrumented = ensure_coverage_tool(ws, &project.descriptor, &opts.tool_versions)
        .and_then(|_| ensure_mutation_tool(ws, &project.descriptor, &opts.tool_versions));
    if let Err(e) = instrumented {
        for t in tests.iter() {
            finish(t, AttemptOutcome::Failed, Some(e.to_string()), None)?;
        }
        return Ok(());
    }

    if !human {
        for t in tests.iter_mut() {
            let pair = project.pairs[t.focal_fqn.as_str()];
            match place_test_class(ws, pair, t.source.as_deref().unwrap_or_default()) {
                Ok((path, text)) => {
                    journal.record(
                        "placed",
                        json!({ "model": t.model, "prompt": t.prompt_name, "focal": t.focal_fqn, "path": path }),
                    );
                    t.placed_path = Some(path);
                    t.source = Some(text);
                }
                Err(e) => {
                    t.status = TestStatus::RejectedNoCode;
                    finish(t, AttemptOutcome::RejectedNoCode, Some(e.to_string()), None)?;
                }
            }
        }
    }

    match green_suite_filter(runner, ws, project.descriptor.system, tests, Some(journal)) {
        Ok(report) => journal.record(
            "filter_done",
            json!({ "iterations": report.iterations, "survivors": report.survivors.len() }),
        ),
        Err(ExecutionError::ToolchainMissing(tool)) => {
            return Err(CampaignError::Toolchain(ExecutionError::ToolchainMissing(tool)))
        }
        Err(e) => {
            for t in tests.iter().filter(|t| t.status == TestStatus::Placed) {
                finish(t, AttemptOutcome::Failed, Some(e.to_string()), None)?;
            }
            return Ok(());
        }
    }

    for t in tests.iter() {
        match t.status {
            TestStatus::Green => match metrics_row(project, runner, t, human) {
                Ok(row) => finish(t, AttemptOutcome::Green, None, Some(row))?,
                Err(detail) => finish(t, AttemptOutcome::Failed, Some(detail), None)?,
            },
            TestStatus::RejectedCompile | TestStatus::RejectedFailing => {
                finish(t, t.status.into(), None, None)?
            }
            // Already recorded at placement.
            TestStatus::RejectedNoCode => {}
            TestStatus::Placed => finish(t, AttemptOutcome::Failed, Some("not assessed".into()), None)?,
        }
    }
    Ok(())
}

/// Run a whole campaign into `opts.rundir`: `assessment.csv`,
/// `summary.txt`, `summary.json`, the attempt log and the event journal.
/// Attempts already in the log are skipped, so an interrupted run can be
/// restarted with the same directory.
pub fn run_campaign(
    config: &CampaignConfig,
    manifests: &[CorpusManifest],
    opts: &CampaignOptions,
    runner: &dyn BuildRunner,
) -> Result<CampaignOutcome, CampaignError> {
    fs::create_dir_all(&opts.rundir).map_err(io_err(opts.rundir.display().to_string()))?;
    let journal = Arc::new(RunJournal::open(&opts.rundir).map_err(io_err("opening journal"))?);
    let log = AttemptLog::open(&opts.rundir)?;
    let client = ChatClient::new()
        .with_retry_policy(opts.retry)
        .with_journal(journal.clone());
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(io_err("starting async runtime"))?;
    journal.record(
        "campaign_start",
        json!({ "models": config.models.len(), "prompts": config.prompts.len(), "projects": manifests.len() }),
    );

    for manifest in manifests {
        let snapshot = &manifest.snapshot;
        let root = snapshot.local_path.as_path();
        let repo = snapshot.repo_id.as_str();
        let done = log.done();
        let pending = |model: &str, prompt: &str, pair: &FocalPair| {
            !done.contains(&(model.to_string(), prompt.to_string(), repo.to_string(), pair.focal_fqn.clone()))
        };

        let mut jobs = Vec::new();
        for entry in &config.models {
            let spec = ModelSpec::from_entry(entry, &opts.default_endpoint);
            for prompt in &config.prompts {
                for pair in manifest.pairs.iter().filter(|p| pending(&entry.model, &prompt.name, p)) {
                    jobs.push(Job {
                        spec: spec.clone(),
                        token_limit: entry.token_limit,
                        prompt,
                        pair,
                    });
                }
            }
        }
        let humans: Vec<&FocalPair> = if opts.skip_human || config.models.is_empty() {
            Vec::new()
        } else {
            manifest
                .pairs
                .iter()
                .filter(|p| p.test_path.is_some() && pending(HUMAN_MODEL, HUMAN_PROMPT, p))
                .collect()
        };
        if jobs.is_empty() && humans.is_empty() {
            continue;
        }

        let descriptor = match extract_build_descriptor(root) {
            Ok(d) => d,
            Err(e) => {
                for job in &jobs {
                    log.push(
                        record(&job.spec.model, &job.prompt.name, repo, &job.pair.focal_fqn, AttemptOutcome::Failed, Some(e.to_string())),
                        &journal,
                    )?;
                }
                for pair in &humans {
                    log.push(
                        record(HUMAN_MODEL, HUMAN_PROMPT, repo, &pair.focal_fqn, AttemptOutcome::Failed, Some(e.to_string())),
                        &journal,
                    )?;
                }
                continue;
            }
        };
        runner
            .check_toolchain(root, descriptor.system)
            .map_err(CampaignError::Toolchain)?;
        let project = Project {
            root,
            repo,
            locations: opts
                .reports
                .clone()
                .unwrap_or_else(|| ReportLocations::defaults(descriptor.system)),
            descriptor,
            pairs: manifest.pairs.iter().map(|p| (p.focal_fqn.as_str(), p)).collect(),
        };

        // Generation fans out; results keep job order.
        let parallelism = opts.parallelism.max(1);
        let results: Vec<Result<GeneratedTest, AttemptRecord>> = runtime.block_on(
            stream::iter(jobs.into_iter().map(|job| {
                generate(job, root, repo, &project.descriptor, opts, &client)
            }))
            .buffered(parallelism)
            .collect(),
        );
        let mut groups: Vec<((String, String), Vec<GeneratedTest>)> = Vec::new();
        for result in results {
            match result {
                Ok(test) => {
                    let key = (test.model.clone(), test.prompt_name.clone());
                    match groups.iter_mut().find(|(k, _)| *k == key) {
                        Some((_, v)) => v.push(test),
                        None => groups.push((key, vec![test])),
                    }
                }
                Err(rec) => log.push(rec, &journal)?,
            }
        }

        for (_, tests) in groups {
            assess_group(&project, runner, tests, false, opts, &journal, &log)?;
        }

        if !humans.is_empty() {
            let mut tests = Vec::new();
            for pair in humans {
                let test_path = root.join(pair.test_path.as_deref().unwrap_or_default());
                match fs::read_to_string(&test_path) {
                    Ok(source) => tests.push(GeneratedTest {
                        model: HUMAN_MODEL.into(),
                        prompt_name: HUMAN_PROMPT.into(),
                        repo_id: repo.into(),
                        focal_fqn: pair.focal_fqn.clone(),
                        raw_reply: String::new(),
                        source: Some(source),
                        placed_path: Some(test_path),
                        status: TestStatus::Placed,
                    }),
                    Err(e) => log.push(
                        record(HUMAN_MODEL, HUMAN_PROMPT, repo, &pair.focal_fqn, AttemptOutcome::Failed, Some(e.to_string())),
                        &journal,
                    )?,
                }
            }
            assess_group(&project, runner, tests, true, opts, &journal, &log)?;
        }
    }

    let attempts = log.all();
    let mut rows: Vec<AssessmentRow> = attempts.iter().filter_map(|a| a.row.clone()).collect();
    rows.sort_by(|a, b| {
        (&a.model, &a.prompt_name, &a.project, &a.focal_class)
            .cmp(&(&b.model, &b.prompt_name, &b.project, &b.focal_class))
    });
    let summary = summarize(&rows, &attempts);
    emit_csv(&rows, &opts.rundir.join(CSV_FILE)).map_err(|e| CampaignError::Io {
        context: CSV_FILE.into(),
        source: std::io::Error::other(e.to_string()),
    })?;
    fs::write(opts.rundir.join(SUMMARY_FILE), render_summary(&summary)).map_err(io_err(SUMMARY_FILE))?;
    fs::write(
        opts.rundir.join(SUMMARY_JSON),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )
    .map_err(io_err(SUMMARY_JSON))?;
    journal.record("campaign_done", json!({ "attempts": attempts.len(), "rows": rows.len() }));
    Ok(CampaignOutcome {
        rows,
        attempts,
        summary,
    })
}

/// Rebuild the summary of a finished (or interrupted) run from its
/// attempt log.
pub fn summarize_rundir(rundir: &Path) -> Result<CampaignSummary, CampaignError> {
    let log = AttemptLog::open(rundir)?;
    let attempts = log.all();
    let rows: Vec<AssessmentRow> = attempts.iter().filter_map(|a| a.row.clone()).collect();
    Ok(summarize(&rows, &attempts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_models_gives_empty_outputs() {
        let dir = tempfile::tempdir().unwrap();
        struct NoBuild;
        impl BuildRunner for NoBuild {
            fn run_build(
                &self,
                _: &Path,
                _: crate::context::BuildSystem,
                _: Goal,
                _: &Scope,
            ) -> Result<crate::execution::BuildOutcome, ExecutionError> {
                panic!("no build expected")
            }
        }
        let config = CampaignConfig {
            models: vec![],
            prompts: vec![],
            example: None,
        };
        let out = run_campaign(&config, &[], &CampaignOptions::new(dir.path()), &NoBuild).unwrap();
        assert!(out.rows.is_empty() && out.attempts.is_empty());
        let csv = fs::read_to_string(dir.path().join(CSV_FILE)).unwrap();
        assert_eq!(csv.lines().count(), 1);
    }
}
