//! Assessment rows, the results CSV, and per-configuration bookkeeping.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::execution::{CoverageMetrics, MutationMetrics};
use crate::generation::{GeneratedTest, TestStatus};
use crate::smells::SmellProfile;

pub const HUMAN_MODEL: &str = "human";
pub const HUMAN_PROMPT: &str = "-";

/// A ratio in [0, 1] held as whole hundredths. Conversions from `f64`
/// truncate, so 2/3 becomes 0.66.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Ratio(u8);

impl Ratio {
    pub const ONE: Ratio = Ratio(100);

    pub fn from_hundredths(h: u8) -> Option<Self> {
        (h <= 100).then_some(Self(h))
    }

    pub fn hundredths(self) -> u8 {
        self.0
    }

    /// Truncate to two decimals. The small epsilon absorbs binary noise
    /// such as 0.29 * 100 = 28.999999999999996.
    pub fn truncate(r: f64) -> Self {
        let h = (r.clamp(0.0, 1.0) * 100.0 + 1e-9).floor();
        Self(h as u8)
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 100.0
    }

    /// Parse a decimal in [0, 1] with at most two fractional digits.
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        let (int, frac) = text.split_once('.').unwrap_or((text, ""));
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if frac.len() > 2 || !frac.bytes().all(|b| b.is_ascii_digit()) || (text.contains('.') && frac.is_empty()) {
            return None;
        }
        let int: u32 = int.parse().ok()?;
        let frac: u32 = format!("{frac:0<2}").parse().ok()?;
        let h = int.checked_mul(100)?.checked_add(frac)?;
        u8::try_from(h).ok().and_then(Self::from_hundredths)
    }
}

impl TryFrom<f64> for Ratio {
    type Error = String;
    fn try_from(r: f64) -> Result<Self, String> {
        if (0.0..=1.0).contains(&r) {
            Ok(Self::truncate(r))
        } else {
            Err(format!("ratio {r} outside [0, 1]"))
        }
    }
}

impl From<Ratio> for f64 {
    fn from(r: Ratio) -> f64 {
        r.as_f64()
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (int, frac) = (self.0 / 100, self.0 % 100);
        match frac {
            0 => write!(f, "{int}"),
            _ if frac % 10 == 0 => write!(f, "{int}.{}", frac / 10),
            _ => write!(f, "{int}.{frac:02}"),
        }
    }
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentRow {
    pub model: String,
    pub prompt_name: String,
    pub project: String,
    pub focal_class: String,
    pub instruction: Ratio,
    pub branch: Ratio,
    pub line: Ratio,
    pub method: Ratio,
    pub mutation: Ratio,
    pub smells: SmellProfile,
}

impl AssessmentRow {
    pub fn coverage(&self) -> [Ratio; 5] {
        [self.instruction, self.branch, self.line, self.method, self.mutation]
    }
}

/// Whose tests a row describes.
#[derive(Debug, Clone, Copy)]
pub enum RowSource<'a> {
    Generated(&'a GeneratedTest),
    Human {
        project: &'a str,
        focal_fqn: &'a str,
        green: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot assess {focal}: test suite is not green ({state})")]
pub struct IllegalState {
    pub focal: String,
    pub state: String,
}

fn simple_name(fqn: &str) -> &str {
    fqn.rsplit_once('.').map_or(fqn, |(_, n)| n)
}

pub fn assemble_row(
    source: RowSource<'_>,
    cov: &CoverageMetrics,
    mutation: &MutationMetrics,
    smells: &SmellProfile,
) -> Result<AssessmentRow, IllegalState> {
    let (model, prompt, project, focal) = match source {
        RowSource::Generated(g) => {
            if g.status != TestStatus::Green {
                return Err(IllegalState {
                    focal: g.focal_fqn.clone(),
                    state: serde_json::to_value(g.status)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                });
            }
            (g.model.as_str(), g.prompt_name.as_str(), g.repo_id.as_str(), g.focal_fqn.as_str())
        }
        RowSource::Human {
            project,
            focal_fqn,
            green,
        } => {
            if !green {
                return Err(IllegalState {
                    focal: focal_fqn.to_string(),
                    state: "human tests not green".into(),
                });
            }
            (HUMAN_MODEL, HUMAN_PROMPT, project, focal_fqn)
        }
    };
    Ok(AssessmentRow {
        model: model.to_string(),
        prompt_name: prompt.to_string(),
        project: project.to_string(),
        focal_class: simple_name(focal).to_string(),
        instruction: Ratio::truncate(cov.instruction.ratio),
        branch: Ratio::truncate(cov.branch.ratio),
        line: Ratio::truncate(cov.line.ratio),
        method: Ratio::truncate(cov.method.ratio),
        mutation: Ratio::truncate(mutation.ratio),
        smells: *smells,
    })
}

pub const LEADING_COLUMNS: [&str; 9] = [
    "model",
    "prompt name",
    "Project",
    "Focal Class",
    "instruction coverage",
    "branch coverage",
    "line coverage",
    "method coverage",
    "mutation coverage",
];

pub fn csv_header() -> Vec<&'static str> {
    LEADING_COLUMNS
        .iter()
        .chain(SmellProfile::COLUMNS.iter())
        .copied()
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Format { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn render_csv(rows: &[AssessmentRow]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(csv_header()).expect("in-memory write");
    for row in rows {
        let mut record = vec![
            row.model.clone(),
            row.prompt_name.clone(),
            row.project.clone(),
            row.focal_class.clone(),
        ];
        record.extend(row.coverage().iter().map(Ratio::to_string));
        record.extend(row.smells.values().iter().map(u32::to_string));
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are UTF-8")
}

pub fn emit_csv(rows: &[AssessmentRow], path: &Path) -> Result<(), CsvError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, render_csv(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<AssessmentRow>, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = records.next().ok_or(CsvError::Format {
        line: 1,
        message: "missing header".into(),
    })??;
    if header.iter().collect::<Vec<_>>() != csv_header() {
        return Err(CsvError::Format {
            line: 1,
            message: "header does not match the expected columns".into(),
        });
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| CsvError::Format { line, message };
        if record.len() != 28 {
            return Err(bad(format!("expected 28 fields, found {}", record.len())));
        }
        let ratio = |i: usize| {
            Ratio::parse(&record[i]).ok_or_else(|| bad(format!("{:?} is not a ratio", &record[i])))
        };
        let mut smells = [0u32; 19];
        for (k, slot) in smells.iter_mut().enumerate() {
            *slot = record[9 + k]
                .parse()
                .map_err(|_| bad(format!("{:?} is not a count", &record[9 + k])))?;
        }
        rows.push(AssessmentRow {
            model: record[0].to_string(),
            prompt_name: record[1].to_string(),
            project: record[2].to_string(),
            focal_class: record[3].to_string(),
            instruction: ratio(4)?,
            branch: ratio(5)?,
            line: ratio(6)?,
            method: ratio(7)?,
            mutation: ratio(8)?,
            smells: SmellProfile::from_values(smells),
        });
    }
    Ok(rows)
}

/// Terminal state of one (model, prompt, focal class) attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    Green,
    RejectedCompile,
    RejectedFailing,
    RejectedNoCode,
    BudgetExceeded,
    EndpointError,
    /// Anything else that stopped the attempt (unreadable files, build
    /// timeouts, missing reports).
    Failed,
}

impl AttemptOutcome {
    /// The generated class compiled.
    pub fn built(self) -> bool {
        matches!(self, Self::Green | Self::RejectedFailing)
    }
}

impl From<TestStatus> for AttemptOutcome {
    fn from(s: TestStatus) -> Self {
        match s {
            TestStatus::Green => Self::Green,
            TestStatus::RejectedCompile => Self::RejectedCompile,
            TestStatus::RejectedFailing => Self::RejectedFailing,
            TestStatus::RejectedNoCode => Self::RejectedNoCode,
            TestStatus::Placed => Self::Failed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub model: String,
    pub prompt_name: String,
    pub project: String,
    pub focal_fqn: String,
    pub outcome: AttemptOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<AssessmentRow>,
}

impl AttemptRecord {
    pub fn key(&self) -> (&str, &str, &str, &str) {
        (&self.model, &self.prompt_name, &self.project, &self.focal_fqn)
    }
}

/// `count (pp.pp%)` with the percentage truncated to two decimals.
pub fn format_share(count: u64, total: u64) -> String {
    let basis_points = if total == 0 { 0 } else { count * 10_000 / total };
    format!("{count} ({}.{:02}%)", basis_points / 100, basis_points % 100)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCoverage {
    pub instruction: f64,
    pub branch: f64,
    pub line: f64,
    pub method: f64,
    pub mutation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub model: String,
    pub prompt_name: String,
    pub total_attempted: u64,
    pub build_count: u64,
    pub pass_count: u64,
    pub total_rejected: u64,
    pub build: String,
    pub pass: String,
    /// Means over green rows; absent when there are none.
    pub means: Option<MeanCoverage>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub configs: Vec<ConfigSummary>,
}

impl CampaignSummary {
    pub fn get(&self, model: &str, prompt: &str) -> Option<&ConfigSummary> {
        self.configs
            .iter()
            .find(|c| c.model == model && c.prompt_name == prompt)
    }
}

/// Build/pass counts per (model, prompt) from the attempt records, and
/// coverage means from the rows. Configurations appear in first-seen
/// order.
pub fn summarize(rows: &[AssessmentRow], attempts: &[AttemptRecord]) -> CampaignSummary {
    let mut keys: Vec<(String, String)> = Vec::new();
    for (m, p) in attempts
        .iter()
        .map(|a| (&a.model, &a.prompt_name))
        .chain(rows.iter().map(|r| (&r.model, &r.prompt_name)))
    {
        if !keys.iter().any(|(km, kp)| km == m && kp == p) {
            keys.push((m.clone(), p.clone()));
        }
    }
    let configs = keys
        .into_iter()
        .map(|(model, prompt_name)| {
            let mine: Vec<&AttemptRecord> = attempts
                .iter()
                .filter(|a| a.model == model && a.prompt_name == prompt_name)
                .collect();
            let total = mine.len() as u64;
            let build = mine.iter().filter(|a| a.outcome.built()).count() as u64;
            let pass = mine.iter().filter(|a| a.outcome == AttemptOutcome::Green).count() as u64;
            let green: Vec<&AssessmentRow> = rows
                .iter()
                .filter(|r| r.model == model && r.prompt_name == prompt_name)
                .collect();
            let means = (!green.is_empty()).then(|| {
                let n = green.len() as f64;
                let mean = |i: usize| green.iter().map(|r| r.coverage()[i].as_f64()).sum::<f64>() / n;
                MeanCoverage {
                    instruction: mean(0),
                    branch: mean(1),
                    line: mean(2),
                    method: mean(3),
                    mutation: mean(4),
                }
            });
            ConfigSummary {
                model,
                prompt_name,
                total_attempted: total,
                build_count: build,
                pass_count: pass,
                total_rejected: total - pass,
                build: format_share(build, total),
                pass: format_share(pass, total),
                means,
            }
        })
        .collect();
    CampaignSummary { configs }
}

fn mean_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

/// Plain-text table of a summary.
pub fn render_summary(summary: &CampaignSummary) -> String {
    let mut out = String::from(
        "model\tprompt\tattempted\tbuild\tpass\ttotal rejected\tinstruction\tbranch\tline\tmethod\tmutation\n",
    );
    for c in &summary.configs {
        let m = c.means;
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            c.model,
            c.prompt_name,
            c.total_attempted,
            c.build,
            c.pass,
            c.total_rejected,
            mean_cell(m.map(|m| m.instruction)),
            mean_cell(m.map(|m| m.branch)),
            mean_cell(m.map(|m| m.line)),
            mean_cell(m.map(|m| m.method)),
            mean_cell(m.map(|m| m.mutation)),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::Counter;
    use proptest::prelude::*;

    #[test]
    fn ratio_truncates_and_trims() {
        assert_eq!(Ratio::truncate(2.0 / 3.0).to_string(), "0.66");
        assert_eq!(Ratio::truncate(0.29).to_string(), "0.29");
        assert_eq!(Ratio::truncate(0.5).to_string(), "0.5");
        assert_eq!(Ratio::truncate(1.0).to_string(), "1");
        assert_eq!(Ratio::truncate(0.0).to_string(), "0");
        assert_eq!(Ratio::truncate(0.07).to_string(), "0.07");
        assert_eq!(Ratio::parse("0.72"), Ratio::from_hundredths(72));
        assert_eq!(Ratio::parse("1.00"), Some(Ratio::ONE));
        for bad in ["1.01", "2", "0.123", "-0.1", ".5", "0.", "x"] {
            assert_eq!(Ratio::parse(bad), None, "{bad}");
        }
    }

    #[test]
    fn shares_match_published_figures() {
        assert_eq!(format_share(64, 94), "64 (68.08%)");
        assert_eq!(format_share(36, 94), "36 (38.29%)");
        assert_eq!(format_share(1, 3), "1 (33.33%)");
        assert_eq!(format_share(0, 0), "0 (0.00%)");
    }

    fn metrics(i: f64, b: f64, l: f64, m: f64) -> CoverageMetrics {
        let c = |r: f64| Counter { covered: 0, missed: 0, ratio: r };
        CoverageMetrics { instruction: c(i), branch: c(b), line: c(l), method: c(m) }
    }

    #[test]
    fn published_row() {
        let g = GeneratedTest {
            model: "gpt-4".into(),
            prompt_name: "zero-shot".into(),
            repo_id: "8313187".into(),
            focal_fqn: "org.example.LDMLPredicateParser".into(),
            raw_reply: String::new(),
            source: None,
            placed_path: None,
            status: TestStatus::Green,
        };
        let mut smells = SmellProfile::default();
        smells.assertion_roulette = 3;
        smells.magic_number_test = 9;
        let row = assemble_row(
            RowSource::Generated(&g),
            &metrics(0.88, 1.0, 0.83, 0.5),
            &MutationMetrics::new(4, 4),
            &smells,
        )
        .unwrap();
        assert_eq!(
            render_csv(&[row]).lines().nth(1).unwrap(),
            "gpt-4,zero-shot,8313187,LDMLPredicateParser,0.88,1,0.83,0.5,1,3,0,0,0,0,0,0,0,0,9,0,0,0,0,0,0,0,0,0"
        );
    }

    #[test]
    fn human_and_illegal_rows() {
        let human = assemble_row(
            RowSource::Human { project: "p", focal_fqn: "a.B", green: true },
            &metrics(1.0, 1.0, 1.0, 1.0),
            &MutationMetrics::new(0, 0),
            &SmellProfile::default(),
        )
        .unwrap();
        assert_eq!((human.model.as_str(), human.prompt_name.as_str()), ("human", "-"));

        let mut g = GeneratedTest {
            model: "m".into(),
            prompt_name: "p".into(),
            repo_id: "r".into(),
            focal_fqn: "a.B".into(),
            raw_reply: String::new(),
            source: None,
            placed_path: None,
            status: TestStatus::RejectedCompile,
        };
        let err = assemble_row(
            RowSource::Generated(&g),
            &metrics(1.0, 1.0, 1.0, 1.0),
            &MutationMetrics::new(0, 0),
            &SmellProfile::default(),
        )
        .unwrap_err();
        assert_eq!(err.state, "rejected_compile");
        g.status = TestStatus::Placed;
        assert!(assemble_row(
            RowSource::Generated(&g),
            &metrics(1.0, 1.0, 1.0, 1.0),
            &MutationMetrics::new(0, 0),
            &SmellProfile::default(),
        )
        .is_err());
    }

    #[test]
    fn empty_csv_is_header_only() {
        let text = render_csv(&[]);
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("model,prompt name,Project,Focal Class,instruction coverage,"));
        assert!(parse_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn summary_counts_and_absent_means() {
        let rec = |outcome| AttemptRecord {
            model: "m".into(),
            prompt_name: "p".into(),
            project: "r".into(),
            focal_fqn: "a.B".into(),
            outcome,
            detail: None,
            row: None,
        };
        let attempts = vec![
            rec(AttemptOutcome::Green),
            rec(AttemptOutcome::RejectedCompile),
            rec(AttemptOutcome::RejectedFailing),
        ];
        let s = summarize(&[], &attempts);
        let c = s.get("m", "p").unwrap();
        assert_eq!((c.total_attempted, c.build_count, c.pass_count, c.total_rejected), (3, 2, 1, 2));
        assert_eq!(c.build, "2 (66.66%)");
        assert_eq!(c.pass, "1 (33.33%)");
        assert_eq!(c.means, None);
    }

    fn arb_row() -> impl Strategy<Value = AssessmentRow> {
        (
            ("[ -~]{0,12}", "[ -~]{0,12}", "[a-z0-9,\"]{1,8}", "[A-Za-z]{1,10}"),
            proptest::array::uniform5(0u8..=100),
            proptest::array::uniform19(0u32..50),
        )
            .prop_map(|((model, prompt_name, project, focal_class), cov, smells)| AssessmentRow {
                model,
                prompt_name,
                project,
                focal_class,
                instruction: Ratio(cov[0]),
                branch: Ratio(cov[1]),
                line: Ratio(cov[2]),
                method: Ratio(cov[3]),
                mutation: Ratio(cov[4]),
                smells: SmellProfile::from_values(smells),
            })
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in proptest::collection::vec(arb_row(), 0..20)) {
            prop_assert_eq!(parse_csv(&render_csv(&rows)).unwrap(), rows);
        }

        #[test]
        fn summary_means_match_csv(rows in proptest::collection::vec(arb_row(), 1..20)) {
            let rows: Vec<_> = rows.into_iter().map(|mut r| { r.model = "m".into(); r.prompt_name = "p".into(); r }).collect();
            let s = summarize(&rows, &[]);
            let parsed = parse_csv(&render_csv(&rows)).unwrap();
            let mean = parsed.iter().map(|r| r.instruction.as_f64()).sum::<f64>() / parsed.len() as f64;
            prop_assert!((s.configs[0].means.unwrap().instruction - mean).abs() < 1e-9);
        }
    }
}
