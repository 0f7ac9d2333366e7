use roxmltree::Node;
use serde::{Deserialize, Serialize};

use crate::context::maven::parse_document;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("class {0} not found in report")]
    ClassNotInReport(String),
    #[error("malformed report: {0}")]
    Malformed(String),
}

/// One JaCoCo counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counter {
    pub covered: u64,
    pub missed: u64,
    pub ratio: f64,
}

impl Counter {
    pub fn new(covered: u64, missed: u64) -> Self {
        let total = covered + missed;
        let ratio = if total == 0 {
            1.0
        } else {
            covered as f64 / total as f64
        };
        Self { covered, missed, ratio }
    }

    /// No items to cover; the ratio is 1.0 by convention.
    pub fn is_vacuous(&self) -> bool {
        self.covered + self.missed == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageMetrics {
    pub instruction: Counter,
    pub branch: Counter,
    pub line: Counter,
    pub method: Counter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationMetrics {
    pub total_mutations: u64,
    pub detected: u64,
    pub ratio: f64,
}

impl MutationMetrics {
    pub fn new(total_mutations: u64, detected: u64) -> Self {
        let ratio = if total_mutations == 0 {
            1.0
        } else {
            detected as f64 / total_mutations as f64
        };
        Self {
            total_mutations,
            detected,
            ratio,
        }
    }

    pub fn is_vacuous(&self) -> bool {
        self.total_mutations == 0
    }
}

fn attr_u64(node: Node<'_, '_>, name: &str) -> Result<u64, ReportError> {
    let raw = node
        .attribute(name)
        .ok_or_else(|| ReportError::Malformed(format!("counter without {name}")))?;
    raw.trim()
        .parse()
        .map_err(|_| ReportError::Malformed(format!("{name}={raw:?} is not a count")))
}

/// Counters of the JaCoCo `<class>` element for `focal_fqn`.
pub fn parse_coverage_report(xml: &str, focal_fqn: &str) -> Result<CoverageMetrics, ReportError> {
    let doc = parse_document(xml).map_err(ReportError::Malformed)?;
    let root = doc.root_element();
    if root.tag_name().name() != "report" {
        return Err(ReportError::Malformed("root element is not <report>".into()));
    }
    let wanted = focal_fqn.replace('.', "/");
    let class = root
        .descendants()
        .find(|n| n.has_tag_name("class") && n.attribute("name") == Some(wanted.as_str()))
        .ok_or_else(|| ReportError::ClassNotInReport(focal_fqn.to_string()))?;

    let counter = |kind: &str| -> Result<Counter, ReportError> {
        match class
            .children()
            .find(|c| c.has_tag_name("counter") && c.attribute("type") == Some(kind))
        {
            Some(c) => Ok(Counter::new(attr_u64(c, "covered")?, attr_u64(c, "missed")?)),
            None => Ok(Counter::new(0, 0)),
        }
    };
    Ok(CoverageMetrics {
        instruction: counter("INSTRUCTION")?,
        branch: counter("BRANCH")?,
        line: counter("LINE")?,
        method: counter("METHOD")?,
    })
}

/// Mutations of `focal_fqn` in a PITest `mutations.xml`. KILLED and
/// TIMED_OUT count as detected; every other status, NO_COVERAGE included,
/// does not. A class with no mutations gets the vacuous ratio 1.0.
pub fn parse_mutation_report(xml: &str, focal_fqn: &str) -> Result<MutationMetrics, ReportError> {
    let doc = parse_document(xml).map_err(ReportError::Malformed)?;
    let root = doc.root_element();
    if root.tag_name().name() != "mutations" {
        return Err(ReportError::Malformed("root element is not <mutations>".into()));
    }
    let mut total = 0;
    let mut detected = 0;
    for m in root.children().filter(|n| n.has_tag_name("mutation")) {
        let class = m
            .children()
            .find(|c| c.has_tag_name("mutatedClass"))
            .and_then(|c| c.text())
            .map(str::trim);
        if class != Some(focal_fqn) {
            continue;
        }
        total += 1;
        if matches!(m.attribute("status"), Some("KILLED" | "TIMED_OUT")) {
            detected += 1;
        }
    }
    Ok(MutationMetrics::new(total, detected))
}
