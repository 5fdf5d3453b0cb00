//! One-shot acceptance harness.
//!
//! [`verify`] runs every acceptance criterion and reports each measured
//! value next to the bound it is held to. Given a scenario, only the
//! criteria that make sense for its kind are run on its data; the rest
//! are reported as not applicable.

mod criteria;
mod focusing;

use std::fmt;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::scenario::{parse_config, ScenarioConfig, ScenarioKind};
use crate::Result;

pub use focusing::{focusing_suite, FocusingRun, SuiteRole};

/// Bounds the criteria are held to.
pub mod tolerance {
    pub const CROSS_FORM_REL: f64 = 1e-11;
    pub const CROSS_FORM_SECONDS: f64 = 10.0;
    pub const H_DRIFT: f64 = 1e-6;
    /// Disagreement between the three expressions of `H`.
    pub const H_FORMS: f64 = 1e-10;
    pub const CONSERVATION_SECONDS: f64 = 60.0;
    pub const H12_DRIFT: f64 = 1e-6;
    /// Momentum minimum relative to the initial L∞ scale.
    pub const SIGN_REL: f64 = 1e-8;
    pub const ONE_SIDED: f64 = 1e-10;
    pub const WEAK_RESIDUAL: f64 = 1e-6;
    /// Perturbed over unperturbed worst residual.
    pub const WEAK_CONTRAST: f64 = 10.0;
    pub const WEAK_SECONDS: f64 = 30.0;
    pub const PEAKON_SPEED_REL: f64 = 0.02;
    pub const FLOW_JACOBIAN_REL: f64 = 1e-4;
    /// Earliest admissible time of a monitor extreme, as a fraction of the
    /// elapsed time of a capped run.
    pub const FOCUS_LATE_FRACTION: f64 = 0.9;
    /// Least admissible `|extreme| / |initial|` of a capped run.
    pub const FOCUS_GROWTH: f64 = 10.0;
    /// Floor for the monitors of runs that reach their end time.
    pub const SMOOTH_FLOOR: f64 = -1.0;
    pub const ORDER_RATIO: (f64, f64) = (12.0, 20.0);
}

/// Scenario documents used by the default protocol.
pub mod protocol {
    pub const GX_CONSERVATION: &str = include_str!("../../configs/gx_conservation.toml");
    pub const CASE1_CONSERVATION: &str = include_str!("../../configs/case1_conservation.toml");
    pub const LINE_PEAKON: &str = include_str!("../../configs/line_peakon.toml");
    pub const PERIODIC_PEAKON: &str = include_str!("../../configs/periodic_peakon.toml");

    /// Amplitudes `(p, q)` of the analytic peakons in the weak-form check.
    pub fn weak_form_cases() -> Vec<(Vec<f64>, Vec<f64>)> {
        vec![(vec![1.0], vec![1.0]), (vec![1.0, 2.0], vec![3.0, 4.0])]
    }

    /// Random test functions per peakon in the weak-form check.
    pub const WEAK_TESTS: usize = 20;
}

/// What a measured value must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Above(f64),
    Below(f64),
    Between(f64, f64),
}

impl Bound {
    /// NaN is never admitted.
    pub fn admits(self, x: f64) -> bool {
        match self {
            Bound::AtMost(b) => x <= b,
            Bound::AtLeast(b) => x >= b,
            Bound::Above(b) => x > b,
            Bound::Below(b) => x < b,
            Bound::Between(lo, hi) => x >= lo && x <= hi,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(b) => write!(f, "<= {b:e}"),
            Bound::AtLeast(b) => write!(f, ">= {b:e}"),
            Bound::Above(b) => write!(f, "> {b:e}"),
            Bound::Below(b) => write!(f, "< {b:e}"),
            Bound::Between(lo, hi) => write!(f, "in [{lo}, {hi}]"),
        }
    }
}

/// One measured quantity and its bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, bound: Bound) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            passed: bound.admits(measured),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotApplicable => "N/A",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub status: Status,
    pub checks: Vec<Check>,
    pub note: Option<String>,
    pub seconds: f64,
}

impl CriterionReport {
    fn new(id: u8, checks: Vec<Check>, note: Option<String>, seconds: f64) -> Self {
        let status = if checks.is_empty() {
            Status::NotApplicable
        } else if checks.iter().all(|c| c.passed) {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            id,
            title: title(id).to_string(),
            status,
            checks,
            note,
            seconds,
        }
    }

    fn not_applicable(id: u8, note: impl Into<String>) -> Self {
        Self::new(id, Vec::new(), Some(note.into()), 0.0)
    }

    fn failed(id: u8, error: &crate::Error, seconds: f64) -> Self {
        Self {
            id,
            title: title(id).to_string(),
            status: Status::Fail,
            checks: Vec::new(),
            note: Some(format!("error: {error}")),
            seconds,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// One line: id, status, title and every check.
    pub fn summary_line(&self) -> String {
        let mut line = format!(
            "criterion {:>2} {:<4} {}",
            self.id,
            self.status.label(),
            self.title
        );
        let checks: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let mark = if c.passed { "" } else { "!! " };
                format!("{mark}{} = {:.4e} {}", c.name, c.measured, c.bound)
            })
            .collect();
        if !checks.is_empty() {
            line.push_str(&format!(" [{}]", checks.join("; ")));
        }
        if let Some(note) = &self.note {
            line.push_str(&format!(" ({note})"));
        }
        line
    }
}

/// Machine-readable verification result.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    /// The scenario document verified, when one was given.
    pub config: Option<String>,
    pub criteria: Vec<CriterionReport>,
}

impl VerifyReport {
    /// True when no criterion failed.
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.status != Status::Fail)
    }

    pub fn criterion(&self, id: u8) -> Option<&CriterionReport> {
        self.criteria.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "cross-form right-hand side"),
    (2, "Geng-Xue conservation of H"),
    (3, "conservation of H1 and H2"),
    (4, "sign preservation"),
    (5, "peakon weak form"),
    (6, "line peakon speed"),
    (7, "periodic peakon speed"),
    (8, "characteristic flow jacobian"),
    (9, "blow-up monitor coherence"),
    (10, "RK4 order of accuracy"),
    (11, "determinism"),
];

pub fn title(id: u8) -> &'static str {
    CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, t)| *t)
        .unwrap_or("unknown")
}

/// Parses one of the [`protocol`] documents.
pub fn protocol_config(text: &str) -> ScenarioConfig {
    parse_config(text).expect("protocol documents are valid")
}

/// Runs a criterion body, timing it and turning errors into a failure.
fn guarded(id: u8, body: impl FnOnce() -> Result<(Vec<Check>, Option<String>)>) -> CriterionReport {
    let started = Instant::now();
    match body() {
        Ok((checks, note)) => {
            CriterionReport::new(id, checks, note, started.elapsed().as_secs_f64())
        }
        Err(e) => CriterionReport::failed(id, &e, started.elapsed().as_secs_f64()),
    }
}

/// Runs the acceptance criteria. Without a scenario every criterion runs
/// on its default protocol; with one, the applicable criteria run on its
/// data. Run directories are created under `work_dir`.
pub fn verify(cfg: Option<&ScenarioConfig>, work_dir: &Path) -> Result<VerifyReport> {
    std::fs::create_dir_all(work_dir)?;
    let mut criteria = match cfg {
        None => default_suite(work_dir),
        Some(cfg) => configured_suite(cfg, work_dir),
    };
    criteria.sort_by_key(|c| c.id);
    Ok(VerifyReport {
        config: cfg.map(crate::scenario::serialize_config),
        criteria,
    })
}

fn default_suite(dir: &Path) -> Vec<CriterionReport> {
    let gx = protocol_config(protocol::GX_CONSERVATION);
    let mut out = vec![criteria::cross_form(0)];
    out.extend(criteria::gx_run_family(&gx, dir));
    out.push(criteria::order_of_accuracy(&gx));
    out.push(criteria::case1_conservation(
        &protocol_config(protocol::CASE1_CONSERVATION),
        dir,
    ));
    out.push(criteria::weak_form(&protocol::weak_form_cases(), 0));
    out.push(criteria::line_peakon_speed(
        &protocol_config(protocol::LINE_PEAKON),
        dir,
    ));
    out.push(criteria::periodic_peakon_speed(
        &protocol_config(protocol::PERIODIC_PEAKON),
        dir,
    ));
    out.push(focusing::blowup_coherence(dir));
    out
}

fn configured_suite(cfg: &ScenarioConfig, dir: &Path) -> Vec<CriterionReport> {
    let mut out = vec![criteria::cross_form(cfg.seed)];
    let mut ran = vec![1u8];
    match cfg.kind {
        ScenarioKind::Gx => {
            out.extend(criteria::gx_run_family(cfg, dir));
            out.push(criteria::order_of_accuracy(cfg));
            ran.extend([2, 4, 8, 10, 11]);
        }
        ScenarioKind::Case1 => {
            out.push(criteria::case1_conservation(cfg, dir));
            ran.push(3);
        }
        ScenarioKind::Peakon => {
            if let crate::scenario::config::InitialData::Peakon(p) = &cfg.initial {
                out.push(criteria::weak_form(&[(p.p.clone(), p.q.clone())], cfg.seed));
            }
            out.push(criteria::line_peakon_speed(cfg, dir));
            ran.extend([5, 6]);
        }
        ScenarioKind::PeriodicPeakon => {
            out.push(criteria::periodic_peakon_speed(cfg, dir));
            ran.push(7);
        }
        ScenarioKind::General | ScenarioKind::Case2 => {}
    }
    for (id, _) in CRITERIA {
        if !ran.contains(&id) && out.iter().all(|c| c.id != id) {
            let why = if id == 9 {
                "runs on the built-in focusing suite only".to_string()
            } else {
                format!("does not apply to a {} scenario", cfg.kind.name())
            };
            out.push(CriterionReport::not_applicable(id, why));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_reject_nan() {
        for b in [
            Bound::AtMost(1.0),
            Bound::AtLeast(0.0),
            Bound::Above(0.0),
            Bound::Below(1.0),
            Bound::Between(0.0, 1.0),
        ] {
            assert!(!b.admits(f64::NAN));
        }
        assert!(Bound::AtMost(1.0).admits(1.0) && !Bound::Below(1.0).admits(1.0));
        assert!(
            Bound::Between(12.0, 20.0).admits(16.0) && !Bound::Between(12.0, 20.0).admits(21.0)
        );
    }

    #[test]
    fn status_follows_checks() {
        let ok = CriterionReport::new(1, vec![Check::new("a", 0.5, Bound::AtMost(1.0))], None, 0.0);
        assert_eq!(ok.status, Status::Pass);
        let bad = CriterionReport::new(
            1,
            vec![
                Check::new("a", 0.5, Bound::AtMost(1.0)),
                Check::new("b", 2.0, Bound::AtMost(1.0)),
            ],
            None,
            0.0,
        );
        assert_eq!(bad.status, Status::Fail);
        assert!(bad.summary_line().contains("!! b"));
        assert_eq!(
            CriterionReport::not_applicable(6, "x").status,
            Status::NotApplicable
        );
    }

    #[test]
    fn protocol_documents_parse() {
        for text in [
            protocol::GX_CONSERVATION,
            protocol::CASE1_CONSERVATION,
            protocol::LINE_PEAKON,
            protocol::PERIODIC_PEAKON,
        ] {
            parse_config(text).unwrap();
        }
    }

    #[test]
    fn every_criterion_has_a_title() {
        assert!((1..=11).all(|id| title(id) != "unknown"));
    }
}
