//! Evaluation metrics over interaction records: command recognition
//! accuracy (CRA), object identification accuracy (OIA), navigation success
//! rate (NSR), average response time (ART) and the label confusion matrix.
//!
//! A metric with no eligible records is reported as `"undefined"` rather
//! than 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::nlu::{InteractionRecord, DETECTION_KIND};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("{0} is undefined: no eligible records")]
    Undefined(&'static str),
    #[error("record {id}: action_started precedes gui_sent by {:.6} s", -interval)]
    NegativeInterval { id: u64, interval: f64 },
}

/// A metric value that may be undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Defined(f64),
    Undefined,
}

impl Metric {
    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Defined(v) => Some(v),
            Metric::Undefined => None,
        }
    }
}

impl From<Result<f64, MetricError>> for Metric {
    fn from(r: Result<f64, MetricError>) -> Self {
        r.map_or(Metric::Undefined, Metric::Defined)
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Metric::Defined(v) => s.serialize_f64(*v),
            Metric::Undefined => s.serialize_str("undefined"),
        }
    }
}

fn fraction(hits: usize, total: usize, name: &'static str) -> Result<f64, MetricError> {
    if total == 0 {
        return Err(MetricError::Undefined(name));
    }
    Ok(hits as f64 / total as f64)
}

fn cra_eligible(r: &InteractionRecord) -> Option<&str> {
    if r.intent_kind == DETECTION_KIND {
        return None;
    }
    r.true_label.as_deref()
}

/// Fraction of labeled records whose predicted label equals the true label.
pub fn compute_cra(records: &[InteractionRecord]) -> Result<f64, MetricError> {
    let labeled: Vec<_> = records.iter().filter_map(|r| cra_eligible(r).map(|t| (t, r))).collect();
    let hits = labeled.iter().filter(|(t, r)| *t == r.predicted_label).count();
    fraction(hits, labeled.len(), "CRA")
}

/// Fraction of records with a detection outcome that were correct.
pub fn compute_oia(records: &[InteractionRecord]) -> Result<f64, MetricError> {
    let outcomes: Vec<bool> = records.iter().filter_map(|r| r.outcome.detection_correct).collect();
    fraction(outcomes.iter().filter(|c| **c).count(), outcomes.len(), "OIA")
}

/// Fraction of terminal navigation records that succeeded.
pub fn compute_nsr(records: &[InteractionRecord]) -> Result<f64, MetricError> {
    let outcomes: Vec<bool> = records.iter().filter_map(|r| r.outcome.nav_success).collect();
    fraction(outcomes.iter().filter(|c| **c).count(), outcomes.len(), "NSR")
}

/// Order-independent mean and population standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    sq.sort_by(f64::total_cmp);
    (mean, (sq.iter().sum::<f64>() / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelTiming {
    pub count: usize,
    pub mean: f64,
    /// Mean backend latency for this label, when recorded.
    pub backend_latency: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    /// Mean language-model backend latency over the same records; part of
    /// the interval above, reported separately.
    pub backend_latency: Metric,
    pub per_label: BTreeMap<String, LabelTiming>,
}

fn timing_stats(
    records: &[InteractionRecord],
    end: impl Fn(&InteractionRecord) -> Option<f64>,
    name: &'static str,
) -> Result<ArtStats, MetricError> {
    let mut rows: Vec<(&InteractionRecord, f64)> = Vec::new();
    for r in records.iter().filter(|r| r.intent_kind != DETECTION_KIND) {
        let (Some(sent), Some(end)) = (r.stamps.gui_sent, end(r)) else {
            continue;
        };
        let interval = end - sent;
        if interval < 0.0 {
            return Err(MetricError::NegativeInterval { id: r.id, interval });
        }
        rows.push((r, interval));
    }
    if rows.is_empty() {
        return Err(MetricError::Undefined(name));
    }
    let all: Vec<f64> = rows.iter().map(|(_, i)| *i).collect();
    let (mean, std) = mean_std(&all);
    let backend = |rs: &[&(&InteractionRecord, f64)]| {
        let lat: Vec<f64> = rs.iter().filter_map(|(r, _)| r.backend_latency).collect();
        if lat.is_empty() {
            Metric::Undefined
        } else {
            Metric::Defined(mean_std(&lat).0)
        }
    };
    let mut by_label: BTreeMap<String, Vec<&(&InteractionRecord, f64)>> = BTreeMap::new();
    for row in &rows {
        by_label.entry(row.0.predicted_label.clone()).or_default().push(row);
    }
    let per_label = by_label
        .into_iter()
        .map(|(label, rs)| {
            let vals: Vec<f64> = rs.iter().map(|(_, i)| *i).collect();
            let t = LabelTiming {
                count: vals.len(),
                mean: mean_std(&vals).0,
                backend_latency: backend(&rs),
            };
            (label, t)
        })
        .collect();
    let all_rows: Vec<_> = rows.iter().collect();
    Ok(ArtStats {
        count: rows.len(),
        mean,
        std,
        backend_latency: backend(&all_rows),
        per_label,
    })
}

/// Time from the user's send to the start of robot motion.
pub fn compute_art(records: &[InteractionRecord]) -> Result<ArtStats, MetricError> {
    timing_stats(records, |r| r.stamps.action_started, "ART")
}

/// Time from send to the published answer, for query interactions.
pub fn compute_query_response(records: &[InteractionRecord]) -> Result<ArtStats, MetricError> {
    timing_stats(records, |r| r.stamps.responded, "query response time")
}

/// Row-normalized true-by-predicted frequencies over the labels seen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    /// `rows[i][j]`: fraction of records with true label `labels[i]`
    /// predicted as `labels[j]`. Rows of labels never seen as true are 0.
    pub rows: Vec<Vec<f64>>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn get(&self, truth: &str, predicted: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == truth)?;
        let j = self.labels.iter().position(|l| l == predicted)?;
        Some(self.rows[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for l in &self.labels {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.rows) {
            out.push_str(l);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion_matrix(records: &[InteractionRecord]) -> ConfusionMatrix {
    let pairs: Vec<(&str, &str)> = records
        .iter()
        .filter_map(|r| cra_eligible(r).map(|t| (t, r.predicted_label.as_str())))
        .collect();
    let labels: Vec<String> = pairs
        .iter()
        .flat_map(|(t, p)| [*t, *p])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let idx = |l: &str| labels.iter().position(|x| x == l).expect("label collected above");
    let n = labels.len();
    let mut counts = vec![vec![0usize; n]; n];
    for (t, p) in &pairs {
        counts[idx(t)][idx(p)] += 1;
    }
    let rows = counts
        .iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.iter()
                .map(|c| if total == 0 { 0.0 } else { *c as f64 / total as f64 })
                .collect()
        })
        .collect();
    ConfusionMatrix { labels, rows, counts }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counts {
    pub records: usize,
    pub by_kind: BTreeMap<String, usize>,
    pub cra_eligible: usize,
    pub oia_eligible: usize,
    pub nsr_eligible: usize,
    pub art_eligible: usize,
    pub query_eligible: usize,
}

/// ART breakdown, or `"undefined"`.
#[derive(Debug, Clone, PartialEq)]
pub enum Timing {
    Defined(ArtStats),
    Undefined,
}

impl Serialize for Timing {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Timing::Defined(a) => a.serialize(s),
            Timing::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl Timing {
    fn from(r: Result<ArtStats, MetricError>) -> Result<Self, MetricError> {
        match r {
            Ok(a) => Ok(Timing::Defined(a)),
            Err(MetricError::Undefined(_)) => Ok(Timing::Undefined),
            Err(e) => Err(e),
        }
    }

    pub fn stats(&self) -> Option<&ArtStats> {
        match self {
            Timing::Defined(a) => Some(a),
            Timing::Undefined => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub cra: Metric,
    pub oia: Metric,
    pub nsr: Metric,
    pub art_seconds: Timing,
    pub query_response_seconds: Timing,
    pub counts: Counts,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Compute every metric; fails only on inconsistent timestamps.
pub fn compute_report(records: &[InteractionRecord]) -> Result<MetricsReport, MetricError> {
    let art = Timing::from(compute_art(records))?;
    let query = Timing::from(compute_query_response(records))?;
    let mut by_kind = BTreeMap::new();
    for r in records {
        *by_kind.entry(r.intent_kind.clone()).or_insert(0) += 1;
    }
    let counts = Counts {
        records: records.len(),
        by_kind,
        cra_eligible: records.iter().filter(|r| cra_eligible(r).is_some()).count(),
        oia_eligible: records.iter().filter(|r| r.outcome.detection_correct.is_some()).count(),
        nsr_eligible: records.iter().filter(|r| r.outcome.nav_success.is_some()).count(),
        art_eligible: art.stats().map_or(0, |a| a.count),
        query_eligible: query.stats().map_or(0, |a| a.count),
    };
    Ok(MetricsReport {
        cra: compute_cra(records).into(),
        oia: compute_oia(records).into(),
        nsr: compute_nsr(records).into(),
        art_seconds: art,
        query_response_seconds: query,
        counts,
        confusion: confusion_matrix(records),
    })
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

/// Write the report as JSON to `path`, plus the confusion matrix as CSV
/// next to it when `csv` is given.
pub fn emit_report(
    records: &[InteractionRecord],
    path: impl AsRef<Path>,
    csv: Option<&Path>,
) -> Result<MetricsReport, ReportError> {
    let report = compute_report(records)?;
    std::fs::write(path, report.to_json())?;
    if let Some(csv) = csv {
        std::fs::write(csv, report.confusion.to_csv())?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlu::{Outcome, Stamps};
    use proptest::prelude::*;

    fn rec(id: u64, truth: &str, pred: &str) -> InteractionRecord {
        InteractionRecord {
            id,
            input_text: String::new(),
            lm_output: String::new(),
            predicted_label: pred.into(),
            true_label: Some(truth.into()),
            intent_kind: "motion_pattern".into(),
            stamps: Stamps::default(),
            backend_latency: None,
            outcome: Outcome::default(),
        }
    }

    #[test]
    fn cra_counts() {
        let rs = vec![rec(1, "a", "a"), rec(2, "b", "b"), rec(3, "c", "c"), rec(4, "d", "a")];
        assert_eq!(compute_cra(&rs).unwrap(), 0.75);
        assert_eq!(compute_cra(&rs[..3]).unwrap(), 1.0);
        assert_eq!(compute_cra(&[]), Err(MetricError::Undefined("CRA")));
    }

    #[test]
    fn nsr_counts() {
        let rs: Vec<_> = (0..50)
            .map(|i| {
                let mut r = rec(i, "g", "g");
                r.outcome.nav_success = Some(i != 7);
                r
            })
            .collect();
        assert_eq!(compute_nsr(&rs).unwrap(), 0.98);
    }

    #[test]
    fn art_arithmetic_and_integrity() {
        let mut a = rec(1, "x", "x");
        a.stamps.gui_sent = Some(10.0);
        a.stamps.action_started = Some(10.2);
        let mut b = rec(2, "x", "x");
        b.stamps.gui_sent = Some(20.0);
        b.stamps.action_started = Some(20.4);
        assert!((compute_art(&[a.clone(), b.clone()]).unwrap().mean - 0.3).abs() < 1e-12);
        b.stamps.action_started = Some(19.0);
        assert!(matches!(
            compute_art(&[a, b]),
            Err(MetricError::NegativeInterval { id: 2, .. })
        ));
    }

    #[test]
    fn confusion_rows() {
        let rs = vec![rec(1, "a", "a"), rec(2, "b", "a"), rec(3, "b", "a")];
        let m = confusion_matrix(&rs);
        assert_eq!(m.labels, vec!["a", "b"]);
        assert_eq!(m.get("a", "a"), Some(1.0));
        assert_eq!(m.get("b", "a"), Some(1.0));
        assert_eq!(m.get("b", "b"), Some(0.0));
    }

    #[test]
    fn empty_report_is_undefined() {
        let r = compute_report(&[]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for k in ["cra", "oia", "nsr", "art_seconds"] {
            assert_eq!(v[k], "undefined");
        }
        assert_eq!(v["counts"]["records"], 0);
    }

    proptest! {
        #[test]
        fn permutation_invariant(pairs in prop::collection::vec((0u8..5, 0u8..5, 0.0f64..2.0), 1..60),
                                 seed in any::<u64>()) {
            let rs: Vec<_> = pairs.iter().enumerate().map(|(i, (t, p, dt))| {
                let mut r = rec(i as u64, &format!("l{t}"), &format!("l{p}"));
                r.stamps.gui_sent = Some(i as f64);
                r.stamps.action_started = Some(i as f64 + dt);
                r
            }).collect();
            let mut shuffled = rs.clone();
            use rand::{seq::SliceRandom, SeedableRng};
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(compute_report(&rs).unwrap().to_json(), compute_report(&shuffled).unwrap().to_json());
            let m = confusion_matrix(&rs);
            for (i, row) in m.rows.iter().enumerate() {
                if m.counts[i].iter().sum::<usize>() > 0 {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
