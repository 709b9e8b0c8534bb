use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{AnnotationRecord, EvaluationError, ResolvedDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl MetricsReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self { precision, recall, f1: f1_score(precision, recall), tp, fp, fn_, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Scores predictions against every resolved item. Predictions for discarded
/// ids are ignored; any other unknown id, or a resolved item without a
/// prediction, is an [`EvaluationError::IdMismatch`].
pub fn compute_metrics(
    predictions: &[(String, bool)],
    truth: &ResolvedDataset,
) -> Result<MetricsReport, EvaluationError> {
    let mut pred: HashMap<&str, bool> = HashMap::with_capacity(predictions.len());
    for (id, p) in predictions {
        if pred.insert(id, *p).is_some() {
            return Err(EvaluationError::IdMismatch(format!("duplicate prediction for {id}")));
        }
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (id, gold) in &truth.items {
        let p = pred
            .remove(id.as_str())
            .ok_or_else(|| EvaluationError::IdMismatch(format!("no prediction for {id}")))?;
        match (p, *gold) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    for id in &truth.discarded {
        pred.remove(id.as_str());
    }
    if let Some(extra) = pred.keys().next() {
        return Err(EvaluationError::IdMismatch(format!("prediction for unknown id {extra}")));
    }
    Ok(MetricsReport::from_counts(tp, fp, fn_, tn))
}

/// Fraction of resolved items whose label equals the source dataset's label.
pub fn agreement_rate(resolved: &ResolvedDataset, records: &[AnnotationRecord]) -> Result<f64, EvaluationError> {
    if resolved.items.is_empty() {
        return Err(EvaluationError::EmptyDataset);
    }
    let original: HashMap<&str, Option<bool>> =
        records.iter().map(|r| (r.id.as_str(), r.original_label)).collect();
    let mut agree = 0;
    for (id, label) in &resolved.items {
        match original.get(id.as_str()).copied().flatten() {
            Some(o) => agree += usize::from(o == *label),
            None => return Err(EvaluationError::MissingOriginalLabel(id.clone())),
        }
    }
    Ok(ratio(agree, resolved.items.len()))
}

pub fn positive_rate(resolved: &ResolvedDataset) -> Result<f64, EvaluationError> {
    if resolved.items.is_empty() {
        return Err(EvaluationError::EmptyDataset);
    }
    Ok(ratio(resolved.items.iter().filter(|(_, l)| *l).count(), resolved.items.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{RaterLabel, Variant};
    use proptest::prelude::*;

    fn dataset(labels: &[bool]) -> ResolvedDataset {
        ResolvedDataset {
            variant: Variant::Majority,
            items: labels.iter().enumerate().map(|(i, &l)| (i.to_string(), l)).collect(),
            discarded: vec!["gone".into()],
        }
    }

    fn preds(labels: &[bool]) -> Vec<(String, bool)> {
        labels.iter().enumerate().map(|(i, &l)| (i.to_string(), l)).collect()
    }

    #[test]
    fn headline_f1() {
        let f = f1_score(0.92, 0.89);
        assert!((f - 0.904_751_9).abs() < 1e-6);
        assert_eq!(format!("{f:.2}"), "0.90");
    }

    #[test]
    fn perfect_and_all_negative() {
        let truth = [true, false, true, false];
        let m = compute_metrics(&preds(&truth), &dataset(&truth)).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let m = compute_metrics(&preds(&[false; 4]), &dataset(&truth)).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!((m.fn_, m.tn), (2, 2));
    }

    #[test]
    fn id_mismatch() {
        let truth = dataset(&[true, false]);
        assert!(matches!(compute_metrics(&preds(&[true]), &truth), Err(EvaluationError::IdMismatch(_))));
        let mut extra = preds(&[true, false]);
        extra.push(("gone".into(), true));
        assert!(compute_metrics(&extra, &truth).is_ok());
        extra.push(("stranger".into(), true));
        assert!(matches!(compute_metrics(&extra, &truth), Err(EvaluationError::IdMismatch(_))));
    }

    #[test]
    fn rates() {
        let rec = |id: &str, o: Option<bool>| AnnotationRecord {
            id: id.into(),
            text: String::new(),
            language: crate::Language::En,
            labels: [RaterLabel::Yes; 3],
            original_label: o,
        };
        let d = dataset(&[true, true, false, false]);
        let recs: Vec<_> = ["0", "1", "2", "3"]
            .iter()
            .zip([Some(true), Some(true), Some(false), Some(true)])
            .map(|(id, o)| rec(id, o))
            .collect();
        assert_eq!(agreement_rate(&d, &recs).unwrap(), 0.75);
        let same: Vec<_> = d.items.iter().map(|(id, l)| rec(id, Some(*l))).collect();
        assert_eq!(agreement_rate(&d, &same).unwrap(), 1.0);
        let inverted: Vec<_> = d.items.iter().map(|(id, l)| rec(id, Some(!l))).collect();
        assert_eq!(agreement_rate(&d, &inverted).unwrap(), 0.0);
        let mut missing = recs.clone();
        missing[2].original_label = None;
        assert!(matches!(agreement_rate(&d, &missing), Err(EvaluationError::MissingOriginalLabel(id)) if id == "2"));

        assert_eq!(positive_rate(&d).unwrap(), 0.5);
        assert_eq!(positive_rate(&dataset(&[true; 3])).unwrap(), 1.0);
        assert!(matches!(positive_rate(&dataset(&[])), Err(EvaluationError::EmptyDataset)));
    }

    proptest! {
        #[test]
        fn counts_cover_items(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..50)) {
            let (p, t): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            let m = compute_metrics(&preds(&p), &dataset(&t)).unwrap();
            prop_assert_eq!(m.total(), t.len());
            if m.precision + m.recall > 0.0 {
                prop_assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-12);
            } else {
                prop_assert_eq!(m.f1, 0.0);
            }
            for v in [m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
