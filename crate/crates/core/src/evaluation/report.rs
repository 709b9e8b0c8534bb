//! Per-language evaluation over all four dataset variants.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use serde::Serialize;

use super::{
    compute_metrics, krippendorff_alpha, positive_rate, resolve_dataset, AnnotationRecord, EvaluationError,
    MetricsReport, ResolvedDataset, Variant, VariantRule,
};
use crate::language::Language;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantReport {
    pub variant: Variant,
    pub items: usize,
    pub discarded: usize,
    /// Items left out because their prediction errored.
    pub errored: usize,
    pub positive_rate: Option<f64>,
    /// Absent when nothing is left to score.
    pub metrics: Option<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanguageReport {
    pub language: Language,
    pub records: usize,
    pub alpha: Option<f64>,
    pub variants: Vec<VariantReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub rule: VariantRule,
    pub languages: Vec<LanguageReport>,
}

/// Scores predictions per language and variant. A prediction of `None` marks
/// an errored item, which is excluded from the metrics and counted separately.
pub fn evaluate(
    records: &[AnnotationRecord],
    predictions: &HashMap<String, Option<bool>>,
    rule: VariantRule,
) -> Result<EvaluationReport, EvaluationError> {
    let known: HashMap<&str, ()> = records.iter().map(|r| (r.id.as_str(), ())).collect();
    if let Some(id) = predictions.keys().find(|id| !known.contains_key(id.as_str())) {
        return Err(EvaluationError::IdMismatch(format!("prediction for unknown id {id}")));
    }
    if let Some(r) = records.iter().find(|r| !predictions.contains_key(&r.id)) {
        return Err(EvaluationError::IdMismatch(format!("no prediction for {}", r.id)));
    }

    let mut by_lang: BTreeMap<Language, Vec<AnnotationRecord>> = BTreeMap::new();
    for r in records {
        by_lang.entry(r.language).or_default().push(r.clone());
    }

    let mut languages = Vec::new();
    for (language, recs) in by_lang {
        let alpha = match krippendorff_alpha(&recs) {
            Ok(a) => Some(a),
            Err(EvaluationError::InsufficientData) => None,
            Err(e) => return Err(e),
        };
        let mut variants = Vec::new();
        for variant in Variant::ALL {
            let resolved = resolve_dataset(&recs, variant, rule);
            let (scored, errored): (Vec<_>, Vec<_>) =
                resolved.items.iter().cloned().partition(|(id, _)| predictions[id].is_some());
            let truth = ResolvedDataset { variant, items: scored, discarded: resolved.discarded.clone() };
            let preds: Vec<(String, bool)> = truth
                .items
                .iter()
                .map(|(id, _)| (id.clone(), predictions[id].expect("partitioned")))
                .collect();
            let metrics = if truth.items.is_empty() { None } else { Some(compute_metrics(&preds, &truth)?) };
            variants.push(VariantReport {
                variant,
                items: resolved.items.len(),
                discarded: resolved.discarded.len(),
                errored: errored.len(),
                positive_rate: positive_rate(&resolved).ok(),
                metrics,
            });
        }
        languages.push(LanguageReport { language, records: recs.len(), alpha, variants });
    }
    Ok(EvaluationReport { rule, languages })
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

impl EvaluationReport {
    /// Aligned plain-text table, one row per language and variant.
    pub fn render_table(&self) -> String {
        let header = ["Lang", "Variant", "Items", "Discarded", "Errored", "Precision", "Recall", "F1", "Positive"];
        let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for lang in &self.languages {
            for v in &lang.variants {
                let m = v.metrics.as_ref();
                let mut row = vec![
                    lang.language.tag().to_uppercase(),
                    v.variant.name().to_string(),
                    v.items.to_string(),
                    v.discarded.to_string(),
                    v.errored.to_string(),
                    num(m.map(|m| m.precision)),
                    num(m.map(|m| m.recall)),
                    num(m.map(|m| m.f1)),
                    num(v.positive_rate),
                ];
                if m.is_none() {
                    row.push("(empty after discard)".to_string());
                }
                rows.push(row);
            }
        }
        let cols = header.len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let mut line = String::new();
            for (c, cell) in row.iter().enumerate() {
                if c > 0 {
                    line.push_str("  ");
                }
                if c < cols {
                    let pad = widths[c] - cell.chars().count();
                    if c < 2 {
                        line.push_str(cell);
                        line.push_str(&" ".repeat(pad));
                    } else {
                        line.push_str(&" ".repeat(pad));
                        line.push_str(cell);
                    }
                } else {
                    line.push_str(cell);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out.push('\n');
        for lang in &self.languages {
            let _ = writeln!(
                out,
                "{} Krippendorff's alpha (interval): {}",
                lang.language.tag().to_uppercase(),
                lang.alpha.map_or_else(|| "n/a".to_string(), |a| format!("{a:.3}"))
            );
        }
        let _ = writeln!(out, "Permissive/Strict rule: {:?}", self.rule);
        out
    }
}
