use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AnnotationRecord, RaterLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Safe,
    Majority,
    Permissive,
    Strict,
}

impl Variant {
    pub const ALL: [Self; 4] = [Self::Safe, Self::Majority, Self::Permissive, Self::Strict];

    pub fn name(self) -> &'static str {
        match self {
            Self::Safe => "Safe",
            Self::Majority => "Majority",
            Self::Permissive => "Permissive",
            Self::Strict => "Strict",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which borderline rule each of Permissive and Strict uses.
///
/// `Literal` follows the printed definitions. `Swapped` exchanges them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantRule {
    #[default]
    Literal,
    Swapped,
}

impl FromStr for VariantRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "literal" => Ok(Self::Literal),
            "swapped" => Ok(Self::Swapped),
            _ => Err(format!("unknown variant rule {s:?} (expected literal or swapped)")),
        }
    }
}

fn count(labels: &[RaterLabel; 3], l: RaterLabel) -> usize {
    labels.iter().filter(|&&x| x == l).count()
}

/// At least one Unsure, or raters not unanimous.
pub fn is_borderline(labels: &[RaterLabel; 3]) -> bool {
    labels.contains(&RaterLabel::Unsure) || labels.iter().any(|&l| l != labels[0])
}

fn unanimous(labels: &[RaterLabel; 3]) -> Option<bool> {
    match labels {
        [RaterLabel::Yes, RaterLabel::Yes, RaterLabel::Yes] => Some(true),
        [RaterLabel::No, RaterLabel::No, RaterLabel::No] => Some(false),
        _ => None,
    }
}

/// Interval mean above one half is positive, below is negative, exactly one half is discarded.
pub fn resolve_majority(labels: &[RaterLabel; 3]) -> Option<bool> {
    // Compare 2·sum against 3 on integer half-units to avoid float ties.
    let halves: usize = labels
        .iter()
        .map(|l| match l {
            RaterLabel::Yes => 2,
            RaterLabel::Unsure => 1,
            RaterLabel::No => 0,
        })
        .sum();
    match halves.cmp(&3) {
        std::cmp::Ordering::Greater => Some(true),
        std::cmp::Ordering::Less => Some(false),
        std::cmp::Ordering::Equal => None,
    }
}

pub fn resolve_safe(labels: &[RaterLabel; 3]) -> Option<bool> {
    unanimous(labels)
}

fn any_yes(labels: &[RaterLabel; 3]) -> bool {
    count(labels, RaterLabel::Yes) > 0
}

fn no_no(labels: &[RaterLabel; 3]) -> bool {
    count(labels, RaterLabel::No) == 0
}

/// Borderline items are positive iff some rater said Yes.
pub fn resolve_permissive(labels: &[RaterLabel; 3]) -> bool {
    unanimous(labels).unwrap_or_else(|| any_yes(labels))
}

/// Borderline items are positive iff no rater said No.
pub fn resolve_strict(labels: &[RaterLabel; 3]) -> bool {
    unanimous(labels).unwrap_or_else(|| no_no(labels))
}

pub fn resolve(variant: Variant, labels: &[RaterLabel; 3], rule: VariantRule) -> Option<bool> {
    match (variant, rule) {
        (Variant::Safe, _) => resolve_safe(labels),
        (Variant::Majority, _) => resolve_majority(labels),
        (Variant::Permissive, VariantRule::Literal) | (Variant::Strict, VariantRule::Swapped) => {
            Some(resolve_permissive(labels))
        }
        (Variant::Strict, VariantRule::Literal) | (Variant::Permissive, VariantRule::Swapped) => {
            Some(resolve_strict(labels))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResolvedDataset {
    pub variant: Variant,
    pub items: Vec<(String, bool)>,
    pub discarded: Vec<String>,
}

pub fn resolve_dataset(records: &[AnnotationRecord], variant: Variant, rule: VariantRule) -> ResolvedDataset {
    let mut items = Vec::new();
    let mut discarded = Vec::new();
    for r in records {
        match resolve(variant, &r.labels, rule) {
            Some(label) => items.push((r.id.clone(), label)),
            None => discarded.push(r.id.clone()),
        }
    }
    ResolvedDataset { variant, items, discarded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use RaterLabel::{No as N, Unsure as U, Yes as Y};

    /// Expected (Majority, Safe, Permissive, Strict); `None` is a discard.
    #[rustfmt::skip]
    const TABLE: [([RaterLabel; 3], [Option<bool>; 4]); 10] = [
        ([Y, Y, Y], [Some(true),  Some(true),  Some(true),  Some(true)]),
        ([Y, Y, U], [Some(true),  None,        Some(true),  Some(true)]),
        ([Y, Y, N], [Some(true),  None,        Some(true),  Some(false)]),
        ([Y, U, U], [Some(true),  None,        Some(true),  Some(true)]),
        ([Y, U, N], [None,        None,        Some(true),  Some(false)]),
        ([Y, N, N], [Some(false), None,        Some(true),  Some(false)]),
        ([U, U, U], [None,        None,        Some(false), Some(true)]),
        ([U, U, N], [Some(false), None,        Some(false), Some(false)]),
        ([U, N, N], [Some(false), None,        Some(false), Some(false)]),
        ([N, N, N], [Some(false), Some(false), Some(false), Some(false)]),
    ];

    fn permutations(l: [RaterLabel; 3]) -> [[RaterLabel; 3]; 6] {
        let [a, b, c] = l;
        [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
    }

    #[test]
    fn truth_table() {
        for (labels, [maj, safe, perm, strict]) in TABLE {
            for p in permutations(labels) {
                assert_eq!(resolve_majority(&p), maj, "{p:?}");
                assert_eq!(resolve_safe(&p), safe, "{p:?}");
                assert_eq!(Some(resolve_permissive(&p)), perm, "{p:?}");
                assert_eq!(Some(resolve_strict(&p)), strict, "{p:?}");
                assert_eq!(resolve(Variant::Permissive, &p, VariantRule::Swapped), strict);
                assert_eq!(resolve(Variant::Strict, &p, VariantRule::Swapped), perm);
            }
        }
    }

    #[test]
    fn published_majority_cases() {
        assert_eq!(resolve_majority(&[Y, Y, N]), Some(true));
        assert_eq!(resolve_majority(&[Y, U, U]), Some(true));
        assert_eq!(resolve_majority(&[Y, N, U]), None);
    }

    #[test]
    fn dataset_partition() {
        let rec = |id: &str, labels| AnnotationRecord {
            id: id.into(),
            text: String::new(),
            language: crate::Language::En,
            labels,
            original_label: None,
        };
        let recs = [rec("a", [Y, Y, Y]), rec("b", [Y, N, U]), rec("c", [N, N, U])];
        let d = resolve_dataset(&recs, Variant::Majority, VariantRule::Literal);
        assert_eq!(d.items, vec![("a".into(), true), ("c".into(), false)]);
        assert_eq!(d.discarded, vec!["b".to_string()]);
    }

    fn label() -> impl Strategy<Value = RaterLabel> {
        prop_oneof![Just(Y), Just(U), Just(N)]
    }

    proptest! {
        #[test]
        fn majority_symmetric(a in label(), b in label(), c in label()) {
            for p in permutations([a, b, c]) {
                prop_assert_eq!(resolve_majority(&p), resolve_majority(&[a, b, c]));
            }
        }

        #[test]
        fn permissive_monotone_in_yes(a in label(), b in label(), c in label(), i in 0usize..3) {
            let before = [a, b, c];
            let mut after = before;
            after[i] = Y;
            prop_assert!(!resolve_permissive(&before) || resolve_permissive(&after));
        }

        #[test]
        fn strict_monotone_in_no(a in label(), b in label(), c in label(), i in 0usize..3) {
            let before = [a, b, c];
            let mut after = before;
            after[i] = N;
            prop_assert!(resolve_strict(&before) || !resolve_strict(&after));
        }
    }
}
