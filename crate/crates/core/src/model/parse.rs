//! Parsers for the structured parts of model replies.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("missing tag <{0}>")]
    MissingTag(String),
    #[error("tag <{0}> is never closed")]
    UnclosedTag(String),
    #[error("ambiguous decision: {0:?}")]
    AmbiguousDecision(String),
    #[error("no JSON object in response")]
    NoJson,
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
}

/// Extracts `<TAG>content</TAG>` for every required tag. Content is trimmed,
/// text outside tags is ignored and the first occurrence of a tag wins.
pub fn parse_tagged(
    response: &str,
    required_tags: &[&str],
) -> Result<BTreeMap<String, String>, ParseError> {
    let mut out = BTreeMap::new();
    for tag in required_tags {
        let open = format!("<{tag}>");
        let close = format!("</{tag}>");
        let start = response
            .find(&open)
            .ok_or_else(|| ParseError::MissingTag(tag.to_string()))?
            + open.len();
        let len = response[start..]
            .find(&close)
            .ok_or_else(|| ParseError::UnclosedTag(tag.to_string()))?;
        out.insert(tag.to_string(), response[start..start + len].trim().to_string());
    }
    Ok(out)
}

/// Emits `<K>v</K>` blocks in the given order, one per line.
pub fn serialize_tagged<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    pairs
        .into_iter()
        .map(|(k, v)| format!("<{k}> {v} </{k}>"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn normalize_decision(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .flat_map(char::to_lowercase)
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Maps a decision string onto the positive/negative label pair.
///
/// Case, punctuation and surrounding whitespace are ignored; anything else
/// must equal one of the two labels exactly.
pub fn parse_decision(text: &str, positive: &str, negative: &str) -> Result<bool, ParseError> {
    let got = normalize_decision(text);
    let is_pos = got == normalize_decision(positive);
    let is_neg = got == normalize_decision(negative);
    match (is_pos, is_neg) {
        (true, false) => Ok(true),
        (false, true) => Ok(false),
        _ => Err(ParseError::AmbiguousDecision(text.trim().to_string())),
    }
}

/// Finds the outermost JSON object in a reply, tolerating code fences and
/// surrounding prose, and lowercases its top-level keys.
pub fn extract_json_object(response: &str) -> Result<serde_json::Map<String, Value>, ParseError> {
    let start = response.find('{').ok_or(ParseError::NoJson)?;
    let end = response.rfind('}').ok_or(ParseError::NoJson)?;
    if end < start {
        return Err(ParseError::NoJson);
    }
    match serde_json::from_str::<Value>(&response[start..=end]) {
        Ok(Value::Object(map)) => Ok(map.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect()),
        Ok(_) => Err(ParseError::NoJson),
        Err(e) => Err(ParseError::MalformedJson(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::collection::btree_map;
    use proptest::prelude::*;

    #[test]
    fn decision_and_explanation() {
        let m = parse_tagged(
            "<DECISION> Hate speech </DECISION><EXPLANATION> x </EXPLANATION>",
            &["DECISION", "EXPLANATION"],
        )
        .unwrap();
        assert_eq!(m["DECISION"], "Hate speech");
        assert_eq!(m["EXPLANATION"], "x");
    }

    #[test]
    fn order_insensitive_and_tolerates_prose() {
        let m = parse_tagged(
            "Sure.\n<EXPLANATION>x</EXPLANATION>\nthen <DECISION>Not hate speech</DECISION> bye",
            &["DECISION", "EXPLANATION"],
        )
        .unwrap();
        assert_eq!(m["DECISION"], "Not hate speech");
        assert_eq!(m["EXPLANATION"], "x");
    }

    #[test]
    fn first_occurrence_wins() {
        let m = parse_tagged("<A>one</A><A>two</A>", &["A"]).unwrap();
        assert_eq!(m["A"], "one");
    }

    #[test]
    fn missing_and_unclosed() {
        let r = "<STEP_1>a</STEP_1><STEP_2>b</STEP_2><STEP_3>Hateful</STEP_3><STEP_4>because";
        assert_eq!(
            parse_tagged(r, &["STEP_1", "STEP_2", "STEP_3", "STEP_4"]).unwrap_err(),
            ParseError::UnclosedTag("STEP_4".into())
        );
        assert_eq!(
            parse_tagged("<DECISION>x</DECISION>", &["DECISION", "EXPLANATION"]).unwrap_err(),
            ParseError::MissingTag("EXPLANATION".into())
        );
    }

    #[test]
    fn decisions() {
        assert_eq!(parse_decision("Hateful", "Hateful", "Non hateful"), Ok(true));
        assert_eq!(parse_decision("non hateful.", "Hateful", "Non hateful"), Ok(false));
        assert_eq!(parse_decision("  \"NON-HATEFUL\" ", "Hateful", "Non hateful"), Ok(false));
        assert_eq!(parse_decision("**Hateful**", "Hateful", "Non hateful"), Ok(true));
        assert!(matches!(
            parse_decision("maybe hateful?", "Hateful", "Non hateful"),
            Err(ParseError::AmbiguousDecision(_))
        ));
        assert_eq!(parse_decision("HATE SPEECH", "Hate speech", "Not hate speech"), Ok(true));
        assert_eq!(parse_decision("not hate speech", "Hate speech", "Not hate speech"), Ok(false));
        assert!(parse_decision("x", "x", "X").is_err());
    }

    #[test]
    fn json_extraction() {
        let m = extract_json_object("```json\n{\"Reasoning\": \"r\", \"hate_speech\": false}\n```").unwrap();
        assert_eq!(m["reasoning"], "r");
        assert_eq!(m["hate_speech"], false);
        assert_eq!(extract_json_object("no braces"), Err(ParseError::NoJson));
        assert!(matches!(extract_json_object("{bad}"), Err(ParseError::MalformedJson(_))));
    }

    proptest! {
        #[test]
        fn tagged_round_trip(
            map in btree_map("[A-Z][A-Z_0-9]{0,7}", "[a-zA-Z0-9][a-zA-Z0-9 .,]{0,30}[a-zA-Z0-9.]|[a-z]?", 1..6),
            reverse in any::<bool>(),
        ) {
            let mut pairs: Vec<(&str, &str)> = map.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            if reverse {
                pairs.reverse();
            }
            let keys: Vec<&str> = map.keys().map(String::as_str).collect();
            let parsed = parse_tagged(&serialize_tagged(pairs), &keys).unwrap();
            prop_assert_eq!(parsed, map);
        }
    }
}
