use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::TaggerModel;
use crate::corpus::{Label, Phrase};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenPrediction {
    pub surface: String,
    pub label: Label,
    pub confidence: f64,
}

/// A maximal run of consecutive tokens sharing one label; `start..end` are
/// token indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub label: Label,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Labelled tokens of one phrase grouped into attribute values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseResult {
    pub phrase: String,
    pub tokens: Vec<TokenPrediction>,
    /// All runs in order, `OTHERS` included.
    pub spans: Vec<Span>,
    /// Run texts per label, `OTHERS` excluded; labels with no runs are absent.
    pub attributes: BTreeMap<Label, Vec<String>>,
}

/// Group labelled tokens into runs and attribute lists.
pub fn structure(phrase: &Phrase, labels: &[Label], confidences: &[f64]) -> Result<ParseResult> {
    if labels.len() != phrase.len() || confidences.len() != phrase.len() {
        return Err(Error::Shape(format!(
            "{} tokens, {} labels, {} confidences",
            phrase.len(),
            labels.len(),
            confidences.len()
        )));
    }
    let tokens: Vec<TokenPrediction> = phrase
        .tokens
        .iter()
        .zip(labels)
        .zip(confidences)
        .map(|((t, &label), &confidence)| TokenPrediction {
            surface: t.surface.clone(),
            label,
            confidence,
        })
        .collect();

    let mut spans: Vec<Span> = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        match spans.last_mut() {
            Some(span) if span.label == tok.label => {
                span.text.push(' ');
                span.text.push_str(&tok.surface);
                span.end = i + 1;
            }
            _ => spans.push(Span {
                label: tok.label,
                text: tok.surface.clone(),
                start: i,
                end: i + 1,
            }),
        }
    }

    let mut attributes: BTreeMap<Label, Vec<String>> = BTreeMap::new();
    for span in spans.iter().filter(|s| s.label != Label::Others) {
        attributes.entry(span.label).or_default().push(span.text.clone());
    }
    Ok(ParseResult {
        phrase: phrase.raw.clone(),
        tokens,
        spans,
        attributes,
    })
}

impl ParseResult {
    /// The stable JSON record: `phrase`, `tokens` (surface, label,
    /// confidence) and `attributes` with all seven attribute keys present.
    pub fn to_json(&self) -> Value {
        let tokens: Vec<Value> = self
            .tokens
            .iter()
            .map(|t| {
                json!({
                    "surface": t.surface,
                    "label": t.label.as_str(),
                    "confidence": t.confidence,
                })
            })
            .collect();
        let mut attributes = Map::new();
        for label in Label::ALL.into_iter().filter(|l| *l != Label::Others) {
            let values = self.attributes.get(&label).cloned().unwrap_or_default();
            attributes.insert(label.json_key().to_string(), json!(values));
        }
        json!({
            "phrase": self.phrase,
            "tokens": tokens,
            "attributes": attributes,
        })
    }
}

impl TaggerModel {
    /// Classify every token and group the result.
    pub fn parse(&self, phrase: &Phrase) -> Result<ParseResult> {
        let (labels, confidences): (Vec<Label>, Vec<f64>) =
            self.classify_tokens(phrase)?.into_iter().unzip();
        structure(phrase, &labels, &confidences)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    #[test]
    fn garlic_clove_record() {
        let p = Phrase::from_raw("1 garlic clove, crushed");
        let r = structure(&p, &[Quantity, Name, Name, Others, State], &[0.9; 5]).unwrap();
        let expected: BTreeMap<Label, Vec<String>> = [
            (Quantity, vec!["1".to_string()]),
            (Name, vec!["garlic clove".to_string()]),
            (State, vec!["crushed".to_string()]),
        ]
        .into_iter()
        .collect();
        assert_eq!(r.attributes, expected);
        assert_eq!(r.spans.len(), 4);
        let json = r.to_json();
        assert_eq!(json["attributes"]["name"], json!(["garlic clove"]));
        assert_eq!(json["attributes"]["unit"], json!([]));
        assert_eq!(json["tokens"][0]["label"], "QUANTITY");
    }

    #[test]
    fn all_others_is_empty() {
        let p = Phrase::from_raw(", ( )");
        let r = structure(&p, &[Others; 3], &[1.0; 3]).unwrap();
        assert!(r.attributes.is_empty());
        assert_eq!(r.spans.len(), 1);
    }

    #[test]
    fn alternating_runs_keep_order() {
        let p = Phrase::from_raw("a b c d");
        let r = structure(&p, &[Name, Unit, Name, Unit], &[0.5; 4]).unwrap();
        assert_eq!(r.attributes[&Name], ["a", "c"]);
        assert_eq!(r.attributes[&Unit], ["b", "d"]);
        let joined: Vec<&str> = r.spans.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(joined, ["a", "b", "c", "d"]);
    }

    #[test]
    fn length_mismatch() {
        let p = Phrase::from_raw("a b");
        assert!(structure(&p, &[Name], &[1.0]).is_err());
    }
}
