//! Readers for the dataset layouts `convert` understands.

use clap::ValueEnum;
use ingtag_core::corpus::parse_corpus;
use ingtag_core::{Error, Label, LabelAliases, Phrase, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dialect {
    /// `TOKEN<TAB>POS<TAB>LABEL` per line, blank line between phrases.
    Canonical,
    /// `TOKEN LABEL` per line (tab or spaces), blank line between phrases.
    TokenLabel,
    /// One phrase per line as `token/LABEL` items separated by spaces.
    Inline,
}

fn label(aliases: &LabelAliases, raw: &str, line: usize) -> Result<Label> {
    aliases.resolve(raw).ok_or_else(|| Error::UnknownLabel {
        line,
        label: raw.to_string(),
    })
}

fn token_label(text: &str, aliases: &LabelAliases) -> Result<Vec<Phrase>> {
    let mut out = Vec::new();
    let mut words: Vec<&str> = Vec::new();
    let mut gold = Vec::new();
    let mut flush = |words: &mut Vec<&str>, gold: &mut Vec<Label>| -> Result<()> {
        if !words.is_empty() {
            out.push(Phrase::from_tokens(words, None, Some(std::mem::take(gold)))?);
            words.clear();
        }
        Ok(())
    };
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut words, &mut gold)?;
            continue;
        }
        let (token, raw) = line
            .trim()
            .rsplit_once(|c: char| c.is_whitespace())
            .ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected a token and a label".into(),
            })?;
        words.push(token.trim_end());
        gold.push(label(aliases, raw, line_no)?);
    }
    flush(&mut words, &mut gold)?;
    Ok(out)
}

fn inline(text: &str, aliases: &LabelAliases) -> Result<Vec<Phrase>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut words = Vec::new();
        let mut gold = Vec::new();
        for item in line.split_whitespace() {
            // Split on the last slash so fractions such as `1/2/QUANTITY` work.
            let (token, raw) = item.rsplit_once('/').filter(|(t, _)| !t.is_empty()).ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("item {item:?} is not token/LABEL"),
            })?;
            words.push(token);
            gold.push(label(aliases, raw, line_no)?);
        }
        out.push(Phrase::from_tokens(&words, None, Some(gold))?);
    }
    Ok(out)
}

/// Parse `text` in the given layout.
pub fn parse(text: &str, dialect: Dialect, aliases: &LabelAliases) -> Result<Vec<Phrase>> {
    match dialect {
        Dialect::Canonical => parse_corpus(text, aliases),
        Dialect::TokenLabel => token_label(text, aliases),
        Dialect::Inline => inline(text, aliases),
    }
}
