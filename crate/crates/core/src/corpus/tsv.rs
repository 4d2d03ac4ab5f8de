//! CoNLL-style corpus files: `SURFACE<TAB>POS<TAB>LABEL` per line, a blank
//! line after each phrase, `#` comment lines. A POS of `_` is computed by the
//! built-in tagger; a label of `_` marks the token as unlabeled.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Label, LabelAliases, Phrase};
use crate::error::{Error, Result};
use crate::features::PosTag;

const PLACEHOLDER: &str = "_";

struct Pending<'a> {
    surfaces: Vec<&'a str>,
    pos: Vec<Option<PosTag>>,
    labels: Vec<Option<Label>>,
    first_line: usize,
}

impl<'a> Pending<'a> {
    fn new() -> Self {
        Pending {
            surfaces: Vec::new(),
            pos: Vec::new(),
            labels: Vec::new(),
            first_line: 0,
        }
    }

    fn finish(&mut self, out: &mut Vec<Phrase>) -> Result<()> {
        if self.surfaces.is_empty() {
            return Ok(());
        }
        let labelled = self.labels.iter().filter(|l| l.is_some()).count();
        let gold = match labelled {
            0 => None,
            n if n == self.labels.len() => Some(self.labels.iter().map(|l| l.unwrap()).collect()),
            _ => {
                return Err(Error::Parse {
                    line: self.first_line,
                    message: "phrase mixes labelled and unlabelled tokens".into(),
                })
            }
        };
        let computed = crate::features::pos_tag_words(&self.surfaces);
        let pos = self
            .pos
            .drain(..)
            .zip(computed)
            .map(|(given, computed)| given.unwrap_or(computed))
            .collect();
        out.push(Phrase::from_tokens(&self.surfaces, Some(pos), gold)?);
        self.surfaces.clear();
        self.labels.clear();
        Ok(())
    }
}

/// Parse corpus text. Line numbers in errors are 1-based.
pub fn parse_corpus(text: &str, aliases: &LabelAliases) -> Result<Vec<Phrase>> {
    let mut phrases = Vec::new();
    let mut pending = Pending::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            pending.finish(&mut phrases)?;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if line.starts_with('#') && fields.len() != 3 {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated columns, found {}", fields.len()),
            });
        }
        let (surface, pos, label) = (fields[0].trim(), fields[1].trim(), fields[2].trim());
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("invalid token surface {:?}", fields[0]),
            });
        }
        if pos.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty POS column (use `_` to compute it)".into(),
            });
        }
        let label = match label {
            PLACEHOLDER => None,
            raw => Some(aliases.resolve(raw).ok_or_else(|| Error::UnknownLabel {
                line: line_no,
                label: raw.to_string(),
            })?),
        };
        if pending.surfaces.is_empty() {
            pending.first_line = line_no;
        }
        pending.surfaces.push(surface);
        pending.pos.push((pos != PLACEHOLDER).then(|| PosTag::new(pos)));
        pending.labels.push(label);
    }
    pending.finish(&mut phrases)?;
    Ok(phrases)
}

pub fn load_corpus(path: impl AsRef<Path>, aliases: &LabelAliases) -> Result<Vec<Phrase>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, aliases)
}

/// Load several corpus files and concatenate them in order.
pub fn load_corpora<P: AsRef<Path>>(paths: &[P], aliases: &LabelAliases) -> Result<Vec<Phrase>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(load_corpus(p, aliases)?);
    }
    Ok(all)
}

/// Serialize phrases in the canonical TSV format.
pub fn write_corpus_to<W: Write>(mut out: W, phrases: &[Phrase]) -> std::io::Result<()> {
    for phrase in phrases {
        for (i, token) in phrase.tokens.iter().enumerate() {
            let label = phrase
                .gold
                .as_ref()
                .map_or(PLACEHOLDER, |g| g[i].as_str());
            writeln!(out, "{}\t{}\t{}", token.surface, token.pos, label)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_corpus(path: impl AsRef<Path>, phrases: &[Phrase]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_corpus_to(&mut w, phrases).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# two phrases\n\
1\tCD\tQUANTITY\n\
garlic\t_\tNAME\n\
clove\tNN\tUNIT\n\
,\t,\tOTHERS\n\
crushed\t_\tSTATE\n\
\n\
\n\
salt\tNN\tN\n";

    #[test]
    fn parses_blocks_and_aliases() {
        let phrases = parse_corpus(SAMPLE, &LabelAliases::default()).unwrap();
        assert_eq!(phrases.len(), 2);
        assert_eq!(phrases[0].len(), 5);
        assert_eq!(phrases[0].raw, "1 garlic clove , crushed");
        assert_eq!(phrases[0].tokens[4].pos.as_str(), "VBN");
        assert_eq!(phrases[1].gold.as_deref(), Some(&[Label::Name][..]));
    }

    #[test]
    fn empty_input() {
        assert!(parse_corpus("", &LabelAliases::default()).unwrap().is_empty());
        assert!(parse_corpus("\n\n# c\n", &LabelAliases::default()).unwrap().is_empty());
    }

    #[test]
    fn wrong_column_count_reports_line() {
        let err = parse_corpus("a\tNN\tNAME\nb\tNN\n", &LabelAliases::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_label_is_named() {
        let err = parse_corpus("a\tNN\tBRAND\n", &LabelAliases::default()).unwrap_err();
        match err {
            Error::UnknownLabel { line, label } => {
                assert_eq!(line, 1);
                assert_eq!(label, "BRAND");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unlabeled_and_mixed() {
        let p = parse_corpus("a\t_\t_\nb\t_\t_\n", &LabelAliases::default()).unwrap();
        assert!(p[0].gold.is_none());
        assert!(parse_corpus("a\t_\tNAME\nb\t_\t_\n", &LabelAliases::default()).is_err());
    }

    #[test]
    fn round_trip() {
        let phrases = parse_corpus(SAMPLE, &LabelAliases::default()).unwrap();
        let mut buf = Vec::new();
        write_corpus_to(&mut buf, &phrases).unwrap();
        let again = parse_corpus(std::str::from_utf8(&buf).unwrap(), &LabelAliases::empty()).unwrap();
        assert_eq!(again, phrases);
    }
}
