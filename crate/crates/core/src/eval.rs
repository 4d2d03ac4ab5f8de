//! Token-level precision, recall and F1 per attribute class, plus the
//! train-set x test-set micro-F1 grid.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Phrase, NUM_LABELS};
use crate::error::{Error, Result};

/// Anything that assigns one label per token.
pub trait Tagger: Sync {
    fn tag(&self, phrase: &Phrase) -> Result<Vec<Label>>;
}

impl<T: Tagger + ?Sized> Tagger for &T {
    fn tag(&self, phrase: &Phrase) -> Result<Vec<Label>> {
        (**self).tag(phrase)
    }
}

/// Precision/recall/F1 in percent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl Scores {
    fn from_counts(tp: u64, predicted: u64, gold: u64) -> Self {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Scores {
            recall: 100.0 * recall,
            precision: 100.0 * precision,
            f1: 100.0 * f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: Label,
    #[serde(flatten)]
    pub scores: Scores,
    /// Gold tokens of this class.
    pub support: u64,
    pub predicted: u64,
}

/// Evaluation of predicted labels against gold labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// One entry per class, in [`Label::ALL`] order.
    pub per_label: Vec<LabelMetrics>,
    pub micro: Scores,
    /// Unweighted mean over classes that occur in gold or predictions.
    pub macro_avg: Scores,
    /// `confusion[gold][predicted]` token counts.
    pub confusion: [[u64; NUM_LABELS]; NUM_LABELS],
    pub tokens: u64,
}

impl MetricReport {
    pub fn from_confusion(confusion: [[u64; NUM_LABELS]; NUM_LABELS]) -> Self {
        let mut per_label = Vec::with_capacity(NUM_LABELS);
        let (mut tp_all, mut tokens) = (0, 0);
        for label in Label::ALL {
            let i = label.index();
            let tp = confusion[i][i];
            let support: u64 = confusion[i].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[i]).sum();
            tp_all += tp;
            tokens += support;
            per_label.push(LabelMetrics {
                label,
                scores: Scores::from_counts(tp, predicted, support),
                support,
                predicted,
            });
        }
        let present: Vec<&LabelMetrics> = per_label
            .iter()
            .filter(|m| m.support > 0 || m.predicted > 0)
            .collect();
        let mean = |f: fn(&Scores) -> f64| {
            if present.is_empty() {
                0.0
            } else {
                present.iter().map(|m| f(&m.scores)).sum::<f64>() / present.len() as f64
            }
        };
        let macro_avg = Scores {
            recall: mean(|s| s.recall),
            precision: mean(|s| s.precision),
            f1: mean(|s| s.f1),
        };
        MetricReport {
            micro: Scores::from_counts(tp_all, tokens, tokens),
            macro_avg,
            per_label,
            confusion,
            tokens,
        }
    }

    pub fn label(&self, label: Label) -> &LabelMetrics {
        &self.per_label[label.index()]
    }

    /// Machine-readable form.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

impl fmt::Display for MetricReport {
    /// Aligned table: Recall, Precision, F1 Score per class, then micro and
    /// macro summaries. Values are rounded to two decimals here only.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:>8} {:>10} {:>9} {:>8}",
            "Entity", "Recall", "Precision", "F1 Score", "Support"
        )?;
        for m in &self.per_label {
            writeln!(
                f,
                "{:<12} {:>8.2} {:>10.2} {:>9.2} {:>8}",
                m.label.title(),
                m.scores.recall,
                m.scores.precision,
                m.scores.f1,
                m.support
            )?;
        }
        for (name, s) in [("Micro", &self.micro), ("Macro", &self.macro_avg)] {
            writeln!(
                f,
                "{:<12} {:>8.2} {:>10.2} {:>9.2} {:>8}",
                name, s.recall, s.precision, s.f1, self.tokens
            )?;
        }
        Ok(())
    }
}

/// Score predictions (one label sequence per phrase) against gold labels.
pub fn evaluate(gold: &[Phrase], pred: &[Vec<Label>]) -> Result<MetricReport> {
    if gold.len() != pred.len() {
        return Err(Error::Alignment {
            index: gold.len().min(pred.len()),
            gold: gold.len(),
            predicted: pred.len(),
        });
    }
    let mut confusion = [[0u64; NUM_LABELS]; NUM_LABELS];
    for (index, (phrase, labels)) in gold.iter().zip(pred).enumerate() {
        let g = phrase.gold.as_ref().ok_or(Error::Unlabeled { index })?;
        if g.len() != labels.len() {
            return Err(Error::Alignment {
                index,
                gold: g.len(),
                predicted: labels.len(),
            });
        }
        for (a, b) in g.iter().zip(labels) {
            confusion[a.index()][b.index()] += 1;
        }
    }
    Ok(MetricReport::from_confusion(confusion))
}

/// Tag `phrases` in parallel and score the result.
pub fn evaluate_tagger<T: Tagger + ?Sized>(tagger: &T, phrases: &[Phrase]) -> Result<MetricReport> {
    crate::corpus::require_labels(phrases)?;
    let pred = phrases
        .par_iter()
        .map(|p| tagger.tag(p))
        .collect::<Result<Vec<_>>>()?;
    evaluate(phrases, &pred)
}

/// Micro-F1 for every (training set, test set) pair; rows are test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub train_names: Vec<String>,
    pub test_names: Vec<String>,
    /// `f1[test][train]`, percent.
    pub f1: Vec<Vec<f64>>,
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<12}", "Test \\ Train")?;
        for name in &self.train_names {
            write!(f, " {name:>11}")?;
        }
        writeln!(f)?;
        for (name, row) in self.test_names.iter().zip(&self.f1) {
            write!(f, "{name:<12}")?;
            for v in row {
                write!(f, " {v:>11.2}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Evaluate three models (trained on the two sources and their union)
/// against the three matching test sets.
pub fn grid_evaluate(models: &[(&str, &dyn Tagger)], tests: &[(&str, &[Phrase])]) -> Result<Grid> {
    if models.len() != 3 {
        return Err(Error::MissingDataset(format!(
            "the grid needs 3 trained models, got {}",
            models.len()
        )));
    }
    if tests.len() != 3 {
        return Err(Error::MissingDataset(format!(
            "the grid needs 3 test sets, got {}",
            tests.len()
        )));
    }
    let mut f1 = Vec::with_capacity(3);
    for (_, test) in tests {
        let mut row = Vec::with_capacity(3);
        for (_, model) in models {
            row.push(evaluate_tagger(*model, test)?.micro.f1);
        }
        f1.push(row);
    }
    Ok(Grid {
        train_names: models.iter().map(|(n, _)| n.to_string()).collect(),
        test_names: tests.iter().map(|(n, _)| n.to_string()).collect(),
        f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    fn phrase(gold: &[Label]) -> Phrase {
        let words: Vec<String> = (0..gold.len()).map(|i| format!("w{i}")).collect();
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        Phrase::from_tokens(&refs, None, Some(gold.to_vec())).unwrap()
    }

    #[test]
    fn perfect_predictions() {
        let gold = [phrase(&[Name, Unit, Quantity]), phrase(&[Others, Size])];
        let pred: Vec<Vec<Label>> = gold.iter().map(|p| p.gold.clone().unwrap()).collect();
        let r = evaluate(&gold, &pred).unwrap();
        for m in r.per_label.iter().filter(|m| m.support > 0) {
            assert_eq!(m.scores.f1, 100.0);
        }
        assert_eq!(r.micro.f1, 100.0);
    }

    #[test]
    fn disjoint_predictions() {
        let gold = [phrase(&[Name, Unit])];
        let r = evaluate(&gold, &[vec![State, Size]]).unwrap();
        assert!(r.per_label.iter().all(|m| m.scores.f1 == 0.0));
    }

    #[test]
    fn four_token_fixture() {
        let gold = [phrase(&[Name, Name, Unit, Others])];
        let r = evaluate(&gold, &[vec![Name, Unit, Unit, Others]]).unwrap();
        let name = r.label(Name).scores;
        assert_eq!((name.precision, name.recall), (100.0, 50.0));
        assert!((name.f1 - 200.0 / 3.0).abs() < 1e-9);
        let unit = r.label(Unit).scores;
        assert_eq!((unit.precision, unit.recall), (50.0, 100.0));
        assert!((unit.f1 - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(format!("{:.2}", name.f1), "66.67");
        assert_eq!(r.micro.precision, r.micro.recall);
        assert_eq!(r.micro.f1, 75.0);
        assert_eq!(r.confusion.iter().flatten().sum::<u64>(), 4);
    }

    #[test]
    fn alignment_errors_name_phrase() {
        let gold = [phrase(&[Name]), phrase(&[Name, Unit])];
        match evaluate(&gold, &[vec![Name], vec![Name]]).unwrap_err() {
            Error::Alignment { index, .. } => assert_eq!(index, 1),
            e => panic!("{e}"),
        }
        assert!(evaluate(&gold, &[vec![Name]]).is_err());
    }

    #[test]
    fn table_has_eight_rows_in_order() {
        let gold = [phrase(&[Name])];
        let text = evaluate(&gold, &[vec![Name]]).unwrap().to_string();
        let rows: Vec<&str> = text.lines().skip(1).take(8).map(|l| l.split_whitespace().next().unwrap()).collect();
        assert_eq!(rows, ["Name", "State", "Unit", "Quantity", "Size", "Temperature", "Dry/Fresh", "Others"]);
    }

    struct Echo;
    impl Tagger for Echo {
        fn tag(&self, p: &Phrase) -> Result<Vec<Label>> {
            Ok(p.gold.clone().unwrap())
        }
    }

    #[test]
    fn grid_of_memorizers_has_perfect_diagonal() {
        let sets: Vec<Vec<Phrase>> = vec![vec![phrase(&[Name])], vec![phrase(&[Unit, Size])], vec![phrase(&[Quantity])]];
        let echo = Echo;
        let models: Vec<(&str, &dyn Tagger)> = vec![("a", &echo), ("f", &echo), ("both", &echo)];
        let tests: Vec<(&str, &[Phrase])> = vec![("a", &sets[0]), ("f", &sets[1]), ("both", &sets[2])];
        let grid = grid_evaluate(&models, &tests).unwrap();
        for i in 0..3 {
            assert_eq!(grid.f1[i][i], 100.0);
            assert_eq!(grid.f1[i][i], evaluate_tagger(&echo, &sets[i]).unwrap().micro.f1);
        }
        assert!(grid_evaluate(&models[..2], &tests).is_err());
    }
}
