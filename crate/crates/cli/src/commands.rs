use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ingtag_core::baseline::{train_crf, CrfModel};
use ingtag_core::corpus::{load_corpora, split_train_dev, write_corpus};
use ingtag_core::eval::{grid_evaluate, Tagger};
use ingtag_core::features::load_embeddings_filtered;
use ingtag_core::model::Trainer;
use ingtag_core::{evaluate_tagger, Error, Hyper, LabelAliases, Phrase, TaggerModel};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{BaselineArg, Command, ConvertArgs, EvalArgs, ParseArgs, TrainArgs};
use crate::{convert, Cli, CliError};

type CmdResult = Result<(), CliError>;

pub fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let root = cli.data_dir.as_deref();
    match &cli.command {
        Command::Convert(a) => cmd_convert(a, root, out),
        Command::Train(a) => cmd_train(a, root, out, err),
        Command::Eval(a) => cmd_eval(a, root, out),
        Command::Parse(a) => cmd_parse(a, root, out),
    }
}

/// Relative input paths are taken from the data directory when one is set.
fn resolve(root: Option<&Path>, path: &Path) -> PathBuf {
    match root {
        Some(r) if path.is_relative() => r.join(path),
        _ => path.to_path_buf(),
    }
}

fn resolve_all(root: Option<&Path>, paths: &[PathBuf]) -> Vec<PathBuf> {
    paths.iter().map(|p| resolve(root, p)).collect()
}

fn aliases_with(mut base: LabelAliases, specs: &[String]) -> Result<LabelAliases, CliError> {
    for spec in specs {
        base.insert_spec(spec).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(base)
}

fn cmd_convert(a: &ConvertArgs, root: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let aliases = aliases_with(LabelAliases::default(), &a.label_alias)?;
    let input = resolve(root, &a.input);
    let text = fs::read_to_string(&input).map_err(|e| CliError::Data(Error::Io { path: input, source: e }))?;
    let phrases = convert::parse(&text, a.dialect, &aliases)?;
    write_corpus(&a.output, &phrases)?;
    let tokens: usize = phrases.iter().map(Phrase::len).sum();
    writeln!(out, "{} phrases, {} tokens written to {}", phrases.len(), tokens, a.output.display())?;
    Ok(())
}

/// Everything that determines a training run, echoed as the first log
/// record. Output locations are left out so runs writing to different
/// places produce identical logs.
#[derive(Serialize)]
struct TrainConfig<'a> {
    data: Vec<String>,
    dev: Vec<String>,
    dev_fraction: f64,
    split_seed: u64,
    test: Vec<String>,
    embeddings: Option<String>,
    baseline: Option<&'static str>,
    crf_epochs: usize,
    label_aliases: &'a [String],
    hyper: &'a Hyper,
    train_phrases: usize,
    dev_phrases: usize,
    test_phrases: usize,
}

fn display(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

/// Append-only JSON-lines log.
struct Log {
    file: File,
}

impl Log {
    fn open(path: &Path) -> Result<Self, CliError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| CliError::Data(Error::Io { path: path.to_path_buf(), source: e }))?;
        Ok(Log { file })
    }

    fn write(&mut self, record: &Value) -> io::Result<()> {
        let mut line = serde_json::to_string(record).expect("log record serializes");
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()
    }
}

fn default_log_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.as_os_str().to_owned();
    name.push(".log.jsonl");
    PathBuf::from(name)
}

fn corpus_words(sets: &[&[Phrase]]) -> BTreeSet<String> {
    sets.iter()
        .flat_map(|s| s.iter())
        .flat_map(|p| p.tokens.iter().map(|t| t.lower.clone()))
        .collect()
}

fn cmd_train(a: &TrainArgs, root: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let aliases = aliases_with(LabelAliases::default(), &a.label_alias)?;
    let hyper = a.hyper.hyper();
    hyper.validate()?;
    if !(0.0..1.0).contains(&a.dev_fraction) {
        return Err(CliError::Usage(format!("--dev-fraction {} not in [0, 1)", a.dev_fraction)));
    }
    let data = resolve_all(root, &a.data);
    let all = load_corpora(&data, &aliases)?;
    let (train, dev) = if !a.dev.is_empty() {
        (all, load_corpora(&resolve_all(root, &a.dev), &aliases)?)
    } else if a.dev_fraction > 0.0 {
        split_train_dev(&all, a.dev_fraction, a.split_seed)?
    } else {
        (all, Vec::new())
    };
    let test = if a.test.is_empty() {
        Vec::new()
    } else {
        load_corpora(&resolve_all(root, &a.test), &aliases)?
    };
    ingtag_core::corpus::require_labels(&train)?;

    let config = TrainConfig {
        data: display(&a.data),
        dev: display(&a.dev),
        dev_fraction: a.dev_fraction,
        split_seed: a.split_seed,
        test: display(&a.test),
        embeddings: a.embeddings.as_ref().map(|p| p.display().to_string()),
        baseline: a.baseline.map(|_| "crf"),
        crf_epochs: a.crf_epochs,
        label_aliases: &a.label_alias,
        hyper: &hyper,
        train_phrases: train.len(),
        dev_phrases: dev.len(),
        test_phrases: test.len(),
    };
    let log_path = a.log.clone().unwrap_or_else(|| default_log_path(&a.checkpoint));
    let mut log = Log::open(&log_path)?;
    log.write(&json!({ "event": "config", "config": config }))?;

    let started = Instant::now();
    let summary = match a.baseline {
        Some(BaselineArg::Crf) => {
            let model = train_crf(&train, a.crf_epochs, hyper.seed)?.with_aliases(aliases);
            let dev_f1 = score(&model, &dev)?;
            let test_f1 = score(&model, &test)?;
            model.save(&a.checkpoint).map_err(CliError::Checkpoint)?;
            json!({
                "event": "done",
                "baseline": "crf",
                "features": model.num_features(),
                "dev_micro_f1": dev_f1,
                "test_micro_f1": test_f1,
            })
        }
        None => {
            let embeddings = match &a.embeddings {
                Some(path) => {
                    let words = corpus_words(&[&train, &dev, &test]);
                    let keep = |w: &str| words.contains(w);
                    Some(load_embeddings_filtered(resolve(root, path), hyper.dim, hyper.seed, Some(&keep))?)
                }
                None => None,
            };
            let mut model = TaggerModel::init(hyper.clone(), &train, embeddings.as_ref())?.with_aliases(aliases);
            if let Some(table) = &embeddings {
                model.extend_pretrained(table)?;
            }
            let mut trainer = Trainer::new(&model.hyper);
            let mut log_error = None;
            let train_log = trainer.fit(&mut model, &train, &dev, |rec| {
                let mut record = json!({ "event": "epoch" });
                if let (Value::Object(m), Ok(Value::Object(r))) = (&mut record, serde_json::to_value(rec)) {
                    m.extend(r);
                    if a.wall_time {
                        m.insert("wall_secs".into(), json!(started.elapsed().as_secs_f64()));
                    }
                }
                if let Err(e) = log.write(&record) {
                    log_error.get_or_insert(e);
                }
                let dev = rec.dev_micro_f1.map_or_else(String::new, |f| format!(", dev micro-F1 {f:.2}"));
                let _ = writeln!(
                    err,
                    "epoch {}: loss {:.4}{} [{:.1}s]",
                    rec.epoch,
                    rec.loss,
                    dev,
                    started.elapsed().as_secs_f64()
                );
            })?;
            if let Some(e) = log_error {
                return Err(e.into());
            }
            let test_report = if test.is_empty() {
                None
            } else {
                Some(evaluate_tagger(&model, &test)?)
            };
            model.save(&a.checkpoint).map_err(CliError::Checkpoint)?;
            json!({
                "event": "done",
                "epochs": train_log.epochs.len(),
                "steps": trainer.steps(),
                "best_epoch": train_log.best_epoch,
                "best_dev_micro_f1": train_log.best_dev_micro_f1,
                "stopped_early": train_log.stopped_early,
                "test_micro_f1": test_report.as_ref().map(|r| r.micro.f1),
                "test": test_report.as_ref().map(|r| r.to_json()),
            })
        }
    };
    log.write(&summary)?;
    writeln!(out, "checkpoint written to {}", a.checkpoint.display())?;
    writeln!(out, "log appended to {}", log_path.display())?;
    for key in ["best_dev_micro_f1", "dev_micro_f1", "test_micro_f1"] {
        if let Some(v) = summary.get(key).and_then(Value::as_f64) {
            writeln!(out, "{key}: {v:.2}")?;
        }
    }
    Ok(())
}

fn score<T: Tagger + ?Sized>(tagger: &T, phrases: &[Phrase]) -> Result<Option<f64>, CliError> {
    if phrases.is_empty() {
        return Ok(None);
    }
    Ok(Some(evaluate_tagger(tagger, phrases)?.micro.f1))
}

fn load_tagger(
    path: &Path,
    baseline: bool,
    embeddings: Option<&Path>,
) -> Result<(Box<dyn Tagger>, LabelAliases), CliError> {
    if baseline {
        let model = CrfModel::load(path).map_err(CliError::Checkpoint)?;
        let aliases = model.aliases().clone();
        return Ok((Box::new(model), aliases));
    }
    let model = load_model(path, embeddings)?;
    let aliases = model.aliases.clone();
    Ok((Box::new(model), aliases))
}

fn load_model(path: &Path, embeddings: Option<&Path>) -> Result<TaggerModel, CliError> {
    let mut model = TaggerModel::load(path).map_err(CliError::Checkpoint)?;
    if let Some(e) = embeddings {
        let table = ingtag_core::features::load_embeddings(e, model.hyper.dim)?;
        model.extend_pretrained(&table)?;
    }
    Ok(model)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_eval(a: &EvalArgs, root: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let embeddings = a.embeddings.as_ref().map(|p| resolve(root, p));
    if a.grid {
        if a.checkpoint.len() != 3 || a.test.len() != 3 {
            return Err(CliError::Data(Error::MissingDataset(format!(
                "--grid needs three checkpoints and three test sets, got {} and {}",
                a.checkpoint.len(),
                a.test.len()
            ))));
        }
        let mut taggers = Vec::new();
        let mut aliases = None;
        for path in &a.checkpoint {
            let (t, al) = load_tagger(path, a.baseline, embeddings.as_deref())?;
            aliases.get_or_insert(al);
            taggers.push((stem(path), t));
        }
        let aliases = aliases_with(aliases.unwrap_or_default(), &a.label_alias)?;
        let mut tests = Vec::new();
        for path in &a.test {
            tests.push((stem(path), load_corpora(&[resolve(root, path)], &aliases)?));
        }
        let models: Vec<(&str, &dyn Tagger)> = taggers.iter().map(|(n, t)| (n.as_str(), t.as_ref())).collect();
        let sets: Vec<(&str, &[Phrase])> = tests.iter().map(|(n, p)| (n.as_str(), p.as_slice())).collect();
        let grid = grid_evaluate(&models, &sets)?;
        if a.json {
            writeln!(out, "{}", serde_json::to_string_pretty(&grid).expect("grid serializes"))?;
        } else {
            write!(out, "{grid}")?;
        }
        return Ok(());
    }
    if a.checkpoint.len() != 1 {
        return Err(CliError::Usage("give exactly one --checkpoint without --grid".into()));
    }
    let (tagger, aliases) = load_tagger(&a.checkpoint[0], a.baseline, embeddings.as_deref())?;
    let aliases = aliases_with(aliases, &a.label_alias)?;
    let test = load_corpora(&resolve_all(root, &a.test), &aliases)?;
    let report = evaluate_tagger(tagger.as_ref(), &test)?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report.to_json()).expect("report serializes"))?;
    } else {
        write!(out, "{report}")?;
    }
    Ok(())
}

fn cmd_parse(a: &ParseArgs, root: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let embeddings = a.embeddings.as_ref().map(|p| resolve(root, p));
    let model = load_model(&a.checkpoint, embeddings.as_deref())?;
    let lines: Vec<String> = match (&a.phrase, &a.file) {
        (Some(p), _) => vec![p.clone()],
        (None, Some(path)) => {
            let path = resolve(root, path);
            let file = File::open(&path).map_err(|e| CliError::Data(Error::Io { path: path.clone(), source: e }))?;
            read_lines(BufReader::new(file), &path)?
        }
        (None, None) => read_lines(io::stdin().lock(), Path::new("<stdin>"))?,
    };
    for (i, line) in lines.iter().enumerate() {
        let result = model.parse(&Phrase::from_raw(line))?;
        if a.json {
            writeln!(out, "{}", result.to_json())?;
            continue;
        }
        if i > 0 {
            writeln!(out)?;
        }
        writeln!(out, "{}", result.phrase)?;
        for t in &result.tokens {
            writeln!(out, "  {:<16} {:<12} {:.4}", t.surface, t.label.as_str(), t.confidence)?;
        }
        for (label, values) in &result.attributes {
            writeln!(out, "  {}: {}", label.json_key(), values.join(" | "))?;
        }
    }
    Ok(())
}

/// Non-blank lines, in order.
fn read_lines<R: BufRead>(reader: R, path: &Path) -> Result<Vec<String>, CliError> {
    let mut lines = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| CliError::Data(Error::Io { path: path.to_path_buf(), source: e }))?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    Ok(lines)
}
