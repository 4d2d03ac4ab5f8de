#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ingtag_core::corpus::write_corpus;
use ingtag_core::features::{oov_init, EmbeddingTable};
use ingtag_core::synth::toy_corpus;

pub struct Output {
    pub code: i32,
    pub out: String,
    pub err: String,
}

pub fn run(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = ingtag_cli::run(std::iter::once("ingtag").chain(args.iter().copied()), &mut out, &mut err);
    Output {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub const DIM: usize = 16;

/// Toy corpus plus word vectors in which every word sits near a centre
/// shared by its class.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub train: PathBuf,
    pub embeddings: PathBuf,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let train = dir.path().join("toy.tsv");
        let phrases = toy_corpus();
        write_corpus(&train, &phrases).unwrap();
        let mut table = EmbeddingTable::new(DIM, 0);
        for p in &phrases {
            for (t, label) in p.tokens.iter().zip(p.gold.as_ref().unwrap()) {
                if table.is_pretrained(&t.lower) {
                    continue;
                }
                let centre = oov_init(1, label.as_str(), DIM);
                let noise = oov_init(2, &t.lower, DIM);
                let v = centre.iter().zip(noise).map(|(c, n)| 20.0 * c + n).collect();
                table.insert_pretrained(&t.lower, v).unwrap();
            }
        }
        let embeddings = dir.path().join("vectors.txt");
        table.write_text(std::fs::File::create(&embeddings).unwrap()).unwrap();
        Fixture { dir, train, embeddings }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Train a small tagger on the toy corpus; returns the checkpoint path.
    pub fn train(&self, name: &str, extra: &[&str]) -> PathBuf {
        let ckpt = self.path(name);
        let mut args = vec![
            "train",
            "--data",
            s(&self.train),
            "--embeddings",
            s(&self.embeddings),
            "--checkpoint",
            s(&ckpt),
            "--dim",
            "16",
            "--n-layers",
            "1",
            "--learning-rate",
            "0.01",
            "--dropout",
            "0",
            "--max-epochs",
            "30",
            "--dev-fraction",
            "0",
        ];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert_eq!(o.code, 0, "{}", o.err);
        ckpt
    }
}
