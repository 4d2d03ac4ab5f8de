use ingtag_core::baseline::{train_crf, CrfModel};
use ingtag_core::corpus::split_train_dev;
use ingtag_core::model::Trainer;
use ingtag_core::synth::{synthetic, SynthConfig};
use ingtag_core::{evaluate_tagger, Hyper, Label, Phrase, Tagger, TaggerModel};

fn small() -> ingtag_core::synth::SynthData {
    synthetic(&SynthConfig {
        dim: 32,
        train: 120,
        test: 40,
        ..SynthConfig::default()
    })
    .unwrap()
}

#[test]
fn trained_tagger_survives_a_checkpoint() {
    let data = small();
    let (train, dev) = split_train_dev(&data.train, 0.1, 13).unwrap();
    let hyper = Hyper {
        dim: 32,
        n_layers: 2,
        max_epochs: 4,
        learning_rate: 1e-3,
        ..Hyper::default()
    };
    let mut model = TaggerModel::init(hyper.clone(), &train, Some(&data.embeddings)).unwrap();
    model.extend_pretrained(&data.embeddings).unwrap();
    let log = Trainer::new(&hyper).fit(&mut model, &train, &dev, |_| {}).unwrap();
    assert!(!log.epochs.is_empty());

    let restored = TaggerModel::from_bytes(&model.to_bytes().unwrap()).unwrap();
    for p in &data.test {
        assert_eq!(model.tag(p).unwrap(), restored.tag(p).unwrap());
        let (a, b) = (model.logits(p).unwrap(), restored.logits(p).unwrap());
        assert_eq!(a.values(), b.values());
    }
    let report = evaluate_tagger(&restored, &data.test).unwrap();
    assert!(report.micro.f1 > 80.0, "{report}");
}

#[test]
fn crf_survives_a_checkpoint() {
    let data = small();
    let crf = train_crf(&data.train, 5, 13).unwrap();
    let restored = CrfModel::from_bytes(&crf.to_bytes().unwrap()).unwrap();
    let tags: Vec<Vec<Label>> = data.test.iter().map(|p| crf.viterbi(p)).collect();
    let back: Vec<Vec<Label>> = data.test.iter().map(|p| restored.viterbi(p)).collect();
    assert_eq!(tags, back);
}

#[test]
fn checkpoints_do_not_cross_load() {
    let data = small();
    let crf = train_crf(&data.train, 1, 13).unwrap();
    assert!(TaggerModel::from_bytes(&crf.to_bytes().unwrap()).is_err());
    let model = TaggerModel::init(Hyper { dim: 32, ..Hyper::default() }, &data.train, None).unwrap();
    assert!(CrfModel::from_bytes(&model.to_bytes().unwrap()).is_err());
}

#[test]
fn parse_groups_raw_text() {
    let data = small();
    let hyper = Hyper {
        dim: 32,
        n_layers: 1,
        ..Hyper::default()
    };
    let model = TaggerModel::init(hyper, &data.train, Some(&data.embeddings)).unwrap();
    let phrase = Phrase::from_raw("2 cups cold water, divided");
    let parsed = model.parse(&phrase).unwrap();
    let surfaces: Vec<&str> = parsed.tokens.iter().map(|t| t.surface.as_str()).collect();
    assert_eq!(surfaces, ["2", "cups", "cold", "water", ",", "divided"]);
    assert!(parsed.tokens.iter().all(|t| (0.125..=1.0).contains(&t.confidence)));
}
