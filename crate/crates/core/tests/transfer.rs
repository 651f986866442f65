mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seqtl_core::crf::{crf_score, zero_transitions};
use seqtl_core::numerics::{grad_check, Parameters, Tensor2};
use seqtl_core::tagger::{train, Decoder, ParamGroup, TaggerModel, TrainConfig};
use seqtl_core::transfer::{
    apply_freeze, build_target_model, extend_output_layer, extend_transitions, AdapterCombine, AdapterConfig,
    FreezePolicy, FreezeSpec, Moments, Setting, TransferOptions,
};
use seqtl_core::Error;

const SRC: &[&str] = &["PER", "LOC"];
const ALL: &[&str] = &["PER", "LOC", "ORG"];

fn trained_source(decoder: Decoder, seed: u64) -> TaggerModel {
    let corpus = toy_corpus(20, SRC, seed);
    let model = fresh_model(&corpus, SRC, small_config(decoder), seed);
    let cfg = TrainConfig {
        max_epochs: 3,
        seed,
        ..TrainConfig::default()
    };
    let mut out = train(model, &corpus, &corpus, &cfg).unwrap();
    // make sure transitions are not trivially zero
    if let Some(t) = out.best.params.transitions.as_mut() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        *t = Tensor2::glorot(t.rows(), t.cols(), &mut rng);
    }
    out.best
}

fn opts(setting: Setting, seed: u64) -> TransferOptions<'static> {
    let mut o = TransferOptions::new(setting.freeze(), seed);
    if setting.uses_adapter() {
        o.adapter = Some(AdapterConfig::default());
    }
    o
}

#[test]
fn output_layer_extension_shapes_and_copy() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let w = Tensor2::glorot(7, 256, &mut rng);
    let b = Tensor2::glorot(7, 1, &mut rng);
    let ext = extend_output_layer(&w, &b, 2, &mut rng).unwrap();
    assert_eq!(ext.weight.shape(), (9, 256));
    assert_eq!(ext.bias.shape(), (9, 1));
    for r in 0..7 {
        assert_eq!(ext.weight.row(r), w.row(r));
        assert_eq!(ext.bias.get(r, 0), b.get(r, 0));
    }
}

#[test]
fn constant_layer_extends_with_its_value() {
    let w = Tensor2::from_fn(3, 4, |_, _| 0.5);
    let b = Tensor2::from_fn(3, 1, |_, _| 0.5);
    let ext = extend_output_layer(&w, &b, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(ext.weight_moments.std, 0.0);
    assert!(ext.weight.as_slice().iter().all(|&x| x == 0.5));
    assert!(ext.bias.as_slice().iter().all(|&x| x == 0.5));
}

#[test]
fn extension_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let w = Tensor2::zeros(3, 2);
    let b = Tensor2::zeros(3, 1);
    assert_eq!(extend_output_layer(&w, &b, 0, &mut rng).unwrap_err(), Error::NonPositiveRows);
    let empty = Tensor2::zeros(0, 2);
    let eb = Tensor2::zeros(0, 1);
    assert_eq!(extend_output_layer(&empty, &eb, 2, &mut rng).unwrap_err(), Error::EmptySource);
    assert_eq!(extend_transitions(&zero_transitions(3), 0, &mut rng).unwrap_err(), Error::NonPositiveRows);
}

#[test]
fn drawn_rows_follow_fitted_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = Tensor2::from_fn(5, 40, |r, c| (r * 40 + c) as f64 * 0.01 - 1.0);
    let b = Tensor2::zeros(5, 1);
    let ext = extend_output_layer(&w, &b, 250, &mut rng).unwrap();
    let fresh = &ext.weight.as_slice()[5 * 40..];
    assert_eq!(fresh.len(), 10_000);
    let got = Moments::fit(fresh).unwrap();
    let want = ext.weight_moments;
    assert!((got.mean - want.mean).abs() <= 0.05 * want.mean.abs().max(want.std), "{got:?} {want:?}");
    assert!((got.std - want.std).abs() <= 0.05 * want.std, "{got:?} {want:?}");
}

#[test]
fn transitions_relocate_and_preserve_old_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = Tensor2::glorot(5, 5, &mut rng);
    let (ext, _) = extend_transitions(&t, 2, &mut rng).unwrap();
    assert_eq!(ext.shape(), (7, 7));
    let map = [0, 1, 2, 5, 6];
    for (a, &na) in map.iter().enumerate() {
        for (b, &nb) in map.iter().enumerate() {
            assert_eq!(ext.get(na, nb), t.get(a, b));
        }
    }
    let emissions: Vec<Vec<f64>> = (0..3).map(|i| vec![0.3 * i as f64, -0.2, 0.7]).collect();
    let wide: Vec<Vec<f64>> = emissions.iter().map(|e| [e.as_slice(), &[1.0, -1.0]].concat()).collect();
    for p in 0..27usize {
        let path = [p % 3, (p / 3) % 3, p / 9];
        assert_eq!(crf_score(&emissions, &t, &path).unwrap(), crf_score(&wide, &ext, &path).unwrap());
    }
    let (zero, m) = extend_transitions(&zero_transitions(3), 2, &mut rng).unwrap();
    assert_eq!(m.std, 0.0);
    assert!(zero.as_slice().iter().all(|&x| x == 0.0));
}

#[test]
fn surgery_preserves_old_label_emissions() {
    for decoder in [Decoder::Softmax, Decoder::Crf] {
        let source = trained_source(decoder, 4);
        let (target, report) = build_target_model(&source, &["ORG"], &opts(Setting::Unlocked, 4)).unwrap();
        assert_eq!(target.num_labels(), 7);
        assert_eq!(report.label_mapping, vec![0, 1, 2, 3, 4]);
        for s in &toy_corpus(50, ALL, 40).sentences {
            let a = source.emissions(s).unwrap();
            let b = target.emissions(s).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.as_slice(), &y[..5]);
            }
        }
    }
}

#[test]
fn adapter_starts_as_identity() {
    for combine in [AdapterCombine::Sum, AdapterCombine::Concat] {
        let source = trained_source(Decoder::Crf, 5);
        let plain = build_target_model(&source, &["ORG"], &opts(Setting::Unlocked, 5)).unwrap().0;
        let mut o = opts(Setting::Unlocked, 5);
        o.adapter = Some(AdapterConfig { hidden: None, combine });
        let (with, report) = build_target_model(&source, &["ORG"], &o).unwrap();
        assert!(report.adapter_parameters > 0);
        assert_eq!(with.params.adapter.as_ref().unwrap().hidden(), 7);
        for s in &toy_corpus(20, ALL, 50).sentences {
            assert_eq!(plain.emissions(s).unwrap(), with.emissions(s).unwrap());
        }
    }
}

#[test]
fn report_counts_add_up() {
    let source = trained_source(Decoder::Crf, 6);
    for setting in Setting::ALL {
        let (target, report) = build_target_model(&source, &["ORG"], &opts(setting, 6)).unwrap();
        let without_adapter = target.parameter_count() - report.adapter_parameters;
        assert_eq!(report.copied() + report.reinitialized(), without_adapter, "{setting:?}");
        assert_eq!(report.total_parameters, without_adapter);
        if setting == Setting::Baseline {
            assert_eq!(report.copied(), 0);
        }
    }
    let (_, report) = build_target_model(&source, &["ORG"], &opts(Setting::LockedAdjust, 6)).unwrap();
    let out = report.groups.iter().find(|g| g.group == ParamGroup::Output).unwrap();
    assert_eq!(out.frozen, out.copied);
    assert_eq!(out.copied, 5 * 8 + 5 + 49);
}

#[test]
fn surgery_is_deterministic() {
    let source = trained_source(Decoder::Crf, 7);
    let a = build_target_model(&source, &["ORG"], &opts(Setting::UnlockedAdapter, 11)).unwrap();
    let b = build_target_model(&source, &["ORG"], &opts(Setting::UnlockedAdapter, 11)).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let c = build_target_model(&source, &["ORG"], &opts(Setting::UnlockedAdapter, 12)).unwrap();
    assert_ne!(a.0.params, c.0.params);
}

#[test]
fn surgery_errors() {
    let source = trained_source(Decoder::Softmax, 8);
    let err = build_target_model(&source, &["LOC"], &opts(Setting::Unlocked, 0)).unwrap_err();
    assert!(matches!(err, Error::CategoryCollision(_)));
    let mut o = opts(Setting::Unlocked, 0);
    o.decoder = Some(Decoder::Crf);
    assert!(matches!(
        build_target_model(&source, &["ORG"], &o).unwrap_err(),
        Error::DecoderMismatch { .. }
    ));
    let with = build_target_model(&source, &["ORG"], &opts(Setting::UnlockedAdapter, 0)).unwrap().0;
    assert_eq!(
        build_target_model(&with, &["MISC"], &opts(Setting::Unlocked, 0)).unwrap_err(),
        Error::ChainedTransfer
    );
    let bad = FreezeSpec {
        embeddings: FreezePolicy::PartiallyLocked,
        ..FreezeSpec::uniform(FreezePolicy::Unlocked)
    };
    assert!(matches!(
        build_target_model(&source, &["ORG"], &TransferOptions::new(bad, 0)).unwrap_err(),
        Error::InvalidFreezeSpec(_)
    ));
}

#[test]
fn vocabulary_extension_adds_rows() {
    let source = trained_source(Decoder::Crf, 9);
    let target_data = toy_corpus(10, ALL, 99);
    let mut o = opts(Setting::Unlocked, 9);
    o.vocab_extension = Some((&target_data, 1));
    let (target, report) = build_target_model(&source, &["ORG"], &o).unwrap();
    assert!(!report.added_words.is_empty());
    assert_eq!(
        target.params.word_embeddings.rows(),
        source.params.word_embeddings.rows() + report.added_words.len()
    );
    for w in &report.added_words {
        assert!(target.vocab.contains_word(w));
    }
}

fn masked_grads(target: &TaggerModel) -> seqtl_core::tagger::TaggerParams {
    let s = sentence(&[("Acme", "B-ORG"), ("in", "O"), ("Oslo", "B-LOC")]);
    let mut g = target.params.zeros_like();
    target.loss_and_grad(&s, None, &mut g).unwrap();
    apply_freeze(&mut g, target.lineage.as_ref().unwrap()).unwrap();
    g
}

#[test]
fn freeze_masks_the_right_entries() {
    let source = trained_source(Decoder::Crf, 10);
    let unlocked = build_target_model(&source, &["ORG"], &opts(Setting::Unlocked, 0)).unwrap().0;
    let s = sentence(&[("Acme", "B-ORG"), ("in", "O"), ("Oslo", "B-LOC")]);
    let mut raw = unlocked.params.zeros_like();
    unlocked.loss_and_grad(&s, None, &mut raw).unwrap();
    assert_eq!(masked_grads(&unlocked), raw);

    let locked = build_target_model(&source, &["ORG"], &opts(Setting::LockedOutput, 0)).unwrap().0;
    for (name, group, t) in masked_grads(&locked).named() {
        let zero = t.as_slice().iter().all(|&x| x == 0.0);
        assert_eq!(zero, group != ParamGroup::Output, "{name}");
    }

    let partial = build_target_model(&source, &["ORG"], &opts(Setting::LockedAdjust, 0)).unwrap().0;
    let g = masked_grads(&partial);
    for r in 0..5 {
        assert!(g.emission.weight.row(r).iter().all(|&x| x == 0.0));
    }
    assert!(g.emission.weight.row(5).iter().any(|&x| x != 0.0));
    let t = g.transitions.unwrap();
    let old = |i: usize| i < 5 || i >= 7;
    for to in 0..9 {
        for from in 0..9 {
            if old(to) && old(from) {
                assert_eq!(t.get(to, from), 0.0);
            }
        }
    }
}

#[test]
fn locked_groups_survive_training() {
    let source = trained_source(Decoder::Crf, 11);
    let data = toy_corpus(15, ALL, 111);
    let cfg = TrainConfig {
        max_epochs: 5,
        patience: 5,
        ..TrainConfig::default()
    };
    for setting in Setting::ALL {
        let (target, _) = build_target_model(&source, &["ORG"], &opts(setting, 1)).unwrap();
        let before = target.clone();
        let after = run_epochs(&target, &data, &cfg);
        let freeze = setting.freeze();
        for ((name, group, a), (_, _, b)) in before.params.named().into_iter().zip(after.params.named()) {
            let policy = freeze.policy(group);
            if policy == FreezePolicy::Locked {
                assert_eq!(a, b, "{setting:?} {name}");
            }
            if policy == FreezePolicy::PartiallyLocked && name == "output/weight" {
                for r in 0..5 {
                    assert_eq!(a.row(r), b.row(r));
                }
            }
        }
        if let Some(src) = &after.source {
            assert_eq!(**src, source);
        }
    }
}

/// Plain epochs without early stopping, returning the final weights.
fn run_epochs(model: &TaggerModel, data: &seqtl_core::data::Corpus, cfg: &TrainConfig) -> TaggerModel {
    use seqtl_core::numerics::{clip_gradients, AdamState};
    let mut m = model.clone();
    let mut adam = AdamState::new(&m.params, cfg.adam());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let layout = m.lineage.clone().unwrap();
    for _ in 0..cfg.max_epochs {
        for s in &data.sentences {
            let mut g = m.params.zeros_like();
            m.loss_and_grad(s, Some((0.5, &mut rng)), &mut g).unwrap();
            apply_freeze(&mut g, &layout).unwrap();
            clip_gradients(&mut g, cfg.clip_norm);
            adam.step(&mut m.params, &g).unwrap();
        }
    }
    m
}

#[test]
fn adapter_gradients_match_finite_differences() {
    for seed in 0..20u64 {
        let source = trained_source(Decoder::Crf, seed);
        for combine in [AdapterCombine::Sum, AdapterCombine::Concat] {
            let mut o = opts(Setting::Unlocked, seed);
            o.adapter = Some(AdapterConfig { hidden: Some(3), combine });
            let (mut target, _) = build_target_model(&source, &["ORG"], &o).unwrap();
            // move heads off zero so the recurrent part receives gradient
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for t in target.params.adapter.as_mut().unwrap().tensors_mut() {
                *t = Tensor2::glorot(t.rows(), t.cols(), &mut rng);
            }
            let s = sentence(&[("Acme", "B-ORG"), ("met", "O"), ("Dana", "B-PER")]);
            let mut g = target.params.zeros_like();
            target.loss_and_grad(&s, None, &mut g).unwrap();
            let mut flat = target.params.flatten();
            let mut probe = target.clone();
            let report = grad_check(
                &mut flat,
                &g.flatten(),
                |theta| {
                    probe.params.assign_flat(theta);
                    probe.loss(&s, None).unwrap()
                },
                1e-5,
                None,
            )
            .unwrap();
            assert!(report.passes(1e-4), "seed {seed} {combine:?}: {report:?}");
        }
    }
}
