use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqtl::checkpoint::{decode, encode, load_checkpoint, save_checkpoint, Checkpoint, CheckpointError};
use seqtl::synthetic::{generate, SyntheticConfig};
use seqtl::Error;
use seqtl_core::data::{build_vocab, EmbeddingTable};
use seqtl_core::numerics::Tensor2;
use seqtl_core::tagger::{Decoder, LabelSet, ModelConfig, TaggerModel};
use seqtl_core::transfer::{build_target_model, AdapterConfig, Setting, TransferOptions};

fn model(decoder: Decoder) -> TaggerModel {
    let corpus = generate(&SyntheticConfig {
        sentences: 40,
        categories: vec!["PER".into(), "LOC".into()],
        ..Default::default()
    });
    let config = ModelConfig {
        word_dim: 6,
        char_dim: 4,
        char_hidden: 3,
        word_hidden: 5,
        decoder,
    };
    let vocab = build_vocab(&corpus, 1);
    let table = EmbeddingTable::random(vocab.word_count(), 6, 1);
    let mut m = TaggerModel::new(config, LabelSet::from_categories(&["LOC", "PER"]), vocab, table.vectors, 1).unwrap();
    if let Some(t) = m.params.transitions.as_mut() {
        *t = Tensor2::glorot(t.rows(), t.cols(), &mut ChaCha8Rng::seed_from_u64(2));
    }
    m
}

fn adapted() -> TaggerModel {
    let mut o = TransferOptions::new(Setting::UnlockedAdapter.freeze(), 3);
    o.adapter = Some(AdapterConfig::default());
    let mut t = build_target_model(&model(Decoder::Crf), &["ORG"], &o).unwrap().0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for v in t.params.adapter.as_mut().unwrap().blstm.forward.input_weights.as_mut_slice() {
        *v += rng.random_range(-0.1..0.1);
    }
    if let seqtl_core::transfer::AdapterHeads::Summed { forward, .. } = &mut t.params.adapter.as_mut().unwrap().heads {
        forward.weight.fill(0.3);
    }
    t
}

#[test]
fn roundtrip_preserves_predictions() {
    let probe = generate(&SyntheticConfig {
        sentences: 100,
        seed: 99,
        pool_size: 200,
        ..Default::default()
    });
    for m in [model(Decoder::Softmax), model(Decoder::Crf), adapted()] {
        let mut m = m;
        m.round_to_f32();
        let ckpt = Checkpoint {
            model: m.clone(),
            train: None,
            best_f1: Some(0.5),
        };
        let back = decode(&encode(&ckpt)).unwrap();
        assert_eq!(back, ckpt);
        for s in &probe.sentences {
            assert_eq!(m.predict(s).unwrap(), back.model.predict(s).unwrap());
        }
    }
}

#[test]
fn rejects_every_single_byte_flip() {
    let bytes = encode(&Checkpoint::new(model(Decoder::Crf)));
    for pos in (0..bytes.len()).step_by(97) {
        let mut bad = bytes.clone();
        bad[pos] ^= 0x10;
        assert!(decode(&bad).is_err(), "flip at {pos} accepted");
    }
    let mut bad = bytes.clone();
    bad[bytes.len() / 2] ^= 1;
    assert!(matches!(decode(&bad), Err(CheckpointError::CorruptFile)));
    assert!(matches!(decode(b"NOTACKPT...."), Err(CheckpointError::BadMagic)));
    assert!(decode(&bytes[..bytes.len() - 10]).is_err());
}

fn reseal(mut body: Vec<u8>) -> Vec<u8> {
    let crc = crc32fast::hash(&body);
    body.extend_from_slice(&crc.to_le_bytes());
    body
}

#[test]
fn rejects_version_and_topology_mismatch() {
    let bytes = encode(&Checkpoint::new(model(Decoder::Softmax)));
    let mut body = bytes[..bytes.len() - 4].to_vec();
    body[8] = 9;
    assert!(matches!(
        decode(&reseal(body)),
        Err(CheckpointError::VersionMismatch { found: 9, .. })
    ));

    // append an extra tensor and bump the count
    let mut body = bytes[..bytes.len() - 4].to_vec();
    let hlen = u32::from_le_bytes(body[12..16].try_into().unwrap()) as usize;
    let count_at = 16 + hlen;
    let count = u32::from_le_bytes(body[count_at..count_at + 4].try_into().unwrap());
    body[count_at..count_at + 4].copy_from_slice(&(count + 1).to_le_bytes());
    let name = b"extra/thing";
    body.extend_from_slice(&(name.len() as u16).to_le_bytes());
    body.extend_from_slice(name);
    body.push(2);
    body.extend_from_slice(&1u32.to_le_bytes());
    body.extend_from_slice(&1u32.to_le_bytes());
    body.extend_from_slice(&0f32.to_le_bytes());
    assert!(matches!(
        decode(&reseal(body)),
        Err(CheckpointError::UnexpectedTensor(n)) if n == "extra/thing"
    ));

    // drop the last tensor (the output bias, 5 rows) and decrement the count
    let mut body = bytes[..bytes.len() - 4].to_vec();
    body[count_at..count_at + 4].copy_from_slice(&(count - 1).to_le_bytes());
    let tail = 2 + "output/bias".len() + 1 + 8 + 5 * 4;
    body.truncate(body.len() - tail);
    assert!(matches!(
        decode(&reseal(body)),
        Err(CheckpointError::MissingTensor(n)) if n == "output/bias"
    ));
}

#[test]
fn file_roundtrip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/model.ckpt");
    let ckpt = Checkpoint::new(adapted());
    save_checkpoint(&path, &ckpt).unwrap();
    save_checkpoint(&path, &ckpt).unwrap();
    let mut expect = ckpt.model.clone();
    expect.round_to_f32();
    assert_eq!(load_checkpoint(&path).unwrap().model, expect);
    let leftovers = std::fs::read_dir(path.parent().unwrap()).unwrap().count();
    assert_eq!(leftovers, 1);
    assert!(matches!(load_checkpoint(&dir.path().join("missing")), Err(Error::Io { .. })));
}
