use gaiscn::experiment::{generate_corpus, ExperimentConfig};
use gaiscn::gai::KnowledgeBase;
use gaiscn::phy::{transmit, BitFrame, ChannelConfig, Direction, Scheme};
use gaiscn::semantic::{
    semantic_decode_unprojected, semantic_decode_with, semantic_encode_with, ProtectionProfile,
};

/// Vocabulary projection recovers strictly more class labels than the
/// vote-only decoder on identical noisy frames.
#[test]
fn projection_beats_the_unprojected_ablation() {
    let cfg = ExperimentConfig::default();
    let corpus = generate_corpus(&cfg).unwrap();
    let kb = KnowledgeBase::seeded(cfg.vocabulary.clone(), 3).unwrap();
    let profile = ProtectionProfile::STANDARD;
    let (mut with, mut without, mut total, mut invalid_without) = (0usize, 0usize, 0usize, 0usize);
    for (i, scene) in corpus.iter().enumerate() {
        let frame = semantic_encode_with(scene, &kb, profile).unwrap();
        let sent = BitFrame::new(frame.to_bits(), Direction::Downlink, Scheme::C, "test");
        let rx = transmit(&sent, ChannelConfig::new(0.0, 1000 + i as u64)).received;
        let p = semantic_decode_with(&rx.bits, &kb, profile);
        let u = semantic_decode_unprojected(&rx.bits, &kb, profile);
        assert_eq!(p.semantic_failure, u.semantic_failure);
        if p.semantic_failure {
            continue;
        }
        assert!(kb.vocab.check_scene(&p.scene).is_ok());
        invalid_without += kb.vocab.check_scene(&u.scene).is_err() as usize;
        for (orig, (a, b)) in scene.objects_by_id().iter().zip(p.scene.objects.iter().zip(&u.scene.objects)) {
            total += 1;
            with += (a.class_id == orig.class_id) as usize;
            without += (b.class_id == orig.class_id) as usize;
        }
    }
    assert!(total > 1000);
    assert!(with > without, "projected {with} vs unprojected {without} of {total}");
    assert!(invalid_without > 0);
}

/// Robust attributes survive 0 dB more often than unprotected ones, at the
/// price of a longer frame.
#[test]
fn robust_profile_trades_bits_for_exact_decodes() {
    let cfg = ExperimentConfig::default();
    let corpus = generate_corpus(&cfg).unwrap();
    let kb = KnowledgeBase::seeded(cfg.vocabulary.clone(), 3).unwrap();
    let exact = |profile: ProtectionProfile| {
        corpus
            .iter()
            .enumerate()
            .filter(|(i, scene)| {
                let frame = semantic_encode_with(scene, &kb, profile).unwrap();
                let sent = BitFrame::new(frame.to_bits(), Direction::Downlink, Scheme::C, "t");
                let rx = transmit(&sent, ChannelConfig::new(0.0, 7 + *i as u64)).received;
                &semantic_decode_with(&rx.bits, &kb, profile).scene == *scene
            })
            .count()
    };
    assert!(exact(ProtectionProfile::ROBUST) > exact(ProtectionProfile::STANDARD));
    let s = &corpus[0];
    assert!(
        semantic_encode_with(s, &kb, ProtectionProfile::ROBUST).unwrap().bit_len()
            > semantic_encode_with(s, &kb, ProtectionProfile::STANDARD).unwrap().bit_len()
    );
}
