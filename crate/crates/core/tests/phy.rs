use std::collections::BTreeMap;

use gaiscn::experiment::{generate_corpus, ExperimentConfig};
use gaiscn::gai::{extract_keywords, PromptAlphabet, UserProfile};
use gaiscn::phy::huffman::{entropy, frequencies};
use gaiscn::phy::{
    hard_decision, hamming_distance, AwgnChannel, BitFrame, ChannelConfig, Direction,
    HuffmanCodebook, LdpcCode, LdpcParams, Scheme,
};
use gaiscn::scene::render;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

fn q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn random_bits(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random()).collect()
}

#[test]
fn uncoded_ber_matches_closed_form() {
    // Es/N0 = 1 at 0 dB, so the BPSK error rate is Q(sqrt(2 Es/N0)).
    for (snr_db, tol) in [(0.0, 0.003), (3.0, 0.002), (6.0, 0.001)] {
        let bits = random_bits(400_000, 5);
        let frame = BitFrame::new(bits, Direction::Downlink, Scheme::A, "ber");
        let tx = AwgnChannel::new(ChannelConfig::new(snr_db, 77)).send(&frame);
        let ber = tx.bit_errors as f64 / frame.len() as f64;
        let es_n0 = 10f64.powf(snr_db / 10.0);
        let oracle = q((2.0 * es_n0).sqrt());
        assert!((ber - oracle).abs() < tol, "{snr_db} dB: {ber} vs {oracle}");
    }
}

/// Minimum expected length over all length vectors satisfying Kraft's
/// inequality, by exhaustive search.
fn optimal_prefix_cost(weights: &[u64], max_len: u32) -> u64 {
    fn go(w: &[u64], max_len: u32, kraft: f64, acc: u64, best: &mut u64) {
        if kraft > 1.0 + 1e-12 {
            return;
        }
        let Some((&first, rest)) = w.split_first() else {
            *best = (*best).min(acc);
            return;
        };
        for l in 1..=max_len {
            go(rest, max_len, kraft + 0.5f64.powi(l as i32), acc + first * l as u64, best);
        }
    }
    let mut best = u64::MAX;
    go(weights, max_len, 0.0, 0, &mut best);
    best
}

#[test]
fn huffman_average_length_matches_brute_force() {
    let weights = [45u64, 13, 12, 16, 9, 5];
    let freq: BTreeMap<u16, u64> = weights.iter().enumerate().map(|(i, &w)| (i as u16, w)).collect();
    let cb = HuffmanCodebook::build(&freq).unwrap();
    let total: u64 = weights.iter().sum();
    let oracle = optimal_prefix_cost(&weights, weights.len() as u32) as f64 / total as f64;
    assert!((oracle - 2.24).abs() < 1e-12);
    assert!((cb.average_length(&freq) - oracle).abs() < 1e-12);
    let h = entropy(&freq);
    assert!(h <= cb.average_length(&freq) && cb.average_length(&freq) < h + 1.0);
}

#[test]
fn huffman_round_trips_the_corpus() {
    let cfg = ExperimentConfig::default();
    let corpus = generate_corpus(&cfg).unwrap();
    let vocab = &cfg.vocabulary;
    let mut pixel_streams = Vec::new();
    for s in &corpus {
        let img = render(s, vocab.palette_size, cfg.workflow.resolution);
        pixel_streams.push(img.pixels.iter().map(|&p| p as u16).collect::<Vec<_>>());
    }
    let cb = HuffmanCodebook::build(&frequencies(pixel_streams.iter().flatten().copied())).unwrap();
    for stream in &pixel_streams {
        let bits = cb.encode(stream).unwrap();
        let expected: usize = stream.iter().map(|&s| cb.code_len(s).unwrap()).sum();
        assert_eq!(bits.len(), expected);
        assert_eq!(&cb.decode(&bits).unwrap(), stream);
    }

    let alphabet = PromptAlphabet::new(vocab);
    let user = UserProfile::new(0, 4);
    let prompts: Vec<Vec<u16>> = corpus
        .iter()
        .map(|s| alphabet.encode(&extract_keywords(s, &user, 3), vocab))
        .collect();
    let cb = HuffmanCodebook::build(&frequencies(prompts.iter().flatten().copied())).unwrap();
    for p in &prompts {
        assert_eq!(&cb.decode(&cb.encode(p).unwrap()).unwrap(), p);
    }
}

#[test]
fn ldpc_corrects_every_single_bit_error() {
    let code = LdpcCode::regular(LdpcParams::default()).unwrap();
    assert_eq!((code.n(), code.k()), (96, 48));
    for trial in 0..4u64 {
        let msg = random_bits(48, trial);
        let cw = code.encode(&msg);
        for pos in 0..96 {
            let mut r = cw.clone();
            r[pos] = !r[pos];
            let d = code.decode(&r);
            assert!(d.converged, "position {pos}");
            assert_eq!(d.message, msg, "position {pos}");
        }
    }
}

#[test]
fn coding_gain_at_four_db() {
    let code = LdpcCode::regular(LdpcParams::default()).unwrap();
    let msg = random_bits(100_032, 11);
    let mut channel = AwgnChannel::new(ChannelConfig::new(4.0, 12));
    let (mut raw_errors, mut raw_bits, mut post_errors) = (0usize, 0usize, 0usize);
    for chunk in msg.chunks(48) {
        let cw = code.encode(chunk);
        let rx = hard_decision(&channel.send_soft(&cw));
        raw_errors += hamming_distance(&cw, &rx);
        raw_bits += cw.len();
        post_errors += hamming_distance(chunk, &code.decode(&rx).message);
    }
    let pre = raw_errors as f64 / raw_bits as f64;
    let post = post_errors as f64 / msg.len() as f64;
    assert!(post < pre, "post {post} vs pre {pre}");
}
