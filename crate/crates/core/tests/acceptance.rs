//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gaiscn::experiment::{
    generate_corpus, run_experiment, simulate, ExperimentConfig, CURVES_FILE, EVENT_LOG_FILE,
    RECORDS_FILE, TABLE_FILE,
};
use gaiscn::gai::{extract_keywords, PromptAlphabet, UserProfile};
use gaiscn::metrics::{
    psnr, quantity_discrepancy, recovery_ratio, semantic_similarity, EmbeddingTable, PSNR_CAP_DB,
};
use gaiscn::phy::huffman::frequencies;
use gaiscn::phy::{
    hard_decision, hamming_distance, AwgnChannel, BitFrame, ChannelConfig, Direction,
    HuffmanCodebook, LdpcCode, LdpcParams, Scheme,
};
use gaiscn::scene::render;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_bits(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random()).collect()
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn channel_oracle() -> Outcome {
    let start = Instant::now();
    let bits = random_bits(1_000_000, 2024);
    let frame = BitFrame::new(bits, Direction::Downlink, Scheme::A, "ber");
    let tx = AwgnChannel::new(ChannelConfig::new(0.0, 31)).send(&frame);
    let elapsed = start.elapsed();
    let ber = tx.bit_errors as f64 / frame.len() as f64;
    // Q(sqrt 2) = erfc(1) / 2.
    let oracle = 0.5 * erfc(1.0);
    let pass = (ber - oracle).abs() <= 0.003 && elapsed < Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "BER {ber:.5} vs Q(sqrt 2) = {oracle:.5} (tol 0.003), {:.2} s (limit 10 s)",
            secs(elapsed)
        ),
    )
}

fn coding_correctness() -> Outcome {
    let cfg = ExperimentConfig::default();
    let corpus = generate_corpus(&cfg).unwrap();
    let vocab = &cfg.vocabulary;

    let streams: Vec<Vec<u16>> = corpus
        .iter()
        .map(|s| {
            render(s, vocab.palette_size, cfg.workflow.resolution)
                .pixels
                .iter()
                .map(|&p| p as u16)
                .collect()
        })
        .collect();
    let cb = HuffmanCodebook::build(&frequencies(streams.iter().flatten().copied())).unwrap();
    let pixels_ok = streams
        .iter()
        .all(|s| cb.decode(&cb.encode(s).unwrap()).unwrap() == *s);
    let alphabet = PromptAlphabet::new(vocab);
    let user = UserProfile::new(0, 4);
    let prompts: Vec<Vec<u16>> = corpus
        .iter()
        .map(|s| alphabet.encode(&extract_keywords(s, &user, cfg.workflow.k), vocab))
        .collect();
    let pcb = HuffmanCodebook::build(&frequencies(prompts.iter().flatten().copied())).unwrap();
    let prompts_ok = prompts
        .iter()
        .all(|p| pcb.decode(&pcb.encode(p).unwrap()).unwrap() == *p);

    let code = LdpcCode::regular(LdpcParams::default()).unwrap();
    let msg = random_bits(48, 3);
    let cw = code.encode(&msg);
    let corrected = (0..96)
        .filter(|&pos| {
            let mut r = cw.clone();
            r[pos] = !r[pos];
            let d = code.decode(&r);
            d.converged && d.message == msg
        })
        .count();

    let payload = random_bits(100_032, 4);
    let mut ch = AwgnChannel::new(ChannelConfig::new(4.0, 5));
    let (mut raw, mut raw_n, mut post) = (0usize, 0usize, 0usize);
    for chunk in payload.chunks(48) {
        let cw = code.encode(chunk);
        let rx = hard_decision(&ch.send_soft(&cw));
        raw += hamming_distance(&cw, &rx);
        raw_n += cw.len();
        post += hamming_distance(chunk, &code.decode(&rx).message);
    }
    let (pre_ber, post_ber) = (raw as f64 / raw_n as f64, post as f64 / payload.len() as f64);
    let pass = pixels_ok && prompts_ok && corrected == 96 && post_ber < pre_ber;
    outcome(
        pass,
        format!(
            "huffman round trip pixels={pixels_ok} prompts={prompts_ok} on {} scenes; \
             single-bit corrections {corrected}/96; BER at 4 dB pre {pre_ber:.5} post {post_ber:.5}",
            corpus.len()
        ),
    )
}

fn downlink_ordering() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let exp = simulate(&cfg).unwrap();
    let elapsed = start.elapsed();
    let mean = |s: Scheme| exp.report.summary(s, 0.0).unwrap().downlink_bits.mean;
    let (a, b, c) = (mean(Scheme::A), mean(Scheme::B), mean(Scheme::C));
    let pass = c < b && b < a && c < a / 2.0 && elapsed < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "mean downlink bits C {c:.1} < B {b:.1} < A {a:.1}, C < A/2 = {:.1}; {} scenes, {:.1} s (limit 120 s)",
            a / 2.0,
            cfg.corpus_size,
            secs(elapsed)
        ),
    )
}

fn recovery_trend() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        corpus_size: 327,
        schemes: vec![Scheme::C],
        ..Default::default()
    };
    let exp = simulate(&cfg).unwrap();
    let elapsed = start.elapsed();
    let curve = exp.report.curve(Scheme::C, 0.0).unwrap();
    let rec: Vec<f64> = curve.points.iter().map(|p| p.recovery_ratio.unwrap_or(f64::NAN)).collect();
    let disc: Vec<f64> = curve
        .points
        .iter()
        .map(|p| p.quantity_discrepancy.unwrap_or(f64::NAN))
        .collect();
    let decreasing = rec.windows(2).all(|w| w[0] > w[1]);
    let non_decreasing = disc.windows(2).all(|w| w[0] <= w[1]);
    let pass = curve.points.len() >= 4 && decreasing && non_decreasing && elapsed < Duration::from_secs(120);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" > ");
    outcome(
        pass,
        format!(
            "recovery by bin [{}] strictly decreasing={decreasing}; discrepancy [{}] non-decreasing={non_decreasing}; {:.1} s",
            fmt(&rec),
            disc.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" <= "),
            secs(elapsed)
        ),
    )
}

fn semantic_resilience() -> Outcome {
    let cfg = ExperimentConfig {
        corpus_size: 1000,
        schemes: vec![Scheme::C],
        ..Default::default()
    };
    let exp = simulate(&cfg).unwrap();
    let sessions = exp.results.len();
    let with_errors = exp.results.iter().filter(|r| r.downlink_bit_errors > 0).count();
    let decoupled = exp
        .results
        .iter()
        .filter(|r| r.downlink_bit_errors > 0 && r.decoded_scene.as_ref() == Some(&r.sent_scene))
        .count();
    let share = decoupled as f64 / sessions as f64;
    outcome(
        sessions == 1000 && share >= 0.10,
        format!(
            "{decoupled}/{sessions} sessions ({:.1}%) had bit errors and an identical decode (need >= 10%); {with_errors} had bit errors",
            100.0 * share
        ),
    )
}

fn noiseless_loop() -> Outcome {
    let cfg = ExperimentConfig {
        snr_db: vec![100.0],
        ..Default::default()
    };
    let exp = simulate(&cfg).unwrap();
    let table = EmbeddingTable::new(
        cfg.vocabulary.class_count(),
        cfg.workflow.embedding_dim,
        cfg.workflow.embedding_seed,
    );
    let mut bad: BTreeMap<Scheme, usize> = BTreeMap::new();
    for r in &exp.results {
        let ok = match r.scheme {
            Scheme::A => psnr(&r.sent_image, &r.received_image).unwrap() == PSNR_CAP_DB,
            Scheme::B => {
                let rec = r.received_scene.as_ref().unwrap();
                recovery_ratio(&r.original_scene, rec) == 1.0
                    && semantic_similarity(&r.original_scene, rec, &table) == 1.0
                    && quantity_discrepancy(&r.original_scene, rec) == 0
            }
            Scheme::C => {
                let rec = r.received_scene.as_ref().unwrap();
                recovery_ratio(&r.sent_scene, rec) == 1.0
                    && semantic_similarity(&r.sent_scene, rec, &table) == 1.0
            }
        };
        if !ok {
            *bad.entry(r.scheme).or_default() += 1;
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} sessions at +100 dB; A PSNR cap, B exact, C complete against the generated scene; failures {bad:?}",
            exp.results.len()
        ),
    )
}

fn determinism() -> Outcome {
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, workers) in dirs.iter().zip([1usize, 4, 1]) {
        let cfg = ExperimentConfig {
            workers,
            output_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        run_experiment(&cfg).unwrap();
    }
    let files = [EVENT_LOG_FILE, TABLE_FILE, CURVES_FILE, RECORDS_FILE];
    let mut identical = true;
    let mut log_bytes = 0;
    for name in files {
        let contents: Vec<Vec<u8>> = dirs
            .iter()
            .map(|d| std::fs::read(d.path().join(name)).unwrap())
            .collect();
        if name == EVENT_LOG_FILE {
            log_bytes = contents[0].len();
        }
        identical &= contents.windows(2).all(|w| w[0] == w[1]);
    }
    outcome(
        identical,
        format!("3 default runs (workers 1, 4, 1): event log ({log_bytes} bytes) and report files byte-identical={identical}"),
    )
}

fn metric_identities() -> Outcome {
    let cfg = ExperimentConfig::default();
    let corpus = generate_corpus(&cfg).unwrap();
    let table = EmbeddingTable::new(
        cfg.vocabulary.class_count(),
        cfg.workflow.embedding_dim,
        cfg.workflow.embedding_seed,
    );
    let failures = corpus
        .iter()
        .filter(|s| {
            let img = render(s, cfg.vocabulary.palette_size, cfg.workflow.resolution);
            !(psnr(&img, &img).unwrap() == PSNR_CAP_DB
                && semantic_similarity(s, s, &table) == 1.0
                && recovery_ratio(s, s) == 1.0
                && quantity_discrepancy(s, s) == 0)
        })
        .count();
    outcome(
        failures == 0,
        format!("{} corpus scenes, {failures} identity violations", corpus.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 channel physics oracle", channel_oracle),
        ("2 coding correctness", coding_correctness),
        ("3 downlink bit ordering", downlink_ordering),
        ("4 recovery and discrepancy trend", recovery_trend),
        ("5 semantic resilience", semantic_resilience),
        ("6 noiseless closed loop", noiseless_loop),
        ("7 determinism", determinism),
        ("8 metric identities", metric_identities),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
