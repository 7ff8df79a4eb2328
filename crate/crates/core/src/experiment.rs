//! Experiment driver: configuration, corpus generation, batched parallel
//! execution and report emission.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::{debug, info};

use crate::error::{Error, Result};
use crate::metrics::{aggregate, MetricsReport, ObjectBin, SessionMetrics};
use crate::phy::Scheme;
use crate::scene::{generate_scene, parse_corpus, write_corpus, Scene, Vocabulary};
use crate::workflow::{
    derive_seed, prepare_network_with, read_log, run_session, session_metrics, share_knowledge,
    sync_update, write_log, LogRecord, SessionContext, SessionResult, SessionSpec, WorkflowConfig,
};

pub const EVENT_LOG_FILE: &str = "events.jsonl";
pub const TABLE_FILE: &str = "report.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const RECORDS_FILE: &str = "report.json";

const CORPUS_STREAM: u64 = 0x636f;
const SESSION_STREAM: u64 = 0x7365;
const NETWORK_STREAM: u64 = 0x6e65;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus_size: usize,
    /// Inclusive range of objects per generated scene.
    pub object_count_range: (usize, usize),
    pub snr_db: Vec<f64>,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
    pub users: usize,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    /// Read scenes from this corpus file instead of generating them.
    pub corpus_file: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub bins: Vec<ObjectBin>,
    pub vocabulary: Vocabulary,
    pub workflow: WorkflowConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus_size: 300,
            object_count_range: (1, 9),
            snr_db: vec![0.0],
            master_seed: 2024,
            schemes: Scheme::ALL.to_vec(),
            users: 3,
            workers: 0,
            corpus_file: None,
            output_dir: PathBuf::from("out"),
            bins: ObjectBin::default_bins(),
            vocabulary: Vocabulary::default(),
            workflow: WorkflowConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.corpus_size == 0 {
            return bad("corpus_size must be at least 1".into());
        }
        let (lo, hi) = self.object_count_range;
        if lo > hi {
            return bad(format!("empty object_count_range [{lo}, {hi}]"));
        }
        if hi > self.vocabulary.capacity() {
            return Err(Error::Capacity {
                requested: hi,
                capacity: self.vocabulary.capacity(),
            });
        }
        if self.snr_db.is_empty() {
            return bad("snr_db must list at least one value".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db values must be finite".into());
        }
        if self.schemes.is_empty() {
            return bad("schemes must not be empty".into());
        }
        if self.users == 0 {
            return bad("users must be at least 1".into());
        }
        if self.bins.is_empty() {
            return bad("bins must not be empty".into());
        }
        self.vocabulary.validate()?;
        self.workflow.validate()
    }

    /// Schemes in canonical order without duplicates.
    fn scheme_list(&self) -> Vec<Scheme> {
        Scheme::ALL
            .into_iter()
            .filter(|s| self.schemes.contains(s))
            .collect()
    }
}

/// Seeded corpus: scene `i` draws its object count uniformly from the
/// configured range and its layout from its own seed.
pub fn generate_corpus(cfg: &ExperimentConfig) -> Result<Vec<Scene>> {
    let (lo, hi) = cfg.object_count_range;
    (0..cfg.corpus_size)
        .map(|i| {
            let seed = derive_seed(cfg.master_seed, &[CORPUS_STREAM, i as u64]);
            let count = ChaCha8Rng::seed_from_u64(seed).random_range(lo..=hi);
            generate_scene(seed, count, &cfg.vocabulary)
        })
        .collect()
}

/// The configured corpus file if any, else a generated corpus.
pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Vec<Scene>> {
    match &cfg.corpus_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let scenes = parse_corpus(&text, &cfg.vocabulary)?;
            if scenes.is_empty() {
                return Err(Error::Config(format!("corpus {} is empty", path.display())));
            }
            Ok(scenes)
        }
        None => generate_corpus(cfg),
    }
}

pub fn save_corpus(scenes: &[Scene], vocab: &Vocabulary, path: &Path) -> Result<()> {
    fs::write(path, write_corpus(scenes, vocab)).map_err(|e| Error::io(path, e))
}

/// Outcome of a simulated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: MetricsReport,
    pub log: Vec<LogRecord>,
    pub metrics: Vec<SessionMetrics>,
    /// Full session results in session order.
    pub results: Vec<SessionResult>,
}

/// Runs every configured scheme on every (scene, SNR) pair without
/// touching the output directory.
///
/// Scenes are processed in batches of `sync_period`. Sessions in a batch
/// read the same network snapshot and run in parallel; results are merged
/// in session order, then knowledge sharing and feedback sync are applied
/// serially. Session ids, seeds and batch boundaries do not depend on the
/// worker count, so output is identical for any `workers`.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    simulate_corpus(cfg, &corpus)
}

pub fn simulate_corpus(cfg: &ExperimentConfig, corpus: &[Scene]) -> Result<Experiment> {
    cfg.validate()?;
    let user_ids: Vec<u32> = (0..cfg.users as u32).collect();
    let mut net = prepare_network_with(
        &user_ids,
        cfg.vocabulary.clone(),
        derive_seed(cfg.master_seed, &[NETWORK_STREAM]),
        &cfg.workflow,
    )?;
    let ctx = SessionContext::new(cfg.workflow.clone(), corpus, &net)?;
    let schemes = cfg.scheme_list();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let per_scene = cfg.snr_db.len() * schemes.len();
    let mut log = Vec::new();
    let mut metrics = Vec::new();
    let mut results = Vec::new();
    for (batch_no, batch) in corpus
        .chunks(cfg.workflow.sync_period)
        .enumerate()
    {
        let first = batch_no * cfg.workflow.sync_period;
        let specs: Vec<(Scheme, usize, SessionSpec)> = (first..first + batch.len())
            .flat_map(|scene_index| {
                let schemes = &schemes;
                cfg.snr_db.iter().enumerate().flat_map(move |(snr_index, &snr_db)| {
                    let seed = derive_seed(
                        cfg.master_seed,
                        &[SESSION_STREAM, scene_index as u64, snr_index as u64],
                    );
                    schemes.iter().enumerate().map(move |(scheme_index, &scheme)| {
                        let session =
                            ((scene_index * cfg.snr_db.len() + snr_index) * schemes.len()
                                + scheme_index) as u64;
                        (
                            scheme,
                            scene_index,
                            SessionSpec {
                                session,
                                scene_index,
                                user_index: scene_index % cfg.users,
                                snr_db,
                                seed,
                            },
                        )
                    })
                })
            })
            .collect();
        debug_assert_eq!(specs.len(), batch.len() * per_scene);
        let snapshot = &net;
        let batch_results: Vec<SessionResult> = pool.install(|| {
            specs
                .par_iter()
                .map(|(scheme, scene_index, spec)| {
                    run_session(*scheme, &corpus[*scene_index], snapshot, &ctx, *spec)
                })
                .collect::<Result<Vec<_>>>()
        })?;

        if batch_results.iter().any(|r| r.knowledge_shared) {
            share_knowledge(&mut net)?;
        }
        for r in &batch_results {
            let m = r.metrics(&ctx.embedding)?;
            log.extend(r.events.iter().cloned().map(LogRecord::Step));
            log.push(LogRecord::Session(m.clone()));
            metrics.push(m);
        }
        let sync = sync_update(&mut net, &batch_results)?;
        debug!(batch = batch_no, epoch = sync.epoch, flushed = sync.flushed, "batch done");
        log.push(LogRecord::Sync(sync));
        results.extend(batch_results);
    }
    let report = aggregate(&metrics, &cfg.bins)?;
    info!(sessions = metrics.len(), "simulation finished");
    Ok(Experiment {
        report,
        log,
        metrics,
        results,
    })
}

/// Creates the output directory and checks it is writable.
fn probe_output(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Full run: verifies the output directory, simulates, then writes the
/// event log and the report files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    probe_output(&cfg.output_dir)?;
    let exp = simulate(cfg)?;
    let log_path = cfg.output_dir.join(EVENT_LOG_FILE);
    let file = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    write_log(&exp.log, BufWriter::new(file))?;
    emit_report(&exp.report, &cfg.output_dir)?;
    Ok(exp)
}

/// Writes the summary table, the binned curves and the structured records
/// into `dir`.
pub fn emit_report(report: &MetricsReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        let mut buf = Vec::new();
        f(&mut buf)?;
        let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        file.write_all(&buf).map_err(|e| Error::io(&path, e))
    };
    write(TABLE_FILE, &|b| report.write_table(b))?;
    write(CURVES_FILE, &|b| report.write_curves(b))?;
    write(RECORDS_FILE, &|b| {
        b.extend(report.to_json()?.into_bytes());
        Ok(())
    })
}

/// Rebuilds a report from the session records of a saved event log.
pub fn report_from_log(path: &Path, bins: &[ObjectBin]) -> Result<MetricsReport> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let records = read_log(BufReader::new(file))?;
    aggregate(&session_metrics(&records), bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.corpus_size, 300);
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for text in [
            "corpus_size = 0",
            "snr_db = []",
            "schemes = []",
            "object_count_range = [5, 2]",
            "users = 0",
            "[workflow]\nk = 0",
            "unknown_key = 1",
        ] {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
        assert!(matches!(
            ExperimentConfig::from_toml("object_count_range = [1, 300]"),
            Err(Error::Capacity { .. })
        ));
    }

    /// Every tunable can be set from the config file.
    #[test]
    fn config_coverage() {
        let text = r#"
            corpus_size = 7
            object_count_range = [2, 4]
            snr_db = [1.5, 6.0]
            master_seed = 99
            schemes = ["C", "A"]
            users = 2
            workers = 3
            corpus_file = "scenes.txt"
            output_dir = "elsewhere"
            bins = [{ lo = 1, hi = 3 }, { lo = 4 }]

            [vocabulary]
            class_labels = ["cat", "sun"]
            palette_size = 4
            size_levels = [1, 2]
            canvas = [8, 8]
            version = 3

            [workflow]
            k = 2
            resolution = [32, 48]
            robust_below_db = 1.0
            uplink_max_attempts = 4
            calibration_tolerance = 2
            jitter = 0
            history_capacity = 5
            sync_period = 4
            embedding_dim = 8
            embedding_seed = 11

            [workflow.ldpc]
            n = 48
            k = 24
            max_iterations = 20
            seed = 5
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        let d = ExperimentConfig::default();
        assert_ne!(cfg.corpus_size, d.corpus_size);
        assert_ne!(cfg.object_count_range, d.object_count_range);
        assert_ne!(cfg.snr_db, d.snr_db);
        assert_ne!(cfg.master_seed, d.master_seed);
        assert_ne!(cfg.schemes, d.schemes);
        assert_ne!(cfg.users, d.users);
        assert_ne!(cfg.workers, d.workers);
        assert_ne!(cfg.corpus_file, d.corpus_file);
        assert_ne!(cfg.output_dir, d.output_dir);
        assert_ne!(cfg.bins, d.bins);
        assert_ne!(cfg.vocabulary.class_labels, d.vocabulary.class_labels);
        assert_ne!(cfg.vocabulary.palette_size, d.vocabulary.palette_size);
        assert_ne!(cfg.vocabulary.size_levels, d.vocabulary.size_levels);
        assert_ne!(cfg.vocabulary.canvas, d.vocabulary.canvas);
        assert_ne!(cfg.vocabulary.version, d.vocabulary.version);
        let (w, dw) = (&cfg.workflow, &d.workflow);
        assert_ne!(w.k, dw.k);
        assert_ne!(w.resolution, dw.resolution);
        assert_ne!(w.robust_below_db, dw.robust_below_db);
        assert_ne!(w.uplink_max_attempts, dw.uplink_max_attempts);
        assert_ne!(w.calibration_tolerance, dw.calibration_tolerance);
        assert_ne!(w.jitter, dw.jitter);
        assert_ne!(w.history_capacity, dw.history_capacity);
        assert_ne!(w.sync_period, dw.sync_period);
        assert_ne!(w.embedding_dim, dw.embedding_dim);
        assert_ne!(w.embedding_seed, dw.embedding_seed);
        assert_ne!(w.ldpc.n, dw.ldpc.n);
        assert_ne!(w.ldpc.k, dw.ldpc.k);
        assert_ne!(w.ldpc.max_iterations, dw.ldpc.max_iterations);
        assert_ne!(w.ldpc.seed, dw.ldpc.seed);
        // The full struct is compared field by field above; a new field
        // without a line here still has to round-trip.
        let back: ExperimentConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn corpus_is_deterministic_and_in_range() {
        let cfg = ExperimentConfig {
            corpus_size: 40,
            ..Default::default()
        };
        let a = generate_corpus(&cfg).unwrap();
        assert_eq!(a, generate_corpus(&cfg).unwrap());
        assert!(a.iter().all(|s| (1..=9).contains(&s.len())));
    }
}
