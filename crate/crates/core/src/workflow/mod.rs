//! Protocol engine: node replicas, lifecycle stages, knowledge sharing and
//! feedback synchronisation.
//!
//! A [`NetworkState`] holds the knowledge replicas of the cloud, the edge
//! server and the terminal devices, plus one branch [`UserProfile`] per
//! user. Sessions (see [`run_session_a`], [`run_session_b`],
//! [`run_session_c`]) read a frozen snapshot of the state; the only
//! mutations are [`share_knowledge`] and [`sync_update`], applied serially
//! between batches.

mod events;
mod session;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gai::{Attributes, KnowledgeBase, Prompt, UserProfile};
use crate::phy::LdpcParams;
use crate::scene::Vocabulary;
use crate::semantic::ProtectionProfile;

pub use events::{read_log, session_metrics, write_log, LogRecord, Step, StepEvent, SyncEvent};
pub use session::{
    run_session, run_session_a, run_session_b, run_session_c, SessionContext, SessionResult,
    SessionSpec,
};

/// Session and network tunables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkflowConfig {
    /// Keyword budget per prompt.
    pub k: usize,
    /// Render resolution (rows, cols) for images and PSNR.
    pub resolution: (usize, usize),
    /// The edge picks the robust semantic encoder below this SNR.
    pub robust_below_db: f64,
    /// Chase-combining attempts per uplink block.
    pub uplink_max_attempts: usize,
    pub calibration_tolerance: u8,
    /// Positional jitter of the reference generator, in grid cells.
    pub jitter: u8,
    pub history_capacity: usize,
    /// Sessions between feedback flushes.
    pub sync_period: usize,
    pub ldpc: LdpcParams,
    pub embedding_dim: usize,
    pub embedding_seed: u64,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        WorkflowConfig {
            k: 3,
            resolution: (64, 64),
            robust_below_db: 3.0,
            uplink_max_attempts: 8,
            calibration_tolerance: 1,
            jitter: 1,
            history_capacity: 16,
            sync_period: 10,
            ldpc: LdpcParams::default(),
            embedding_dim: 16,
            embedding_seed: 0x05ee_de3b,
        }
    }
}

impl WorkflowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return bad("resolution must be positive");
        }
        if self.uplink_max_attempts == 0 {
            return bad("uplink_max_attempts must be at least 1");
        }
        if self.sync_period == 0 {
            return bad("sync_period must be at least 1");
        }
        if self.history_capacity == 0 {
            return bad("history_capacity must be at least 1");
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be at least 1");
        }
        if !self.robust_below_db.is_finite() {
            return bad("robust_below_db must be finite");
        }
        Ok(())
    }

    /// Encoder the edge selects for a channel at `snr_db`.
    pub fn select_profile(&self, snr_db: f64) -> ProtectionProfile {
        if snr_db < self.robust_below_db {
            ProtectionProfile::ROBUST
        } else {
            ProtectionProfile::STANDARD
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Preparation,
    Provisioning,
    SyncUpdate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Preparation => "preparation",
            Stage::Provisioning => "provisioning",
            Stage::SyncUpdate => "sync-update",
        }
    }
}

/// Edge-cached feedback of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEntry {
    pub user_id: u32,
    pub session: u64,
    pub score: f64,
    /// Attributes the user received, first instance per class.
    pub attributes: Vec<(u16, Attributes)>,
    pub prompt: Option<Prompt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub users: Vec<UserProfile>,
    pub kb_cloud: KnowledgeBase,
    pub kb_edge: KnowledgeBase,
    pub kb_td: KnowledgeBase,
    pub stage: Stage,
    pub feedback_cache: Vec<FeedbackEntry>,
    pub epoch: u64,
    pub sync_period: usize,
    pub sessions_since_flush: usize,
}

impl NetworkState {
    /// True when all three replicas hold the same knowledge.
    pub fn knowledge_aligned(&self) -> bool {
        self.kb_cloud == self.kb_edge && self.kb_edge == self.kb_td
    }

    pub fn user(&self, user_id: u32) -> Option<&UserProfile> {
        self.users.iter().find(|u| u.user_id == user_id)
    }

    pub(crate) fn require(&self, expected: Stage) -> Result<()> {
        if self.stage != expected {
            return Err(Error::Stage {
                expected: expected.name(),
                found: self.stage.name(),
            });
        }
        Ok(())
    }
}

/// Mixes `parts` into `master` with splitmix64 finalisers. Used for every
/// per-user, per-session and per-hop seed so that no stream depends on
/// scheduling order.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    parts
        .iter()
        .fold(mix(master), |acc, &p| mix(acc ^ mix(p.wrapping_add(0x632b_e59b_d9b4_e019))))
}

const KB_STREAM: u64 = 0x6b62;
const USER_STREAM: u64 = 0x7573;

/// Preparation with default tunables.
pub fn prepare_network(user_ids: &[u32], vocab: Vocabulary, seed: u64) -> Result<NetworkState> {
    prepare_network_with(user_ids, vocab, seed, &WorkflowConfig::default())
}

/// Builds identical knowledge replicas and one seeded branch profile per
/// user, then enters the provisioning stage.
pub fn prepare_network_with(
    user_ids: &[u32],
    vocab: Vocabulary,
    seed: u64,
    cfg: &WorkflowConfig,
) -> Result<NetworkState> {
    if user_ids.is_empty() {
        return Err(Error::Config("at least one user is required".into()));
    }
    cfg.validate()?;
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = user_ids.iter().find(|id| !seen.insert(**id)) {
        return Err(Error::Config(format!("duplicate user id {dup}")));
    }
    let kb = KnowledgeBase::seeded(vocab, derive_seed(seed, &[KB_STREAM]))?;
    let users = user_ids
        .iter()
        .map(|&id| {
            UserProfile::seeded(
                id,
                &kb.vocab,
                derive_seed(seed, &[USER_STREAM, id as u64]),
                cfg.history_capacity,
            )
        })
        .collect();
    let mut net = NetworkState {
        users,
        kb_cloud: kb.clone(),
        kb_edge: kb.clone(),
        kb_td: kb,
        stage: Stage::Preparation,
        feedback_cache: Vec::new(),
        epoch: 0,
        sync_period: cfg.sync_period,
        sessions_since_flush: 0,
    };
    debug_assert!(net.knowledge_aligned());
    net.stage = Stage::Provisioning;
    Ok(net)
}

/// Brings every replica to the newest knowledge (highest version, ties to
/// cloud, then edge, then device). Returns the control-plane bits spent: the
/// serialized knowledge base once per replica that changed.
pub fn share_knowledge(net: &mut NetworkState) -> Result<usize> {
    if net.knowledge_aligned() {
        return Ok(0);
    }
    let newest = [&net.kb_cloud, &net.kb_edge, &net.kb_td]
        .into_iter()
        .fold(None::<&KnowledgeBase>, |best, kb| match best {
            Some(b) if b.version >= kb.version => Some(b),
            _ => Some(kb),
        })
        .expect("three replicas")
        .clone();
    let payload_bits = serde_json::to_vec(&newest)?.len() * 8;
    let mut bits = 0;
    for replica in [&mut net.kb_cloud, &mut net.kb_edge, &mut net.kb_td] {
        if *replica != newest {
            *replica = newest.clone();
            bits += payload_bits;
        }
    }
    Ok(bits)
}

/// Caches feedback from `results` at the edge and, once `sync_period`
/// sessions have accumulated, flushes it to the cloud.
///
/// On flush every user with cached feedback adopts the attributes of their
/// best-scoring cached session (earliest session on ties) as preferences,
/// their prompts join the history, the epoch advances and the replicas are
/// realigned.
pub fn sync_update(net: &mut NetworkState, results: &[SessionResult]) -> Result<SyncEvent> {
    net.require(Stage::Provisioning)?;
    net.stage = Stage::SyncUpdate;
    for r in results {
        net.feedback_cache.push(r.feedback_entry());
    }
    net.sessions_since_flush += results.len();
    let flushed = net.sessions_since_flush >= net.sync_period;
    if flushed {
        flush_feedback(net)?;
    }
    net.stage = Stage::Provisioning;
    Ok(SyncEvent {
        epoch: net.epoch,
        cached: net.feedback_cache.len(),
        flushed,
    })
}

fn flush_feedback(net: &mut NetworkState) -> Result<()> {
    let cache = std::mem::take(&mut net.feedback_cache);
    for user in &mut net.users {
        let mine: Vec<&FeedbackEntry> = cache.iter().filter(|e| e.user_id == user.user_id).collect();
        let best = mine.iter().fold(None::<&FeedbackEntry>, |best, e| match best {
            Some(b) if b.score >= e.score => Some(b),
            _ => Some(e),
        });
        if let Some(best) = best {
            for &(class, attrs) in &best.attributes {
                user.preferences.insert(class, attrs);
            }
        }
        for e in &mine {
            user.feedback_scores.push(e.score);
            if let Some(p) = &e.prompt {
                user.remember(p.clone());
            }
        }
    }
    net.epoch += 1;
    net.sessions_since_flush = 0;
    share_knowledge(net)?;
    Ok(())
}
