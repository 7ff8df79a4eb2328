//! Per-session pipelines for the three schemes.

use std::borrow::Cow;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::events::{Step, StepEvent};
use super::{derive_seed, share_knowledge, FeedbackEntry, NetworkState, Stage, WorkflowConfig};
use crate::error::{Error, Result};
use crate::gai::{
    extract_keywords, Attributes, GlobalModel, LocalModel, Prompt, PromptAlphabet,
    ReferenceGlobalModel, ReferenceLocalModel,
};
use crate::metrics::{
    psnr, quantity_discrepancy, recovery_ratio, semantic_similarity, EmbeddingTable,
    SessionMetrics,
};
use crate::phy::huffman::frequencies;
use crate::phy::{
    ChannelConfig, Direction, HuffmanCodebook, LdpcCode, Retransmission, Scheme, TraditionalLink,
};
use crate::scene::{render, Image, Scene, Vocabulary};
use crate::semantic::jscc_hop;

const GENERATION_STREAM: u64 = 1;
const UPLINK_STREAM: u64 = 2;
const DOWNLINK_STREAM: u64 = 3;

/// Identifies one session. `seed` is shared by every scheme run on the
/// same (scene, SNR) point so that channel noise is paired across schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub session: u64,
    pub scene_index: usize,
    /// Index into `NetworkState::users`.
    pub user_index: usize,
    pub snr_db: f64,
    pub seed: u64,
}

impl SessionSpec {
    fn channel(&self, stream: u64) -> ChannelConfig {
        ChannelConfig::new(self.snr_db, derive_seed(self.seed, &[stream]))
    }
}

/// Read-only state shared by every session of a run: codebooks, the
/// channel code, the similarity embedding and the models.
pub struct SessionContext {
    pub cfg: WorkflowConfig,
    prompt_alphabet: PromptAlphabet,
    pub prompt_codebook: HuffmanCodebook,
    pub pixel_codebook: HuffmanCodebook,
    pub ldpc: LdpcCode,
    pub embedding: EmbeddingTable,
    pub local: Box<dyn LocalModel>,
    pub global: Box<dyn GlobalModel>,
}

impl std::fmt::Debug for SessionContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionContext")
            .field("cfg", &self.cfg)
            .field("ldpc", &self.ldpc)
            .finish_non_exhaustive()
    }
}

impl SessionContext {
    /// Trains the prompt and pixel codebooks on `corpus` (add-one smoothed
    /// over their full alphabets) and uses the reference models.
    pub fn new(cfg: WorkflowConfig, corpus: &[Scene], net: &NetworkState) -> Result<Self> {
        cfg.validate()?;
        let vocab = &net.kb_td.vocab;
        let prompt_alphabet = PromptAlphabet::new(vocab);
        let mut prompt_freq: BTreeMap<u16, u64> = (0..prompt_alphabet.len()).map(|s| (s, 1)).collect();
        for (i, scene) in corpus.iter().enumerate() {
            let user = &net.users[i % net.users.len()];
            let prompt = extract_keywords(scene, user, cfg.k);
            for s in prompt_alphabet.encode(&prompt, vocab) {
                *prompt_freq.entry(s).or_insert(0) += 1;
            }
        }
        let mut pixel_freq: BTreeMap<u16, u64> = (0..=255u16).map(|s| (s, 1)).collect();
        for scene in corpus {
            let img = render(scene, vocab.palette_size, cfg.resolution);
            for (s, n) in frequencies(img.pixels.iter().map(|&p| p as u16)) {
                *pixel_freq.entry(s).or_insert(0) += n;
            }
        }
        Ok(SessionContext {
            prompt_alphabet,
            prompt_codebook: HuffmanCodebook::build(&prompt_freq)?,
            pixel_codebook: HuffmanCodebook::build(&pixel_freq)?,
            ldpc: LdpcCode::regular(cfg.ldpc)?,
            embedding: EmbeddingTable::new(vocab.class_count(), cfg.embedding_dim, cfg.embedding_seed),
            local: Box::new(ReferenceLocalModel {
                calibration_tolerance: cfg.calibration_tolerance,
            }),
            global: Box::new(ReferenceGlobalModel { jitter: cfg.jitter }),
            cfg,
        })
    }

    /// Codebook for prompts over `vocab`. A vocabulary whose alphabet
    /// differs from the training one gets a flat codebook.
    fn prompt_codebook_for(&self, vocab: &Vocabulary) -> Result<Cow<'_, HuffmanCodebook>> {
        let alphabet = PromptAlphabet::new(vocab);
        if alphabet == self.prompt_alphabet {
            return Ok(Cow::Borrowed(&self.prompt_codebook));
        }
        let flat = (0..alphabet.len()).map(|s| (s, 1)).collect();
        Ok(Cow::Owned(HuffmanCodebook::build(&flat)?))
    }

    fn max_prompt_symbols(&self) -> usize {
        3 * self.cfg.k + 2
    }
}

/// Everything one session produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub session: u64,
    pub scene_index: usize,
    pub scheme: Scheme,
    pub snr_db: f64,
    pub user_id: u32,
    pub uplink_bits: usize,
    pub downlink_bits: usize,
    /// Knowledge-sharing traffic triggered by this session.
    pub control_bits: usize,
    pub uplink_bit_errors: usize,
    pub downlink_bit_errors: usize,
    /// Content captured at the terminal device.
    pub original_scene: Scene,
    /// Content the downlink sender encoded: generated for A and C, the
    /// original for B.
    pub sent_scene: Scene,
    /// Receiver-side semantic decode before calibration; `None` for A.
    pub decoded_scene: Option<Scene>,
    /// Content delivered to the user; `None` for A, which only delivers
    /// pixels.
    pub received_scene: Option<Scene>,
    pub sent_image: Image,
    pub received_image: Image,
    pub semantic_failure: bool,
    pub feedback_score: f64,
    /// Prompt as extracted at the device (A and C).
    pub prompt: Option<Prompt>,
    /// Prompt as recovered in the cloud (A and C).
    pub cloud_prompt: Option<Prompt>,
    pub knowledge_shared: bool,
    pub events: Vec<StepEvent>,
}

impl SessionResult {
    /// Metrics against the original content.
    pub fn metrics(&self, table: &EmbeddingTable) -> Result<SessionMetrics> {
        let object = self.received_scene.as_ref().map(|r| {
            (
                semantic_similarity(&self.original_scene, r, table),
                recovery_ratio(&self.original_scene, r),
                quantity_discrepancy(&self.original_scene, r),
            )
        });
        Ok(SessionMetrics {
            session: self.session,
            scene_index: self.scene_index,
            scheme: self.scheme,
            snr_db: self.snr_db,
            user_id: self.user_id,
            object_count: self.original_scene.len(),
            uplink_bits: self.uplink_bits,
            downlink_bits: self.downlink_bits,
            control_bits: self.control_bits,
            downlink_bit_errors: self.downlink_bit_errors,
            psnr_db: psnr(&self.sent_image, &self.received_image)?,
            similarity: object.map(|o| o.0),
            recovery_ratio: object.map(|o| o.1),
            quantity_discrepancy: object.map(|o| o.2),
            semantic_failure: self.semantic_failure,
            feedback_score: self.feedback_score,
        })
    }

    pub(crate) fn feedback_entry(&self) -> FeedbackEntry {
        let delivered = self.received_scene.as_ref().unwrap_or(&self.sent_scene);
        let mut attributes: Vec<(u16, Attributes)> = Vec::new();
        for o in delivered.objects_by_id() {
            if attributes.iter().all(|(c, _)| *c != o.class_id) {
                attributes.push((
                    o.class_id,
                    Attributes {
                        color: o.color,
                        size: o.size,
                    },
                ));
            }
        }
        FeedbackEntry {
            user_id: self.user_id,
            session: self.session,
            score: self.feedback_score,
            attributes,
            prompt: self.prompt.clone(),
        }
    }
}

/// Dispatches on `scheme`.
pub fn run_session(
    scheme: Scheme,
    scene: &Scene,
    net: &NetworkState,
    ctx: &SessionContext,
    spec: SessionSpec,
) -> Result<SessionResult> {
    match scheme {
        Scheme::A => run_session_a(scene, net, ctx, spec),
        Scheme::B => run_session_b(scene, net, ctx, spec),
        Scheme::C => run_session_c(scene, net, ctx, spec),
    }
}

/// Prompt uplink, cloud generation, semantic downlink, calibration.
pub fn run_session_c(
    scene: &Scene,
    net: &NetworkState,
    ctx: &SessionContext,
    spec: SessionSpec,
) -> Result<SessionResult> {
    with_knowledge(net, spec, Scheme::C, |net, events| {
        let (prompt, up) = prompt_loop(scene, net, ctx, spec, Scheme::C, events)?;
        let profile = &net.users[spec.user_index];
        let protection = ctx.cfg.select_profile(spec.snr_db);
        events.push(StepEvent::local(
            spec.session,
            Scheme::C,
            Step::SelectEncoder,
            profile_name(protection),
        ));
        let hop = jscc_hop(
            &up.generated,
            &net.kb_edge,
            &net.kb_td,
            spec.channel(DOWNLINK_STREAM),
            protection,
            Direction::Downlink,
            Scheme::C,
        )?;
        events.push(StepEvent::air(
            spec.session,
            Scheme::C,
            Step::Downlink,
            Direction::Downlink,
            hop.bits,
            hop.bit_errors,
        ));
        let received = ctx.local.calibrate(&hop.decoded, &net.kb_td, profile);
        let changed = attribute_changes(&hop.decoded, &received);
        events.push(StepEvent::local(
            spec.session,
            Scheme::C,
            Step::Calibrate,
            format!("{changed} attributes adjusted"),
        ));
        let palette = net.kb_td.vocab.palette_size;
        let feedback = feedback(scene, &received, ctx);
        Ok(SessionResult {
            session: spec.session,
            scene_index: spec.scene_index,
            scheme: Scheme::C,
            snr_db: spec.snr_db,
            user_id: profile.user_id,
            uplink_bits: up.air_bits,
            downlink_bits: hop.bits,
            control_bits: 0,
            uplink_bit_errors: up.bit_errors,
            downlink_bit_errors: hop.bit_errors,
            original_scene: scene.clone(),
            sent_image: render(&up.generated, palette, ctx.cfg.resolution),
            received_image: render(&received, palette, ctx.cfg.resolution),
            sent_scene: up.generated,
            decoded_scene: Some(hop.decoded),
            received_scene: Some(received),
            semantic_failure: hop.semantic_failure,
            feedback_score: feedback,
            prompt: Some(prompt),
            cloud_prompt: Some(up.cloud_prompt),
            knowledge_shared: false,
            events: Vec::new(),
        })
    })
}

/// Prompt uplink and cloud generation as in C, then the rendered pixels
/// cross a single-shot Huffman + LDPC downlink.
pub fn run_session_a(
    scene: &Scene,
    net: &NetworkState,
    ctx: &SessionContext,
    spec: SessionSpec,
) -> Result<SessionResult> {
    with_knowledge(net, spec, Scheme::A, |net, events| {
        let (prompt, up) = prompt_loop(scene, net, ctx, spec, Scheme::A, events)?;
        let profile = &net.users[spec.user_index];
        let palette = net.kb_edge.vocab.palette_size;
        let sent_image = render(&up.generated, palette, ctx.cfg.resolution);
        let symbols: Vec<u16> = sent_image.pixels.iter().map(|&p| p as u16).collect();
        let link = TraditionalLink::new(&ctx.pixel_codebook, &ctx.ldpc);
        let out = link.send(
            &symbols,
            symbols.len(),
            spec.channel(DOWNLINK_STREAM),
            Retransmission::Off,
        )?;
        events.push(StepEvent::air(
            spec.session,
            Scheme::A,
            Step::Downlink,
            Direction::Downlink,
            out.air_bits,
            out.channel_bit_errors,
        ));
        // Symbols lost to desynchronisation leave black pixels.
        let mut pixels: Vec<u8> = out.symbols.iter().map(|&s| s as u8).collect();
        pixels.resize(sent_image.pixels.len(), 0);
        let received_image = Image {
            resolution: sent_image.resolution,
            pixels,
        };
        let feedback = feedback(scene, &up.generated, ctx);
        Ok(SessionResult {
            session: spec.session,
            scene_index: spec.scene_index,
            scheme: Scheme::A,
            snr_db: spec.snr_db,
            user_id: profile.user_id,
            uplink_bits: up.air_bits,
            downlink_bits: out.air_bits,
            control_bits: 0,
            uplink_bit_errors: up.bit_errors,
            downlink_bit_errors: out.channel_bit_errors,
            original_scene: scene.clone(),
            sent_scene: up.generated,
            decoded_scene: None,
            received_scene: None,
            sent_image,
            received_image,
            semantic_failure: false,
            feedback_score: feedback,
            prompt: Some(prompt),
            cloud_prompt: Some(up.cloud_prompt),
            knowledge_shared: false,
            events: Vec::new(),
        })
    })
}

/// The original scene crosses two semantic hops, device to edge and edge
/// to receiver, with no generation and no calibration.
pub fn run_session_b(
    scene: &Scene,
    net: &NetworkState,
    ctx: &SessionContext,
    spec: SessionSpec,
) -> Result<SessionResult> {
    with_knowledge(net, spec, Scheme::B, |net, events| {
        let profile = &net.users[spec.user_index];
        let protection = ctx.cfg.select_profile(spec.snr_db);
        events.push(StepEvent::local(
            spec.session,
            Scheme::B,
            Step::SelectEncoder,
            profile_name(protection),
        ));
        let up = jscc_hop(
            scene,
            &net.kb_td,
            &net.kb_edge,
            spec.channel(UPLINK_STREAM),
            protection,
            Direction::Uplink,
            Scheme::B,
        )?;
        events.push(StepEvent::air(
            spec.session,
            Scheme::B,
            Step::Uplink,
            Direction::Uplink,
            up.bits,
            up.bit_errors,
        ));
        let down = jscc_hop(
            &up.decoded,
            &net.kb_edge,
            &net.kb_td,
            spec.channel(DOWNLINK_STREAM),
            protection,
            Direction::Downlink,
            Scheme::B,
        )?;
        events.push(StepEvent::air(
            spec.session,
            Scheme::B,
            Step::Downlink,
            Direction::Downlink,
            down.bits,
            down.bit_errors,
        ));
        let palette = net.kb_td.vocab.palette_size;
        let feedback = feedback(scene, &down.decoded, ctx);
        Ok(SessionResult {
            session: spec.session,
            scene_index: spec.scene_index,
            scheme: Scheme::B,
            snr_db: spec.snr_db,
            user_id: profile.user_id,
            uplink_bits: up.bits,
            downlink_bits: down.bits,
            control_bits: 0,
            uplink_bit_errors: up.bit_errors,
            downlink_bit_errors: down.bit_errors,
            original_scene: scene.clone(),
            sent_scene: scene.clone(),
            sent_image: render(scene, palette, ctx.cfg.resolution),
            received_image: render(&down.decoded, palette, ctx.cfg.resolution),
            decoded_scene: Some(down.decoded.clone()),
            received_scene: Some(down.decoded),
            semantic_failure: up.semantic_failure || down.semantic_failure,
            feedback_score: feedback,
            prompt: None,
            cloud_prompt: None,
            knowledge_shared: false,
            events: Vec::new(),
        })
    })
}

struct PromptUplink {
    cloud_prompt: Prompt,
    generated: Scene,
    air_bits: usize,
    bit_errors: usize,
}

/// Steps shared by A and C: extraction at the device, traditional uplink,
/// generation in the cloud.
fn prompt_loop(
    scene: &Scene,
    net: &NetworkState,
    ctx: &SessionContext,
    spec: SessionSpec,
    scheme: Scheme,
    events: &mut Vec<StepEvent>,
) -> Result<(Prompt, PromptUplink)> {
    let profile = &net.users[spec.user_index];
    let td_vocab = &net.kb_td.vocab;
    td_vocab.check_scene(scene)?;
    let prompt = ctx.local.extract_keywords(scene, profile, ctx.cfg.k);
    prompt.validate(td_vocab)?;
    events.push(StepEvent::local(
        spec.session,
        scheme,
        Step::ExtractPrompt,
        format!("{} keywords", prompt.keywords.len()),
    ));

    let symbols = PromptAlphabet::new(td_vocab).encode(&prompt, td_vocab);
    let codebook = ctx.prompt_codebook_for(td_vocab)?;
    let out = TraditionalLink::new(&codebook, &ctx.ldpc).send(
        &symbols,
        ctx.max_prompt_symbols(),
        spec.channel(UPLINK_STREAM),
        Retransmission::Chase {
            max_attempts: ctx.cfg.uplink_max_attempts,
        },
    )?;
    events.push(StepEvent::air(
        spec.session,
        scheme,
        Step::Uplink,
        Direction::Uplink,
        out.air_bits,
        out.channel_bit_errors,
    ));

    let cloud_vocab = &net.kb_cloud.vocab;
    let cloud_prompt = PromptAlphabet::new(cloud_vocab).decode(&out.symbols, cloud_vocab, ctx.cfg.k);
    let generated = ctx.global.generate_content(
        &cloud_prompt,
        profile,
        &net.kb_cloud,
        derive_seed(spec.seed, &[GENERATION_STREAM]),
    )?;
    events.push(StepEvent::local(
        spec.session,
        scheme,
        Step::Generate,
        format!("{} objects", generated.len()),
    ));
    Ok((
        prompt,
        PromptUplink {
            cloud_prompt,
            generated,
            air_bits: out.air_bits,
            bit_errors: out.channel_bit_errors,
        },
    ))
}

/// Runs `body` against `net`, sharing knowledge first when the replicas
/// disagree, and once more (with a single retry) when `body` reports a
/// knowledge mismatch. Sharing happens on a private copy; the caller
/// applies it to the live state between batches.
fn with_knowledge<F>(
    net: &NetworkState,
    spec: SessionSpec,
    scheme: Scheme,
    body: F,
) -> Result<SessionResult>
where
    F: Fn(&NetworkState, &mut Vec<StepEvent>) -> Result<SessionResult>,
{
    net.require(Stage::Provisioning)?;
    if spec.user_index >= net.users.len() {
        return Err(Error::Config(format!(
            "user index {} out of range for {} users",
            spec.user_index,
            net.users.len()
        )));
    }
    let mut events = Vec::new();
    let mut control_bits = 0;
    let mut shared: Option<NetworkState> = None;
    let share = |events: &mut Vec<StepEvent>, control_bits: &mut usize, shared: &mut Option<NetworkState>| -> Result<()> {
        let mut copy = shared.take().unwrap_or_else(|| net.clone());
        let bits = share_knowledge(&mut copy)?;
        *control_bits += bits;
        events.push(StepEvent::air(
            spec.session,
            scheme,
            Step::KnowledgeShare,
            Direction::Control,
            bits,
            0,
        ));
        *shared = Some(copy);
        Ok(())
    };

    if !net.knowledge_aligned() {
        share(&mut events, &mut control_bits, &mut shared)?;
    }
    let mut attempt_events = Vec::new();
    let mut outcome = body(shared.as_ref().unwrap_or(net), &mut attempt_events);
    if matches!(outcome, Err(Error::KnowledgeMismatch(_))) {
        share(&mut events, &mut control_bits, &mut shared)?;
        attempt_events.clear();
        outcome = body(shared.as_ref().unwrap_or(net), &mut attempt_events);
    }
    let mut result = outcome?;
    events.extend(attempt_events);
    result.control_bits = control_bits;
    result.knowledge_shared = shared.is_some();
    result.events = events;
    Ok(result)
}

fn feedback(original: &Scene, delivered: &Scene, ctx: &SessionContext) -> f64 {
    semantic_similarity(original, delivered, &ctx.embedding).clamp(0.0, 1.0)
}

fn profile_name(p: crate::semantic::ProtectionProfile) -> &'static str {
    if p == crate::semantic::ProtectionProfile::ROBUST {
        "robust"
    } else {
        "standard"
    }
}

fn attribute_changes(before: &Scene, after: &Scene) -> usize {
    before
        .objects
        .iter()
        .zip(&after.objects)
        .map(|(a, b)| (a.color != b.color) as usize + (a.size != b.size) as usize)
        .sum()
}
