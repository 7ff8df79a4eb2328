//! Knowledge-assisted semantic codec.
//!
//! A scene becomes a header plus one fixed-layout record per object. Field
//! widths follow the vocabulary domain sizes, and every field is repeated
//! according to a [`ProtectionProfile`]. The decoder takes a per-bit
//! majority over the copies and then projects each field onto the nearest
//! value the shared knowledge allows (Hamming distance on the field bits,
//! ties to the lowest value). It always returns a structurally valid scene.
//!
//! Frame layout:
//!
//! ```text
//! header  = (count | version | background) x header_rep
//! record  = class x class_rep | (row | col | size | color) x attr_rep
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gai::KnowledgeBase;
use crate::phy::frame::{bits_for, push_bits, read_bits};
use crate::phy::{AwgnChannel, BitFrame, ChannelConfig, Direction, Scheme};
use crate::scene::{Scene, SceneObject, Vocabulary};

/// Width of the knowledge-version field; versions are sent modulo 2^8.
pub const VERSION_WIDTH: usize = 8;

/// Repetition factors per field group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProtectionProfile {
    pub header: usize,
    pub class: usize,
    pub attributes: usize,
}

impl ProtectionProfile {
    /// Class labels x3, header x5, cosmetic attributes unprotected.
    pub const STANDARD: ProtectionProfile = ProtectionProfile {
        header: 5,
        class: 3,
        attributes: 1,
    };

    /// Low-SNR encoder: attributes get the same x3 protection as classes.
    pub const ROBUST: ProtectionProfile = ProtectionProfile {
        header: 5,
        class: 3,
        attributes: 3,
    };
}

impl Default for ProtectionProfile {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// Field widths for a vocabulary and protection profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub class_width: usize,
    pub row_width: usize,
    pub col_width: usize,
    pub size_width: usize,
    pub color_width: usize,
    pub count_width: usize,
    pub background_width: usize,
    pub profile: ProtectionProfile,
}

impl FrameLayout {
    pub fn new(vocab: &Vocabulary, profile: ProtectionProfile) -> Self {
        FrameLayout {
            class_width: bits_for(vocab.class_count()),
            row_width: bits_for(vocab.canvas.0 as usize),
            col_width: bits_for(vocab.canvas.1 as usize),
            size_width: bits_for(vocab.size_levels.len()),
            color_width: bits_for(vocab.palette_size as usize),
            count_width: bits_for(vocab.capacity() + 1),
            background_width: bits_for(vocab.palette_size as usize),
            profile,
        }
    }

    fn attribute_width(&self) -> usize {
        self.row_width + self.col_width + self.size_width + self.color_width
    }

    pub fn header_width(&self) -> usize {
        (self.count_width + VERSION_WIDTH + self.background_width) * self.profile.header
    }

    pub fn record_width(&self) -> usize {
        self.class_width * self.profile.class + self.attribute_width() * self.profile.attributes
    }

    pub fn frame_width(&self, objects: usize) -> usize {
        self.header_width() + objects * self.record_width()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameHeader {
    pub object_count: usize,
    pub version: u32,
    pub background: u8,
}

/// One object as field values. `size_index` indexes the size ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticRecord {
    pub class: u16,
    pub row: u8,
    pub col: u8,
    pub size_index: u8,
    pub color: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticFrame {
    pub header: FrameHeader,
    pub records: Vec<SemanticRecord>,
    pub layout: FrameLayout,
}

impl SemanticFrame {
    pub fn bit_len(&self) -> usize {
        self.layout.frame_width(self.records.len())
    }

    pub fn to_bits(&self) -> Vec<bool> {
        let l = &self.layout;
        let mut out = Vec::with_capacity(self.bit_len());
        for _ in 0..l.profile.header {
            push_bits(&mut out, self.header.object_count as u64, l.count_width);
            push_bits(&mut out, (self.header.version & 0xff) as u64, VERSION_WIDTH);
            push_bits(&mut out, self.header.background as u64, l.background_width);
        }
        for r in &self.records {
            for _ in 0..l.profile.class {
                push_bits(&mut out, r.class as u64, l.class_width);
            }
            for _ in 0..l.profile.attributes {
                push_bits(&mut out, r.row as u64, l.row_width);
                push_bits(&mut out, r.col as u64, l.col_width);
                push_bits(&mut out, r.size_index as u64, l.size_width);
                push_bits(&mut out, r.color as u64, l.color_width);
            }
        }
        out
    }

    /// Debug dump: the header line, then one line per record, as hex.
    pub fn hex_dump(&self) -> String {
        let bits = self.to_bits();
        let (hw, rw) = (self.layout.header_width(), self.layout.record_width());
        let mut out = String::new();
        let mut line = |chunk: &[bool]| {
            for nibble in chunk.chunks(4) {
                let v = read_bits(nibble) << (4 - nibble.len());
                let _ = write!(out, "{v:x}");
            }
            out.push('\n');
        };
        line(&bits[..hw]);
        for rec in bits[hw..].chunks(rw) {
            line(rec);
        }
        out
    }
}

/// Encodes with the standard protection profile.
pub fn semantic_encode(scene: &Scene, kb: &KnowledgeBase) -> Result<SemanticFrame> {
    semantic_encode_with(scene, kb, ProtectionProfile::STANDARD)
}

/// Encodes `scene` against `kb`. Records follow ascending object id.
///
/// Fails with a knowledge mismatch when any attribute lies outside the
/// vocabulary.
pub fn semantic_encode_with(
    scene: &Scene,
    kb: &KnowledgeBase,
    profile: ProtectionProfile,
) -> Result<SemanticFrame> {
    kb.vocab.check_scene(scene)?;
    let records = scene
        .objects_by_id()
        .iter()
        .map(|o| SemanticRecord {
            class: o.class_id,
            row: o.row,
            col: o.col,
            size_index: kb.vocab.size_index(o.size).expect("checked") as u8,
            color: o.color,
        })
        .collect();
    Ok(SemanticFrame {
        header: FrameHeader {
            object_count: scene.objects.len(),
            version: kb.version,
            background: scene.background,
        },
        records,
        layout: FrameLayout::new(&kb.vocab, profile),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticDecode {
    pub scene: Scene,
    /// Header unrecoverable or knowledge version mismatch; `scene` is empty.
    pub semantic_failure: bool,
}

/// Decodes with the standard protection profile.
pub fn semantic_decode(bits: &[bool], kb: &KnowledgeBase) -> SemanticDecode {
    semantic_decode_with(bits, kb, ProtectionProfile::STANDARD)
}

pub fn semantic_decode_with(
    bits: &[bool],
    kb: &KnowledgeBase,
    profile: ProtectionProfile,
) -> SemanticDecode {
    decode_inner(bits, kb, profile, true)
}

/// Ablation decoder: majority vote only, no vocabulary projection. The
/// returned scene may violate vocabulary invariants.
pub fn semantic_decode_unprojected(
    bits: &[bool],
    kb: &KnowledgeBase,
    profile: ProtectionProfile,
) -> SemanticDecode {
    decode_inner(bits, kb, profile, false)
}

/// Reads `reps` consecutive copies of a `width`-bit field and takes a
/// per-bit majority (ties resolve to 0).
struct FieldReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl FieldReader<'_> {
    fn vote(&mut self, width: usize, reps: usize) -> u64 {
        let mut ones = vec![0usize; width];
        for _ in 0..reps {
            for (i, one) in ones.iter_mut().enumerate() {
                *one += self.bits[self.pos + i] as usize;
            }
            self.pos += width;
        }
        ones.iter()
            .fold(0, |acc, &n| (acc << 1) | (2 * n > reps) as u64)
    }
}

/// Nearest value in `0..limit` by Hamming distance, ties to the lowest.
pub fn project(value: u64, limit: u64) -> u64 {
    project_range(value, 0, limit)
}

fn project_range(value: u64, lo: u64, hi: u64) -> u64 {
    if (lo..hi).contains(&value) || lo >= hi {
        return value.clamp(lo, hi.saturating_sub(1).max(lo));
    }
    (lo..hi)
        .min_by_key(|&c| ((c ^ value).count_ones(), c))
        .expect("non-empty range")
}

fn decode_inner(bits: &[bool], kb: &KnowledgeBase, profile: ProtectionProfile, projected: bool) -> SemanticDecode {
    let vocab = &kb.vocab;
    let layout = FrameLayout::new(vocab, profile);
    let failure = |background: u8| SemanticDecode {
        scene: Scene::empty(vocab.canvas, background),
        semantic_failure: true,
    };
    let hw = layout.header_width();
    let rw = layout.record_width();
    if bits.len() < hw || !(bits.len() - hw).is_multiple_of(rw) {
        return failure(kb.default_background);
    }
    let implied = (bits.len() - hw) / rw;

    let mut r = FieldReader { bits, pos: 0 };
    // Header copies are whole (count | version | background) groups.
    let header_field = layout.count_width + VERSION_WIDTH + layout.background_width;
    let header = r.vote(header_field, profile.header);
    let bg_mask = (1u64 << layout.background_width) - 1;
    let background_raw = header & bg_mask;
    let version = (header >> layout.background_width) & 0xff;
    let count = header >> (layout.background_width + VERSION_WIDTH);
    let background = if projected {
        project(background_raw, vocab.palette_size as u64) as u8
    } else {
        background_raw as u8
    };
    if count as usize != implied || version != (kb.version & 0xff) as u64 {
        return failure(background);
    }

    let mut objects = Vec::with_capacity(implied);
    for id in 0..implied {
        let class = r.vote(layout.class_width, profile.class);
        let attrs = r.vote(layout.attribute_width(), profile.attributes);
        let color = attrs & ((1 << layout.color_width) - 1);
        let attrs = attrs >> layout.color_width;
        let size_idx = attrs & ((1 << layout.size_width) - 1);
        let attrs = attrs >> layout.size_width;
        let col = attrs & ((1 << layout.col_width) - 1);
        let row = attrs >> layout.col_width;

        let obj = if projected {
            let size_idx = project(size_idx, vocab.size_levels.len() as u64);
            let size = vocab.size_levels[size_idx as usize];
            SceneObject {
                id: id as u32,
                class_id: project(class, vocab.class_count() as u64) as u16,
                row: project(row, vocab.canvas.0 as u64 - size as u64 + 1) as u8,
                col: project(col, vocab.canvas.1 as u64 - size as u64 + 1) as u8,
                size,
                color: project(color, vocab.palette_size as u64) as u8,
            }
        } else {
            SceneObject {
                id: id as u32,
                class_id: class as u16,
                row: row as u8,
                col: col as u8,
                size: vocab.size_levels.get(size_idx as usize).copied().unwrap_or(0),
                color: color as u8,
            }
        };
        objects.push(obj);
    }
    SemanticDecode {
        scene: Scene {
            canvas: vocab.canvas,
            background,
            objects,
        },
        semantic_failure: false,
    }
}

/// Outcome of one semantic hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JsccOutcome {
    pub decoded: Scene,
    /// Bits on air for this hop.
    pub bits: usize,
    pub bit_errors: usize,
    pub semantic_failure: bool,
}

/// encode -> AWGN -> decode with the standard profile and one shared
/// knowledge base.
pub fn jscc_session(scene: &Scene, kb: &KnowledgeBase, cfg: ChannelConfig) -> Result<JsccOutcome> {
    jscc_hop(
        scene,
        kb,
        kb,
        cfg,
        ProtectionProfile::STANDARD,
        Direction::Downlink,
        Scheme::C,
    )
}

/// One semantic hop between endpoints that may hold different knowledge.
pub fn jscc_hop(
    scene: &Scene,
    encoder_kb: &KnowledgeBase,
    decoder_kb: &KnowledgeBase,
    cfg: ChannelConfig,
    profile: ProtectionProfile,
    direction: Direction,
    scheme: Scheme,
) -> Result<JsccOutcome> {
    let frame = semantic_encode_with(scene, encoder_kb, profile)?;
    let sent = BitFrame::new(frame.to_bits(), direction, scheme, "semantic-frame");
    let tx = AwgnChannel::new(cfg).send(&sent);
    let decoded = semantic_decode_with(&tx.received.bits, decoder_kb, profile);
    Ok(JsccOutcome {
        decoded: decoded.scene,
        bits: sent.len(),
        bit_errors: tx.bit_errors,
        semantic_failure: decoded.semantic_failure,
    })
}
