//! Local and global generative-model interfaces with deterministic
//! reference implementations.
//!
//! The terminal device runs a [`LocalModel`] for keyword extraction and
//! receiver-side calibration; the cloud runs a [`GlobalModel`] that turns a
//! prompt back into content. Both are plain traits over serializable values,
//! so an external model service can replace the reference implementations.

mod prompt;

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Scene, SceneObject, Vocabulary};

pub use prompt::{
    identify_goal, Goal, KeywordToken, Prompt, PromptAlphabet, Quadrant, ServiceKind,
};

/// A (color, size) pair; `size` is a size level value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attributes {
    pub color: u8,
    pub size: u8,
}

/// Shared background knowledge: vocabulary plus per-class attribute priors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub vocab: Vocabulary,
    /// Most likely attributes per class, indexed by class id.
    pub priors: Vec<Attributes>,
    /// Background color for generated content.
    pub default_background: u8,
    pub version: u32,
}

impl KnowledgeBase {
    /// Knowledge base with seeded priors.
    pub fn seeded(vocab: Vocabulary, seed: u64) -> Result<Self> {
        vocab.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let priors = (0..vocab.class_count())
            .map(|_| random_attributes(&vocab, &mut rng))
            .collect();
        let default_background = rng.random_range(0..vocab.palette_size);
        let version = vocab.version;
        Ok(KnowledgeBase {
            vocab,
            priors,
            default_background,
            version,
        })
    }

    pub fn prior(&self, class_id: u16) -> Option<Attributes> {
        self.priors.get(class_id as usize).copied()
    }

    pub fn validate(&self) -> Result<()> {
        self.vocab.validate()?;
        if self.priors.len() != self.vocab.class_count() {
            return Err(Error::Config("one prior per class required".into()));
        }
        for a in &self.priors {
            if a.color >= self.vocab.palette_size || self.vocab.size_index(a.size).is_none() {
                return Err(Error::Config(format!("prior {a:?} outside vocabulary")));
            }
        }
        Ok(())
    }

    /// Replaces the vocabulary with a newer revision, extending priors for
    /// any added classes, and bumps the knowledge version.
    pub fn publish(&mut self, vocab: Vocabulary, seed: u64) -> Result<()> {
        vocab.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.priors.truncate(vocab.class_count());
        while self.priors.len() < vocab.class_count() {
            self.priors.push(random_attributes(&vocab, &mut rng));
        }
        self.version = self.version.max(vocab.version).max(self.version + 1);
        self.vocab = vocab;
        Ok(())
    }
}

fn random_attributes(vocab: &Vocabulary, rng: &mut ChaCha8Rng) -> Attributes {
    Attributes {
        color: rng.random_range(0..vocab.palette_size),
        size: vocab.size_levels[rng.random_range(0..vocab.size_levels.len())],
    }
}

/// Per-user branch profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: u32,
    pub service: ServiceKind,
    pub preferences: BTreeMap<u16, Attributes>,
    pub history: VecDeque<Prompt>,
    pub history_capacity: usize,
    pub feedback_scores: Vec<f64>,
}

impl UserProfile {
    pub fn new(user_id: u32, history_capacity: usize) -> Self {
        UserProfile {
            user_id,
            service: ServiceKind::ImageDelivery,
            preferences: BTreeMap::new(),
            history: VecDeque::with_capacity(history_capacity),
            history_capacity,
            feedback_scores: Vec::new(),
        }
    }

    /// Profile with preferences for a seeded subset of classes.
    pub fn seeded(user_id: u32, vocab: &Vocabulary, seed: u64, history_capacity: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::new(user_id, history_capacity);
        for class_id in 0..vocab.class_count() as u16 {
            if rng.random_ratio(1, 3) {
                p.preferences
                    .insert(class_id, random_attributes(vocab, &mut rng));
            }
        }
        p
    }

    pub fn preference(&self, class_id: u16) -> Option<Attributes> {
        self.preferences.get(&class_id).copied()
    }

    /// Appends to the bounded history ring, evicting the oldest prompt.
    pub fn remember(&mut self, prompt: Prompt) {
        if self.history_capacity == 0 {
            return;
        }
        while self.history.len() >= self.history_capacity {
            self.history.pop_front();
        }
        self.history.push_back(prompt);
    }
}

/// Terminal-device model: keyword extraction and semantic calibration.
pub trait LocalModel: Send + Sync {
    fn extract_keywords(&self, scene: &Scene, profile: &UserProfile, k: usize) -> Prompt;
    fn calibrate(&self, decoded: &Scene, kb: &KnowledgeBase, profile: &UserProfile) -> Scene;
}

/// Cloud model: prompt-conditioned content generation.
pub trait GlobalModel: Send + Sync {
    fn generate_content(
        &self,
        prompt: &Prompt,
        profile: &UserProfile,
        kb: &KnowledgeBase,
        seed: u64,
    ) -> Result<Scene>;
}

/// Salience-ranking extractor and prior-projection calibrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceLocalModel {
    /// Ladder steps an attribute may drift from the prior before it is
    /// replaced.
    pub calibration_tolerance: u8,
}

impl Default for ReferenceLocalModel {
    fn default() -> Self {
        ReferenceLocalModel {
            calibration_tolerance: 1,
        }
    }
}

impl LocalModel for ReferenceLocalModel {
    fn extract_keywords(&self, scene: &Scene, profile: &UserProfile, k: usize) -> Prompt {
        extract_keywords(scene, profile, k)
    }

    fn calibrate(&self, decoded: &Scene, kb: &KnowledgeBase, profile: &UserProfile) -> Scene {
        calibrate_with_tolerance(decoded, kb, profile, self.calibration_tolerance)
    }
}

/// Places one object per keyword near its quadrant centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceGlobalModel {
    /// Maximum positional jitter in grid cells.
    pub jitter: u8,
}

impl Default for ReferenceGlobalModel {
    fn default() -> Self {
        ReferenceGlobalModel { jitter: 1 }
    }
}

impl GlobalModel for ReferenceGlobalModel {
    fn generate_content(
        &self,
        prompt: &Prompt,
        profile: &UserProfile,
        kb: &KnowledgeBase,
        seed: u64,
    ) -> Result<Scene> {
        generate_content_with_jitter(prompt, profile, kb, seed, self.jitter)
    }
}

/// Top-`k` classes by summed salience, ties to the lower class id.
///
/// Each keyword carries the quadrant of the largest instance of its class
/// (ties to the lower object id). The goal follows the profile's service.
pub fn extract_keywords(scene: &Scene, profile: &UserProfile, k: usize) -> Prompt {
    let goal = identify_goal(profile.service.name()).expect("service kinds map to goals");
    let mut salience: BTreeMap<u16, u32> = BTreeMap::new();
    let mut largest: BTreeMap<u16, SceneObject> = BTreeMap::new();
    for obj in scene.objects_by_id() {
        *salience.entry(obj.class_id).or_insert(0) += obj.salience();
        largest
            .entry(obj.class_id)
            .and_modify(|cur| {
                if obj.size > cur.size {
                    *cur = obj;
                }
            })
            .or_insert(obj);
    }
    let mut ranked: Vec<(u16, u32)> = salience.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let keywords = ranked
        .into_iter()
        .take(k)
        .map(|(class_id, _)| {
            let o = largest[&class_id];
            KeywordToken {
                class_id,
                quadrant: Some(Quadrant::of(o.row, o.col, o.size, scene.canvas)),
                size: None,
            }
        })
        .collect();
    Prompt { goal, keywords, k }
}

/// Reference generation with one cell of jitter.
pub fn generate_content(
    prompt: &Prompt,
    profile: &UserProfile,
    kb: &KnowledgeBase,
    seed: u64,
) -> Result<Scene> {
    generate_content_with_jitter(prompt, profile, kb, seed, 1)
}

/// One object per keyword. Attributes come from the profile preference,
/// else the keyword's size with the prior color, else the prior. Positions
/// centre on the keyword quadrant (canvas centre when absent), shifted by a
/// seeded jitter of at most `jitter` cells per axis and clamped to the
/// canvas.
pub fn generate_content_with_jitter(
    prompt: &Prompt,
    profile: &UserProfile,
    kb: &KnowledgeBase,
    seed: u64,
    jitter: u8,
) -> Result<Scene> {
    prompt.validate(&kb.vocab)?;
    let (h, w) = kb.vocab.canvas;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = jitter as i32;
    let objects = prompt
        .keywords
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let prior = kb.prior(t.class_id).ok_or_else(|| {
                Error::KnowledgeMismatch(format!("no prior for class {}", t.class_id))
            })?;
            let attrs = profile.preference(t.class_id).unwrap_or(Attributes {
                color: prior.color,
                size: t.size.unwrap_or(prior.size),
            });
            // Doubled coordinates of the target centre.
            let (cr2, cc2) = match t.quadrant {
                Some(q) => (
                    if q.is_north() { h as i32 / 2 } else { 3 * h as i32 / 2 },
                    if q.is_west() { w as i32 / 2 } else { 3 * w as i32 / 2 },
                ),
                None => (h as i32, w as i32),
            };
            let size = attrs.size as i32;
            let dr = rng.random_range(-j..=j);
            let dc = rng.random_range(-j..=j);
            let row = ((cr2 - size).div_euclid(2) + dr).clamp(0, h as i32 - size);
            let col = ((cc2 - size).div_euclid(2) + dc).clamp(0, w as i32 - size);
            Ok(SceneObject {
                id: i as u32,
                class_id: t.class_id,
                row: row as u8,
                col: col as u8,
                size: attrs.size,
                color: attrs.color,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scene = Scene {
        canvas: kb.vocab.canvas,
        background: kb.default_background,
        objects,
    };
    kb.vocab.check_scene(&scene)?;
    Ok(scene)
}

/// Calibration with a one-step tolerance.
pub fn calibrate(decoded: &Scene, kb: &KnowledgeBase, profile: &UserProfile) -> Scene {
    calibrate_with_tolerance(decoded, kb, profile, 1)
}

/// Pulls drifted attributes back to knowledge.
///
/// A color or size more than `tolerance` ladder steps from the class prior
/// is replaced by the profile preference, or by the prior when the user has
/// none. A size replacement that would push the object off the canvas is
/// skipped. Classes and positions are never touched.
pub fn calibrate_with_tolerance(
    decoded: &Scene,
    kb: &KnowledgeBase,
    profile: &UserProfile,
    tolerance: u8,
) -> Scene {
    let vocab = &kb.vocab;
    let mut out = decoded.clone();
    for obj in &mut out.objects {
        let Some(prior) = kb.prior(obj.class_id) else {
            continue;
        };
        let target = profile.preference(obj.class_id).unwrap_or(prior);
        if obj.color.abs_diff(prior.color) > tolerance {
            obj.color = target.color;
        }
        let (Some(cur), Some(pri)) = (vocab.size_index(obj.size), vocab.size_index(prior.size))
        else {
            continue;
        };
        if cur.abs_diff(pri) > tolerance as usize {
            let fits = obj.row as u16 + target.size as u16 <= out.canvas.0 as u16
                && obj.col as u16 + target.size as u16 <= out.canvas.1 as u16;
            if fits {
                obj.size = target.size;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_scene, scene_object_multiset};

    fn kb() -> KnowledgeBase {
        KnowledgeBase::seeded(Vocabulary::default(), 17).unwrap()
    }

    fn obj(id: u32, class_id: u16, row: u8, col: u8, size: u8) -> SceneObject {
        SceneObject {
            id,
            class_id,
            row,
            col,
            size,
            color: 0,
        }
    }

    #[test]
    fn empty_scene_gives_goal_only() {
        let p = extract_keywords(&Scene::empty((16, 16), 0), &UserProfile::new(0, 4), 3);
        assert_eq!(p.goal, Goal::DeliverImage);
        assert!(p.keywords.is_empty());
    }

    #[test]
    fn single_object_is_extracted() {
        let s = Scene {
            canvas: (16, 16),
            background: 0,
            objects: vec![obj(0, 5, 10, 1, 2)],
        };
        let p = extract_keywords(&s, &UserProfile::new(0, 4), 1);
        assert_eq!(p.keywords.len(), 1);
        assert_eq!(p.keywords[0].class_id, 5);
        assert_eq!(p.keywords[0].quadrant, Some(Quadrant::SW));
    }

    #[test]
    fn salience_sums_per_class_and_ties_prefer_low_ids() {
        // class 3: 2^3 + 2^3 = 16; class 1: 2^3 = 8; class 0: 8; class 7: 3^3 = 27.
        let s = Scene {
            canvas: (16, 16),
            background: 0,
            objects: vec![
                obj(0, 3, 0, 0, 2),
                obj(1, 3, 4, 4, 2),
                obj(2, 1, 8, 8, 2),
                obj(3, 0, 12, 0, 2),
                obj(4, 7, 12, 12, 3),
            ],
        };
        let p = extract_keywords(&s, &UserProfile::new(0, 4), 3);
        let classes: Vec<u16> = p.keywords.iter().map(|t| t.class_id).collect();
        assert_eq!(classes, vec![7, 3, 0]);
    }

    #[test]
    fn profile_preference_wins_over_prior() {
        let kb = kb();
        let bear = kb.vocab.class_id("bear").unwrap();
        let mut profile = UserProfile::new(1, 4);
        let pref = Attributes { color: 0, size: 4 };
        profile.preferences.insert(bear, pref);
        let prompt = Prompt {
            goal: Goal::DeliverImage,
            keywords: vec![KeywordToken {
                class_id: bear,
                quadrant: Some(Quadrant::NE),
                size: None,
            }],
            k: 3,
        };
        let s = generate_content(&prompt, &profile, &kb, 9).unwrap();
        assert_eq!(s.objects.len(), 1);
        assert_eq!((s.objects[0].color, s.objects[0].size), (0, 4));
        assert_eq!(
            Quadrant::of(s.objects[0].row, s.objects[0].col, 4, s.canvas),
            Quadrant::NE
        );
    }

    #[test]
    fn empty_prompt_generates_empty_scene() {
        let prompt = Prompt {
            goal: Goal::DeliverImage,
            keywords: vec![],
            k: 3,
        };
        let s = generate_content(&prompt, &UserProfile::new(0, 4), &kb(), 1).unwrap();
        assert!(s.objects.is_empty());
    }

    #[test]
    fn seeds_change_positions_not_classes() {
        let kb = kb();
        let scene = generate_scene(3, 8, &kb.vocab).unwrap();
        let profile = UserProfile::new(0, 4);
        let prompt = extract_keywords(&scene, &profile, 4);
        let a = generate_content(&prompt, &profile, &kb, 1).unwrap();
        let b = generate_content(&prompt, &profile, &kb, 2).unwrap();
        assert_eq!(scene_object_multiset(&a), scene_object_multiset(&b));
        let positions = |s: &Scene| s.objects.iter().map(|o| (o.row, o.col)).collect::<Vec<_>>();
        let differ = (1..20u64).any(|seed| {
            positions(&generate_content(&prompt, &profile, &kb, seed).unwrap()) != positions(&a)
        });
        assert!(differ);
    }

    #[test]
    fn unknown_class_is_a_knowledge_mismatch() {
        let prompt = Prompt {
            goal: Goal::DeliverImage,
            keywords: vec![KeywordToken {
                class_id: 40,
                quadrant: None,
                size: None,
            }],
            k: 1,
        };
        assert!(matches!(
            generate_content(&prompt, &UserProfile::new(0, 4), &kb(), 0),
            Err(Error::KnowledgeMismatch(_))
        ));
    }

    #[test]
    fn calibration_fixes_far_colors_only() {
        let kb = kb();
        let profile = UserProfile::new(0, 4);
        let class_id = (0..12u16)
            .find(|&c| kb.prior(c).unwrap().color <= 3)
            .unwrap();
        let prior = kb.prior(class_id).unwrap();
        let mut s = Scene {
            canvas: (16, 16),
            background: 0,
            objects: vec![SceneObject {
                id: 0,
                class_id,
                row: 0,
                col: 0,
                size: prior.size,
                color: prior.color,
            }],
        };
        assert_eq!(calibrate(&s, &kb, &profile), s);
        s.objects[0].color = prior.color + 4;
        let c = calibrate(&s, &kb, &profile);
        assert_eq!(c.objects[0].color, prior.color);
        s.objects[0].color = prior.color + 1;
        assert_eq!(calibrate(&s, &kb, &profile).objects[0].color, prior.color + 1);
    }

    #[test]
    fn history_is_bounded() {
        let mut p = UserProfile::new(0, 2);
        for k in 1..=5 {
            p.remember(Prompt {
                goal: Goal::DeliverImage,
                keywords: vec![],
                k,
            });
        }
        assert_eq!(p.history.len(), 2);
        assert_eq!(p.history[0].k, 4);
    }

    #[test]
    fn publish_bumps_version_and_extends_priors() {
        let mut kb = kb();
        let mut v = kb.vocab.clone();
        v.class_labels.push("horse".into());
        v.version = 2;
        kb.publish(v, 5).unwrap();
        assert_eq!(kb.version, 2);
        assert_eq!(kb.priors.len(), 13);
        kb.validate().unwrap();
    }
}
