//! Structured content domain: vocabularies, scenes of objects and a seeded
//! corpus generator.
//!
//! A [`Scene`] is the semantic-level view of an image. Every object carries a
//! class, a grid position, a size level and a color index; the shared
//! [`Vocabulary`] fixes the legal values of each attribute.

mod render;
mod text;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use render::{render, Image};
pub use text::{parse_corpus, parse_scene, write_corpus, write_scene};

/// Default object classes.
pub const DEFAULT_CLASSES: [&str; 12] = [
    "bear", "tree", "ground", "sky", "person", "car", "dog", "bird", "house", "boat", "flower",
    "rock",
];

/// Shared vocabulary: the legal value sets for every object attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Vocabulary {
    pub class_labels: Vec<String>,
    /// Number of entries in the color palette. Color `i` maps to luminance
    /// step `i` of an evenly spaced ladder from 0 to 255.
    pub palette_size: u8,
    /// Allowed object sizes in grid cells, ascending.
    pub size_levels: Vec<u8>,
    /// Canvas (height, width) in grid cells.
    pub canvas: (u8, u8),
    pub version: u32,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            class_labels: DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect(),
            palette_size: 8,
            size_levels: vec![1, 2, 3, 4],
            canvas: (16, 16),
            version: 1,
        }
    }
}

impl Vocabulary {
    pub fn validate(&self) -> Result<()> {
        if self.class_labels.is_empty() {
            return Err(Error::Config("vocabulary has no classes".into()));
        }
        let unique: BTreeSet<_> = self.class_labels.iter().collect();
        if unique.len() != self.class_labels.len() {
            return Err(Error::Config("duplicate class label".into()));
        }
        if self
            .class_labels
            .iter()
            .any(|l| l.is_empty() || l.chars().any(char::is_whitespace))
        {
            return Err(Error::Config("class labels must be non-empty words".into()));
        }
        if self.palette_size == 0 {
            return Err(Error::Config("empty color palette".into()));
        }
        if self.size_levels.is_empty() || self.size_levels.contains(&0) {
            return Err(Error::Config("size levels must be non-empty and positive".into()));
        }
        if self.size_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("size levels must be strictly ascending".into()));
        }
        let (h, w) = self.canvas;
        let largest = *self.size_levels.last().unwrap();
        if h == 0 || w == 0 || largest > h || largest > w {
            return Err(Error::Config(format!(
                "canvas {h}x{w} cannot hold size {largest}"
            )));
        }
        if self.version == 0 {
            return Err(Error::Config("vocabulary version must be >= 1".into()));
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.class_labels.len()
    }

    pub fn class_id(&self, label: &str) -> Option<u16> {
        self.class_labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as u16)
    }

    /// Index of `size` in the size ladder.
    pub fn size_index(&self, size: u8) -> Option<usize> {
        self.size_levels.iter().position(|&s| s == size)
    }

    /// Number of grid cells; the generator never places more objects.
    pub fn capacity(&self) -> usize {
        self.canvas.0 as usize * self.canvas.1 as usize
    }

    /// Checks a single object against the attribute domains and canvas.
    pub fn check_object(&self, obj: &SceneObject) -> Result<()> {
        if obj.class_id as usize >= self.class_count() {
            return Err(Error::KnowledgeMismatch(format!(
                "class {} outside vocabulary v{} ({} classes)",
                obj.class_id,
                self.version,
                self.class_count()
            )));
        }
        if obj.color >= self.palette_size {
            return Err(Error::KnowledgeMismatch(format!(
                "color {} outside palette of {}",
                obj.color, self.palette_size
            )));
        }
        if self.size_index(obj.size).is_none() {
            return Err(Error::KnowledgeMismatch(format!(
                "size {} not a size level",
                obj.size
            )));
        }
        let (h, w) = self.canvas;
        if obj.row as u16 + obj.size as u16 > h as u16 || obj.col as u16 + obj.size as u16 > w as u16
        {
            return Err(Error::KnowledgeMismatch(format!(
                "object {} at ({}, {}) size {} leaves the {h}x{w} canvas",
                obj.id, obj.row, obj.col, obj.size
            )));
        }
        Ok(())
    }

    /// Checks every scene invariant against this vocabulary.
    pub fn check_scene(&self, scene: &Scene) -> Result<()> {
        if scene.canvas != self.canvas {
            return Err(Error::KnowledgeMismatch(format!(
                "scene canvas {:?} differs from vocabulary canvas {:?}",
                scene.canvas, self.canvas
            )));
        }
        if scene.background >= self.palette_size {
            return Err(Error::KnowledgeMismatch(format!(
                "background color {} outside palette",
                scene.background
            )));
        }
        let mut ids = BTreeSet::new();
        for obj in &scene.objects {
            if !ids.insert(obj.id) {
                return Err(Error::Config(format!("duplicate object id {}", obj.id)));
            }
            self.check_object(obj)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    pub class_id: u16,
    pub row: u8,
    pub col: u8,
    /// Edge length in grid cells; one of the vocabulary size levels.
    pub size: u8,
    pub color: u8,
}

impl SceneObject {
    /// Area covered on the grid.
    pub fn area(&self) -> u32 {
        self.size as u32 * self.size as u32
    }

    /// Keyword salience: size times the covered-area proxy.
    pub fn salience(&self) -> u32 {
        self.size as u32 * self.area()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scene {
    /// (height, width) in grid cells.
    pub canvas: (u8, u8),
    pub background: u8,
    pub objects: Vec<SceneObject>,
}

impl Scene {
    pub fn empty(canvas: (u8, u8), background: u8) -> Self {
        Scene {
            canvas,
            background,
            objects: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Objects in ascending id order.
    pub fn objects_by_id(&self) -> Vec<SceneObject> {
        let mut objs = self.objects.clone();
        objs.sort_by_key(|o| o.id);
        objs
    }

    /// Distinct classes present in the scene.
    pub fn class_set(&self) -> BTreeSet<u16> {
        self.objects.iter().map(|o| o.class_id).collect()
    }
}

/// Class multiset of a scene, one entry per object.
pub fn scene_object_multiset(scene: &Scene) -> BTreeMap<u16, usize> {
    let mut counts = BTreeMap::new();
    for obj in &scene.objects {
        *counts.entry(obj.class_id).or_insert(0) += 1;
    }
    counts
}

/// Generates a random scene with exactly `object_count` objects.
///
/// Objects occupy pairwise distinct anchor cells, so no two share a
/// (class, position) pair. Ids run from 0 in list order.
pub fn generate_scene(seed: u64, object_count: usize, vocab: &Vocabulary) -> Result<Scene> {
    vocab.validate()?;
    let capacity = vocab.capacity();
    if object_count > capacity {
        return Err(Error::Capacity {
            requested: object_count,
            capacity,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = vocab.canvas;
    let background = rng.random_range(0..vocab.palette_size);
    let mut used = vec![false; capacity];
    let mut objects = Vec::with_capacity(object_count);
    for id in 0..object_count {
        let class_id = rng.random_range(0..vocab.class_count()) as u16;
        let mut size = vocab.size_levels[rng.random_range(0..vocab.size_levels.len())];
        let color = rng.random_range(0..vocab.palette_size);

        let anchor = loop {
            let free: Vec<usize> = (0..capacity)
                .filter(|&cell| {
                    let (r, c) = (cell / w as usize, cell % w as usize);
                    !used[cell] && r + size as usize <= h as usize && c + size as usize <= w as usize
                })
                .collect();
            if !free.is_empty() {
                break free[rng.random_range(0..free.len())];
            }
            // Every free cell holds the smallest size.
            size = vocab.size_levels[0];
        };
        used[anchor] = true;
        objects.push(SceneObject {
            id: id as u32,
            class_id,
            row: (anchor / w as usize) as u8,
            col: (anchor % w as usize) as u8,
            size,
            color,
        });
    }
    Ok(Scene {
        canvas: vocab.canvas,
        background,
        objects,
    })
}
