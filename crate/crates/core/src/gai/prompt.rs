//! Prompts and their symbol serialization for the uplink.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::Vocabulary;

/// Goal vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Goal {
    DeliverImage,
    DeliverSummary,
}

impl Goal {
    pub const ALL: [Goal; 2] = [Goal::DeliverImage, Goal::DeliverSummary];

    pub fn token(self) -> u16 {
        self as u16
    }
}

/// Kinds of service a user can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ServiceKind {
    ImageDelivery,
    SummaryDelivery,
}

/// Maps a service kind name to its goal token.
pub fn identify_goal(service_kind: &str) -> Result<Goal> {
    match service_kind {
        "image-delivery" => Ok(Goal::DeliverImage),
        "summary-delivery" => Ok(Goal::DeliverSummary),
        other => Err(Error::Config(format!("unknown service kind `{other}`"))),
    }
}

impl ServiceKind {
    pub fn name(self) -> &'static str {
        match self {
            ServiceKind::ImageDelivery => "image-delivery",
            ServiceKind::SummaryDelivery => "summary-delivery",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    NW,
    NE,
    SW,
    SE,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::NW, Quadrant::NE, Quadrant::SW, Quadrant::SE];

    /// Quadrant containing the centre of an object.
    pub fn of(row: u8, col: u8, size: u8, canvas: (u8, u8)) -> Quadrant {
        let north = 2 * row as u16 + (size as u16) < canvas.0 as u16;
        let west = 2 * col as u16 + (size as u16) < canvas.1 as u16;
        match (north, west) {
            (true, true) => Quadrant::NW,
            (true, false) => Quadrant::NE,
            (false, true) => Quadrant::SW,
            (false, false) => Quadrant::SE,
        }
    }

    pub fn is_north(self) -> bool {
        matches!(self, Quadrant::NW | Quadrant::NE)
    }

    pub fn is_west(self) -> bool {
        matches!(self, Quadrant::NW | Quadrant::SW)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeywordToken {
    pub class_id: u16,
    pub quadrant: Option<Quadrant>,
    /// Size level value, if the extractor reports one.
    pub size: Option<u8>,
}

/// Goal plus ranked keywords: the uplink payload of scheme C.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Prompt {
    pub goal: Goal,
    pub keywords: Vec<KeywordToken>,
    /// Extraction budget.
    pub k: usize,
}

impl Prompt {
    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        if self.keywords.len() > self.k {
            return Err(Error::Config(format!(
                "{} keywords exceed budget {}",
                self.keywords.len(),
                self.k
            )));
        }
        for t in &self.keywords {
            if t.class_id as usize >= vocab.class_count() {
                return Err(Error::KnowledgeMismatch(format!(
                    "keyword class {} outside vocabulary v{}",
                    t.class_id, vocab.version
                )));
            }
            if let Some(s) = t.size {
                if vocab.size_index(s).is_none() {
                    return Err(Error::KnowledgeMismatch(format!(
                        "keyword size {s} not a size level"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Symbol alphabet for serialized prompts.
///
/// A prompt is `goal (class quadrant size)* end`, each element one symbol.
/// Absent quadrant and size fields have their own symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptAlphabet {
    classes: u16,
    size_levels: u16,
}

impl PromptAlphabet {
    const END: u16 = Goal::ALL.len() as u16;
    const CLASS_BASE: u16 = Self::END + 1;

    pub fn new(vocab: &Vocabulary) -> Self {
        PromptAlphabet {
            classes: vocab.class_count() as u16,
            size_levels: vocab.size_levels.len() as u16,
        }
    }

    fn quad_base(&self) -> u16 {
        Self::CLASS_BASE + self.classes
    }

    fn size_base(&self) -> u16 {
        self.quad_base() + Quadrant::ALL.len() as u16 + 1
    }

    /// Number of distinct symbols.
    pub fn len(&self) -> u16 {
        self.size_base() + self.size_levels + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, prompt: &Prompt, vocab: &Vocabulary) -> Vec<u16> {
        let mut out = vec![prompt.goal.token()];
        for t in &prompt.keywords {
            out.push(Self::CLASS_BASE + t.class_id);
            out.push(
                self.quad_base()
                    + t.quadrant
                        .map(|q| q as u16)
                        .unwrap_or(Quadrant::ALL.len() as u16),
            );
            let size_idx = t
                .size
                .and_then(|s| vocab.size_index(s))
                .map(|i| i as u16)
                .unwrap_or(self.size_levels);
            out.push(self.size_base() + size_idx);
        }
        out.push(Self::END);
        out
    }

    /// Best-effort parse of a received symbol stream. Symbols in the wrong
    /// slot are skipped, repeated classes keep their first occurrence and at
    /// most `k` keywords are kept. A missing goal defaults to image delivery.
    pub fn decode(&self, symbols: &[u16], vocab: &Vocabulary, k: usize) -> Prompt {
        let mut it = symbols.iter().copied().peekable();
        let goal = match it.peek() {
            Some(&g) if g < Self::END => {
                it.next();
                Goal::ALL[g as usize]
            }
            _ => Goal::DeliverImage,
        };
        let mut keywords: Vec<KeywordToken> = Vec::new();
        while keywords.len() < k {
            let Some(sym) = it.next() else { break };
            if sym == Self::END {
                break;
            }
            if !(Self::CLASS_BASE..self.quad_base()).contains(&sym) {
                continue;
            }
            let class_id = sym - Self::CLASS_BASE;
            let quadrant = match it.peek() {
                Some(&q) if (self.quad_base()..self.size_base()).contains(&q) => {
                    it.next();
                    Quadrant::ALL.get((q - self.quad_base()) as usize).copied()
                }
                _ => None,
            };
            let size = match it.peek() {
                Some(&s) if (self.size_base()..self.len()).contains(&s) => {
                    it.next();
                    vocab.size_levels.get((s - self.size_base()) as usize).copied()
                }
                _ => None,
            };
            if keywords.iter().all(|t| t.class_id != class_id) {
                keywords.push(KeywordToken {
                    class_id,
                    quadrant,
                    size,
                });
            }
        }
        Prompt { goal, keywords, k }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goal_lookup() {
        assert_eq!(identify_goal("image-delivery").unwrap(), Goal::DeliverImage);
        assert_eq!(
            identify_goal("summary-delivery").unwrap(),
            Goal::DeliverSummary
        );
        assert!(identify_goal("video-delivery").is_err());
    }

    #[test]
    fn quadrants() {
        let c = (16, 16);
        assert_eq!(Quadrant::of(0, 0, 2, c), Quadrant::NW);
        assert_eq!(Quadrant::of(0, 12, 2, c), Quadrant::NE);
        assert_eq!(Quadrant::of(12, 0, 2, c), Quadrant::SW);
        assert_eq!(Quadrant::of(7, 7, 2, c), Quadrant::SE);
    }

    #[test]
    fn symbol_round_trip() {
        let v = Vocabulary::default();
        let a = PromptAlphabet::new(&v);
        let p = Prompt {
            goal: Goal::DeliverSummary,
            keywords: vec![
                KeywordToken {
                    class_id: 3,
                    quadrant: Some(Quadrant::SE),
                    size: None,
                },
                KeywordToken {
                    class_id: 11,
                    quadrant: None,
                    size: Some(4),
                },
            ],
            k: 3,
        };
        let syms = a.encode(&p, &v);
        assert_eq!(syms.len(), 1 + 3 * 2 + 1);
        assert!(syms.iter().all(|&s| s < a.len()));
        assert_eq!(a.decode(&syms, &v, 3), p);
    }

    #[test]
    fn lenient_decode_skips_garbage() {
        let v = Vocabulary::default();
        let a = PromptAlphabet::new(&v);
        let p = a.decode(&[2, 2, 9, 1000, 5], &v, 3);
        assert_eq!(p.goal, Goal::DeliverImage);
        assert!(p.keywords.len() <= 3);
        p.validate(&v).unwrap();
    }
}
