use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Uplink,
    Downlink,
    /// Knowledge-sharing traffic between replicas.
    Control,
}

/// Transmission scheme under evaluation.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum Scheme {
    /// Generated content over the traditional Huffman + LDPC pixel pipeline.
    A,
    /// Semantic coding of the original content, no generative models.
    B,
    /// Prompt uplink, cloud generation, semantic downlink, calibration.
    C,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::A, Scheme::B, Scheme::C];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::A => "A",
            Scheme::B => "B",
            Scheme::C => "C",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Scheme::A),
            "B" | "b" => Ok(Scheme::B),
            "C" | "c" => Ok(Scheme::C),
            other => Err(crate::Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// A counted payload of bits. Every bit that crosses a channel is carried
/// in one of these, so `len()` is the unit of all bit accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitFrame {
    pub bits: Vec<bool>,
    pub direction: Direction,
    pub scheme: Scheme,
    pub purpose: String,
}

impl BitFrame {
    pub fn new(bits: Vec<bool>, direction: Direction, scheme: Scheme, purpose: &str) -> Self {
        BitFrame {
            bits,
            direction,
            scheme,
            purpose: purpose.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Same metadata, different payload.
    pub fn with_bits(&self, bits: Vec<bool>) -> Self {
        BitFrame {
            bits,
            direction: self.direction,
            scheme: self.scheme,
            purpose: self.purpose.clone(),
        }
    }
}

pub fn hamming_distance(a: &[bool], b: &[bool]) -> usize {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Appends the `width` low bits of `value`, most significant first.
pub fn push_bits(out: &mut Vec<bool>, value: u64, width: usize) {
    for i in (0..width).rev() {
        out.push((value >> i) & 1 == 1);
    }
}

/// Reads `bits` as an unsigned big-endian integer.
pub fn read_bits(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
}

/// Bits needed to index `n` distinct values (at least one).
pub fn bits_for(n: usize) -> usize {
    if n <= 2 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}
