//! Canonical Huffman codes over `u16` symbols.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};

/// Longest codeword the packed representation supports.
const MAX_CODE_LEN: usize = 64;

/// Prefix-free canonical codebook.
///
/// Codeword lengths come from a Huffman tree whose merge order is fixed by
/// (weight, creation order), so a frequency table maps to exactly one
/// codebook. Codewords are then assigned canonically: shorter first, ties by
/// symbol value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanCodebook {
    /// (symbol, length) in canonical order.
    entries: Vec<(u16, u8)>,
    /// symbol -> (code, length)
    table: BTreeMap<u16, (u64, u8)>,
    /// Per length: first canonical code and index of its first entry.
    first_code: Vec<u64>,
    first_index: Vec<usize>,
    count: Vec<usize>,
}

impl HuffmanCodebook {
    pub fn build(frequencies: &BTreeMap<u16, u64>) -> Result<Self> {
        let live: Vec<(u16, u64)> = frequencies
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&s, &c)| (s, c))
            .collect();
        if live.is_empty() {
            return Err(Error::Config(
                "Huffman frequency table has no symbol with a positive count".into(),
            ));
        }
        let lengths = if live.len() == 1 {
            vec![(live[0].0, 1u8)]
        } else {
            tree_lengths(&live)?
        };
        Ok(Self::from_lengths(lengths))
    }

    fn from_lengths(mut lengths: Vec<(u16, u8)>) -> Self {
        lengths.sort_by_key(|&(s, l)| (l, s));
        let max_len = lengths.last().map(|&(_, l)| l as usize).unwrap_or(0);
        let mut count = vec![0usize; max_len + 1];
        for &(_, l) in &lengths {
            count[l as usize] += 1;
        }
        let mut first_code = vec![0u64; max_len + 1];
        let mut first_index = vec![0usize; max_len + 1];
        let mut table = BTreeMap::new();
        let mut code = 0u64;
        let mut prev_len = 0u8;
        for (i, &(sym, len)) in lengths.iter().enumerate() {
            code <<= len - prev_len;
            if len != prev_len {
                first_code[len as usize] = code;
                first_index[len as usize] = i;
            }
            table.insert(sym, (code, len));
            code += 1;
            prev_len = len;
        }
        HuffmanCodebook {
            entries: lengths,
            table,
            first_code,
            first_index,
            count,
        }
    }

    /// (symbol, code length) pairs in canonical order.
    pub fn entries(&self) -> &[(u16, u8)] {
        &self.entries
    }

    pub fn code_len(&self, symbol: u16) -> Option<usize> {
        self.table.get(&symbol).map(|&(_, l)| l as usize)
    }

    /// Codeword for `symbol` as bits.
    pub fn codeword(&self, symbol: u16) -> Option<Vec<bool>> {
        self.table
            .get(&symbol)
            .map(|&(code, len)| (0..len).rev().map(|i| (code >> i) & 1 == 1).collect())
    }

    pub fn encode(&self, symbols: &[u16]) -> Result<Vec<bool>> {
        let mut out = Vec::new();
        for &s in symbols {
            let &(code, len) = self.table.get(&s).ok_or(Error::UnknownSymbol(s))?;
            for i in (0..len).rev() {
                out.push((code >> i) & 1 == 1);
            }
        }
        Ok(out)
    }

    /// Strict decoding: every bit must belong to a complete codeword.
    pub fn decode(&self, bits: &[bool]) -> Result<Vec<u16>> {
        let (symbols, consumed) = self.decode_inner(bits, usize::MAX, false);
        if consumed != bits.len() {
            return Err(Error::DanglingBits(bits.len() - consumed));
        }
        Ok(symbols)
    }

    /// Decodes at most `max_symbols` symbols from the front of `bits`.
    /// Returns the symbols and the number of bits consumed; a trailing
    /// partial codeword is left unconsumed. Bit patterns outside an
    /// incomplete code are skipped.
    pub fn decode_prefix(&self, bits: &[bool], max_symbols: usize) -> (Vec<u16>, usize) {
        self.decode_inner(bits, max_symbols, true)
    }

    fn decode_inner(&self, bits: &[bool], max_symbols: usize, resync: bool) -> (Vec<u16>, usize) {
        let mut out = Vec::new();
        let mut pos = 0;
        let mut code = 0u64;
        let mut len = 0usize;
        let mut start = 0;
        while pos < bits.len() && out.len() < max_symbols {
            code = (code << 1) | bits[pos] as u64;
            len += 1;
            pos += 1;
            if len < self.count.len() && self.count[len] > 0 {
                let offset = code.wrapping_sub(self.first_code[len]);
                if code >= self.first_code[len] && (offset as usize) < self.count[len] {
                    out.push(self.entries[self.first_index[len] + offset as usize].0);
                    code = 0;
                    len = 0;
                    start = pos;
                    continue;
                }
            }
            if len + 1 >= self.count.len() {
                if !resync {
                    break;
                }
                code = 0;
                len = 0;
                start = pos;
            }
        }
        (out, start)
    }

    /// Mean codeword length under `frequencies`.
    pub fn average_length(&self, frequencies: &BTreeMap<u16, u64>) -> f64 {
        let total: u64 = frequencies.values().sum();
        let weighted: u64 = frequencies
            .iter()
            .filter_map(|(s, &c)| self.code_len(*s).map(|l| l as u64 * c))
            .sum();
        weighted as f64 / total as f64
    }
}

fn tree_lengths(live: &[(u16, u64)]) -> Result<Vec<(u16, u8)>> {
    // Node i < live.len() is a leaf; later nodes are internal.
    let mut parent: Vec<usize> = vec![usize::MAX; live.len()];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = live
        .iter()
        .enumerate()
        .map(|(i, &(_, c))| Reverse((c, i)))
        .collect();
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().unwrap();
        let Reverse((wb, b)) = heap.pop().unwrap();
        let node = parent.len();
        parent.push(usize::MAX);
        parent[a] = node;
        parent[b] = node;
        heap.push(Reverse((wa + wb, node)));
    }
    let mut depth = vec![0usize; parent.len()];
    // Parents are created after children, so walk from the root down.
    for node in (0..parent.len()).rev() {
        if parent[node] != usize::MAX {
            depth[node] = depth[parent[node]] + 1;
        }
    }
    live.iter()
        .enumerate()
        .map(|(i, &(s, _))| {
            if depth[i] > MAX_CODE_LEN {
                Err(Error::Config(format!(
                    "Huffman code length {} exceeds {MAX_CODE_LEN}",
                    depth[i]
                )))
            } else {
                Ok((s, depth[i] as u8))
            }
        })
        .collect()
}

/// Empirical entropy in bits per symbol.
pub fn entropy(frequencies: &BTreeMap<u16, u64>) -> f64 {
    let total: u64 = frequencies.values().sum();
    if total == 0 {
        return 0.0;
    }
    frequencies
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

/// Counts symbol occurrences.
pub fn frequencies<I: IntoIterator<Item = u16>>(symbols: I) -> BTreeMap<u16, u64> {
    let mut f = BTreeMap::new();
    for s in symbols {
        *f.entry(s).or_insert(0) += 1;
    }
    f
}
