//! Regular LDPC block code with systematic encoding and hard-decision
//! bit-flipping decoding.
//!
//! The parity-check matrix is built column by column with a seeded,
//! degree-balancing greedy pass that rejects any placement closing a
//! 4-cycle. Attempts that do not reach full row rank are discarded. Columns
//! are finally reordered so the information positions come first, which
//! makes the code systematic: `codeword = message ++ parity`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_N: usize = 96;
pub const DEFAULT_K: usize = 48;
pub const DEFAULT_MAX_ITERATIONS: usize = 50;
pub const DEFAULT_SEED: u64 = 0x1d9c;
const COLUMN_WEIGHT: usize = 3;
const ROW_WEIGHT: usize = 6;
const MAX_ATTEMPTS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdpcParams {
    pub n: usize,
    pub k: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for LdpcParams {
    fn default() -> Self {
        LdpcParams {
            n: DEFAULT_N,
            k: DEFAULT_K,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LdpcCode {
    n: usize,
    k: usize,
    max_iterations: usize,
    /// Variable indices of each check (row of H).
    checks: Vec<Vec<usize>>,
    /// Check indices of each variable (column of H).
    vars: Vec<Vec<usize>>,
    /// Message positions feeding each parity bit.
    parity_taps: Vec<Vec<usize>>,
}

/// Result of decoding one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecode {
    pub message: Vec<bool>,
    pub converged: bool,
    pub iterations: usize,
}

impl LdpcCode {
    /// Builds a regular column-weight-3, row-weight-6 code.
    pub fn regular(params: LdpcParams) -> Result<Self> {
        let LdpcParams {
            n,
            k,
            max_iterations,
            seed,
        } = params;
        let m = n.saturating_sub(k);
        if k == 0 || m == 0 || n * COLUMN_WEIGHT != m * ROW_WEIGHT {
            return Err(Error::Config(format!(
                "({n},{k}) is not a rate-1/2 (3,6)-regular code size"
            )));
        }
        if n % 2 != 0 || m < ROW_WEIGHT {
            return Err(Error::Config(format!("code length {n} too small or odd")));
        }
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
            let Some(cols) = place_columns(n, m, &mut rng) else {
                continue;
            };
            if let Some(code) = Self::from_columns(n, k, max_iterations, &cols) {
                return Ok(code);
            }
        }
        Err(Error::Config(format!(
            "no full-rank 4-cycle-free ({n},{k}) code found"
        )))
    }

    /// Builds the systematic code from column check lists, or `None` when H
    /// is rank deficient.
    fn from_columns(
        n: usize,
        k: usize,
        max_iterations: usize,
        cols: &[Vec<usize>],
    ) -> Option<Self> {
        let m = n - k;
        let words = n.div_ceil(64);
        let mut rows = vec![vec![0u64; words]; m];
        for (c, checks) in cols.iter().enumerate() {
            for &r in checks {
                rows[r][c / 64] |= 1 << (c % 64);
            }
        }
        let get = |row: &[u64], c: usize| (row[c / 64] >> (c % 64)) & 1 == 1;

        // Reduced row echelon form over GF(2).
        let mut pivots = Vec::with_capacity(m);
        let mut rank = 0;
        for c in 0..n {
            if rank == m {
                break;
            }
            let Some(p) = (rank..m).find(|&r| get(&rows[r], c)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && get(row, c) {
                    for (w, pw) in row.iter_mut().zip(&pivot_row) {
                        *w ^= pw;
                    }
                }
            }
            pivots.push(c);
            rank += 1;
        }
        if rank < m {
            return None;
        }

        let info: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        // New column order: information columns, then pivot columns.
        let order: Vec<usize> = info.iter().chain(pivots.iter()).copied().collect();
        let mut new_pos = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            new_pos[old] = new;
        }
        let vars: Vec<Vec<usize>> = order.iter().map(|&old| cols[old].clone()).collect();
        let mut checks = vec![Vec::new(); m];
        for (v, cs) in vars.iter().enumerate() {
            for &c in cs {
                checks[c].push(v);
            }
        }
        let parity_taps = (0..m)
            .map(|r| {
                info.iter()
                    .filter(|&&c| get(&rows[r], c))
                    .map(|&c| new_pos[c])
                    .collect()
            })
            .collect();
        Some(LdpcCode {
            n,
            k,
            max_iterations,
            checks,
            vars,
            parity_taps,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    /// Dense parity-check matrix, one row per check.
    pub fn parity_matrix(&self) -> Vec<Vec<bool>> {
        self.checks
            .iter()
            .map(|vs| {
                let mut row = vec![false; self.n];
                for &v in vs {
                    row[v] = true;
                }
                row
            })
            .collect()
    }

    /// Check indices attached to each variable.
    pub fn variable_checks(&self) -> &[Vec<usize>] {
        &self.vars
    }

    pub fn syndrome(&self, word: &[bool]) -> Vec<bool> {
        self.checks
            .iter()
            .map(|vs| vs.iter().fold(false, |acc, &v| acc ^ word[v]))
            .collect()
    }

    pub fn is_codeword(&self, word: &[bool]) -> bool {
        word.len() == self.n && self.syndrome(word).iter().all(|&s| !s)
    }

    /// Systematic encoding of one block. Messages shorter than `k` are
    /// zero-padded.
    pub fn encode(&self, message: &[bool]) -> Vec<bool> {
        assert!(message.len() <= self.k, "message longer than k");
        let mut word = message.to_vec();
        word.resize(self.k, false);
        for taps in &self.parity_taps {
            let p = taps.iter().fold(false, |acc, &i| acc ^ word[i]);
            word.push(p);
        }
        word
    }

    /// Hard-decision majority bit flipping. Each round flips every bit for
    /// which more than half of its checks are unsatisfied; decoding stops
    /// when all checks pass, no bit qualifies, or the iteration budget runs
    /// out.
    pub fn decode(&self, received: &[bool]) -> BlockDecode {
        assert_eq!(received.len(), self.n, "received length must equal n");
        let mut word = received.to_vec();
        let mut unsat = vec![0usize; self.n];
        let mut rounds = 0;
        for iteration in 0..=self.max_iterations {
            rounds = iteration;
            let syndrome = self.syndrome(&word);
            if syndrome.iter().all(|&s| !s) {
                return BlockDecode {
                    message: word[..self.k].to_vec(),
                    converged: true,
                    iterations: iteration,
                };
            }
            if iteration == self.max_iterations {
                break;
            }
            unsat.fill(0);
            for (c, _) in syndrome.iter().enumerate().filter(|(_, &s)| s) {
                for &v in &self.checks[c] {
                    unsat[v] += 1;
                }
            }
            // Flip the most suspected bits, provided most of their checks
            // vote against them.
            let worst = unsat.iter().copied().max().unwrap_or(0);
            let mut flipped = false;
            for ((bit, &u), checks) in word.iter_mut().zip(&unsat).zip(&self.vars) {
                if u == worst && 2 * u > checks.len() {
                    *bit = !*bit;
                    flipped = true;
                }
            }
            if !flipped {
                break;
            }
        }
        BlockDecode {
            message: word[..self.k].to_vec(),
            converged: false,
            iterations: rounds,
        }
    }

    /// Splits `bits` into zero-padded `k`-bit blocks and encodes each.
    pub fn encode_stream(&self, bits: &[bool]) -> Vec<bool> {
        bits.chunks(self.k).flat_map(|b| self.encode(b)).collect()
    }

    /// Blocks needed to carry `payload_bits`.
    pub fn blocks_for(&self, payload_bits: usize) -> usize {
        payload_bits.div_ceil(self.k)
    }
}

/// Greedy 4-cycle-free placement. Returns per-column check lists.
fn place_columns(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<usize>>> {
    let mut degree = vec![0usize; m];
    let mut linked = vec![false; m * m];
    let mut cols = Vec::with_capacity(n);
    for _ in 0..n {
        let mut candidates: Vec<(usize, u32, usize)> = (0..m)
            .filter(|&r| degree[r] < ROW_WEIGHT)
            .map(|r| (degree[r], rng.random::<u32>(), r))
            .collect();
        candidates.sort_unstable();
        let mut chosen: Vec<usize> = Vec::with_capacity(COLUMN_WEIGHT);
        for &(_, _, r) in &candidates {
            if chosen.iter().all(|&c| !linked[c * m + r]) {
                chosen.push(r);
                if chosen.len() == COLUMN_WEIGHT {
                    break;
                }
            }
        }
        if chosen.len() < COLUMN_WEIGHT {
            return None;
        }
        for &a in &chosen {
            degree[a] += 1;
            for &b in &chosen {
                if a != b {
                    linked[a * m + b] = true;
                }
            }
        }
        chosen.sort_unstable();
        cols.push(chosen);
    }
    cols.shuffle(rng);
    Some(cols)
}
