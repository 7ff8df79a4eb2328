use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Seeded unit-vector embedding per class token.
///
/// Vectors are Gaussian draws orthonormalised in token order for as long as
/// the dimension allows; tokens beyond `dim` keep plain normalised draws.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(tokens: usize, dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(tokens);
        for i in 0..tokens {
            loop {
                let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                if i < dim {
                    for u in &vectors {
                        let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                        for (x, y) in v.iter_mut().zip(u) {
                            *x -= dot * y;
                        }
                    }
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-9 {
                    v.iter_mut().for_each(|x| *x /= norm);
                    vectors.push(v);
                    break;
                }
            }
        }
        EmbeddingTable { dim, vectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, token: u16) -> Option<&[f64]> {
        self.vectors.get(token as usize).map(Vec::as_slice)
    }

    /// Count-weighted mean of the known tokens, `None` if there are none.
    pub fn mean_vector(&self, counts: &BTreeMap<u16, usize>) -> Option<Vec<f64>> {
        let mut acc = vec![0.0; self.dim];
        let mut n = 0usize;
        for (&t, &c) in counts {
            if let Some(v) = self.vector(t) {
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += c as f64 * x;
                }
                n += c;
            }
        }
        (n > 0).then(|| acc.into_iter().map(|a| a / n as f64).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_norm_and_deterministic() {
        let t = EmbeddingTable::new(20, 16, 3);
        assert_eq!(t, EmbeddingTable::new(20, 16, 3));
        for i in 0..20 {
            let n: f64 = t.vector(i).unwrap().iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn first_dim_tokens_are_orthogonal() {
        let t = EmbeddingTable::new(12, 16, 3);
        for a in 0..12u16 {
            for b in a + 1..12 {
                let dot: f64 = t
                    .vector(a)
                    .unwrap()
                    .iter()
                    .zip(t.vector(b).unwrap())
                    .map(|(x, y)| x * y)
                    .sum();
                assert!(dot.abs() < 1e-12);
            }
        }
    }
}
