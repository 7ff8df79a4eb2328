//! Evaluation metrics and their aggregation into report shapes.

mod embedding;
mod report;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scene::{scene_object_multiset, Image, Scene};

pub use embedding::EmbeddingTable;
pub use report::{aggregate, BinPoint, BinnedCurve, MetricsReport, ObjectBin, SchemeSummary, SessionMetrics, Stat};

/// Reported PSNR when the images are identical.
pub const PSNR_CAP_DB: f64 = 100.0;

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    if a.resolution != b.resolution {
        return Err(Error::ResolutionMismatch(a.resolution, b.resolution));
    }
    let sum: u64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.pixels.len() as f64)
}

/// Peak signal-to-noise ratio for 8-bit images, capped at
/// [`PSNR_CAP_DB`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (255.0f64 * 255.0 / mse).log10()).min(PSNR_CAP_DB))
}

/// Cosine between the mean class embeddings of two scenes.
///
/// Empty vs empty is 1, empty vs non-empty is 0. Class ids outside the
/// table are ignored.
pub fn semantic_similarity(a: &Scene, b: &Scene, table: &EmbeddingTable) -> f64 {
    let ma = scene_object_multiset(a);
    let mb = scene_object_multiset(b);
    if ma == mb {
        return 1.0;
    }
    match (table.mean_vector(&ma), table.mean_vector(&mb)) {
        (None, None) => 1.0,
        (None, _) | (_, None) => 0.0,
        (Some(va), Some(vb)) => {
            let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
            let na = va.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                0.0
            } else {
                (dot / (na * nb)).clamp(-1.0, 1.0)
            }
        }
    }
}

/// Share of the original class multiset present in the recovered scene.
pub fn recovery_ratio(original: &Scene, recovered: &Scene) -> f64 {
    let orig = scene_object_multiset(original);
    let total: usize = orig.values().sum();
    if total == 0 {
        return 1.0;
    }
    let rec = scene_object_multiset(recovered);
    let common: usize = multiset_intersection(&orig, &rec);
    common as f64 / total as f64
}

fn multiset_intersection(a: &BTreeMap<u16, usize>, b: &BTreeMap<u16, usize>) -> usize {
    a.iter()
        .map(|(c, &n)| n.min(b.get(c).copied().unwrap_or(0)))
        .sum()
}

/// Absolute difference in object counts.
pub fn quantity_discrepancy(original: &Scene, recovered: &Scene) -> usize {
    original.objects.len().abs_diff(recovered.objects.len())
}
