use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{standardize, Dataset, ProvenanceStep, StatsSource};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of rows used for training, in (0, 1).
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 42,
        }
    }
}

/// Seeded Fisher-Yates permutation of `0..n`.
///
/// The generator is ChaCha8 seeded with `seed_from_u64(seed)`. Step `i` (from
/// `n-1` down to 1) swaps position `i` with `j = (u * (i+1)) >> 64`, where `u`
/// is the next 64-bit output.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = ((rng.next_u64() as u128 * (i as u128 + 1)) >> 64) as usize;
        idx.swap(i, j);
    }
    idx
}

/// Shuffle, take the first `ceil(n * train_fraction)` rows (clamped so both
/// halves are nonempty) as training data, then standardize both halves with
/// statistics fitted on the training half only. Each half keeps corpus order.
pub fn split(dataset: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::Split(format!("need at least 2 rows to split, got {n}")));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Split(format!(
            "train fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    if dataset.is_standardized() {
        return Err(Error::State("split expects raw (unstandardized) features".into()));
    }
    let n_train = ((n as f64 * spec.train_fraction - 1e-9).ceil() as usize).clamp(1, n - 1);
    let order = shuffled_indices(n, spec.seed);
    let mut train_pos = order[..n_train].to_vec();
    let mut test_pos = order[n_train..].to_vec();
    train_pos.sort_unstable();
    test_pos.sort_unstable();

    let train_raw = dataset.subset(&train_pos);
    let test_raw = dataset.subset(&test_pos);
    let mut train = standardize(&train_raw, StatsSource::FitHere)?;
    let mut test = standardize(&test_raw, StatsSource::Reuse(train.standardization.as_ref()))?;
    for (half, d) in [("train", &mut train), ("test", &mut test)] {
        d.provenance.push(
            ProvenanceStep::new("split", n, d.len())
                .param("half", half)
                .param("train_fraction", spec.train_fraction)
                .param("seed", spec.seed),
        );
    }
    Ok((train, test))
}
