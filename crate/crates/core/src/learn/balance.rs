//! Random undersampling of the majority class.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Indices (ascending) of a class-balanced subset of binary `labels`: every
/// minority sample plus an equal-sized seeded draw from the majority.
pub fn balance_classes(labels: &[usize], seed: u64) -> Result<Vec<usize>> {
    let pos: Vec<usize> = labels.iter().enumerate().filter(|(_, &l)| l != 0).map(|(i, _)| i).collect();
    let neg: Vec<usize> = labels.iter().enumerate().filter(|(_, &l)| l == 0).map(|(i, _)| i).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::EmptyClass);
    }
    let (minor, mut major) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    major.shuffle(&mut rng);
    major.truncate(minor.len());
    let mut out = minor;
    out.extend(major);
    out.sort_unstable();
    Ok(out)
}
