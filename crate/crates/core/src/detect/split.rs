//! Case-level stratified train/validation/test partitions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// 80-10-10 split of case indices, stratified by `strata` (e.g. whether a
/// case holds any diseased slice). Each non-trivial stratum contributes at
/// least one case to validation and to test.
pub fn stratified_split(strata: &[bool], seed: u64) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Split { train: Vec::new(), validation: Vec::new(), test: Vec::new() };
    for flag in [false, true] {
        let mut idx: Vec<usize> = strata.iter().enumerate().filter(|(_, &f)| f == flag).map(|(i, _)| i).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let n = idx.len();
        let take = if n >= 3 { ((0.1 * n as f64).round() as usize).max(1) } else { 0 };
        s.test.extend(&idx[..take]);
        s.validation.extend(&idx[take..2 * take]);
        s.train.extend(&idx[2 * take..]);
    }
    if s.test.is_empty() || s.train.is_empty() {
        return Err(Error::InvalidArgument(format!("{} cases are too few for a three-way split", strata.len())));
    }
    s.train.sort_unstable();
    s.validation.sort_unstable();
    s.test.sort_unstable();
    Ok(s)
}

/// `k` folds of case indices, stratified, each used once as the test fold.
pub fn stratified_folds(strata: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > strata.len() {
        return Err(Error::InvalidArgument(format!("cannot make {k} folds from {} cases", strata.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for flag in [true, false] {
        let mut idx: Vec<usize> = strata.iter().enumerate().filter(|(_, &f)| f == flag).map(|(i, _)| i).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}
