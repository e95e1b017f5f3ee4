use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_SHUFFLES: usize = 1000;

/// Shuffled partition of `0..events.len()` into `k` folds whose sizes differ
/// by at most one (the first `n % k` folds are larger). Each fold's
/// complement must contain an event; the shuffle is redrawn until it does.
pub fn kfold_split(events: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = events.len();
    if k < 2 {
        return Err(Error::invalid(format!("k-fold needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::invalid(format!("cannot split {n} samples into {k} folds")));
    }
    let total_events = events.iter().filter(|&&e| e).count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_SHUFFLES {
        order.shuffle(&mut rng);
        let mut folds = Vec::with_capacity(k);
        let mut start = 0;
        for f in 0..k {
            let size = n / k + usize::from(f < n % k);
            let mut fold = order[start..start + size].to_vec();
            fold.sort_unstable();
            folds.push(fold);
            start += size;
        }
        let ok = folds
            .iter()
            .all(|fold| fold.iter().filter(|&&i| events[i]).count() < total_events);
        if ok {
            return Ok(folds);
        }
    }
    Err(Error::invalid(format!(
        "no {k}-fold split leaves an event in every training split ({total_events} events)"
    )))
}

/// Indices not in `fold`, ascending.
pub fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut in_fold = vec![false; n];
    for &i in fold {
        in_fold[i] = true;
    }
    (0..n).filter(|&i| !in_fold[i]).collect()
}
