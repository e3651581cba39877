use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::data::Dataset;
use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// Per-device shards of a labeled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub shards: Vec<Dataset>,
    /// Available classes `Ω_i`, ascending.
    pub available: Vec<Vec<usize>>,
    /// Samples per available class `x_i`.
    pub per_class: Vec<usize>,
}

/// Equal per-class counts maximizing the samples in use, by water-filling.
///
/// All unfrozen devices rise together until some class runs out; the
/// devices holding that class freeze, and the rest keep rising. Leftover
/// supply is then handed out one sample per class at a time in device order.
pub fn allocate(available: &[Vec<usize>], supply: &[usize]) -> Vec<usize> {
    let k = available.len();
    let mut x = vec![0usize; k];
    let mut left = supply.to_vec();
    let mut active = vec![true; k];
    loop {
        let mut holders = vec![0usize; supply.len()];
        for i in (0..k).filter(|&i| active[i]) {
            available[i].iter().for_each(|&n| holders[n] += 1);
        }
        let step = (0..supply.len())
            .filter(|&n| holders[n] > 0)
            .map(|n| left[n] / holders[n])
            .min();
        let Some(step) = step else { break };
        if step > 0 {
            for i in (0..k).filter(|&i| active[i]) {
                x[i] += step;
                available[i].iter().for_each(|&n| left[n] -= step);
            }
            continue;
        }
        for i in 0..k {
            if active[i] && available[i].iter().any(|&n| left[n] < holders[n]) {
                active[i] = false;
            }
        }
    }
    let mut grew = true;
    while grew {
        grew = false;
        for i in 0..k {
            if !available[i].is_empty() && available[i].iter().all(|&n| left[n] > 0) {
                available[i].iter().for_each(|&n| left[n] -= 1);
                x[i] += 1;
                grew = true;
            }
        }
    }
    x
}

/// Non-IID split: device `i` misses `u_i ~ U{0, .., max_missing}` random
/// classes and gets `x_i` samples of each remaining class.
pub fn partition_noniid(data: &Dataset, k: usize, max_missing: usize, seed: u64) -> Result<Partition> {
    let c = data.classes();
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one device".into()));
    }
    if max_missing >= c {
        return Err(Error::InvalidParameter(format!(
            "cannot drop up to {max_missing} of {c} classes"
        )));
    }
    let mut available = Vec::with_capacity(k);
    for i in 0..k {
        let mut rng = rng::stream(seed, Purpose::Partition, 0, i as u64);
        let u = rng.random_range(0..=max_missing);
        let missing = index::sample(&mut rng, c, u).into_vec();
        available.push((0..c).filter(|n| !missing.contains(n)).collect::<Vec<_>>());
    }
    partition_with_classes(data, available, seed)
}

/// Split with given class sets.
pub fn partition_with_classes(data: &Dataset, available: Vec<Vec<usize>>, seed: u64) -> Result<Partition> {
    let mut pools = data.class_indices();
    let supply: Vec<usize> = pools.iter().map(Vec::len).collect();
    let per_class = allocate(&available, &supply);
    if let Some(i) = per_class.iter().position(|&x| x == 0) {
        return Err(Error::DatasetTooSmall(format!(
            "device {i} gets no samples ({} samples for {} devices)",
            data.len(),
            available.len()
        )));
    }
    for (n, pool) in pools.iter_mut().enumerate() {
        pool.shuffle(&mut rng::stream(seed, Purpose::Partition, 1, n as u64));
    }
    let mut cursor = vec![0usize; pools.len()];
    let mut shards = Vec::with_capacity(available.len());
    for (classes, &x) in available.iter().zip(&per_class) {
        let mut idx = Vec::with_capacity(classes.len() * x);
        for &n in classes {
            idx.extend_from_slice(&pools[n][cursor[n]..cursor[n] + x]);
            cursor[n] += x;
        }
        idx.sort_unstable();
        shards.push(data.subset(&idx));
    }
    Ok(Partition { shards, available, per_class })
}
