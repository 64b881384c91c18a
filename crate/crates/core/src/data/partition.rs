//! Client data partitions: IID, label shards, and imbalanced volumes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionScheme {
    Iid,
    Shards,
    Imbalanced,
}

/// Samples-per-client summary; `stdev` is the sample (n − 1) standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionStats {
    pub mean: f64,
    pub stdev: f64,
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignments: Vec<Vec<usize>>,
    scheme: PartitionScheme,
}

impl Partition {
    fn new(mut assignments: Vec<Vec<usize>>, scheme: PartitionScheme) -> Self {
        for a in &mut assignments {
            a.sort_unstable();
        }
        Partition { assignments, scheme }
    }

    pub fn scheme(&self) -> PartitionScheme {
        self.scheme
    }

    pub fn clients(&self) -> usize {
        self.assignments.len()
    }

    pub fn client(&self, id: usize) -> &[usize] {
        &self.assignments[id]
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    pub fn into_assignments(self) -> Vec<Vec<usize>> {
        self.assignments
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.assignments.iter().map(Vec::len).collect()
    }

    pub fn stats(&self) -> PartitionStats {
        let sizes = self.sizes();
        let n = sizes.len() as f64;
        let mean = sizes.iter().sum::<usize>() as f64 / n;
        let var = if sizes.len() > 1 {
            sizes.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        PartitionStats {
            mean,
            stdev: var.sqrt(),
            min: sizes.iter().copied().min().unwrap_or(0),
            max: sizes.iter().copied().max().unwrap_or(0),
        }
    }

    /// Number of distinct labels held by each client.
    pub fn distinct_labels(&self, labels: &[usize]) -> Vec<usize> {
        self.assignments
            .iter()
            .map(|idx| {
                let mut ls: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
                ls.sort_unstable();
                ls.dedup();
                ls.len()
            })
            .collect()
    }
}

/// Random permutation split into `m` parts whose sizes differ by at most one.
pub fn partition_iid(n: usize, m: usize, seed: u64) -> Result<Partition> {
    if m == 0 || n < m {
        return Err(Error::Config(format!("IID partition needs n ≥ m ≥ 1 (n = {n}, m = {m})")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / m, n % m);
    let mut assignments = Vec::with_capacity(m);
    let mut start = 0;
    for client in 0..m {
        let len = base + usize::from(client < extra);
        assignments.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(Partition::new(assignments, PartitionScheme::Iid))
}

/// Indices sorted by label; ties keep their original order.
fn sorted_by_label(labels: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    order
}

/// Cuts `order` into `count` contiguous shards of equal size; the last shard
/// absorbs any remainder.
fn cut_shards(order: &[usize], count: usize) -> Vec<&[usize]> {
    let size = order.len() / count;
    (0..count)
        .map(|s| {
            let end = if s + 1 == count { order.len() } else { (s + 1) * size };
            &order[s * size..end]
        })
        .collect()
}

/// Label-sorted shards, `shards_per_client` assigned to each client uniformly
/// at random without replacement.
pub fn partition_shards(labels: &[usize], m: usize, shards_per_client: usize, seed: u64) -> Result<Partition> {
    let total = m * shards_per_client;
    if m == 0 || shards_per_client == 0 || labels.len() < total {
        return Err(Error::Config(format!(
            "shard partition needs n ≥ m · shards_per_client (n = {}, m = {m}, shards_per_client = {shards_per_client})",
            labels.len()
        )));
    }
    let order = sorted_by_label(labels);
    let shards = cut_shards(&order, total);
    let mut shard_ids: Vec<usize> = (0..total).collect();
    shard_ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let assignments = shard_ids
        .chunks(shards_per_client)
        .map(|ids| ids.iter().flat_map(|&s| shards[s].iter().copied()).collect())
        .collect();
    Ok(Partition::new(assignments, PartitionScheme::Shards))
}

/// Imbalanced volumes: clients form `m / group_size` groups; each member of
/// group `k` (1-based, all but the last group) receives `k` shards, and the
/// last group's members split the remaining shards.
pub fn partition_imbalanced(
    labels: &[usize],
    m: usize,
    total_shards: usize,
    group_size: usize,
    seed: u64,
) -> Result<Partition> {
    if group_size == 0 || m == 0 || !m.is_multiple_of(group_size) {
        return Err(Error::Config(format!(
            "imbalanced partition needs m divisible by the group size (m = {m}, group size = {group_size})"
        )));
    }
    if total_shards == 0 || labels.len() < total_shards {
        return Err(Error::Config(format!(
            "imbalanced partition needs 1 ≤ total_shards ≤ n (n = {}, total_shards = {total_shards})",
            labels.len()
        )));
    }
    let groups = m / group_size;
    let leading: usize = group_size * (groups - 1) * groups / 2;
    if total_shards < leading + group_size {
        return Err(Error::Config(format!(
            "insufficient shards: {m} clients in {groups} groups need at least {} shards, have {total_shards}",
            leading + group_size
        )));
    }
    let order = sorted_by_label(labels);
    let shards = cut_shards(&order, total_shards);
    let mut shard_ids: Vec<usize> = (0..total_shards).collect();
    shard_ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let remaining = total_shards - leading;
    let mut counts = Vec::with_capacity(m);
    for k in 1..groups {
        counts.extend(std::iter::repeat_n(k, group_size));
    }
    for member in 0..group_size {
        counts.push(remaining / group_size + usize::from(member < remaining % group_size));
    }

    let mut next = 0;
    let assignments = counts
        .iter()
        .map(|&c| {
            let ids = &shard_ids[next..next + c];
            next += c;
            ids.iter().flat_map(|&s| shards[s].iter().copied()).collect()
        })
        .collect();
    Ok(Partition::new(assignments, PartitionScheme::Imbalanced))
}
