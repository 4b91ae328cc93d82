//! Ward agglomeration of SOM code vectors into broad classes.
//!
//! Cluster ids follow the usual linkage convention: leaves are `0..n`, the cluster
//! created by merge `t` is `n + t`. Merge costs are increases of the within-cluster
//! sum of squares, `w_a w_b / (w_a + w_b) * |c_a - c_b|^2`.

use crate::matrix::{squared_distance, Matrix};
use crate::som::GridTopology;
use std::collections::VecDeque;
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ClusterError {
    #[error("k = {k} is outside 1..={units}")]
    InvalidK { k: usize, units: usize },
    #[error("weight for vector {0} must be positive and finite")]
    InvalidWeight(usize),
    #[error("{found} weights for {expected} vectors")]
    WeightCount { expected: usize, found: usize },
    #[error("partition covers {found} units, topology has {expected}")]
    Coverage { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    /// Smaller of the two merged cluster ids.
    pub a: usize,
    pub b: usize,
    pub cost: f64,
    /// Number of leaves in the new cluster.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Cluster index (0-based, in order of first leaf) for every leaf after cutting at `k`.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>, ClusterError> {
        let n = self.leaves;
        if k == 0 || k > n {
            return Err(ClusterError::InvalidK { k, units: n });
        }
        let mut parent: Vec<usize> = (0..2 * n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (t, m) in self.merges.iter().take(n - k).enumerate() {
            let id = n + t;
            let ra = find(&mut parent, m.a);
            let rb = find(&mut parent, m.b);
            parent[ra] = id;
            parent[rb] = id;
        }
        let mut index = std::collections::HashMap::new();
        Ok((0..n)
            .map(|leaf| {
                let root = find(&mut parent, leaf);
                let next = index.len();
                *index.entry(root).or_insert(next)
            })
            .collect())
    }

    pub fn to_delimited(&self) -> String {
        let mut out = String::from("step,cluster_a,cluster_b,cost,size,new_cluster\n");
        for (t, m) in self.merges.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{},{}", t + 1, m.a, m.b, m.cost, m.size, self.leaves + t);
        }
        out
    }
}

/// Broad-class labels `1..=k` for every unit.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroPartition {
    pub k: usize,
    pub labels: Vec<usize>,
    /// Units of class `c` at index `c - 1`, increasing.
    pub members: Vec<Vec<usize>>,
    /// Records per class, once composed with SOM assignments.
    pub record_counts: Option<Vec<usize>>,
}

impl MacroPartition {
    fn from_groups(groups: &[usize], k: usize, size: impl Fn(usize) -> f64) -> Self {
        let mut order: Vec<usize> = (0..k).collect();
        let mass: Vec<f64> = (0..k)
            .map(|g| groups.iter().enumerate().filter(|&(_, &x)| x == g).map(|(u, _)| size(u)).sum())
            .collect();
        let first: Vec<usize> = (0..k).map(|g| groups.iter().position(|&x| x == g).unwrap_or(usize::MAX)).collect();
        order.sort_by(|&x, &y| mass[y].total_cmp(&mass[x]).then(first[x].cmp(&first[y])));
        let mut rank = vec![0; k];
        for (r, &g) in order.iter().enumerate() {
            rank[g] = r + 1;
        }
        let labels: Vec<usize> = groups.iter().map(|&g| rank[g]).collect();
        let mut members = vec![Vec::new(); k];
        for (u, &l) in labels.iter().enumerate() {
            members[l - 1].push(u);
        }
        Self {
            k,
            labels,
            members,
            record_counts: None,
        }
    }

    pub fn units(&self) -> usize {
        self.labels.len()
    }

    /// Relabels classes by descending record count (ties: smallest unit first) and
    /// stores the counts. `unit_counts[u]` is the number of records mapped to unit `u`.
    pub fn with_record_counts(&self, unit_counts: &[usize]) -> Result<Self, ClusterError> {
        if unit_counts.len() != self.units() {
            return Err(ClusterError::Coverage {
                expected: self.units(),
                found: unit_counts.len(),
            });
        }
        let groups: Vec<usize> = self.labels.iter().map(|l| l - 1).collect();
        let mut out = Self::from_groups(&groups, self.k, |u| unit_counts[u] as f64);
        let mut counts = vec![0; self.k];
        for (u, &l) in out.labels.iter().enumerate() {
            counts[l - 1] += unit_counts[u];
        }
        out.record_counts = Some(counts);
        Ok(out)
    }

    /// Class label for each record given its unit.
    pub fn record_labels(&self, record_units: &[usize]) -> Vec<usize> {
        record_units.iter().map(|&u| self.labels[u]).collect()
    }

    pub fn to_delimited(&self, topology: &GridTopology) -> String {
        let mut out = String::from("row,col,unit,class\n");
        for (u, l) in self.labels.iter().enumerate() {
            let (r, c) = topology.coords(u);
            let _ = writeln!(out, "{},{},{},{}", r + 1, c + 1, u, l);
        }
        out
    }
}

/// Ward agglomeration of the rows of `vectors`, cut at `k` clusters.
///
/// Optional `weights` (e.g. unit occupancy) act as point masses; `None` means all 1.
pub fn ward(vectors: &Matrix, weights: Option<&[f64]>, k: usize) -> Result<(MacroPartition, Dendrogram), ClusterError> {
    let n = vectors.nrows();
    if k == 0 || k > n {
        return Err(ClusterError::InvalidK { k, units: n });
    }
    let w: Vec<f64> = match weights {
        Some(ws) => {
            if ws.len() != n {
                return Err(ClusterError::WeightCount {
                    expected: n,
                    found: ws.len(),
                });
            }
            if let Some(i) = ws.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(ClusterError::InvalidWeight(i));
            }
            ws.to_vec()
        }
        None => vec![1.0; n],
    };
    let dendrogram = ward_linkage(vectors, &w);
    let groups = dendrogram.cut(k)?;
    let partition = MacroPartition::from_groups(&groups, k, |u| w[u]);
    Ok((partition, dendrogram))
}

fn ward_linkage(vectors: &Matrix, w: &[f64]) -> Dendrogram {
    let n = vectors.nrows();
    // slot i holds the live cluster currently stored there
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = w[i] * w[j] / (w[i] + w[j]) * squared_distance(vectors.row(i), vectors.row(j));
            d[i * n + j] = c;
            d[j * n + i] = c;
        }
    }
    let mut id: Vec<usize> = (0..n).collect();
    let mut weight = w.to_vec();
    let mut size = vec![1usize; n];
    let mut alive = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for t in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !alive[j] {
                    continue;
                }
                let (lo, hi) = (id[i].min(id[j]), id[i].max(id[j]));
                let cand = (d[i * n + j], lo, hi, i, j);
                let better = match &best {
                    None => true,
                    Some(b) => cand.0.total_cmp(&b.0).then(lo.cmp(&b.1)).then(hi.cmp(&b.2)).is_lt(),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (cost, lo, hi, i, j) = best.expect("at least two live clusters");
        let (wi, wj) = (weight[i], weight[j]);
        for m in 0..n {
            if !alive[m] || m == i || m == j {
                continue;
            }
            let wm = weight[m];
            let v = ((wi + wm) * d[i * n + m] + (wj + wm) * d[j * n + m] - wm * cost) / (wi + wj + wm);
            d[i * n + m] = v;
            d[m * n + i] = v;
        }
        alive[j] = false;
        weight[i] = wi + wj;
        size[i] += size[j];
        id[i] = n + t;
        merges.push(Merge {
            a: lo,
            b: hi,
            cost,
            size: size[i],
        });
    }
    Dendrogram { leaves: n, merges }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contiguity {
    pub class: usize,
    pub units: usize,
    pub components: usize,
    pub contiguous: bool,
}

/// Connected components of each class under the 8-neighborhood.
pub fn contiguity_report(partition: &MacroPartition, topology: &GridTopology) -> Result<Vec<Contiguity>, ClusterError> {
    if partition.units() != topology.units() {
        return Err(ClusterError::Coverage {
            expected: topology.units(),
            found: partition.units(),
        });
    }
    let mut seen = vec![false; topology.units()];
    let mut components = vec![0usize; partition.k];
    for start in 0..topology.units() {
        if seen[start] {
            continue;
        }
        let class = partition.labels[start];
        components[class - 1] += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in topology.neighbors(u) {
                if !seen[v] && partition.labels[v] == class {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    Ok((1..=partition.k)
        .map(|c| Contiguity {
            class: c,
            units: partition.members[c - 1].len(),
            components: components[c - 1],
            contiguous: components[c - 1] == 1,
        })
        .collect())
}
