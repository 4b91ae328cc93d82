use super::{GridTopology, SomError, SomMap};
use crate::matrix::Matrix;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Code vectors are data rows drawn without replacement (with replacement when the
    /// grid has more units than there are rows).
    RandomSample,
    /// Units spread linearly over the plane of the two leading principal directions:
    /// lattice rows along the first, columns along the second, each spanning
    /// +/- 2 standard deviations around the data mean.
    PcaPlane,
}

pub fn init_map(topology: GridTopology, dim: usize, data: &Matrix, strategy: InitStrategy, seed: u64) -> Result<SomMap, SomError> {
    if data.is_empty() {
        return Err(SomError::EmptyData);
    }
    if data.ncols() != dim {
        return Err(SomError::DimensionMismatch {
            expected: dim,
            found: data.ncols(),
        });
    }
    let units = topology.units();
    let codes = match strategy {
        InitStrategy::RandomSample => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = data.nrows();
            let picks: Vec<usize> = if units <= n {
                index::sample(&mut rng, n, units).into_vec()
            } else {
                (0..units).map(|_| rng.random_range(0..n)).collect()
            };
            data.select_rows(&picks)
        }
        InitStrategy::PcaPlane => pca_plane(topology, data),
    };
    let mut map = SomMap::from_codes(topology, codes)?;
    map.seed = seed;
    Ok(map)
}

fn pca_plane(topology: GridTopology, data: &Matrix) -> Matrix {
    let (n, dim) = (data.nrows(), data.ncols());
    let mut mean = vec![0.0; dim];
    for row in data.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x / n as f64;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for row in data.rows() {
        for a in 0..dim {
            let da = row[a] - mean[a];
            for b in a..dim {
                cov[(a, b)] += da * (row[b] - mean[b]) / n as f64;
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            cov[(a, b)] = cov[(b, a)];
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let direction = |k: usize| -> Vec<f64> {
        let Some(&col) = order.get(k) else {
            return vec![0.0; dim];
        };
        let scale = 2.0 * eig.eigenvalues[col].max(0.0).sqrt();
        let v: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
        // orient so the largest-magnitude component is positive
        let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        v.into_iter().map(|x| sign * scale * x).collect()
    };
    let (d1, d2) = (direction(0), direction(1));
    let spread = |i: usize, len: usize| if len <= 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (len - 1) as f64 };
    let mut codes = Matrix::zeros(topology.units(), dim);
    for u in 0..topology.units() {
        let (r, c) = topology.coords(u);
        let (a, b) = (spread(r, topology.rows), spread(c, topology.cols));
        for (j, cv) in codes.row_mut(u).iter_mut().enumerate() {
            *cv = mean[j] + a * d1[j] + b * d2[j];
        }
    }
    codes
}
