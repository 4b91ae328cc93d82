//! Independent, deliberately naive reference implementations used by the tests.
#![allow(dead_code)]

/// One naive Ward merge: (smaller id, larger id, cost, leaf count).
pub type NaiveMerge = (usize, usize, f64, usize);

/// Ward agglomeration recomputing every centroid and every pair cost at each step.
pub fn naive_ward(points: &[Vec<f64>], weights: &[f64]) -> Vec<NaiveMerge> {
    let n = points.len();
    // (id, leaf members)
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    let centroid = |members: &[usize]| -> (f64, Vec<f64>) {
        let w: f64 = members.iter().map(|&i| weights[i]).sum();
        let dim = points[0].len();
        let mut c = vec![0.0; dim];
        for &i in members {
            for d in 0..dim {
                c[d] += weights[i] * points[i][d];
            }
        }
        for v in &mut c {
            *v /= w;
        }
        (w, c)
    };
    for t in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let (wa, ca) = centroid(&clusters[a].1);
                let (wb, cb) = centroid(&clusters[b].1);
                let d2: f64 = ca.iter().zip(&cb).map(|(x, y)| (x - y) * (x - y)).sum();
                let cost = wa * wb / (wa + wb) * d2;
                let lo = clusters[a].0.min(clusters[b].0);
                let hi = clusters[a].0.max(clusters[b].0);
                let better = match best {
                    None => true,
                    Some((c, l, h, _, _)) => cost < c || (cost == c && (lo, hi) < (l, h)),
                };
                if better {
                    best = Some((cost, lo, hi, a, b));
                }
            }
        }
        let (cost, lo, hi, a, b) = best.unwrap();
        let mut members = clusters[a].1.clone();
        members.extend(clusters[b].1.iter().copied());
        let size = members.len();
        clusters.remove(b);
        clusters.remove(a);
        clusters.push((n + t, members));
        merges.push((lo, hi, cost, size));
    }
    merges
}

/// Lloyd's k-means from the given centers until assignments stop changing.
/// Nearest center with lowest index on ties; empty clusters keep their center.
pub fn lloyd(data: &[Vec<f64>], centers: &[Vec<f64>], max_iter: usize) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut centers = centers.to_vec();
    let mut assign: Vec<usize> = Vec::new();
    for _ in 0..max_iter {
        let next: Vec<usize> = data
            .iter()
            .map(|x| {
                let mut best = (0, f64::INFINITY);
                for (k, c) in centers.iter().enumerate() {
                    let d: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d < best.1 {
                        best = (k, d);
                    }
                }
                best.0
            })
            .collect();
        let stable = next == assign;
        assign = next;
        for (k, c) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = data.iter().zip(&assign).filter(|(_, &a)| a == k).map(|(x, _)| x).collect();
            if members.is_empty() {
                continue;
            }
            for d in 0..c.len() {
                c[d] = members.iter().map(|x| x[d]).sum::<f64>() / members.len() as f64;
            }
        }
        if stable {
            break;
        }
    }
    (assign, centers)
}

/// Gaussian lattice kernel on Chebyshev distance, zeroed below 1e-12.
pub fn lattice_kernel(rows: usize, cols: usize, sigma: f64) -> Vec<Vec<f64>> {
    let units = rows * cols;
    let mut h = vec![vec![0.0; units]; units];
    for u in 0..units {
        for v in 0..units {
            let d = ((u / cols).abs_diff(v / cols)).max((u % cols).abs_diff(v % cols)) as f64;
            h[u][v] = if d == 0.0 {
                1.0
            } else if sigma <= 0.0 {
                0.0
            } else {
                let w = (-d * d / (2.0 * sigma * sigma)).exp();
                if w < 1e-12 {
                    0.0
                } else {
                    w
                }
            };
        }
    }
    h
}

/// `sum_i min_c sum_u h(c,u) |x_i - m_u|^2`, by brute force.
pub fn brute_distortion(data: &[Vec<f64>], codes: &[Vec<f64>], h: &[Vec<f64>]) -> f64 {
    data.iter()
        .map(|x| {
            let d: Vec<f64> = codes.iter().map(|m| x.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum()).collect();
            h.iter()
                .map(|row| row.iter().zip(&d).map(|(w, dd)| w * dd).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns eigenvalues in descending order and matching eigenvectors as columns.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&i| v[r][i]).collect()).collect();
    (values, vectors)
}

/// MCA straight from the definition: eigenvalues of S'S for the standardized residuals
/// of the indicator matrix `z` with `q` variables, and modality principal coordinates
/// on the leading `axes` axes (unsigned).
pub fn dense_mca(z: &[Vec<f64>], q: usize, axes: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = z.len();
    let j = z[0].len();
    let total = (n * q) as f64;
    let c: Vec<f64> = (0..j).map(|k| z.iter().map(|row| row[k]).sum::<f64>() / total).collect();
    let r = 1.0 / n as f64;
    let s: Vec<Vec<f64>> = z
        .iter()
        .map(|row| (0..j).map(|k| (row[k] / total - r * c[k]) / (r * c[k]).sqrt()).collect())
        .collect();
    let sts: Vec<Vec<f64>> = (0..j).map(|a| (0..j).map(|b| s.iter().map(|row| row[a] * row[b]).sum()).collect()).collect();
    let (values, vectors) = jacobi_eigen(&sts);
    let coords = (0..j)
        .map(|k| (0..axes).map(|ax| vectors[k][ax] * values[ax].max(0.0).sqrt() / c[k].sqrt()).collect())
        .collect();
    (values, coords)
}
