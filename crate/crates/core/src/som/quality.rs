use super::train::argmin;
use super::{SomError, SomMap};
use crate::matrix::{squared_distance, Matrix};
use rayon::prelude::*;

/// Best-matching unit: smallest squared Euclidean distance, lowest index on ties.
pub fn bmu(map: &SomMap, x: &[f64]) -> Result<usize, SomError> {
    map.check_dim(x.len())?;
    Ok(nearest(map, x))
}

fn nearest(map: &SomMap, x: &[f64]) -> usize {
    argmin((0..map.units()).map(|u| squared_distance(x, map.code(u))))
}

/// First and second best-matching units, same tie rule, the second excluding the first.
pub fn second_bmu(map: &SomMap, x: &[f64]) -> Result<(usize, usize), SomError> {
    map.check_dim(x.len())?;
    if map.units() < 2 {
        return Err(SomError::TooFewUnits);
    }
    let first = nearest(map, x);
    let second = argmin((0..map.units()).map(|u| {
        if u == first {
            f64::INFINITY
        } else {
            squared_distance(x, map.code(u))
        }
    }));
    // all remaining distances infinite cannot happen with finite data; keep the result distinct
    let second = if second == first { (first + 1) % map.units() } else { second };
    Ok((first, second))
}

/// Per-record unit plus record counts per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub units: Vec<usize>,
    pub counts: Vec<usize>,
}

pub fn assign(map: &SomMap, data: &Matrix) -> Result<Assignment, SomError> {
    map.check_dim(data.ncols())?;
    let units: Vec<usize> = (0..data.nrows())
        .into_par_iter()
        .with_min_len(256)
        .map(|i| nearest(map, data.row(i)))
        .collect();
    let mut counts = vec![0; map.units()];
    for &u in &units {
        counts[u] += 1;
    }
    Ok(Assignment { units, counts })
}

/// Mean Euclidean (not squared) distance from each record to its BMU code vector.
pub fn quantization_error(map: &SomMap, data: &Matrix) -> Result<f64, SomError> {
    map.check_dim(data.ncols())?;
    if data.is_empty() {
        return Err(SomError::EmptyData);
    }
    let dists: Vec<f64> = (0..data.nrows())
        .into_par_iter()
        .with_min_len(256)
        .map(|i| {
            let x = data.row(i);
            squared_distance(x, map.code(nearest(map, x))).sqrt()
        })
        .collect();
    Ok(dists.iter().sum::<f64>() / data.nrows() as f64)
}

/// Fraction of records whose two best units are not lattice neighbors.
pub fn topographic_error(map: &SomMap, data: &Matrix) -> Result<f64, SomError> {
    map.check_dim(data.ncols())?;
    if map.units() < 2 {
        return Err(SomError::TooFewUnits);
    }
    if data.is_empty() {
        return Err(SomError::EmptyData);
    }
    let mut broken = 0usize;
    for x in data.rows() {
        let (a, b) = second_bmu(map, x)?;
        if !map.topology.are_neighbors(a, b) {
            broken += 1;
        }
    }
    Ok(broken as f64 / data.nrows() as f64)
}
