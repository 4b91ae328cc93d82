//! Multiple correspondence analysis on the indicator matrix.

use crate::dataset::QualitativeTable;
use crate::matrix::Matrix;
use nalgebra::DMatrix;
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum McaError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("record {record} has no known modality for {variable}")]
    UnknownModality { record: usize, variable: String },
    #[error("need at least two records, got {0}")]
    TooFewRecords(usize),
    #[error("{requested} axes requested, at most {max} (J - Q) available")]
    TooManyAxes { requested: usize, max: usize },
    #[error("axis {axis} outside 1..={axes}")]
    InvalidAxis { axis: usize, axes: usize },
    #[error("no variables selected")]
    NoVariables,
    #[error("eigendecomposition did not converge")]
    Decomposition,
}

/// Coordinates of this magnitude or less are treated as zero by the sign rule.
pub const SIGN_EPS: f64 = 1e-10;

/// One-hot coding of `q` qualitative variables: n records x J modalities.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix {
    pub q: usize,
    /// (variable, modality) of each column.
    pub columns: Vec<(String, String)>,
    pub data: Matrix,
}

impl IndicatorMatrix {
    pub fn n_records(&self) -> usize {
        self.data.nrows()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.columns.len()];
        for row in self.data.rows() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }
}

/// Builds the indicator matrix: variables in the order given, modalities in coding order.
pub fn indicator(table: &QualitativeTable, variables: &[&str]) -> Result<IndicatorMatrix, McaError> {
    if variables.is_empty() {
        return Err(McaError::NoVariables);
    }
    let cols = variables
        .iter()
        .map(|v| table.column(v).ok_or_else(|| McaError::UnknownVariable(v.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let n = table.n_records();
    let mut columns = Vec::new();
    let mut offsets = Vec::with_capacity(cols.len());
    for c in &cols {
        offsets.push(columns.len());
        columns.extend(c.labels.iter().map(|m| (c.variable.clone(), m.clone())));
    }
    let j = columns.len();
    let mut data = Matrix::zeros(n, j);
    for (c, &off) in cols.iter().zip(&offsets) {
        for (record, code) in c.codes.iter().enumerate() {
            match code {
                Some(i) if *i < c.labels.len() => data.set(record, off + i, 1.0),
                _ => {
                    return Err(McaError::UnknownModality {
                        record,
                        variable: c.variable.clone(),
                    })
                }
            }
        }
    }
    Ok(IndicatorMatrix {
        q: cols.len(),
        columns,
        data,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct McaResult {
    /// All J - Q nontrivial eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalue over total inertia, per nontrivial axis.
    pub inertia_shares: Vec<f64>,
    pub total_inertia: f64,
    /// Retained (non-empty) columns as (variable, modality).
    pub modalities: Vec<(String, String)>,
    pub masses: Vec<f64>,
    /// Principal coordinates, modalities x axes.
    pub modality_coords: Matrix,
    /// Share of each axis' inertia carried by each modality, modalities x axes.
    pub contributions: Matrix,
    /// Principal coordinates, records x axes.
    pub individual_coords: Matrix,
    /// Columns dropped because no record takes that modality.
    pub dropped: Vec<(String, String)>,
    pub q: usize,
}

impl McaResult {
    pub fn axes(&self) -> usize {
        self.modality_coords.ncols()
    }

    pub fn eigenvalues_to_delimited(&self) -> String {
        let mut out = String::from("axis,eigenvalue,percent,cumulative_percent\n");
        let mut cum = 0.0;
        for (k, (l, s)) in self.eigenvalues.iter().zip(&self.inertia_shares).enumerate() {
            cum += s;
            let _ = writeln!(out, "{},{},{},{}", k + 1, l, s * 100.0, cum * 100.0);
        }
        out
    }

    pub fn coordinates_to_delimited(&self) -> String {
        let axes = self.axes();
        let mut out = String::from("variable,modality");
        for k in 1..=axes {
            let _ = write!(out, ",axis{k}");
        }
        out.push_str(",mass");
        for k in 1..=axes {
            let _ = write!(out, ",contribution{k}");
        }
        out.push('\n');
        for (j, (v, m)) in self.modalities.iter().enumerate() {
            let _ = write!(out, "{v},{m}");
            for k in 0..axes {
                let _ = write!(out, ",{}", self.modality_coords.get(j, k));
            }
            let _ = write!(out, ",{}", self.masses[j]);
            for k in 0..axes {
                let _ = write!(out, ",{}", self.contributions.get(j, k));
            }
            out.push('\n');
        }
        out
    }
}

/// Correspondence analysis of the indicator matrix, keeping `axes` axes of coordinates.
pub fn fit_mca(indicator: &IndicatorMatrix, axes: usize) -> Result<McaResult, McaError> {
    let n = indicator.n_records();
    if n < 2 {
        return Err(McaError::TooFewRecords(n));
    }
    let q = indicator.q;
    let sums = indicator.column_sums();
    let keep: Vec<usize> = (0..sums.len()).filter(|&j| sums[j] > 0.0).collect();
    let dropped: Vec<(String, String)> = (0..sums.len())
        .filter(|&j| sums[j] == 0.0)
        .map(|j| indicator.columns[j].clone())
        .collect();
    let j = keep.len();
    let max_axes = j.saturating_sub(q);
    if axes > max_axes {
        return Err(McaError::TooManyAxes {
            requested: axes,
            max: max_axes,
        });
    }
    let total = n as f64 * q as f64;
    let r = 1.0 / n as f64;
    let masses: Vec<f64> = keep.iter().map(|&c| sums[c] / total).collect();
    let s = DMatrix::from_fn(n, j, |i, k| {
        let p = indicator.data.get(i, keep[k]) / total;
        let c = masses[k];
        (p - r * c) / (r * c).sqrt()
    });
    // eigendecomposition of S'S (J x J) rather than an SVD of S: S always has Q exact
    // zero singular values, and the symmetric solver is robust to that
    let eig = nalgebra::SymmetricEigen::try_new(s.tr_mul(&s), f64::EPSILON, 0).ok_or(McaError::Decomposition)?;
    let mut order: Vec<usize> = (0..j).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order.truncate(max_axes);
    let sigma: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
    let eigenvalues: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    let total_inertia = (j as f64 - q as f64) / q as f64;
    let inertia_shares = eigenvalues.iter().map(|l| if total_inertia > 0.0 { l / total_inertia } else { 0.0 }).collect();

    let mut modality_coords = Matrix::zeros(j, axes);
    let mut contributions = Matrix::zeros(j, axes);
    let mut individual_coords = Matrix::zeros(n, axes);
    for k in 0..axes {
        let idx = order[k];
        let sk = sigma[k];
        let v = eig.eigenvectors.column(idx);
        let g: Vec<f64> = (0..j).map(|c| v[c] * sk / masses[c].sqrt()).collect();
        let sign = match g.iter().find(|x| x.abs() > SIGN_EPS) {
            Some(&x) if x < 0.0 => -1.0,
            _ => 1.0,
        };
        for c in 0..j {
            modality_coords.set(c, k, sign * g[c]);
            let ctr = if eigenvalues[k] > 0.0 { masses[c] * g[c] * g[c] / eigenvalues[k] } else { 0.0 };
            contributions.set(c, k, ctr);
        }
        // row principal coordinates: (S v)_i / sqrt(r)
        let sv = &s * v;
        for i in 0..n {
            individual_coords.set(i, k, sign * sv[i] / r.sqrt());
        }
    }
    Ok(McaResult {
        eigenvalues,
        inertia_shares,
        total_inertia,
        modalities: keep.iter().map(|&c| indicator.columns[c].clone()).collect(),
        masses,
        modality_coords,
        contributions,
        individual_coords,
        dropped,
        q,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalityPoint {
    pub variable: String,
    pub modality: String,
    pub x: f64,
    pub y: f64,
}

/// Modality points on the plane of axes `first` and `second` (1-based).
pub fn modality_coordinates(result: &McaResult, first: usize, second: usize) -> Result<Vec<ModalityPoint>, McaError> {
    let axes = result.axes();
    for axis in [first, second] {
        if axis == 0 || axis > axes {
            return Err(McaError::InvalidAxis { axis, axes });
        }
    }
    Ok(result
        .modalities
        .iter()
        .enumerate()
        .map(|(j, (v, m))| ModalityPoint {
            variable: v.clone(),
            modality: m.clone(),
            x: result.modality_coords.get(j, first - 1),
            y: result.modality_coords.get(j, second - 1),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::QualColumn;

    fn table(vars: &[(&str, usize, &[usize])]) -> QualitativeTable {
        let mut t = QualitativeTable::default();
        for (name, m, codes) in vars {
            t.push(QualColumn {
                variable: name.to_string(),
                labels: (0..*m).map(|i| format!("m{i}")).collect(),
                codes: codes.iter().map(|&c| Some(c)).collect(),
            });
        }
        t
    }

    #[test]
    fn indicator_rows() {
        let t = table(&[("A", 2, &[0, 1])]);
        let z = indicator(&t, &["A"]).unwrap();
        assert_eq!(z.data.row(0), &[1.0, 0.0]);
        assert_eq!(z.data.row(1), &[0.0, 1.0]);
        assert!(matches!(indicator(&t, &["B"]), Err(McaError::UnknownVariable(_))));
        let mut bad = t.clone();
        bad.columns[0].codes[1] = None;
        assert_eq!(
            indicator(&bad, &["A"]).unwrap_err(),
            McaError::UnknownModality { record: 1, variable: "A".into() }
        );
    }

    #[test]
    fn perfect_association() {
        let a = [0, 1, 2, 0, 1, 2, 0, 0];
        let t = table(&[("A", 3, &a), ("B", 3, &a)]);
        let z = indicator(&t, &["A", "B"]).unwrap();
        let res = fit_mca(&z, 2).unwrap();
        assert!((res.eigenvalues[0] - 1.0).abs() < 1e-10);
        assert!((res.eigenvalues.iter().sum::<f64>() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn centering_contributions_and_signs() {
        let t = table(&[("A", 3, &[0, 1, 2, 1, 0, 2, 2]), ("B", 2, &[0, 0, 1, 1, 0, 1, 0])]);
        let z = indicator(&t, &["A", "B"]).unwrap();
        let res = fit_mca(&z, 3).unwrap();
        for k in 0..3 {
            let mean: f64 = (0..5).map(|j| res.masses[j] * res.modality_coords.get(j, k)).sum();
            assert!(mean.abs() < 1e-12);
            let ctr: f64 = (0..5).map(|j| res.contributions.get(j, k)).sum();
            assert!((ctr - 1.0).abs() < 1e-10);
            let first = (0..5).map(|j| res.modality_coords.get(j, k)).find(|x| x.abs() > SIGN_EPS).unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn empty_modality_dropped_and_axis_errors() {
        let t = table(&[("A", 3, &[0, 1, 0, 1]), ("B", 2, &[0, 1, 1, 0])]);
        let z = indicator(&t, &["A", "B"]).unwrap();
        let res = fit_mca(&z, 2).unwrap();
        assert_eq!(res.dropped, vec![("A".to_string(), "m2".to_string())]);
        assert_eq!(res.modalities.len(), 4);
        assert_eq!(fit_mca(&z, 3).unwrap_err(), McaError::TooManyAxes { requested: 3, max: 2 });
        assert!(modality_coordinates(&res, 0, 1).is_err());
        assert!(modality_coordinates(&res, 1, 3).is_err());
        let p12 = modality_coordinates(&res, 1, 2).unwrap();
        let p21 = modality_coordinates(&res, 2, 1).unwrap();
        for (a, b) in p12.iter().zip(&p21) {
            assert_eq!((a.x, a.y), (b.y, b.x));
        }
    }

    #[test]
    fn exports_have_expected_shape() {
        let t = table(&[("A", 2, &[0, 1, 1]), ("B", 2, &[1, 0, 1])]);
        let res = fit_mca(&indicator(&t, &["A", "B"]).unwrap(), 1).unwrap();
        let coords = res.coordinates_to_delimited();
        assert!(coords.starts_with("variable,modality,axis1,mass,contribution1\n"));
        assert_eq!(coords.lines().count(), 5);
        assert_eq!(res.eigenvalues_to_delimited().lines().count(), 3);
    }
}
