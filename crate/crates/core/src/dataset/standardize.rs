use super::DatasetError;

/// A z-scored column with the statistics needed to invert it.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub z: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation (divides by n).
    pub sd: f64,
}

/// Centers and scales a column to mean 0 and population standard deviation 1.
pub fn standardize(column: &[f64]) -> Result<Standardized, DatasetError> {
    if column.is_empty() {
        return Err(DatasetError::EmptyColumn);
    }
    let n = column.len() as f64;
    let mean = column.iter().sum::<f64>() / n;
    let var = column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    let scale = column.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !sd.is_finite() || sd <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(DatasetError::ZeroVariance(None));
    }
    let z = column.iter().map(|x| (x - mean) / sd).collect();
    Ok(Standardized { z, mean, sd })
}

pub fn unstandardize(z: &[f64], mean: f64, sd: f64) -> Vec<f64> {
    z.iter().map(|v| v * sd + mean).collect()
}
