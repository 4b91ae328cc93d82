use super::{DatasetError, Quantity};
use serde::{Deserialize, Serialize};

/// Qualitative variables obtained by discretizing a quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DerivedVariable {
    Agec,
    Ctindmoy,
    Durc,
    Har,
    Pparc,
}

impl DerivedVariable {
    pub const ALL: [DerivedVariable; 5] = [
        DerivedVariable::Agec,
        DerivedVariable::Ctindmoy,
        DerivedVariable::Durc,
        DerivedVariable::Har,
        DerivedVariable::Pparc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DerivedVariable::Agec => "AGEC",
            DerivedVariable::Ctindmoy => "CTINDMOY",
            DerivedVariable::Durc => "DURC",
            DerivedVariable::Har => "HAR",
            DerivedVariable::Pparc => "PPARC",
        }
    }

    pub fn source(self) -> Quantity {
        match self {
            DerivedVariable::Agec => Quantity::Age,
            DerivedVariable::Ctindmoy => Quantity::Tindmoy,
            DerivedVariable::Durc => Quantity::Cmdur,
            DerivedVariable::Har => Quantity::Mxmheur,
            DerivedVariable::Pparc => Quantity::Cppar,
        }
    }

    pub fn from_name(name: &str) -> Option<DerivedVariable> {
        let upper = name.trim().to_ascii_uppercase();
        DerivedVariable::ALL.into_iter().find(|v| v.name() == upper)
    }
}

/// Ordered bins over `[0, +inf)`.
///
/// With a zero label the bins are `{0}`, `(0, e1)`, `[e1, e2)`, ..., `[ek, +inf)`;
/// without one they are `[0, e1)`, `[e1, e2)`, ..., `[ek, +inf)`. The exact-zero
/// category is tested before the interval bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    pub variable: DerivedVariable,
    #[serde(default)]
    pub zero_label: Option<String>,
    pub edges: Vec<f64>,
    pub labels: Vec<String>,
}

impl Bins {
    fn new(variable: DerivedVariable, zero_label: Option<&str>, edges: &[f64], labels: &[&str]) -> Self {
        Self {
            variable,
            zero_label: zero_label.map(str::to_string),
            edges: edges.to_vec(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// All modality labels in coding order.
    pub fn modalities(&self) -> Vec<String> {
        self.zero_label.iter().chain(&self.labels).cloned().collect()
    }

    pub fn modality_count(&self) -> usize {
        self.labels.len() + usize::from(self.zero_label.is_some())
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |reason: &str| DatasetError::InvalidCoding {
            variable: self.variable.name().to_string(),
            reason: reason.to_string(),
        };
        if self.labels.len() != self.edges.len() + 1 {
            return Err(bad("need exactly one more label than edges"));
        }
        if self.edges.iter().any(|e| !e.is_finite() || *e <= 0.0) {
            return Err(bad("edges must be finite and positive"));
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("edges must be strictly increasing"));
        }
        let all = self.modalities();
        for (i, l) in all.iter().enumerate() {
            if all[..i].contains(l) {
                return Err(bad("duplicate label"));
            }
        }
        Ok(())
    }

    /// Index of the modality containing `value` (in [`Bins::modalities`] order).
    pub fn index_of(&self, value: f64) -> Result<usize, DatasetError> {
        if !(value >= 0.0) || value.is_infinite() {
            return Err(DatasetError::Domain {
                variable: self.variable.name().to_string(),
                value,
            });
        }
        let offset = usize::from(self.zero_label.is_some());
        if offset == 1 && value == 0.0 {
            return Ok(0);
        }
        let bin = self.edges.partition_point(|&e| e <= value);
        Ok(offset + bin)
    }
}

/// Discretization rules for every derived variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingSpec {
    pub bins: Vec<Bins>,
}

impl Default for CodingSpec {
    /// The registry coding: age classes, daily benefit classes (francs), cumulated
    /// duration classes (months), monthly occasional-work hours, occasional-work share.
    fn default() -> Self {
        use DerivedVariable::*;
        Self {
            bins: vec![
                Bins::new(Agec, None, &[25.0, 35.0, 45.0, 55.0], &["<25", "25-35", "35-45", "45-55", ">55"]),
                Bins::new(Ctindmoy, None, &[60.0, 100.0, 150.0], &["<60", "60-100", "100-150", ">150"]),
                Bins::new(Durc, None, &[12.0, 24.0], &["<12", "12-24", ">24"]),
                Bins::new(Har, Some("0"), &[39.0, 78.0, 117.0], &["0-39", "39-78", "78-117", ">117"]),
                Bins::new(Pparc, Some("0"), &[0.1, 0.3], &["0-0.1", "0.1-0.3", ">0.3"]),
            ],
        }
    }
}

impl CodingSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        for v in DerivedVariable::ALL {
            self.bins_for(v)?;
        }
        self.bins.iter().try_for_each(Bins::validate)
    }

    pub fn bins_for(&self, variable: DerivedVariable) -> Result<&Bins, DatasetError> {
        self.bins
            .iter()
            .find(|b| b.variable == variable)
            .ok_or_else(|| DatasetError::UnknownVariable(variable.name().to_string()))
    }

    /// Replaces the bins of one variable.
    pub fn with_bins(mut self, bins: Bins) -> Self {
        self.bins.retain(|b| b.variable != bins.variable);
        self.bins.push(bins);
        self
    }

    /// Maps `value` onto its modality label for the named derived variable.
    pub fn discretize(&self, variable: &str, value: f64) -> Result<&str, DatasetError> {
        let v = DerivedVariable::from_name(variable)
            .ok_or_else(|| DatasetError::UnknownVariable(variable.to_string()))?;
        let bins = self.bins_for(v)?;
        let i = bins.index_of(value)?;
        Ok(match (&bins.zero_label, i) {
            (Some(z), 0) => z.as_str(),
            (Some(_), i) => bins.labels[i - 1].as_str(),
            (None, i) => bins.labels[i].as_str(),
        })
    }
}

/// Free-function form of [`CodingSpec::discretize`].
pub fn discretize<'a>(variable: &str, value: f64, spec: &'a CodingSpec) -> Result<&'a str, DatasetError> {
    spec.discretize(variable, value)
}
