//! Descriptive outputs: class means/SDs, qualitative distributions, inter-unit
//! distances on the lattice and code-vector profiles.

use crate::dataset::QualColumn;
use crate::matrix::distance;
use crate::som::SomMap;
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProfileError {
    #[error("{found} labels for {expected} records")]
    LabelCount { expected: usize, found: usize },
    #[error("label {label} outside 1..={k}")]
    LabelRange { label: usize, k: usize },
    #[error("unknown modality index {index} for {variable} (record {record})")]
    UnknownModality { variable: String, record: usize, index: usize },
    #[error("unit {unit} out of range (map has {units})")]
    UnitOutOfRange { unit: usize, units: usize },
    #[error("{found} names for {expected} components")]
    NameCount { expected: usize, found: usize },
}

/// A numeric variable over all records; `None` marks values that do not exist for a
/// record (e.g. a wage before a first job).
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileColumn {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

/// Mean and population SD over the defined values of one scope. Both are `None`
/// when the scope holds no defined value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

impl Summary {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let count = values.clone().count();
        if count == 0 {
            return Self {
                count,
                mean: None,
                sd: None,
            };
        }
        let mean = values.clone().sum::<f64>() / count as f64;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
        Self {
            count,
            mean: Some(mean),
            sd: Some(var.sqrt()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableProfile {
    pub variable: String,
    /// Index `c - 1` for class `c`.
    pub classes: Vec<Summary>,
    pub population: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile {
    pub k: usize,
    pub class_sizes: Vec<usize>,
    pub population_size: usize,
    pub variables: Vec<VariableProfile>,
}

impl ClassProfile {
    pub fn variable(&self, name: &str) -> Option<&VariableProfile> {
        self.variables.iter().find(|v| v.variable == name)
    }

    /// Long format: one row per (variable, scope).
    pub fn to_delimited(&self) -> String {
        let mut out = String::from("variable,scope,count,mean,sd\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for v in &self.variables {
            for (c, s) in v.classes.iter().enumerate() {
                let _ = writeln!(out, "{},class{},{},{},{}", v.variable, c + 1, s.count, opt(s.mean), opt(s.sd));
            }
            let p = &v.population;
            let _ = writeln!(out, "{},population,{},{},{}", v.variable, p.count, opt(p.mean), opt(p.sd));
        }
        out
    }
}

fn check_labels(n: usize, labels: &[usize], k: usize) -> Result<(), ProfileError> {
    if labels.len() != n {
        return Err(ProfileError::LabelCount {
            expected: n,
            found: labels.len(),
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l == 0 || l > k) {
        return Err(ProfileError::LabelRange { label, k });
    }
    Ok(())
}

/// Per-class and whole-population means and SDs. `labels` are classes `1..=k`.
pub fn class_profiles(columns: &[ProfileColumn], labels: &[usize], k: usize) -> Result<ClassProfile, ProfileError> {
    let n = labels.len();
    check_labels(n, labels, k)?;
    let mut class_sizes = vec![0; k];
    for &l in labels {
        class_sizes[l - 1] += 1;
    }
    let mut variables = Vec::with_capacity(columns.len());
    for col in columns {
        check_labels(col.values.len(), labels, k)?;
        let defined = |class: Option<usize>| {
            col.values
                .iter()
                .zip(labels)
                .filter(move |&(_, &l)| class.is_none_or(|c| c == l))
                .filter_map(|(v, _)| *v)
        };
        variables.push(VariableProfile {
            variable: col.name.clone(),
            classes: (1..=k).map(|c| Summary::of(defined(Some(c)))).collect(),
            population: Summary::of(defined(None)),
        });
    }
    Ok(ClassProfile {
        k,
        class_sizes,
        population_size: n,
        variables,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScopeKind {
    Class,
    Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Broad class `1..=k`.
    Class(usize),
    /// Grid unit, 0-based.
    Cell(usize),
    Population,
}

impl Scope {
    pub fn label(&self) -> String {
        match self {
            Scope::Class(c) => format!("class{c}"),
            Scope::Cell(u) => format!("cell{u}"),
            Scope::Population => "population".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualDistribution {
    pub scope: Scope,
    pub variable: String,
    pub modalities: Vec<String>,
    pub counts: Vec<usize>,
    /// Relative frequencies; all zero when `empty`.
    pub frequencies: Vec<f64>,
    /// Records of the scope without a value for the variable.
    pub missing: usize,
    pub empty: bool,
}

impl QualDistribution {
    fn from_counts(scope: Scope, column: &QualColumn, counts: Vec<usize>, missing: usize) -> Self {
        let total: usize = counts.iter().sum();
        let frequencies = counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect();
        Self {
            scope,
            variable: column.variable.clone(),
            modalities: column.labels.clone(),
            counts,
            frequencies,
            missing,
            empty: total == 0,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Distribution of one qualitative variable in every group, then in the population.
///
/// For [`ScopeKind::Class`], `groups` holds classes `1..=n_groups`; for
/// [`ScopeKind::Cell`], units `0..n_groups`. Empty groups are kept and flagged.
pub fn qualitative_distribution(
    column: &QualColumn,
    groups: &[usize],
    n_groups: usize,
    kind: ScopeKind,
) -> Result<Vec<QualDistribution>, ProfileError> {
    let n = column.codes.len();
    let offset = match kind {
        ScopeKind::Class => {
            check_labels(n, groups, n_groups)?;
            1
        }
        ScopeKind::Cell => {
            if groups.len() != n {
                return Err(ProfileError::LabelCount {
                    expected: n,
                    found: groups.len(),
                });
            }
            if let Some(&u) = groups.iter().find(|&&u| u >= n_groups) {
                return Err(ProfileError::UnitOutOfRange { unit: u, units: n_groups });
            }
            0
        }
    };
    let m = column.labels.len();
    let mut counts = vec![vec![0usize; m]; n_groups];
    let mut missing = vec![0usize; n_groups];
    for (record, (code, &g)) in column.codes.iter().zip(groups).enumerate() {
        let g = g - offset;
        match *code {
            Some(i) if i < m => counts[g][i] += 1,
            Some(index) => {
                return Err(ProfileError::UnknownModality {
                    variable: column.variable.clone(),
                    record,
                    index,
                })
            }
            None => missing[g] += 1,
        }
    }
    let mut population = vec![0usize; m];
    for row in &counts {
        for (p, c) in population.iter_mut().zip(row) {
            *p += c;
        }
    }
    let total_missing = missing.iter().sum();
    let mut out: Vec<QualDistribution> = counts
        .into_iter()
        .zip(missing)
        .enumerate()
        .map(|(g, (c, miss))| {
            let scope = match kind {
                ScopeKind::Class => Scope::Class(g + 1),
                ScopeKind::Cell => Scope::Cell(g),
            };
            QualDistribution::from_counts(scope, column, c, miss)
        })
        .collect();
    out.push(QualDistribution::from_counts(Scope::Population, column, population, total_missing));
    Ok(out)
}

/// Long format: one row per (scope, variable, modality).
pub fn distributions_to_delimited(distributions: &[QualDistribution]) -> String {
    let mut out = String::from("scope,variable,modality,count,frequency,empty\n");
    for d in distributions {
        for ((m, c), f) in d.modalities.iter().zip(&d.counts).zip(&d.frequencies) {
            let _ = writeln!(out, "{},{},{},{},{},{}", d.scope.label(), d.variable, m, c, f, d.empty);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborDistanceField {
    /// For each unit, its lattice neighbors with code-vector distances, increasing unit order.
    pub neighbors: Vec<Vec<(usize, f64)>>,
    /// Largest neighbor distance, for display normalization.
    pub max_distance: f64,
}

impl NeighborDistanceField {
    pub fn distance(&self, u: usize, v: usize) -> Option<f64> {
        self.neighbors.get(u)?.iter().find(|&&(w, _)| w == v).map(|&(_, d)| d)
    }

    pub fn to_delimited(&self) -> String {
        let mut out = String::from("unit,neighbor,distance,normalized\n");
        for (u, list) in self.neighbors.iter().enumerate() {
            for &(v, d) in list {
                let norm = if self.max_distance > 0.0 { d / self.max_distance } else { 0.0 };
                let _ = writeln!(out, "{u},{v},{d},{norm}");
            }
        }
        out
    }
}

pub fn neighbor_distances(map: &SomMap) -> NeighborDistanceField {
    let t = map.topology;
    let mut neighbors = Vec::with_capacity(map.units());
    let mut max_distance = 0.0f64;
    for u in 0..map.units() {
        let list: Vec<(usize, f64)> = t
            .neighbors(u)
            .into_iter()
            .map(|v| {
                // computed in canonical order so d(u,v) and d(v,u) are the same float
                let (a, b) = (u.min(v), u.max(v));
                (v, distance(map.code(a), map.code(b)))
            })
            .collect();
        for &(_, d) in &list {
            max_distance = max_distance.max(d);
        }
        neighbors.push(list);
    }
    NeighborDistanceField {
        neighbors,
        max_distance,
    }
}

/// Standardized code-vector components of `unit`, paired with feature names.
pub fn codevector_profile(map: &SomMap, unit: usize, names: &[&str]) -> Result<Vec<(String, f64)>, ProfileError> {
    if unit >= map.units() {
        return Err(ProfileError::UnitOutOfRange {
            unit,
            units: map.units(),
        });
    }
    if names.len() != map.dim() {
        return Err(ProfileError::NameCount {
            expected: map.dim(),
            found: names.len(),
        });
    }
    Ok(names.iter().map(|n| n.to_string()).zip(map.code(unit).iter().copied()).collect())
}
