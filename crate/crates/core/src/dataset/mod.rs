//! Spell records, qualitative coding, standardization and the synthetic cohort generator.
//!
//! A [`SpellRecord`] is one row of the registry extract: one unemployment spell of one
//! individual, carrying the individual's cumulative quantities as of that spell. The
//! classification works on one record per individual (the latest spell, see
//! [`latest_per_individual`]); the transition tables use every spell.

mod coding;
mod features;
mod ingest;
mod standardize;
mod synthetic;

pub use coding::{discretize, Bins, CodingSpec, DerivedVariable};
pub use features::{
    build_feature_matrix, read_coded_dataset, write_coded_dataset, CodedDataset, ColumnStats, QualColumn,
    QualitativeTable, CODED_FORMAT, FEATURES, QUALITATIVE_VARIABLES,
};
pub use ingest::{ingest, write_records, ColumnSchema, IngestOptions, IngestOutcome, Rejection};
pub use standardize::{standardize, unstandardize, Standardized};
pub use synthetic::{generate_synthetic, ClassLaw, SyntheticCohort, SyntheticSpec, VariableLaw, PAPER_CLASS_COUNTS};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{variable}: value {value} outside the variable's domain")]
    Domain { variable: String, value: f64 },
    #[error("unknown derived variable {0}")]
    UnknownVariable(String),
    #[error("invalid coding spec for {variable}: {reason}")]
    InvalidCoding { variable: String, reason: String },
    #[error("zero-variance column{}", .0.as_ref().map(|c| format!(" {c}")).unwrap_or_default())]
    ZeroVariance(Option<String>),
    #[error("empty column")]
    EmptyColumn,
    #[error("{field} missing for individual {individual}")]
    MissingFeature { individual: String, field: String },
    #[error("record for individual {individual} violates invariant: {reason}")]
    InvalidRecord { individual: String, reason: String },
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthetic(String),
    #[error("malformed coded dataset: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The quantitative variables of the registry extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Quantity {
    Age,
    Cmdur,
    Cppar,
    Dur,
    Exper,
    Indur,
    Mgain,
    Mxmheur,
    Nchom,
    Tindmoy,
    Srreval,
}

impl Quantity {
    pub const ALL: [Quantity; 11] = [
        Quantity::Age,
        Quantity::Cmdur,
        Quantity::Cppar,
        Quantity::Dur,
        Quantity::Exper,
        Quantity::Indur,
        Quantity::Mgain,
        Quantity::Mxmheur,
        Quantity::Nchom,
        Quantity::Tindmoy,
        Quantity::Srreval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Age => "AGE",
            Quantity::Cmdur => "CMDUR",
            Quantity::Cppar => "CPPAR",
            Quantity::Dur => "DUR",
            Quantity::Exper => "EXPER",
            Quantity::Indur => "INDUR",
            Quantity::Mgain => "MGAIN",
            Quantity::Mxmheur => "MXMHEUR",
            Quantity::Nchom => "NCHOM",
            Quantity::Tindmoy => "TINDMOY",
            Quantity::Srreval => "SRREVAL",
        }
    }

    /// Accepts the canonical name; `PPAR` is the alternate spelling of `CPPAR`.
    pub fn from_name(name: &str) -> Option<Quantity> {
        let upper = name.trim().to_ascii_uppercase();
        if upper == "PPAR" {
            return Some(Quantity::Cppar);
        }
        Quantity::ALL.into_iter().find(|q| q.name() == upper)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Education level (DIPL3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Education {
    AboveBac,
    Bac,
    BelowBac,
}

impl Education {
    pub const ALL: [Education; 3] = [Education::AboveBac, Education::Bac, Education::BelowBac];

    pub fn label(self) -> &'static str {
        match self {
            Education::AboveBac => ">bac",
            Education::Bac => "bac",
            Education::BelowBac => "<bac",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Parses the label or the numeric code 1..=3.
    pub fn parse(raw: &str) -> Option<Education> {
        match raw.trim().to_ascii_lowercase().as_str() {
            ">bac" | "1" => Some(Education::AboveBac),
            "bac" | "2" => Some(Education::Bac),
            "<bac" | "3" => Some(Education::BelowBac),
            _ => None,
        }
    }
}

/// Cause of registration at the employment bureau (RMOTIFI).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Registration {
    Layoff = 1,
    EndOfContract = 2,
    Quit = 3,
    FirstJobSearch = 4,
}

impl Registration {
    pub const ALL: [Registration; 4] = [
        Registration::Layoff,
        Registration::EndOfContract,
        Registration::Quit,
        Registration::FirstJobSearch,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Registration> {
        Registration::ALL.get((code as usize).wrapping_sub(1)).copied()
    }
}

/// Type of exit from unemployment (RMOTIFA).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Exit {
    Job = 1,
    Training = 2,
    Withdrawal = 3,
    Cancellation = 4,
}

impl Exit {
    pub const ALL: [Exit; 4] = [Exit::Job, Exit::Training, Exit::Withdrawal, Exit::Cancellation];

    /// Raw registry code for administrative cancellations that were judged to be
    /// unreported job finds.
    pub const UNREPORTED_JOB_CODE: u16 = 90;

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Exit> {
        Exit::ALL.get((code as usize).wrapping_sub(1)).copied()
    }

    /// Maps a raw exit code onto the four categories. Code 90 folds into `Job`.
    pub fn from_raw(code: u16) -> Option<Exit> {
        if code == Self::UNREPORTED_JOB_CODE {
            return Some(Exit::Job);
        }
        u8::try_from(code).ok().and_then(Exit::from_code)
    }
}

/// One unemployment spell of one individual.
///
/// Quantities are optional at the type level so that incomplete rows can be represented;
/// [`ingest`] rejects rows missing a mandatory value and [`build_feature_matrix`] refuses
/// records missing a feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpellRecord {
    pub individual_id: String,
    pub spell_index: u32,
    pub age: Option<f64>,
    pub cmdur: Option<f64>,
    pub cppar: Option<f64>,
    pub dur: Option<f64>,
    pub exper: Option<f64>,
    pub indur: Option<f64>,
    pub mgain: Option<f64>,
    pub mxmheur: Option<f64>,
    pub nchom: Option<u32>,
    pub tindmoy: Option<f64>,
    pub srreval: Option<f64>,
    pub dipl3: Education,
    pub rmotifi: Registration,
    pub rmotifa: Option<Exit>,
}

impl SpellRecord {
    pub fn value(&self, q: Quantity) -> Option<f64> {
        match q {
            Quantity::Age => self.age,
            Quantity::Cmdur => self.cmdur,
            Quantity::Cppar => self.cppar,
            Quantity::Dur => self.dur,
            Quantity::Exper => self.exper,
            Quantity::Indur => self.indur,
            Quantity::Mgain => self.mgain,
            Quantity::Mxmheur => self.mxmheur,
            Quantity::Nchom => self.nchom.map(f64::from),
            Quantity::Tindmoy => self.tindmoy,
            Quantity::Srreval => self.srreval,
        }
    }

    pub fn set_value(&mut self, q: Quantity, v: Option<f64>) {
        match q {
            Quantity::Age => self.age = v,
            Quantity::Cmdur => self.cmdur = v,
            Quantity::Cppar => self.cppar = v,
            Quantity::Dur => self.dur = v,
            Quantity::Exper => self.exper = v,
            Quantity::Indur => self.indur = v,
            Quantity::Mgain => self.mgain = v,
            Quantity::Mxmheur => self.mxmheur = v,
            Quantity::Nchom => self.nchom = v.map(|x| x.round().max(0.0) as u32),
            Quantity::Tindmoy => self.tindmoy = v,
            Quantity::Srreval => self.srreval = v,
        }
    }

    /// Checks the record invariants on the values that are present.
    pub fn validate(&self) -> Result<(), String> {
        if self.spell_index < 1 {
            return Err("spell index must be at least 1".into());
        }
        if let Some(n) = self.nchom {
            if n < 2 {
                return Err("not recurring".into());
            }
        }
        for q in Quantity::ALL {
            if let Some(v) = self.value(q) {
                if !v.is_finite() {
                    return Err(format!("{q} is not finite"));
                }
                if q != Quantity::Srreval && q != Quantity::Mgain && q != Quantity::Tindmoy && v < 0.0 {
                    return Err(format!("{q} is negative"));
                }
            }
        }
        if let Some(p) = self.cppar {
            if !(0.0..=1.0).contains(&p) {
                return Err("CPPAR outside [0,1]".into());
            }
        }
        if self.rmotifi == Registration::FirstJobSearch && self.srreval.is_some() {
            return Err("SRREVAL present for a first job search".into());
        }
        Ok(())
    }
}

/// Keeps the highest-indexed spell of every individual, ordered by individual id.
pub fn latest_per_individual(records: &[SpellRecord]) -> Vec<SpellRecord> {
    let mut latest: BTreeMap<&str, &SpellRecord> = BTreeMap::new();
    for r in records {
        latest
            .entry(r.individual_id.as_str())
            .and_modify(|cur| {
                if r.spell_index > cur.spell_index {
                    *cur = r;
                }
            })
            .or_insert(r);
    }
    latest.into_values().cloned().collect()
}

/// Groups spells by individual, each group sorted by spell index.
pub fn spells_by_individual(records: &[SpellRecord]) -> BTreeMap<&str, Vec<&SpellRecord>> {
    let mut groups: BTreeMap<&str, Vec<&SpellRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.individual_id.as_str()).or_default().push(r);
    }
    for spells in groups.values_mut() {
        spells.sort_by_key(|r| r.spell_index);
    }
    groups
}

#[cfg(test)]
pub(crate) fn sample_record(id: &str) -> SpellRecord {
    SpellRecord {
        individual_id: id.to_string(),
        spell_index: 2,
        age: Some(30.0),
        cmdur: Some(12.0),
        cppar: Some(0.1),
        dur: Some(200.0),
        exper: Some(3.0),
        indur: Some(150.0),
        mgain: Some(500.0),
        mxmheur: Some(40.0),
        nchom: Some(2),
        tindmoy: Some(80.0),
        srreval: Some(250.0),
        dipl3: Education::Bac,
        rmotifi: Registration::EndOfContract,
        rmotifa: Some(Exit::Job),
    }
}
