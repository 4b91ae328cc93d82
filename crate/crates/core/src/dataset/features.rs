use super::{standardize, CodingSpec, DatasetError, DerivedVariable, Education, Exit, Quantity, Registration, SpellRecord};
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// The ten classification features, in matrix column order. SRREVAL is excluded.
pub const FEATURES: [Quantity; 10] = [
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
];

/// The eight qualitative variables, in table order.
pub const QUALITATIVE_VARIABLES: [&str; 8] =
    ["AGEC", "CTINDMOY", "DIPL3", "DURC", "HAR", "PPARC", "RMOTIFA", "RMOTIFI"];

/// One qualitative variable: its modality labels and a per-record modality index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualColumn {
    pub variable: String,
    pub labels: Vec<String>,
    pub codes: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QualitativeTable {
    pub columns: Vec<QualColumn>,
}

impl QualitativeTable {
    pub fn column(&self, variable: &str) -> Option<&QualColumn> {
        self.columns.iter().find(|c| c.variable == variable)
    }

    pub fn n_records(&self) -> usize {
        self.columns.first().map_or(0, |c| c.codes.len())
    }

    /// Appends a variable; replaces an existing column with the same name.
    pub fn push(&mut self, column: QualColumn) {
        self.columns.retain(|c| c.variable != column.variable);
        self.columns.push(column);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

/// Standardized feature matrix plus qualitative coding of the same records.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedDataset {
    pub individual_ids: Vec<String>,
    pub features: Matrix,
    pub columns: Vec<ColumnStats>,
    pub qualitative: QualitativeTable,
}

impl CodedDataset {
    pub fn n_records(&self) -> usize {
        self.individual_ids.len()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }
}

/// Standardizes the ten features and codes the eight qualitative variables.
pub fn build_feature_matrix(records: &[SpellRecord], spec: &CodingSpec) -> Result<CodedDataset, DatasetError> {
    spec.validate()?;
    for r in records {
        r.validate().map_err(|reason| DatasetError::InvalidRecord {
            individual: r.individual_id.clone(),
            reason,
        })?;
    }
    let n = records.len();
    let mut raw = Matrix::zeros(n, FEATURES.len());
    for (i, r) in records.iter().enumerate() {
        for (j, &q) in FEATURES.iter().enumerate() {
            let v = r.value(q).ok_or_else(|| DatasetError::MissingFeature {
                individual: r.individual_id.clone(),
                field: q.name().to_string(),
            })?;
            raw.set(i, j, v);
        }
    }

    let mut features = Matrix::zeros(n, FEATURES.len());
    let mut columns = Vec::with_capacity(FEATURES.len());
    for (j, q) in FEATURES.iter().enumerate() {
        let s = standardize(&raw.column(j)).map_err(|e| match e {
            DatasetError::ZeroVariance(_) => DatasetError::ZeroVariance(Some(q.name().to_string())),
            e => e,
        })?;
        for (i, z) in s.z.iter().enumerate() {
            features.set(i, j, *z);
        }
        columns.push(ColumnStats {
            name: q.name().to_string(),
            mean: s.mean,
            sd: s.sd,
        });
    }

    let mut qualitative = QualitativeTable::default();
    for name in QUALITATIVE_VARIABLES {
        let column = match DerivedVariable::from_name(name) {
            Some(dv) => {
                let bins = spec.bins_for(dv)?;
                let codes = records
                    .iter()
                    .map(|r| {
                        let v = r.value(dv.source()).expect("feature presence checked above");
                        bins.index_of(v).map(Some)
                    })
                    .collect::<Result<_, _>>()?;
                QualColumn {
                    variable: name.to_string(),
                    labels: bins.modalities(),
                    codes,
                }
            }
            None => pass_through(name, records),
        };
        qualitative.push(column);
    }

    Ok(CodedDataset {
        individual_ids: records.iter().map(|r| r.individual_id.clone()).collect(),
        features,
        columns,
        qualitative,
    })
}

fn pass_through(name: &str, records: &[SpellRecord]) -> QualColumn {
    let (labels, codes): (Vec<String>, Vec<Option<usize>>) = match name {
        "DIPL3" => (
            Education::ALL.iter().map(|e| e.label().to_string()).collect(),
            records.iter().map(|r| Some(r.dipl3.index())).collect(),
        ),
        "RMOTIFI" => (
            Registration::ALL.iter().map(|r| r.code().to_string()).collect(),
            records.iter().map(|r| Some(r.rmotifi.code() as usize - 1)).collect(),
        ),
        "RMOTIFA" => (
            Exit::ALL.iter().map(|e| e.code().to_string()).collect(),
            records.iter().map(|r| r.rmotifa.map(|e| e.code() as usize - 1)).collect(),
        ),
        other => unreachable!("{other} is not a pass-through variable"),
    };
    QualColumn {
        variable: name.to_string(),
        labels,
        codes,
    }
}

pub const CODED_FORMAT: &str = "spellmap-coded/1";

#[derive(Serialize, Deserialize)]
struct CodedMeta {
    format: String,
    n_records: usize,
    columns: Vec<ColumnStats>,
    individual_ids: Vec<String>,
    qualitative: QualitativeTable,
}

/// Writes the matrix (row-major, comma-separated shortest round-trip decimals, no header,
/// columns in [`FEATURES`] order) and the JSON metadata file.
pub fn write_coded_dataset<M: Write, T: Write>(
    data: &CodedDataset,
    mut matrix_out: M,
    meta_out: T,
) -> Result<(), DatasetError> {
    let mut line = String::new();
    for row in data.features.rows() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        matrix_out.write_all(line.as_bytes())?;
    }
    matrix_out.flush()?;
    let meta = CodedMeta {
        format: CODED_FORMAT.to_string(),
        n_records: data.n_records(),
        columns: data.columns.clone(),
        individual_ids: data.individual_ids.clone(),
        qualitative: data.qualitative.clone(),
    };
    serde_json::to_writer_pretty(meta_out, &meta)?;
    Ok(())
}

pub fn read_coded_dataset<M: BufRead, T: std::io::Read>(matrix_in: M, meta_in: T) -> Result<CodedDataset, DatasetError> {
    let meta: CodedMeta = serde_json::from_reader(meta_in)?;
    if meta.format != CODED_FORMAT {
        return Err(DatasetError::Malformed(format!("unsupported format {}", meta.format)));
    }
    let ncols = meta.columns.len();
    let mut data = Vec::with_capacity(meta.n_records * ncols);
    let mut nrows = 0;
    for line in matrix_in.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for tok in line.split(',') {
            data.push(
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| DatasetError::Malformed(format!("row {}: bad number '{tok}'", nrows + 1)))?,
            );
        }
        if data.len() - before != ncols {
            return Err(DatasetError::Malformed(format!("row {} has wrong width", nrows + 1)));
        }
        nrows += 1;
    }
    if nrows != meta.n_records || meta.individual_ids.len() != nrows {
        return Err(DatasetError::Malformed("row count disagrees with metadata".into()));
    }
    Ok(CodedDataset {
        individual_ids: meta.individual_ids,
        features: Matrix::from_row_major(nrows, ncols, data),
        columns: meta.columns,
        qualitative: meta.qualitative,
    })
}
