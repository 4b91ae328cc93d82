use super::{DatasetError, Education, Exit, Quantity, Registration, SpellRecord};
use std::collections::BTreeMap;
use std::io::Read;

/// Canonical input fields other than the quantities.
pub const ID_FIELD: &str = "individual_id";
pub const SPELL_FIELD: &str = "spell_index";
const QUALITATIVE_FIELDS: [&str; 3] = ["DIPL3", "RMOTIFI", "RMOTIFA"];

/// Maps canonical field names onto the header names used by an input file.
///
/// Fields without an entry are looked up under their canonical name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnSchema {
    renames: BTreeMap<String, String>,
}

impl ColumnSchema {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn with(mut self, canonical: &str, header: &str) -> Self {
        self.renames.insert(canonical.to_string(), header.to_string());
        self
    }

    /// Parses `CANONICAL = header` lines; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut schema = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| DatasetError::Schema(format!("line {}: expected `field = header`", i + 1)))?;
            let k = k.trim();
            if !canonical_fields().iter().any(|f| f == k) {
                return Err(DatasetError::Schema(format!("line {}: unknown field {k}", i + 1)));
            }
            schema = schema.with(k, v.trim());
        }
        Ok(schema)
    }

    pub fn header_for<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.renames.get(canonical).map_or(canonical, String::as_str)
    }
}

fn canonical_fields() -> Vec<String> {
    let mut fields = vec![ID_FIELD.to_string(), SPELL_FIELD.to_string()];
    fields.extend(Quantity::ALL.iter().map(|q| q.name().to_string()));
    fields.extend(QUALITATIVE_FIELDS.iter().map(|s| s.to_string()));
    fields
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub delimiter: u8,
    pub schema: ColumnSchema,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            schema: ColumnSchema::identity(),
        }
    }
}

/// A rejected data row. `row` counts data rows from 1, excluding the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub records: Vec<SpellRecord>,
    pub rejections: Vec<Rejection>,
}

impl IngestOutcome {
    pub fn accepted(&self) -> usize {
        self.records.len()
    }

    pub fn rejected(&self) -> usize {
        self.rejections.len()
    }
}

struct Columns {
    id: usize,
    spell: usize,
    quantities: [usize; 11],
    dipl3: usize,
    rmotifi: usize,
    rmotifa: usize,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, schema: &ColumnSchema) -> Result<Self, DatasetError> {
        let find = |canonical: &str| -> Result<usize, DatasetError> {
            let wanted = schema.header_for(canonical);
            headers
                .iter()
                .position(|h| h.trim() == wanted)
                .ok_or_else(|| DatasetError::Schema(format!("missing column {wanted} (field {canonical})")))
        };
        let mut quantities = [0; 11];
        for (slot, q) in quantities.iter_mut().zip(Quantity::ALL) {
            *slot = find(q.name())?;
        }
        Ok(Self {
            id: find(ID_FIELD)?,
            spell: find(SPELL_FIELD)?,
            quantities,
            dipl3: find("DIPL3")?,
            rmotifi: find("RMOTIFI")?,
            rmotifa: find("RMOTIFA")?,
        })
    }
}

/// Reads delimited spell records.
///
/// Empty fields denote absent values. SRREVAL and RMOTIFA may be absent; any other
/// absent, unparseable or invariant-violating field rejects the row without aborting
/// the whole read. Raw exit code 90 is folded into the job-found category.
pub fn ingest<R: Read>(reader: R, options: &IngestOptions) -> Result<IngestOutcome, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = Columns::resolve(&headers, &options.schema)?;
    let mut out = IngestOutcome::default();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                out.rejections.push(Rejection {
                    row: row_no,
                    reason: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        match parse_row(&row, &cols) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => out.rejections.push(Rejection { row: row_no, reason }),
        }
    }
    Ok(out)
}

fn field<'r>(row: &'r csv::StringRecord, idx: usize) -> Option<&'r str> {
    row.get(idx).map(str::trim).filter(|s| !s.is_empty())
}

fn parse_row(row: &csv::StringRecord, cols: &Columns) -> Result<SpellRecord, String> {
    let id = field(row, cols.id).ok_or("missing individual_id")?.to_string();
    let spell_raw = field(row, cols.spell).ok_or("missing spell_index")?;
    let spell_index: u32 = spell_raw
        .parse()
        .map_err(|_| format!("unparseable spell_index: '{spell_raw}'"))?;

    let mut values = [None; 11];
    for ((slot, q), &idx) in values.iter_mut().zip(Quantity::ALL).zip(&cols.quantities) {
        *slot = match field(row, idx) {
            None if q == Quantity::Srreval => None,
            None => return Err(format!("missing {q}")),
            Some(s) => Some(
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("unparseable {q}: '{s}'"))?,
            ),
        };
    }
    let nchom_f = values[Quantity::Nchom as usize].expect("checked above");
    if nchom_f.fract() != 0.0 || nchom_f < 0.0 {
        return Err(format!("NCHOM must be a nonnegative integer, got {nchom_f}"));
    }

    let dipl_raw = field(row, cols.dipl3).ok_or("missing DIPL3")?;
    let dipl3 = Education::parse(dipl_raw).ok_or_else(|| format!("invalid DIPL3: '{dipl_raw}'"))?;
    let ri_raw = field(row, cols.rmotifi).ok_or("missing RMOTIFI")?;
    let rmotifi = ri_raw
        .parse::<u8>()
        .ok()
        .and_then(Registration::from_code)
        .ok_or_else(|| format!("invalid RMOTIFI: '{ri_raw}'"))?;
    let rmotifa = match field(row, cols.rmotifa) {
        None => None,
        Some(s) => Some(
            s.parse::<u16>()
                .ok()
                .and_then(Exit::from_raw)
                .ok_or_else(|| format!("invalid RMOTIFA: '{s}'"))?,
        ),
    };

    let mut rec = SpellRecord {
        individual_id: id,
        spell_index,
        age: None,
        cmdur: None,
        cppar: None,
        dur: None,
        exper: None,
        indur: None,
        mgain: None,
        mxmheur: None,
        nchom: None,
        tindmoy: None,
        srreval: None,
        dipl3,
        rmotifi,
        rmotifa,
    };
    for (q, v) in Quantity::ALL.into_iter().zip(values) {
        rec.set_value(q, v);
    }
    rec.validate()?;
    Ok(rec)
}

/// Writes records with canonical headers; absent values become empty fields.
pub fn write_records<W: std::io::Write>(writer: W, records: &[SpellRecord]) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![ID_FIELD.to_string(), SPELL_FIELD.to_string()];
    header.extend(Quantity::ALL.iter().map(|q| q.name().to_string()));
    header.extend(QUALITATIVE_FIELDS.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for r in records {
        let mut fields = vec![r.individual_id.clone(), r.spell_index.to_string()];
        fields.extend(Quantity::ALL.iter().map(|&q| r.value(q).map(|v| v.to_string()).unwrap_or_default()));
        fields.push(r.dipl3.label().to_string());
        fields.push(r.rmotifi.code().to_string());
        fields.push(r.rmotifa.map(|e| e.code().to_string()).unwrap_or_default());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}
