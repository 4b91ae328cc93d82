//! Stage execution, artifacts and the run manifest.

use crate::config::{derive_seed, ConfigError, PipelineConfig};
use crate::plot;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spellmap::dataset::{
    build_feature_matrix, generate_synthetic, ingest, latest_per_individual, read_coded_dataset, write_coded_dataset,
    write_records, CodedDataset, ColumnSchema, DatasetError, IngestOptions, Quantity, SpellRecord, SyntheticSpec,
    QUALITATIVE_VARIABLES,
};
use spellmap::macrocluster::{contiguity_report, ward};
use spellmap::mca::{fit_mca, indicator, modality_coordinates, McaResult};
use spellmap::profiles::{
    class_profiles, distributions_to_delimited, neighbor_distances, qualitative_distribution, ProfileColumn, ScopeKind,
};
use spellmap::som::{assign, init_map, quantization_error, read_map, topographic_error, train, write_map, SomMap, MAP_FORMAT};
use spellmap::transitions::{build_table, pairs_from_spells, rss_by_individual, significant_cells, Direction};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const MANIFEST_FORMAT: &str = "spellmap-manifest/1";

pub const RECORDS_FILE: &str = "records.csv";
pub const CODED_MATRIX_FILE: &str = "coded_matrix.csv";
pub const CODED_META_FILE: &str = "coded_meta.json";
pub const MAP_FILE: &str = "som_map.txt";
pub const PARTITION_FILE: &str = "partition.csv";
pub const NEIGHBOR_FILE: &str = "neighbor_distances.csv";
pub const MCA_COORDINATES_FILE: &str = "mca_coordinates.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Synth,
    Code,
    Train,
    Cluster,
    Profile,
    Transitions,
    Mca,
    Plot,
    All,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Synth => "synth",
            Stage::Code => "code",
            Stage::Train => "train",
            Stage::Cluster => "cluster",
            Stage::Profile => "profile",
            Stage::Transitions => "transitions",
            Stage::Mca => "mca",
            Stage::Plot => "plot",
            Stage::All => "all",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("missing stage: {0}")]
    MissingStage(&'static str),
    #[error("computation error in {stage}: {message}")]
    Compute { stage: &'static str, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::MissingStage(_) => 2,
            RunError::Compute { .. } => 3,
        }
    }
}

fn compute(stage: Stage) -> impl Fn(&dyn std::fmt::Display) -> RunError {
    move |e| RunError::Compute {
        stage: stage.name(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Derived seed, for stages that draw random numbers.
    pub seed: Option<u64>,
    /// File name to SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

/// Everything needed to tell whether two runs produced the same artifacts. Wall times
/// live in a separate `timings.json` so that this file stays reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub config_sha256: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    fn fresh(config: &PipelineConfig) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("spellmap".to_string(), env!("CARGO_PKG_VERSION").to_string());
        versions.insert("map_format".to_string(), MAP_FORMAT.to_string());
        versions.insert("coded_format".to_string(), spellmap::dataset::CODED_FORMAT.to_string());
        Self {
            format: MANIFEST_FORMAT.to_string(),
            config_sha256: config.hash(),
            seed: config.seed,
            versions,
            stages: BTreeMap::new(),
        }
    }

    pub fn read(path: &Path) -> Option<Self> {
        let text = std::fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }
}

/// Outcome of one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: Stage,
    pub files: Vec<String>,
    pub seconds: f64,
}

type Artifacts = Vec<(String, Vec<u8>)>;

/// Runs `stage` (or every stage for [`Stage::All`]) with the outputs under
/// `config.output.dir`.
pub fn run(stage: Stage, config: &PipelineConfig) -> Result<Vec<StageReport>, RunError> {
    config.validate()?;
    let mut p = Pipeline::open(config)?;
    let stages = match stage {
        Stage::All => {
            let mut s = vec![p.data_stage(), Stage::Code, Stage::Train, Stage::Cluster, Stage::Profile, Stage::Transitions, Stage::Mca];
            if config.svg_enabled() {
                s.push(Stage::Plot);
            }
            s
        }
        s => vec![s],
    };
    let mut reports = Vec::new();
    for s in stages {
        reports.push(p.run_one(s)?);
    }
    Ok(reports)
}

struct Pipeline<'a> {
    config: &'a PipelineConfig,
    out: PathBuf,
    manifest: RunManifest,
    timings: BTreeMap<String, f64>,
}

impl<'a> Pipeline<'a> {
    fn open(config: &'a PipelineConfig) -> Result<Self, RunError> {
        let out = config.output.dir.clone();
        std::fs::create_dir_all(&out).map_err(|e| ConfigError::new("output.dir", format!("{}: {e}", out.display())))?;
        let fresh = RunManifest::fresh(config);
        // entries written under another configuration no longer describe this run
        let manifest = match RunManifest::read(&out.join(MANIFEST_FILE)) {
            Some(m) if m.config_sha256 == fresh.config_sha256 && m.versions == fresh.versions => m,
            _ => fresh,
        };
        let timings = std::fs::read_to_string(out.join(TIMINGS_FILE))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default();
        Ok(Self {
            config,
            out,
            manifest,
            timings,
        })
    }

    fn data_stage(&self) -> Stage {
        if self.config.input.is_some() {
            Stage::Ingest
        } else {
            Stage::Synth
        }
    }

    fn run_one(&mut self, stage: Stage) -> Result<StageReport, RunError> {
        let start = Instant::now();
        let (artifacts, seed) = match stage {
            Stage::Ingest => (self.ingest()?, None),
            Stage::Synth => self.synth()?,
            Stage::Code => (self.code()?, None),
            Stage::Train => self.train()?,
            Stage::Cluster => (self.cluster()?, None),
            Stage::Profile => (self.profile()?, None),
            Stage::Transitions => (self.transitions()?, None),
            Stage::Mca => (self.mca()?, None),
            Stage::Plot => (self.plot()?, None),
            Stage::All => unreachable!("expanded by run"),
        };
        let err = compute(stage);
        let mut record = StageRecord {
            seed,
            files: BTreeMap::new(),
        };
        for (name, bytes) in &artifacts {
            std::fs::write(self.out.join(name), bytes).map_err(|e| err(&format!("{name}: {e}")))?;
            record.files.insert(name.clone(), hex::encode(Sha256::digest(bytes)));
        }
        self.manifest.stages.insert(stage.name().to_string(), record);
        let seconds = start.elapsed().as_secs_f64();
        self.timings.insert(stage.name().to_string(), seconds);
        let manifest = serde_json::to_string_pretty(&self.manifest).map_err(|e| err(&e))? + "\n";
        std::fs::write(self.out.join(MANIFEST_FILE), manifest).map_err(|e| err(&e))?;
        let timings = serde_json::to_string_pretty(&self.timings).map_err(|e| err(&e))? + "\n";
        std::fs::write(self.out.join(TIMINGS_FILE), timings).map_err(|e| err(&e))?;
        Ok(StageReport {
            stage,
            files: artifacts.into_iter().map(|(n, _)| n).collect(),
            seconds,
        })
    }

    fn need(&self, file: &str, stage: Stage) -> Result<PathBuf, RunError> {
        let path = self.out.join(file);
        if path.is_file() {
            Ok(path)
        } else {
            Err(RunError::MissingStage(stage.name()))
        }
    }

    fn records(&self, stage: Stage) -> Result<Vec<SpellRecord>, RunError> {
        let path = self.need(RECORDS_FILE, self.data_stage())?;
        let err = compute(stage);
        let file = std::fs::File::open(&path).map_err(|e| err(&e))?;
        let outcome = ingest(file, &IngestOptions::default()).map_err(|e| err(&e))?;
        if let Some(r) = outcome.rejections.first() {
            return Err(err(&format!("{RECORDS_FILE} row {}: {}", r.row, r.reason)));
        }
        Ok(outcome.records)
    }

    fn coded(&self, stage: Stage) -> Result<CodedDataset, RunError> {
        let matrix = self.need(CODED_MATRIX_FILE, Stage::Code)?;
        let meta = self.need(CODED_META_FILE, Stage::Code)?;
        let err = compute(stage);
        let m = std::fs::File::open(matrix).map_err(|e| err(&e))?;
        let t = std::fs::File::open(meta).map_err(|e| err(&e))?;
        read_coded_dataset(std::io::BufReader::new(m), std::io::BufReader::new(t)).map_err(|e| err(&e))
    }

    fn map(&self, stage: Stage) -> Result<SomMap, RunError> {
        let path = self.need(MAP_FILE, Stage::Train)?;
        let err = compute(stage);
        let f = std::fs::File::open(path).map_err(|e| err(&e))?;
        read_map(std::io::BufReader::new(f)).map_err(|e| err(&e))
    }

    /// Unit labels `1..=k` from the partition file.
    fn partition(&self, stage: Stage, units: usize) -> Result<(Vec<usize>, usize), RunError> {
        let path = self.need(PARTITION_FILE, Stage::Cluster)?;
        let err = compute(stage);
        let text = std::fs::read_to_string(path).map_err(|e| err(&e))?;
        let mut labels = vec![0; units];
        for (i, line) in text.lines().skip(1).filter(|l| !l.is_empty()).enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            let parsed = match fields.as_slice() {
                [_, _, u, c] => u.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
                _ => None,
            };
            match parsed {
                Some((u, c)) if u < units && c > 0 => labels[u] = c,
                _ => return Err(err(&format!("{PARTITION_FILE} line {}: malformed", i + 2))),
            }
        }
        if labels.contains(&0) {
            return Err(err(&format!("{PARTITION_FILE} does not cover all {units} units")));
        }
        let k = labels.iter().copied().max().unwrap_or(0);
        Ok((labels, k))
    }

    fn ingest(&self) -> Result<Artifacts, RunError> {
        let input = self
            .config
            .input
            .as_ref()
            .ok_or_else(|| ConfigError::new("input", "the ingest stage needs an [input] section"))?;
        let schema = match &input.schema {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError::new("input.schema", format!("{}: {e}", p.display())))?;
                ColumnSchema::parse(&text).map_err(|e| ConfigError::new("input.schema", e.to_string()))?
            }
            None => ColumnSchema::identity(),
        };
        let file = std::fs::File::open(&input.path).map_err(|e| ConfigError::new("input.path", format!("{}: {e}", input.path.display())))?;
        let options = IngestOptions {
            delimiter: input.delimiter.as_bytes()[0],
            schema,
        };
        let outcome = ingest(file, &options).map_err(|e| match e {
            DatasetError::Schema(m) => RunError::Config(ConfigError::new("input.schema", m)),
            e => compute(Stage::Ingest)(&e),
        })?;
        if outcome.accepted() == 0 {
            return Err(compute(Stage::Ingest)(&"no record passed validation"));
        }
        let mut report = String::from("row,reason\n");
        for r in &outcome.rejections {
            let _ = writeln!(report, "{},{}", r.row, csv_field(&r.reason));
        }
        if outcome.rejected() > 0 {
            eprintln!("warning: {} of {} rows rejected, see ingest_report.csv", outcome.rejected(), outcome.rejected() + outcome.accepted());
        }
        Ok(vec![
            (RECORDS_FILE.into(), records_bytes(&outcome.records, Stage::Ingest)?),
            ("ingest_report.csv".into(), report.into_bytes()),
        ])
    }

    fn synth(&self) -> Result<(Artifacts, Option<u64>), RunError> {
        let spec = self
            .config
            .synthetic
            .as_ref()
            .ok_or_else(|| ConfigError::new("synthetic", "the synth stage needs a [synthetic] section"))?;
        let seed = derive_seed(self.config.seed, "synth");
        let cohort = generate_synthetic(&SyntheticSpec::paper_calibrated(spec.n_records, seed)).map_err(|e| compute(Stage::Synth)(&e))?;
        let mut truth = String::from("individual_id,class\n");
        for (r, c) in cohort.records.iter().zip(&cohort.classes) {
            let _ = writeln!(truth, "{},{}", csv_field(&r.individual_id), c + 1);
        }
        Ok((
            vec![
                (RECORDS_FILE.into(), records_bytes(&cohort.spell_rows(), Stage::Synth)?),
                ("truth.csv".into(), truth.into_bytes()),
            ],
            Some(seed),
        ))
    }

    fn code(&self) -> Result<Artifacts, RunError> {
        let records = self.records(Stage::Code)?;
        let spec = self.config.coding_spec()?;
        let err = compute(Stage::Code);
        let coded = build_feature_matrix(&latest_per_individual(&records), &spec).map_err(|e| err(&e))?;
        let (mut matrix, mut meta) = (Vec::new(), Vec::new());
        write_coded_dataset(&coded, &mut matrix, &mut meta).map_err(|e| err(&e))?;
        meta.push(b'\n');
        Ok(vec![(CODED_MATRIX_FILE.into(), matrix), (CODED_META_FILE.into(), meta)])
    }

    fn train(&self) -> Result<(Artifacts, Option<u64>), RunError> {
        let coded = self.coded(Stage::Train)?;
        let err = compute(Stage::Train);
        let data = &coded.features;
        let init_seed = derive_seed(self.config.seed, "init");
        let map = init_map(self.config.topology(), data.ncols(), data, self.config.som.init, init_seed).map_err(|e| err(&e))?;
        let schedule = self.config.schedule();
        let (trained, trace) = train(&map, data, &schedule).map_err(|e| err(&e))?;
        let mut map_bytes = Vec::new();
        write_map(&trained, &mut map_bytes).map_err(|e| err(&e))?;
        let mut trace_csv = String::from("epoch,radius,quantization_error\n");
        for t in &trace {
            let _ = writeln!(trace_csv, "{},{},{}", t.epoch, t.radius, t.quantization_error);
        }
        let qe = quantization_error(&trained, data).map_err(|e| err(&e))?;
        let te = topographic_error(&trained, data).map_err(|e| err(&e))?;
        let quality = format!("metric,value\nquantization_error,{qe}\ntopographic_error,{te}\n");
        Ok((
            vec![
                (MAP_FILE.into(), map_bytes),
                ("som_trace.csv".into(), trace_csv.into_bytes()),
                ("som_quality.csv".into(), quality.into_bytes()),
            ],
            Some(schedule.seed),
        ))
    }

    fn cluster(&self) -> Result<Artifacts, RunError> {
        let coded = self.coded(Stage::Cluster)?;
        let map = self.map(Stage::Cluster)?;
        let err = compute(Stage::Cluster);
        let a = assign(&map, &coded.features).map_err(|e| err(&e))?;
        // empty units keep a negligible mass so that they still join a class
        let weights: Option<Vec<f64>> = self
            .config
            .cluster
            .weighted
            .then(|| a.counts.iter().map(|&c| if c == 0 { 1e-9 } else { c as f64 }).collect());
        let (partition, dendrogram) = ward(&map.codes, weights.as_deref(), self.config.cluster.k).map_err(|e| err(&e))?;
        let partition = partition.with_record_counts(&a.counts).map_err(|e| err(&e))?;
        let t = map.topology;
        let n = coded.n_records();

        let mut assignments = String::from("individual_id,unit,row,col,class\n");
        for (id, &u) in coded.individual_ids.iter().zip(&a.units) {
            let (r, c) = t.coords(u);
            let _ = writeln!(assignments, "{},{},{},{},{}", csv_field(id), u, r + 1, c + 1, partition.labels[u]);
        }
        let mut unit_counts = String::from("unit,row,col,class,records\n");
        for (u, &count) in a.counts.iter().enumerate() {
            let (r, c) = t.coords(u);
            let _ = writeln!(unit_counts, "{},{},{},{},{}", u, r + 1, c + 1, partition.labels[u], count);
        }
        let record_counts = partition.record_counts.clone().unwrap_or_default();
        let mut class_counts = String::from("class,units,records,share\n");
        for (c, (members, &records)) in partition.members.iter().zip(&record_counts).enumerate() {
            let _ = writeln!(class_counts, "{},{},{},{}", c + 1, members.len(), records, records as f64 / n as f64);
        }
        let mut contiguity = String::from("class,units,components,contiguous\n");
        for c in contiguity_report(&partition, &t).map_err(|e| err(&e))? {
            let _ = writeln!(contiguity, "{},{},{},{}", c.class, c.units, c.components, c.contiguous);
        }
        Ok(vec![
            (PARTITION_FILE.into(), partition.to_delimited(&t).into_bytes()),
            ("dendrogram.csv".into(), dendrogram.to_delimited().into_bytes()),
            ("assignments.csv".into(), assignments.into_bytes()),
            ("unit_counts.csv".into(), unit_counts.into_bytes()),
            ("class_counts.csv".into(), class_counts.into_bytes()),
            ("contiguity.csv".into(), contiguity.into_bytes()),
        ])
    }

    fn profile(&self) -> Result<Artifacts, RunError> {
        let coded = self.coded(Stage::Profile)?;
        let map = self.map(Stage::Profile)?;
        let (unit_labels, k) = self.partition(Stage::Profile, map.units())?;
        let records = self.records(Stage::Profile)?;
        let err = compute(Stage::Profile);
        let a = assign(&map, &coded.features).map_err(|e| err(&e))?;
        let labels: Vec<usize> = a.units.iter().map(|&u| unit_labels[u]).collect();

        let latest = latest_per_individual(&records);
        let by_id: HashMap<&str, &SpellRecord> = latest.iter().map(|r| (r.individual_id.as_str(), r)).collect();
        let ordered: Vec<&SpellRecord> = coded
            .individual_ids
            .iter()
            .map(|id| by_id.get(id.as_str()).copied().ok_or_else(|| err(&format!("individual {id} not in {RECORDS_FILE}"))))
            .collect::<Result<_, _>>()?;
        let rss: HashMap<String, (f64, f64)> = rss_by_individual(&records)
            .into_iter()
            .map(|r| (r.individual_id, (r.rss11, r.rss12)))
            .collect();
        let mut columns: Vec<ProfileColumn> = Quantity::ALL
            .iter()
            .map(|&q| ProfileColumn {
                name: q.name().to_string(),
                values: ordered.iter().map(|r| r.value(q)).collect(),
            })
            .collect();
        for (name, pick) in [("RSS11", 0usize), ("RSS12", 1)] {
            columns.push(ProfileColumn {
                name: name.to_string(),
                values: coded
                    .individual_ids
                    .iter()
                    .map(|id| rss.get(id).map(|v| if pick == 0 { v.0 } else { v.1 }))
                    .collect(),
            });
        }
        let profile = class_profiles(&columns, &labels, k).map_err(|e| err(&e))?;

        let (mut by_class, mut by_cell) = (Vec::new(), Vec::new());
        for v in QUALITATIVE_VARIABLES {
            let col = coded.qualitative.column(v).ok_or_else(|| err(&format!("coded data lacks {v}")))?;
            by_class.extend(qualitative_distribution(col, &labels, k, ScopeKind::Class).map_err(|e| err(&e))?);
            by_cell.extend(qualitative_distribution(col, &a.units, map.units(), ScopeKind::Cell).map_err(|e| err(&e))?);
        }

        let t = map.topology;
        let names = coded.feature_names();
        let mut codes = String::from("unit,row,col,class");
        for n in &names {
            let _ = write!(codes, ",{n}");
        }
        codes.push('\n');
        for u in 0..map.units() {
            let (r, c) = t.coords(u);
            let _ = write!(codes, "{},{},{},{}", u, r + 1, c + 1, unit_labels[u]);
            for v in map.code(u) {
                let _ = write!(codes, ",{v}");
            }
            codes.push('\n');
        }
        Ok(vec![
            ("class_profile.csv".into(), profile.to_delimited().into_bytes()),
            ("qual_by_class.csv".into(), distributions_to_delimited(&by_class).into_bytes()),
            ("qual_by_cell.csv".into(), distributions_to_delimited(&by_cell).into_bytes()),
            (NEIGHBOR_FILE.into(), neighbor_distances(&map).to_delimited().into_bytes()),
            ("codevectors.csv".into(), codes.into_bytes()),
        ])
    }

    fn transitions(&self) -> Result<Artifacts, RunError> {
        let records = self.records(Stage::Transitions)?;
        let err = compute(Stage::Transitions);
        let (reg_exit, exit_reg) = pairs_from_spells(&records);
        let t1 = build_table(&reg_exit, Direction::RegistrationToExit).map_err(|e| err(&e))?;
        let t2 = build_table(&exit_reg, Direction::ExitToRegistration).map_err(|e| err(&e))?;
        let th = &self.config.transitions;
        let mut significant = String::from("direction,from,to,total_share,row_share,threshold\n");
        for (table, threshold) in [(&t1, th.registration_to_exit_threshold), (&t2, th.exit_to_registration_threshold)] {
            for (i, j) in significant_cells(table, threshold) {
                let (a, b) = (i as usize - 1, j as usize - 1);
                let _ = writeln!(
                    significant,
                    "{},{},{},{},{},{}",
                    table.direction.label(),
                    i,
                    j,
                    table.total_share[a][b],
                    table.row_share[a][b],
                    threshold
                );
            }
        }
        let mut rss = String::from("individual_id,rss11,rss12,n_transitions\n");
        for r in rss_by_individual(&records) {
            let _ = writeln!(rss, "{},{},{},{}", csv_field(&r.individual_id), r.rss11, r.rss12, r.n_transitions);
        }
        Ok(vec![
            ("transitions_registration_to_exit.csv".into(), t1.to_delimited().into_bytes()),
            ("transitions_exit_to_registration.csv".into(), t2.to_delimited().into_bytes()),
            ("significant_cells.csv".into(), significant.into_bytes()),
            ("rss.csv".into(), rss.into_bytes()),
        ])
    }

    fn fit_mca(&self, coded: &CodedDataset, stage: Stage) -> Result<McaResult, RunError> {
        let err = compute(stage);
        let vars: Vec<&str> = self.config.mca.variables.iter().map(String::as_str).collect();
        let z = indicator(&coded.qualitative, &vars).map_err(|e| err(&e))?;
        fit_mca(&z, self.config.mca.axes).map_err(|e| err(&e))
    }

    fn mca(&self) -> Result<Artifacts, RunError> {
        let coded = self.coded(Stage::Mca)?;
        let res = self.fit_mca(&coded, Stage::Mca)?;
        for (v, m) in &res.dropped {
            eprintln!("warning: modality {v}={m} has no records and was left out of the analysis");
        }
        let mut out = vec![
            ("mca_eigenvalues.csv".to_string(), res.eigenvalues_to_delimited().into_bytes()),
            (MCA_COORDINATES_FILE.to_string(), res.coordinates_to_delimited().into_bytes()),
        ];
        for [a, b] in &self.config.mca.planes {
            let points = modality_coordinates(&res, *a, *b).map_err(|e| compute(Stage::Mca)(&e))?;
            let mut csv = String::from("variable,modality,x,y\n");
            for p in points {
                let _ = writeln!(csv, "{},{},{},{}", p.variable, p.modality, p.x, p.y);
            }
            out.push((format!("mca_plane_{a}_{b}.csv"), csv.into_bytes()));
        }
        Ok(out)
    }

    fn plot(&self) -> Result<Artifacts, RunError> {
        self.need(PARTITION_FILE, Stage::Cluster)?;
        self.need(NEIGHBOR_FILE, Stage::Profile)?;
        self.need(MCA_COORDINATES_FILE, Stage::Mca)?;
        let coded = self.coded(Stage::Plot)?;
        let map = self.map(Stage::Plot)?;
        let (unit_labels, k) = self.partition(Stage::Plot, map.units())?;
        let err = compute(Stage::Plot);
        let a = assign(&map, &coded.features).map_err(|e| err(&e))?;
        let labels: Vec<usize> = a.units.iter().map(|&u| unit_labels[u]).collect();
        let t = map.topology;

        let mut out = vec![
            ("fig_codevectors.svg".to_string(), plot::codevector_grid(&map, &unit_labels, &coded.feature_names())),
            ("fig_classes.svg".to_string(), plot::class_grid(&t, &unit_labels, &a.counts)),
            ("fig_distances.svg".to_string(), plot::distance_map(&t, &neighbor_distances(&map), &unit_labels)),
        ];
        for v in QUALITATIVE_VARIABLES {
            let col = coded.qualitative.column(v).ok_or_else(|| err(&format!("coded data lacks {v}")))?;
            let d = qualitative_distribution(col, &labels, k, ScopeKind::Class).map_err(|e| err(&e))?;
            out.push((format!("fig_qual_{}.svg", v.to_lowercase()), plot::qualitative_bars(&d)));
        }
        let res = self.fit_mca(&coded, Stage::Plot)?;
        for [x, y] in &self.config.mca.planes {
            let points = modality_coordinates(&res, *x, *y).map_err(|e| err(&e))?;
            let shares = (res.inertia_shares[x - 1], res.inertia_shares[y - 1]);
            out.push((format!("fig_mca_{x}_{y}.svg"), plot::mca_plane(&points, (*x, *y), shares)));
        }
        Ok(out.into_iter().map(|(n, s)| (n, s.into_bytes())).collect())
    }
}

fn records_bytes(records: &[SpellRecord], stage: Stage) -> Result<Vec<u8>, RunError> {
    let mut buf = Vec::new();
    write_records(&mut buf, records).map_err(|e| compute(stage)(&e))?;
    Ok(buf)
}

/// Quotes a free-text field when it would break the delimited layout.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
