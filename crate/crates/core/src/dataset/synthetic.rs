//! Seeded synthetic cohorts standing in for the registry extract.
//!
//! Every individual belongs to one planted class. Quantities are drawn from per-class
//! Gaussians and censored at the domain bounds, so values below a bound pile up on it
//! (this is what produces the exact-zero occasional-work categories). CPPAR, MGAIN and
//! MXMHEUR share one latent draw so that occasional work is either present on all three
//! or mostly absent on all three. The spell history is generated from per-class
//! exit-to-registration pair probabilities.

use super::{DatasetError, Education, Exit, Quantity, Registration, SpellRecord};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableLaw {
    pub variable: Quantity,
    pub mean: f64,
    pub sd: f64,
}

/// Generative law of one planted class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLaw {
    pub name: String,
    pub proportion: f64,
    /// One law per quantity (all eleven, SRREVAL included).
    pub laws: Vec<VariableLaw>,
    /// DIPL3 probabilities in `Education::ALL` order.
    pub education: [f64; 3],
    /// Registration cause of the first spell.
    pub first_registration: [f64; 4],
    /// Joint probabilities of (exit of spell s, registration of spell s+1).
    pub exit_to_registration: [[f64; 4]; 4],
    /// Exit of the latest spell given its registration cause (row-stochastic).
    pub exit_given_registration: [[f64; 4]; 4],
}

impl ClassLaw {
    pub fn law(&self, q: Quantity) -> Option<&VariableLaw> {
        self.laws.iter().find(|l| l.variable == q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_records: usize,
    pub seed: u64,
    pub classes: Vec<ClassLaw>,
}

/// Class sizes of the published five-class typology.
pub const PAPER_CLASS_COUNTS: [usize; 5] = [7908, 3793, 4519, 877, 2149];

// Per-class mean and sd, classes 1..5, in Quantity::ALL order.
const PAPER_MEANS: [[(f64, f64); 5]; 11] = [
    [(28.78, 8.01), (29.82, 8.06), (34.80, 9.25), (29.42, 8.16), (44.78, 8.03)],
    [(12.94, 9.80), (24.27, 19.84), (39.01, 20.00), (22.23, 13.24), (23.61, 17.63)],
    [(0.03, 0.06), (0.31, 0.20), (0.04, 0.08), (0.05, 0.09), (0.05, 0.09)],
    [(116.47, 96.95), (281.94, 200.50), (424.80, 253.95), (112.97, 114.94), (192.00, 155.37)],
    [(2.51, 3.36), (3.81, 5.31), (4.15, 5.25), (2.88, 4.05), (16.79, 8.82)],
    [(82.42, 131.35), (169.03, 202.03), (438.93, 414.16), (121.49, 182.21), (332.64, 245.01)],
    [(29.07, 254.73), (4612.14, 4386.92), (334.47, 1124.81), (126.66, 774.76), (204.58, 944.29)],
    [(2.01, 9.53), (127.88, 51.14), (19.04, 44.06), (11.92, 32.25), (13.32, 36.32)],
    [(2.22, 0.42), (2.26, 0.52), (2.13, 0.34), (4.36, 0.69), (2.25, 0.49)],
    [(44.61, 59.80), (79.99, 80.45), (79.22, 63.52), (44.00, 58.51), (202.64, 155.71)],
    [(215.52, 124.31), (263.19, 215.08), (223.60, 191.18), (230.71, 191.50), (439.40, 325.71)],
];

// Published class means of the job->lay-off and job->end-of-contract shares.
const PAPER_RSS: [(f64, f64); 5] = [(0.27, 0.39), (0.27, 0.45), (0.24, 0.37), (0.29, 0.46), (0.32, 0.42)];

// Exit -> next registration, share of all transitions (percent).
const EXIT_TO_REGISTRATION: [[f64; 4]; 4] = [
    [27.08, 41.20, 4.58, 5.37],
    [0.86, 0.68, 0.06, 0.18],
    [7.83, 4.86, 0.55, 0.72],
    [3.05, 2.21, 0.27, 0.48],
];

// Registration -> exit, share of each registration row (percent).
const EXIT_GIVEN_REGISTRATION: [[f64; 4]; 4] = [
    [59.08, 3.45, 13.71, 23.75],
    [62.67, 3.35, 12.72, 21.26],
    [70.29, 2.50, 12.31, 14.90],
    [75.51, 3.72, 8.87, 11.90],
];

const FIRST_REGISTRATION: [f64; 4] = [35.09, 46.81, 7.03, 11.07];

const EDUCATION: [[f64; 3]; 5] = [
    [0.35, 0.35, 0.30],
    [0.30, 0.30, 0.40],
    [0.20, 0.25, 0.55],
    [0.30, 0.35, 0.35],
    [0.15, 0.20, 0.65],
];

impl SyntheticSpec {
    /// Five classes with the published class frequencies and per-class means and
    /// standard deviations.
    pub fn paper_calibrated(n_records: usize, seed: u64) -> Self {
        let total: usize = PAPER_CLASS_COUNTS.iter().sum();
        let classes = (0..5)
            .map(|c| {
                let laws = Quantity::ALL
                    .iter()
                    .enumerate()
                    .map(|(qi, &variable)| VariableLaw {
                        variable,
                        mean: PAPER_MEANS[qi][c].0,
                        sd: PAPER_MEANS[qi][c].1,
                    })
                    .collect();
                ClassLaw {
                    name: format!("class {}", c + 1),
                    proportion: PAPER_CLASS_COUNTS[c] as f64 / total as f64,
                    laws,
                    education: EDUCATION[c],
                    first_registration: normalized(FIRST_REGISTRATION),
                    exit_to_registration: pinned_pair_law(PAPER_RSS[c].0, PAPER_RSS[c].1),
                    exit_given_registration: EXIT_GIVEN_REGISTRATION.map(normalized),
                }
            })
            .collect();
        Self {
            n_records,
            seed,
            classes,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidSynthetic(m));
        if self.classes.is_empty() {
            return bad("no classes".into());
        }
        let total: f64 = self.classes.iter().map(|c| c.proportion).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("class proportions sum to {total}, not 1"));
        }
        for c in &self.classes {
            if !(c.proportion >= 0.0) {
                return bad(format!("{}: negative proportion", c.name));
            }
            for q in Quantity::ALL {
                match c.law(q) {
                    None => return bad(format!("{}: no law for {q}", c.name)),
                    Some(l) if !(l.sd >= 0.0) || !l.mean.is_finite() || !l.sd.is_finite() => {
                        return bad(format!("{}: invalid law for {q}", c.name));
                    }
                    _ => {}
                }
            }
            let weights_ok = |w: &[f64]| w.iter().all(|x| *x >= 0.0 && x.is_finite()) && w.iter().sum::<f64>() > 0.0;
            if !weights_ok(&c.education) || !weights_ok(&c.first_registration) {
                return bad(format!("{}: invalid categorical weights", c.name));
            }
            if !weights_ok(c.exit_to_registration.as_flattened()) {
                return bad(format!("{}: invalid transition-pair weights", c.name));
            }
            if !c.exit_given_registration.iter().all(|row| weights_ok(row)) {
                return bad(format!("{}: invalid exit weights", c.name));
            }
        }
        Ok(())
    }
}

fn normalized<const N: usize>(w: [f64; N]) -> [f64; N] {
    let s: f64 = w.iter().sum();
    w.map(|x| x / s)
}

/// The published exit->registration pair law with the (job, lay-off) and
/// (job, end of contract) cells pinned, the remaining mass spread proportionally.
fn pinned_pair_law(p11: f64, p12: f64) -> [[f64; 4]; 4] {
    let base = EXIT_TO_REGISTRATION;
    let rest: f64 = base.as_flattened().iter().sum::<f64>() - base[0][0] - base[0][1];
    let scale = (1.0 - p11 - p12) / rest;
    let mut out = base.map(|row| row.map(|x| x * scale));
    out[0][0] = p11;
    out[0][1] = p12;
    out
}

/// A generated cohort: the latest spell of every individual plus the hidden planted class
/// and the full spell history.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub records: Vec<SpellRecord>,
    /// Planted class index (0-based into `SyntheticSpec::classes`) per record.
    pub classes: Vec<usize>,
    /// (registration, exit) of every spell, oldest first; the last entry matches the record.
    pub histories: Vec<Vec<(Registration, Exit)>>,
    /// Drawn SRREVAL of every individual, including those whose latest spell hides it.
    pub wages: Vec<f64>,
}

impl SyntheticCohort {
    /// Expands the cohort into one row per spell. Earlier spells repeat the individual's
    /// quantities with their own registration and exit.
    pub fn spell_rows(&self) -> Vec<SpellRecord> {
        let mut rows = Vec::new();
        for ((rec, hist), &wage) in self.records.iter().zip(&self.histories).zip(&self.wages) {
            for (s, &(reg, exit)) in hist.iter().enumerate() {
                let mut row = rec.clone();
                row.spell_index = s as u32 + 1;
                row.rmotifi = reg;
                row.rmotifa = Some(exit);
                row.srreval = (reg != Registration::FirstJobSearch).then_some(wage);
                rows.push(row);
            }
        }
        rows
    }
}

/// Largest-remainder apportionment of `n` over `proportions`.
fn apportion(n: usize, proportions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let missing = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    counts
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCohort, DatasetError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let proportions: Vec<f64> = spec.classes.iter().map(|c| c.proportion).collect();
    let mut labels: Vec<usize> = apportion(spec.n_records, &proportions)
        .into_iter()
        .enumerate()
        .flat_map(|(c, k)| std::iter::repeat_n(c, k))
        .collect();
    labels.shuffle(&mut rng);

    let samplers = spec
        .classes
        .iter()
        .map(ClassSampler::new)
        .collect::<Result<Vec<_>, _>>()?;

    let mut records = Vec::with_capacity(spec.n_records);
    let mut histories = Vec::with_capacity(spec.n_records);
    let mut wages = Vec::with_capacity(spec.n_records);
    for (i, &c) in labels.iter().enumerate() {
        let (rec, hist, wage) = samplers[c].draw(&spec.classes[c], format!("S{:06}", i + 1), &mut rng);
        records.push(rec);
        histories.push(hist);
        wages.push(wage);
    }
    Ok(SyntheticCohort {
        records,
        classes: labels,
        histories,
        wages,
    })
}

struct ClassSampler {
    education: WeightedIndex<f64>,
    first: WeightedIndex<f64>,
    pairs: WeightedIndex<f64>,
    exits: Vec<WeightedIndex<f64>>,
}

impl ClassSampler {
    fn new(law: &ClassLaw) -> Result<Self, DatasetError> {
        let w = |x: &[f64]| WeightedIndex::new(x.iter().copied()).map_err(|e| DatasetError::InvalidSynthetic(e.to_string()));
        Ok(Self {
            education: w(&law.education)?,
            first: w(&law.first_registration)?,
            pairs: w(law.exit_to_registration.as_flattened())?,
            exits: law
                .exit_given_registration
                .iter()
                .map(|row| w(row))
                .collect::<Result<_, _>>()?,
        })
    }

    fn draw(&self, law: &ClassLaw, id: String, rng: &mut ChaCha8Rng) -> (SpellRecord, Vec<(Registration, Exit)>, f64) {
        let mut gauss = |q: Quantity, z: Option<f64>| {
            let l = law.law(q).expect("validated");
            let z = z.unwrap_or_else(|| rng.sample::<f64, _>(StandardNormal));
            l.mean + l.sd * z
        };
        let age = gauss(Quantity::Age, None).max(0.0);
        let cmdur = gauss(Quantity::Cmdur, None).max(0.0);
        let dur = gauss(Quantity::Dur, None).max(0.0);
        let exper = gauss(Quantity::Exper, None).max(0.0);
        let indur = gauss(Quantity::Indur, None).max(0.0);
        let tindmoy = gauss(Quantity::Tindmoy, None).max(0.0);
        let srreval = gauss(Quantity::Srreval, None).max(0.0);
        let nchom = gauss(Quantity::Nchom, None).round().max(2.0) as u32;
        let ar: f64 = rng.sample(StandardNormal);
        let gauss = |q: Quantity| {
            let l = law.law(q).expect("validated");
            l.mean + l.sd * ar
        };
        let cppar = gauss(Quantity::Cppar).clamp(0.0, 1.0);
        let mgain = gauss(Quantity::Mgain).max(0.0);
        let mxmheur = gauss(Quantity::Mxmheur).max(0.0);
        let dipl3 = Education::ALL[self.education.sample(rng)];

        let mut regs = vec![Registration::ALL[self.first.sample(rng)]];
        let mut exits = Vec::with_capacity(nchom as usize);
        for _ in 1..nchom {
            let cell = self.pairs.sample(rng);
            exits.push(Exit::ALL[cell / 4]);
            regs.push(Registration::ALL[cell % 4]);
        }
        let last_reg = *regs.last().expect("at least one spell");
        exits.push(Exit::ALL[self.exits[last_reg as usize - 1].sample(rng)]);

        let record = SpellRecord {
            individual_id: id,
            spell_index: nchom,
            age: Some(age),
            cmdur: Some(cmdur),
            cppar: Some(cppar),
            dur: Some(dur),
            exper: Some(exper),
            indur: Some(indur),
            mgain: Some(mgain),
            mxmheur: Some(mxmheur),
            nchom: Some(nchom),
            tindmoy: Some(tindmoy),
            srreval: (last_reg != Registration::FirstJobSearch).then_some(srreval),
            dipl3,
            rmotifi: last_reg,
            rmotifa: exits.last().copied(),
        };
        (record, regs.into_iter().zip(exits).collect(), srreval)
    }
}
