use super::{kernel_matrix, SomError, SomMap, TraceEntry};
use crate::matrix::{squared_distance, Matrix};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    /// Sequential single-sample updates, sample order reshuffled every epoch.
    Online,
    /// Every epoch replaces each code vector by the kernel-weighted mean of the data.
    Batch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    Linear,
    Exponential,
}

/// How a batch epoch picks the unit a record is credited to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WinnerRule {
    /// Nearest code vector (the classical batch map).
    Nearest,
    /// Unit minimizing the kernel-smoothed squared distance `sum_v h(c,v) |x - w_v|^2`.
    /// With this rule every batch epoch at a fixed radius can only lower the extended
    /// distortion, which the classical rule does not guarantee. Coincides with `Nearest`
    /// at radius 0, but shrinks the map toward the data center at large radii.
    LocalDistortion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSchedule {
    pub mode: TrainingMode,
    pub epochs: usize,
    /// Kernel width in lattice-distance units at the first and last epoch.
    pub radius_start: f64,
    pub radius_end: f64,
    /// Online mode only.
    pub learning_rate_start: f64,
    pub learning_rate_end: f64,
    pub decay: Decay,
    /// Number of consecutive epochs sharing one radius (and learning rate).
    pub plateau: usize,
    pub winner: WinnerRule,
    pub seed: u64,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        Self {
            mode: TrainingMode::Batch,
            epochs: 50,
            radius_start: 5.0,
            radius_end: 0.0,
            learning_rate_start: 0.5,
            learning_rate_end: 0.01,
            decay: Decay::Linear,
            plateau: 1,
            winner: WinnerRule::Nearest,
            seed: 1,
        }
    }
}

impl TrainingSchedule {
    pub fn validate(&self) -> Result<(), SomError> {
        let bad = |m: &str| Err(SomError::InvalidSchedule(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.plateau == 0 {
            return bad("plateau must be positive");
        }
        if !(self.radius_start >= self.radius_end && self.radius_end >= 0.0) || !self.radius_start.is_finite() {
            return bad("need radius_start >= radius_end >= 0");
        }
        if self.decay == Decay::Exponential && self.radius_end <= 0.0 {
            return bad("exponential decay needs radius_end > 0");
        }
        if self.mode == TrainingMode::Online {
            for lr in [self.learning_rate_start, self.learning_rate_end] {
                if !(lr > 0.0 && lr <= 1.0) {
                    return bad("learning rates must lie in (0, 1]");
                }
            }
        }
        Ok(())
    }

    fn progress(&self, epoch: usize) -> f64 {
        let steps = self.epochs.div_ceil(self.plateau);
        if steps <= 1 {
            return 0.0;
        }
        (epoch / self.plateau) as f64 / (steps - 1) as f64
    }

    fn interpolate(&self, start: f64, end: f64, epoch: usize) -> f64 {
        let t = self.progress(epoch);
        match self.decay {
            Decay::Linear => start + (end - start) * t,
            Decay::Exponential => start * (end / start).powf(t),
        }
    }

    pub fn radius_at(&self, epoch: usize) -> f64 {
        self.interpolate(self.radius_start, self.radius_end, epoch)
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.interpolate(self.learning_rate_start, self.learning_rate_end, epoch)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochInfo {
    pub epoch: usize,
    pub radius: f64,
    pub learning_rate: Option<f64>,
    pub quantization_error: f64,
}

const CHUNK: usize = 256;

fn winners(map: &SomMap, data: &Matrix, h: &[f64], rule: WinnerRule) -> Vec<usize> {
    let units = map.units();
    (0..data.nrows())
        .into_par_iter()
        .with_min_len(CHUNK)
        .map_init(
            || vec![0.0; units],
            |d, i| {
                let x = data.row(i);
                for (u, du) in d.iter_mut().enumerate() {
                    *du = squared_distance(x, map.code(u));
                }
                match rule {
                    WinnerRule::Nearest => argmin(d.iter().copied()),
                    WinnerRule::LocalDistortion => {
                        argmin((0..units).map(|c| dot(&h[c * units..(c + 1) * units], d)))
                    }
                }
            },
        )
        .collect()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Index of the smallest value; the lowest index wins ties.
pub(crate) fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// One batch epoch at kernel width `sigma`. Units receiving no kernel mass keep their
/// code vector. The result does not depend on the number of worker threads.
pub fn batch_epoch(map: &mut SomMap, data: &Matrix, sigma: f64, rule: WinnerRule) -> Result<(), SomError> {
    map.check_dim(data.ncols())?;
    if data.is_empty() {
        return Err(SomError::EmptyData);
    }
    let units = map.units();
    let dim = map.dim();
    let h = kernel_matrix(&map.topology, sigma);
    let win = winners(map, data, &h, rule);

    let mut counts = vec![0.0; units];
    let mut sums = vec![0.0; units * dim];
    for (i, &c) in win.iter().enumerate() {
        counts[c] += 1.0;
        for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(data.row(i)) {
            *s += x;
        }
    }
    for u in 0..units {
        let mut mass = 0.0;
        let mut num = vec![0.0; dim];
        for c in 0..units {
            let w = h[c * units + u];
            if w == 0.0 || counts[c] == 0.0 {
                continue;
            }
            mass += w * counts[c];
            for (n, s) in num.iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                *n += w * s;
            }
        }
        if mass > 0.0 {
            for (dst, n) in map.codes.row_mut(u).iter_mut().zip(num) {
                *dst = n / mass;
            }
        }
    }
    Ok(())
}

/// One online epoch: each record, in `order`, pulls the code vectors toward itself by
/// `learning_rate * h(bmu, u)`.
pub fn online_epoch(map: &mut SomMap, data: &Matrix, order: &[usize], sigma: f64, learning_rate: f64) -> Result<(), SomError> {
    map.check_dim(data.ncols())?;
    let units = map.units();
    let h = kernel_matrix(&map.topology, sigma);
    for &i in order {
        let x = data.row(i);
        let c = argmin((0..units).map(|u| squared_distance(x, map.code(u))));
        for u in 0..units {
            let w = learning_rate * h[c * units + u];
            if w == 0.0 {
                continue;
            }
            for (cv, xv) in map.codes.row_mut(u).iter_mut().zip(x) {
                *cv += w * (xv - *cv);
            }
        }
    }
    Ok(())
}

/// Kernel-extended distortion of the data under `map` at width `sigma`.
///
/// For `LocalDistortion` this is `sum_i min_c sum_u h(c,u) |x_i - w_u|^2`; for
/// `Nearest` the winner is the nearest unit instead of the minimizer.
pub fn extended_distortion(map: &SomMap, data: &Matrix, sigma: f64, rule: WinnerRule) -> f64 {
    let units = map.units();
    let h = kernel_matrix(&map.topology, sigma);
    let win = winners(map, data, &h, rule);
    win.iter()
        .enumerate()
        .map(|(i, &c)| {
            (0..units)
                .map(|u| h[c * units + u] * squared_distance(data.row(i), map.code(u)))
                .sum::<f64>()
        })
        .sum()
}

/// Trains a copy of `map`, calling `observer` after every epoch.
pub fn train_with<F>(map: &SomMap, data: &Matrix, schedule: &TrainingSchedule, mut observer: F) -> Result<SomMap, SomError>
where
    F: FnMut(&EpochInfo, &SomMap),
{
    schedule.validate()?;
    if data.is_empty() {
        return Err(SomError::EmptyData);
    }
    map.check_dim(data.ncols())?;
    let mut out = map.clone();
    out.trace.clear();
    out.schedule = Some(schedule.clone());
    out.seed = schedule.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    for epoch in 0..schedule.epochs {
        let radius = schedule.radius_at(epoch);
        let learning_rate = match schedule.mode {
            TrainingMode::Batch => {
                batch_epoch(&mut out, data, radius, schedule.winner)?;
                None
            }
            TrainingMode::Online => {
                order.shuffle(&mut rng);
                let lr = schedule.learning_rate_at(epoch);
                online_epoch(&mut out, data, &order, radius, lr)?;
                Some(lr)
            }
        };
        let qe = super::quantization_error(&out, data)?;
        out.trace.push(TraceEntry {
            epoch,
            radius,
            quantization_error: qe,
        });
        let info = EpochInfo {
            epoch,
            radius,
            learning_rate,
            quantization_error: qe,
        };
        observer(&info, &out);
    }
    Ok(out)
}

/// Trains a copy of `map`; returns the trained map and its per-epoch trace.
pub fn train(map: &SomMap, data: &Matrix, schedule: &TrainingSchedule) -> Result<(SomMap, Vec<TraceEntry>), SomError> {
    let trained = train_with(map, data, schedule, |_, _| {})?;
    let trace = trained.trace.clone();
    Ok((trained, trace))
}
