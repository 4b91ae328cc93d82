//! Registration/exit transition tables and per-individual transition shares.
//!
//! A table counts transition events (one per spell pair, not one per individual) and
//! carries two percentage views: share of all transitions, and share of the row.

use crate::dataset::{spells_by_individual, Exit, Registration, SpellRecord};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TransitionError {
    #[error("pair {index} has direction {found:?}, table direction is {expected:?}")]
    MixedDirections {
        index: usize,
        expected: Direction,
        found: Direction,
    },
    #[error("modality {0} outside 1..=4")]
    ModalityOutOfRange(u8),
    #[error("no exit-to-registration transitions: indicators undefined")]
    UndefinedIndicators,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Registration cause of a spell to the exit type of the same spell.
    RegistrationToExit,
    /// Exit type of a spell to the registration cause of the next spell.
    ExitToRegistration,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::RegistrationToExit => "registration_to_exit",
            Direction::ExitToRegistration => "exit_to_registration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionPair {
    pub from: u8,
    pub to: u8,
    pub direction: Direction,
    pub individual_id: String,
}

impl TransitionPair {
    pub fn new(from: u8, to: u8, direction: Direction, individual_id: impl Into<String>) -> Self {
        Self {
            from,
            to,
            direction,
            individual_id: individual_id.into(),
        }
    }
}

/// 4x4 transition table. Indices are modality codes minus one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub direction: Direction,
    pub counts: [[u64; 4]; 4],
    /// Percent of the grand total.
    pub total_share: [[f64; 4]; 4],
    /// Percent of the row total; 0 on empty rows (see `row_empty`).
    pub row_share: [[f64; 4]; 4],
    pub row_empty: [bool; 4],
    pub row_margin: [f64; 4],
    pub col_margin: [f64; 4],
    /// Set when the table holds no transitions at all.
    pub empty: bool,
}

impl TransitionTable {
    pub fn from_counts(direction: Direction, counts: [[u64; 4]; 4]) -> Self {
        let total: u64 = counts.as_flattened().iter().sum();
        let mut t = TransitionTable {
            direction,
            counts,
            total_share: [[0.0; 4]; 4],
            row_share: [[0.0; 4]; 4],
            row_empty: [false; 4],
            row_margin: [0.0; 4],
            col_margin: [0.0; 4],
            empty: total == 0,
        };
        for i in 0..4 {
            let row_total: u64 = counts[i].iter().sum();
            t.row_empty[i] = row_total == 0;
            for j in 0..4 {
                if total > 0 {
                    t.total_share[i][j] = 100.0 * counts[i][j] as f64 / total as f64;
                }
                if row_total > 0 {
                    t.row_share[i][j] = 100.0 * counts[i][j] as f64 / row_total as f64;
                }
            }
            if total > 0 {
                t.row_margin[i] = 100.0 * row_total as f64 / total as f64;
            }
        }
        if total > 0 {
            for j in 0..4 {
                let col: u64 = (0..4).map(|i| counts[i][j]).sum();
                t.col_margin[j] = 100.0 * col as f64 / total as f64;
            }
        }
        t
    }

    pub fn total(&self) -> u64 {
        self.counts.as_flattened().iter().sum()
    }

    /// Adds the counts of another table with the same direction.
    pub fn merge(&self, other: &TransitionTable) -> Result<TransitionTable, TransitionError> {
        if self.direction != other.direction {
            return Err(TransitionError::MixedDirections {
                index: 0,
                expected: self.direction,
                found: other.direction,
            });
        }
        let mut counts = self.counts;
        for (a, b) in counts.as_flattened_mut().iter_mut().zip(other.counts.as_flattened()) {
            *a += b;
        }
        Ok(TransitionTable::from_counts(self.direction, counts))
    }

    /// Delimited export: one line per cell with both percentage views, then margins.
    /// Percentages are rounded half-up to two decimals.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from("direction,from,to,count,total_share,row_share,row_empty\n");
        for i in 0..4 {
            for j in 0..4 {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    self.direction.label(),
                    i + 1,
                    j + 1,
                    self.counts[i][j],
                    display_percent(self.total_share[i][j]),
                    display_percent(self.row_share[i][j]),
                    self.row_empty[i]
                );
            }
        }
        for i in 0..4 {
            let _ = writeln!(out, "{},{},total,,{},,", self.direction.label(), i + 1, display_percent(self.row_margin[i]));
        }
        for j in 0..4 {
            let _ = writeln!(out, "{},total,{},,{},,", self.direction.label(), j + 1, display_percent(self.col_margin[j]));
        }
        out
    }
}

/// Two decimals, ties rounded away from zero.
pub fn display_percent(p: f64) -> String {
    let scaled = (p * 100.0 + 1e-7).round() / 100.0;
    format!("{scaled:.2}")
}

/// Row share implied by a cell's total share and its row margin, both in percent.
pub fn row_share_from_totals(total_share: f64, row_margin: f64) -> f64 {
    100.0 * total_share / row_margin
}

pub fn build_table(pairs: &[TransitionPair], direction: Direction) -> Result<TransitionTable, TransitionError> {
    let mut counts = [[0u64; 4]; 4];
    for (index, p) in pairs.iter().enumerate() {
        if p.direction != direction {
            return Err(TransitionError::MixedDirections {
                index,
                expected: direction,
                found: p.direction,
            });
        }
        for m in [p.from, p.to] {
            if !(1..=4).contains(&m) {
                return Err(TransitionError::ModalityOutOfRange(m));
            }
        }
        counts[p.from as usize - 1][p.to as usize - 1] += 1;
    }
    Ok(TransitionTable::from_counts(direction, counts))
}

/// Cells whose total share is at least `threshold` percent, largest share first.
/// Returned as 1-based (from, to) codes.
pub fn significant_cells(table: &TransitionTable, threshold: f64) -> Vec<(u8, u8)> {
    let mut cells: Vec<(u8, u8, f64)> = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .filter(|&(i, j)| table.total_share[i][j] >= threshold)
        .map(|(i, j)| (i as u8 + 1, j as u8 + 1, table.total_share[i][j]))
        .collect();
    cells.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    cells.into_iter().map(|(i, j, _)| (i, j)).collect()
}

/// Shares of job-to-lay-off and job-to-end-of-contract among one individual's
/// exit-to-registration transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssIndicators {
    pub individual_id: String,
    pub rss11: f64,
    pub rss12: f64,
    pub n_transitions: usize,
}

pub fn rss_indicators(individual_id: &str, trajectory: &[(Exit, Registration)]) -> Result<RssIndicators, TransitionError> {
    if trajectory.is_empty() {
        return Err(TransitionError::UndefinedIndicators);
    }
    let n = trajectory.len();
    let count = |r: Registration| trajectory.iter().filter(|&&(e, to)| e == Exit::Job && to == r).count();
    Ok(RssIndicators {
        individual_id: individual_id.to_string(),
        rss11: count(Registration::Layoff) as f64 / n as f64,
        rss12: count(Registration::EndOfContract) as f64 / n as f64,
        n_transitions: n,
    })
}

/// Transition pairs of both directions derived from spell rows.
///
/// Every spell with a known exit yields one registration-to-exit pair; every two
/// consecutive spells yield one exit-to-registration pair when the earlier exit is known.
pub fn pairs_from_spells(records: &[SpellRecord]) -> (Vec<TransitionPair>, Vec<TransitionPair>) {
    let mut reg_exit = Vec::new();
    let mut exit_reg = Vec::new();
    for (id, spells) in spells_by_individual(records) {
        for s in &spells {
            if let Some(e) = s.rmotifa {
                reg_exit.push(TransitionPair::new(s.rmotifi.code(), e.code(), Direction::RegistrationToExit, id));
            }
        }
        for w in spells.windows(2) {
            if let Some(e) = w[0].rmotifa {
                exit_reg.push(TransitionPair::new(e.code(), w[1].rmotifi.code(), Direction::ExitToRegistration, id));
            }
        }
    }
    (reg_exit, exit_reg)
}

/// Indicators for every individual with at least one exit-to-registration transition,
/// ordered by individual id. Individuals without one are left out.
pub fn rss_by_individual(records: &[SpellRecord]) -> Vec<RssIndicators> {
    spells_by_individual(records)
        .into_iter()
        .filter_map(|(id, spells)| {
            let traj: Vec<(Exit, Registration)> = spells
                .windows(2)
                .filter_map(|w| w[0].rmotifa.map(|e| (e, w[1].rmotifi)))
                .collect();
            rss_indicators(id, &traj).ok()
        })
        .collect()
}
