//! Typology of recurring unemployment spells with Kohonen maps.
//!
//! The pipeline runs in stages that mirror the analysis:
//!
//! * [`dataset`]: ingest spell records, code the qualitative variables, standardize the
//!   ten classification features, or generate a seeded synthetic cohort;
//! * [`transitions`]: registration/exit transition tables and per-individual shares;
//! * [`som`]: a rectangular self-organizing map (batch or online) with BMU assignment
//!   and quantization/topology diagnostics;
//! * [`macrocluster`]: Ward grouping of the code vectors into a few broad classes;
//! * [`profiles`]: class means and deviations, qualitative distributions, code-vector
//!   profiles and neighbor distances;
//! * [`mca`]: multiple correspondence analysis of the qualitative variables.

pub mod dataset;
pub mod macrocluster;
pub mod matrix;
pub mod mca;
pub mod metrics;
pub mod profiles;
pub mod som;
pub mod transitions;

pub use matrix::Matrix;
