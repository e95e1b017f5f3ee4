//! Getting tabular data into the shape the models expect.

mod describe;
mod encode;
mod standardize;
mod synthetic;
mod table;
mod vif;

pub(crate) use describe::csv_field;
pub use describe::{describe, Description, Histogram, LevelMean};
pub use encode::{encode, EncodeOptions, EncodedColumn, EncodingSpec};
pub use standardize::Standardizer;
pub use synthetic::{generate_synthetic, Baseline, GroundTruth, SyntheticSpec, TrueRisk};
pub use table::{dataset_to_csv, load_csv, read_csv, Column, ColumnType, RawTable, Schema};
pub use vif::{vif, vif_screen, VifScreening, DEFAULT_VIF_THRESHOLD};
