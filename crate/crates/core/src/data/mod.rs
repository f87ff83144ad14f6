//! Credit-card transaction data: loading, scaling, and seeded splits.

mod dataset;
mod fixture;
mod scale;
mod split;

pub use dataset::{
    feature_names, load_csv, read_csv, write_csv, Dataset, LABEL_COLUMN, N_FEATURES,
};
pub use fixture::{
    bundled_fixture, synthetic_dataset, FIXTURE_CSV, FIXTURE_FRAUD, FIXTURE_ROWS, FIXTURE_SEED,
};
pub use scale::{fit_apply_scaler, Preprocessing, Scaler, ScalerKind};
pub use split::{batch_iterator, make_splits, Regime, SplitManifest, SplitSpec, Splits};
