//! Builders for [`SimilarityMatrix`](crate::SimilarityMatrix) values.

mod electrode;
mod kernel;

pub use electrode::{
    electrode_similarity, pearson, potential_field, ElectrodeConfig, FieldGrid, PotentialField,
    CHANNELS,
};
pub use kernel::{se_kernel, se_similarity, EmbeddedArmSet, GridShape, DEFAULT_LENGTHSCALE};
