pub mod boxcount;
pub mod local;
pub mod profile;
pub use boxcount::{box_counting, occupied_cells, BoxCountEstimate};
pub use local::{local_dimension, make_profile, resolved_scale, scale_index, LocalDimRecord, LocalDimReport};
pub use profile::{PiecewiseLinearProfile, ProfileMin};
