pub mod comparison;
pub mod distributions;
pub mod loop_space;
pub mod quadrature;
mod serde_util;
pub mod tournament;
pub mod trial_io;
