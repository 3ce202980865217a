//! Convolution weight mapping for size-limited processing-in-memory crossbars.
//!
//! [`mappers`] plans a layer with im2col, square-window SDK or the
//! variable-window search; [`cycles`] holds the closed-form cycle counts;
//! [`sim`] materializes a plan on the array and runs it against a direct
//! convolution.

pub mod cli;
pub mod cycles;
mod error;
pub mod mappers;
pub mod model;
pub mod netfile;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
pub use mappers::{plan, plan_im2col, plan_network, plan_oracle, plan_sdk, plan_vwsdk};
pub use model::{
    validate_layer, validate_window, ArraySpec, LayerSpec, MappingPlan, Method, NetworkSpec,
    RowPacking, WindowShape,
};
