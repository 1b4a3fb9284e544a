//! Conditional logit demand estimation from censored sales transactions.
//!
//! Only purchases are observed. Choice behaviour among the offered
//! alternatives is estimated by maximum likelihood on the purchase-conditional
//! model; the level of unobserved no-purchase demand is then pinned by an
//! assumed market share. The pipeline is:
//!
//! 1. [`data::parse_long`] / [`data::parse_wide`] and [`data::reshape`] turn a
//!    transaction file into a coded [`TransactionDataset`].
//! 2. [`estimation::fit`] searches the baseline alternative, fits the model,
//!    solves for the no-purchase parameter, and reports standard errors and
//!    arrival estimates.
//! 3. [`prediction::predict`] scores new offers under a fitted model.
//!
//! [`synthetic`] generates data with known parameters and holds brute-force
//! reference computations.

pub mod data;
pub mod error;
pub mod estimation;
pub mod likelihood;
pub mod model;
pub mod prediction;
pub mod report;
pub mod synthetic;

pub use data::{
    AltCode, AlternativeCatalog, ChoiceSet, SetCode, TransactionDataset, TransactionRecord,
};
pub use error::{ErrorKind, Result, RmmError};
pub use estimation::{fit, FitResult, MleFit};
pub use likelihood::{ModelCoefficients, ParamLayout};
pub use model::FittedModel;
pub use prediction::{DecisionMode, PredictionResult};
pub use synthetic::ScenarioSpec;
