//! Dense process-matrix toolkit: labeled operators, Choi channels, bipartite
//! process matrices, entropic measures, local-operation optimization and
//! theorem certification.

pub mod certify;
pub mod choi;
pub mod entropy;
pub mod error;
pub mod json;
pub mod optimize;
pub mod par;
pub mod pmx;
pub mod process;
pub mod random;
pub mod tensor;

pub use choi::{apply_channel, link, ChoiChannel, PartialSwapParams};
pub use error::{Error, Result};
pub use optimize::{maximize_coherent_information, OptimizationResult, OptimizerConfig};
pub use par::Execution;
pub use process::{validate, ProcessMatrix, PurifiedProcess, ThreeRelationParams, ValidityReport};
pub use tensor::{LabeledOperator, Mat, PureVector, Role, SystemLabel, C64};
