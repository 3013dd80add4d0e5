//! Generative batch black-box optimization over fixed-length discrete sequences.
//!
//! Instead of fitting a regression or classification surrogate, a generative
//! proposal is trained directly on utility values computed from observations
//! and then sampled to produce the next batch of candidates:
//!
//! ```text
//! threshold -> utilities -> fit proposal -> sample batch -> evaluate -> record
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). All IO, file formats and the
//! command line live in the companion `genbo` crate.
//!
//! Module map:
//! * [`types`]: vocabularies, sequences, datasets and per-round records.
//! * [`rng`]: deterministic per-purpose random streams.
//! * [`blackbox`]: the edit-distance text task and Ehrlich test functions.
//! * [`acquisition`]: utilities (PI, EI, sEI, SR) and the annealed threshold.
//! * [`proposal`]: the mean-field categorical proposal and priors.
//! * [`losses`]: preference (PL, rPL) and forward-KL (fKL, bfKL) losses.
//! * [`trainer`]: Adam-based fitting of the proposal.
//! * [`engine`]: the outer optimization loop and the random-mutation baseline.
//! * [`oracle`]: brute-force ground truth on enumerable domains.
#![no_std]

extern crate alloc;

pub mod acquisition;
pub mod blackbox;
pub mod engine;
pub mod losses;
pub mod math;
pub mod oracle;
pub mod proposal;
pub mod rng;
pub mod trainer;
pub mod types;

pub use acquisition::{ThresholdSchedule, UtilityKind};
pub use blackbox::{BlackBox, EditDistanceTask, EhrlichFunction, Task};
pub use engine::{ExperimentConfig, Method, PriorMode, RunResult};
pub use losses::{LossKind, LossSpec, RegularizerKind};
pub use proposal::{MeanFieldParams, Prior};
pub use trainer::TrainConfig;
pub use types::{Dataset, Observation, RoundRecord, Sequence, Vocab};
