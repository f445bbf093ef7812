//! Gibbs states of locally constant potentials on mixing shifts of finite
//! type, their images under 1-block factor maps, and the regularity of the
//! projected measure's g-function.

pub mod cone;
pub mod error;
pub mod factor;
pub mod ganalysis;
pub mod gibbs;
pub mod linalg;
pub mod potential;
pub mod sft;
pub mod system;

pub use cone::{ConeDistance, ContractionCheck, ContractionProfile, DualCheck, SuiteReport};
pub use error::{Error, Result};
pub use factor::{Factor, FactorMap, FwmReport, FwmSearch, FwmWitness};
pub use ganalysis::{Classification, DecayFit, EtaBound, EtaFormula, EtaInputs, GApproximant, GLimit, VariationProfile};
pub use gibbs::{Gibbs, GibbsBounds, GibbsOptions, PerronData};
pub use potential::{HolderEnvelope, Potential, PotentialMode, PotentialSpec, TransferMatrix, Value};
pub use sft::{Alphabet, MixingIndex, Recoding, Sft, Word};
pub use system::SystemDescription;
