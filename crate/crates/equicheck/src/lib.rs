//! An executable notion of interpretability: a model is interpretable to a
//! user when their inference mechanisms commute through a translation, and
//! this crate makes that diagram — and everything needed to verify it at
//! concept level — mechanically checkable on finite tabular models.
//!
//! The pieces:
//!
//! - [`fca`]: formal contexts, the derivation operators between object and
//!   sentence sets, concept closure and exhaustive concept enumeration.
//! - [`translation`]: sentence translations and closure-preserving
//!   soundness certificates.
//! - [`tabular`]: exact conditional tables, joint distributions, mutual
//!   information and the lossless-latent-space / factorization checks.
//! - [`verifier`]: raw and concept-based inference equivariance with exact
//!   step accounting and the bounded-verification check.
//! - [`process`]: concept-based process diagrams (boxes, copy, discard,
//!   constants), interventions, causal effects, parameter memories.
//! - [`group`]: finite group actions, concept invariance/equivariance, and
//!   leakage witness scans.
//! - [`align`]: reasoning-shortcut detection and probe-based alignment.
//! - [`blueprint`]: blueprint model assembly, the synthetic colored-digit
//!   bundle, and the aggregated verification suite.
//!
//! Run `cargo run -p equicheck --example closure_basics` (and the other
//! examples) for guided tours; the `equicheck` binary exposes the same
//! machinery as subcommands with JSON input and output.

pub mod align;
pub mod blueprint;
pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod fca;
pub mod generate;
pub mod group;
pub mod process;
pub mod tabular;
pub mod translation;
pub mod verifier;

pub use align::{probe_align, AlignmentResult, MatchEntry};
pub use blueprint::{
    assemble, generate_suite_bundle, run_suite, InterpretableModel, SuiteBundle, SuiteReport,
};
pub use config::EngineConfig;
pub use domain::{Assignment, FiniteDomain, Variable};
pub use error::{EngineError, Result};
pub use fca::{
    closure_of_intent, derive_extent, derive_intent, enumerate_concepts, is_concept, ConceptPair,
    FormalContext,
};
pub use group::{check_equivariance, check_invariance, ActionSet, FiniteAction};
pub use process::{
    average_causal_effect, evaluate_diagram, intervene, InterventionSpec, ParameterMemory,
    ProcessDiagram,
};
pub use tabular::{
    conditional_mutual_information, factorize, is_lossless_latent, mutual_information,
    JointDistribution, TabularStochasticMap,
};
pub use translation::{check_soundness, SoundnessCertificate, TranslationMap};
pub use verifier::{
    check_theorem1_bound, verify_concept_equivariance, verify_inference_equivariance, ValueMap,
    VerificationReport,
};
