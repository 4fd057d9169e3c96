//! Desire fulfillment prediction over short narratives.
//!
//! Given a sentence expressing a desire and up to five following evidence
//! sentences, predict whether the desire was fulfilled. Three model families
//! are provided: a lexical entailment baseline over a normalized hypothesis,
//! flat linear classifiers over aggregated features, and a latent chain model
//! trained with a hard-assignment structured perceptron.

pub mod annotator;
pub mod averaged;
pub mod cli;
pub mod corpus;
pub mod entailment;
pub mod eval;
pub mod features;
pub mod lsnm;
pub mod normalize;
pub mod sparse;
pub mod synth;
pub mod unstructured;
