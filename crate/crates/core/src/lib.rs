//! Hierarchical phoneme recognition.
//!
//! MFCC segment features, kernel SVMs trained by sequential minimal
//! optimization, trees of classifiers (the traditional articulatory grouping
//! and a grouping derived from classifier confusions), and the confusion
//! matrix tooling that ties them together.

pub mod confusion;
pub mod corpus;
pub mod experiment;
pub mod features;
pub mod hierarchy;
pub mod phoneme;
pub mod svm;

pub use phoneme::{BroadClass, PhonemeLabel};
