//! Explain black-box text classifiers and benchmark the explanations.
//!
//! The crate is organized around four pieces:
//!
//! - [`model`]: the tokenize / predict / gradient contract every classifier
//!   is reached through, plus a builtin lexicon model and an HTTP client.
//! - [`explain`]: gradient, integrated gradients, LIME, Partition-SHAP and
//!   leave-one-out attributions over content tokens.
//! - [`eval`]: comprehensiveness, sufficiency, correlation with
//!   leave-one-out, token IOU, token F1 and AUPRC.
//! - [`data`]: rationale-annotated corpora and their converters.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which is what the command-line front end
//! uses.
//!
//! ```
//! use attrbench_core::{explain, model, LexiconModel, LexiconModelConfig, Method, PredictionCache};
//!
//! let m = LexiconModel::new(LexiconModelConfig::new([("great", 2.0)])).unwrap();
//! let x = model::tokenize(&m, &["great movie".into()], false).unwrap().remove(0);
//! let cache = PredictionCache::new();
//! let e = explain::explain(&m, &cache, &x, 1, Method::PartitionShap, &Default::default()).unwrap();
//! assert!(e.scores[0] > e.scores[1]);
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod explain;
pub mod linalg;
pub mod model;
mod scalar;

pub use error::{Error, ErrorKind, Result};
pub use eval::{Direction, HumanRationale, Metric, Rationale};
pub use explain::Method;
pub use model::{LexiconModelConfig, RemovalStrategy, TextInput, TokenizedInput};
pub use scalar::{sigmoid, Scalar};

pub type Explanation = explain::Explanation<f64>;
pub type EvaluationScore = eval::EvaluationScore<f64>;
pub type GradientBundle = model::GradientBundle<f64>;
pub type PredictionCache = model::PredictionCache<f64>;
pub type LexiconModel = model::LexiconModel<f64>;
pub type RemoteModel = model::RemoteModel<f64>;


pub type ExplanationF32 = explain::Explanation<f32>;
pub type EvaluationScoreF32 = eval::EvaluationScore<f32>;
pub type LexiconModelF32 = model::LexiconModel<f32>;
