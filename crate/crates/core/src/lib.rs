//! Data readiness scoring for document collections.
//!
//! Documents and a question are projected into a topic space learned by LDA
//! (collapsed Gibbs sampling). Each document set is then scored by
//!
//! * **relevance**: the mean cosine similarity between its documents' topic
//!   distributions and the question's, and
//! * **coherence**: the reciprocal of its document disparity, the
//!   Jensen-Rényi divergence of its documents' topic distributions.
//!
//! The [`sensitivity`] module measures how stable both the projection and the
//! relevance score are under small edits of the question.

pub mod corpus;
pub mod error;
pub mod lda;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod sensitivity;
pub mod synthetic;

pub use error::{DrlError, Result};
