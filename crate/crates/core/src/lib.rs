//! Query rewriting from session logs with an absorbing Markov chain.
//!
//! Sessions of NLU hypotheses become chains ending in a success or failure
//! state. A request is rewritten to the reachable hypothesis most likely to
//! end the session successfully. Rewrites already present in the logs are
//! weighted by how well they served customers, so retraining on its own
//! output neither sheds good rewrites nor entrenches bad ones.

mod scalar;

pub mod eval;
pub mod format;
pub mod markov;
pub mod meta;
pub mod session;
pub mod sim;
pub mod template;
pub mod text;
pub mod train;

pub use scalar::Scalar;

/// Double-precision chain, the default for training and resolution.
pub type Graph = markov::MarkovGraph<f64>;
/// Single-precision chain.
pub type GraphF32 = markov::MarkovGraph<f32>;
pub type Candidate = markov::RewriteCandidate<f64>;
pub type Scores = markov::SourceScores<f64>;
