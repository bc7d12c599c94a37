//! Multi-round relativistic bit commitment over finite fields.
//!
//! Finite-field arithmetic, the CHSH_Q family of nonlocal games, the honest
//! protocol and its verifier, classical cheating strategies built from game
//! strategies, and exact or sampled estimates of their success.

pub mod adversary;
pub mod analysis;
pub mod error;
pub mod field;
pub mod games;
pub mod protocol;
pub mod rational;

pub use adversary::{CausalModel, CheatStrategy, Lineage, StrategyMeta};
pub use analysis::{CheatReport, McEstimate, Method, SweepConfig, SweepTable};
pub use error::{Error, ErrorKind, Result};
pub use field::{Field, FieldDescription, FieldElement};
pub use games::{DetStrategy, GameDist, GameValueResult};
pub use protocol::{ProtocolParams, Transcript, Variant};
pub use rational::Rational;
