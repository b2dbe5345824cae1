//! Heavy-tailed (1+(λ,λ)) genetic algorithm on OneMax and Jump_k, with an
//! exact evaluator of escape probabilities and expected runtimes.

pub mod engine;
pub mod exact;
pub mod harness;
pub mod objective;
pub mod power_law;

pub use engine::{HeavyTailedGa, HyperParams, RunResult, StaticParams};
pub use objective::{BitString, JumpParams, Problem};
pub use power_law::PowerLaw;
