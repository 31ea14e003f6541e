//! Random decision trees: exact counting, exact-uniform sampling, exact
//! average sensitivity, and the tail bounds showing that almost every
//! bounded-depth decision tree needs a linear number of quantum queries.
//!
//! The crate is organised bottom-up:
//!
//! * [`tree`] and [`codec`]: the decision-tree data model and its text form.
//! * [`counting`] and [`sampler`]: exact counts and the four random models.
//! * [`sensitivity`]: average sensitivity by truth table and by structure.
//! * [`bounds`]: closed-form evaluation of every bound in the argument.
//! * [`harness`]: seeded, reproducible experiments that check them.

pub mod bounds;
pub mod codec;
pub mod counting;
pub mod dyadic;
mod error;
pub mod harness;
pub mod rng;
pub mod sampler;
pub mod sensitivity;
pub mod stats;
pub mod tree;

pub use counting::{BigCount, CountClass, CountTable};
pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use rng::RandomStream;
pub use sampler::{Model, Sampler};
pub use tree::{DecisionTree, LeafAssignment, LeafProfile, Node, Shape, Structure, Violation};
