//! Hierarchical sentence factorization and order-aware sentence distances.
//!
//! The pipeline reads AMR-annotated sentences ([`amr`]), turns each into a
//! factorization tree whose root holds the sentence reordered into
//! predicate-argument form ([`factorize`]), and compares sentences with the
//! ordered word mover's distance and its baselines ([`transport`]) on top of
//! pretrained word vectors ([`embed`]). [`eval`] scores metrics against gold
//! similarity labels with Pearson and Spearman correlation.

pub mod amr;
pub mod embed;
pub mod error;
pub mod eval;
pub mod exec;
pub mod factorize;
pub mod transport;

pub use error::{Error, Result};
