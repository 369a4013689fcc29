//! Consensus clustering by low-rank tensor refinement of ensemble evidence.
//!
//! The pipeline runs in five stages, each its own module:
//!
//! | stage | module | result |
//! |---|---|---|
//! | generate | [`basegen`] | pool of k-means base clusterings |
//! | accumulate | [`ensemble`] | co-association matrix `A`, coherent-link mask `M` |
//! | refine | [`solver`] (on [`tensor`]) | low-rank cleaned similarity matrix |
//! | extract | [`consensus`] | final partition (spectral or hierarchical) |
//! | evaluate | [`metrics`] | seven scores against ground truth |
//!
//! ```
//! use ndarray::array;
//! use tensemble::consensus::spectral_consensus;
//! use tensemble::ensemble::{co_association, coherent_link, LabelMatrix};
//! use tensemble::metrics::score;
//! use tensemble::solver::{solve, LtaConfig};
//!
//! let pool = LabelMatrix::from_columns(&[
//!     vec![0, 0, 0, 1, 1, 1],
//!     vec![0, 0, 0, 1, 1, 1],
//!     vec![0, 0, 1, 1, 1, 2],
//! ])?;
//! let a = co_association(&pool)?;
//! let m = coherent_link(&a)?;
//! let cfg = LtaConfig { lambda: 2.0, ..LtaConfig::default() };
//! let refined = solve(&a, &m, cfg)?.refined;
//! let partition = spectral_consensus(&refined, 2, 7)?;
//! let report = score(partition.labels(), &[0, 0, 0, 1, 1, 1])?;
//! assert_eq!(report.nmi, 1.0);
//! # Ok::<(), tensemble::Error>(())
//! ```

pub mod basegen;
pub mod consensus;
pub mod ensemble;
pub mod error;
pub mod kmeans;
pub mod metrics;
pub mod seeds;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};

/// Compiles every code block in the README and the user guide as a doc-test
/// so the prose cannot drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ensemble.md")]
    mod ensemble {}
    #[doc = include_str!("../../../book/src/tensor.md")]
    mod tensor {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/consensus.md")]
    mod consensus {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
