//! PLEX: a learned index over sorted `u64` keys with a single
//! hyperparameter, the maximum prediction error `epsilon`.
//!
//! The index is an epsilon-bounded linear spline over the data's CDF. Its
//! knots are located through a subindex, either a radix table or a Compact
//! Hist-Tree, picked by a cost model that is evaluated while the spline is
//! built, without building any candidate structure.
//!
//! ```
//! use plex::{KeyWidth, PlexIndex};
//!
//! let data: Vec<u64> = (0..10_000u64).map(|i| i * i).collect();
//! let index = plex::build(&data, 32, KeyWidth::FULL).unwrap();
//! assert_eq!(index.lookup(&data, 49), 7);
//! assert_eq!(index.lookup(&data, 50), 8);
//!
//! let bytes = index.serialize();
//! assert_eq!(PlexIndex::deserialize(&bytes).unwrap().lookup(&data, 50), 8);
//! ```

pub mod cht;
pub mod data_io;
pub mod error;
pub mod harness;
pub mod index;
pub mod key;
pub mod radix_table;
pub mod spline;
pub mod tuner;

pub use crate::cht::{build_cht, cht_stats, ChtConfig, ChtStats, CompactHistTree};
pub use crate::error::{Error, Result};
pub use crate::index::{build, BuildStats, PlexBuilder, PlexIndex, Subindex, SubindexPolicy};
pub use crate::key::{lcp, lower_bound, prefix, CdfPoint, Key, KeyWidth};
pub use crate::radix_table::{
    build_radix_table, CostEvent, RadixCostTracker, RadixCosts, RadixTableIndex,
};
pub use crate::spline::{build_spline, SplineModel, SplinePoint};
pub use crate::tuner::{
    build_lcp_histogram, compute_cost_surface, estimate_cht_memory, select_subindex, CostSurface,
    LcpHistogram, SubindexKind, TunerChoice,
};
