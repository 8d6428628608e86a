//! Exact solvers for deciding whether the envy in a fixed initial allocation
//! of indivisible goods can be eliminated by handing out additional copies of
//! items from a pool.
//!
//! An instance consists of agents with additive nonnegative integer
//! valuations, an immutable initial allocation, and a pool of items each with
//! a finite or infinite supply. A solution is an *extension*: a table of copy
//! counts per agent and pool item whose total respects the supplies and an
//! optional budget, and under which no agent values another agent's bundle
//! strictly above its own.
//!
//! The crate provides:
//!
//! * [`model`] — instances, extensions, envy gaps/graphs, and verdict
//!   certification,
//! * [`arith`] — exact gcd, Bézout coefficients, and ceiling division,
//! * [`unbounded`] — a polynomial-time decision procedure for the
//!   all-supplies-infinite, unlimited-budget case,
//! * [`bounded`] — exact search for bounded budgets and/or finite supplies,
//! * [`oracle`] — a brute-force enumeration oracle for testing,
//! * [`generators`] — instance generators (graph reductions, bin packing,
//!   seeded random instances).
//!
//! ```
//! use envyfix_core::bounded::{dispatch, Mode};
//! use envyfix_core::{InstanceBuilder, Supply};
//!
//! // Two identical agents; a2 starts one unit ahead and the pool offers
//! // unlimited copies of items worth 2 and 3.
//! let inst = InstanceBuilder::new(["a1", "a2"])
//!     .initial_item("p1", &[("a1", 1), ("a2", 1)], Some("a2"))
//!     .pool_item("r1", Supply::Infinite, &[("a1", 2), ("a2", 2)])
//!     .pool_item("r2", Supply::Infinite, &[("a1", 3), ("a2", 3)])
//!     .build()
//!     .unwrap();
//! let (_, verdict) = dispatch(&inst, Mode::Auto).unwrap();
//! let extension = verdict.extension().expect("a unit transfer exists");
//! assert!(inst.is_envy_free(extension).unwrap());
//! ```

pub mod arith;
pub mod bounded;
pub mod error;
pub mod generators;
pub mod model;
pub mod oracle;
pub mod unbounded;

pub use error::{Error, Result};
pub use model::{Extension, Instance, InstanceBuilder, Supply, Verdict, Witness};
