//! Simulation and verification laboratory for the one-dimensional
//! diffusion in a Brownian environment.
//!
//! The diffusion with generator `½ e^W (e^{-W} f')'` is built from a
//! sampled environment `W` as `X = S⁻¹ ∘ B ∘ T⁻¹`, where `S` is the scale
//! function and `T` the random time change. The crate provides
//!
//! * [`path`]: piecewise-linear sample paths, samplers for Brownian and
//!   Bessel-type processes, and exact path functionals;
//! * [`environment`]: valley decomposition, good-environment events,
//!   exponential integrals, ladder sequence and localization sets;
//! * [`diffusion`]: the diffusion itself, its local time field, occupation
//!   measure and stopping times;
//! * [`oracle`]: reference laws, the first zero of `J0`, and KS / Wilson
//!   statistics;
//! * [`harness`]: seeded, replicated experiments with JSON/CSV reports;
//! * [`cli`]: the command-line front end used by the `broxlab` binary.
//!
//! The `examples/` directory has one runnable program per capability:
//!
//! ```text
//! examples/
//!   valley_decomposition.rs   decompose an environment, evaluate the events
//!   diffusion_local_time.rs   build a diffusion, export its local time field
//!   ray_knight.rs             both Ray-Knight checks on a flat environment
//!   bessel_barrier.rs         sup law of the dimension-0 squared Bessel process
//!   tanaka.rs                 valley shape against 3-d Bessel functionals
//!   ladder.rs                 ladder heights and integrals
//!   sandwich.rs               local time sandwich at deterministic times
//!   localization.rs           occupation of the four valley neighbourhoods
//!   j0.rs                     first zero of J0
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diffusion;
pub mod environment;
pub mod error;
pub mod harness;
pub mod io;
pub mod oracle;
pub mod path;
pub mod seed;

pub use error::{Error, Result};
