//! Successful delivery probability (SDP) of probabilistic caching in N-tier
//! heterogeneous cellular networks.
//!
//! Base stations of each tier form an independent homogeneous Poisson point
//! process. Every BS of tier `i` caches content `j` independently with
//! probability `p_ij`, and a user requesting `j` attaches to the BS with the
//! strongest average received power among those holding `j`. The crate
//! provides:
//!
//! * [`model`]: network, catalog and policy types, unit conversions.
//! * [`specfun`]: the channel constants `H`, `D`, `T` built from the Gauss
//!   hypergeometric and Beta functions.
//! * [`analytics`]: association probabilities, serving-distance law,
//!   conditional and total SDP (general noise and interference-limited).
//! * [`optimizer`]: the concave cache-placement problem, its single-tier
//!   closed form, the equivalent single-tier bound and baseline policies.
//! * [`tradeoff`]: uniform-cache equivalence and density/power versus cache
//!   size tradeoff curves.
//! * [`simulator`]: a reproducible, parallel Monte Carlo estimator used as an
//!   independent check of the analytic results.

pub mod analytics;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod quadrature;
pub mod simulator;
pub mod specfun;
pub mod tradeoff;

pub use error::{Error, Result};
pub use model::{CachingPolicy, ContentCatalog, NetworkConfig, TierParams};
