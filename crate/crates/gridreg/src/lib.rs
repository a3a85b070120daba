//! Transmission expansion planning under a merchant-regulatory incentive
//! mechanism with a tunable parameter kappa.
//!
//! The library models a profit-maximizing transmission company (Transco)
//! whose line investments are remunerated through congestion rent plus a
//! regulated incentive fee equal to a fraction kappa of the generator and
//! consumer surplus increase caused by the investment. The Transco's
//! bilevel problem (investment above, welfare-maximizing market clearing
//! below) is recast as a single-level MILP via the lower-level dual
//! constraints, a strong-duality equality, and big-M envelopes for the
//! binary-times-dual products.
//!
//! Module map:
//! - [`network_model`]: case data (network, bids, horizon, policy), file
//!   I/O and the two seeded case generators.
//! - [`solver`]: backend-neutral LP/MILP model building and solving.
//! - [`lp_market`]: the wholesale-market clearing LP and surplus accounting.
//! - [`duality`]: dual-feasibility / strong-duality / complementarity
//!   certificates for clearing solutions.
//! - [`milp`]: the single-level MILP reformulation and solution extraction.
//! - [`oracle`]: brute-force plan enumeration for ground-truth verification.
//! - [`analysis`]: kappa sweeps, stakeholder metrics and report emission.
//! - [`cli`]: the command-line front end.

pub mod analysis;
pub mod cli;
pub mod duality;
pub mod lp_market;
pub mod milp;
pub mod network_model;
pub mod oracle;
pub mod solver;
