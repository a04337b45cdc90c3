//! Verification harness and file formats for the decentralized LQG
//! numerics in `dlqg-core`.
//!
//! [`verify`] compares the achievable single-controller cost against the
//! information-style lower bounds across parameter grids and checks the
//! constant-ratio claims; [`formats`] renders curves, bound tables, and
//! reports as CSV or JSON.

pub mod formats;
pub mod verify;
