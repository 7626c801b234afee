//! Simulation and verification toolkit for the dilute Wigner random-matrix
//! ensemble H_{n,p}.
//!
//! The crate samples dilute symmetric random matrices, measures resolvent
//! and spectral statistics by seeded Monte Carlo, and compares them against
//! the closed-form asymptotic predictions (semicircle law, covariance
//! leading terms, variance scaling, the local universality limit).
//!
//! Module map:
//! - [`ensemble`]: entry laws and matrix sampling
//! - [`eig`]: dense symmetric eigensolver and spectral-distribution utilities
//! - [`resolvent`]: resolvent observables from a spectral sample
//! - [`theory`]: closed-form predictions (Stieltjes transform, S/T, cumulants, ...)
//! - [`identities`]: numerical checks of the cumulant expansion and resolvent identities
//! - [`mc`]: seeded, reproducible Monte Carlo campaigns
//! - [`cli`]: config-driven experiment front-end emitting CSV/JSON

pub mod cli;
pub mod eig;
pub mod ensemble;
pub mod identities;
pub mod mc;
pub mod resolvent;
pub mod theory;

pub use eig::{eigen_decompose, SpectralSample};
pub use ensemble::{sample_matrix, EnsembleConfig, EntryLaw, SymmetricMatrix};
pub use mc::{run_campaign, CampaignSpec, MCEstimate, Observable};
pub use resolvent::SpectralPoint;
