//! Desk-scale simulator for coplanar-waveguide (CPW) resonator lattices with
//! embedded flux-tunable transmons.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] – resonator networks as graphs with oriented resonator ends,
//!   line graphs of root graphs, and chains built from unit cells.
//! * [`tightbinding`] – photonic tight-binding Hamiltonians, Bloch and
//!   finite-chain spectra, the first-order frequency-dependent hopping
//!   correction, densities of states and band-edge fitting.
//! * [`circuitqed`] – transmon models, the single-excitation multimode
//!   Jaynes-Cummings problem, photon bound states, dispersive shifts and
//!   photon-mediated exchange couplings.
//! * [`fluxcal`] – linear flux-crosstalk model, its calibration from
//!   (synthetic) measurements and its inversion.
//! * [`spectra`] – Lorentzian transmission synthesis, flux maps and
//!   CSV/JSON/SVG export.
//!
//! Frequencies, energies and couplings are ordinary frequencies in GHz.
//! Capacitances are in fF, impedances in Ω, fluxes in units of Φ₀ and
//! voltages in V.

pub mod circuitqed;
pub mod error;
pub mod fluxcal;
pub mod lattice;
mod linalg;
pub mod spectra;
pub mod tightbinding;

pub use error::Error;

/// Crate version, recorded in export provenance sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
