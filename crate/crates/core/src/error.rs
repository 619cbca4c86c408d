use thiserror::Error;

use crate::circuitqed::QedError;
use crate::fluxcal::FluxCalError;
use crate::lattice::LatticeError;
use crate::spectra::ExportError;
use crate::tightbinding::TightBindingError;

/// Umbrella error for callers that chain operations across modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    TightBinding(#[from] TightBindingError),
    #[error(transparent)]
    Qed(#[from] QedError),
    #[error(transparent)]
    FluxCal(#[from] FluxCalError),
    #[error(transparent)]
    Export(#[from] ExportError),
}
