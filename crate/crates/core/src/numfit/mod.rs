//! Numerical building blocks shared by the inversion pipelines.

mod lm;
mod pchip;
mod poly;
mod profile;
mod resample;
mod spectrum;

pub use lm::{
    central_difference_jacobian, levenberg_marquardt, FitOutcome, FitProblem, Residuals,
    Termination, Tolerances,
};
pub use pchip::Pchip;
pub use poly::{poly_eval, poly_fit};
pub use profile::{profile_likelihood_ci, IntervalKind, ProfileInterval};
pub use resample::{check_uniform, interp_linear, resample_uniform};
pub use spectrum::{dtft, fft, hann, ifft, windowed_fft, Spectrum, Window};
