//! Negacyclic polynomial multiplication through a double-real FFT.
//!
//! A degree-`N` real polynomial is folded into `N/2` complex values
//! `z_j = (a_j + i a_{j+N/2}) exp(i pi j / N)` and transformed with an
//! `N/2`-point complex FFT, giving its values at `exp(i pi (4k+1) / N)`.
//! Two modes share the same plan: double precision, and a 48-bit fixed-point
//! datapath with per-stage halving.

pub mod fixed;
mod kernel;
mod mul;
mod plan;
mod spectrum;

pub use mul::{forward_fft_torus, inverse_fft_torus, negacyclic_mul, split_limbs, LimbLayout, TorusSpectrum};
pub use plan::{build_plan, FftPlan, FftUnit, PlanStage, FFT_A_POINTS, FFT_B_POINTS};
pub use spectrum::{
    accumulator_exponent, forward_exponent, forward_fft, forward_fft_bounded, inverse_fft, inverse_to_ints,
    pointwise_mac, FftMode, FourierPolynomial,
};
