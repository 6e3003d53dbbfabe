//! Ground states of the 3D dipolar Gross-Pitaevskii energy with an attractive
//! p-power term.
//!
//! The energy under study is
//!
//! ```text
//! E(u) = 1/2 ||grad u||^2 + lambda1/2 ||u||_4^4
//!        + lambda2/2 Int (K * |u|^2) |u|^2 + 2 lambda3/p ||u||_p^p
//! ```
//!
//! on the mass sphere `S_c = { ||u||_2 = c }`, where `K` is the dipolar
//! interaction kernel `(1 - 3 cos^2 theta) / |x|^3` and `lambda3 < 0`,
//! `2 < p < 10/3`.  In the unstable coupling regime `D_0` the functional is
//! unbounded below on `S_c`, but it admits a local minimizer inside the
//! gradient-norm well `V^c_{R_0} = { u in S_c : ||grad u||_2 < R_0 }`.
//!
//! The crate is organised around that construction:
//!
//! - [`params`] — problem instances, the coupling-regime checks, and every
//!   closed-form constant of the well geometry (`delta_p`, `Lambda`, `c_*`,
//!   the radii `R_0 < R_1`, `kappa`, `beta_c`, `gamma_c`).
//! - [`wp`] — the radial profile `W_p` by adaptive shooting, the
//!   Gagliardo-Nirenberg constant `C_p`, and the closed-form scalar minimizer
//!   `v_c` used both as oracle and as initial guess.
//! - [`spectral`] — periodic 3D grids, FFT plumbing, the exact Fourier
//!   multiplier of the dipolar kernel, and the convolution `K * |u|^2`.
//! - [`functional`] — the energy breakdown, the dipolar pairing `B(u)` by two
//!   independent routes, the Pohozaev functional, fiber maps, the Lagrange
//!   multiplier estimate and the Euler-Lagrange residual.
//! - [`minimizer`] — projected gradient flow on `S_c` confined to the well,
//!   plus the post-hoc claim checks on a converged state.
//! - [`experiments`] — the vanishing-mass asymptotics campaign and orbital
//!   stability probes under split-step time evolution.

pub mod error;
pub mod experiments;
pub mod functional;
pub mod minimizer;
pub mod numeric;
pub mod params;
pub mod spectral;
pub mod wp;

pub use error::CoreError;
pub use functional::EnergyBreakdown;
pub use minimizer::{GroundStateResult, SolverConfig};
pub use params::{ModelParams, RegimeReport, WellGeometry};
pub use spectral::{Field, Fft3, Grid3};
pub use wp::{RadialProfile, ScalarGroundState};
