//! Periodic 3D grid, Fourier transform plumbing, the dipolar multiplier and
//! the nonlocal convolution `K * |u|^2`.
//!
//! Discrete/continuum correspondence used throughout the crate: a field `u`
//! is sampled at `x_j = -L/2 + j h` per axis; the unnormalized forward DFT
//! approximates the continuum transform up to a per-mode phase that cancels
//! in every quadratic functional, so norms and pairings are computed as
//!
//! ```text
//! ||u||_2^2      = dV * sum |u_j|^2
//! ||grad u||_2^2 = dV/N * sum |xi_k|^2 |u^_k|^2
//! B(u)           = dV/N * sum (lambda1 + lambda2 Khat(xi_k)) |rho^_k|^2
//! ```
//!
//! with `dV` the cell volume and `N` the total point count.  The rectangle
//! rule is exact for band-limited integrands, which makes the Plancherel
//! identities hold to roundoff rather than to discretization order.
//!
//! The dipolar multiplier is `Khat(xi) = (4 pi / 3)(3 xi_3^2/|xi|^2 - 1)`,
//! with the zero-mode convention `Khat(0) = 0`: the multiplier is homogeneous
//! of degree zero and has no limit at the origin; the zero-mean choice is the
//! principal-value reading of the kernel and makes constant densities
//! force-free.
//!
//! Periodization: the convolution uses the raw multiplier on the torus.
//! Fields meant to approximate states on the whole space must keep their mass
//! inside the central half of the box; [`support_fraction`] measures this and
//! the solvers enforce it at runtime.

mod fft;
mod field;
mod grid;
mod ops;
mod snapshot;
pub mod synth;

pub use fft::Fft3;
pub use field::Field;
pub use grid::Grid3;
pub use ops::{
    dipolar_potential, khat, laplacian_apply, norms, shift_lattice, support_fraction, Norms,
};
pub(crate) use ops::apply_khat as ops_apply_khat;
pub use snapshot::{read_field, write_field, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
