//! Numerical tolerances and the default verification seed.
//!
//! All checks in this crate compare f64 quantities against fixed thresholds;
//! they are collected here so every gate is pinned in one place.

/// Pauli commutation and square identities; pure 2x2 arithmetic, so the
/// residual is a handful of rounding steps above machine epsilon.
pub const PAULI_TOL: f64 = 1e-14;

/// Basis orthogonality, so(3) commutation relations, and other identities
/// built from a few dense 8x8 or 16x16 products.
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Unitarity of propagators: max |U^dag U - 1| entrywise.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Hermiticity required of Hamiltonians fed to the exponential.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Matrix exponential accuracy versus an independent reference.
pub const EXPM_TOL: f64 = 1e-10;

/// Agreement between the diagonal fast path and the general exponential.
pub const EXPM_DIAG_AGREEMENT_TOL: f64 = 1e-12;

/// Default fidelity gate for sequence verification: achieved >= 1 - this.
pub const SEQUENCE_FIDELITY_TOL: f64 = 1e-9;

/// Conjugation residuals (coherence transfer, swap, period identity).
pub const CONJUGATION_TOL: f64 = 1e-9;

/// Relative agreement of closed-form durations with builder accounting.
pub const DURATION_REL_TOL: f64 = 1e-12;

/// Finite-difference residual for the extremal-trajectory equations at the
/// reference grid of 10^4 steps; the scheme is second order, so the bound
/// scales with (T/n)^2.
pub const EXTREMAL_ODE_TOL: f64 = 1e-5;

/// Grid resolution for the extremal-trajectory checks.
pub const EXTREMAL_STEPS: usize = 10_000;

/// Seed for every pseudo-random battery (swap conjugation triples, period
/// identity directions). Fixed so reports are byte-identical across runs.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::assertions_on_constants)]
    fn tolerances_are_ordered() {
        assert!(PAULI_TOL < ALGEBRA_TOL);
        assert!(ALGEBRA_TOL < CONJUGATION_TOL);
        assert!(SEQUENCE_FIDELITY_TOL <= UNITARITY_TOL * 10.0);
        assert!(EXPM_TOL <= EXTREMAL_ODE_TOL);
    }
}
