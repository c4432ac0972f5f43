//! Numerical tolerances shared by every module.
//!
//! All values are absolute except [`RANK_TOL`], which is relative to the
//! largest eigenvalue of the matrix whose support is being determined.

/// Eigenvalues below `RANK_TOL * lambda_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Allowed entrywise deviation from Hermiticity.
pub const TOL_HERM: f64 = 1e-9;

/// Allowed negative eigenvalue (relative to the largest) for PSD checks.
pub const TOL_PSD: f64 = 1e-9;

/// Reconstruction error allowed in operator norm.
pub const TOL_RECON: f64 = 1e-8;

/// Deviation of a Gram matrix from the identity.
pub const TOL_ORTH: f64 = 1e-8;

/// Slack for inequalities between distances and fidelities.
pub const TOL_FVG: f64 = 1e-7;

/// Deviation of a trace or norm from one.
pub const TOL_NORM: f64 = 1e-9;

/// Purity threshold: Tr(rho^2) >= 1 - TOL_PURE.
pub const TOL_PURE: f64 = 1e-9;

/// Default cap on the dimension of dense matrices.
pub const DIM_GUARD: usize = 4096;

pub(crate) fn check_dim(dim: usize, guard: usize) -> crate::Result<()> {
    if dim > guard {
        Err(crate::Error::DimGuardExceeded { dim, guard })
    } else {
        Ok(())
    }
}

/// `base^exp`, or an error if it exceeds `guard` (or overflows).
pub(crate) fn guarded_pow(base: usize, exp: usize, guard: usize) -> crate::Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc
            .checked_mul(base)
            .filter(|&v| v <= guard)
            .ok_or(crate::Error::DimGuardExceeded {
                dim: acc.saturating_mul(base),
                guard,
            })?;
    }
    Ok(acc)
}
