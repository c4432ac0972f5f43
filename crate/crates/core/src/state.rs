//! Density operators, (sub-)POVMs and the Born rule.

use crate::linalg::{eigh, ComplexVector, CMatrix, HermitianMatrix, C64};
use crate::tol::{TOL_NORM, TOL_PSD, TOL_PURE, TOL_RECON};
use crate::{Error, Result};

/// A positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    mat: HermitianMatrix,
    pure: bool,
}

impl DensityOperator {
    pub fn new(mat: HermitianMatrix) -> Result<Self> {
        let e = eigh(&mat);
        if e.min_value() < -TOL_PSD {
            return Err(Error::NotPsd {
                min_eigenvalue: e.min_value(),
            });
        }
        let tr = mat.trace();
        if (tr - 1.0).abs() > TOL_NORM {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let purity: f64 = e.values.iter().map(|v| v * v).sum();
        Ok(DensityOperator {
            mat,
            pure: purity >= 1.0 - TOL_PURE,
        })
    }

    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(mat)?)
    }

    /// `|v><v|` for a unit vector `v`.
    pub fn pure(v: &ComplexVector) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > TOL_NORM {
            return Err(Error::InvalidState(format!("vector norm {n} is not 1")));
        }
        Ok(DensityOperator {
            mat: HermitianMatrix::projector(v),
            pure: true,
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator {
            mat: HermitianMatrix::identity(dim).scale(1.0 / dim as f64),
            pure: dim == 1,
        }
    }

    /// Uniform mixture of equally sized states.
    pub fn mixture(states: &[&DensityOperator]) -> Result<Self> {
        let first = states.first().ok_or(Error::EmptyCode)?;
        let mut acc = CMatrix::zeros(first.dim(), first.dim());
        for s in states {
            crate::linalg::same_dim(first.dim(), s.dim())?;
            acc += s.mat.as_matrix();
        }
        acc /= C64::new(states.len() as f64, 0.0);
        Self::new(HermitianMatrix::symmetrized(acc))
    }

    pub fn mat(&self) -> &HermitianMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn is_pure(&self) -> bool {
        self.pure
    }

    pub fn purity(&self) -> f64 {
        crate::linalg::trace_product(self.mat.as_matrix(), self.mat.as_matrix())
    }

    /// The state vector of a pure state (principal eigenvector; global phase
    /// fixed by the eigensolver).
    pub fn pure_vector(&self) -> Option<ComplexVector> {
        self.pure.then(|| eigh(&self.mat).vector(0))
    }

    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        crate::linalg::trace_distance(&self.mat, &other.mat)
    }

    pub fn fidelity(&self, other: &DensityOperator) -> Result<f64> {
        crate::linalg::fidelity(&self.mat, &other.mat)
    }
}

/// Born rule `Tr ρE` (unclamped).
pub fn born(rho: &DensityOperator, effect: &HermitianMatrix) -> Result<f64> {
    rho.mat.trace_product(effect)
}

/// A list of effects `0 <= E_t <= 1` with `Σ E_t <= 1`; a complete one sums
/// to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct SubPovm {
    effects: Vec<HermitianMatrix>,
    complete: bool,
}

impl SubPovm {
    pub fn new(effects: Vec<HermitianMatrix>, complete: bool) -> Result<Self> {
        let first = effects
            .first()
            .ok_or_else(|| Error::InvalidPovm("no effects".into()))?;
        let dim = first.dim();
        let mut total = CMatrix::zeros(dim, dim);
        for (i, e) in effects.iter().enumerate() {
            crate::linalg::same_dim(dim, e.dim())?;
            check_effect(e).map_err(|msg| Error::InvalidPovm(format!("effect {i}: {msg}")))?;
            total += e.as_matrix();
        }
        let total = HermitianMatrix::symmetrized(total);
        let spec = eigh(&total);
        if spec.max_value() > 1.0 + TOL_PSD {
            return Err(Error::InvalidPovm(format!(
                "effects sum to an operator with eigenvalue {} > 1",
                spec.max_value()
            )));
        }
        if complete && 1.0 - spec.min_value() > TOL_RECON {
            return Err(Error::InvalidPovm(format!(
                "marked complete but the sum has eigenvalue {}",
                spec.min_value()
            )));
        }
        Ok(SubPovm { effects, complete })
    }

    pub fn effects(&self) -> &[HermitianMatrix] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &HermitianMatrix {
        &self.effects[i]
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn total(&self) -> HermitianMatrix {
        let mut acc = CMatrix::zeros(self.dim(), self.dim());
        for e in &self.effects {
            acc += e.as_matrix();
        }
        HermitianMatrix::symmetrized(acc)
    }

    /// `1 − Σ E_t`.
    pub fn rest(&self) -> HermitianMatrix {
        let total = self.total();
        HermitianMatrix::identity(self.dim())
            .sub(&total)
            .expect("same dimension")
    }

    /// The POVM with the rest effect appended.
    pub fn completed(&self) -> SubPovm {
        let mut effects = self.effects.clone();
        effects.push(self.rest());
        SubPovm {
            effects,
            complete: true,
        }
    }

    /// Sum of the effects with the given indices.
    pub fn coarse_grain(&self, indices: &[usize]) -> HermitianMatrix {
        let mut acc = CMatrix::zeros(self.dim(), self.dim());
        for &i in indices {
            acc += self.effects[i].as_matrix();
        }
        HermitianMatrix::symmetrized(acc)
    }

    /// Keeps only the listed effects (in the given order).
    pub fn select(&self, indices: &[usize]) -> SubPovm {
        SubPovm {
            effects: indices.iter().map(|&i| self.effects[i].clone()).collect(),
            complete: self.complete && indices.len() == self.effects.len(),
        }
    }
}

fn check_effect(e: &HermitianMatrix) -> std::result::Result<(), String> {
    let spec = eigh(e);
    if spec.min_value() < -TOL_PSD {
        return Err(format!("negative eigenvalue {}", spec.min_value()));
    }
    if spec.max_value() > 1.0 + TOL_PSD {
        return Err(format!("eigenvalue {} above 1", spec.max_value()));
    }
    Ok(())
}

/// Checks `0 <= E <= 1` for a single test effect.
pub fn validate_effect(e: &HermitianMatrix) -> Result<()> {
    check_effect(e).map_err(Error::InvalidPovm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis_vector;

    fn plus() -> ComplexVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)])
    }

    #[test]
    fn born_rule_examples() {
        let rho = DensityOperator::pure(&plus()).unwrap();
        assert!((born(&rho, &HermitianMatrix::identity(2)).unwrap() - 1.0).abs() < 1e-15);
        let zero = DensityOperator::pure(&basis_vector(2, 0)).unwrap();
        let p1 = HermitianMatrix::projector(&basis_vector(2, 1));
        assert_eq!(born(&zero, &p1).unwrap(), 0.0);
        let p0 = HermitianMatrix::projector(&basis_vector(2, 0));
        assert!((born(&rho, &p0).unwrap() - 0.5).abs() < 1e-15);
        assert!(born(&rho, &HermitianMatrix::identity(3)).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::new(HermitianMatrix::from_diagonal(&[0.5, 0.4])).is_err());
        assert!(DensityOperator::new(HermitianMatrix::from_diagonal(&[1.2, -0.2])).is_err());
        let mixed = DensityOperator::maximally_mixed(2);
        assert!(!mixed.is_pure());
        assert!((mixed.purity() - 0.5).abs() < 1e-15);
        let p = DensityOperator::new(HermitianMatrix::projector(&plus())).unwrap();
        assert!(p.is_pure());
        let v = p.pure_vector().unwrap();
        assert!((v.dotc(&plus()).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn povm_validation() {
        let p0 = HermitianMatrix::projector(&basis_vector(2, 0));
        let p1 = HermitianMatrix::projector(&basis_vector(2, 1));
        let povm = SubPovm::new(vec![p0.clone(), p1.clone()], true).unwrap();
        assert!(povm.rest().operator_norm() < 1e-15);

        let sub = SubPovm::new(vec![p0.clone()], false).unwrap();
        assert!(SubPovm::new(vec![p0.clone()], true).is_err());
        assert!(sub.completed().is_complete());

        // two copies of the same projector overshoot the identity
        assert!(SubPovm::new(vec![p0.clone(), p0.clone()], false).is_err());
        assert!(SubPovm::new(vec![p0.scale(1.5)], false).is_err());
        assert!(SubPovm::new(vec![p1.scale(-0.1)], false).is_err());
    }
}
