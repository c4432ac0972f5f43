//! Dense complex linear algebra: Hermitian eigendecomposition, functions of
//! PSD matrices on their support, state distances and tensor algebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::tol::{check_dim, RANK_TOL, TOL_HERM, TOL_PSD};
use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// A square matrix equal to its conjugate transpose.
///
/// Construction checks the symmetry within [`TOL_HERM`] (scaled by the
/// largest entry when that exceeds one) and then stores the exact
/// Hermitian part `(A + A†)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let asym = asymmetry(&mat);
        let scale = max_abs(&mat).max(1.0);
        if asym > TOL_HERM * scale || !asym.is_finite() {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        Ok(Self::symmetrized(mat))
    }

    /// Takes the Hermitian part without checking how far `mat` was from it.
    pub fn symmetrized(mat: CMatrix) -> Self {
        let adj = mat.adjoint();
        HermitianMatrix((mat + adj) * C64::new(0.5, 0.0))
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        HermitianMatrix(CMatrix::from_diagonal(&d))
    }

    /// Rank-one projector `|v><v|` (not normalized).
    pub fn projector(v: &ComplexVector) -> Self {
        HermitianMatrix::symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `<v|A|v>`, real part.
    pub fn expectation(&self, v: &ComplexVector) -> f64 {
        v.dotc(&(&self.0 * v)).re
    }

    pub fn eigh(&self) -> Eigh {
        eigh(self)
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        same_dim(self.dim(), other.dim())?;
        Ok(HermitianMatrix(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        same_dim(self.dim(), other.dim())?;
        Ok(HermitianMatrix(&self.0 - &other.0))
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        HermitianMatrix(&self.0 * C64::new(s, 0.0))
    }

    /// `Re Tr(A B)` for Hermitian `A`, `B`.
    pub fn trace_product(&self, other: &HermitianMatrix) -> Result<f64> {
        same_dim(self.dim(), other.dim())?;
        Ok(trace_product(&self.0, &other.0))
    }

    /// `B A B†`, Hermitian by construction.
    pub fn conjugate_by(&self, b: &CMatrix) -> HermitianMatrix {
        HermitianMatrix::symmetrized(b * &self.0 * b.adjoint())
    }

    /// Largest absolute eigenvalue.
    pub fn operator_norm(&self) -> f64 {
        let e = self.eigh();
        e.values
            .iter()
            .fold(0.0_f64, |acc, &v| acc.max(v.abs()))
    }
}

impl std::ops::Deref for HermitianMatrix {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

/// Eigendecomposition with eigenvalues in descending order; eigenvectors are
/// the matching columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn vector(&self, i: usize) -> ComplexVector {
        self.vectors.column(i).into_owned()
    }

    /// `sum_i f(lambda_i) v_i v_i†`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (i, &lam) in self.values.iter().enumerate() {
            let s = C64::new(f(lam), 0.0);
            for x in scaled.column_mut(i).iter_mut() {
                *x *= s;
            }
        }
        let out = if n == 0 {
            CMatrix::zeros(0, 0)
        } else {
            &scaled * self.vectors.adjoint()
        };
        HermitianMatrix::symmetrized(out)
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Number of eigenvalues above `RANK_TOL` times the largest.
    pub fn numerical_rank(&self) -> usize {
        let cut = support_cut(self.max_value());
        self.values.iter().filter(|&&v| v > cut).count()
    }
}

pub fn eigh(a: &HermitianMatrix) -> Eigh {
    let n = a.dim();
    if n == 0 {
        return Eigh {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let se = a.0.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    Eigh { values, vectors }
}

/// Checks Hermiticity of a raw matrix, then decomposes it.
pub fn eigh_checked(mat: &CMatrix) -> Result<Eigh> {
    Ok(eigh(&HermitianMatrix::new(mat.clone())?))
}

fn support_cut(lambda_max: f64) -> f64 {
    RANK_TOL * lambda_max.max(0.0)
}

/// Applies `f` to the eigenvalues of a PSD matrix on its support; kernel
/// directions (eigenvalues at or below `RANK_TOL * lambda_max`) map to zero.
pub fn func_on_support(a: &HermitianMatrix, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    let e = eigh(a);
    check_psd_spectrum(&e)?;
    let cut = support_cut(e.max_value());
    Ok(e.reassemble(|lam| if lam > cut && lam > 0.0 { f(lam) } else { 0.0 }))
}

fn check_psd_spectrum(e: &Eigh) -> Result<()> {
    let scale = e.max_value().abs().max(1.0);
    if e.min_value() < -TOL_PSD * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: e.min_value(),
        });
    }
    Ok(())
}

pub fn check_psd(a: &HermitianMatrix) -> Result<()> {
    check_psd_spectrum(&eigh(a))
}

pub fn sqrt_psd(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    func_on_support(a, f64::sqrt)
}

/// Pseudo-inverse square root.
pub fn inv_sqrt_psd(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    func_on_support(a, |x| 1.0 / x.sqrt())
}

pub fn support_projector(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    func_on_support(a, |_| 1.0)
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> Result<f64> {
    let diff = rho.sub(sigma)?;
    let e = eigh(&diff);
    Ok(0.5 * e.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// `F(ρ, σ) = Tr sqrt(sqrt(ρ) σ sqrt(ρ))`, clamped to `[0, 1]`.
///
/// Evaluated as the nuclear norm `‖sqrt(σ) sqrt(ρ)‖₁`, which avoids square
/// roots of rounding noise in the kernel.
pub fn fidelity(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    let product = sqrt_psd(sigma)?.into_matrix() * sqrt_psd(rho)?.into_matrix();
    let f: f64 = product.singular_values().iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Kronecker product `A ⊗ B`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `A^{⊗n}`; `n = 0` gives the 1×1 identity.
pub fn tensor_power(a: &CMatrix, n: usize, guard: usize) -> Result<CMatrix> {
    let rows = crate::tol::guarded_pow(a.nrows(), n, guard)?;
    check_dim(rows, guard)?;
    crate::tol::guarded_pow(a.ncols(), n, guard)?;
    let mut acc = CMatrix::identity(1, 1);
    for _ in 0..n {
        acc = acc.kronecker(a);
    }
    Ok(acc)
}

/// Tensor factor of a bipartite space `H₁ ⊗ H₂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// Traces out `which` from an operator on `C^{d1} ⊗ C^{d2}`.
pub fn partial_trace(a: &CMatrix, d1: usize, d2: usize, which: Factor) -> Result<CMatrix> {
    if a.nrows() != d1 * d2 || a.ncols() != d1 * d2 {
        return Err(Error::DimMismatch {
            expected: d1 * d2,
            found: a.nrows(),
        });
    }
    Ok(match which {
        Factor::Second => CMatrix::from_fn(d1, d1, |i, j| {
            (0..d2).map(|k| a[(i * d2 + k, j * d2 + k)]).sum()
        }),
        Factor::First => CMatrix::from_fn(d2, d2, |i, j| {
            (0..d1).map(|k| a[(k * d2 + i, k * d2 + j)]).sum()
        }),
    })
}

/// `Re Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// Gram matrix `G_{ij} = <v_i|v_j>`.
pub fn gram(vectors: &[ComplexVector]) -> HermitianMatrix {
    let n = vectors.len();
    HermitianMatrix::symmetrized(CMatrix::from_fn(n, n, |i, j| vectors[i].dotc(&vectors[j])))
}

/// Largest entrywise deviation of `m` from the identity.
pub fn identity_deviation(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((m[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Computational basis vector `|i>` in dimension `dim`.
pub fn basis_vector(dim: usize, i: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[i] = ONE;
    v
}

pub fn normalized(v: &ComplexVector) -> ComplexVector {
    let n = v.norm();
    if n > 0.0 {
        v / C64::new(n, 0.0)
    } else {
        v.clone()
    }
}

pub(crate) fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimMismatch { expected, found })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> HermitianMatrix {
        HermitianMatrix::new(CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])).unwrap()
    }

    fn ket_plus() -> ComplexVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexVector::from_vec(vec![c(s, 0.0), c(s, 0.0)])
    }

    #[test]
    fn eigh_identity_and_diagonal() {
        let e = eigh(&HermitianMatrix::identity(2));
        assert_eq!(e.values, vec![1.0, 1.0]);

        let e = eigh(&HermitianMatrix::from_diagonal(&[1.0, 3.0]));
        assert_abs_diff_eq!(e.values[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.vector(0)[1].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.vector(1)[0].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_pauli_x_by_hand() {
        let e = eigh(&pauli_x());
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], -1.0, epsilon = 1e-14);
        // eigenvectors (|0> ± |1>)/√2 up to a phase
        let plus = ket_plus();
        let minus = ComplexVector::from_vec(vec![
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            c(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        assert_abs_diff_eq!(plus.dotc(&e.vector(0)).norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(minus.dotc(&e.vector(1)).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(eigh_checked(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn inverse_sqrt_conventions() {
        let r = inv_sqrt_psd(&HermitianMatrix::identity(3)).unwrap();
        assert!(identity_deviation(r.as_matrix()) < 1e-14);

        let r = inv_sqrt_psd(&HermitianMatrix::from_diagonal(&[4.0, 0.0])).unwrap();
        assert_abs_diff_eq!(r[(0, 0)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r[(1, 1)].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn inverse_sqrt_of_qubit_mixture() {
        // A = I/2 + X/4 has eigenvalues 3/4 and 1/4 on |±>, so
        // A^{-1/2} = (2/√3)|+><+| + 2|-><-|.
        let a = HermitianMatrix::identity(2)
            .scale(0.5)
            .add(&pauli_x().scale(0.25))
            .unwrap();
        let r = inv_sqrt_psd(&a).unwrap();
        let p = 2.0 / 3f64.sqrt();
        let m = 2.0;
        assert_abs_diff_eq!(r[(0, 0)].re, (p + m) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(0, 1)].re, (p - m) / 2.0, epsilon = 1e-12);
        // r^2 A = I
        let check = r.as_matrix() * r.as_matrix() * a.as_matrix();
        assert!(identity_deviation(&check) < 1e-12);
    }

    #[test]
    fn func_on_support_rejects_indefinite() {
        assert!(matches!(
            func_on_support(&pauli_x(), f64::sqrt),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn distances_on_basic_pairs() {
        let zero = HermitianMatrix::projector(&basis_vector(2, 0));
        let one = HermitianMatrix::projector(&basis_vector(2, 1));
        let plus = HermitianMatrix::projector(&ket_plus());

        assert_abs_diff_eq!(trace_distance(&zero, &zero).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_distance(&zero, &one).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            trace_distance(&zero, &plus).unwrap(),
            0.5f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(fidelity(&zero, &zero).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fidelity(&zero, &plus).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert!(matches!(
            trace_distance(&zero, &HermitianMatrix::identity(3)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn tensor_and_partial_trace() {
        let i2 = CMatrix::identity(2, 2);
        assert!(identity_deviation(&tensor(&i2, &i2)) == 0.0);

        let ket00 = basis_vector(4, 0);
        let rho = &ket00 * ket00.adjoint();
        let red = partial_trace(&rho, 2, 2, Factor::Second).unwrap();
        assert_eq!(red[(0, 0)], ONE);
        assert_eq!(red[(1, 1)], ZERO);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = ComplexVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        let rho = &bell * bell.adjoint();
        for which in [Factor::First, Factor::Second] {
            let red = partial_trace(&rho, 2, 2, which).unwrap();
            let half = CMatrix::identity(2, 2) * c(0.5, 0.0);
            assert!(max_abs(&(red - half)) < 1e-15);
        }
    }

    #[test]
    fn tensor_power_guard() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(tensor_power(&i2, 3, 4096).unwrap().nrows(), 8);
        assert!(matches!(
            tensor_power(&i2, 13, 4096),
            Err(Error::DimGuardExceeded { .. })
        ));
    }
}
