//! Quantum channels in Kraus form and their Heisenberg-picture adjoints.
//!
//! Block channels `N^{⊗n}` are never expanded into `K^n` Kraus operators on
//! the hot paths: [`KrausChannel::apply_power`] and
//! [`AdjointMap::apply_power`] act one tensor factor at a time.

use rand::Rng;

use crate::linalg::{basis_vector, identity_deviation, CMatrix, HermitianMatrix, C64, ONE, ZERO};
use crate::state::{DensityOperator, SubPovm};
use crate::tol::{guarded_pow, TOL_NORM, TOL_RECON};
use crate::{Error, Result};

/// A CPTP map `A -> B` given by Kraus operators `K_i` (`out_dim × in_dim`)
/// with `Σ K_i† K_i = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(in_dim: usize, out_dim: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidChannel("dimensions must be positive".into()));
        }
        if kraus.is_empty() {
            return Err(Error::InvalidChannel("no Kraus operators".into()));
        }
        let mut sum = CMatrix::zeros(in_dim, in_dim);
        for (i, k) in kraus.iter().enumerate() {
            if k.nrows() != out_dim || k.ncols() != in_dim {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operator {i} is {}x{}, expected {out_dim}x{in_dim}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            sum += k.adjoint() * k;
        }
        let dev = identity_deviation(&sum);
        if dev > TOL_RECON {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (deviation {dev:.3e})"
            )));
        }
        Ok(KrausChannel {
            in_dim,
            out_dim,
            kraus,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(dim, dim, vec![CMatrix::identity(dim, dim)])
    }

    /// `Tr: S(C^d) -> C`, Kraus operators `<i|`.
    pub fn trace(dim: usize) -> Result<Self> {
        let kraus = (0..dim)
            .map(|i| {
                let row = basis_vector(dim, i).adjoint();
                CMatrix::from_row_slice(1, dim, row.as_slice())
            })
            .collect();
        Self::new(dim, 1, kraus)
    }

    /// `id_A ⊗ Tr_C`, input ordered as `A ⊗ C`.
    pub fn extended(dim_a: usize, dim_c: usize) -> Result<Self> {
        Self::identity(dim_a)?.tensor(&Self::trace(dim_c)?)
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        let d = u.nrows();
        Self::new(d, d, vec![u])
    }

    /// `ρ -> (1-p) ρ + p 1/d`.
    pub fn depolarizing(dim: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadParams(format!("depolarizing p = {p}")));
        }
        // sqrt(1-p) 1 together with the matrix units sqrt(p/d) |i><j|
        let mut kraus = vec![CMatrix::identity(dim, dim) * C64::new((1.0 - p).sqrt(), 0.0)];
        let s = (p / dim as f64).sqrt();
        for i in 0..dim {
            for j in 0..dim {
                let mut k = CMatrix::zeros(dim, dim);
                k[(i, j)] = C64::new(s, 0.0);
                kraus.push(k);
            }
        }
        Self::new(dim, dim, kraus)
    }

    /// Qubit dephasing `ρ -> (1-p) ρ + p ZρZ`.
    pub fn dephasing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadParams(format!("dephasing p = {p}")));
        }
        let z = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        Self::new(
            2,
            2,
            vec![
                CMatrix::identity(2, 2) * C64::new((1.0 - p).sqrt(), 0.0),
                z * C64::new(p.sqrt(), 0.0),
            ],
        )
    }

    /// Qubit amplitude damping with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::BadParams(format!("amplitude damping gamma = {gamma}")));
        }
        let k0 = CMatrix::from_row_slice(
            2,
            2,
            &[ONE, ZERO, ZERO, C64::new((1.0 - gamma).sqrt(), 0.0)],
        );
        let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, C64::new(gamma.sqrt(), 0.0), ZERO, ZERO]);
        Self::new(2, 2, vec![k0, k1])
    }

    /// Random channel from a Haar-random isometry `C^in -> C^{kraus_count·out}`.
    pub fn random<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        kraus_count: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let v = crate::random::random_isometry(kraus_count * out_dim, in_dim, rng)?;
        let kraus = (0..kraus_count)
            .map(|i| v.rows(i * out_dim, out_dim).into_owned())
            .collect();
        Self::new(in_dim, out_dim, kraus)
    }

    /// `(1-p) id + p U·U†` with a Haar-random unitary `U`: a channel close
    /// to the identity for small `p`.
    pub fn random_near_identity<R: Rng + ?Sized>(dim: usize, p: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadParams(format!("noise p = {p}")));
        }
        let u = crate::random::random_unitary(dim, rng)?;
        Self::new(
            dim,
            dim,
            vec![
                CMatrix::identity(dim, dim) * C64::new((1.0 - p).sqrt(), 0.0),
                u * C64::new(p.sqrt(), 0.0),
            ],
        )
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `N(X) = Σ K X K†` for any operator `X` on the input space.
    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        crate::linalg::same_dim(self.in_dim, x.nrows())?;
        let mut out = CMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let out = self.apply_matrix(rho.mat().as_matrix())?;
        DensityOperator::new(HermitianMatrix::symmetrized(out))
    }

    /// `N^{⊗n}(X)` applied factor by factor.
    pub fn apply_power(&self, x: &CMatrix, n: usize) -> Result<CMatrix> {
        let dim = self.in_dim.pow(n as u32);
        crate::linalg::same_dim(dim, x.nrows())?;
        let mut cur = x.clone();
        for site in 0..n {
            let left = self.out_dim.pow(site as u32);
            let right = self.in_dim.pow((n - site - 1) as u32);
            cur = apply_local(&cur, &self.kraus, left, right);
        }
        Ok(cur)
    }

    pub fn apply_power_state(&self, rho: &DensityOperator, n: usize) -> Result<DensityOperator> {
        let out = self.apply_power(rho.mat().as_matrix(), n)?;
        DensityOperator::new(HermitianMatrix::symmetrized(out))
    }

    pub fn adjoint(&self) -> AdjointMap {
        AdjointMap {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            kraus_adj: self.kraus.iter().map(|k| k.adjoint()).collect(),
        }
    }

    /// `N ⊗ M` with Kraus operators `K_i ⊗ L_j`.
    pub fn tensor(&self, other: &KrausChannel) -> Result<Self> {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a.kronecker(b));
            }
        }
        Self::new(
            self.in_dim * other.in_dim,
            self.out_dim * other.out_dim,
            kraus,
        )
    }

    /// Explicit `N^{⊗n}`; both dimensions and the Kraus count are guarded.
    pub fn tensor_power(&self, n: usize, guard: usize) -> Result<Self> {
        guarded_pow(self.in_dim, n, guard)?;
        guarded_pow(self.out_dim, n, guard)?;
        guarded_pow(self.kraus.len(), n, guard)?;
        let mut acc = KrausChannel::identity(1)?;
        for _ in 0..n {
            acc = acc.tensor(self)?;
        }
        Ok(acc)
    }

    /// Whether every Kraus operator is a multiple of the identity.
    pub fn is_identity(&self) -> bool {
        if self.in_dim != self.out_dim {
            return false;
        }
        self.kraus.iter().all(|k| {
            let c = k[(0, 0)];
            let diff = k - CMatrix::identity(self.in_dim, self.in_dim) * c;
            crate::linalg::max_abs(&diff) <= TOL_RECON
        })
    }

    /// Input dimension of `N^{⊗n}`.
    pub fn block_in_dim(&self, n: usize, guard: usize) -> Result<usize> {
        guarded_pow(self.in_dim, n, guard)
    }

    pub fn block_out_dim(&self, n: usize, guard: usize) -> Result<usize> {
        guarded_pow(self.out_dim, n, guard)
    }
}

/// Heisenberg-picture map `N*(Y) = Σ K† Y K` from operators on the output to
/// operators on the input. Completely positive and unital.
#[derive(Clone, Debug)]
pub struct AdjointMap {
    in_dim: usize,
    out_dim: usize,
    kraus_adj: Vec<CMatrix>,
}

impl AdjointMap {
    /// Input dimension of the original channel (the output of this map).
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn apply_matrix(&self, y: &CMatrix) -> Result<CMatrix> {
        crate::linalg::same_dim(self.out_dim, y.nrows())?;
        let mut out = CMatrix::zeros(self.in_dim, self.in_dim);
        for ka in &self.kraus_adj {
            out += ka * y * ka.adjoint();
        }
        Ok(out)
    }

    pub fn apply(&self, y: &HermitianMatrix) -> Result<HermitianMatrix> {
        Ok(HermitianMatrix::symmetrized(self.apply_matrix(y.as_matrix())?))
    }

    /// `(N*)^{⊗n}(Y)` applied factor by factor.
    pub fn apply_power(&self, y: &HermitianMatrix, n: usize) -> Result<HermitianMatrix> {
        let dim = self.out_dim.pow(n as u32);
        crate::linalg::same_dim(dim, y.dim())?;
        let mut cur = y.as_matrix().clone();
        for site in 0..n {
            let left = self.in_dim.pow(site as u32);
            let right = self.out_dim.pow((n - site - 1) as u32);
            cur = apply_local(&cur, &self.kraus_adj, left, right);
        }
        Ok(HermitianMatrix::symmetrized(cur))
    }

    /// Image of a sub-POVM on `B^n`, a sub-POVM on `A^n`.
    pub fn apply_povm(&self, povm: &SubPovm, n: usize) -> Result<SubPovm> {
        let effects = povm
            .effects()
            .iter()
            .map(|e| self.apply_power(e, n))
            .collect::<Result<Vec<_>>>()?;
        SubPovm::new(effects, povm.is_complete())
    }
}

/// `Σ_k (1_left ⊗ K_k ⊗ 1_right) X (1_left ⊗ K_k ⊗ 1_right)†`.
fn apply_local(x: &CMatrix, ops: &[CMatrix], left: usize, right: usize) -> CMatrix {
    let (b, a) = (ops[0].nrows(), ops[0].ncols());
    let out_dim = left * b * right;
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for k in ops {
        let z = rows_local(x, k, left, right);
        let y = rows_local(&z.adjoint(), k, left, right).adjoint();
        out += y;
    }
    debug_assert_eq!(x.nrows(), left * a * right);
    out
}

/// `(1_left ⊗ K ⊗ 1_right) X` for `X` with `left·a·right` rows.
fn rows_local(x: &CMatrix, k: &CMatrix, left: usize, right: usize) -> CMatrix {
    let (b, a) = (k.nrows(), k.ncols());
    let cols = x.ncols();
    let mut z = CMatrix::zeros(left * b * right, cols);
    for col in 0..cols {
        let xc = x.column(col);
        let mut zc = z.column_mut(col);
        for l in 0..left {
            for bi in 0..b {
                for r in 0..right {
                    let mut acc = ZERO;
                    for ai in 0..a {
                        let kv = k[(bi, ai)];
                        if kv != ZERO {
                            acc += kv * xc[(l * a + ai) * right + r];
                        }
                    }
                    zc[(l * b + bi) * right + r] = acc;
                }
            }
        }
    }
    z
}

/// Checks `|Tr N(ρ) − 1| <= TOL_NORM` for a raw output.
pub fn trace_preserved(out: &CMatrix) -> bool {
    (out.trace().re - 1.0).abs() <= TOL_NORM
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, ComplexVector};
    use crate::random::{random_density, rng_from_seed};
    use crate::state::born;

    fn bell() -> ComplexVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexVector::from_vec(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)])
    }

    #[test]
    fn identity_and_trace_channels() {
        let mut rng = rng_from_seed(1);
        let rho = DensityOperator::new(random_density(3, 3, &mut rng)).unwrap();
        let id = KrausChannel::identity(3).unwrap();
        assert!(max_abs(&(id.apply(&rho).unwrap().mat().as_matrix() - rho.mat().as_matrix())) < 1e-15);

        let tr = KrausChannel::trace(3).unwrap();
        let out = tr.apply(&rho).unwrap();
        assert_eq!(out.dim(), 1);
        assert!((out.mat()[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extended_channel_marginals() {
        let ext = KrausChannel::extended(2, 2).unwrap();
        let bell_state = DensityOperator::pure(&bell()).unwrap();
        let out = ext.apply(&bell_state).unwrap();
        let half = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        assert!(max_abs(&(out.mat().as_matrix() - half)) < 1e-15);

        // product |a>|c> -> |a><a|
        let a = ComplexVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let c = basis_vector(2, 1);
        let prod = DensityOperator::pure(&a.kronecker(&c)).unwrap();
        let out = ext.apply(&prod).unwrap();
        assert!(max_abs(&(out.mat().as_matrix() - &a * a.adjoint())) < 1e-15);

        // |C| = 1 is the identity channel
        let small = KrausChannel::extended(2, 1).unwrap();
        assert!(small.is_identity());
    }

    #[test]
    fn rejects_non_trace_preserving() {
        let k = CMatrix::identity(2, 2) * C64::new(0.9, 0.0);
        assert!(matches!(
            KrausChannel::new(2, 2, vec![k]),
            Err(Error::InvalidChannel(_))
        ));
    }

    #[test]
    fn adjoint_of_unitary_and_duality() {
        let mut rng = rng_from_seed(5);
        let u = crate::random::random_unitary(3, &mut rng).unwrap();
        let ch = KrausChannel::unitary(u.clone()).unwrap();
        let adj = ch.adjoint();
        let d = random_density(3, 2, &mut rng);
        let lhs = adj.apply(&d).unwrap();
        let rhs = u.adjoint() * d.as_matrix() * &u;
        assert!(max_abs(&(lhs.as_matrix() - rhs)) < 1e-12);

        let noisy = KrausChannel::random(3, 2, 3, &mut rng).unwrap();
        let adj = noisy.adjoint();
        let unit = adj.apply(&HermitianMatrix::identity(2)).unwrap();
        assert!(identity_deviation(unit.as_matrix()) < 1e-10);
        for _ in 0..20 {
            let rho = DensityOperator::new(random_density(3, 2, &mut rng)).unwrap();
            let effect = random_density(2, 1, &mut rng);
            let lhs = born(&noisy.apply(&rho).unwrap(), &effect).unwrap();
            let rhs = born(&rho, &adj.apply(&effect).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-7);
        }
    }

    #[test]
    fn factorwise_power_matches_explicit_tensor_power() {
        let mut rng = rng_from_seed(9);
        let ch = KrausChannel::random(2, 3, 2, &mut rng).unwrap();
        let full = ch.tensor_power(2, 4096).unwrap();
        let rho = random_density(4, 4, &mut rng);
        let a = ch.apply_power(rho.as_matrix(), 2).unwrap();
        let b = full.apply_matrix(rho.as_matrix()).unwrap();
        assert!(max_abs(&(a - b)) < 1e-12);

        let y = random_density(9, 3, &mut rng);
        let a = ch.adjoint().apply_power(&y, 2).unwrap();
        let b = full.adjoint().apply(&y).unwrap();
        assert!(max_abs(&(a.as_matrix() - b.as_matrix())) < 1e-12);
    }

    #[test]
    fn standard_channels_are_valid() {
        KrausChannel::depolarizing(3, 0.2).unwrap();
        KrausChannel::dephasing(0.3).unwrap();
        KrausChannel::amplitude_damping(0.4).unwrap();
        assert!(KrausChannel::depolarizing(2, 1.5).is_err());
    }
}
