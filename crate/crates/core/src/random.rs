//! Seeded randomness: labeled seed derivation and random quantum objects.
//!
//! Every random draw in the crate goes through a [`ChaCha20Rng`] built from a
//! seed derived here, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::linalg::{eigh, inv_sqrt_psd, normalized, CMatrix, ComplexVector, HermitianMatrix, C64};
use crate::Result;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a root seed with a label and a list of indices, e.g.
/// `derive_seed(seed, "phase", &[j, trial])`.
pub fn derive_seed(root: u64, label: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(root);
    for b in label.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    h = splitmix64(h ^ 0xFF);
    for &i in indices {
        h = splitmix64(h ^ i);
    }
    h
}

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn rng_for(root: u64, label: &str, indices: &[u64]) -> ChaCha20Rng {
    rng_from_seed(derive_seed(root, label, indices))
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // fill row-major so the draw order is independent of storage layout
    let data: Vec<C64> = (0..rows * cols).map(|_| gaussian_c64(rng)).collect();
    CMatrix::from_row_slice(rows, cols, &data)
}

/// Haar-random unit vector (normalized complex Gaussian).
pub fn haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexVector {
    let v = ComplexVector::from_iterator(dim, (0..dim).map(|_| gaussian_c64(rng)));
    normalized(&v)
}

/// Random density operator `G G† / Tr(G G†)` with `G` a `dim × rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> HermitianMatrix {
    let g = ginibre(dim, rank, rng);
    let m = HermitianMatrix::symmetrized(&g * g.adjoint());
    let tr = m.trace();
    m.scale(1.0 / tr)
}

/// Random isometry `V = G (G†G)^{-1/2}` with `rows >= cols`.
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<CMatrix> {
    let g = ginibre(rows, cols, rng);
    let gram = HermitianMatrix::symmetrized(g.adjoint() * &g);
    let inv = inv_sqrt_psd(&gram)?;
    Ok(g * inv.as_matrix())
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<CMatrix> {
    random_isometry(dim, dim, rng)
}

/// `exp(i t H)` for a random Hermitian `H` with unit operator norm; small
/// `t` gives a unitary close to the identity.
pub fn near_identity_unitary<R: Rng + ?Sized>(dim: usize, t: f64, rng: &mut R) -> CMatrix {
    let g = ginibre(dim, dim, rng);
    let h = HermitianMatrix::symmetrized(&g + g.adjoint());
    let e = eigh(&h);
    let scale = e.values.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut u = CMatrix::zeros(dim, dim);
    for (i, &lam) in e.values.iter().enumerate() {
        let v = e.vector(i);
        let phase = C64::from_polar(1.0, t * lam / scale);
        u += (&v * v.adjoint()) * phase;
    }
    u
}

/// Uniform phases in `[0, 2π)`.
pub fn uniform_phases<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    (0..count)
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect()
}
