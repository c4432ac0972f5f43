//! Entropies, classical mutual information and the Holevo quantity of a
//! fixed ensemble (all in bits).

use crate::channel::KrausChannel;
use crate::linalg::{eigh, CMatrix, HermitianMatrix, C64};
use crate::state::DensityOperator;
use crate::tol::TOL_NORM;
use crate::{Error, Result};

/// `−Σ p log₂ p` with `0 log 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// `−Tr ρ log₂ ρ` from the spectrum; eigenvalues at or below zero contribute nothing.
pub fn von_neumann_entropy(rho: &HermitianMatrix) -> f64 {
    shannon_entropy(&eigh(rho).values)
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| x < -TOL_NORM || !x.is_finite()) {
        return Err(Error::BadDistribution("negative or non-finite entry".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > TOL_NORM {
        return Err(Error::BadDistribution(format!("sums to {s}")));
    }
    Ok(())
}

/// Checks that `w[x][y] = W(y|x)` is row-stochastic.
pub fn check_stochastic(w: &[Vec<f64>]) -> Result<()> {
    let cols = w
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::NotStochastic("no rows".into()))?;
    for (x, row) in w.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::NotStochastic(format!("row {x} has {} entries", row.len())));
        }
        check_distribution(row).map_err(|e| Error::NotStochastic(format!("row {x}: {e}")))?;
    }
    Ok(())
}

/// `I(P; W) = H(PW) − Σ_x P(x) H(W(·|x))`.
pub fn mutual_information(p: &[f64], w: &[Vec<f64>]) -> Result<f64> {
    check_stochastic(w)?;
    check_distribution(p)?;
    if p.len() != w.len() {
        return Err(Error::DimMismatch {
            expected: w.len(),
            found: p.len(),
        });
    }
    let cols = w[0].len();
    let mut out = vec![0.0; cols];
    for (px, row) in p.iter().zip(w) {
        for (o, wy) in out.iter_mut().zip(row) {
            *o += px * wy;
        }
    }
    let cond: f64 = p.iter().zip(w).map(|(px, row)| px * shannon_entropy(row)).sum();
    Ok(shannon_entropy(&out) - cond)
}

/// The measure-and-prepare channel `ρ ↦ Σ_x <x|ρ|x> Σ_y W(y|x) |y><y|`,
/// Kraus operators `sqrt(W(y|x)) |y><x|`.
pub fn classical_channel_as_cq(w: &[Vec<f64>]) -> Result<KrausChannel> {
    check_stochastic(w)?;
    let inputs = w.len();
    let outputs = w[0].len();
    let mut kraus = Vec::new();
    for (x, row) in w.iter().enumerate() {
        for (y, &wy) in row.iter().enumerate() {
            if wy > 0.0 {
                let mut k = CMatrix::zeros(outputs, inputs);
                k[(y, x)] = C64::new(wy.sqrt(), 0.0);
                kraus.push(k);
            }
        }
    }
    KrausChannel::new(inputs, outputs, kraus)
}

/// `χ = H(Σ p_x N(ρ_x)) − Σ p_x H(N(ρ_x))` for a given ensemble.
pub fn holevo_information(ensemble: &[(f64, DensityOperator)], channel: &KrausChannel) -> Result<f64> {
    let probs: Vec<f64> = ensemble.iter().map(|(p, _)| *p).collect();
    check_distribution(&probs)?;
    let dim = channel.out_dim();
    let mut avg = CMatrix::zeros(dim, dim);
    let mut cond = 0.0;
    for (p, rho) in ensemble {
        let out = channel.apply(rho)?;
        cond += p * von_neumann_entropy(out.mat());
        avg += out.mat().as_matrix() * C64::new(*p, 0.0);
    }
    Ok(von_neumann_entropy(&HermitianMatrix::symmetrized(avg)) - cond)
}
