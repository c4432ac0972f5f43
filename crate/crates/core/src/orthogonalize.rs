//! From an average-error transmission code to a pure, mutually orthogonal
//! code with the original (unmodified) decoding effects.
//!
//! Stages: pure-state extraction, greedy selection of linearly independent
//! codewords, symmetric (Löwdin) orthogonalization `φ = T^{-1/2} ψ`, and
//! expurgation to the better half.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    eigh, gram, identity_deviation, inv_sqrt_psd, CMatrix, ComplexVector, HermitianMatrix,
};
use crate::state::{DensityOperator, SubPovm};
use crate::tol::RANK_TOL;
use crate::transmission::{expurgation_indices, TransmissionCode};
use crate::{Error, Result};

/// Pretty-good measurement `F_m = S^{-1/2} ρ_m S^{-1/2}`, `S = Σ ρ_m`, with the
/// inverse square root taken on the support of `S`.
pub fn pgm(states: &[HermitianMatrix]) -> Result<SubPovm> {
    let first = states.first().ok_or(Error::AllZero)?;
    let dim = first.dim();
    let mut s = HermitianMatrix::zeros(dim);
    for rho in states {
        s = s.add(rho)?;
    }
    if s.trace() <= 0.0 || s.operator_norm() == 0.0 {
        return Err(Error::AllZero);
    }
    let e = eigh(&s);
    let complete = e.numerical_rank() == dim;
    let inv = inv_sqrt_psd(&s)?;
    let effects = states
        .par_iter()
        .map(|rho| rho.conjugate_by(inv.as_matrix()))
        .collect();
    SubPovm::new(effects, complete)
}

/// Pure codewords together with their success probabilities
/// `<ψ_m| N*^{⊗n}(D_m) |ψ_m>`.
#[derive(Clone, Debug)]
pub struct PurifiedCode {
    pub vectors: Vec<ComplexVector>,
    pub successes: Vec<f64>,
}

impl PurifiedCode {
    pub fn avg_error(&self) -> f64 {
        let n = self.successes.len() as f64;
        self.successes.iter().map(|s| (1.0 - s).clamp(0.0, 1.0)).sum::<f64>() / n
    }
}

/// Replaces each codeword by the eigenvector in its support that maximizes
/// the success probability of its own decoding effect.
pub fn purify_codewords(code: &TransmissionCode) -> Result<PurifiedCode> {
    let pulled = code.pulled_back_effects()?;
    let picks: Vec<(ComplexVector, f64)> = code
        .codewords()
        .par_iter()
        .zip(pulled.par_iter())
        .map(|(pi, em)| best_support_vector(pi, em))
        .collect();
    let (vectors, successes) = picks.into_iter().unzip();
    Ok(PurifiedCode {
        vectors,
        successes,
    })
}

// Maximizing over the whole support (not just one eigenbasis) can only help;
// for non-degenerate spectra inside a larger support this is the top
// eigenvector of E restricted to supp(π).
fn best_support_vector(pi: &DensityOperator, effect: &HermitianMatrix) -> (ComplexVector, f64) {
    let e = eigh(pi.mat());
    let cut = RANK_TOL * e.max_value();
    let k = e.values.iter().filter(|&&v| v > cut).count().max(1);
    let basis = e.vectors.columns(0, k).into_owned();
    let restricted = HermitianMatrix::symmetrized(basis.adjoint() * effect.as_matrix() * &basis);
    let r = eigh(&restricted);
    let v = &basis * r.vector(0);
    let v = v.unscale(v.norm());
    let success = effect.expectation(&v);
    (v, success)
}

/// Greedy rank-raising selection: messages are visited by success
/// descending (ties by index); a vector is kept if the Gram matrix of the
/// kept set stays nonsingular. Returned indices are ascending.
pub fn select_linearly_independent(vectors: &[ComplexVector], successes: &[f64]) -> Result<Vec<usize>> {
    if vectors.len() != successes.len() {
        return Err(Error::SizeMismatch(format!(
            "{} vectors but {} success values",
            vectors.len(),
            successes.len()
        )));
    }
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&a, &b| successes[b].total_cmp(&successes[a]).then(a.cmp(&b)));
    let dim = vectors.first().map_or(0, |v| v.len());
    let mut chosen: Vec<usize> = Vec::new();
    let mut kept: Vec<ComplexVector> = Vec::new();
    for i in order {
        if kept.len() == dim {
            break;
        }
        kept.push(vectors[i].clone());
        if eigh(&gram(&kept)).min_value() > RANK_TOL {
            chosen.push(i);
        } else {
            kept.pop();
        }
    }
    if chosen.len() < 2 {
        return Err(Error::RankDeficient { rank: chosen.len() });
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Symmetric orthogonalization `φ_m = Σ_k ψ_k (T^{-1/2})_{km}` with `T` the Gram
/// matrix, phases fixed so that `<ψ_m|φ_m>` is real and nonnegative.
pub fn orthogonalize(vectors: &[ComplexVector]) -> Result<Vec<ComplexVector>> {
    if vectors.is_empty() {
        return Err(Error::RankDeficient { rank: 0 });
    }
    let t = gram(vectors);
    let e = eigh(&t);
    if e.min_value() <= RANK_TOL {
        return Err(Error::RankDeficient {
            rank: e.numerical_rank(),
        });
    }
    let inv = inv_sqrt_psd(&t)?;
    let dim = vectors[0].len();
    let mut psi = CMatrix::zeros(dim, vectors.len());
    for (k, v) in vectors.iter().enumerate() {
        psi.set_column(k, v);
    }
    let phi = psi * inv.as_matrix();
    Ok(vectors
        .iter()
        .enumerate()
        .map(|(m, v)| {
            let col: ComplexVector = phi.column(m).into_owned();
            let overlap = v.dotc(&col);
            if overlap.norm() > 0.0 {
                col * (overlap.conj() / overlap.norm())
            } else {
                col
            }
        })
        .collect())
}

/// `2√(5ε)/(1−ε)²`, not clamped.
pub fn delta_bound(eps: f64) -> f64 {
    2.0 * (5.0 * eps).sqrt() / (1.0 - eps).powi(2)
}

/// Mean-error bound after orthogonalization, `ε/(1−ε)² + √(2ε)/(1−ε)`.
pub fn mean_error_bound(eps: f64) -> f64 {
    eps / (1.0 - eps).powi(2) + (2.0 * eps).sqrt() / (1.0 - eps)
}

/// Lower bound on the mean overlap `(1/L) Σ |<ψ_m|φ_m>|²`, `(1 − ε/(1−ε)²)²`.
pub fn overlap_bound(eps: f64) -> f64 {
    (1.0 - eps / (1.0 - eps).powi(2)).max(0.0).powi(2)
}

pub const STAGES: [&str; 5] = ["input", "purified", "selected", "orthogonalized", "expurgated"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct OrthogonalizationReport {
    pub M: usize,
    pub L: usize,
    pub M_prime: usize,
    pub eps_in: f64,
    pub delta_out: f64,
    /// `min(1, 2√(5ε)/(1−ε)²)`.
    pub bound_delta: f64,
    pub bound_delta_raw: f64,
    /// `max |G − I|` over the output Gram matrix.
    pub gram_deviation: f64,
    /// Average error after each entry of [`STAGES`].
    pub per_stage_errors: Vec<f64>,
    pub mean_error_bound: f64,
    pub mean_overlap: f64,
    pub overlap_bound: f64,
    /// Original indices of the linearly independent codewords.
    pub selected: Vec<usize>,
    /// Original indices surviving expurgation.
    pub kept: Vec<usize>,
}

impl OrthogonalizationReport {
    /// Guaranteed lower bound `⌊(1−ε)² M / 2⌋` on the output size.
    pub fn size_bound(&self) -> usize {
        ((1.0 - self.eps_in).powi(2) * self.M as f64 / 2.0).floor() as usize
    }
}

#[derive(Clone, Debug)]
pub struct Orthogonalized {
    pub code: TransmissionCode,
    /// Orthonormal vectors of `code`, in order.
    pub vectors: Vec<ComplexVector>,
    pub report: OrthogonalizationReport,
}

/// Runs the full conversion. Stage failures are wrapped in
/// [`Error::PipelineFailure`].
pub fn orthogonalize_code(code: &TransmissionCode) -> Result<Orthogonalized> {
    let input_errors = code.errors().map_err(|e| e.at_stage("input"))?;
    let m = input_errors.len();
    let eps = input_errors.iter().sum::<f64>() / m as f64;
    if eps >= 1.0 {
        return Err(Error::BadParams(format!("average error {eps} is not below 1")).at_stage("input"));
    }

    let purified = purify_codewords(code).map_err(|e| e.at_stage("purify"))?;
    let selected = select_linearly_independent(&purified.vectors, &purified.successes)
        .map_err(|e| e.at_stage("select"))?;
    let psi: Vec<ComplexVector> = selected.iter().map(|&i| purified.vectors[i].clone()).collect();
    let sub = code.select(&selected).map_err(|e| e.at_stage("select"))?;
    let selected_avg = mean(&selected.iter().map(|&i| (1.0 - purified.successes[i]).clamp(0.0, 1.0)).collect::<Vec<_>>());

    let phi = orthogonalize(&psi).map_err(|e| e.at_stage("orthogonalize"))?;
    let mean_overlap = mean(&psi.iter().zip(&phi).map(|(a, b)| a.dotc(b).norm_sqr()).collect::<Vec<_>>());
    let orth_code = sub
        .with_codewords(pure_states(&phi).map_err(|e| e.at_stage("orthogonalize"))?)
        .map_err(|e| e.at_stage("orthogonalize"))?;
    let orth_errors = orth_code.errors().map_err(|e| e.at_stage("orthogonalize"))?;

    let keep_local = expurgation_indices(&orth_errors);
    let out_code = orth_code.select(&keep_local).map_err(|e| e.at_stage("expurgate"))?;
    let out_vectors: Vec<ComplexVector> = keep_local.iter().map(|&i| phi[i].clone()).collect();
    let out_errors = out_code.errors().map_err(|e| e.at_stage("expurgate"))?;
    let delta_out = out_errors.iter().copied().fold(0.0, f64::max);
    let gram_deviation = identity_deviation(gram(&out_vectors).as_matrix());

    let raw = delta_bound(eps);
    let report = OrthogonalizationReport {
        M: m,
        L: selected.len(),
        M_prime: out_vectors.len(),
        eps_in: eps,
        delta_out,
        bound_delta: raw.min(1.0),
        bound_delta_raw: raw,
        gram_deviation,
        per_stage_errors: vec![
            eps,
            purified.avg_error(),
            selected_avg,
            mean(&orth_errors),
            mean(&out_errors),
        ],
        mean_error_bound: mean_error_bound(eps),
        mean_overlap,
        overlap_bound: overlap_bound(eps),
        kept: keep_local.iter().map(|&i| selected[i]).collect(),
        selected,
    };
    Ok(Orthogonalized {
        code: out_code,
        vectors: out_vectors,
        report,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn pure_states(vectors: &[ComplexVector]) -> Result<Vec<DensityOperator>> {
    vectors.iter().map(DensityOperator::pure).collect()
}
