//! A complete POVM under which the fixed-phase uniform superposition
//! `ψ = K^{-1/2} Σ_{m<K} |m>` is never identified by the coarse-grained test
//! `D = Σ_{m<K} F_m`, while random phases rescue it.
//!
//! In the computational basis of `C^M` (0-based):
//!
//! - `F_m = |ν_m><ν_m|` with `ν_m = |m> − K^{-1/2} ψ` for `m < K`,
//! - `F_m = |m><m|` for `K ≤ m < M−1`,
//! - `F_{M−1} = |M−1><M−1| + |ψ><ψ|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{basis_vector, ComplexVector, HermitianMatrix, C64};
use crate::random::{rng_for, uniform_phases};
use crate::state::SubPovm;
use crate::tol::{check_dim, DIM_GUARD};
use crate::{Error, Result};

#[derive(Clone, Debug)]
#[allow(non_snake_case)]
pub struct CounterexampleInstance {
    pub K: usize,
    pub M: usize,
    pub basis: Vec<ComplexVector>,
    pub nu: Vec<ComplexVector>,
    pub povm: SubPovm,
    pub psi: ComplexVector,
    pub D: HermitianMatrix,
}

#[allow(non_snake_case)]
pub fn build_counterexample(K: usize, M: usize) -> Result<CounterexampleInstance> {
    if K < 2 || M < K + 1 {
        return Err(Error::BadParams(format!("need K ≥ 2 and M ≥ K+1, got K={K}, M={M}")));
    }
    check_dim(M, DIM_GUARD)?;
    let basis: Vec<ComplexVector> = (0..M).map(|m| basis_vector(M, m)).collect();
    let psi = superposition(&basis[..K], &vec![0.0; K]);
    let s = 1.0 / (K as f64).sqrt();
    let nu: Vec<ComplexVector> = basis[..K].iter().map(|b| b - psi.scale(s)).collect();
    let mut effects: Vec<HermitianMatrix> = nu.iter().map(HermitianMatrix::projector).collect();
    for b in &basis[K..M - 1] {
        effects.push(HermitianMatrix::projector(b));
    }
    effects.push(HermitianMatrix::projector(&basis[M - 1]).add(&HermitianMatrix::projector(&psi))?);
    let povm = SubPovm::new(effects, true)?;
    let d = povm.coarse_grain(&(0..K).collect::<Vec<_>>());
    Ok(CounterexampleInstance {
        K,
        M,
        basis,
        nu,
        povm,
        psi,
        D: d,
    })
}

/// `K^{-1/2} Σ_m e^{iα_m} |b_m>`.
fn superposition(basis: &[ComplexVector], phases: &[f64]) -> ComplexVector {
    let s = 1.0 / (basis.len() as f64).sqrt();
    let mut v = ComplexVector::zeros(basis[0].len());
    for (b, &a) in basis.iter().zip(phases) {
        v += b * C64::from_polar(s, a);
    }
    v
}

impl CounterexampleInstance {
    /// `Tr φ_m F_m` for every outcome.
    pub fn success_probabilities(&self) -> Vec<f64> {
        self.basis
            .iter()
            .zip(self.povm.effects())
            .map(|(b, f)| f.expectation(b))
            .collect()
    }

    /// `Σ_{m<K} |m><m| − |ψ><ψ|`, the closed form of `D`.
    pub fn expanded_d(&self) -> HermitianMatrix {
        let mut acc = HermitianMatrix::projector(&self.psi).scale(-1.0);
        for b in &self.basis[..self.K] {
            acc = acc.add(&HermitianMatrix::projector(b)).expect("same dimension");
        }
        acc
    }

    pub fn phased_superposition(&self, phases: &[f64]) -> Result<ComplexVector> {
        if phases.len() != self.K {
            return Err(Error::DimMismatch {
                expected: self.K,
                found: phases.len(),
            });
        }
        Ok(superposition(&self.basis[..self.K], phases))
    }
}

/// `Tr ψ D`, zero up to rounding.
pub fn fixed_phase_failure(inst: &CounterexampleInstance) -> f64 {
    inst.D.expectation(&inst.psi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// `Tr ψ' D`.
    pub detection: f64,
    /// `1 − |<ψ|ψ'>|²`.
    pub closed_form: f64,
}

pub fn random_phase_detection(inst: &CounterexampleInstance, phases: &[f64]) -> Result<Detection> {
    let v = inst.phased_superposition(phases)?;
    Ok(Detection {
        detection: inst.D.expectation(&v),
        closed_form: 1.0 - inst.psi.dotc(&v).norm_sqr(),
    })
}

/// Detections for `samples` i.i.d. uniform phase vectors, sample `s` drawn from
/// its own derived stream.
pub fn sample_detections(inst: &CounterexampleInstance, samples: usize, seed: u64) -> Vec<(Vec<f64>, Detection)> {
    (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_for(seed, "counterexample", &[s as u64]);
            let phases = uniform_phases(inst.K, &mut rng);
            let d = random_phase_detection(inst, &phases).expect("K phases");
            (phases, d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn k2_m3_successes() {
        let inst = build_counterexample(2, 3).unwrap();
        let p = inst.success_probabilities();
        assert!((p[0] - 0.25).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
        assert!((p[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_phase_is_never_identified() {
        for (k, m) in [(2, 3), (5, 8), (3, 4), (8, 11)] {
            let inst = build_counterexample(k, m).unwrap();
            assert!(fixed_phase_failure(&inst).abs() < 1e-12);
            assert!((inst.D.as_matrix() - inst.expanded_d().as_matrix()).norm() < 1e-8);
            let total = inst.povm.total();
            assert!(crate::linalg::identity_deviation(total.as_matrix()) < 1e-10);
            for nu in &inst.nu {
                assert!(nu.dotc(&inst.psi).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bad_parameters() {
        assert!(build_counterexample(1, 3).is_err());
        assert!(build_counterexample(3, 3).is_err());
        let inst = build_counterexample(2, 3).unwrap();
        assert!(random_phase_detection(&inst, &[0.0]).is_err());
    }

    #[test]
    fn detection_examples() {
        let inst = build_counterexample(2, 4).unwrap();
        let d = random_phase_detection(&inst, &[0.0, 0.0]).unwrap();
        assert!(d.detection.abs() < 1e-12);
        let d = random_phase_detection(&inst, &[0.0, PI]).unwrap();
        assert!((d.detection - 1.0).abs() < 1e-12);
        assert!((d.closed_form - 1.0).abs() < 1e-12);
    }

    #[test]
    fn average_detection_is_one_minus_one_over_k() {
        let inst = build_counterexample(8, 9).unwrap();
        let samples = sample_detections(&inst, 10_000, 4);
        let mean = samples.iter().map(|(_, d)| d.detection).sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|(_, d)| (d.detection - mean).powi(2)).sum::<f64>() / samples.len() as f64;
        let sigma = (var / samples.len() as f64).sqrt();
        assert!((mean - (1.0 - 1.0 / 8.0)).abs() < 4.0 * sigma);
    }

    proptest! {
        #[test]
        fn detection_matches_closed_form(seed in any::<u64>(), k in 2usize..9) {
            let inst = build_counterexample(k, k + 3).unwrap();
            for (_, d) in sample_detections(&inst, 8, seed) {
                prop_assert!((d.detection - d.closed_form).abs() < 1e-9);
            }
        }
    }
}
