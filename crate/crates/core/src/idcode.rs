//! Identification codes: states `ρ_j` with binary tests `E_j`, errors of the
//! first kind `1 − Tr N^{⊗n}(ρ_j) E_j` and of the second kind
//! `Tr N^{⊗n}(ρ_j) E_k`, `k ≠ j`.
//!
//! Two constructions start from a transmission code and a subset family
//! `{M_j}`. The mixture code uses `ρ_j = |M_j|^{-1} Σ_{m∈M_j} π_m`; the
//! zero-entropy code uses random-phase superpositions of orthonormal pure
//! codewords. Both take `E_j = Σ_{m∈M_j} D_m`, so the tests are coarse
//! grainings of one measurement.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::linalg::{eigh, gram, identity_deviation, CMatrix, ComplexVector, HermitianMatrix, C64};
use crate::random::{rng_for, uniform_phases};
use crate::state::{validate_effect, DensityOperator, SubPovm};
use crate::subsets::SubsetFamily;
use crate::tol::{guarded_pow, DIM_GUARD, RANK_TOL, TOL_ORTH, TOL_RECON};
use crate::transmission::TransmissionCode;
use crate::{Error, Result};

/// Slack added to acceptance thresholds and bound checks.
pub const CHECK_SLACK: f64 = 1e-9;

/// Witness that every test is a coarse graining of `base`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Simultaneity {
    pub base: SubPovm,
    pub subsets: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawIdCode")]
pub struct IdCode {
    channel: KrausChannel,
    block_n: usize,
    states: Vec<DensityOperator>,
    tests: Vec<HermitianMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    simultaneity: Option<Simultaneity>,
    zero_entropy: bool,
}

#[derive(Deserialize)]
struct RawIdCode {
    channel: KrausChannel,
    block_n: usize,
    states: Vec<DensityOperator>,
    tests: Vec<HermitianMatrix>,
    #[serde(default)]
    simultaneity: Option<Simultaneity>,
    zero_entropy: bool,
}

impl TryFrom<RawIdCode> for IdCode {
    type Error = Error;
    fn try_from(r: RawIdCode) -> Result<Self> {
        IdCode::new(r.channel, r.block_n, r.states, r.tests, r.simultaneity, r.zero_entropy)
    }
}

impl IdCode {
    pub fn new(
        channel: KrausChannel,
        block_n: usize,
        states: Vec<DensityOperator>,
        tests: Vec<HermitianMatrix>,
        simultaneity: Option<Simultaneity>,
        zero_entropy: bool,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyCode);
        }
        if states.len() != tests.len() {
            return Err(Error::SizeMismatch(format!(
                "{} states but {} tests",
                states.len(),
                tests.len()
            )));
        }
        let din = channel.block_in_dim(block_n, DIM_GUARD)?;
        let dout = channel.block_out_dim(block_n, DIM_GUARD)?;
        for s in &states {
            crate::linalg::same_dim(din, s.dim())?;
        }
        for t in &tests {
            crate::linalg::same_dim(dout, t.dim())?;
            validate_effect(t)?;
        }
        if zero_entropy {
            if let Some(j) = states.iter().position(|s| !s.is_pure()) {
                return Err(Error::InvalidState(format!("state {j} of a zero-entropy code is mixed")));
            }
        }
        if let Some(w) = &simultaneity {
            if w.subsets.len() != tests.len() {
                return Err(Error::SizeMismatch("witness and tests differ in length".into()));
            }
            crate::linalg::same_dim(dout, w.base.dim())?;
            for (j, (s, t)) in w.subsets.iter().zip(&tests).enumerate() {
                if s.iter().any(|&m| m >= w.base.len()) {
                    return Err(Error::SizeMismatch(format!("witness subset {j} leaves the base measurement")));
                }
                let dev = (w.base.coarse_grain(s).as_matrix() - t.as_matrix()).norm();
                if dev > TOL_RECON {
                    return Err(Error::InvalidPovm(format!(
                        "test {j} differs from its coarse graining by {dev:.3e}"
                    )));
                }
            }
        }
        Ok(IdCode {
            channel,
            block_n,
            states,
            tests,
            simultaneity,
            zero_entropy,
        })
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn block_n(&self) -> usize {
        self.block_n
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn tests(&self) -> &[HermitianMatrix] {
        &self.tests
    }

    pub fn simultaneity(&self) -> Option<&Simultaneity> {
        self.simultaneity.as_ref()
    }

    pub fn is_zero_entropy(&self) -> bool {
        self.zero_entropy
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Largest deviation between a stored test and its coarse graining.
    pub fn witness_deviation(&self) -> Option<f64> {
        self.simultaneity.as_ref().map(|w| {
            w.subsets
                .iter()
                .zip(&self.tests)
                .map(|(s, t)| (w.base.coarse_grain(s).as_matrix() - t.as_matrix()).norm())
                .fold(0.0, f64::max)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdErrorReport {
    pub n: usize,
    pub lambda1_max: f64,
    pub lambda2_max: f64,
    pub worst_first: usize,
    pub worst_pair: Option<(usize, usize)>,
    /// `accept[j][k] = Tr N^{⊗n}(ρ_j) E_k`, clamped to `[0, 1]`.
    pub accept: Vec<Vec<f64>>,
    /// Fractions of second-kind values in ten equal bins of `[0, 1]`.
    pub histogram: Vec<f64>,
}

impl IdErrorReport {
    pub fn first_kind(&self) -> Vec<f64> {
        (0..self.n).map(|j| 1.0 - self.accept[j][j]).collect()
    }

    /// Largest entrywise difference between two reports of equal size.
    pub fn max_difference(&self, other: &IdErrorReport) -> Option<f64> {
        (self.n == other.n).then(|| {
            self.accept
                .iter()
                .flatten()
                .zip(other.accept.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }
}

/// Evaluates all `N²` acceptance probabilities through the forward channel.
pub fn verify_id_code(code: &IdCode) -> Result<IdErrorReport> {
    let outputs: Vec<CMatrix> = code
        .states
        .par_iter()
        .map(|s| code.channel.apply_power(s.mat().as_matrix(), code.block_n))
        .collect::<Result<_>>()?;
    let accept: Vec<Vec<f64>> = outputs
        .par_iter()
        .map(|o| {
            code.tests
                .iter()
                .map(|t| crate::linalg::trace_product(o, t.as_matrix()).clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    Ok(report_from_matrix(accept))
}

fn report_from_matrix(accept: Vec<Vec<f64>>) -> IdErrorReport {
    let n = accept.len();
    let mut lambda1_max = 0.0;
    let mut worst_first = 0;
    let mut lambda2_max = 0.0;
    let mut worst_pair = None;
    let mut histogram = vec![0.0; 10];
    for (j, row) in accept.iter().enumerate() {
        let e1 = 1.0 - row[j];
        if e1 > lambda1_max {
            lambda1_max = e1;
            worst_first = j;
        }
        for (k, &v) in row.iter().enumerate() {
            if k == j {
                continue;
            }
            if worst_pair.is_none() || v > lambda2_max {
                lambda2_max = v;
                worst_pair = Some((j, k));
            }
            histogram[((v * 10.0) as usize).min(9)] += 1.0;
        }
    }
    let off = (n * n.saturating_sub(1)) as f64;
    if off > 0.0 {
        for h in &mut histogram {
            *h /= off;
        }
    }
    IdErrorReport {
        n,
        lambda1_max,
        lambda2_max,
        worst_first,
        worst_pair,
        accept,
        histogram,
    }
}

fn check_family(code_len: usize, family: &SubsetFamily) -> Result<()> {
    if family.ground() != code_len {
        return Err(Error::SizeMismatch(format!(
            "family lives on {} messages but the code has {code_len}",
            family.ground()
        )));
    }
    if family.is_empty() {
        return Err(Error::EmptyCode);
    }
    Ok(())
}

fn coarse_tests(decoder: &SubPovm, family: &SubsetFamily) -> Vec<HermitianMatrix> {
    family.subsets().iter().map(|s| decoder.coarse_grain(s)).collect()
}

/// Mixture construction: `ρ_j` uniform over `{π_m : m ∈ M_j}`.
pub fn build_loeber_code(tcode: &TransmissionCode, family: &SubsetFamily) -> Result<IdCode> {
    check_family(tcode.len(), family)?;
    let states = family
        .subsets()
        .iter()
        .map(|s| {
            let parts: Vec<&DensityOperator> = s.iter().map(|&m| &tcode.codewords()[m]).collect();
            DensityOperator::mixture(&parts)
        })
        .collect::<Result<Vec<_>>>()?;
    let tests = coarse_tests(tcode.decoder(), family);
    let zero_entropy = states.iter().all(DensityOperator::is_pure);
    IdCode::new(
        tcode.channel().clone(),
        tcode.block_n(),
        states,
        tests,
        Some(Simultaneity {
            base: tcode.decoder().clone(),
            subsets: family.subsets().to_vec(),
        }),
        zero_entropy,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhasePolicy {
    /// I.i.d. uniform phases on `[0, 2π)`.
    Uniform,
    /// All phases zero (the fixed-phase superposition).
    Zero,
}

impl std::str::FromStr for PhasePolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(PhasePolicy::Uniform),
            "zero" => Ok(PhasePolicy::Zero),
            _ => Err(Error::Config(format!("unknown phase policy `{s}`"))),
        }
    }
}

impl PhasePolicy {
    fn draw(self, len: usize, seed: u64, j: usize, trial: usize) -> Vec<f64> {
        match self {
            PhasePolicy::Uniform => uniform_phases(len, &mut rng_for(seed, "phase", &[j as u64, trial as u64])),
            PhasePolicy::Zero => vec![0.0; len],
        }
    }

    /// `E[e^{i(α_m − α_m')}]` for `m ≠ m'`.
    fn off_diagonal_mean(self) -> f64 {
        match self {
            PhasePolicy::Uniform => 0.0,
            PhasePolicy::Zero => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSearch {
    pub policy: PhasePolicy,
    pub seed: u64,
    pub trials: usize,
}

impl PhaseSearch {
    pub fn new(seed: u64) -> Self {
        PhaseSearch {
            policy: PhasePolicy::Uniform,
            seed,
            trials: 200,
        }
    }
}

/// Orthonormal vectors of a pure orthogonal code; errors when the codewords
/// are mixed or their Gram matrix is off the identity by more than `TOL_ORTH`.
pub fn orthonormal_vectors(code: &TransmissionCode) -> Result<Vec<ComplexVector>> {
    let vectors = code
        .codewords()
        .iter()
        .enumerate()
        .map(|(m, c)| {
            c.is_pure()
                .then(|| c.pure_vector())
                .flatten()
                .ok_or_else(|| Error::InvalidState(format!("codeword {m} is not pure")))
        })
        .collect::<Result<Vec<_>>>()?;
    let dev = identity_deviation(gram(&vectors).as_matrix());
    if dev > TOL_ORTH {
        return Err(Error::BadParams(format!("codewords deviate from orthonormal by {dev:.3e}")));
    }
    Ok(vectors)
}

/// `|M_j|^{-1/2} Σ_{m∈M_j} e^{iα_m} |φ_m>`, renormalized against rounding.
pub fn superposition(vectors: &[ComplexVector], subset: &[usize], phases: &[f64]) -> ComplexVector {
    let mut v = ComplexVector::zeros(vectors[0].len());
    for (&m, &a) in subset.iter().zip(phases) {
        v += &vectors[m] * C64::from_polar(1.0, a);
    }
    let norm = v.norm();
    v.unscale(norm)
}

/// Exact phase average of `|φ_j(α)><φ_j(α)|`: off-diagonal terms carry
/// `E[e^{i(α_m − α_m')}]`, which vanishes for uniform phases.
pub fn phase_average_state(vectors: &[ComplexVector], subset: &[usize], policy: PhasePolicy) -> HermitianMatrix {
    let dim = vectors[0].len();
    let l = subset.len() as f64;
    let c = policy.off_diagonal_mean();
    let mut acc = CMatrix::zeros(dim, dim);
    for &m in subset {
        for &mp in subset {
            let w = if m == mp { 1.0 } else { c };
            if w != 0.0 {
                acc += (&vectors[m] * vectors[mp].adjoint()) * C64::new(w / l, 0.0);
            }
        }
    }
    HermitianMatrix::symmetrized(acc)
}

/// `⌊e^{δ⁴L/128π²}⌋ − 1`, possibly below one at small `L`.
pub fn analytic_message_count(delta: f64, l: usize) -> f64 {
    concentration_exponent(delta, l).exp().floor() - 1.0
}

fn concentration_exponent(delta: f64, l: usize) -> f64 {
    delta.powi(4) * l as f64 / (128.0 * PI * PI)
}

/// Tail ceiling `e^{−δ⁴L/128π²}`.
pub fn analytic_tail_ceiling(delta: f64, l: usize) -> f64 {
    (-concentration_exponent(delta, l)).exp()
}

#[derive(Clone, Debug)]
pub struct ZeroEntropyBuild {
    pub code: IdCode,
    pub delta: f64,
    pub threshold_first: f64,
    pub threshold_second: f64,
    pub rejections: Vec<usize>,
    pub phases: Vec<Vec<f64>>,
    pub analytic_n_prime: f64,
}

impl ZeroEntropyBuild {
    pub fn total_rejections(&self) -> usize {
        self.rejections.iter().sum()
    }
}

/// Random-phase superposition code. `δ` is the measured maximum error of
/// `ocode`; message `j` keeps the first phase vector with
/// `Tr φ_j(1 − Ẽ_j) ≤ 3δ` and `Tr φ_j Ẽ_k ≤ 5δ` for every `k ≠ j`, where
/// `Ẽ = N*^{⊗n}(E)`.
pub fn build_zero_entropy_code(ocode: &TransmissionCode, family: &SubsetFamily, search: &PhaseSearch) -> Result<ZeroEntropyBuild> {
    check_family(ocode.len(), family)?;
    let vectors = orthonormal_vectors(ocode)?;
    let delta = ocode.max_error()?;
    let tests = coarse_tests(ocode.decoder(), family);
    let adj = ocode.channel().adjoint();
    let pulled: Vec<HermitianMatrix> = tests
        .par_iter()
        .map(|t| adj.apply_power(t, ocode.block_n()))
        .collect::<Result<_>>()?;
    let (t1, t2) = (3.0 * delta, 5.0 * delta);

    let found: Vec<(Vec<f64>, usize, ComplexVector)> = (0..family.len())
        .into_par_iter()
        .map(|j| {
            let subset = family.subset(j);
            for trial in 0..search.trials.max(1) {
                let phases = search.policy.draw(subset.len(), search.seed, j, trial);
                let v = superposition(&vectors, subset, &phases);
                let first = 1.0 - pulled[j].expectation(&v);
                let second = pulled
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, e)| e.expectation(&v))
                    .fold(0.0, f64::max);
                if first <= t1 + CHECK_SLACK && second <= t2 + CHECK_SLACK {
                    return Ok((phases, trial, v));
                }
            }
            Err(Error::PhaseSearchExhausted {
                message: j,
                trials: search.trials,
            })
        })
        .collect::<Result<_>>()?;

    let mut phases = Vec::with_capacity(found.len());
    let mut rejections = Vec::with_capacity(found.len());
    let mut states = Vec::with_capacity(found.len());
    for (p, r, v) in found {
        phases.push(p);
        rejections.push(r);
        states.push(DensityOperator::pure(&v)?);
    }
    let code = IdCode::new(
        ocode.channel().clone(),
        ocode.block_n(),
        states,
        tests,
        Some(Simultaneity {
            base: ocode.decoder().clone(),
            subsets: family.subsets().to_vec(),
        }),
        true,
    )?;
    Ok(ZeroEntropyBuild {
        code,
        delta,
        threshold_first: t1,
        threshold_second: t2,
        rejections,
        phases,
        analytic_n_prime: analytic_message_count(delta, family.size()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEstimate {
    pub samples: usize,
    pub delta: f64,
    pub subset_size: usize,
    /// Empirical `Pr[X_j > 3δ]`, `X_j = Tr φ_j(1 − Ẽ_j)`.
    pub tail_first: f64,
    /// `max_k` empirical `Pr[X_k > 5δ]`, `X_k = Tr φ_j Ẽ_k`.
    pub tail_second: f64,
    pub mean_first: f64,
    pub median_first: f64,
    /// `max_k` of the empirical median of `X_k`.
    pub median_second: f64,
    pub analytic_ceiling: f64,
}

/// Monte Carlo over `samples` i.i.d. uniform phase vectors for message `j`.
pub fn estimate_concentration(
    ocode: &TransmissionCode,
    family: &SubsetFamily,
    j: usize,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<ConcentrationEstimate> {
    check_family(ocode.len(), family)?;
    if j >= family.len() || samples == 0 {
        return Err(Error::BadParams(format!("message {j} with {samples} samples")));
    }
    let vectors = orthonormal_vectors(ocode)?;
    let adj = ocode.channel().adjoint();
    let pulled: Vec<HermitianMatrix> = coarse_tests(ocode.decoder(), family)
        .par_iter()
        .map(|t| adj.apply_power(t, ocode.block_n()))
        .collect::<Result<_>>()?;
    let subset = family.subset(j);
    // rows: one per sample; entry k is Tr φ_j Ẽ_k
    let rows: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let phases = uniform_phases(subset.len(), &mut rng_for(seed, "concentration", &[j as u64, s as u64]));
            let v = superposition(&vectors, subset, &phases);
            pulled.iter().map(|e| e.expectation(&v)).collect()
        })
        .collect();
    let column = |k: usize| -> Vec<f64> { rows.iter().map(|r| r[k]).collect() };
    let x_first: Vec<f64> = column(j).into_iter().map(|a| 1.0 - a).collect();
    let frac_above = |xs: &[f64], t: f64| xs.iter().filter(|&&x| x > t).count() as f64 / xs.len() as f64;
    let mut tail_second: f64 = 0.0;
    let mut median_second: f64 = 0.0;
    for k in (0..family.len()).filter(|&k| k != j) {
        let xs = column(k);
        tail_second = tail_second.max(frac_above(&xs, 5.0 * delta));
        median_second = median_second.max(median(xs));
    }
    Ok(ConcentrationEstimate {
        samples,
        delta,
        subset_size: subset.len(),
        tail_first: frac_above(&x_first, 3.0 * delta),
        tail_second,
        mean_first: x_first.iter().sum::<f64>() / samples as f64,
        median_first: median(x_first),
        median_second,
        analytic_ceiling: analytic_tail_ceiling(delta, subset.len()),
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Weighted ℓ¹ distance `(1/L) Σ |α_m − β_m|` on the torus.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    let tau = 2.0 * PI;
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(tau);
            d.min(tau - d)
        })
        .sum::<f64>()
        / a.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeBounds {
    pub n: usize,
    pub d: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `2d · log₂(5/(1−λ1−λ2))`.
    pub log2_pure_bound: f64,
    /// `2d² · log₂(5/(1−λ1−λ2))`.
    pub log2_general_bound: f64,
    pub pure_bound: f64,
    pub general_bound: f64,
    pub zero_entropy: bool,
    /// `N` is within the bound that applies (pure bound for zero-entropy codes).
    pub satisfied: bool,
}

/// Upper bounds on the number of messages of an ID code with errors
/// `(λ1, λ2)` and codewords in dimension `d`. Computed in log₂ so that large
/// `d` does not overflow.
pub fn size_bounds(n: usize, d: usize, lambda1: f64, lambda2: f64, zero_entropy: bool) -> Result<SizeBounds> {
    let sum = lambda1 + lambda2;
    if sum >= 1.0 {
        return Err(Error::TrivialRegime { sum });
    }
    let base = (5.0 / (1.0 - sum)).log2();
    let log2_pure_bound = 2.0 * d as f64 * base;
    let log2_general_bound = 2.0 * (d * d) as f64 * base;
    let log2_n = (n as f64).log2();
    let satisfied = if zero_entropy {
        log2_n <= log2_pure_bound
    } else {
        log2_n <= log2_general_bound
    };
    Ok(SizeBounds {
        n,
        d,
        lambda1,
        lambda2,
        log2_pure_bound,
        log2_general_bound,
        pure_bound: log2_pure_bound.exp2(),
        general_bound: log2_general_bound.exp2(),
        zero_entropy,
        satisfied,
    })
}

/// Size bounds for a verified code; `d` defaults to the codeword dimension.
pub fn check_size_bounds(code: &IdCode, report: &IdErrorReport, d: Option<usize>) -> Result<SizeBounds> {
    size_bounds(
        code.len(),
        d.unwrap_or(code.input_dim()),
        report.lambda1_max,
        report.lambda2_max,
        code.is_zero_entropy(),
    )
}

/// Purifies every state of a code over `id_A` into `(A ⊗ C)^{⊗n}` and moves
/// it to the channel `(id_A ⊗ Tr_C)^{⊗n}`. The outputs, and hence every
/// error probability, are unchanged; the tests stay the same operators on `A^n`.
pub fn purify_and_extend(code: &IdCode, dim_c: usize) -> Result<IdCode> {
    if !code.channel.is_identity() {
        return Err(Error::BadParams("purification needs a code over the identity channel".into()));
    }
    if dim_c == 0 {
        return Err(Error::BadParams("purifying dimension must be positive".into()));
    }
    let n = code.block_n;
    let dim_a = code.channel.in_dim();
    let an = guarded_pow(dim_a, n, DIM_GUARD)?;
    let cn = guarded_pow(dim_c, n, DIM_GUARD)?;
    guarded_pow(dim_a * dim_c, n, DIM_GUARD)?;
    let perm = interleave_permutation(dim_a, dim_c, n);
    let states = code
        .states
        .iter()
        .enumerate()
        .map(|(j, rho)| {
            let e = eigh(rho.mat());
            let cut = RANK_TOL * e.max_value();
            let rank = e.values.iter().filter(|&&v| v > cut).count();
            if rank > cn {
                return Err(Error::RankTooHigh {
                    index: j,
                    rank,
                    limit: cn,
                });
            }
            let mut v = ComplexVector::zeros(an * cn);
            for i in 0..rank {
                let w = e.values[i].sqrt();
                let ev = e.vector(i);
                for a in 0..an {
                    v[perm[a * cn + i]] += ev[a] * w;
                }
            }
            let norm = v.norm();
            DensityOperator::pure(&v.unscale(norm))
        })
        .collect::<Result<Vec<_>>>()?;
    IdCode::new(
        KrausChannel::extended(dim_a, dim_c)?,
        n,
        states,
        code.tests.clone(),
        code.simultaneity.clone(),
        true,
    )
}

/// Maps an index of `A^n ⊗ C^n` to the matching index of `(A ⊗ C)^{⊗n}`.
fn interleave_permutation(dim_a: usize, dim_c: usize, n: usize) -> Vec<usize> {
    let an = dim_a.pow(n as u32);
    let cn = dim_c.pow(n as u32);
    let mut out = vec![0; an * cn];
    for a in 0..an {
        for c in 0..cn {
            let (mut ra, mut rc, mut idx, mut place) = (a, c, 0, 1);
            for _ in 0..n {
                let (da, dc) = (ra % dim_a, rc % dim_c);
                ra /= dim_a;
                rc /= dim_c;
                idx += (da * dim_c + dc) * place;
                place *= dim_a * dim_c;
            }
            out[a * cn + c] = idx;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, partial_trace, Factor};
    use crate::random::{random_density, rng_from_seed};
    use crate::state::born;
    use crate::subsets::{generate_family, FamilyParams};
    use crate::transmission::{random_code, CodeKind, CodeOptions};
    use proptest::prelude::*;
    use rand::Rng;

    fn basis_code(dim: usize, m: usize) -> TransmissionCode {
        let id = KrausChannel::identity(dim).unwrap();
        random_code(&id, 1, m, 0, CodeOptions::new(CodeKind::Basis)).unwrap()
    }

    fn family(ground: usize, size: usize, subsets: Vec<Vec<usize>>) -> SubsetFamily {
        SubsetFamily::new(ground, size, subsets).unwrap()
    }

    #[test]
    fn orthonormal_code_has_no_errors() {
        let tc = basis_code(3, 3);
        let f = family(3, 1, vec![vec![0], vec![1], vec![2]]);
        let r = verify_id_code(&build_loeber_code(&tc, &f).unwrap()).unwrap();
        assert_eq!(r.lambda1_max, 0.0);
        assert_eq!(r.lambda2_max, 0.0);
    }

    #[test]
    fn degenerate_code_errors_are_complementary() {
        let id = KrausChannel::identity(2).unwrap();
        let rho = DensityOperator::maximally_mixed(2);
        let e = HermitianMatrix::from_diagonal(&[0.7, 0.2]);
        let code = IdCode::new(id, 1, vec![rho.clone(), rho], vec![e.clone(), e], None, false).unwrap();
        let r = verify_id_code(&code).unwrap();
        assert!((r.lambda1_max + r.lambda2_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loeber_overlap_counting() {
        let tc = basis_code(6, 6);
        let f = family(6, 3, vec![vec![0, 1, 2], vec![2, 3, 4]]);
        let code = build_loeber_code(&tc, &f).unwrap();
        let r = verify_id_code(&code).unwrap();
        assert_eq!(r.lambda1_max, 0.0);
        assert!((r.lambda2_max - 1.0 / 3.0).abs() < 1e-12);
        for j in 0..2 {
            for k in 0..2 {
                let b = born(&code.states()[j], &code.tests()[k]).unwrap();
                assert!((b - r.accept[j][k]).abs() < 1e-12);
            }
        }
        assert!(code.witness_deviation().unwrap() < 1e-15);
    }

    #[test]
    fn loeber_noisy_fixture_within_bounds() {
        let mut rng = rng_from_seed(2);
        let ch = KrausChannel::random_near_identity(2, 0.02, &mut rng).unwrap();
        let tc = random_code(&ch, 3, 8, 5, CodeOptions::new(CodeKind::NoisyBasis)).unwrap();
        let lambda = tc.max_error().unwrap();
        let f = generate_family(&FamilyParams::new(8, 0.25, 0.5, 6, 1)).unwrap().family;
        let r = verify_id_code(&build_loeber_code(&tc, &f).unwrap()).unwrap();
        let ov = crate::subsets::verify_family(&f).worst_overlap as f64 / f.size() as f64;
        assert!(r.lambda1_max <= lambda + 1e-9);
        assert!(r.lambda2_max <= ov + lambda + 1e-9);
    }

    #[test]
    fn family_must_match_code() {
        let tc = basis_code(3, 3);
        let f = family(4, 1, vec![vec![0], vec![3]]);
        assert!(matches!(build_loeber_code(&tc, &f), Err(Error::SizeMismatch(_))));
    }

    #[test]
    fn zero_entropy_noiseless_disjoint() {
        let tc = basis_code(8, 8);
        let f = family(8, 2, vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]]);
        let b = build_zero_entropy_code(&tc, &f, &PhaseSearch::new(3)).unwrap();
        assert_eq!(b.delta, 0.0);
        assert!(b.rejections.iter().all(|&r| r == 0));
        let r = verify_id_code(&b.code).unwrap();
        assert!(r.lambda1_max < 1e-12);
        assert!(r.lambda2_max < 1e-12);
        assert!(b.code.is_zero_entropy());
    }

    #[test]
    fn zero_entropy_overlap_is_phase_independent() {
        let tc = basis_code(6, 6);
        let f = family(6, 3, vec![vec![0, 1, 2], vec![1, 2, 3]]);
        let vectors = orthonormal_vectors(&tc).unwrap();
        let tests: Vec<_> = f.subsets().iter().map(|s| tc.decoder().coarse_grain(s)).collect();
        let mut rng = rng_from_seed(8);
        for _ in 0..10 {
            let v = superposition(&vectors, f.subset(0), &uniform_phases(3, &mut rng));
            let rho = DensityOperator::pure(&v).unwrap();
            assert!((born(&rho, &tests[1]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
            assert!((born(&rho, &tests[0]).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exhausted_search_reports_message() {
        // overlap 2/3 exceeds 5δ = 0 so no phase vector can pass
        let tc = basis_code(6, 6);
        let f = family(6, 3, vec![vec![0, 1, 2], vec![1, 2, 3]]);
        let mut s = PhaseSearch::new(0);
        s.trials = 5;
        assert!(matches!(
            build_zero_entropy_code(&tc, &f, &s),
            Err(Error::PhaseSearchExhausted { message: 0, trials: 5 })
        ));
    }

    #[test]
    fn phase_average_equals_mixture() {
        let mut rng = rng_from_seed(12);
        let u = crate::random::random_unitary(6, &mut rng).unwrap();
        let vectors: Vec<ComplexVector> = (0..6).map(|i| u.column(i).into_owned()).collect();
        let subset = [0, 2, 5];
        let avg = phase_average_state(&vectors, &subset, PhasePolicy::Uniform);
        let parts: Vec<DensityOperator> = subset.iter().map(|&m| DensityOperator::pure(&vectors[m]).unwrap()).collect();
        let refs: Vec<&DensityOperator> = parts.iter().collect();
        let mix = DensityOperator::mixture(&refs).unwrap();
        assert!((avg.as_matrix() - mix.mat().as_matrix()).norm() < 1e-12);
        let fixed = phase_average_state(&vectors, &subset, PhasePolicy::Zero);
        let v = superposition(&vectors, &subset, &[0.0; 3]);
        assert!((fixed.as_matrix() - HermitianMatrix::projector(&v).as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn sampled_first_kind_mean_matches_mixture() {
        let mut rng = rng_from_seed(6);
        let ch = KrausChannel::random_near_identity(2, 0.05, &mut rng).unwrap();
        let tc = random_code(&ch, 2, 4, 1, CodeOptions::new(CodeKind::Basis)).unwrap();
        let f = family(4, 2, vec![vec![0, 1], vec![2, 3]]);
        let est = estimate_concentration(&tc, &f, 0, 0.1, 4000, 9).unwrap();
        let loeber = verify_id_code(&build_loeber_code(&tc, &f).unwrap()).unwrap();
        let exact = 1.0 - loeber.accept[0][0];
        // |X_j − exact| ≤ 1 so the standard error is at most 1/√samples
        assert!((est.mean_first - exact).abs() < 4.0 / (4000f64).sqrt());
        assert!(est.median_first <= 2.0 * est.mean_first + 1e-12);
    }

    #[test]
    fn noiseless_disjoint_tails_vanish() {
        let tc = basis_code(8, 8);
        let f = family(8, 4, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        let est = estimate_concentration(&tc, &f, 1, 0.0, 200, 1).unwrap();
        assert_eq!(est.tail_first, 0.0);
        assert_eq!(est.tail_second, 0.0);
    }

    #[test]
    fn size_bound_arithmetic() {
        let b = size_bounds(2, 2, 0.1, 0.1, true).unwrap();
        assert!((b.pure_bound - 1525.878_906_25).abs() < 1e-6);
        assert!(b.satisfied);
        assert!(matches!(size_bounds(2, 2, 0.5, 0.5, true), Err(Error::TrivialRegime { .. })));
        let huge = size_bounds(10, 4096, 0.1, 0.1, false).unwrap();
        assert!(huge.general_bound.is_infinite() && huge.satisfied);
    }

    #[test]
    fn purifying_a_maximally_mixed_qubit_gives_a_bell_state() {
        let id = KrausChannel::identity(2).unwrap();
        let code = IdCode::new(
            id,
            1,
            vec![DensityOperator::maximally_mixed(2)],
            vec![HermitianMatrix::identity(2)],
            None,
            false,
        )
        .unwrap();
        let p = purify_and_extend(&code, 2).unwrap();
        let rho = p.states()[0].mat().as_matrix();
        let marginal = partial_trace(rho, 2, 2, Factor::Second).unwrap();
        assert!((marginal - CMatrix::identity(2, 2).scale(0.5)).norm() < 1e-12);
        assert!(p.is_zero_entropy());
        assert!(matches!(purify_and_extend(&code, 1), Err(Error::RankTooHigh { rank: 2, .. })));
    }

    #[test]
    fn pure_code_with_trivial_ancilla_is_unchanged() {
        let tc = basis_code(4, 4);
        let f = family(4, 1, vec![vec![0], vec![3]]);
        let code = build_loeber_code(&tc, &f).unwrap();
        let p = purify_and_extend(&code, 1).unwrap();
        for (a, b) in code.states().iter().zip(p.states()) {
            assert!((a.mat().as_matrix() - b.mat().as_matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn purification_keeps_two_site_reports() {
        let mut rng = rng_from_seed(44);
        let id = KrausChannel::identity(2).unwrap();
        let states: Vec<_> = (0..3).map(|_| DensityOperator::new(random_density(4, 2, &mut rng)).unwrap()).collect();
        let tests: Vec<_> = (0..3).map(|i| HermitianMatrix::projector(&basis_vector(4, i))).collect();
        let code = IdCode::new(id, 2, states, tests, None, false).unwrap();
        let p = purify_and_extend(&code, 2).unwrap();
        let before = verify_id_code(&code).unwrap();
        let after = verify_id_code(&p).unwrap();
        assert!(before.max_difference(&after).unwrap() < 1e-9);
        assert_eq!(p.channel(), &KrausChannel::extended(2, 2).unwrap());
    }

    #[test]
    fn rejects_bad_witness() {
        let tc = basis_code(3, 3);
        let f = family(3, 1, vec![vec![0], vec![1]]);
        let code = build_loeber_code(&tc, &f).unwrap();
        let mut w = code.simultaneity().unwrap().clone();
        w.subsets[0] = vec![2];
        assert!(IdCode::new(
            code.channel().clone(),
            1,
            code.states().to_vec(),
            code.tests().to_vec(),
            Some(w),
            false
        )
        .is_err());
    }

    #[test]
    fn json_round_trip_keeps_report() {
        let tc = basis_code(4, 4);
        let f = family(4, 2, vec![vec![0, 1], vec![1, 2]]);
        let code = build_loeber_code(&tc, &f).unwrap();
        let s = serde_json::to_string(&code).unwrap();
        let back: IdCode = serde_json::from_str(&s).unwrap();
        assert_eq!(verify_id_code(&back).unwrap(), verify_id_code(&code).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn pure_trace_distance_identity(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let u = crate::random::random_unitary(5, &mut rng).unwrap();
            let vectors: Vec<ComplexVector> = (0..5).map(|i| u.column(i).into_owned()).collect();
            let subset = [0, 1, 3, 4];
            let a = superposition(&vectors, &subset, &uniform_phases(4, &mut rng));
            let b = superposition(&vectors, &subset, &uniform_phases(4, &mut rng));
            let td = crate::linalg::trace_distance(&HermitianMatrix::projector(&a), &HermitianMatrix::projector(&b)).unwrap();
            let closed = (1.0 - a.dotc(&b).norm_sqr()).max(0.0).sqrt();
            prop_assert!((td - closed).abs() <= 1e-7);
        }

        #[test]
        fn small_phase_moves_change_errors_little(seed in any::<u64>(), delta in 0.05f64..0.5) {
            let mut rng = rng_from_seed(seed);
            let ch = KrausChannel::random_near_identity(2, 0.1, &mut rng).unwrap();
            let tc = random_code(&ch, 2, 4, seed, CodeOptions::new(CodeKind::Basis)).unwrap();
            let vectors: Vec<ComplexVector> = (0..4).map(|i| basis_vector(4, i)).collect();
            let e = ch.adjoint().apply_power(&tc.decoder().coarse_grain(&[0, 1, 2]), 2).unwrap();
            let subset = [0, 1, 2];
            let alpha = uniform_phases(3, &mut rng);
            let radius = delta * delta / (4.0 * PI);
            let beta: Vec<f64> = alpha.iter().map(|a| a + 0.99 * radius * if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            prop_assert!(torus_distance(&alpha, &beta) < radius);
            let xa = 1.0 - e.expectation(&superposition(&vectors, &subset, &alpha));
            let xb = 1.0 - e.expectation(&superposition(&vectors, &subset, &beta));
            prop_assert!((xa - xb).abs() < delta);
        }
    }
}
