//! Transmission codes: codewords `π_m` on `A^n`, decoding effects `D_m` on
//! `B^n`, and success probabilities `Tr N^{⊗n}(π_m) D_m`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::linalg::{basis_vector, eigh, HermitianMatrix};
use crate::orthogonalize::pgm;
use crate::random::{haar_vector, rng_for};
use crate::state::{DensityOperator, SubPovm};
use crate::tol::{DIM_GUARD, TOL_FVG};
use crate::{Error, Result};

/// A code over `n` uses of `channel`. The decoder holds one effect per
/// message; the rest effect `1 − Σ D_m` is implicit.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawCode")]
pub struct TransmissionCode {
    channel: KrausChannel,
    block_n: usize,
    codewords: Vec<DensityOperator>,
    decoder: SubPovm,
}

#[derive(Deserialize)]
struct RawCode {
    channel: KrausChannel,
    block_n: usize,
    codewords: Vec<DensityOperator>,
    decoder: SubPovm,
}

impl TryFrom<RawCode> for TransmissionCode {
    type Error = Error;
    fn try_from(r: RawCode) -> Result<Self> {
        TransmissionCode::new(r.channel, r.block_n, r.codewords, r.decoder)
    }
}

impl TransmissionCode {
    pub fn new(
        channel: KrausChannel,
        block_n: usize,
        codewords: Vec<DensityOperator>,
        decoder: SubPovm,
    ) -> Result<Self> {
        if codewords.is_empty() {
            return Err(Error::EmptyCode);
        }
        if block_n == 0 {
            return Err(Error::BadParams("block length must be positive".into()));
        }
        if codewords.len() != decoder.len() {
            return Err(Error::SizeMismatch(format!(
                "{} codewords but {} decoding effects",
                codewords.len(),
                decoder.len()
            )));
        }
        let din = channel.block_in_dim(block_n, DIM_GUARD)?;
        let dout = channel.block_out_dim(block_n, DIM_GUARD)?;
        for c in &codewords {
            crate::linalg::same_dim(din, c.dim())?;
        }
        crate::linalg::same_dim(dout, decoder.dim())?;
        Ok(TransmissionCode {
            channel,
            block_n,
            codewords,
            decoder,
        })
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn block_n(&self) -> usize {
        self.block_n
    }

    pub fn codewords(&self) -> &[DensityOperator] {
        &self.codewords
    }

    pub fn decoder(&self) -> &SubPovm {
        &self.decoder
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    /// Dimension of the codeword space `A^n`.
    pub fn input_dim(&self) -> usize {
        self.codewords[0].dim()
    }

    /// `N^{⊗n}(π_m)` for every message.
    pub fn channel_outputs(&self) -> Result<Vec<DensityOperator>> {
        self.codewords
            .par_iter()
            .map(|c| self.channel.apply_power_state(c, self.block_n))
            .collect()
    }

    /// `Tr N^{⊗n}(π_m) D_m`, unclamped.
    pub fn successes(&self) -> Result<Vec<f64>> {
        self.codewords
            .par_iter()
            .zip(self.decoder.effects().par_iter())
            .map(|(c, d)| {
                let out = self.channel.apply_power(c.mat().as_matrix(), self.block_n)?;
                Ok(crate::linalg::trace_product(&out, d.as_matrix()))
            })
            .collect()
    }

    /// Per-message error probabilities, clamped to `[0, 1]`.
    pub fn errors(&self) -> Result<Vec<f64>> {
        Ok(self
            .successes()?
            .into_iter()
            .map(|s| (1.0 - s).clamp(0.0, 1.0))
            .collect())
    }

    pub fn max_error(&self) -> Result<f64> {
        Ok(self.errors()?.into_iter().fold(0.0, f64::max))
    }

    pub fn avg_error(&self) -> Result<f64> {
        let e = self.errors()?;
        Ok(e.iter().sum::<f64>() / e.len() as f64)
    }

    /// Decoding effects pulled back to the input, `N*^{⊗n}(D_m)`.
    pub fn pulled_back_effects(&self) -> Result<Vec<HermitianMatrix>> {
        let adj = self.channel.adjoint();
        self.decoder
            .effects()
            .par_iter()
            .map(|d| adj.apply_power(d, self.block_n))
            .collect()
    }

    /// The sub-code on the listed messages (in the given order).
    pub fn select(&self, indices: &[usize]) -> Result<TransmissionCode> {
        TransmissionCode::new(
            self.channel.clone(),
            self.block_n,
            indices.iter().map(|&i| self.codewords[i].clone()).collect(),
            self.decoder.select(indices),
        )
    }

    /// Same decoder, new codewords.
    pub fn with_codewords(&self, codewords: Vec<DensityOperator>) -> Result<TransmissionCode> {
        TransmissionCode::new(
            self.channel.clone(),
            self.block_n,
            codewords,
            self.decoder.clone(),
        )
    }
}

/// Indices of the `⌈M/2⌉` messages with the smallest errors (ties broken by
/// index), returned in increasing index order.
pub fn expurgation_indices(errors: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..errors.len()).collect();
    order.sort_by(|&a, &b| errors[a].total_cmp(&errors[b]).then(a.cmp(&b)));
    let keep = errors.len().div_ceil(2);
    let mut kept: Vec<usize> = order.into_iter().take(keep).collect();
    kept.sort_unstable();
    kept
}

#[derive(Clone, Debug)]
pub struct Expurgated {
    pub code: TransmissionCode,
    pub kept: Vec<usize>,
}

/// Keeps the better half of a code with average error at most `eps`; by
/// Markov's inequality the result has maximum error at most `2 eps`.
pub fn expurgate(code: &TransmissionCode, eps: f64) -> Result<Expurgated> {
    if code.is_empty() {
        return Err(Error::EmptyCode);
    }
    let errors = code.errors()?;
    let avg = errors.iter().sum::<f64>() / errors.len() as f64;
    if avg > eps + TOL_FVG {
        return Err(Error::BadParams(format!(
            "average error {avg} exceeds the stated bound {eps}"
        )));
    }
    let kept = expurgation_indices(&errors);
    Ok(Expurgated {
        code: code.select(&kept)?,
        kept,
    })
}

/// How random fixture codewords are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeKind {
    /// Computational basis states `|m>`.
    Basis,
    /// Haar-random pure states on `A^n`.
    Haar,
    /// `(1-t)|m><m| + t|h_m><h_m|` with Haar-random `h_m`.
    NoisyBasis,
}

impl std::str::FromStr for CodeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basis" => Ok(CodeKind::Basis),
            "haar" => Ok(CodeKind::Haar),
            "noisy-basis" => Ok(CodeKind::NoisyBasis),
            _ => Err(Error::Config(format!("unknown code kind `{s}`"))),
        }
    }
}

/// How the decoder of a fixture code is built from the channel outputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    /// Rank-one projective measurement onto the symmetrically orthonormalized
    /// principal eigenvectors of the outputs (the PGM of those pure states).
    Projective,
    /// Pretty-good measurement of the mixed output states.
    Pgm,
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projective" => Ok(DecoderKind::Projective),
            "pgm" => Ok(DecoderKind::Pgm),
            _ => Err(Error::Config(format!("unknown decoder kind `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeOptions {
    pub kind: CodeKind,
    /// Defaults to projective for basis codes and PGM otherwise.
    pub decoder: Option<DecoderKind>,
    /// Weight of the random component for [`CodeKind::NoisyBasis`].
    pub mix: f64,
}

impl CodeOptions {
    pub fn new(kind: CodeKind) -> Self {
        CodeOptions {
            kind,
            decoder: None,
            mix: 0.05,
        }
    }

    pub fn decoder_kind(&self) -> DecoderKind {
        self.decoder.unwrap_or(match self.kind {
            CodeKind::Basis => DecoderKind::Projective,
            _ => DecoderKind::Pgm,
        })
    }
}

/// Seeded fixture generator. Each codeword draws from its own derived
/// stream, so the code is a pure function of `(channel, n, M, seed, opts)`.
pub fn random_code(
    channel: &KrausChannel,
    block_n: usize,
    messages: usize,
    seed: u64,
    opts: CodeOptions,
) -> Result<TransmissionCode> {
    if messages == 0 {
        return Err(Error::EmptyCode);
    }
    let din = channel.block_in_dim(block_n, DIM_GUARD)?;
    channel.block_out_dim(block_n, DIM_GUARD)?;
    if opts.kind != CodeKind::Haar && messages > din {
        return Err(Error::BadParams(format!(
            "{messages} basis codewords do not fit in dimension {din}"
        )));
    }
    if !(0.0..=1.0).contains(&opts.mix) {
        return Err(Error::BadParams(format!("mix {} outside [0, 1]", opts.mix)));
    }
    let codewords = (0..messages)
        .map(|m| {
            let mut rng = rng_for(seed, "codeword", &[m as u64]);
            match opts.kind {
                CodeKind::Basis => DensityOperator::pure(&basis_vector(din, m)),
                CodeKind::Haar => DensityOperator::pure(&haar_vector(din, &mut rng)),
                CodeKind::NoisyBasis => {
                    let h = HermitianMatrix::projector(&haar_vector(din, &mut rng));
                    let b = HermitianMatrix::projector(&basis_vector(din, m));
                    DensityOperator::new(b.scale(1.0 - opts.mix).add(&h.scale(opts.mix))?)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let outputs: Vec<DensityOperator> = codewords
        .par_iter()
        .map(|c| channel.apply_power_state(c, block_n))
        .collect::<Result<_>>()?;
    let decoder = match opts.decoder_kind() {
        DecoderKind::Pgm => {
            let mats: Vec<HermitianMatrix> = outputs.iter().map(|o| o.mat().clone()).collect();
            pgm(&mats)?
        }
        DecoderKind::Projective => {
            let mats: Vec<HermitianMatrix> = outputs
                .iter()
                .map(|o| HermitianMatrix::projector(&eigh(o.mat()).vector(0)))
                .collect();
            pgm(&mats)?
        }
    };
    TransmissionCode::new(channel.clone(), block_n, codewords, decoder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng_from_seed;
    use crate::state::born;

    #[test]
    fn basis_code_over_identity_is_error_free() {
        let id = KrausChannel::identity(2).unwrap();
        let code = random_code(&id, 3, 8, 1, CodeOptions::new(CodeKind::Basis)).unwrap();
        assert!(code.max_error().unwrap() < 1e-12);
        assert_eq!(code.len(), 8);
    }

    #[test]
    fn uniform_decoder_error() {
        let id = KrausChannel::identity(4).unwrap();
        let m = 4;
        let codewords = (0..m)
            .map(|i| DensityOperator::pure(&basis_vector(4, i)).unwrap())
            .collect();
        let eff = HermitianMatrix::identity(4).scale(1.0 / m as f64);
        let decoder = SubPovm::new(vec![eff; m], true).unwrap();
        let code = TransmissionCode::new(id, 1, codewords, decoder).unwrap();
        assert!((code.avg_error().unwrap() - (1.0 - 1.0 / m as f64)).abs() < 1e-12);
    }

    #[test]
    fn avg_error_matches_born_rule_per_message() {
        let mut rng = rng_from_seed(21);
        let ch = KrausChannel::random(2, 2, 2, &mut rng).unwrap();
        let code = random_code(&ch, 2, 4, 3, CodeOptions::new(CodeKind::Haar)).unwrap();
        let full = ch.tensor_power(2, 4096).unwrap();
        let mut total = 0.0;
        for (c, d) in code.codewords().iter().zip(code.decoder().effects()) {
            total += 1.0 - born(&full.apply(c).unwrap(), d).unwrap();
        }
        assert!((code.avg_error().unwrap() - total / 4.0).abs() < 1e-12);
        assert!(code.avg_error().unwrap() <= code.max_error().unwrap());
    }

    #[test]
    fn expurgation_keeps_the_better_half() {
        assert_eq!(expurgation_indices(&[0.0, 0.0, 0.9, 0.9]), vec![0, 1]);
        assert_eq!(expurgation_indices(&[0.9, 0.1, 0.5]), vec![1, 2]);
        assert_eq!(expurgation_indices(&[0.2; 5]), vec![0, 1, 2]);
    }

    #[test]
    fn expurgate_fixture_with_known_errors() {
        // messages 0,1 decoded perfectly, messages 2,3 with error 0.9
        let id = KrausChannel::identity(4).unwrap();
        let codewords = (0..4)
            .map(|i| DensityOperator::pure(&basis_vector(4, i)).unwrap())
            .collect();
        let mut effects = vec![
            HermitianMatrix::projector(&basis_vector(4, 0)),
            HermitianMatrix::projector(&basis_vector(4, 1)),
        ];
        for i in 2..4 {
            effects.push(HermitianMatrix::projector(&basis_vector(4, i)).scale(0.1));
        }
        let code = TransmissionCode::new(id, 1, codewords, SubPovm::new(effects, false).unwrap())
            .unwrap();
        let ex = expurgate(&code, 0.45).unwrap();
        assert_eq!(ex.kept, vec![0, 1]);
        assert!(ex.code.max_error().unwrap() < 1e-12);
        assert!(expurgate(&code, 0.2).is_err());
    }

    #[test]
    fn haar_codes_are_reproducible() {
        let id = KrausChannel::identity(2).unwrap();
        let a = random_code(&id, 2, 4, 7, CodeOptions::new(CodeKind::Haar)).unwrap();
        let b = random_code(&id, 2, 4, 7, CodeOptions::new(CodeKind::Haar)).unwrap();
        let c = random_code(&id, 2, 4, 8, CodeOptions::new(CodeKind::Haar)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_ne!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn code_book_round_trips_through_json() {
        let id = KrausChannel::depolarizing(2, 0.05).unwrap();
        let code = random_code(&id, 2, 4, 2, CodeOptions::new(CodeKind::NoisyBasis)).unwrap();
        let s = serde_json::to_string(&code).unwrap();
        let back: TransmissionCode = serde_json::from_str(&s).unwrap();
        assert_eq!(back.errors().unwrap(), code.errors().unwrap());
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        for key in ["channel", "block_n", "codewords", "decoder"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn rejects_mismatched_sizes() {
        let id = KrausChannel::identity(2).unwrap();
        let codewords = vec![DensityOperator::maximally_mixed(2)];
        let decoder = SubPovm::new(vec![HermitianMatrix::identity(2).scale(0.5); 2], true).unwrap();
        assert!(matches!(
            TransmissionCode::new(id.clone(), 1, codewords, decoder),
            Err(Error::SizeMismatch(_))
        ));
        assert!(matches!(
            random_code(&id, 13, 2, 0, CodeOptions::new(CodeKind::Haar)),
            Err(Error::DimGuardExceeded { .. })
        ));
    }
}
