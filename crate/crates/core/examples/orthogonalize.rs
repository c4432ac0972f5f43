//! Turning a noisy code into a pure code with orthonormal codewords.

use qidlab::channel::KrausChannel;
use qidlab::linalg::{gram, identity_deviation};
use qidlab::orthogonalize::{orthogonalize_code, STAGES};
use qidlab::random::rng_for;
use qidlab::transmission::{random_code, CodeKind, CodeOptions};

fn main() -> qidlab::Result<()> {
    let channel = KrausChannel::random_near_identity(2, 0.02, &mut rng_for(3, "channel", &[]))?;
    let code = random_code(&channel, 4, 16, 9, CodeOptions::new(CodeKind::NoisyBasis))?;
    let out = orthogonalize_code(&code)?;
    let r = &out.report;
    println!("M = {}, L = {}, M' = {}", r.M, r.L, r.M_prime);
    println!("eps_in = {:.4}, delta_out = {:.4}, bound = {:.4}", r.eps_in, r.delta_out, r.bound_delta);
    for (stage, err) in STAGES.iter().zip(&r.per_stage_errors) {
        println!("  {stage:<15} avg error {err:.4}");
    }
    println!("Gram deviation from identity: {:.2e}", identity_deviation(gram(&out.vectors).as_matrix()));
    Ok(())
}
