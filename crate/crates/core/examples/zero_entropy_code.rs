//! Pure-state identification codes from random-phase superpositions.

use qidlab::channel::KrausChannel;
use qidlab::idcode::{build_zero_entropy_code, estimate_concentration, verify_id_code, PhaseSearch};
use qidlab::orthogonalize::orthogonalize_code;
use qidlab::random::rng_for;
use qidlab::subsets::{generate_family, FamilyParams};
use qidlab::transmission::{random_code, CodeKind, CodeOptions};

fn main() -> qidlab::Result<()> {
    let channel = KrausChannel::random_near_identity(2, 0.01, &mut rng_for(8, "channel", &[]))?;
    let code = random_code(&channel, 5, 32, 8, CodeOptions::new(CodeKind::NoisyBasis))?;
    let ortho = orthogonalize_code(&code)?;
    let delta = ortho.report.delta_out;
    let m = ortho.code.len();
    let family = generate_family(&FamilyParams::new(m, 4.0 / m as f64, delta.max(0.25), 12, 1))?.family;
    let built = build_zero_entropy_code(&ortho.code, &family, &PhaseSearch::new(21))?;
    let r = verify_id_code(&built.code)?;
    println!("M' = {m}, delta = {delta:.4}, N = {}", built.code.len());
    println!("lambda1 = {:.4} (threshold {:.4})", r.lambda1_max, built.threshold_first);
    println!("lambda2 = {:.4} (threshold {:.4})", r.lambda2_max, built.threshold_second);
    println!("phase redraws: {:?}", built.rejections);

    let est = estimate_concentration(&ortho.code, &family, 0, delta, 2000, 3)?;
    println!(
        "Pr[X_j > 3 delta] = {:.4}, median X_j = {:.4}, median X_k = {:.4}",
        est.tail_first, est.median_first, est.median_second
    );
    Ok(())
}
