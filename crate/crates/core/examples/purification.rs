//! Purifying a mixed-state code over an extended channel leaves its errors unchanged.

use qidlab::channel::KrausChannel;
use qidlab::idcode::{build_loeber_code, purify_and_extend, verify_id_code};
use qidlab::orthogonalize::pgm;
use qidlab::random::{random_density, rng_for};
use qidlab::state::DensityOperator;
use qidlab::subsets::SubsetFamily;
use qidlab::transmission::TransmissionCode;

fn main() -> qidlab::Result<()> {
    let mut rng = rng_for(4, "example", &[]);
    let states: Vec<_> = (0..4).map(|_| random_density(4, 2, &mut rng)).collect();
    let codewords = states.iter().cloned().map(DensityOperator::new).collect::<Result<_, _>>()?;
    let code = TransmissionCode::new(KrausChannel::identity(2)?, 2, codewords, pgm(&states)?)?;
    let family = SubsetFamily::new(4, 2, vec![vec![0, 1], vec![1, 2], vec![2, 3]])?;
    let mixed = build_loeber_code(&code, &family)?;
    let pure = purify_and_extend(&mixed, 2)?;
    let a = verify_id_code(&mixed)?;
    let b = verify_id_code(&pure)?;
    println!("mixed: lambda1 {:.6}, lambda2 {:.6}", a.lambda1_max, a.lambda2_max);
    println!("pure:  lambda1 {:.6}, lambda2 {:.6}", b.lambda1_max, b.lambda2_max);
    println!("max entry difference {:.2e}", a.max_difference(&b).expect("same shape"));
    Ok(())
}
