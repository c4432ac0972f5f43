//! Identification by uniform mixtures of codewords over subsets.

use qidlab::channel::KrausChannel;
use qidlab::idcode::{build_loeber_code, check_size_bounds, verify_id_code};
use qidlab::subsets::{generate_family, FamilyParams};
use qidlab::transmission::{random_code, CodeKind, CodeOptions};

fn main() -> qidlab::Result<()> {
    let channel = KrausChannel::depolarizing(2, 0.05)?;
    let code = random_code(&channel, 4, 16, 2, CodeOptions::new(CodeKind::NoisyBasis))?;
    let lambda = code.max_error()?;
    let family = generate_family(&FamilyParams::new(16, 0.25, 0.5, 12, 4))?.family;
    let id = build_loeber_code(&code, &family)?;
    let r = verify_id_code(&id)?;
    println!("{} messages from {} codewords, lambda = {lambda:.4}", id.len(), code.len());
    println!("lambda1 = {:.4} (<= {lambda:.4})", r.lambda1_max);
    println!("lambda2 = {:.4} (<= overlap/size + lambda = {:.4})", r.lambda2_max, 0.5 + lambda);
    let b = check_size_bounds(&id, &r, None);
    match b {
        Ok(b) => println!("log2 N = {:.2} <= log2 bound {:.1}", (b.n as f64).log2(), b.log2_general_bound),
        Err(e) => println!("size bound not applicable: {e}"),
    }
    Ok(())
}
