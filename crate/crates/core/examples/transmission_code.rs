//! Seeded transmission codes: error evaluation and expurgation.

use qidlab::channel::KrausChannel;
use qidlab::random::rng_for;
use qidlab::transmission::{expurgate, random_code, CodeKind, CodeOptions};

fn main() -> qidlab::Result<()> {
    let channel = KrausChannel::random_near_identity(2, 0.03, &mut rng_for(1, "channel", &[]))?;
    for kind in [CodeKind::Basis, CodeKind::NoisyBasis, CodeKind::Haar] {
        let code = random_code(&channel, 3, 8, 42, CodeOptions::new(kind))?;
        println!("{kind:?}: avg error {:.4}, max error {:.4}", code.avg_error()?, code.max_error()?);
        let e = expurgate(&code, code.avg_error()?)?;
        println!("  expurgated to {} codewords {:?}, max error {:.4}", e.code.len(), e.kept, e.code.max_error()?);
    }
    Ok(())
}
