//! Families of equal-size subsets with bounded pairwise overlap.

use qidlab::subsets::{generate_family, verify_family, FamilyMode, FamilyParams};

fn main() -> qidlab::Result<()> {
    let random = generate_family(&FamilyParams::new(64, 0.25, 0.4, 40, 11))?;
    let check = verify_family(&random.family);
    println!(
        "random: {} subsets of size {} in [64] after {} attempts, worst overlap {} (allowed {})",
        random.family.len(),
        random.family.size(),
        random.attempts,
        check.worst_overlap,
        check.allowed
    );
    for w in &random.warnings {
        println!("  warning: {w}");
    }

    let mut p = FamilyParams::new(9, 1.0 / 3.0, 0.34, 8, 0);
    p.mode = FamilyMode::Exhaustive;
    let exhaustive = generate_family(&p)?;
    println!("exhaustive: {:?}", exhaustive.family.subsets());
    Ok(())
}
