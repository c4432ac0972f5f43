//! The pretty good measurement against a known good decoder.

use qidlab::linalg::{basis_vector, HermitianMatrix};
use qidlab::orthogonalize::pgm;
use qidlab::random::{random_density, random_unitary, rng_for};

fn main() -> qidlab::Result<()> {
    let mut rng = rng_for(5, "example", &[]);
    let d = 4;
    let u = random_unitary(d, &mut rng)?;
    let states: Vec<HermitianMatrix> = (0..d)
        .map(|i| {
            let noise = random_density(d, 2, &mut rng).scale(0.2);
            HermitianMatrix::projector(&basis_vector(d, i)).scale(0.8).add(&noise).map(|s| s.conjugate_by(&u))
        })
        .collect::<Result<_, _>>()?;
    let good: Vec<HermitianMatrix> = (0..d).map(|i| HermitianMatrix::projector(&(&u * basis_vector(d, i)))).collect();
    let avg = |effects: &[HermitianMatrix]| -> qidlab::Result<f64> {
        let mut s = 0.0;
        for (r, e) in states.iter().zip(effects) {
            s += r.trace_product(e)?;
        }
        Ok(s / d as f64)
    };
    let eps = 1.0 - avg(&good)?;
    let p = avg(pgm(&states)?.effects())?;
    println!("known decoder error {eps:.4}");
    println!("PGM success {p:.4} >= (1 - eps)^2 = {:.4}", (1.0 - eps).powi(2));
    Ok(())
}
