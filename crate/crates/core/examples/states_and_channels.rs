//! Fidelity, trace distance, partial trace and information quantities.

use qidlab::channel::KrausChannel;
use qidlab::info::{holevo_information, mutual_information, von_neumann_entropy};
use qidlab::linalg::{basis_vector, fidelity, partial_trace, trace_distance, Factor};
use qidlab::random::{random_density, rng_for};
use qidlab::state::DensityOperator;

fn main() -> qidlab::Result<()> {
    let mut rng = rng_for(7, "example", &[]);
    let rho = random_density(3, 2, &mut rng);
    let sigma = random_density(3, 3, &mut rng);
    let f = fidelity(&rho, &sigma)?;
    let t = trace_distance(&rho, &sigma)?;
    println!("F = {f:.6}, T = {t:.6}");
    println!("1 - F = {:.6} <= T <= sqrt(1 - F^2) = {:.6}", 1.0 - f, (1.0 - f * f).sqrt());

    let joint = random_density(4, 4, &mut rng);
    let reduced = partial_trace(joint.as_matrix(), 2, 2, Factor::Second)?;
    println!("Tr_B of a two-qubit state has trace {:.6}", reduced.trace().re);

    let dep = KrausChannel::depolarizing(2, 0.2)?;
    let zero = DensityOperator::pure(&basis_vector(2, 0))?;
    let one = DensityOperator::pure(&basis_vector(2, 1))?;
    let zero_in = zero.clone();
    let chi = holevo_information(&[(0.5, zero), (0.5, one)], &dep)?;
    println!("Holevo information of the basis ensemble through depolarizing(0.2): {chi:.6} bits");
    println!("output entropy for input |0>: {:.6} bits", von_neumann_entropy(dep.apply(&zero_in)?.mat()));

    let bsc = vec![vec![0.9, 0.1], vec![0.1, 0.9]];
    println!("I(X;Y) for a binary symmetric channel at 0.1: {:.6}", mutual_information(&[0.5, 0.5], &bsc)?);
    Ok(())
}
