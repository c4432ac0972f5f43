//! Fixed phases fail where random phases succeed.

use qidlab::counterexample::{build_counterexample, fixed_phase_failure, sample_detections};

fn main() -> qidlab::Result<()> {
    for k in [2, 4, 8] {
        let inst = build_counterexample(k, k + 2)?;
        let samples = sample_detections(&inst, 5000, 17);
        let mean = samples.iter().map(|(_, d)| d.detection).sum::<f64>() / samples.len() as f64;
        println!(
            "K = {k}: success per codeword {:.4}, Tr psi D = {:.1e}, mean random-phase detection {mean:.4} (1 - 1/K = {:.4})",
            inst.success_probabilities()[0],
            fixed_phase_failure(&inst),
            1.0 - 1.0 / k as f64
        );
    }
    Ok(())
}
