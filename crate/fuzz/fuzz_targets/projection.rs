#![no_main]

use arbitrary::Arbitrary;
use libfuzzer_sys::fuzz_target;

#[derive(Arbitrary, Debug)]
struct Input {
    values: Vec<f64>,
    k_fraction: f64,
}

fuzz_target!(|input: Input| {
    let m = input.values.len();
    if m == 0 || m > 512 {
        return;
    }
    let t = if input.k_fraction.is_finite() {
        input.k_fraction.abs().fract()
    } else {
        0.5
    };
    let k = 1.0 + t * ((m as f64).sqrt() - 1.0);

    // Must never panic, whatever the input bytes decode to.
    match snmf::sparsity::sparse_opt(&input.values, k) {
        Ok(sol) => {
            let l1: f64 = sol.y.iter().sum();
            let l2: f64 = sol.y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(sol.y.iter().all(|&v| v >= 0.0));
            assert!((l1 - k).abs() <= 1e-6, "l1 {l1} vs k {k}");
            assert!((l2 - 1.0).abs() <= 1e-6, "l2 {l2}");
            let fast = snmf::sparsity::sparse_opt_early_break(&input.values, k)
                .expect("early break accepts the same inputs");
            // Objectives carry inherent rounding of order eps * k * max|b|.
            let magnitude = input.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            let tol = 1e-5 * (1.0 + k * magnitude);
            assert!(
                (fast.objective - sol.objective).abs() <= tol,
                "{} vs {} (tol {tol})",
                fast.objective,
                sol.objective
            );
        }
        Err(_) => {
            // Non-finite entries are rejected, never a crash.
        }
    }
    let _ = snmf::sparsity::projection_hoyer(&input.values, k);
});
