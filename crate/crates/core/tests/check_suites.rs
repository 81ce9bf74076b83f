use pinn_fracture::check::{run_suite, SUITES};

#[test]
fn every_suite_passes_for_several_seeds() {
    for seed in [1, 42] {
        for suite in SUITES {
            for line in run_suite(suite, seed).unwrap() {
                assert!(line.passed, "{line}");
            }
        }
    }
}
