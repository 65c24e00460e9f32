//! Generate the synthetic colored-digit bundle, run every check, then
//! inject single defects and watch exactly the matching check fail.
//!
//! Run with: cargo run -p equicheck --example full_suite

use equicheck::blueprint::{generate_suite_bundle, run_suite, Defect};
use equicheck::config::EngineConfig;

fn print_report(report: &equicheck::SuiteReport) {
    for check in &report.checks {
        let status = if !check.enabled {
            "skip"
        } else if check.passed {
            "pass"
        } else {
            "FAIL"
        };
        println!("  [{status}] {:<12} {}", check.name, check.details);
    }
    println!("  overall: {}\n", if report.overall { "pass" } else { "FAIL" });
}

fn main() {
    let config = EngineConfig::default();

    println!("clean generated model vs its ground-truth reference:");
    let clean = generate_suite_bundle(0, 6, None).unwrap();
    print_report(&run_suite(&clean, &config).unwrap());

    for (defect, label) in [
        (Defect::Leakage, "decision stage taps a raw feature bit"),
        (Defect::BrokenTranslation, "reference context disagrees on the red extent"),
        (Defect::DenseBox, "decision box reads every concept"),
    ] {
        println!("injected defect: {label}");
        let bundle = generate_suite_bundle(0, 6, Some(defect)).unwrap();
        print_report(&run_suite(&bundle, &config).unwrap());
    }
}
