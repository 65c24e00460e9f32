//! Concept-based inference equivariance and its step count, against the
//! raw per-pixel baseline.
//!
//! Run with: cargo run -p equicheck --example equivariance_steps

use equicheck::domain::FiniteDomain;
use equicheck::generate::section5_example;
use equicheck::verifier::{
    check_theorem1_bound, raw_case_comparisons, verify_concept_equivariance,
    verify_concept_equivariance_over,
};

fn main() {
    let ex = section5_example();

    // one object: the zerored digit
    let report = verify_concept_equivariance_over(
        &ex.g,
        &ex.g_prime,
        &ex.f,
        &ex.f_prime,
        &ex.tau,
        std::slice::from_ref(&ex.zerored),
        1e-9,
        100,
    )
    .unwrap();
    println!("single object through the English/Latin triangle:");
    println!("  degree            {}", report.degree);
    println!("  concept profiles  {}", report.distinct_profiles.unwrap());
    println!("  scalar checks     {} (two concepts + one task)", report.comparisons);

    // the raw alternative: comparing a 32x32 binary image pixel by pixel
    let names: Vec<String> = (0..1024).map(|i| format!("p{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let pixels = FiniteDomain::binary(&refs);
    println!(
        "\nraw verification of the same object in pixel space: {} per-pixel comparisons",
        raw_case_comparisons(&pixels)
    );
    println!("  (and the verdict covers only objects with identical pixels)");

    // on the colored-digit model, sweeping all 64 feature assignments
    // still needs at most 2^K = 4 verification steps
    let gen = equicheck::generate::generate_colored_digits(0, 6).unwrap();
    let full = verify_concept_equivariance(
        &gen.encoder,
        &gen.encoder,
        &gen.task,
        &gen.task,
        &gen.translation,
        1e-9,
        100,
    )
    .unwrap();
    println!("\ncolored-digit model, full sweep over {} inputs:", full.total_cases);
    println!("  degree       {}", full.degree);
    println!("  steps used   {} (= distinct concept profiles)", full.steps_used);
    println!(
        "  case counts  {} concept-space vs {} feature-space",
        full.bound_exp_k.unwrap(),
        full.bound_exp_d
    );

    let bound = check_theorem1_bound(&full, 6, 2);
    println!("\nbounded-verification check at D=6, K=2: {}", bound.holds);
    println!("  {}", bound.detail);
}
