//! Concept invariance and equivariance under group actions, and the
//! leakage scans that catch mechanisms bypassing the concepts.
//!
//! Run with: cargo run -p equicheck --example invariance_and_leakage

use equicheck::generate::{corrupted_encoder, generate_colored_digits};
use equicheck::group::{
    check_equivariance, check_invariance, detect_task_leakage, validate_group,
};

fn main() {
    let gen = generate_colored_digits(0, 6).unwrap();
    println!(
        "colored-digit domain: {} feature bits, concepts (zero, red), task even",
        gen.feature_domain.len()
    );
    let group = validate_group(&gen.actions);
    println!(
        "action set {:?} forms a group: {}\n",
        gen.actions.actions.iter().map(|a| a.name.as_str()).collect::<Vec<_>>(),
        group.valid
    );

    let rotate = gen.actions.actions.iter().find(|a| a.name == "rotate").unwrap();
    let color_flip = gen.actions.actions.iter().find(|a| a.name == "color_flip").unwrap();

    // the clean encoder ignores the rotation bit and tracks the color flip
    let inv = check_invariance(&gen.encoder, rotate, 1e-9).unwrap();
    println!("clean encoder, rotation:    invariant = {} ({} witnesses)", inv.holds, inv.witnesses.len());
    let equ = check_equivariance(&gen.encoder, color_flip, 1e-9).unwrap();
    println!("clean encoder, color flip:  equivariant = {} ({} witnesses)\n", equ.holds, equ.witnesses.len());

    // a corrupted encoder reads the rotation bit for "red"
    let bad = corrupted_encoder(&gen).unwrap();
    let inv = check_invariance(&bad, rotate, 1e-9).unwrap();
    println!("corrupted encoder, rotation: invariant = {} ({} witnesses)", inv.holds, inv.witnesses.len());
    if let Some(w) = inv.witnesses.first() {
        println!("  first witness: x = {:?} moved to {:?}", w.input, w.moved_input);
    }
    let equ = check_equivariance(&bad, color_flip, 1e-9).unwrap();
    println!("corrupted encoder, color flip: equivariant = {} ({} witnesses)\n", equ.holds, equ.witnesses.len());

    // task leakage: wire the task past the concepts and the scan sees the
    // output move while the concepts stand still
    let clean_task = gen.encoder.compose(&gen.task).unwrap();
    let support: Vec<Vec<usize>> = gen.objects.iter().map(|o| o.features.clone()).collect();
    let clean =
        detect_task_leakage(&gen.encoder, &clean_task, &gen.actions, &support, 1e-9).unwrap();
    println!("clean model: {} task-leakage witnesses", clean.len());

    let leaky_y = equicheck::tabular::TabularStochasticMap::deterministic(
        gen.feature_domain.clone(),
        equicheck::domain::FiniteDomain::binary(&["even"]),
        |x| vec![(1 - x[0]) & (1 - x[2])], // parity of the digit AND a rotation-bit tap
    )
    .unwrap();
    let witnesses =
        detect_task_leakage(&gen.encoder, &leaky_y, &gen.actions, &support, 1e-9).unwrap();
    println!("leaky model:  {} task-leakage witnesses", witnesses.len());
    for w in witnesses.iter().take(3) {
        println!("  x = {:?} under '{}'", w.input, w.action);
    }
}
