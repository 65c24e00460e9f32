//! Input-dependent parameters over a finite memory: the selector picks a
//! slot per input, keeping every reachable parameter state enumerable.
//!
//! Run with: cargo run -p equicheck --example parameter_memory

use equicheck::domain::{FiniteDomain, Variable};
use equicheck::process::{
    enumerate_reachable_parameters, evaluate_with_memory, ParameterMemory,
};
use equicheck::tabular::TabularStochasticMap;

fn main() {
    let c_domain = FiniteDomain::binary(&["zero"]);
    let y_domain = FiniteDomain::binary(&["even"]);

    // two candidate decision rules over the same concept
    let follow = TabularStochasticMap::deterministic(c_domain.clone(), y_domain.clone(), |c| {
        vec![c[0]]
    })
    .unwrap();
    let invert = TabularStochasticMap::deterministic(c_domain.clone(), y_domain.clone(), |c| {
        vec![1 - c[0]]
    })
    .unwrap();

    // the selector reads a context bit and picks the rule; slot 2 is dead
    let selector = TabularStochasticMap::new(
        FiniteDomain::binary(&["ctx"]),
        FiniteDomain::new(vec![Variable::new("r", 3)]).unwrap(),
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
    )
    .unwrap();
    let memory =
        ParameterMemory::new(vec![follow.clone(), invert.clone(), follow.clone()], selector)
            .unwrap();

    println!("reachable parameter slots: {:?} (slot 2 never selected)", enumerate_reachable_parameters(&memory));

    for ctx in 0..2 {
        for zero in 0..2 {
            let y = evaluate_with_memory(&memory, &[ctx], &[zero]).unwrap();
            println!("  ctx={ctx} zero={zero} -> P(even) = {:?}", y);
        }
    }

    // a stochastic selector mixes the slots
    let soft_selector = TabularStochasticMap::new(
        FiniteDomain::binary(&["ctx"]),
        FiniteDomain::new(vec![Variable::new("r", 2)]).unwrap(),
        vec![vec![0.5, 0.5], vec![0.9, 0.1]],
    )
    .unwrap();
    let soft = ParameterMemory::new(vec![follow, invert], soft_selector).unwrap();
    println!("\nstochastic selector:");
    for ctx in 0..2 {
        let y = evaluate_with_memory(&soft, &[ctx], &[1]).unwrap();
        println!("  ctx={ctx} zero=1 -> P(even) = {:?}", y);
    }
    println!("\neach slot is a fixed table, so every behaviour the model can");
    println!("exhibit is one of finitely many verifiable parameter states.");
}
