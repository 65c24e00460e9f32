//! Post-hoc explanation through a surrogate: both hops of the chain must
//! commute, and one unfaithful link breaks interpretability.
//!
//! Run with: cargo run -p equicheck --example surrogate_chain

use equicheck::domain::{Assignment, FiniteDomain};
use equicheck::tabular::TabularStochasticMap;
use equicheck::verifier::{verify_surrogate_chain, ValueMap};

fn main() {
    // the original model: Y = 1 - X1 over two feature bits
    let m = TabularStochasticMap::deterministic(
        FiniteDomain::binary(&["X1", "X2"]),
        FiniteDomain::binary(&["Y"]),
        |x| vec![1 - x[0]],
    )
    .unwrap();
    // a faithful surrogate and the user's own reasoning
    let surrogate = m.clone();
    let user = m.clone();

    let id_in = ValueMap::identity(m.input_domain()).unwrap();
    let id_out = ValueMap::identity(m.output_domain()).unwrap();
    let cases: Vec<Assignment> = m.input_domain().assignments().collect();

    let (hop1, hop2) = verify_surrogate_chain(
        &m,
        &surrogate,
        &user,
        (&id_in, &id_out),
        (&id_in, &id_out),
        &cases,
        1e-9,
        10,
    )
    .unwrap();
    println!("faithful surrogate:");
    println!("  model→surrogate degree {}", hop1.degree);
    println!("  surrogate→user degree  {}", hop2.degree);
    println!("  chain interpretable: {}\n", hop1.degree == 1.0 && hop2.degree == 1.0);

    // flip one surrogate row: the first hop breaks, whatever the user does
    let unfaithful = TabularStochasticMap::new(
        m.input_domain().clone(),
        m.output_domain().clone(),
        vec![
            vec![1.0, 0.0], // should be [0, 1]
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
        ],
    )
    .unwrap();
    let (hop1, hop2) = verify_surrogate_chain(
        &m,
        &unfaithful,
        &user,
        (&id_in, &id_out),
        (&id_in, &id_out),
        &cases,
        1e-9,
        10,
    )
    .unwrap();
    println!("unfaithful surrogate:");
    println!("  model→surrogate degree {}", hop1.degree);
    println!("  surrogate→user degree  {}", hop2.degree);
    for c in &hop1.counterexamples {
        println!("  counterexample at {:?}: {:?} vs {:?}", c.input, c.path_a, c.path_b);
    }
}
