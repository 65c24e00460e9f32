//! Formal contexts and concept closure on the worked five-object example.
//!
//! Run with: cargo run -p equicheck --example closure_basics

use equicheck::fca::{
    closure_of_intent, derive_extent, derive_intent, enumerate_concepts, is_concept, object_set,
    sentence_set,
};
use equicheck::generate::example1_context;

fn main() {
    let ctx = example1_context();
    println!("objects:   {:?}", ctx.objects());
    println!("sentences: {:?}\n", ctx.sentences());

    // beta({red}): all objects satisfying "red"
    let red = sentence_set(&["red"]);
    let extent = derive_extent(&ctx, &red).unwrap();
    println!("beta({{red}})        = {extent:?}");

    // gamma of that extent comes back to {red}: a closed pair
    let intent = derive_intent(&ctx, &extent).unwrap();
    println!("gamma(beta({{red}})) = {intent:?}");
    println!(
        "is_concept(red pair) = {}\n",
        is_concept(&ctx, &red, &extent).unwrap()
    );

    // widening the extent by zeroblue breaks closure: zeroblue is not red
    let mut widened = extent.clone();
    widened.insert("zeroblue".into());
    println!(
        "is_concept with zeroblue added = {}",
        is_concept(&ctx, &red, &widened).unwrap()
    );

    // the closure of {red, zero} keeps only zerored, and its intent also
    // picks up "even": ({red, zero}, {zerored}) alone is NOT closed
    let pair = closure_of_intent(&ctx, &sentence_set(&["red", "zero"])).unwrap();
    println!("\nclosure of {{red, zero}}: extent {:?}, intent {:?}", pair.extent, pair.intent);
    println!(
        "is_concept(({{red, zero}}, {{zerored}})) = {}",
        is_concept(&ctx, &sentence_set(&["red", "zero"]), &object_set(&["zerored"])).unwrap()
    );

    // every Galois-closed pair of the context, in lectic order
    let concepts = enumerate_concepts(&ctx, 20).unwrap();
    println!("\nall {} concepts:", concepts.len());
    for c in &concepts {
        println!("  {:?}  /  {:?}", c.extent, c.intent);
    }
}
