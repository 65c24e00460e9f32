//! Reasoning shortcuts: several sound translations, non-identifiable
//! alignment, and probe-based relabeling.
//!
//! Run with: cargo run -p equicheck --example alignment_shortcuts

use equicheck::align::{detect_reasoning_shortcuts, probe_align, relabel_encoder};
use equicheck::domain::FiniteDomain;
use equicheck::fca::object_set;
use equicheck::generate::latin_digit_contexts;
use equicheck::tabular::{JointDistribution, TabularStochasticMap};

fn main() {
    // the model's Latin vocabulary has the opposite meaning: nulla holds of
    // ones, unum of zeros
    let (latin, english) = latin_digit_contexts();
    let m_star = object_set(&["zeroblue", "zerored"]);
    let report = detect_reasoning_shortcuts(&latin, &english, &m_star, 6, 8).unwrap();
    println!(
        "sound translations on the zero objects: {} -> reasoning shortcut: {}",
        report.sound_translations.len(),
        report.shortcut
    );
    for tau in &report.sound_translations {
        println!("  {:?}", tau.mapping);
    }

    // a probe compares the learned posteriors against the user's
    let x = FiniteDomain::binary(&["digit"]);
    let learned = TabularStochasticMap::deterministic(
        x.clone(),
        FiniteDomain::binary(&["nulla", "unum"]),
        |a| vec![a[0], 1 - a[0]],
    )
    .unwrap();
    let reference = TabularStochasticMap::deterministic(
        x.clone(),
        FiniteDomain::binary(&["one", "zero"]),
        |a| vec![a[0], 1 - a[0]],
    )
    .unwrap();
    let x_dist = JointDistribution::new(x, vec![0.5, 0.5]).unwrap();
    let result = probe_align(&learned, &reference, &x_dist, 8, 1e-12).unwrap();
    println!("\nprobe alignment:");
    for e in &result.matching {
        println!("  {} → {} ({})", e.learned, e.reference, if e.flipped { "-" } else { "+" });
    }
    println!("  divergence   {}", result.divergence);
    println!(
        "  identifiable {} (the complementary flipped matching ties at zero)",
        result.identifiable
    );

    // relabeling rewrites the encoder's vocabulary along the matching
    let relabeled = relabel_encoder(&learned, &result).unwrap();
    println!(
        "\nrelabeled concepts: {:?} (was {:?})",
        relabeled.output_domain().names(),
        learned.output_domain().names()
    );
    for digit in 0..2 {
        let zero_pos = relabeled.output_domain().position("zero").unwrap();
        println!(
            "  digit={digit}: P(zero=1) = {}",
            relabeled.output_marginal(&[digit], zero_pos).unwrap()[1]
        );
    }
}
