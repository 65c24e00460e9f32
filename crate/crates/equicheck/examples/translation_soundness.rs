//! Sound and unsound sentence translations between two vocabularies.
//!
//! Run with: cargo run -p equicheck --example translation_soundness

use equicheck::fca::object_set;
use equicheck::generate::example4_contexts;
use equicheck::translation::{check_soundness, enumerate_sound_translations, TranslationMap};

fn main() {
    let (english, latin) = example4_contexts();
    let m_star = object_set(&["appler", "onered"]);

    // red -> rubrum lands back on the same objects: sound
    let rubrum = TranslationMap::new(&[("red", "rubrum")]);
    let cert = check_soundness(&english, &latin, &rubrum, &m_star).unwrap();
    println!("red→rubrum on {m_star:?}");
    println!("  intent      {:?}", cert.intent);
    println!("  translated  {:?}", cert.translated_intent);
    println!("  round trip  {:?}", cert.round_trip);
    println!("  sound       {}\n", cert.sound);

    // red -> unum picks out the ones instead: the triangle breaks
    let unum = TranslationMap::new(&[("red", "unum")]);
    let cert = check_soundness(&english, &latin, &unum, &m_star).unwrap();
    println!("red→unum on {m_star:?}");
    println!("  round trip  {:?}", cert.round_trip);
    println!("  sound       {}", cert.sound);
    println!("  diff        {:?}\n", cert.failure_diff);

    // exhaustive search over all candidate maps finds exactly one sound one
    let sound = enumerate_sound_translations(&english, &latin, &m_star, 6, 8).unwrap();
    println!("sound translations found: {}", sound.len());
    for tau in &sound {
        println!("  {:?}", tau.mapping);
    }
}
