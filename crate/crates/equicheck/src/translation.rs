//! Sentence-to-sentence translation maps and closure-preserving soundness.
//!
//! A translation is sound on a nonempty object set `M*` shared by two
//! contexts when deriving the intent of `M*` in the source context,
//! translating it, and deriving the extent of the image in the target
//! context lands back on `M*` exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::fca::{derive_extent, derive_intent, FormalContext};

/// A total sentence map, serialized as `{"mapping": {"red": "rubrum"}}`.
///
/// The source sentence set is the key set; totality on any particular
/// sentence set is checked when the map is applied. Partial dictionaries
/// are rejected at application time, naming the unmapped sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationMap {
    pub mapping: BTreeMap<String, String>,
}

impl TranslationMap {
    pub fn new(pairs: &[(&str, &str)]) -> Self {
        TranslationMap {
            mapping: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    /// Identity map on the given sentences.
    pub fn identity(sentences: &[String]) -> Self {
        TranslationMap {
            mapping: sentences.iter().map(|s| (s.clone(), s.clone())).collect(),
        }
    }

    pub fn source_sentences(&self) -> BTreeSet<String> {
        self.mapping.keys().cloned().collect()
    }

    pub fn image(&self) -> BTreeSet<String> {
        self.mapping.values().cloned().collect()
    }

    pub fn get(&self, sentence: &str) -> Result<&str> {
        self.mapping
            .get(sentence)
            .map(|s| s.as_str())
            .ok_or_else(|| EngineError::Domain(format!("sentence '{sentence}' is not mapped")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("translation serializes")
    }
}

/// Image of a sentence set under the map, deduplicated. Every sentence must
/// be mapped.
pub fn apply_translation(
    tau: &TranslationMap,
    sentences: &BTreeSet<String>,
) -> Result<BTreeSet<String>> {
    sentences.iter().map(|s| tau.get(s).map(str::to_string)).collect()
}

/// Outcome of a soundness check on one object set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessCertificate {
    pub sound: bool,
    /// The object set the triangle was checked on.
    pub witness_objects: BTreeSet<String>,
    /// Source intent of the witness objects.
    pub intent: BTreeSet<String>,
    /// Translated intent.
    pub translated_intent: BTreeSet<String>,
    /// Extent of the translated intent in the target context.
    pub round_trip: BTreeSet<String>,
    /// Symmetric difference between the round trip and the witness objects;
    /// empty iff sound.
    pub failure_diff: BTreeSet<String>,
}

/// Checks that `tau` preserves concept closure on `m_star`: compute the
/// intent of `m_star` in `ctx_a`, translate it, and derive its extent in
/// `ctx_b`. Sound iff that extent equals `m_star`.
///
/// Both contexts must index objects from the same id space; `m_star` must be
/// nonempty and present in both.
pub fn check_soundness(
    ctx_a: &FormalContext,
    ctx_b: &FormalContext,
    tau: &TranslationMap,
    m_star: &BTreeSet<String>,
) -> Result<SoundnessCertificate> {
    if m_star.is_empty() {
        return Err(EngineError::Precondition(
            "soundness requires a nonempty object set M*".into(),
        ));
    }
    for obj in m_star {
        ctx_a.object_index(obj)?;
        ctx_b.object_index(obj)?;
    }
    let intent = derive_intent(ctx_a, m_star)?;
    let translated_intent = apply_translation(tau, &intent)?;
    let round_trip = derive_extent(ctx_b, &translated_intent)?;
    let failure_diff: BTreeSet<String> =
        round_trip.symmetric_difference(m_star).cloned().collect();
    Ok(SoundnessCertificate {
        sound: failure_diff.is_empty(),
        witness_objects: m_star.clone(),
        intent,
        translated_intent,
        round_trip,
        failure_diff,
    })
}

/// Convenience sweep: check soundness of `tau` on every concept extent of
/// `ctx_a` (the empty extent is skipped since soundness is defined on
/// nonempty sets).
pub fn check_soundness_on_all_extents(
    ctx_a: &FormalContext,
    ctx_b: &FormalContext,
    tau: &TranslationMap,
    enum_cap: usize,
) -> Result<Vec<SoundnessCertificate>> {
    let concepts = crate::fca::enumerate_concepts(ctx_a, enum_cap)?;
    let mut out = Vec::new();
    for c in concepts {
        if c.extent.is_empty() {
            continue;
        }
        out.push(check_soundness(ctx_a, ctx_b, tau, &c.extent)?);
    }
    Ok(out)
}

/// All total maps from the intent of `m_star` in `ctx_a` into the sentences
/// of `ctx_b` that pass [`check_soundness`], in lexicographic order of their
/// mapping tables.
///
/// The search is exhaustive over `|S'|^|T|` candidates, so both sizes are
/// capped.
pub fn enumerate_sound_translations(
    ctx_a: &FormalContext,
    ctx_b: &FormalContext,
    m_star: &BTreeSet<String>,
    domain_cap: usize,
    target_cap: usize,
) -> Result<Vec<TranslationMap>> {
    if m_star.is_empty() {
        return Err(EngineError::Precondition(
            "soundness requires a nonempty object set M*".into(),
        ));
    }
    let intent: Vec<String> = derive_intent(ctx_a, m_star)?.into_iter().collect();
    let targets = ctx_b.sentences();
    if intent.len() > domain_cap {
        return Err(EngineError::Resource(format!(
            "source intent has {} sentences, above the cap {}",
            intent.len(),
            domain_cap
        )));
    }
    if targets.len() > target_cap {
        return Err(EngineError::Resource(format!(
            "target context has {} sentences, above the cap {}",
            targets.len(),
            target_cap
        )));
    }
    if intent.is_empty() {
        // The empty map: sound iff the target round trip of the empty
        // intent (all objects of ctx_b) equals m_star.
        let tau = TranslationMap { mapping: BTreeMap::new() };
        let cert = check_soundness(ctx_a, ctx_b, &tau, m_star)?;
        return Ok(if cert.sound { vec![tau] } else { Vec::new() });
    }
    if targets.is_empty() {
        return Ok(Vec::new());
    }

    let mut out = Vec::new();
    let mut choice = vec![0usize; intent.len()];
    loop {
        let tau = TranslationMap {
            mapping: intent
                .iter()
                .zip(&choice)
                .map(|(s, &t)| (s.clone(), targets[t].clone()))
                .collect(),
        };
        if check_soundness(ctx_a, ctx_b, &tau, m_star)?.sound {
            out.push(tau);
        }
        // odometer over target choices
        let mut pos = intent.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < targets.len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}
