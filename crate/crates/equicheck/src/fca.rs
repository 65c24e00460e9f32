//! Formal contexts, the derivation operators between object and sentence
//! sets, and exhaustive concept enumeration.
//!
//! A formal context is a finite incidence relation between objects and
//! sentences. The two derivation operators form a Galois connection:
//! [`derive_extent`] maps a sentence set to the objects satisfying all of
//! them, [`derive_intent`] maps an object set to the sentences all of them
//! satisfy. A concept is a pair closed under both, and
//! [`enumerate_concepts`] lists every closed pair in lectic order.
//!
//! Sentences are opaque labels: a compound like `one∧¬fruit` is a single
//! sentence id, never parsed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

/// A finite objects x sentences incidence relation.
///
/// The JSON form is `{"objects": [...], "sentences": [...], "incidence":
/// [[0,1,...], ...]}` with one row per object, in object order. Loading and
/// saving through [`FormalContext::from_json`] / [`FormalContext::to_json`]
/// is byte-stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawContext", into = "RawContext")]
pub struct FormalContext {
    objects: Vec<String>,
    sentences: Vec<String>,
    incidence: Vec<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct RawContext {
    objects: Vec<String>,
    sentences: Vec<String>,
    incidence: Vec<Vec<u8>>,
}

impl TryFrom<RawContext> for FormalContext {
    type Error = EngineError;
    fn try_from(raw: RawContext) -> Result<Self> {
        let incidence = raw
            .incidence
            .iter()
            .map(|row| row.iter().map(|&c| c != 0).collect())
            .collect();
        FormalContext::new(raw.objects, raw.sentences, incidence)
    }
}

impl From<FormalContext> for RawContext {
    fn from(ctx: FormalContext) -> RawContext {
        RawContext {
            objects: ctx.objects,
            sentences: ctx.sentences,
            incidence: ctx
                .incidence
                .iter()
                .map(|row| row.iter().map(|&b| u8::from(b)).collect())
                .collect(),
        }
    }
}

impl FormalContext {
    pub fn new(
        objects: Vec<String>,
        sentences: Vec<String>,
        incidence: Vec<Vec<bool>>,
    ) -> Result<Self> {
        for i in 1..objects.len() {
            if objects[..i].contains(&objects[i]) {
                return Err(EngineError::Structural(format!(
                    "duplicate object id '{}'",
                    objects[i]
                )));
            }
        }
        for i in 1..sentences.len() {
            if sentences[..i].contains(&sentences[i]) {
                return Err(EngineError::Structural(format!(
                    "duplicate sentence id '{}'",
                    sentences[i]
                )));
            }
        }
        if incidence.len() != objects.len() {
            return Err(EngineError::Structural(format!(
                "incidence has {} rows for {} objects",
                incidence.len(),
                objects.len()
            )));
        }
        for (i, row) in incidence.iter().enumerate() {
            if row.len() != sentences.len() {
                return Err(EngineError::Structural(format!(
                    "incidence row for object '{}' has {} entries for {} sentences",
                    objects[i],
                    row.len(),
                    sentences.len()
                )));
            }
        }
        Ok(FormalContext { objects, sentences, incidence })
    }

    /// Build from string slices and rows of 0/1 cells.
    pub fn from_rows(objects: &[&str], sentences: &[&str], rows: &[&[u8]]) -> Result<Self> {
        FormalContext::new(
            objects.iter().map(|s| s.to_string()).collect(),
            sentences.iter().map(|s| s.to_string()).collect(),
            rows.iter().map(|r| r.iter().map(|&c| c != 0).collect()).collect(),
        )
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    pub fn object_index(&self, id: &str) -> Result<usize> {
        self.objects
            .iter()
            .position(|o| o == id)
            .ok_or_else(|| EngineError::Domain(format!("unknown object id '{id}'")))
    }

    pub fn sentence_index(&self, id: &str) -> Result<usize> {
        self.sentences
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| EngineError::Domain(format!("unknown sentence id '{id}'")))
    }

    /// Whether object `obj` satisfies sentence `sent`.
    pub fn satisfies(&self, obj: &str, sent: &str) -> Result<bool> {
        Ok(self.incidence[self.object_index(obj)?][self.sentence_index(sent)?])
    }

    fn object_set(&self, ids: &BTreeSet<String>) -> Result<Vec<usize>> {
        ids.iter().map(|id| self.object_index(id)).collect()
    }

    fn sentence_set(&self, ids: &BTreeSet<String>) -> Result<Vec<usize>> {
        ids.iter().map(|id| self.sentence_index(id)).collect()
    }

    fn extent_indices(&self, sentence_idx: &[usize]) -> BTreeSet<usize> {
        (0..self.objects.len())
            .filter(|&o| sentence_idx.iter().all(|&s| self.incidence[o][s]))
            .collect()
    }

    fn intent_indices(&self, object_idx: &[usize]) -> BTreeSet<usize> {
        (0..self.sentences.len())
            .filter(|&s| object_idx.iter().all(|&o| self.incidence[o][s]))
            .collect()
    }

    fn object_names(&self, idx: &BTreeSet<usize>) -> BTreeSet<String> {
        idx.iter().map(|&i| self.objects[i].clone()).collect()
    }

    fn sentence_names(&self, idx: &BTreeSet<usize>) -> BTreeSet<String> {
        idx.iter().map(|&i| self.sentences[i].clone()).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("context serializes")
    }
}

/// An extent/intent pair closed under both derivation operators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptPair {
    pub extent: BTreeSet<String>,
    pub intent: BTreeSet<String>,
}

/// All objects satisfying every sentence in `intent`. Antitone in the
/// intent: adding a sentence can only shrink the result. The empty intent
/// yields every object.
pub fn derive_extent(ctx: &FormalContext, intent: &BTreeSet<String>) -> Result<BTreeSet<String>> {
    let idx = ctx.sentence_set(intent)?;
    Ok(ctx.object_names(&ctx.extent_indices(&idx)))
}

/// All sentences satisfied by every object in `extent`. The empty extent
/// yields every sentence.
pub fn derive_intent(ctx: &FormalContext, extent: &BTreeSet<String>) -> Result<BTreeSet<String>> {
    let idx = ctx.object_set(extent)?;
    Ok(ctx.sentence_names(&ctx.intent_indices(&idx)))
}

/// True iff both closure equalities hold: the intent derives exactly the
/// extent and the extent derives exactly the intent.
///
/// Note the strictness: a pair like `({red, zero}, {zerored})` in the worked
/// five-object context is rejected, because the sentences satisfied by
/// `zerored` also include `even`, so the closed intent is
/// `{red, zero, even}`.
pub fn is_concept(
    ctx: &FormalContext,
    intent: &BTreeSet<String>,
    extent: &BTreeSet<String>,
) -> Result<bool> {
    Ok(&derive_extent(ctx, intent)? == extent && &derive_intent(ctx, extent)? == intent)
}

/// Canonical closure of a sentence set: extent = objects satisfying the
/// set, intent = all sentences those objects share. The result always
/// passes [`is_concept`], and the operation is idempotent.
pub fn closure_of_intent(ctx: &FormalContext, intent: &BTreeSet<String>) -> Result<ConceptPair> {
    let extent = derive_extent(ctx, intent)?;
    let closed = derive_intent(ctx, &extent)?;
    Ok(ConceptPair { extent, intent: closed })
}

/// All Galois-closed pairs of the context, ordered by extent size and then
/// lexicographically by intent.
///
/// Enumeration runs in lectic order over closed intents (NextClosure), so
/// each concept is produced exactly once; the power-set closure method is
/// kept as the test oracle. Contexts with more sentences than `cap` are
/// rejected.
pub fn enumerate_concepts(ctx: &FormalContext, cap: usize) -> Result<Vec<ConceptPair>> {
    let n = ctx.sentences.len();
    if n > cap {
        return Err(EngineError::Resource(format!(
            "context has {} sentences, above the enumeration cap {} (raise it with --enum-cap)",
            n, cap
        )));
    }

    let close = |set: &BTreeSet<usize>| -> BTreeSet<usize> {
        let idx: Vec<usize> = set.iter().copied().collect();
        let extent: Vec<usize> = ctx.extent_indices(&idx).into_iter().collect();
        ctx.intent_indices(&extent)
    };

    let mut concepts = Vec::new();
    let mut current = close(&BTreeSet::new());
    loop {
        concepts.push(current.clone());
        match next_closed(n, &current, &close) {
            Some(next) => current = next,
            None => break,
        }
    }

    let mut out: Vec<ConceptPair> = concepts
        .into_iter()
        .map(|intent_idx| {
            let extent_idx = ctx.extent_indices(&intent_idx.iter().copied().collect::<Vec<_>>());
            ConceptPair {
                extent: ctx.object_names(&extent_idx),
                intent: ctx.sentence_names(&intent_idx),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.extent
            .len()
            .cmp(&b.extent.len())
            .then_with(|| a.intent.iter().cmp(b.intent.iter()))
    });
    Ok(out)
}

/// Smallest closed set lectically greater than `current`, or `None` when
/// `current` is the last one (the closure of the full sentence set).
fn next_closed(
    n: usize,
    current: &BTreeSet<usize>,
    close: &impl Fn(&BTreeSet<usize>) -> BTreeSet<usize>,
) -> Option<BTreeSet<usize>> {
    let mut a = current.clone();
    for i in (0..n).rev() {
        if a.contains(&i) {
            a.remove(&i);
        } else {
            let mut candidate = a.clone();
            candidate.insert(i);
            let closed = close(&candidate);
            // candidate is valid when the closure adds nothing below i
            if closed.iter().all(|&j| j >= i || a.contains(&j)) {
                return Some(closed);
            }
        }
    }
    None
}

/// Objects as a set helper.
pub fn object_set(ids: &[&str]) -> BTreeSet<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

/// Sentences as a set helper.
pub fn sentence_set(ids: &[&str]) -> BTreeSet<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::example1_context;

    /// Power-set closure oracle: close every subset of the sentences and
    /// deduplicate. Independent of the lectic enumeration path.
    pub(crate) fn powerset_concepts(ctx: &FormalContext) -> Vec<ConceptPair> {
        let n = ctx.sentences().len();
        assert!(n <= 16, "oracle only runs on small contexts");
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for mask in 0..(1usize << n) {
            let intent: BTreeSet<String> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| ctx.sentences()[i].clone())
                .collect();
            let pair = closure_of_intent(ctx, &intent).unwrap();
            if seen.insert((pair.extent.clone(), pair.intent.clone())) {
                out.push(pair);
            }
        }
        out.sort_by(|a, b| {
            a.extent
                .len()
                .cmp(&b.extent.len())
                .then_with(|| a.intent.iter().cmp(b.intent.iter()))
        });
        out
    }

    #[test]
    fn extent_of_red_lists_the_three_red_objects() {
        let ctx = example1_context();
        let m = derive_extent(&ctx, &sentence_set(&["red"])).unwrap();
        assert_eq!(m, object_set(&["appler", "onered", "zerored"]));
    }

    #[test]
    fn empty_intent_derives_all_objects() {
        let ctx = example1_context();
        let m = derive_extent(&ctx, &BTreeSet::new()).unwrap();
        assert_eq!(m.len(), ctx.objects().len());
    }

    #[test]
    fn extent_of_red_and_zero_is_zerored() {
        let ctx = example1_context();
        let m = derive_extent(&ctx, &sentence_set(&["red", "zero"])).unwrap();
        assert_eq!(m, object_set(&["zerored"]));
    }

    #[test]
    fn intent_of_red_extent_is_red() {
        let ctx = example1_context();
        let t = derive_intent(&ctx, &object_set(&["appler", "onered", "zerored"])).unwrap();
        assert_eq!(t, sentence_set(&["red"]));
    }

    #[test]
    fn empty_extent_derives_all_sentences() {
        let ctx = example1_context();
        let t = derive_intent(&ctx, &BTreeSet::new()).unwrap();
        assert_eq!(t.len(), ctx.sentences().len());
    }

    #[test]
    fn intent_of_zerored_row() {
        let ctx = example1_context();
        let t = derive_intent(&ctx, &object_set(&["zerored"])).unwrap();
        assert_eq!(t, sentence_set(&["red", "zero", "even"]));
    }

    #[test]
    fn red_pair_is_a_concept() {
        let ctx = example1_context();
        assert!(is_concept(
            &ctx,
            &sentence_set(&["red"]),
            &object_set(&["appler", "onered", "zerored"]),
        )
        .unwrap());
    }

    #[test]
    fn adding_zeroblue_breaks_closure() {
        let ctx = example1_context();
        assert!(!is_concept(
            &ctx,
            &sentence_set(&["red"]),
            &object_set(&["appler", "onered", "zerored", "zeroblue"]),
        )
        .unwrap());
    }

    #[test]
    fn red_zero_with_zerored_is_not_closed() {
        // The closed intent of {zerored} is {red, zero, even}, so the pair
        // ({red, zero}, {zerored}) fails the intent equality.
        let ctx = example1_context();
        assert!(!is_concept(&ctx, &sentence_set(&["red", "zero"]), &object_set(&["zerored"]))
            .unwrap());
        let closed = closure_of_intent(&ctx, &sentence_set(&["red", "zero"])).unwrap();
        assert_eq!(closed.extent, object_set(&["zerored"]));
        assert_eq!(closed.intent, sentence_set(&["red", "zero", "even"]));
    }

    #[test]
    fn closure_of_red_is_fixed_point() {
        let ctx = example1_context();
        let pair = closure_of_intent(&ctx, &sentence_set(&["red"])).unwrap();
        assert_eq!(pair.extent, object_set(&["appler", "onered", "zerored"]));
        assert_eq!(pair.intent, sentence_set(&["red"]));
        assert!(is_concept(&ctx, &pair.intent, &pair.extent).unwrap());
    }

    #[test]
    fn closure_of_empty_intent_is_top() {
        let ctx = example1_context();
        let pair = closure_of_intent(&ctx, &BTreeSet::new()).unwrap();
        assert_eq!(pair.extent.len(), 5);
        assert!(pair.intent.is_empty());
    }

    #[test]
    fn unknown_sentence_is_domain_error() {
        let ctx = example1_context();
        let err = derive_extent(&ctx, &sentence_set(&["viridis"]));
        match err {
            Err(EngineError::Domain(msg)) => assert!(msg.contains("viridis")),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_object_is_domain_error() {
        let ctx = example1_context();
        assert!(matches!(
            derive_intent(&ctx, &object_set(&["pear"])),
            Err(EngineError::Domain(_))
        ));
    }

    #[test]
    fn empty_context_has_single_degenerate_concept() {
        let ctx = FormalContext::from_rows(&[], &[], &[]).unwrap();
        let concepts = enumerate_concepts(&ctx, 20).unwrap();
        assert_eq!(concepts.len(), 1);
        assert!(concepts[0].extent.is_empty());
        assert!(concepts[0].intent.is_empty());
    }

    #[test]
    fn one_object_one_sentence_full_incidence() {
        let ctx = FormalContext::from_rows(&["w"], &["p"], &[&[1]]).unwrap();
        let concepts = enumerate_concepts(&ctx, 20).unwrap();
        assert_eq!(concepts, powerset_concepts(&ctx));
        // top and bottom closures coincide with ({w}, {p}) here
        assert_eq!(concepts.len(), 1);
        assert_eq!(concepts[0].extent, object_set(&["w"]));
        assert_eq!(concepts[0].intent, sentence_set(&["p"]));
    }

    #[test]
    fn example1_concepts_match_powerset_oracle() {
        let ctx = example1_context();
        let concepts = enumerate_concepts(&ctx, 20).unwrap();
        let oracle = powerset_concepts(&ctx);
        assert_eq!(concepts, oracle);
        assert_eq!(concepts.len(), 7);
        // closed pairs frozen from the oracle
        assert_eq!(concepts[0].extent.len(), 0);
        assert_eq!(concepts[0].intent.len(), 4);
        assert!(concepts
            .iter()
            .any(|c| c.extent == object_set(&["zerored"])
                && c.intent == sentence_set(&["red", "zero", "even"])));
        assert!(concepts
            .iter()
            .any(|c| c.extent == object_set(&["zeroblue", "zerored"])
                && c.intent == sentence_set(&["zero", "even"])));
        assert_eq!(concepts[6].extent.len(), 5);
        assert!(concepts[6].intent.is_empty());
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let sentences: Vec<String> = (0..21).map(|i| format!("s{i}")).collect();
        let refs: Vec<&str> = sentences.iter().map(|s| s.as_str()).collect();
        let row = vec![1u8; 21];
        let ctx = FormalContext::from_rows(&["w"], &refs, &[&row]).unwrap();
        match enumerate_concepts(&ctx, 20) {
            Err(EngineError::Resource(msg)) => assert!(msg.contains("--enum-cap")),
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn context_json_round_trip_is_byte_stable() {
        let ctx = example1_context();
        let text = ctx.to_json();
        let reloaded = FormalContext::from_json(&text).unwrap();
        assert_eq!(reloaded, ctx);
        assert_eq!(reloaded.to_json(), text);
    }

    #[test]
    fn ragged_incidence_rejected() {
        let raw = r#"{"objects":["a","b"],"sentences":["p"],"incidence":[[1],[0,1]]}"#;
        assert!(FormalContext::from_json(raw).is_err());
    }
}
