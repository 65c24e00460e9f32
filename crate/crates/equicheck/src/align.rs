//! Reasoning-shortcut detection and probe-based post-hoc alignment of
//! learned concepts to reference concepts.
//!
//! A shortcut exists when several sound translations are indistinguishable
//! on the data. Alignment searches injective matchings (with optional
//! per-concept polarity flips, since shortcut concepts routinely carry the
//! opposite meaning) minimizing the expected total-variation divergence
//! between matched concept posteriors. Ties at the minimum mean the
//! matching is not identifiable.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};
use crate::fca::FormalContext;
use crate::process::ProcessDiagram;
use crate::tabular::{JointDistribution, TabularStochasticMap};
use crate::translation::{enumerate_sound_translations, TranslationMap};

/// One matched pair: a learned concept, its reference concept, and whether
/// the learned polarity is flipped relative to the reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub learned: String,
    pub reference: String,
    pub flipped: bool,
}

/// Outcome of a probe alignment. `identifiable` is false when more than one
/// matching attains the minimum divergence within the tie tolerance; the
/// lexicographically least matching is returned either way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub matching: Vec<MatchEntry>,
    pub divergence: f64,
    pub identifiable: bool,
}

impl AlignmentResult {
    /// Identity alignment over concept names.
    pub fn identity(names: &[String]) -> Self {
        AlignmentResult {
            matching: names
                .iter()
                .map(|n| MatchEntry { learned: n.clone(), reference: n.clone(), flipped: false })
                .collect(),
            divergence: 0.0,
            identifiable: true,
        }
    }

    pub fn entry_for(&self, learned: &str) -> Result<&MatchEntry> {
        self.matching
            .iter()
            .find(|e| e.learned == learned)
            .ok_or_else(|| EngineError::Contract(format!("no matching entry for '{learned}'")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("alignment serializes")
    }
}

/// Report of a shortcut scan: the sound translations found between the two
/// contexts on `m_star`, flagged when at least two exist.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShortcutReport {
    pub sound_translations: Vec<TranslationMap>,
    pub shortcut: bool,
}

/// Enumerates sound translations and flags a reasoning shortcut when they
/// are not unique.
pub fn detect_reasoning_shortcuts(
    ctx_a: &FormalContext,
    ctx_b: &FormalContext,
    m_star: &BTreeSet<String>,
    domain_cap: usize,
    target_cap: usize,
) -> Result<ShortcutReport> {
    let sound = enumerate_sound_translations(ctx_a, ctx_b, m_star, domain_cap, target_cap)?;
    Ok(ShortcutReport { shortcut: sound.len() >= 2, sound_translations: sound })
}

/// An explicit finite distribution over candidate translations. The
/// blueprint's alignment stage draws from one of these; uniform over the
/// sound translations of a shortcut report is the usual construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedTranslations {
    pub entries: Vec<(TranslationMap, f64)>,
}

impl WeightedTranslations {
    pub fn uniform(maps: Vec<TranslationMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(EngineError::Contract(
                "a translation distribution needs at least one candidate".into(),
            ));
        }
        let w = 1.0 / maps.len() as f64;
        Ok(WeightedTranslations { entries: maps.into_iter().map(|m| (m, w)).collect() })
    }

    /// Deterministic inverse-CDF pick in `[0, 1)`.
    pub fn pick(&self, u: f64) -> Result<&TranslationMap> {
        let total: f64 = self.entries.iter().map(|(_, w)| *w).sum();
        if total <= 0.0 {
            return Err(EngineError::Contract("translation weights sum to zero".into()));
        }
        let mut acc = 0.0;
        for (map, w) in &self.entries {
            acc += w / total;
            if u < acc {
                return Ok(map);
            }
        }
        Ok(&self.entries.last().expect("nonempty").0)
    }
}

struct CostMatrix {
    /// cost[i][j][flip] = E_x TV(learned_i, reference_j under flip)
    cost: Vec<Vec<[f64; 2]>>,
    learned: Vec<String>,
    reference: Vec<String>,
}

fn build_costs(
    learned: &TabularStochasticMap,
    reference: &TabularStochasticMap,
    x_dist: &JointDistribution,
) -> Result<CostMatrix> {
    if !learned.input_domain().same_shape(reference.input_domain()) {
        return Err(EngineError::Contract(
            "learned and reference encoders must share the input domain".into(),
        ));
    }
    if !x_dist.domain().same_shape(learned.input_domain()) {
        return Err(EngineError::Contract(
            "input distribution does not match the encoder input domain".into(),
        ));
    }
    let k_l = learned.output_domain().len();
    let k_r = reference.output_domain().len();
    if k_l != k_r {
        return Err(EngineError::Contract(format!(
            "learned has {k_l} concepts, reference has {k_r}; partial matching is out of scope"
        )));
    }
    for v in learned
        .output_domain()
        .variables()
        .iter()
        .chain(reference.output_domain().variables())
    {
        if v.card != 2 {
            return Err(EngineError::Contract(format!(
                "probe alignment needs binary concepts; '{}' has cardinality {}",
                v.name, v.card
            )));
        }
    }

    let mut cost = vec![vec![[0.0f64; 2]; k_r]; k_l];
    for (idx, &px) in x_dist.probabilities().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let x = x_dist.domain().assignment_at(idx);
        for (i, row) in cost.iter_mut().enumerate() {
            let p_l = learned.output_marginal(&x, i)?[1];
            for (j, cell) in row.iter_mut().enumerate() {
                let p_r = reference.output_marginal(&x, j)?[1];
                // TV between two Bernoullis is |p - q|
                cell[0] += px * (p_l - p_r).abs();
                cell[1] += px * (p_l - (1.0 - p_r)).abs();
            }
        }
    }
    Ok(CostMatrix {
        cost,
        learned: learned.output_domain().names().iter().map(|s| s.to_string()).collect(),
        reference: reference.output_domain().names().iter().map(|s| s.to_string()).collect(),
    })
}

/// Candidate enumeration order: learned concepts sorted by name; reference
/// permutations in lexicographic order of reference names; flips counted
/// binary with unflipped first. The first minimizer in this order is the
/// lexicographically least one.
fn exhaustive_search(c: &CostMatrix, tie_tol: f64) -> (Vec<MatchEntry>, f64, bool) {
    let k = c.learned.len();
    let mut learned_order: Vec<usize> = (0..k).collect();
    learned_order.sort_by(|&a, &b| c.learned[a].cmp(&c.learned[b]));
    let mut ref_order: Vec<usize> = (0..k).collect();
    ref_order.sort_by(|&a, &b| c.reference[a].cmp(&c.reference[b]));

    let mut best: Option<(Vec<usize>, Vec<bool>, f64)> = None;
    let mut ties = 0usize;

    let mut perm: Vec<usize> = (0..k).collect(); // indices into ref_order
    loop {
        for flips in 0..(1usize << k) {
            let mut total = 0.0;
            for (slot, &ri) in perm.iter().enumerate() {
                let li = learned_order[slot];
                let rj = ref_order[ri];
                let f = (flips >> (k - 1 - slot)) & 1;
                total += c.cost[li][rj][f];
            }
            let total = total / k as f64;
            match &best {
                None => {
                    best = Some((perm.clone(), flip_vec(flips, k), total));
                    ties = 1;
                }
                Some((_, _, b)) => {
                    if total < b - tie_tol {
                        best = Some((perm.clone(), flip_vec(flips, k), total));
                        ties = 1;
                    } else if (total - b).abs() <= tie_tol {
                        ties += 1;
                    }
                }
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }

    let (perm, flips, divergence) = best.expect("k >= 1");
    let matching = learned_order
        .iter()
        .enumerate()
        .map(|(slot, &li)| MatchEntry {
            learned: c.learned[li].clone(),
            reference: c.reference[ref_order[perm[slot]]].clone(),
            flipped: flips[slot],
        })
        .collect();
    (matching, divergence, ties == 1)
}

fn flip_vec(flips: usize, k: usize) -> Vec<bool> {
    (0..k).map(|slot| (flips >> (k - 1 - slot)) & 1 == 1).collect()
}

/// Standard next-permutation in lexicographic order.
fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Greedy fallback for large concept counts: repeatedly assign the cheapest
/// remaining (learned, reference, flip) triple, restarting from each
/// learned concept as the seed and keeping the best. Identifiability is
/// best-effort here; the exhaustive path is the oracle.
fn greedy_search(c: &CostMatrix, tie_tol: f64) -> (Vec<MatchEntry>, f64, bool) {
    let k = c.learned.len();
    let mut best: Option<(Vec<MatchEntry>, f64)> = None;
    let mut tie_seen = false;
    for start in 0..k {
        let mut order: Vec<usize> = (0..k).collect();
        order.rotate_left(start);
        let mut taken = vec![false; k];
        let mut entries = Vec::with_capacity(k);
        let mut total = 0.0;
        for &li in &order {
            let mut pick: Option<(usize, usize, f64)> = None;
            for (rj, &used) in taken.iter().enumerate() {
                if used {
                    continue;
                }
                for f in 0..2 {
                    let v = c.cost[li][rj][f];
                    if pick.is_none_or(|(_, _, b)| v < b) {
                        pick = Some((rj, f, v));
                    }
                }
            }
            let (rj, f, v) = pick.expect("one reference left per learned concept");
            taken[rj] = true;
            total += v;
            entries.push(MatchEntry {
                learned: c.learned[li].clone(),
                reference: c.reference[rj].clone(),
                flipped: f == 1,
            });
        }
        let total = total / k as f64;
        entries.sort_by(|a, b| a.learned.cmp(&b.learned));
        match &best {
            None => best = Some((entries, total)),
            Some((prev, b)) => {
                if total < b - tie_tol {
                    best = Some((entries, total));
                    tie_seen = false;
                } else if (total - b).abs() <= tie_tol && &entries != prev {
                    tie_seen = true;
                }
            }
        }
    }
    let (matching, divergence) = best.expect("k >= 1");
    (matching, divergence, !tie_seen)
}

/// Matches each learned concept to a reference concept (with optional
/// polarity flip) minimizing the expected per-concept total-variation
/// divergence under `x_dist`, averaged over concepts.
///
/// Exhaustive for concept counts up to `exhaustive_max`, greedy with
/// restarts above. Requires equal concept counts and binary concepts.
pub fn probe_align(
    learned: &TabularStochasticMap,
    reference: &TabularStochasticMap,
    x_dist: &JointDistribution,
    exhaustive_max: usize,
    tie_tol: f64,
) -> Result<AlignmentResult> {
    let costs = build_costs(learned, reference, x_dist)?;
    if costs.learned.is_empty() {
        return Err(EngineError::Contract("encoders expose no concepts".into()));
    }
    let (matching, divergence, identifiable) = if costs.learned.len() <= exhaustive_max {
        exhaustive_search(&costs, tie_tol)
    } else {
        greedy_search(&costs, tie_tol)
    };
    Ok(AlignmentResult { matching, divergence, identifiable })
}

/// Renames an encoder's concept outputs to their matched reference names
/// and applies polarity flips, so that after relabeling `P(C=1)` reads as
/// the old `P(C=0)` for flipped concepts. Evaluation semantics are
/// unchanged up to the renaming.
pub fn relabel_encoder(
    encoder: &TabularStochasticMap,
    result: &AlignmentResult,
) -> Result<TabularStochasticMap> {
    let out_domain = encoder.output_domain();
    let mut new_names = Vec::with_capacity(out_domain.len());
    let mut flip = Vec::with_capacity(out_domain.len());
    for v in out_domain.variables() {
        let entry = result.entry_for(&v.name).map_err(|_| {
            EngineError::Contract(format!(
                "alignment does not cover concept '{}'; relabel needs a complete matching",
                v.name
            ))
        })?;
        if v.card != 2 && entry.flipped {
            return Err(EngineError::Contract(format!(
                "cannot flip non-binary concept '{}'",
                v.name
            )));
        }
        new_names.push(entry.reference.clone());
        flip.push(entry.flipped);
    }
    let renamed = encoder.renamed(None, Some(&new_names))?;
    if flip.iter().all(|f| !f) {
        return Ok(renamed);
    }
    // permute output columns: flipped coordinates swap value 0 and 1
    let out = renamed.output_domain().clone();
    let n_out = out.case_count() as usize;
    let mut perm = vec![0usize; n_out];
    for (i, item) in perm.iter_mut().enumerate() {
        let mut a = out.assignment_at(i);
        for (coord, f) in flip.iter().enumerate() {
            if *f {
                a[coord] = 1 - a[coord];
            }
        }
        *item = out.index_of(&a)?;
    }
    let rows = renamed
        .rows()
        .iter()
        .map(|row| {
            let mut new_row = vec![0.0; n_out];
            for (i, &p) in row.iter().enumerate() {
                new_row[perm[i]] += p;
            }
            new_row
        })
        .collect();
    TabularStochasticMap::new(renamed.input_domain().clone(), out, rows)
}

/// Relabels concept wires of a process diagram: wires named by learned
/// concepts take their matched reference names; flipped binary wires have
/// their producer output and every consumer input axis inverted, leaving
/// end-to-end semantics unchanged under renamed queries.
pub fn relabel_diagram(
    diagram: &ProcessDiagram,
    result: &AlignmentResult,
) -> Result<ProcessDiagram> {
    use crate::process::{Node, NodeKind};
    let rename = |w: &str| -> String {
        result
            .matching
            .iter()
            .find(|e| e.learned == w)
            .map(|e| e.reference.clone())
            .unwrap_or_else(|| w.to_string())
    };
    let flipped = |w: &str| -> bool {
        result.matching.iter().any(|e| e.learned == w && e.flipped)
    };
    let flip_output = |t: &TabularStochasticMap| -> Result<TabularStochasticMap> {
        let rows = t
            .rows()
            .iter()
            .map(|r| {
                let mut rr = r.clone();
                rr.reverse();
                rr
            })
            .collect();
        TabularStochasticMap::new(t.input_domain().clone(), t.output_domain().clone(), rows)
    };
    let flip_input_axis = |t: &TabularStochasticMap, axis: usize| -> Result<TabularStochasticMap> {
        let dom = t.input_domain().clone();
        let n = dom.case_count() as usize;
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            let mut a = dom.assignment_at(i);
            a[axis] = 1 - a[axis];
            rows[dom.index_of(&a)?] = t.rows()[i].clone();
        }
        TabularStochasticMap::new(dom, t.output_domain().clone(), rows)
    };

    let mut nodes = Vec::with_capacity(diagram.nodes().len());
    for node in diagram.nodes() {
        let kind = match &node.kind {
            NodeKind::Box { table, inputs, output } => {
                let mut t = table.clone();
                if flipped(output) {
                    if diagram.wire_card(output)? != 2 {
                        return Err(EngineError::Contract(format!(
                            "cannot flip non-binary wire '{output}'"
                        )));
                    }
                    t = flip_output(&t)?;
                }
                for (axis, w) in inputs.iter().enumerate() {
                    if flipped(w) {
                        t = flip_input_axis(&t, axis)?;
                    }
                }
                NodeKind::Box {
                    table: t,
                    inputs: inputs.iter().map(|w| rename(w)).collect(),
                    output: rename(output),
                }
            }
            NodeKind::Copy { input, outputs } => NodeKind::Copy {
                input: rename(input),
                outputs: [rename(&outputs[0]), rename(&outputs[1])],
            },
            NodeKind::Discard { input } => NodeKind::Discard { input: rename(input) },
            NodeKind::Constant { output, dist } => {
                let mut d = dist.clone();
                if flipped(output) {
                    d.reverse();
                }
                NodeKind::Constant { output: rename(output), dist: d }
            }
        };
        nodes.push(Node { id: node.id.clone(), kind });
    }
    let free_inputs = diagram
        .free_inputs()
        .iter()
        .map(|v| {
            let mut nv = v.clone();
            nv.name = rename(&v.name);
            nv
        })
        .collect();
    let outputs = diagram.outputs().iter().map(|w| rename(w)).collect();
    ProcessDiagram::new(free_inputs, nodes, outputs)
}
