//! Finite group actions on input and concept assignment spaces, with
//! invariance/equivariance checks and leakage witness scans.
//!
//! Actions are explicit permutation tables over lexicographic assignment
//! order, not symbolic transforms, so every check is a finite sweep. Group
//! validation is advisory: arbitrary action sets (e.g. a bag of data
//! augmentations) are allowed, with a validity report instead of an error.

use serde::{Deserialize, Serialize};

use crate::domain::{total_variation, Assignment, FiniteDomain};
use crate::error::{EngineError, Result};
use crate::tabular::TabularStochasticMap;

/// A named action: a permutation of the input assignment space, optionally
/// paired with a permutation of the concept assignment space describing how
/// concept labels move.
///
/// JSON form: `{"name": ..., "input_perm": [...], "concept_perm": [...]}`
/// with permutations as index arrays over lexicographic assignment order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAction", into = "RawAction")]
pub struct FiniteAction {
    pub name: String,
    input_perm: Vec<usize>,
    concept_perm: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawAction {
    name: String,
    input_perm: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    concept_perm: Option<Vec<usize>>,
}

impl TryFrom<RawAction> for FiniteAction {
    type Error = EngineError;
    fn try_from(raw: RawAction) -> Result<Self> {
        FiniteAction::new(raw.name, raw.input_perm, raw.concept_perm)
    }
}

impl From<FiniteAction> for RawAction {
    fn from(a: FiniteAction) -> RawAction {
        RawAction { name: a.name, input_perm: a.input_perm, concept_perm: a.concept_perm }
    }
}

fn check_bijection(perm: &[usize], what: &str) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(EngineError::Structural(format!(
                "{what} is not a permutation of 0..{}",
                perm.len()
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

impl FiniteAction {
    pub fn new(
        name: impl Into<String>,
        input_perm: Vec<usize>,
        concept_perm: Option<Vec<usize>>,
    ) -> Result<Self> {
        let name = name.into();
        check_bijection(&input_perm, &format!("input map of action '{name}'"))?;
        if let Some(cp) = &concept_perm {
            check_bijection(cp, &format!("concept map of action '{name}'"))?;
        }
        Ok(FiniteAction { name, input_perm, concept_perm })
    }

    /// The identity action on given space sizes.
    pub fn identity(name: impl Into<String>, n_input: usize, n_concept: Option<usize>) -> Self {
        FiniteAction {
            name: name.into(),
            input_perm: (0..n_input).collect(),
            concept_perm: n_concept.map(|n| (0..n).collect()),
        }
    }

    pub fn input_perm(&self) -> &[usize] {
        &self.input_perm
    }

    pub fn concept_perm(&self) -> Option<&[usize]> {
        self.concept_perm.as_deref()
    }

    pub fn is_identity(&self) -> bool {
        self.input_perm.iter().enumerate().all(|(i, &p)| i == p)
            && self
                .concept_perm
                .as_ref()
                .is_none_or(|cp| cp.iter().enumerate().all(|(i, &p)| i == p))
    }

    /// `b · x` on an assignment of `domain`.
    pub fn apply(&self, domain: &FiniteDomain, x: &[usize]) -> Result<Assignment> {
        let i = domain.index_of(x)?;
        if i >= self.input_perm.len() {
            return Err(EngineError::Contract(format!(
                "action '{}' covers {} assignments, domain has more",
                self.name,
                self.input_perm.len()
            )));
        }
        Ok(domain.assignment_at(self.input_perm[i]))
    }

    /// Pushforward of a concept distribution through the concept map.
    pub fn push_concepts(&self, dist: &[f64]) -> Result<Vec<f64>> {
        let cp = self.concept_perm.as_ref().ok_or_else(|| {
            EngineError::Contract(format!(
                "action '{}' declares no concept map; equivariance needs one",
                self.name
            ))
        })?;
        if cp.len() != dist.len() {
            return Err(EngineError::Contract(format!(
                "concept map of '{}' covers {} assignments, distribution has {}",
                self.name,
                cp.len(),
                dist.len()
            )));
        }
        let mut out = vec![0.0; dist.len()];
        for (i, &p) in dist.iter().enumerate() {
            out[cp[i]] += p;
        }
        Ok(out)
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &FiniteAction) -> Result<FiniteAction> {
        if self.input_perm.len() != other.input_perm.len() {
            return Err(EngineError::Contract("actions act on different spaces".into()));
        }
        let input_perm: Vec<usize> =
            other.input_perm.iter().map(|&i| self.input_perm[i]).collect();
        let concept_perm = match (&self.concept_perm, &other.concept_perm) {
            (Some(a), Some(b)) if a.len() == b.len() => {
                Some(b.iter().map(|&i| a[i]).collect())
            }
            (None, None) => None,
            _ => None,
        };
        FiniteAction::new(format!("{}∘{}", self.name, other.name), input_perm, concept_perm)
    }

    fn inverse_input(&self) -> Vec<usize> {
        let mut inv = vec![0usize; self.input_perm.len()];
        for (i, &p) in self.input_perm.iter().enumerate() {
            inv[p] = i;
        }
        inv
    }
}

/// A set of actions intended to form a group under composition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSet {
    pub actions: Vec<FiniteAction>,
}

impl ActionSet {
    pub fn new(actions: Vec<FiniteAction>) -> Self {
        ActionSet { actions }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("action set serializes")
    }
}

/// Group-axiom report: identity presence, closure under composition, and
/// inverse membership, checked on the input permutations (and concept
/// permutations when all actions declare one). Advisory, never an error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupValidation {
    pub valid: bool,
    pub has_identity: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<String>,
}

pub fn validate_group(set: &ActionSet) -> GroupValidation {
    let perms: Vec<&[usize]> = set.actions.iter().map(|a| a.input_perm()).collect();
    if perms.is_empty() {
        return GroupValidation {
            valid: false,
            has_identity: false,
            first_violation: Some("action set is empty".into()),
        };
    }
    let n = perms[0].len();
    if perms.iter().any(|p| p.len() != n) {
        return GroupValidation {
            valid: false,
            has_identity: false,
            first_violation: Some("actions act on different spaces".into()),
        };
    }
    let has_identity = set.actions.iter().any(|a| a.is_identity());
    if !has_identity {
        return GroupValidation {
            valid: false,
            has_identity: false,
            first_violation: Some("identity action missing".into()),
        };
    }
    let member = |perm: &[usize]| perms.contains(&perm);
    for a in &set.actions {
        for b in &set.actions {
            let composed: Vec<usize> = b.input_perm().iter().map(|&i| a.input_perm()[i]).collect();
            if !member(&composed) {
                return GroupValidation {
                    valid: false,
                    has_identity,
                    first_violation: Some(format!(
                        "closure violation: '{}∘{}' is not in the set",
                        a.name, b.name
                    )),
                };
            }
        }
    }
    for a in &set.actions {
        if !member(&a.inverse_input()) {
            return GroupValidation {
                valid: false,
                has_identity,
                first_violation: Some(format!("inverse of '{}' is not in the set", a.name)),
            };
        }
    }
    GroupValidation { valid: true, has_identity, first_violation: None }
}

/// A failing case of an invariance or equivariance sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionWitness {
    pub input: Assignment,
    pub moved_input: Assignment,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub tv: f64,
}

/// Result of sweeping one action over the input domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCheckReport {
    pub action: String,
    pub checked: u64,
    pub holds: bool,
    pub witnesses: Vec<ActionWitness>,
}

/// Concept invariance: `g(b·x) = g(x)` for every input. The action's
/// concept map, if any, is ignored — this is the identity-on-concepts
/// diagram.
pub fn check_invariance(
    g: &TabularStochasticMap,
    action: &FiniteAction,
    tv_tol: f64,
) -> Result<ActionCheckReport> {
    sweep_action(g, action, false, tv_tol)
}

/// Concept equivariance: `g(b·x) = ρ(b)·g(x)` for every input. Requires the
/// action to declare a concept map.
pub fn check_equivariance(
    g: &TabularStochasticMap,
    action: &FiniteAction,
    tv_tol: f64,
) -> Result<ActionCheckReport> {
    if action.concept_perm().is_none() {
        return Err(EngineError::Contract(format!(
            "action '{}' declares no concept map; equivariance needs one",
            action.name
        )));
    }
    sweep_action(g, action, true, tv_tol)
}

fn sweep_action(
    g: &TabularStochasticMap,
    action: &FiniteAction,
    push: bool,
    tv_tol: f64,
) -> Result<ActionCheckReport> {
    let domain = g.input_domain();
    let n = domain.size_capped(1 << 22)?;
    if action.input_perm().len() != n {
        return Err(EngineError::Contract(format!(
            "action '{}' covers {} assignments, domain has {n}",
            action.name,
            action.input_perm().len()
        )));
    }
    let mut witnesses = Vec::new();
    for x in domain.assignments() {
        let moved = action.apply(domain, &x)?;
        let lhs = g.row(&moved)?.to_vec();
        let rhs = if push {
            action.push_concepts(g.row(&x)?)?
        } else {
            g.row(&x)?.to_vec()
        };
        let tv = total_variation(&lhs, &rhs);
        if tv > tv_tol {
            witnesses.push(ActionWitness { input: x, moved_input: moved, lhs, rhs, tv });
        }
    }
    Ok(ActionCheckReport {
        action: action.name.clone(),
        checked: n as u64,
        holds: witnesses.is_empty(),
        witnesses,
    })
}

/// A leakage witness: an input/action pair where the protected quantity
/// moved even though the concepts said it should not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageWitness {
    pub input: Assignment,
    pub action: String,
    pub concept_tv: f64,
    pub response_tv: f64,
}

/// Task leakage scan: find `(x, b)` where the concept posterior is
/// unchanged, `c(b·x) = c(x)`, yet the task posterior moves,
/// `y(b·x) != y(x)`. The model is given as posterior tables over the same
/// input domain; build them with [`crate::tabular::TabularStochasticMap::compose`]
/// for an encoder/task pair, or from a diagram's end-to-end evaluation.
///
/// Witnesses come out x-major, action-minor.
pub fn detect_task_leakage(
    c_given_x: &TabularStochasticMap,
    y_given_x: &TabularStochasticMap,
    actions: &ActionSet,
    cases: &[Assignment],
    tv_tol: f64,
) -> Result<Vec<LeakageWitness>> {
    if !c_given_x.input_domain().same_shape(y_given_x.input_domain()) {
        return Err(EngineError::Contract(
            "concept and task posteriors must share the input domain".into(),
        ));
    }
    let domain = c_given_x.input_domain();
    let mut out = Vec::new();
    for x in cases {
        for action in &actions.actions {
            let moved = action.apply(domain, x)?;
            let concept_tv = total_variation(c_given_x.row(&moved)?, c_given_x.row(x)?);
            if concept_tv > tv_tol {
                continue;
            }
            let response_tv = total_variation(y_given_x.row(&moved)?, y_given_x.row(x)?);
            if response_tv > tv_tol {
                out.push(LeakageWitness {
                    input: x.clone(),
                    action: action.name.clone(),
                    concept_tv,
                    response_tv,
                });
            }
        }
    }
    Ok(out)
}

/// Inter-concept leakage scan between concepts `i` and `j` of the encoder:
/// over actions whose declared concept map moves at most coordinate `i`,
/// find `(x, b)` where the marginal of concept `j` still changes.
pub fn detect_concept_leakage(
    g: &TabularStochasticMap,
    actions: &ActionSet,
    cases: &[Assignment],
    i: usize,
    j: usize,
    tv_tol: f64,
) -> Result<Vec<LeakageWitness>> {
    let k = g.output_domain().len();
    if i == j || i >= k || j >= k {
        return Err(EngineError::Contract(format!(
            "concept indices must be distinct and below {k}"
        )));
    }
    let domain = g.input_domain();
    let concept_domain = g.output_domain();
    let relevant: Vec<&FiniteAction> = actions
        .actions
        .iter()
        .filter(|a| match a.concept_perm() {
            Some(cp) => cp.iter().enumerate().all(|(idx, &to)| {
                let from_a = concept_domain.assignment_at(idx);
                let to_a = concept_domain.assignment_at(to);
                from_a
                    .iter()
                    .zip(&to_a)
                    .enumerate()
                    .all(|(coord, (x, y))| coord == i || x == y)
            }),
            None => false,
        })
        .collect();
    let mut out = Vec::new();
    for x in cases {
        for action in &relevant {
            let moved = action.apply(domain, x)?;
            let before = g.output_marginal(x, j)?;
            let after = g.output_marginal(&moved, j)?;
            let response_tv = total_variation(&after, &before);
            if response_tv > tv_tol {
                out.push(LeakageWitness {
                    input: x.clone(),
                    action: action.name.clone(),
                    concept_tv: 0.0,
                    response_tv,
                });
            }
        }
    }
    Ok(out)
}

/// Helper: toggle one binary variable of a domain as an input permutation.
pub fn toggle_bits_perm(domain: &FiniteDomain, positions: &[usize]) -> Result<Vec<usize>> {
    let n = domain.size_capped(1 << 22)?;
    let mut perm = Vec::with_capacity(n);
    for i in 0..n {
        let mut a = domain.assignment_at(i);
        for &p in positions {
            if domain.variables()[p].card != 2 {
                return Err(EngineError::Contract(format!(
                    "variable '{}' is not binary",
                    domain.variables()[p].name
                )));
            }
            a[p] = 1 - a[p];
        }
        perm.push(domain.index_of(&a)?);
    }
    Ok(perm)
}
