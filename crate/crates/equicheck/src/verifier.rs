//! Exhaustive commutation checks for inference-equivariance diagrams, raw
//! and concept-based, with exact step accounting.
//!
//! Two diagrams are verified here. The raw square translates a model's
//! inputs and outputs into a user's and demands the same result case by
//! case. The concept-based triangle routes both functions through concept
//! spaces and demands that the translated concept profile and the
//! translated task outcome coincide with the user's.
//!
//! Step accounting follows the bounded-verification argument: one step per
//! distinct concept profile processed (at most `2^K`), never one per raw
//! input. The report separately counts scalar `comparisons` — one per
//! translated variable compared per profile — which is the "three checks"
//! granularity of the worked English/Latin example; the raw analogue for a
//! single case is [`raw_case_comparisons`], which is `32*32` for a 32x32
//! binary pixel grid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{total_variation, Assignment, FiniteDomain};
use crate::error::{EngineError, Result};
use crate::tabular::TabularStochasticMap;
use crate::translation::TranslationMap;

/// A value-level translation between two finite domains, stored as explicit
/// assignment pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawValueMap", into = "RawValueMap")]
pub struct ValueMap {
    source: FiniteDomain,
    target: FiniteDomain,
    map: BTreeMap<usize, usize>,
}

#[derive(Serialize, Deserialize)]
struct RawValueMap {
    source: Vec<crate::domain::Variable>,
    target: Vec<crate::domain::Variable>,
    entries: Vec<ValueMapEntry>,
}

#[derive(Serialize, Deserialize)]
struct ValueMapEntry {
    from: Assignment,
    to: Assignment,
}

impl TryFrom<RawValueMap> for ValueMap {
    type Error = EngineError;
    fn try_from(raw: RawValueMap) -> Result<Self> {
        let source = FiniteDomain::new(raw.source)?;
        let target = FiniteDomain::new(raw.target)?;
        let pairs: Vec<(Assignment, Assignment)> =
            raw.entries.into_iter().map(|e| (e.from, e.to)).collect();
        ValueMap::from_pairs(source, target, &pairs)
    }
}

impl From<ValueMap> for RawValueMap {
    fn from(v: ValueMap) -> RawValueMap {
        RawValueMap {
            source: v.source.variables().to_vec(),
            target: v.target.variables().to_vec(),
            entries: v
                .map
                .iter()
                .map(|(&s, &t)| ValueMapEntry {
                    from: v.source.assignment_at(s),
                    to: v.target.assignment_at(t),
                })
                .collect(),
        }
    }
}

impl ValueMap {
    pub fn from_pairs(
        source: FiniteDomain,
        target: FiniteDomain,
        pairs: &[(Assignment, Assignment)],
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (from, to) in pairs {
            let s = source.index_of(from)?;
            let t = target.index_of(to)?;
            if map.insert(s, t).is_some() {
                return Err(EngineError::Contract(format!(
                    "value {from:?} mapped more than once"
                )));
            }
        }
        Ok(ValueMap { source, target, map })
    }

    /// Identity on a domain.
    pub fn identity(domain: &FiniteDomain) -> Result<Self> {
        let n = domain.size_capped(1 << 24)?;
        Ok(ValueMap {
            source: domain.clone(),
            target: domain.clone(),
            map: (0..n).map(|i| (i, i)).collect(),
        })
    }

    pub fn source(&self) -> &FiniteDomain {
        &self.source
    }

    pub fn target(&self) -> &FiniteDomain {
        &self.target
    }

    pub fn apply(&self, x: &[usize]) -> Result<Assignment> {
        let i = self.source.index_of(x)?;
        match self.map.get(&i) {
            Some(&t) => Ok(self.target.assignment_at(t)),
            None => Err(EngineError::Contract(format!(
                "translation undefined for value {x:?}"
            ))),
        }
    }

    /// Values from `cases` the map does not cover.
    fn unmapped<'a>(&self, cases: impl Iterator<Item = &'a Assignment>) -> Vec<Assignment> {
        let mut missing = Vec::new();
        for c in cases {
            match self.source.index_of(c) {
                Ok(i) if self.map.contains_key(&i) => {}
                _ => missing.push(c.clone()),
            }
        }
        missing
    }

    /// Pushforward of a distribution over the source assignment space.
    /// Requires the map to cover the distribution's support.
    pub fn pushforward(&self, dist: &[f64]) -> Result<Vec<f64>> {
        let n_t = self.target.case_count() as usize;
        let mut out = vec![0.0; n_t];
        for (i, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let t = self.map.ok_or_missing(i, &self.source)?;
            out[t] += p;
        }
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("value map serializes")
    }
}

trait OkOrMissing {
    fn ok_or_missing(&self, i: usize, domain: &FiniteDomain) -> Result<usize>;
}

impl OkOrMissing for BTreeMap<usize, usize> {
    fn ok_or_missing(&self, i: usize, domain: &FiniteDomain) -> Result<usize> {
        self.get(&i).copied().ok_or_else(|| {
            EngineError::Contract(format!(
                "translation undefined for value {:?}",
                domain.assignment_at(i)
            ))
        })
    }
}

/// One non-commuting case: the swept input and the two path distributions
/// that disagreed, with the stage ("concept", "task" or "output") that
/// failed first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub input: Assignment,
    pub stage: String,
    pub path_a: Vec<f64>,
    pub path_b: Vec<f64>,
    pub tv: f64,
}

/// Outcome of an equivariance sweep.
///
/// `steps_used` counts verification steps in the bounded-verification
/// sense: raw sweeps use one step per case, concept sweeps one step per
/// distinct concept profile. `comparisons` counts scalar comparisons of
/// translated outcomes. `bound_exp_d` is the full feature-space case count
/// and `bound_exp_k` the concept-space case count, both saturating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub total_cases: u64,
    pub commuting_cases: u64,
    pub degree: f64,
    pub steps_used: u64,
    pub comparisons: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinct_profiles: Option<u64>,
    pub bound_exp_d: u128,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_exp_k: Option<u128>,
    pub counterexamples_total: u64,
    pub counterexamples: Vec<Counterexample>,
}

impl VerificationReport {
    pub fn commutes(&self) -> bool {
        self.commuting_cases == self.total_cases
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn degree(commuting: u64, total: u64) -> f64 {
    if total == 0 {
        1.0
    } else {
        commuting as f64 / total as f64
    }
}

/// Scalar comparisons needed to pin down a single case of a raw
/// inference-equivariance diagram over `domain`: one per variable of the
/// representation being translated. A 32x32 grid of binary pixels costs
/// 1024 per-pixel comparisons per case, against `K + |tasks|` per concept
/// profile on the concept route.
pub fn raw_case_comparisons(domain: &FiniteDomain) -> u64 {
    domain.len() as u64
}

/// Verifies the raw square `tau_out(m(x)) = h(tau_in(x))` over every
/// assignment of `domain`, which must match `m`'s input domain in shape.
///
/// Distribution equality means total variation at most `tv_tol`;
/// deterministic tables reduce to exact equality. Translations must be
/// total on the swept cases and on the support of `m`'s outputs; partial
/// maps are a contract error listing the unmapped values.
pub fn verify_inference_equivariance(
    m: &TabularStochasticMap,
    h: &TabularStochasticMap,
    tau_in: &ValueMap,
    tau_out: &ValueMap,
    domain: &FiniteDomain,
    tv_tol: f64,
    counterexample_cap: usize,
) -> Result<VerificationReport> {
    if !domain.same_shape(m.input_domain()) {
        return Err(EngineError::Contract(
            "swept domain does not match the model input domain".into(),
        ));
    }
    domain.size_capped(1 << 22)?;
    let cases: Vec<Assignment> = domain.assignments().collect();
    verify_inference_equivariance_over(m, h, tau_in, tau_out, &cases, tv_tol, counterexample_cap)
}

/// Same as [`verify_inference_equivariance`] but swept over an explicit
/// case list, e.g. only the observed objects.
pub fn verify_inference_equivariance_over(
    m: &TabularStochasticMap,
    h: &TabularStochasticMap,
    tau_in: &ValueMap,
    tau_out: &ValueMap,
    cases: &[Assignment],
    tv_tol: f64,
    counterexample_cap: usize,
) -> Result<VerificationReport> {
    if !tau_in.source().same_shape(m.input_domain())
        || !tau_in.target().same_shape(h.input_domain())
    {
        return Err(EngineError::Contract(
            "input translation endpoints do not match the two models".into(),
        ));
    }
    if !tau_out.source().same_shape(m.output_domain())
        || !tau_out.target().same_shape(h.output_domain())
    {
        return Err(EngineError::Contract(
            "output translation endpoints do not match the two models".into(),
        ));
    }
    let missing_in = tau_in.unmapped(cases.iter());
    if !missing_in.is_empty() {
        return Err(EngineError::Contract(format!(
            "input translation is partial; unmapped values: {missing_in:?}"
        )));
    }
    // tau_out must cover every output value m can produce on the sweep
    let mut support: Vec<Assignment> = Vec::new();
    for x in cases {
        for (j, &p) in m.row(x)?.iter().enumerate() {
            if p != 0.0 {
                let a = m.output_domain().assignment_at(j);
                if !support.contains(&a) {
                    support.push(a);
                }
            }
        }
    }
    let missing_out = tau_out.unmapped(support.iter());
    if !missing_out.is_empty() {
        return Err(EngineError::Contract(format!(
            "output translation is partial; unmapped values: {missing_out:?}"
        )));
    }

    let mut commuting = 0u64;
    let mut counterexamples = Vec::new();
    let mut counterexamples_total = 0u64;
    for x in cases {
        let path_a = tau_out.pushforward(m.row(x)?)?;
        let x_t = tau_in.apply(x)?;
        let path_b = h.row(&x_t)?.to_vec();
        let tv = total_variation(&path_a, &path_b);
        if tv <= tv_tol {
            commuting += 1;
        } else {
            counterexamples_total += 1;
            if counterexamples.len() < counterexample_cap {
                counterexamples.push(Counterexample {
                    input: x.clone(),
                    stage: "output".into(),
                    path_a,
                    path_b,
                    tv,
                });
            }
        }
    }

    let total = cases.len() as u64;
    Ok(VerificationReport {
        total_cases: total,
        commuting_cases: commuting,
        degree: degree(commuting, total),
        steps_used: total,
        comparisons: total * h.output_domain().len() as u64,
        distinct_profiles: None,
        bound_exp_d: m.input_domain().case_count(),
        bound_exp_k: None,
        counterexamples_total,
        counterexamples,
    })
}

/// Index permutation on assignment spaces induced by renaming variables
/// through a sentence translation. Errors when the translation is not a
/// cardinality-preserving bijection between the two variable lists.
fn translation_permutation(
    tau: &TranslationMap,
    from: &FiniteDomain,
    to: &FiniteDomain,
) -> Result<Vec<usize>> {
    if from.len() != to.len() {
        return Err(EngineError::Contract(format!(
            "translation relates {} variables to {}",
            from.len(),
            to.len()
        )));
    }
    let mut var_map = Vec::with_capacity(from.len());
    let mut seen = vec![false; to.len()];
    for v in from.variables() {
        let name = tau.get(&v.name)?;
        let p = to.position(name)?;
        if seen[p] {
            return Err(EngineError::Contract(format!(
                "translation maps two variables onto '{name}'"
            )));
        }
        seen[p] = true;
        if to.variables()[p].card != v.card {
            return Err(EngineError::Contract(format!(
                "cardinality mismatch: '{}' has {}, '{}' has {}",
                v.name,
                v.card,
                name,
                to.variables()[p].card
            )));
        }
        var_map.push(p);
    }
    let n = from.case_count() as usize;
    let mut perm = vec![0usize; n];
    for (i, item) in perm.iter_mut().enumerate() {
        let a = from.assignment_at(i);
        let mut b = vec![0usize; to.len()];
        for (vi, &tp) in var_map.iter().enumerate() {
            b[tp] = a[vi];
        }
        *item = to.index_of(&b)?;
    }
    Ok(perm)
}

fn permute_dist(dist: &[f64], perm: &[usize], n_target: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_target];
    for (i, &p) in dist.iter().enumerate() {
        if p != 0.0 {
            out[perm[i]] += p;
        }
    }
    out
}

fn profile_key(row: &[f64]) -> Vec<u64> {
    row.iter().map(|p| p.to_bits()).collect()
}

/// Core of the concept-based check, phrased over posterior tables: for each
/// case `x`, the translated model concept distribution must match the
/// reference concept distribution, and the translated model task
/// distribution must match the reference task distribution.
///
/// `steps_used` is the number of distinct model concept profiles processed
/// (the bounded-verification `L`, at most the concept-space case count);
/// `comparisons` charges one scalar comparison per reference concept and
/// task variable per distinct profile.
#[allow(clippy::too_many_arguments)]
pub fn verify_posterior_equivariance(
    c_given_x: &TabularStochasticMap,
    y_given_x: &TabularStochasticMap,
    c_ref_given_x: &TabularStochasticMap,
    y_ref_given_x: &TabularStochasticMap,
    tau_c: &TranslationMap,
    cases: &[Assignment],
    tv_tol: f64,
    counterexample_cap: usize,
) -> Result<VerificationReport> {
    if !c_given_x.input_domain().same_shape(c_ref_given_x.input_domain())
        || !c_given_x.input_domain().same_shape(y_given_x.input_domain())
        || !c_given_x.input_domain().same_shape(y_ref_given_x.input_domain())
    {
        return Err(EngineError::Contract(
            "all four posteriors must share one input domain".into(),
        ));
    }
    let concept_perm = translation_permutation(
        tau_c,
        c_given_x.output_domain(),
        c_ref_given_x.output_domain(),
    )?;
    let task_perm = translation_permutation(
        tau_c,
        y_given_x.output_domain(),
        y_ref_given_x.output_domain(),
    )?;
    let n_cref = c_ref_given_x.output_domain().case_count() as usize;
    let n_yref = y_ref_given_x.output_domain().case_count() as usize;

    let mut profiles: BTreeMap<Vec<u64>, ()> = BTreeMap::new();
    let mut commuting = 0u64;
    let mut counterexamples = Vec::new();
    let mut counterexamples_total = 0u64;

    for x in cases {
        let c_row = c_given_x.row(x)?;
        profiles.entry(profile_key(c_row)).or_insert(());

        let c_translated = permute_dist(c_row, &concept_perm, n_cref);
        let c_ref = c_ref_given_x.row(x)?;
        let concept_tv = total_variation(&c_translated, c_ref);

        let y_translated = permute_dist(y_given_x.row(x)?, &task_perm, n_yref);
        let y_ref = y_ref_given_x.row(x)?;
        let task_tv = total_variation(&y_translated, y_ref);

        if concept_tv <= tv_tol && task_tv <= tv_tol {
            commuting += 1;
        } else {
            counterexamples_total += 1;
            if counterexamples.len() < counterexample_cap {
                if concept_tv > tv_tol {
                    counterexamples.push(Counterexample {
                        input: x.clone(),
                        stage: "concept".into(),
                        path_a: c_translated,
                        path_b: c_ref.to_vec(),
                        tv: concept_tv,
                    });
                } else {
                    counterexamples.push(Counterexample {
                        input: x.clone(),
                        stage: "task".into(),
                        path_a: y_translated,
                        path_b: y_ref.to_vec(),
                        tv: task_tv,
                    });
                }
            }
        }
    }

    let total = cases.len() as u64;
    let distinct = profiles.len() as u64;
    let per_profile = (c_ref_given_x.output_domain().len()
        + y_ref_given_x.output_domain().len()) as u64;
    Ok(VerificationReport {
        total_cases: total,
        commuting_cases: commuting,
        degree: degree(commuting, total),
        steps_used: distinct,
        comparisons: distinct * per_profile,
        distinct_profiles: Some(distinct),
        bound_exp_d: c_given_x.input_domain().case_count(),
        bound_exp_k: Some(c_given_x.output_domain().case_count()),
        counterexamples_total,
        counterexamples,
    })
}

/// Verifies concept-based inference equivariance for encoder/task pairs
/// `(g, f)` against `(g', f')` under the sentence translation `tau_c`,
/// sweeping every assignment of `g`'s input domain.
///
/// The concept and task variables of `f` and `f'` must be named by
/// sentences in `tau_c`'s domain and range respectively.
#[allow(clippy::too_many_arguments)]
pub fn verify_concept_equivariance(
    g: &TabularStochasticMap,
    g_prime: &TabularStochasticMap,
    f: &TabularStochasticMap,
    f_prime: &TabularStochasticMap,
    tau_c: &TranslationMap,
    tv_tol: f64,
    counterexample_cap: usize,
) -> Result<VerificationReport> {
    g.input_domain().size_capped(1 << 22)?;
    let cases: Vec<Assignment> = g.input_domain().assignments().collect();
    verify_concept_equivariance_over(g, g_prime, f, f_prime, tau_c, &cases, tv_tol, counterexample_cap)
}

/// [`verify_concept_equivariance`] over an explicit case list.
#[allow(clippy::too_many_arguments)]
pub fn verify_concept_equivariance_over(
    g: &TabularStochasticMap,
    g_prime: &TabularStochasticMap,
    f: &TabularStochasticMap,
    f_prime: &TabularStochasticMap,
    tau_c: &TranslationMap,
    cases: &[Assignment],
    tv_tol: f64,
    counterexample_cap: usize,
) -> Result<VerificationReport> {
    if !f.input_domain().same_shape(g.output_domain()) {
        return Err(EngineError::Contract(
            "task input domain does not match encoder output domain".into(),
        ));
    }
    if !f_prime.input_domain().same_shape(g_prime.output_domain()) {
        return Err(EngineError::Contract(
            "reference task input domain does not match reference encoder output domain".into(),
        ));
    }
    let y_given_x = g.compose(f)?;
    let y_ref_given_x = g_prime.compose(f_prime)?;
    verify_posterior_equivariance(
        g,
        &y_given_x,
        g_prime,
        &y_ref_given_x,
        tau_c,
        cases,
        tv_tol,
        counterexample_cap,
    )
}

/// Verifies the two hops of a surrogate chain: model to surrogate, then
/// surrogate to user. The second hop is swept over the image of the cases
/// under the first input translation. The chain is interpretable iff both
/// reports have degree 1.
#[allow(clippy::too_many_arguments)]
pub fn verify_surrogate_chain(
    m: &TabularStochasticMap,
    m_prime: &TabularStochasticMap,
    h: &TabularStochasticMap,
    tau: (&ValueMap, &ValueMap),
    tau_prime: (&ValueMap, &ValueMap),
    cases: &[Assignment],
    tv_tol: f64,
    counterexample_cap: usize,
) -> Result<(VerificationReport, VerificationReport)> {
    let first =
        verify_inference_equivariance_over(m, m_prime, tau.0, tau.1, cases, tv_tol, counterexample_cap)?;
    let mut image: Vec<Assignment> = Vec::new();
    for x in cases {
        let t = tau.0.apply(x)?;
        if !image.contains(&t) {
            image.push(t);
        }
    }
    let second = verify_inference_equivariance_over(
        m_prime,
        h,
        tau_prime.0,
        tau_prime.1,
        &image,
        tv_tol,
        counterexample_cap,
    )?;
    Ok((first, second))
}

/// Outcome of checking a report against the bounded-verification statement:
/// steps must fit in the concept-space case count, which must be strictly
/// smaller than the feature-space case count, under the premise `K < D`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem1Check {
    pub holds: bool,
    pub premise_k_lt_d: bool,
    pub steps_used: u64,
    pub concept_cases: u128,
    pub feature_cases: u128,
    pub detail: String,
}

fn pow2_saturating(exp: usize) -> u128 {
    if exp >= 128 {
        u128::MAX
    } else {
        1u128 << exp
    }
}

/// Checks `steps_used <= 2^K` and `2^K < 2^D` for a concept-verification
/// report (binary-cardinality convention; reports over general domains
/// carry their exact case counts, which take precedence).
pub fn check_theorem1_bound(report: &VerificationReport, d: usize, k: usize) -> Theorem1Check {
    let concept_cases = report.bound_exp_k.unwrap_or_else(|| pow2_saturating(k));
    let feature_cases = if report.bound_exp_d > 0 {
        report.bound_exp_d
    } else {
        pow2_saturating(d)
    };
    let premise = k < d;
    let steps_ok = (report.steps_used as u128) <= concept_cases;
    let space_ok = concept_cases < feature_cases;
    let holds = premise && steps_ok && space_ok;
    let detail = if !premise {
        format!("premise violated: K = {k} is not smaller than D = {d}")
    } else if !steps_ok {
        format!("{} steps exceed the concept-space bound {}", report.steps_used, concept_cases)
    } else if !space_ok {
        format!("concept space {concept_cases} is not smaller than feature space {feature_cases}")
    } else {
        format!(
            "{} steps <= {} concept cases < {} feature cases",
            report.steps_used, concept_cases, feature_cases
        )
    };
    Theorem1Check {
        holds,
        premise_k_lt_d: premise,
        steps_used: report.steps_used,
        concept_cases,
        feature_cases,
        detail,
    }
}

impl ValueMap {
    /// Identity on values between two same-shaped domains that may differ
    /// in variable names (e.g. model features vs user vocabulary).
    pub fn identity_renamed(source: &FiniteDomain, target: &FiniteDomain) -> Result<Self> {
        let cards_match = source.len() == target.len()
            && source
                .variables()
                .iter()
                .zip(target.variables())
                .all(|(a, b)| a.card == b.card);
        if !cards_match {
            return Err(EngineError::Contract(
                "domains are not value-compatible".into(),
            ));
        }
        let n = source.size_capped(1 << 24)?;
        Ok(ValueMap {
            source: source.clone(),
            target: target.clone(),
            map: (0..n).map(|i| (i, i)).collect(),
        })
    }
}
