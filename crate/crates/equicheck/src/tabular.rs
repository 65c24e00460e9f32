//! Exact finite probability machinery: conditional probability tables,
//! joint distributions, and information quantities computed by direct
//! enumeration.
//!
//! All quantities are in nats (natural log); reports that surface them also
//! show bits. Nothing here estimates: every sum runs over the full
//! assignment space, which is why domains are capped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{total_variation, Assignment, FiniteDomain, Variable};
use crate::error::{EngineError, Result};

const ROW_SUM_TOL: f64 = 1e-9;

/// An exact finite conditional distribution: one probability row over the
/// output assignments per input assignment, rows in lexicographic input
/// order.
///
/// Deterministic maps are the special case of one-hot rows. Rows whose sum
/// deviates from 1 by more than 1e-9 are rejected at construction; rows
/// within tolerance are renormalized exactly.
///
/// JSON form: `{"inputs": [{"name": "X1", "card": 2}, ...], "outputs":
/// [...], "rows": [[...], ...]}`. Probabilities round-trip bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct TabularStochasticMap {
    input_domain: FiniteDomain,
    output_domain: FiniteDomain,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    inputs: Vec<Variable>,
    outputs: Vec<Variable>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<RawTable> for TabularStochasticMap {
    type Error = EngineError;
    fn try_from(raw: RawTable) -> Result<Self> {
        TabularStochasticMap::new(
            FiniteDomain::new(raw.inputs)?,
            FiniteDomain::new(raw.outputs)?,
            raw.rows,
        )
    }
}

impl From<TabularStochasticMap> for RawTable {
    fn from(t: TabularStochasticMap) -> RawTable {
        RawTable {
            inputs: t.input_domain.variables().to_vec(),
            outputs: t.output_domain.variables().to_vec(),
            rows: t.rows,
        }
    }
}

fn normalize_row(row: &mut [f64], what: &str) -> Result<()> {
    let mut sum = 0.0;
    for &p in row.iter() {
        if !p.is_finite() || !(-1e-12..=1.0 + 1e-9).contains(&p) {
            return Err(EngineError::Structural(format!(
                "{what}: probability {p} outside [0, 1]"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(EngineError::Structural(format!(
            "{what}: probabilities sum to {sum}, off by more than {ROW_SUM_TOL}"
        )));
    }
    for p in row.iter_mut() {
        *p = (*p / sum).clamp(0.0, 1.0);
    }
    Ok(())
}

impl TabularStochasticMap {
    pub fn new(
        input_domain: FiniteDomain,
        output_domain: FiniteDomain,
        mut rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n_in = input_domain.case_count();
        if n_in > (1u128 << 24) {
            return Err(EngineError::Resource(format!(
                "table over {n_in} input assignments is too large to materialize"
            )));
        }
        let n_in = n_in as usize;
        let n_out = output_domain.case_count() as usize;
        if rows.len() != n_in {
            return Err(EngineError::Structural(format!(
                "table has {} rows for {} input assignments",
                rows.len(),
                n_in
            )));
        }
        for (i, row) in rows.iter_mut().enumerate() {
            if row.len() != n_out {
                return Err(EngineError::Structural(format!(
                    "row {i} has {} entries for {} output assignments",
                    row.len(),
                    n_out
                )));
            }
            normalize_row(row, &format!("row {i}"))?;
        }
        Ok(TabularStochasticMap { input_domain, output_domain, rows })
    }

    /// One-hot table from a deterministic function on assignments.
    pub fn deterministic(
        input_domain: FiniteDomain,
        output_domain: FiniteDomain,
        f: impl Fn(&[usize]) -> Assignment,
    ) -> Result<Self> {
        let n_in = input_domain.size_capped(1 << 24)?;
        let n_out = output_domain.case_count() as usize;
        let mut rows = Vec::with_capacity(n_in);
        for i in 0..n_in {
            let x = input_domain.assignment_at(i);
            let y = f(&x);
            let j = output_domain.index_of(&y)?;
            let mut row = vec![0.0; n_out];
            row[j] = 1.0;
            rows.push(row);
        }
        TabularStochasticMap::new(input_domain, output_domain, rows)
    }

    /// Identity map on a domain.
    pub fn identity(domain: FiniteDomain) -> Result<Self> {
        TabularStochasticMap::deterministic(domain.clone(), domain, |x| x.to_vec())
    }

    pub fn input_domain(&self) -> &FiniteDomain {
        &self.input_domain
    }

    pub fn output_domain(&self) -> &FiniteDomain {
        &self.output_domain
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// The probability row for input `x`.
    pub fn row(&self, x: &[usize]) -> Result<&[f64]> {
        Ok(&self.rows[self.input_domain.index_of(x)?])
    }

    /// For a one-hot row, the unique output assignment.
    pub fn deterministic_output(&self, x: &[usize]) -> Result<Option<Assignment>> {
        let row = self.row(x)?;
        let mut found = None;
        for (j, &p) in row.iter().enumerate() {
            if p == 1.0 {
                found = Some(self.output_domain.assignment_at(j));
            } else if p != 0.0 {
                return Ok(None);
            }
        }
        Ok(found)
    }

    /// Marginal of one output variable in the row for `x`.
    pub fn output_marginal(&self, x: &[usize], var: usize) -> Result<Vec<f64>> {
        let row = self.row(x)?;
        let card = self.output_domain.variables()[var].card;
        let mut out = vec![0.0; card];
        for (j, &p) in row.iter().enumerate() {
            if p != 0.0 {
                out[self.output_domain.assignment_at(j)[var]] += p;
            }
        }
        Ok(out)
    }

    /// Composition `self` then `next`: `(next ∘ self)(x) = Σ_c self(c|x)
    /// next(y|c)`. The output domain of `self` must match the input domain
    /// of `next` in shape.
    pub fn compose(&self, next: &TabularStochasticMap) -> Result<TabularStochasticMap> {
        if !self.output_domain.same_shape(next.input_domain()) {
            return Err(EngineError::Contract(format!(
                "cannot compose: intermediate domains differ ({:?} vs {:?})",
                self.output_domain.names(),
                next.input_domain().names()
            )));
        }
        let n_out = next.output_domain.case_count() as usize;
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = vec![0.0; n_out];
                for (c, &p) in row.iter().enumerate() {
                    if p != 0.0 {
                        for (y, &q) in next.rows[c].iter().enumerate() {
                            acc[y] += p * q;
                        }
                    }
                }
                acc
            })
            .collect();
        TabularStochasticMap::new(
            self.input_domain.clone(),
            next.output_domain.clone(),
            rows,
        )
    }

    /// Rename input/output variables without touching probabilities.
    pub fn renamed(
        &self,
        input_names: Option<&[String]>,
        output_names: Option<&[String]>,
    ) -> Result<TabularStochasticMap> {
        let rename = |d: &FiniteDomain, names: &[String]| -> Result<FiniteDomain> {
            if names.len() != d.len() {
                return Err(EngineError::Contract(format!(
                    "{} names for {} variables",
                    names.len(),
                    d.len()
                )));
            }
            FiniteDomain::new(
                d.variables()
                    .iter()
                    .zip(names)
                    .map(|(v, n)| Variable {
                        name: n.clone(),
                        card: v.card,
                        labels: v.labels.clone(),
                    })
                    .collect(),
            )
        };
        let input_domain = match input_names {
            Some(n) => rename(&self.input_domain, n)?,
            None => self.input_domain.clone(),
        };
        let output_domain = match output_names {
            Some(n) => rename(&self.output_domain, n)?,
            None => self.output_domain.clone(),
        };
        TabularStochasticMap::new(input_domain, output_domain, self.rows.clone())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

/// Returns the output distribution of `m` at `x`; for deterministic tables
/// this is a point mass at the unique output.
pub fn eval_tabular(m: &TabularStochasticMap, x: &[usize]) -> Result<Vec<f64>> {
    Ok(m.row(x)?.to_vec())
}

/// Indicator of the event "the object described by `x` lies in `extent`".
/// `object_of` maps feature assignments to object ids.
pub fn concept_membership(
    x: &[usize],
    extent: &std::collections::BTreeSet<String>,
    object_of: &BTreeMap<Assignment, String>,
) -> Result<u8> {
    let obj = object_of.get(x).ok_or_else(|| {
        EngineError::Domain(format!("assignment {x:?} does not describe a known object"))
    })?;
    Ok(u8::from(extent.contains(obj)))
}

/// `P(C_i = 1 | X = x)` for a binary concept variable at output position
/// `i`. Non-binary concepts must be queried through `output_marginal`.
pub fn concept_probability(g: &TabularStochasticMap, x: &[usize], i: usize) -> Result<f64> {
    let vars = g.output_domain().variables();
    if i >= vars.len() {
        return Err(EngineError::Domain(format!("no concept variable at index {i}")));
    }
    if vars[i].card != 2 {
        return Err(EngineError::Contract(format!(
            "concept '{}' has cardinality {}; membership probability is defined for binary \
             concepts only — use output_marginal for categorical concepts",
            vars[i].name, vars[i].card
        )));
    }
    Ok(g.output_marginal(x, i)?[1])
}

/// A joint distribution over a finite domain, stored densely in
/// lexicographic assignment order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint", into = "RawJoint")]
pub struct JointDistribution {
    domain: FiniteDomain,
    probabilities: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawJoint {
    variables: Vec<Variable>,
    probabilities: Vec<f64>,
}

impl TryFrom<RawJoint> for JointDistribution {
    type Error = EngineError;
    fn try_from(raw: RawJoint) -> Result<Self> {
        JointDistribution::new(FiniteDomain::new(raw.variables)?, raw.probabilities)
    }
}

impl From<JointDistribution> for RawJoint {
    fn from(j: JointDistribution) -> RawJoint {
        RawJoint {
            variables: j.domain.variables().to_vec(),
            probabilities: j.probabilities,
        }
    }
}

impl JointDistribution {
    pub fn new(domain: FiniteDomain, mut probabilities: Vec<f64>) -> Result<Self> {
        let n = domain.size_capped(1 << 24)?;
        if probabilities.len() != n {
            return Err(EngineError::Structural(format!(
                "joint has {} probabilities for {} assignments",
                probabilities.len(),
                n
            )));
        }
        normalize_row(&mut probabilities, "joint")?;
        Ok(JointDistribution { domain, probabilities })
    }

    /// Point-mass-mixture constructor: `support` pairs of (assignment,
    /// probability).
    pub fn from_support(domain: FiniteDomain, support: &[(Assignment, f64)]) -> Result<Self> {
        let n = domain.size_capped(1 << 24)?;
        let mut probs = vec![0.0; n];
        for (a, p) in support {
            probs[domain.index_of(a)?] += p;
        }
        JointDistribution::new(domain, probs)
    }

    pub fn domain(&self) -> &FiniteDomain {
        &self.domain
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn prob(&self, assignment: &[usize]) -> Result<f64> {
        Ok(self.probabilities[self.domain.index_of(assignment)?])
    }

    /// Marginal joint over the variables at `positions` (in that order).
    pub fn marginal(&self, positions: &[usize]) -> Result<JointDistribution> {
        let sub = self.domain.restrict(positions);
        let n = sub.case_count() as usize;
        let mut probs = vec![0.0; n];
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p != 0.0 {
                let full = self.domain.assignment_at(i);
                let part: Assignment = positions.iter().map(|&q| full[q]).collect();
                probs[sub.index_of(&part)?] += p;
            }
        }
        JointDistribution::new(sub, probs)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("joint serializes")
    }
}

/// Builds `P(X, Y)` from an input distribution over `m`'s input domain and
/// the table itself, with input variables first.
pub fn joint_from_table(
    input_dist: &JointDistribution,
    m: &TabularStochasticMap,
) -> Result<JointDistribution> {
    if !input_dist.domain().same_shape(m.input_domain()) {
        return Err(EngineError::Contract(
            "input distribution domain does not match the table input domain".into(),
        ));
    }
    let domain = m.input_domain().join(m.output_domain())?;
    let n_out = m.output_domain().case_count() as usize;
    let mut probs = Vec::with_capacity(input_dist.probabilities().len() * n_out);
    for (i, &px) in input_dist.probabilities().iter().enumerate() {
        for &py in m.rows()[i].iter() {
            probs.push(px * py);
        }
    }
    JointDistribution::new(domain, probs)
}

fn xlogx_ratio(pab: f64, pa: f64, pb: f64) -> f64 {
    if pab <= 0.0 {
        0.0
    } else {
        pab * (pab / (pa * pb)).ln()
    }
}

/// Exact mutual information `I(A; B)` in nats between two disjoint variable
/// sets of the joint. `0 log 0` terms contribute zero; the result is
/// clamped at 0 against floating-point dust.
pub fn mutual_information(j: &JointDistribution, a: &[String], b: &[String]) -> Result<f64> {
    let pa_pos = j.domain().positions_of(a)?;
    let pb_pos = j.domain().positions_of(b)?;
    if pa_pos.iter().any(|p| pb_pos.contains(p)) {
        return Err(EngineError::Contract(
            "variable sets A and B overlap; mutual information needs disjoint sets".into(),
        ));
    }
    let ja = j.marginal(&pa_pos)?;
    let jb = j.marginal(&pb_pos)?;
    let mut positions = pa_pos.clone();
    positions.extend(&pb_pos);
    let jab = j.marginal(&positions)?;

    let mut mi = 0.0;
    for (i, &pab) in jab.probabilities().iter().enumerate() {
        if pab == 0.0 {
            continue;
        }
        let full = jab.domain().assignment_at(i);
        let xa: Assignment = full[..pa_pos.len()].to_vec();
        let xb: Assignment = full[pa_pos.len()..].to_vec();
        mi += xlogx_ratio(pab, ja.prob(&xa)?, jb.prob(&xb)?);
    }
    Ok(mi.max(0.0))
}

/// Exact conditional mutual information `I(Y; X_j | C)` in nats. With an
/// empty conditioning set this reduces to plain mutual information.
pub fn conditional_mutual_information(
    j: &JointDistribution,
    y: &str,
    xj: &str,
    c: &[String],
) -> Result<f64> {
    if c.iter().any(|n| n == y || n == xj) {
        return Err(EngineError::Contract(
            "conditioning set C must not contain Y or X_j".into(),
        ));
    }
    if y == xj {
        return Err(EngineError::Contract("Y and X_j must differ".into()));
    }
    if c.is_empty() {
        return mutual_information(j, &[y.to_string()], &[xj.to_string()]);
    }
    let y_pos = j.domain().position(y)?;
    let x_pos = j.domain().position(xj)?;
    let c_pos = j.domain().positions_of(c)?;

    let mut all = c_pos.clone();
    all.push(y_pos);
    all.push(x_pos);
    let jcyx = j.marginal(&all)?;
    let jc = j.marginal(&c_pos)?;
    let mut cy = c_pos.clone();
    cy.push(y_pos);
    let jcy = j.marginal(&cy)?;
    let mut cx = c_pos.clone();
    cx.push(x_pos);
    let jcx = j.marginal(&cx)?;

    let k = c_pos.len();
    let mut cmi = 0.0;
    for (i, &pcyx) in jcyx.probabilities().iter().enumerate() {
        if pcyx == 0.0 {
            continue;
        }
        let full = jcyx.domain().assignment_at(i);
        let cc = &full[..k];
        let yy = full[k];
        let xx = full[k + 1];
        let pc = jc.prob(cc)?;
        let mut acy = cc.to_vec();
        acy.push(yy);
        let mut acx = cc.to_vec();
        acx.push(xx);
        let pcy = jcy.prob(&acy)?;
        let pcx = jcx.prob(&acx)?;
        // I(Y;X|C) = sum p(c,y,x) log [ p(c) p(c,y,x) / (p(c,y) p(c,x)) ]
        cmi += pcyx * ((pc * pcyx) / (pcy * pcx)).ln();
    }
    Ok(cmi.max(0.0))
}

/// Verdict and the exact numbers behind a lossless-latent-space check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LosslessReport {
    pub holds: bool,
    pub k: usize,
    pub d: usize,
    pub mi_y_c_nats: f64,
    pub mi_y_x_nats: f64,
    pub mi_y_c_bits: f64,
    pub mi_y_x_bits: f64,
    pub gap_nats: f64,
    pub eps_nats: f64,
}

/// `C` is a lossless latent space for `Y` given `X` when it is strictly
/// smaller (`K < D`) and preserves task information within `eps` nats.
pub fn is_lossless_latent(
    j: &JointDistribution,
    c: &[String],
    x: &[String],
    y: &str,
    eps_nats: f64,
) -> Result<LosslessReport> {
    let y_set = [y.to_string()];
    let mi_y_c = mutual_information(j, &y_set, c)?;
    let mi_y_x = mutual_information(j, &y_set, x)?;
    let gap = (mi_y_c - mi_y_x).abs();
    let ln2 = std::f64::consts::LN_2;
    Ok(LosslessReport {
        holds: c.len() < x.len() && gap <= eps_nats,
        k: c.len(),
        d: x.len(),
        mi_y_c_nats: mi_y_c,
        mi_y_x_nats: mi_y_x,
        mi_y_c_bits: mi_y_c / ln2,
        mi_y_x_bits: mi_y_x / ln2,
        gap_nats: gap,
        eps_nats,
    })
}

/// Output of [`factorize`]: the two conditional tables, the reconstruction
/// residual, and any conditioning rows with zero probability (filled with
/// uniform rows and excluded from behavioural claims).
#[derive(Debug, Clone)]
pub struct Factorization {
    pub c_given_x: TabularStochasticMap,
    pub y_given_c: TabularStochasticMap,
    /// Total-variation distance between the joint and the reconstruction
    /// `P(Y|C) P(C|X) P(X)`; zero iff `Y ⟂ X | C`.
    pub residual_tv: f64,
    pub unconstrained_c_given_x: Vec<Assignment>,
    pub unconstrained_y_given_c: Vec<Assignment>,
}

/// Splits a joint over the partition `(C, X, Y)` into `P(C|X)` and `P(Y|C)`
/// and measures how far `P(Y|C) P(C|X) P(X)` is from the original joint.
pub fn factorize(
    j: &JointDistribution,
    c: &[String],
    x: &[String],
    y: &str,
) -> Result<Factorization> {
    let c_pos = j.domain().positions_of(c)?;
    let x_pos = j.domain().positions_of(x)?;
    let y_pos = j.domain().position(y)?;
    let mut seen: Vec<usize> = c_pos.iter().chain(&x_pos).copied().collect();
    seen.push(y_pos);
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != j.domain().len() {
        return Err(EngineError::Contract(
            "C, X and Y must partition the joint's variables".into(),
        ));
    }

    let x_dom = j.domain().restrict(&x_pos);
    let c_dom = j.domain().restrict(&c_pos);
    let y_dom = j.domain().restrict(&[y_pos]);

    let jx = j.marginal(&x_pos)?;
    let mut xc = x_pos.clone();
    xc.extend(&c_pos);
    let jxc = j.marginal(&xc)?;
    let jc = j.marginal(&c_pos)?;
    let mut cy = c_pos.clone();
    cy.push(y_pos);
    let jcy = j.marginal(&cy)?;

    let n_c = c_dom.case_count() as usize;
    let n_y = y_dom.case_count() as usize;

    let mut unconstrained_cx = Vec::new();
    let mut cx_rows = Vec::with_capacity(jx.probabilities().len());
    for (i, &px) in jx.probabilities().iter().enumerate() {
        let xa = x_dom.assignment_at(i);
        if px == 0.0 {
            unconstrained_cx.push(xa);
            cx_rows.push(vec![1.0 / n_c as f64; n_c]);
            continue;
        }
        let mut row = Vec::with_capacity(n_c);
        for cidx in 0..n_c
        {
            let ca = c_dom.assignment_at(cidx);
            let mut full = xa.clone();
            full.extend(&ca);
            row.push(jxc.prob(&full)? / px);
        }
        cx_rows.push(row);
    }

    let mut unconstrained_yc = Vec::new();
    let mut yc_rows = Vec::with_capacity(jc.probabilities().len());
    for (i, &pc) in jc.probabilities().iter().enumerate() {
        let ca = c_dom.assignment_at(i);
        if pc == 0.0 {
            unconstrained_yc.push(ca);
            yc_rows.push(vec![1.0 / n_y as f64; n_y]);
            continue;
        }
        let mut row = Vec::with_capacity(n_y);
        for yidx in 0..n_y {
            let mut full = ca.clone();
            full.push(yidx);
            row.push(jcy.prob(&full)? / pc);
        }
        yc_rows.push(row);
    }

    let c_given_x = TabularStochasticMap::new(x_dom.clone(), c_dom.clone(), cx_rows)?;
    let y_given_c = TabularStochasticMap::new(c_dom.clone(), y_dom.clone(), yc_rows)?;

    // Reconstruction P(x) P(c|x) P(y|c), compared in the original layout.
    let mut residual = 0.0;
    for (i, &p) in j.probabilities().iter().enumerate() {
        let full = j.domain().assignment_at(i);
        let xa: Assignment = x_pos.iter().map(|&q| full[q]).collect();
        let ca: Assignment = c_pos.iter().map(|&q| full[q]).collect();
        let ya = full[y_pos];
        let px = jx.prob(&xa)?;
        let recon = px
            * c_given_x.rows()[x_dom.index_of(&xa)?][c_dom.index_of(&ca)?]
            * y_given_c.rows()[c_dom.index_of(&ca)?][ya];
        residual += (p - recon).abs();
    }

    Ok(Factorization {
        c_given_x,
        y_given_c,
        residual_tv: residual / 2.0,
        unconstrained_c_given_x: unconstrained_cx,
        unconstrained_y_given_c: unconstrained_yc,
    })
}

/// TV distance between two joints over same-shaped domains.
pub fn joint_tv(a: &JointDistribution, b: &JointDistribution) -> Result<f64> {
    if !a.domain().same_shape(b.domain()) {
        return Err(EngineError::Contract("joint domains differ".into()));
    }
    Ok(total_variation(a.probabilities(), b.probabilities()))
}
