//! Finite variable domains and mixed-radix assignment indexing.
//!
//! Every probabilistic object in the engine lives on a [`FiniteDomain`]: an
//! ordered list of named variables with finite cardinalities. Assignments
//! are vectors of value indices, enumerated in lexicographic order with the
//! first variable most significant, so that tables and joint vectors have a
//! single canonical layout.

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

/// A single named variable with `card` possible values `0..card`.
///
/// Optional human-readable value labels; when absent, values print as their
/// indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub card: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl Variable {
    pub fn new(name: impl Into<String>, card: usize) -> Self {
        Variable { name: name.into(), card, labels: None }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Variable::new(name, 2)
    }
}

/// An assignment of one value index per variable.
pub type Assignment = Vec<usize>;

/// An ordered list of variables with unique names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Variable>", into = "Vec<Variable>")]
pub struct FiniteDomain {
    variables: Vec<Variable>,
}

impl TryFrom<Vec<Variable>> for FiniteDomain {
    type Error = EngineError;
    fn try_from(variables: Vec<Variable>) -> Result<Self> {
        FiniteDomain::new(variables)
    }
}

impl From<FiniteDomain> for Vec<Variable> {
    fn from(d: FiniteDomain) -> Vec<Variable> {
        d.variables
    }
}

impl FiniteDomain {
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        for v in &variables {
            if v.card == 0 {
                return Err(EngineError::Structural(format!(
                    "variable '{}' has cardinality 0",
                    v.name
                )));
            }
            if let Some(labels) = &v.labels {
                if labels.len() != v.card {
                    return Err(EngineError::Structural(format!(
                        "variable '{}' has {} labels for cardinality {}",
                        v.name,
                        labels.len(),
                        v.card
                    )));
                }
            }
        }
        for i in 1..variables.len() {
            if variables[..i].iter().any(|v| v.name == variables[i].name) {
                return Err(EngineError::Structural(format!(
                    "duplicate variable name '{}'",
                    variables[i].name
                )));
            }
        }
        Ok(FiniteDomain { variables })
    }

    /// Domain of `names.len()` binary variables.
    pub fn binary(names: &[&str]) -> Self {
        FiniteDomain::new(names.iter().map(|n| Variable::binary(*n)).collect())
            .expect("unique names")
    }

    /// The empty domain, with a single (empty) assignment.
    pub fn empty() -> Self {
        FiniteDomain { variables: Vec::new() }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| EngineError::Domain(format!("unknown variable '{name}'")))
    }

    /// Number of assignments, saturating at `u128::MAX`. Large described
    /// domains (a 32x32 pixel grid) are representable even though they can
    /// never be swept.
    pub fn case_count(&self) -> u128 {
        let mut n: u128 = 1;
        for v in &self.variables {
            n = n.saturating_mul(v.card as u128);
        }
        n
    }

    /// Number of assignments as a sweepable size, or a resource error if it
    /// exceeds `cap`.
    pub fn size_capped(&self, cap: usize) -> Result<usize> {
        let n = self.case_count();
        if n > cap as u128 {
            return Err(EngineError::Resource(format!(
                "assignment space of {} exceeds the sweep cap {} (raise it with --sweep-cap)",
                n, cap
            )));
        }
        Ok(n as usize)
    }

    /// Index of `assignment` in lexicographic order (first variable most
    /// significant).
    pub fn index_of(&self, assignment: &[usize]) -> Result<usize> {
        if assignment.len() != self.variables.len() {
            return Err(EngineError::Domain(format!(
                "assignment has {} values, domain has {} variables",
                assignment.len(),
                self.variables.len()
            )));
        }
        let mut idx = 0usize;
        for (v, &a) in self.variables.iter().zip(assignment) {
            if a >= v.card {
                return Err(EngineError::Domain(format!(
                    "value {} out of range for variable '{}' (cardinality {})",
                    a, v.name, v.card
                )));
            }
            idx = idx * v.card + a;
        }
        Ok(idx)
    }

    /// Assignment at lexicographic position `index`.
    pub fn assignment_at(&self, index: usize) -> Assignment {
        let mut rest = index;
        let mut out = vec![0usize; self.variables.len()];
        for (i, v) in self.variables.iter().enumerate().rev() {
            out[i] = rest % v.card;
            rest /= v.card;
        }
        out
    }

    /// All assignments in lexicographic order. Caller is responsible for
    /// checking `size_capped` first on untrusted domains.
    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        let n = self.case_count().min(usize::MAX as u128) as usize;
        (0..n).map(|i| self.assignment_at(i))
    }

    /// Positions of the given variable names, erroring on unknown names and
    /// duplicates.
    pub fn positions_of(&self, names: &[String]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let p = self.position(n)?;
            if out.contains(&p) {
                return Err(EngineError::Contract(format!(
                    "variable '{n}' listed more than once"
                )));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Sub-domain of the variables at `positions`, in that order.
    pub fn restrict(&self, positions: &[usize]) -> FiniteDomain {
        FiniteDomain {
            variables: positions.iter().map(|&p| self.variables[p].clone()).collect(),
        }
    }

    /// True when both domains list the same variable names and cardinalities
    /// in the same order (labels may differ).
    pub fn same_shape(&self, other: &FiniteDomain) -> bool {
        self.variables.len() == other.variables.len()
            && self
                .variables
                .iter()
                .zip(other.variables.iter())
                .all(|(a, b)| a.name == b.name && a.card == b.card)
    }

    /// Concatenation of two domains; names must stay unique.
    pub fn join(&self, other: &FiniteDomain) -> Result<FiniteDomain> {
        let mut vars = self.variables.clone();
        vars.extend(other.variables.iter().cloned());
        FiniteDomain::new(vars)
    }

    /// Render an assignment using value labels where available.
    pub fn format_assignment(&self, assignment: &[usize]) -> String {
        let parts: Vec<String> = self
            .variables
            .iter()
            .zip(assignment)
            .map(|(v, &a)| match &v.labels {
                Some(labels) if a < labels.len() => format!("{}={}", v.name, labels[a]),
                _ => format!("{}={}", v.name, a),
            })
            .collect();
        parts.join(", ")
    }
}

/// Total variation distance between two probability vectors of equal length.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_indexing_round_trips() {
        let d = FiniteDomain::new(vec![
            Variable::new("a", 2),
            Variable::new("b", 3),
            Variable::new("c", 2),
        ])
        .unwrap();
        assert_eq!(d.case_count(), 12);
        for i in 0..12 {
            let a = d.assignment_at(i);
            assert_eq!(d.index_of(&a).unwrap(), i);
        }
        // first variable most significant
        assert_eq!(d.assignment_at(0), vec![0, 0, 0]);
        assert_eq!(d.assignment_at(1), vec![0, 0, 1]);
        assert_eq!(d.assignment_at(11), vec![1, 2, 1]);
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = FiniteDomain::new(vec![Variable::binary("x"), Variable::binary("x")]);
        assert!(matches!(err, Err(EngineError::Structural(_))));
    }

    #[test]
    fn huge_domain_counts_without_overflow() {
        let names: Vec<String> = (0..1024).map(|i| format!("p{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let d = FiniteDomain::binary(&refs);
        assert_eq!(d.len(), 1024);
        assert_eq!(d.case_count(), u128::MAX); // saturated
        assert!(d.size_capped(1 << 22).is_err());
    }

    #[test]
    fn out_of_range_value_is_domain_error() {
        let d = FiniteDomain::binary(&["x"]);
        assert!(matches!(d.index_of(&[2]), Err(EngineError::Domain(_))));
        assert!(matches!(d.index_of(&[0, 0]), Err(EngineError::Domain(_))));
    }
}
