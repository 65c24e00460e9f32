//! Worked fixtures and the synthetic colored-digit generator.
//!
//! The generator builds an enumerable stand-in for the colored-digit
//! running example: four objects (digits 0/1 on red/blue background),
//! `D` redundant binary features encoding the two attributes, a
//! ground-truth encoder and task, the matching formal context, and a small
//! action group (an attribute-preserving "rotation" bit toggle plus a
//! background-color flip). Everything is deterministic for a fixed seed.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Assignment, FiniteDomain, Variable};
use crate::error::{EngineError, Result};
use crate::fca::FormalContext;
use crate::group::{toggle_bits_perm, ActionSet, FiniteAction};
use crate::process::{Node, NodeKind, ProcessDiagram};
use crate::tabular::{JointDistribution, TabularStochasticMap};
use crate::translation::TranslationMap;

/// The five-object context of the worked example: digits and an apple
/// against `red`, `one∧¬fruit`, `zero`, `even`.
pub fn example1_context() -> FormalContext {
    FormalContext::from_rows(
        &["onered", "zeroblue", "zerored", "oneblue", "appler"],
        &["red", "one∧¬fruit", "zero", "even"],
        &[
            &[1, 1, 0, 0], // onered
            &[0, 0, 1, 1], // zeroblue
            &[1, 0, 1, 1], // zerored
            &[0, 1, 0, 0], // oneblue
            &[1, 0, 0, 0], // appler
        ],
    )
    .expect("fixture is well-formed")
}

/// The English/Latin context pair of the translation example: three shared
/// objects, English knows `red`, Latin knows `rubrum` (red things) and
/// `unum` (ones).
pub fn example4_contexts() -> (FormalContext, FormalContext) {
    let english = FormalContext::from_rows(
        &["appler", "onered", "oneblue"],
        &["red"],
        &[&[1], &[1], &[0]],
    )
    .expect("fixture is well-formed");
    let latin = FormalContext::from_rows(
        &["appler", "onered", "oneblue"],
        &["rubrum", "unum"],
        &[
            &[1, 0], // appler
            &[1, 1], // onered
            &[0, 1], // oneblue
        ],
    )
    .expect("fixture is well-formed");
    (english, latin)
}

/// The digit contexts of the reasoning-shortcut example. The Latin side is
/// the model's vocabulary with opposite meaning: `nulla` holds of ones,
/// `unum` of zeros, `par` of evens. The English side is the user's.
pub fn latin_digit_contexts() -> (FormalContext, FormalContext) {
    let objects = ["zerored", "zeroblue", "onered", "oneblue"];
    let latin = FormalContext::from_rows(
        &objects,
        &["nulla", "unum", "par"],
        &[
            &[0, 1, 1], // zerored
            &[0, 1, 1], // zeroblue
            &[1, 0, 0], // onered
            &[1, 0, 0], // oneblue
        ],
    )
    .expect("fixture is well-formed");
    let english = FormalContext::from_rows(
        &objects,
        &["one", "zero", "even"],
        &[
            &[0, 1, 1],
            &[0, 1, 1],
            &[1, 0, 0],
            &[1, 0, 0],
        ],
    )
    .expect("fixture is well-formed");
    (latin, english)
}

/// The English/Latin concept-equivariance example: one object domain,
/// encoders to (one, red) and (unum, rubrum), parity tasks, and the
/// English-to-Latin translation.
pub struct Section5Example {
    pub g: TabularStochasticMap,
    pub g_prime: TabularStochasticMap,
    pub f: TabularStochasticMap,
    pub f_prime: TabularStochasticMap,
    pub tau: TranslationMap,
    /// The feature assignment of the zerored object: digit 0, red
    /// background.
    pub zerored: Assignment,
}

pub fn section5_example() -> Section5Example {
    let x = FiniteDomain::binary(&["digit", "redbg"]);
    let english_c = FiniteDomain::binary(&["one", "red"]);
    let latin_c = FiniteDomain::binary(&["unum", "rubrum"]);
    let g = TabularStochasticMap::deterministic(x.clone(), english_c.clone(), |a| {
        vec![a[0], a[1]]
    })
    .expect("fixture");
    let g_prime = TabularStochasticMap::deterministic(x, latin_c.clone(), |a| {
        vec![a[0], a[1]]
    })
    .expect("fixture");
    let f = TabularStochasticMap::deterministic(
        english_c,
        FiniteDomain::binary(&["even"]),
        |c| vec![1 - c[0]],
    )
    .expect("fixture");
    let f_prime = TabularStochasticMap::deterministic(
        latin_c,
        FiniteDomain::binary(&["par"]),
        |c| vec![1 - c[0]],
    )
    .expect("fixture");
    let tau = TranslationMap::new(&[("one", "unum"), ("red", "rubrum"), ("even", "par")]);
    Section5Example { g, g_prime, f, f_prime, tau, zerored: vec![0, 1] }
}

/// What one feature bit encodes on the object support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitRole {
    Digit { negated: bool },
    Color { negated: bool },
}

/// One generated object with its ground-truth attributes and features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportObject {
    pub id: String,
    pub digit: usize,
    pub red: usize,
    pub features: Assignment,
}

/// Everything the colored-digit generator produces.
pub struct ColoredDigits {
    pub context: FormalContext,
    pub objects: Vec<SupportObject>,
    pub feature_domain: FiniteDomain,
    pub concept_domain: FiniteDomain,
    /// Ground-truth encoder: features to (zero, red), reading the two
    /// designated bits.
    pub encoder: TabularStochasticMap,
    /// Ground-truth task table: (zero, red) to even, even = zero.
    pub task: TabularStochasticMap,
    /// Sparse process form of the task: one box reading `zero`, `red`
    /// discarded.
    pub task_diagram: ProcessDiagram,
    /// P(even, zero, red, x0..x{D-1}) uniform over the four objects.
    pub joint: JointDistribution,
    /// P(X): uniform over the four object feature vectors.
    pub input_dist: JointDistribution,
    pub actions: ActionSet,
    pub roles: Vec<BitRole>,
    /// Index of the attribute-preserving rotation bit (toggled by the
    /// `rotate` action, ignored by the encoder).
    pub free_bit: usize,
    /// Identity translation over zero, red, even.
    pub translation: TranslationMap,
    /// Feature assignment to object id, for membership queries.
    pub object_of: BTreeMap<Assignment, String>,
}

/// Deterministically generates the colored-digit domain with `d_bits`
/// redundant feature bits (at least 3: designated digit and color bits
/// plus the rotation bit; further bits get seeded random roles).
pub fn generate_colored_digits(seed: u64, d_bits: usize) -> Result<ColoredDigits> {
    if d_bits < 3 {
        return Err(EngineError::Precondition(
            "the colored-digit domain needs at least 3 feature bits".into(),
        ));
    }
    if d_bits > 16 {
        return Err(EngineError::Resource(
            "more than 16 feature bits would exceed the sweep caps".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut roles = vec![
        BitRole::Digit { negated: false }, // designated digit bit
        BitRole::Color { negated: false }, // designated color bit
        BitRole::Digit { negated: false }, // rotation bit
    ];
    for _ in 3..d_bits {
        let role = match rng.gen_range(0..4) {
            0 => BitRole::Digit { negated: false },
            1 => BitRole::Digit { negated: true },
            2 => BitRole::Color { negated: false },
            _ => BitRole::Color { negated: true },
        };
        roles.push(role);
    }
    let free_bit = 2usize;

    let attribute_bit = |role: BitRole, digit: usize, red: usize| -> usize {
        match role {
            BitRole::Digit { negated } => digit ^ usize::from(negated),
            BitRole::Color { negated } => red ^ usize::from(negated),
        }
    };

    let mut objects = Vec::new();
    for (digit, red, id) in [
        (0usize, 1usize, "zerored"),
        (0, 0, "zeroblue"),
        (1, 1, "onered"),
        (1, 0, "oneblue"),
    ] {
        let features: Assignment =
            roles.iter().map(|&r| attribute_bit(r, digit, red)).collect();
        objects.push(SupportObject { id: id.into(), digit, red, features });
    }

    let context = FormalContext::new(
        objects.iter().map(|o| o.id.clone()).collect(),
        vec!["red".into(), "zero".into(), "even".into()],
        objects
            .iter()
            .map(|o| vec![o.red == 1, o.digit == 0, o.digit == 0])
            .collect(),
    )?;

    let feature_names: Vec<String> = (0..d_bits).map(|i| format!("x{i}")).collect();
    let feature_domain = FiniteDomain::new(
        feature_names.iter().map(|n| Variable::binary(n.clone())).collect(),
    )?;
    let concept_domain = FiniteDomain::binary(&["zero", "red"]);

    // decode reads the two designated bits only
    let encoder = TabularStochasticMap::deterministic(
        feature_domain.clone(),
        concept_domain.clone(),
        |x| vec![1 - x[0], x[1]],
    )?;
    let task = TabularStochasticMap::deterministic(
        concept_domain.clone(),
        FiniteDomain::binary(&["even"]),
        |c| vec![c[0]],
    )?;
    let task_diagram = ProcessDiagram::new(
        vec![Variable::binary("zero"), Variable::binary("red")],
        vec![
            Node {
                id: "even_box".into(),
                kind: NodeKind::Box {
                    table: TabularStochasticMap::deterministic(
                        FiniteDomain::binary(&["zero"]),
                        FiniteDomain::binary(&["even"]),
                        |c| vec![c[0]],
                    )?,
                    inputs: vec!["zero".into()],
                    output: "even".into(),
                },
            },
            Node { id: "drop_red".into(), kind: NodeKind::Discard { input: "red".into() } },
        ],
        vec!["even".into()],
    )?;

    let mut joint_vars = vec![
        Variable::binary("even"),
        Variable::binary("zero"),
        Variable::binary("red"),
    ];
    joint_vars.extend(feature_domain.variables().iter().cloned());
    let joint_domain = FiniteDomain::new(joint_vars)?;
    let weight = 1.0 / objects.len() as f64;
    let support: Vec<(Assignment, f64)> = objects
        .iter()
        .map(|o| {
            let zero = 1 - o.digit;
            let even = zero;
            let mut a = vec![even, zero, o.red];
            a.extend(&o.features);
            (a, weight)
        })
        .collect();
    let joint = JointDistribution::from_support(joint_domain, &support)?;

    let input_support: Vec<(Assignment, f64)> =
        objects.iter().map(|o| (o.features.clone(), weight)).collect();
    let input_dist = JointDistribution::from_support(feature_domain.clone(), &input_support)?;

    let color_bits: Vec<usize> = roles
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r, BitRole::Color { .. }))
        .map(|(i, _)| i)
        .collect();
    let n_inputs = feature_domain.case_count() as usize;
    let n_concepts = concept_domain.case_count() as usize;
    let identity = FiniteAction::identity("identity", n_inputs, Some(n_concepts));
    let rotate = FiniteAction::new(
        "rotate",
        toggle_bits_perm(&feature_domain, &[free_bit])?,
        Some((0..n_concepts).collect()),
    )?;
    let flip_red_perm = toggle_bits_perm(&concept_domain, &[1])?;
    let color_flip = FiniteAction::new(
        "color_flip",
        toggle_bits_perm(&feature_domain, &color_bits)?,
        Some(flip_red_perm.clone()),
    )?;
    let mut rot_color_bits = color_bits.clone();
    rot_color_bits.push(free_bit);
    let rotate_color_flip = FiniteAction::new(
        "rotate∘color_flip",
        toggle_bits_perm(&feature_domain, &rot_color_bits)?,
        Some(flip_red_perm),
    )?;
    let actions = ActionSet::new(vec![identity, rotate, color_flip, rotate_color_flip]);

    let translation = TranslationMap::identity(&[
        "zero".into(),
        "red".into(),
        "even".into(),
    ]);

    let object_of: BTreeMap<Assignment, String> =
        objects.iter().map(|o| (o.features.clone(), o.id.clone())).collect();

    Ok(ColoredDigits {
        context,
        objects,
        feature_domain,
        concept_domain,
        encoder,
        task,
        task_diagram,
        joint,
        input_dist,
        actions,
        roles,
        free_bit,
        translation,
        object_of,
    })
}

/// A corrupted encoder variant: the `red` concept reads the rotation bit
/// instead of the color bit, breaking both rotation invariance and
/// color-flip equivariance.
pub fn corrupted_encoder(gen: &ColoredDigits) -> Result<TabularStochasticMap> {
    let free = gen.free_bit;
    TabularStochasticMap::deterministic(
        gen.feature_domain.clone(),
        gen.concept_domain.clone(),
        |x| vec![1 - x[0], x[free]],
    )
}
