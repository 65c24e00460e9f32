//! Acceptance suite: one test per criterion, each printing a pass line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//! Worked examples are reproduced exactly; property sweeps use frozen
//! seeds so every run checks the identical population.

mod common;

use std::collections::BTreeSet;

use common::{random_context, random_diagram};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use equicheck::align::{detect_reasoning_shortcuts, probe_align, MatchEntry};
use equicheck::blueprint::{generate_suite_bundle, run_suite, Defect};
use equicheck::config::EngineConfig;
use equicheck::domain::{total_variation, Assignment, FiniteDomain};
use equicheck::fca::{
    closure_of_intent, derive_extent, derive_intent, enumerate_concepts, is_concept, object_set,
    sentence_set,
};
use equicheck::generate::{
    corrupted_encoder, example1_context, generate_colored_digits, latin_digit_contexts,
    section5_example,
};
use equicheck::group::{
    check_equivariance, check_invariance, detect_concept_leakage, detect_task_leakage, ActionSet,
    FiniteAction, toggle_bits_perm,
};
use equicheck::process::{
    average_causal_effect, evaluate_diagram, flatten, intervene, InterventionSpec, Node, NodeKind,
    ProcessDiagram,
};
use equicheck::tabular::{
    conditional_mutual_information, mutual_information, JointDistribution, TabularStochasticMap,
};
use equicheck::translation::{check_soundness, TranslationMap};
use equicheck::verifier::{
    check_theorem1_bound, raw_case_comparisons, verify_concept_equivariance,
    verify_concept_equivariance_over,
};
use equicheck::Variable;

fn pass(n: usize, what: &str) {
    println!("[PASS] criterion {n}: {what}");
}

#[test]
fn criterion_01_example1_reproduction() {
    let ctx = example1_context();
    let red = sentence_set(&["red"]);
    let extent = derive_extent(&ctx, &red).unwrap();
    assert_eq!(extent, object_set(&["appler", "onered", "zerored"]));
    let intent = derive_intent(&ctx, &extent).unwrap();
    assert_eq!(intent, red);
    assert!(is_concept(&ctx, &red, &extent).unwrap());
    let mut widened = extent.clone();
    widened.insert("zeroblue".into());
    assert!(!is_concept(&ctx, &red, &widened).unwrap());
    pass(1, "worked-example closure reproduced exactly");
}

#[test]
fn criterion_02_translation_soundness() {
    let (english, latin) = equicheck::generate::example4_contexts();
    let m_star = object_set(&["appler", "onered"]);
    let sound = check_soundness(&english, &latin, &TranslationMap::new(&[("red", "rubrum")]), &m_star)
        .unwrap();
    assert!(sound.sound);
    assert!(sound.failure_diff.is_empty());
    let unsound = check_soundness(&english, &latin, &TranslationMap::new(&[("red", "unum")]), &m_star)
        .unwrap();
    assert!(!unsound.sound);
    assert_eq!(unsound.failure_diff, object_set(&["appler", "oneblue"]));
    pass(2, "red→rubrum sound, red→unum unsound with diff {appler, oneblue}");
}

#[test]
fn criterion_03_step_accounting() {
    // concept route: one object, three translated-variable comparisons
    let ex = section5_example();
    let report = verify_concept_equivariance_over(
        &ex.g,
        &ex.g_prime,
        &ex.f,
        &ex.f_prime,
        &ex.tau,
        std::slice::from_ref(&ex.zerored),
        1e-9,
        100,
    )
    .unwrap();
    assert_eq!(report.degree, 1.0);
    assert_eq!(report.comparisons, 3, "two concepts plus one task variable");
    assert_eq!(report.steps_used, 1, "a single concept profile");

    // raw route: one case over a 32x32 grid of binary pixels
    let names: Vec<String> = (0..1024).map(|i| format!("p{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let pixels = FiniteDomain::binary(&refs);
    assert_eq!(raw_case_comparisons(&pixels), 1024);
    pass(3, "3 checks on the concept route, 1024 per-pixel comparisons on the raw route");
}

#[test]
fn criterion_04_theorem1_property_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for trial in 0..100 {
        let k = rng.gen_range(1..=4usize);
        let d = rng.gen_range((k + 1)..=10usize);
        let x_names: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        let x_refs: Vec<&str> = x_names.iter().map(|s| s.as_str()).collect();
        let c_names: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
        let c_refs: Vec<&str> = c_names.iter().map(|s| s.as_str()).collect();
        let x_domain = FiniteDomain::binary(&x_refs);
        let c_domain = FiniteDomain::binary(&c_refs);

        let codes: Vec<usize> = (0..(1usize << d)).map(|_| rng.gen_range(0..(1 << k))).collect();
        let g = TabularStochasticMap::deterministic(x_domain.clone(), c_domain.clone(), |x| {
            let idx = x.iter().fold(0, |acc, &b| acc * 2 + b);
            (0..k).map(|i| (codes[idx] >> (k - 1 - i)) & 1).collect()
        })
        .unwrap();
        let task_codes: Vec<usize> = (0..(1usize << k)).map(|_| rng.gen_range(0..2)).collect();
        let f = TabularStochasticMap::deterministic(
            c_domain.clone(),
            FiniteDomain::binary(&["y"]),
            |c| {
                let idx = c.iter().fold(0, |acc, &b| acc * 2 + b);
                vec![task_codes[idx]]
            },
        )
        .unwrap();
        let u_names: Vec<String> = (0..k).map(|i| format!("u{i}")).collect();
        let g_ref = g.renamed(None, Some(&u_names)).unwrap();
        let f_ref = f
            .renamed(Some(&u_names), Some(&["v".into()]))
            .unwrap();
        let mut pairs: Vec<(&str, &str)> = c_names
            .iter()
            .zip(&u_names)
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        pairs.push(("y", "v"));
        let tau = TranslationMap::new(&pairs);

        let report =
            verify_concept_equivariance(&g, &g_ref, &f, &f_ref, &tau, 1e-9, 10).unwrap();
        assert_eq!(report.degree, 1.0, "trial {trial}");
        assert!(
            report.steps_used <= 1 << k,
            "trial {trial}: {} steps for K={k}",
            report.steps_used
        );
        let t1 = check_theorem1_bound(&report, d, k);
        assert!(t1.holds, "trial {trial}: {}", t1.detail);
        assert!(t1.concept_cases < t1.feature_cases);
    }
    pass(4, "steps ≤ 2^K < 2^D on 100 random models, zero violations");
}

#[test]
fn criterion_05_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..200 {
        let ctx = random_context(&mut rng, 12, 10);
        let lectic = enumerate_concepts(&ctx, 20).unwrap();
        // independent power-set closure oracle
        let n = ctx.sentences().len();
        let mut oracle = BTreeSet::new();
        for mask in 0..(1u32 << n) {
            let intent: BTreeSet<String> = ctx
                .sentences()
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| s.clone())
                .collect();
            let pair = closure_of_intent(&ctx, &intent).unwrap();
            oracle.insert((pair.extent, pair.intent));
        }
        let listed: BTreeSet<_> =
            lectic.iter().map(|c| (c.extent.clone(), c.intent.clone())).collect();
        assert_eq!(listed.len(), lectic.len(), "trial {trial}: duplicates");
        assert_eq!(listed, oracle, "trial {trial}");
    }
    pass(5, "lectic enumeration equals power-set closure on 200 random contexts");
}

#[test]
fn criterion_06_information_identities() {
    // generated Markov-chain joints: zero conditional MI, zero gap
    for seed in [0u64, 1, 2, 3, 4] {
        let gen = generate_colored_digits(seed, 6).unwrap();
        let x_vars: Vec<String> = (0..6).map(|i| format!("x{i}")).collect();
        let c_vars: Vec<String> = vec!["zero".into(), "red".into()];
        let mi_yc = mutual_information(&gen.joint, &["even".into()], &c_vars).unwrap();
        let mi_yx = mutual_information(&gen.joint, &["even".into()], &x_vars).unwrap();
        assert!((mi_yc - mi_yx).abs() <= 1e-9, "seed {seed}: gap {}", (mi_yc - mi_yx).abs());
        for xj in &x_vars {
            let cmi =
                conditional_mutual_information(&gen.joint, "even", xj, &c_vars).unwrap();
            assert!(cmi <= 1e-9, "seed {seed}: I(Y;{xj}|C) = {cmi}");
        }
    }

    // injected leakage: Y reads a feature bit beyond C
    let domain = FiniteDomain::binary(&["x0", "x1", "c", "y"]);
    let mut support = Vec::new();
    for x0 in 0..2 {
        for x1 in 0..2 {
            support.push((vec![x0, x1, x0, x0 ^ x1], 0.25));
        }
    }
    let leaky = JointDistribution::from_support(domain, &support).unwrap();
    let cmi = conditional_mutual_information(&leaky, "y", "x1", &["c".into()]).unwrap();
    assert!(cmi > 1e-3, "leak too small: {cmi}");
    pass(6, "chain joints exact within 1e-9 nats; injected leakage exceeds 1e-3 nats");
}

#[test]
fn criterion_07_invariance_and_equivariance() {
    let gen = generate_colored_digits(0, 6).unwrap();
    let rotate = gen.actions.actions.iter().find(|a| a.name == "rotate").unwrap();
    let color_flip = gen.actions.actions.iter().find(|a| a.name == "color_flip").unwrap();

    let inv = check_invariance(&gen.encoder, rotate, 1e-9).unwrap();
    assert!(inv.holds && inv.witnesses.is_empty());
    let equ = check_equivariance(&gen.encoder, color_flip, 1e-9).unwrap();
    assert!(equ.holds && equ.witnesses.is_empty());

    // corrupted encoder: red reads the rotation bit
    let bad = corrupted_encoder(&gen).unwrap();
    let inv_bad = check_invariance(&bad, rotate, 1e-9).unwrap();
    assert!(!inv_bad.holds && !inv_bad.witnesses.is_empty());
    let equ_bad = check_equivariance(&bad, color_flip, 1e-9).unwrap();
    assert!(!equ_bad.holds && !equ_bad.witnesses.is_empty());

    // witness sets equal an independent brute-force scan
    let domain = gen.feature_domain.clone();
    let brute_inv: Vec<Assignment> = domain
        .assignments()
        .filter(|x| {
            let moved = rotate.apply(&domain, x).unwrap();
            bad.row(&moved).unwrap() != bad.row(x).unwrap()
        })
        .collect();
    let got_inv: Vec<Assignment> = inv_bad.witnesses.iter().map(|w| w.input.clone()).collect();
    assert_eq!(got_inv, brute_inv);
    let brute_equ: Vec<Assignment> = domain
        .assignments()
        .filter(|x| {
            let moved = color_flip.apply(&domain, x).unwrap();
            let pushed = color_flip.push_concepts(bad.row(x).unwrap()).unwrap();
            total_variation(bad.row(&moved).unwrap(), &pushed) > 1e-9
        })
        .collect();
    let got_equ: Vec<Assignment> = equ_bad.witnesses.iter().map(|w| w.input.clone()).collect();
    assert_eq!(got_equ, brute_equ);
    pass(7, "clean encoder invariant+equivariant; corrupted witness sets match brute force");
}

#[test]
fn criterion_08_interventions() {
    // 100 random diagrams: do-intervention equals truncated factorization
    let mut checked = 0usize;
    let mut seed = 0u64;
    while checked < 100 {
        let (diagram, targets) = random_diagram(seed, 16);
        seed += 1;
        if targets.is_empty() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xACE);
        let target = &targets[rng.gen_range(0..targets.len())];
        let input = diagram.input_domain().unwrap();
        for x in input.assignments() {
            for k in 0..2usize {
                let spec = InterventionSpec::Do { target: target.clone(), value: k };
                let sequential =
                    evaluate_diagram(&intervene(&diagram, &spec).unwrap(), &x).unwrap();
                let truncated = flatten::truncated_do_joint(&diagram, &x, target, k).unwrap();
                let tv = total_variation(sequential.probabilities(), truncated.probabilities());
                assert!(tv <= 1e-12, "diagram {seed} target {target} x {x:?} k {k}: tv {tv}");
            }
        }
        checked += 1;
    }

    // ACE exact values
    let identity_chain = ProcessDiagram::new(
        vec![Variable::binary("x")],
        vec![
            Node {
                id: "enc".into(),
                kind: NodeKind::Box {
                    table: TabularStochasticMap::identity(FiniteDomain::binary(&["x"]))
                        .unwrap()
                        .renamed(None, Some(&["c".into()]))
                        .unwrap(),
                    inputs: vec!["x".into()],
                    output: "c".into(),
                },
            },
            Node {
                id: "cp".into(),
                kind: NodeKind::Copy { input: "c".into(), outputs: ["c1".into(), "c2".into()] },
            },
            Node {
                id: "task".into(),
                kind: NodeKind::Box {
                    table: TabularStochasticMap::identity(FiniteDomain::binary(&["c1"]))
                        .unwrap()
                        .renamed(None, Some(&["y".into()]))
                        .unwrap(),
                    inputs: vec!["c1".into()],
                    output: "y".into(),
                },
            },
        ],
        vec!["y".into(), "c2".into()],
    )
    .unwrap();
    let x_dist =
        JointDistribution::new(FiniteDomain::binary(&["x"]), vec![0.5, 0.5]).unwrap();
    assert_eq!(average_causal_effect(&identity_chain, "c", "y", &x_dist).unwrap(), 1.0);

    // colored-digit model: color concept has no effect on the parity task
    let gen = generate_colored_digits(0, 6).unwrap();
    let model = ProcessDiagram::new(
        gen.feature_domain.variables().to_vec(),
        vec![
            Node {
                id: "enc".into(),
                kind: NodeKind::Box {
                    table: TabularStochasticMap::deterministic(
                        gen.feature_domain.clone(),
                        FiniteDomain::binary(&["zero"]),
                        |x| vec![1 - x[0]],
                    )
                    .unwrap(),
                    inputs: gen.feature_domain.names().iter().map(|s| s.to_string()).collect(),
                    output: "zero".into(),
                },
            },
            Node {
                id: "color".into(),
                kind: NodeKind::Constant { output: "red".into(), dist: vec![0.5, 0.5] },
            },
            Node {
                id: "task".into(),
                kind: NodeKind::Box {
                    table: TabularStochasticMap::identity(FiniteDomain::binary(&["zero"]))
                        .unwrap()
                        .renamed(None, Some(&["even".into()]))
                        .unwrap(),
                    inputs: vec!["zero".into()],
                    output: "even".into(),
                },
            },
        ],
        vec!["even".into(), "red".into()],
    )
    .unwrap();
    let ace_color = average_causal_effect(&model, "red", "even", &gen.input_dist).unwrap();
    assert_eq!(ace_color, 0.0);
    let ace_digit = average_causal_effect(&model, "zero", "even", &gen.input_dist).unwrap();
    assert_eq!(ace_digit, 1.0);
    pass(8, "truncated factorization agrees on 100 diagrams; ACE values exact");
}

#[test]
fn criterion_09_alignment_shortcut() {
    // at least two sound translations in the Latin/English digit contexts
    let (latin, english) = latin_digit_contexts();
    let m_star = object_set(&["zeroblue", "zerored"]);
    let shortcut = detect_reasoning_shortcuts(&latin, &english, &m_star, 6, 8).unwrap();
    assert!(shortcut.shortcut);
    assert!(shortcut.sound_translations.len() >= 2);

    // probe matching across the opposite-meaning concepts
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
    assert_eq!(result.divergence, 0.0);
    assert!(!result.identifiable);
    assert_eq!(
        result.matching,
        vec![
            MatchEntry { learned: "nulla".into(), reference: "one".into(), flipped: false },
            MatchEntry { learned: "unum".into(), reference: "zero".into(), flipped: false },
        ]
    );
    pass(9, "shortcut flagged, probe matches {unum→zero, nulla→one} at divergence 0, not identifiable");
}

#[test]
fn criterion_10_leakage_witnesses() {
    // intensity action: concepts fixed, object class flips (task leakage)
    let d = FiniteDomain::binary(&["color", "intensity"]);
    let c_given_x = TabularStochasticMap::deterministic(
        d.clone(),
        FiniteDomain::binary(&["red", "edible"]),
        |x| vec![x[0], x[0]],
    )
    .unwrap();
    let y_given_x = TabularStochasticMap::deterministic(
        d.clone(),
        FiniteDomain::binary(&["apple"]),
        |x| vec![x[0] & (1 - x[1])],
    )
    .unwrap();
    let intensity = FiniteAction::new(
        "intensity",
        toggle_bits_perm(&d, &[1]).unwrap(),
        Some((0..4).collect()),
    )
    .unwrap();
    let actions = ActionSet::new(vec![
        FiniteAction::identity("id", 4, Some(4)),
        intensity.clone(),
    ]);
    let cases: Vec<Assignment> = d.assignments().collect();
    let task_witnesses =
        detect_task_leakage(&c_given_x, &y_given_x, &actions, &cases, 1e-9).unwrap();
    assert!(!task_witnesses.is_empty());
    // independent exhaustive scan
    let mut brute = Vec::new();
    for x in &cases {
        for action in &actions.actions {
            let moved = action.apply(&d, x).unwrap();
            if c_given_x.row(&moved).unwrap() == c_given_x.row(x).unwrap()
                && y_given_x.row(&moved).unwrap() != y_given_x.row(x).unwrap()
            {
                brute.push((x.clone(), action.name.clone()));
            }
        }
    }
    let got: Vec<(Assignment, String)> =
        task_witnesses.iter().map(|w| (w.input.clone(), w.action.clone())).collect();
    assert_eq!(got, brute);

    // inter-concept leakage: edible responds to an action declared to move
    // only red
    let entangled = TabularStochasticMap::deterministic(
        d.clone(),
        FiniteDomain::binary(&["red", "edible"]),
        |x| vec![x[0], x[1]],
    )
    .unwrap();
    let concept_witnesses =
        detect_concept_leakage(&entangled, &ActionSet::new(vec![intensity]), &cases, 0, 1, 1e-9)
            .unwrap();
    assert!(!concept_witnesses.is_empty());
    let mut brute_c = 0usize;
    for x in &cases {
        let moved ={
            let a = &ActionSet::new(vec![FiniteAction::new(
                "intensity",
                toggle_bits_perm(&d, &[1]).unwrap(),
                Some((0..4).collect()),
            )
            .unwrap()]);
            a.actions[0].apply(&d, x).unwrap()
        };
        if entangled.output_marginal(&moved, 1).unwrap()
            != entangled.output_marginal(x, 1).unwrap()
        {
            brute_c += 1;
        }
    }
    assert_eq!(concept_witnesses.len(), brute_c);

    // clean factorized model: task reads concepts only
    let y_clean = TabularStochasticMap::deterministic(
        d.clone(),
        FiniteDomain::binary(&["apple"]),
        |x| vec![x[0]],
    )
    .unwrap();
    assert!(detect_task_leakage(&c_given_x, &y_clean, &actions, &cases, 1e-9)
        .unwrap()
        .is_empty());
    let disentangled_actions = ActionSet::new(vec![FiniteAction::new(
        "flip_red",
        toggle_bits_perm(&d, &[0]).unwrap(),
        Some(toggle_bits_perm(&FiniteDomain::binary(&["red", "edible"]), &[0]).unwrap()),
    )
    .unwrap()]);
    assert!(detect_concept_leakage(&entangled, &disentangled_actions, &cases, 0, 1, 1e-9)
        .unwrap()
        .is_empty());
    pass(10, "leakage witness lists match the exhaustive scans; clean models yield none");
}

#[test]
fn criterion_11_end_to_end_suite() {
    let config = EngineConfig::default();
    let clean = generate_suite_bundle(0, 6, None).unwrap();
    let report = run_suite(&clean, &config).unwrap();
    assert!(report.overall, "clean bundle must pass: {}", report.to_json());
    assert_eq!(report.equivariance.as_ref().unwrap().degree, 1.0);
    for check in &report.checks {
        assert!(check.passed, "{}: {}", check.name, check.details);
    }

    let cases = [
        (Defect::Leakage, "leakage"),
        (Defect::BrokenTranslation, "soundness"),
        (Defect::DenseBox, "sparsity"),
    ];
    for (defect, expected) in cases {
        let bundle = generate_suite_bundle(0, 6, Some(defect)).unwrap();
        let report = run_suite(&bundle, &config).unwrap();
        assert!(!report.overall);
        for check in &report.checks {
            if check.name == expected {
                assert!(!check.passed, "{defect:?} must fail {expected}");
            } else {
                assert!(
                    check.passed,
                    "{defect:?} must only fail {expected}, but {} failed: {}",
                    check.name, check.details
                );
            }
        }
    }
    pass(11, "suite passes clean and fails exactly the defective check per injected defect");
}
