//! Command-line interface: one noun-verb subcommand per verification
//! construct, JSON in, JSON report out.
//!
//! Every input argument takes a file path or `-` for standard input. Exit
//! codes: 0 the checked property holds (or the command is purely
//! generative), 3 the property is violated, 2 malformed input, 4 an
//! enumeration cap was hit. `--text` renders a human summary instead of
//! JSON.

use std::collections::BTreeSet;
use std::io::Read;

use clap::{Args, Parser, Subcommand};

use crate::align::{detect_reasoning_shortcuts, probe_align};
use crate::blueprint::{generate_suite_bundle, run_suite, Defect, SuiteBundle};
use crate::config::EngineConfig;
use crate::domain::Assignment;
use crate::error::{EngineError, Result};
use crate::fca::{
    closure_of_intent, enumerate_concepts, is_concept, FormalContext,
};
use crate::group::{
    check_equivariance, check_invariance, detect_concept_leakage, detect_task_leakage, ActionSet,
    FiniteAction,
};
use crate::process::{
    average_causal_effect, evaluate_diagram, intervene, InterventionSpec, ProcessDiagram,
};
use crate::tabular::{JointDistribution, TabularStochasticMap};
use crate::translation::{check_soundness, TranslationMap};
use crate::verifier::{
    check_theorem1_bound, verify_concept_equivariance, verify_concept_equivariance_over,
    verify_inference_equivariance, verify_inference_equivariance_over, ValueMap,
};

#[derive(Parser)]
#[command(name = "equicheck", version, about = "Verification engine for concept-based inference equivariance")]
struct Cli {
    /// JSON config file with tolerances and caps; flags override it.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Render a human-readable summary instead of JSON.
    #[arg(long, global = true)]
    text: bool,

    /// Override the mutual-information tolerance in nats.
    #[arg(long, global = true)]
    eps_nats: Option<f64>,

    /// Override the total-variation tolerance for commutation.
    #[arg(long, global = true)]
    tv_tol: Option<f64>,

    /// Override the concept enumeration cap (sentences).
    #[arg(long, global = true)]
    enum_cap: Option<usize>,

    /// Override the sparsity ratio threshold.
    #[arg(long, global = true)]
    sparsity_ratio: Option<f64>,

    /// Override the counterexample list cap.
    #[arg(long, global = true)]
    counterexample_cap: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check concept closure: with --extent, decide whether (intent,
    /// extent) is a concept; otherwise report the closure of the intent.
    CheckClosure(CheckClosureArgs),
    /// Enumerate every concept of a context in lectic order.
    EnumerateConcepts(EnumerateArgs),
    /// Check closure preservation of a sentence translation on an object
    /// set. Exit 0 sound, 3 unsound.
    CheckTranslation(CheckTranslationArgs),
    /// Verify raw inference equivariance of two tables under value
    /// translations. Exit 0 iff the diagram commutes everywhere.
    Verify(VerifyArgs),
    /// Verify concept-based inference equivariance of encoder/task pairs.
    VerifyConcepts(VerifyConceptsArgs),
    /// Check concept invariance of an encoder under an action.
    CheckInvariance(ActionArgs),
    /// Check concept equivariance of an encoder under an action with a
    /// declared concept map.
    CheckEquivariance(ActionArgs),
    /// Scan for task or inter-concept leakage witnesses. Exit 0 iff none.
    DetectLeakage(DetectLeakageArgs),
    /// Apply a ground-truth or do-intervention to a diagram; prints the
    /// intervened diagram, or its evaluation when --input is given.
    Intervene(InterveneArgs),
    /// Average causal effect of a binary concept wire on a task wire.
    Ace(AceArgs),
    /// Probe-align learned concepts to reference concepts.
    Align(AlignArgs),
    /// Detect reasoning shortcuts: enumerate sound translations between
    /// two contexts. Exit 3 when two or more exist.
    DetectShortcuts(ShortcutArgs),
    /// Run the full verification suite on a bundle. Exit 0 iff all enabled
    /// checks pass.
    Suite(SuiteArgs),
    /// Generate the synthetic colored-digit bundle.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct CheckClosureArgs {
    /// Context JSON (path or -).
    #[arg(long)]
    context: String,
    /// Comma-separated sentence ids.
    #[arg(long)]
    intent: String,
    /// Comma-separated object ids; when given, decides is_concept.
    #[arg(long)]
    extent: Option<String>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    context: String,
}

#[derive(Args)]
struct CheckTranslationArgs {
    /// Source context JSON.
    #[arg(long)]
    source: String,
    /// Target context JSON.
    #[arg(long)]
    target: String,
    /// Translation JSON ({"mapping": {...}}).
    #[arg(long)]
    translation: String,
    /// Comma-separated object ids forming M*.
    #[arg(long)]
    objects: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Model table JSON.
    #[arg(long)]
    model: String,
    /// User table JSON.
    #[arg(long)]
    user: String,
    /// Input value map JSON.
    #[arg(long)]
    tau_in: String,
    /// Output value map JSON.
    #[arg(long)]
    tau_out: String,
    /// Optional case list JSON (array of assignments); default sweeps the
    /// model's whole input domain.
    #[arg(long)]
    cases: Option<String>,
}

#[derive(Args)]
struct VerifyConceptsArgs {
    /// Model encoder table JSON (g).
    #[arg(long)]
    encoder: String,
    /// Reference encoder table JSON (g').
    #[arg(long)]
    reference_encoder: String,
    /// Model task table JSON (f).
    #[arg(long)]
    task: String,
    /// Reference task table JSON (f').
    #[arg(long)]
    reference_task: String,
    /// Sentence translation JSON covering concepts and tasks.
    #[arg(long)]
    translation: String,
    /// Optional case list JSON.
    #[arg(long)]
    cases: Option<String>,
    /// Also check the step bound for these dimensions, as "D,K".
    #[arg(long)]
    bound: Option<String>,
}

#[derive(Args)]
struct ActionArgs {
    /// Encoder table JSON.
    #[arg(long)]
    encoder: String,
    /// Action JSON.
    #[arg(long)]
    action: String,
}

#[derive(Args)]
struct DetectLeakageArgs {
    /// Concept posterior table JSON (P(C|X)).
    #[arg(long)]
    encoder: String,
    /// Task table JSON (P(Y|C)); composed with the encoder for the task
    /// posterior. Alternatively give --task-posterior directly.
    #[arg(long)]
    task: Option<String>,
    /// Task posterior table JSON (P(Y|X)).
    #[arg(long)]
    task_posterior: Option<String>,
    /// Action set JSON.
    #[arg(long)]
    actions: String,
    /// "task" or "concept".
    #[arg(long, default_value = "task")]
    kind: String,
    /// Source concept index for concept leakage.
    #[arg(long)]
    concept_i: Option<usize>,
    /// Responding concept index for concept leakage.
    #[arg(long)]
    concept_j: Option<usize>,
    /// Optional case list JSON; default sweeps the whole input domain.
    #[arg(long)]
    cases: Option<String>,
}

#[derive(Args)]
struct InterveneArgs {
    /// Diagram JSON.
    #[arg(long)]
    diagram: String,
    /// Target wire name.
    #[arg(long)]
    target: String,
    /// Do-intervention value.
    #[arg(long = "do")]
    do_value: Option<usize>,
    /// Ground-truth distribution as comma-separated probabilities.
    #[arg(long)]
    ground_truth: Option<String>,
    /// Optional input assignment (comma-separated values); when given the
    /// intervened diagram is evaluated instead of printed.
    #[arg(long)]
    input: Option<String>,
}

#[derive(Args)]
struct AceArgs {
    #[arg(long)]
    diagram: String,
    /// Binary concept wire.
    #[arg(long)]
    target: String,
    /// Task output wire.
    #[arg(long)]
    task: String,
    /// Input distribution JSON over the free inputs.
    #[arg(long)]
    input_dist: String,
}

#[derive(Args)]
struct AlignArgs {
    /// Learned encoder table JSON.
    #[arg(long)]
    learned: String,
    /// Reference encoder table JSON.
    #[arg(long)]
    reference: String,
    /// Input distribution JSON.
    #[arg(long)]
    input_dist: String,
}

#[derive(Args)]
struct ShortcutArgs {
    #[arg(long)]
    source: String,
    #[arg(long)]
    target: String,
    /// Comma-separated object ids forming M*.
    #[arg(long)]
    objects: String,
}

#[derive(Args)]
struct SuiteArgs {
    /// Suite bundle JSON.
    #[arg(long)]
    bundle: String,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    d_bits: usize,
    /// Inject a single defect: leakage, broken-translation or dense-box.
    #[arg(long)]
    defect: Option<String>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<String>,
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

fn comma_set(s: &str) -> BTreeSet<String> {
    s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

fn parse_assignment(s: &str) -> Result<Assignment> {
    s.split(',')
        .map(|p| {
            p.trim().parse::<usize>().map_err(|_| {
                EngineError::Contract(format!("'{p}' is not a value index"))
            })
        })
        .collect()
}

fn load_cases(path: &Option<String>) -> Result<Option<Vec<Assignment>>> {
    match path {
        Some(p) => {
            let text = read_input(p)?;
            Ok(Some(serde_json::from_str(&text)?))
        }
        None => Ok(None),
    }
}

fn effective_config(cli: &Cli) -> Result<EngineConfig> {
    let mut config = match &cli.config {
        Some(path) => EngineConfig::from_json(&read_input(path)?)?,
        None => EngineConfig::default(),
    };
    if let Some(v) = cli.eps_nats {
        config.eps_nats = v;
    }
    if let Some(v) = cli.tv_tol {
        config.tv_tol = v;
    }
    if let Some(v) = cli.enum_cap {
        config.concept_enum_cap = v;
    }
    if let Some(v) = cli.sparsity_ratio {
        config.sparsity_ratio_max = v;
    }
    if let Some(v) = cli.counterexample_cap {
        config.counterexample_cap = v;
    }
    Ok(config)
}

/// Parses arguments, runs a command, prints its report and returns the
/// process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let config = effective_config(cli)?;
    match &cli.command {
        Command::CheckClosure(args) => {
            let ctx = FormalContext::from_json(&read_input(&args.context)?)?;
            let intent = comma_set(&args.intent);
            match &args.extent {
                Some(extent) => {
                    let extent = comma_set(extent);
                    let verdict = is_concept(&ctx, &intent, &extent)?;
                    let closure = closure_of_intent(&ctx, &intent)?;
                    if cli.text {
                        println!(
                            "is_concept: {verdict}\nclosure extent: {:?}\nclosure intent: {:?}",
                            closure.extent, closure.intent
                        );
                    } else {
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&serde_json::json!({
                                "is_concept": verdict,
                                "closure": closure,
                            }))?
                        );
                    }
                    Ok(if verdict { 0 } else { 3 })
                }
                None => {
                    let closure = closure_of_intent(&ctx, &intent)?;
                    if cli.text {
                        println!(
                            "extent: {:?}\nintent: {:?}",
                            closure.extent, closure.intent
                        );
                    } else {
                        println!("{}", serde_json::to_string_pretty(&closure)?);
                    }
                    Ok(0)
                }
            }
        }
        Command::EnumerateConcepts(args) => {
            let ctx = FormalContext::from_json(&read_input(&args.context)?)?;
            let concepts = enumerate_concepts(&ctx, config.concept_enum_cap)?;
            if cli.text {
                println!("{} concepts", concepts.len());
                for c in &concepts {
                    println!("  {:?} / {:?}", c.extent, c.intent);
                }
            } else {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "count": concepts.len(),
                        "concepts": concepts,
                    }))?
                );
            }
            Ok(0)
        }
        Command::CheckTranslation(args) => {
            let source = FormalContext::from_json(&read_input(&args.source)?)?;
            let target = FormalContext::from_json(&read_input(&args.target)?)?;
            let tau = TranslationMap::from_json(&read_input(&args.translation)?)?;
            let m_star = comma_set(&args.objects);
            let cert = check_soundness(&source, &target, &tau, &m_star)?;
            if cli.text {
                println!(
                    "sound: {}\nintent: {:?}\ntranslated: {:?}\nround trip: {:?}\ndiff: {:?}",
                    cert.sound, cert.intent, cert.translated_intent, cert.round_trip,
                    cert.failure_diff
                );
            } else {
                println!("{}", serde_json::to_string_pretty(&cert)?);
            }
            Ok(if cert.sound { 0 } else { 3 })
        }
        Command::Verify(args) => {
            let m = TabularStochasticMap::from_json(&read_input(&args.model)?)?;
            let h = TabularStochasticMap::from_json(&read_input(&args.user)?)?;
            let tau_in = ValueMap::from_json(&read_input(&args.tau_in)?)?;
            let tau_out = ValueMap::from_json(&read_input(&args.tau_out)?)?;
            let report = match load_cases(&args.cases)? {
                Some(cases) => verify_inference_equivariance_over(
                    &m, &h, &tau_in, &tau_out, &cases, config.tv_tol,
                    config.counterexample_cap,
                )?,
                None => verify_inference_equivariance(
                    &m, &h, &tau_in, &tau_out, &m.input_domain().clone(), config.tv_tol,
                    config.counterexample_cap,
                )?,
            };
            print_verification(cli.text, &report)?;
            Ok(if report.degree == 1.0 { 0 } else { 3 })
        }
        Command::VerifyConcepts(args) => {
            let g = TabularStochasticMap::from_json(&read_input(&args.encoder)?)?;
            let g_prime =
                TabularStochasticMap::from_json(&read_input(&args.reference_encoder)?)?;
            let f = TabularStochasticMap::from_json(&read_input(&args.task)?)?;
            let f_prime = TabularStochasticMap::from_json(&read_input(&args.reference_task)?)?;
            let tau = TranslationMap::from_json(&read_input(&args.translation)?)?;
            let report = match load_cases(&args.cases)? {
                Some(cases) => verify_concept_equivariance_over(
                    &g, &g_prime, &f, &f_prime, &tau, &cases, config.tv_tol,
                    config.counterexample_cap,
                )?,
                None => verify_concept_equivariance(
                    &g, &g_prime, &f, &f_prime, &tau, config.tv_tol,
                    config.counterexample_cap,
                )?,
            };
            let mut ok = report.degree == 1.0;
            if let Some(bound) = &args.bound {
                let parts: Vec<&str> = bound.split(',').collect();
                if parts.len() != 2 {
                    return Err(EngineError::Contract("--bound expects \"D,K\"".into()));
                }
                let d: usize = parts[0].trim().parse().map_err(|_| {
                    EngineError::Contract("--bound expects numeric D".into())
                })?;
                let k: usize = parts[1].trim().parse().map_err(|_| {
                    EngineError::Contract("--bound expects numeric K".into())
                })?;
                let t1 = check_theorem1_bound(&report, d, k);
                if cli.text {
                    println!("step bound: {} ({})", t1.holds, t1.detail);
                } else {
                    println!("{}", serde_json::to_string_pretty(&t1)?);
                }
                ok = ok && t1.holds;
            }
            print_verification(cli.text, &report)?;
            Ok(if ok { 0 } else { 3 })
        }
        Command::CheckInvariance(args) => {
            let g = TabularStochasticMap::from_json(&read_input(&args.encoder)?)?;
            let action: FiniteAction = serde_json::from_str(&read_input(&args.action)?)?;
            let report = check_invariance(&g, &action, config.tv_tol)?;
            if cli.text {
                println!(
                    "invariant: {} ({} witnesses over {} cases)",
                    report.holds,
                    report.witnesses.len(),
                    report.checked
                );
            } else {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            Ok(if report.holds { 0 } else { 3 })
        }
        Command::CheckEquivariance(args) => {
            let g = TabularStochasticMap::from_json(&read_input(&args.encoder)?)?;
            let action: FiniteAction = serde_json::from_str(&read_input(&args.action)?)?;
            let report = check_equivariance(&g, &action, config.tv_tol)?;
            if cli.text {
                println!(
                    "equivariant: {} ({} witnesses over {} cases)",
                    report.holds,
                    report.witnesses.len(),
                    report.checked
                );
            } else {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            Ok(if report.holds { 0 } else { 3 })
        }
        Command::DetectLeakage(args) => {
            let encoder = TabularStochasticMap::from_json(&read_input(&args.encoder)?)?;
            let actions = ActionSet::from_json(&read_input(&args.actions)?)?;
            let cases = match load_cases(&args.cases)? {
                Some(c) => c,
                None => {
                    encoder.input_domain().size_capped(1 << 22)?;
                    encoder.input_domain().assignments().collect()
                }
            };
            let witnesses = match args.kind.as_str() {
                "task" => {
                    let y_given_x = match (&args.task, &args.task_posterior) {
                        (Some(task), None) => {
                            let f = TabularStochasticMap::from_json(&read_input(task)?)?;
                            encoder.compose(&f)?
                        }
                        (None, Some(posterior)) => {
                            TabularStochasticMap::from_json(&read_input(posterior)?)?
                        }
                        _ => {
                            return Err(EngineError::Contract(
                                "task leakage needs exactly one of --task or --task-posterior"
                                    .into(),
                            ));
                        }
                    };
                    detect_task_leakage(&encoder, &y_given_x, &actions, &cases, config.tv_tol)?
                }
                "concept" => {
                    let (i, j) = match (args.concept_i, args.concept_j) {
                        (Some(i), Some(j)) => (i, j),
                        _ => {
                            return Err(EngineError::Contract(
                                "concept leakage needs --concept-i and --concept-j".into(),
                            ));
                        }
                    };
                    detect_concept_leakage(&encoder, &actions, &cases, i, j, config.tv_tol)?
                }
                other => {
                    return Err(EngineError::Contract(format!(
                        "unknown leakage kind '{other}' (task or concept)"
                    )));
                }
            };
            if cli.text {
                println!("{} leakage witnesses", witnesses.len());
                for w in &witnesses {
                    println!("  x={:?} under '{}' (tv {:.3})", w.input, w.action, w.response_tv);
                }
            } else {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "count": witnesses.len(),
                        "witnesses": witnesses,
                    }))?
                );
            }
            Ok(if witnesses.is_empty() { 0 } else { 3 })
        }
        Command::Intervene(args) => {
            let diagram = ProcessDiagram::from_json(&read_input(&args.diagram)?)?;
            let spec = match (&args.do_value, &args.ground_truth) {
                (Some(v), None) => {
                    InterventionSpec::Do { target: args.target.clone(), value: *v }
                }
                (None, Some(dist)) => InterventionSpec::GroundTruth {
                    target: args.target.clone(),
                    dist: dist
                        .split(',')
                        .map(|p| {
                            p.trim().parse::<f64>().map_err(|_| {
                                EngineError::Contract(format!("'{p}' is not a probability"))
                            })
                        })
                        .collect::<Result<_>>()?,
                },
                _ => {
                    return Err(EngineError::Contract(
                        "intervene needs exactly one of --do or --ground-truth".into(),
                    ));
                }
            };
            let intervened = intervene(&diagram, &spec)?;
            match &args.input {
                Some(input) => {
                    let x = parse_assignment(input)?;
                    let joint = evaluate_diagram(&intervened, &x)?;
                    println!("{}", joint.to_json());
                }
                None => println!("{}", intervened.to_json()),
            }
            Ok(0)
        }
        Command::Ace(args) => {
            let diagram = ProcessDiagram::from_json(&read_input(&args.diagram)?)?;
            let input_dist = JointDistribution::from_json(&read_input(&args.input_dist)?)?;
            let effect = average_causal_effect(&diagram, &args.target, &args.task, &input_dist)?;
            if cli.text {
                println!("average causal effect of {} on {}: {effect}", args.target, args.task);
            } else {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "target": args.target,
                        "task": args.task,
                        "effect": effect,
                    }))?
                );
            }
            Ok(0)
        }
        Command::Align(args) => {
            let learned = TabularStochasticMap::from_json(&read_input(&args.learned)?)?;
            let reference = TabularStochasticMap::from_json(&read_input(&args.reference)?)?;
            let input_dist = JointDistribution::from_json(&read_input(&args.input_dist)?)?;
            let result = probe_align(
                &learned,
                &reference,
                &input_dist,
                config.exhaustive_match_max,
                config.tie_tol,
            )?;
            if cli.text {
                for e in &result.matching {
                    println!(
                        "{}→{}({})",
                        e.learned,
                        e.reference,
                        if e.flipped { "-" } else { "+" }
                    );
                }
                println!(
                    "divergence: {} identifiable: {}",
                    result.divergence, result.identifiable
                );
            } else {
                println!("{}", result.to_json());
            }
            Ok(0)
        }
        Command::DetectShortcuts(args) => {
            let source = FormalContext::from_json(&read_input(&args.source)?)?;
            let target = FormalContext::from_json(&read_input(&args.target)?)?;
            let m_star = comma_set(&args.objects);
            let report = detect_reasoning_shortcuts(
                &source,
                &target,
                &m_star,
                config.translation_domain_cap,
                config.translation_target_cap,
            )?;
            if cli.text {
                println!(
                    "shortcut: {} ({} sound translations)",
                    report.shortcut,
                    report.sound_translations.len()
                );
            } else {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            Ok(if report.shortcut { 3 } else { 0 })
        }
        Command::Suite(args) => {
            let bundle = SuiteBundle::from_json(&read_input(&args.bundle)?)?;
            let report = run_suite(&bundle, &config)?;
            if cli.text {
                for check in &report.checks {
                    let status = if !check.enabled {
                        "skip"
                    } else if check.passed {
                        "pass"
                    } else {
                        "FAIL"
                    };
                    println!("[{status}] {:<13} {}", check.name, check.details);
                }
                println!("overall: {}", if report.overall { "pass" } else { "FAIL" });
            } else {
                println!("{}", report.to_json());
            }
            Ok(if report.overall { 0 } else { 3 })
        }
        Command::Generate(args) => {
            let defect = match args.defect.as_deref() {
                None => None,
                Some("leakage") => Some(Defect::Leakage),
                Some("broken-translation") => Some(Defect::BrokenTranslation),
                Some("dense-box") => Some(Defect::DenseBox),
                Some(other) => {
                    return Err(EngineError::Contract(format!(
                        "unknown defect '{other}' (leakage, broken-translation, dense-box)"
                    )));
                }
            };
            let bundle = generate_suite_bundle(args.seed, args.d_bits, defect)?;
            let text = bundle.to_json();
            match &args.out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
            Ok(0)
        }
    }
}

fn print_verification(text: bool, report: &crate::verifier::VerificationReport) -> Result<()> {
    if text {
        println!(
            "degree {:.6}: {}/{} cases commute, {} steps, {} comparisons",
            report.degree, report.commuting_cases, report.total_cases, report.steps_used,
            report.comparisons
        );
        for c in report.counterexamples.iter().take(5) {
            println!("  counterexample at {:?} ({} stage, tv {:.3})", c.input, c.stage, c.tv);
        }
        if report.counterexamples_total > report.counterexamples.len() as u64 {
            println!("  ... {} more", report.counterexamples_total);
        }
    } else {
        println!("{}", report.to_json());
    }
    Ok(())
}
