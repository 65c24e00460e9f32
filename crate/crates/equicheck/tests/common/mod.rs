//! Shared generators for the integration suites.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use equicheck::domain::{FiniteDomain, Variable};
use equicheck::fca::FormalContext;
use equicheck::process::{Node, NodeKind, ProcessDiagram};
use equicheck::tabular::TabularStochasticMap;

/// Random incidence context with up to `max_objects` x `max_sentences`.
#[allow(dead_code)]
pub fn random_context(rng: &mut ChaCha8Rng, max_objects: usize, max_sentences: usize) -> FormalContext {
    let n_obj = rng.gen_range(0..=max_objects);
    let n_sent = rng.gen_range(0..=max_sentences);
    let incidence: Vec<Vec<bool>> = (0..n_obj)
        .map(|_| (0..n_sent).map(|_| rng.gen_bool(0.5)).collect())
        .collect();
    FormalContext::new(
        (0..n_obj).map(|i| format!("o{i}")).collect(),
        (0..n_sent).map(|i| format!("s{i}")).collect(),
        incidence,
    )
    .expect("generated context is well-formed")
}

/// Deterministic random layered diagram with at most `max_wires` binary
/// wires; returns the diagram plus the box/constant-produced wire names
/// (the valid intervention targets).
pub fn random_diagram(seed: u64, max_wires: usize) -> (ProcessDiagram, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_free = rng.gen_range(1..=2usize);
    let mut wire_count = 0usize;
    let fresh = |wire_count: &mut usize| -> String {
        let name = format!("w{wire_count}");
        *wire_count += 1;
        name
    };
    let mut free_inputs = Vec::new();
    let mut open: Vec<String> = Vec::new();
    for _ in 0..n_free {
        let w = fresh(&mut wire_count);
        free_inputs.push(Variable::binary(w.clone()));
        open.push(w);
    }
    let mut nodes = Vec::new();
    let mut targets = Vec::new();
    let n_ops = rng.gen_range(2..=6usize);
    for op in 0..n_ops {
        if wire_count >= max_wires {
            break;
        }
        match rng.gen_range(0..10) {
            0..=4 => {
                let arity = rng.gen_range(1..=2usize.min(open.len()));
                let mut inputs = Vec::new();
                for _ in 0..arity {
                    let idx = rng.gen_range(0..open.len());
                    inputs.push(open.remove(idx));
                }
                let in_domain = FiniteDomain::binary(
                    &inputs.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                );
                let n_rows = in_domain.case_count() as usize;
                let rows: Vec<Vec<f64>> = (0..n_rows)
                    .map(|_| {
                        if rng.gen_bool(0.5) {
                            let v = rng.gen_range(0..2);
                            vec![1.0 - v as f64, v as f64]
                        } else {
                            let p: f64 = rng.gen_range(0.0..1.0);
                            vec![p, 1.0 - p]
                        }
                    })
                    .collect();
                let out = fresh(&mut wire_count);
                let table = TabularStochasticMap::new(
                    in_domain,
                    FiniteDomain::binary(&[out.as_str()]),
                    rows,
                )
                .unwrap();
                nodes.push(Node {
                    id: format!("box{op}"),
                    kind: NodeKind::Box { table, inputs, output: out.clone() },
                });
                targets.push(out.clone());
                open.push(out);
            }
            5..=6 => {
                if wire_count + 2 > max_wires {
                    continue;
                }
                let idx = rng.gen_range(0..open.len());
                let input = open.remove(idx);
                let a = fresh(&mut wire_count);
                let b = fresh(&mut wire_count);
                nodes.push(Node {
                    id: format!("copy{op}"),
                    kind: NodeKind::Copy { input, outputs: [a.clone(), b.clone()] },
                });
                open.push(a);
                open.push(b);
            }
            7 => {
                if open.len() >= 2 {
                    let idx = rng.gen_range(0..open.len());
                    let input = open.remove(idx);
                    nodes.push(Node {
                        id: format!("drop{op}"),
                        kind: NodeKind::Discard { input },
                    });
                }
            }
            _ => {
                let p: f64 = rng.gen_range(0.0..1.0);
                let out = fresh(&mut wire_count);
                nodes.push(Node {
                    id: format!("const{op}"),
                    kind: NodeKind::Constant { output: out.clone(), dist: vec![p, 1.0 - p] },
                });
                targets.push(out.clone());
                open.push(out);
            }
        }
    }
    let diagram = ProcessDiagram::new(free_inputs, nodes, open).unwrap();
    (diagram, targets)
}
