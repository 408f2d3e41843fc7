mod common;

use common::Generators;

fn failures(results: Vec<(String, bool)>) -> Vec<String> {
    results.into_iter().filter(|(_, ok)| !ok).map(|(n, _)| n).collect()
}

#[test]
fn zeroth_order_parts_are_exact_symmetries() {
    let p = Generators::new();
    assert_eq!(failures(p.stable_parts()), Vec::<String>::new());
}

#[test]
fn eps_multiples_are_symmetries() {
    let p = Generators::new();
    assert_eq!(failures(p.eps_multiples()), Vec::<String>::new());
}

#[test]
fn commutators_close() {
    let p = Generators::new();
    let results = p.commutators();
    assert_eq!(results.len(), 36);
    assert_eq!(failures(results), Vec::<String>::new());
}

#[test]
fn every_mutation_is_rejected() {
    let p = Generators::new();
    let mutants = p.mutations(50, 7);
    let accepted: Vec<&String> = mutants
        .iter()
        .filter(|(n, g)| {
            let base = n.split(' ').nth(1).unwrap();
            p.engine(base).verify(n, g).passed
        })
        .map(|(n, _)| n)
        .collect();
    assert!(accepted.is_empty(), "{accepted:?}");
}
