//! Exhaustive share-distribution checks over F_5 (M = 2, K = 3, r = 1, p = 1).

use std::collections::BTreeMap;

use secagg_core::coding::{aggregate_shares, CodingConfig, GradientVector, MaskVector, ShareMatrix};
use secagg_core::{Fe, PrimeField};

fn setup() -> (PrimeField, CodingConfig) {
    let field = PrimeField::new(5).unwrap();
    (field, CodingConfig::new(field, 2, 3, 1, 1).unwrap())
}

fn run(cfg: &CodingConfig, g: [Fe; 2], n: [Fe; 2]) -> ShareMatrix {
    let grads = [GradientVector::new(0, vec![g[0]]), GradientVector::new(1, vec![g[1]])];
    let masks = [MaskVector(vec![n[0]]), MaskVector(vec![n[1]])];
    ShareMatrix::encode_all(&grads, &masks, cfg).unwrap()
}

#[test]
fn share_pairs_are_uniform_for_every_gradient_pair() {
    let (field, cfg) = setup();
    for j in 0..3 {
        for g0 in field.elements() {
            for g1 in field.elements() {
                let mut counts: BTreeMap<(u64, u64), usize> = BTreeMap::new();
                for n0 in field.elements() {
                    for n1 in field.elements() {
                        let s = run(&cfg, [g0, g1], [n0, n1]);
                        *counts.entry((s.get(j, 0)[0].value(), s.get(j, 1)[0].value())).or_default() += 1;
                    }
                }
                assert_eq!(counts.len(), 25, "server {j}, g=({g0},{g1})");
                assert!(counts.values().all(|&c| c == 1));
            }
        }
    }
}

#[test]
fn aggregate_distribution_ignores_the_aggregate() {
    let (field, cfg) = setup();
    for j in 0..3 {
        let mut by_sum: BTreeMap<u64, BTreeMap<u64, usize>> = BTreeMap::new();
        for g0 in field.elements() {
            for g1 in field.elements() {
                let g_d = field.add(g0, g1).value();
                for n0 in field.elements() {
                    for n1 in field.elements() {
                        let s = run(&cfg, [g0, g1], [n0, n1]);
                        let agg = aggregate_shares(j, s.server_row(j), &cfg).unwrap();
                        *by_sum.entry(g_d).or_default().entry(agg.value[0].value()).or_default() += 1;
                    }
                }
            }
        }
        assert_eq!(by_sum.len(), 5);
        let first = by_sum.values().next().unwrap().clone();
        assert_eq!(first.len(), 5, "uniform support");
        let per = first.values().next().copied().unwrap();
        assert!(first.values().all(|&c| c == per));
        assert!(by_sum.values().all(|d| *d == first), "server {j}");
    }
}
