//! Coding-layer results checked against independent computations.

use secagg_core::coding::{
    aggregate_shares, direct_sum, encode_shares, reconstruct, split_gradient, CodingConfig,
    GradientVector, MaskVector, ShareMatrix,
};
use secagg_core::galois::lagrange_weights;
use secagg_core::{seed, Fe, Polynomial, PrimeField};

/// `G_i(x)` built by interpolating `(β_k, g_{i,k})` and `(β_{r+1}, n_i)`, one coordinate at a time.
fn shares_by_interpolation(g: &GradientVector, n: &MaskVector, cfg: &CodingConfig) -> Vec<Vec<Fe>> {
    let field = cfg.field();
    let segs = split_gradient(&g.values, cfg).unwrap();
    let mut out = vec![vec![Fe::ZERO; cfg.segment_len()]; cfg.servers()];
    for c in 0..cfg.segment_len() {
        let mut points: Vec<(Fe, Fe)> = cfg.betas()[..cfg.partitions()].iter().zip(&segs).map(|(&b, s)| (b, s[c])).collect();
        points.push((cfg.betas()[cfg.partitions()], n.0[c]));
        let poly = Polynomial::interpolate(field, &points).unwrap();
        assert!(poly.degree().is_none_or(|d| d <= cfg.partitions()));
        for (j, &alpha) in cfg.alphas().iter().enumerate() {
            out[j][c] = poly.eval(field, alpha);
        }
    }
    out
}

#[test]
fn matrix_and_polynomial_encodings_agree() {
    let field = PrimeField::mersenne31();
    for instance in 0..100u64 {
        let mut rng = seed::stream(instance, "oracle/encode", 0);
        let k = 2 + (instance % 6) as usize;
        let r = 1 + (instance as usize % (k - 1));
        let p = 1 + (instance % 17) as usize;
        let cfg = CodingConfig::new(field, 1, k, r, p).unwrap();
        let g = GradientVector::random(0, &cfg, &mut rng);
        let n = MaskVector::sample(&cfg, &mut rng);
        assert_eq!(encode_shares(&g, &n, &cfg).unwrap(), shares_by_interpolation(&g, &n, &cfg), "instance {instance}");
    }
}

#[test]
fn interpolation_inverts_evaluation() {
    let field = PrimeField::mersenne31();
    let mut rng = seed::stream(1, "oracle/interp", 0);
    for trial in 0..1000 {
        let degree = trial % 12;
        let coeffs = field.random_vec(&mut rng, degree + 1);
        let poly = Polynomial::from_coeffs(coeffs);
        let mut xs: Vec<Fe> = Vec::new();
        while xs.len() < degree + 1 {
            let x = field.random(&mut rng);
            if !xs.contains(&x) {
                xs.push(x);
            }
        }
        let points: Vec<(Fe, Fe)> = xs.iter().map(|&x| (x, poly.eval(&field, x))).collect();
        assert_eq!(Polynomial::interpolate(&field, &points).unwrap(), poly);
    }
}

#[test]
fn small_prime_round_trip() {
    // q = 7, degree 2
    let field = PrimeField::new(7).unwrap();
    let poly = Polynomial::from_coeffs(vec![field.element(3), field.element(5), field.element(6)]);
    let points: Vec<(Fe, Fe)> = [0, 2, 4].iter().map(|&x| (field.element(x), poly.eval(&field, field.element(x)))).collect();
    assert_eq!(Polynomial::interpolate(&field, &points).unwrap(), poly);
}

#[test]
fn weights_reproduce_interpolant() {
    let field = PrimeField::mersenne31();
    let mut rng = seed::stream(2, "oracle/weights", 0);
    let nodes: Vec<Fe> = (1..=5).map(|v| field.element(v * 7)).collect();
    let values = field.random_vec(&mut rng, 5);
    let poly = Polynomial::interpolate(&field, &nodes.iter().copied().zip(values.iter().copied()).collect::<Vec<_>>()).unwrap();
    for _ in 0..50 {
        let x = field.random(&mut rng);
        let w = lagrange_weights(&field, &nodes, x).unwrap();
        let via_weights = w.iter().zip(&values).fold(Fe::ZERO, |acc, (a, b)| field.add(acc, field.mul(*a, *b)));
        assert_eq!(via_weights, poly.eval(&field, x));
    }
}

fn instance(m: usize, k: usize, r: usize, p: usize, s: u64) -> (CodingConfig, Vec<GradientVector>, Vec<MaskVector>) {
    let cfg = CodingConfig::new(PrimeField::mersenne31(), m, k, r, p).unwrap();
    let mut rng = seed::stream(s, "oracle/instance", 0);
    let g = (0..m).map(|i| GradientVector::random(i, &cfg, &mut rng)).collect();
    let n = (0..m).map(|_| MaskVector::sample(&cfg, &mut rng)).collect();
    (cfg, g, n)
}

#[test]
fn five_users_four_servers_reconstructs_direct_sum() {
    for s in 0..20 {
        let (cfg, g, n) = instance(5, 4, 3, 301, s);
        let shares = ShareMatrix::encode_all(&g, &n, &cfg).unwrap();
        let evals: Vec<_> = (0..4).map(|j| aggregate_shares(j, shares.server_row(j), &cfg).unwrap()).collect();
        assert_eq!(reconstruct(&evals, &cfg).unwrap(), direct_sum(&g, &cfg));
    }
}

#[test]
fn aggregate_is_polynomial_of_summed_secrets() {
    let (cfg, g, n) = instance(5, 4, 3, 9, 7);
    let field = cfg.field();
    let shares = ShareMatrix::encode_all(&g, &n, &cfg).unwrap();
    let g_sum = GradientVector::new(0, direct_sum(&g, &cfg));
    let mut n_sum = vec![Fe::ZERO; cfg.segment_len()];
    for m in &n {
        field.add_assign_vec(&mut n_sum, &m.0);
    }
    let expected = shares_by_interpolation(&g_sum, &MaskVector(n_sum), &cfg);
    for (j, want) in expected.iter().enumerate() {
        assert_eq!(&aggregate_shares(j, shares.server_row(j), &cfg).unwrap().value, want);
    }
}

#[test]
fn every_threshold_subset_agrees() {
    let (cfg, g, n) = instance(4, 4, 2, 20, 3);
    let shares = ShareMatrix::encode_all(&g, &n, &cfg).unwrap();
    let evals: Vec<_> = (0..4).map(|j| aggregate_shares(j, shares.server_row(j), &cfg).unwrap()).collect();
    let full = reconstruct(&evals, &cfg).unwrap();
    assert_eq!(full, direct_sum(&g, &cfg));
    for skip in 0..4 {
        let subset: Vec<_> = evals.iter().filter(|e| e.server != skip).cloned().collect();
        assert_eq!(reconstruct(&subset, &cfg).unwrap(), full);
    }
}

#[test]
fn encoding_matrix_properties_over_sweep() {
    let field = PrimeField::mersenne31();
    for k in 2..=8 {
        for r in 1..k {
            let cfg = CodingConfig::new(field, 3, k, r, 1).unwrap();
            let u = cfg.encoding_matrix();
            assert!(u.right().iter().all(|x| !x.is_zero()));
            // every (r+1)-row subset is invertible
            for mask in 0u32..(1 << k) {
                if mask.count_ones() as usize != r + 1 {
                    continue;
                }
                let rows: Vec<Vec<Fe>> = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| u.row(j).to_vec()).collect();
                assert_eq!(field.rank(&rows), r + 1, "K={k} r={r} rows {mask:b}");
            }
        }
    }
}
