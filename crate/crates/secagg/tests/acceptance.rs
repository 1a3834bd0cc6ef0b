//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand_core::RngCore;
use rayon::prelude::*;

use secagg_core::airsim::{
    build_beamformers, gen_channel, leakage_sweep, measure_dof, verify_alignment, verify_independence,
    AlignmentConfig, AlignmentPlan, BeamformingSet, ChannelRealization, Direction, Duplex,
};
use secagg_core::analysis::{dof_formula, gap_ratio, ndt_achievable, ndt_lower};
use secagg_core::coding::{aggregate_shares, direct_sum, CodingConfig, GradientVector, MaskVector, ShareMatrix};
use secagg_core::protocol::{run_end_to_end, InMemoryTransport, Participation};
use secagg_core::{seed, Fe, PrimeField};

type Q = Ratio<i64>;

const POWERS: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];

/// A named check with its time budget.
type Criterion = (&'static str, Duration, fn() -> Verdict);

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn as_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn golden_instance() -> Verdict {
    let ndt = ndt_achievable(5, 4, 3).unwrap();
    let dof = (dof_formula(5, 4, Direction::Uplink).unwrap(), dof_formula(5, 4, Direction::Downlink).unwrap());
    let ok = ndt == (Q::new(10, 3), Q::new(8, 3)) && dof == (Q::from_integer(2), Q::new(1, 2));
    verdict(ok, format!("ndt = ({}, {}), dof = ({}, {})", ndt.0, ndt.1, dof.0, dof.1))
}

fn gap_bound() -> Verdict {
    let mut worst = (Q::from_integer(0), 0, 0);
    let mut below_bound = 0;
    for m in 3..=64 {
        for k in 2..=64 {
            let (up, down) = ndt_achievable(m, k, k - 1).unwrap();
            let (up_lb, down_lb) = ndt_lower(m, k).unwrap();
            below_bound += usize::from(up < up_lb || down < down_lb);
            if up / up_lb > worst.0 {
                worst = (up / up_lb, m, k);
            }
        }
    }
    let up_large = gap_ratio(64, 4096).unwrap().0;
    let down_large = gap_ratio(3, 4096).unwrap().1;
    let ok = worst.0 <= Q::from_integer(4)
        && below_bound == 0
        && up_large <= Q::new(105, 100)
        && down_large <= Q::new(101, 100);
    verdict(
        ok,
        format!(
            "max uplink gap {} at (M, K) = ({}, {}); uplink gap at (64, 4096) = {:.5}; downlink gap at (3, 4096) = {:.5}",
            worst.0,
            worst.1,
            worst.2,
            as_f64(up_large),
            as_f64(down_large)
        ),
    )
}

/// 200 instances per `(M, K, r)`, each run with all servers and with a random
/// `(r+1)`-subset of them.
fn end_to_end_sweep() -> Verdict {
    let field = PrimeField::mersenne31();
    let configs: Vec<(usize, usize, usize)> =
        (3..=8).flat_map(|m| (2..=8).flat_map(move |k| (1..k).map(move |r| (m, k, r)))).collect();
    let failures: usize = configs
        .par_iter()
        .map(|&(m, k, r)| {
            let mut failures = 0;
            for instance in 0..200u64 {
                let s = seed::derive(instance, "acceptance/e2e", (m * 100 + k * 10 + r) as u64);
                let mut rng = seed::stream(s, "instance", 0);
                let p = 1 + (rng.next_u64() % 24) as usize;
                let cfg = CodingConfig::new(field, m, k, r, p).unwrap();
                let gradients: Vec<_> = (0..m).map(|i| GradientVector::random(i, &cfg, &mut rng)).collect();
                let truth = direct_sum(&gradients, &cfg);
                let mut servers: Vec<usize> = (0..k).collect();
                for i in (1..k).rev() {
                    servers.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
                }
                servers.truncate(r + 1);
                for participation in [Participation::All, Participation::Subset(servers)] {
                    match run_end_to_end(&gradients, &cfg, s, &participation, &mut InMemoryTransport::new()) {
                        Ok(out) if out.estimates.iter().all(|e| *e == truth) => {}
                        _ => failures += 1,
                    }
                }
            }
            failures
        })
        .sum();
    verdict(failures == 0, format!("{} configs x 200 instances x 2 modes, {failures} mismatches", configs.len()))
}

/// q = 5, M = 2, K = 3, r = 1, p = 1, every gradient and mask enumerated.
fn exhaustive_privacy() -> Verdict {
    let field = PrimeField::new(5).unwrap();
    let cfg = CodingConfig::new(field, 2, 3, 1, 1).unwrap();
    let elems: Vec<Fe> = field.elements().collect();
    let mut pairs_uniform = true;
    let mut aggregates_identical = true;
    for j in 0..3 {
        let mut aggregate_by_sum: BTreeMap<u64, BTreeMap<u64, usize>> = BTreeMap::new();
        let mut reference_pairs: Option<BTreeMap<(u64, u64), usize>> = None;
        for &g0 in &elems {
            for &g1 in &elems {
                let mut pairs: BTreeMap<(u64, u64), usize> = BTreeMap::new();
                for &n0 in &elems {
                    for &n1 in &elems {
                        let grads = [GradientVector::new(0, vec![g0]), GradientVector::new(1, vec![g1])];
                        let masks = [MaskVector(vec![n0]), MaskVector(vec![n1])];
                        let shares = ShareMatrix::encode_all(&grads, &masks, &cfg).unwrap();
                        *pairs.entry((shares.get(j, 0)[0].value(), shares.get(j, 1)[0].value())).or_default() += 1;
                        let agg = aggregate_shares(j, shares.server_row(j), &cfg).unwrap();
                        *aggregate_by_sum
                            .entry(field.add(g0, g1).value())
                            .or_default()
                            .entry(agg.value[0].value())
                            .or_default() += 1;
                    }
                }
                pairs_uniform &= pairs.len() == 25 && pairs.values().all(|&c| c == 1);
                let reference = reference_pairs.get_or_insert_with(|| pairs.clone());
                pairs_uniform &= *reference == pairs;
            }
        }
        let first = aggregate_by_sum.values().next().cloned().unwrap_or_default();
        let per = first.values().next().copied().unwrap_or(0);
        aggregates_identical &= aggregate_by_sum.len() == 5
            && first.len() == 5
            && first.values().all(|&c| c == per)
            && aggregate_by_sum.values().all(|d| *d == first);
    }
    verdict(
        pairs_uniform && aggregates_identical,
        format!("share pairs uniform: {pairs_uniform}; aggregate independent of the sum: {aggregates_identical}"),
    )
}

fn realization(direction: Direction, duplex: Duplex, s: u64) -> (AlignmentPlan, ChannelRealization, BeamformingSet) {
    let noise_user = (s % 3) as usize;
    let cfg = AlignmentConfig::new(direction, 3, 3, 1, noise_user, duplex).unwrap();
    let t = cfg.checked_block_len(4096).unwrap();
    let plan = AlignmentPlan::new(cfg);
    let channel = gen_channel(direction, t, 3, 3, s);
    let bf = build_beamformers(&plan, &channel, s).unwrap();
    (plan, channel, bf)
}

/// Containment on every seed; rank on every seed except full-duplex
/// downlink, whose 1027-symbol block is rank-checked on one seed.
fn alignment_structure() -> Verdict {
    let cases = [
        (Direction::Uplink, Duplex::Full, 12, 20),
        (Direction::Downlink, Duplex::Half, 6, 20),
        (Direction::Downlink, Duplex::Full, 18, 1),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (direction, duplex, relations, rank_seeds) in cases {
        let stats: Vec<(usize, f64, Option<f64>)> = (0..20u64)
            .into_par_iter()
            .map(|s| {
                let (plan, channel, bf) = realization(direction, duplex, s);
                let al = verify_alignment(&plan, &bf, &channel);
                let rank = (s < rank_seeds).then(|| verify_independence(&plan, &bf, &channel).unwrap().min_ratio);
                (al.relation_count, al.max_residual, rank)
            })
            .collect();
        let residual = stats.iter().map(|s| s.1).fold(0.0, f64::max);
        let ratio = stats.iter().filter_map(|s| s.2).fold(f64::INFINITY, f64::min);
        ok &= stats.iter().all(|s| s.0 == relations) && residual <= 1e-10 && ratio > 1e-9;
        notes.push(format!("{direction:?}/{duplex:?}: residual {residual:.1e}, sv ratio {ratio:.1e}"));
    }
    let orders = [1, 2, 4, 8, 16, 32, 64];
    let ratios: Vec<f64> =
        orders.iter().map(|&n| measure_dof(Direction::Uplink, 5, 4, n, Duplex::Full).unwrap().ratio).collect();
    let target = as_f64(dof_formula(5, 4, Direction::Uplink).unwrap());
    let monotone = ratios.windows(2).all(|w| w[1] > w[0]);
    let close = (ratios[6] - target).abs() <= 0.1 * target;
    ok &= monotone && close;
    notes.push(format!("dof(n=64) = {:.4} vs {target}", ratios[6]));
    verdict(ok, notes.join("; "))
}

fn leakage() -> Verdict {
    let cases = [(Direction::Uplink, Duplex::Full), (Direction::Downlink, Duplex::Half)];
    let slopes: Vec<(f64, f64)> = cases
        .iter()
        .flat_map(|&c| (0..20u64).map(move |s| (c, s)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|((direction, duplex), s)| {
            let (plan, channel, bf) = realization(direction, duplex, s);
            let mut worst = (f64::NEG_INFINITY, f64::INFINITY);
            for group in &plan.groups {
                let masked = leakage_sweep(&plan, &bf, &channel, group.target, &POWERS, true).unwrap();
                let bare = leakage_sweep(&plan, &bf, &channel, group.target, &POWERS, false).unwrap();
                worst = (worst.0.max(masked.slope), worst.1.min(bare.slope));
            }
            worst
        })
        .collect();
    let masked = slopes.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let bare = slopes.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    verdict(
        masked <= 0.05 && bare >= 0.5,
        format!("max slope with noise {masked:.2e}, min slope without noise {bare:.3}"),
    )
}

fn communication_cost() -> Verdict {
    let field = PrimeField::mersenne31();
    let mut ok = true;
    let mut notes = Vec::new();
    for (m, k, p) in [(3, 3, 10_000), (5, 4, 10_000), (6, 6, 10_000), (5, 4, 100_000)] {
        let cfg = CodingConfig::new(field, m, k, k - 1, p).unwrap();
        let mut rng = seed::stream(p as u64, "acceptance/comm", 0);
        let gradients: Vec<_> = (0..m).map(|i| GradientVector::random(i, &cfg, &mut rng)).collect();
        let report = run_end_to_end(&gradients, &cfg, 1, &Participation::All, &mut InMemoryTransport::new())
            .unwrap()
            .report;
        let a_bytes = report.gradient_bits as f64 / 8.0;
        let scale = k as f64 / (k - 1) as f64;
        let up = report.uplink_wire_bytes as f64 / (scale * m as f64 * a_bytes) - 1.0;
        let down = report.downlink_wire_bytes_per_user as f64 / (scale * a_bytes) - 1.0;
        // payload bits are exact whenever r divides p
        let exact = p % (k - 1) != 0
            || (report.uplink_payload_bits * (k as u64 - 1) == (k * m) as u64 * report.gradient_bits
                && report.downlink_payload_bits * (k as u64 - 1) == k as u64 * report.gradient_bits);
        ok &= report.ok && exact && (0.0..0.02).contains(&up) && (0.0..0.02).contains(&down);
        notes.push(format!("({m},{k},p={p}) +{:.2}%/+{:.2}%", 100.0 * up, 100.0 * down));
    }
    verdict(ok, format!("wire overhead up/down: {}", notes.join(", ")))
}

fn binary(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_secagg"))
        .args(args)
        .env_remove("SECAGG_SEED")
        .output()
        .expect("spawn secagg");
    (out.status.code(), out.stdout)
}

fn determinism() -> Verdict {
    let commands: [&[&str]; 3] = [
        &["sweep"],
        &["e2e", "--M", "5", "--K", "4", "--r", "3", "--p", "300", "--seed", "7"],
        &["e2e", "--M", "4", "--K", "4", "--r", "2", "--seed", "11", "--stragglers", "1"],
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for args in commands {
        let first = binary(args);
        let second = binary(args);
        ok &= first.0 == Some(0) && first == second && !first.1.is_empty();
        notes.push(format!("`{}` {} bytes", args.join(" "), first.1.len()));
    }
    verdict(ok, format!("identical reruns: {}", notes.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("golden instance", Duration::from_millis(1), golden_instance),
        ("gap bound", Duration::from_secs(1), gap_bound),
        ("end-to-end exactness", Duration::from_secs(30), end_to_end_sweep),
        ("exhaustive coding privacy", Duration::from_secs(5), exhaustive_privacy),
        ("alignment structure", Duration::from_secs(60), alignment_structure),
        ("physical-layer leakage", Duration::from_secs(60), leakage),
        ("communication cost", Duration::from_secs(10), communication_cost),
        ("determinism", Duration::from_secs(60), determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let ok = v.ok && elapsed <= budget;
        failed += usize::from(!ok);
        println!(
            "criterion {} ({name}): {} in {elapsed:.2?} (budget {budget:?}) -- {}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
