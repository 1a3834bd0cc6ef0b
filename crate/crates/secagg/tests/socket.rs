//! The protocol over real sockets behaves exactly like the in-memory queue.

use secagg::SocketTransport;
use secagg_core::coding::{direct_sum, CodingConfig, GradientVector};
use secagg_core::protocol::{run_end_to_end, InMemoryTransport, Participation};
use secagg_core::{seed, PrimeField};

#[test]
fn socket_run_matches_in_memory_run() {
    let cfg = CodingConfig::new(PrimeField::mersenne31(), 5, 4, 3, 1000).unwrap();
    let gradients: Vec<_> =
        (0..5).map(|i| GradientVector::random(i, &cfg, &mut seed::stream(9, "gradients", i as u64))).collect();
    let memory = run_end_to_end(&gradients, &cfg, 9, &Participation::All, &mut InMemoryTransport::new()).unwrap();
    let socket = run_end_to_end(&gradients, &cfg, 9, &Participation::All, &mut SocketTransport::new()).unwrap();
    assert!(socket.report.ok);
    assert_eq!(socket.report, memory.report);
    assert_eq!(socket.estimates, memory.estimates);
    assert!(socket.estimates.iter().all(|e| *e == direct_sum(&gradients, &cfg)));
    assert_eq!(socket.uplink.inbox, memory.uplink.inbox);
}

#[test]
fn socket_run_with_stragglers() {
    let cfg = CodingConfig::new(PrimeField::mersenne31(), 3, 4, 2, 64).unwrap();
    let gradients: Vec<_> =
        (0..3).map(|i| GradientVector::random(i, &cfg, &mut seed::stream(2, "gradients", i as u64))).collect();
    let out = run_end_to_end(&gradients, &cfg, 2, &Participation::Stragglers(1), &mut SocketTransport::new()).unwrap();
    assert!(out.report.ok);
}
