//! Block-diagonal fading channels.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::Direction;
use crate::seed;

/// Gains below this magnitude are redrawn so every channel matrix is invertible.
const MIN_GAIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Station {
    User(usize),
    Server(usize),
}

/// Diagonal channel matrices for every link of one direction, keyed `(receiver, transmitter)`.
///
/// Uplink links run from every user to every server. Downlink links run from
/// every station to every other station, since users also hear each other and
/// full-duplex servers hear each other.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    direction: Direction,
    block_len: usize,
    seed: u64,
    links: BTreeMap<(Station, Station), Vec<Complex64>>,
}

impl ChannelRealization {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Diagonal of `H_{rx,tx}`.
    ///
    /// # Panics
    /// If the link does not exist in this direction.
    pub fn gain(&self, rx: Station, tx: Station) -> &[Complex64] {
        self.links
            .get(&(rx, tx))
            .unwrap_or_else(|| panic!("no channel from {tx:?} to {rx:?}"))
    }

    pub fn links(&self) -> impl Iterator<Item = (&(Station, Station), &[Complex64])> {
        self.links.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Overwrites one link, e.g. to force a degenerate realization in a test.
    pub fn set_gain(&mut self, rx: Station, tx: Station, gain: Vec<Complex64>) {
        assert_eq!(gain.len(), self.block_len, "gain must span the block");
        self.links.insert((rx, tx), gain);
    }
}

/// Draws i.i.d. `CN(0, 1)` diagonals for every link, deterministically from `seed`.
pub fn gen_channel(direction: Direction, block_len: usize, users: usize, servers: usize, seed: u64) -> ChannelRealization {
    assert!(block_len >= 1, "block length must be positive");
    let user_ids = (0..users).map(Station::User);
    let server_ids = (0..servers).map(Station::Server);
    let pairs: Vec<(Station, Station)> = match direction {
        Direction::Uplink => server_ids.flat_map(|rx| (0..users).map(move |i| (rx, Station::User(i)))).collect(),
        Direction::Downlink => {
            let all: Vec<Station> = user_ids.chain(server_ids).collect();
            all.iter()
                .flat_map(|&rx| all.iter().filter(move |&&tx| tx != rx).map(move |&tx| (rx, tx)))
                .collect()
        }
    };
    let label = match direction {
        Direction::Uplink => "channel/uplink",
        Direction::Downlink => "channel/downlink",
    };
    let links = pairs
        .into_iter()
        .enumerate()
        .map(|(idx, pair)| {
            let mut rng = seed::stream(seed, label, idx as u64);
            let diag = (0..block_len)
                .map(|_| loop {
                    let h = seed::complex_gaussian(&mut rng);
                    if h.norm() >= MIN_GAIN {
                        break h;
                    }
                })
                .collect();
            (pair, diag)
        })
        .collect();
    ChannelRealization { direction, block_len, seed, links }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = gen_channel(Direction::Uplink, 50, 3, 3, 11);
        assert_eq!(a, gen_channel(Direction::Uplink, 50, 3, 3, 11));
        assert_ne!(a, gen_channel(Direction::Uplink, 50, 3, 3, 12));
    }

    #[test]
    fn uplink_shape() {
        let h = gen_channel(Direction::Uplink, 50, 3, 3, 1);
        assert_eq!(h.link_count(), 9);
        assert!(h.links().all(|(_, d)| d.len() == 50));
        assert!(h.links().all(|(_, d)| d.iter().all(|g| g.norm() >= MIN_GAIN)));
    }

    #[test]
    fn downlink_covers_every_ordered_pair() {
        let h = gen_channel(Direction::Downlink, 4, 3, 2, 1);
        assert_eq!(h.link_count(), 5 * 4);
        let _ = h.gain(Station::Server(0), Station::Server(1));
        let _ = h.gain(Station::User(2), Station::User(0));
    }

    #[test]
    fn unit_variance() {
        let h = gen_channel(Direction::Uplink, 100_000 / 9 + 1, 3, 3, 5);
        let (sum, count) = h
            .links()
            .flat_map(|(_, d)| d.iter())
            .fold((0.0, 0usize), |(s, c), g| (s + g.norm_sqr(), c + 1));
        let var = sum / count as f64;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }
}
