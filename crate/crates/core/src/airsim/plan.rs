//! Who must align where: message groups and their alignment relations.

use alloc::vec::Vec;

use super::{AirsimError, Direction, Station};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Duplex {
    /// Servers listen while transmitting, so they too must see only noise.
    Full,
    /// Servers do not listen while transmitting; only users are constrained.
    Half,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlignmentConfig {
    pub direction: Direction,
    pub users: usize,
    pub servers: usize,
    /// Alignment order `n`: data exponents range over `1..=n`, noise over `1..=n+1`.
    pub order: u32,
    pub noise_user: usize,
    pub duplex: Duplex,
}

impl AlignmentConfig {
    pub fn new(
        direction: Direction,
        users: usize,
        servers: usize,
        order: u32,
        noise_user: usize,
        duplex: Duplex,
    ) -> Result<Self, AirsimError> {
        if users < 3 {
            return Err(AirsimError::InvalidConfig("need at least 3 users"));
        }
        if servers < 2 {
            return Err(AirsimError::InvalidConfig("need at least 2 servers"));
        }
        if direction == Direction::Uplink && servers < 3 {
            return Err(AirsimError::InvalidConfig("the two-server uplink uses a different scheme"));
        }
        if order == 0 {
            return Err(AirsimError::InvalidConfig("alignment order must be positive"));
        }
        if noise_user >= users {
            return Err(AirsimError::InvalidConfig("noise user out of range"));
        }
        Ok(AlignmentConfig { direction, users, servers, order, noise_user, duplex })
    }

    /// `Γ` for the uplink, `Γ'` for the downlink: the number of generators per message group.
    pub fn gamma(&self) -> usize {
        let (m, k) = (self.users, self.servers);
        match (self.direction, self.duplex) {
            (Direction::Uplink, _) => (m - 1) * (k - 1),
            (Direction::Downlink, Duplex::Full) => (k + m - 3) * k,
            (Direction::Downlink, Duplex::Half) => (m - 2) * k,
        }
    }

    /// Columns per data beamformer, `n^Γ` (saturating).
    pub fn data_columns(&self) -> u128 {
        pow_sat(self.order as u128, self.gamma())
    }

    /// Columns per noise beamformer, `(n+1)^Γ` (saturating).
    pub fn noise_columns(&self) -> u128 {
        pow_sat(self.order as u128 + 1, self.gamma())
    }

    fn transmitters_per_group(&self) -> usize {
        match self.direction {
            Direction::Uplink => self.users - 1,
            Direction::Downlink => self.servers,
        }
    }

    fn group_count(&self) -> usize {
        match self.direction {
            Direction::Uplink => self.servers,
            Direction::Downlink => self.users - 1,
        }
    }

    /// Block length: desired columns plus noise columns at any receiver.
    ///
    /// Uplink `K(n+1)^Γ + (M-1)n^Γ`; downlink `K n^Γ' + (M-1)(n+1)^Γ'`.
    pub fn block_len(&self) -> u128 {
        let desired = (self.transmitters_per_group() as u128).saturating_mul(self.data_columns());
        let noise = (self.group_count() as u128).saturating_mul(self.noise_columns());
        desired.saturating_add(noise)
    }

    /// The block length if it is at most `cap`.
    pub fn checked_block_len(&self, cap: usize) -> Result<usize, AirsimError> {
        let t = self.block_len();
        if t > cap as u128 {
            return Err(AirsimError::TooLarge { block_len: t, cap });
        }
        Ok(t as usize)
    }

    pub fn noise_source(&self) -> Station {
        Station::User(self.noise_user)
    }
}

fn pow_sat(base: u128, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base))
}

/// Signals from `transmitter` for the group must align into the noise at `receiver`.
///
/// Each relation contributes the generator `H_{rx,a}^{-1} H_{rx,tx}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Relation {
    pub receiver: Station,
    pub transmitter: Station,
}

/// Everything destined for one receiver, sharing one data beamformer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageGroup {
    pub target: Station,
    pub transmitters: Vec<Station>,
    pub relations: Vec<Relation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentPlan {
    pub config: AlignmentConfig,
    pub groups: Vec<MessageGroup>,
}

impl AlignmentPlan {
    pub fn new(config: AlignmentConfig) -> Self {
        let (m, k, a) = (config.users, config.servers, config.noise_user);
        let data_users = || (0..m).filter(move |&i| i != a).map(Station::User);
        let groups = match config.direction {
            Direction::Uplink => (0..k)
                .map(|j| MessageGroup {
                    target: Station::Server(j),
                    transmitters: data_users().collect(),
                    relations: (0..k)
                        .filter(|&rx| rx != j)
                        .flat_map(|rx| {
                            data_users().map(move |tx| Relation { receiver: Station::Server(rx), transmitter: tx })
                        })
                        .collect(),
                })
                .collect(),
            Direction::Downlink => data_users()
                .map(|target| {
                    let mut relations: Vec<Relation> = data_users()
                        .filter(|&u| u != target)
                        .flat_map(|rx| {
                            (0..k).map(move |j| Relation { receiver: rx, transmitter: Station::Server(j) })
                        })
                        .collect();
                    if config.duplex == Duplex::Full {
                        relations.extend((0..k).flat_map(|s| {
                            (0..k).filter(move |&j| j != s).map(move |j| Relation {
                                receiver: Station::Server(s),
                                transmitter: Station::Server(j),
                            })
                        }));
                    }
                    MessageGroup { target, transmitters: (0..k).map(Station::Server).collect(), relations }
                })
                .collect(),
        };
        AlignmentPlan { config, groups }
    }

    pub fn relation_count(&self) -> usize {
        self.groups.iter().map(|g| g.relations.len()).sum()
    }

    pub fn noise_source(&self) -> Station {
        self.config.noise_source()
    }
}
