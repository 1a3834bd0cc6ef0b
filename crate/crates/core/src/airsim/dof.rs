//! Closed-form dimension counting for the alignment scheme.

use num_rational::Ratio;

use super::{AirsimError, AlignmentConfig, Direction, Duplex};
use crate::analysis;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DofMeasurement {
    pub direction: Direction,
    pub order: u32,
    pub gamma: usize,
    /// Distinct message dimensions per channel use at order `n`.
    pub ratio: f64,
    /// Streams carried per channel use at order `n` (downlink: every user's copy).
    pub stream_ratio: f64,
    /// The `n → ∞` limit of `ratio`.
    pub target: Ratio<i64>,
}

/// Achieved dimension ratio at order `n` and its asymptotic target.
///
/// Uplink: `K(M-1) n^Γ / (K(n+1)^Γ + (M-1)n^Γ)`. Downlink:
/// `K n^Γ' / (K n^Γ' + (M-1)(n+1)^Γ')`, counting each server's payload once
/// because every user receives the same `F(α_j)`. Both are evaluated as
/// `· / (· (1 + 1/n)^Γ + ·)` so large `Γ` never overflows.
pub fn measure_dof(
    direction: Direction,
    users: usize,
    servers: usize,
    order: u32,
    duplex: Duplex,
) -> Result<DofMeasurement, AirsimError> {
    let cfg = AlignmentConfig::new(direction, users, servers, order, 0, duplex)?;
    let gamma = cfg.gamma();
    let growth = libm::pow(1.0 + 1.0 / order as f64, gamma as f64);
    let (m, k) = ((users - 1) as f64, servers as f64);
    let (ratio, stream_ratio) = match direction {
        Direction::Uplink => {
            let r = k * m / (k * growth + m);
            (r, r)
        }
        Direction::Downlink => {
            let r = k / (k + m * growth);
            (r, r * m)
        }
    };
    let target = analysis::dof_formula(users, servers, direction)
        .map_err(|_| AirsimError::InvalidConfig("no DoF formula for this topology"))?;
    Ok(DofMeasurement { direction, order, gamma, ratio, stream_ratio, target })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_matches_block_counts() {
        let up = measure_dof(Direction::Uplink, 3, 3, 1, Duplex::Full).unwrap();
        assert!((up.ratio - 6.0 / 50.0).abs() < 1e-15);
        let down = measure_dof(Direction::Downlink, 3, 3, 1, Duplex::Half).unwrap();
        assert!((down.ratio - 3.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn targets() {
        let up = measure_dof(Direction::Uplink, 5, 4, 1, Duplex::Full).unwrap();
        assert_eq!(up.target, Ratio::from_integer(2));
        let down = measure_dof(Direction::Downlink, 5, 4, 1, Duplex::Full).unwrap();
        assert_eq!(down.target, Ratio::new(1, 2));
    }

    #[test]
    fn converges_from_below() {
        let r10 = measure_dof(Direction::Uplink, 3, 3, 10, Duplex::Full).unwrap();
        let r5 = measure_dof(Direction::Uplink, 3, 3, 5, Duplex::Full).unwrap();
        let target = 1.2;
        assert!(r10.ratio > r5.ratio);
        assert!((target - r10.ratio) / target < 0.25);
        let r64 = measure_dof(Direction::Uplink, 3, 3, 64, Duplex::Full).unwrap();
        assert!((target - r64.ratio) / target < 0.10);
    }
}
