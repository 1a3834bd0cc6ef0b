//! Generator-product beamformers.
//!
//! Group `g` has generators `t_r = H_{rx,a}^{-1} H_{rx,tx}`, one per relation
//! `r = (rx, tx)`, and a random base `w`. Its data beamformer holds the columns
//! `∏_r t_r^{α_r} ⊙ w` for `α_r ∈ 1..=n`; the noise user's beamformer for the
//! same group takes `α_r ∈ 1..=n+1`. Multiplying a data column by `t_r` bumps
//! one exponent, which is why `H_{rx,tx} Φ ⊂ H_{rx,a} Φ_noise` column by column.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{AirsimError, AlignmentPlan, ChannelRealization};
use crate::seed;

/// Base vectors avoid a small disc around zero to keep columns well scaled.
const BASE_MIN_RADIUS: f64 = 0.1;

/// A set of columns indexed by exponent tuples in a box of inclusive ranges.
#[derive(Clone, Debug, PartialEq)]
pub struct Beam {
    ranges: Vec<(u32, u32)>,
    columns: Vec<Vec<Complex64>>,
}

impl Beam {
    fn build(base: &[Complex64], generators: &[Vec<Complex64>], ranges: Vec<(u32, u32)>) -> Self {
        let top = ranges.iter().map(|r| r.1).max().unwrap_or(0) as usize;
        // powers[g][e] = t_g^e
        let powers: Vec<Vec<Vec<Complex64>>> = generators
            .iter()
            .map(|t| {
                let mut acc = vec![vec![Complex64::new(1.0, 0.0); t.len()]];
                for e in 1..=top {
                    let next = acc[e - 1].iter().zip(t).map(|(p, x)| p * x).collect();
                    acc.push(next);
                }
                acc
            })
            .collect();
        let mut beam = Beam { ranges, columns: Vec::new() };
        let count = beam.len_from_ranges();
        beam.columns = (0..count)
            .map(|idx| {
                let mut col = base.to_vec();
                for (g, e) in beam.exponents(idx).into_iter().enumerate() {
                    for (c, p) in col.iter_mut().zip(&powers[g][e as usize]) {
                        *c *= p;
                    }
                }
                col
            })
            .collect();
        beam
    }

    fn len_from_ranges(&self) -> usize {
        self.ranges.iter().map(|(lo, hi)| (hi + 1).saturating_sub(*lo) as usize).product()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn ranges(&self) -> &[(u32, u32)] {
        &self.ranges
    }

    pub fn columns(&self) -> &[Vec<Complex64>] {
        &self.columns
    }

    pub fn column(&self, idx: usize) -> &[Complex64] {
        &self.columns[idx]
    }

    /// Exponent tuple of column `idx` (first generator most significant).
    pub fn exponents(&self, mut idx: usize) -> Vec<u32> {
        let mut out = vec![0; self.ranges.len()];
        for (slot, (lo, hi)) in out.iter_mut().zip(&self.ranges).rev() {
            let width = (hi - lo + 1) as usize;
            *slot = lo + (idx % width) as u32;
            idx /= width;
        }
        out
    }

    /// Column index of an exponent tuple, if it lies in the box.
    pub fn index_of(&self, exponents: &[u32]) -> Option<usize> {
        if exponents.len() != self.ranges.len() {
            return None;
        }
        exponents.iter().zip(&self.ranges).try_fold(0usize, |acc, (&e, &(lo, hi))| {
            (lo..=hi).contains(&e).then(|| acc * (hi - lo + 1) as usize + (e - lo) as usize)
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupBeams {
    /// `t_r` for each relation of the group, in plan order.
    pub generators: Vec<Vec<Complex64>>,
    pub base: Vec<Complex64>,
    /// Shared by every data transmitter of the group.
    pub data: Beam,
    pub noise: Beam,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamformingSet {
    pub groups: Vec<GroupBeams>,
}

/// Exponent boxes for every group, data and noise separately.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentRanges {
    pub data: Vec<Vec<(u32, u32)>>,
    pub noise: Vec<Vec<(u32, u32)>>,
}

impl ExponentRanges {
    /// `1..=n` for data and `1..=n+1` for noise, on every generator.
    pub fn standard(plan: &AlignmentPlan) -> Self {
        let n = plan.config.order;
        let per = |r: (u32, u32)| plan.groups.iter().map(|g| vec![r; g.relations.len()]).collect();
        ExponentRanges { data: per((1, n)), noise: per((1, n + 1)) }
    }
}

/// Standard beamformers with bases drawn from the `"beam-base"` stream of `seed`.
pub fn build_beamformers(
    plan: &AlignmentPlan,
    channel: &ChannelRealization,
    seed: u64,
) -> Result<BeamformingSet, AirsimError> {
    let t = channel.block_len();
    let bases = (0..plan.groups.len())
        .map(|g| {
            let mut rng = seed::stream(seed, "beam-base", g as u64);
            (0..t).map(|_| seed::annulus(&mut rng, BASE_MIN_RADIUS)).collect()
        })
        .collect();
    build_beamformers_with(plan, channel, bases, &ExponentRanges::standard(plan))
}

/// Beamformers with explicit bases and exponent boxes.
pub fn build_beamformers_with(
    plan: &AlignmentPlan,
    channel: &ChannelRealization,
    bases: Vec<Vec<Complex64>>,
    ranges: &ExponentRanges,
) -> Result<BeamformingSet, AirsimError> {
    let t = channel.block_len();
    if bases.len() != plan.groups.len() || ranges.data.len() != plan.groups.len() || ranges.noise.len() != plan.groups.len() {
        return Err(AirsimError::DimensionMismatch { expected: plan.groups.len(), got: bases.len() });
    }
    let a = plan.noise_source();
    let groups = plan
        .groups
        .iter()
        .zip(bases)
        .enumerate()
        .map(|(g, (group, base))| {
            if base.len() != t {
                return Err(AirsimError::DimensionMismatch { expected: t, got: base.len() });
            }
            let generators: Vec<Vec<Complex64>> = group
                .relations
                .iter()
                .map(|rel| {
                    let num = channel.gain(rel.receiver, rel.transmitter);
                    let den = channel.gain(rel.receiver, a);
                    num.iter().zip(den).map(|(x, y)| x / y).collect()
                })
                .collect();
            for r in [&ranges.data[g], &ranges.noise[g]] {
                if r.len() != generators.len() || r.iter().any(|(lo, hi)| lo > hi) {
                    return Err(AirsimError::InvalidConfig("exponent ranges must match the generators"));
                }
            }
            let data = Beam::build(&base, &generators, ranges.data[g].clone());
            let noise = Beam::build(&base, &generators, ranges.noise[g].clone());
            Ok(GroupBeams { generators, base, data, noise })
        })
        .collect::<Result<_, _>>()?;
    Ok(BeamformingSet { groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airsim::{gen_channel, AlignmentConfig, Direction, Duplex};

    #[test]
    fn index_round_trip() {
        let beam = Beam { ranges: vec![(1, 2), (1, 3), (2, 2)], columns: Vec::new() };
        assert_eq!(beam.len_from_ranges(), 6);
        for idx in 0..6 {
            assert_eq!(beam.index_of(&beam.exponents(idx)), Some(idx));
        }
        assert_eq!(beam.index_of(&[3, 1, 2]), None);
    }

    #[test]
    fn three_by_three_column_counts() {
        let cfg = AlignmentConfig::new(Direction::Uplink, 3, 3, 1, 0, Duplex::Full).unwrap();
        let plan = AlignmentPlan::new(cfg);
        let h = gen_channel(Direction::Uplink, 50, 3, 3, 2);
        let bf = build_beamformers(&plan, &h, 2).unwrap();
        assert_eq!(bf.groups.len(), 3);
        for g in &bf.groups {
            assert_eq!((g.data.len(), g.noise.len()), (1, 16));
            assert_eq!(g.generators.len(), 4);
        }
    }
}
