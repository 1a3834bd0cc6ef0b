//! Alignment (column containment) and generic-position (rank) checks.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{AirsimError, AlignmentPlan, BeamformingSet, ChannelRealization, Station};

/// Largest relative residual accepted as an exact column match.
pub const CONTAINMENT_TOLERANCE: f64 = 1e-10;
/// Smallest accepted ratio of extreme singular values.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Row/column balancing sweeps before measuring singular values.
const EQUILIBRATION_SWEEPS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentReport {
    pub relation_count: usize,
    pub columns_checked: usize,
    pub max_residual: f64,
    /// The relation attaining `max_residual`.
    pub worst: Option<(usize, Station, Station)>,
}

impl AlignmentReport {
    pub fn holds(&self) -> bool {
        self.max_residual <= CONTAINMENT_TOLERANCE
    }

    pub fn check(&self) -> Result<(), AirsimError> {
        match self.worst {
            Some((group, receiver, transmitter)) if !self.holds() => {
                Err(AirsimError::AlignmentViolation { group, receiver, transmitter, residual: self.max_residual })
            }
            _ => Ok(()),
        }
    }
}

fn hadamard<'a>(h: &'a [Complex64], x: &'a [Complex64]) -> impl Iterator<Item = Complex64> + 'a {
    h.iter().zip(x).map(|(a, b)| a * b)
}

fn relative_residual(h_tx: &[Complex64], data: &[Complex64], h_a: &[Complex64], noise: &[Complex64]) -> f64 {
    let (diff, norm) = hadamard(h_tx, data)
        .zip(hadamard(h_a, noise))
        .fold((0.0, 0.0), |(d, n), (x, y)| (d + (x - y).norm_sqr(), n + x.norm_sqr()));
    libm::sqrt(diff / norm)
}

/// Checks that every column of `H_{rx,tx} Φ_g` is a column of `H_{rx,a} Φ_g^noise`
/// for every relation of every group.
///
/// The matching column is first looked up by bumping the relation's exponent;
/// if that falls outside the noise box, every noise column is tried.
pub fn verify_alignment(plan: &AlignmentPlan, bf: &BeamformingSet, channel: &ChannelRealization) -> AlignmentReport {
    let a = plan.noise_source();
    let mut report = AlignmentReport { relation_count: 0, columns_checked: 0, max_residual: 0.0, worst: None };
    for (g, (group, beams)) in plan.groups.iter().zip(&bf.groups).enumerate() {
        for (r, rel) in group.relations.iter().enumerate() {
            report.relation_count += 1;
            let h_tx = channel.gain(rel.receiver, rel.transmitter);
            let h_a = channel.gain(rel.receiver, a);
            let mut worst_here: f64 = 0.0;
            for (idx, col) in beams.data.columns().iter().enumerate() {
                report.columns_checked += 1;
                let mut bumped = beams.data.exponents(idx);
                bumped[r] += 1;
                let residual = match beams.noise.index_of(&bumped) {
                    Some(k) => relative_residual(h_tx, col, h_a, beams.noise.column(k)),
                    None => beams
                        .noise
                        .columns()
                        .iter()
                        .map(|n| relative_residual(h_tx, col, h_a, n))
                        .fold(f64::INFINITY, f64::min),
                };
                worst_here = worst_here.max(residual);
            }
            if report.worst.is_none() || worst_here > report.max_residual {
                report.max_residual = worst_here;
                report.worst = Some((g, rel.receiver, rel.transmitter));
            }
        }
    }
    report
}

/// `[H_{rx,tx} Φ_g for tx in group g | H_{rx,a} Φ_h^noise for every group h]` at `rx = target(g)`.
pub fn receiver_matrix(
    plan: &AlignmentPlan,
    bf: &BeamformingSet,
    channel: &ChannelRealization,
    group: usize,
) -> DMatrix<Complex64> {
    let target = plan.groups[group].target;
    let a = plan.noise_source();
    let h_a = channel.gain(target, a);
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for &tx in &plan.groups[group].transmitters {
        let h = channel.gain(target, tx);
        cols.extend(bf.groups[group].data.columns().iter().map(|c| hadamard(h, c).collect()));
    }
    for beams in &bf.groups {
        cols.extend(beams.noise.columns().iter().map(|c| hadamard(h_a, c).collect()));
    }
    let rows = channel.block_len();
    DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Alternately scales rows and columns to unit norm.
///
/// Returns `(D_r A D_c, diag(D_r), diag(D_c))`. Rank and solutions are
/// unchanged up to the scalings, but the singular values stop reflecting the
/// huge spread of magnitudes in generator products.
pub fn equilibrate(a: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<f64>, Vec<f64>) {
    let mut m = a.clone();
    let mut rows = alloc::vec![1.0; m.nrows()];
    let mut cols = alloc::vec![1.0; m.ncols()];
    for _ in 0..EQUILIBRATION_SWEEPS {
        for (i, s) in rows.iter_mut().enumerate() {
            let norm = libm::sqrt(m.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>());
            if norm > 0.0 {
                m.row_mut(i).iter_mut().for_each(|z| *z /= norm);
                *s /= norm;
            }
        }
        for (j, s) in cols.iter_mut().enumerate() {
            let norm = libm::sqrt(m.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>());
            if norm > 0.0 {
                m.column_mut(j).iter_mut().for_each(|z| *z /= norm);
                *s /= norm;
            }
        }
    }
    (m, rows, cols)
}

/// `σ_min / σ_max` of the equilibrated matrix.
pub fn singular_ratio(a: &DMatrix<Complex64>) -> f64 {
    let (m, _, _) = equilibrate(a);
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    /// `(receiver, σ_min/σ_max)` for each group's target.
    pub receivers: Vec<(Station, f64)>,
    pub min_ratio: f64,
    pub desired_columns: usize,
    pub noise_columns: usize,
    pub block_len: usize,
}

impl RankReport {
    pub fn full_rank(&self) -> bool {
        self.min_ratio > RANK_TOLERANCE
    }

    pub fn check(&self) -> Result<(), AirsimError> {
        if self.full_rank() {
            return Ok(());
        }
        let (receiver, ratio) = self
            .receivers
            .iter()
            .copied()
            .fold((Station::User(0), f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best });
        Err(AirsimError::RankDeficient { receiver, ratio })
    }
}

/// Measures whether each target's desired and noise columns fill the block.
pub fn verify_independence(
    plan: &AlignmentPlan,
    bf: &BeamformingSet,
    channel: &ChannelRealization,
) -> Result<RankReport, AirsimError> {
    let t = channel.block_len();
    let mut receivers = Vec::with_capacity(plan.groups.len());
    let (mut desired, mut noise) = (0, 0);
    for g in 0..plan.groups.len() {
        desired = plan.groups[g].transmitters.len() * bf.groups[g].data.len();
        noise = bf.groups.iter().map(|b| b.noise.len()).sum();
        if desired + noise != t {
            return Err(AirsimError::DimensionMismatch { expected: t, got: desired + noise });
        }
        let m = receiver_matrix(plan, bf, channel, g);
        receivers.push((plan.groups[g].target, singular_ratio(&m)));
    }
    let min_ratio = receivers.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(RankReport { receivers, min_ratio, desired_columns: desired, noise_columns: noise, block_len: t })
}
