//! Gaussian leakage bound at a curious receiver over a power sweep.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{AirsimError, AlignmentPlan, BeamformingSet, ChannelRealization, Station};

/// Diagonal loading, relative to the mean diagonal, when Cholesky fails.
const RIDGE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PowerSweep {
    pub receiver: Station,
    pub powers: Vec<f64>,
    /// Leakage bound in bits at each power.
    pub leakage: Vec<f64>,
    /// Least-squares slope of leakage against `log2 P` over the top decade.
    pub slope: f64,
    /// Whether any log-determinant needed the ridge.
    pub regularized: bool,
}

fn stack(cols: &[Vec<Complex64>], rows: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// `log2 det(I + P X Xᴴ)`, flagging when a ridge was needed.
fn log2det_shifted(gram: &DMatrix<Complex64>, power: f64) -> (f64, bool) {
    let n = gram.nrows();
    let base = DMatrix::<Complex64>::identity(n, n) + gram * Complex64::new(power, 0.0);
    let logdet = |m: DMatrix<Complex64>| {
        m.cholesky().map(|c| {
            2.0 * c.l_dirty().diagonal().iter().map(|d| libm::log2(d.re)).sum::<f64>()
        })
    };
    if let Some(v) = logdet(base.clone()) {
        return (v, false);
    }
    let scale = base.diagonal().iter().map(|d| d.re).sum::<f64>() / n as f64;
    let ridged = base + DMatrix::<Complex64>::identity(n, n) * Complex64::new(RIDGE * scale, 0.0);
    (logdet(ridged).unwrap_or(f64::NAN), true)
}

fn fit_top_decade(powers: &[f64], values: &[f64]) -> f64 {
    let top = powers.last().copied().unwrap_or(1.0) / 10.0;
    let pts: Vec<(f64, f64)> = powers
        .iter()
        .zip(values)
        .filter(|(p, _)| **p >= top * (1.0 - 1e-12))
        .map(|(p, v)| (libm::log2(*p), *v))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    sxy / sxx
}

/// Leakage about messages meant for others, observed at `receiver`.
///
/// `L(P) = log2 det(I + P(S Sᴴ + N Nᴴ)) - log2 det(I + P N Nᴴ)`, where `S`
/// stacks `H_{rx,tx} Φ_g` for every group `g` not addressed to `receiver` and
/// `N` stacks the noise user's `H_{rx,a} Φ_g^noise` for the same groups (empty
/// when `with_noise` is false). Columns are used as constructed, so each
/// stream carries the power its beamformer column gives it.
pub fn leakage_sweep(
    plan: &AlignmentPlan,
    bf: &BeamformingSet,
    channel: &ChannelRealization,
    receiver: Station,
    powers: &[f64],
    with_noise: bool,
) -> Result<PowerSweep, AirsimError> {
    if powers.is_empty() || powers[0] <= 0.0 || powers.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AirsimError::BadPowers);
    }
    let t = channel.block_len();
    let a = plan.noise_source();
    let mut s_cols: Vec<Vec<Complex64>> = Vec::new();
    let mut n_cols: Vec<Vec<Complex64>> = Vec::new();
    for (group, beams) in plan.groups.iter().zip(&bf.groups) {
        if group.target == receiver {
            continue;
        }
        for &tx in group.transmitters.iter().filter(|&&tx| tx != receiver) {
            let h = channel.gain(receiver, tx);
            s_cols.extend(beams.data.columns().iter().map(|c| h.iter().zip(c).map(|(x, y)| x * y).collect()));
        }
        if with_noise && a != receiver {
            let h = channel.gain(receiver, a);
            n_cols.extend(beams.noise.columns().iter().map(|c| h.iter().zip(c).map(|(x, y)| x * y).collect()));
        }
    }
    let s = stack(&s_cols, t);
    let n = stack(&n_cols, t);
    let noise_gram = &n * n.adjoint();
    let total_gram = &s * s.adjoint() + &noise_gram;
    let mut regularized = false;
    let leakage = powers
        .iter()
        .map(|&p| {
            let (with, r1) = log2det_shifted(&total_gram, p);
            let (without, r0) = log2det_shifted(&noise_gram, p);
            regularized |= r1 || r0;
            with - without
        })
        .collect::<Vec<_>>();
    let slope = fit_top_decade(powers, &leakage);
    Ok(PowerSweep { receiver, powers: powers.to_vec(), leakage, slope, regularized })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let p = [1e2, 1e3, 1e4, 1e5, 1e6];
        let v: Vec<f64> = p.iter().map(|x| 3.0 * libm::log2(*x) + 1.0).collect();
        assert!((fit_top_decade(&p, &v) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn identity_gram_logdet() {
        let g = DMatrix::<Complex64>::identity(4, 4);
        let (v, ridge) = log2det_shifted(&g, 1.0);
        assert!(!ridge);
        assert!((v - 4.0).abs() < 1e-12);
    }
}
