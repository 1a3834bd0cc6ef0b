//! Zero-forcing reception and the symbol-error-rate demo.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DVector, Dyn, LU};
use num_complex::Complex64;
use rand_core::RngCore;

use super::verify::{equilibrate, receiver_matrix};
use super::{AirsimError, AlignmentPlan, BeamformingSet, ChannelRealization, Station};
use crate::galois::{Fe, PrimeField};
use crate::seed;

/// Unit-energy QPSK point for the residue of `x` modulo 4.
pub fn qpsk(x: Fe) -> Complex64 {
    let k = (x.value() % 4) as f64;
    Complex64::from_polar(1.0, core::f64::consts::FRAC_PI_4 + k * core::f64::consts::FRAC_PI_2)
}

/// Nearest QPSK index (`0..4`) to `z`.
pub fn qpsk_index(z: Complex64) -> u8 {
    match (z.re >= 0.0, z.im >= 0.0) {
        (true, true) => 0,
        (false, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
    }
}

/// Symbols on the air for one block.
#[derive(Clone, Debug, PartialEq)]
pub struct Transmission {
    /// `data[g][t]`: symbols transmitter `t` of group `g` sends on `Φ_g`.
    pub data: Vec<Vec<Vec<Complex64>>>,
    /// `noise[g]`: the noise user's symbols on `Φ_g^noise`.
    pub noise: Vec<Vec<Complex64>>,
}

impl Transmission {
    pub fn zeros(plan: &AlignmentPlan, bf: &BeamformingSet) -> Self {
        Transmission {
            data: plan
                .groups
                .iter()
                .zip(&bf.groups)
                .map(|(g, b)| vec![vec![Complex64::new(0.0, 0.0); b.data.len()]; g.transmitters.len()])
                .collect(),
            noise: bf.groups.iter().map(|b| vec![Complex64::new(0.0, 0.0); b.noise.len()]).collect(),
        }
    }

    /// QPSK-mapped uniform field symbols for data, `CN(0, 1)` artificial noise.
    pub fn random<R: RngCore + ?Sized>(plan: &AlignmentPlan, bf: &BeamformingSet, field: &PrimeField, rng: &mut R) -> Self {
        let mut tx = Self::zeros(plan, bf);
        for group in &mut tx.data {
            for stream in group.iter_mut() {
                stream.iter_mut().for_each(|s| *s = qpsk(field.random(rng)));
            }
        }
        for group in &mut tx.noise {
            group.iter_mut().for_each(|s| *s = seed::complex_gaussian(rng));
        }
        tx
    }
}

fn superpose(acc: &mut [Complex64], h: &[Complex64], columns: &[Vec<Complex64>], symbols: &[Complex64]) {
    for (col, s) in columns.iter().zip(symbols) {
        for ((y, g), c) in acc.iter_mut().zip(h).zip(col) {
            *y += g * c * s;
        }
    }
}

/// What `rx` hears: every group's data and noise at amplitude `sqrt(P)`, plus
/// unit-variance AWGN when `awgn` is given.
pub fn simulate_reception(
    plan: &AlignmentPlan,
    bf: &BeamformingSet,
    channel: &ChannelRealization,
    rx: Station,
    tx: &Transmission,
    power: f64,
    awgn: Option<&mut dyn RngCore>,
) -> Vec<Complex64> {
    let a = plan.noise_source();
    let mut y = vec![Complex64::new(0.0, 0.0); channel.block_len()];
    for (g, (group, beams)) in plan.groups.iter().zip(&bf.groups).enumerate() {
        for (t, &sender) in group.transmitters.iter().enumerate() {
            if sender != rx {
                superpose(&mut y, channel.gain(rx, sender), beams.data.columns(), &tx.data[g][t]);
            }
        }
        if a != rx {
            superpose(&mut y, channel.gain(rx, a), beams.noise.columns(), &tx.noise[g]);
        }
    }
    let amp = libm::sqrt(power);
    y.iter_mut().for_each(|v| *v *= amp);
    if let Some(rng) = awgn {
        y.iter_mut().for_each(|v| *v += seed::complex_gaussian(rng));
    }
    y
}

/// Zero-forcing receiver at one group's target.
pub struct ZfReceiver {
    group: usize,
    desired: usize,
    lu: LU<Complex64, Dyn, Dyn>,
    rows: Vec<f64>,
    cols: Vec<f64>,
}

impl ZfReceiver {
    pub fn new(
        plan: &AlignmentPlan,
        bf: &BeamformingSet,
        channel: &ChannelRealization,
        group: usize,
    ) -> Result<Self, AirsimError> {
        let m = receiver_matrix(plan, bf, channel, group);
        if m.nrows() != m.ncols() {
            return Err(AirsimError::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let (eq, rows, cols) = equilibrate(&m);
        let lu = eq.lu();
        if !lu.is_invertible() {
            return Err(AirsimError::RankDeficient { receiver: plan.groups[group].target, ratio: 0.0 });
        }
        let desired = plan.groups[group].transmitters.len() * bf.groups[group].data.len();
        Ok(ZfReceiver { group, desired, lu, rows, cols })
    }

    pub fn group(&self) -> usize {
        self.group
    }

    /// Desired symbol estimates, transmitter-major, from a block received at power `P`.
    pub fn decode(&self, y: &[Complex64], power: f64) -> Result<Vec<Complex64>, AirsimError> {
        if y.len() != self.rows.len() {
            return Err(AirsimError::DimensionMismatch { expected: self.rows.len(), got: y.len() });
        }
        let b = DVector::from_iterator(y.len(), y.iter().zip(&self.rows).map(|(v, s)| v * *s));
        let z = self
            .lu
            .solve(&b)
            .ok_or(AirsimError::RankDeficient { receiver: Station::User(0), ratio: 0.0 })?;
        let amp = libm::sqrt(power);
        Ok(z.iter().zip(&self.cols).take(self.desired).map(|(v, s)| v * *s / amp).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SerPoint {
    pub power: f64,
    pub ser: f64,
    pub symbols: usize,
}

/// Monte-Carlo QPSK symbol error rate at every group's target for each power.
pub fn ser_sweep(
    plan: &AlignmentPlan,
    bf: &BeamformingSet,
    channel: &ChannelRealization,
    powers: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<SerPoint>, AirsimError> {
    let receivers = (0..plan.groups.len())
        .map(|g| ZfReceiver::new(plan, bf, channel, g))
        .collect::<Result<Vec<_>, _>>()?;
    let field = PrimeField::mersenne31();
    powers
        .iter()
        .enumerate()
        .map(|(pi, &power)| {
            let mut rng = seed::stream(seed, "ser", pi as u64);
            let (mut errors, mut symbols) = (0usize, 0usize);
            for _ in 0..trials {
                let tx = Transmission::random(plan, bf, &field, &mut rng);
                for zf in &receivers {
                    let g = zf.group();
                    let y = simulate_reception(plan, bf, channel, plan.groups[g].target, &tx, power, Some(&mut rng));
                    let est = zf.decode(&y, power)?;
                    let sent = tx.data[g].iter().flatten();
                    for (e, s) in est.iter().zip(sent) {
                        symbols += 1;
                        errors += usize::from(qpsk_index(*e) != qpsk_index(*s));
                    }
                }
            }
            Ok(SerPoint { power, ser: errors as f64 / symbols.max(1) as f64, symbols })
        })
        .collect()
}
