//! Closed-form NDT, DoF, lower-bound and gap evaluation in exact rationals.

use alloc::vec::Vec;

use num_rational::Ratio;

pub type Q = Ratio<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Uplink,
    Downlink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("outside the formula's domain: {0}")]
    Domain(&'static str),
}

fn q(n: usize, d: usize) -> Q {
    Q::new(n as i64, d as i64)
}

/// Achievable `(Δ_up, Δ_down)`.
///
/// `Δ_up = M/r · M/(M-1)` for `K = 2` and `(K+M-1)/r · M/(M-1)` otherwise;
/// `Δ_down = (K+M-1)/r`.
pub fn ndt_achievable(m: usize, k: usize, r: usize) -> Result<(Q, Q), AnalysisError> {
    if m < 3 {
        return Err(AnalysisError::Domain("need M >= 3"));
    }
    if k < 2 {
        return Err(AnalysisError::Domain("need K >= 2"));
    }
    if r == 0 || r >= k {
        return Err(AnalysisError::Domain("need 1 <= r <= K - 1"));
    }
    let users_factor = q(m, m - 1);
    let up = if k == 2 { q(m, r) * users_factor } else { q(k + m - 1, r) * users_factor };
    Ok((up, q(k + m - 1, r)))
}

/// Lower bounds `(max(M,K)/(K-1), K/(K-1))`.
pub fn ndt_lower(m: usize, k: usize) -> Result<(Q, Q), AnalysisError> {
    if k < 2 {
        return Err(AnalysisError::Domain("need K >= 2"));
    }
    if m == 0 {
        return Err(AnalysisError::Domain("need M >= 1"));
    }
    Ok((q(m.max(k), k - 1), q(k, k - 1)))
}

/// Achievable over lower bound at `r = K - 1`, both directions.
pub fn gap_ratio(m: usize, k: usize) -> Result<(Q, Q), AnalysisError> {
    let (up, down) = ndt_achievable(m, k, k.saturating_sub(1))?;
    let (up_lb, down_lb) = ndt_lower(m, k)?;
    Ok((up / up_lb, down / down_lb))
}

/// Sum DoF: uplink `K(M-1)/(K+M-2)` for `K = 2`, `K(M-1)/(K+M-1)` otherwise;
/// downlink `K/(M+K-1)`.
pub fn dof_formula(m: usize, k: usize, direction: Direction) -> Result<Q, AnalysisError> {
    if m < 2 {
        return Err(AnalysisError::Domain("need M >= 2"));
    }
    if k < 2 {
        return Err(AnalysisError::Domain("need K >= 2"));
    }
    Ok(match direction {
        Direction::Uplink if k == 2 => q(k * (m - 1), k + m - 2),
        Direction::Uplink => q(k * (m - 1), k + m - 1),
        Direction::Downlink => q(k, m + k - 1),
    })
}

/// Single-server baseline `(M, 1)`.
pub fn single_server(m: usize) -> (Q, Q) {
    (q(m, 1), Q::from_integer(1))
}

/// Payload per gradient bit-length `A`: uplink `K·M/r`, downlink `K/r`.
pub fn comm_cost(m: usize, k: usize, r: usize) -> Result<(Q, Q), AnalysisError> {
    if r == 0 {
        return Err(AnalysisError::Domain("need r >= 1"));
    }
    Ok((q(k * m, r), q(k, r)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NdtReport {
    pub users: usize,
    pub servers: usize,
    pub partitions: usize,
    pub ndt_up: Q,
    pub ndt_down: Q,
    pub ndt_up_lb: Q,
    pub ndt_down_lb: Q,
    pub gap_up: Q,
    pub gap_down: Q,
    pub dof_up: Q,
    pub dof_down: Q,
    pub single_up: Q,
    pub single_down: Q,
    pub comm_up: Q,
    pub comm_down: Q,
}

impl NdtReport {
    pub fn new(m: usize, k: usize, r: usize) -> Result<Self, AnalysisError> {
        let (ndt_up, ndt_down) = ndt_achievable(m, k, r)?;
        let (ndt_up_lb, ndt_down_lb) = ndt_lower(m, k)?;
        let (single_up, single_down) = single_server(m);
        let (comm_up, comm_down) = comm_cost(m, k, r)?;
        Ok(NdtReport {
            users: m,
            servers: k,
            partitions: r,
            ndt_up,
            ndt_down,
            ndt_up_lb,
            ndt_down_lb,
            gap_up: ndt_up / ndt_up_lb,
            gap_down: ndt_down / ndt_down_lb,
            dof_up: dof_formula(m, k, Direction::Uplink)?,
            dof_down: dof_formula(m, k, Direction::Downlink)?,
            single_up,
            single_down,
            comm_up,
            comm_down,
        })
    }
}

/// How `r` is chosen for each sweep cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RRule {
    /// `r = K - 1`.
    KMinusOne,
    /// The same `r` everywhere; cells with `r >= K` are skipped.
    Fixed(usize),
}

impl RRule {
    pub fn pick(self, k: usize) -> usize {
        match self {
            RRule::KMinusOne => k.saturating_sub(1),
            RRule::Fixed(r) => r,
        }
    }
}

/// One report per feasible `(M, K)`, `M` outer, both in the given order.
pub fn sweep(ms: &[usize], ks: &[usize], rule: RRule) -> Vec<NdtReport> {
    ms.iter()
        .flat_map(|&m| ks.iter().filter_map(move |&k| NdtReport::new(m, k, rule.pick(k)).ok()))
        .collect()
}
