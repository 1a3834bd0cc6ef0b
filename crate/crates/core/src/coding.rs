//! Lagrange-coded multi-secret sharing of gradient vectors.
//!
//! User `i` splits `g_i` into `r` segments and builds the degree-`r`
//! polynomial `G_i` with `G_i(β_k) = g_{i,k}` for `k ≤ r` and
//! `G_i(β_{r+1}) = n_i`, a fresh uniform mask. Server `j` receives
//! `c_{j,i} = G_i(α_j)`, i.e. row `j` of the encoding matrix `U` applied to
//! `(g_{i,1}, …, g_{i,r}, n_i)`. Summing over users gives `F(α_j)` for
//! `F = Σ_i G_i`, and any `r + 1` of those values pin down `F`, whose values at
//! `β_1..β_r` are the aggregated segments.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::galois::{lagrange_weights, Fe, FieldError, PrimeField};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodingError {
    #[error("invalid coding configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("field modulus {modulus} too small: need at least r + 1 + K = {needed} distinct points")]
    FieldTooSmall { modulus: u64, needed: u64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("incomplete round at server {server}: expected {expected} shares, got {got}")]
    IncompleteRound { server: usize, expected: usize, got: usize },
    #[error("insufficient shares: need {needed} server evaluations, got {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("server index {0} out of range or repeated")]
    BadServer(usize),
}

/// Parameters shared by every user and server of one aggregation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodingConfig {
    field: PrimeField,
    users: usize,
    servers: usize,
    partitions: usize,
    grad_len: usize,
    betas: Vec<Fe>,
    alphas: Vec<Fe>,
    matrix: EncodingMatrix,
}

impl CodingConfig {
    /// Default evaluation points `β_l = l` (`l = 1..=r+1`) and `α_j = r + 1 + j`.
    pub fn new(
        field: PrimeField,
        users: usize,
        servers: usize,
        partitions: usize,
        grad_len: usize,
    ) -> Result<Self, CodingError> {
        let needed = partitions as u64 + 1 + servers as u64;
        if field.modulus() < needed {
            return Err(CodingError::FieldTooSmall { modulus: field.modulus(), needed });
        }
        let betas = (1..=partitions as u64 + 1).map(|l| field.element(l)).collect();
        let alphas = (1..=servers as u64)
            .map(|j| field.element(partitions as u64 + 1 + j))
            .collect();
        Self::with_points(field, users, grad_len, betas, alphas)
    }

    /// Explicit points: `betas` has `r + 1` entries, `alphas` one per server.
    pub fn with_points(
        field: PrimeField,
        users: usize,
        grad_len: usize,
        betas: Vec<Fe>,
        alphas: Vec<Fe>,
    ) -> Result<Self, CodingError> {
        if users == 0 {
            return Err(CodingError::InvalidConfig("at least one user is required"));
        }
        if grad_len == 0 {
            return Err(CodingError::InvalidConfig("gradient length must be positive"));
        }
        if betas.len() < 2 {
            return Err(CodingError::InvalidConfig("r must be at least 1"));
        }
        let partitions = betas.len() - 1;
        let servers = alphas.len();
        if partitions + 1 > servers {
            return Err(CodingError::InvalidConfig("reconstruction needs r + 1 <= K"));
        }
        if servers > u16::MAX as usize || users > u16::MAX as usize {
            return Err(CodingError::InvalidConfig("user and server counts must fit in u16"));
        }
        for &x in betas.iter().chain(&alphas) {
            field.try_element(x.value())?;
        }
        let mut all: Vec<Fe> = betas.iter().chain(&alphas).copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(CodingError::InvalidConfig(
                "evaluation points must be distinct and betas disjoint from alphas",
            ));
        }
        let matrix = EncodingMatrix::build(&field, &betas, &alphas)?;
        Ok(CodingConfig { field, users, servers, partitions, grad_len, betas, alphas, matrix })
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }
    pub fn users(&self) -> usize {
        self.users
    }
    pub fn servers(&self) -> usize {
        self.servers
    }
    pub fn partitions(&self) -> usize {
        self.partitions
    }
    pub fn grad_len(&self) -> usize {
        self.grad_len
    }
    pub fn betas(&self) -> &[Fe] {
        &self.betas
    }
    pub fn alphas(&self) -> &[Fe] {
        &self.alphas
    }
    pub fn encoding_matrix(&self) -> &EncodingMatrix {
        &self.matrix
    }

    /// Length of every segment, share and aggregate: `ceil(p / r)`.
    pub fn segment_len(&self) -> usize {
        self.grad_len.div_ceil(self.partitions)
    }

    /// Minimum number of server evaluations needed to reconstruct.
    pub fn threshold(&self) -> usize {
        self.partitions + 1
    }
}

/// `U[j][k] = ℓ_k(α_j)` over the nodes `β_1..β_{r+1}`; shape `K × (r+1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingMatrix {
    rows: Vec<Vec<Fe>>,
}

impl EncodingMatrix {
    fn build(field: &PrimeField, betas: &[Fe], alphas: &[Fe]) -> Result<Self, CodingError> {
        let rows = alphas
            .iter()
            .map(|&a| lagrange_weights(field, betas, a))
            .collect::<Result<_, _>>()?;
        Ok(EncodingMatrix { rows })
    }

    pub fn rows(&self) -> &[Vec<Fe>] {
        &self.rows
    }

    pub fn row(&self, server: usize) -> &[Fe] {
        &self.rows[server]
    }

    pub fn entry(&self, server: usize, column: usize) -> Fe {
        self.rows[server][column]
    }

    /// `U^L`, the first `r` columns of row `server`.
    pub fn left(&self, server: usize) -> &[Fe] {
        let row = &self.rows[server];
        &row[..row.len() - 1]
    }

    /// `U^R`, the mask column.
    pub fn right(&self) -> Vec<Fe> {
        self.rows.iter().map(|r| *r.last().expect("r + 1 >= 2 columns")).collect()
    }
}

/// A user's private gradient `g_i ∈ F^p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradientVector {
    pub owner: usize,
    pub values: Vec<Fe>,
}

impl GradientVector {
    pub fn new(owner: usize, values: Vec<Fe>) -> Self {
        GradientVector { owner, values }
    }

    pub fn random<R: RngCore + ?Sized>(owner: usize, cfg: &CodingConfig, rng: &mut R) -> Self {
        GradientVector { owner, values: cfg.field().random_vec(rng, cfg.grad_len()) }
    }
}

/// The uniform mask `n_i ∈ F^{ceil(p/r)}` carried at node `β_{r+1}`.
///
/// Draw a fresh one for every encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskVector(pub Vec<Fe>);

impl MaskVector {
    pub fn sample<R: RngCore + ?Sized>(cfg: &CodingConfig, rng: &mut R) -> Self {
        MaskVector(cfg.field().random_vec(rng, cfg.segment_len()))
    }

    pub fn zero(cfg: &CodingConfig) -> Self {
        MaskVector(vec![Fe::ZERO; cfg.segment_len()])
    }
}

/// All confidential messages of a round, `shares[j][i] = c_{j,i}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareMatrix {
    shares: Vec<Vec<Vec<Fe>>>,
}

impl ShareMatrix {
    /// Assembles from per-user columns (`columns[i][j] = c_{j,i}`).
    pub fn from_columns(columns: &[Vec<Vec<Fe>>]) -> Self {
        let servers = columns.first().map_or(0, Vec::len);
        let shares = (0..servers)
            .map(|j| columns.iter().map(|col| col[j].clone()).collect())
            .collect();
        ShareMatrix { shares }
    }

    /// Encodes every user's gradient with its mask.
    pub fn encode_all(
        gradients: &[GradientVector],
        masks: &[MaskVector],
        cfg: &CodingConfig,
    ) -> Result<Self, CodingError> {
        if gradients.len() != masks.len() {
            return Err(CodingError::LengthMismatch { expected: gradients.len(), got: masks.len() });
        }
        let columns = gradients
            .iter()
            .zip(masks)
            .map(|(g, n)| encode_shares(g, n, cfg))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_columns(&columns))
    }

    pub fn get(&self, server: usize, user: usize) -> &[Fe] {
        &self.shares[server][user]
    }

    /// Everything server `j` should end up holding.
    pub fn server_row(&self, server: usize) -> &[Vec<Fe>] {
        &self.shares[server]
    }

    pub fn servers(&self) -> usize {
        self.shares.len()
    }

    pub fn users(&self) -> usize {
        self.shares.first().map_or(0, Vec::len)
    }
}

/// `F(α_j)` as held by server `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregatedEvaluation {
    pub server: usize,
    pub value: Vec<Fe>,
}

/// Splits `g` into `r` segments of `ceil(p/r)`, zero-padding the last.
pub fn split_gradient(g: &[Fe], cfg: &CodingConfig) -> Result<Vec<Vec<Fe>>, CodingError> {
    if g.len() != cfg.grad_len() {
        return Err(CodingError::LengthMismatch { expected: cfg.grad_len(), got: g.len() });
    }
    let seg = cfg.segment_len();
    Ok((0..cfg.partitions())
        .map(|k| {
            let start = (k * seg).min(g.len());
            let end = ((k + 1) * seg).min(g.len());
            let mut s = g[start..end].to_vec();
            s.resize(seg, Fe::ZERO);
            s
        })
        .collect())
}

/// Concatenates segments and truncates to `grad_len`.
pub fn join_segments(segments: &[Vec<Fe>], grad_len: usize) -> Vec<Fe> {
    let mut out: Vec<Fe> = segments.iter().flatten().copied().collect();
    out.truncate(grad_len);
    out
}

/// Column `i` of the share matrix: `c_{j,i} = Σ_k U[j][k] g_{i,k} + U[j][r+1] n_i` for every `j`.
pub fn encode_shares(
    g: &GradientVector,
    mask: &MaskVector,
    cfg: &CodingConfig,
) -> Result<Vec<Vec<Fe>>, CodingError> {
    let seg = cfg.segment_len();
    if mask.0.len() != seg {
        return Err(CodingError::LengthMismatch { expected: seg, got: mask.0.len() });
    }
    let segments = split_gradient(&g.values, cfg)?;
    let field = cfg.field();
    let u = cfg.encoding_matrix();
    Ok((0..cfg.servers())
        .map(|j| {
            let mut share = vec![Fe::ZERO; seg];
            for (k, s) in segments.iter().enumerate() {
                field.axpy(&mut share, u.entry(j, k), s);
            }
            field.axpy(&mut share, u.entry(j, cfg.partitions()), &mask.0);
            share
        })
        .collect())
}

/// Server `j`'s sum of the shares from every user.
pub fn aggregate_shares(
    server: usize,
    shares: &[Vec<Fe>],
    cfg: &CodingConfig,
) -> Result<AggregatedEvaluation, CodingError> {
    if server >= cfg.servers() {
        return Err(CodingError::BadServer(server));
    }
    if shares.len() != cfg.users() {
        return Err(CodingError::IncompleteRound {
            server,
            expected: cfg.users(),
            got: shares.len(),
        });
    }
    let seg = cfg.segment_len();
    let mut value = vec![Fe::ZERO; seg];
    for s in shares {
        if s.len() != seg {
            return Err(CodingError::LengthMismatch { expected: seg, got: s.len() });
        }
        cfg.field().add_assign_vec(&mut value, s);
    }
    Ok(AggregatedEvaluation { server, value })
}

/// Interpolates `F` through the given `(α_j, F(α_j))` and returns
/// `(F(β_1), …, F(β_r))` concatenated and truncated to `p`.
///
/// Any `r + 1` evaluations with distinct servers suffice; extra ones must be
/// consistent with the same degree-`r` polynomial.
pub fn reconstruct(
    evals: &[AggregatedEvaluation],
    cfg: &CodingConfig,
) -> Result<Vec<Fe>, CodingError> {
    if evals.len() < cfg.threshold() {
        return Err(CodingError::InsufficientShares { needed: cfg.threshold(), got: evals.len() });
    }
    let mut seen = vec![false; cfg.servers()];
    for e in evals {
        if e.server >= cfg.servers() || core::mem::replace(&mut seen[e.server], true) {
            return Err(CodingError::BadServer(e.server));
        }
        if e.value.len() != cfg.segment_len() {
            return Err(CodingError::LengthMismatch { expected: cfg.segment_len(), got: e.value.len() });
        }
    }
    let field = cfg.field();
    let nodes: Vec<Fe> = evals.iter().map(|e| cfg.alphas()[e.server]).collect();
    let segments = cfg.betas()[..cfg.partitions()]
        .iter()
        .map(|&beta| {
            let weights = lagrange_weights(field, &nodes, beta)?;
            let mut seg = vec![Fe::ZERO; cfg.segment_len()];
            for (w, e) in weights.iter().zip(evals) {
                field.axpy(&mut seg, *w, &e.value);
            }
            Ok(seg)
        })
        .collect::<Result<Vec<_>, CodingError>>()?;
    Ok(join_segments(&segments, cfg.grad_len()))
}

/// Elementwise `Σ_i g_i`, the value every user must recover.
pub fn direct_sum(gradients: &[GradientVector], cfg: &CodingConfig) -> Vec<Fe> {
    let mut acc = vec![Fe::ZERO; cfg.grad_len()];
    for g in gradients {
        cfg.field().add_assign_vec(&mut acc, &g.values);
    }
    acc
}
