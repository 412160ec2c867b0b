//! Exponent algebra for the weighted operator families.
//!
//! Everything here is pure arithmetic on exponent vectors: blockwise
//! admissible ranges, the q(p) maps, endpoint exponents, blow-up rates and
//! the p-dependent shapes of the bilateral operator-norm envelopes. All
//! relations are evaluated in reciprocal coordinates (u, v) = (1/p, 1/q) so
//! that p = infinity is an ordinary point.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::ExponentError;
use crate::slowvary::SlowVaryRegistry;

/// Default margin for the strict admissibility inequalities. Keeps scan
/// points away from endpoint degeneracy where the quadrature loses accuracy.
pub const DEFAULT_ADMISSIBILITY_MARGIN: f64 = 1e-9;

/// The operator families handled by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    RieszFull,
    RieszInterior,
    RieszExterior,
    LogRiesz,
    FourierWeighted,
    FourierSlowVary,
    Composed,
    Mixture,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 8] = [
        FamilyKind::RieszFull,
        FamilyKind::RieszInterior,
        FamilyKind::RieszExterior,
        FamilyKind::LogRiesz,
        FamilyKind::FourierWeighted,
        FamilyKind::FourierSlowVary,
        FamilyKind::Composed,
        FamilyKind::Mixture,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyKind::RieszFull => "riesz_full",
            FamilyKind::RieszInterior => "riesz_interior",
            FamilyKind::RieszExterior => "riesz_exterior",
            FamilyKind::LogRiesz => "log_riesz",
            FamilyKind::FourierWeighted => "fourier_weighted",
            FamilyKind::FourierSlowVary => "fourier_slow_vary",
            FamilyKind::Composed => "composed",
            FamilyKind::Mixture => "mixture",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyKind {
    type Err = ExponentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FamilyKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ExponentError::InvalidFamily(format!("unknown family kind `{s}`")))
    }
}

/// Slowly varying attachments of a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlowVarySpec {
    /// S_j for the log-weighted Riesz kernel.
    Single(String),
    /// (L_j, M_j) pair for the slowly-varying-weight Fourier conditions.
    Pair { l: String, m: String },
}

/// Per-block weight parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub m: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub slow_vary: Option<SlowVarySpec>,
}

impl BlockParams {
    pub fn riesz(m: u32, alpha: f64, beta: f64, gamma: f64) -> Self {
        BlockParams {
            m,
            alpha,
            beta,
            gamma: Some(gamma),
            delta: None,
            slow_vary: None,
        }
    }

    pub fn fourier(m: u32, alpha: f64, beta: f64) -> Self {
        BlockParams {
            m,
            alpha,
            beta,
            gamma: None,
            delta: None,
            slow_vary: None,
        }
    }

    pub fn fourier_slow_vary(m: u32, alpha: f64, beta: f64, l: &str, mm: &str) -> Self {
        BlockParams {
            m,
            alpha,
            beta,
            gamma: None,
            delta: None,
            slow_vary: Some(SlowVarySpec::Pair {
                l: l.to_string(),
                m: mm.to_string(),
            }),
        }
    }

    pub fn log_riesz(m: u32, alpha: f64, delta: f64, s: &str) -> Self {
        BlockParams {
            m,
            alpha,
            beta: 0.0,
            gamma: None,
            delta: Some(delta),
            slow_vary: Some(SlowVarySpec::Single(s.to_string())),
        }
    }

    pub fn mixture(m: u32, alpha: f64, beta: f64, gamma: f64) -> Self {
        BlockParams {
            m,
            alpha,
            beta,
            gamma: Some(gamma),
            delta: None,
            slow_vary: None,
        }
    }

    fn md(&self) -> f64 {
        self.m as f64
    }
}

/// How a block enters the exponent relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRole {
    Riesz(RieszDomain),
    LogRiesz,
    Fourier,
    Mixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RieszDomain {
    Full,
    Interior,
    Exterior,
}

/// Index partition of a composed family into Riesz and Fourier blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    riesz: Vec<usize>,
    fourier: Vec<usize>,
}

impl Partition {
    pub fn new(mut riesz: Vec<usize>, mut fourier: Vec<usize>) -> Self {
        riesz.sort_unstable();
        fourier.sort_unstable();
        Partition { riesz, fourier }
    }

    pub fn riesz_blocks(&self) -> &[usize] {
        &self.riesz
    }

    pub fn fourier_blocks(&self) -> &[usize] {
        &self.fourier
    }

    fn validate(&self, l: usize) -> Result<(), ExponentError> {
        if self.riesz.is_empty() || self.fourier.is_empty() {
            return Err(ExponentError::InvalidFamily(
                "composed partition needs non-empty Riesz and Fourier parts".into(),
            ));
        }
        let mut seen = vec![false; l];
        for &j in self.riesz.iter().chain(self.fourier.iter()) {
            if j >= l {
                return Err(ExponentError::InvalidFamily(format!(
                    "partition index {j} out of range for {l} blocks"
                )));
            }
            if seen[j] {
                return Err(ExponentError::InvalidFamily(format!(
                    "partition index {j} appears twice"
                )));
            }
            seen[j] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(ExponentError::InvalidFamily(
                "partition does not cover all blocks".into(),
            ));
        }
        Ok(())
    }
}

/// A (p-vector, q-vector) pair linked by a family's exponent relation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentPoint {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Per-block endpoint data: the open p-interval, the q-window it maps into
/// and the endpoint blow-up exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRange {
    pub p_minus: f64,
    pub p_plus: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    pub kappa: f64,
}

/// The p-dependent factors of the two sides of a bilateral bound, with all
/// multiplicative constants set to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeValue {
    pub lower_shape: f64,
    pub upper_shape: f64,
}

/// A named admissibility violation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RankMismatch { got: usize, want: usize },
    PNotFinite { block: usize },
    PBelowRange { block: usize, p: f64, p_minus: f64 },
    PAboveRange { block: usize, p: f64, p_plus: f64 },
    QBelowOne { block: usize, q: f64 },
    QNotFinite { block: usize },
    PAboveQ { block: usize, p: f64, q: f64 },
    QOutOfImage { block: usize, q: f64 },
    SlowVaryIncompatible { block: usize, lo: f64, hi: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RankMismatch { got, want } => {
                write!(f, "p has length {got}, family has {want} blocks")
            }
            Violation::PNotFinite { block } => {
                write!(f, "block {block}: p must be finite and > 1")
            }
            Violation::PBelowRange { block, p, p_minus } => {
                write!(f, "block {block}: p = {p} <= p_- = {p_minus}")
            }
            Violation::PAboveRange { block, p, p_plus } => {
                write!(f, "block {block}: p = {p} >= p_+ = {p_plus}")
            }
            Violation::QBelowOne { block, q } => {
                write!(f, "block {block}: q = {q} < 1")
            }
            Violation::QNotFinite { block } => {
                write!(f, "block {block}: q is not finite positive")
            }
            Violation::PAboveQ { block, p, q } => {
                write!(f, "block {block}: p = {p} > q = {q}")
            }
            Violation::QOutOfImage { block, q } => {
                write!(f, "block {block}: q = {q} outside the image of the p-range")
            }
            Violation::SlowVaryIncompatible { block, lo, hi } => {
                write!(
                    f,
                    "block {block}: M(z)/L(1/z) ratio bounds ({lo:.3e}, {hi:.3e}) not compatible"
                )
            }
        }
    }
}

/// Outcome of an admissibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
    /// The computed q-vector whenever every block relation evaluates to a
    /// positive reciprocal, even if side conditions fail.
    pub q: Option<Vec<f64>>,
    /// Blocks where p_j = q_j holds within the margin (allowed, flagged).
    pub equality_blocks: Vec<usize>,
}

/// One of the paper's operator families with its per-block parameters.
#[derive(Debug, Clone)]
pub struct OperatorFamily {
    kind: FamilyKind,
    blocks: Vec<BlockParams>,
    partition: Option<Partition>,
    domain_radius: Option<f64>,
    registry: Arc<SlowVaryRegistry>,
    margin: f64,
}

fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

fn recip_or_inf(v: f64) -> f64 {
    if v > 0.0 {
        1.0 / v
    } else {
        f64::INFINITY
    }
}

impl OperatorFamily {
    pub fn new(
        kind: FamilyKind,
        blocks: Vec<BlockParams>,
        partition: Option<Partition>,
        domain_radius: Option<f64>,
    ) -> Result<Self, ExponentError> {
        let family = OperatorFamily {
            kind,
            blocks,
            partition,
            domain_radius,
            registry: Arc::new(SlowVaryRegistry::with_builtins()),
            margin: DEFAULT_ADMISSIBILITY_MARGIN,
        };
        family.validate()?;
        Ok(family)
    }

    pub fn riesz_full(blocks: Vec<BlockParams>) -> Result<Self, ExponentError> {
        Self::new(FamilyKind::RieszFull, blocks, None, None)
    }

    pub fn riesz_interior(blocks: Vec<BlockParams>, radius: f64) -> Result<Self, ExponentError> {
        Self::new(FamilyKind::RieszInterior, blocks, None, Some(radius))
    }

    pub fn riesz_exterior(blocks: Vec<BlockParams>, radius: f64) -> Result<Self, ExponentError> {
        Self::new(FamilyKind::RieszExterior, blocks, None, Some(radius))
    }

    pub fn log_riesz(blocks: Vec<BlockParams>) -> Result<Self, ExponentError> {
        Self::new(FamilyKind::LogRiesz, blocks, None, None)
    }

    pub fn fourier(blocks: Vec<BlockParams>) -> Result<Self, ExponentError> {
        Self::new(FamilyKind::FourierWeighted, blocks, None, None)
    }

    pub fn fourier_slow_vary(blocks: Vec<BlockParams>) -> Result<Self, ExponentError> {
        Self::new(FamilyKind::FourierSlowVary, blocks, None, None)
    }

    pub fn composed(blocks: Vec<BlockParams>, partition: Partition) -> Result<Self, ExponentError> {
        Self::new(FamilyKind::Composed, blocks, Some(partition), None)
    }

    pub fn mixture(blocks: Vec<BlockParams>) -> Result<Self, ExponentError> {
        Self::new(FamilyKind::Mixture, blocks, None, None)
    }

    /// Replace the slowly varying registry (re-validates the referenced ids).
    pub fn with_registry(mut self, registry: SlowVaryRegistry) -> Result<Self, ExponentError> {
        self.registry = Arc::new(registry);
        self.validate()?;
        Ok(self)
    }

    /// Override the admissibility margin.
    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn blocks(&self) -> &[BlockParams] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Total dimension d = sum of block dimensions.
    pub fn dim(&self) -> u32 {
        self.blocks.iter().map(|b| b.m).sum()
    }

    pub fn domain_radius(&self) -> Option<f64> {
        self.domain_radius
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    pub fn registry(&self) -> &SlowVaryRegistry {
        &self.registry
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn block_role(&self, j: usize) -> BlockRole {
        match self.kind {
            FamilyKind::RieszFull => BlockRole::Riesz(RieszDomain::Full),
            FamilyKind::RieszInterior => BlockRole::Riesz(RieszDomain::Interior),
            FamilyKind::RieszExterior => BlockRole::Riesz(RieszDomain::Exterior),
            FamilyKind::LogRiesz => BlockRole::LogRiesz,
            FamilyKind::FourierWeighted | FamilyKind::FourierSlowVary => BlockRole::Fourier,
            FamilyKind::Mixture => BlockRole::Mixture,
            FamilyKind::Composed => {
                let part = self.partition.as_ref().expect("composed has partition");
                if part.riesz.binary_search(&j).is_ok() {
                    BlockRole::Riesz(RieszDomain::Full)
                } else {
                    BlockRole::Fourier
                }
            }
        }
    }

    fn validate(&self) -> Result<(), ExponentError> {
        if self.blocks.is_empty() {
            return Err(ExponentError::InvalidFamily("family needs l >= 1 blocks".into()));
        }
        match self.kind {
            FamilyKind::Composed => {
                let part = self.partition.as_ref().ok_or_else(|| {
                    ExponentError::InvalidFamily("composed family needs a partition".into())
                })?;
                part.validate(self.blocks.len())?;
            }
            _ => {
                if self.partition.is_some() {
                    return Err(ExponentError::InvalidFamily(
                        "partition is only meaningful for the composed family".into(),
                    ));
                }
            }
        }
        match self.kind {
            FamilyKind::RieszInterior | FamilyKind::RieszExterior => {
                let r = self.domain_radius.ok_or_else(|| {
                    ExponentError::InvalidFamily(
                        "interior/exterior family needs a domain radius".into(),
                    )
                })?;
                if !(r.is_finite() && r > 0.0) {
                    return Err(ExponentError::InvalidFamily(format!(
                        "domain radius must be positive and finite, got {r}"
                    )));
                }
            }
            _ => {
                if self.domain_radius.is_some() {
                    return Err(ExponentError::InvalidFamily(
                        "domain radius is only meaningful for interior/exterior families".into(),
                    ));
                }
            }
        }
        for (j, b) in self.blocks.iter().enumerate() {
            self.validate_block(j, b)?;
        }
        Ok(())
    }

    fn validate_block(&self, j: usize, b: &BlockParams) -> Result<(), ExponentError> {
        let fail = |condition: &str| {
            Err(ExponentError::InvalidParam {
                block: j,
                condition: condition.to_string(),
            })
        };
        if b.m == 0 {
            return fail("m >= 1");
        }
        let m = b.md();
        if !(b.alpha.is_finite() && b.beta.is_finite()) {
            return fail("alpha, beta finite");
        }
        match self.block_role(j) {
            BlockRole::Riesz(_) => {
                let gamma = match b.gamma {
                    Some(g) if g.is_finite() => g,
                    _ => return fail("gamma required for Riesz blocks"),
                };
                if b.alpha < 0.0 {
                    return fail("alpha >= 0");
                }
                if b.beta < 0.0 {
                    return fail("beta >= 0");
                }
                if gamma < 0.0 {
                    return fail("gamma >= 0");
                }
                if b.alpha + gamma >= m {
                    return fail("alpha + gamma < m");
                }
                if b.delta.is_some() || b.slow_vary.is_some() {
                    return fail("delta/slow_vary not used by Riesz blocks");
                }
            }
            BlockRole::LogRiesz => {
                if !(b.alpha > 0.0 && b.alpha < m) {
                    return fail("0 < alpha < m");
                }
                match b.delta {
                    Some(d) if d.is_finite() && d > 0.0 => {}
                    _ => return fail("delta > 0 required"),
                }
                if b.beta != 0.0 || b.gamma.is_some() {
                    return fail("beta/gamma not used by log-Riesz blocks");
                }
                match &b.slow_vary {
                    Some(SlowVarySpec::Single(s)) => {
                        self.registry.get(s)?;
                    }
                    _ => return fail("slowly varying S id required"),
                }
            }
            BlockRole::Fourier => {
                if b.alpha < 0.0 {
                    return fail("alpha >= 0");
                }
                if b.beta < 0.0 {
                    return fail("beta >= 0");
                }
                if b.beta >= m {
                    return fail("beta < m");
                }
                if b.gamma.is_some() || b.delta.is_some() {
                    return fail("gamma/delta not used by Fourier blocks");
                }
                match (&b.slow_vary, self.kind) {
                    (Some(SlowVarySpec::Pair { l, m: mm }), FamilyKind::FourierSlowVary) => {
                        self.registry.get(l)?;
                        self.registry.get(mm)?;
                    }
                    (None, FamilyKind::FourierSlowVary) => {
                        return fail("slowly varying (L, M) pair required")
                    }
                    (None, _) => {}
                    (Some(_), _) => return fail("slow_vary not used by this family"),
                }
            }
            BlockRole::Mixture => {
                let gamma = match b.gamma {
                    Some(g) if g.is_finite() => g,
                    _ => return fail("gamma required for mixture blocks"),
                };
                if b.alpha < 0.0 {
                    return fail("alpha >= 0");
                }
                if b.beta < 0.0 {
                    return fail("beta >= 0");
                }
                if b.beta >= m {
                    return fail("beta < m");
                }
                if b.alpha - gamma <= 0.0 {
                    return fail("alpha - gamma > 0");
                }
                if gamma >= m {
                    return fail("gamma < m");
                }
                if b.alpha + b.beta <= gamma {
                    return fail("alpha + beta > gamma");
                }
                if b.delta.is_some() || b.slow_vary.is_some() {
                    return fail("delta/slow_vary not used by mixture blocks");
                }
            }
        }
        Ok(())
    }

    /// Blockwise relation v = 1/q as a function of u = 1/p.
    fn relation_v(&self, j: usize, u: f64) -> f64 {
        let b = &self.blocks[j];
        let m = b.md();
        match self.block_role(j) {
            BlockRole::Riesz(_) => {
                let kappa = (b.alpha + b.beta + b.gamma.unwrap()) / m;
                u + kappa - 1.0
            }
            BlockRole::LogRiesz => u - b.alpha / m,
            BlockRole::Fourier => 1.0 - u - (b.beta - b.alpha) / m,
            BlockRole::Mixture => 1.0 - u - (b.beta + b.gamma.unwrap() - b.alpha) / m,
        }
    }

    /// Whether v is increasing in u for block j.
    fn relation_increasing(&self, j: usize) -> bool {
        matches!(self.block_role(j), BlockRole::Riesz(_) | BlockRole::LogRiesz)
    }

    /// Open admissible p-interval of block j.
    fn p_range(&self, j: usize) -> (f64, f64) {
        let b = &self.blocks[j];
        let m = b.md();
        match self.block_role(j) {
            BlockRole::Riesz(RieszDomain::Full) => {
                (m / (m - b.alpha), m / (m - b.alpha - b.gamma.unwrap()))
            }
            BlockRole::Riesz(RieszDomain::Interior) => {
                (1.0, m / (m - b.alpha - b.gamma.unwrap()))
            }
            BlockRole::Riesz(RieszDomain::Exterior) => (m / (m - b.alpha), f64::INFINITY),
            BlockRole::LogRiesz => (1.0, m / b.alpha),
            BlockRole::Fourier => (m / (m - b.beta), f64::INFINITY),
            BlockRole::Mixture => (m / (m - b.beta), f64::INFINITY),
        }
    }

    /// Per-block endpoint report.
    pub fn endpoints(&self) -> Vec<BlockRange> {
        (0..self.len())
            .map(|j| {
                let b = &self.blocks[j];
                let m = b.md();
                let (p_minus, p_plus) = self.p_range(j);
                match self.block_role(j) {
                    BlockRole::Riesz(domain) => {
                        let gamma = b.gamma.unwrap();
                        let kappa = (b.alpha + b.beta + gamma) / m;
                        let (q_minus, q_plus) = match domain {
                            RieszDomain::Full => {
                                (recip_or_inf((b.beta + gamma) / m), recip_or_inf(b.beta / m))
                            }
                            RieszDomain::Interior => {
                                (recip_or_inf(kappa), recip_or_inf(b.beta / m))
                            }
                            RieszDomain::Exterior => {
                                (recip_or_inf((b.beta + gamma) / m), recip_or_inf(kappa - 1.0))
                            }
                        };
                        BlockRange {
                            p_minus,
                            p_plus,
                            q_minus,
                            q_plus,
                            kappa,
                        }
                    }
                    BlockRole::LogRiesz => BlockRange {
                        p_minus,
                        p_plus,
                        q_minus: m / (m - b.alpha),
                        q_plus: f64::INFINITY,
                        kappa: 1.0 + b.delta.unwrap() - b.alpha / m,
                    },
                    BlockRole::Fourier => BlockRange {
                        p_minus,
                        p_plus,
                        q_minus: 1.0,
                        q_plus: recip_or_inf(b.alpha / m),
                        kappa: (b.alpha + b.beta) / m,
                    },
                    BlockRole::Mixture => BlockRange {
                        p_minus,
                        p_plus,
                        q_minus: 1.0,
                        q_plus: m / (b.alpha - b.gamma.unwrap()),
                        kappa: (b.alpha + b.beta - b.gamma.unwrap()) / m,
                    },
                }
            })
            .collect()
    }

    /// Full admissibility diagnostics for a p-vector.
    pub fn admissible(&self, p: &[f64]) -> AdmissibilityReport {
        let mut violations = Vec::new();
        let mut equality_blocks = Vec::new();
        if p.len() != self.len() {
            return AdmissibilityReport {
                pass: false,
                violations: vec![Violation::RankMismatch {
                    got: p.len(),
                    want: self.len(),
                }],
                q: None,
                equality_blocks,
            };
        }
        let eps = self.margin;
        let mut q = Vec::with_capacity(p.len());
        let mut q_ok = true;
        for (j, &pj) in p.iter().enumerate() {
            if !pj.is_finite() || pj <= 1.0 {
                violations.push(Violation::PNotFinite { block: j });
                q_ok = false;
                continue;
            }
            let (lo, hi) = self.p_range(j);
            if pj <= lo + eps * lo.max(1.0) {
                violations.push(Violation::PBelowRange {
                    block: j,
                    p: pj,
                    p_minus: lo,
                });
            }
            if hi.is_finite() && pj >= hi - eps * hi.max(1.0) {
                violations.push(Violation::PAboveRange {
                    block: j,
                    p: pj,
                    p_plus: hi,
                });
            }
            let u = inv(pj);
            let v = self.relation_v(j, u);
            if v <= eps {
                violations.push(Violation::QNotFinite { block: j });
                q_ok = false;
                continue;
            }
            let qj = 1.0 / v;
            q.push(qj);
            if v > 1.0 + eps {
                violations.push(Violation::QBelowOne { block: j, q: qj });
            }
            // p <= q is a side condition only where the family requires it
            if matches!(self.block_role(j), BlockRole::Fourier | BlockRole::Mixture) {
                if v > u + eps {
                    violations.push(Violation::PAboveQ {
                        block: j,
                        p: pj,
                        q: qj,
                    });
                } else if (v - u).abs() <= eps {
                    equality_blocks.push(j);
                }
            }
            if self.kind == FamilyKind::FourierSlowVary {
                if let Some(SlowVarySpec::Pair { l, m }) = &self.blocks[j].slow_vary {
                    // ids were validated at construction
                    let bounds = self.registry.compatibility(l, m).expect("registered ids");
                    if !bounds.compatible {
                        violations.push(Violation::SlowVaryIncompatible {
                            block: j,
                            lo: bounds.lo,
                            hi: bounds.hi,
                        });
                    }
                }
            }
        }
        AdmissibilityReport {
            pass: violations.is_empty(),
            violations,
            q: if q_ok && q.len() == p.len() { Some(q) } else { None },
            equality_blocks,
        }
    }

    /// The unique q-vector solving the family's blockwise exponent relation.
    pub fn q_of_p(&self, p: &[f64]) -> Result<Vec<f64>, ExponentError> {
        let report = self.admissible(p);
        if !report.pass {
            return Err(ExponentError::InadmissibleP(report.violations));
        }
        Ok(report.q.expect("admissible point has a q-vector"))
    }

    /// Joint (p, q) point.
    pub fn exponent_point(&self, p: &[f64]) -> Result<ExponentPoint, ExponentError> {
        let q = self.q_of_p(p)?;
        Ok(ExponentPoint { p: p.to_vec(), q })
    }

    /// Inverse map p(q), solved per block by bisection on the monotone
    /// relation in reciprocal coordinates.
    pub fn p_of_q(&self, q: &[f64]) -> Result<Vec<f64>, ExponentError> {
        if q.len() != self.len() {
            return Err(ExponentError::InadmissibleP(vec![Violation::RankMismatch {
                got: q.len(),
                want: self.len(),
            }]));
        }
        let mut p = Vec::with_capacity(q.len());
        for (j, &qj) in q.iter().enumerate() {
            if !(qj > 0.0) || qj.is_nan() {
                return Err(ExponentError::InadmissibleP(vec![Violation::QOutOfImage {
                    block: j,
                    q: qj,
                }]));
            }
            let target = inv(qj);
            let (p_lo, p_hi) = self.p_range(j);
            // u decreases as p increases; clamp to the closed reciprocal hull
            let mut u_lo = inv(p_hi);
            let mut u_hi = inv(p_lo.max(1.0));
            let increasing = self.relation_increasing(j);
            let v_at = |u: f64| self.relation_v(j, u);
            let (v_lo, v_hi) = (v_at(u_lo), v_at(u_hi));
            let (vmin, vmax) = if increasing { (v_lo, v_hi) } else { (v_hi, v_lo) };
            if target < vmin - 1e-12 || target > vmax + 1e-12 {
                return Err(ExponentError::InadmissibleP(vec![Violation::QOutOfImage {
                    block: j,
                    q: qj,
                }]));
            }
            for _ in 0..200 {
                let mid = 0.5 * (u_lo + u_hi);
                let v = v_at(mid);
                let go_up = if increasing { v < target } else { v > target };
                if go_up {
                    u_lo = mid;
                } else {
                    u_hi = mid;
                }
                if u_hi - u_lo < 1e-17 {
                    break;
                }
            }
            let u = 0.5 * (u_lo + u_hi);
            p.push(recip_or_inf(u));
        }
        Ok(p)
    }

    /// Envelope shape factors at p with all constants set to one.
    pub fn envelope(&self, p: &[f64]) -> Result<EnvelopeValue, ExponentError> {
        let report = self.admissible(p);
        if !report.pass {
            return Err(ExponentError::InadmissibleP(report.violations));
        }
        let mut lower = 1.0f64;
        let mut upper = 1.0f64;
        for (j, &pj) in p.iter().enumerate() {
            let b = &self.blocks[j];
            let m = b.md();
            let (p_minus, p_plus) = self.p_range(j);
            match self.block_role(j) {
                BlockRole::Riesz(domain) => {
                    let kappa = (b.alpha + b.beta + b.gamma.unwrap()) / m;
                    let base = match domain {
                        RieszDomain::Full => (p_plus - pj) * (pj - p_minus),
                        RieszDomain::Interior => p_plus - pj,
                        RieszDomain::Exterior => pj - p_minus,
                    };
                    let s = base.powf(-kappa);
                    lower *= s;
                    upper *= s;
                }
                BlockRole::LogRiesz => {
                    let rate = 1.0 + b.delta.unwrap() - b.alpha / m;
                    let s = ((pj - 1.0) * (m / b.alpha - pj)).powf(-rate);
                    lower *= s;
                    upper *= s;
                }
                BlockRole::Fourier => {
                    let e = (b.alpha + b.beta) / m;
                    let base = pj / (pj - p_minus);
                    lower *= base.powf(e);
                    upper *= base.powf(e.max(1.0));
                }
                BlockRole::Mixture => {
                    let e = (b.alpha + b.beta - b.gamma.unwrap()) / m;
                    let base = pj / (pj - p_minus);
                    lower *= base.powf(e);
                    upper *= base.powf(e.max(1.0));
                }
            }
        }
        Ok(EnvelopeValue {
            lower_shape: lower,
            upper_shape: upper,
        })
    }
}
