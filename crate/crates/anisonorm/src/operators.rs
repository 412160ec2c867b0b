//! Numeric evaluation of the weighted integral operators on tensor grids.
//!
//! All blocks are one-dimensional (m_j = 1); the multi-dimensional operators
//! are tensor products of block operators applied axis by axis, last axis
//! first. Sources are piecewise-linear interpolants of the sampled input;
//! integrals are evaluated by the singularity-split panel quadrature in
//! [`crate::quad`].
//!
//! Cost model: a single block application at one output point is
//! O(n_src) Gauss panels; a tensor pass along axis j costs
//! O(prod(n_k) * n_out_j) block applications and materializes one
//! intermediate grid per pass (l passes total).

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{GridError, OperatorError};
use crate::exponent::{BlockRole, FamilyKind, OperatorFamily, RieszDomain, SlowVarySpec};
use crate::grid::{Axis, GridFunction, Values};
use crate::quad::{LineIntegral, LineInterp, PanelValue, Sing, SingKernel};
use crate::slowvary::SlowVaryFn;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Quadrature controls shared by all block applications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePlan {
    /// Target relative tolerance per block application; drives the
    /// truncation tripwire and is reported alongside estimates.
    pub target_tol: f64,
    /// Geometric refinement depth toward singular points.
    pub levels: u32,
}

impl Default for QuadraturePlan {
    fn default() -> Self {
        QuadraturePlan {
            target_tol: 1e-7,
            levels: 16,
        }
    }
}

/// Integration domain of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockDomain {
    FullLine,
    /// {|y| < r}
    Interior(f64),
    /// {|y| > r}
    Exterior(f64),
}

impl BlockDomain {
    /// Intersection with the source hull, as up to two intervals.
    fn intervals(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        match *self {
            BlockDomain::FullLine => vec![(lo, hi)],
            BlockDomain::Interior(r) => {
                let (a, b) = (lo.max(-r), hi.min(r));
                if a < b {
                    vec![(a, b)]
                } else {
                    vec![]
                }
            }
            BlockDomain::Exterior(r) => {
                let mut out = Vec::new();
                if lo < -r {
                    out.push((lo, hi.min(-r)));
                }
                if hi > r {
                    out.push((lo.max(r), hi));
                }
                out.retain(|(a, b)| a < b);
                out
            }
        }
    }

    fn contains(&self, x: f64) -> bool {
        match *self {
            BlockDomain::FullLine => true,
            BlockDomain::Interior(r) => x.abs() < r,
            BlockDomain::Exterior(r) => x.abs() > r,
        }
    }
}

/// One-block operator kind with its weight parameters.
#[derive(Clone)]
pub enum BlockOp {
    /// |x|^{-beta} int f(y) |y|^{-alpha} |x-y|^{-gamma} dy
    Riesz { alpha: f64, beta: f64, gamma: f64 },
    /// int f(y) |x-y|^{alpha-1} |ln|x-y||^delta S(|ln|x-y||) dy
    LogRiesz {
        alpha: f64,
        delta: f64,
        slow_vary: SlowVaryFn,
    },
    /// (2 pi)^{-1/2} |x|^{-alpha} int f(y) |y|^{-beta} e^{ixy} dy
    Fourier { alpha: f64, beta: f64 },
}

impl std::fmt::Debug for BlockOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockOp::Riesz { alpha, beta, gamma } => f
                .debug_struct("Riesz")
                .field("alpha", alpha)
                .field("beta", beta)
                .field("gamma", gamma)
                .finish(),
            BlockOp::LogRiesz { alpha, delta, .. } => f
                .debug_struct("LogRiesz")
                .field("alpha", alpha)
                .field("delta", delta)
                .finish(),
            BlockOp::Fourier { alpha, beta } => f
                .debug_struct("Fourier")
                .field("alpha", alpha)
                .field("beta", beta)
                .finish(),
        }
    }
}

/// A single-block operator: kind, integration domain and quadrature plan.
#[derive(Debug, Clone)]
pub struct BlockOperatorSpec {
    pub op: BlockOp,
    pub domain: BlockDomain,
    pub plan: QuadraturePlan,
}

impl BlockOperatorSpec {
    pub fn new(op: BlockOp, domain: BlockDomain, plan: QuadraturePlan) -> Result<Self, OperatorError> {
        let cond = match &op {
            BlockOp::Riesz { alpha, beta, gamma } => {
                !(*alpha >= 0.0 && *beta >= 0.0 && *gamma >= 0.0 && alpha + gamma < 1.0)
            }
            BlockOp::LogRiesz { alpha, delta, .. } => {
                !(*alpha > 0.0 && *alpha < 1.0 && *delta > 0.0)
            }
            BlockOp::Fourier { alpha, beta } => !(*alpha >= 0.0 && *beta >= 0.0 && *beta < 1.0),
        };
        if cond {
            return Err(OperatorError::UnsupportedFamily(
                "block parameters outside the absolutely convergent range".into(),
            ));
        }
        if let BlockDomain::Interior(r) | BlockDomain::Exterior(r) = domain {
            if !(r.is_finite() && r > 0.0) {
                return Err(OperatorError::UnsupportedFamily(
                    "domain radius must be positive".into(),
                ));
            }
        }
        Ok(BlockOperatorSpec { op, domain, plan })
    }
}

/// Tripwire for inputs that have not decayed inside the truncation radius.
fn truncation_check(line_mag: &[f64], tol: f64) -> Result<(), OperatorError> {
    let max = line_mag.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(());
    }
    let edge = line_mag[0].max(*line_mag.last().unwrap());
    if edge > tol * max {
        return Err(OperatorError::TruncationWarning {
            estimate: edge / max,
            tolerance: tol,
        });
    }
    Ok(())
}

fn breaks_for(interval: (f64, f64), axis: &[f64], sing_positions: &[f64]) -> Vec<f64> {
    let (a, b) = interval;
    let mut breaks = Vec::with_capacity(axis.len() + sing_positions.len() + 2);
    breaks.push(a);
    for &t in axis {
        if t > a && t < b {
            breaks.push(t);
        }
    }
    for &s in sing_positions {
        if s > a && s < b {
            breaks.push(s);
        }
    }
    breaks.push(b);
    breaks.sort_by(|x, y| x.partial_cmp(y).expect("finite breaks"));
    breaks.dedup();
    breaks
}

fn riesz_line<T: PanelValue>(
    axis: &[f64],
    line: &[T],
    alpha: f64,
    gamma: f64,
    domain: BlockDomain,
    x: f64,
    levels: u32,
) -> T {
    let interp = LineInterp::new(axis, line);
    let wy = move |y: f64| if alpha > 0.0 { y.abs().powf(-alpha) } else { 1.0 };
    let kx = move |y: f64| {
        if gamma > 0.0 {
            (x - y).abs().powf(-gamma)
        } else {
            1.0
        }
    };
    let mut sings: Vec<Sing<'_, T>> = Vec::new();
    let mut positions = Vec::new();
    if alpha > 0.0 && gamma > 0.0 && x == 0.0 {
        // weight and kernel singularities coincide
        sings.push(Sing {
            pos: 0.0,
            kernel: SingKernel::Power { e: alpha + gamma },
            g_far: Box::new(move |y| interp.eval(y)),
        });
        positions.push(0.0);
    } else {
        if alpha > 0.0 {
            sings.push(Sing {
                pos: 0.0,
                kernel: SingKernel::Power { e: alpha },
                g_far: Box::new(move |y| {
                    let v = interp.eval(y);
                    if v.is_zero() {
                        v
                    } else {
                        v.scale(kx(y))
                    }
                }),
            });
            positions.push(0.0);
        }
        if gamma > 0.0 {
            sings.push(Sing {
                pos: x,
                kernel: SingKernel::Power { e: gamma },
                g_far: Box::new(move |y| {
                    let v = interp.eval(y);
                    if v.is_zero() {
                        v
                    } else {
                        v.scale(wy(y))
                    }
                }),
            });
            positions.push(x);
        }
    }
    let integral = LineIntegral {
        full: Box::new(move |y| {
            let v = interp.eval(y);
            if v.is_zero() {
                v
            } else {
                v.scale(wy(y) * kx(y))
            }
        }),
        sings,
        levels,
    };
    let (lo, hi) = (axis[0], *axis.last().unwrap());
    let mut acc = T::zero();
    for iv in domain.intervals(lo, hi) {
        acc = acc + integral.run(&breaks_for(iv, axis, &positions));
    }
    acc
}

fn log_riesz_line<T: PanelValue>(
    axis: &[f64],
    line: &[T],
    alpha: f64,
    delta: f64,
    s: &SlowVaryFn,
    domain: BlockDomain,
    x: f64,
    levels: u32,
) -> T {
    let interp = LineInterp::new(axis, line);
    let kernel = SingKernel::PowerLog {
        alpha,
        delta,
        s: s.clone(),
    };
    let k_eval = kernel.clone();
    let full = move |y: f64| {
        let v = interp.eval(y);
        if v.is_zero() {
            v
        } else {
            v.scale(k_eval.eval((x - y).abs()))
        }
    };
    // kernel cusp where |ln|x-y|| vanishes
    let full_l = full.clone();
    let full_r = full.clone();
    let sings: Vec<Sing<'_, T>> = vec![
        Sing {
            pos: x,
            kernel,
            g_far: Box::new(move |y| interp.eval(y)),
        },
        Sing {
            pos: x - 1.0,
            kernel: SingKernel::Cusp,
            g_far: Box::new(full_l),
        },
        Sing {
            pos: x + 1.0,
            kernel: SingKernel::Cusp,
            g_far: Box::new(full_r),
        },
    ];
    let positions = [x, x - 1.0, x + 1.0];
    let integral = LineIntegral {
        full: Box::new(full),
        sings,
        levels,
    };
    let (lo, hi) = (axis[0], *axis.last().unwrap());
    let mut acc = T::zero();
    for iv in domain.intervals(lo, hi) {
        acc = acc + integral.run(&breaks_for(iv, axis, &positions));
    }
    acc
}

fn fourier_line(
    axis: &[f64],
    line: &[Complex64],
    beta: f64,
    domain: BlockDomain,
    x: f64,
    levels: u32,
) -> Complex64 {
    let interp = LineInterp::new(axis, line);
    let wy = move |y: f64| if beta > 0.0 { y.abs().powf(-beta) } else { 1.0 };
    let phase = move |y: f64| Complex64::from_polar(1.0, x * y);
    let mut sings: Vec<Sing<'_, Complex64>> = Vec::new();
    let mut positions = Vec::new();
    if beta > 0.0 {
        sings.push(Sing {
            pos: 0.0,
            kernel: SingKernel::Power { e: beta },
            g_far: Box::new(move |y| {
                let v = interp.eval(y);
                if v.is_zero() {
                    v
                } else {
                    v * phase(y)
                }
            }),
        });
        positions.push(0.0);
    }
    let integral = LineIntegral {
        full: Box::new(move |y| {
            let v = interp.eval(y);
            if v.is_zero() {
                v
            } else {
                v * phase(y) * wy(y)
            }
        }),
        sings,
        levels,
    };
    let (lo, hi) = (axis[0], *axis.last().unwrap());
    let mut acc = Complex64::new(0.0, 0.0);
    for iv in domain.intervals(lo, hi) {
        acc += integral.run(&breaks_for(iv, axis, &positions));
    }
    acc
}

fn expect_line(f: &GridFunction) -> Result<(&[f64], &[f64]), OperatorError> {
    match f.line_real() {
        Some(line) => Ok((f.axes()[0].points(), line)),
        None => Err(OperatorError::Grid(GridError::RankMismatch {
            got: f.rank(),
            want: 1,
        })),
    }
}

/// Weighted Riesz potential of a sampled line at one output point.
pub fn apply_riesz_block(
    spec: &BlockOperatorSpec,
    f: &GridFunction,
    x: f64,
) -> Result<f64, OperatorError> {
    let BlockOp::Riesz { alpha, beta, gamma } = spec.op else {
        return Err(OperatorError::UnsupportedFamily(
            "spec is not a Riesz block".into(),
        ));
    };
    let (axis, line) = expect_line(f)?;
    if x == 0.0 && beta > 0.0 {
        return Err(OperatorError::SingularOutputPoint { exponent: beta });
    }
    truncation_check(
        &line.iter().map(|v| v.abs()).collect::<Vec<_>>(),
        spec.plan.target_tol,
    )?;
    let raw = riesz_line(axis, line, alpha, gamma, spec.domain, x, spec.plan.levels);
    let weight = if beta > 0.0 { x.abs().powf(-beta) } else { 1.0 };
    Ok(weight * raw)
}

/// Log-weighted Riesz potential of a sampled line at one output point.
pub fn apply_log_riesz_block(
    spec: &BlockOperatorSpec,
    f: &GridFunction,
    x: f64,
) -> Result<f64, OperatorError> {
    let BlockOp::LogRiesz {
        alpha,
        delta,
        ref slow_vary,
    } = spec.op
    else {
        return Err(OperatorError::UnsupportedFamily(
            "spec is not a log-Riesz block".into(),
        ));
    };
    let (axis, line) = expect_line(f)?;
    truncation_check(
        &line.iter().map(|v| v.abs()).collect::<Vec<_>>(),
        spec.plan.target_tol,
    )?;
    Ok(log_riesz_line(
        axis,
        line,
        alpha,
        delta,
        slow_vary,
        spec.domain,
        x,
        spec.plan.levels,
    ))
}

/// Resolvable frequency band of a sampled line: pi / (2 h) where h is the
/// largest cell width carrying non-negligible samples.
pub fn frequency_band(axis: &[f64], line_mag: &[f64]) -> f64 {
    let max = line_mag.iter().cloned().fold(0.0, f64::max);
    let thresh = 1e-13 * max;
    let mut h_eff = 0.0f64;
    for i in 0..axis.len() - 1 {
        if line_mag[i] > thresh || line_mag[i + 1] > thresh {
            h_eff = h_eff.max(axis[i + 1] - axis[i]);
        }
    }
    if h_eff == 0.0 {
        f64::INFINITY
    } else {
        std::f64::consts::PI / (2.0 * h_eff)
    }
}

/// Double-weight Fourier transform of a sampled line at one frequency.
pub fn apply_fourier_block(
    spec: &BlockOperatorSpec,
    f: &GridFunction,
    x: f64,
) -> Result<Complex64, OperatorError> {
    let BlockOp::Fourier { alpha, beta } = spec.op else {
        return Err(OperatorError::UnsupportedFamily(
            "spec is not a Fourier block".into(),
        ));
    };
    if f.rank() != 1 {
        return Err(OperatorError::Grid(GridError::RankMismatch {
            got: f.rank(),
            want: 1,
        }));
    }
    if x == 0.0 && alpha > 0.0 {
        return Err(OperatorError::SingularOutputPoint { exponent: alpha });
    }
    let axis = f.axes()[0].points();
    let line: Vec<Complex64> = match f.values() {
        Values::Real(a) => a.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        Values::Complex(a) => a.iter().cloned().collect(),
    };
    let mags: Vec<f64> = line.iter().map(|z| z.norm()).collect();
    truncation_check(&mags, spec.plan.target_tol)?;
    let band = frequency_band(axis, &mags);
    if x.abs() > band {
        return Err(OperatorError::FrequencyOutOfBand { x: x.abs(), band });
    }
    let raw = fourier_line(axis, &line, beta, spec.domain, x, spec.plan.levels);
    let weight = if alpha > 0.0 { x.abs().powf(-alpha) } else { 1.0 };
    Ok(raw * (INV_SQRT_2PI * weight))
}

enum LineKind {
    Riesz { alpha: f64, beta: f64, gamma: f64 },
    LogRiesz { alpha: f64, delta: f64, s: SlowVaryFn },
    Fourier { alpha: f64, beta: f64 },
}

fn block_line_kind(family: &OperatorFamily, j: usize) -> Result<LineKind, OperatorError> {
    let b = &family.blocks()[j];
    match family.block_role(j) {
        BlockRole::Riesz(_) => Ok(LineKind::Riesz {
            alpha: b.alpha,
            beta: b.beta,
            gamma: b.gamma.unwrap(),
        }),
        BlockRole::LogRiesz => {
            let Some(SlowVarySpec::Single(id)) = &b.slow_vary else {
                return Err(OperatorError::UnsupportedFamily(
                    "log-Riesz block without a registered S".into(),
                ));
            };
            Ok(LineKind::LogRiesz {
                alpha: b.alpha,
                delta: b.delta.unwrap(),
                s: family.registry().get(id)?.clone(),
            })
        }
        BlockRole::Fourier => Ok(LineKind::Fourier {
            alpha: b.alpha,
            beta: b.beta,
        }),
        BlockRole::Mixture => Err(OperatorError::UnsupportedFamily(
            FamilyKind::Mixture.as_str().into(),
        )),
    }
}

fn block_domain(family: &OperatorFamily, j: usize) -> BlockDomain {
    match family.block_role(j) {
        BlockRole::Riesz(RieszDomain::Interior) => {
            BlockDomain::Interior(family.domain_radius().unwrap())
        }
        BlockRole::Riesz(RieszDomain::Exterior) => {
            BlockDomain::Exterior(family.domain_radius().unwrap())
        }
        _ => BlockDomain::FullLine,
    }
}

/// Output nodes for one block pass: source nodes inside the block's domain
/// window, minus the origin when the output weight is singular there, and
/// inside the resolvable band for Fourier blocks.
fn output_axis_for(
    kind: &LineKind,
    domain: &BlockDomain,
    axis: &[f64],
    band: f64,
) -> Result<Vec<f64>, OperatorError> {
    let puncture = match kind {
        LineKind::Riesz { beta, .. } => *beta > 0.0,
        LineKind::Fourier { alpha, .. } => *alpha > 0.0,
        LineKind::LogRiesz { .. } => false,
    };
    let out: Vec<f64> = axis
        .iter()
        .copied()
        .filter(|&x| domain.contains(x))
        .filter(|&x| !(puncture && x == 0.0))
        .filter(|&x| match kind {
            LineKind::Fourier { .. } => x.abs() <= band,
            _ => true,
        })
        .collect();
    if out.len() < 2 {
        return Err(OperatorError::Grid(GridError::BadAxis(0)));
    }
    Ok(out)
}

fn apply_rows<T: PanelValue>(
    rows: &[T],
    n_in: usize,
    out_axis: &[f64],
    eval: impl Fn(&[T], f64) -> T + Sync,
) -> Result<Vec<T>, OperatorError> {
    let n_rows = rows.len() / n_in;
    let n_out = out_axis.len();
    // parallelize over every (row, output node) pair so a single line still
    // saturates the pool
    let flat: Vec<T> = (0..n_rows * n_out)
        .into_par_iter()
        .map(|idx| {
            let row = &rows[(idx / n_out) * n_in..(idx / n_out + 1) * n_in];
            eval(row, out_axis[idx % n_out])
        })
        .collect();
    if flat.iter().any(|v| !v.finite()) {
        return Err(OperatorError::Grid(GridError::NonFiniteResult));
    }
    Ok(flat)
}

fn permute_to_last<T: Clone>(a: &ArrayD<T>, j: usize) -> (ArrayD<T>, Vec<usize>) {
    let rank = a.ndim();
    let order: Vec<usize> = (0..rank).filter(|&k| k != j).chain(std::iter::once(j)).collect();
    let moved = a.view().permuted_axes(order.clone());
    (moved.as_standard_layout().into_owned(), order)
}

fn permute_back<T: Clone>(a: ArrayD<T>, order: &[usize]) -> ArrayD<T> {
    let mut inverse = vec![0usize; order.len()];
    for (k, &o) in order.iter().enumerate() {
        inverse[o] = k;
    }
    a.permuted_axes(inverse).as_standard_layout().into_owned()
}

/// Apply the family's block operators along every axis, innermost (last)
/// axis first, returning the transformed function on the filtered output
/// axes. Families without a numeric route (mixture, slowly-varying-weight
/// Fourier) are rejected.
pub fn apply_tensor_operator(
    family: &OperatorFamily,
    f: &GridFunction,
    plan: &QuadraturePlan,
) -> Result<GridFunction, OperatorError> {
    match family.kind() {
        FamilyKind::Mixture | FamilyKind::FourierSlowVary => {
            return Err(OperatorError::UnsupportedFamily(
                family.kind().as_str().into(),
            ));
        }
        _ => {}
    }
    for (j, b) in family.blocks().iter().enumerate() {
        if b.m != 1 {
            return Err(OperatorError::BlockDimension { block: j, m: b.m });
        }
    }
    if f.rank() != family.len() {
        return Err(OperatorError::Grid(GridError::RankMismatch {
            got: f.rank(),
            want: family.len(),
        }));
    }
    let levels = plan.levels;
    let mut axes: Vec<Axis> = f.axes().to_vec();
    let mut values: Values = f.values().clone();
    // the x_l integral is innermost: apply block l first
    for j in (0..family.len()).rev() {
        let kind = block_line_kind(family, j)?;
        let domain = block_domain(family, j);
        let src_axis = axes[j].clone();
        let src = src_axis.points();

        // promote to complex ahead of a Fourier pass
        if matches!(kind, LineKind::Fourier { .. }) {
            if let Values::Real(a) = &values {
                values = Values::Complex(a.mapv(|v| Complex64::new(v, 0.0)));
            }
        }

        let band = match (&kind, &values) {
            (LineKind::Fourier { .. }, Values::Complex(a)) => {
                let (moved, _) = permute_to_last(a, j);
                let mags: Vec<f64> = moved.iter().map(|z| z.norm()).collect();
                let n_in = src.len();
                let mut band = f64::INFINITY;
                for r in 0..mags.len() / n_in {
                    band = band.min(frequency_band(src, &mags[r * n_in..(r + 1) * n_in]));
                }
                band
            }
            _ => f64::INFINITY,
        };
        let out_axis = output_axis_for(&kind, &domain, src, band)?;

        values = match values {
            Values::Real(a) => {
                let (moved, order) = permute_to_last(&a, j);
                let flat = moved.as_slice().expect("standard layout");
                let out_flat = match &kind {
                    LineKind::Riesz { alpha, beta, gamma } => {
                        let (alpha, beta, gamma) = (*alpha, *beta, *gamma);
                        apply_rows(flat, src.len(), &out_axis, |row, x| {
                            let w = if beta > 0.0 { x.abs().powf(-beta) } else { 1.0 };
                            riesz_line(src, row, alpha, gamma, domain, x, levels) * w
                        })?
                    }
                    LineKind::LogRiesz { alpha, delta, s } => {
                        let (alpha, delta) = (*alpha, *delta);
                        apply_rows(flat, src.len(), &out_axis, |row, x| {
                            log_riesz_line(src, row, alpha, delta, s, domain, x, levels)
                        })?
                    }
                    LineKind::Fourier { .. } => unreachable!("promoted to complex"),
                };
                let mut shape: Vec<usize> = moved.shape().to_vec();
                *shape.last_mut().unwrap() = out_axis.len();
                let arr = ArrayD::from_shape_vec(IxDyn(&shape), out_flat)
                    .expect("row-major assembly");
                Values::Real(permute_back(arr, &order))
            }
            Values::Complex(a) => {
                let (moved, order) = permute_to_last(&a, j);
                let flat = moved.as_slice().expect("standard layout");
                let out_flat = match &kind {
                    LineKind::Riesz { alpha, beta, gamma } => {
                        let (alpha, beta, gamma) = (*alpha, *beta, *gamma);
                        apply_rows(flat, src.len(), &out_axis, |row, x| {
                            let w = if beta > 0.0 { x.abs().powf(-beta) } else { 1.0 };
                            riesz_line(src, row, alpha, gamma, domain, x, levels).scale(w)
                        })?
                    }
                    LineKind::LogRiesz { alpha, delta, s } => {
                        let (alpha, delta) = (*alpha, *delta);
                        apply_rows(flat, src.len(), &out_axis, |row, x| {
                            log_riesz_line(src, row, alpha, delta, s, domain, x, levels)
                        })?
                    }
                    LineKind::Fourier { alpha, beta } => {
                        let (alpha, beta) = (*alpha, *beta);
                        apply_rows(flat, src.len(), &out_axis, |row, x| {
                            let w = if alpha > 0.0 { x.abs().powf(-alpha) } else { 1.0 };
                            fourier_line(src, row, beta, domain, x, levels)
                                .scale(INV_SQRT_2PI * w)
                        })?
                    }
                };
                let mut shape: Vec<usize> = moved.shape().to_vec();
                *shape.last_mut().unwrap() = out_axis.len();
                let arr = ArrayD::from_shape_vec(IxDyn(&shape), out_flat)
                    .expect("row-major assembly");
                Values::Complex(permute_back(arr, &order))
            }
        };
        axes[j] = Axis::new(out_axis).map_err(OperatorError::Grid)?;
    }
    GridFunction::new(axes, values).map_err(OperatorError::Grid)
}
