//! Psi functions, exponent grids, and Grand Lebesgue norms.
//!
//! ||f||_{G psi} is the sup over the support box Q0 of |f|_p / psi(p). The
//! sup over an open set cannot be evaluated exactly; it is taken as a max
//! over a finite exponent grid, log-spaced toward the support boundary. The
//! spike psi of radius r short-circuits to the plain mixed norm at r.

use std::fmt;
use std::sync::Arc;

use ndarray::{ArrayD, Axis as NdAxis, IxDyn};

use crate::error::GridError;
use crate::grid::{mixed_norm, GridFunction};

type PsiEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Finite per-axis sampling of exponent vectors inside a support box.
#[derive(Debug, Clone, PartialEq)]
pub struct PGrid {
    axes: Vec<Vec<f64>>,
}

impl PGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self, GridError> {
        if axes.is_empty() || axes.iter().any(|a| a.is_empty()) {
            return Err(GridError::EmptyGrid);
        }
        for a in &axes {
            if a.windows(2).any(|w| !(w[0] < w[1])) || a.iter().any(|v| !v.is_finite()) {
                return Err(GridError::BadAxis(0));
            }
        }
        Ok(PGrid { axes })
    }

    /// Per-axis points on the open intervals, clustered geometrically toward
    /// both endpoints starting at `offset` from each.
    pub fn log_spaced(
        ranges: &[(f64, f64)],
        per_axis: usize,
        offset: f64,
    ) -> Result<Self, GridError> {
        if ranges.is_empty() || per_axis < 2 {
            return Err(GridError::EmptyGrid);
        }
        let mut axes = Vec::with_capacity(ranges.len());
        for &(a, b) in ranges {
            if !(a.is_finite() && b.is_finite() && a < b) || !(offset > 0.0) {
                return Err(GridError::BadAxis(0));
            }
            let gap = b - a;
            let eps = offset.min(0.25 * gap);
            let half = gap / 2.0;
            let side = per_axis.div_ceil(2);
            let mut pts = Vec::with_capacity(2 * side);
            // geometric ladders from each endpoint toward the middle
            for k in 0..side {
                let t = if side == 1 {
                    1.0
                } else {
                    (half / eps).powf(k as f64 / (side - 1) as f64)
                };
                pts.push(a + eps * t);
                pts.push(b - eps * t);
            }
            pts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
            pts.dedup();
            axes.push(pts);
        }
        PGrid::new(axes)
    }

    /// Superset refinement: inserts the midpoint of every consecutive pair.
    pub fn refine(&self) -> PGrid {
        let axes = self
            .axes
            .iter()
            .map(|a| {
                let mut out = Vec::with_capacity(2 * a.len() - 1);
                for i in 0..a.len() - 1 {
                    out.push(a[i]);
                    out.push(0.5 * (a[i] + a[i + 1]));
                }
                out.push(*a.last().unwrap());
                out
            })
            .collect();
        PGrid { axes }
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All exponent vectors in row-major order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; self.axes.len()];
        loop {
            out.push(
                idx.iter()
                    .enumerate()
                    .map(|(j, &i)| self.axes[j][i])
                    .collect(),
            );
            let mut j = self.axes.len();
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < self.axes[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

/// Log-log multilinear table of psi values on a PGrid.
#[derive(Clone)]
pub struct PsiTable {
    axes: Vec<Vec<f64>>,
    values: ArrayD<f64>,
}

impl PsiTable {
    fn locate(axis: &[f64], p: f64) -> Option<(usize, f64)> {
        if p < axis[0] || p > *axis.last().unwrap() {
            return None;
        }
        // exact node hits stay exact
        if let Some(i) = axis.iter().position(|&a| a == p) {
            return Some((i.min(axis.len() - 2), if i == axis.len() - 1 { 1.0 } else { 0.0 }));
        }
        let i = axis.partition_point(|&a| a < p) - 1;
        let (a, b) = (axis[i], axis[i + 1]);
        let t = (p.ln() - a.ln()) / (b.ln() - a.ln());
        Some((i, t))
    }

    fn eval(&self, p: &[f64]) -> f64 {
        if p.len() != self.axes.len() {
            return f64::INFINITY;
        }
        let mut locs = Vec::with_capacity(p.len());
        for (axis, &pj) in self.axes.iter().zip(p) {
            match Self::locate(axis, pj) {
                Some(l) => locs.push(l),
                None => return f64::INFINITY,
            }
        }
        // multilinear in log psi over the 2^l bracketing corners
        let corners = 1usize << p.len();
        let mut acc = 0.0;
        for c in 0..corners {
            let mut w = 1.0;
            let mut idx = Vec::with_capacity(p.len());
            for (j, &(i, t)) in locs.iter().enumerate() {
                if (c >> j) & 1 == 1 {
                    w *= t;
                    idx.push(i + 1);
                } else {
                    w *= 1.0 - t;
                    idx.push(i);
                }
            }
            if w > 0.0 {
                acc += w * self.values[IxDyn(&idx)].ln();
            }
        }
        acc.exp()
    }
}

/// Generating function of a Grand Lebesgue space.
#[derive(Clone)]
pub enum PsiFunction {
    /// The discontinuous spike: 1 at r, +infinity elsewhere; G(psi_r) is L_r.
    Spike(Vec<f64>),
    /// Continuous positive evaluator on an open box.
    Continuous {
        support: Vec<(f64, f64)>,
        eval: PsiEval,
    },
    /// Natural function of a family, tabulated on a grid (closed hull);
    /// +infinity outside the tabulated box by convention.
    Tabulated(PsiTable),
}

impl fmt::Debug for PsiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiFunction::Spike(r) => f.debug_tuple("Spike").field(r).finish(),
            PsiFunction::Continuous { support, .. } => {
                f.debug_struct("Continuous").field("support", support).finish()
            }
            PsiFunction::Tabulated(t) => f
                .debug_struct("Tabulated")
                .field("axes", &t.axes)
                .finish(),
        }
    }
}

impl PsiFunction {
    pub fn spike(r: Vec<f64>) -> Self {
        PsiFunction::Spike(r)
    }

    /// Continuous psi; checks inf > 0 on a dense sample of the box.
    pub fn continuous<F>(support: Vec<(f64, f64)>, eval: F) -> Result<Self, GridError>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        for &(a, b) in &support {
            if !(a.is_finite() && b.is_finite() && 1.0 <= a && a < b) {
                return Err(GridError::BadAxis(0));
            }
        }
        let eval: PsiEval = Arc::new(eval);
        let probe = PGrid::log_spaced(&support, 9, 1e-6 * span(&support))?;
        for p in probe.points() {
            let v = eval(&p);
            if !(v.is_finite() && v > 0.0) {
                return Err(GridError::PsiNotPositive);
            }
        }
        Ok(PsiFunction::Continuous { support, eval })
    }

    /// Tabulated psi from per-axis exponent lists and matching values.
    pub fn tabulated(mut axes: Vec<Vec<f64>>, mut values: ArrayD<f64>) -> Result<Self, GridError> {
        let want: Vec<usize> = axes.iter().map(Vec::len).collect();
        if values.shape() != want.as_slice() {
            return Err(GridError::ShapeMismatch {
                got: values.shape().to_vec(),
                want,
            });
        }
        // sort each axis ascending, permuting values to match
        for (j, axis) in axes.iter_mut().enumerate() {
            let mut order: Vec<usize> = (0..axis.len()).collect();
            order.sort_by(|&a, &b| axis[a].partial_cmp(&axis[b]).expect("finite exponents"));
            if order.windows(2).any(|w| w[0] > w[1]) {
                values = values.select(NdAxis(j), &order);
                let sorted: Vec<f64> = order.iter().map(|&i| axis[i]).collect();
                *axis = sorted;
            }
            if axis.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(GridError::BadAxis(j));
            }
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(GridError::PsiNotPositive);
        }
        Ok(PsiFunction::Tabulated(PsiTable { axes, values }))
    }

    /// Support box; degenerate for the spike.
    pub fn support(&self) -> Vec<(f64, f64)> {
        match self {
            PsiFunction::Spike(r) => r.iter().map(|&x| (x, x)).collect(),
            PsiFunction::Continuous { support, .. } => support.clone(),
            PsiFunction::Tabulated(t) => t
                .axes
                .iter()
                .map(|a| (a[0], *a.last().unwrap()))
                .collect(),
        }
    }

    /// psi(p); +infinity outside the support.
    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            PsiFunction::Spike(r) => {
                if p == r.as_slice() {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            PsiFunction::Continuous { support, eval } => {
                let inside = p.len() == support.len()
                    && p.iter().zip(support).all(|(&pj, &(a, b))| a < pj && pj < b);
                if inside {
                    eval(p)
                } else {
                    f64::INFINITY
                }
            }
            PsiFunction::Tabulated(t) => t.eval(p),
        }
    }
}

fn span(support: &[(f64, f64)]) -> f64 {
    support
        .iter()
        .map(|&(a, b)| b - a)
        .fold(f64::INFINITY, f64::min)
}

/// ||f||_{AG psi}: max over the grid of |f|_p / psi(p). For the spike this
/// is exactly the mixed norm at r, no grid involved.
pub fn gls_norm(f: &GridFunction, psi: &PsiFunction, grid: &PGrid) -> Result<f64, GridError> {
    if let PsiFunction::Spike(r) = psi {
        return mixed_norm(f, r);
    }
    if grid.is_empty() {
        return Err(GridError::EmptyGrid);
    }
    let mut best = 0.0f64;
    for p in grid.points() {
        let denom = psi.eval(&p);
        if denom.is_infinite() {
            return Err(GridError::PointOutsideSupport);
        }
        let norm = mixed_norm(f, &p)?;
        best = best.max(norm / denom);
    }
    if !best.is_finite() {
        return Err(GridError::NonFiniteResult);
    }
    Ok(best)
}

/// Natural psi of a family: pointwise sup of member mixed norms, tabulated
/// on the grid with log-linear interpolation in between.
pub fn natural_psi(family: &[GridFunction], grid: &PGrid) -> Result<PsiFunction, GridError> {
    if family.is_empty() {
        return Err(GridError::UnboundedFamily("empty family".into()));
    }
    if grid.is_empty() {
        return Err(GridError::EmptyGrid);
    }
    let shape: Vec<usize> = grid.axes().iter().map(Vec::len).collect();
    let mut values = ArrayD::<f64>::zeros(IxDyn(&shape));
    let points = grid.points();
    for (flat, p) in points.iter().enumerate() {
        let mut sup = 0.0f64;
        for (k, member) in family.iter().enumerate() {
            let norm = mixed_norm(member, p).map_err(|_| {
                GridError::UnboundedFamily(format!("member {k} at p = {p:?}"))
            })?;
            if !norm.is_finite() {
                return Err(GridError::UnboundedFamily(format!(
                    "member {k} at p = {p:?}"
                )));
            }
            sup = sup.max(norm);
        }
        if sup <= 0.0 {
            return Err(GridError::PsiNotPositive);
        }
        let idx = unflatten(flat, &shape);
        values[IxDyn(&idx)] = sup;
    }
    PsiFunction::tabulated(grid.axes().to_vec(), values)
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0usize; shape.len()];
    for j in (0..shape.len()).rev() {
        idx[j] = flat % shape[j];
        flat /= shape[j];
    }
    idx
}
