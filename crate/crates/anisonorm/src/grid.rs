//! Tensor-grid functions and anisotropic mixed norms.
//!
//! A `GridFunction` is a dense rank-l array of samples over a tensor product
//! of strictly increasing one-dimensional axes. Unbounded domains are
//! truncated to [-R_j, R_j]; axes may be non-uniform (graded toward the
//! origin and other singular points). The mixed norm is the iterated norm of
//! the anisotropic Lebesgue space, innermost axis first, with per-axis
//! trapezoid quadrature weights; p = infinity along an axis is the grid max.

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;

use crate::error::GridError;

/// One coordinate axis: strictly increasing sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    points: Vec<f64>,
}

impl Axis {
    pub fn new(points: Vec<f64>) -> Result<Self, GridError> {
        if points.len() < 2 {
            return Err(GridError::BadAxis(0));
        }
        if points
            .windows(2)
            .any(|w| !(w[0] < w[1]) || !w[0].is_finite() || !w[1].is_finite())
        {
            return Err(GridError::BadAxis(0));
        }
        Ok(Axis { points })
    }

    /// Uniform axis with `n` points on [a, b].
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self, GridError> {
        if n < 2 || !(a < b) {
            return Err(GridError::BadAxis(0));
        }
        let h = (b - a) / (n - 1) as f64;
        Axis::new((0..n).map(|i| a + h * i as f64).collect())
    }

    /// Symmetric axis on [-radius, radius] graded toward 0 with the given
    /// exponent: node k sits at radius * (k/n)^grading on each side.
    pub fn symmetric_graded(radius: f64, per_side: usize, grading: f64) -> Result<Self, GridError> {
        if per_side < 2 || !(radius > 0.0) || !(grading >= 1.0) {
            return Err(GridError::BadAxis(0));
        }
        let mut pts = Vec::with_capacity(2 * per_side + 1);
        for k in (1..=per_side).rev() {
            pts.push(-radius * (k as f64 / per_side as f64).powf(grading));
        }
        pts.push(0.0);
        for k in 1..=per_side {
            pts.push(radius * (k as f64 / per_side as f64).powf(grading));
        }
        Axis::new(pts)
    }

    /// Symmetric logarithmic axis: +/- min_abs * rho^k up to radius, with no
    /// node at the origin. `per_decade` controls the density. Suited to
    /// power-profile samples that are singular at 0.
    pub fn symmetric_log(radius: f64, min_abs: f64, per_decade: f64) -> Result<Self, GridError> {
        if !(radius > min_abs && min_abs > 0.0 && per_decade > 0.0) {
            return Err(GridError::BadAxis(0));
        }
        let decades = (radius / min_abs).log10();
        let n = (decades * per_decade).ceil() as usize + 1;
        let step = decades / (n - 1) as f64;
        let pos: Vec<f64> = (0..n)
            .map(|k| min_abs * 10f64.powf(step * k as f64))
            .collect();
        let mut pts: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
        pts.extend(pos.iter().copied());
        Axis::new(pts)
    }

    /// Insert extra nodes clustered around each breakpoint so that sampled
    /// discontinuities are resolved to `width`.
    pub fn refined_near(mut self, breakpoints: &[f64], width: f64) -> Result<Self, GridError> {
        let (lo, hi) = (self.points[0], *self.points.last().unwrap());
        for &b in breakpoints {
            for scale in [1.0, 1e3, 1e6] {
                for sign in [-1.0, 1.0] {
                    let x = b + sign * width * scale;
                    if x > lo && x < hi {
                        self.points.push(x);
                    }
                }
            }
            if b > lo && b < hi {
                self.points.push(b);
            }
        }
        self.points
            .sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
        self.points.dedup();
        Axis::new(self.points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Composite trapezoid weights for the (possibly non-uniform) nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.points.len();
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let h = 0.5 * (self.points[i + 1] - self.points[i]);
            w[i] += h;
            w[i + 1] += h;
        }
        w
    }

    pub fn max_spacing(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Sample storage: real or complex.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Real(ArrayD<f64>),
    Complex(ArrayD<Complex64>),
}

impl Values {
    pub fn shape(&self) -> &[usize] {
        match self {
            Values::Real(a) => a.shape(),
            Values::Complex(a) => a.shape(),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Values::Real(a) => a.iter().all(|v| v.is_finite()),
            Values::Complex(a) => a.iter().all(|v| v.re.is_finite() && v.im.is_finite()),
        }
    }

    /// Modulus array (used by every norm path).
    pub fn modulus(&self) -> ArrayD<f64> {
        match self {
            Values::Real(a) => a.mapv(f64::abs),
            Values::Complex(a) => a.mapv(|z| z.norm()),
        }
    }
}

/// Tensor-product sampled function on l one-dimensional axes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    axes: Vec<Axis>,
    values: Values,
    truncation_radii: Vec<f64>,
}

impl GridFunction {
    pub fn new(axes: Vec<Axis>, values: Values) -> Result<Self, GridError> {
        let want: Vec<usize> = axes.iter().map(Axis::len).collect();
        if values.shape() != want.as_slice() {
            return Err(GridError::ShapeMismatch {
                got: values.shape().to_vec(),
                want,
            });
        }
        if !values.is_finite() {
            return Err(GridError::NonFiniteSample);
        }
        let truncation_radii = axes
            .iter()
            .map(|ax| {
                ax.points()[0]
                    .abs()
                    .max(ax.points().last().unwrap().abs())
            })
            .collect();
        Ok(GridFunction {
            axes,
            values,
            truncation_radii,
        })
    }

    /// Sample a real-valued function of the coordinate vector.
    pub fn sample<F>(axes: Vec<Axis>, f: F) -> Result<Self, GridError>
    where
        F: Fn(&[f64]) -> f64,
    {
        let shape: Vec<usize> = axes.iter().map(Axis::len).collect();
        let mut values = ArrayD::<f64>::zeros(IxDyn(&shape));
        let mut x = vec![0.0; axes.len()];
        for (idx, v) in values.indexed_iter_mut() {
            for (j, ax) in axes.iter().enumerate() {
                x[j] = ax.points()[idx[j]];
            }
            *v = f(&x);
        }
        GridFunction::new(axes, Values::Real(values))
    }

    /// Tensor product of one-dimensional real profiles on the given axes.
    pub fn from_factors<F>(axes: Vec<Axis>, profiles: &[F]) -> Result<Self, GridError>
    where
        F: Fn(f64) -> f64,
    {
        assert_eq!(axes.len(), profiles.len());
        let lines: Vec<GridFunction> = axes
            .into_iter()
            .zip(profiles.iter())
            .map(|(ax, f)| GridFunction::sample(vec![ax], |x| f(x[0])))
            .collect::<Result<_, _>>()?;
        tensor_product(&lines)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn truncation_radii(&self) -> &[f64] {
        &self.truncation_radii
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.values, Values::Complex(_))
    }

    /// Real samples along axis 0 of a rank-1 function.
    pub fn line_real(&self) -> Option<&[f64]> {
        match (&self.values, self.rank()) {
            (Values::Real(a), 1) => a.as_slice(),
            _ => None,
        }
    }

    /// Scalar multiple c * f.
    pub fn scale(&self, c: f64) -> GridFunction {
        let values = match &self.values {
            Values::Real(a) => Values::Real(a.mapv(|v| c * v)),
            Values::Complex(a) => Values::Complex(a.mapv(|v| c * v)),
        };
        GridFunction {
            axes: self.axes.clone(),
            values,
            truncation_radii: self.truncation_radii.clone(),
        }
    }

    /// Pointwise a*f + b*g on a shared grid.
    pub fn linear_combination(&self, a: f64, other: &GridFunction, b: f64) -> Option<GridFunction> {
        if self.axes != other.axes {
            return None;
        }
        let values = match (&self.values, &other.values) {
            (Values::Real(x), Values::Real(y)) => Values::Real(a * x + b * y),
            _ => return None,
        };
        Some(GridFunction {
            axes: self.axes.clone(),
            values,
            truncation_radii: self.truncation_radii.clone(),
        })
    }
}

/// Dilation T_lambda f(x) = f(lambda_1 x_1, ..., lambda_l x_l), implemented
/// by rescaling the axes so no interpolation error is introduced.
pub fn dilate(f: &GridFunction, lambda: &[f64]) -> Result<GridFunction, GridError> {
    if lambda.len() != f.rank() {
        return Err(GridError::RankMismatch {
            got: lambda.len(),
            want: f.rank(),
        });
    }
    if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(GridError::BadExponent(0.0));
    }
    let axes = f
        .axes
        .iter()
        .zip(lambda.iter())
        .map(|(ax, &l)| Axis::new(ax.points().iter().map(|&x| x / l).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    GridFunction::new(axes, f.values.clone())
}

/// Outer product of rank-1 factors on the product grid.
pub fn tensor_product(factors: &[GridFunction]) -> Result<GridFunction, GridError> {
    if factors.is_empty() {
        return Err(GridError::RankMismatch { got: 0, want: 1 });
    }
    for f in factors {
        if f.rank() != 1 || f.is_complex() {
            return Err(GridError::RankMismatch {
                got: f.rank(),
                want: 1,
            });
        }
    }
    if factors.len() == 1 {
        return Ok(factors[0].clone());
    }
    let axes: Vec<Axis> = factors.iter().map(|f| f.axes[0].clone()).collect();
    let shape: Vec<usize> = axes.iter().map(Axis::len).collect();
    let lines: Vec<&[f64]> = factors.iter().map(|f| f.line_real().unwrap()).collect();
    let mut values = ArrayD::<f64>::zeros(IxDyn(&shape));
    for (idx, v) in values.indexed_iter_mut() {
        let mut prod = 1.0;
        for (j, line) in lines.iter().enumerate() {
            prod *= line[idx[j]];
        }
        *v = prod;
    }
    GridFunction::new(axes, Values::Real(values))
}

/// Reduce the leading axis of `a` with the L_p quadrature rule, overflow-safe
/// via per-lane max scaling; p = infinity takes the lane max.
fn reduce_first_axis(a: &ArrayD<f64>, weights: &[f64], p: f64) -> Result<ArrayD<f64>, GridError> {
    let n0 = a.shape()[0];
    let rest: Vec<usize> = a.shape()[1..].to_vec();
    let rest_len: usize = rest.iter().product::<usize>().max(1);
    let flat = a
        .as_slice()
        .expect("norm reduction expects standard layout");
    let mut out = vec![0.0f64; rest_len];
    if p.is_infinite() {
        for (r, o) in out.iter_mut().enumerate() {
            let mut m = 0.0f64;
            for i in 0..n0 {
                m = m.max(flat[i * rest_len + r]);
            }
            *o = m;
        }
    } else {
        for (r, o) in out.iter_mut().enumerate() {
            let mut m = 0.0f64;
            for i in 0..n0 {
                m = m.max(flat[i * rest_len + r]);
            }
            if m == 0.0 {
                *o = 0.0;
                continue;
            }
            let mut s = 0.0f64;
            for i in 0..n0 {
                let t = flat[i * rest_len + r] / m;
                if t > 0.0 {
                    s += weights[i] * t.powf(p);
                }
            }
            *o = m * s.powf(1.0 / p);
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(GridError::NonFiniteResult);
    }
    ArrayD::from_shape_vec(IxDyn(&rest), out).map_err(|_| GridError::NonFiniteResult)
}

/// Anisotropic mixed norm |f|_{p_1,...,p_l}, iterated innermost axis (axis 0)
/// first. Returns `NonFiniteResult` on overflow.
pub fn mixed_norm(f: &GridFunction, p: &[f64]) -> Result<f64, GridError> {
    if p.len() != f.rank() {
        return Err(GridError::RankMismatch {
            got: p.len(),
            want: f.rank(),
        });
    }
    for &pj in p {
        if pj.is_nan() || pj < 1.0 {
            return Err(GridError::BadExponent(pj));
        }
    }
    let mut current = f.values.modulus();
    for (j, &pj) in p.iter().enumerate() {
        let weights = f.axes[j].trapezoid_weights();
        current = reduce_first_axis(&current, &weights, pj)?;
    }
    debug_assert!(current.ndim() == 0);
    let v = *current.first().expect("scalar result");
    if !v.is_finite() {
        return Err(GridError::NonFiniteResult);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian_axis() -> Axis {
        Axis::uniform(-10.0, 10.0, 801).unwrap()
    }

    #[test]
    fn axis_rejects_non_increasing() {
        assert!(Axis::new(vec![0.0, 0.0, 1.0]).is_err());
        assert!(Axis::new(vec![1.0]).is_err());
    }

    #[test]
    fn trapezoid_weights_sum_to_extent() {
        let ax = Axis::symmetric_graded(5.0, 40, 2.0).unwrap();
        let total: f64 = ax.trapezoid_weights().iter().sum();
        assert_relative_eq!(total, 10.0, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_lp_norm_closed_form() {
        let ax = gaussian_axis();
        let f = GridFunction::sample(vec![ax], |x| (-x[0] * x[0]).exp()).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0] {
            let want = (std::f64::consts::PI / p).powf(1.0 / (2.0 * p));
            let got = mixed_norm(&f, &[p]).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn indicator_product_factorizes() {
        let ax1 = Axis::uniform(-1.0, 3.0, 401).unwrap();
        let ax2 = Axis::uniform(-1.0, 4.0, 501).unwrap();
        let g1 = GridFunction::sample(vec![ax1.clone()], |x| {
            if (0.0..=2.0).contains(&x[0]) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let g2 = GridFunction::sample(vec![ax2.clone()], |x| {
            if (0.0..=3.0).contains(&x[0]) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let f = tensor_product(&[g1.clone(), g2.clone()]).unwrap();
        let p = [2.0, 3.0];
        let joint = mixed_norm(&f, &p).unwrap();
        let split = mixed_norm(&g1, &p[..1]).unwrap() * mixed_norm(&g2, &p[1..]).unwrap();
        assert_relative_eq!(joint, split, max_relative = 1e-12);
        // closed form 2^(1/2) * 3^(1/3) up to the sampled-edge half cells
        let want = 2f64.powf(0.5) * 3f64.powf(1.0 / 3.0);
        assert_relative_eq!(joint, want, max_relative = 2e-2);
    }

    #[test]
    fn diagonal_equals_flat_lp() {
        let ax = Axis::uniform(-4.0, 4.0, 161).unwrap();
        let f = GridFunction::sample(vec![ax.clone(), ax.clone()], |x| {
            (-(x[0] * x[0] + 0.5 * x[1] * x[1])).exp() + 0.1 * x[0].sin()
        })
        .unwrap();
        let p = 2.5;
        let iterated = mixed_norm(&f, &[p, p]).unwrap();
        // flat quadrature with product weights
        let w = ax.trapezoid_weights();
        let mut s = 0.0;
        if let Values::Real(a) = f.values() {
            for (idx, v) in a.indexed_iter() {
                s += w[idx[0]] * w[idx[1]] * v.abs().powf(p);
            }
        }
        assert_relative_eq!(iterated, s.powf(1.0 / p), max_relative = 1e-10);
    }

    #[test]
    fn axis_order_matters() {
        let ax = Axis::uniform(0.0, 1.0, 101).unwrap();
        let f = GridFunction::sample(vec![ax.clone(), ax.clone()], |x| {
            (1.0 + 3.0 * x[0]) * (1.0 - x[1]).powi(2)
        })
        .unwrap();
        let a = mixed_norm(&f, &[1.0, 4.0]).unwrap();
        let b = mixed_norm(&f, &[4.0, 1.0]).unwrap();
        assert!((a - b).abs() > 1e-3 * a);
    }

    #[test]
    fn infinity_exponent_is_grid_max() {
        let ax = Axis::uniform(-1.0, 1.0, 11).unwrap();
        let f = GridFunction::sample(vec![ax], |x| 1.0 - x[0] * x[0]).unwrap();
        let got = mixed_norm(&f, &[f64::INFINITY]).unwrap();
        assert_eq!(got, 1.0);
    }

    #[test]
    fn dilation_law_exact() {
        let ax = Axis::symmetric_graded(8.0, 120, 2.0).unwrap();
        let f = GridFunction::sample(vec![ax], |x| (-x[0] * x[0]).exp() * (1.0 + x[0].cos()))
            .unwrap();
        let p = [1.7];
        let base = mixed_norm(&f, &p).unwrap();
        for lambda in [0.25, 0.5, 2.0, 4.0] {
            let g = dilate(&f, &[lambda]).unwrap();
            let got = mixed_norm(&g, &p).unwrap();
            let want = lambda.powf(-1.0 / p[0]) * base;
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn dilated_gaussian_closed_form() {
        let ax = gaussian_axis();
        let f = GridFunction::sample(vec![ax], |x| (-x[0] * x[0]).exp()).unwrap();
        let g = dilate(&f, &[2.0]).unwrap();
        for p in [1.25, 2.0] {
            let want = 2f64.powf(-1.0 / p) * (std::f64::consts::PI / p).powf(1.0 / (2.0 * p));
            assert_relative_eq!(mixed_norm(&g, &[p]).unwrap(), want, max_relative = 1e-10);
        }
    }

    #[test]
    fn homogeneity() {
        let ax = Axis::uniform(-2.0, 2.0, 101).unwrap();
        let f = GridFunction::sample(vec![ax], |x| x[0].cos()).unwrap();
        let a = mixed_norm(&f.scale(-3.5), &[2.2]).unwrap();
        let b = 3.5 * mixed_norm(&f, &[2.2]).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }

    #[test]
    fn huge_exponent_does_not_overflow() {
        let ax = Axis::symmetric_log(1.0, 1e-120, 3.0).unwrap();
        let f = GridFunction::sample(vec![ax], |x| x[0].abs().powf(-0.5)).unwrap();
        let v = mixed_norm(&f, &[640.0]).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn zero_function_norm_zero() {
        let ax = Axis::uniform(0.0, 1.0, 8).unwrap();
        let f = GridFunction::sample(vec![ax.clone(), ax], |_| 0.0).unwrap();
        assert_eq!(mixed_norm(&f, &[3.0, 2.0]).unwrap(), 0.0);
    }
}
