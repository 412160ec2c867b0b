//! Empirical operator-norm lower bounds and envelope verification.
//!
//! Lower bounds come from maximizing the Rayleigh-type ratio
//! |T f|_q(p) / |f|_p over a parametric family of sampled test functions
//! (deterministic coordinate ascent with golden-section line searches).
//! Endpoint blow-up rates are fitted by log-log least squares against
//! geometric distance ladders; the theoretical upper envelope shape is
//! calibrated by the smallest constant dominating a measured curve; the
//! Grand Lebesgue transfer inequality is checked on holdout functions
//! against the calibrated envelope.

use rayon::prelude::*;

use crate::error::EstimatorError;
use crate::exponent::OperatorFamily;
use crate::grid::{mixed_norm, tensor_product, Axis, GridFunction};
use crate::operators::{apply_tensor_operator, QuadraturePlan};
use crate::psi::{gls_norm, PGrid, PsiFunction};

/// Test-function family kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFamilyKind {
    /// Per-block |x|^a on 0 < |x| <= r, zero outside.
    PowerCutoff,
    /// Per-block exp(-(lambda x)^2).
    DilatedGaussian,
    /// Per-block (1 - (x/r)^2)_+^a.
    FactorizedBump,
}

impl TestFamilyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestFamilyKind::PowerCutoff => "power_cutoff",
            TestFamilyKind::DilatedGaussian => "dilated_gaussian",
            TestFamilyKind::FactorizedBump => "factorized_bump",
        }
    }
}

/// One tunable shape parameter with its search interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl ParamSpec {
    fn fixed(&self) -> bool {
        self.lo >= self.hi
    }
}

/// A parametric family of factorized test functions sampled on fixed axes.
#[derive(Debug, Clone)]
pub struct TestFamily {
    kind: TestFamilyKind,
    axes: Vec<Axis>,
    params: Vec<ParamSpec>,
}

impl TestFamily {
    pub fn power_cutoff(axes: Vec<Axis>, a: (f64, f64), radius: (f64, f64)) -> Self {
        let params = per_block_params(axes.len(), &[("a", a), ("r", radius)]);
        TestFamily {
            kind: TestFamilyKind::PowerCutoff,
            axes,
            params,
        }
    }

    pub fn dilated_gaussian(axes: Vec<Axis>, lambda: (f64, f64)) -> Self {
        let params = per_block_params(axes.len(), &[("lambda", lambda)]);
        TestFamily {
            kind: TestFamilyKind::DilatedGaussian,
            axes,
            params,
        }
    }

    pub fn factorized_bump(axes: Vec<Axis>, a: (f64, f64), radius: (f64, f64)) -> Self {
        let params = per_block_params(axes.len(), &[("a", a), ("r", radius)]);
        TestFamily {
            kind: TestFamilyKind::FactorizedBump,
            axes,
            params,
        }
    }

    pub fn kind(&self) -> TestFamilyKind {
        self.kind
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    /// Geometric midpoints of the parameter box.
    pub fn default_params(&self) -> Vec<f64> {
        self.params
            .iter()
            .map(|p| {
                if p.fixed() {
                    p.lo
                } else if p.lo > 0.0 && p.hi > 0.0 {
                    (p.lo * p.hi).sqrt()
                } else {
                    0.5 * (p.lo + p.hi)
                }
            })
            .collect()
    }

    /// Sample the member with the given parameter values.
    pub fn generate(&self, values: &[f64]) -> Result<GridFunction, EstimatorError> {
        assert_eq!(values.len(), self.params.len());
        let l = self.axes.len();
        let mut factors = Vec::with_capacity(l);
        for (j, axis) in self.axes.iter().enumerate() {
            let profile: Box<dyn Fn(f64) -> f64> = match self.kind {
                TestFamilyKind::PowerCutoff => {
                    let (a, r) = (values[j], values[l + j]);
                    Box::new(move |x: f64| {
                        let t = x.abs();
                        if t > 0.0 && t <= r {
                            t.powf(a)
                        } else {
                            0.0
                        }
                    })
                }
                TestFamilyKind::DilatedGaussian => {
                    let lam = values[j];
                    Box::new(move |x: f64| (-(lam * x).powi(2)).exp())
                }
                TestFamilyKind::FactorizedBump => {
                    let (a, r) = (values[j], values[l + j]);
                    Box::new(move |x: f64| {
                        let t = 1.0 - (x / r).powi(2);
                        if t > 0.0 {
                            t.powf(a)
                        } else {
                            0.0
                        }
                    })
                }
            };
            factors.push(GridFunction::sample(vec![axis.clone()], move |x| {
                profile(x[0])
            })?);
        }
        Ok(tensor_product(&factors)?)
    }

    pub fn witness(&self, values: &[f64]) -> Vec<(String, f64)> {
        self.params
            .iter()
            .zip(values)
            .map(|(p, &v)| (p.name.clone(), v))
            .collect()
    }
}

fn per_block_params(l: usize, specs: &[(&str, (f64, f64))]) -> Vec<ParamSpec> {
    let mut out = Vec::with_capacity(l * specs.len());
    for &(name, (lo, hi)) in specs {
        for j in 1..=l {
            out.push(ParamSpec {
                name: format!("{name}{j}"),
                lo,
                hi,
            });
        }
    }
    out
}

/// Deterministic search controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    /// Coordinate-ascent sweeps over the parameter vector.
    pub sweeps: usize,
    /// Objective evaluations per golden-section line search.
    pub evals: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            sweeps: 3,
            evals: 24,
        }
    }
}

/// A sampled operator-norm lower bound at one exponent point.
#[derive(Debug, Clone, PartialEq)]
pub struct KEstimate {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub lower_bound: f64,
    pub witness: Vec<(String, f64)>,
    pub quadrature_tolerance: f64,
    /// Set when the objective was flat over the search box.
    pub degenerate: bool,
}

/// Which endpoint of which block a ladder approaches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointRef {
    pub block: usize,
    pub side: EndpointSide,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointSide {
    Lower,
    Upper,
}

impl EndpointSide {
    pub fn as_str(&self) -> &'static str {
        match self {
            EndpointSide::Lower => "p_minus",
            EndpointSide::Upper => "p_plus",
        }
    }
}

/// Fitted endpoint blow-up exponent with residual diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupFit {
    pub endpoint: EndpointRef,
    /// (distance to endpoint, lower bound), distances strictly decreasing.
    pub samples: Vec<(f64, f64)>,
    pub fitted_slope: f64,
    /// Max absolute log-residual of the fit.
    pub residual: f64,
}

/// Transfer-inequality verdict: the rescaled nu, the calibrated constant and
/// the per-holdout margins ||Tf||_{AG nu} / ||f||_{AG psi}.
#[derive(Debug, Clone)]
pub struct TransferCheck {
    pub psi: PsiFunction,
    pub nu: PsiFunction,
    pub c_hat: f64,
    pub margins: Vec<f64>,
    pub calibration_curve: Vec<KEstimate>,
}

/// |T f|_{q(p)} / |f|_p with q from the family's exponent relation.
pub fn operator_ratio(
    family: &OperatorFamily,
    f: &GridFunction,
    p: &[f64],
    plan: &QuadraturePlan,
) -> Result<f64, EstimatorError> {
    let q = family.q_of_p(p)?;
    ratio_with_q(family, f, p, &q, plan)
}

/// The same ratio with an explicit q-vector (used by the necessity
/// diagnostics, where q is deliberately perturbed off the relation).
pub fn ratio_with_q(
    family: &OperatorFamily,
    f: &GridFunction,
    p: &[f64],
    q: &[f64],
    plan: &QuadraturePlan,
) -> Result<f64, EstimatorError> {
    let denom = mixed_norm(f, p)?;
    if denom == 0.0 {
        return Err(EstimatorError::ZeroDenominator(p.to_vec()));
    }
    let tf = apply_tensor_operator(family, f, plan)?;
    let num = mixed_norm(&tf, q)?;
    Ok(num / denom)
}

fn golden_section_max(
    mut eval: impl FnMut(f64) -> Option<f64>,
    lo: f64,
    hi: f64,
    evals: usize,
) -> (f64, Option<f64>) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best: (f64, Option<f64>) = (0.5 * (lo + hi), None);
    fn consider(x: f64, v: Option<f64>, best: &mut (f64, Option<f64>)) {
        if let Some(v) = v {
            if best.1.map(|b| v > b).unwrap_or(true) {
                *best = (x, Some(v));
            }
        }
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    consider(c, fc, &mut best);
    consider(d, fd, &mut best);
    for _ in 2..evals.max(2) {
        // a failed evaluation loses against any finite value
        let go_left = match (fc, fd) {
            (Some(x), Some(y)) => x > y,
            (Some(_), None) => true,
            _ => false,
        };
        if go_left {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c);
            consider(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d);
            consider(d, fd, &mut best);
        }
    }
    best
}

/// Maximize the operator ratio over the test-family parameter box by
/// deterministic coordinate ascent (golden-section line search per
/// parameter). The incumbent parameter vector is evaluated first, so a
/// restart from a previous witness can never lose ground.
pub fn search_lower_bound(
    family: &OperatorFamily,
    p: &[f64],
    test_family: &TestFamily,
    search: &SearchSettings,
    plan: &QuadraturePlan,
) -> Result<KEstimate, EstimatorError> {
    let q = family.q_of_p(p)?;
    let mut params = test_family.default_params();
    let mut first_error: Option<EstimatorError> = None;
    let mut seen: (f64, f64) = (f64::INFINITY, f64::NEG_INFINITY);

    let objective = |vals: &[f64],
                         first_error: &mut Option<EstimatorError>,
                         seen: &mut (f64, f64)|
     -> Option<f64> {
        let f = match test_family.generate(vals) {
            Ok(f) => f,
            Err(e) => {
                first_error.get_or_insert(e);
                return None;
            }
        };
        match ratio_with_q(family, &f, p, &q, plan) {
            Ok(r) if r.is_finite() => {
                seen.0 = seen.0.min(r);
                seen.1 = seen.1.max(r);
                Some(r)
            }
            Ok(_) => None,
            Err(e) => {
                first_error.get_or_insert(e);
                None
            }
        }
    };

    let mut best_val = objective(&params, &mut first_error, &mut seen);
    let mut best_params = params.clone();
    for _ in 0..search.sweeps {
        for i in 0..params.len() {
            let spec = &test_family.params()[i];
            if spec.fixed() {
                continue;
            }
            let (arg, val) = golden_section_max(
                |t| {
                    let mut trial = params.clone();
                    trial[i] = t;
                    objective(&trial, &mut first_error, &mut seen)
                },
                spec.lo,
                spec.hi,
                search.evals,
            );
            if let Some(v) = val {
                if best_val.map(|b| v > b).unwrap_or(true) {
                    best_val = Some(v);
                    params[i] = arg;
                    best_params = params.clone();
                }
            }
        }
    }

    let lower_bound = match best_val {
        Some(v) => v,
        None => {
            return Err(first_error.unwrap_or(EstimatorError::ZeroDenominator(p.to_vec())));
        }
    };
    let degenerate = seen.1.is_finite()
        && seen.0.is_finite()
        && (seen.1 - seen.0).abs() <= 1e-9 * seen.1.abs().max(1e-300);
    Ok(KEstimate {
        p: p.to_vec(),
        q,
        lower_bound,
        witness: test_family.witness(&best_params),
        quadrature_tolerance: plan.target_tol,
        degenerate,
    })
}

/// Lower-bound search at every exponent point, in parallel; output follows
/// lexicographic p order.
pub fn scan_points(
    family: &OperatorFamily,
    points: &[Vec<f64>],
    test_family: &TestFamily,
    search: &SearchSettings,
    plan: &QuadraturePlan,
) -> Result<Vec<KEstimate>, EstimatorError> {
    let mut curve = points
        .par_iter()
        .map(|p| search_lower_bound(family, p, test_family, search, plan))
        .collect::<Result<Vec<_>, _>>()?;
    curve.sort_by(|a, b| a.p.partial_cmp(&b.p).expect("finite exponent points"));
    Ok(curve)
}

/// Lower-bound search over a full exponent grid.
pub fn scan_k_curve(
    family: &OperatorFamily,
    pgrid: &PGrid,
    test_family: &TestFamily,
    search: &SearchSettings,
    plan: &QuadraturePlan,
) -> Result<Vec<KEstimate>, EstimatorError> {
    scan_points(family, &pgrid.points(), test_family, search, plan)
}

/// Exponent ladder approaching one block endpoint: that block's p runs
/// through value -/+ eps0 * 2^{-k}; other blocks stay at the base point.
pub fn endpoint_ladder(
    base: &[f64],
    endpoint: &EndpointRef,
    eps0: f64,
    steps: usize,
) -> Vec<Vec<f64>> {
    (0..steps)
        .map(|k| {
            let eps = eps0 * 0.5f64.powi(k as i32);
            let mut p = base.to_vec();
            p[endpoint.block] = match endpoint.side {
                EndpointSide::Upper => endpoint.value - eps,
                EndpointSide::Lower => endpoint.value + eps,
            };
            p
        })
        .collect()
}

/// Log-log least squares of lower bounds against distance to the endpoint.
pub fn fit_blowup(curve: &[KEstimate], endpoint: EndpointRef) -> Result<BlowupFit, EstimatorError> {
    const MIN_SAMPLES: usize = 5;
    if curve.len() < MIN_SAMPLES {
        return Err(EstimatorError::InsufficientSamples {
            got: curve.len(),
            want: MIN_SAMPLES,
        });
    }
    let mut samples: Vec<(f64, f64)> = curve
        .iter()
        .map(|k| ((k.p[endpoint.block] - endpoint.value).abs(), k.lower_bound))
        .collect();
    samples.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite distances"));
    if samples.windows(2).any(|w| w[0].0 <= w[1].0) {
        return Err(EstimatorError::InsufficientSamples {
            got: curve.len(),
            want: MIN_SAMPLES,
        });
    }
    let logs: Vec<(f64, f64)> = samples.iter().map(|&(e, v)| (e.ln(), v.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|t| t.0).sum::<f64>() / n;
    let my = logs.iter().map(|t| t.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|t| (t.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|t| (t.0 - mx) * (t.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = logs
        .iter()
        .map(|t| (t.1 - (intercept + slope * t.0)).abs())
        .fold(0.0, f64::max);
    Ok(BlowupFit {
        endpoint,
        samples,
        fitted_slope: slope,
        residual,
    })
}

/// Smallest constant that makes the theoretical upper envelope dominate the
/// measured curve.
pub fn calibrate_envelope(
    curve: &[KEstimate],
    family: &OperatorFamily,
) -> Result<f64, EstimatorError> {
    if curve.is_empty() {
        return Err(EstimatorError::EmptyCurve);
    }
    let mut c_hat = 0.0f64;
    for k in curve {
        let env = family.envelope(&k.p)?;
        c_hat = c_hat.max(k.lower_bound / env.upper_shape);
    }
    Ok(c_hat)
}

/// Calibrate K-hat = C-hat * upper_shape on the calibration family, build
/// nu(q) = psi(p(q)) K-hat(p(q)) on the image grid (p(q) solved back through
/// the relation by bisection), and report the margin
/// ||T f||_{AG nu} / ||f||_{AG psi} for every holdout function.
pub fn verify_transfer(
    family: &OperatorFamily,
    psi: &PsiFunction,
    calibration: &TestFamily,
    holdout: &[GridFunction],
    pgrid: &PGrid,
    search: &SearchSettings,
    plan: &QuadraturePlan,
) -> Result<TransferCheck, EstimatorError> {
    let curve = scan_k_curve(family, pgrid, calibration, search, plan)?;
    let c_hat = calibrate_envelope(&curve, family)?;

    // per-axis image of the p-grid under the blockwise relation
    let q_axes: Vec<Vec<f64>> = {
        let base = base_point(pgrid);
        let mut axes = Vec::with_capacity(pgrid.rank());
        for (j, p_axis) in pgrid.axes().iter().enumerate() {
            let mut qs = Vec::with_capacity(p_axis.len());
            for &pj in p_axis {
                let mut p_full = base.clone();
                p_full[j] = pj;
                qs.push(family.q_of_p(&p_full)?[j]);
            }
            axes.push(qs);
        }
        axes
    };
    let shape: Vec<usize> = q_axes.iter().map(Vec::len).collect();
    let mut nu_values = ndarray::ArrayD::<f64>::zeros(ndarray::IxDyn(&shape));
    for (flat, p) in pgrid.points().iter().enumerate() {
        let q = family.q_of_p(p)?;
        let p_back = family.p_of_q(&q)?;
        let env = family.envelope(&p_back)?;
        let idx = unflatten_idx(flat, &shape);
        nu_values[ndarray::IxDyn(&idx)] = psi.eval(&p_back) * c_hat * env.upper_shape;
    }
    let nu = PsiFunction::tabulated(q_axes.clone(), nu_values)?;
    let q_grid = PGrid::new(
        q_axes
            .into_iter()
            .map(|mut a| {
                a.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
                a
            })
            .collect(),
    )?;

    let mut margins = Vec::with_capacity(holdout.len());
    for f in holdout {
        let denom = gls_norm(f, psi, pgrid)?;
        if denom == 0.0 {
            return Err(EstimatorError::ZeroDenominator(vec![]));
        }
        let tf = apply_tensor_operator(family, f, plan)?;
        let num = gls_norm(&tf, &nu, &q_grid)?;
        margins.push(num / denom);
    }
    Ok(TransferCheck {
        psi: psi.clone(),
        nu,
        c_hat,
        margins,
        calibration_curve: curve,
    })
}

fn base_point(pgrid: &PGrid) -> Vec<f64> {
    pgrid.axes().iter().map(|a| a[a.len() / 2]).collect()
}

fn unflatten_idx(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0usize; shape.len()];
    for j in (0..shape.len()).rev() {
        idx[j] = flat % shape[j];
        flat /= shape[j];
    }
    idx
}
