//! Panel quadrature for weighted singular kernels on a line.
//!
//! The source function is the piecewise-linear interpolant of its samples.
//! The integration interval is split at every source node, singular point
//! and domain border, so each panel sees a smooth integrand except possibly
//! at its endpoints. Panels touching a singular point are refined
//! geometrically toward it (halving), and the innermost sliver is captured
//! in closed form (power kernels) or by a mapped exponential ladder
//! (power-log kernels), so no singular mass is dropped. Panels merely near a
//! singular point are refined geometrically away from it (doubling), which
//! bounds the integrand variation per panel.

use num_complex::Complex64;

use crate::slowvary::SlowVaryFn;

/// Values the panel integrator can accumulate.
pub trait PanelValue:
    Copy + Send + Sync + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self>
{
    fn zero() -> Self;
    fn scale(self, c: f64) -> Self;
    fn finite(self) -> bool;
    fn is_zero(self) -> bool;
}

impl PanelValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
}

impl PanelValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn is_zero(self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

/// 8-point Gauss-Legendre rule on [-1, 1].
const G8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const G8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn g8<T: PanelValue>(f: &dyn Fn(f64) -> T, a: f64, b: f64) -> T {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = T::zero();
    for i in 0..8 {
        let v = f(mid + half * G8_X[i]);
        acc = acc + v.scale(G8_W[i]);
    }
    acc.scale(half)
}

/// Singular factor attached to one point of the integration line.
#[derive(Clone)]
pub enum SingKernel {
    /// |y - s|^{-e} with 0 <= e < 1.
    Power { e: f64 },
    /// |y - s|^{alpha - 1} |ln|y - s||^delta S(|ln|y - s||) with 0 < alpha < 1.
    PowerLog {
        alpha: f64,
        delta: f64,
        s: SlowVaryFn,
    },
    /// No singular factor; the point only needs graded panels (kernel cusp).
    Cusp,
}

impl SingKernel {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            SingKernel::Power { e } => u.powf(-e),
            SingKernel::PowerLog { alpha, delta, s } => {
                if u == 1.0 {
                    return 0.0;
                }
                let l = u.ln().abs();
                u.powf(alpha - 1.0) * l.powf(*delta) * s.eval(l)
            }
            SingKernel::Cusp => 1.0,
        }
    }
}

/// One singular point: its position, the singular factor there, and the
/// remaining (locally smooth) part of the integrand.
pub struct Sing<'a, T> {
    pub pos: f64,
    pub kernel: SingKernel,
    pub g_far: Box<dyn Fn(f64) -> T + Sync + 'a>,
}

/// Integral of a piecewise-smooth integrand over panels delimited by
/// `breaks`, with singular structure described by `sings`.
pub struct LineIntegral<'a, T: PanelValue> {
    /// Full integrand, used on panels away from singular points.
    pub full: Box<dyn Fn(f64) -> T + Sync + 'a>,
    pub sings: Vec<Sing<'a, T>>,
    /// Geometric refinement depth toward/away from singular points.
    pub levels: u32,
}

/// Exponential-ladder length for the power-log sliver (relative mass below
/// exp(-T_LADDER) is dropped).
const T_LADDER: usize = 24;

impl<'a, T: PanelValue> LineIntegral<'a, T> {
    /// Integrate over consecutive panels of `breaks` (sorted ascending; the
    /// positions of all singular points inside the range must be members).
    pub fn run(&self, breaks: &[f64]) -> T {
        let mut acc = T::zero();
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                acc = acc + self.panel(w[0], w[1]);
            }
        }
        acc
    }

    fn panel(&self, c: f64, d: f64) -> T {
        let at_left = self.sings.iter().position(|s| s.pos == c);
        let at_right = self.sings.iter().position(|s| s.pos == d);
        match (at_left, at_right) {
            (Some(_), Some(_)) => {
                let mid = 0.5 * (c + d);
                self.panel(c, mid) + self.panel(mid, d)
            }
            (Some(i), None) => self.from_singular_end(&self.sings[i], 1.0, d - c),
            (None, Some(i)) => self.from_singular_end(&self.sings[i], -1.0, d - c),
            (None, None) => {
                let width = d - c;
                let near_left = self.nearest(|pos| c - pos);
                let near_right = self.nearest(|pos| pos - d);
                let close_l = near_left.map(|(_, dist)| dist < width).unwrap_or(false);
                let close_r = near_right.map(|(_, dist)| dist < width).unwrap_or(false);
                match (close_l, close_r) {
                    (true, true) => {
                        let mid = 0.5 * (c + d);
                        self.panel(c, mid) + self.panel(mid, d)
                    }
                    (true, false) => {
                        let (i, dist) = near_left.unwrap();
                        self.doubling(&self.sings[i], 1.0, dist, dist + width)
                    }
                    (false, true) => {
                        let (i, dist) = near_right.unwrap();
                        self.doubling(&self.sings[i], -1.0, dist, dist + width)
                    }
                    (false, false) => g8(&self.full, c, d),
                }
            }
        }
    }

    /// Nearest singular point in the direction measured by `dist_of`
    /// (non-negative distances only).
    fn nearest(&self, dist_of: impl Fn(f64) -> f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in self.sings.iter().enumerate() {
            let d = dist_of(s.pos);
            if d >= 0.0 && best.map(|(_, bd)| d < bd).unwrap_or(true) {
                best = Some((i, d));
            }
        }
        best
    }

    /// Panel with the singular point exactly at one end: halving panels
    /// toward it plus the closed-form sliver.
    fn from_singular_end(&self, sing: &Sing<'a, T>, sgn: f64, width: f64) -> T {
        let mut acc = T::zero();
        let mut hi = width;
        for _ in 0..self.levels {
            let lo = 0.5 * hi;
            acc = acc + self.g8_offset(sing, sgn, lo, hi);
            hi = lo;
        }
        acc + self.sliver(sing, sgn, hi)
    }

    /// Doubling panels from distance u_lo away from the singular point.
    fn doubling(&self, sing: &Sing<'a, T>, sgn: f64, u_lo: f64, u_hi: f64) -> T {
        let mut acc = T::zero();
        let mut lo = u_lo;
        let mut step = u_lo;
        loop {
            let hi = (lo + step).min(u_hi);
            acc = acc + self.g8_offset(sing, sgn, lo, hi);
            if hi >= u_hi {
                return acc;
            }
            lo = hi;
            step *= 2.0;
        }
    }

    /// G8 of g_far(s + sgn u) k(u) over u in [lo, hi]; the offset u is exact,
    /// so the kernel never suffers cancellation near the singular point.
    fn g8_offset(&self, sing: &Sing<'a, T>, sgn: f64, lo: f64, hi: f64) -> T {
        let f = |u: f64| {
            let y = sing.pos + sgn * u;
            (sing.g_far)(y).scale(sing.kernel.eval(u))
        };
        g8(&f, lo, hi)
    }

    /// Unresolved mass on [0, eps] next to the singular point.
    fn sliver(&self, sing: &Sing<'a, T>, sgn: f64, eps: f64) -> T {
        if eps <= 0.0 {
            return T::zero();
        }
        let g_at = |u: f64| (sing.g_far)(sing.pos + sgn * u);
        match &sing.kernel {
            SingKernel::Power { e } => {
                // freeze g linearly from two interior probes; integrate
                // (g0 + g1 u) u^{-e} exactly
                let ga = g_at(0.25 * eps);
                let gb = g_at(0.75 * eps);
                let slope = (gb - ga).scale(2.0 / eps);
                let g0 = ga - slope.scale(0.25 * eps);
                let k0 = eps.powf(1.0 - e) / (1.0 - e);
                let k1 = eps.powf(2.0 - e) / (2.0 - e);
                g0.scale(k0) + slope.scale(k1)
            }
            SingKernel::PowerLog { alpha, delta, s } => {
                // t = -alpha ln u maps the sliver to [z0, inf); integrate
                // t^delta e^{-t} S(t/alpha) g(u(t)) over unit panels
                let z0 = -alpha * eps.ln();
                debug_assert!(z0 > 0.0, "power-log sliver requires eps < 1");
                let f = |t: f64| {
                    let u = (-t / alpha).exp();
                    g_at(u).scale(t.powf(*delta) * (-t).exp() * s.eval(t / alpha))
                };
                let mut acc = T::zero();
                for k in 0..T_LADDER {
                    acc = acc + g8(&f, z0 + k as f64, z0 + (k + 1) as f64);
                }
                acc.scale(alpha.powf(-1.0 - delta))
            }
            SingKernel::Cusp => self.g8_offset(sing, sgn, 0.0, eps),
        }
    }
}

/// Piecewise-linear interpolant of samples on a strictly increasing axis;
/// zero outside the sampled hull.
#[derive(Clone, Copy)]
pub struct LineInterp<'a, T> {
    x: &'a [f64],
    y: &'a [T],
}

impl<'a, T: PanelValue> LineInterp<'a, T> {
    pub fn new(x: &'a [f64], y: &'a [T]) -> Self {
        debug_assert_eq!(x.len(), y.len());
        LineInterp { x, y }
    }

    pub fn eval(&self, t: f64) -> T {
        let n = self.x.len();
        if t < self.x[0] || t > self.x[n - 1] {
            return T::zero();
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let w = (t - self.x[i]) / h;
        self.y[i].scale(1.0 - w) + self.y[i + 1].scale(w)
    }
}
