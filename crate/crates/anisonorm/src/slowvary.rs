//! Registry of slowly varying functions.
//!
//! A function S is slowly varying at infinity when S(xz)/S(z) -> 1 as
//! z -> infinity for every fixed x > 0, and slowly varying at zero when the
//! same holds as z -> 0. The log-weighted Riesz kernel needs slow variation
//! at infinity only; the slowly-varying-weight Fourier conditions need both
//! ends. Registration validates the claimed behaviour numerically on
//! geometric ladders, so a candidate like 2 + sin(log(1 + z)) is rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::ExponentError;

type EvalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Where a registered function is required to vary slowly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationEnd {
    AtInfinity,
    AtZeroAndInfinity,
}

/// One registered slowly varying function.
#[derive(Clone)]
pub struct SlowVaryFn {
    name: String,
    eval: EvalFn,
}

impl SlowVaryFn {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, z: f64) -> f64 {
        (self.eval)(z)
    }
}

impl fmt::Debug for SlowVaryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlowVaryFn").field("name", &self.name).finish()
    }
}

/// Max relative deviation of S(xz)/S(z) from 1 tolerated at the ladder tail.
const DEVIATION_TOL: f64 = 0.05;
/// Geometric ladder rungs (base 4) probed at the far tail.
const TAIL_RUNGS: [i32; 3] = [26, 27, 28];
/// Dilation factors used in the variation test.
const TEST_FACTORS: [f64; 2] = [2.0, 4.0];

fn variation_deviation(eval: &EvalFn, at_zero: bool) -> f64 {
    let mut worst: f64 = 0.0;
    for &k in &TAIL_RUNGS {
        let z = if at_zero {
            4f64.powi(-k)
        } else {
            4f64.powi(k)
        };
        let base = eval(z);
        for &x in &TEST_FACTORS {
            let dev = (eval(x * z) / base - 1.0).abs();
            worst = worst.max(dev);
        }
    }
    worst
}

fn validate(name: &str, eval: &EvalFn, end: VariationEnd) -> Result<(), ExponentError> {
    let dev_inf = variation_deviation(eval, false);
    if !dev_inf.is_finite() || dev_inf > DEVIATION_TOL {
        return Err(ExponentError::NotSlowlyVarying {
            name: name.to_string(),
            end: "infinity",
            deviation: dev_inf,
        });
    }
    if end == VariationEnd::AtZeroAndInfinity {
        let dev_zero = variation_deviation(eval, true);
        if !dev_zero.is_finite() || dev_zero > DEVIATION_TOL {
            return Err(ExponentError::NotSlowlyVarying {
                name: name.to_string(),
                end: "zero",
                deviation: dev_zero,
            });
        }
    }
    Ok(())
}

/// Named collection of validated slowly varying functions.
///
/// Ships three built-ins, all slowly varying at both ends:
/// `one` (constant 1), `log` (log(e + z)) and `symlog`
/// (log(e + z) + log(e + 1/z), symmetric under z -> 1/z).
#[derive(Debug, Clone)]
pub struct SlowVaryRegistry {
    entries: BTreeMap<String, SlowVaryFn>,
}

impl Default for SlowVaryRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl SlowVaryRegistry {
    pub fn with_builtins() -> Self {
        let mut reg = SlowVaryRegistry {
            entries: BTreeMap::new(),
        };
        reg.register("one", VariationEnd::AtZeroAndInfinity, |_| 1.0)
            .expect("constant is slowly varying");
        reg.register("log", VariationEnd::AtZeroAndInfinity, |z: f64| {
            (std::f64::consts::E + z).ln()
        })
        .expect("log(e+z) is slowly varying");
        reg.register("symlog", VariationEnd::AtZeroAndInfinity, |z: f64| {
            (std::f64::consts::E + z).ln() + (std::f64::consts::E + 1.0 / z).ln()
        })
        .expect("symmetric log variant is slowly varying");
        reg
    }

    /// Register a function after checking slow variation at the requested ends.
    pub fn register<F>(
        &mut self,
        name: &str,
        end: VariationEnd,
        f: F,
    ) -> Result<(), ExponentError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let eval: EvalFn = Arc::new(f);
        validate(name, &eval, end)?;
        self.entries.insert(
            name.to_string(),
            SlowVaryFn {
                name: name.to_string(),
                eval,
            },
        );
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&SlowVaryFn, ExponentError> {
        self.entries
            .get(name)
            .ok_or_else(|| ExponentError::UnknownSlowVary(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    /// Bounds of M(z) / L(1/z) over a logarithmic z-grid.
    ///
    /// The pair is compatible when the ratio stays within a bounded band;
    /// the returned flag applies the band threshold, the bounds are reported
    /// either way.
    pub fn compatibility(&self, l_name: &str, m_name: &str) -> Result<RatioBounds, ExponentError> {
        let l = self.get(l_name)?;
        let m = self.get(m_name)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        // 10^-10 .. 10^10 in half-decade steps
        for t in -20..=20 {
            let z = 10f64.powf(t as f64 / 2.0);
            let r = m.eval(z) / l.eval(1.0 / z);
            if !(r.is_finite() && r > 0.0) {
                return Ok(RatioBounds {
                    lo: f64::NAN,
                    hi: f64::NAN,
                    compatible: false,
                });
            }
            lo = lo.min(r);
            hi = hi.max(r);
        }
        Ok(RatioBounds {
            lo,
            hi,
            compatible: hi / lo <= RATIO_BAND,
        })
    }
}

/// Band threshold for the M(z) vs L(1/z) comparison.
const RATIO_BAND: f64 = 20.0;

/// Result of the compatibility check for a (L, M) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBounds {
    pub lo: f64,
    pub hi: f64,
    pub compatible: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_present() {
        let reg = SlowVaryRegistry::with_builtins();
        let names: Vec<_> = reg.names().collect();
        assert_eq!(names, vec!["log", "one", "symlog"]);
        assert_eq!(reg.get("one").unwrap().eval(123.0), 1.0);
    }

    #[test]
    fn oscillating_log_rejected() {
        let mut reg = SlowVaryRegistry::with_builtins();
        let err = reg
            .register("sinlog", VariationEnd::AtZeroAndInfinity, |z: f64| {
                2.0 + (1.0 + z).ln().sin()
            })
            .unwrap_err();
        assert!(matches!(err, ExponentError::NotSlowlyVarying { .. }));
    }

    #[test]
    fn power_law_rejected() {
        let mut reg = SlowVaryRegistry::with_builtins();
        assert!(reg
            .register("sqrt", VariationEnd::AtInfinity, |z: f64| z.sqrt())
            .is_err());
    }

    #[test]
    fn identical_pair_has_unit_bounds() {
        let mut reg = SlowVaryRegistry::with_builtins();
        // M(z) = L(1/z) by construction evaluates the same expression, so
        // the ratio is exactly one at every grid point.
        reg.register("invlog", VariationEnd::AtZeroAndInfinity, |z: f64| {
            (std::f64::consts::E + 1.0 / z).ln()
        })
        .unwrap();
        let b = reg.compatibility("log", "invlog").unwrap();
        assert_eq!((b.lo, b.hi), (1.0, 1.0));
        assert!(b.compatible);
    }

    #[test]
    fn symmetric_self_pair_compatible() {
        let reg = SlowVaryRegistry::with_builtins();
        // symlog(1/z) = symlog(z) up to rounding of the double reciprocal
        let b = reg.compatibility("symlog", "symlog").unwrap();
        assert!((b.lo - 1.0).abs() < 1e-12 && (b.hi - 1.0).abs() < 1e-12);
        assert!(b.compatible);
    }

    #[test]
    fn mismatched_pair_flagged() {
        let reg = SlowVaryRegistry::with_builtins();
        // M(z)/L(1/z) = 1/log(e + 1/z) spreads past the band over the grid.
        let b = reg.compatibility("log", "one").unwrap();
        assert!(!b.compatible);
        assert!(b.hi / b.lo > 20.0);
    }
}
