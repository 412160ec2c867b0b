//! Flat key-value experiment configs.
//!
//! The format is one `key = value` assignment per line with dotted section
//! paths (`blocks.1.alpha = 0.5`), `#` comments and blank lines. It is
//! deliberately flat so experiment archives diff cleanly. `serialize`
//! emits the canonical form (sorted keys), and parse-serialize-parse is the
//! identity on the canonical field set.

use std::collections::BTreeMap;
use std::fmt;

use anisonorm::estimator::TestFamily;
use anisonorm::exponent::{BlockParams, FamilyKind, OperatorFamily, Partition};
use anisonorm::grid::Axis;
use anisonorm::operators::QuadraturePlan;
use anisonorm::psi::PGrid;

#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        message: message.into(),
    })
}

/// Parsed configuration: a sorted key-value map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`", lineno + 1));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return err(format!("line {}: empty key or value", lineno + 1));
            }
            if map.insert(key.clone(), value).is_some() {
                return err(format!("line {}: duplicate key `{key}`", lineno + 1));
            }
        }
        Ok(Config { map })
    }

    /// Canonical form: sorted `key = value` lines.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.map {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn req(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key)
            .ok_or_else(|| ConfigError {
                message: format!("missing required field `{key}`"),
            })
    }

    pub fn req_f64(&self, key: &str) -> Result<f64, ConfigError> {
        let raw = self.req(key)?;
        raw.parse::<f64>().map_err(|_| ConfigError {
            message: format!("field `{key}` = `{raw}` is not a number"),
        })
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse::<f64>().map_err(|_| ConfigError {
                message: format!("field `{key}` = `{raw}` is not a number"),
            }),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse::<usize>().map_err(|_| ConfigError {
                message: format!("field `{key}` = `{raw}` is not a non-negative integer"),
            }),
        }
    }

    pub fn req_usize(&self, key: &str) -> Result<usize, ConfigError> {
        let raw = self.req(key)?;
        raw.parse::<usize>().map_err(|_| ConfigError {
            message: format!("field `{key}` = `{raw}` is not a non-negative integer"),
        })
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let raw = self.req(key)?;
        raw.split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| ConfigError {
                    message: format!("field `{key}`: `{t}` is not a number"),
                })
            })
            .collect()
    }

    pub fn label(&self) -> &str {
        self.get("run.label").unwrap_or("unlabeled")
    }

    /// Hex SHA-256 of the canonical serialization; embedded in CSV headers
    /// so reruns of the same config are byte-identical.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.serialize().as_bytes());
        let digest = h.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}

/// Family kind plus per-block parameters from `family.*` and `blocks.*`.
pub fn build_family(cfg: &Config) -> Result<OperatorFamily, ConfigError> {
    let kind: FamilyKind = cfg
        .req("family.kind")?
        .parse()
        .map_err(|e| ConfigError {
            message: format!("family.kind: {e}"),
        })?;
    let count = cfg.req_usize("blocks.count")?;
    if count == 0 {
        return err("blocks.count must be >= 1");
    }
    let mut blocks = Vec::with_capacity(count);
    for j in 1..=count {
        let pre = format!("blocks.{j}");
        let m = cfg.usize_or(&format!("{pre}.m"), 1)? as u32;
        let alpha = cfg.f64_or(&format!("{pre}.alpha"), 0.0)?;
        let beta = cfg.f64_or(&format!("{pre}.beta"), 0.0)?;
        let role_kind = match (kind, cfg.get(&format!("{pre}.role"))) {
            (FamilyKind::Composed, Some("riesz")) => FamilyKind::RieszFull,
            (FamilyKind::Composed, Some("fourier")) => FamilyKind::FourierWeighted,
            (FamilyKind::Composed, other) => {
                return err(format!(
                    "{pre}.role must be `riesz` or `fourier` for composed families, got {other:?}"
                ))
            }
            (k, _) => k,
        };
        let block = match role_kind {
            FamilyKind::RieszFull | FamilyKind::RieszInterior | FamilyKind::RieszExterior => {
                let gamma = cfg.req_f64(&format!("{pre}.gamma")).map_err(|_| ConfigError {
                    message: format!("{pre}.gamma: required for Riesz blocks"),
                })?;
                BlockParams::riesz(m, alpha, beta, gamma)
            }
            FamilyKind::Mixture => {
                let gamma = cfg.req_f64(&format!("{pre}.gamma")).map_err(|_| ConfigError {
                    message: format!("{pre}.gamma: required for mixture blocks"),
                })?;
                BlockParams::mixture(m, alpha, beta, gamma)
            }
            FamilyKind::LogRiesz => {
                let delta = cfg.req_f64(&format!("{pre}.delta")).map_err(|_| ConfigError {
                    message: format!("{pre}.delta: required for log-Riesz blocks"),
                })?;
                let s = cfg.get(&format!("{pre}.slow_vary")).unwrap_or("one");
                BlockParams::log_riesz(m, alpha, delta, s)
            }
            FamilyKind::FourierWeighted => BlockParams::fourier(m, alpha, beta),
            FamilyKind::FourierSlowVary => {
                let l = cfg.req(&format!("{pre}.slow_vary_l"))?;
                let mm = cfg.req(&format!("{pre}.slow_vary_m"))?;
                BlockParams::fourier_slow_vary(m, alpha, beta, l, mm)
            }
            FamilyKind::Composed => unreachable!("resolved to a role above"),
        };
        blocks.push(block);
    }
    let partition = match kind {
        FamilyKind::Composed => {
            let riesz: Vec<usize> = (1..=count)
                .filter(|j| cfg.get(&format!("blocks.{j}.role")) == Some("riesz"))
                .map(|j| j - 1)
                .collect();
            let fourier: Vec<usize> = (1..=count)
                .filter(|j| cfg.get(&format!("blocks.{j}.role")) == Some("fourier"))
                .map(|j| j - 1)
                .collect();
            Some(Partition::new(riesz, fourier))
        }
        _ => None,
    };
    let radius = match kind {
        FamilyKind::RieszInterior | FamilyKind::RieszExterior => {
            Some(cfg.req_f64("family.radius")?)
        }
        _ => None,
    };
    let margin = cfg.f64_or("tolerances.admissibility", 1e-9)?;
    OperatorFamily::new(kind, blocks, partition, radius)
        .map(|f| f.with_margin(margin))
        .map_err(|e| ConfigError {
            message: format!("family: {e}"),
        })
}

/// Per-axis sample grids from `grid.<j>.*`.
pub fn build_axes(cfg: &Config, l: usize) -> Result<Vec<Axis>, ConfigError> {
    let mut axes = Vec::with_capacity(l);
    for j in 1..=l {
        let pre = format!("grid.{j}");
        let kind = cfg.get(&format!("{pre}.kind")).unwrap_or("graded");
        let axis = match kind {
            "uniform" => Axis::uniform(
                cfg.req_f64(&format!("{pre}.min"))?,
                cfg.req_f64(&format!("{pre}.max"))?,
                cfg.req_usize(&format!("{pre}.points"))?,
            ),
            "graded" => Axis::symmetric_graded(
                cfg.f64_or(&format!("{pre}.radius"), 8.0)?,
                cfg.usize_or(&format!("{pre}.per_side"), 240)?,
                cfg.f64_or(&format!("{pre}.grading"), 2.0)?,
            ),
            "symlog" => Axis::symmetric_log(
                cfg.f64_or(&format!("{pre}.radius"), 4.0)?,
                cfg.req_f64(&format!("{pre}.min_abs"))?,
                cfg.f64_or(&format!("{pre}.per_decade"), 2.5)?,
            ),
            other => return err(format!("{pre}.kind: unknown axis kind `{other}`")),
        };
        axes.push(axis.map_err(|e| ConfigError {
            message: format!("{pre}: {e}"),
        })?);
    }
    Ok(axes)
}

/// Exponent grid from `pgrid.*`.
pub fn build_pgrid(cfg: &Config, l: usize) -> Result<PGrid, ConfigError> {
    let points = cfg.usize_or("pgrid.points", 7)?;
    let offset = cfg.f64_or("pgrid.offset", 1e-3)?;
    let mut ranges = Vec::with_capacity(l);
    for j in 1..=l {
        ranges.push((
            cfg.req_f64(&format!("pgrid.{j}.min"))?,
            cfg.req_f64(&format!("pgrid.{j}.max"))?,
        ));
    }
    PGrid::log_spaced(&ranges, points, offset).map_err(|e| ConfigError {
        message: format!("pgrid: {e}"),
    })
}

/// Witness family from `search.*` on the given axes.
pub fn build_test_family(cfg: &Config, axes: Vec<Axis>) -> Result<TestFamily, ConfigError> {
    let kind = cfg.get("search.family").unwrap_or("power_cutoff");
    match kind {
        "power_cutoff" => Ok(TestFamily::power_cutoff(
            axes,
            (
                cfg.f64_or("search.a.min", -0.6)?,
                cfg.f64_or("search.a.max", -0.12)?,
            ),
            (
                cfg.f64_or("search.radius.min", 1.0)?,
                cfg.f64_or("search.radius.max", 1.0)?,
            ),
        )),
        "dilated_gaussian" => Ok(TestFamily::dilated_gaussian(
            axes,
            (
                cfg.f64_or("search.lambda.min", 0.25)?,
                cfg.f64_or("search.lambda.max", 4.0)?,
            ),
        )),
        "factorized_bump" => Ok(TestFamily::factorized_bump(
            axes,
            (
                cfg.f64_or("search.a.min", 0.5)?,
                cfg.f64_or("search.a.max", 4.0)?,
            ),
            (
                cfg.f64_or("search.radius.min", 0.5)?,
                cfg.f64_or("search.radius.max", 2.0)?,
            ),
        )),
        other => err(format!("search.family: unknown family `{other}`")),
    }
}

pub fn build_plan(cfg: &Config) -> Result<QuadraturePlan, ConfigError> {
    Ok(QuadraturePlan {
        target_tol: cfg.f64_or("tolerances.quadrature", 1e-7)?,
        levels: cfg.usize_or("tolerances.levels", 16)? as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# comment line
run.label = demo
family.kind = riesz_full
blocks.count = 1
blocks.1.alpha = 0.0
blocks.1.beta = 0.0
blocks.1.gamma = 0.5
";

    #[test]
    fn parse_serialize_round_trip() {
        let a = Config::parse(SAMPLE).unwrap();
        let b = Config::parse(&a.serialize()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn missing_field_names_block() {
        let text = SAMPLE.replace("blocks.1.gamma = 0.5\n", "");
        let cfg = Config::parse(&text).unwrap();
        let e = build_family(&cfg).unwrap_err();
        assert!(e.message.contains("blocks.1.gamma"), "{e}");
    }

    #[test]
    fn rejects_duplicate_keys() {
        let text = format!("{SAMPLE}run.label = twice\n");
        assert!(Config::parse(&text).is_err());
    }

    #[test]
    fn builds_family() {
        let cfg = Config::parse(SAMPLE).unwrap();
        let fam = build_family(&cfg).unwrap();
        assert_eq!(fam.kind(), FamilyKind::RieszFull);
        assert_eq!(fam.len(), 1);
    }
}
