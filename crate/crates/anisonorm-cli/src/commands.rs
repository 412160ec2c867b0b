//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anisonorm::container;
use anisonorm::error::{EstimatorError, ExponentError, OperatorError};
use anisonorm::estimator::{
    calibrate_envelope, endpoint_ladder, fit_blowup, scan_points, search_lower_bound,
    verify_transfer, EndpointRef, EndpointSide, KEstimate, SearchSettings, TestFamily,
};
use anisonorm::exponent::{BlockParams, OperatorFamily, Partition};
use anisonorm::grid::{dilate, mixed_norm, tensor_product, Axis, GridFunction};
use anisonorm::operators::{
    apply_riesz_block, apply_tensor_operator, BlockDomain, BlockOp, BlockOperatorSpec,
    QuadraturePlan,
};
use anisonorm::psi::{gls_norm, PGrid, PsiFunction};
use anisonorm::table::{self, fmt_g, Table};

use crate::config::{
    build_axes, build_family, build_pgrid, build_plan, build_test_family, Config, ConfigError,
};

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// exit 1: config file problems (parse, missing/invalid fields, IO)
    Config(String),
    /// exit 2: exponent-range problems (inadmissible p, invalid parameters)
    Admissibility(String),
    /// exit 3: numeric/data problems (quadrature, containers, output IO)
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Admissibility(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Admissibility(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ExponentError> for CliError {
    fn from(e: ExponentError) -> Self {
        CliError::Admissibility(e.to_string())
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Exponent(inner) => inner.into(),
            EstimatorError::Operator(OperatorError::Exponent(inner)) => inner.into(),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        match e {
            OperatorError::Exponent(inner) => inner.into(),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

fn write_out(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Numeric(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, body)
        .map_err(|e| CliError::Numeric(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn stamp(t: &mut Table, cfg: &Config, command: &str) {
    t.comment(format!("config_sha256 = {}", cfg.hash()));
    t.comment(format!("label = {}", cfg.label()));
    t.comment(format!("command = {command}"));
}

fn out_dir(cfg: &Config, cli_out: Option<&Path>) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(cfg.get("out.dir").unwrap_or("out")))
}

/// `exponents`: per-block endpoint table plus a sampled (p, q, envelope) CSV.
pub fn cmd_exponents(cfg: &Config, cli_out: Option<&Path>) -> Result<(), CliError> {
    let family = build_family(cfg)?;
    let dir = out_dir(cfg, cli_out);
    let ends = family.endpoints();

    let mut endpoints = table::endpoint_table(&ends);
    stamp(&mut endpoints, cfg, "exponents");
    print!("{}", endpoints.to_csv());
    write_out(&dir, "endpoints.csv", &endpoints.to_csv())?;

    let pgrid = build_pgrid(cfg, family.len())?;
    for p in pgrid.points() {
        let report = family.admissible(&p);
        if !report.pass {
            return Err(ExponentError::InadmissibleP(report.violations).into());
        }
    }
    let mut envelope = table::envelope_table(&family, &pgrid.points());
    stamp(&mut envelope, cfg, "exponents");
    let path = write_out(&dir, "envelope.csv", &envelope.to_csv())?;
    println!("wrote {} ({} rows)", path.display(), envelope.rows());
    Ok(())
}

/// `apply`: read a grid-function container, apply the family operator, write
/// the transformed container plus a metadata sidecar.
pub fn cmd_apply(
    cfg: &Config,
    input: &Path,
    output: &Path,
    cli_out: Option<&Path>,
) -> Result<(), CliError> {
    let family = build_family(cfg)?;
    let plan = build_plan(cfg)?;
    let f = container::load(input)
        .map_err(|e| CliError::Numeric(format!("{}: {e}", input.display())))?;
    let tf = apply_tensor_operator(&family, &f, &plan)?;
    container::save(output, &tf)
        .map_err(|e| CliError::Numeric(format!("{}: {e}", output.display())))?;

    let mut meta = String::new();
    meta.push_str(&format!("config_sha256 = {}\n", cfg.hash()));
    meta.push_str(&format!("label = {}\n", cfg.label()));
    meta.push_str(&format!("family = {}\n", family.kind()));
    meta.push_str(&format!("quadrature_tolerance = {}\n", fmt_g(plan.target_tol)));
    meta.push_str(&format!("geometric_levels = {}\n", plan.levels));
    meta.push_str("axis_order = x1 innermost\n");
    for (j, r) in f.truncation_radii().iter().enumerate() {
        meta.push_str(&format!("input_truncation_radius_{} = {}\n", j + 1, fmt_g(*r)));
    }
    for (j, r) in tf.truncation_radii().iter().enumerate() {
        meta.push_str(&format!("output_truncation_radius_{} = {}\n", j + 1, fmt_g(*r)));
    }
    let sidecar = output.with_extension("meta.txt");
    fs::write(&sidecar, &meta)
        .map_err(|e| CliError::Numeric(format!("{}: {e}", sidecar.display())))?;
    let _ = out_dir(cfg, cli_out);
    println!(
        "wrote {} and {}",
        output.display(),
        sidecar.display()
    );
    Ok(())
}

fn search_settings(cfg: &Config) -> Result<SearchSettings, ConfigError> {
    Ok(SearchSettings {
        sweeps: cfg.usize_or("search.sweeps", 3)?,
        evals: cfg.usize_or("search.evals", 24)?,
    })
}

/// `scan`: k-curve lower bounds over a ladder (with a blow-up fit) or a grid.
pub fn cmd_scan(cfg: &Config, cli_out: Option<&Path>) -> Result<(), CliError> {
    let family = build_family(cfg)?;
    let plan = build_plan(cfg)?;
    let dir = out_dir(cfg, cli_out);
    let axes = build_axes(cfg, family.len())?;
    let search = search_settings(cfg)?;
    let mode = cfg.get("scan.mode").unwrap_or("ladder");

    let l = family.len();
    match mode {
        "grid" => {
            let pgrid = build_pgrid(cfg, l)?;
            let test_family = build_test_family(cfg, axes)?;
            let curve = scan_points(&family, &pgrid.points(), &test_family, &search, &plan)?;
            let c_hat = calibrate_envelope(&curve, &family)?;
            let mut t = table::k_curve_table(&curve, l);
            stamp(&mut t, cfg, "scan");
            t.comment(format!("c_hat = {}", fmt_g(c_hat)));
            let path = write_out(&dir, "k_curve.csv", &t.to_csv())?;
            println!("wrote {} ({} points, c_hat = {})", path.display(), curve.len(), fmt_g(c_hat));
        }
        "ladder" => {
            let block = cfg.usize_or("scan.block", 1)? - 1;
            if block >= l {
                return Err(CliError::Config(format!(
                    "scan.block = {} out of range for {l} blocks",
                    block + 1
                )));
            }
            let ends = family.endpoints();
            let side = match cfg.get("scan.endpoint").unwrap_or("p_plus") {
                "p_plus" => EndpointSide::Upper,
                "p_minus" => EndpointSide::Lower,
                other => {
                    return Err(CliError::Config(format!(
                        "scan.endpoint: `{other}` (expected p_plus or p_minus)"
                    )))
                }
            };
            let value = match side {
                EndpointSide::Upper => ends[block].p_plus,
                EndpointSide::Lower => ends[block].p_minus,
            };
            if !value.is_finite() {
                return Err(CliError::Config(
                    "scan.endpoint: the selected endpoint is infinite".into(),
                ));
            }
            let endpoint = EndpointRef { block, side, value };
            let mut base = vec![0.0; l];
            for (j, b) in base.iter_mut().enumerate() {
                if j != block {
                    *b = cfg.req_f64(&format!("scan.base.{}", j + 1))?;
                }
            }
            let eps0 = cfg.f64_or("scan.eps0", 0.2)?;
            let steps = cfg.usize_or("scan.steps", 6)?;
            let points = endpoint_ladder(&base, &endpoint, eps0, steps);

            let auto_floor = cfg.get("search.a.auto_floor").unwrap_or("true") == "true"
                && cfg.get("search.family").unwrap_or("power_cutoff") == "power_cutoff";
            let floor_eta = cfg.f64_or("scan.floor_eta", 0.25)?;
            let mut curve: Vec<KEstimate> = Vec::with_capacity(points.len());
            for p in &points {
                let test_family = if auto_floor {
                    // keep 1 + a p positive so witnesses stay genuine
                    // near-extremal profiles on the truncated grid
                    let eps = (p[block] - value).abs();
                    let floor = -(1.0 - floor_eta * eps) / p[block];
                    TestFamily::power_cutoff(
                        axes.clone(),
                        (floor, cfg.f64_or("search.a.max", -0.12)?),
                        (
                            cfg.f64_or("search.radius.min", 1.0)?,
                            cfg.f64_or("search.radius.max", 1.0)?,
                        ),
                    )
                } else {
                    build_test_family(cfg, axes.clone())?
                };
                curve.push(search_lower_bound(&family, p, &test_family, &search, &plan)?);
            }
            curve.sort_by(|a, b| a.p.partial_cmp(&b.p).expect("finite"));

            let fit = fit_blowup(&curve, endpoint)?;
            let expected = expected_slope(&family, block, side, &ends[block]);
            let mut kt = table::k_curve_table(&curve, l);
            stamp(&mut kt, cfg, "scan");
            write_out(&dir, "k_curve.csv", &kt.to_csv())?;
            let mut bt = table::blowup_table(&[(fit.clone(), expected)]);
            stamp(&mut bt, cfg, "scan");
            let path = write_out(&dir, "blowup.csv", &bt.to_csv())?;
            println!(
                "wrote {} (slope {} expected {} residual {})",
                path.display(),
                fmt_g(fit.fitted_slope),
                fmt_g(expected),
                fmt_g(fit.residual)
            );
        }
        other => {
            return Err(CliError::Config(format!(
                "scan.mode: `{other}` (expected ladder or grid)"
            )))
        }
    }
    Ok(())
}

/// Theory slope of the endpoint blow-up for the scanned block, from the
/// family's envelope shape: full-space Riesz diverges at both endpoints with
/// exponent kappa, the interior family only at p_plus, the exterior family
/// only at p_minus, and the Fourier shape diverges at p_minus with the
/// lower-bound exponent.
fn expected_slope(
    family: &OperatorFamily,
    block: usize,
    side: EndpointSide,
    range: &anisonorm::exponent::BlockRange,
) -> f64 {
    use anisonorm::exponent::{BlockRole, RieszDomain};
    match (family.block_role(block), side) {
        (BlockRole::Riesz(RieszDomain::Interior), EndpointSide::Lower) => 0.0,
        (BlockRole::Riesz(RieszDomain::Exterior), EndpointSide::Upper) => 0.0,
        (BlockRole::Fourier | BlockRole::Mixture, EndpointSide::Upper) => 0.0,
        _ => -range.kappa,
    }
}

/// `transfer`: calibrate the envelope on the witness family and check the
/// rescaled-norm inequality on holdout functions.
pub fn cmd_transfer(cfg: &Config, cli_out: Option<&Path>) -> Result<(), CliError> {
    let family = build_family(cfg)?;
    let plan = build_plan(cfg)?;
    let dir = out_dir(cfg, cli_out);
    let axes = build_axes(cfg, family.len())?;
    let pgrid = build_pgrid(cfg, family.len())?;
    for p in pgrid.points() {
        let report = family.admissible(&p);
        if !report.pass {
            return Err(ExponentError::InadmissibleP(report.violations).into());
        }
    }
    let search = search_settings(cfg)?;
    let calibration = build_test_family(cfg, axes.clone())?;

    let support: Vec<(f64, f64)> = pgrid
        .axes()
        .iter()
        .map(|a| (a[0] - 1e-9, a[a.len() - 1] + 1e-9))
        .collect();
    let psi = match cfg.get("transfer.psi").unwrap_or("one") {
        "one" => PsiFunction::continuous(support, |_| 1.0)
            .map_err(|e| CliError::Numeric(e.to_string()))?,
        other => {
            return Err(CliError::Config(format!(
                "transfer.psi: `{other}` (only `one` is built in)"
            )))
        }
    };

    let mut holdout = Vec::new();
    let mut labels = Vec::new();
    for lam in cfg.f64_list("transfer.holdout.gaussians")? {
        let f = TestFamily::dilated_gaussian(axes.clone(), (lam, lam));
        holdout.push(f.generate(&f.default_params())?);
        labels.push(format!("gaussian_lambda={lam}"));
    }
    for a in cfg.f64_list("transfer.holdout.cutoffs")? {
        let f = TestFamily::power_cutoff(axes.clone(), (a, a), (1.0, 1.0));
        holdout.push(f.generate(&f.default_params())?);
        labels.push(format!("cutoff_a={a}"));
    }

    let check = verify_transfer(&family, &psi, &calibration, &holdout, &pgrid, &search, &plan)?;
    let mut ct = table::k_curve_table(&check.calibration_curve, family.len());
    stamp(&mut ct, cfg, "transfer");
    write_out(&dir, "calibration.csv", &ct.to_csv())?;
    let mut tt = table::transfer_table(&check, &labels);
    stamp(&mut tt, cfg, "transfer");
    let path = write_out(&dir, "transfer.csv", &tt.to_csv())?;
    let worst = check.margins.iter().cloned().fold(0.0f64, f64::max);
    println!(
        "wrote {} (c_hat = {}, worst margin = {})",
        path.display(),
        fmt_g(check.c_hat),
        fmt_g(worst)
    );
    Ok(())
}

/// `verify`: run the built-in invariant suite on fixed small grids.
pub fn cmd_verify() -> Result<(), CliError> {
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool, detail: String| {
        if ok {
            println!("ok   {name} ({detail})");
        } else {
            println!("FAIL {name} ({detail})");
            failures += 1;
        }
    };
    let plan = QuadraturePlan::default();

    // mixed-norm factorization
    {
        let ax = Axis::uniform(-2.0, 3.0, 201).unwrap();
        let g1 = GridFunction::sample(vec![ax.clone()], |x| {
            if (0.0..=2.0).contains(&x[0]) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let g2 = GridFunction::sample(vec![ax], |x| (-x[0] * x[0]).exp()).unwrap();
        let f = tensor_product(&[g1.clone(), g2.clone()]).unwrap();
        let p = [2.0, 3.0];
        let joint = mixed_norm(&f, &p).unwrap();
        let split = mixed_norm(&g1, &p[..1]).unwrap() * mixed_norm(&g2, &p[1..]).unwrap();
        let err = (joint - split).abs() / split;
        check("factorization", err <= 1e-10, format!("err {err:.2e}"));
    }

    // diagonal identity
    {
        let ax = Axis::uniform(-3.0, 3.0, 101).unwrap();
        let f = GridFunction::sample(vec![ax.clone(), ax.clone()], |x| {
            (-(x[0] * x[0] + x[1] * x[1])).exp()
        })
        .unwrap();
        let p = 2.5;
        let iterated = mixed_norm(&f, &[p, p]).unwrap();
        let w = ax.trapezoid_weights();
        let mut s = 0.0;
        if let anisonorm::grid::Values::Real(a) = f.values() {
            for (idx, v) in a.indexed_iter() {
                s += w[idx[0]] * w[idx[1]] * v.abs().powf(p);
            }
        }
        let err = (iterated - s.powf(1.0 / p)).abs() / iterated;
        check("diagonal_identity", err <= 1e-10, format!("err {err:.2e}"));
    }

    // spike reduction
    {
        let ax = Axis::uniform(-6.0, 6.0, 241).unwrap();
        let f = GridFunction::sample(vec![ax], |x| (-x[0] * x[0]).exp()).unwrap();
        let grid = PGrid::log_spaced(&[(1.2, 3.0)], 5, 1e-4).unwrap();
        let a = gls_norm(&f, &PsiFunction::spike(vec![1.8]), &grid).unwrap();
        let b = mixed_norm(&f, &[1.8]).unwrap();
        check("spike_reduction", a.to_bits() == b.to_bits(), format!("{a} vs {b}"));
    }

    // norm dilation law
    {
        let ax = Axis::symmetric_graded(8.0, 120, 2.0).unwrap();
        let f = GridFunction::sample(vec![ax], |x| (-x[0] * x[0]).exp()).unwrap();
        let p = [1.7];
        let base = mixed_norm(&f, &p).unwrap();
        let got = mixed_norm(&dilate(&f, &[2.0]).unwrap(), &p).unwrap();
        let want = 2f64.powf(-1.0 / p[0]) * base;
        let err = (got - want).abs() / want;
        check("dilation_law", err <= 1e-10, format!("err {err:.2e}"));
    }

    // Riesz dilation covariance
    {
        let ax = Axis::symmetric_graded(10.0, 200, 2.0).unwrap();
        let f = GridFunction::sample(vec![ax], |x| (-x[0] * x[0]).exp()).unwrap();
        let (alpha, beta, gamma) = (0.2, 0.1, 0.4);
        let spec = BlockOperatorSpec::new(
            BlockOp::Riesz { alpha, beta, gamma },
            BlockDomain::FullLine,
            plan,
        )
        .unwrap();
        let lam = 2.0;
        let tf = dilate(&f, &[lam]).unwrap();
        let x = 0.9;
        let lhs = apply_riesz_block(&spec, &tf, x / lam).unwrap();
        let rhs = lam.powf(alpha + beta + gamma - 1.0) * apply_riesz_block(&spec, &f, x).unwrap();
        let err = (lhs - rhs).abs() / rhs.abs();
        check("riesz_covariance", err <= 5e-7, format!("err {err:.2e}"));
    }

    // interior + exterior = full decomposition
    {
        let ax = Axis::symmetric_graded(6.0, 140, 2.0).unwrap();
        let f = GridFunction::sample(vec![ax], |x| (-0.5 * x[0] * x[0]).exp()).unwrap();
        let mk = |domain| {
            BlockOperatorSpec::new(
                BlockOp::Riesz {
                    alpha: 0.3,
                    beta: 0.0,
                    gamma: 0.4,
                },
                domain,
                plan,
            )
            .unwrap()
        };
        let x = 1.1;
        let full = apply_riesz_block(&mk(BlockDomain::FullLine), &f, x).unwrap();
        let split = apply_riesz_block(&mk(BlockDomain::Interior(1.5)), &f, x).unwrap()
            + apply_riesz_block(&mk(BlockDomain::Exterior(1.5)), &f, x).unwrap();
        let err = (full - split).abs() / full.abs();
        check("domain_decomposition", err <= 1e-9, format!("err {err:.2e}"));
    }

    // exponent round trips across families
    {
        let families = vec![
            OperatorFamily::riesz_full(vec![BlockParams::riesz(1, 0.1, 0.2, 0.3)]).unwrap(),
            OperatorFamily::riesz_interior(vec![BlockParams::riesz(1, 0.1, 0.0, 0.5)], 1.0)
                .unwrap(),
            OperatorFamily::riesz_exterior(vec![BlockParams::riesz(2, 0.5, 0.2, 0.6)], 1.0)
                .unwrap(),
            OperatorFamily::log_riesz(vec![BlockParams::log_riesz(1, 0.5, 1.0, "one")]).unwrap(),
            OperatorFamily::fourier(vec![BlockParams::fourier(1, 0.3, 0.2)]).unwrap(),
            OperatorFamily::mixture(vec![BlockParams::mixture(1, 0.5, 0.25, 0.2)]).unwrap(),
        ];
        let probes = [1.4, 1.45, 1.5];
        let mut worst = 0.0f64;
        for fam in &families {
            for &p0 in &probes {
                let p = vec![p0; fam.len()];
                if !fam.admissible(&p).pass {
                    continue;
                }
                let q = fam.q_of_p(&p).unwrap();
                let back = fam.p_of_q(&q).unwrap();
                for (a, b) in p.iter().zip(&back) {
                    worst = worst.max((a - b).abs() / a);
                }
            }
        }
        check("exponent_round_trip", worst <= 1e-12, format!("worst {worst:.2e}"));
    }

    // composed envelope product identity
    {
        let blocks = vec![
            BlockParams::riesz(1, 0.0, 0.0, 0.5),
            BlockParams::fourier(1, 0.1, 0.2),
        ];
        let fam =
            OperatorFamily::composed(blocks.clone(), Partition::new(vec![0], vec![1])).unwrap();
        let p = vec![1.5, 1.6];
        let e = fam.envelope(&p).unwrap();
        let er = OperatorFamily::riesz_full(vec![blocks[0].clone()])
            .unwrap()
            .envelope(&p[..1])
            .unwrap();
        let ef = OperatorFamily::fourier(vec![blocks[1].clone()])
            .unwrap()
            .envelope(&p[1..])
            .unwrap();
        let err = (e.upper_shape - er.upper_shape * ef.upper_shape).abs() / e.upper_shape;
        check("composed_envelope_product", err <= 1e-12, format!("err {err:.2e}"));
    }

    if failures > 0 {
        Err(CliError::Numeric(format!(
            "{failures} invariant check(s) failed"
        )))
    } else {
        println!("all invariant checks passed");
        Ok(())
    }
}
