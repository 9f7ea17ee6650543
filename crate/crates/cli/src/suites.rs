//! The verification suites behind `hphi verify` and `hphi space-info`.

use std::fmt::Write as _;

use hphi_core::bargmann::egorov_guillemin_check;
use hphi_core::basis::{gram_matrix, MultiIndexSet};
use hphi_core::heat::{berezin_symbol, sw_diagnostic};
use hphi_core::operators::{
    bound_report, deformation_residuals, deformation_sweep, diagonal_sum, diagonal_sum_polar, toeplitz_matrix,
    weyl_conjugation_check, weyl_identity_checks, TruncationPolicy,
};
use hphi_core::quadrature::{gauss_hermite_rule, QuadratureRule};
use hphi_core::symbols::{PlaneWaveSum, Symbol};
use hphi_core::{CMat, SpaceContext, C64};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::report::{num, Cell, RunReport, Sense, Table};

pub const SUITES: [&str; 7] = ["gram", "weyl", "bound", "diag", "deformation", "egorov", "sw"];

fn fmt_c(z: C64) -> String {
    format!("{}{:+.11e}i", num(z.re), z.im)
}

fn fmt_cvec(v: &[C64]) -> String {
    v.iter().map(|z| fmt_c(*z)).collect::<Vec<_>>().join(";")
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn context(cfg: &ExperimentConfig, h: f64) -> CliResult<SpaceContext> {
    Ok(SpaceContext::new(cfg.phase_matrices()?, h)?)
}

fn rule(cfg: &ExperimentConfig) -> CliResult<QuadratureRule> {
    Ok(gauss_hermite_rule(cfg.order)?)
}

pub fn run(cfg: &ExperimentConfig, suite: &str) -> CliResult<RunReport> {
    let mut report = RunReport::new(suite, cfg.seed, cfg.to_toml());
    match suite {
        "space-info" => space_info(cfg, &mut report)?,
        "gram" => gram(cfg, &mut report)?,
        "weyl" => weyl(cfg, &mut report)?,
        "bound" => bound(cfg, &mut report)?,
        "diag" => diag(cfg, &mut report)?,
        "deformation" => deformation(cfg, &mut report)?,
        "egorov" => egorov(cfg, &mut report)?,
        "sw" => sw(cfg, &mut report)?,
        other => return Err(CliError::Config(format!("unknown suite {other:?}"))),
    }
    Ok(report)
}

/// Derived geometry and its internal identities. `h` defaults to 1 since the
/// geometry does not depend on it.
fn space_info(cfg: &ExperimentConfig, report: &mut RunReport) -> CliResult<()> {
    let ctx = context(cfg, cfg.h.unwrap_or(1.0))?;
    let tol = cfg.tolerances.geometry;
    let n = ctx.n();
    let mut q = Table::new(&["quantity", "row", "col", "re", "im"]);
    for (name, m) in [("phi_xxbar", ctx.phi_xxbar()), ("phi_xx", ctx.phi_xx()), ("r", ctx.r())] {
        for i in 0..n {
            for j in 0..n {
                q.push(vec![name.into(), i.into(), j.into(), m[(i, j)].re.into(), m[(i, j)].im.into()]);
            }
        }
    }
    for (name, v) in [("c_phi", ctx.c_phi()), ("c_big_phi", ctx.c_big_phi()), ("det_r_abs", ctx.det_r_abs())] {
        q.push(vec![name.into(), 0usize.into(), 0usize.into(), v.into(), 0.0.into()]);
    }
    report.table("quantities", q);

    let rr = ctx.r().adjoint() * ctx.r();
    let levi = ctx.phi_xxbar().map(|z| z.conj());
    report.check("R*R = conj(phi_xxbar)", "", (rr - &levi).norm() / levi.norm(), tol, Sense::AtMost);
    let cphi = ctx.c_big_phi();
    report.check("C_Phi closed forms agree", "", (cphi - ctx.c_big_phi_alternative()).abs() / cphi, tol, Sense::AtMost);

    let mut pts = Table::new(&["point", "phi", "phi_from_max", "r_norm_form", "kappa_x", "kappa_theta", "lambda_residual"]);
    let (mut w1, mut w2, mut lam) = (0.0f64, 0.0f64, 0.0f64);
    for x in cfg.points()? {
        let phi = ctx.phi_weight(&x);
        let from_max = ctx.phi_weight_from_max(&x);
        let rx: f64 = ctx.apply_r(&x).iter().map(|v| v.norm_sqr()).sum();
        let qx: C64 = x.iter().zip((ctx.phi_xx() * nalgebra_vec(&x)).iter()).map(|(a, b)| a * b).sum();
        let alt = rx + qx.re;
        // (x, ξ) = (Re X, Im X) as a real phase-space point
        let re: Vec<f64> = x.iter().map(|z| z.re).collect();
        let im: Vec<f64> = x.iter().map(|z| z.im).collect();
        let (kx, kt) = ctx.kappa_t(&re, &im);
        let res = ctx.lambda_phi_residual(&re, &im);
        let scale = 1.0 + phi.abs();
        w1 = w1.max((phi - from_max).abs() / scale);
        w2 = w2.max((phi - alt).abs() / scale);
        lam = lam.max(res);
        pts.push(vec![fmt_cvec(&x).into(), phi.into(), from_max.into(), alt.into(), fmt_cvec(&kx).into(), fmt_cvec(&kt).into(), res.into()]);
    }
    report.table("points", pts);
    if !cfg.grids.points.is_empty() {
        report.check("Phi = max_y(-Im phi)", "grids.points", w1, tol, Sense::AtMost);
        report.check("Phi = |RX|^2 + Re<X, phi_xx X>", "grids.points", w2, tol, Sense::AtMost);
        report.check("kappa_T maps into Lambda_Phi", "grids.points as (x, xi)", lam, tol, Sense::AtMost);
    }
    Ok(())
}

fn nalgebra_vec(x: &[C64]) -> hphi_core::CVec {
    hphi_core::CVec::from_column_slice(x)
}

fn gram(cfg: &ExperimentConfig, report: &mut RunReport) -> CliResult<()> {
    let ctx = context(cfg, cfg.h()?)?;
    let set = MultiIndexSet::new(ctx.n(), cfg.truncation()?);
    let g = gram_matrix(&ctx, &set, &rule(cfg)?)?;
    let mut t = Table::new(&["i", "j", "alpha_i", "alpha_j", "re", "im"]);
    let fmt_alpha = |a: &[usize]| a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
    for i in 0..set.len() {
        for j in 0..set.len() {
            t.push(vec![i.into(), j.into(), fmt_alpha(set.get(i)).into(), fmt_alpha(set.get(j)).into(), g[(i, j)].re.into(), g[(i, j)].im.into()]);
        }
    }
    report.table("matrix", t);
    let dev = max_abs(&(g - CMat::identity(set.len(), set.len())));
    let inputs = format!("N={} order={}", set.degree(), cfg.order);
    report.check("gram max |G - I|", inputs, dev, cfg.tolerances.gram, Sense::AtMost);
    Ok(())
}

fn weyl(cfg: &ExperimentConfig, report: &mut RunReport) -> CliResult<()> {
    let ctx = context(cfg, cfg.h()?)?;
    let degree = cfg.truncation()?;
    let policy: TruncationPolicy = cfg.policy.into();
    let r = rule(cfg)?;
    let lambdas = cfg.lambdas()?;
    if lambdas.is_empty() {
        return Err(CliError::Config("grids.lambdas is required for the weyl suite".into()));
    }
    let symbols = cfg.plane_wave_symbols()?;
    let tol = cfg.tolerances.weyl;
    let mut t = Table::new(&["lambda", "identity", "symbol", "error"]);
    for l in &lambdas {
        let lam = fmt_cvec(l);
        let w = weyl_identity_checks(&ctx, l, degree, policy, &r)?;
        t.push(vec![lam.clone().into(), "unitarity".into(), "".into(), w.unitarity.into()]);
        t.push(vec![lam.clone().into(), "adjoint".into(), "".into(), w.adjoint.into()]);
        report.check("W* W = I", format!("lambda={lam}"), w.unitarity, tol, Sense::AtMost);
        report.check("W_lambda* = W_-lambda", format!("lambda={lam}"), w.adjoint, tol, Sense::AtMost);
        for (name, b) in &symbols {
            let e = weyl_conjugation_check(&ctx, &b.clone().into(), l, degree, policy, &r)?;
            t.push(vec![lam.clone().into(), "conjugation".into(), name.clone().into(), e.into()]);
            report.check("W* T_b W = T_b(.+lambda)", format!("lambda={lam} symbol={name}"), e, tol, Sense::AtMost);
        }
    }
    report.table("identities", t);
    Ok(())
}

fn bound(cfg: &ExperimentConfig, report: &mut RunReport) -> CliResult<()> {
    let ctx = context(cfg, cfg.h()?)?;
    let r = rule(cfg)?;
    let schedule = cfg.n_schedule()?;
    let t_grid = cfg.t_grid()?;
    let x_grid = cfg.x_grid();
    let tol = &cfg.tolerances;
    let mut norms = Table::new(&["symbol", "N", "norm"]);
    let mut rows = Table::new(&["symbol", "t", "sup_b_t", "bound", "pass"]);
    for (name, b) in cfg.require_symbols()? {
        let rep = bound_report(&ctx, &b.into(), t_grid, &x_grid, schedule, &r, tol.bound_slack)?;
        for (n, v) in &rep.norms.table {
            norms.push(vec![name.clone().into(), (*n).into(), (*v).into()]);
        }
        let converged = rep.norms.last_rel_change < tol.norm_rel;
        let warning = (!converged).then(|| format!("NotConverged: compression norm still moving at N={}", schedule.last().unwrap_or(&0)));
        report.check_flag(
            "compression norm Cauchy-converged",
            format!("symbol={name}"),
            rep.norms.last_rel_change,
            converged,
            format!("< {}", num(tol.norm_rel)),
            warning,
        );
        for row in &rep.rows {
            rows.push(vec![name.clone().into(), row.t.into(), row.lhs.into(), row.rhs.into(), row.pass.into()]);
            report.check(
                "sup |b_t| <= (1+slack) M_N / (2t-1)^n",
                format!("symbol={name} t={}", num(row.t)),
                row.lhs,
                row.rhs,
                Sense::AtMost,
            );
        }
    }
    report.table("norms", norms);
    report.table("bound", rows);
    Ok(())
}

fn diag(cfg: &ExperimentConfig, report: &mut RunReport) -> CliResult<()> {
    let ctx = context(cfg, cfg.h()?)?;
    let r = rule(cfg)?;
    let set = MultiIndexSet::new(ctx.n(), cfg.truncation()?);
    let spec = &cfg.diag;
    if spec.k_max > set.degree() {
        return Err(CliError::Config("diag.k_max exceeds truncation".into()));
    }
    let tol = &cfg.tolerances;
    let one: Symbol = PlaneWaveSum::constant(ctx.n(), C64::new(1.0, 0.0)).into();
    let id = toeplitz_matrix(&ctx, &one, &set, &r)?.entries;
    let dev = max_abs(&(id - CMat::identity(set.len(), set.len())));
    report.check("T_1 = I", format!("N={}", set.degree()), dev, tol.identity, Sense::AtMost);

    let mut t = Table::new(&["symbol", "quantity", "k", "matrix_re", "matrix_im", "reference_re", "reference_im", "abs_error"]);
    let origin = vec![C64::new(0.0, 0.0); ctx.n()];
    for (name, p) in cfg.require_symbols()? {
        let b: Symbol = p.into();
        let m = toeplitz_matrix(&ctx, &b, &set, &r)?;
        let e00 = m.entries[(0, 0)];
        let b1 = berezin_symbol(&ctx, &b)?.eval(&origin)?;
        let err = (e00 - b1).norm();
        t.push(vec![name.clone().into(), "entry00_vs_b1".into(), 0usize.into(), e00.re.into(), e00.im.into(), b1.re.into(), b1.im.into(), err.into()]);
        report.check("T_b[0,0] = b_1(0)", format!("symbol={name}"), err, tol.identity, Sense::AtMost);
        for k in 0..=spec.k_max {
            let lhs = diagonal_sum(&m, k)?;
            let rhs = diagonal_sum_polar(&ctx, &b, k, spec.radial_order, spec.angular_points)?;
            let err = (lhs - rhs).norm();
            t.push(vec![name.clone().into(), "diagonal_sum".into(), k.into(), lhs.re.into(), lhs.im.into(), rhs.re.into(), rhs.im.into(), err.into()]);
            report.check("sum_{|a|=k} <T_b u_a, u_a> identity", format!("symbol={name} k={k}"), err, tol.diag, Sense::AtMost);
        }
    }
    report.table("diag", t);
    Ok(())
}

fn deformation(cfg: &ExperimentConfig, report: &mut RunReport) -> CliResult<()> {
    let spec = cfg.deformation.as_ref().ok_or_else(|| CliError::Config("[deformation] is required".into()))?;
    let a = cfg.symbol(&spec.a)?;
    let b = cfg.symbol(&spec.b)?;
    let phase = cfg.phase_matrices()?;
    let h_list = cfg.h_list()?;
    let degree = cfg.truncation()?;
    let policy: TruncationPolicy = cfg.policy.into();
    let r = rule(cfg)?;
    let tol = &cfg.tolerances;
    let sweep = deformation_sweep(&phase, &a, &b, h_list, degree, policy, &r)?;
    let mut t = Table::new(&["h", "r1", "r2", "const_a_r1", "const_a_r2", "a_eq_b_r2"]);
    let one: Symbol = PlaneWaveSum::constant(cfg.n(), C64::new(1.0, 0.0)).into();
    let mut degenerate = 0.0f64;
    for &(h, r1, r2) in &sweep.rows {
        let ctx = SpaceContext::new(phase.clone(), h)?;
        let (c1, c2) = deformation_residuals(&ctx, &one, &b, degree, policy, &r)?;
        let (_, s2) = deformation_residuals(&ctx, &a, &a, degree, policy, &r)?;
        degenerate = degenerate.max(c1).max(c2).max(s2);
        t.push(vec![h.into(), r1.into(), r2.into(), c1.into(), c2.into(), s2.into()]);
    }
    report.table("residuals", t);
    let mut s = Table::new(&["residual", "slope"]);
    for (label, v) in [("r1", sweep.slope_r1), ("r2", sweep.slope_r2)] {
        s.push(vec![label.into(), v.map_or(Cell::Text("undefined".into()), Cell::Real)]);
    }
    report.table("slopes", s);
    let inputs = format!("a={} b={} N={degree}", spec.a, spec.b);
    report.check_range("log-log slope of r1", inputs.clone(), sweep.slope_r1, tol.slope_min, tol.slope_max);
    report.check_range("log-log slope of r2", inputs, sweep.slope_r2, tol.slope_min, tol.slope_max);
    report.check("degenerate residuals (constant a; a = b commutator)", format!("b={}", spec.b), degenerate, tol.degenerate, Sense::AtMost);
    Ok(())
}

fn egorov(cfg: &ExperimentConfig, report: &mut RunReport) -> CliResult<()> {
    let ctx = context(cfg, cfg.h()?)?;
    let r = rule(cfg)?;
    let points = cfg.points()?;
    let gaussians = cfg.gaussian_fns()?;
    if points.is_empty() || gaussians.is_empty() {
        return Err(CliError::Config("the egorov suite needs grids.points and [[gaussians]]".into()));
    }
    let mut t = Table::new(&["symbol", "gaussian", "point", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "rel_error"]);
    for (name, b) in cfg.require_symbols()? {
        for (gi, u) in gaussians.iter().enumerate() {
            let rep = egorov_guillemin_check(&ctx, &b, u, &points, &r)?;
            for row in &rep.rows {
                t.push(vec![
                    name.clone().into(),
                    gi.into(),
                    fmt_cvec(&row.x).into(),
                    row.lhs.re.into(),
                    row.lhs.im.into(),
                    row.rhs.re.into(),
                    row.rhs.im.into(),
                    row.rel_error.into(),
                ]);
            }
            report.check("T_b T = T Op(b'_{1/2} o kappa_T)", format!("symbol={name} gaussian={gi}"), rep.max_rel_error, cfg.tolerances.egorov, Sense::AtMost);
        }
    }
    report.table("egorov", t);
    Ok(())
}

fn sw(cfg: &ExperimentConfig, report: &mut RunReport) -> CliResult<()> {
    let spec = cfg.sw.as_ref().ok_or_else(|| CliError::Config("[sw] is required".into()))?;
    let ctx = context(cfg, cfg.h()?)?;
    let b = cfg.symbol(&spec.symbol)?;
    let x_grid = cfg.x_grid();
    let tol = cfg.tolerances.sw_rel;
    let mut t = Table::new(&["per_axis", "l1_estimate", "rel_change"]);
    let mut prev: Option<f64> = None;
    let mut last_change = f64::INFINITY;
    let mut estimate = f64::NAN;
    for (k, grid) in cfg.lambda_grids()? {
        estimate = sw_diagnostic(&ctx, &b, &grid, &x_grid)?.l1_estimate;
        let change = prev.map_or(f64::NAN, |p| (estimate - p).abs() / p.abs());
        if prev.is_some() {
            last_change = change;
        }
        t.push(vec![k.into(), estimate.into(), change.into()]);
        prev = Some(estimate);
    }
    report.table("l1", t);
    let inputs = format!("symbol={}", spec.symbol);
    report.check("L1 estimate settles under refinement", inputs.clone(), last_change, tol, Sense::AtMost);
    if let Some(target) = spec.target {
        let mut label = String::new();
        let _ = write!(label, "L1 estimate matches {}", num(target));
        report.check(label, inputs, (estimate / target - 1.0).abs(), tol, Sense::AtMost);
    }
    Ok(())
}
