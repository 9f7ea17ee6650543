//! Galerkin matrices of Berezin-Toeplitz operators `T̃_b` and Weyl unitaries
//! `W_λ` in the orthonormal basis `u_α`, plus the identity, bound and
//! deformation checks built on them.
//!
//! Identities that involve products of matrices are evaluated with a
//! [`TruncationPolicy`]: the factors are assembled at degree `N + guard` and
//! the result is compared on degrees `≤ N − inner_drop`. Neither `W_λ` nor
//! `T̃_b` is banded in `α`, so without the guard the discarded tail of the
//! intermediate sum dominates the comparison.

use std::f64::consts::PI;

use crate::basis::{assemble, check_dim, galerkin_matrix, MultiIndexSet};
use crate::heat::{sup_norm_sampled, XGrid};
use crate::linalg::{max_abs_diff, spectral_norm};
use crate::quadrature::{gauss_laguerre_rule, QuadratureRule};
use crate::symbols::{poisson, q_form, Symbol};
use crate::{CMat, Error, PhaseMatrices, Result, SpaceContext, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub kind: &'static str,
    pub symbol: String,
    pub h: f64,
    pub t: Option<f64>,
    pub order: usize,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub truncation: MultiIndexSet,
    /// `entries[(β, α)] = ⟨A u_α, u_β⟩`.
    pub entries: CMat,
    pub provenance: Provenance,
}

impl OperatorMatrix {
    /// Leading principal block over degrees `≤ d`.
    pub fn block(&self, d: usize) -> CMat {
        let k = self.truncation.leading_len(d.min(self.truncation.degree()));
        self.entries.view((0, 0), (k, k)).into_owned()
    }

    pub fn hermitian_defect(&self) -> f64 {
        max_abs_diff(&self.entries, &self.entries.adjoint())
    }
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    spectral_norm(m)
}

fn leading(m: &CMat, set: &MultiIndexSet, d: usize) -> CMat {
    let k = set.leading_len(d.min(set.degree()));
    m.view((0, 0), (k, k)).into_owned()
}

pub fn describe(b: &Symbol) -> String {
    match b {
        Symbol::PlaneWaves(p) => format!("plane-waves[{}]", p.terms().len()),
        Symbol::Callable(_) => "callable".to_string(),
    }
}

/// `M[β, α] = ⟨b u_α, u_β⟩_{L²_Φ} = ⟨T̃_b u_α, u_β⟩_{H_Φ}`.
pub fn toeplitz_matrix(ctx: &SpaceContext, b: &Symbol, trunc: &MultiIndexSet, rule: &QuadratureRule) -> Result<OperatorMatrix> {
    if b.n() != ctx.n() {
        return Err(Error::DimensionMismatch { expected: ctx.n(), actual: b.n() });
    }
    if !b.in_class_t() {
        return Err(Error::UnsupportedSymbol("Toeplitz quantization needs a symbol in the class 𝒯".into()));
    }
    let entries = galerkin_matrix(ctx, trunc, rule, |x| b.eval(x))?;
    Ok(OperatorMatrix {
        truncation: trunc.clone(),
        entries,
        provenance: Provenance { kind: "toeplitz", symbol: describe(b), h: ctx.h(), t: None, order: rule.order() },
    })
}

/// `⟨W_λ u_α, u_β⟩_{H_Φ}` with `W_λ u(X) = e^{[2φ(X,λ) − φ(λ,λ)]/h} u(X − λ)`.
///
/// In `Z = √(2/h)RX` this is the Fock displacement by `ν = √(2/h)Rλ`; the
/// nodes are centred at `ν/2`, which leaves the factor
/// `e^{−|ν|²/4} e^{i Im⟨Z′, ν̄⟩}` against the Gaussian weight.
pub fn weyl_unitary_matrix(ctx: &SpaceContext, lambda: &[C64], trunc: &MultiIndexSet, rule: &QuadratureRule) -> Result<OperatorMatrix> {
    check_dim(ctx, trunc)?;
    if lambda.len() != ctx.n() {
        return Err(Error::DimensionMismatch { expected: ctx.n(), actual: lambda.len() });
    }
    let s = (2.0 / ctx.h()).sqrt();
    let nu: Vec<C64> = ctx.apply_r(lambda).iter().map(|v| v * s).collect();
    let damp = (-nu.iter().map(|v| v.norm_sqr()).sum::<f64>() / 4.0).exp();
    let entries = assemble(trunc, rule, |z, left, right| {
        let mut im = 0.0;
        for j in 0..z.len() {
            left[j] = z[j] - nu[j] / 2.0;
            right[j] = z[j] + nu[j] / 2.0;
            im += (z[j] * nu[j].conj()).im;
        }
        Ok(C64::from_polar(damp, im))
    })?;
    Ok(OperatorMatrix {
        truncation: trunc.clone(),
        entries,
        provenance: Provenance { kind: "weyl", symbol: format!("lambda={lambda:?}"), h: ctx.h(), t: None, order: rule.order() },
    })
}

/// How identities between matrix products are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Degrees dropped from the top of the reported block.
    pub inner_drop: usize,
    /// Extra degrees assembled beyond `N` for the intermediate sums.
    pub guard: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { inner_drop: 4, guard: 20 }
    }
}

impl TruncationPolicy {
    fn sets(&self, n: usize, degree: usize) -> Result<(MultiIndexSet, usize)> {
        if degree < self.inner_drop {
            return Err(Error::InvalidParameter(format!(
                "truncation {degree} is smaller than the inner drop {}",
                self.inner_drop
            )));
        }
        Ok((MultiIndexSet::new(n, degree + self.guard), degree - self.inner_drop))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormTable {
    pub table: Vec<(usize, f64)>,
    pub m_norm: f64,
    pub converged: bool,
    pub last_rel_change: f64,
}

/// Relative change below which successive compression norms count as converged.
pub const NORM_REL_TOL: f64 = 1e-3;

/// Compression norms over an increasing schedule (nested blocks of one
/// assembly at the largest `N`).
pub fn norm_converged(ctx: &SpaceContext, b: &Symbol, schedule: &[usize], rule: &QuadratureRule) -> Result<NormTable> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("N schedule must be nonempty and increasing".into()));
    }
    let top = MultiIndexSet::new(ctx.n(), *schedule.last().expect("nonempty"));
    let m = toeplitz_matrix(ctx, b, &top, rule)?;
    let table: Vec<(usize, f64)> = schedule.iter().map(|&d| (d, operator_norm(&m.block(d)))).collect();
    let m_norm = table.last().expect("nonempty").1;
    let last_rel_change = match table.len() {
        1 => f64::INFINITY,
        k => (table[k - 1].1 - table[k - 2].1).abs() / table[k - 1].1.abs().max(f64::MIN_POSITIVE),
    };
    Ok(NormTable { table, m_norm, converged: last_rel_change < NORM_REL_TOL, last_rel_change })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylReport {
    /// `‖(M*M − I)_inner‖_max`.
    pub unitarity: f64,
    /// `‖(M(λ)* − M(−λ))_inner‖_max`.
    pub adjoint: f64,
}

pub fn weyl_identity_checks(
    ctx: &SpaceContext,
    lambda: &[C64],
    degree: usize,
    policy: TruncationPolicy,
    rule: &QuadratureRule,
) -> Result<WeylReport> {
    let (outer, inner) = policy.sets(ctx.n(), degree)?;
    let w = weyl_unitary_matrix(ctx, lambda, &outer, rule)?.entries;
    let neg: Vec<C64> = lambda.iter().map(|z| -z).collect();
    let wm = weyl_unitary_matrix(ctx, &neg, &outer, rule)?.entries;
    let prod = leading(&(w.adjoint() * &w), &outer, inner);
    let id = CMat::identity(prod.nrows(), prod.ncols());
    Ok(WeylReport {
        unitarity: max_abs_diff(&prod, &id),
        adjoint: max_abs_diff(&leading(&w.adjoint(), &outer, inner), &leading(&wm, &outer, inner)),
    })
}

/// `‖(W_λ* T̃_b W_λ − T̃_{b(·+λ)})_inner‖_max`.
pub fn weyl_conjugation_check(
    ctx: &SpaceContext,
    b: &Symbol,
    lambda: &[C64],
    degree: usize,
    policy: TruncationPolicy,
    rule: &QuadratureRule,
) -> Result<f64> {
    let (outer, inner) = policy.sets(ctx.n(), degree)?;
    let w = weyl_unitary_matrix(ctx, lambda, &outer, rule)?.entries;
    let t = toeplitz_matrix(ctx, b, &outer, rule)?.entries;
    let shifted = toeplitz_matrix(ctx, &b.translate(lambda), &outer, rule)?.entries;
    let conj = w.adjoint() * t * w;
    Ok(max_abs_diff(&leading(&conj, &outer, inner), &leading(&shifted, &outer, inner)))
}

/// `Σ_{|α|=k} ⟨T̃_b u_α, u_α⟩` read off a Toeplitz matrix.
pub fn diagonal_sum(m: &OperatorMatrix, k: usize) -> Result<C64> {
    if k > m.truncation.degree() {
        return Err(Error::OrderOutOfRange { order: k });
    }
    Ok(m.truncation
        .indices()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.iter().sum::<usize>() == k)
        .map(|(i, _)| m.entries[(i, i)])
        .sum())
}

/// `C_Φ/hⁿ ∫ (1/k!)(2|RY|²/h)^k e^{−2|RY|²/h} b(Y) L(dY)` in per-coordinate
/// polar variables `RY_j = √(hρ_j/2) e^{iθ_j}`: Gauss-Laguerre in `ρ_j`,
/// trapezoid in `θ_j`. The measure collapses to `(2π)⁻ⁿ dρ dθ`.
pub fn diagonal_sum_polar(ctx: &SpaceContext, b: &Symbol, k: usize, radial_order: usize, angular_points: usize) -> Result<C64> {
    let n = ctx.n();
    let lag = gauss_laguerre_rule(radial_order)?;
    if angular_points < 1 {
        return Err(Error::InvalidParameter("need at least one angular point".into()));
    }
    let dtheta = 2.0 * PI / angular_points as f64;
    let per_axis = radial_order * angular_points;
    let total = per_axis.pow(n as u32);
    let kfact: f64 = (1..=k).map(|j| j as f64).product();
    let scale = (ctx.h() / 2.0).sqrt();
    let mut sum = C64::new(0.0, 0.0);
    let mut w = vec![C64::new(0.0, 0.0); n];
    for idx in 0..total {
        let mut rem = idx;
        let mut weight = 1.0;
        let mut rho_sum = 0.0;
        for wj in w.iter_mut() {
            let local = rem % per_axis;
            rem /= per_axis;
            let (ir, it) = (local / angular_points, local % angular_points);
            let rho = lag.nodes()[ir];
            weight *= lag.weights()[ir] * dtheta;
            rho_sum += rho;
            *wj = C64::from_polar(scale * rho.sqrt(), it as f64 * dtheta);
        }
        let y = ctx.apply_r_inv(&w);
        sum += weight * rho_sum.powi(k as i32) / kfact * b.eval(&y)?;
    }
    Ok(sum / (2.0 * PI).powi(n as i32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub t: f64,
    /// Sampled `max |b_t|`.
    pub lhs: f64,
    /// `M_N (1 + slack)/(2t − 1)ⁿ`.
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub norms: NormTable,
    pub slack: f64,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub const DEFAULT_SLACK: f64 = 0.02;

/// `‖b_t‖_∞ ≤ ‖T̃_b‖/(2t − 1)ⁿ` for `t ∈ (1/2, 1]`, with the compression norm
/// standing in for `‖T̃_b‖`.
pub fn bound_report(
    ctx: &SpaceContext,
    b: &Symbol,
    t_grid: &[f64],
    x_grid: &XGrid,
    schedule: &[usize],
    rule: &QuadratureRule,
    slack: f64,
) -> Result<BoundReport> {
    if let Some(&t) = t_grid.iter().find(|&&t| !(t > 0.5 && t <= 1.0)) {
        return Err(Error::InvalidParameter(format!("t = {t} must lie in (1/2, 1]")));
    }
    if b.as_plane_waves().is_none() {
        return Err(Error::UnsupportedSymbol("the bound check needs a plane-wave symbol".into()));
    }
    let norms = norm_converged(ctx, b, schedule, rule)?;
    let n = ctx.n() as i32;
    let rows = t_grid
        .iter()
        .map(|&t| {
            let bt = crate::heat::heat_flow(ctx, b, t)?;
            let lhs = sup_norm_sampled(&bt, x_grid)?;
            let rhs = norms.m_norm * (1.0 + slack) / (2.0 * t - 1.0).powi(n);
            Ok(BoundRow { t, lhs, rhs, pass: lhs <= rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport { norms, slack, rows })
}

/// `r1 = ‖T̃_aT̃_b − T̃_{ab} + (h/2)T̃_{Q(a,b)}‖₂`, `r2 = ‖[T̃_a, T̃_b] − (ih/2)T̃_{{a,b}}‖₂`
/// on the inner block.
pub fn deformation_residuals(
    ctx: &SpaceContext,
    a: &Symbol,
    b: &Symbol,
    degree: usize,
    policy: TruncationPolicy,
    rule: &QuadratureRule,
) -> Result<(f64, f64)> {
    let (pa, pb) = match (a.as_plane_waves(), b.as_plane_waves()) {
        (Some(pa), Some(pb)) => (pa, pb),
        _ => return Err(Error::UnsupportedSymbol("deformation residuals need plane-wave symbols".into())),
    };
    let (outer, inner) = policy.sets(ctx.n(), degree)?;
    let h = ctx.h();
    let mat = |s: &Symbol| toeplitz_matrix(ctx, s, &outer, rule).map(|m| m.entries);
    let ta = mat(a)?;
    let tb = mat(b)?;
    let tab = mat(&pa.mul(pb).into())?;
    let tq = mat(&q_form(ctx, a, b)?)?;
    let tp = mat(&poisson(ctx, a, b)?)?;
    let ab = &ta * &tb;
    let ba = &tb * &ta;
    let res1 = &ab - tab + tq * C64::new(h / 2.0, 0.0);
    let res2 = &ab - ba - tp * C64::new(0.0, h / 2.0);
    Ok((operator_norm(&leading(&res1, &outer, inner)), operator_norm(&leading(&res2, &outer, inner))))
}

/// Residuals at or below this level are treated as zero for slope fitting.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DeformationSweep {
    /// `(h, r1, r2)`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Least-squares slope of `log r1` against `log h`; `None` when some
    /// residual is at the floor.
    pub slope_r1: Option<f64>,
    pub slope_r2: Option<f64>,
}

/// Least-squares slope of `log y` on `log x`; `None` if any `y ≤ floor`.
pub fn loglog_slope(x: &[f64], y: &[f64], floor: f64) -> Option<f64> {
    if x.len() < 2 || y.iter().any(|&v| !(v > floor)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Rebuilds the context for each `h` and fits the residual slopes.
pub fn deformation_sweep(
    phase: &PhaseMatrices,
    a: &Symbol,
    b: &Symbol,
    h_list: &[f64],
    degree: usize,
    policy: TruncationPolicy,
    rule: &QuadratureRule,
) -> Result<DeformationSweep> {
    if h_list.len() < 4 || h_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidParameter("h list must be strictly decreasing with at least 4 entries".into()));
    }
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let ctx = SpaceContext::new(phase.clone(), h)?;
        let (r1, r2) = deformation_residuals(&ctx, a, b, degree, policy, rule)?;
        rows.push((h, r1, r2));
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let r1: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let r2: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok(DeformationSweep {
        slope_r1: loglog_slope(&hs, &r1, RESIDUAL_FLOOR),
        slope_r2: loglog_slope(&hs, &r2, RESIDUAL_FLOOR),
        rows,
    })
}
