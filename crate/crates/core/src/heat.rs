//! The symbol heat flow `b_t = e^{thΔ}b`.
//!
//! The kernel is `C_Φ/(th)ⁿ e^{−2|R(X−Y)|²/th}`. In `W = R(X−Y)` it becomes
//! `(2/(πth))ⁿ e^{−2|W|²/th}`, a Gaussian of width `σ = √(th/2)` per real
//! coordinate, so callables are integrated with Gauss-Hermite directly.
//! Plane waves are eigenfunctions: `e^{iRe⟨X,λ⟩} ↦ e^{−th|ᵀR⁻¹λ|²/8} e^{iRe⟨X,λ⟩}`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::quadrature::{gauss_hermite_rule, integrate_gaussian, QuadratureRule};
use crate::symbols::{CallableSymbol, PlaneWave, PlaneWaveSum, PolarizedSymbol, Symbol};
use crate::{Error, Result, SpaceContext, C64};

/// Gauss-Hermite order used by the callable flow unless told otherwise.
pub const DEFAULT_HEAT_ORDER: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatParams {
    pub t: f64,
    /// Radius (in kernel widths) of the callable sampling sanity check.
    pub radius_factor: f64,
}

impl HeatParams {
    pub fn new(t: f64) -> Self {
        Self { t: clamp_t(t), radius_factor: 6.0 }
    }
}

/// Clamps `t` into `[0, 1]`; NaN maps to 0.
pub fn clamp_t(t: f64) -> f64 {
    if t.is_nan() {
        0.0
    } else {
        t.clamp(0.0, 1.0)
    }
}

/// `e^{−th|ᵀR⁻¹λ|²/8}`.
pub fn damping(ctx: &SpaceContext, lambda: &[C64], t: f64) -> f64 {
    (-t * ctx.h() * ctx.rt_inv_norm_sq(lambda) / 8.0).exp()
}

pub fn heat_flow_plane_waves(ctx: &SpaceContext, b: &PlaneWaveSum, t: f64) -> PlaneWaveSum {
    let t = clamp_t(t);
    if t == 0.0 {
        return b.clone();
    }
    b.damp(|l| damping(ctx, l, t))
}

/// `b_t` at `X` by Gauss-Hermite quadrature of the kernel.
pub fn heat_flow_quadrature<F>(ctx: &SpaceContext, f: F, x: &[C64], t: f64, rule: &QuadratureRule) -> Result<C64>
where
    F: Fn(&[C64]) -> C64 + Sync,
{
    let t = clamp_t(t);
    if t == 0.0 {
        return Ok(f(x));
    }
    let n = ctx.n();
    let sigma = (t * ctx.h() / 2.0).sqrt();
    let r_inv = ctx.r_inv();
    let sum = integrate_gaussian(
        |s| {
            let mut y = x.to_vec();
            for (i, yi) in y.iter_mut().enumerate() {
                for j in 0..n {
                    *yi += r_inv[(i, j)] * C64::new(s[2 * j], s[2 * j + 1]);
                }
            }
            f(&y)
        },
        2 * n,
        sigma,
        rule,
    )?;
    Ok(sum * (2.0 / (PI * t * ctx.h())).powi(n as i32))
}

/// `b_t = e^{thΔ}b`; exact for plane waves, quadrature (order
/// [`DEFAULT_HEAT_ORDER`]) for callables.
pub fn heat_flow(ctx: &SpaceContext, b: &Symbol, t: f64) -> Result<Symbol> {
    heat_flow_with_order(ctx, b, t, DEFAULT_HEAT_ORDER)
}

pub fn heat_flow_with_order(ctx: &SpaceContext, b: &Symbol, t: f64, order: usize) -> Result<Symbol> {
    let t = clamp_t(t);
    match b {
        Symbol::PlaneWaves(p) => Ok(heat_flow_plane_waves(ctx, p, t).into()),
        Symbol::Callable(c) => {
            if !c.declared_bounded {
                return Err(Error::UnsupportedSymbol("heat flow needs a callable declared bounded".into()));
            }
            if t == 0.0 {
                return Ok(b.clone());
            }
            let rule = Arc::new(gauss_hermite_rule(order)?);
            let ctx = ctx.clone();
            let inner = c.clone();
            let mut out = CallableSymbol::bounded(c.n(), move |x: &[C64]| {
                heat_flow_quadrature(&ctx, |y| inner.call(y), x, t, &rule).unwrap_or(C64::new(f64::NAN, f64::NAN))
            });
            out.fd_step = c.fd_step;
            Ok(out.into())
        }
    }
}

/// The Berezin symbol `b_1`.
pub fn berezin_symbol(ctx: &SpaceContext, b: &Symbol) -> Result<Symbol> {
    heat_flow(ctx, b, 1.0)
}

/// Polarization of `b_t` for a plane-wave `b`.
pub fn polarize_heated(ctx: &SpaceContext, b: &Symbol, t: f64) -> Result<PolarizedSymbol> {
    match b {
        Symbol::PlaneWaves(p) => Ok(PolarizedSymbol::from_plane_waves(&heat_flow_plane_waves(ctx, p, t))),
        Symbol::Callable(_) => Err(Error::UnsupportedSymbol("polarization needs a plane-wave symbol".into())),
    }
}

/// Total mass of the kernel `C_Φ/(th)ⁿ e^{−2|RY|²/th}`, integrated in the raw
/// real coordinates of `Y` after a Cholesky whitening of the quadratic form.
pub fn kernel_mass(ctx: &SpaceContext, t: f64, rule: &QuadratureRule) -> Result<f64> {
    let t = clamp_t(t);
    if t == 0.0 {
        return Err(Error::InvalidParameter("kernel mass needs t > 0".into()));
    }
    let n = ctx.n();
    let m = 2 * n;
    // |RY|² = yᵀ(MᵀM)y with y = (Re Y₁, Im Y₁, …)
    let r = ctx.r();
    let mut mm = DMatrix::<f64>::zeros(m, m);
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (r[(i, j)].re, r[(i, j)].im);
            mm[(2 * i, 2 * j)] = a;
            mm[(2 * i, 2 * j + 1)] = -b;
            mm[(2 * i + 1, 2 * j)] = b;
            mm[(2 * i + 1, 2 * j + 1)] = a;
        }
    }
    let k = (mm.transpose() * &mm) * (2.0 / (t * ctx.h()));
    let chol = k
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvariantViolation("kernel quadratic form is not positive".into()))?;
    let l_inv_t = chol
        .l()
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::InvariantViolation("kernel quadratic form is singular".into()))?;
    let jac = l_inv_t.determinant().abs();
    // y = L⁻ᵀs turns e^{−yᵀKy} into e^{−|s|²}; the check re-evaluates the kernel
    let s_total = integrate_gaussian(
        |s| {
            let y = &l_inv_t * nalgebra::DVector::from_column_slice(s);
            let q = y.dot(&(&k * &y));
            let ss: f64 = s.iter().map(|v| v * v).sum();
            C64::new((ss - q).exp(), 0.0)
        },
        m,
        1.0,
        rule,
    )?;
    Ok(ctx.c_big_phi() / (t * ctx.h()).powi(n as i32) * jac * s_total.re)
}

/// Points of `ℂⁿ`, each complex coordinate sampled on a uniform square grid.
#[derive(Debug, Clone, PartialEq)]
pub struct XGrid {
    pub n: usize,
    pub per_axis: usize,
    pub half_width: f64,
}

impl XGrid {
    /// 41 points per real axis on `[−6, 6]`.
    pub fn default_for(n: usize) -> Self {
        Self { n, per_axis: 41, half_width: 6.0 }
    }

    fn axis(&self) -> Vec<f64> {
        if self.per_axis == 1 {
            return vec![0.0];
        }
        let step = 2.0 * self.half_width / (self.per_axis - 1) as f64;
        (0..self.per_axis).map(|i| -self.half_width + i as f64 * step).collect()
    }

    pub fn len(&self) -> usize {
        self.per_axis.pow(2 * self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `idx`-th point in lexicographic order.
    pub fn point(&self, idx: usize) -> Vec<C64> {
        let axis = self.axis();
        let mut rem = idx;
        let mut coords = vec![0.0; 2 * self.n];
        for c in coords.iter_mut().rev() {
            *c = axis[rem % self.per_axis];
            rem /= self.per_axis;
        }
        (0..self.n).map(|j| C64::new(coords[2 * j], coords[2 * j + 1])).collect()
    }
}

/// Max of `|b|` over the grid: a sampled lower bound for `‖b‖_∞`.
pub fn sup_norm_sampled(b: &Symbol, grid: &XGrid) -> Result<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| b.eval(&grid.point(i)).map(|v| v.norm()))
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max))
}

/// Frequencies on a uniform midpoint grid of `[−L, L]^{2n}` with their cell area.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    pub points: Vec<Vec<C64>>,
    pub cell_area: f64,
}

impl LambdaGrid {
    pub fn uniform(n: usize, half_width: f64, per_axis: usize) -> Self {
        let step = 2.0 * half_width / per_axis as f64;
        let axis: Vec<f64> = (0..per_axis).map(|i| -half_width + (i as f64 + 0.5) * step).collect();
        let total = per_axis.pow(2 * n as u32);
        let points = (0..total)
            .map(|mut idx| {
                let mut coords = vec![0.0; 2 * n];
                for c in coords.iter_mut().rev() {
                    *c = axis[idx % per_axis];
                    idx /= per_axis;
                }
                (0..n).map(|j| C64::new(coords[2 * j], coords[2 * j + 1])).collect()
            })
            .collect();
        Self { points, cell_area: step.powi(2 * n as i32) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwDiagnostic {
    /// `g(λ)` for each grid frequency.
    pub g: Vec<f64>,
    /// Riemann sum `Σ g(λ)·cell_area`.
    pub l1_estimate: f64,
}

/// `g(λ) = max_X |(b^λ)_1(X)| · e^{−h|ᵀR⁻¹λ|²/8}`, with `b^λ = e^{iRe⟨·,λ⟩}b`
/// and the max taken over `x_grid`.
pub fn sw_diagnostic(ctx: &SpaceContext, b: &Symbol, lambda_grid: &LambdaGrid, x_grid: &XGrid) -> Result<SwDiagnostic> {
    let g = lambda_grid
        .points
        .par_iter()
        .map(|l| {
            let heated = berezin_symbol(ctx, &b.modulate(l))?;
            let sup = match &heated {
                // |Σ c e^{iθ}| over a grid; for a single term this is exact
                Symbol::PlaneWaves(p) if p.terms().len() <= 1 => p.coeff_l1(),
                _ => sup_norm_sampled(&heated, x_grid)?,
            };
            Ok(sup * damping(ctx, l, 1.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let l1_estimate = g.iter().sum::<f64>() * lambda_grid.cell_area;
    Ok(SwDiagnostic { g, l1_estimate })
}

/// Convenience: wraps a single term into a plane-wave symbol.
pub fn plane_wave(coeff: C64, freq: Vec<C64>) -> Symbol {
    PlaneWaveSum::new(freq.len(), vec![PlaneWave::new(coeff, freq)]).expect("consistent dimension").into()
}
