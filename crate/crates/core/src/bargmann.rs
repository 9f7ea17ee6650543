//! The real side: the transform `Tu(X) = C_φ h^{−3n/4} ∫ e^{iφ(X,y)/h} u(y) dy`,
//! its adjoint, the projector `TT*`, closed-form real Weyl operators for
//! plane-wave symbols, and the combined Egorov-Guillemin check
//! `T̃_b ∘ T = T ∘ Op_h^W(b′_{1/2} ∘ κ_T)`.
//!
//! Test functions are Gaussians, kept as quadratic exponents
//! `amp·exp(−½yᵀSy + gᵀy + c)` so that complex shifts `u(x + hq)` stay exact.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::basis::{normalized_monomials, x_from_z, HSpaceVector};
use crate::heat::polarize_heated;
use crate::linalg::{bdot, conj_vec, mat_vec};
use crate::quadrature::{integrate_gaussian, integrate_whitened, QuadratureRule};
use crate::symbols::{guillemin_symbol, PlaneWaveSum, RealPlaneWave, Symbol};
use crate::{CMat, Error, Result, SpaceContext, C64};

/// `u(y) = amp·e^{i⟨p₀, y⟩} e^{−|y − y₀|²/(2σ²)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTestFn {
    pub center: Vec<f64>,
    pub width: f64,
    pub modulation: Vec<f64>,
    pub amplitude: C64,
}

impl GaussianTestFn {
    pub fn new(center: Vec<f64>, width: f64, modulation: Vec<f64>, amplitude: C64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidParameter(format!("Gaussian width must be positive, got {width}")));
        }
        if modulation.len() != center.len() {
            return Err(Error::DimensionMismatch { expected: center.len(), actual: modulation.len() });
        }
        Ok(Self { center, width, modulation, amplitude })
    }

    /// Unit-amplitude Gaussian centred at the origin.
    pub fn centered(n: usize, width: f64) -> Result<Self> {
        Self::new(vec![0.0; n], width, vec![0.0; n], C64::new(1.0, 0.0))
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    /// Closed form, valid for complex arguments as well.
    pub fn eval(&self, y: &[C64]) -> C64 {
        let s2 = 2.0 * self.width * self.width;
        let d2: C64 = y.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        let ph: C64 = y.iter().zip(&self.modulation).map(|(a, b)| a * b).sum();
        self.amplitude * (C64::new(0.0, 1.0) * ph - d2 / s2).exp()
    }

    pub fn l1_norm(&self) -> f64 {
        self.amplitude.norm() * (2.0 * PI * self.width * self.width).powf(self.n() as f64 / 2.0)
    }

    pub fn to_form(&self) -> GaussianForm {
        let n = self.n();
        let inv = 1.0 / (self.width * self.width);
        GaussianForm {
            s: CMat::identity(n, n) * C64::new(inv, 0.0),
            g: self.center.iter().zip(&self.modulation).map(|(&y0, &p)| C64::new(y0 * inv, p)).collect(),
            c: C64::new(-0.5 * inv * self.center.iter().map(|v| v * v).sum::<f64>(), 0.0),
            amp: self.amplitude,
        }
    }
}

/// `amp·exp(−½yᵀSy + gᵀy + c)` with `S` complex symmetric, `Re S` positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianForm {
    pub s: CMat,
    pub g: Vec<C64>,
    pub c: C64,
    pub amp: C64,
}

impl GaussianForm {
    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn exponent(&self, y: &[C64]) -> C64 {
        -0.5 * bdot(y, &mat_vec(&self.s, y)) + bdot(&self.g, y) + self.c
    }

    pub fn eval(&self, y: &[C64]) -> C64 {
        self.amp * self.exponent(y).exp()
    }

    /// `y ↦ u(y + d)` for complex `d`.
    pub fn shift(&self, d: &[C64]) -> Self {
        let sd = mat_vec(&self.s, d);
        Self {
            s: self.s.clone(),
            g: self.g.iter().zip(&sd).map(|(g, v)| g - v).collect(),
            c: self.c - 0.5 * bdot(d, &sd) + bdot(&self.g, d),
            amp: self.amp,
        }
    }

    /// `y ↦ e^{i⟨y, p⟩ + k} u(y)`.
    pub fn modulate(&self, p: &[C64], k: C64) -> Self {
        let i = C64::new(0.0, 1.0);
        Self {
            s: self.s.clone(),
            g: self.g.iter().zip(p).map(|(g, v)| g + i * v).collect(),
            c: self.c + k,
            amp: self.amp,
        }
    }

    fn real_hessian(&self) -> DMatrix<f64> {
        self.s.map(|z| z.re)
    }

    /// `∫ u(y) conj(f(y)) dy`, whitened by `u`'s own envelope.
    pub fn l2_inner<F>(&self, f: F, rule: &QuadratureRule) -> Result<C64>
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        let hess = self.real_hessian();
        let center = real_center(&hess, &self.g.iter().map(|z| z.re).collect::<Vec<_>>())?;
        integrate_whitened(
            |y| {
                let yc: Vec<C64> = y.iter().map(|&v| C64::from(v)).collect();
                (self.amp * f(y).conj(), self.exponent(&yc))
            },
            &hess,
            &center,
            rule,
        )
    }
}

fn real_center(hess: &DMatrix<f64>, lin: &[f64]) -> Result<Vec<f64>> {
    let inv = hess
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("Gaussian envelope is singular".into()))?;
    Ok((0..lin.len()).map(|i| (0..lin.len()).map(|j| inv[(i, j)] * lin[j]).sum()).collect())
}

/// `Op_h^W(e^{i(⟨x,p⟩ + ⟨q,ξ⟩)}) u(x) = e^{i⟨x,p⟩ + ih⟨q,p⟩/2} u(x + hq)`.
pub fn real_weyl_planewave_apply(h: f64, p: &[C64], q: &[C64], u: &GaussianTestFn, x: &[f64]) -> C64 {
    let i = C64::new(0.0, 1.0);
    let xp: C64 = x.iter().zip(p).map(|(a, b)| a * b).sum();
    let shifted: Vec<C64> = x.iter().zip(q).map(|(a, b)| a + h * b).collect();
    (i * xp + i * h * bdot(q, p) / 2.0).exp() * u.eval(&shifted)
}

/// The same operator acting on a quadratic exponent.
pub fn real_weyl_planewave_form(h: f64, p: &[C64], q: &[C64], u: &GaussianForm) -> GaussianForm {
    let d: Vec<C64> = q.iter().map(|v| v * h).collect();
    u.shift(&d).modulate(p, C64::new(0.0, h / 2.0) * bdot(q, p))
}

fn prefactor_t(ctx: &SpaceContext) -> f64 {
    ctx.c_phi() * ctx.h().powf(-0.75 * ctx.n() as f64)
}

/// `Tu(X)` for a Gaussian test function.
pub fn bargmann_transform(ctx: &SpaceContext, u: &GaussianTestFn, x: &[C64], rule: &QuadratureRule) -> Result<C64> {
    bargmann_transform_form(ctx, &u.to_form(), x, rule)
}

/// `Tu(X)`: the `y`-integrand is `exp(−½yᵀKy + vᵀy + k₀)` with
/// `K = S − iC/h`, `v = g + iᵀBX/h`. The integrand is entire and `Re K > 0`,
/// so the contour is moved through the complex saddle `y* = K⁻¹v`; what is
/// left to sample is the bounded factor `e^{−½ i tᵀ(Im K)t}` on top of the
/// envelope with Hessian `Re K`.
pub fn bargmann_transform_form(ctx: &SpaceContext, u: &GaussianForm, x: &[C64], rule: &QuadratureRule) -> Result<C64> {
    let n = ctx.n();
    if u.n() != n || x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: u.n().min(x.len()) });
    }
    let h = ctx.h();
    let i = C64::new(0.0, 1.0);
    let k = &u.s - ctx.phase().c() * (i / h);
    let btx = mat_vec(&ctx.phase().b().transpose(), x);
    let v: Vec<C64> = u.g.iter().zip(&btx).map(|(g, b)| g + i * b / h).collect();
    let saddle = k
        .clone()
        .lu()
        .solve(&nalgebra::DVector::from_column_slice(&v))
        .ok_or_else(|| Error::InvalidParameter("transform exponent is singular".into()))?;
    let hess = k.map(|z| z.re);
    let val = integrate_whitened(
        |t| {
            let yc: Vec<C64> = saddle.iter().zip(t).map(|(s, &tv)| s + tv).collect();
            (C64::new(1.0, 0.0), i * ctx.phase_phi(x, &yc) / h + u.exponent(&yc))
        },
        &hess,
        &vec![0.0; n],
        rule,
    )?;
    Ok(val * u.amp * prefactor_t(ctx))
}

/// `(T*v)(y) = C_φ h^{−3n/4} ∫ conj(e^{iφ(X,y)/h}) v(X) e^{−2Φ(X)/h} L(dX)`.
///
/// In `Z = √(2/h)RX` the real part of the log-integrand is
/// `−|Z|²/2 − ½|C_I^{1/2}(y + C_I⁻¹ Im ᵀBX)|²/h`, an explicit quadratic.
pub fn bargmann_adjoint_apply(ctx: &SpaceContext, v: &HSpaceVector, y: &[f64], rule: &QuadratureRule) -> Result<C64> {
    let n = ctx.n();
    let set = v.truncation();
    if set.n() != n || y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    let h = ctx.h();
    let m = 2 * n;
    let bt = ctx.phase().b().transpose();
    // J z = Im ᵀB X(z), real n×2n
    let mut jmat = DMatrix::<f64>::zeros(n, m);
    for col in 0..m {
        let mut z = vec![C64::new(0.0, 0.0); n];
        z[col / 2] = if col % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
        let bx = mat_vec(&bt, &x_from_z(ctx, &z));
        for r in 0..n {
            jmat[(r, col)] = bx[r].im;
        }
    }
    let jt_ci = jmat.transpose() * ctx.c_i_inv();
    let hess = DMatrix::<f64>::identity(m, m) + &jt_ci * &jmat / h;
    let jty = jmat.transpose() * nalgebra::DVector::from_column_slice(y);
    let center = real_center(&hess, &jty.iter().map(|v| -v / h).collect::<Vec<_>>())?;
    let yc: Vec<C64> = y.iter().map(|&v| C64::from(v)).collect();
    let deg = set.degree();
    let i = C64::new(0.0, 1.0);
    let coeffs = v.coeffs();
    let val = integrate_whitened(
        |zr| {
            let z: Vec<C64> = (0..n).map(|j| C64::new(zr[2 * j], zr[2 * j + 1])).collect();
            let x = x_from_z(ctx, &z);
            let mut powers = vec![vec![C64::new(0.0, 0.0); deg + 1]; n];
            let mut mono = vec![C64::new(0.0, 0.0); set.len()];
            normalized_monomials(set, &z, &mut powers, &mut mono);
            let poly: C64 = coeffs.iter().zip(&mono).map(|(c, m)| c * m).sum();
            let q = bdot(&x, &mat_vec(ctx.phi_xx(), &x));
            let z2: f64 = z.iter().map(|w| w.norm_sqr()).sum();
            let e = -i * ctx.phase_phi(&x, &yc).conj() / h - z2 - q.conj() / h;
            (poly, e)
        },
        &hess,
        &center,
        rule,
    )?;
    let jac = (h / 2.0).powi(n as i32) / (ctx.det_r_abs() * ctx.det_r_abs());
    Ok(val * prefactor_t(ctx) * (ctx.c_big_phi() / h.powi(n as i32)).sqrt() * jac)
}

/// `(TT*f)(X) = C_Φ/hⁿ ∫ e^{2Ψ(X,Ȳ)/h} f(Y) e^{−2Φ(Y)/h} L(dY)`, integrated in
/// `W = R(Y − X)` against `e^{−|W|²/h}`.
pub fn projector_apply<F>(ctx: &SpaceContext, f: F, x: &[C64], rule: &QuadratureRule) -> Result<C64>
where
    F: Fn(&[C64]) -> C64 + Sync,
{
    let n = ctx.n();
    let h = ctx.h();
    let sum = integrate_gaussian(
        |s| {
            let w: Vec<C64> = (0..n).map(|j| C64::new(s[2 * j], s[2 * j + 1])).collect();
            let y: Vec<C64> = x.iter().zip(ctx.apply_r_inv(&w)).map(|(a, b)| a + b).collect();
            let w2: f64 = w.iter().map(|v| v.norm_sqr()).sum();
            let e = (2.0 * ctx.psi(x, &conj_vec(&y)) - 2.0 * ctx.phi_weight(&y) + w2) / h;
            e.exp() * f(&y)
        },
        2 * n,
        h.sqrt(),
        rule,
    )?;
    Ok(sum * (2.0 / (PI * h)).powi(n as i32))
}

/// `⟨f, g⟩_{L²_Φ} = ∫ f ḡ e^{−2Φ/h} L(dX)`, sampled in `Z = √(2/h)RX`
/// against `e^{−|Z|²}`.
pub fn h_phi_inner<F, G>(ctx: &SpaceContext, f: F, g: G, rule: &QuadratureRule) -> Result<C64>
where
    F: Fn(&[C64]) -> C64 + Sync,
    G: Fn(&[C64]) -> C64 + Sync,
{
    let n = ctx.n();
    let h = ctx.h();
    let sum = integrate_gaussian(
        |s| {
            let z: Vec<C64> = (0..n).map(|j| C64::new(s[2 * j], s[2 * j + 1])).collect();
            let x = x_from_z(ctx, &z);
            let q = bdot(&x, &mat_vec(ctx.phi_xx(), &x));
            f(&x) * g(&x).conj() * (-2.0 * q.re / h).exp()
        },
        2 * n,
        1.0,
        rule,
    )?;
    Ok(sum * (h / 2.0).powi(n as i32) / (ctx.det_r_abs() * ctx.det_r_abs()))
}

/// `∫ f ḡ dy` over `ℝⁿ`, whitened by `e^{−yᵀC_I y/h}`, the envelope of `|T*u_α|²`.
pub fn l2_inner_adjoint_frame<F, G>(ctx: &SpaceContext, f: F, g: G, rule: &QuadratureRule) -> Result<C64>
where
    F: Fn(&[f64]) -> C64 + Sync,
    G: Fn(&[f64]) -> C64 + Sync,
{
    let hess = ctx.c_i() * (2.0 / ctx.h());
    integrate_whitened(|y| (f(y) * g(y).conj(), C64::new(0.0, 0.0)), &hess, &vec![0.0; ctx.n()], rule)
}

/// `b′_{1/2} ∘ κ_T` as real-side plane waves.
pub fn guillemin_real_symbol(ctx: &SpaceContext, b: &PlaneWaveSum) -> Result<Vec<RealPlaneWave>> {
    let pol = polarize_heated(ctx, &Symbol::PlaneWaves(b.clone()), 0.5)?;
    Ok(guillemin_symbol(ctx, &pol).compose_kappa(ctx))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgorovRow {
    pub x: Vec<C64>,
    pub lhs: C64,
    pub rhs: C64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgorovReport {
    pub rows: Vec<EgorovRow>,
    pub max_rel_error: f64,
}

/// Compares `T̃_b(Tu)(X)` (projector integral) with
/// `T(Op_h^W(b′_{1/2} ∘ κ_T)u)(X)` (closed-form real Weyl operators, term by term).
pub fn egorov_guillemin_check(
    ctx: &SpaceContext,
    b: &PlaneWaveSum,
    u: &GaussianTestFn,
    x_grid: &[Vec<C64>],
    rule: &QuadratureRule,
) -> Result<EgorovReport> {
    let h = ctx.h();
    let form = u.to_form();
    let waves = guillemin_real_symbol(ctx, b)?;
    let images: Vec<(C64, GaussianForm)> =
        waves.iter().map(|w| (w.coeff, real_weyl_planewave_form(h, &w.p, &w.q, &form))).collect();
    let mut rows = Vec::with_capacity(x_grid.len());
    for x in x_grid {
        let lhs = projector_apply(
            ctx,
            |y| {
                let tu = bargmann_transform_form(ctx, &form, y, rule).unwrap_or(C64::new(f64::NAN, f64::NAN));
                b.eval(y) * tu
            },
            x,
            rule,
        )?;
        let mut rhs = C64::new(0.0, 0.0);
        for (coeff, g) in &images {
            rhs += coeff * bargmann_transform_form(ctx, g, x, rule)?;
        }
        let rel_error = (lhs - rhs).norm() / (1.0 + lhs.norm());
        rows.push(EgorovRow { x: x.clone(), lhs, rhs, rel_error });
    }
    let max_rel_error = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    Ok(EgorovReport { rows, max_rel_error })
}

/// `Re{2Ψ(X,Ȳ) − 2Φ(Y)} − [Φ(X) − Φ(Y) − |R(X − Y)|²]`; zero identically.
pub fn exponent_identity_residual(ctx: &SpaceContext, x: &[C64], y: &[C64]) -> f64 {
    let lhs = (2.0 * ctx.psi(x, &conj_vec(y))).re - 2.0 * ctx.phi_weight(y);
    let d: Vec<C64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let rd: f64 = ctx.apply_r(&d).iter().map(|v| v.norm_sqr()).sum();
    let rhs = ctx.phi_weight(x) - ctx.phi_weight(y) - rd;
    (lhs - rhs).abs()
}
