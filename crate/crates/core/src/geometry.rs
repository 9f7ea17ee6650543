//! Admissible phase data and the geometry it induces on `H_Φ`.
//!
//! The phase `φ(X, y) = ½⟨X, AX⟩ + ⟨X, By⟩ + ½⟨y, Cy⟩` must have `A`, `C`
//! symmetric, `B` invertible and `C_I = Im C` positive definite. From it we
//! derive
//!
//! - `Φ″_{XX̄} = B C_I⁻¹ B̄ᵀ / 4` (Hermitian positive definite),
//! - `Φ″_{XX} = −B C_I⁻¹ Bᵀ / 4 − A / (2i)` (complex symmetric),
//! - `R = C_I^{−1/2} Bᵀ / 2`, which satisfies `R*R = Φ″_{X̄X}`,
//! - the constants `C_φ` (transform) and `C_Φ` (projector kernel).
//!
//! All vectors are slices of length `n`; the pairing `⟨X, Y⟩` is bilinear.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::linalg::{
    bdot, complexify, condition_number, conj_vec, mat_vec, max_abs, max_abs_diff, norm_sq,
    real_mat_vec,
};
use crate::{CMat, Error, Result, C64};

const MAX_CONDITION: f64 = 1e12;
const MIN_CI_EIGENVALUE: f64 = 1e-10;

/// Raw quadratic-phase data `(A, B, C)` on `ℂⁿ × ℂⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatrices {
    n: usize,
    a: CMat,
    b: CMat,
    c: CMat,
}

impl PhaseMatrices {
    /// Validates `(A, B, C)`: square and of equal size, `A`, `C` symmetric as
    /// stored, `det B ≠ 0` and `C_I = (C − C̄)/2i > 0`.
    pub fn new(a: CMat, b: CMat, c: CMat) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        for m in [&a, &b, &c] {
            if m.nrows() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: m.nrows() });
            }
            if m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: m.ncols() });
            }
        }
        if a != a.transpose() {
            return Err(Error::NonSymmetric { which: "A" });
        }
        if c != c.transpose() {
            return Err(Error::NonSymmetric { which: "C" });
        }

        let scale = max_abs(&b);
        let det_abs = b.determinant().norm();
        if scale == 0.0 || det_abs <= 1e-12 * scale.powi(n as i32) {
            return Err(Error::SingularB { det_abs });
        }
        let cond = condition_number(&b);
        if cond > MAX_CONDITION {
            return Err(Error::IllConditioned { which: "B", cond });
        }

        let c_i = c.map(|z| z.im);
        let eig = c_i.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(min > MIN_CI_EIGENVALUE) {
            return Err(Error::NonPositiveCI { eigenvalue: min });
        }
        if max / min > MAX_CONDITION {
            return Err(Error::IllConditioned { which: "C_I", cond: max / min });
        }
        Ok(Self { n, a, b, c })
    }

    /// `φ(X, Y) = iβ(X²/2 − 2XY + Y²)` in every coordinate: the classical Fock
    /// space with `Φ(X) = β|X|²/2`.
    pub fn fock(n: usize, beta: f64) -> Self {
        let id = CMat::identity(n, n);
        let i = C64::new(0.0, 1.0);
        Self::new(&id * (i * beta), &id * (i * (-2.0 * beta)), &id * (i * (2.0 * beta)))
            .expect("Fock phase is admissible for beta > 0")
    }

    /// `φ(X, Y) = i(X − Y)²/2`: the heat-kernel transform with `Φ(X) = |Im X|²/2`.
    pub fn heat_kernel(n: usize) -> Self {
        let id = CMat::identity(n, n);
        let i = C64::new(0.0, 1.0);
        Self::new(&id * i, &id * (-i), &id * i).expect("heat-kernel phase is admissible")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn b(&self) -> &CMat {
        &self.b
    }

    pub fn c(&self) -> &CMat {
        &self.c
    }
}

/// Derived geometry of `H_Φ` bundled with the semiclassical parameter `h`.
///
/// Immutable after construction; every evaluator is a pure function.
#[derive(Debug, Clone)]
pub struct SpaceContext {
    phase: PhaseMatrices,
    h: f64,
    c_i: DMatrix<f64>,
    c_r: DMatrix<f64>,
    c_i_inv: DMatrix<f64>,
    c_i_sqrt: DMatrix<f64>,
    phi_xxbar: CMat,
    phi_xx: CMat,
    r: CMat,
    r_inv: CMat,
    rt_inv: CMat,
    b_inv: CMat,
    // (Φ″_{X̄X})⁻¹, the metric in Q, Δ and Q₁
    g: CMat,
    phi_xxbar_inv: CMat,
    c_phi: f64,
    c_big_phi: f64,
    det_r_abs: f64,
}

impl SpaceContext {
    pub fn new(phase: PhaseMatrices, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidH { h });
        }
        let n = phase.n;
        let nf = n as f64;
        let c_i = phase.c.map(|z| z.im);
        let c_r = phase.c.map(|z| z.re);

        let eig = c_i.clone().symmetric_eigen();
        let q = &eig.eigenvectors;
        let diag = |f: &dyn Fn(f64) -> f64| {
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
            q * d * q.transpose()
        };
        let c_i_sqrt = diag(&|x| x.sqrt());
        let c_i_inv_sqrt = diag(&|x| 1.0 / x.sqrt());
        let c_i_inv = diag(&|x| 1.0 / x);
        let det_c_i: f64 = eig.eigenvalues.iter().product();

        let b = &phase.b;
        let c_i_inv_c = complexify(&c_i_inv);
        let i = C64::new(0.0, 1.0);
        let phi_xxbar = b * &c_i_inv_c * b.adjoint() / C64::from(4.0);
        let phi_xx = -(b * &c_i_inv_c * b.transpose()) / C64::from(4.0) + &phase.a * (i / 2.0);
        let r = complexify(&c_i_inv_sqrt) * b.transpose() / C64::from(2.0);

        let invert = |m: &CMat, which: &'static str| -> Result<CMat> {
            let cond = condition_number(m);
            if cond > MAX_CONDITION {
                return Err(Error::IllConditioned { which, cond });
            }
            m.clone().try_inverse().ok_or(Error::IllConditioned { which, cond })
        };
        let r_inv = invert(&r, "R")?;
        let rt_inv = r_inv.transpose();
        let b_inv = invert(b, "B")?;
        let g = invert(&phi_xxbar.map(|z| z.conj()), "Phi''_{X̄X}")?;
        let phi_xxbar_inv = g.map(|z| z.conj());

        let det_b = b.determinant().norm();
        let c_phi = 2f64.powf(-nf / 2.0) * PI.powf(-0.75 * nf) * det_b * det_c_i.powf(-0.25);
        let c_big_phi = (2.0 / PI).powi(n as i32) * phi_xxbar.determinant().re;
        let det_r_abs = r.determinant().norm();

        let ctx = Self {
            phase,
            h,
            c_i,
            c_r,
            c_i_inv,
            c_i_sqrt,
            phi_xxbar,
            phi_xx,
            r,
            r_inv,
            rt_inv,
            b_inv,
            g,
            phi_xxbar_inv,
            c_phi,
            c_big_phi,
            det_r_abs,
        };
        ctx.self_check()?;
        Ok(ctx)
    }

    fn self_check(&self) -> Result<()> {
        let scale = max_abs(&self.phi_xxbar).max(1.0);
        let rr = self.r.adjoint() * &self.r;
        let dev = max_abs_diff(&rr, &self.phi_xxbar.map(|z| z.conj()));
        if dev > 1e-12 * scale {
            return Err(Error::InvariantViolation(format!("R*R deviates from Φ″_X̄X by {dev:e}")));
        }
        let alt = self.c_big_phi_alternative();
        if ((alt - self.c_big_phi) / self.c_big_phi).abs() > 1e-12 {
            return Err(Error::InvariantViolation(format!(
                "C_Φ forms disagree: {} vs {alt}",
                self.c_big_phi
            )));
        }
        let n = self.n();
        for k in 0..4 {
            let x: Vec<C64> = (0..n)
                .map(|j| C64::new(0.3 + 0.7 * (k + j) as f64, 1.1 - 0.45 * (k * j + k) as f64))
                .collect();
            let direct = self.phi_weight(&x);
            let via_max = self.phi_weight_from_max(&x);
            let via_r = norm_sq(&self.apply_r(&x)) + bdot(&x, &mat_vec(&self.phi_xx, &x)).re;
            let tol = 1e-10 * scale.max(max_abs(&self.phi_xx)) * norm_sq(&x).max(1.0);
            if (direct - via_max).abs() > tol || (direct - via_r).abs() > tol {
                return Err(Error::InvariantViolation(format!(
                    "Φ forms disagree at {x:?}: {direct} / {via_max} / {via_r}"
                )));
            }
        }
        Ok(())
    }

    pub fn phase(&self) -> &PhaseMatrices {
        &self.phase
    }

    pub fn n(&self) -> usize {
        self.phase.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Same phase, different `h`.
    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.phase.clone(), h)
    }

    pub fn c_i(&self) -> &DMatrix<f64> {
        &self.c_i
    }

    pub fn c_r(&self) -> &DMatrix<f64> {
        &self.c_r
    }

    pub fn c_i_inv(&self) -> &DMatrix<f64> {
        &self.c_i_inv
    }

    /// Principal square root of `C_I`.
    pub fn c_i_sqrt(&self) -> &DMatrix<f64> {
        &self.c_i_sqrt
    }

    /// `Φ″_{XX̄}`.
    pub fn phi_xxbar(&self) -> &CMat {
        &self.phi_xxbar
    }

    /// `Φ″_{XX}`.
    pub fn phi_xx(&self) -> &CMat {
        &self.phi_xx
    }

    pub fn r(&self) -> &CMat {
        &self.r
    }

    pub fn r_inv(&self) -> &CMat {
        &self.r_inv
    }

    /// `(Rᵀ)⁻¹`.
    pub fn rt_inv(&self) -> &CMat {
        &self.rt_inv
    }

    pub fn b_inv(&self) -> &CMat {
        &self.b_inv
    }

    /// `(Φ″_{X̄X})⁻¹`.
    pub fn metric(&self) -> &CMat {
        &self.g
    }

    /// `(Φ″_{XX̄})⁻¹`.
    pub fn phi_xxbar_inv(&self) -> &CMat {
        &self.phi_xxbar_inv
    }

    /// `C_φ = 2^{−n/2} π^{−3n/4} |det B| (det C_I)^{−1/4}`.
    pub fn c_phi(&self) -> f64 {
        self.c_phi
    }

    /// `C_Φ = (2/π)ⁿ det Φ″_{XX̄}`.
    pub fn c_big_phi(&self) -> f64 {
        self.c_big_phi
    }

    /// `C_Φ` through its second closed form `(2π)⁻ⁿ |det B|² (det C_I)⁻¹`.
    pub fn c_big_phi_alternative(&self) -> f64 {
        let n = self.n() as i32;
        (2.0 * PI).powi(-n) * self.phase.b.determinant().norm_sqr() / self.c_i.determinant()
    }

    pub fn det_r_abs(&self) -> f64 {
        self.det_r_abs
    }

    /// `W = RX`.
    pub fn apply_r(&self, x: &[C64]) -> Vec<C64> {
        mat_vec(&self.r, x)
    }

    /// `X = R⁻¹W`.
    pub fn apply_r_inv(&self, w: &[C64]) -> Vec<C64> {
        mat_vec(&self.r_inv, w)
    }

    /// `|ᵀR⁻¹λ|²`, the quadratic form governing heat damping of `e^{iRe⟨X,λ⟩}`.
    pub fn rt_inv_norm_sq(&self, lambda: &[C64]) -> f64 {
        norm_sq(&mat_vec(&self.rt_inv, lambda))
    }

    /// `Φ(X) = ⟨X, Φ″_{XX̄} X̄⟩ + Re⟨X, Φ″_{XX} X⟩`.
    pub fn phi_weight(&self, x: &[C64]) -> f64 {
        let xbar = conj_vec(x);
        bdot(x, &mat_vec(&self.phi_xxbar, &xbar)).re + bdot(x, &mat_vec(&self.phi_xx, x)).re
    }

    /// `Φ(X) = max_y{−Im φ(X, y)}` through its maximizer:
    /// `½⟨Im ᵀBX, C_I⁻¹ Im ᵀBX⟩ − ½ Im⟨X, AX⟩`.
    pub fn phi_weight_from_max(&self, x: &[C64]) -> f64 {
        let btx: Vec<f64> = mat_vec(&self.phase.b.transpose(), x).iter().map(|z| z.im).collect();
        let quad: f64 = btx.iter().zip(real_mat_vec(&self.c_i_inv, &btx)).map(|(a, b)| a * b).sum();
        0.5 * quad - 0.5 * bdot(x, &mat_vec(&self.phase.a, x)).im
    }

    /// `∂Φ/∂X = Φ″_{XX̄} X̄ + Φ″_{XX} X`.
    pub fn phi_gradient(&self, x: &[C64]) -> Vec<C64> {
        let p = mat_vec(&self.phi_xxbar, &conj_vec(x));
        let m = mat_vec(&self.phi_xx, x);
        p.iter().zip(m).map(|(a, b)| a + b).collect()
    }

    /// Polarization `Ψ(X, Y) = ⟨X, Φ″_{XX̄} Y⟩ + ½⟨X, Φ″_{XX} X⟩ + ½⟨Y, conj(Φ″_{XX}) Y⟩`.
    pub fn psi(&self, x: &[C64], y: &[C64]) -> C64 {
        let mixed = bdot(x, &mat_vec(&self.phi_xxbar, y));
        let xx = bdot(x, &mat_vec(&self.phi_xx, x));
        let yy = bdot(y, &mat_vec(&self.phi_xx.map(|z| z.conj()), y));
        mixed + 0.5 * xx + 0.5 * yy
    }

    /// `φ(X, y) = ½⟨X, AX⟩ + ⟨X, By⟩ + ½⟨y, Cy⟩`.
    pub fn phase_phi(&self, x: &[C64], y: &[C64]) -> C64 {
        let p = &self.phase;
        0.5 * bdot(x, &mat_vec(&p.a, x)) + bdot(x, &mat_vec(&p.b, y)) + 0.5 * bdot(y, &mat_vec(&p.c, y))
    }

    /// Canonical map `κ_T(x, ξ) = (−ᵀB⁻¹(Cx + ξ), Bx − A ᵀB⁻¹(Cx + ξ))`.
    pub fn kappa_t(&self, x: &[f64], xi: &[f64]) -> (Vec<C64>, Vec<C64>) {
        let p = &self.phase;
        let xc: Vec<C64> = x.iter().map(|&v| C64::from(v)).collect();
        let cx = mat_vec(&p.c, &xc);
        let s: Vec<C64> = cx.iter().zip(xi).map(|(a, &b)| a + b).collect();
        let bt_inv_s = mat_vec(&self.b_inv.transpose(), &s);
        let big_x: Vec<C64> = bt_inv_s.iter().map(|z| -z).collect();
        let bx = mat_vec(&p.b, &xc);
        let abs = mat_vec(&p.a, &bt_inv_s);
        let theta = bx.iter().zip(abs).map(|(a, b)| a - b).collect();
        (big_x, theta)
    }

    /// `max_j |Θ_j − (2/i)∂Φ/∂X_j(X)|` for `(X, Θ) = κ_T(x, ξ)`; zero on `Λ_Φ`.
    pub fn lambda_phi_residual(&self, x: &[f64], xi: &[f64]) -> f64 {
        let (big_x, theta) = self.kappa_t(x, xi);
        let grad = self.phi_gradient(&big_x);
        let two_over_i = C64::new(0.0, -2.0);
        theta
            .iter()
            .zip(grad)
            .map(|(t, g)| (t - two_over_i * g).norm())
            .fold(0.0, f64::max)
    }

    /// Exponent `φ(X, λ) = ⟨X, Φ″_{XX̄} λ̄⟩ + ⟨X, Φ″_{XX} λ⟩` of the Weyl operators.
    pub fn weyl_exponent(&self, x: &[C64], lambda: &[C64]) -> C64 {
        bdot(x, &mat_vec(&self.phi_xxbar, &conj_vec(lambda))) + bdot(x, &mat_vec(&self.phi_xx, lambda))
    }
}

/// Validates the phase and derives every geometric quantity for the given `h`.
pub fn build_context(phase: PhaseMatrices, h: f64) -> Result<SpaceContext> {
    SpaceContext::new(phase, h)
}
