//! Deterministic Gaussian quadrature.
//!
//! Every Gaussian-weighted integral in the crate goes through a tensor
//! product of one-dimensional Gauss-Hermite rules (weight `e^{−s²}`). Nodes
//! come from the Golub-Welsch eigenproblem and are then polished by Newton
//! steps on the orthonormal Hermite recurrence; weights use the Christoffel
//! sum, evaluated on Hermite *functions* so nothing overflows up to order 256.
//!
//! Tensor sums are split into chunks along the first axis. Chunks may run on
//! any number of threads but are always merged in axis order, so results are
//! bit-identical whatever the thread count.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::{Error, Result, C64};

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 256;

/// One-dimensional rule: `∫ f(s) w(s) ds ≈ Σ weights[i] f(nodes[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate_1d(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn check_order(order: usize) -> Result<()> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::OrderOutOfRange { order });
    }
    Ok(())
}

fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = off[i];
            m[(i + 1, i)] = off[i];
        }
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Orthonormal Hermite functions `ψ_k(x) = p̃_k(x) e^{−x²/2}` for `k < len`.
fn hermite_functions(x: f64, len: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(len);
    psi.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if len > 1 {
        psi.push(2f64.sqrt() * x * psi[0]);
    }
    for k in 1..len.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * psi[k] - (kf / (kf + 1.0)).sqrt() * psi[k - 1];
        psi.push(next);
    }
    psi
}

/// Gauss-Hermite rule for weight `e^{−s²}`; exact for polynomials of degree `≤ 2·order − 1`.
pub fn gauss_hermite_rule(order: usize) -> Result<QuadratureRule> {
    check_order(order)?;
    let diag = vec![0.0; order];
    let off: Vec<f64> = (1..order).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let mut nodes = tridiagonal_eigenvalues(&diag, &off);

    let of = order as f64;
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let psi = hermite_functions(*x, order + 1);
            let denom = (2.0 * of).sqrt() * psi[order - 1];
            if denom == 0.0 {
                break;
            }
            let step = psi[order] / denom;
            *x -= step;
            if step.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
    }
    // exact symmetry
    for i in 0..order / 2 {
        let j = order - 1 - i;
        let v = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -v;
        nodes[j] = v;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let s: f64 = hermite_functions(x, order).iter().map(|p| p * p).sum();
            (-x * x).exp() / s
        })
        .collect();
    Ok(QuadratureRule { order, nodes, weights })
}

/// Gauss-Laguerre rule for weight `e^{−ρ}` on `[0, ∞)`.
pub fn gauss_laguerre_rule(order: usize) -> Result<QuadratureRule> {
    check_order(order)?;
    let diag: Vec<f64> = (0..order).map(|k| 2.0 * k as f64 + 1.0).collect();
    let off: Vec<f64> = (1..order).map(|k| k as f64).collect();
    let mut nodes = tridiagonal_eigenvalues(&diag, &off);
    // L_k(x) by recurrence, returns (L_{n}, L_{n-1})
    let laguerre = |x: f64, n: usize| -> (f64, f64) {
        let (mut prev, mut cur) = (1.0, 1.0 - x);
        if n == 0 {
            return (1.0, 0.0);
        }
        for k in 1..n {
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
            prev = cur;
            cur = next;
        }
        (cur, prev)
    };
    let of = order as f64;
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (ln, lm) = laguerre(*x, order);
            // x L_n'(x) = n (L_n − L_{n−1})
            let deriv = of * (ln - lm) / *x;
            if deriv == 0.0 || !deriv.is_finite() {
                break;
            }
            let step = ln / deriv;
            *x -= step;
            if step.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (l_next, _) = laguerre(x, order + 1);
            x / ((of + 1.0) * (of + 1.0) * l_next * l_next)
        })
        .collect();
    Ok(QuadratureRule { order, nodes, weights })
}

/// Folds `step` over the `m`-fold tensor grid of `rule`.
///
/// `step(acc, nodes, weight)` receives the raw node coordinates (length `m`)
/// and the product weight. Points are visited lexicographically inside each
/// chunk of the first axis; chunk accumulators are merged in axis order.
pub fn tensor_fold<A, Make, Step, Merge>(
    rule: &QuadratureRule,
    m: usize,
    make: Make,
    step: Step,
    merge: Merge,
) -> Result<A>
where
    A: Send,
    Make: Fn() -> A + Sync,
    Step: Fn(&mut A, &[f64], f64) -> Result<()> + Sync,
    Merge: Fn(&mut A, A),
{
    if m == 0 {
        let mut acc = make();
        step(&mut acc, &[], 1.0)?;
        return Ok(acc);
    }
    let order = rule.order;
    let chunks: Vec<Result<A>> = (0..order)
        .into_par_iter()
        .map(|i0| {
            let mut acc = make();
            let mut idx = vec![0usize; m];
            idx[0] = i0;
            let mut point = vec![0.0; m];
            loop {
                let mut w = 1.0;
                for d in 0..m {
                    point[d] = rule.nodes[idx[d]];
                    w *= rule.weights[idx[d]];
                }
                step(&mut acc, &point, w)?;
                // advance the trailing axes lexicographically
                let mut d = m - 1;
                loop {
                    if d == 0 {
                        return Ok(acc);
                    }
                    idx[d] += 1;
                    if idx[d] < order {
                        break;
                    }
                    idx[d] = 0;
                    d -= 1;
                }
            }
        })
        .collect();
    let mut iter = chunks.into_iter();
    let mut total = iter.next().expect("order >= 2")?;
    for c in iter {
        merge(&mut total, c?);
    }
    Ok(total)
}

/// `∫_{ℝᵐ} f(s) e^{−|s|²/σ²} ds` on the tensor grid, with `s = σ·node`.
/// Callers pass `f` without the Gaussian weight.
pub fn integrate_gaussian<F>(f: F, m: usize, sigma: f64, rule: &QuadratureRule) -> Result<C64>
where
    F: Fn(&[f64]) -> C64 + Sync,
{
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let sum = tensor_fold(
        rule,
        m,
        || (C64::new(0.0, 0.0), vec![0.0; m]),
        |(acc, s), nodes, w| {
            for (sd, &x) in s.iter_mut().zip(nodes) {
                *sd = sigma * x;
            }
            let v = f(s);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFiniteSample { node: s.clone() });
            }
            *acc += w * v;
            Ok(())
        },
        |a, b| a.0 += b.0,
    )?;
    Ok(sum.0 * sigma.powi(m as i32))
}

/// `∫_{ℝᵐ} a(z) e^{E(z)} dz` where `f(z) = (a(z), E(z))` and the real part of
/// `E` is close to `−½(z − z*)ᵀH(z − z*)`. With `H = LLᵀ` the substitution
/// `z = z* + √2 L⁻ᵀ s` turns that envelope into the rule's `e^{−|s|²}`, so
/// only the remainder `a(z) e^{E(z) + |s|²}` is sampled.
pub fn integrate_whitened<F>(f: F, hessian: &DMatrix<f64>, center: &[f64], rule: &QuadratureRule) -> Result<C64>
where
    F: Fn(&[f64]) -> (C64, C64) + Sync,
{
    let m = center.len();
    if hessian.nrows() != m || hessian.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: hessian.nrows() });
    }
    let chol = hessian
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("whitening Hessian is not positive definite".into()))?;
    let map = chol
        .l()
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("whitening Hessian is singular".into()))?
        * std::f64::consts::SQRT_2;
    let jac = map.determinant().abs();
    let sum = tensor_fold(
        rule,
        m,
        || (C64::new(0.0, 0.0), vec![0.0; m]),
        |(acc, z), s, w| {
            for i in 0..m {
                z[i] = center[i] + (0..m).map(|j| map[(i, j)] * s[j]).sum::<f64>();
            }
            let s2: f64 = s.iter().map(|v| v * v).sum();
            let (a, e) = f(z);
            let v = a * (e + s2).exp();
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFiniteSample { node: z.clone() });
            }
            *acc += w * v;
            Ok(())
        },
        |a, b| a.0 += b.0,
    )?;
    Ok(sum.0 * jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn order_range() {
        assert_eq!(gauss_hermite_rule(300), Err(Error::OrderOutOfRange { order: 300 }));
        assert_eq!(gauss_hermite_rule(1), Err(Error::OrderOutOfRange { order: 1 }));
        assert!(gauss_hermite_rule(256).is_ok());
    }

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for order in [2, 3, 10, 31, 60, 128, 256] {
            let r = gauss_hermite_rule(order).unwrap();
            let s: f64 = r.weights().iter().sum();
            assert_relative_eq!(s, PI.sqrt(), max_relative = 1e-12);
            assert!(r.weights().iter().all(|&w| w > 0.0));
            for i in 0..order {
                assert_eq!(r.nodes()[i], -r.nodes()[order - 1 - i]);
            }
        }
    }

    #[test]
    fn low_order_moments() {
        let r = gauss_hermite_rule(2).unwrap();
        assert_relative_eq!(r.integrate_1d(|s| s * s), PI.sqrt() / 2.0, max_relative = 1e-14);
        let r = gauss_hermite_rule(20).unwrap();
        assert_relative_eq!(r.integrate_1d(|s| s.powi(10)), 945.0 / 32.0 * PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn laguerre_moments() {
        let r = gauss_laguerre_rule(30).unwrap();
        // ∫ ρ^k e^{−ρ} dρ = k!
        let mut fact = 1.0;
        for k in 0..20 {
            if k > 0 {
                fact *= k as f64;
            }
            assert_relative_eq!(r.integrate_1d(|x| x.powi(k)), fact, max_relative = 1e-11);
        }
    }

    #[test]
    fn gaussian_mass_and_moment() {
        let r = gauss_hermite_rule(20).unwrap();
        let mass = integrate_gaussian(|_| C64::new(1.0, 0.0), 2, 1.0, &r).unwrap();
        assert_relative_eq!(mass.re, PI, max_relative = 1e-12);
        let m2 = integrate_gaussian(|s| C64::new(s[0] * s[0], 0.0), 2, 1.0, &r).unwrap();
        assert_relative_eq!(m2.re, PI / 2.0, max_relative = 1e-12);
        // σ scaling: ∫ e^{−s²/σ²} = σ√π
        let m = integrate_gaussian(|_| C64::new(1.0, 0.0), 1, 0.3, &r).unwrap();
        assert_relative_eq!(m.re, 0.3 * PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn nan_sample_is_reported() {
        let r = gauss_hermite_rule(4).unwrap();
        let res = integrate_gaussian(|s| if s[0] > 0.0 { C64::new(f64::NAN, 0.0) } else { C64::new(1.0, 0.0) }, 1, 1.0, &r);
        assert!(matches!(res, Err(Error::NonFiniteSample { .. })));
    }

    #[test]
    fn convergence_beyond_order_40() {
        let f = |s: &[f64]| C64::new((1.3 * s[0]).cos() * (0.4 * s[1]).sin() + 1.0, 0.2 * s[0] * s[1]);
        for order in [40, 50] {
            let a = integrate_gaussian(f, 2, 1.0, &gauss_hermite_rule(order).unwrap()).unwrap();
            let b = integrate_gaussian(f, 2, 1.0, &gauss_hermite_rule(2 * order).unwrap()).unwrap();
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let r = gauss_hermite_rule(30).unwrap();
        let f = |s: &[f64]| C64::new((s[0] + 0.1 * s[1]).cos(), s[2] * s[2] - 0.3 * s[0]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| integrate_gaussian(f, 3, 0.7, &r).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    #[test]
    fn whitened_gaussian_with_shift_and_phase() {
        let rule = gauss_hermite_rule(30).unwrap();
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let center = [0.3, -1.0];
        // ∫ e^{−½(z−c)ᵀH(z−c) + i kᵀz} = 2π/√det H · e^{i kᵀc − ½ kᵀH⁻¹k}
        let k = [0.7, -0.4];
        let v = integrate_whitened(
            |z| {
                let d = [z[0] - center[0], z[1] - center[1]];
                let q = 2.0 * d[0] * d[0] + d[0] * d[1] + d[1] * d[1];
                (C64::new(1.0, 0.0), C64::new(-0.5 * q, k[0] * z[0] + k[1] * z[1]))
            },
            &h,
            &center,
            &rule,
        )
        .unwrap();
        let hinv = h.clone().try_inverse().unwrap();
        let kk = hinv[(0, 0)] * k[0] * k[0] + 2.0 * hinv[(0, 1)] * k[0] * k[1] + hinv[(1, 1)] * k[1] * k[1];
        let expected = C64::new(0.0, k[0] * center[0] + k[1] * center[1]).exp() * (-0.5 * kk).exp() * 2.0 * PI
            / h.determinant().sqrt();
        assert!((v - expected).norm() < 1e-13);
    }
}
