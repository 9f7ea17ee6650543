//! The graded monomial basis
//! `u_α(X) = {C_Φ/hⁿ · 2^{|α|}/(α! h^{|α|})}^{1/2} (RX)^α e^{⟨X, Φ″_{XX} X⟩/h}`.
//!
//! Inner products against `e^{−2Φ/h}` are evaluated in the scaled coordinates
//! `Z = √(2/h)·RX`, where the exponential factors of `u_α`, `ū_β` and the
//! weight collapse to exactly `e^{−|Z|²}`:
//!
//! `⟨f u_α, u_β⟩_{L²_Φ} = π⁻ⁿ ∫ f(X(Z)) Z^α Z̄^β (α!β!)^{−1/2} e^{−|Z|²} L(dZ)`.
//!
//! This stays integrable even when `e^{−2Φ/h}` alone is not (heat-kernel phase).

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::linalg::{bdot, mat_vec};
use crate::quadrature::{tensor_fold, QuadratureRule};
use crate::{CMat, Error, Result, SpaceContext, C64};

/// Multi-indices `α ∈ ℕ₀ⁿ` with `|α| ≤ N` in graded lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexSet {
    n: usize,
    degree: usize,
    indices: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl MultiIndexSet {
    pub fn new(n: usize, degree: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        let mut indices = Vec::new();
        for k in 0..=degree {
            let mut cur = vec![0; n];
            push_degree(&mut indices, &mut cur, 0, k);
        }
        let lookup = indices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        Self { n, degree, indices, lookup }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Truncation degree `N`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> &[usize] {
        &self.indices[i]
    }

    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Number of indices with `|α| ≤ d`; the leading block of a sub-truncation.
    pub fn leading_len(&self, d: usize) -> usize {
        binomial(d.min(self.degree) + self.n, self.n)
    }

    pub fn sub(&self, d: usize) -> Self {
        Self::new(self.n, d.min(self.degree))
    }
}

// descending lexicographic order within a degree: (k,0,..), (k−1,1,..), ...
fn push_degree(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, pos: usize, remaining: usize) {
    let n = cur.len();
    if pos == n - 1 {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v;
        push_degree(out, cur, pos + 1, remaining - v);
    }
    cur[pos] = 0;
}

pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

pub fn enumerate_multiindices(n: usize, degree: usize) -> MultiIndexSet {
    MultiIndexSet::new(n, degree)
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// `u_α(X)`, with the normalization evaluated in log space.
pub fn u_alpha_eval(ctx: &SpaceContext, alpha: &[usize], x: &[C64]) -> C64 {
    let h = ctx.h();
    let n = ctx.n() as f64;
    let k: usize = alpha.iter().sum();
    let ln_norm = 0.5
        * (ctx.c_big_phi().ln() - n * h.ln() + k as f64 * (2.0f64.ln() - h.ln())
            - alpha.iter().map(|&a| ln_factorial(a)).sum::<f64>());
    let rx = ctx.apply_r(x);
    let mono: C64 = rx.iter().zip(alpha).map(|(w, &a)| w.powu(a as u32)).product();
    let q = bdot(x, &mat_vec(ctx.phi_xx(), x));
    mono * (q / h + ln_norm).exp()
}

/// Fills `out[i] = Π_j z_j^{α_j}/√(α_j!)` for every index of `set`.
pub(crate) fn normalized_monomials(set: &MultiIndexSet, z: &[C64], powers: &mut [Vec<C64>], out: &mut [C64]) {
    let deg = set.degree();
    for (j, zj) in z.iter().enumerate() {
        let p = &mut powers[j];
        p[0] = C64::new(1.0, 0.0);
        for k in 1..=deg {
            p[k] = p[k - 1] * zj / (k as f64).sqrt();
        }
    }
    for (o, alpha) in out.iter_mut().zip(set.indices()) {
        let mut v = C64::new(1.0, 0.0);
        for (j, &a) in alpha.iter().enumerate() {
            v *= powers[j][a];
        }
        *o = v;
    }
}

/// `X = √(h/2)·R⁻¹Z`.
pub(crate) fn x_from_z(ctx: &SpaceContext, z: &[C64]) -> Vec<C64> {
    let s = (ctx.h() / 2.0).sqrt();
    let scaled: Vec<C64> = z.iter().map(|v| v * s).collect();
    ctx.apply_r_inv(&scaled)
}

struct Scratch {
    acc: Vec<C64>,
    z: Vec<C64>,
    left: Vec<C64>,
    right: Vec<C64>,
    powers: Vec<Vec<C64>>,
    vl: Vec<C64>,
    vr: Vec<C64>,
}

/// Generic Galerkin assembly over the Gauss-Hermite grid in `Z` coordinates:
///
/// `M[β, α] = π⁻ⁿ Σ w · factor · v_α(left) · conj(v_β(right))`
///
/// where `point(z, left, right)` receives the node `z ∈ ℂⁿ`, fills the two
/// evaluation points and returns the integrand factor (the `e^{−|z|²}` weight
/// is supplied by the rule).
pub(crate) fn assemble<F>(set: &MultiIndexSet, rule: &QuadratureRule, point: F) -> Result<CMat>
where
    F: Fn(&[C64], &mut [C64], &mut [C64]) -> Result<C64> + Sync,
{
    let n = set.n();
    let k = set.len();
    let deg = set.degree();
    let acc = tensor_fold(
        rule,
        2 * n,
        || Scratch {
            acc: vec![C64::new(0.0, 0.0); k * k],
            z: vec![C64::new(0.0, 0.0); n],
            left: vec![C64::new(0.0, 0.0); n],
            right: vec![C64::new(0.0, 0.0); n],
            powers: vec![vec![C64::new(0.0, 0.0); deg + 1]; n],
            vl: vec![C64::new(0.0, 0.0); k],
            vr: vec![C64::new(0.0, 0.0); k],
        },
        |s, nodes, w| {
            for j in 0..n {
                s.z[j] = C64::new(nodes[2 * j], nodes[2 * j + 1]);
            }
            let factor = point(&s.z, &mut s.left, &mut s.right)?;
            if !(factor.re.is_finite() && factor.im.is_finite()) {
                return Err(Error::NonFiniteSample { node: nodes.to_vec() });
            }
            normalized_monomials(set, &s.left, &mut s.powers, &mut s.vl);
            normalized_monomials(set, &s.right, &mut s.powers, &mut s.vr);
            let f = factor * w;
            for a in 0..k {
                s.vl[a] *= f;
            }
            for b in 0..k {
                let rb = s.vr[b].conj();
                let row = &mut s.acc[b * k..(b + 1) * k];
                for (r, l) in row.iter_mut().zip(&s.vl) {
                    *r += l * rb;
                }
            }
            Ok(())
        },
        |a, b| {
            for (x, y) in a.acc.iter_mut().zip(b.acc) {
                *x += y;
            }
        },
    )?;
    let scale = PI.powi(-(n as i32));
    Ok(CMat::from_row_slice(k, k, &acc.acc).map(|z| z * scale))
}

/// `M[β, α] = ⟨f u_α, u_β⟩_{L²_Φ}` for a multiplier `f` given on `ℂⁿ`.
pub fn galerkin_matrix<F>(ctx: &SpaceContext, set: &MultiIndexSet, rule: &QuadratureRule, f: F) -> Result<CMat>
where
    F: Fn(&[C64]) -> Result<C64> + Sync,
{
    check_dim(ctx, set)?;
    assemble(set, rule, |z, left, right| {
        left.copy_from_slice(z);
        right.copy_from_slice(z);
        f(&x_from_z(ctx, z))
    })
}

/// `G[α, β] = ⟨u_α, u_β⟩_{H_Φ}`; the identity up to quadrature error.
pub fn gram_matrix(ctx: &SpaceContext, set: &MultiIndexSet, rule: &QuadratureRule) -> Result<CMat> {
    check_dim(ctx, set)?;
    assemble(set, rule, |z, left, right| {
        left.copy_from_slice(z);
        right.copy_from_slice(z);
        Ok(C64::new(1.0, 0.0))
    })
}

pub(crate) fn check_dim(ctx: &SpaceContext, set: &MultiIndexSet) -> Result<()> {
    if ctx.n() != set.n() {
        return Err(Error::DimensionMismatch { expected: ctx.n(), actual: set.n() });
    }
    Ok(())
}

/// An element of `H_Φ` as coefficients over `u_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct HSpaceVector {
    truncation: MultiIndexSet,
    coeffs: Vec<C64>,
}

impl HSpaceVector {
    pub fn new(truncation: MultiIndexSet, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != truncation.len() {
            return Err(Error::DimensionMismatch { expected: truncation.len(), actual: coeffs.len() });
        }
        Ok(Self { truncation, coeffs })
    }

    /// The basis element `u_α` itself.
    pub fn unit(truncation: MultiIndexSet, alpha: &[usize]) -> Result<Self> {
        let pos = truncation
            .position(alpha)
            .ok_or_else(|| Error::InvalidParameter(format!("{alpha:?} is outside the truncation")))?;
        let mut coeffs = vec![C64::new(0.0, 0.0); truncation.len()];
        coeffs[pos] = C64::new(1.0, 0.0);
        Ok(Self { truncation, coeffs })
    }

    pub fn truncation(&self) -> &MultiIndexSet {
        &self.truncation
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// `H_Φ` norm; the `u_α` are orthonormal so this is the ℓ² norm.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn eval(&self, ctx: &SpaceContext, x: &[C64]) -> C64 {
        self.truncation
            .indices()
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(a, c)| c * u_alpha_eval(ctx, a, x))
            .sum()
    }

    /// `f ↦ Σ_β ⟨f, u_β⟩ u_β` for `f` given pointwise on `ℂⁿ`.
    pub fn project<F>(ctx: &SpaceContext, truncation: MultiIndexSet, rule: &QuadratureRule, f: F) -> Result<Self>
    where
        F: Fn(&[C64]) -> C64 + Sync,
    {
        check_dim(ctx, &truncation)?;
        let n = ctx.n();
        let k = truncation.len();
        let deg = truncation.degree();
        let h = ctx.h();
        let set = &truncation;
        let acc = tensor_fold(
            rule,
            2 * n,
            || (vec![C64::new(0.0, 0.0); k], vec![vec![C64::new(0.0, 0.0); deg + 1]; n], vec![C64::new(0.0, 0.0); k]),
            |(acc, powers, v), nodes, w| {
                let z: Vec<C64> = (0..n).map(|j| C64::new(nodes[2 * j], nodes[2 * j + 1])).collect();
                let x = x_from_z(ctx, &z);
                let q = bdot(&x, &mat_vec(ctx.phi_xx(), &x));
                let val = f(&x) * (-q / h).exp();
                if !(val.re.is_finite() && val.im.is_finite()) {
                    return Err(Error::NonFiniteSample { node: nodes.to_vec() });
                }
                normalized_monomials(set, &z, powers, v);
                for (a, vb) in acc.iter_mut().zip(v.iter()) {
                    *a += w * val * vb.conj();
                }
                Ok(())
            },
            |a, b| {
                for (x, y) in a.0.iter_mut().zip(b.0) {
                    *x += y;
                }
            },
        )?;
        let scale = (h.powi(n as i32) / ctx.c_big_phi()).sqrt() * PI.powi(-(n as i32));
        let coeffs = acc.0.into_iter().map(|c| c * scale).collect();
        Ok(Self { truncation, coeffs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PhaseMatrices;
    use crate::linalg::max_abs_diff;
    use crate::quadrature::gauss_hermite_rule;

    #[test]
    fn enumeration_sizes_and_order() {
        assert_eq!(MultiIndexSet::new(2, 3).len(), 10);
        assert_eq!(MultiIndexSet::new(1, 0).indices(), &[vec![0]]);
        let s = MultiIndexSet::new(3, 2);
        assert_eq!(&s.indices()[..4], &[vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(s.len(), binomial(5, 3));
        let s2 = MultiIndexSet::new(2, 2);
        assert_eq!(&s2.indices()[3..], &[vec![2, 0], vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn sub_truncations_nest() {
        let big = MultiIndexSet::new(2, 7);
        for d in 0..=7 {
            let small = big.sub(d);
            assert_eq!(small.len(), big.leading_len(d));
            assert_eq!(small.indices(), &big.indices()[..small.len()]);
        }
    }

    #[test]
    fn ground_state_values() {
        let ctx = SpaceContext::new(PhaseMatrices::fock(1, 1.0), 1.0).unwrap();
        for x in [C64::new(0.0, 0.0), C64::new(1.5, -0.3)] {
            let u0 = u_alpha_eval(&ctx, &[0], &[x]);
            assert!((u0 - C64::new(PI.powf(-0.5), 0.0)).norm() < 1e-14);
        }
        let heat = SpaceContext::new(PhaseMatrices::heat_kernel(2), 0.4).unwrap();
        let u0 = u_alpha_eval(&heat, &[0, 0], &[C64::new(0.0, 0.0); 2]);
        assert!((u0.re - (heat.c_big_phi() / 0.16).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn weight_reduction_identity() {
        for (phase, h) in [(PhaseMatrices::fock(1, 1.0), 0.7), (PhaseMatrices::heat_kernel(1), 0.3)] {
            let ctx = SpaceContext::new(phase, h).unwrap();
            for (i, x) in [C64::new(0.3, -0.8), C64::new(-1.1, 0.4)].into_iter().enumerate() {
                let alpha = [i + 2];
                let lhs = u_alpha_eval(&ctx, &alpha, &[x]).norm_sqr() * (-2.0 * ctx.phi_weight(&[x]) / h).exp();
                let rx2 = ctx.apply_r(&[x])[0].norm_sqr();
                let k = alpha[0] as i32;
                let rhs = ctx.c_big_phi() / h * (2.0 / h).powi(k) / ln_factorial(alpha[0]).exp()
                    * rx2.powi(k)
                    * (-2.0 * rx2 / h).exp();
                assert!((lhs - rhs).abs() < 1e-12 * rhs.max(1e-300));
            }
        }
    }

    #[test]
    fn gram_is_identity_for_examples() {
        let rule = gauss_hermite_rule(60).unwrap();
        let set = MultiIndexSet::new(1, 10);
        for phase in [PhaseMatrices::fock(1, 1.0), PhaseMatrices::heat_kernel(1)] {
            let ctx = SpaceContext::new(phase, 1.0).unwrap();
            let g = gram_matrix(&ctx, &set, &rule).unwrap();
            assert!(max_abs_diff(&g, &CMat::identity(set.len(), set.len())) < 1e-8);
        }
        let ctx = SpaceContext::new(PhaseMatrices::fock(1, 1.0), 1.0).unwrap();
        let g0 = gram_matrix(&ctx, &MultiIndexSet::new(1, 0), &rule).unwrap();
        assert!((g0[(0, 0)] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn projection_round_trip() {
        let ctx = SpaceContext::new(PhaseMatrices::heat_kernel(1), 0.5).unwrap();
        let rule = gauss_hermite_rule(40).unwrap();
        let set = MultiIndexSet::new(1, 8);
        let v = HSpaceVector::project(&ctx, set.clone(), &rule, |x| u_alpha_eval(&ctx, &[3], x)).unwrap();
        let e = HSpaceVector::unit(set, &[3]).unwrap();
        for (a, b) in v.coeffs().iter().zip(e.coeffs()) {
            assert!((a - b).norm() < 1e-8);
        }
        assert!((v.norm() - 1.0).abs() < 1e-8);
    }
}
