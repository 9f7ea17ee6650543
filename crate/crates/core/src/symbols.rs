//! Symbols on `ℂⁿ` and their differential calculus.
//!
//! The workhorse is [`PlaneWaveSum`], `b(X) = Σ c_j e^{i Re⟨X, λ_j⟩}` with the
//! bilinear pairing `⟨X, λ⟩ = Σ X_k λ_k`. With
//! `∂_X e^{iRe⟨X,λ⟩} = (iλ/2) e^{…}` and `∂_X̄ e^{iRe⟨X,λ⟩} = (iλ̄/2) e^{…}`
//! the family is closed under every operation used downstream, so `Q`,
//! `{·,·}`, `Δ`, `Q₁`, modulation, translation and products are exact.
//!
//! [`CallableSymbol`] wraps a black-box function; its calculus falls back to
//! central finite differences with an explicit step.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::linalg::{bdot, conj_vec, mat_vec};
use crate::{CMat, Error, Result, SpaceContext, C64};

pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWave {
    pub coeff: C64,
    pub freq: Vec<C64>,
}

impl PlaneWave {
    pub fn new(coeff: C64, freq: Vec<C64>) -> Self {
        Self { coeff, freq }
    }

    fn phase(&self, x: &[C64]) -> f64 {
        bdot(x, &self.freq).re
    }
}

/// `Σ c_j e^{i Re⟨X, λ_j⟩}`, kept canonical: sorted by frequency, equal
/// frequencies merged, exact zeros dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveSum {
    n: usize,
    terms: Vec<PlaneWave>,
}

fn freq_cmp(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

fn freq_close(a: &[C64], b: &[C64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() <= 1e-12 * (1.0 + x.norm().max(y.norm())))
}

impl PlaneWaveSum {
    pub fn new(n: usize, terms: Vec<PlaneWave>) -> Result<Self> {
        for t in &terms {
            if t.freq.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: t.freq.len() });
            }
        }
        Ok(Self::canonical(n, terms))
    }

    fn canonical(n: usize, mut terms: Vec<PlaneWave>) -> Self {
        terms.sort_by(|a, b| freq_cmp(&a.freq, &b.freq));
        let mut out: Vec<PlaneWave> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if freq_close(&last.freq, &t.freq) => last.coeff += t.coeff,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coeff != C64::new(0.0, 0.0));
        Self { n, terms: out }
    }

    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn constant(n: usize, c: C64) -> Self {
        Self::canonical(n, vec![PlaneWave::new(c, vec![C64::new(0.0, 0.0); n])])
    }

    /// `c e^{iRe⟨X, λ⟩}`.
    pub fn single(coeff: C64, freq: Vec<C64>) -> Self {
        let n = freq.len();
        Self::canonical(n, vec![PlaneWave::new(coeff, freq)])
    }

    /// `cos Re⟨X, λ⟩`.
    pub fn cos(freq: Vec<C64>) -> Self {
        let neg: Vec<C64> = freq.iter().map(|z| -z).collect();
        let n = freq.len();
        Self::canonical(n, vec![PlaneWave::new(C64::new(0.5, 0.0), freq), PlaneWave::new(C64::new(0.5, 0.0), neg)])
    }

    /// `sin Re⟨X, λ⟩`.
    pub fn sin(freq: Vec<C64>) -> Self {
        let neg: Vec<C64> = freq.iter().map(|z| -z).collect();
        let n = freq.len();
        Self::canonical(n, vec![PlaneWave::new(C64::new(0.0, -0.5), freq), PlaneWave::new(C64::new(0.0, 0.5), neg)])
    }

    /// Parses `[re c, im c, re λ₁, im λ₁, …]` tuples.
    pub fn from_tuples(n: usize, tuples: &[Vec<f64>]) -> Result<Self> {
        let mut terms = Vec::with_capacity(tuples.len());
        for t in tuples {
            if t.len() != 2 + 2 * n {
                return Err(Error::DimensionMismatch { expected: 2 + 2 * n, actual: t.len() });
            }
            let freq = (0..n).map(|j| C64::new(t[2 + 2 * j], t[3 + 2 * j])).collect();
            terms.push(PlaneWave::new(C64::new(t[0], t[1]), freq));
        }
        Self::new(n, terms)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PlaneWave] {
        &self.terms
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        self.terms.iter().map(|t| t.coeff * C64::from_polar(1.0, t.phase(x))).sum()
    }

    /// `Σ |c_j|`, an upper bound for the sup norm.
    pub fn coeff_l1(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    /// Whether `b` is real-valued: the term list is closed under
    /// `(c, λ) ↦ (c̄, −λ)`.
    pub fn is_real_valued(&self) -> bool {
        let conj = self.map_terms(|t| PlaneWave::new(t.coeff.conj(), t.freq.iter().map(|z| -z).collect()));
        let diff = self.add(&conj.scale(C64::new(-1.0, 0.0)));
        diff.coeff_l1() <= 1e-14 * (1.0 + self.coeff_l1())
    }

    fn map_terms(&self, f: impl Fn(&PlaneWave) -> PlaneWave) -> Self {
        Self::canonical(self.n, self.terms.iter().map(f).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::canonical(self.n, terms)
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_terms(|t| PlaneWave::new(t.coeff * s, t.freq.clone()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(PlaneWave::new(a.coeff * b.coeff, add_freq(&a.freq, &b.freq)));
            }
        }
        Self::canonical(self.n, terms)
    }

    /// `e^{iRe⟨X, λ⟩} b(X)`.
    pub fn modulate(&self, lambda: &[C64]) -> Self {
        self.map_terms(|t| PlaneWave::new(t.coeff, add_freq(&t.freq, lambda)))
    }

    /// `b(X + λ)`.
    pub fn translate(&self, lambda: &[C64]) -> Self {
        self.map_terms(|t| PlaneWave::new(t.coeff * C64::from_polar(1.0, t.phase(lambda)), t.freq.clone()))
    }

    /// Multiplies each term by `f(λ_j)`.
    pub fn damp(&self, f: impl Fn(&[C64]) -> f64) -> Self {
        self.map_terms(|t| PlaneWave::new(t.coeff * f(&t.freq), t.freq.clone()))
    }

    fn pair_form(&self, other: &Self, g: &CMat, f: impl Fn(C64) -> C64) -> Self {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                // λᵀ G μ̄
                let pairing = bdot(&a.freq, &mat_vec(g, &conj_vec(&b.freq)));
                terms.push(PlaneWave::new(f(pairing) * a.coeff * b.coeff, add_freq(&a.freq, &b.freq)));
            }
        }
        Self::canonical(self.n, terms)
    }
}

fn add_freq(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

type SymbolFn = Arc<dyn Fn(&[C64]) -> C64 + Send + Sync>;

/// A black-box symbol. Membership in the bounded class and in `𝒯` is declared
/// by the caller; `fd_step` enables the finite-difference calculus.
#[derive(Clone)]
pub struct CallableSymbol {
    n: usize,
    f: SymbolFn,
    pub declared_bounded: bool,
    pub declared_in_t: bool,
    pub fd_step: Option<f64>,
}

impl fmt::Debug for CallableSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallableSymbol")
            .field("n", &self.n)
            .field("declared_bounded", &self.declared_bounded)
            .field("declared_in_t", &self.declared_in_t)
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl CallableSymbol {
    pub fn new(n: usize, f: impl Fn(&[C64]) -> C64 + Send + Sync + 'static) -> Self {
        Self { n, f: Arc::new(f), declared_bounded: false, declared_in_t: false, fd_step: None }
    }

    /// Declares the symbol bounded (hence in `𝒯`) and enables finite differences.
    pub fn bounded(n: usize, f: impl Fn(&[C64]) -> C64 + Send + Sync + 'static) -> Self {
        Self { declared_bounded: true, declared_in_t: true, fd_step: Some(DEFAULT_FD_STEP), ..Self::new(n, f) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn call(&self, x: &[C64]) -> C64 {
        (self.f)(x)
    }

    fn derive(&self, f: impl Fn(&[C64]) -> C64 + Send + Sync + 'static) -> Self {
        Self { n: self.n, f: Arc::new(f), ..self.clone() }
    }
}

#[derive(Debug, Clone)]
pub enum Symbol {
    PlaneWaves(PlaneWaveSum),
    Callable(CallableSymbol),
}

impl From<PlaneWaveSum> for Symbol {
    fn from(p: PlaneWaveSum) -> Self {
        Symbol::PlaneWaves(p)
    }
}

impl From<CallableSymbol> for Symbol {
    fn from(c: CallableSymbol) -> Self {
        Symbol::Callable(c)
    }
}

impl Symbol {
    pub fn n(&self) -> usize {
        match self {
            Symbol::PlaneWaves(p) => p.n,
            Symbol::Callable(c) => c.n,
        }
    }

    pub fn eval(&self, x: &[C64]) -> Result<C64> {
        let v = match self {
            Symbol::PlaneWaves(p) => p.eval(x),
            Symbol::Callable(c) => c.call(x),
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn as_plane_waves(&self) -> Option<&PlaneWaveSum> {
        match self {
            Symbol::PlaneWaves(p) => Some(p),
            Symbol::Callable(_) => None,
        }
    }

    /// Plane-wave sums are bounded by construction.
    pub fn is_bounded(&self) -> bool {
        match self {
            Symbol::PlaneWaves(_) => true,
            Symbol::Callable(c) => c.declared_bounded,
        }
    }

    pub fn in_class_t(&self) -> bool {
        match self {
            Symbol::PlaneWaves(_) => true,
            Symbol::Callable(c) => c.declared_in_t || c.declared_bounded,
        }
    }

    fn evaluator(&self) -> SymbolFn {
        match self {
            Symbol::PlaneWaves(p) => {
                let p = p.clone();
                Arc::new(move |x| p.eval(x))
            }
            Symbol::Callable(c) => c.f.clone(),
        }
    }

    fn fd_step(&self) -> Result<Option<f64>> {
        match self {
            Symbol::PlaneWaves(_) => Ok(None),
            Symbol::Callable(c) => c
                .fd_step
                .map(Some)
                .ok_or_else(|| Error::UnsupportedSymbol("callable symbol has no finite-difference step".into())),
        }
    }

    fn template(&self, other: &Symbol) -> CallableSymbol {
        match (self, other) {
            (Symbol::Callable(c), _) | (_, Symbol::Callable(c)) => c.clone(),
            _ => unreachable!("template requested for two plane-wave symbols"),
        }
    }

    pub fn mul(&self, other: &Symbol) -> Symbol {
        match (self, other) {
            (Symbol::PlaneWaves(a), Symbol::PlaneWaves(b)) => a.mul(b).into(),
            _ => {
                let (fa, fb) = (self.evaluator(), other.evaluator());
                let mut c = self.template(other).derive(move |x| fa(x) * fb(x));
                c.declared_bounded = self.is_bounded() && other.is_bounded();
                c.declared_in_t = c.declared_bounded;
                c.into()
            }
        }
    }

    pub fn modulate(&self, lambda: &[C64]) -> Symbol {
        match self {
            Symbol::PlaneWaves(p) => p.modulate(lambda).into(),
            Symbol::Callable(c) => {
                let f = c.f.clone();
                let l = lambda.to_vec();
                c.derive(move |x| C64::from_polar(1.0, bdot(x, &l).re) * f(x)).into()
            }
        }
    }

    pub fn translate(&self, lambda: &[C64]) -> Symbol {
        match self {
            Symbol::PlaneWaves(p) => p.translate(lambda).into(),
            Symbol::Callable(c) => {
                let f = c.f.clone();
                let l = lambda.to_vec();
                c.derive(move |x| f(&add_freq(x, &l))).into()
            }
        }
    }
}

pub fn eval(b: &Symbol, x: &[C64]) -> Result<C64> {
    b.eval(x)
}

pub fn modulate(b: &Symbol, lambda: &[C64]) -> Symbol {
    b.modulate(lambda)
}

pub fn translate(b: &Symbol, lambda: &[C64]) -> Symbol {
    b.translate(lambda)
}

/// Wirtinger gradients `(∂_X f, ∂_X̄ f)` by central differences of step `d`.
pub fn fd_wirtinger_gradient(f: &dyn Fn(&[C64]) -> C64, x: &[C64], d: f64) -> (Vec<C64>, Vec<C64>) {
    let n = x.len();
    let mut dx = Vec::with_capacity(n);
    let mut dxbar = Vec::with_capacity(n);
    let mut p = x.to_vec();
    for j in 0..n {
        let mut partial = |dir: C64| {
            p[j] = x[j] + dir * d;
            let fp = f(&p);
            p[j] = x[j] - dir * d;
            let fm = f(&p);
            p[j] = x[j];
            (fp - fm) / (2.0 * d)
        };
        let fx = partial(C64::new(1.0, 0.0));
        let fy = partial(C64::new(0.0, 1.0));
        let i = C64::new(0.0, 1.0);
        dx.push(0.5 * (fx - i * fy));
        dxbar.push(0.5 * (fx + i * fy));
    }
    (dx, dxbar)
}

/// Second Wirtinger derivatives `(∂_X∂_X f, ∂_X∂_X̄ f, ∂_X̄∂_X̄ f)` from the
/// central-difference real Hessian.
pub fn fd_wirtinger_hessians(f: &dyn Fn(&[C64]) -> C64, x: &[C64], d: f64) -> (CMat, CMat, CMat) {
    let n = x.len();
    let dirs: Vec<(usize, C64)> = (0..n)
        .flat_map(|j| [(j, C64::new(1.0, 0.0)), (j, C64::new(0.0, 1.0))])
        .collect();
    let m = 2 * n;
    let f0 = f(x);
    let shifted = |steps: &[(usize, C64, f64)]| {
        let mut p = x.to_vec();
        for &(j, dir, s) in steps {
            p[j] += dir * s;
        }
        f(&p)
    };
    let mut hess = vec![vec![C64::new(0.0, 0.0); m]; m];
    for u in 0..m {
        for v in u..m {
            let (ju, du) = dirs[u];
            let (jv, dv) = dirs[v];
            let val = if u == v {
                (shifted(&[(ju, du, d)]) - 2.0 * f0 + shifted(&[(ju, du, -d)])) / (d * d)
            } else {
                (shifted(&[(ju, du, d), (jv, dv, d)]) - shifted(&[(ju, du, d), (jv, dv, -d)])
                    - shifted(&[(ju, du, -d), (jv, dv, d)])
                    + shifted(&[(ju, du, -d), (jv, dv, -d)]))
                    / (4.0 * d * d)
            };
            hess[u][v] = val;
            hess[v][u] = val;
        }
    }
    let i = C64::new(0.0, 1.0);
    let mut hxx = CMat::zeros(n, n);
    let mut hxxbar = CMat::zeros(n, n);
    let mut hxbarxbar = CMat::zeros(n, n);
    for j in 0..n {
        for l in 0..n {
            let (xx, xy, yx, yy) = (hess[2 * j][2 * l], hess[2 * j][2 * l + 1], hess[2 * j + 1][2 * l], hess[2 * j + 1][2 * l + 1]);
            hxx[(j, l)] = 0.25 * (xx - i * xy - i * yx - yy);
            hxxbar[(j, l)] = 0.25 * (xx + i * xy - i * yx + yy);
            hxbarxbar[(j, l)] = 0.25 * (xx + i * xy + i * yx - yy);
        }
    }
    (hxx, hxxbar, hxbarxbar)
}

fn fd_binary(
    ctx: &SpaceContext,
    a: &Symbol,
    b: &Symbol,
    f: fn(&CMat, &dyn Fn(&[C64]) -> C64, &dyn Fn(&[C64]) -> C64, &[C64], f64) -> C64,
) -> Result<Symbol> {
    let step = a.fd_step()?.or(b.fd_step()?).expect("at least one callable");
    let (fa, fb) = (a.evaluator(), b.evaluator());
    let g = ctx.metric().clone();
    let mut c = a.template(b).derive(move |x| f(&g, &*fa, &*fb, x, step));
    c.declared_bounded = a.is_bounded() && b.is_bounded();
    c.declared_in_t = c.declared_bounded;
    Ok(c.into())
}

/// `Q(a, b) = ⟨∂a/∂X, (Φ″_{X̄X})⁻¹ ∂b/∂X̄⟩`.
pub fn q_form(ctx: &SpaceContext, a: &Symbol, b: &Symbol) -> Result<Symbol> {
    match (a, b) {
        (Symbol::PlaneWaves(pa), Symbol::PlaneWaves(pb)) => Ok(pa.pair_form(pb, ctx.metric(), |p| -0.25 * p).into()),
        _ => fd_binary(ctx, a, b, |g, fa, fb, x, d| {
            let (da, _) = fd_wirtinger_gradient(fa, x, d);
            let (_, db) = fd_wirtinger_gradient(fb, x, d);
            bdot(&da, &mat_vec(g, &db))
        }),
    }
}

/// `{a, b} = iQ(a, b) − iQ(b, a)`.
pub fn poisson(ctx: &SpaceContext, a: &Symbol, b: &Symbol) -> Result<Symbol> {
    let i = C64::new(0.0, 1.0);
    match (q_form(ctx, a, b)?, q_form(ctx, b, a)?) {
        (Symbol::PlaneWaves(x), Symbol::PlaneWaves(y)) => Ok(x.scale(i).add(&y.scale(-i)).into()),
        (x, y) => {
            let (fx, fy) = (x.evaluator(), y.evaluator());
            Ok(x.template(&y).derive(move |p| i * fx(p) - i * fy(p)).into())
        }
    }
}

/// `Δb = ½⟨∂/∂X, (Φ″_{X̄X})⁻¹ ∂/∂X̄⟩ b`.
pub fn laplace(ctx: &SpaceContext, b: &Symbol) -> Result<Symbol> {
    match b {
        Symbol::PlaneWaves(p) => {
            let g = ctx.metric();
            Ok(p.map_terms(|t| {
                let e = bdot(&t.freq, &mat_vec(g, &conj_vec(&t.freq)));
                PlaneWave::new(t.coeff * (-0.125 * e), t.freq.clone())
            })
            .into())
        }
        Symbol::Callable(c) => {
            let step = b.fd_step()?.expect("callable");
            let f = c.f.clone();
            let g = ctx.metric().clone();
            Ok(c
                .derive(move |x| {
                    let (_, hm, _) = fd_wirtinger_hessians(&*f, x, step);
                    0.5 * g.component_mul(&hm).sum()
                })
                .into())
        }
    }
}

/// `Q₁(a, b) = Σ G_{jk} G_{lm} ∂²a/∂X_j∂X_l ∂²b/∂X̄_k∂X̄_m` with `G = (Φ″_{X̄X})⁻¹`,
/// i.e. the trace pairing of `(Φ″_{XX̄})⁻¹∂²a/∂X²` and `(Φ″_{X̄X})⁻¹∂²b/∂X̄²`.
pub fn q1_form(ctx: &SpaceContext, a: &Symbol, b: &Symbol) -> Result<Symbol> {
    match (a, b) {
        (Symbol::PlaneWaves(pa), Symbol::PlaneWaves(pb)) => {
            Ok(pa.pair_form(pb, ctx.metric(), |p| p * p / 16.0).into())
        }
        _ => fd_binary(ctx, a, b, |g, fa, fb, x, d| {
            let (ha, _, _) = fd_wirtinger_hessians(fa, x, d);
            let (_, _, hb) = fd_wirtinger_hessians(fb, x, d);
            (g.transpose() * ha * g * hb).trace()
        }),
    }
}

/// A symbol of `(X, Y) ∈ ℂⁿ × ℂⁿ` stored as terms `c e^{i(⟨X,λ⟩ + ⟨Y,λ̄⟩)/2}`;
/// restricting to `Y = X̄` gives back `Σ c e^{iRe⟨X,λ⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizedSymbol {
    n: usize,
    terms: Vec<PlaneWave>,
}

impl PolarizedSymbol {
    pub fn from_plane_waves(p: &PlaneWaveSum) -> Self {
        Self { n: p.n, terms: p.terms.clone() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PlaneWave] {
        &self.terms
    }

    pub fn eval(&self, x: &[C64], y: &[C64]) -> C64 {
        let i = C64::new(0.0, 1.0);
        self.terms
            .iter()
            .map(|t| t.coeff * (i * (bdot(x, &t.freq) + bdot(y, &conj_vec(&t.freq))) / 2.0).exp())
            .sum()
    }

    pub fn restrict(&self, x: &[C64]) -> C64 {
        self.eval(x, &conj_vec(x))
    }
}

/// A plane wave on the real phase space, `c e^{i(⟨x, p⟩ + ⟨q, ξ⟩)}` with complex `p`, `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPlaneWave {
    pub coeff: C64,
    pub p: Vec<C64>,
    pub q: Vec<C64>,
}

impl RealPlaneWave {
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> C64 {
        let s: C64 = x.iter().zip(&self.p).map(|(a, b)| a * b).sum::<C64>()
            + xi.iter().zip(&self.q).map(|(a, b)| a * b).sum::<C64>();
        self.coeff * (C64::new(0.0, 1.0) * s).exp()
    }
}

/// `b′(X, θ) = b_pol(X, (Φ″_{XX̄})⁻¹(iθ/2 − Φ″_{XX} X))`.
#[derive(Debug, Clone)]
pub struct GuilleminSymbol {
    polarized: PolarizedSymbol,
    phi_xxbar_inv: CMat,
    phi_xx: CMat,
}

pub fn guillemin_symbol(ctx: &SpaceContext, b_polar: &PolarizedSymbol) -> GuilleminSymbol {
    GuilleminSymbol {
        polarized: b_polar.clone(),
        phi_xxbar_inv: ctx.phi_xxbar_inv().clone(),
        phi_xx: ctx.phi_xx().clone(),
    }
}

impl GuilleminSymbol {
    /// The affine map `Y(X, θ)` substituted for the second slot.
    pub fn second_slot(&self, x: &[C64], theta: &[C64]) -> Vec<C64> {
        let i = C64::new(0.0, 1.0);
        let mx = mat_vec(&self.phi_xx, x);
        let v: Vec<C64> = theta.iter().zip(mx).map(|(t, m)| i * t / 2.0 - m).collect();
        mat_vec(&self.phi_xxbar_inv, &v)
    }

    pub fn eval(&self, x: &[C64], theta: &[C64]) -> C64 {
        self.polarized.eval(x, &self.second_slot(x, theta))
    }

    /// `b′ ∘ κ_T` as plane waves in `(x, ξ) ∈ ℝ²ⁿ`.
    ///
    /// Each term is linear in `(X, θ)`: exponent `i(⟨X, u⟩ + ⟨θ, v⟩)/2` with
    /// `u = λ − Φ″_{XX} ᵀP λ̄`, `v = (i/2) ᵀP λ̄`, `P = (Φ″_{XX̄})⁻¹`; composing
    /// with `X = −ᵀB⁻¹(Cx + ξ)`, `θ = Bx − A ᵀB⁻¹(Cx + ξ)` gives `(p, q)`.
    pub fn compose_kappa(&self, ctx: &SpaceContext) -> Vec<RealPlaneWave> {
        let i = C64::new(0.0, 1.0);
        let ph = ctx.phase();
        let pt = self.phi_xxbar_inv.transpose();
        let b_inv = ctx.b_inv();
        let bt = ph.b().transpose();
        self.polarized
            .terms
            .iter()
            .map(|t| {
                let pl = mat_vec(&pt, &conj_vec(&t.freq));
                let m_pl = mat_vec(&self.phi_xx, &pl);
                let u: Vec<C64> = t.freq.iter().zip(&m_pl).map(|(l, m)| l - m).collect();
                let v: Vec<C64> = pl.iter().map(|z| z * i / 2.0).collect();
                let binv_u = mat_vec(b_inv, &u);
                let binv_av = mat_vec(b_inv, &mat_vec(ph.a(), &v));
                let s: Vec<C64> = binv_u.iter().zip(&binv_av).map(|(a, b)| a + b).collect();
                let c_s = mat_vec(ph.c(), &s);
                let bt_v = mat_vec(&bt, &v);
                let p = bt_v.iter().zip(&c_s).map(|(a, b)| 0.5 * (a - b)).collect();
                let q = s.iter().map(|z| -0.5 * z).collect();
                RealPlaneWave { coeff: t.coeff, p, q }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PhaseMatrices;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn fock() -> SpaceContext {
        SpaceContext::new(PhaseMatrices::fock(1, 1.0), 1.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        let one = PlaneWaveSum::constant(1, c(1.0, 0.0));
        assert_eq!(one.eval(&[c(3.0, -2.0)]), c(1.0, 0.0));
        let cs = PlaneWaveSum::cos(vec![c(1.0, 0.0)]);
        assert!((cs.eval(&[c(PI, 0.0)]) - c(-1.0, 0.0)).norm() < 1e-15);
        let t = PlaneWaveSum::single(c(0.0, 2.0), vec![c(1.0, 1.0)]);
        let expected = c(0.0, 2.0) * C64::from_polar(1.0, 1.0);
        assert!((t.eval(&[c(1.0, 0.0)]) - expected).norm() < 1e-15);
        let callable = Symbol::from(CallableSymbol::bounded(1, |x: &[C64]| c(0.0, 2.0) * C64::from_polar(1.0, (x[0] * c(1.0, 1.0)).re)));
        assert!((callable.eval(&[c(1.0, 0.0)]).unwrap() - expected).norm() < 1e-15);
    }

    #[test]
    fn nan_callable_is_reported() {
        let s = Symbol::from(CallableSymbol::new(1, |_| c(f64::NAN, 0.0)));
        assert_eq!(s.eval(&[c(0.0, 0.0)]), Err(Error::NonFinite));
    }

    #[test]
    fn canonicalization() {
        let p = PlaneWaveSum::new(
            1,
            vec![
                PlaneWave::new(c(1.0, 0.0), vec![c(1.0, 0.0)]),
                PlaneWave::new(c(2.0, 0.0), vec![c(1.0, 0.0)]),
                PlaneWave::new(c(0.0, 0.0), vec![c(5.0, 0.0)]),
                PlaneWave::new(c(1.0, 0.0), vec![c(-1.0, 0.0)]),
            ],
        )
        .unwrap();
        assert_eq!(p.terms().len(), 2);
        assert_eq!(PlaneWaveSum::canonical(1, p.terms.clone()), p);
        let zero = PlaneWaveSum::cos(vec![c(1.0, 0.0)]).add(&PlaneWaveSum::cos(vec![c(1.0, 0.0)]).scale(c(-1.0, 0.0)));
        assert!(zero.terms().is_empty());
    }

    #[test]
    fn modulation_and_translation() {
        let l = vec![c(0.5, -0.25)];
        let m = PlaneWaveSum::constant(1, c(1.0, 0.0)).modulate(&l);
        assert_eq!(m, PlaneWaveSum::single(c(1.0, 0.0), l.clone()));
        let b = PlaneWaveSum::cos(vec![c(1.0, 0.0)]).add(&PlaneWaveSum::single(c(0.3, 0.1), vec![c(0.0, 2.0)]));
        let back = b.modulate(&l).modulate(&[-l[0]]);
        assert_eq!(back.terms().len(), b.terms().len());
        for (x, y) in back.terms().iter().zip(b.terms()) {
            assert!((x.coeff - y.coeff).norm() < 1e-15 && (x.freq[0] - y.freq[0]).norm() < 1e-14);
        }
        let freqs: Vec<C64> = PlaneWaveSum::cos(vec![c(1.0, 0.0)]).modulate(&l).terms().iter().map(|t| t.freq[0]).collect();
        assert!(freqs.contains(&(c(1.0, 0.0) + l[0])) && freqs.contains(&(c(-1.0, 0.0) + l[0])));
        assert_eq!(b.translate(&[c(0.0, 0.0)]), b);
        let k = PlaneWaveSum::constant(1, c(2.0, 0.0));
        assert_eq!(k.translate(&l), k);
        let x = [c(0.2, 0.9)];
        let shifted = [x[0] + l[0]];
        assert!((b.translate(&l).eval(&x) - b.eval(&shifted)).norm() < 1e-14);
    }

    #[test]
    fn q_of_constant_vanishes() {
        let ctx = fock();
        let one: Symbol = PlaneWaveSum::constant(1, c(1.0, 0.0)).into();
        let b: Symbol = PlaneWaveSum::cos(vec![c(1.0, 0.5)]).into();
        let q = q_form(&ctx, &one, &b).unwrap();
        assert!(q.as_plane_waves().unwrap().terms().is_empty());
        let q1 = q1_form(&ctx, &one, &b).unwrap();
        assert!(q1.as_plane_waves().unwrap().terms().is_empty());
        let d = laplace(&ctx, &one).unwrap();
        assert!(d.as_plane_waves().unwrap().terms().is_empty());
    }

    #[test]
    fn fock_q_and_laplace_closed_forms() {
        let ctx = fock();
        let (l, m) = (c(0.7, -0.2), c(-0.3, 1.1));
        let a: Symbol = PlaneWaveSum::single(c(1.0, 0.0), vec![l]).into();
        let b: Symbol = PlaneWaveSum::single(c(1.0, 0.0), vec![m]).into();
        let q = q_form(&ctx, &a, &b).unwrap();
        let t = &q.as_plane_waves().unwrap().terms()[0];
        assert!((t.coeff - (-(l * m.conj()) / 2.0)).norm() < 1e-14);
        assert!((t.freq[0] - (l + m)).norm() < 1e-15);
        let lap = laplace(&ctx, &PlaneWaveSum::single(c(1.0, 0.0), vec![c(1.0, 0.0)]).into()).unwrap();
        assert!((lap.as_plane_waves().unwrap().terms()[0].coeff - c(-0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn poisson_antisymmetry_and_reality() {
        let ctx = SpaceContext::new(PhaseMatrices::heat_kernel(1), 0.5).unwrap();
        let a: Symbol = PlaneWaveSum::cos(vec![c(1.0, 0.3)]).add(&PlaneWaveSum::sin(vec![c(-0.4, 0.8)])).into();
        let b: Symbol = PlaneWaveSum::sin(vec![c(0.6, -1.0)]).into();
        let aa = poisson(&ctx, &a, &a).unwrap();
        assert!(aa.as_plane_waves().unwrap().coeff_l1() < 1e-15);
        let ab = poisson(&ctx, &a, &b).unwrap();
        let ba = poisson(&ctx, &b, &a).unwrap();
        for x in [c(0.1, 0.2), c(-1.3, 0.7)] {
            let (v1, v2) = (ab.eval(&[x]).unwrap(), ba.eval(&[x]).unwrap());
            assert!((v1 + v2).norm() < 1e-14);
            assert!(v1.im.abs() < 1e-14 * (1.0 + v1.norm()));
        }
        assert!(ab.as_plane_waves().unwrap().is_real_valued());
    }

    #[test]
    fn q1_is_not_symmetric() {
        let ctx = fock();
        let a: Symbol = PlaneWaveSum::single(c(1.0, 0.0), vec![c(1.0, 1.0)]).into();
        let b: Symbol = PlaneWaveSum::single(c(1.0, 0.0), vec![c(0.0, 2.0)]).into();
        let x = [c(0.4, -0.3)];
        let ab = q1_form(&ctx, &a, &b).unwrap().eval(&x).unwrap();
        let ba = q1_form(&ctx, &b, &a).unwrap().eval(&x).unwrap();
        assert!((ab - ba).norm() > 1e-3);
    }

    #[test]
    fn callable_without_step_is_unsupported() {
        let ctx = fock();
        let a: Symbol = CallableSymbol::new(1, |x: &[C64]| x[0].re.cos().into()).into();
        let b: Symbol = PlaneWaveSum::constant(1, c(1.0, 0.0)).into();
        assert!(matches!(q_form(&ctx, &a, &b), Err(Error::UnsupportedSymbol(_))));
        assert!(matches!(laplace(&ctx, &a), Err(Error::UnsupportedSymbol(_))));
    }

    #[test]
    fn polarization_restricts_to_symbol() {
        let p = PlaneWaveSum::cos(vec![c(1.0, 0.5)]).add(&PlaneWaveSum::single(c(0.2, -0.7), vec![c(-0.3, 0.9)]));
        let pol = PolarizedSymbol::from_plane_waves(&p);
        for x in [c(0.3, 0.1), c(-2.0, 1.4)] {
            assert!((pol.restrict(&[x]) - p.eval(&[x])).norm() < 1e-14);
        }
    }

    #[test]
    fn guillemin_of_constant_is_constant() {
        let ctx = SpaceContext::new(PhaseMatrices::heat_kernel(1), 0.5).unwrap();
        let pol = PolarizedSymbol::from_plane_waves(&PlaneWaveSum::constant(1, c(3.0, 1.0)));
        let g = guillemin_symbol(&ctx, &pol);
        assert!((g.eval(&[c(0.3, -2.0)], &[c(1.0, 5.0)]) - c(3.0, 1.0)).norm() < 1e-15);
        let waves = g.compose_kappa(&ctx);
        assert!((waves[0].eval(&[0.4], &[-0.2]) - c(3.0, 1.0)).norm() < 1e-15);
    }
}
