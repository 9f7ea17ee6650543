//! TOML experiment configuration. Complex numbers are `[re, im]` pairs and
//! matrices are row-major lists of pairs.

use hphi_core::bargmann::GaussianTestFn;
use hphi_core::heat::{LambdaGrid, XGrid};
use hphi_core::operators::{TruncationPolicy, DEFAULT_SLACK};
use hphi_core::symbols::{PlaneWaveSum, Symbol};
use hphi_core::{CMat, PhaseMatrices, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Seed of the built-in random admissible phase.
pub const DEFAULT_SEED: u64 = 20_240_611;

pub type Pair = [f64; 2];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub h_list: Option<Vec<f64>>,
    #[serde(default)]
    pub truncation: Option<usize>,
    #[serde(default)]
    pub n_schedule: Option<Vec<usize>>,
    #[serde(default)]
    pub out: Option<String>,
    pub phase: PhaseSpec,
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default)]
    pub symbols: Vec<SymbolSpec>,
    #[serde(default)]
    pub gaussians: Vec<GaussianSpec>,
    #[serde(default)]
    pub grids: GridSpec,
    #[serde(default)]
    pub diag: DiagSpec,
    #[serde(default)]
    pub deformation: Option<DeformationSpec>,
    #[serde(default)]
    pub sw: Option<SwSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_order() -> usize {
    60
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub n: usize,
    /// `fock`, `heat_kernel` or `random`; explicit `a`, `b`, `c` otherwise.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub a: Option<Vec<Pair>>,
    #[serde(default)]
    pub b: Option<Vec<Pair>>,
    #[serde(default)]
    pub c: Option<Vec<Pair>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub inner_drop: usize,
    pub guard: usize,
}

impl Default for PolicySpec {
    fn default() -> Self {
        let p = TruncationPolicy::default();
        Self { inner_drop: p.inner_drop, guard: p.guard }
    }
}

impl From<PolicySpec> for TruncationPolicy {
    fn from(p: PolicySpec) -> Self {
        TruncationPolicy { inner_drop: p.inner_drop, guard: p.guard }
    }
}

/// Plane-wave terms `[re c, im c, re λ₁, im λ₁, …]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub name: String,
    pub terms: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub center: Vec<f64>,
    pub width: f64,
    pub modulation: Vec<f64>,
    #[serde(default = "unit_pair")]
    pub amplitude: Pair,
}

fn unit_pair() -> Pair {
    [1.0, 0.0]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct XGridSpec {
    pub per_axis: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LambdaGridSpec {
    pub half_width: f64,
    /// Successive refinements, coarse to fine.
    pub per_axis: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub x_grid: Option<XGridSpec>,
    #[serde(default)]
    pub lambda_grid: Option<LambdaGridSpec>,
    /// Frequencies `λ` for the Weyl suite, one complex vector each.
    #[serde(default)]
    pub lambdas: Vec<Vec<Pair>>,
    /// Sample points `X` for the Egorov suite and space-info.
    #[serde(default)]
    pub points: Vec<Vec<Pair>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiagSpec {
    pub k_max: usize,
    pub radial_order: usize,
    pub angular_points: usize,
}

impl Default for DiagSpec {
    fn default() -> Self {
        Self { k_max: 2, radial_order: 40, angular_points: 48 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DeformationSpec {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SwSpec {
    pub symbol: String,
    /// Expected value of the `L¹` estimate, if known.
    #[serde(default)]
    pub target: Option<f64>,
}

/// Pass/fail thresholds; all are echoed with the report. Fields left out of
/// the config keep their defaults.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub geometry: f64,
    pub gram: f64,
    pub identity: f64,
    pub diag: f64,
    pub weyl: f64,
    pub bound_slack: f64,
    pub norm_rel: f64,
    pub slope_min: f64,
    pub slope_max: f64,
    pub degenerate: f64,
    pub egorov: f64,
    pub sw_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            geometry: 1e-10,
            gram: 1e-8,
            identity: 1e-8,
            diag: 1e-8,
            weyl: 1e-5,
            bound_slack: DEFAULT_SLACK,
            norm_rel: hphi_core::operators::NORM_REL_TOL,
            slope_min: 1.8,
            slope_max: 2.3,
            degenerate: 1e-8,
            egorov: 1e-6,
            sw_rel: 0.01,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn pair(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn cvec(v: &[Pair], n: usize, what: &str) -> CliResult<Vec<C64>> {
    if v.len() != n {
        return Err(invalid(format!("{what}: expected {n} complex entries, got {}", v.len())));
    }
    Ok(v.iter().map(pair).collect())
}

fn cmat(v: &Option<Vec<Pair>>, n: usize, what: &str) -> CliResult<CMat> {
    let v = v.as_ref().ok_or_else(|| invalid(format!("phase.{what} is required without a preset")))?;
    if v.len() != n * n {
        return Err(invalid(format!("phase.{what}: expected {} entries, got {}", n * n, v.len())));
    }
    Ok(CMat::from_row_iterator(n, n, v.iter().map(pair)))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn n(&self) -> usize {
        self.phase.n
    }

    fn validate(&self) -> CliResult<()> {
        if self.phase.n == 0 {
            return Err(invalid("phase.n must be positive"));
        }
        if let Some(h) = self.h {
            check_h(h)?;
        }
        if let Some(list) = &self.h_list {
            if list.is_empty() {
                return Err(invalid("h_list is empty"));
            }
            list.iter().try_for_each(|&h| check_h(h))?;
        }
        if matches!(&self.n_schedule, Some(s) if s.is_empty()) {
            return Err(invalid("n_schedule is empty"));
        }
        if let Some(g) = &self.grids.lambda_grid {
            if g.per_axis.is_empty() || g.per_axis.contains(&0) {
                return Err(invalid("grids.lambda_grid.per_axis needs positive entries"));
            }
        }
        if matches!(&self.grids.x_grid, Some(g) if g.per_axis == 0) {
            return Err(invalid("grids.x_grid.per_axis must be positive"));
        }
        let names: Vec<&str> = self.symbols.iter().map(|s| s.name.as_str()).collect();
        for (i, s) in names.iter().enumerate() {
            if names[..i].contains(s) {
                return Err(invalid(format!("symbol name {s:?} is repeated")));
            }
        }
        self.phase_matrices()?;
        self.plane_wave_symbols()?;
        self.gaussian_fns()?;
        self.lambdas()?;
        self.points()?;
        Ok(())
    }

    pub fn phase_matrices(&self) -> CliResult<PhaseMatrices> {
        let n = self.phase.n;
        match self.phase.preset.as_deref() {
            Some("fock") => {
                let beta = self.phase.beta.unwrap_or(1.0);
                if !(beta > 0.0) {
                    return Err(invalid("phase.beta must be positive"));
                }
                Ok(PhaseMatrices::fock(n, beta))
            }
            Some("heat_kernel") => Ok(PhaseMatrices::heat_kernel(n)),
            Some("random") => Ok(random_phase(n, self.seed)?),
            Some(other) => Err(invalid(format!("unknown phase preset {other:?}"))),
            None => Ok(PhaseMatrices::new(cmat(&self.phase.a, n, "a")?, cmat(&self.phase.b, n, "b")?, cmat(&self.phase.c, n, "c")?)?),
        }
    }

    pub fn h(&self) -> CliResult<f64> {
        self.h.ok_or_else(|| invalid("h is required for this suite"))
    }

    pub fn h_list(&self) -> CliResult<&[f64]> {
        self.h_list.as_deref().ok_or_else(|| invalid("h_list is required for this suite"))
    }

    pub fn truncation(&self) -> CliResult<usize> {
        self.truncation.ok_or_else(|| invalid("truncation is required for this suite"))
    }

    pub fn n_schedule(&self) -> CliResult<&[usize]> {
        self.n_schedule.as_deref().ok_or_else(|| invalid("n_schedule is required for this suite"))
    }

    pub fn plane_wave_symbols(&self) -> CliResult<Vec<(String, PlaneWaveSum)>> {
        self.symbols
            .iter()
            .map(|s| {
                let p = PlaneWaveSum::from_tuples(self.n(), &s.terms)
                    .map_err(|e| invalid(format!("symbol {:?}: {e}", s.name)))?;
                Ok((s.name.clone(), p))
            })
            .collect()
    }

    pub fn require_symbols(&self) -> CliResult<Vec<(String, PlaneWaveSum)>> {
        let s = self.plane_wave_symbols()?;
        if s.is_empty() {
            return Err(invalid("at least one [[symbols]] entry is required for this suite"));
        }
        Ok(s)
    }

    pub fn symbol(&self, name: &str) -> CliResult<Symbol> {
        self.plane_wave_symbols()?
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p.into())
            .ok_or_else(|| invalid(format!("no symbol named {name:?}")))
    }

    pub fn gaussian_fns(&self) -> CliResult<Vec<GaussianTestFn>> {
        self.gaussians
            .iter()
            .map(|g| {
                if g.center.len() != self.n() || g.modulation.len() != self.n() {
                    return Err(invalid("gaussian center/modulation length must equal phase.n"));
                }
                GaussianTestFn::new(g.center.clone(), g.width, g.modulation.clone(), pair(&g.amplitude)).map_err(CliError::from)
            })
            .collect()
    }

    pub fn lambdas(&self) -> CliResult<Vec<Vec<C64>>> {
        self.grids.lambdas.iter().map(|l| cvec(l, self.n(), "grids.lambdas")).collect()
    }

    pub fn points(&self) -> CliResult<Vec<Vec<C64>>> {
        self.grids.points.iter().map(|p| cvec(p, self.n(), "grids.points")).collect()
    }

    pub fn x_grid(&self) -> XGrid {
        match &self.grids.x_grid {
            Some(g) => XGrid { n: self.n(), per_axis: g.per_axis, half_width: g.half_width },
            None => XGrid::default_for(self.n()),
        }
    }

    pub fn lambda_grids(&self) -> CliResult<Vec<(usize, LambdaGrid)>> {
        let g = self.grids.lambda_grid.as_ref().ok_or_else(|| invalid("grids.lambda_grid is required for this suite"))?;
        Ok(g.per_axis.iter().map(|&k| (k, LambdaGrid::uniform(self.n(), g.half_width, k))).collect())
    }

    pub fn t_grid(&self) -> CliResult<&[f64]> {
        if self.grids.t_grid.is_empty() {
            return Err(invalid("grids.t_grid is required for this suite"));
        }
        Ok(&self.grids.t_grid)
    }
}

fn check_h(h: f64) -> CliResult<()> {
    if h > 0.0 && h <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("h = {h} is outside (0, 1]")))
    }
}

/// A seeded admissible phase: `C_I = I + SSᵀ/4`, `B = I + small`, `A`, `C_R`
/// symmetric. The ChaCha stream makes it depend on the seed only.
pub fn random_phase(n: usize, seed: u64) -> CliResult<PhaseMatrices> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = |s: f64| C64::new(rng.gen_range(-s..s), rng.gen_range(-s..s));
    let a0 = CMat::from_fn(n, n, |_, _| g(0.4));
    let a = (&a0 + a0.transpose()) * C64::new(0.5, 0.0);
    let b = CMat::identity(n, n) + CMat::from_fn(n, n, |_, _| g(0.3));
    let s = CMat::from_fn(n, n, |_, _| C64::new(g(1.0).re, 0.0));
    let cr0 = CMat::from_fn(n, n, |_, _| C64::new(g(0.5).re, 0.0));
    let cr = (&cr0 + cr0.transpose()) * C64::new(0.5, 0.0);
    let ci = CMat::identity(n, n) + &s * s.transpose() * C64::new(0.25, 0.0);
    Ok(PhaseMatrices::new(a, b, cr + ci * C64::new(0.0, 1.0))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOCK: &str = include_str!("../configs/example1_basic.toml");

    #[test]
    fn shipped_configs_parse() {
        for text in [
            FOCK,
            include_str!("../configs/example2_basic.toml"),
            include_str!("../configs/random_basic.toml"),
            include_str!("../configs/example1_weyl.toml"),
            include_str!("../configs/example2_weyl.toml"),
            include_str!("../configs/example1_bound.toml"),
            include_str!("../configs/example1_deformation.toml"),
            include_str!("../configs/example1_deformation_conjugate.toml"),
            include_str!("../configs/example1_egorov.toml"),
            include_str!("../configs/example2_egorov.toml"),
            include_str!("../configs/example1_sw.toml"),
        ] {
            ExperimentConfig::from_toml(text).unwrap();
        }
        assert!(ExperimentConfig::from_toml(include_str!("../configs/example1_invalid.toml")).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ExperimentConfig::from_toml(FOCK).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn explicit_matrices_are_row_major() {
        let text = "h = 1.0\n[phase]\nn = 2\na = [[0,0],[0.1,0],[0.1,0],[0,0]]\nb = [[1,0],[2,0],[0,0],[1,0]]\nc = [[0,1],[0,0],[0,0],[0,1]]\n";
        let p = ExperimentConfig::from_toml(text).unwrap().phase_matrices().unwrap();
        assert_eq!(p.b()[(0, 1)], C64::new(2.0, 0.0));
        assert_eq!(p.b()[(1, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn random_phase_depends_on_seed_only() {
        let a = random_phase(2, 7).unwrap();
        assert_eq!(a, random_phase(2, 7).unwrap());
        assert_ne!(a, random_phase(2, 8).unwrap());
    }

    #[test]
    fn partial_tolerances_keep_defaults() {
        let cfg = ExperimentConfig::from_toml(&format!("{FOCK}\n[tolerances]\nweyl = 1e-3\n")).unwrap();
        assert_eq!(cfg.tolerances.weyl, 1e-3);
        assert_eq!(cfg.tolerances.gram, Tolerances::default().gram);
    }
}
