//! Reduction of `-Δ + b/|x|²` on `ℝ^N` to radial blocks.
//!
//! A function `f(x) = Σ_j h_j(|x|) Q_j(x/|x|)` with finitely many spherical
//! harmonics `Q_j` is stored symbolically as a [`SeparableFunction`]: each
//! term is a harmonic label and the profile `h_j`. The maps
//! `F_j g = r^{-(N-1)/2} g ⊗ Q_j` and `G_j f = r^{(N-1)/2} h_j` are then exact,
//! and the operator acts on `g_j = G_j f` as `-d²/dr² + b_j/r²` with the
//! effective coupling `b_j = b + ((N-2)/2)² - 1/4 + n(N-2+n)`.
//!
//! Blocks with `b_j ≥ -1/4` use the Friedrichs extension; the finitely many
//! blocks with `b_j < -1/4` need an extension `L_{A_j}` that generates an
//! analytic semigroup.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::extensions::{classify, ExtensionParams};
use crate::radial::{fornberg_weights, RadialFunction, RadialGrid};
use crate::resolvent::{green_apply_sampled, norm_estimate_on_grid, ExtensionResolvent, Resolvent};
use crate::solutions::SpectralOmega;
use crate::special_functions::{i_real_scaled, k_real_scaled};

/// Couplings at or above this value have a nonnegative form after the
/// radial reduction and get the Friedrichs extension.
pub const FRIEDRICHS_THRESHOLD: f64 = -0.25;

/// Spherical-harmonic degree `n` in dimension `N` together with the
/// Laplace–Beltrami eigenvalue `λ = n(N-2+n)` and the coupling `b_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMode {
    pub dim: usize,
    pub degree: usize,
    pub lambda: f64,
    pub b_eff: f64,
}

impl HarmonicMode {
    /// Number of linearly independent harmonics of this degree,
    /// `C(n+N-1, N-1) - C(n+N-3, N-1)`.
    pub fn multiplicity(&self) -> usize {
        let n = self.degree;
        let d = self.dim;
        binomial(n + d - 1, d - 1) - if n >= 2 { binomial(n + d - 3, d - 1) } else { 0 }
    }

    pub fn is_deficient(&self) -> bool {
        self.b_eff < FRIEDRICHS_THRESHOLD
    }

    /// `ν_j = √(-b_j - 1/4)` for deficient modes.
    pub fn nu(&self) -> Option<f64> {
        self.is_deficient().then(|| (-self.b_eff - 0.25).sqrt())
    }

    /// Bessel order `σ_j = √(b_j + 1/4)` of the Friedrichs block.
    pub fn sigma(&self) -> Option<f64> {
        (!self.is_deficient()).then(|| (self.b_eff + 0.25).max(0.0).sqrt())
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `HarmonicMode` of degree `n` for the coupling `b` in dimension `N ≥ 2`.
pub fn effective_coupling(b: f64, dim: usize, degree: usize) -> Result<HarmonicMode> {
    if dim < 2 {
        return Err(Error::Invalid(format!("dimension must be at least 2, got {dim}")));
    }
    if !b.is_finite() {
        return Err(Error::Invalid("coupling must be finite".into()));
    }
    let n = degree as f64;
    let lambda = n * (dim as f64 - 2.0 + n);
    let half = (dim as f64 - 2.0) / 2.0;
    Ok(HarmonicMode {
        dim,
        degree,
        lambda,
        b_eff: b + half * half - 0.25 + lambda,
    })
}

/// Degrees `n` with `b_j < -1/4`, enumerated until the coupling crosses the
/// threshold. `b_j` increases strictly with `n`, so these form an initial
/// segment `0..k`.
pub fn deficient_degrees(b: f64, dim: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for n in 0.. {
        let mode = effective_coupling(b, dim, n)?;
        debug_assert!(mode.b_eff > prev);
        prev = mode.b_eff;
        if !mode.is_deficient() {
            break;
        }
        out.push(n);
    }
    Ok(out)
}

/// Identifies one harmonic `Q_j`: its degree and an index below the
/// multiplicity of that degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HarmonicLabel {
    pub degree: usize,
    pub index: usize,
}

impl HarmonicLabel {
    pub fn new(degree: usize, index: usize) -> Self {
        HarmonicLabel { degree, index }
    }
}

/// `f(x) = Σ h_j(|x|) Q_j(x/|x|)` with the profiles `h_j` sampled on radial
/// grids. Labels are unique within one function.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableFunction {
    dim: usize,
    terms: Vec<(HarmonicLabel, RadialFunction)>,
}

impl SeparableFunction {
    pub fn new(dim: usize, terms: Vec<(HarmonicLabel, RadialFunction)>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Invalid(format!("dimension must be at least 2, got {dim}")));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (label, _) in &terms {
            let m = effective_coupling(0.0, dim, label.degree)?.multiplicity();
            if label.index >= m {
                return Err(Error::Invalid(format!(
                    "harmonic index {} exceeds multiplicity {m} of degree {}",
                    label.index, label.degree
                )));
            }
            if !seen.insert(*label) {
                return Err(Error::Invalid(format!("duplicate harmonic label {label:?}")));
            }
        }
        Ok(SeparableFunction { dim, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(HarmonicLabel, RadialFunction)] {
        &self.terms
    }

    /// `⟨f, g⟩_{L²(ℝ^N)} = Σ_j ∫ h_j \bar k_j r^{N-1} dr` by orthonormality of
    /// the harmonics.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim != other.dim {
            return Err(Error::Invalid("functions live in different dimensions".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (label, h) in &self.terms {
            if let Some((_, k)) = other.terms.iter().find(|(l, _)| l == label) {
                acc += weighted_inner(h, k, self.dim)?;
            }
        }
        Ok(acc)
    }

    pub fn norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|(_, h)| weighted_inner(h, h, self.dim).map(|v| v.re).unwrap_or(0.0))
            .sum::<f64>()
            .sqrt()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Invalid("functions live in different dimensions".into()));
        }
        let mut terms = self.terms.clone();
        for (label, h) in &other.terms {
            match terms.iter_mut().find(|(l, _)| l == label) {
                Some((_, acc)) => *acc = acc.axpy(C64::new(1.0, 0.0), h)?,
                None => terms.push((*label, h.clone())),
            }
        }
        SeparableFunction::new(self.dim, terms)
    }
}

fn weighted_inner(h: &RadialFunction, k: &RadialFunction, dim: usize) -> Result<C64> {
    if h.grid() != k.grid() && **h.grid() != **k.grid() {
        return Err(Error::Invalid("profiles live on different grids".into()));
    }
    let p = (dim - 1) as f64;
    let g: Vec<C64> = h
        .values()
        .iter()
        .zip(k.values())
        .zip(h.points())
        .map(|((a, b), r)| a * b.conj() * r.powf(p))
        .collect();
    Ok(h.grid().integrate(&g))
}

/// `F_j g = r^{-(N-1)/2} g ⊗ Q_j`.
pub fn lift(g: &RadialFunction, label: HarmonicLabel, dim: usize) -> Result<SeparableFunction> {
    let p = (dim as f64 - 1.0) / 2.0;
    let h = g.map(|r, v| v * r.powf(-p));
    SeparableFunction::new(dim, vec![(label, h)])
}

/// `G_j f = r^{(N-1)/2} h_j`, or `None` when `f` has no component along `Q_j`.
pub fn project(f: &SeparableFunction, label: HarmonicLabel) -> Option<RadialFunction> {
    let p = (f.dim as f64 - 1.0) / 2.0;
    f.terms
        .iter()
        .find(|(l, _)| *l == label)
        .map(|(_, h)| h.map(|r, v| v * r.powf(p)))
}

/// `G_j F_j g`.
pub fn mode_maps_roundtrip(g: &RadialFunction, label: HarmonicLabel, dim: usize) -> Result<RadialFunction> {
    let f = lift(g, label, dim)?;
    Ok(project(&f, label).expect("label was just inserted"))
}

/// One radial component `g_j = G_j f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeComponent {
    pub mode: HarmonicMode,
    pub index: usize,
    pub profile: RadialFunction,
}

impl ModeComponent {
    pub fn label(&self) -> HarmonicLabel {
        HarmonicLabel::new(self.mode.degree, self.index)
    }
}

/// The radial components `G_j f` of all harmonics of degree at most `band`,
/// ordered by label.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDecomposition {
    pub dim: usize,
    pub b: f64,
    pub band: usize,
    pub components: Vec<ModeComponent>,
}

impl ModeDecomposition {
    /// Applies every `G_j` with degree `≤ band`; higher harmonics of `f` are dropped.
    pub fn decompose(f: &SeparableFunction, b: f64, band: usize) -> Result<Self> {
        let mut labels: Vec<HarmonicLabel> = f.terms.iter().map(|(l, _)| *l).filter(|l| l.degree <= band).collect();
        labels.sort();
        let components = labels
            .into_iter()
            .map(|label| {
                Ok(ModeComponent {
                    mode: effective_coupling(b, f.dim, label.degree)?,
                    index: label.index,
                    profile: project(f, label).expect("label taken from f"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModeDecomposition {
            dim: f.dim,
            b,
            band,
            components,
        })
    }

    /// `Σ_j F_j g_j`.
    pub fn assemble(&self) -> Result<SeparableFunction> {
        let p = (self.dim as f64 - 1.0) / 2.0;
        let terms = self
            .components
            .iter()
            .map(|c| (c.label(), c.profile.map(|r, v| v * r.powf(-p))))
            .collect();
        SeparableFunction::new(self.dim, terms)
    }

    /// `(Σ_j ‖g_j‖²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.profile.norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn component(&self, label: HarmonicLabel) -> Option<&ModeComponent> {
        self.components.iter().find(|c| c.label() == label)
    }

    /// Componentwise `self - other`; both must carry the same labels.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for comp in &mut out.components {
            comp.profile = comp.profile.scale(c);
        }
        out
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&RadialFunction, &RadialFunction) -> Result<RadialFunction>,
    ) -> Result<Self> {
        if self.components.len() != other.components.len() {
            return Err(Error::Invalid("decompositions carry different modes".into()));
        }
        let mut out = self.clone();
        for (c, o) in out.components.iter_mut().zip(&other.components) {
            if c.label() != o.label() {
                return Err(Error::Invalid("decompositions carry different modes".into()));
            }
            c.profile = f(&c.profile, &o.profile)?;
        }
        Ok(out)
    }
}

/// Resolvent of the Friedrichs extension of `-d²/dr² + b/r²` for
/// `b ≥ -1/4`, built from `φ₀ = r^{1/2} K_σ(ωr)` and `φ₁ = r^{1/2} I_σ(ωr)`
/// (Wronskian exactly 1).
#[derive(Debug, Clone, Copy)]
pub struct FriedrichsResolvent {
    pub b_eff: f64,
    pub policy: ExecPolicy,
}

impl FriedrichsResolvent {
    pub fn new(b_eff: f64) -> Result<Self> {
        if !(b_eff >= FRIEDRICHS_THRESHOLD) || !b_eff.is_finite() {
            return Err(Error::Domain(format!(
                "Friedrichs block needs b_eff >= -1/4, got {b_eff}"
            )));
        }
        Ok(FriedrichsResolvent {
            b_eff,
            policy: ExecPolicy::default(),
        })
    }

    pub fn with_policy(mut self, policy: ExecPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn sigma(&self) -> f64 {
        (self.b_eff + 0.25).max(0.0).sqrt()
    }

    /// `e^{ωr} φ₀(r)` and `e^{-ωr} φ₁(r)` on the grid.
    fn sample(&self, grid: &RadialGrid, w: C64) -> Result<(Vec<C64>, Vec<C64>)> {
        let sigma = self.sigma();
        let rows = self.policy.try_map(grid.points(), |&r| {
            let x = w * r;
            let k = k_real_scaled(sigma, x)?;
            let i = i_real_scaled(sigma, x, k)?;
            let s = r.sqrt();
            Ok::<_, Error>((k.value * s, i.value * s))
        })?;
        Ok(rows.into_iter().unzip())
    }
}

impl Resolvent for FriedrichsResolvent {
    fn apply(&self, z: C64, f: &RadialFunction) -> Result<RadialFunction> {
        let omega = SpectralOmega::from_z(z)?;
        let w = omega.omega();
        let (q, p) = self.sample(f.grid(), w)?;
        Ok(green_apply_sampled(f, w, C64::new(1.0, 0.0), &q, &p))
    }

    fn apply_adjoint(&self, z: C64, f: &RadialFunction) -> Result<RadialFunction> {
        self.apply(z.conj(), f)
    }
}

/// `(L_F - z)^{-1} f` for the Friedrichs extension with coupling `b_eff`.
pub fn friedrichs_resolvent(b_eff: f64, z: C64, f: &RadialFunction) -> Result<RadialFunction> {
    FriedrichsResolvent::new(b_eff)?.apply(z, f)
}

/// The radial operator acting on one degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockChoice {
    /// The literal string `"friedrichs"`.
    Friedrichs(FriedrichsTag),
    /// `[[re a₁, im a₁], [re a₂, im a₂]]`.
    Extension([[f64; 2]; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FriedrichsTag {
    Friedrichs,
}

impl BlockChoice {
    pub fn extension(a: &ExtensionParams) -> Self {
        BlockChoice::Extension([[a.a1().re, a.a1().im], [a.a2().re, a.a2().im]])
    }

    pub fn params(&self) -> Option<Result<ExtensionParams>> {
        match self {
            BlockChoice::Friedrichs(_) => None,
            BlockChoice::Extension([a1, a2]) => {
                Some(ExtensionParams::new(C64::new(a1[0], a1[1]), C64::new(a2[0], a2[1])))
            }
        }
    }
}

/// A resolvent block of the assembled operator.
#[derive(Debug, Clone, Copy)]
pub enum BlockResolvent {
    Friedrichs(FriedrichsResolvent),
    Extension(ExtensionResolvent),
}

impl Resolvent for BlockResolvent {
    fn apply(&self, z: C64, f: &RadialFunction) -> Result<RadialFunction> {
        match self {
            BlockResolvent::Friedrichs(r) => r.apply(z, f),
            BlockResolvent::Extension(r) => r.apply(z, f),
        }
    }

    fn apply_adjoint(&self, z: C64, f: &RadialFunction) -> Result<RadialFunction> {
        match self {
            BlockResolvent::Friedrichs(r) => r.apply_adjoint(z, f),
            BlockResolvent::Extension(r) => r.apply_adjoint(z, f),
        }
    }
}

/// One degree of the assembled operator.
#[derive(Debug, Clone, Copy)]
pub struct Block {
    pub mode: HarmonicMode,
    pub resolvent: BlockResolvent,
}

impl Block {
    pub fn choice(&self) -> BlockChoice {
        match &self.resolvent {
            BlockResolvent::Friedrichs(_) => BlockChoice::Friedrichs(FriedrichsTag::Friedrichs),
            BlockResolvent::Extension(e) => BlockChoice::extension(&e.a),
        }
    }
}

/// Block-diagonal operator on harmonics of degree `≤ band`.
#[derive(Debug, Clone)]
pub struct NdGenerator {
    pub dim: usize,
    pub b: f64,
    pub band: usize,
    blocks: Vec<Block>,
    deficient: Vec<usize>,
}

/// Assembles the operator from one extension per deficient degree. Every
/// degree `n ≤ band` with `b_n < -1/4` needs an entry in `choices`, and each
/// supplied choice must generate an analytic semigroup for its `ν_n`.
/// Entries for non-deficient degrees are rejected.
pub fn build_nd_generator(
    b: f64,
    dim: usize,
    band: usize,
    choices: &BTreeMap<usize, ExtensionParams>,
) -> Result<NdGenerator> {
    let deficient = deficient_degrees(b, dim)?;
    for &n in choices.keys() {
        if !deficient.contains(&n) {
            return Err(Error::InvalidChoice {
                mode: n,
                reason: "degree has b_eff >= -1/4 and uses the Friedrichs extension".into(),
            });
        }
    }
    for &n in &deficient {
        let mode = effective_coupling(b, dim, n)?;
        let nu = mode.nu().expect("deficient mode");
        let a = match choices.get(&n) {
            Some(a) => a,
            None if n > band => continue,
            None => {
                return Err(Error::InvalidChoice {
                    mode: n,
                    reason: format!("no extension supplied for b_eff = {}", mode.b_eff),
                })
            }
        };
        let inv = classify(a, nu);
        if !inv.is_generator() {
            return Err(Error::InvalidChoice {
                mode: n,
                reason: format!("A = {a} is Case {} for nu = {nu}, not a generator", inv.case_label),
            });
        }
    }
    let blocks = (0..=band)
        .map(|n| {
            let mode = effective_coupling(b, dim, n)?;
            let resolvent = match mode.nu() {
                Some(nu) => BlockResolvent::Extension(ExtensionResolvent::new(choices[&n], nu)),
                None => BlockResolvent::Friedrichs(FriedrichsResolvent::new(mode.b_eff)?),
            };
            Ok(Block { mode, resolvent })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NdGenerator {
        dim,
        b,
        band,
        blocks,
        deficient,
    })
}

/// Per-degree and overall lower bounds on `‖R(z)‖`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NdNormReport {
    pub z: [f64; 2],
    pub per_degree: Vec<(usize, f64)>,
    pub max: f64,
}

impl NdGenerator {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, degree: usize) -> Option<&Block> {
        self.blocks.get(degree)
    }

    /// All degrees with `b_n < -1/4`, computed by enumeration.
    pub fn deficient_degrees(&self) -> &[usize] {
        &self.deficient
    }

    /// Number of harmonics (counted with multiplicity) in deficient degrees.
    pub fn deficient_harmonic_count(&self) -> usize {
        self.deficient
            .iter()
            .map(|&n| effective_coupling(self.b, self.dim, n).expect("valid").multiplicity())
            .sum()
    }

    /// Smallest `ν_n` over the deficient degrees.
    pub fn nu_min(&self) -> Option<f64> {
        self.deficient
            .iter()
            .filter_map(|&n| effective_coupling(self.b, self.dim, n).ok()?.nu())
            .reduce(f64::min)
    }

    /// Per-block resolvent application; an error in a block is tagged with
    /// its degree.
    pub fn apply(&self, z: C64, f: &ModeDecomposition, policy: ExecPolicy) -> Result<ModeDecomposition> {
        self.check_compatible(f)?;
        let profiles = policy.try_map(&f.components, |c| {
            let block = &self.blocks[c.mode.degree];
            block.resolvent.apply(z, &c.profile).map_err(|e| Error::InMode {
                degree: c.mode.degree,
                inner: Box::new(e),
            })
        })?;
        let mut out = f.clone();
        for (c, p) in out.components.iter_mut().zip(profiles) {
            c.profile = p;
        }
        Ok(out)
    }

    /// Power-iteration lower bounds on `‖R(z)‖` for each degree in the band;
    /// the operator norm of the direct sum is their maximum.
    pub fn norm_estimate(&self, z: C64, probe_count: usize) -> Result<NdNormReport> {
        let omega = SpectralOmega::from_z(z)?;
        let grid = Arc::new(RadialGrid::for_scale(omega.mu(), 60.0 * omega.mu() / omega.omega().re)?);
        let mut per_degree = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let n =
                norm_estimate_on_grid(&block.resolvent, z, &grid, probe_count, omega).map_err(|e| Error::InMode {
                    degree: block.mode.degree,
                    inner: Box::new(e),
                })?;
            per_degree.push((block.mode.degree, n));
        }
        let max = per_degree.iter().map(|p| p.1).fold(0.0, f64::max);
        Ok(NdNormReport {
            z: [z.re, z.im],
            per_degree,
            max,
        })
    }

    fn check_compatible(&self, f: &ModeDecomposition) -> Result<()> {
        if f.dim != self.dim || f.b != self.b {
            return Err(Error::Invalid(format!(
                "decomposition for (b, N) = ({}, {}) does not match the operator ({}, {})",
                f.b, f.dim, self.b, self.dim
            )));
        }
        if let Some(c) = f.components.iter().find(|c| c.mode.degree > self.band) {
            return Err(Error::Invalid(format!(
                "component of degree {} lies outside the band {}",
                c.mode.degree, self.band
            )));
        }
        Ok(())
    }
}

/// `R(z) f` for the assembled operator.
pub fn nd_resolvent_apply(op: &NdGenerator, z: C64, f: &ModeDecomposition) -> Result<ModeDecomposition> {
    op.apply(z, f, ExecPolicy::default())
}

/// `∫ |u'|² + b |u|²/r² dr` with centred three-point derivatives in `r`
/// and trapezoidal quadrature.
pub fn quadratic_form(u: &RadialFunction, b: f64) -> f64 {
    let r = u.points();
    let v = u.values();
    let n = r.len();
    if n < 3 {
        return 0.0;
    }
    let mut density = vec![0.0; n];
    for i in 0..n {
        let lo = i.saturating_sub(1).min(n - 3);
        let w = fornberg_weights(r[i], &r[lo..lo + 3], 1);
        let d: C64 = (0..3).map(|k| v[lo + k] * w[1][k]).sum();
        density[i] = d.norm_sqr() + b * v[i].norm_sqr() / (r[i] * r[i]);
    }
    u.grid().integrate_real(&density)
}

/// One line of the mode-file header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub n: usize,
    pub index: usize,
    pub b_eff: f64,
    pub extension: Option<BlockChoice>,
    pub file: String,
}

/// JSON header of a mode-file set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeHeader {
    #[serde(rename = "N")]
    pub dim: usize,
    pub b: f64,
    pub band: usize,
    pub modes: Vec<ModeEntry>,
}

/// Writes `<stem>.json` and one `<stem>_n<degree>_k<index>.csv` per
/// component into `dir`, returning the header path. With an operator, each
/// entry also records the block's extension.
pub fn write_mode_files(dir: &Path, stem: &str, f: &ModeDecomposition, op: Option<&NdGenerator>) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut modes = Vec::with_capacity(f.components.len());
    for c in &f.components {
        let file = format!("{stem}_n{}_k{}.csv", c.mode.degree, c.index);
        let out = fs::File::create(dir.join(&file))?;
        c.profile.write_csv(std::io::BufWriter::new(out))?;
        modes.push(ModeEntry {
            n: c.mode.degree,
            index: c.index,
            b_eff: c.mode.b_eff,
            extension: op.and_then(|o| o.block(c.mode.degree)).map(Block::choice),
            file,
        });
    }
    let header = ModeHeader {
        dim: f.dim,
        b: f.b,
        band: f.band,
        modes,
    };
    let path = dir.join(format!("{stem}.json"));
    let json = serde_json::to_string_pretty(&header).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(&path, json + "\n")?;
    Ok(path)
}

/// Reads a mode-file set written by [`write_mode_files`]; CSV paths are
/// resolved relative to the header.
pub fn read_mode_files(header_path: &Path) -> Result<(ModeHeader, ModeDecomposition)> {
    let text = fs::read_to_string(header_path)?;
    let header: ModeHeader = serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("mode header: {e}")))?;
    let dir = header_path.parent().unwrap_or_else(|| Path::new("."));
    let mut components = Vec::with_capacity(header.modes.len());
    for entry in &header.modes {
        let file = fs::File::open(dir.join(&entry.file))?;
        let profile = RadialFunction::read_csv(BufReader::new(file))?;
        let mode = effective_coupling(header.b, header.dim, entry.n)?;
        components.push(ModeComponent {
            mode,
            index: entry.index,
            profile,
        });
    }
    let f = ModeDecomposition {
        dim: header.dim,
        b: header.b,
        band: header.band,
        components,
    };
    Ok((header, f))
}
