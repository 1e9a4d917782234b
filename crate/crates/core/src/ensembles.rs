//! Reproducible random density matrices, positive contractions, probability
//! vectors and commuting pairs.
//!
//! Every sample is a pure function of `(seed, index)`: the pair is mixed into
//! a per-sample seed with [`sample_seed`] and fed to a ChaCha8 stream, so
//! indices can be drawn in any order or on any worker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{spectral_decompose, CMatrix, HermitianMatrix, C64};

/// Eigenvalue slack allowed below 0 (and above 1 for contractions).
pub const SPECTRUM_TOL: f64 = 1e-12;
/// Allowed deviation of a density trace or a probability sum from 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;
pub const DEFAULT_MIN_EIGENVALUE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    GinibreDensity,
    SpectralContraction,
    CommutingPair,
    DirichletWeights,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::GinibreDensity => "ginibre_density",
            SamplerKind::SpectralContraction => "spectral_contraction",
            SamplerKind::CommutingPair => "commuting_pair",
            SamplerKind::DirichletWeights => "dirichlet_weights",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "ginibre_density" => Ok(SamplerKind::GinibreDensity),
            "spectral_contraction" => Ok(SamplerKind::SpectralContraction),
            "commuting_pair" => Ok(SamplerKind::CommutingPair),
            "dirichlet_weights" => Ok(SamplerKind::DirichletWeights),
            other => Err(Error::InvalidConfig(format!("unknown sampler kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub dim: usize,
    pub count: usize,
    pub kind: SamplerKind,
    #[serde(default = "default_min_eigenvalue")]
    pub min_eigenvalue: f64,
}

fn default_min_eigenvalue() -> f64 {
    DEFAULT_MIN_EIGENVALUE
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind, dim: usize, seed: u64) -> Self {
        Self {
            seed,
            dim,
            count: 1,
            kind,
            min_eigenvalue: DEFAULT_MIN_EIGENVALUE,
        }
    }

    pub fn with_min_eigenvalue(mut self, min_eigenvalue: f64) -> Self {
        self.min_eigenvalue = min_eigenvalue;
        self
    }

    /// `min_eigenvalue = 1` is accepted: it pins contraction spectra to 1.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be positive".into()));
        }
        if self.count == 0 {
            return Err(Error::InvalidConfig("count must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.min_eigenvalue) {
            return Err(Error::InvalidConfig(format!(
                "min_eigenvalue {} outside [0, 1]",
                self.min_eigenvalue
            )));
        }
        Ok(())
    }

    fn expect_kind(&self, kind: SamplerKind) -> Result<()> {
        self.validate()?;
        if self.kind != kind {
            return Err(Error::InvalidConfig(format!(
                "sampler kind is {}, expected {}",
                self.kind.name(),
                kind.name()
            )));
        }
        Ok(())
    }

    /// Deterministic generator for sample `index`.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(sample_seed(self.seed, index))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed: `splitmix64(splitmix64(seed) ^ index)`.
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index)
}

/// A positive semidefinite unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let t = h.trace_real().value;
        if (t - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidMatrix(format!("density trace {t} is not 1")));
        }
        let min = spectral_decompose(&h)?.min_eigenvalue();
        if min < -SPECTRUM_TOL {
            return Err(Error::InvalidMatrix(format!(
                "density has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self(h))
    }

    pub fn pure_basis_state(dim: usize, k: usize) -> Self {
        let mut d = vec![0.0; dim];
        d[k] = 1.0;
        Self(HermitianMatrix::from_real_diagonal(&d))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// A Hermitian matrix with spectrum in `[0, 1]`, i.e. `0 ≤ A ≤ I`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveContraction(HermitianMatrix);

impl PositiveContraction {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let d = spectral_decompose(&h)?;
        if d.min_eigenvalue() < -SPECTRUM_TOL || d.max_eigenvalue() > 1.0 + SPECTRUM_TOL {
            return Err(Error::InvalidMatrix(format!(
                "spectrum [{:.3e}, {:.3e}] outside [0, 1]",
                d.min_eigenvalue(),
                d.max_eigenvalue()
            )));
        }
        Ok(Self(h))
    }

    pub(crate) fn new_unchecked(h: HermitianMatrix) -> Self {
        Self(h)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(diag))
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// Probability weights over density matrices of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pi: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Ensemble {
    pub fn new(pi: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if pi.is_empty() || pi.len() != states.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} weights for {} states",
                pi.len(),
                states.len()
            )));
        }
        if pi.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidEnsemble("negative weight".into()));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        let dim = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimMismatch(dim, s.dim()));
        }
        Ok(Self { pi, states })
    }

    pub fn uniform(states: Vec<DensityMatrix>) -> Result<Self> {
        let a = states.len().max(1);
        Self::new(vec![1.0 / a as f64; states.len()], states)
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }
}

/// `dim × dim` matrix of independent standard complex normals (`E|z|² = 1`).
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Haar unitary from the phase-corrected QR factor of a Ginibre draw.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let qr = ginibre(rng, dim).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for j in 0..dim {
            q[(j, k)] *= phase;
        }
    }
    q
}

fn uniform_spectrum<R: Rng + ?Sized>(rng: &mut R, dim: usize, min_eigenvalue: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let u: f64 = rng.gen();
            min_eigenvalue + (1.0 - min_eigenvalue) * u
        })
        .collect()
}

fn diag_conjugate(u: &CMatrix, diag: &[f64]) -> HermitianMatrix {
    HermitianMatrix::from_real_diagonal(diag).conjugate_by(u)
}

pub fn density_from_rng<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    min_eigenvalue: f64,
) -> Result<DensityMatrix> {
    let g = ginibre(rng, dim);
    let gg = HermitianMatrix::from_hermitian_part(&(&g * g.adjoint()))?;
    let t = gg.trace_real().value;
    let rho = gg.scale(1.0 / t);
    clip_density(&rho, min_eigenvalue)
}

/// Clips eigenvalues below at `min_eigenvalue` and renormalizes the trace.
pub fn clip_density(h: &HermitianMatrix, min_eigenvalue: f64) -> Result<DensityMatrix> {
    let d = spectral_decompose(h)?;
    let clipped: Vec<f64> = d.eigenvalues.iter().map(|&l| l.max(min_eigenvalue)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidMatrix("cannot normalize a zero spectrum".into()));
    }
    let rebuilt = crate::matcore::SpectralDecomposition {
        eigenvalues: clipped.iter().map(|l| l / total).collect(),
        eigenvectors: d.eigenvectors,
    }
    .reconstruct();
    let t = rebuilt.trace_real().value;
    DensityMatrix::new(rebuilt.scale(1.0 / t))
}

/// Clips eigenvalues into `[lo, 1]`.
pub fn clip_contraction(h: &HermitianMatrix, lo: f64) -> Result<PositiveContraction> {
    let d = spectral_decompose(h)?;
    Ok(PositiveContraction(d.map_eigenvalues(|l| l.clamp(lo, 1.0))))
}

pub fn contraction_from_rng<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    min_eigenvalue: f64,
) -> PositiveContraction {
    let u = haar_unitary(rng, dim);
    let spectrum = uniform_spectrum(rng, dim, min_eigenvalue);
    PositiveContraction(diag_conjugate(&u, &spectrum))
}

/// Normalizes nonnegative draws by their sum.
pub fn normalize_weights(draws: &[f64]) -> Vec<f64> {
    let total: f64 = draws.iter().sum();
    draws.iter().map(|d| d / total).collect()
}

pub fn probability_from_rng<R: Rng + ?Sized>(rng: &mut R, a: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..a).map(|_| rng.sample(Exp1)).collect();
    normalize_weights(&draws)
}

/// `(U D_A U†, U D_B U†)` for a shared unitary `U`.
pub fn commuting_pair_in_basis(
    u: &CMatrix,
    diag_a: &[f64],
    diag_b: &[f64],
) -> (PositiveContraction, PositiveContraction) {
    (
        PositiveContraction(diag_conjugate(u, diag_a)),
        PositiveContraction(diag_conjugate(u, diag_b)),
    )
}

/// Shared basis `U` and the two spectra of a commuting pair.
pub fn commuting_spectra_from_rng<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    min_eigenvalue: f64,
) -> (CMatrix, Vec<f64>, Vec<f64>) {
    let u = haar_unitary(rng, dim);
    let da = uniform_spectrum(rng, dim, min_eigenvalue);
    let db = uniform_spectrum(rng, dim, min_eigenvalue);
    (u, da, db)
}

pub fn commuting_pair_from_rng<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    min_eigenvalue: f64,
) -> (PositiveContraction, PositiveContraction) {
    let (u, da, db) = commuting_spectra_from_rng(rng, dim, min_eigenvalue);
    commuting_pair_in_basis(&u, &da, &db)
}

pub fn sample_density(cfg: &SamplerConfig, index: u64) -> Result<DensityMatrix> {
    cfg.expect_kind(SamplerKind::GinibreDensity)?;
    density_from_rng(&mut cfg.rng(index), cfg.dim, cfg.min_eigenvalue)
}

pub fn sample_contraction(cfg: &SamplerConfig, index: u64) -> Result<PositiveContraction> {
    cfg.expect_kind(SamplerKind::SpectralContraction)?;
    Ok(contraction_from_rng(
        &mut cfg.rng(index),
        cfg.dim,
        cfg.min_eigenvalue,
    ))
}

pub fn sample_probability(cfg: &SamplerConfig, a: usize, index: u64) -> Result<Vec<f64>> {
    cfg.expect_kind(SamplerKind::DirichletWeights)?;
    if a == 0 {
        return Err(Error::InvalidConfig("a must be at least 1".into()));
    }
    Ok(probability_from_rng(&mut cfg.rng(index), a))
}

pub fn sample_commuting_pair(
    cfg: &SamplerConfig,
    index: u64,
) -> Result<(PositiveContraction, PositiveContraction)> {
    cfg.expect_kind(SamplerKind::CommutingPair)?;
    Ok(commuting_pair_from_rng(
        &mut cfg.rng(index),
        cfg.dim,
        cfg.min_eigenvalue,
    ))
}

/// Two independent contractions (spectral kind) or a commuting pair.
pub fn sample_contraction_pair(
    cfg: &SamplerConfig,
    index: u64,
) -> Result<(PositiveContraction, PositiveContraction)> {
    cfg.validate()?;
    let mut rng = cfg.rng(index);
    match cfg.kind {
        SamplerKind::SpectralContraction => Ok((
            contraction_from_rng(&mut rng, cfg.dim, cfg.min_eigenvalue),
            contraction_from_rng(&mut rng, cfg.dim, cfg.min_eigenvalue),
        )),
        SamplerKind::CommutingPair => Ok(commuting_pair_from_rng(
            &mut rng,
            cfg.dim,
            cfg.min_eigenvalue,
        )),
        other => Err(Error::InvalidConfig(format!(
            "{} does not produce contraction pairs",
            other.name()
        ))),
    }
}

/// Flat-Dirichlet weights over `a` Ginibre densities.
pub fn sample_ensemble(cfg: &SamplerConfig, a: usize, index: u64) -> Result<Ensemble> {
    cfg.expect_kind(SamplerKind::GinibreDensity)?;
    if a == 0 {
        return Err(Error::InvalidConfig("a must be at least 1".into()));
    }
    let mut rng = cfg.rng(index);
    let pi = probability_from_rng(&mut rng, a);
    let states = (0..a)
        .map(|_| density_from_rng(&mut rng, cfg.dim, cfg.min_eigenvalue))
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(pi, states)
}

pub fn commutator_norm(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let (x, y) = (a.as_matrix(), b.as_matrix());
    (x * y - y * x).norm()
}
