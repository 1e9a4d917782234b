//! Randomized verification campaigns and strict-descent refinement toward
//! counter-examples.
//!
//! A campaign draws one input per sample index from `(seed, index)`,
//! evaluates the margin at every requested `s`, optionally refines the worst
//! of them, and folds the outcomes into a [`CampaignResult`]. Workers own
//! contiguous index ranges; partial results merge associatively, with
//! witness ties broken by the lowest sample index, so the result does not
//! depend on the worker count.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{
    clip_contraction, clip_density, commuting_pair_in_basis, contraction_from_rng,
    density_from_rng, ginibre, sample_contraction_pair, sample_ensemble, sample_seed,
    DensityMatrix, Ensemble, PositiveContraction, SamplerConfig, SamplerKind,
};
use crate::error::{Error, Result};
use crate::inequalities::{
    fingerprint_f64s, fingerprint_matrices, holevo_jensen_instance, jensen_operator_gap,
    lemma2_margin, pairwise_expansion_s1, remark4_residual, theorem4_margins, InequalityId,
    Margin, PreparedPair, Question,
};
use crate::matcore::{
    hermitian_part, loewner_margin, spectral_decompose, CMatrix, HermitianMatrix,
    MatrixInterchange, ScalarFunction, SquareMatrix, C64, DEFAULT_EIGENVALUE_FLOOR,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_REFINE_STEP_SIZE: f64 = 0.05;
pub const DEFAULT_NEAR_VIOLATION_THRESHOLD: f64 = 1e-6;

/// Log-range of the positive scalars drawn for `lemma2` campaigns.
const LEMMA2_LOG_RANGE: f64 = 3.0;

/// Upper bucket edges of the margin histogram; the last bucket is open.
pub const HISTOGRAM_EDGES: [f64; 7] = [-1e-3, -1e-6, -1e-9, 0.0, 1e-9, 1e-6, 1e-3];

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub inequality: InequalityId,
    pub dim: usize,
    pub samples: u64,
    pub seed: u64,
    pub s_values: Vec<f64>,
    pub refine_steps: usize,
    pub refine_step_size: f64,
    pub near_violation_threshold: f64,
    pub tolerance: f64,
    pub sampler: SamplerConfig,
}

impl CampaignConfig {
    /// Defaults: the inequality's natural sampler, `s ∈ {0, 0.1, …, 1}` for
    /// `s`-parametric inequalities, no refinement.
    pub fn new(inequality: InequalityId, dim: usize, samples: u64, seed: u64) -> Self {
        let s_values = if inequality.uses_s() {
            (0..=10).map(|k| k as f64 / 10.0).collect()
        } else {
            Vec::new()
        };
        Self {
            inequality,
            dim,
            samples,
            seed,
            s_values,
            refine_steps: 0,
            refine_step_size: DEFAULT_REFINE_STEP_SIZE,
            near_violation_threshold: DEFAULT_NEAR_VIOLATION_THRESHOLD,
            tolerance: DEFAULT_TOLERANCE,
            sampler: SamplerConfig::new(default_sampler(inequality), dim, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be positive".into()));
        }
        if self.inequality == InequalityId::Lemma2 && self.dim < 2 {
            return Err(Error::InvalidConfig("lemma2 needs sequences of length >= 2".into()));
        }
        if self.s_values.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidConfig("s values must lie in [0, 1]".into()));
        }
        if self.inequality.uses_s() && self.s_values.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "{} needs at least one s value",
                self.inequality
            )));
        }
        if !(self.refine_step_size > 0.0) {
            return Err(Error::InvalidConfig("refine step size must be positive".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidConfig("tolerance must be nonnegative".into()));
        }
        let mut sampler = self.sampler;
        sampler.count = 1;
        sampler.validate()?;
        if !accepted_samplers(self.inequality).contains(&self.sampler.kind) {
            return Err(Error::InvalidConfig(format!(
                "sampler {} cannot drive {}",
                self.sampler.kind.name(),
                self.inequality
            )));
        }
        Ok(())
    }

    /// The `s` slots evaluated per sample (`[None]` for `s`-free inequalities).
    pub fn s_slots(&self) -> Vec<Option<f64>> {
        if self.inequality.uses_s() {
            self.s_values.iter().map(|&s| Some(s)).collect()
        } else {
            vec![None]
        }
    }

    fn sampler_for_draws(&self) -> SamplerConfig {
        SamplerConfig {
            seed: self.seed,
            dim: self.dim,
            count: 1,
            ..self.sampler
        }
    }
}

pub fn default_sampler(id: InequalityId) -> SamplerKind {
    match id {
        InequalityId::Remark2 | InequalityId::Remark3 => SamplerKind::GinibreDensity,
        InequalityId::Remark4 => SamplerKind::CommutingPair,
        InequalityId::Lemma2 => SamplerKind::DirichletWeights,
        _ => SamplerKind::SpectralContraction,
    }
}

pub fn accepted_samplers(id: InequalityId) -> &'static [SamplerKind] {
    use SamplerKind::*;
    match id {
        InequalityId::Remark2 | InequalityId::Remark3 => &[GinibreDensity],
        InequalityId::Remark4 => &[CommutingPair],
        InequalityId::Lemma2 => &[DirichletWeights],
        InequalityId::Lemma1Jensen => &[SpectralContraction],
        _ => &[SpectralContraction, CommutingPair, GinibreDensity],
    }
}

/// In-memory inputs of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Inputs {
    Pair(PositiveContraction, PositiveContraction),
    Ensemble(Ensemble),
    Scalars { t: Vec<f64>, a: Vec<f64>, b: Vec<f64> },
    Jensen { k: Vec<HermitianMatrix>, c: Vec<SquareMatrix> },
}

impl Inputs {
    pub fn fingerprint(&self) -> u64 {
        match self {
            Inputs::Pair(a, b) => fingerprint_matrices(&[
                a.as_hermitian().as_matrix(),
                b.as_hermitian().as_matrix(),
            ]),
            Inputs::Ensemble(e) => {
                let ms: Vec<&CMatrix> = e.states().iter().map(|s| s.as_hermitian().as_matrix()).collect();
                fingerprint_f64s(e.pi().iter().copied()) ^ fingerprint_matrices(&ms).rotate_left(1)
            }
            Inputs::Scalars { t, a, b } => {
                fingerprint_f64s(t.iter().chain(a).chain(b).copied())
            }
            Inputs::Jensen { k, c } => {
                let ms: Vec<&CMatrix> = k
                    .iter()
                    .map(|m| m.as_matrix())
                    .chain(c.iter().map(|m| m.as_matrix()))
                    .collect();
                fingerprint_matrices(&ms)
            }
        }
    }

    pub fn to_witness(&self) -> Witness {
        match self {
            Inputs::Pair(a, b) => Witness::Pair {
                a: a.as_hermitian().to_interchange(),
                b: b.as_hermitian().to_interchange(),
            },
            Inputs::Ensemble(e) => Witness::Ensemble {
                pi: e.pi().to_vec(),
                states: e.states().iter().map(|s| s.as_hermitian().to_interchange()).collect(),
            },
            Inputs::Scalars { t, a, b } => Witness::Scalars {
                t: t.clone(),
                a: a.clone(),
                b: b.clone(),
            },
            Inputs::Jensen { k, c } => Witness::Jensen {
                k: k.iter().map(|m| m.to_interchange()).collect(),
                c: c.iter().map(|m| m.to_interchange()).collect(),
            },
        }
    }
}

/// Serializable inputs, with matrices in the interchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    Pair {
        a: MatrixInterchange,
        b: MatrixInterchange,
    },
    Ensemble {
        pi: Vec<f64>,
        states: Vec<MatrixInterchange>,
    },
    Scalars {
        t: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
    Jensen {
        k: Vec<MatrixInterchange>,
        c: Vec<MatrixInterchange>,
    },
}

impl Witness {
    pub fn to_inputs(&self) -> Result<Inputs> {
        Ok(match self {
            Witness::Pair { a, b } => Inputs::Pair(
                PositiveContraction::new(HermitianMatrix::from_interchange(a)?)?,
                PositiveContraction::new(HermitianMatrix::from_interchange(b)?)?,
            ),
            Witness::Ensemble { pi, states } => {
                let states = states
                    .iter()
                    .map(|s| DensityMatrix::new(HermitianMatrix::from_interchange(s)?))
                    .collect::<Result<Vec<_>>>()?;
                Inputs::Ensemble(Ensemble::new(pi.clone(), states)?)
            }
            Witness::Scalars { t, a, b } => Inputs::Scalars {
                t: t.clone(),
                a: a.clone(),
                b: b.clone(),
            },
            Witness::Jensen { k, c } => Inputs::Jensen {
                k: k.iter().map(HermitianMatrix::from_interchange).collect::<Result<_>>()?,
                c: c.iter().map(SquareMatrix::from_interchange).collect::<Result<_>>()?,
            },
        })
    }
}

/// A stored argmin: which inequality, where, and the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub inequality: String,
    pub s: Option<f64>,
    pub index: u64,
    pub margin: f64,
    pub input: Witness,
}

impl WitnessRecord {
    /// Re-evaluates the stored inputs.
    pub fn reevaluate(&self) -> Result<Margin> {
        let id = InequalityId::parse(&self.inequality)?;
        evaluate(id, &self.input.to_inputs()?, self.s)
    }
}

fn need_s(id: InequalityId, s: Option<f64>) -> Result<f64> {
    s.ok_or_else(|| Error::InvalidInput(format!("{id} needs a value of s")))
}

fn wrong_inputs(id: InequalityId) -> Error {
    Error::InvalidInput(format!("inputs do not match inequality {id}"))
}

fn evaluate_pair(id: InequalityId, pair: &PreparedPair, s: Option<f64>) -> Result<Margin> {
    match id {
        InequalityId::Thm1 => pair.trace_margin(1.0),
        InequalityId::Thm2Trace => pair.trace_margin(0.0),
        InequalityId::Thm2Operator => pair.operator_margin_s0(),
        InequalityId::Eq3 => pair.trace_margin(need_s(id, s)?),
        InequalityId::Q1 => pair.operator_margin_question(Question::Q1),
        InequalityId::Q2 => pair.operator_margin_question(Question::Q2),
        _ => Err(wrong_inputs(id)),
    }
}

fn uses_prepared_pair(id: InequalityId) -> bool {
    matches!(
        id,
        InequalityId::Thm1
            | InequalityId::Thm2Trace
            | InequalityId::Thm2Operator
            | InequalityId::Eq3
            | InequalityId::Q1
            | InequalityId::Q2
    )
}

/// Margin of `id` on `inputs`, oriented so that `≥ 0` certifies the claim.
pub fn evaluate(id: InequalityId, inputs: &Inputs, s: Option<f64>) -> Result<Margin> {
    evaluate_slots(id, inputs, &[s]).pop().expect("one slot")
}

/// Evaluates several `s` slots, sharing the pair preparation.
pub fn evaluate_slots(id: InequalityId, inputs: &Inputs, slots: &[Option<f64>]) -> Vec<Result<Margin>> {
    if uses_prepared_pair(id) {
        let Inputs::Pair(a, b) = inputs else {
            return slots.iter().map(|_| Err(wrong_inputs(id))).collect();
        };
        return match PreparedPair::new(a, b) {
            Ok(pair) => slots.iter().map(|&s| evaluate_pair(id, &pair, s)).collect(),
            Err(e) => slots.iter().map(|_| Err(e.clone())).collect(),
        };
    }
    slots.iter().map(|&s| evaluate_other(id, inputs, s)).collect()
}

fn evaluate_other(id: InequalityId, inputs: &Inputs, s: Option<f64>) -> Result<Margin> {
    match (id, inputs) {
        (InequalityId::Lemma2, Inputs::Scalars { t, a, b }) => {
            let r = lemma2_margin(t, a, b, need_s(id, s)?)?;
            Ok(Margin {
                value: r.margin,
                imag_residual: 0.0,
                scale: r.lhs.abs() + r.rhs.abs(),
            })
        }
        (InequalityId::Remark2, Inputs::Ensemble(e)) => {
            let p = pairwise_expansion_s1(e)?;
            let scale = p.pair_terms.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
            let value = if e.len() < 2 { 0.0 } else { p.min_pair_term() };
            Ok(Margin {
                value,
                imag_residual: p.imag_residual,
                scale,
            })
        }
        (InequalityId::Remark3, Inputs::Ensemble(e)) => Ok(holevo_jensen_instance(e)?.gap),
        (InequalityId::Lemma1Jensen, Inputs::Jensen { k, c }) => {
            jensen_operator_gap(ScalarFunction::Square, k, c)
        }
        (InequalityId::Thm4Part1, Inputs::Pair(a, b)) => {
            Ok(theorem4_margins(a.as_hermitian(), b.as_hermitian())?.m1.as_nonpositive_claim())
        }
        (InequalityId::Thm4Part2, Inputs::Pair(a, b)) => {
            Ok(theorem4_margins(a.as_hermitian(), b.as_hermitian())?.m2.as_nonpositive_claim())
        }
        (InequalityId::Remark4, Inputs::Pair(a, b)) => {
            let r = remark4_residual(a.as_hermitian(), b.as_hermitian())?;
            Ok(Margin::exact(-r))
        }
        _ => Err(wrong_inputs(id)),
    }
}

/// Positive triples of length `n` scaled so that both interpolation
/// conditions hold and at least one is tight.
pub fn lemma2_triple_from_rng<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut draw = || -> Vec<f64> {
        (0..n)
            .map(|_| (rng.gen_range(-LEMMA2_LOG_RANGE..LEMMA2_LOG_RANGE)).exp())
            .collect()
    };
    let t = draw();
    let a = draw();
    let b = draw();
    let scale = lemma2_feasible_scale(&t, &a, &b);
    let b = b.iter().map(|x| x * scale).collect();
    (t, a, b)
}

/// Largest factor `c` with both conditions holding for `c·b`.
fn lemma2_feasible_scale(t: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ta: f64 = t.iter().zip(a).map(|(t, a)| t * a).sum();
    let sb: f64 = b.iter().sum();
    let sa: f64 = a.iter().sum();
    let bt: f64 = b.iter().zip(t).map(|(b, t)| b / t).sum();
    (ta / sb).min(sa / bt)
}

fn jensen_from_rng<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    terms: usize,
    min_eigenvalue: f64,
) -> Result<Inputs> {
    let k: Vec<HermitianMatrix> = (0..terms)
        .map(|_| contraction_from_rng(rng, dim, min_eigenvalue).into_hermitian().scale(4.0))
        .collect();
    let g: Vec<CMatrix> = (0..terms).map(|_| ginibre(rng, dim)).collect();
    let weight: f64 = rng.gen_range(0.5..=1.0);
    let c = normalize_kraus(&g, weight)?;
    Ok(Inputs::Jensen { k, c })
}

/// `C_i = G_i (Σ G_j† G_j)^{−1/2} √w`, so that `Σ C_i† C_i = w I`.
fn normalize_kraus(g: &[CMatrix], weight: f64) -> Result<Vec<SquareMatrix>> {
    let dim = g[0].nrows();
    let mut total = CMatrix::zeros(dim, dim);
    for gi in g {
        total += gi.adjoint() * gi;
    }
    let inv_root = spectral_decompose(&HermitianMatrix::from_hermitian_part(&total)?)?
        .apply(ScalarFunction::Pow(-0.5), DEFAULT_EIGENVALUE_FLOOR)?;
    g.iter()
        .map(|gi| SquareMatrix::new(gi * inv_root.as_matrix() * C64::new(weight.sqrt(), 0.0)))
        .collect()
}

/// Number of states (or Jensen terms) used for sample `index`: 2, 3, 4, 2, …
pub fn ensemble_size(index: u64) -> usize {
    2 + (index % 3) as usize
}

/// Draws the inputs of sample `index`.
pub fn draw_inputs(cfg: &CampaignConfig, index: u64) -> Result<Inputs> {
    let sampler = cfg.sampler_for_draws();
    match cfg.inequality {
        InequalityId::Remark2 | InequalityId::Remark3 => Ok(Inputs::Ensemble(sample_ensemble(
            &sampler,
            ensemble_size(index),
            index,
        )?)),
        InequalityId::Lemma2 => {
            let (t, a, b) = lemma2_triple_from_rng(&mut sampler.rng(index), cfg.dim);
            Ok(Inputs::Scalars { t, a, b })
        }
        InequalityId::Lemma1Jensen => jensen_from_rng(
            &mut sampler.rng(index),
            cfg.dim,
            ensemble_size(index),
            sampler.min_eigenvalue,
        ),
        _ => match sampler.kind {
            SamplerKind::GinibreDensity => {
                let mut rng = sampler.rng(index);
                let a = density_from_rng(&mut rng, cfg.dim, sampler.min_eigenvalue)?;
                let b = density_from_rng(&mut rng, cfg.dim, sampler.min_eigenvalue)?;
                Ok(Inputs::Pair(
                    PositiveContraction::new(a.into_hermitian())?,
                    PositiveContraction::new(b.into_hermitian())?,
                ))
            }
            _ => {
                let (a, b) = sample_contraction_pair(&sampler, index)?;
                Ok(Inputs::Pair(a, b))
            }
        },
    }
}

/// Where refinement must keep its iterates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Spectra in `[min_eigenvalue, 1]`.
    Contractions { min_eigenvalue: f64 },
    /// Spectra in `[min_eigenvalue, 1]`, sharing one eigenbasis.
    CommutingContractions { min_eigenvalue: f64 },
    /// Unit trace, spectra `≥ min_eigenvalue`.
    Densities { min_eigenvalue: f64 },
    /// Positive scalars satisfying both interpolation conditions.
    Scalars,
    /// `K_i ≥ 0` and `Σ C_i† C_i ≤ I`.
    Jensen,
}

impl Domain {
    pub fn for_campaign(cfg: &CampaignConfig) -> Self {
        let min_eigenvalue = cfg.sampler.min_eigenvalue;
        match cfg.inequality {
            InequalityId::Lemma2 => Domain::Scalars,
            InequalityId::Lemma1Jensen => Domain::Jensen,
            InequalityId::Remark2 | InequalityId::Remark3 => Domain::Densities { min_eigenvalue },
            _ => match cfg.sampler.kind {
                SamplerKind::CommutingPair => Domain::CommutingContractions { min_eigenvalue },
                SamplerKind::GinibreDensity => Domain::Densities { min_eigenvalue },
                _ => Domain::Contractions { min_eigenvalue },
            },
        }
    }
}

fn hermitian_noise<R: Rng + ?Sized>(rng: &mut R, dim: usize, step: f64) -> CMatrix {
    hermitian_part(&ginibre(rng, dim)) * C64::new(step, 0.0)
}

fn perturb_hermitian<R: Rng + ?Sized>(rng: &mut R, h: &HermitianMatrix, step: f64) -> HermitianMatrix {
    HermitianMatrix::from_hermitian_part(&(h.as_matrix() + hermitian_noise(rng, h.dim(), step)))
        .expect("square")
}

fn perturb_positive<R: Rng + ?Sized>(rng: &mut R, v: &[f64], step: f64) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let z: f64 = rng.sample(StandardNormal);
            x * (step * z).exp()
        })
        .collect()
}

/// Maps possibly invalid inputs back into `domain`. Valid inputs are left
/// unchanged up to rounding.
pub fn project(domain: Domain, inputs: &Inputs) -> Result<Inputs> {
    match (domain, inputs) {
        (Domain::Contractions { min_eigenvalue }, Inputs::Pair(a, b)) => Ok(Inputs::Pair(
            clip_contraction(a.as_hermitian(), min_eigenvalue)?,
            clip_contraction(b.as_hermitian(), min_eigenvalue)?,
        )),
        (Domain::CommutingContractions { min_eigenvalue }, Inputs::Pair(a, b)) => {
            let d = spectral_decompose(a.as_hermitian())?;
            let u = &d.eigenvectors;
            let in_basis = u.adjoint() * b.as_hermitian().as_matrix() * u;
            let clip = |x: f64| x.clamp(min_eigenvalue, 1.0);
            let da: Vec<f64> = d.eigenvalues.iter().map(|&x| clip(x)).collect();
            let db: Vec<f64> = (0..d.dim()).map(|k| clip(in_basis[(k, k)].re)).collect();
            let (pa, pb) = commuting_pair_in_basis(u, &da, &db);
            Ok(Inputs::Pair(pa, pb))
        }
        (Domain::Densities { min_eigenvalue }, Inputs::Pair(a, b)) => Ok(Inputs::Pair(
            PositiveContraction::new(clip_density(a.as_hermitian(), min_eigenvalue)?.into_hermitian())?,
            PositiveContraction::new(clip_density(b.as_hermitian(), min_eigenvalue)?.into_hermitian())?,
        )),
        (Domain::Densities { min_eigenvalue }, Inputs::Ensemble(e)) => {
            let total: f64 = e.pi().iter().sum();
            let pi: Vec<f64> = e.pi().iter().map(|p| p.max(0.0) / total).collect();
            let states = e
                .states()
                .iter()
                .map(|s| clip_density(s.as_hermitian(), min_eigenvalue))
                .collect::<Result<Vec<_>>>()?;
            Ok(Inputs::Ensemble(Ensemble::new(pi, states)?))
        }
        (Domain::Scalars, Inputs::Scalars { t, a, b }) => {
            let c = lemma2_feasible_scale(t, a, b).min(1.0);
            Ok(Inputs::Scalars {
                t: t.clone(),
                a: a.clone(),
                b: b.iter().map(|x| x * c).collect(),
            })
        }
        (Domain::Jensen, Inputs::Jensen { k, c }) => {
            let k = k
                .iter()
                .map(|ki| Ok(spectral_decompose(ki)?.map_eigenvalues(|l| l.max(0.0))))
                .collect::<Result<Vec<_>>>()?;
            let dim = k[0].dim();
            let mut total = CMatrix::zeros(dim, dim);
            for ci in c {
                total += ci.as_matrix().adjoint() * ci.as_matrix();
            }
            let top = spectral_decompose(&HermitianMatrix::from_hermitian_part(&total)?)?.max_eigenvalue();
            let c = if top > 1.0 {
                let shrink = C64::new(1.0 / top.sqrt(), 0.0);
                c.iter()
                    .map(|ci| SquareMatrix::new(ci.as_matrix() * shrink))
                    .collect::<Result<Vec<_>>>()?
            } else {
                c.clone()
            };
            Ok(Inputs::Jensen { k, c })
        }
        _ => Err(Error::InvalidInput("inputs do not match the refinement domain".into())),
    }
}

fn perturb<R: Rng + ?Sized>(rng: &mut R, inputs: &Inputs, step: f64) -> Result<Inputs> {
    Ok(match inputs {
        Inputs::Pair(a, b) => {
            // unchecked: the projection restores the spectral bounds
            Inputs::Pair(
                PositiveContraction::new_unchecked(perturb_hermitian(rng, a.as_hermitian(), step)),
                PositiveContraction::new_unchecked(perturb_hermitian(rng, b.as_hermitian(), step)),
            )
        }
        Inputs::Ensemble(e) => {
            let pi = perturb_positive(rng, e.pi(), step);
            let total: f64 = pi.iter().sum();
            let pi = pi.iter().map(|p| p / total).collect();
            let states = e
                .states()
                .iter()
                .map(|s| clip_density(&perturb_hermitian(rng, s.as_hermitian(), step), 0.0))
                .collect::<Result<Vec<_>>>()?;
            Inputs::Ensemble(Ensemble::new(pi, states)?)
        }
        Inputs::Scalars { t, a, b } => Inputs::Scalars {
            t: perturb_positive(rng, t, step),
            a: perturb_positive(rng, a, step),
            b: perturb_positive(rng, b, step),
        },
        Inputs::Jensen { k, c } => Inputs::Jensen {
            k: k.iter().map(|ki| perturb_hermitian(rng, ki, step)).collect(),
            c: c.iter()
                .map(|ci| {
                    let noise = ginibre(rng, ci.dim()) * C64::new(step, 0.0);
                    SquareMatrix::new(ci.as_matrix() + noise)
                })
                .collect::<Result<Vec<_>>>()?,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub inputs: Inputs,
    pub margin: Margin,
    /// Margin after every step (accepted or not), nonincreasing.
    pub trajectory: Vec<f64>,
    pub accepted: usize,
}

/// Strict-descent random local search: perturb, project, keep the step iff
/// the margin strictly decreases.
pub fn refine(
    id: InequalityId,
    inputs: &Inputs,
    s: Option<f64>,
    steps: usize,
    step_size: f64,
    seed: u64,
    domain: Domain,
) -> Result<RefineOutcome> {
    let mut current = inputs.clone();
    let mut margin = evaluate(id, &current, s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectory = Vec::with_capacity(steps);
    let mut accepted = 0;
    for _ in 0..steps {
        let candidate = perturb(&mut rng, &current, step_size).and_then(|p| project(domain, &p));
        if let Ok(candidate) = candidate {
            if let Ok(m) = evaluate(id, &candidate, s) {
                if m.value < margin.value {
                    current = candidate;
                    margin = m;
                    accepted += 1;
                }
            }
        }
        trajectory.push(margin.value);
    }
    Ok(RefineOutcome {
        inputs: current,
        margin,
        trajectory,
        accepted,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleStatus {
    Ok,
    NearViolation,
    Violation,
    Skipped(&'static str),
}

impl SampleStatus {
    pub fn label(&self) -> String {
        match self {
            SampleStatus::Ok => "ok".into(),
            SampleStatus::NearViolation => "near_violation".into(),
            SampleStatus::Violation => "violation".into(),
            SampleStatus::Skipped(reason) => format!("skipped:{reason}"),
        }
    }
}

/// One evaluation inside a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub index: u64,
    pub s: Option<f64>,
    pub margin: Option<f64>,
    pub imag_residual: f64,
    pub fingerprint: u64,
    pub refined: bool,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub evaluated: u64,
    pub min_margin: f64,
    pub argmin_witness: Option<WitnessRecord>,
    pub near_violations: u64,
    pub violations: u64,
    pub skipped: BTreeMap<String, u64>,
    /// Counts per bucket delimited by [`HISTOGRAM_EDGES`].
    pub histogram: Vec<u64>,
    pub max_imag_residual: f64,
}

impl CampaignResult {
    pub fn empty() -> Self {
        Self {
            evaluated: 0,
            min_margin: f64::INFINITY,
            argmin_witness: None,
            near_violations: 0,
            violations: 0,
            skipped: BTreeMap::new(),
            histogram: vec![0; HISTOGRAM_EDGES.len() + 1],
            max_imag_residual: 0.0,
        }
    }

    pub fn skipped_total(&self) -> u64 {
        self.skipped.values().sum()
    }

    /// Associative merge; on equal minima the lower sample index wins.
    pub fn merge(mut self, other: Self) -> Self {
        self.evaluated += other.evaluated;
        self.near_violations += other.near_violations;
        self.violations += other.violations;
        for (k, v) in other.skipped {
            *self.skipped.entry(k).or_insert(0) += v;
        }
        for (h, o) in self.histogram.iter_mut().zip(other.histogram) {
            *h += o;
        }
        self.max_imag_residual = self.max_imag_residual.max(other.max_imag_residual);
        let take_other = match (&self.argmin_witness, &other.argmin_witness) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(w), Some(o)) => {
                other.min_margin < self.min_margin
                    || (other.min_margin == self.min_margin && o.index < w.index)
            }
        };
        if take_other {
            self.min_margin = other.min_margin;
            self.argmin_witness = other.argmin_witness;
        }
        self
    }

    fn record(&mut self, margin: f64, status: &SampleStatus, imag: f64) {
        self.evaluated += 1;
        match status {
            SampleStatus::Violation => self.violations += 1,
            SampleStatus::NearViolation => self.near_violations += 1,
            SampleStatus::Skipped(reason) => {
                *self.skipped.entry((*reason).to_string()).or_insert(0) += 1;
                return;
            }
            SampleStatus::Ok => {}
        }
        self.max_imag_residual = self.max_imag_residual.max(imag);
        let bucket = HISTOGRAM_EDGES.iter().take_while(|&&e| margin >= e).count();
        self.histogram[bucket] += 1;
    }
}

pub fn histogram_labels() -> Vec<String> {
    let mut labels = Vec::with_capacity(HISTOGRAM_EDGES.len() + 1);
    labels.push(format!("<{:e}", HISTOGRAM_EDGES[0]));
    for w in HISTOGRAM_EDGES.windows(2) {
        labels.push(format!("[{:e},{:e})", w[0], w[1]));
    }
    labels.push(format!(">={:e}", HISTOGRAM_EDGES[HISTOGRAM_EDGES.len() - 1]));
    labels
}

fn classify(cfg: &CampaignConfig, m: &Margin) -> SampleStatus {
    if m.value < -cfg.tolerance * (1.0 + m.scale) {
        SampleStatus::Violation
    } else if m.value < cfg.near_violation_threshold {
        SampleStatus::NearViolation
    } else {
        SampleStatus::Ok
    }
}

/// Sequential evaluation of one sample: all `s` slots, then optional
/// refinement of the worst slot.
fn run_sample(cfg: &CampaignConfig, index: u64, partial: &mut CampaignResult, records: &mut Vec<SampleRecord>) {
    let slots = cfg.s_slots();
    let inputs = match draw_inputs(cfg, index) {
        Ok(i) => i,
        Err(e) => {
            for &s in &slots {
                let status = SampleStatus::Skipped(e.reason());
                partial.record(f64::NAN, &status, 0.0);
                records.push(SampleRecord {
                    index,
                    s,
                    margin: None,
                    imag_residual: 0.0,
                    fingerprint: 0,
                    refined: false,
                    status,
                });
            }
            return;
        }
    };
    let fingerprint = inputs.fingerprint();
    let mut outcomes: Vec<(Option<f64>, Result<Margin>, Inputs, u64, bool)> = evaluate_slots(
        cfg.inequality,
        &inputs,
        &slots,
    )
    .into_iter()
    .zip(&slots)
    .map(|(r, &s)| (s, r, inputs.clone(), fingerprint, false))
    .collect();

    if cfg.refine_steps > 0 {
        let worst = outcomes
            .iter()
            .enumerate()
            .filter_map(|(k, o)| o.1.as_ref().ok().map(|m| (k, m.value)))
            .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        if let Some((k, _)) = worst {
            let refine_seed = sample_seed(cfg.seed ^ 0x5EED_0F4E_F10E, index);
            if let Ok(out) = refine(
                cfg.inequality,
                &inputs,
                outcomes[k].0,
                cfg.refine_steps,
                cfg.refine_step_size,
                refine_seed,
                Domain::for_campaign(cfg),
            ) {
                let fp = out.inputs.fingerprint();
                outcomes[k] = (outcomes[k].0, Ok(out.margin), out.inputs, fp, true);
            }
        }
    }

    for (s, result, used, fp, refined) in outcomes {
        match result {
            Ok(m) => {
                let status = classify(cfg, &m);
                partial.record(m.value, &status, m.imag_residual);
                if m.value < partial.min_margin {
                    partial.min_margin = m.value;
                    partial.argmin_witness = Some(WitnessRecord {
                        inequality: cfg.inequality.tag().to_string(),
                        s,
                        index,
                        margin: m.value,
                        input: used.to_witness(),
                    });
                }
                records.push(SampleRecord {
                    index,
                    s,
                    margin: Some(m.value),
                    imag_residual: m.imag_residual,
                    fingerprint: fp,
                    refined,
                    status,
                });
            }
            Err(e) => {
                let status = SampleStatus::Skipped(e.reason());
                partial.record(f64::NAN, &status, 0.0);
                records.push(SampleRecord {
                    index,
                    s,
                    margin: None,
                    imag_residual: 0.0,
                    fingerprint: fp,
                    refined,
                    status,
                });
            }
        }
    }
}

fn run_range(cfg: &CampaignConfig, start: u64, end: u64) -> (CampaignResult, Vec<SampleRecord>) {
    let mut partial = CampaignResult::empty();
    let mut records = Vec::new();
    for index in start..end {
        run_sample(cfg, index, &mut partial, &mut records);
    }
    (partial, records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutput {
    pub result: CampaignResult,
    /// Per-evaluation records in sample-index order.
    pub records: Vec<SampleRecord>,
}

/// Runs `cfg` on `workers` contiguous index partitions. Numerical failures
/// are tallied per reason, never fatal.
pub fn run_campaign(cfg: &CampaignConfig, workers: usize) -> Result<CampaignOutput> {
    cfg.validate()?;
    let workers = workers.max(1) as u64;
    let chunk = cfg.samples.div_ceil(workers).max(1);
    let ranges: Vec<(u64, u64)> = (0..workers)
        .map(|w| ((w * chunk).min(cfg.samples), ((w + 1) * chunk).min(cfg.samples)))
        .filter(|(a, b)| a < b)
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers as usize)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let partials: Vec<(CampaignResult, Vec<SampleRecord>)> = pool.install(|| {
        ranges
            .par_iter()
            .map(|&(a, b)| run_range(cfg, a, b))
            .collect()
    });
    let mut result = CampaignResult::empty();
    let mut records = Vec::new();
    for (partial, recs) in partials {
        result = result.merge(partial);
        records.extend(recs);
    }
    Ok(CampaignOutput { result, records })
}

/// `Σ C_i† C_i ≤ I` slack of Jensen inputs.
pub fn jensen_completeness_slack(c: &[SquareMatrix]) -> Result<f64> {
    let dim = c[0].dim();
    let mut total = CMatrix::zeros(dim, dim);
    for ci in c {
        total += ci.as_matrix().adjoint() * ci.as_matrix();
    }
    loewner_margin(&HermitianMatrix::from_hermitian_part(&total)?, &HermitianMatrix::identity(dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_samples() {
        let cfg = CampaignConfig::new(InequalityId::Thm1, 3, 0, 1);
        let out = run_campaign(&cfg, 2).unwrap();
        assert_eq!(out.result.evaluated, 0);
        assert_eq!(out.result.min_margin, f64::INFINITY);
        assert!(out.result.argmin_witness.is_none());
        assert!(out.records.is_empty());
    }

    #[test]
    fn commuting_thm1_has_no_violations() {
        let mut cfg = CampaignConfig::new(InequalityId::Thm1, 3, 200, 11);
        cfg.sampler.kind = SamplerKind::CommutingPair;
        let out = run_campaign(&cfg, 1).unwrap();
        assert_eq!(out.result.violations, 0);
        assert_eq!(out.result.evaluated, 200);
    }

    #[test]
    fn evaluated_counts_s_slots() {
        let mut cfg = CampaignConfig::new(InequalityId::Eq3, 2, 7, 3);
        cfg.s_values = vec![0.0, 0.5, 1.0];
        let out = run_campaign(&cfg, 3).unwrap();
        assert_eq!(out.result.evaluated, 21);
        assert_eq!(out.records.len(), 21);
        assert!(out.records.windows(2).all(|w| w[0].index <= w[1].index));
    }

    #[test]
    fn sampler_compatibility() {
        let mut cfg = CampaignConfig::new(InequalityId::Remark2, 3, 5, 3);
        cfg.sampler.kind = SamplerKind::CommutingPair;
        assert!(run_campaign(&cfg, 1).is_err());
        let mut cfg = CampaignConfig::new(InequalityId::Eq3, 3, 5, 3);
        cfg.s_values.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn lemma2_triples_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let (t, a, b) = lemma2_triple_from_rng(&mut rng, 3);
            let r = lemma2_margin(&t, &a, &b, 0.5).unwrap();
            assert!(r.cond_i >= -1e-12 * (1.0 + r.lhs.abs()));
            assert!(r.cond_ii >= -1e-12 * (1.0 + r.lhs.abs()));
        }
    }

    #[test]
    fn refine_zero_steps_is_identity() {
        let cfg = CampaignConfig::new(InequalityId::Thm1, 3, 1, 5);
        let inputs = draw_inputs(&cfg, 0).unwrap();
        let direct = evaluate(InequalityId::Thm1, &inputs, None).unwrap();
        let out = refine(InequalityId::Thm1, &inputs, None, 0, 0.05, 1, Domain::for_campaign(&cfg)).unwrap();
        assert_eq!(out.inputs, inputs);
        assert_eq!(out.margin, direct);
        assert!(out.trajectory.is_empty());
    }

    #[test]
    fn jensen_inputs_are_subnormalized() {
        let cfg = CampaignConfig::new(InequalityId::Lemma1Jensen, 3, 1, 5);
        for i in 0..20 {
            let Inputs::Jensen { c, .. } = draw_inputs(&cfg, i).unwrap() else {
                panic!("wrong inputs")
            };
            assert!(jensen_completeness_slack(&c).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn wrong_inputs_rejected() {
        let inputs = Inputs::Scalars {
            t: vec![1.0, 2.0],
            a: vec![1.0, 1.0],
            b: vec![1.0, 1.0],
        };
        assert!(evaluate(InequalityId::Thm1, &inputs, None).is_err());
        assert!(evaluate(InequalityId::Lemma2, &inputs, None).is_err());
        assert!(evaluate(InequalityId::Lemma2, &inputs, Some(0.5)).is_ok());
    }

    #[test]
    fn histogram_buckets() {
        let mut r = CampaignResult::empty();
        r.record(-1.0, &SampleStatus::Violation, 0.0);
        r.record(0.0, &SampleStatus::NearViolation, 0.0);
        r.record(5.0, &SampleStatus::Ok, 0.0);
        assert_eq!(r.histogram, vec![1, 0, 0, 0, 1, 0, 0, 1]);
        assert_eq!(histogram_labels().len(), 8);
    }
}
