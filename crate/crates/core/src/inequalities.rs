//! Signed margin evaluators for the trace and operator inequalities.
//!
//! Trace margins are `left − right`; operator margins are the minimum
//! eigenvalue of `left − right`. A margin `≥ −tol` certifies the inequality
//! on that instance, so rounding noise and genuine violations stay
//! distinguishable.
//!
//! Pair quantities share one [`PreparedPair`]:
//! `M = A(log A)² + B(log B)²`, `Y = A log A + B log B` and the spectral
//! decomposition of `A + B`. Every power of `A + B` (including `(A+B)^{s−1}`)
//! is a single spectral function of that decomposition.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ensembles::{Ensemble, PositiveContraction};
use crate::error::{Error, Result};
use crate::matcore::{
    loewner_margin, neg_x_log_x, spectral_decompose, trace_of_product, x_log_sq, CMatrix,
    HermitianMatrix, RealTrace, ScalarFunction, SpectralDecomposition, SquareMatrix,
    DEFAULT_EIGENVALUE_FLOOR,
};

/// Minimum eigenvalue of `A + B` (or of a state, in strict mode) below which
/// inverse powers and logarithm differences are refused.
pub const SINGULARITY_GATE: f64 = 1e-10;
/// Loewner slack allowed on `Σ C_i† C_i ≤ I`.
pub const CONTRACTION_TOL: f64 = 1e-8;
/// Slack allowed below 0 on Jensen operator spectra.
pub const DOMAIN_TOL: f64 = 1e-10;

/// One evaluated margin with its numerical diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub value: f64,
    /// `|Im|` of the traces that were discarded (0 for operator margins).
    pub imag_residual: f64,
    /// Magnitude of the terms that cancel; relative tolerances scale with it.
    pub scale: f64,
}

impl Margin {
    pub fn from_terms(first: RealTrace, second: RealTrace) -> Self {
        Self {
            value: first.value - second.value,
            imag_residual: first.imag_residual + second.imag_residual,
            scale: first.value.abs() + second.value.abs(),
        }
    }

    pub fn exact(value: f64) -> Self {
        Self {
            value,
            imag_residual: 0.0,
            scale: value.abs(),
        }
    }

    fn operator(value: f64, left: &HermitianMatrix, right: &HermitianMatrix) -> Self {
        Self {
            value,
            imag_residual: 0.0,
            scale: left.frobenius_norm() + right.frobenius_norm(),
        }
    }

    fn negated(self) -> Self {
        Self {
            value: -self.value,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MarginKind {
    Trace,
    OperatorMinEig,
    Scalar,
}

impl MarginKind {
    pub fn tag(self) -> &'static str {
        match self {
            MarginKind::Trace => "TRACE",
            MarginKind::OperatorMinEig => "OPERATOR_MIN_EIG",
            MarginKind::Scalar => "SCALAR",
        }
    }
}

/// Every inequality the toolkit can evaluate, by its report tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InequalityId {
    Thm1,
    Thm2Trace,
    Thm2Operator,
    Eq3,
    Q1,
    Q2,
    Lemma2,
    Remark2,
    Lemma1Jensen,
    Remark3,
    Thm4Part1,
    Thm4Part2,
    Remark4,
}

impl InequalityId {
    pub const ALL: [InequalityId; 13] = [
        InequalityId::Thm1,
        InequalityId::Thm2Trace,
        InequalityId::Thm2Operator,
        InequalityId::Eq3,
        InequalityId::Q1,
        InequalityId::Q2,
        InequalityId::Lemma2,
        InequalityId::Remark2,
        InequalityId::Lemma1Jensen,
        InequalityId::Remark3,
        InequalityId::Thm4Part1,
        InequalityId::Thm4Part2,
        InequalityId::Remark4,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            InequalityId::Thm1 => "thm1",
            InequalityId::Thm2Trace => "thm2-trace",
            InequalityId::Thm2Operator => "thm2-operator",
            InequalityId::Eq3 => "eq3",
            InequalityId::Q1 => "q1",
            InequalityId::Q2 => "q2",
            InequalityId::Lemma2 => "lemma2",
            InequalityId::Remark2 => "remark2",
            InequalityId::Lemma1Jensen => "lemma1-jensen",
            InequalityId::Remark3 => "remark3",
            InequalityId::Thm4Part1 => "thm4-1",
            InequalityId::Thm4Part2 => "thm4-2",
            InequalityId::Remark4 => "remark4",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|id| id.tag() == tag)
            .ok_or_else(|| Error::UnknownInequality(tag.to_string()))
    }

    pub fn kind(self) -> MarginKind {
        match self {
            InequalityId::Thm2Operator
            | InequalityId::Q1
            | InequalityId::Q2
            | InequalityId::Lemma1Jensen
            | InequalityId::Remark3 => MarginKind::OperatorMinEig,
            InequalityId::Lemma2 => MarginKind::Scalar,
            _ => MarginKind::Trace,
        }
    }

    /// Whether the margin depends on the interpolation parameter `s`.
    pub fn uses_s(self) -> bool {
        matches!(self, InequalityId::Eq3 | InequalityId::Lemma2)
    }

    /// Whether a negative margin contradicts a proven claim. `dim` is the
    /// matrix dimension, or the sequence length for `lemma2`.
    pub fn is_asserted(self, dim: usize) -> bool {
        match self {
            InequalityId::Q1 | InequalityId::Q2 => false,
            InequalityId::Eq3 | InequalityId::Lemma2 => dim <= 2,
            _ => true,
        }
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One evaluated instance, ready for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub inequality_id: InequalityId,
    pub s: Option<f64>,
    pub margin: f64,
    pub kind: MarginKind,
    pub imag_residual: f64,
    pub input_fingerprint: u64,
    pub witness_ref: Option<String>,
}

/// FNV-1a over the bit patterns of a sequence of floats.
pub fn fingerprint_f64s<I: IntoIterator<Item = f64>>(values: I) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

pub fn fingerprint_matrices(ms: &[&CMatrix]) -> u64 {
    fingerprint_f64s(
        ms.iter()
            .flat_map(|m| m.iter().flat_map(|z| [z.re, z.im])),
    )
}

fn check_s(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidInput(format!("s = {s} outside [0, 1]")));
    }
    Ok(())
}

fn floor_apply(d: &SpectralDecomposition, f: ScalarFunction) -> Result<HermitianMatrix> {
    d.apply(f, DEFAULT_EIGENVALUE_FLOOR)
}

/// `x log x` as a matrix (negated entropy function).
fn x_log_x(d: &SpectralDecomposition) -> Result<HermitianMatrix> {
    Ok(floor_apply(d, ScalarFunction::NegXLogX)?.neg())
}

/// Shared ingredients of every two-matrix inequality.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    sum: HermitianMatrix,
    sum_spectrum: SpectralDecomposition,
    /// `A(log A)² + B(log B)²`
    m: HermitianMatrix,
    /// `A log A + B log B`
    y: HermitianMatrix,
}

impl PreparedPair {
    pub fn new(a: &PositiveContraction, b: &PositiveContraction) -> Result<Self> {
        Self::from_hermitian(a.as_hermitian(), b.as_hermitian())
    }

    fn from_hermitian(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<Self> {
        let sum = a.add(b)?;
        let sum_spectrum = spectral_decompose(&sum)?;
        if sum_spectrum.min_eigenvalue() < SINGULARITY_GATE {
            return Err(Error::SingularSum(sum_spectrum.min_eigenvalue()));
        }
        let da = spectral_decompose(a)?;
        let db = spectral_decompose(b)?;
        let m = floor_apply(&da, ScalarFunction::XLogSq)?
            .add(&floor_apply(&db, ScalarFunction::XLogSq)?)?;
        let y = x_log_x(&da)?.add(&x_log_x(&db)?)?;
        Ok(Self {
            sum,
            sum_spectrum,
            m,
            y,
        })
    }

    fn sum_pow(&self, p: f64) -> Result<HermitianMatrix> {
        floor_apply(&self.sum_spectrum, ScalarFunction::Pow(p))
    }

    pub fn trace_margin(&self, s: f64) -> Result<Margin> {
        check_s(s)?;
        let first = trace_of_product(self.sum_pow(s)?.as_matrix(), self.m.as_matrix());
        let second = trace_of_product(
            self.sum_pow(s - 1.0)?.as_matrix(),
            self.y.square().as_matrix(),
        );
        Ok(Margin::from_terms(first, second))
    }

    pub fn operator_margin_s0(&self) -> Result<Margin> {
        let right = self.sum_pow(-1.0)?.sandwich(&self.y)?;
        let diff = self.m.sub(&right)?;
        let value = spectral_decompose(&diff)?.min_eigenvalue();
        Ok(Margin::operator(value, &self.m, &right))
    }

    pub fn operator_margin_question(&self, which: Question) -> Result<Margin> {
        let right = self.y.square();
        let left = match which {
            Question::Q1 => self.m.sandwich(&self.sum_pow(0.5)?)?,
            Question::Q2 => {
                let md = spectral_decompose(&self.m)?;
                if md.min_eigenvalue() < -DEFAULT_EIGENVALUE_FLOOR {
                    return Err(Error::NegativeSpectrum {
                        eigenvalue: md.min_eigenvalue(),
                        floor: DEFAULT_EIGENVALUE_FLOOR,
                    });
                }
                let root = floor_apply(&md, ScalarFunction::Pow(0.5))?;
                self.sum.sandwich(&root)?
            }
        };
        let value = spectral_decompose(&left.sub(&right)?)?.min_eigenvalue();
        Ok(Margin::operator(value, &left, &right))
    }

    pub fn schatten_reduce(&self) -> SchattenTriple {
        SchattenTriple {
            t: self.sum_spectrum.eigenvalues.clone(),
            a: self.sum_spectrum.diagonal_in_basis(&self.m),
            b: self.sum_spectrum.diagonal_in_basis(&self.y.square()),
        }
    }
}

/// `Tr[(A+B)^s {A(log A)² + B(log B)²} − (A+B)^{s−1} (A log A + B log B)²]`.
pub fn trace_margin_general_s(
    a: &PositiveContraction,
    b: &PositiveContraction,
    s: f64,
) -> Result<Margin> {
    check_s(s)?;
    PreparedPair::new(a, b)?.trace_margin(s)
}

/// Minimum eigenvalue of `A(log A)² + B(log B)² − Y (A+B)^{−1} Y`.
pub fn operator_margin_s0(a: &PositiveContraction, b: &PositiveContraction) -> Result<Margin> {
    PreparedPair::new(a, b)?.operator_margin_s0()
}

/// The two candidate operator strengthenings at `s = 1`, whose validity is open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Question {
    /// `(A+B)^{1/2} M (A+B)^{1/2} ≥ Y²`
    Q1,
    /// `M^{1/2} (A+B) M^{1/2} ≥ Y²`
    Q2,
}

pub fn operator_margin_question(
    a: &PositiveContraction,
    b: &PositiveContraction,
    which: Question,
) -> Result<Margin> {
    PreparedPair::new(a, b)?.operator_margin_question(which)
}

/// Eigenvalues `t_n` of `A + B` and the diagonals `a_n = ⟨φ_n|M|φ_n⟩`,
/// `b_n = ⟨φ_n|Y²|φ_n⟩` in its eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SchattenTriple {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SchattenTriple {
    /// `Σ t_n^s a_n − Σ t_n^{s−1} b_n`.
    pub fn margin(&self, s: f64) -> f64 {
        self.t
            .iter()
            .zip(&self.a)
            .zip(&self.b)
            .map(|((t, a), b)| t.powf(s) * a - t.powf(s - 1.0) * b)
            .sum()
    }
}

pub fn schatten_reduce(a: &PositiveContraction, b: &PositiveContraction) -> Result<SchattenTriple> {
    Ok(PreparedPair::new(a, b)?.schatten_reduce())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma2Eval {
    /// `Σ t_k^s a_k`
    pub lhs: f64,
    /// `Σ t_k^{s−1} b_k`
    pub rhs: f64,
    pub margin: f64,
    /// `Σ t_k a_k − Σ b_k`
    pub cond_i: f64,
    /// `Σ a_k − Σ b_k / t_k`
    pub cond_ii: f64,
}

/// Scalar interpolation between the `s = 1` and `s = 0` conditions.
pub fn lemma2_margin(t: &[f64], a: &[f64], b: &[f64], s: f64) -> Result<Lemma2Eval> {
    check_s(s)?;
    if t.len() != a.len() || t.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "sequence lengths {}, {}, {} differ",
            t.len(),
            a.len(),
            b.len()
        )));
    }
    if t.len() < 2 {
        return Err(Error::InvalidInput("need at least two terms".into()));
    }
    if t.iter().chain(a).chain(b).any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::NonpositiveInput);
    }
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let (mut ta, mut sb, mut sa, mut bt) = (0.0, 0.0, 0.0, 0.0);
    for ((&tk, &ak), &bk) in t.iter().zip(a).zip(b) {
        lhs += tk.powf(s) * ak;
        rhs += tk.powf(s - 1.0) * bk;
        ta += tk * ak;
        sb += bk;
        sa += ak;
        bt += bk / tk;
    }
    Ok(Lemma2Eval {
        lhs,
        rhs,
        margin: lhs - rhs,
        cond_i: ta - sb,
        cond_ii: sa - bt,
    })
}

/// Pair terms `P_ij` (upper triangle, `i < j`) and `Σ_{i<j} π_i π_j P_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseExpansion {
    pub pair_terms: Vec<Vec<f64>>,
    pub total: f64,
    pub imag_residual: f64,
}

impl PairwiseExpansion {
    pub fn min_pair_term(&self) -> f64 {
        let a = self.pair_terms.len();
        let mut min = f64::INFINITY;
        for i in 0..a {
            for j in (i + 1)..a {
                min = min.min(self.pair_terms[i][j]);
            }
        }
        min
    }
}

/// Pairwise expansion of the sufficient condition at `s = 1`, in terms of
/// `R_i = S_i^{1/2}`:
/// `Tr[R_i R_j (log R_j)²] + Tr[R_j R_i (log R_i)²] − 2 Re Tr[R_i log R_i R_j log R_j]`.
pub fn pairwise_expansion_s1(ens: &Ensemble) -> Result<PairwiseExpansion> {
    let a = ens.len();
    let mut roots = Vec::with_capacity(a);
    let mut x = Vec::with_capacity(a);
    let mut g = Vec::with_capacity(a);
    for st in ens.states() {
        let d = spectral_decompose(st.as_hermitian())?;
        if d.min_eigenvalue() < -DEFAULT_EIGENVALUE_FLOOR {
            return Err(Error::NegativeSpectrum {
                eigenvalue: d.min_eigenvalue(),
                floor: DEFAULT_EIGENVALUE_FLOOR,
            });
        }
        let sqrt = |l: f64| l.max(0.0).sqrt();
        roots.push(d.map_eigenvalues(sqrt));
        x.push(d.map_eigenvalues(|l| x_log_sq(sqrt(l))));
        g.push(d.map_eigenvalues(|l| -neg_x_log_x(sqrt(l))));
    }
    let mut pair_terms = vec![vec![0.0; a]; a];
    let mut total = 0.0;
    let mut imag = 0.0;
    for i in 0..a {
        for j in (i + 1)..a {
            let t1 = trace_of_product(roots[i].as_matrix(), x[j].as_matrix());
            let t2 = trace_of_product(roots[j].as_matrix(), x[i].as_matrix());
            let t3 = trace_of_product(g[i].as_matrix(), g[j].as_matrix());
            let term = t1.value + t2.value - 2.0 * t3.value;
            imag += t1.imag_residual + t2.imag_residual;
            pair_terms[i][j] = term;
            total += ens.pi()[i] * ens.pi()[j] * term;
        }
    }
    Ok(PairwiseExpansion {
        pair_terms,
        total,
        imag_residual: imag,
    })
}

/// Minimum eigenvalue of `Σ C_i† f(K_i) C_i − f(Σ C_i† K_i C_i)`.
pub fn jensen_operator_gap(
    f: ScalarFunction,
    k: &[HermitianMatrix],
    c: &[SquareMatrix],
) -> Result<Margin> {
    if k.is_empty() || k.len() != c.len() {
        return Err(Error::InvalidInput(format!(
            "{} operators for {} coefficients",
            k.len(),
            c.len()
        )));
    }
    let dim = k[0].dim();
    let mut completeness = HermitianMatrix::zeros(dim);
    for ci in c {
        let cc = HermitianMatrix::from_hermitian_part(&(ci.as_matrix().adjoint() * ci.as_matrix()))?;
        completeness = completeness.add(&cc)?;
    }
    let slack = loewner_margin(&completeness, &HermitianMatrix::identity(dim))?;
    if slack < -CONTRACTION_TOL {
        return Err(Error::ContractionViolation(slack));
    }
    let mut inner = HermitianMatrix::zeros(dim);
    let mut outer = HermitianMatrix::zeros(dim);
    for (ki, ci) in k.iter().zip(c) {
        let d = spectral_decompose(ki)?;
        if d.min_eigenvalue() < -DOMAIN_TOL {
            return Err(Error::DomainViolation(d.min_eigenvalue()));
        }
        inner = inner.add(&ki.congruence(ci)?)?;
        outer = outer.add(&floor_apply(&d, f)?.congruence(ci)?)?;
    }
    let f_inner = floor_apply(&spectral_decompose(&inner)?, f)?;
    let value = spectral_decompose(&outer.sub(&f_inner)?)?.min_eigenvalue();
    Ok(Margin::operator(value, &outer, &f_inner))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolevoJensen {
    /// `‖Σ C_i† C_i − I‖_F`
    pub completeness_residual: f64,
    pub gap: Margin,
}

/// The operator Jensen data `K_i = −log S_i`,
/// `C_i = π_i^{1/2} S_i^{1/2} (Σ_k π_k S_k)^{−1/2}`, with `f(t) = t²`.
pub fn holevo_jensen_data(ens: &Ensemble) -> Result<(Vec<HermitianMatrix>, Vec<SquareMatrix>)> {
    let dim = ens.dim();
    let mut mixture = HermitianMatrix::zeros(dim);
    for (p, st) in ens.pi().iter().zip(ens.states()) {
        mixture = mixture.add(&st.as_hermitian().scale(*p))?;
    }
    let md = spectral_decompose(&mixture)?;
    if md.min_eigenvalue() < SINGULARITY_GATE {
        return Err(Error::SingularState(md.min_eigenvalue()));
    }
    let inv_root = floor_apply(&md, ScalarFunction::Pow(-0.5))?;
    let mut ks = Vec::with_capacity(ens.len());
    let mut cs = Vec::with_capacity(ens.len());
    for (p, st) in ens.pi().iter().zip(ens.states()) {
        let d = spectral_decompose(st.as_hermitian())?;
        if d.min_eigenvalue() < SINGULARITY_GATE {
            return Err(Error::SingularState(d.min_eigenvalue()));
        }
        ks.push(floor_apply(&d, ScalarFunction::Log)?.neg());
        let root = floor_apply(&d, ScalarFunction::Pow(0.5))?;
        let c = (root.as_matrix() * inv_root.as_matrix()) * crate::matcore::C64::new(p.sqrt(), 0.0);
        cs.push(SquareMatrix::new(c)?);
    }
    Ok((ks, cs))
}

pub fn holevo_jensen_instance(ens: &Ensemble) -> Result<HolevoJensen> {
    let (ks, cs) = holevo_jensen_data(ens)?;
    let dim = ens.dim();
    let mut completeness = CMatrix::zeros(dim, dim);
    for c in &cs {
        completeness += c.as_matrix().adjoint() * c.as_matrix();
    }
    let residual = (completeness - CMatrix::identity(dim, dim)).norm();
    let gap = jensen_operator_gap(ScalarFunction::Square, &ks, &cs)?;
    Ok(HolevoJensen {
        completeness_residual: residual,
        gap,
    })
}

fn strict_gate(h: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let d = spectral_decompose(h)?;
    if d.min_eigenvalue() < SINGULARITY_GATE {
        return Err(Error::SingularState(d.min_eigenvalue()));
    }
    Ok(d)
}

/// `D(A‖B) = A (log A − log B)`; generally not Hermitian.
///
/// In strict mode both inputs must have minimum eigenvalue `≥ 1e-10`;
/// otherwise eigenvalues are floored before the logarithm.
pub fn relative_d(a: &HermitianMatrix, b: &HermitianMatrix, strict: bool) -> Result<SquareMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    let (da, db) = if strict {
        (strict_gate(a)?, strict_gate(b)?)
    } else {
        (spectral_decompose(a)?, spectral_decompose(b)?)
    };
    let log_diff = floor_apply(&da, ScalarFunction::Log)?.sub(&floor_apply(&db, ScalarFunction::Log)?)?;
    SquareMatrix::new(a.as_matrix() * log_diff.as_matrix())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem4Margins {
    /// `Re Tr[D(A‖B) D(B‖A)]`, claimed `≤ 0`.
    pub m1: Margin,
    /// `Re Tr[(A+B)^{−1} D(A‖B) D(B‖A)†]`, claimed `≤ 0`.
    pub m2: Margin,
}

pub fn theorem4_margins(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<Theorem4Margins> {
    let d_ab = relative_d(a, b, true)?;
    let d_ba = relative_d(b, a, true)?;
    let sd = spectral_decompose(&a.add(b)?)?;
    if sd.min_eigenvalue() < SINGULARITY_GATE {
        return Err(Error::SingularSum(sd.min_eigenvalue()));
    }
    let inv = floor_apply(&sd, ScalarFunction::Pow(-1.0))?;
    let t1 = trace_of_product(d_ab.as_matrix(), d_ba.as_matrix());
    let t2 = trace_of_product(
        inv.as_matrix(),
        &(d_ab.as_matrix() * d_ba.as_matrix().adjoint()),
    );
    Ok(Theorem4Margins {
        m1: Margin::exact(t1.value).with_imag(t1.imag_residual),
        m2: Margin::exact(t2.value).with_imag(t2.imag_residual),
    })
}

impl Margin {
    fn with_imag(mut self, imag: f64) -> Self {
        self.imag_residual = imag;
        self
    }

    /// Flips the sign so that a `≤ 0` claim reads as a nonnegative margin.
    pub fn as_nonpositive_claim(self) -> Self {
        self.negated()
    }
}

/// `S(A‖B) = A^{1/2} log(A^{−1/2} B A^{−1/2}) A^{1/2}`.
pub fn relative_matrix_entropy(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    let da = strict_gate(a)?;
    strict_gate(b)?;
    let root = floor_apply(&da, ScalarFunction::Pow(0.5))?;
    let inv_root = floor_apply(&da, ScalarFunction::Pow(-0.5))?;
    let inner = b.sandwich(&inv_root)?;
    floor_apply(&spectral_decompose(&inner)?, ScalarFunction::Log)?.sandwich(&root)
}

/// `‖S(A‖B) + D(A‖B)‖_F`, which vanishes for commuting `A`, `B`.
pub fn remark4_residual(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    let s = relative_matrix_entropy(a, b)?;
    let d = relative_d(a, b, true)?;
    Ok((s.as_matrix() + d.as_matrix()).norm())
}
