//! Commuting-pair scalar oracles.
//!
//! When `A = U diag(a) U†` and `B = U diag(b) U†`, every margin reduces to
//! per-eigenvalue arithmetic on `a_n`, `b_n`. Running the matrix pipeline on
//! such pairs and comparing against these closed forms checks the spectral
//! calculus end to end.

use crate::ensembles::{commuting_pair_in_basis, commuting_spectra_from_rng, SamplerConfig, SamplerKind};
use crate::error::Result;
use crate::inequalities::{remark4_residual, theorem4_margins, PreparedPair, Question};

/// `a b (log a − log b)²`
fn cross(a: f64, b: f64) -> f64 {
    let d = a.ln() - b.ln();
    a * b * d * d
}

/// Trace margin at `s`: `Σ (a_n + b_n)^{s−1} a_n b_n (log a_n − log b_n)²`.
pub fn commuting_trace_margin(a: &[f64], b: &[f64], s: f64) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x + y).powf(s - 1.0) * cross(x, y)).sum()
}

/// Operator margin at `s = 0`: `min_n a_n b_n (log a_n − log b_n)² / (a_n + b_n)`.
pub fn commuting_operator_s0(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| cross(x, y) / (x + y))
        .fold(f64::INFINITY, f64::min)
}

/// Both open-question margins: `min_n a_n b_n (log a_n − log b_n)²`.
pub fn commuting_question(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| cross(x, y)).fold(f64::INFINITY, f64::min)
}

/// `Tr[D(A‖B) D(B‖A)] = −Σ a_n b_n (log a_n − log b_n)²`.
pub fn commuting_theorem4_m1(a: &[f64], b: &[f64]) -> f64 {
    -a.iter().zip(b).map(|(&x, &y)| cross(x, y)).sum::<f64>()
}

/// `Tr[(A+B)^{−1} D(A‖B) D(B‖A)†] = −Σ a_n b_n (log a_n − log b_n)² / (a_n + b_n)`.
pub fn commuting_theorem4_m2(a: &[f64], b: &[f64]) -> f64 {
    -a.iter().zip(b).map(|(&x, &y)| cross(x, y) / (x + y)).sum::<f64>()
}

/// Largest discrepancy seen for one check.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: String,
    pub max_abs_discrepancy: f64,
    /// `|matrix − scalar| / max(1, term scale)`
    pub max_rel_discrepancy: f64,
    pub evaluated: u64,
}

impl OracleCheck {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            max_abs_discrepancy: 0.0,
            max_rel_discrepancy: 0.0,
            evaluated: 0,
        }
    }

    fn add(&mut self, matrix: f64, scalar: f64, scale: f64) {
        let abs = (matrix - scalar).abs();
        self.max_abs_discrepancy = self.max_abs_discrepancy.max(abs);
        self.max_rel_discrepancy = self.max_rel_discrepancy.max(abs / scale.max(1.0));
        self.evaluated += 1;
    }
}

/// Runs every commuting oracle on `samples` pairs drawn from `(seed, index)`.
pub fn run_oracle(
    dim: usize,
    samples: u64,
    seed: u64,
    s_values: &[f64],
    min_eigenvalue: f64,
) -> Result<Vec<OracleCheck>> {
    let cfg = SamplerConfig::new(SamplerKind::CommutingPair, dim, seed).with_min_eigenvalue(min_eigenvalue);
    cfg.validate()?;
    let mut eq3: Vec<OracleCheck> = s_values.iter().map(|s| OracleCheck::new(format!("eq3@s={s}"))).collect();
    let mut op0 = OracleCheck::new("thm2-operator");
    let mut q1 = OracleCheck::new("q1");
    let mut q2 = OracleCheck::new("q2");
    let mut t41 = OracleCheck::new("thm4-1");
    let mut t42 = OracleCheck::new("thm4-2");
    let mut r4 = OracleCheck::new("remark4");
    for index in 0..samples {
        let (u, da, db) = commuting_spectra_from_rng(&mut cfg.rng(index), dim, min_eigenvalue);
        let (a, b) = commuting_pair_in_basis(&u, &da, &db);
        let pair = PreparedPair::new(&a, &b)?;
        for (check, &s) in eq3.iter_mut().zip(s_values) {
            let m = pair.trace_margin(s)?;
            check.add(m.value, commuting_trace_margin(&da, &db, s), m.scale);
        }
        let m = pair.operator_margin_s0()?;
        op0.add(m.value, commuting_operator_s0(&da, &db), m.scale);
        let m = pair.operator_margin_question(Question::Q1)?;
        q1.add(m.value, commuting_question(&da, &db), m.scale);
        let m = pair.operator_margin_question(Question::Q2)?;
        q2.add(m.value, commuting_question(&da, &db), m.scale);
        let t4 = theorem4_margins(a.as_hermitian(), b.as_hermitian())?;
        t41.add(t4.m1.value, commuting_theorem4_m1(&da, &db), t4.m1.scale);
        t42.add(t4.m2.value, commuting_theorem4_m2(&da, &db), t4.m2.scale);
        r4.add(remark4_residual(a.as_hermitian(), b.as_hermitian())?, 0.0, 1.0);
    }
    eq3.extend([op0, q1, q2, t41, t42, r4]);
    Ok(eq3)
}
