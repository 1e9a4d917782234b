//! The auxiliary function `E(s) = −log Tr[A(s)^{1+s}]` with
//! `A(s) = Σ π_i S_i^{1/(1+s)}`, the trace condition whose nonnegativity makes
//! `E` concave, and finite-difference concavity profiles.

use rayon::prelude::*;

use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use crate::inequalities::Margin;
use crate::matcore::{
    neg_x_log_x, spectral_decompose, trace_of_product, x_log_sq, HermitianMatrix, ScalarFunction,
    SpectralDecomposition, DEFAULT_EIGENVALUE_FLOOR,
};

/// Minimum eigenvalue `A(s)` must reach before inverse powers are taken.
pub const INVERTIBILITY_GATE: f64 = 1e-10;
pub const DEFAULT_STEP: f64 = 1e-2;
pub const DEFAULT_GRID_STEP: f64 = 0.01;

fn check_s(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidInput(format!("s = {s} outside [0, 1]")));
    }
    Ok(())
}

fn state_decompositions(ens: &Ensemble) -> Result<Vec<SpectralDecomposition>> {
    ens.states()
        .iter()
        .map(|st| {
            let d = spectral_decompose(st.as_hermitian())?;
            // fractional powers need a nonnegative spectrum
            if let Some(&bad) = d.eigenvalues.iter().find(|&&l| l < -DEFAULT_EIGENVALUE_FLOOR) {
                return Err(Error::NegativeSpectrum {
                    eigenvalue: bad,
                    floor: DEFAULT_EIGENVALUE_FLOOR,
                });
            }
            Ok(d)
        })
        .collect()
}

fn weighted_sum(ens: &Ensemble, terms: impl Iterator<Item = HermitianMatrix>) -> HermitianMatrix {
    let mut acc = HermitianMatrix::zeros(ens.dim());
    for (p, t) in ens.pi().iter().zip(terms) {
        acc = acc.add(&t.scale(*p)).expect("ensemble states share a dimension");
    }
    acc
}

fn pow_clipped(lambda: f64, p: f64) -> f64 {
    ScalarFunction::Pow(p).eval(lambda, DEFAULT_EIGENVALUE_FLOOR)
}

/// `A(s) = Σ π_i S_i^{1/(1+s)}`.
pub fn mixture_power(ens: &Ensemble, s: f64) -> Result<HermitianMatrix> {
    check_s(s)?;
    let p = 1.0 / (1.0 + s);
    let decs = state_decompositions(ens)?;
    Ok(weighted_sum(
        ens,
        decs.iter().map(|d| d.map_eigenvalues(|l| pow_clipped(l, p))),
    ))
}

/// `E(s) = −log Tr[A(s)^{1+s}]`.
pub fn auxiliary_e(ens: &Ensemble, s: f64) -> Result<f64> {
    let a = mixture_power(ens, s)?;
    let d = spectral_decompose(&a)?;
    let mut total = 0.0;
    for &l in &d.eigenvalues {
        if l < -DEFAULT_EIGENVALUE_FLOOR {
            return Err(Error::NegativeSpectrum {
                eigenvalue: l,
                floor: DEFAULT_EIGENVALUE_FLOOR,
            });
        }
        total += pow_clipped(l, 1.0 + s);
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::NonpositiveTrace(total));
    }
    Ok(-total.ln())
}

/// `Tr[A(s)^s Σπ_j X_j − A(s)^{s−1} (Σπ_j H(S_j^{1/(1+s)}))²]` with
/// `X_j = T_j (log T_j)²`, `T_j = S_j^{1/(1+s)}`.
pub fn sufficient_condition_margin(ens: &Ensemble, s: f64) -> Result<Margin> {
    check_s(s)?;
    let p = 1.0 / (1.0 + s);
    let decs = state_decompositions(ens)?;

    let mixture = weighted_sum(ens, decs.iter().map(|d| d.map_eigenvalues(|l| pow_clipped(l, p))));
    let x_sum = weighted_sum(
        ens,
        decs.iter().map(|d| d.map_eigenvalues(|l| x_log_sq(pow_clipped(l, p)))),
    );
    let h_sum = weighted_sum(
        ens,
        decs.iter().map(|d| d.map_eigenvalues(|l| neg_x_log_x(pow_clipped(l, p)))),
    );

    let md = spectral_decompose(&mixture)?;
    if md.min_eigenvalue() < INVERTIBILITY_GATE {
        return Err(Error::SingularMixture(md.min_eigenvalue()));
    }
    let a_pow_s = md.apply(ScalarFunction::Pow(s), DEFAULT_EIGENVALUE_FLOOR)?;
    let a_pow_s_minus_1 = md.apply(ScalarFunction::Pow(s - 1.0), DEFAULT_EIGENVALUE_FLOOR)?;

    let first = trace_of_product(a_pow_s.as_matrix(), x_sum.as_matrix());
    let second = trace_of_product(a_pow_s_minus_1.as_matrix(), h_sum.square().as_matrix());
    Ok(Margin::from_terms(first, second))
}

/// Finite-difference stencil used at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stencil {
    /// `(E(s+h) − 2E(s) + E(s−h)) / h²`
    Central(f64),
    /// `(E(s) − 2E(s+h) + E(s+2h)) / h²`, left edge.
    Forward(f64),
    /// `(E(s) − 2E(s−h) + E(s−2h)) / h²`, right edge.
    Backward(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryProfile {
    pub s_grid: Vec<f64>,
    pub e_values: Vec<f64>,
    pub second_differences: Vec<f64>,
    pub stencils: Vec<Stencil>,
    pub h: f64,
}

impl AuxiliaryProfile {
    pub fn max_second_difference(&self) -> f64 {
        self.second_differences
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every second difference is `≤ tol`.
    pub fn is_concave(&self, tol: f64) -> bool {
        self.second_differences.iter().all(|&d| d <= tol)
    }
}

/// `0, step, 2·step, …`, always ending at 1.
pub fn uniform_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidInput(format!("grid step {step} outside (0, 1]")));
    }
    let n = (1.0 / step).round() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(1.0)).collect();
    grid.dedup();
    if *grid.last().unwrap() < 1.0 - 1e-12 {
        grid.push(1.0);
    } else {
        *grid.last_mut().unwrap() = 1.0;
    }
    Ok(grid)
}

fn stencil_for(s: f64, h: f64) -> Stencil {
    let room = s.min(1.0 - s);
    if room >= h {
        Stencil::Central(h)
    } else if room >= 0.25 * h {
        Stencil::Central(room)
    } else if s < 0.5 {
        Stencil::Forward(h)
    } else {
        Stencil::Backward(h)
    }
}

fn second_difference(ens: &Ensemble, s: f64, e_s: f64, stencil: Stencil) -> Result<f64> {
    let e = |x: f64| auxiliary_e(ens, x.clamp(0.0, 1.0));
    Ok(match stencil {
        Stencil::Central(h) => (e(s + h)? - 2.0 * e_s + e(s - h)?) / (h * h),
        Stencil::Forward(h) => (e_s - 2.0 * e(s + h)? + e(s + 2.0 * h)?) / (h * h),
        Stencil::Backward(h) => (e_s - 2.0 * e(s - h)? + e(s - 2.0 * h)?) / (h * h),
    })
}

pub fn concavity_profile(ens: &Ensemble, s_grid: &[f64], h: f64) -> Result<AuxiliaryProfile> {
    if !(h > 0.0 && 2.0 * h <= 1.0) {
        return Err(Error::InvalidInput(format!("step h = {h} outside (0, 1/2]")));
    }
    if s_grid.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::InvalidInput("grid leaves [0, 1]".into()));
    }
    if s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("grid is not strictly increasing".into()));
    }
    let points = s_grid
        .par_iter()
        .map(|&s| {
            let stencil = stencil_for(s, h);
            let e_s = auxiliary_e(ens, s)?;
            Ok((e_s, second_difference(ens, s, e_s, stencil)?, stencil))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AuxiliaryProfile {
        s_grid: s_grid.to_vec(),
        e_values: points.iter().map(|p| p.0).collect(),
        second_differences: points.iter().map(|p| p.1).collect(),
        stencils: points.iter().map(|p| p.2).collect(),
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::DensityMatrix;

    fn orthogonal_pair() -> Ensemble {
        Ensemble::uniform(vec![
            DensityMatrix::pure_basis_state(2, 0),
            DensityMatrix::pure_basis_state(2, 1),
        ])
        .unwrap()
    }

    #[test]
    fn mixture_of_orthogonal_projectors() {
        let ens = orthogonal_pair();
        for s in [0.0, 0.3, 1.0] {
            let a = mixture_power(&ens, s).unwrap();
            let diff = a.sub(&HermitianMatrix::from_real_diagonal(&[0.5, 0.5])).unwrap();
            assert!(diff.frobenius_norm() < 1e-15);
        }
    }

    #[test]
    fn single_state_at_zero() {
        let s = DensityMatrix::new(
            HermitianMatrix::from_real_rows(&[vec![0.7, 0.2], vec![0.2, 0.3]]).unwrap(),
        )
        .unwrap();
        let ens = Ensemble::new(vec![1.0], vec![s.clone()]).unwrap();
        let a = mixture_power(&ens, 0.0).unwrap();
        assert!(a.sub(s.as_hermitian()).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn orthogonal_pair_closed_form() {
        let ens = orthogonal_pair();
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            let e = auxiliary_e(&ens, s).unwrap();
            assert!((e - s * 2f64.ln()).abs() < 1e-12, "s={s} e={e}");
            let m = sufficient_condition_margin(&ens, s).unwrap();
            assert!(m.value.abs() < 1e-12);
        }
    }

    #[test]
    fn s_out_of_range() {
        assert!(auxiliary_e(&orthogonal_pair(), 1.5).is_err());
        assert!(sufficient_condition_margin(&orthogonal_pair(), -0.1).is_err());
    }

    #[test]
    fn singular_mixture_is_reported() {
        let ens = Ensemble::uniform(vec![
            DensityMatrix::pure_basis_state(3, 0),
            DensityMatrix::pure_basis_state(3, 1),
        ])
        .unwrap();
        assert!(matches!(
            sufficient_condition_margin(&ens, 0.5),
            Err(Error::SingularMixture(_))
        ));
    }

    #[test]
    fn grid_and_stencils() {
        let g = uniform_grid(0.01).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
        assert_eq!(stencil_for(0.0, 0.01), Stencil::Forward(0.01));
        assert_eq!(stencil_for(1.0, 0.01), Stencil::Backward(0.01));
        assert_eq!(stencil_for(0.5, 0.01), Stencil::Central(0.01));
        assert!(matches!(stencil_for(0.005, 0.01), Stencil::Central(h) if (h - 0.005).abs() < 1e-15));
        assert!(uniform_grid(0.0).is_err());
    }

    #[test]
    fn profile_of_linear_e() {
        let p = concavity_profile(&orthogonal_pair(), &uniform_grid(0.05).unwrap(), 1e-2).unwrap();
        for d in &p.second_differences {
            assert!(d.abs() < 1e-6);
        }
        assert!(concavity_profile(&orthogonal_pair(), &[0.5, 0.4], 1e-2).is_err());
    }
}
