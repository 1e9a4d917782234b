#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use traceineq::ensembles::{ginibre, haar_unitary};
use traceineq::matcore::{CMatrix, HermitianMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(seed: u64, dim: usize) -> HermitianMatrix {
    HermitianMatrix::from_hermitian_part(&ginibre(&mut rng(seed), dim)).unwrap()
}

pub fn random_unitary(seed: u64, dim: usize) -> CMatrix {
    haar_unitary(&mut rng(seed ^ 0xABCD), dim)
}

pub fn diag_in_basis(u: &CMatrix, d: &[f64]) -> HermitianMatrix {
    HermitianMatrix::from_real_diagonal(d).conjugate_by(u)
}

pub fn uniform_spectrum(seed: u64, dim: usize, lo: f64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..dim).map(|_| lo + (1.0 - lo) * r.gen::<f64>()).collect()
}

/// Jacobi eigenvalues of the real symmetric 2n×2n embedding of a Hermitian
/// matrix; every eigenvalue appears twice. Independent of the library solver.
pub fn jacobi_eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let n = h.dim();
    let m = h.as_matrix();
    let size = 2 * n;
    let mut a = vec![vec![0.0; size]; size];
    for j in 0..n {
        for k in 0..n {
            let z: C64 = m[(j, k)];
            a[j][k] = z.re;
            a[j + n][k + n] = z.re;
            a[j][k + n] = -z.im;
            a[j + n][k] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..size)
            .flat_map(|p| (0..size).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..size {
            for q in (p + 1)..size {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..size {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..size {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..size).map(|k| a[k][k]).collect();
    ev.sort_by(f64::total_cmp);
    ev.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}

pub fn rel_close(x: f64, y: f64, tol: f64, scale: f64) -> bool {
    (x - y).abs() <= tol * scale.max(1.0)
}
