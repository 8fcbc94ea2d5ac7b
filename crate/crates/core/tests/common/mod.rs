//! Numerical influence functions: derivatives of the FPCA functionals under a
//! point-mass perturbation of the population measure.
//!
//! The functionals are re-implemented here from scratch (weighted moments and a
//! cyclic Jacobi eigensolver) so the comparison does not share code with the
//! library.

#![allow(dead_code)]

use svyfpca::estimators::population_fpca;
use svyfpca::linearize::{linearized, linearized_gamma_unit, Target};
use svyfpca::{Curve, CurveSet, Grid};

pub const H: f64 = 1e-6;
pub const TOL: f64 = 1e-4;

/// Eigenvalues (descending) and unit eigenvectors of a symmetric matrix.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (rp, rq) = (a[p].clone(), a[q].clone());
                for (k, (apk, aqk)) in rp.into_iter().zip(rq).enumerate() {
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (values, vectors)
}

/// Mean, covariance matrix, eigenvalues and L²-normalized eigenfunctions of
/// the measure putting mass `mass[k]` on curve `k`, on a uniform grid.
pub struct Functionals {
    pub mu: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub v: Vec<Vec<f64>>,
}

pub fn functionals(y: &[Vec<f64>], mass: &[f64]) -> Functionals {
    let m = y[0].len();
    let total: f64 = mass.iter().sum();
    let mu: Vec<f64> = (0..m).map(|l| y.iter().zip(mass).map(|(c, w)| w * c[l]).sum::<f64>() / total).collect();
    let gamma: Vec<Vec<f64>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| y.iter().zip(mass).map(|(c, w)| w * (c[a] - mu[a]) * (c[b] - mu[b])).sum::<f64>() / total)
                .collect()
        })
        .collect();
    let w = 1.0 / m as f64;
    let scaled: Vec<Vec<f64>> = gamma.iter().map(|r| r.iter().map(|x| x * w).collect()).collect();
    let (lambda, z) = jacobi_eigen(&scaled);
    let v = z.iter().map(|zi| zi.iter().map(|x| x / w.sqrt()).collect()).collect();
    Functionals { mu, gamma, lambda, v }
}

pub fn perturbed(y: &[Vec<f64>], k: usize) -> Functionals {
    let mut mass = vec![1.0; y.len()];
    mass[k] += H;
    functionals(y, &mass)
}

pub fn aligned(v: &[f64], reference: &[f64]) -> Vec<f64> {
    let d: f64 = v.iter().zip(reference).map(|(a, b)| a * b).sum();
    v.iter().map(|x| if d < 0.0 { -x } else { *x }).collect()
}

pub fn forward(after: &[f64], before: &[f64]) -> Vec<f64> {
    after.iter().zip(before).map(|(a, b)| (a - b) / H).collect()
}

/// Largest discrepancy over all units, relative to the largest numerical
/// derivative over all units.
pub fn relative_error(analytic: &[Vec<f64>], numeric: &[Vec<f64>]) -> f64 {
    let scale = numeric.iter().flatten().fold(0.0_f64, |a, x| a.max(x.abs()));
    let diff = analytic
        .iter()
        .flatten()
        .zip(numeric.iter().flatten())
        .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
    diff / scale.max(1e-300)
}

pub fn population(y: &[Vec<f64>]) -> CurveSet {
    let grid = Grid::uniform(y[0].len()).unwrap();
    CurveSet::new(grid, y.iter().cloned().map(Curve).collect()).unwrap()
}

pub fn toy5() -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 2.5, -0.3, 0.7],
        vec![-1.2, 0.4, 1.9, 0.1],
        vec![0.3, -2.0, 0.8, 1.6],
        vec![2.2, 0.9, -1.4, -0.5],
        vec![-0.6, 1.1, 0.2, -2.3],
    ]
}

pub fn compare(y: &[Vec<f64>], target: Target, r: usize) -> f64 {
    let pop = population(y);
    let model = population_fpca(&pop, y[0].len()).unwrap();
    let base = functionals(y, &vec![1.0; y.len()]);
    let set = linearized(&pop, &model, target, r).unwrap();
    let analytic: Vec<Vec<f64>> = set.rows().iter().map(|r| r.to_vec()).collect();
    let mut numeric = Vec::new();
    for k in 0..y.len() {
        let p = perturbed(y, k);
        let d = match target {
            Target::Mu => forward(&p.mu, &base.mu),
            Target::Lambda(j) => vec![(p.lambda[j] - base.lambda[j]) / H],
            Target::Eigenfunction(j) => {
                let reference = model.eigenfunctions[j].values();
                forward(&aligned(&p.v[j], reference), &aligned(&base.v[j], reference))
            }
        };
        numeric.push(d);
    }
    relative_error(&analytic, &numeric)
}


/// Same comparison for the covariance operator, entry by entry.
pub fn compare_gamma(y: &[Vec<f64>]) -> f64 {
    let m = y[0].len();
    let pop = population(y);
    let model = population_fpca(&pop, m).unwrap();
    let base = functionals(y, &vec![1.0; y.len()]);
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for k in 0..y.len() {
        analytic.push(linearized_gamma_unit(&pop, &model, k).unwrap().matrix().iter().copied().collect::<Vec<f64>>());
        let p = perturbed(y, k);
        let flat = |g: &[Vec<f64>]| -> Vec<f64> { (0..m).flat_map(|b| (0..m).map(move |a| (a, b))).map(|(a, b)| g[a][b]).collect() };
        numeric.push(forward(&flat(&p.gamma), &flat(&base.gamma)));
    }
    relative_error(&analytic, &numeric)
}
