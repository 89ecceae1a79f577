#![allow(dead_code)]

use coinflip_lab::qmatrix::{c, DensityMatrix, Operator, StateVector};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> nalgebra::Complex<f64> {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<nalgebra::Complex<f64>> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_pure(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    let v: Vec<_> = (0..dim).map(|_| gaussian(rng)).collect();
    StateVector::new(v).normalized().unwrap()
}

/// Random density matrix of random rank: G G^dagger / Tr.
pub fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let rank = rng.random_range(1..=dim);
    let g = ginibre(rng, dim, rank);
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(Operator::from_matrix(m / tr).unwrap()).unwrap()
}

pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> Operator {
    let g = Operator::from_matrix(ginibre(rng, dim, dim)).unwrap();
    g.polar_unitary().0
}

/// Closed-form qubit fidelity: Tr(r s) + 2 sqrt(det r det s).
pub fn qubit_fidelity(r: &DensityMatrix, s: &DensityMatrix) -> f64 {
    let a = r.op().matrix();
    let b = s.op().matrix();
    let overlap = (a * b).trace().re;
    let det = |m: &DMatrix<nalgebra::Complex<f64>>| (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re.max(0.0);
    overlap + 2.0 * (det(a) * det(b)).sqrt()
}

/// Qubit trace norm of the difference from Bloch vectors: |r - s|.
pub fn qubit_trace_distance(r: &DensityMatrix, s: &DensityMatrix) -> f64 {
    let bloch = |m: &DensityMatrix| {
        let x = m.op().matrix();
        [2.0 * x[(0, 1)].re, -2.0 * x[(0, 1)].im, (x[(0, 0)] - x[(1, 1)]).re]
    };
    let (p, q) = (bloch(r), bloch(s));
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}
