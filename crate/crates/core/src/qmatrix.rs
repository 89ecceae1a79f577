//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is sized for protocol registers of a few hundred basis
//! states at most: dense storage, no sparsity, eigen/SVD delegated to
//! `nalgebra`. Multi-register indices are row-major, subsystem 0 being the
//! most significant digit.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Default tolerance for structural predicates.
pub const TOL: f64 = 1e-9;

/// Relative size below which an eigenvalue is indistinguishable from zero.
const ROUNDOFF_FLOOR: f64 = 1e-13;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        Ok(Operator(m))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Operator(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Operator::from_fn(n, |i, j| if i == j { cr(values[i]) } else { cr(0.0) })
    }

    /// `|v><v|`
    pub fn outer(v: &StateVector) -> Self {
        let a = v.as_vector();
        Operator(a * a.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Operator(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Operator(&self.0 * s)
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Operator(self.0.kronecker(&other.0))
    }

    /// `U A U^dagger`
    pub fn conjugate_by(&self, u: &Operator) -> Self {
        Operator(&u.0 * &self.0 * u.0.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "operator dimensions differ");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = Operator(self.0.adjoint() * &self.0);
        prod.max_abs_diff(&Operator::identity(self.dim())) <= tol
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.eigh().0.first().is_none_or(|&l| l >= -tol)
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && (self * self).max_abs_diff(self) <= tol
    }

    /// Hermitian eigendecomposition with eigenvalues ascending; column `i` of
    /// the returned matrix is the eigenvector for eigenvalue `i`. The input is
    /// symmetrized first so round-off in the anti-Hermitian part is discarded.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        let sym = (&self.0 + self.0.adjoint()) * cr(0.5);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, k| {
            eig.eigenvectors[(r, order[k])]
        });
        (values, vectors)
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().0
    }

    /// Positive square root of a Hermitian PSD operator. Eigenvalues in
    /// `[-TOL, 0)` are treated as zero, and so are positive ones at the
    /// round-off level of the eigensolver, whose roots would otherwise be
    /// noise of order 1e-8.
    pub fn hermitian_sqrt(&self) -> Result<Operator> {
        let dev = self.hermitian_deviation();
        if dev > TOL {
            return Err(Error::NotHermitian(dev));
        }
        let (values, vectors) = self.eigh();
        if let Some(&min) = values.first() {
            if min < -TOL {
                return Err(Error::NegativeEigenvalue(min));
            }
        }
        let scale = values.iter().fold(1.0f64, |m, l| m.max(l.abs()));
        let floor = ROUNDOFF_FLOOR * scale;
        let roots: Vec<f64> = values
            .iter()
            .map(|&l| if l <= floor { 0.0 } else { l.sqrt() })
            .collect();
        Ok(Self::from_spectrum(&roots, &vectors))
    }

    /// `V diag(values) V^dagger`
    pub fn from_spectrum(values: &[f64], vectors: &DMatrix<C64>) -> Operator {
        let d = DMatrix::from_fn(values.len(), values.len(), |i, j| {
            if i == j {
                cr(values[i])
            } else {
                cr(0.0)
            }
        });
        Operator(vectors * d * vectors.adjoint())
    }

    /// Unitary factor `W` of the polar decomposition `M = W |M|`, plus the
    /// singular values of `M`.
    pub fn polar_unitary(&self) -> (Operator, Vec<f64>) {
        let svd = SVD::new(self.0.clone(), true, true);
        let u = svd.u.expect("SVD requested U");
        let v_t = svd.v_t.expect("SVD requested V^dagger");
        (Operator(u * v_t), svd.singular_values.iter().copied().collect())
    }

    /// Sum of singular values.
    pub fn trace_norm(&self) -> f64 {
        SVD::new(self.0.clone(), false, false)
            .singular_values
            .iter()
            .sum()
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Mul<&StateVector> for &Operator {
    type Output = StateVector;
    fn mul(self, rhs: &StateVector) -> StateVector {
        StateVector(&self.0 * &rhs.0)
    }
}

/// Column vector of amplitudes. Not necessarily normalized: branch states
/// carry their norm.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        assert!(!amplitudes.is_empty(), "state vector must be non-empty");
        StateVector(DVector::from_vec(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        Self::new(amplitudes.iter().map(|&a| cr(a)).collect())
    }

    pub fn from_vector(v: DVector<C64>) -> Self {
        StateVector(v)
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut v = DVector::zeros(dim);
        v[index] = cr(1.0);
        StateVector(v)
    }

    pub fn zeros(dim: usize) -> Self {
        StateVector(DVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::ZeroNorm);
        }
        Ok(StateVector(&self.0 / cr(n)))
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn kron(&self, other: &StateVector) -> StateVector {
        StateVector(self.0.kronecker(&other.0))
    }

    pub fn scale(&self, s: C64) -> StateVector {
        StateVector(&self.0 * s)
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        StateVector(&self.0 + &rhs.0)
    }
}

impl Sub for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        StateVector(&self.0 - &rhs.0)
    }
}

/// Rows of `[re, im]` pairs.
impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.0[(i, j)].re, self.0[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }
}

/// Hermitian, PSD, unit-trace operator.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        let dev = op.hermitian_deviation();
        if dev > TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian ({dev:e})")));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = op.eigenvalues()[0];
        if min < -TOL {
            return Err(Error::InvalidDensity(format!("eigenvalue {min:e}")));
        }
        Ok(DensityMatrix(op))
    }

    pub fn from_pure(v: &StateVector) -> Result<Self> {
        if !v.is_normalized(TOL) {
            return Err(Error::InvalidDensity(format!(
                "pure state has squared norm {}",
                v.norm_sqr()
            )));
        }
        Ok(DensityMatrix(Operator::outer(v)))
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        Self::new(Operator::diag(values))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(Operator::identity(dim).scale(cr(1.0 / dim as f64)))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn into_op(self) -> Operator {
        self.0
    }

    /// `U rho U^dagger`; `u` must be unitary.
    pub fn evolve(&self, u: &Operator) -> DensityMatrix {
        DensityMatrix(self.0.conjugate_by(u))
    }
}

/// Ordered subsystem dimensions with a current owner per subsystem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemLayout {
    dims: Vec<usize>,
    owners: Vec<Party>,
}

impl SubsystemLayout {
    pub fn new(dims: Vec<usize>, owners: Vec<Party>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidLayout("no subsystems".into()));
        }
        if dims.len() != owners.len() {
            return Err(Error::InvalidLayout(format!(
                "{} dims but {} owners",
                dims.len(),
                owners.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidLayout("zero-dimensional subsystem".into()));
        }
        Ok(SubsystemLayout { dims, owners })
    }

    /// Two subsystems: `alice_dim` owned by Alice first, then `bob_dim`.
    pub fn bipartite(alice_dim: usize, bob_dim: usize) -> Self {
        SubsystemLayout {
            dims: vec![alice_dim, bob_dim],
            owners: vec![Party::Alice, Party::Bob],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn owners(&self) -> &[Party] {
        &self.owners
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn owned_by(&self, party: Party) -> Vec<usize> {
        (0..self.dims.len())
            .filter(|&i| self.owners[i] == party)
            .collect()
    }

    pub fn party_dim(&self, party: Party) -> usize {
        self.owned_by(party).iter().map(|&i| self.dims[i]).product()
    }

    pub fn dim_of(&self, subsystems: &[usize]) -> usize {
        subsystems.iter().map(|&i| self.dims[i]).product()
    }

    pub fn with_owner(&self, subsystem: usize, owner: Party) -> SubsystemLayout {
        let mut out = self.clone();
        out.owners[subsystem] = owner;
        out
    }

    pub fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.dim() != self.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim(),
                found: state.dim(),
            });
        }
        Ok(())
    }
}

/// For every full basis index: its index within `targets` (taken in the given
/// order) and its index within the remaining subsystems (ascending).
pub(crate) struct IndexSplit {
    pub target_dim: usize,
    pub rest_dim: usize,
    pub target_idx: Vec<usize>,
    pub rest_idx: Vec<usize>,
}

impl IndexSplit {
    pub fn new(dims: &[usize], targets: &[usize]) -> Result<Self> {
        let mut seen = vec![false; dims.len()];
        for &t in targets {
            if t >= dims.len() || seen[t] {
                return Err(Error::InvalidLayout(format!(
                    "bad target subsystem list {targets:?}"
                )));
            }
            seen[t] = true;
        }
        let rest: Vec<usize> = (0..dims.len()).filter(|&i| !seen[i]).collect();
        let total: usize = dims.iter().product();
        let target_dim = targets.iter().map(|&i| dims[i]).product();
        let rest_dim = rest.iter().map(|&i| dims[i]).product();
        let mut target_idx = Vec::with_capacity(total);
        let mut rest_idx = Vec::with_capacity(total);
        let mut digits = vec![0usize; dims.len()];
        for full in 0..total {
            let mut r = full;
            for s in (0..dims.len()).rev() {
                digits[s] = r % dims[s];
                r /= dims[s];
            }
            target_idx.push(targets.iter().fold(0, |acc, &s| acc * dims[s] + digits[s]));
            rest_idx.push(rest.iter().fold(0, |acc, &s| acc * dims[s] + digits[s]));
        }
        Ok(IndexSplit {
            target_dim,
            rest_dim,
            target_idx,
            rest_idx,
        })
    }

    /// Amplitudes reshaped as a `target_dim x rest_dim` matrix.
    pub fn reshape(&self, state: &StateVector) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.target_dim, self.rest_dim);
        for (full, a) in state.amplitudes().iter().enumerate() {
            m[(self.target_idx[full], self.rest_idx[full])] = *a;
        }
        m
    }

    pub fn unreshape(&self, m: &DMatrix<C64>) -> StateVector {
        let amps = (0..self.target_idx.len())
            .map(|full| m[(self.target_idx[full], self.rest_idx[full])])
            .collect();
        StateVector::new(amps)
    }
}

/// Apply `local` to the listed subsystems of `state`, identity elsewhere.
pub fn apply_local(
    state: &StateVector,
    local: &Operator,
    targets: &[usize],
    dims: &[usize],
) -> Result<StateVector> {
    let split = IndexSplit::new(dims, targets)?;
    if state.dim() != split.target_idx.len() {
        return Err(Error::DimensionMismatch {
            expected: split.target_idx.len(),
            found: state.dim(),
        });
    }
    if local.dim() != split.target_dim {
        return Err(Error::DimensionMismatch {
            expected: split.target_dim,
            found: local.dim(),
        });
    }
    let m = split.reshape(state);
    Ok(split.unreshape(&(local.matrix() * m)))
}

/// Full-space operator acting as `local` on `targets` and identity elsewhere.
pub fn embed(local: &Operator, targets: &[usize], dims: &[usize]) -> Result<Operator> {
    let split = IndexSplit::new(dims, targets)?;
    if local.dim() != split.target_dim {
        return Err(Error::DimensionMismatch {
            expected: split.target_dim,
            found: local.dim(),
        });
    }
    let n = split.target_idx.len();
    Ok(Operator::from_fn(n, |i, j| {
        if split.rest_idx[i] == split.rest_idx[j] {
            local.get(split.target_idx[i], split.target_idx[j])
        } else {
            cr(0.0)
        }
    }))
}

/// Unnormalized reduced operator `Tr_rest |psi><psi|` on `keep`.
pub fn reduce_pure(state: &StateVector, dims: &[usize], keep: &[usize]) -> Result<Operator> {
    let split = IndexSplit::new(dims, keep)?;
    if state.dim() != split.target_idx.len() {
        return Err(Error::DimensionMismatch {
            expected: split.target_idx.len(),
            found: state.dim(),
        });
    }
    let m = split.reshape(state);
    Operator::from_matrix(&m * m.adjoint())
}

/// Reduced density matrix of a normalized pure state on the `keep` subsystems.
pub fn reduced_state(state: &StateVector, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    DensityMatrix::new(reduce_pure(state, dims, keep)?)
}

/// Reduced density matrix of a mixed state on the `keep` subsystems.
pub fn reduced_density(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let split = IndexSplit::new(dims, keep)?;
    let n = split.target_idx.len();
    if rho.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho.dim(),
        });
    }
    let mut out = DMatrix::zeros(split.target_dim, split.target_dim);
    for i in 0..n {
        for j in 0..n {
            if split.rest_idx[i] == split.rest_idx[j] {
                out[(split.target_idx[i], split.target_idx[j])] += rho.op().get(i, j);
            }
        }
    }
    DensityMatrix::new(Operator::from_matrix(out)?)
}

/// Trace out everything not owned by `keep`.
pub fn partial_trace(
    state: &StateVector,
    layout: &SubsystemLayout,
    keep: Party,
) -> Result<DensityMatrix> {
    layout.check_state(state)?;
    reduced_state(state, layout.dims(), &layout.owned_by(keep))
}

/// Mixed-state counterpart of [`partial_trace`].
pub fn partial_trace_density(
    rho: &DensityMatrix,
    layout: &SubsystemLayout,
    keep: Party,
) -> Result<DensityMatrix> {
    reduced_density(rho, layout.dims(), &layout.owned_by(keep))
}

/// Checks that `projectors` are Hermitian, idempotent, pairwise orthogonal and
/// sum to the identity on a space of dimension `dim`.
pub fn validate_projectors(projectors: &[Operator], dim: usize) -> Result<()> {
    if projectors.is_empty() {
        return Err(Error::InvalidProjectors("empty set".into()));
    }
    let mut sum = Operator::zeros(dim);
    for (i, p) in projectors.iter().enumerate() {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        if !p.is_projector(TOL) {
            return Err(Error::InvalidProjectors(format!("element {i} is not a projector")));
        }
        for (j, q) in projectors.iter().enumerate().skip(i + 1) {
            if (p * q).max_abs_diff(&Operator::zeros(dim)) > TOL {
                return Err(Error::InvalidProjectors(format!(
                    "elements {i} and {j} are not orthogonal"
                )));
            }
        }
        sum = &sum + p;
    }
    if sum.max_abs_diff(&Operator::identity(dim)) > TOL {
        return Err(Error::InvalidProjectors("does not sum to identity".into()));
    }
    Ok(())
}

/// Result of a projective measurement.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub outcome: usize,
    pub post_state: StateVector,
    pub probability: f64,
}

/// Outcome probabilities `||P_i psi||^2`.
pub fn outcome_probabilities(state: &StateVector, projectors: &[Operator]) -> Vec<f64> {
    projectors.iter().map(|p| (p * state).norm_sqr()).collect()
}

/// Draw an index from a discrete distribution. Any mass lost to round-off
/// goes to the last non-zero entry.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

pub fn measure_projective_with<R: Rng + ?Sized>(
    state: &StateVector,
    projectors: &[Operator],
    rng: &mut R,
) -> Result<Measurement> {
    validate_projectors(projectors, state.dim())?;
    let probs = outcome_probabilities(state, projectors);
    let outcome = sample_index(&probs, rng);
    let post = (&projectors[outcome] * state).normalized()?;
    Ok(Measurement {
        outcome,
        post_state: post,
        probability: probs[outcome],
    })
}

/// Projective measurement with a deterministic seed.
pub fn measure_projective(
    state: &StateVector,
    projectors: &[Operator],
    rng_seed: u64,
) -> Result<Measurement> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    measure_projective_with(state, projectors, &mut rng)
}

/// Unitary whose first column is the unit vector `first`, completed by
/// Gram-Schmidt against the standard basis.
pub fn unitary_with_first_column(first: &StateVector) -> Result<Operator> {
    let n = first.dim();
    let mut cols: Vec<DVector<C64>> = vec![first.normalized()?.as_vector().clone()];
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = StateVector::basis(n, k).as_vector().clone();
        for q in &cols {
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / cr(norm));
        }
    }
    Ok(Operator(DMatrix::from_columns(&cols)))
}

/// Common single-qubit and two-qubit gates.
pub mod gates {
    use super::*;

    pub fn x() -> Operator {
        Operator::from_fn(2, |i, j| if i != j { cr(1.0) } else { cr(0.0) })
    }

    pub fn y() -> Operator {
        Operator::from_rows(&[vec![cr(0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), cr(0.0)]])
            .expect("2x2")
    }

    pub fn z() -> Operator {
        Operator::diag(&[1.0, -1.0])
    }

    pub fn h() -> Operator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Operator::from_fn(2, |i, j| if i == 1 && j == 1 { cr(-s) } else { cr(s) })
    }

    pub fn s() -> Operator {
        Operator::from_fn(2, |i, j| match (i, j) {
            (0, 0) => cr(1.0),
            (1, 1) => c(0.0, 1.0),
            _ => cr(0.0),
        })
    }

    pub fn t() -> Operator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Operator::from_fn(2, |i, j| match (i, j) {
            (0, 0) => cr(1.0),
            (1, 1) => c(s, s),
            _ => cr(0.0),
        })
    }

    /// Control is the first qubit.
    pub fn cnot() -> Operator {
        let perm = [0, 1, 3, 2];
        Operator::from_fn(4, |i, j| if perm[j] == i { cr(1.0) } else { cr(0.0) })
    }

    pub fn cz() -> Operator {
        Operator::diag(&[1.0, 1.0, 1.0, -1.0])
    }

    pub fn swap() -> Operator {
        let perm = [0, 2, 1, 3];
        Operator::from_fn(4, |i, j| if perm[j] == i { cr(1.0) } else { cr(0.0) })
    }

    pub fn plus() -> StateVector {
        StateVector::from_real(&[std::f64::consts::FRAC_1_SQRT_2; 2])
    }

    pub fn minus() -> StateVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_real(&[s, -s])
    }
}
