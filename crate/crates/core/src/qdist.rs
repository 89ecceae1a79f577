//! Distances between quantum states and the constructive tools built on them:
//! the optimal two-outcome discriminating measurement and the local unitary
//! that aligns two purifications.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmatrix::{cr, DensityMatrix, IndexSplit, Operator, Party, StateVector, SubsystemLayout};

fn check_dims(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<()> {
    if r1.dim() != r2.dim() {
        return Err(Error::DimensionMismatch {
            expected: r1.dim(),
            found: r2.dim(),
        });
    }
    Ok(())
}

/// Trace norm of `r1 - r2`, in `[0, 2]`.
pub fn trace_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    check_dims(r1, r2)?;
    let diff = r1.op() - r2.op();
    let t: f64 = diff.eigenvalues().iter().map(|l| l.abs()).sum();
    Ok(t.min(2.0))
}

/// `[Tr sqrt(sqrt(r1) r2 sqrt(r1))]^2`, clamped to `[0, 1]`.
pub fn fidelity(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    check_dims(r1, r2)?;
    let s1 = r1.op().hermitian_sqrt()?;
    let inner = &(&s1 * r2.op()) * &s1;
    let root_fidelity = inner.hermitian_sqrt()?.trace().re;
    Ok((root_fidelity * root_fidelity).clamp(0.0, 1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    pub trace_distance: f64,
    pub fidelity: f64,
}

pub fn distance_report(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<DistanceReport> {
    Ok(DistanceReport {
        trace_distance: trace_distance(r1, r2)?,
        fidelity: fidelity(r1, r2)?,
    })
}

/// Two-outcome projective measurement optimally distinguishing a pair of
/// states. Outcome 0 is at least as likely under the first state.
#[derive(Clone, Debug)]
pub struct HelstromMeasurement {
    pub projector0: Operator,
    pub projector1: Operator,
    /// Variational distance between the two induced outcome distributions.
    pub achieved_distance: f64,
}

impl HelstromMeasurement {
    pub fn projectors(&self) -> [Operator; 2] {
        [self.projector0.clone(), self.projector1.clone()]
    }

    /// Probability of outcome 0 on `rho`.
    pub fn p0(&self, rho: &DensityMatrix) -> f64 {
        (&self.projector0 * rho.op()).trace().re
    }
}

/// Eigenvalues of `r1 - r2` at or above this are assigned to outcome 0.
const TIE_THRESHOLD: f64 = -1e-12;

pub fn helstrom_measurement(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<HelstromMeasurement> {
    check_dims(r1, r2)?;
    let diff = r1.op() - r2.op();
    let (values, vectors) = diff.eigh();
    let ind0: Vec<f64> = values
        .iter()
        .map(|&l| if l >= TIE_THRESHOLD { 1.0 } else { 0.0 })
        .collect();
    let ind1: Vec<f64> = ind0.iter().map(|&x| 1.0 - x).collect();
    let projector0 = Operator::from_spectrum(&ind0, &vectors);
    let projector1 = Operator::from_spectrum(&ind1, &vectors);
    let bias = (&projector0 * &diff).trace().re;
    Ok(HelstromMeasurement {
        projector0,
        projector1,
        achieved_distance: (2.0 * bias).clamp(0.0, 2.0),
    })
}

/// Local unitary on `acting`'s subsystems (ascending index order) that
/// maximizes `|<phi1| (U x I) |phi2>|`, reaching the square root of the
/// fidelity between the two states' reductions to the other party.
///
/// With `A_j` the coefficient matrix of `phi_j` (rows: acting side), the
/// overlap is `Tr(U A_2 A_1^dagger)`; the maximizer is the adjoint of the
/// polar unitary of `A_2 A_1^dagger`. The overlap at the optimum is real and
/// non-negative.
pub fn uhlmann_unitary(
    phi1: &StateVector,
    phi2: &StateVector,
    layout: &SubsystemLayout,
    acting_party: Party,
) -> Result<Operator> {
    layout.check_state(phi1)?;
    layout.check_state(phi2)?;
    let acting = layout.owned_by(acting_party);
    if acting.is_empty() {
        return Err(Error::InvalidLayout(format!(
            "{acting_party} owns no subsystems"
        )));
    }
    let split = IndexSplit::new(layout.dims(), &acting)?;
    let a1 = split.reshape(phi1);
    let a2 = split.reshape(phi2);
    let cross = Operator::from_matrix(&a2 * a1.adjoint())?;
    let (w, _) = cross.polar_unitary();
    Ok(w.adjoint())
}

/// `<phi1| (U x I) |phi2>` with `U` on `acting`'s subsystems.
pub fn aligned_overlap(
    phi1: &StateVector,
    phi2: &StateVector,
    u: &Operator,
    layout: &SubsystemLayout,
    acting_party: Party,
) -> Result<f64> {
    let moved = crate::qmatrix::apply_local(phi2, u, &layout.owned_by(acting_party), layout.dims())?;
    Ok(phi1.inner(&moved).norm())
}

/// Variational definition of fidelity restricted to one pair of purifications.
pub fn purification_overlap_sq(phi1: &StateVector, phi2: &StateVector) -> f64 {
    phi1.inner(phi2).norm_sqr()
}

/// `rho` twirled by a finite unitary set: `(1/n) sum U rho U^dagger`.
pub fn twirl(rho: &DensityMatrix, unitaries: &[Operator]) -> Result<DensityMatrix> {
    let n = unitaries.len() as f64;
    let mut acc = Operator::zeros(rho.dim());
    for u in unitaries {
        if u.dim() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                found: u.dim(),
            });
        }
        acc = &acc + rho.evolve(u).op();
    }
    DensityMatrix::new(acc.scale(cr(1.0 / n)))
}
