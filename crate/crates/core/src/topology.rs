//! Interaction weights and the reduced coupling-matrix transforms.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::state::{dist_sq, MixtureState};

/// Relative tolerance used when checking matrix symmetry.
const SYMMETRY_TOL: f64 = 1e-12;

/// Communication weights `a_{αβ}` between particles.
#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    /// Constant symmetric matrix with nonnegative off-diagonal entries.
    /// Diagonal entries are accepted but never used by the dynamics.
    ConstantSymmetric(DMatrix<f64>),
    /// Metric kernel `(1 + |x_β − x_α|²)^{−λ}` with `0 < λ ≤ 1/2`.
    Metric { lambda: f64 },
}

impl Topology {
    pub fn constant(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidTopology(format!(
                "matrix is {}x{}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() < 2 {
            return Err(Error::TooFewParticles(a.nrows()));
        }
        if !a.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("interaction matrix"));
        }
        check_symmetric(&a)?;
        let n = a.nrows();
        for i in 0..n {
            for j in 0..n {
                if i != j && a[(i, j)] < 0.0 {
                    return Err(Error::InvalidTopology(format!(
                        "negative weight a_{}{} = {}",
                        i + 1,
                        j + 1,
                        a[(i, j)]
                    )));
                }
            }
        }
        Ok(Self::ConstantSymmetric(a))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidTopology(format!(
                "row {} has {} entries, expected {}",
                bad + 1,
                rows[bad].len(),
                n
            )));
        }
        Self::constant(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// All off-diagonal weights equal to one, zero diagonal.
    pub fn uniform(n: usize) -> Self {
        Self::ConstantSymmetric(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }))
    }

    pub fn metric(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda <= 0.5 {
            Ok(Self::Metric { lambda })
        } else {
            Err(Error::InvalidTopology(format!(
                "metric exponent must lie in (0, 1/2], got {lambda}"
            )))
        }
    }

    /// True for a constant matrix whose off-diagonal entries are all one.
    pub fn is_uniform(&self) -> bool {
        match self {
            Self::ConstantSymmetric(a) => {
                let n = a.nrows();
                (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 1.0))
            }
            Self::Metric { .. } => false,
        }
    }

    pub fn check_size(&self, n: usize) -> Result<()> {
        match self {
            Self::ConstantSymmetric(a) if a.nrows() != n => Err(Error::Dimension(format!(
                "interaction matrix is {0}x{0} but the state has {n} particles",
                a.nrows()
            ))),
            _ => Ok(()),
        }
    }

    pub fn weight(&self, state: &MixtureState, alpha: usize, beta: usize) -> Result<f64> {
        self.check_size(state.n())?;
        for index in [alpha, beta] {
            if index >= state.n() {
                return Err(Error::IndexOutOfRange { index, n: state.n() });
            }
        }
        Ok(match self {
            Self::ConstantSymmetric(a) => a[(alpha, beta)],
            Self::Metric { lambda } => kernel(*lambda, dist_sq(state.x(alpha), state.x(beta))),
        })
    }

    /// Minimum weight over distinct pairs.
    pub fn min_weight(&self, state: &MixtureState) -> Result<f64> {
        let w = self.weight_matrix(state)?;
        let n = state.n();
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    min = min.min(w[(i, j)]);
                }
            }
        }
        Ok(min)
    }

    /// Row averages `ã_α = (1/n) Σ_{β≠α} a_{αβ}`.
    pub fn row_average(&self, state: &MixtureState) -> Result<Vec<f64>> {
        let w = self.weight_matrix(state)?;
        let n = state.n();
        Ok((0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum::<f64>() / n as f64)
            .collect())
    }

    pub fn weight_matrix(&self, state: &MixtureState) -> Result<DMatrix<f64>> {
        self.check_size(state.n())?;
        let mut w = DMatrix::zeros(state.n(), state.n());
        self.fill_weights(state.d(), state.positions(), &mut w);
        Ok(w)
    }

    /// Writes the weights for positions `x` into `w`; sizes are trusted.
    pub(crate) fn fill_weights(&self, d: usize, x: &[f64], w: &mut DMatrix<f64>) {
        match self {
            Self::ConstantSymmetric(a) => w.copy_from(a),
            Self::Metric { lambda } => {
                let n = w.nrows();
                for i in 0..n {
                    w[(i, i)] = 1.0;
                    for j in i + 1..n {
                        let k = kernel(*lambda, dist_sq(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]));
                        w[(i, j)] = k;
                        w[(j, i)] = k;
                    }
                }
            }
        }
    }
}

fn kernel(lambda: f64, r2: f64) -> f64 {
    (1.0 + r2).powf(-lambda)
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let (p, q) = (a[(i, j)], a[(j, i)]);
            if (p - q).abs() > SYMMETRY_TOL * p.abs().max(q.abs()).max(1.0) {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Reduces a symmetric `n×n` coupling matrix to its `(n−1)×(n−1)` form:
/// `ψ_ij = −φ_ij` off the diagonal and `ψ_ii = Σ_{β≠i} φ_iβ`.
///
/// The same map takes `ζ` to `θ`.
pub fn phi_to_psi(phi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !phi.is_square() || phi.nrows() < 2 {
        return Err(Error::Dimension(format!(
            "expected a square matrix of size at least 2, got {}x{}",
            phi.nrows(),
            phi.ncols()
        )));
    }
    check_symmetric(phi)?;
    let n = phi.nrows();
    Ok(DMatrix::from_fn(n - 1, n - 1, |i, j| {
        if i == j {
            (0..n).filter(|&b| b != i).map(|b| phi[(i, b)]).sum()
        } else {
            -phi[(i, j)]
        }
    }))
}

/// Inverse of [`phi_to_psi`]; the diagonal of the result is arbitrary in
/// the theory and set to `diag_value`.
pub fn psi_to_phi(psi: &DMatrix<f64>, diag_value: f64) -> Result<DMatrix<f64>> {
    if !psi.is_square() || psi.nrows() < 1 {
        return Err(Error::Dimension(format!(
            "expected a non-empty square matrix, got {}x{}",
            psi.nrows(),
            psi.ncols()
        )));
    }
    check_symmetric(psi)?;
    let m = psi.nrows();
    let n = m + 1;
    let last = |i: usize| psi.row(i).sum();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag_value
        } else if i == m {
            last(j)
        } else if j == m {
            last(i)
        } else {
            -psi[(i, j)]
        }
    }))
}

/// The pair `(ψ, θ)` of reduced momentum and energy couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCouplings {
    pub psi: DMatrix<f64>,
    pub theta: DMatrix<f64>,
}

impl ReducedCouplings {
    pub fn from_full(phi: &DMatrix<f64>, zeta: &DMatrix<f64>) -> Result<Self> {
        Ok(Self {
            psi: phi_to_psi(phi)?,
            theta: phi_to_psi(zeta)?,
        })
    }

    pub fn to_full(&self, diag_value: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok((psi_to_phi(&self.psi, diag_value)?, psi_to_phi(&self.theta, diag_value)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn case_b_matrix() -> Topology {
        Topology::from_rows(&[
            vec![0.0, 100.0, 1.0, 1.0],
            vec![100.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 100.0],
            vec![1.0, 1.0, 100.0, 0.0],
        ])
        .unwrap()
    }

    fn line(x: &[f64]) -> MixtureState {
        let n = x.len();
        MixtureState::from_1d(x, &vec![0.0; n], &vec![1.0; n]).unwrap()
    }

    #[test]
    fn metric_weight_values() {
        let top = Topology::metric(0.5).unwrap();
        let s = line(&[0.3, 0.3, 1.3]);
        assert_eq!(top.weight(&s, 0, 1).unwrap(), 1.0);
        assert_relative_eq!(top.weight(&s, 0, 2).unwrap(), 0.5f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn constant_weight_and_minimum() {
        let top = case_b_matrix();
        let s = line(&[0.0; 4]);
        assert_eq!(top.weight(&s, 0, 1).unwrap(), 100.0);
        assert_eq!(top.min_weight(&s).unwrap(), 1.0);
        assert_eq!(Topology::uniform(3).min_weight(&line(&[0.0; 3])).unwrap(), 1.0);
    }

    #[test]
    fn metric_minimum_over_pairs() {
        let top = Topology::metric(0.5).unwrap();
        let m = top.min_weight(&line(&[0.0, 1.0, 3.0])).unwrap();
        assert_relative_eq!(m, 10f64.powf(-0.5), max_relative = 1e-15);
    }

    #[test]
    fn index_and_size_errors() {
        let top = Topology::uniform(3);
        assert!(matches!(
            top.weight(&line(&[0.0; 3]), 0, 3),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));
        assert!(top.weight(&line(&[0.0; 4]), 0, 1).is_err());
    }

    #[test]
    fn invalid_topologies() {
        assert!(matches!(
            Topology::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]),
            Err(Error::NotSymmetric { row: 0, col: 1 })
        ));
        assert!(Topology::from_rows(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(Topology::from_rows(&[vec![0.0, 1.0], vec![1.0]]).is_err());
        assert!(Topology::metric(0.0).is_err());
        assert!(Topology::metric(0.6).is_err());
        assert!(Topology::metric(0.5).is_ok());
    }

    #[test]
    fn reduced_forms_by_hand() {
        let phi = DMatrix::from_row_slice(2, 2, &[0.0, 3.5, 3.5, 0.0]);
        assert_eq!(phi_to_psi(&phi).unwrap(), DMatrix::from_element(1, 1, 3.5));
        let phi3 = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 });
        let psi = phi_to_psi(&phi3).unwrap();
        assert_eq!(psi, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));
        assert_eq!(psi_to_phi(&psi, 0.0).unwrap(), phi3);
        let back = psi_to_phi(&DMatrix::from_element(1, 1, 3.5), 0.0).unwrap();
        assert_eq!(back, phi);
    }

    #[test]
    fn transforms_reject_asymmetry() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(phi_to_psi(&bad).is_err());
        assert!(psi_to_phi(&bad, 0.0).is_err());
    }

    #[test]
    fn couplings_pair_roundtrip() {
        let phi = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0]);
        let zeta = phi.map(|v| 2.0 * v);
        let reduced = ReducedCouplings::from_full(&phi, &zeta).unwrap();
        let (p, z) = reduced.to_full(0.0).unwrap();
        assert_eq!(p, phi);
        assert_eq!(z, zeta);
    }
}
