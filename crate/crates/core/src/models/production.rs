//! Production terms of a general inert mixture in the spatially homogeneous
//! setting, with masses `m_α`, densities `ρ_α` and Boltzmann constant `k_B`.

use nalgebra::DMatrix;

use super::StateDerivative;
use crate::error::{Error, Result};
use crate::state::{dot, MixtureState, ReferenceTemperature, TEMPERATURE_FLOOR};

/// Mixture constants and coupling matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub m: Vec<f64>,
    pub rho: Vec<f64>,
    pub kb: f64,
    /// Phenomenological momentum couplings `φ_{αβ}`.
    pub phi: DMatrix<f64>,
    /// Phenomenological energy couplings `ζ_{αβ}`.
    pub zeta: DMatrix<f64>,
    /// Kinetic interaction coefficients `χ_{αβ}`.
    pub chi: DMatrix<f64>,
    pub t0: ReferenceTemperature,
}

impl MixtureParams {
    pub fn new(
        m: Vec<f64>,
        rho: Vec<f64>,
        kb: f64,
        phi: DMatrix<f64>,
        zeta: DMatrix<f64>,
        chi: DMatrix<f64>,
        t0: ReferenceTemperature,
    ) -> Result<Self> {
        let n = m.len();
        if n < 2 {
            return Err(Error::TooFewParticles(n));
        }
        if rho.len() != n {
            return Err(Error::Dimension(format!("{} densities for {} masses", rho.len(), n)));
        }
        if !m.iter().chain(&rho).chain(std::iter::once(&kb)).all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidParameter("masses, densities and k_B must be positive".into()));
        }
        for (name, mat, strict) in [("phi", &phi, false), ("zeta", &zeta, false), ("chi", &chi, true)] {
            if mat.nrows() != n || mat.ncols() != n {
                return Err(Error::Dimension(format!("{name} must be {n}x{n}")));
            }
            for i in 0..n {
                for j in 0..n {
                    let v = mat[(i, j)];
                    if (v - mat[(j, i)]).abs() > 1e-12 * v.abs().max(1.0) {
                        return Err(Error::NotSymmetric { row: i, col: j });
                    }
                    let ok = if strict { v > 0.0 } else { v >= 0.0 };
                    if i != j && !(ok && v.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "{name}_{}{} = {v} is out of range",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        Ok(Self {
            m,
            rho,
            kb,
            phi,
            zeta,
            chi,
            t0,
        })
    }

    /// Parameters whose two production operators agree to first order
    /// around equilibrium at `t0`:
    /// `φ = 2nT0ρρχ/(m+m)`, `ζ = 6nk_B T0²ρρχ/(m+m)²`.
    pub fn linearized(
        m: Vec<f64>,
        rho: Vec<f64>,
        kb: f64,
        chi: DMatrix<f64>,
        t0: ReferenceTemperature,
    ) -> Result<Self> {
        let n = m.len();
        if rho.len() != n || chi.nrows() != n || chi.ncols() != n {
            return Err(Error::Dimension("m, rho and chi sizes differ".into()));
        }
        let (nf, t) = (n as f64, t0.value());
        let phi = DMatrix::from_fn(n, n, |a, b| {
            2.0 * nf * t * rho[a] * rho[b] * chi[(a, b)] / (m[a] + m[b])
        });
        let zeta = DMatrix::from_fn(n, n, |a, b| {
            6.0 * nf * kb * t * t * rho[a] * rho[b] * chi[(a, b)] / ((m[a] + m[b]) * (m[a] + m[b]))
        });
        Self::new(m, rho, kb, phi, zeta, chi, t0)
    }

    /// The normalization under which the general system reduces to PB-CS
    /// and KB-CS with weights `a`: `m = ρ = 1`, `k_B = 2/3`,
    /// `φ = T0 a`, `ζ = T0² a`, `χ = a/n`.
    pub fn normalized(a: &DMatrix<f64>, t0: ReferenceTemperature) -> Result<Self> {
        let n = a.nrows();
        let t = t0.value();
        let off = |i: usize, j: usize, v: f64| if i == j { 0.0 } else { v };
        let phi = DMatrix::from_fn(n, n, |i, j| off(i, j, t * a[(i, j)]));
        let zeta = DMatrix::from_fn(n, n, |i, j| off(i, j, t * t * a[(i, j)]));
        let chi = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { a[(i, j)] / n as f64 });
        Self::new(vec![1.0; n], vec![1.0; n], 2.0 / 3.0, phi, zeta, chi, t0)
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }

    /// `b_{αβ} = 2ρ_αρ_βχ_{αβ}/(m_α+m_β)²`.
    pub fn b(&self, a: usize, b: usize) -> f64 {
        let s = self.m[a] + self.m[b];
        2.0 * self.rho[a] * self.rho[b] * self.chi[(a, b)] / (s * s)
    }
}

/// Momentum and energy productions with the associated entropy production.
#[derive(Debug, Clone, PartialEq)]
pub struct Production {
    pub d: usize,
    /// `M̂_α`, row-major.
    pub momentum: Vec<f64>,
    /// `ê_α`.
    pub energy: Vec<f64>,
    pub sigma: f64,
}

impl Production {
    pub fn momentum_of(&self, alpha: usize) -> &[f64] {
        &self.momentum[alpha * self.d..(alpha + 1) * self.d]
    }

    /// `Σ_β (ê_β − u_β·M̂_β)/T_β`, the entropy production computed from the
    /// productions themselves.
    pub fn entropy_balance(&self, u: &[f64], temp: &[f64]) -> f64 {
        (0..temp.len())
            .map(|b| (self.energy[b] - dot(&u[b * self.d..(b + 1) * self.d], self.momentum_of(b))) / temp[b])
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductionKind {
    Phenomenological,
    Kinetic,
}

fn check_inputs(params: &MixtureParams, d: usize, u: &[f64], temp: &[f64]) -> Result<()> {
    let n = params.n();
    if temp.len() != n || u.len() != n * d || d == 0 {
        return Err(Error::Dimension(format!(
            "expected {n} temperatures and {} velocity components",
            n * d
        )));
    }
    if let Some(a) = temp.iter().position(|&t| t <= TEMPERATURE_FLOOR) {
        return Err(Error::DegenerateTemperature {
            particle: a,
            value: temp[a],
            floor: TEMPERATURE_FLOOR,
        });
    }
    Ok(())
}

/// `M̂_α = (1/n) Σ φ (u_β/T_β − u_α/T_α)`, `ê_α = (1/n) Σ ζ (1/T_α − 1/T_β)`.
pub fn production_phenomenological(
    params: &MixtureParams,
    d: usize,
    u: &[f64],
    temp: &[f64],
) -> Result<Production> {
    check_inputs(params, d, u, temp)?;
    let n = params.n();
    let inv_n = 1.0 / n as f64;
    let mut momentum = vec![0.0; n * d];
    let mut energy = vec![0.0; n];
    let mut sigma = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let (phi, zeta) = (params.phi[(a, b)], params.zeta[(a, b)]);
            let mut sq = 0.0;
            for k in 0..d {
                let diff = u[b * d + k] / temp[b] - u[a * d + k] / temp[a];
                momentum[a * d + k] += phi * diff * inv_n;
                momentum[b * d + k] -= phi * diff * inv_n;
                sq += diff * diff;
            }
            let dinv = 1.0 / temp[a] - 1.0 / temp[b];
            energy[a] += zeta * dinv * inv_n;
            energy[b] -= zeta * dinv * inv_n;
            // each unordered pair appears twice in the double sum
            sigma += (phi * sq + zeta * dinv * dinv) * inv_n;
        }
    }
    Ok(Production {
        d,
        momentum,
        energy,
        sigma,
    })
}

/// `M̂_α = Σ b (m_α+m_β)(u_β − u_α)`,
/// `ê_α = Σ b [3k_B(T_β − T_α) + (m_α u_α + m_β u_β)·(u_β − u_α)]`.
pub fn production_kinetic(params: &MixtureParams, d: usize, u: &[f64], temp: &[f64]) -> Result<Production> {
    check_inputs(params, d, u, temp)?;
    let n = params.n();
    let kb = params.kb;
    let mut momentum = vec![0.0; n * d];
    let mut energy = vec![0.0; n];
    let mut sigma = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let bab = params.b(a, b);
            let (ma, mb) = (params.m[a], params.m[b]);
            let (ta, tb) = (temp[a], temp[b]);
            let mut sq = 0.0;
            let mut work = 0.0;
            for k in 0..d {
                let (ua, ub) = (u[a * d + k], u[b * d + k]);
                let du = ub - ua;
                momentum[a * d + k] += bab * (ma + mb) * du;
                momentum[b * d + k] -= bab * (ma + mb) * du;
                sq += du * du;
                work += (ma * ua + mb * ub) * du;
            }
            let heat = 3.0 * kb * (tb - ta);
            energy[a] += bab * (heat + work);
            energy[b] -= bab * (heat + work);
            sigma += bab / (ta * tb) * ((ma * ta + mb * tb) * sq + 3.0 * kb * (tb - ta) * (tb - ta));
        }
    }
    Ok(Production {
        d,
        momentum,
        energy,
        sigma,
    })
}

/// Right-hand side of the general homogeneous mixture system
/// `ρ_α du_α/dt = M̂_α`, `ρ_α d/dt((3/2)(k_B/m_α)T_α + |u_α|²/2) = ê_α`.
pub fn rhs_general(params: &MixtureParams, kind: ProductionKind, state: &MixtureState) -> Result<StateDerivative> {
    let d = state.d();
    let (u, temp) = (state.velocities(), state.temperatures());
    let prod = match kind {
        ProductionKind::Phenomenological => production_phenomenological(params, d, u, temp)?,
        ProductionKind::Kinetic => production_kinetic(params, d, u, temp)?,
    };
    let n = params.n();
    let mut du = prod.momentum.clone();
    for a in 0..n {
        du[a * d..(a + 1) * d].iter_mut().for_each(|v| *v /= params.rho[a]);
    }
    let dtemp = (0..n)
        .map(|a| {
            let work = dot(state.u(a), &du[a * d..(a + 1) * d]);
            2.0 * params.m[a] / (3.0 * params.kb) * (prod.energy[a] / params.rho[a] - work)
        })
        .collect();
    Ok(StateDerivative {
        d,
        dx: u.to_vec(),
        du,
        dtemp,
    })
}

impl MixtureParams {
    /// Mixture entropy density `Σ ρ_α (k_B/m_α) ln(T_α^{3/2}/ρ_α)`, whose
    /// rate along [`rhs_general`] is the entropy production `Σ`.
    pub fn mixture_entropy(&self, temp: &[f64]) -> f64 {
        (0..self.n())
            .map(|a| self.rho[a] * self.kb / self.m[a] * (1.5 * temp[a].ln() - self.rho[a].ln()))
            .sum()
    }
}

/// Max-norm difference between the two production operators at `(u, T)`.
pub fn linearization_discrepancy(params: &MixtureParams, d: usize, u: &[f64], temp: &[f64]) -> Result<f64> {
    let p = production_phenomenological(params, d, u, temp)?;
    let k = production_kinetic(params, d, u, temp)?;
    Ok(p.momentum
        .iter()
        .zip(&k.momentum)
        .chain(p.energy.iter().zip(&k.energy))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Evaluates both operators on a fixed one-dimensional perturbation of the
/// equilibrium at `T0`, with `|u| = O(ε)` and `|T − T0| = O(εT0)`, and returns
/// the absolute max-norm discrepancy. It scales as `ε²`.
pub fn linearization_match(params: &MixtureParams, epsilon: f64) -> Result<f64> {
    let n = params.n();
    let t0 = params.t0.value();
    let raw: Vec<f64> = (0..n).map(|a| (1.3 * (a + 1) as f64).sin()).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let u: Vec<f64> = raw.iter().map(|p| epsilon * (p - mean)).collect();
    let temp: Vec<f64> = (0..n)
        .map(|a| t0 * (1.0 + epsilon * (0.7 * (a + 1) as f64).cos()))
        .collect();
    linearization_discrepancy(params, 1, &u, &temp)
}
