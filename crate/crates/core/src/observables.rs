//! Populations, entropy, concurrence and the lifetime of the subradiant
//! plateau.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::system::{change_basis, BasisTag, DensityMatrix, Direction, EigenBasis};
use crate::{Operator, C64};

/// Eigenvalues below this magnitude are treated as zero.
pub const EIGEN_CLIP: f64 = 1e-12;
/// Entropy refuses states with an eigenvalue below `−ENTROPY_NEG_TOL`.
pub const ENTROPY_NEG_TOL: f64 = 1e-6;
/// Minimum coefficient of determination of the lifetime regression.
pub const MIN_R_SQUARED: f64 = 0.999;

/// Occupations of `|ee⟩, |+⟩ (|s⟩), |−⟩ (|as⟩), |gg⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationVector {
    pub p_ee: f64,
    pub p_s: f64,
    pub p_as: f64,
    pub p_gg: f64,
}

impl PopulationVector {
    pub const EXCITED: PopulationVector = PopulationVector {
        p_ee: 1.0,
        p_s: 0.0,
        p_as: 0.0,
        p_gg: 0.0,
    };

    pub fn to_array(self) -> [f64; 4] {
        [self.p_ee, self.p_s, self.p_as, self.p_gg]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        PopulationVector {
            p_ee: a[0],
            p_s: a[1],
            p_as: a[2],
            p_gg: a[3],
        }
    }

    pub fn sum(self) -> f64 {
        self.to_array().iter().sum()
    }
}

/// Diagonal of `ρ` in the eigenbasis.
pub fn populations(rho: &DensityMatrix, basis: &EigenBasis) -> Result<PopulationVector> {
    let eigen = match rho.basis() {
        BasisTag::Product => change_basis(rho, basis, Direction::ToEigen)?,
        BasisTag::Eigen => *rho,
    };
    let m = eigen.matrix();
    Ok(PopulationVector::from_array([m[(0, 0)].re, m[(1, 1)].re, m[(2, 2)].re, m[(3, 3)].re]))
}

/// `−Tr ρ ln ρ` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let ev = rho.eigenvalues();
    if ev[0] < -ENTROPY_NEG_TOL {
        return Err(Error::InvalidState(format!("eigenvalue {:.3e} is negative", ev[0])));
    }
    Ok(ev
        .iter()
        .filter(|&&l| l > EIGEN_CLIP)
        .map(|&l| -l * l.ln())
        .sum::<f64>()
        .max(0.0))
}

/// `σy ⊗ σy` in the product basis.
fn spin_flip() -> Operator {
    let mut m = Operator::zeros();
    let one = C64::new(1.0, 0.0);
    m[(0, 3)] = -one;
    m[(3, 0)] = -one;
    m[(1, 2)] = one;
    m[(2, 1)] = one;
    m
}

fn hermitian_sqrt(m: &Operator) -> Operator {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    eig.eigenvectors * Operator::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Wootters concurrence `max(0, √λ1 − √λ2 − √λ3 − √λ4)`.
///
/// The `λ` are the eigenvalues of `ρ ρ̃` with `ρ̃ = (σy⊗σy) ρ* (σy⊗σy)`,
/// computed as the spectrum of the Hermitian `√ρ ρ̃ √ρ`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.basis() != BasisTag::Product {
        return Err(Error::WrongBasis {
            expected: "product",
            found: rho.basis().name(),
        });
    }
    let m = rho.matrix();
    let yy = spin_flip();
    let flipped = yy * m.conjugate() * yy;
    let root = hermitian_sqrt(m);
    let r = root * flipped * root;
    let r = (r + r.adjoint()) * C64::new(0.5, 0.0);
    let mut lambdas: Vec<f64> = r
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| if l < EIGEN_CLIP { 0.0 } else { l })
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let s: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
    Ok((s[0] - s[1] - s[2] - s[3]).clamp(0.0, 1.0))
}

/// One row of the observable table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub p_ee: f64,
    pub p_s: f64,
    pub p_as: f64,
    pub p_gg: f64,
    pub entropy: f64,
    pub concurrence: f64,
    pub trace_err: f64,
    pub min_eig: f64,
}

impl ObservableRecord {
    pub fn compute(t: f64, rho: &DensityMatrix, basis: &EigenBasis) -> Result<Self> {
        let p = populations(rho, basis)?;
        Ok(ObservableRecord {
            t,
            p_ee: p.p_ee,
            p_s: p.p_s,
            p_as: p.p_as,
            p_gg: p.p_gg,
            entropy: von_neumann_entropy(rho)?,
            concurrence: concurrence(rho)?,
            trace_err: (rho.trace() - C64::new(1.0, 0.0)).norm(),
            min_eig: rho.min_eigenvalue(),
        })
    }

    /// Range checks on a computed record.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidState(format!("t = {:.6e}: {what}", self.t)));
        for (name, p) in [("p_ee", self.p_ee), ("p_s", self.p_s), ("p_as", self.p_as), ("p_gg", self.p_gg)] {
            if !(-1e-9..=1.0 + 1e-9).contains(&p) {
                return bad(&format!("{name} = {p} outside [0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.concurrence) {
            return bad(&format!("concurrence {} outside [0, 1]", self.concurrence));
        }
        if !(0.0..=4f64.ln() + 1e-12).contains(&self.entropy) {
            return bad(&format!("entropy {} outside [0, ln 4]", self.entropy));
        }
        Ok(())
    }
}

/// Observables for every sample of a trajectory.
pub fn records(traj: &Trajectory, basis: &EigenBasis) -> Result<Vec<ObservableRecord>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, rho)| ObservableRecord::compute(t, rho, basis))
        .collect()
}

/// Exponential decay rate of the plateau and the corresponding lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifetimeFit {
    pub rate: f64,
    pub t_ent: f64,
    pub r_squared: f64,
    pub plateau: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Fits `ln p = ln A − Γ t` on the decaying tail of a population series.
///
/// The plateau is the series maximum; the window holds samples after it with
/// `0.05·plateau ≤ p ≤ 0.8·plateau`.
pub fn fit_decay(times: &[f64], values: &[f64]) -> Result<LifetimeFit> {
    let (peak_idx, plateau) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    if !(plateau > 0.0) {
        return Err(Error::InsufficientHorizon("series never becomes positive".into()));
    }
    let hi = 0.8 * plateau;
    let lo = 0.05 * plateau;
    let tail = &values[peak_idx..];
    if !tail.iter().any(|&v| v < 0.5 * plateau) {
        return Err(Error::InsufficientHorizon(format!(
            "population never drops below half its plateau {plateau:.4e} within t <= {:.3e}",
            times.last().copied().unwrap_or(0.0)
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = times[peak_idx..]
        .iter()
        .zip(tail)
        .filter(|(_, &v)| v <= hi && v >= lo)
        .map(|(&t, &v)| (t, v.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::InsufficientHorizon(format!(
            "only {} samples inside the fit window",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 0.0 };
    if !(slope < 0.0) {
        return Err(Error::FitQuality(format!("tail is not decaying (slope {slope:.3e})")));
    }
    if r_squared < MIN_R_SQUARED {
        return Err(Error::FitQuality(format!("R² = {r_squared:.6} < {MIN_R_SQUARED}")));
    }
    let rate = -slope;
    Ok(LifetimeFit {
        rate,
        t_ent: 1.0 / rate,
        r_squared,
        plateau,
        window: (xs[0], *xs.last().unwrap()),
        points: xs.len(),
    })
}

/// Decay of the `|−⟩` (subradiant) population along a trajectory.
pub fn fit_lifetime(traj: &Trajectory, basis: &EigenBasis) -> Result<LifetimeFit> {
    let p: Vec<f64> = traj
        .states
        .iter()
        .map(|rho| populations(rho, basis).map(|p| p.p_as))
        .collect::<Result<_>>()?;
    fit_decay(&traj.times, &p)
}
