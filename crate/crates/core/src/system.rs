//! Two-qubit Hilbert space: parameters, operators, Hamiltonian and its
//! closed-form eigenbasis.

use nalgebra::{Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Operator, C64};

/// Index of `|ee⟩` in the product basis.
pub const EE: usize = 0;
/// Index of `|eg⟩` (first qubit excited).
pub const EG: usize = 1;
/// Index of `|ge⟩` (second qubit excited).
pub const GE: usize = 2;
/// Index of `|gg⟩`.
pub const GG: usize = 3;

/// Energy of one dimensionless frequency unit, in eV.
pub const ENERGY_UNIT_EV: f64 = 0.01;

const HBAR_ERG_S: f64 = 1.054_571_817e-27;
const ERG_PER_EV: f64 = 1.602_176_634e-12;
/// 1 Debye in statC·cm.
const DEBYE_ESU: f64 = 1.0e-18;
const NM_IN_CM: f64 = 1.0e-7;

/// Ratio below which `coupling / omega` is considered inside the rotating
/// wave regime.
const RWA_RATIO: f64 = 0.1;

/// Physical constants of the two qubits and their reservoirs.
///
/// All quantities are in the dimensionless energy unit. Dephasing rates are
/// the emission-side values `γ_k,dp(−ω)`; radiative rate is `γ_rad(−ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega1: f64,
    pub omega2: f64,
    pub coupling: f64,
    pub gamma_dp1: f64,
    pub gamma_dp2: f64,
    pub gamma_rad: f64,
    pub temp_dp: f64,
    pub temp_rad: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            omega1: 100.0,
            omega2: 100.0,
            coupling: 0.1,
            gamma_dp1: 2e-2,
            gamma_dp2: 2e-2,
            gamma_rad: 2e-4,
            temp_dp: 2e-2,
            temp_rad: 2e-2,
        }
    }
}

impl SystemParams {
    /// Checks hard constraints and warns when the rotating wave assumption
    /// `omega ≫ coupling` does not hold.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("coupling", self.coupling),
            ("gamma_dp1", self.gamma_dp1),
            ("gamma_dp2", self.gamma_dp2),
            ("gamma_rad", self.gamma_rad),
            ("temp_dp", self.temp_dp),
            ("temp_rad", self.temp_rad),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        if self.coupling <= 0.0 {
            return Err(Error::param("coupling", "must be > 0"));
        }
        for (name, v) in [
            ("gamma_dp1", self.gamma_dp1),
            ("gamma_dp2", self.gamma_dp2),
            ("gamma_rad", self.gamma_rad),
        ] {
            if v < 0.0 {
                return Err(Error::param(name, format!("rates must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("temp_dp", self.temp_dp), ("temp_rad", self.temp_rad)] {
            if v <= 0.0 {
                return Err(Error::param(name, format!("temperature must be > 0, got {v}")));
            }
        }
        if !self.satisfies_rwa() {
            log::warn!(
                "rotating wave approximation is questionable: omega1 = {}, omega2 = {}, coupling = {}",
                self.omega1,
                self.omega2,
                self.coupling
            );
        }
        Ok(())
    }

    pub fn satisfies_rwa(&self) -> bool {
        let omega = self.omega1.min(self.omega2);
        omega > 0.0
            && self.coupling < RWA_RATIO * omega
            && self.detuning().abs() < RWA_RATIO * omega
    }

    /// `ω1 − ω2`.
    pub fn detuning(&self) -> f64 {
        self.omega1 - self.omega2
    }

    /// `ω1 + ω2`.
    pub fn total_frequency(&self) -> f64 {
        self.omega1 + self.omega2
    }

    /// Splitting of the one-excitation doublet, `√(Δ² + 4Ω²)`.
    pub fn doublet_splitting(&self) -> f64 {
        self.detuning().hypot(2.0 * self.coupling)
    }

    /// True when `|ω1 − ω2|` is within 1e-12.
    pub fn is_resonant(&self) -> bool {
        self.detuning().abs() <= 1e-12
    }
}

/// Coupling strength derived from a point-dipole geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleCoupling {
    /// Coupling in s⁻¹.
    pub per_second: f64,
    /// Coupling in units of [`ENERGY_UNIT_EV`].
    pub dimensionless: f64,
}

/// Point-dipole coupling `Ω = (d1·d2 − 3(d1·n)(d2·n)) / (ħ r³)` in Gaussian
/// units.
///
/// `d1`, `d2` are transition dipoles in Debye; `separation` is the vector from
/// the first to the second qubit in nm.
pub fn dipole_coupling_constant(
    d1: [f64; 3],
    d2: [f64; 3],
    separation: [f64; 3],
) -> Result<DipoleCoupling> {
    let d1 = Vector3::from(d1);
    let d2 = Vector3::from(d2);
    let sep = Vector3::from(separation);
    if !(d1.iter().chain(d2.iter()).chain(sep.iter())).all(|v| v.is_finite()) {
        return Err(Error::param("dipole", "vectors must be finite"));
    }
    let r_nm = sep.norm();
    if r_nm == 0.0 {
        return Err(Error::SingularGeometry);
    }
    let n = sep / r_nm;
    let r_cm = r_nm * NM_IN_CM;
    let angular = d1.dot(&d2) - 3.0 * d1.dot(&n) * d2.dot(&n);
    let per_second = angular * DEBYE_ESU * DEBYE_ESU / (HBAR_ERG_S * r_cm.powi(3));
    Ok(DipoleCoupling {
        per_second,
        dimensionless: per_second / unit_frequency_per_second(),
    })
}

/// Angular frequency (s⁻¹) of one dimensionless unit.
pub fn unit_frequency_per_second() -> f64 {
    ENERGY_UNIT_EV * ERG_PER_EV / HBAR_ERG_S
}

/// Lowering operator of the first qubit, `σ ⊗ 1`.
pub fn sigma1() -> Operator {
    let mut m = Operator::zeros();
    m[(GE, EE)] = C64::new(1.0, 0.0);
    m[(GG, EG)] = C64::new(1.0, 0.0);
    m
}

/// Lowering operator of the second qubit, `1 ⊗ σ`.
pub fn sigma2() -> Operator {
    let mut m = Operator::zeros();
    m[(EG, EE)] = C64::new(1.0, 0.0);
    m[(GG, GE)] = C64::new(1.0, 0.0);
    m
}

/// `σz` of the first qubit: `+1` on `|e·⟩`, `−1` on `|g·⟩`.
pub fn sigma_z1() -> Operator {
    diag_real([1.0, 1.0, -1.0, -1.0])
}

/// `σz` of the second qubit.
pub fn sigma_z2() -> Operator {
    diag_real([1.0, -1.0, 1.0, -1.0])
}

pub(crate) fn diag_real(d: [f64; 4]) -> Operator {
    Operator::from_diagonal(&Vector4::from(d).map(|x| C64::new(x, 0.0)))
}

/// Product-basis ket.
pub fn basis_ket(index: usize) -> Vector4<C64> {
    let mut v = Vector4::zeros();
    v[index] = C64::new(1.0, 0.0);
    v
}

/// `(|eg⟩ + |ge⟩)/√2`.
pub fn symmetric_ket() -> Vector4<C64> {
    (basis_ket(EG) + basis_ket(GE)) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// `(|eg⟩ − |ge⟩)/√2`.
pub fn antisymmetric_ket() -> Vector4<C64> {
    (basis_ket(EG) - basis_ket(GE)) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// `ω1 σ1†σ1 + ω2 σ2†σ2 + Ω(σ1†σ2 + σ2†σ1)`.
pub fn build_hamiltonian(params: &SystemParams) -> Operator {
    let s1 = sigma1();
    let s2 = sigma2();
    let omega1 = C64::new(params.omega1, 0.0);
    let omega2 = C64::new(params.omega2, 0.0);
    let coupling = C64::new(params.coupling, 0.0);
    let exchange = s1.adjoint() * s2 * coupling;
    let h = s1.adjoint() * s1 * omega1 + s2.adjoint() * s2 * omega2 + exchange + exchange.adjoint();
    // Exact Hermiticity.
    (h + h.adjoint()) * C64::new(0.5, 0.0)
}

/// Which basis a density matrix is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTag {
    Product,
    Eigen,
}

impl BasisTag {
    pub fn name(self) -> &'static str {
        match self {
            BasisTag::Product => "product",
            BasisTag::Eigen => "eigen",
        }
    }
}

/// 4×4 density matrix together with the basis it is written in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    matrix: Operator,
    basis: BasisTag,
}

impl DensityMatrix {
    /// Wraps a product-basis matrix. No validation; see [`Self::check`].
    pub fn from_product(matrix: Operator) -> Self {
        DensityMatrix {
            matrix,
            basis: BasisTag::Product,
        }
    }

    pub fn from_eigen(matrix: Operator) -> Self {
        DensityMatrix {
            matrix,
            basis: BasisTag::Eigen,
        }
    }

    /// `|ψ⟩⟨ψ|` in the product basis; the ket is normalized first.
    pub fn pure(ket: &Vector4<C64>) -> Self {
        let n = ket.norm();
        let k = ket / C64::new(n, 0.0);
        Self::from_product(k * k.adjoint())
    }

    /// `|i⟩⟨i|` for a product basis index.
    pub fn basis_state(index: usize) -> Self {
        Self::pure(&basis_ket(index))
    }

    pub fn maximally_mixed() -> Self {
        Self::from_product(Operator::identity() * C64::new(0.25, 0.0))
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest entry of `|ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        (self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let herm = (self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        [ev[0], ev[1], ev[2], ev[3]]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `(ρ + ρ†)/2`, returning the removed anti-Hermitian magnitude.
    pub fn symmetrized(&self) -> (Self, f64) {
        let dev = self.hermiticity_error();
        let m = (self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        (
            DensityMatrix {
                matrix: m,
                basis: self.basis,
            },
            dev,
        )
    }

    /// Validates Hermiticity, unit trace and positivity at the given
    /// tolerances.
    pub fn check(&self, herm_tol: f64, trace_tol: f64, pos_tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > herm_tol {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > trace_tol {
            return Err(Error::InvalidState(format!("trace {tr} deviates from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -pos_tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }
}

/// Direction of [`change_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToEigen,
    ToProduct,
}

/// Eigenbasis of the Hamiltonian, columns ordered `|ee⟩, |+⟩, |−⟩, |gg⟩`.
///
/// At resonance `|+⟩ = |s⟩` and `|−⟩ = |as⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenBasis {
    pub vectors: Operator,
    pub frequencies: [f64; 4],
}

/// Closed-form eigenbasis of [`build_hamiltonian`].
///
/// The admixture coefficient `Δ / (2Ω + √(Δ²+4Ω²))` is used for both doublet
/// states, which avoids the `0/0` form of the `|−⟩` expression at `Δ = 0`.
pub fn eigen_system(params: &SystemParams) -> Result<EigenBasis> {
    if !(params.coupling > 0.0) {
        return Err(Error::param("coupling", "must be > 0"));
    }
    let delta = params.detuning();
    let theta = params.total_frequency();
    let splitting = params.doublet_splitting();
    let mix = delta / (2.0 * params.coupling + splitting);
    let norm = C64::new(1.0 / (1.0 + mix * mix).sqrt(), 0.0);
    let mix = C64::new(mix, 0.0);
    let s = symmetric_ket();
    let a = antisymmetric_ket();
    let plus = (s + a * mix) * norm;
    let minus = (a - s * mix) * norm;
    let vectors = Matrix4::from_columns(&[basis_ket(EE), plus, minus, basis_ket(GG)]);
    Ok(EigenBasis {
        vectors,
        frequencies: [theta, 0.5 * (theta + splitting), 0.5 * (theta - splitting), 0.0],
    })
}

impl EigenBasis {
    /// Largest entry of `|U†U − 1|`.
    pub fn unitarity_error(&self) -> f64 {
        (self.vectors.adjoint() * self.vectors - Operator::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn column(&self, i: usize) -> Vector4<C64> {
        self.vectors.column(i).into_owned()
    }
}

const UNITARITY_TOL: f64 = 1e-10;

/// `U†ρU` (to eigen) or `UρU†` (to product).
pub fn change_basis(rho: &DensityMatrix, basis: &EigenBasis, direction: Direction) -> Result<DensityMatrix> {
    let deviation = basis.unitarity_error();
    if deviation > UNITARITY_TOL {
        return Err(Error::NonUnitaryBasis { deviation });
    }
    let u = &basis.vectors;
    match direction {
        Direction::ToEigen => {
            if rho.basis != BasisTag::Product {
                return Err(Error::WrongBasis {
                    expected: "product",
                    found: rho.basis.name(),
                });
            }
            Ok(DensityMatrix::from_eigen(u.adjoint() * rho.matrix * u))
        }
        Direction::ToProduct => {
            if rho.basis != BasisTag::Eigen {
                return Err(Error::WrongBasis {
                    expected: "eigen",
                    found: rho.basis.name(),
                });
            }
            Ok(DensityMatrix::from_product(u * rho.matrix * u.adjoint()))
        }
    }
}
