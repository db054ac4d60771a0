//! Four-population rate equations in the eigenbasis and their closed-form
//! quasi-stationary and long-time solutions.
//!
//! State order is `(p_ee, p_s, p_as, p_gg)`:
//!
//! ```text
//! ṗ_ee = −2γ_rad p_ee
//! ṗ_s  = 2γ_rad p_ee − (γ_dp/2 + 2γ_rad) p_s + (γ_dp/2) e^{−2Ω/T_dp} p_as
//! ṗ_as = (γ_dp/2) p_s − (γ_dp/2) e^{−2Ω/T_dp} p_as
//! ṗ_gg = 2γ_rad p_s
//! ```
//!
//! `γ_dp` is the mean of the two dephasing rates, which equals the common
//! rate in the symmetric case.

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::SystemParams;

pub use crate::observables::PopulationVector;

fn common_dephasing(params: &SystemParams) -> f64 {
    0.5 * (params.gamma_dp1 + params.gamma_dp2)
}

/// Generator `M` with `ṗ = M p`.
pub fn rate_matrix(params: &SystemParams) -> Matrix4<f64> {
    let g_dp = common_dephasing(params);
    let g_rad = params.gamma_rad;
    let down = 0.5 * g_dp;
    let up = down * (-2.0 * params.coupling / params.temp_dp).exp();
    Matrix4::new(
        -2.0 * g_rad, 0.0, 0.0, 0.0,
        2.0 * g_rad, -(down + 2.0 * g_rad), up, 0.0,
        0.0, down, -up, 0.0,
        0.0, 2.0 * g_rad, 0.0, 0.0,
    )
}

pub fn rate_rhs(p: &PopulationVector, params: &SystemParams) -> PopulationVector {
    let d = rate_matrix(params) * Vector4::from(p.to_array());
    PopulationVector::from_array([d[0], d[1], d[2], d[3]])
}

/// Quasi-stationary occupations reached when the `as → s` leak is ignored.
pub fn quasi_stationary(params: &SystemParams) -> Result<PopulationVector> {
    let g_dp = common_dephasing(params);
    let denom = 2.0 * params.gamma_rad + 0.5 * g_dp;
    if !(denom > 0.0) {
        return Err(Error::param("gamma", "dephasing and radiative rates are all zero"));
    }
    Ok(PopulationVector {
        p_ee: 0.0,
        p_s: 0.0,
        p_as: 0.5 * g_dp / denom,
        p_gg: 2.0 * params.gamma_rad / denom,
    })
}

/// Effective decay rate of the quasi-stationary `p_as`,
/// `γ_dp γ_rad e^{−2Ω/T_dp} / (γ_dp/2 + 2γ_rad)`.
pub fn plateau_decay_rate(params: &SystemParams) -> f64 {
    let g_dp = common_dephasing(params);
    g_dp * params.gamma_rad * (-2.0 * params.coupling / params.temp_dp).exp()
        / (0.5 * g_dp + 2.0 * params.gamma_rad)
}

/// Time after which the long-time solution applies,
/// `2 γ_dp⁻¹ e^{Ω/T_dp}`.
pub fn analytic_validity_start(params: &SystemParams) -> f64 {
    2.0 / common_dephasing(params) * (params.coupling / params.temp_dp).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticPas {
    pub p_as: f64,
    pub p_gg: f64,
    /// `t` is past [`analytic_validity_start`].
    pub valid: bool,
}

/// `p_as^qs · exp(−Γ t)` with `p_gg = 1 − p_as`.
pub fn analytic_pas(t: f64, params: &SystemParams) -> Result<AnalyticPas> {
    let qs = quasi_stationary(params)?;
    let p_as = qs.p_as * (-plateau_decay_rate(params) * t).exp();
    Ok(AnalyticPas {
        p_as,
        p_gg: 1.0 - p_as,
        valid: t >= analytic_validity_start(params),
    })
}

/// Exact solution `p(t) = e^{Mt} p0` of the rate equations.
pub fn solve_rates(p0: &PopulationVector, times: &[f64], params: &SystemParams) -> Result<Vec<PopulationVector>> {
    let arr = p0.to_array();
    if arr.iter().any(|&x| !(-1e-12..=1.0 + 1e-12).contains(&x)) || (p0.sum() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!("initial populations {arr:?} are not a distribution")));
    }
    let m = rate_matrix(params);
    let v0 = Vector4::from(arr);
    Ok(times
        .iter()
        .map(|&t| {
            let v = (m * t).exp() * v0;
            PopulationVector::from_array([v[0], v[1], v[2], v[3]])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> SystemParams {
        SystemParams::default()
    }

    #[test]
    fn rhs_from_excited_state() {
        let d = rate_rhs(&PopulationVector::EXCITED, &reference());
        assert!((d.p_ee + 4e-4).abs() < 1e-18);
        assert!((d.p_s - 4e-4).abs() < 1e-18);
        assert_eq!(d.p_as, 0.0);
        assert_eq!(d.p_gg, 0.0);
    }

    #[test]
    fn rhs_conserves_probability() {
        let p = PopulationVector::from_array([0.1, 0.2, 0.3, 0.4]);
        assert!(rate_rhs(&p, &reference()).sum().abs() < 1e-18);
    }

    #[test]
    fn quasi_stationary_values() {
        let qs = quasi_stationary(&reference()).unwrap();
        assert!((qs.p_as - 0.961_538_461_538).abs() < 1e-11);
        assert!((qs.p_gg - 0.038_461_538_461).abs() < 1e-11);
        let d = rate_rhs(&qs, &reference());
        assert!((d.p_as + 4.365e-7).abs() < 1e-10, "{}", d.p_as);
        let leak = -0.01 * (-10.0f64).exp() * qs.p_as;
        assert!((d.p_as - leak).abs() < 1e-20);
    }

    #[test]
    fn quasi_stationary_limits() {
        let no_rad = SystemParams {
            gamma_rad: 0.0,
            ..reference()
        };
        assert_eq!(quasi_stationary(&no_rad).unwrap().p_as, 1.0);
        let no_dp = SystemParams {
            gamma_dp1: 0.0,
            gamma_dp2: 0.0,
            ..reference()
        };
        let qs = quasi_stationary(&no_dp).unwrap();
        assert_eq!((qs.p_as, qs.p_gg), (0.0, 1.0));
        let none = SystemParams {
            gamma_rad: 0.0,
            ..no_dp
        };
        assert!(quasi_stationary(&none).is_err());
    }

    #[test]
    fn analytic_examples() {
        let p = reference();
        let gamma = plateau_decay_rate(&p);
        // 0.02 · 2e-4 · e^{-10} / 0.0104
        assert!((gamma - 1.746_151_144_711e-8).abs() < 1e-19, "{gamma}");
        assert!((1.0 / gamma - 5.727e7).abs() < 1e4);
        let at0 = analytic_pas(0.0, &p).unwrap();
        assert!((at0.p_as - quasi_stationary(&p).unwrap().p_as).abs() < 1e-15);
        assert!(!at0.valid);
        let half = analytic_pas(2f64.ln() / gamma, &p).unwrap();
        assert!((half.p_as - 0.5 * at0.p_as).abs() < 1e-14);
        assert!(half.valid);
        assert!((analytic_validity_start(&p) - 1.484_131_591e4).abs() < 1e-3);
    }

    #[test]
    fn rate_matrix_is_stochastic_generator() {
        let m = rate_matrix(&reference());
        for j in 0..4 {
            assert!(m.column(j).sum().abs() < 1e-18);
            for i in 0..4 {
                if i != j {
                    assert!(m[(i, j)] >= 0.0);
                }
            }
        }
        // as → s over s → as
        assert!((m[(1, 2)] / m[(2, 1)] - (-10.0f64).exp()).abs() < 1e-18);
    }

    #[test]
    fn relaxes_to_ground() {
        let sol = solve_rates(&PopulationVector::EXCITED, &[1e12], &reference()).unwrap();
        assert!((sol[0].p_gg - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dicke_chain() {
        let p = SystemParams {
            gamma_dp1: 0.0,
            gamma_dp2: 0.0,
            ..reference()
        };
        let times = [10.0, 1e3, 5e3, 1e4];
        let sol = solve_rates(&PopulationVector::EXCITED, &times, &p).unwrap();
        let k = 2.0 * p.gamma_rad;
        for (t, s) in times.iter().zip(sol) {
            assert!((s.p_ee - (-k * t).exp()).abs() < 1e-12);
            assert!((s.p_s - k * t * (-k * t).exp()).abs() < 1e-12);
            assert_eq!(s.p_as, 0.0);
        }
    }

    #[test]
    fn rejects_bad_initial_state() {
        let p0 = PopulationVector::from_array([0.5, 0.0, 0.0, 0.0]);
        assert!(solve_rates(&p0, &[1.0], &reference()).is_err());
    }
}
