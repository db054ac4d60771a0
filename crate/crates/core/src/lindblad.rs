//! Jump channels of the global master equation and the Liouvillian built
//! from them.
//!
//! Every channel contributes `(rate/2)·(2LρL† − ρL†L − L†Lρ)`. Emission-side
//! rates are taken flat (`γ(ω) = γ` for `ω ≤ 0`); absorption-side rates follow
//! from the KMS condition `γ(ω) = exp(−ω/T)·γ(−ω)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::system::{sigma1, sigma2, sigma_z1, sigma_z2, DensityMatrix, SystemParams};
use crate::{Operator, StateVector, SuperOperator, C64};

/// Identity of a jump channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelLabel {
    /// `L_rad,1`: `|+⟩ → |gg⟩` and `|ee⟩ → |−⟩` emission.
    Rad1,
    /// `L_rad,2`: `|ee⟩ → |+⟩` and `|−⟩ → |gg⟩` emission.
    Rad2,
    Rad1Dagger,
    Rad2Dagger,
    /// `L_dp,kj` for bath `k ∈ {1,2}` and branch `j ∈ {1,2,3}`.
    Dephasing { bath: u8, branch: u8 },
    /// `σz` of qubit `bath` (local approach).
    LocalDephasing { bath: u8 },
}

impl fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelLabel::Rad1 => write!(f, "rad,1"),
            ChannelLabel::Rad2 => write!(f, "rad,2"),
            ChannelLabel::Rad1Dagger => write!(f, "rad,1†"),
            ChannelLabel::Rad2Dagger => write!(f, "rad,2†"),
            ChannelLabel::Dephasing { bath, branch } => write!(f, "dp,{bath}{branch}"),
            ChannelLabel::LocalDephasing { bath } => write!(f, "local,dp_{bath}"),
        }
    }
}

/// A Lindblad operator with its rate and the transition frequency at which
/// the reservoir spectrum was sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpChannel {
    pub operator: Operator,
    pub rate: f64,
    pub transition_frequency: f64,
    pub label: ChannelLabel,
}

/// KMS rate at frequency `omega` given the emission-side value.
///
/// For `omega ≤ 0` the flat emission spectrum is returned unchanged.
pub fn kms_rate(gamma_negative: f64, omega: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::param("temperature", format!("must be > 0, got {temperature}")));
    }
    if gamma_negative < 0.0 {
        return Err(Error::param("rate", format!("must be >= 0, got {gamma_negative}")));
    }
    if omega > 0.0 {
        Ok((-omega / temperature).exp() * gamma_negative)
    } else {
        Ok(gamma_negative)
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Radiative pair plus their Hermitian conjugates, valid for any detuning.
fn radiative_channels(params: &SystemParams) -> Result<Vec<JumpChannel>> {
    let y = params.detuning() / params.coupling;
    let root = (y * y + 4.0).sqrt();
    let s1 = sigma1();
    let s2 = sigma2();
    let n1 = s1.adjoint() * s1;
    let n2 = s2.adjoint() * s2;
    let cross = n1 * s2 + n2 * s1;
    let scale = real(1.0 / root);
    let rad1 = (s1 * real(1.0 + 0.5 * (y + root)) + s2 * real(1.0 + 0.5 * (root - y)) - cross * real(2.0)) * scale;
    let rad2 = (s1 * real(-1.0 - 0.5 * (y - root)) + s2 * real(-1.0 + 0.5 * (y + root)) + cross * real(2.0)) * scale;

    let theta = params.total_frequency();
    let split = params.doublet_splitting();
    let upper = 0.5 * (theta + split);
    let lower = 0.5 * (theta - split);
    let g = params.gamma_rad;
    let t = params.temp_rad;
    Ok(vec![
        JumpChannel {
            operator: rad1,
            rate: kms_rate(g, -upper, t)?,
            transition_frequency: -upper,
            label: ChannelLabel::Rad1,
        },
        JumpChannel {
            operator: rad2,
            rate: kms_rate(g, -lower, t)?,
            transition_frequency: -lower,
            label: ChannelLabel::Rad2,
        },
        JumpChannel {
            operator: rad1.adjoint(),
            rate: kms_rate(g, upper, t)?,
            transition_frequency: upper,
            label: ChannelLabel::Rad1Dagger,
        },
        JumpChannel {
            operator: rad2.adjoint(),
            rate: kms_rate(g, lower, t)?,
            transition_frequency: lower,
            label: ChannelLabel::Rad2Dagger,
        },
    ])
}

/// Channels at `ω1 = ω2`, written directly in terms of `σ1`, `σ2`.
pub fn resonant_jump_channels(params: &SystemParams) -> Result<Vec<JumpChannel>> {
    params.validate()?;
    if !params.is_resonant() {
        return Err(Error::DetunedParameters {
            detuning: params.detuning(),
        });
    }
    let s1 = sigma1();
    let s2 = sigma2();
    let n1 = s1.adjoint() * s1;
    let n2 = s2.adjoint() * s2;
    let cross = n1 * s2 + s1 * n2;
    let rad1 = s1 + s2 - cross;
    let rad2 = cross;

    let omega = params.omega1;
    let c = params.coupling;
    let g = params.gamma_rad;
    let tr = params.temp_rad;
    let mut channels = vec![
        JumpChannel {
            operator: rad1,
            rate: kms_rate(g, -(omega + c), tr)?,
            transition_frequency: -(omega + c),
            label: ChannelLabel::Rad1,
        },
        JumpChannel {
            operator: rad2,
            rate: kms_rate(g, -(omega - c), tr)?,
            transition_frequency: -(omega - c),
            label: ChannelLabel::Rad2,
        },
        JumpChannel {
            operator: rad1.adjoint(),
            rate: kms_rate(g, omega + c, tr)?,
            transition_frequency: omega + c,
            label: ChannelLabel::Rad1Dagger,
        },
        JumpChannel {
            operator: rad2.adjoint(),
            rate: kms_rate(g, omega - c, tr)?,
            transition_frequency: omega - c,
            label: ChannelLabel::Rad2Dagger,
        },
    ];

    let pure = (n1 + n2) * real(0.5);
    let up = (s1.adjoint() + s2.adjoint()) * (s1 - s2) * real(0.25);
    let down = up.adjoint();
    for (bath, gamma, sign) in [(1u8, params.gamma_dp1, 1.0), (2u8, params.gamma_dp2, -1.0)] {
        channels.extend(dephasing_triplet(
            bath,
            gamma,
            params.temp_dp,
            2.0 * c,
            [pure, up * real(sign), down * real(sign)],
        )?);
    }
    Ok(channels)
}

fn dephasing_triplet(
    bath: u8,
    gamma: f64,
    temperature: f64,
    splitting: f64,
    ops: [Operator; 3],
) -> Result<Vec<JumpChannel>> {
    let freqs = [0.0, splitting, -splitting];
    ops.into_iter()
        .zip(freqs)
        .enumerate()
        .map(|(j, (operator, w))| {
            Ok(JumpChannel {
                operator,
                rate: kms_rate(gamma, w, temperature)?,
                transition_frequency: w,
                label: ChannelLabel::Dephasing {
                    bath,
                    branch: j as u8 + 1,
                },
            })
        })
        .collect()
}

/// Channels for arbitrary detuning `Δ = ω1 − ω2`, parameterized by
/// `y = Δ/Ω`. Reduces to [`resonant_jump_channels`] at `y = 0`.
pub fn detuned_jump_channels(params: &SystemParams) -> Result<Vec<JumpChannel>> {
    if params.coupling == 0.0 {
        return Err(Error::param("coupling", "detuned channels need a non-zero coupling"));
    }
    params.validate()?;
    let y = params.detuning() / params.coupling;
    let root = (y * y + 4.0).sqrt();
    let norm = real(1.0 / (y * y + 4.0));
    let s1 = sigma1();
    let s2 = sigma2();
    let n1 = s1.adjoint() * s1;
    let n2 = s2.adjoint() * s2;
    let hop = s1.adjoint() * s2 + s2.adjoint() * s1;
    let hp = 0.5 * (y + root);
    let hm = 0.5 * (y - root);

    let dp11 = ((n1 * real(0.5 * (y * y + 2.0)) + n2) * real(2.0) + hop * real(y)) * norm;
    let dp12 = -(s1.adjoint() * real(hp) + s2.adjoint()) * (s1 * real(hm) + s2) * norm;
    let dp13 = -(s1.adjoint() * real(hm) + s2.adjoint()) * (s1 * real(hp) + s2) * norm;
    // qubit 2: swap 1 ↔ 2 and y → −y
    let dp21 = ((n2 * real(0.5 * (y * y + 2.0)) + n1) * real(2.0) - hop * real(y)) * norm;
    let dp22 = -(s2.adjoint() * real(-hm) + s1.adjoint()) * (s2 * real(-hp) + s1) * norm;
    let dp23 = -(s2.adjoint() * real(-hp) + s1.adjoint()) * (s2 * real(-hm) + s1) * norm;

    let mut channels = radiative_channels(params)?;
    let split = params.doublet_splitting();
    channels.extend(dephasing_triplet(1, params.gamma_dp1, params.temp_dp, split, [dp11, dp12, dp13])?);
    channels.extend(dephasing_triplet(2, params.gamma_dp2, params.temp_dp, split, [dp21, dp22, dp23])?);
    Ok(channels)
}

/// Local approach: bare `σz` dephasing of each qubit with the global
/// radiative channels.
pub fn local_jump_channels(params: &SystemParams) -> Result<Vec<JumpChannel>> {
    params.validate()?;
    let mut channels = radiative_channels(params)?;
    channels.push(JumpChannel {
        operator: sigma_z1(),
        rate: params.gamma_dp1,
        transition_frequency: 0.0,
        label: ChannelLabel::LocalDephasing { bath: 1 },
    });
    channels.push(JumpChannel {
        operator: sigma_z2(),
        rate: params.gamma_dp2,
        transition_frequency: 0.0,
        label: ChannelLabel::LocalDephasing { bath: 2 },
    });
    Ok(channels)
}

/// Picks resonant or detuned global channels from the parameters.
pub fn global_jump_channels(params: &SystemParams) -> Result<Vec<JumpChannel>> {
    if params.is_resonant() {
        resonant_jump_channels(params)
    } else {
        detuned_jump_channels(params)
    }
}

/// Generator of the master equation on column-stacked density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    pub matrix: SuperOperator,
}

/// `vec(ρ)` by column stacking.
pub fn vectorize(rho: &Operator) -> StateVector {
    StateVector::from_column_slice(rho.as_slice())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &StateVector) -> Operator {
    Operator::from_column_slice(v.as_slice())
}

/// `A ⊗ B` for 4×4 operands.
pub fn kron(a: &Operator, b: &Operator) -> SuperOperator {
    let mut out = SuperOperator::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..4 {
                for l in 0..4 {
                    out[(4 * i + k, 4 * j + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Builds `−i(1⊗H − Hᵀ⊗1) + Σ (γ/2)(2 L̄⊗L − (L†L)ᵀ⊗1 − 1⊗L†L)`, the
/// column-stacking form of the master equation.
pub fn assemble_liouvillian(hamiltonian: &Operator, channels: &[JumpChannel]) -> Liouvillian {
    let id = Operator::identity();
    let mut m = (kron(&id, hamiltonian) - kron(&hamiltonian.transpose(), &id)) * C64::new(0.0, -1.0);
    for ch in channels {
        if ch.rate == 0.0 {
            continue;
        }
        let l = &ch.operator;
        let ldl = l.adjoint() * l;
        let jump = kron(&l.conjugate(), l) * real(2.0);
        let anti = kron(&ldl.transpose(), &id) + kron(&id, &ldl);
        m += (jump - anti) * real(0.5 * ch.rate);
    }
    Liouvillian { matrix: m }
}

impl Liouvillian {
    pub fn apply(&self, rho: &Operator) -> Operator {
        unvectorize(&(self.matrix * vectorize(rho)))
    }

    /// `max |vec(1)ᵀ L|`, zero for a trace-preserving generator.
    pub fn trace_preservation_residual(&self) -> f64 {
        let id = vectorize(&Operator::identity());
        (id.transpose() * self.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the generator.
    pub fn spectrum(&self) -> Vec<C64> {
        let (_, t) = nalgebra::linalg::Schur::new(self.matrix).unpack();
        t.diagonal().iter().copied().collect()
    }
}

/// Direct (non-vectorized) right-hand side of the master equation.
pub fn master_rhs(rho: &Operator, hamiltonian: &Operator, channels: &[JumpChannel]) -> Operator {
    let mut d = (hamiltonian * rho - rho * hamiltonian) * C64::new(0.0, -1.0);
    for ch in channels {
        if ch.rate == 0.0 {
            continue;
        }
        let l = &ch.operator;
        let ld = l.adjoint();
        let ldl = ld * l;
        d += (l * rho * ld * real(2.0) - rho * ldl - ldl * rho) * real(0.5 * ch.rate);
    }
    d
}

/// Hamiltonian, channel set and assembled generator for one parameter point.
#[derive(Debug, Clone)]
pub struct OpenSystem {
    pub hamiltonian: Operator,
    pub channels: Vec<JumpChannel>,
    pub liouvillian: Liouvillian,
}

impl OpenSystem {
    pub fn new(hamiltonian: Operator, channels: Vec<JumpChannel>) -> Self {
        let liouvillian = assemble_liouvillian(&hamiltonian, &channels);
        OpenSystem {
            hamiltonian,
            channels,
            liouvillian,
        }
    }

    /// Global (resonant or detuned) model.
    pub fn global(params: &SystemParams) -> Result<Self> {
        Ok(Self::new(crate::system::build_hamiltonian(params), global_jump_channels(params)?))
    }

    /// Local-approach model.
    pub fn local(params: &SystemParams) -> Result<Self> {
        Ok(Self::new(crate::system::build_hamiltonian(params), local_jump_channels(params)?))
    }

    pub fn rhs(&self, rho: &Operator) -> Operator {
        master_rhs(rho, &self.hamiltonian, &self.channels)
    }

    pub fn rhs_density(&self, rho: &DensityMatrix) -> Operator {
        self.rhs(rho.matrix())
    }
}
