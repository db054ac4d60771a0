//! Time propagation of the density matrix.
//!
//! The spectral propagator evaluates `e^{Lt}` through the eigendecomposition
//! of the generator, so a single sample at `t = 10⁹` costs the same as one at
//! `t = 1`. When the generator is (close to) defective it falls back to
//! scaling-and-squaring exponentials between consecutive samples. The
//! Dormand–Prince integrator works on the direct form of the master equation
//! and is kept as an independent check on shorter spans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{unvectorize, vectorize, Liouvillian, OpenSystem};
use crate::system::DensityMatrix;
use nalgebra::{DMatrix, DVector};

use crate::{Operator, StateVector, C64};

/// Hermiticity tolerance for sampled states.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Trace tolerance for sampled states.
pub const TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue accepted before a run is aborted.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Spectral decompositions with a worse eigenvector condition number are
/// not trusted.
pub const MAX_CONDITION: f64 = 1e12;

pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagator {
    Spectral,
    Rk,
    /// Matrix exponential stepping; used as the fallback of `Spectral`.
    Expm,
}

impl Propagator {
    pub fn name(self) -> &'static str {
        match self {
            Propagator::Spectral => "spectral",
            Propagator::Rk => "rk",
            Propagator::Expm => "expm",
        }
    }
}

impl std::str::FromStr for Propagator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "spectral" => Ok(Propagator::Spectral),
            "rk" => Ok(Propagator::Rk),
            "expm" => Ok(Propagator::Expm),
            other => Err(format!("unknown propagator `{other}` (expected spectral, rk or expm)")),
        }
    }
}

/// Sampled density matrices, all in the product basis.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub method: Propagator,
}

impl Trajectory {
    /// Symmetrizes every state and enforces the validity tolerances.
    fn finish(times: Vec<f64>, raw: Vec<Operator>, method: Propagator) -> Result<Self> {
        let mut states = Vec::with_capacity(raw.len());
        let mut worst = (0.0f64, 0.0);
        for (t, m) in times.iter().zip(raw) {
            let (rho, dev) = DensityMatrix::from_product(m).symmetrized();
            if dev > worst.0 {
                worst = (dev, *t);
            }
            rho.check(HERMITICITY_TOL, TRACE_TOL, POSITIVITY_TOL).map_err(|e| {
                Error::InvalidState(format!("{} propagation at t = {t:.6e}: {e}", method.name()))
            })?;
            states.push(rho);
        }
        let level = if worst.0 > HERMITICITY_TOL { log::Level::Info } else { log::Level::Debug };
        log::log!(
            level,
            "{} trajectory: largest anti-Hermitian part removed {:.3e} (t = {:.6e})",
            method.name(),
            worst.0,
            worst.1
        );
        Ok(Trajectory { times, states, method })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidGrid("no sample times".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidGrid("sample times must be finite and >= 0".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("sample times must be strictly increasing".into()));
    }
    Ok(())
}

/// Logarithmically spaced grid from `t_min` to `t_max` inclusive.
///
/// Spacing is `1/points_per_decade` decades, stretched slightly when the span
/// is not a whole number of steps. Endpoints are exact.
pub fn log_time_grid(t_min: f64, t_max: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
        return Err(Error::InvalidGrid(format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]")));
    }
    if points_per_decade == 0 {
        return Err(Error::InvalidGrid("points_per_decade must be >= 1".into()));
    }
    let decades = (t_max / t_min).log10();
    let steps = ((decades * points_per_decade as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut grid = Vec::with_capacity(steps + 1);
    let (lo, hi) = (t_min.log10(), t_max.log10());
    for k in 0..=steps {
        let t = if k == 0 {
            t_min
        } else if k == steps {
            t_max
        } else {
            10f64.powf(lo + (hi - lo) * k as f64 / steps as f64)
        };
        if grid.last().is_none_or(|&last| t > last) {
            grid.push(t);
        }
    }
    Ok(grid)
}

/// One invariant block of the generator in reduced coordinates.
///
/// A block that contains diagonal entries of `ρ` conserves their sum, so one
/// of them (the pivot) is dropped and rebuilt from the others. The remaining
/// coordinates obey the affine system `ẏ = B y + c`, written homogeneously as
/// `z = (y, 1)`, `ż = M z`. This keeps the trace exact no matter how long the
/// span.
struct Block {
    coords: Vec<usize>,
    pivot: Option<Pivot>,
    generator: DMatrix<C64>,
    z0: DVector<C64>,
}

struct Pivot {
    index: usize,
    /// Positions in `coords` of the other diagonal entries.
    others: Vec<usize>,
    partial_trace: C64,
}

fn is_diagonal(k: usize) -> bool {
    k % 4 == k / 4
}

fn split_blocks(l: &Liouvillian, v0: &StateVector) -> Vec<Block> {
    crate::linalg::invariant_blocks(&l.matrix)
        .into_iter()
        .map(|members| {
            let Some(&p) = members.iter().rev().find(|&&k| is_diagonal(k)) else {
                let n = members.len();
                return Block {
                    generator: DMatrix::from_fn(n, n, |a, b| l.matrix[(members[a], members[b])]),
                    z0: DVector::from_iterator(n, members.iter().map(|&k| v0[k])),
                    coords: members,
                    pivot: None,
                };
            };
            let coords: Vec<usize> = members.iter().copied().filter(|&k| k != p).collect();
            let n = coords.len();
            let others: Vec<usize> = (0..n).filter(|&a| is_diagonal(coords[a])).collect();
            let partial_trace: C64 = members.iter().filter(|&&k| is_diagonal(k)).map(|&k| v0[k]).sum();
            let mut m = DMatrix::<C64>::zeros(n + 1, n + 1);
            for a in 0..n {
                let l_ap = l.matrix[(coords[a], p)];
                for b in 0..n {
                    m[(a, b)] = l.matrix[(coords[a], coords[b])];
                }
                for &b in &others {
                    m[(a, b)] -= l_ap;
                }
                m[(a, n)] = l_ap * partial_trace;
            }
            let mut z0 = DVector::from_iterator(n + 1, coords.iter().map(|&k| v0[k]).chain([C64::new(0.0, 0.0)]));
            z0[n] = C64::new(1.0, 0.0);
            Block {
                coords,
                pivot: Some(Pivot {
                    index: p,
                    others,
                    partial_trace,
                }),
                generator: m,
                z0,
            }
        })
        .collect()
}

impl Block {
    fn scatter(&self, z: &DVector<C64>, v: &mut StateVector) {
        for (a, &k) in self.coords.iter().enumerate() {
            v[k] = z[a];
        }
        if let Some(p) = &self.pivot {
            v[p.index] = p.partial_trace - p.others.iter().map(|&a| z[a]).sum::<C64>();
        }
    }
}

/// Per-block time evolution.
enum BlockEvolution {
    Spectral {
        values: Vec<C64>,
        vectors: DMatrix<C64>,
        coeffs: DVector<C64>,
    },
    Expm,
}

fn spectral_block(block: &Block) -> Result<BlockEvolution> {
    let eig = crate::linalg::eigendecompose(&block.generator)?;
    if eig.condition > MAX_CONDITION {
        return Err(Error::Decomposition(format!(
            "eigenvectors ill-conditioned (cond {:.2e})",
            eig.condition
        )));
    }
    // A valid generator has Re λ ≤ 0, and eigenvalues below the round-off
    // level of the block are conserved quantities. Left as computed, either
    // error grows like e^{εt} over long spans.
    let tiny = 16.0 * f64::EPSILON * crate::linalg::one_norm(&block.generator);
    let values = eig
        .values
        .iter()
        .map(|&lam| {
            if lam.norm() <= tiny {
                C64::new(0.0, 0.0)
            } else if lam.re > 0.0 {
                if lam.re > 1e-10 {
                    log::warn!("generator eigenvalue {lam} has positive real part; clamped");
                }
                C64::new(0.0, lam.im)
            } else {
                lam
            }
        })
        .collect();
    let coeffs = &eig.inverse * &block.z0;
    Ok(BlockEvolution::Spectral {
        values,
        vectors: eig.vectors,
        coeffs,
    })
}

fn evolve_blocks(blocks: &[Block], plans: &[BlockEvolution], rho0: &Operator, times: &[f64]) -> Vec<Operator> {
    let mut current: Vec<DVector<C64>> = blocks.iter().map(|b| b.z0.clone()).collect();
    let mut t_prev = 0.0;
    times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return *rho0;
            }
            let mut v = StateVector::zeros();
            for ((block, plan), z) in blocks.iter().zip(plans).zip(current.iter_mut()) {
                match plan {
                    BlockEvolution::Spectral {
                        values,
                        vectors,
                        coeffs,
                    } => {
                        let w = DVector::from_iterator(
                            coeffs.len(),
                            values.iter().zip(coeffs.iter()).map(|(lam, c)| (lam * t).exp() * c),
                        );
                        *z = vectors * w;
                    }
                    BlockEvolution::Expm => {
                        let dt = t - t_prev;
                        if dt > 0.0 {
                            *z = (&block.generator * C64::new(dt, 0.0)).exp() * &*z;
                        }
                    }
                }
                block.scatter(z, &mut v);
            }
            t_prev = t;
            unvectorize(&v)
        })
        .collect()
}

/// `ρ(t) = V e^{Λt} V⁻¹ vec(ρ0)`, evaluated separately on each invariant
/// block of `L` with the trace eliminated. Blocks whose eigenvectors are too
/// ill-conditioned fall back to matrix-exponential stepping, and the
/// trajectory is then tagged [`Propagator::Expm`].
pub fn spectral_propagate(l: &Liouvillian, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    check_times(times)?;
    let rho0 = require_product(rho0)?;
    let blocks = split_blocks(l, &vectorize(rho0.matrix()));
    let mut fallback = false;
    let plans: Vec<BlockEvolution> = blocks
        .iter()
        .map(|b| {
            spectral_block(b).unwrap_or_else(|err| {
                log::warn!(
                    "block of size {}: {err}; falling back to matrix-exponential propagation",
                    b.generator.nrows()
                );
                fallback = true;
                BlockEvolution::Expm
            })
        })
        .collect();
    let states = evolve_blocks(&blocks, &plans, rho0.matrix(), times);
    let method = if fallback { Propagator::Expm } else { Propagator::Spectral };
    Trajectory::finish(times.to_vec(), states, method)
}

/// Propagates with `e^{L(t_{k+1} − t_k)}` between consecutive samples, block
/// by block with the trace eliminated.
pub fn expm_propagate(l: &Liouvillian, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    check_times(times)?;
    let rho0 = require_product(rho0)?;
    let blocks = split_blocks(l, &vectorize(rho0.matrix()));
    let plans: Vec<BlockEvolution> = blocks.iter().map(|_| BlockEvolution::Expm).collect();
    let states = evolve_blocks(&blocks, &plans, rho0.matrix(), times);
    Trajectory::finish(times.to_vec(), states, Propagator::Expm)
}

fn require_product(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.basis() != crate::system::BasisTag::Product {
        return Err(Error::WrongBasis {
            expected: "product",
            found: rho.basis().name(),
        });
    }
    rho.check(HERMITICITY_TOL, TRACE_TOL, POSITIVITY_TOL)?;
    Ok(*rho)
}

// Dormand–Prince 5(4) tableau; the generator is autonomous so the nodes
// `c_i` are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output (Hairer & Wanner, contd5).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 20_000_000;

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Adaptive Dormand–Prince 5(4) integration of the direct master equation
/// from `t = 0`, with continuous output at the requested times.
pub fn rk_propagate(system: &OpenSystem, rho0: &DensityMatrix, times: &[f64], rel_tol: f64) -> Result<Trajectory> {
    if !(1e-12..=1e-4).contains(&rel_tol) {
        return Err(Error::param("rel_tol", format!("must lie in [1e-12, 1e-4], got {rel_tol}")));
    }
    check_times(times)?;
    let rho0 = require_product(rho0)?;
    let f = |y: &Operator| system.rhs(y);
    let abs_tol = rel_tol * 1e-3;

    let mut out = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() && times[next] == 0.0 {
        out.push(*rho0.matrix());
        next += 1;
    }
    let t_end = *times.last().unwrap();
    let mut t = 0.0;
    let mut y = *rho0.matrix();
    let mut k1 = f(&y);
    let mut h = initial_step(&y, &k1, rel_tol, abs_tol, t_end);
    let mut steps = 0usize;

    while next < times.len() {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Stiffness { t, h });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Stiffness { t, h });
        }
        let h_step = h.min(t_end - t);
        let k2 = f(&(y + k1 * r(h_step * A21)));
        let k3 = f(&(y + (k1 * r(A31) + k2 * r(A32)) * r(h_step)));
        let k4 = f(&(y + (k1 * r(A41) + k2 * r(A42) + k3 * r(A43)) * r(h_step)));
        let k5 = f(&(y + (k1 * r(A51) + k2 * r(A52) + k3 * r(A53) + k4 * r(A54)) * r(h_step)));
        let k6 = f(&(y + (k1 * r(A61) + k2 * r(A62) + k3 * r(A63) + k4 * r(A64) + k5 * r(A65)) * r(h_step)));
        let y_new = y + (k1 * r(A71) + k3 * r(A73) + k4 * r(A74) + k5 * r(A75) + k6 * r(A76)) * r(h_step);
        let k7 = f(&y_new);
        let err = (k1 * r(E1) + k3 * r(E3) + k4 * r(E4) + k5 * r(E5) + k6 * r(E6) + k7 * r(E7)) * r(h_step);

        let mut err_norm = 0.0f64;
        for i in 0..16 {
            let sc = abs_tol + rel_tol * y[i].norm().max(y_new[i].norm());
            err_norm = err_norm.max(err[i].norm() / sc);
        }

        if err_norm <= 1.0 {
            let t_new = t + h_step;
            // Continuous extension over [t, t_new].
            let diff = y_new - y;
            let bspl = k1 * r(h_step) - diff;
            let c4 = diff - k7 * r(h_step) - bspl;
            let c5 = (k1 * r(D1) + k3 * r(D3) + k4 * r(D4) + k5 * r(D5) + k6 * r(D6) + k7 * r(D7)) * r(h_step);
            while next < times.len() && times[next] <= t_new {
                let ts = times[next];
                let theta = (ts - t) / h_step;
                let th1 = 1.0 - theta;
                let value = if ts == t_new {
                    y_new
                } else {
                    y + (diff + (bspl + (c4 + c5 * r(th1)) * r(theta)) * r(th1)) * r(theta)
                };
                out.push(value);
                next += 1;
            }
            t = t_new;
            y = y_new;
            k1 = k7;
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = if err_norm <= 1.0 { h_step * factor } else { h_step * factor.min(1.0) };
    }
    log::debug!("rk: {steps} steps to t = {t_end:.3e}");
    Trajectory::finish(times.to_vec(), out, Propagator::Rk)
}

fn initial_step(y: &Operator, f0: &Operator, rel_tol: f64, abs_tol: f64, t_end: f64) -> f64 {
    let scale: f64 = y.iter().map(|z| abs_tol + rel_tol * z.norm()).fold(f64::INFINITY, f64::min);
    let d0 = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let d1 = f0.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let h = if d1 <= 1e-300 { 1e-6 } else { 0.01 * (d0.max(scale) / d1) };
    h.min(t_end).max(1e-12)
}

/// Dispatches on the propagator choice.
pub fn propagate(system: &OpenSystem, rho0: &DensityMatrix, times: &[f64], method: Propagator) -> Result<Trajectory> {
    match method {
        Propagator::Spectral => spectral_propagate(&system.liouvillian, rho0, times),
        Propagator::Rk => rk_propagate(system, rho0, times, DEFAULT_REL_TOL),
        Propagator::Expm => expm_propagate(&system.liouvillian, rho0, times),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::assemble_liouvillian;
    use crate::system::{antisymmetric_ket, build_hamiltonian, symmetric_ket, SystemParams, EE};

    #[test]
    fn grid_examples() {
        assert_eq!(log_time_grid(1.0, 100.0, 1).unwrap(), vec![1.0, 10.0, 100.0]);
        let g = log_time_grid(1.0, 1e8, 20).unwrap();
        assert_eq!(g.len(), 161);
        assert_eq!(g[0], 1.0);
        assert_eq!(*g.last().unwrap(), 1e8);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(log_time_grid(0.0, 1.0, 3).is_err());
        assert!(log_time_grid(2.0, 1.0, 3).is_err());
        assert!(log_time_grid(1.0, 2.0, 0).is_err());
    }

    #[test]
    fn spectral_at_zero_is_identity() {
        let sys = OpenSystem::global(&SystemParams::default()).unwrap();
        let rho0 = DensityMatrix::basis_state(EE);
        let tr = spectral_propagate(&sys.liouvillian, &rho0, &[0.0, 1.0]).unwrap();
        assert_eq!(tr.states[0], rho0);
        assert_eq!(tr.method, Propagator::Spectral);
    }

    #[test]
    fn unitary_coherence_magnitude() {
        let h = build_hamiltonian(&SystemParams::default());
        let l = assemble_liouvillian(&h, &[]);
        // Equal-weight s/as superposition: ρ_{s,as} has magnitude 1/2 and only rotates.
        let ket = symmetric_ket() + antisymmetric_ket();
        let rho0 = DensityMatrix::pure(&ket);
        let times = log_time_grid(1.0, 1e6, 2).unwrap();
        let tr = spectral_propagate(&l, &rho0, &times).unwrap();
        for st in &tr.states {
            let c = (symmetric_ket().adjoint() * st.matrix() * antisymmetric_ket())[(0, 0)];
            assert!((c.norm() - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn rk_constant_without_dissipation() {
        let p = SystemParams {
            gamma_dp1: 0.0,
            gamma_dp2: 0.0,
            gamma_rad: 0.0,
            ..SystemParams::default()
        };
        let sys = OpenSystem::global(&p).unwrap();
        let rho0 = DensityMatrix::basis_state(EE);
        let tr = rk_propagate(&sys, &rho0, &[1.0, 10.0, 100.0], 1e-10).unwrap();
        for st in &tr.states {
            assert!((st.matrix() - rho0.matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn rk_rejects_bad_tolerance() {
        let sys = OpenSystem::global(&SystemParams::default()).unwrap();
        let rho0 = DensityMatrix::basis_state(EE);
        assert!(rk_propagate(&sys, &rho0, &[1.0], 1e-3).is_err());
        assert!(rk_propagate(&sys, &rho0, &[1.0], 1e-13).is_err());
    }

    #[test]
    fn times_must_increase() {
        let sys = OpenSystem::global(&SystemParams::default()).unwrap();
        let rho0 = DensityMatrix::basis_state(EE);
        assert!(spectral_propagate(&sys.liouvillian, &rho0, &[2.0, 1.0]).is_err());
        assert!(spectral_propagate(&sys.liouvillian, &rho0, &[]).is_err());
    }

    #[test]
    fn propagator_names_round_trip() {
        for p in [Propagator::Spectral, Propagator::Rk, Propagator::Expm] {
            assert_eq!(p.name().parse::<Propagator>().unwrap(), p);
        }
        assert!("euler".parse::<Propagator>().is_err());
    }
}
