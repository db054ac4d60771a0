//! Global-approach Lindblad simulation of two strongly coupled qubits.
//!
//! Each qubit couples to its own dephasing bath and both share a radiative
//! bath. Jump operators are built in the eigenbasis of the interacting
//! Hamiltonian, so dephasing drives transitions between the symmetric and
//! antisymmetric one-excitation states. With `coupling ≫ temperature` the
//! antisymmetric (subradiant, maximally entangled) state collects most of the
//! population and survives for a time enhanced by `exp(2·coupling / T_dp)`.
//!
//! Conventions used everywhere in the crate:
//!
//! * `ħ = k_B = 1`; frequencies, rates and temperatures share one energy unit
//!   (0.01 eV by default, see [`system::ENERGY_UNIT_EV`]).
//! * Product basis order is `{|ee⟩, |eg⟩, |ge⟩, |gg⟩}` (first qubit is the
//!   left tensor factor, `|e⟩` precedes `|g⟩`).
//! * Density matrices are vectorized by column stacking, which is also the
//!   storage order of `nalgebra` matrices.

pub mod error;
pub mod evolution;
pub mod lindblad;
pub mod linalg;
pub mod observables;
pub mod reduced;
pub mod scenario;
pub mod system;

pub use error::{Error, Result};
pub use evolution::{Propagator, Trajectory};
pub use lindblad::{JumpChannel, Liouvillian, OpenSystem};
pub use observables::{ObservableRecord, PopulationVector};
pub use system::{DensityMatrix, EigenBasis, SystemParams};

/// Complex scalar used for all operators.
pub type C64 = num_complex::Complex64;
/// Operator on the two-qubit Hilbert space in the product basis.
pub type Operator = nalgebra::Matrix4<C64>;
/// Superoperator acting on column-stacked density matrices.
pub type SuperOperator = nalgebra::SMatrix<C64, 16, 16>;
/// Column-stacked density matrix.
pub type StateVector = nalgebra::SVector<C64, 16>;
