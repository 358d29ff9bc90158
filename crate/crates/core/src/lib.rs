//! Shooting-method solver for planar Sturm–Liouville problems driven between
//! two positively homogeneous Hamiltonians.

pub mod boundary;
pub mod error;
pub mod expr;
pub mod field;
pub mod fucik;
pub mod hamiltonian;
pub mod landesman;
pub mod ode;
pub mod plot;
pub mod quadrature;
pub mod resonance;
pub mod scalar;
pub mod shooting;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instantiations of the generic types.
pub mod f64 {
    pub type AsymmetricParams = crate::hamiltonian::AsymmetricParams<f64>;
    pub type Hamiltonian = crate::hamiltonian::HomogeneousHamiltonian<f64>;
    pub type AngularProfile = crate::hamiltonian::AngularProfile<f64>;
    pub type Line = crate::boundary::Line<f64>;
    pub type LinePair = crate::boundary::LinePair<f64>;
    pub type TimeLaps = crate::resonance::TimeLaps<f64>;
    pub type ResonanceSet = crate::resonance::ResonanceSet<f64>;
    pub type Classification = crate::resonance::Classification<f64>;
    pub type Rect = crate::fucik::Rect<f64>;
    pub type Source = crate::field::Source<f64>;
    pub type Field = crate::field::Field<f64>;
    pub type Trajectory = crate::field::Trajectory<f64>;
    pub type SweepRecord = crate::shooting::SweepRecord<f64>;
    pub type Solution = crate::shooting::Solution<f64>;
    pub type SolveReport = crate::shooting::SolveReport<f64>;
    pub type ScalarLimits = crate::landesman::ScalarLimits<f64>;
    pub type EigenOrbit = crate::landesman::EigenOrbit<f64>;
}
