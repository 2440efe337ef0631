//! Radiation and dynamics of a small polarizable particle in an equilibrium
//! photon gas, under combined translational and rotational motion.
//!
//! The library computes the tangential (friction) force F_x, the heating
//! rate Q̇, and the net radiated intensity I of a point-dipole particle
//! moving with reduced velocity β and spinning at Ω through a background at
//! temperature T₂, for arbitrary spin–velocity angle θ, and integrates the
//! resulting relativistic equations of motion. Everything rests on exact
//! identities — energy balance I = −(Q̇ + F_x·V), the cold-vacuum
//! proportionality F_x = −(β/c)·I⁽⁰⁾, the velocity- and angle-independence
//! of the cold-vacuum intensity — and the test suite verifies each of them
//! numerically.
//!
//! Units are CGS-Gaussian at every public boundary; the integration kernels
//! work in dimensionless variables internally.

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod quadrature;
pub mod response;
pub mod spectra;
pub mod thermal;

pub use constants::{make_scale, validate_regime, PhysicalConstants, RegimeWarning, UnitScale};
pub use dynamics::{
    evolve, Environment, EvolveStatus, HeatCapacityModel, ParticleState, SolverConfig,
    TemperatureFrame, Trajectory,
};
pub use error::{Error, Result};
pub use kernels::KinematicParams;
pub use quadrature::{
    dense_oracle, energy_balance, energy_balance_residual, heating_rate, net_intensity,
    tangential_force, zero_t_force, zero_t_intensity, IntegralResult, IntegrandKind,
    QuadratureConfig,
};
pub use response::{ParticleResponse, PolarizabilityModel};
pub use spectra::{
    angular_distribution, intensity_spectrum, read_series, write_series, SeriesFormat,
    SpectrumSeries,
};
