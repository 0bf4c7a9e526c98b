//! Simulation engine and calibration toolkit for the biodegradation of
//! commercially-pure magnesium.
//!
//! The model couples four reaction–diffusion equations (dissolved Mg²⁺, a
//! partially protective Mg(OH)₂ film, Cl⁻ and OH⁻) on a uniform structured
//! grid with a level-set description of the receding metal surface. Derived
//! observables — mass loss, evolved hydrogen, pH — feed a Gaussian-process
//! Bayesian optimizer that calibrates unknown transport/reaction parameters
//! against hydrogen-evolution measurements.
//!
//! Units are grams, millimetres and hours throughout.

pub mod calibration;
pub mod config;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod interface;
pub mod io;
pub mod linalg;
pub mod observables;
pub mod sim;
pub mod transport;

pub use calibration::{
    expected_improvement, gp_fit, gp_fit_auto, minimize, objective, optimize, CalibratedParam,
    CalibrationProblem, CalibrationSettings, FreeParameter, GpHyperparams, GpModel,
    MinimizeResult, OptimizeOutcome, TraceEntry,
};
pub use config::{load_config, parse_config, SimConfig};
pub use error::{CoreError, Result};
pub use geometry::{sdf_build, volume_positive, GeometrySpec, LevelSetField};
pub use grid::{make_grid, trilinear_sample, ScalarField, StructuredGrid, Unit};
pub use interface::{
    advect, interface_gradient, normal_velocity, reinitialize, stefan_alpha, stefan_front,
    ReinitOutcome, StefanParams, VelocityField,
};
pub use io::{
    export_csv, export_vtk, read_csv_series, read_reference_csv, read_vtk, VtkSnapshot, CSV_HEADER,
};
pub use linalg::{solve, SolveReport, SparseMatrix};
pub use observables::{
    avg_ph, hydrogen_volume, mass_loss, oh_concentration_for_ph, ph_field, probe_line, SeriesRow,
    TimeSeries, GAS_CONSTANT, OH_MOLAR_MASS,
};
pub use sim::{run_simulation, run_simulation_with, Diagnostics, RunResult, Snapshot};
pub use transport::{
    effective_diffusivity, film_capacity, reaction_rates, step_transport, ChemState,
    MaterialParams, SolverOptions, TransportDiagnostics,
};
