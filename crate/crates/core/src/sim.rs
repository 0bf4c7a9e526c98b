//! Simulation driver: per step, interface velocity → level-set advection
//! (with CFL subcycling) → reinitialization on cadence → transport, recording
//! observables on the configured cadence.
//!
//! The interface moves before transport so the penalty mask always sees a
//! consistent solid region.

use crate::config::SimConfig;
use crate::error::{CoreError, Result};
use crate::geometry::{sdf_build, volume_positive, LevelSetField};
use crate::grid::{ScalarField, Unit};
use crate::interface::{advect, normal_velocity, reinitialize};
use crate::observables::{avg_ph, hydrogen_volume, SeriesRow, TimeSeries};
use crate::transport::{film_capacity, step_transport, ChemState};

/// Aggregated per-run accounting.
#[derive(Clone, Copy, Debug, Default)]
pub struct Diagnostics {
    /// Negative round-off clips per species (Mg, Cl, OH).
    pub clipped: [u64; 3],
    /// Extra advection substeps taken to satisfy the CFL bound.
    pub cfl_subcycles: u64,
    /// Worst solver iteration count seen.
    pub solver_max_iterations: usize,
    /// Gradient sample points clamped to the box.
    pub gradient_clamps: u64,
    /// Reinitializations that found no interface.
    pub reinit_warnings: u64,
    /// Reinitializations skipped because the band already carried unit
    /// gradient.
    pub reinit_skips: u64,
    /// Solid-volume increases across a reinitialization.
    pub volume_upticks: u64,
    pub max_volume_uptick: f64,
    /// Worst |C_Mg − sat|/sat over solid nodes, any step.
    pub max_penalty_deviation: f64,
}

/// Everything a finished run hands back.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub series: TimeSeries,
    pub final_state: ChemState,
    pub final_phi: LevelSetField,
    pub diagnostics: Diagnostics,
}

/// Borrowed view of the live fields, passed to snapshot sinks on cadence.
pub struct Snapshot<'a> {
    pub step: usize,
    pub time: f64,
    pub state: &'a ChemState,
    pub phi: &'a LevelSetField,
}

/// Runs the coupled simulation described by `config`.
pub fn run_simulation(config: &SimConfig) -> Result<RunResult> {
    run_simulation_with(config, false, |_| Ok(()))
}

/// Full-control variant: `check` enables per-step invariant assertions, and
/// `sink` receives a [`Snapshot`] at every recorded time (including t = 0).
pub fn run_simulation_with(
    config: &SimConfig,
    check: bool,
    mut sink: impl FnMut(&Snapshot) -> Result<()>,
) -> Result<RunResult> {
    config.validate()?;
    let grid = config.grid()?;
    let params = config.materials;
    let mut phi = sdf_build(&config.geometry, &grid)?;

    // initial fields: solid nodes sit at the saturation concentration the
    // penalty will enforce; ions exist only in the fluid
    let solid: Vec<bool> = phi.values().iter().map(|&v| v >= 0.0).collect();
    let pick = |idx: usize, fluid_value: f64, solid_value: f64| {
        if solid[idx] {
            solid_value
        } else {
            fluid_value
        }
    };
    let n = grid.node_count();
    let mut state = ChemState::new(
        ScalarField::from_values(
            grid,
            Unit::Concentration,
            (0..n).map(|i| pick(i, config.c_mg0, params.mg_sat)).collect(),
        )?,
        ScalarField::constant(grid, Unit::Concentration, 0.0),
        ScalarField::from_values(
            grid,
            Unit::Concentration,
            (0..n).map(|i| pick(i, config.c_cl0, 0.0)).collect(),
        )?,
        ScalarField::from_values(
            grid,
            Unit::Concentration,
            (0..n).map(|i| pick(i, config.c_oh0, 0.0)).collect(),
        )?,
        0.0,
    )?;

    // step sizes: uniform dt with a shortened final step when t_end is not a
    // multiple of dt
    let n_full = (config.t_end / config.dt + 1e-9).floor() as usize;
    let remainder = config.t_end - n_full as f64 * config.dt;
    let mut step_sizes = vec![config.dt; n_full];
    if remainder > 1e-9 * config.dt {
        step_sizes.push(remainder);
    }
    let n_steps = step_sizes.len();

    let mut diagnostics = Diagnostics::default();
    let mut series = TimeSeries::new();
    let v0 = volume_positive(&phi);
    let mut min_volume = v0;
    let ph_floor = config.c_oh0;
    series.push(SeriesRow {
        time_h: 0.0,
        mass_lost_g: 0.0,
        hydrogen_ml: 0.0,
        avg_ph: avg_ph(&state.c_oh, &phi, ph_floor)?,
        solid_volume_mm3: v0,
    })?;
    sink(&Snapshot {
        step: 0,
        time: 0.0,
        state: &state,
        phi: &phi,
    })?;

    let film_cap = film_capacity(&params);
    let mut prev_volume = v0;
    let mut time = 0.0;

    for (si, &dt_step) in step_sizes.iter().enumerate() {
        // interface velocity from the current concentrations
        let (vel, clamps) =
            normal_velocity(&state.c_mg, &state.c_film, &phi, &params, si, dt_step)?;
        diagnostics.gradient_clamps += clamps;

        // advect with CFL subcycling, velocity frozen across substeps
        let vmax = vel.max_abs();
        if vmax > 0.0 {
            let nsub = ((vmax * dt_step) / (0.9 * grid.h)).ceil().max(1.0) as usize;
            diagnostics.cfl_subcycles += (nsub - 1) as u64;
            let dt_sub = dt_step / nsub as f64;
            for _ in 0..nsub {
                phi = advect(&phi, &vel, dt_sub)?;
            }
        }

        // reinitialize after the gamma push and on cadence
        let pushed = si == 0 && params.gamma > 0.0;
        if pushed || (si + 1) % config.reinit_every == 0 {
            let before = volume_positive(&phi);
            let outcome = reinitialize(&phi)?;
            if outcome.no_interface {
                diagnostics.reinit_warnings += 1;
            }
            if outcome.skipped {
                diagnostics.reinit_skips += 1;
            }
            phi = outcome.phi;
            let after = volume_positive(&phi);
            if after > before {
                diagnostics.volume_upticks += 1;
                diagnostics.max_volume_uptick = diagnostics.max_volume_uptick.max(after - before);
            }
        }

        // transport
        let (next, tdiag) = step_transport(&state, &phi, &params, dt_step, &config.solver)?;
        state = next;
        for s in 0..3 {
            diagnostics.clipped[s] += tdiag.clipped[s];
        }
        for rep in [tdiag.mg_report, tdiag.cl_report, tdiag.oh_report].into_iter().flatten() {
            diagnostics.solver_max_iterations = diagnostics.solver_max_iterations.max(rep.iterations);
        }
        diagnostics.max_penalty_deviation =
            diagnostics.max_penalty_deviation.max(tdiag.max_penalty_deviation);

        time += dt_step;

        if check {
            if tdiag.max_penalty_deviation > 1e-6 {
                return Err(CoreError::NumericalFailure(format!(
                    "step {si}: penalty deviation {} exceeds 1e-6",
                    tdiag.max_penalty_deviation
                )));
            }
            let v_now = volume_positive(&phi);
            let reinit_slack = 0.1 * grid.h.powi(3);
            if v_now > prev_volume + reinit_slack + 1e-9 * v0.max(1.0) {
                return Err(CoreError::NumericalFailure(format!(
                    "step {si}: solid volume grew from {prev_volume} to {v_now}"
                )));
            }
            prev_volume = v_now;
            let film_bound = film_cap * (1.0 / params.beta).max(1.0) * (1.0 + 1e-9);
            if state.c_film.values().iter().any(|&f| f > film_bound) {
                return Err(CoreError::NumericalFailure(format!(
                    "step {si}: film concentration exceeded its bound {film_bound}"
                )));
            }
        }

        // record on cadence and always at the final step
        if (si + 1) % config.snapshot_every == 0 || si + 1 == n_steps {
            let v = volume_positive(&phi);
            min_volume = min_volume.min(v);
            let mass = params.mg_sol * (v0 - min_volume);
            series.push(SeriesRow {
                time_h: time,
                mass_lost_g: mass,
                hydrogen_ml: hydrogen_volume(mass, &params),
                avg_ph: avg_ph(&state.c_oh, &phi, ph_floor)?,
                solid_volume_mm3: v,
            })?;
            sink(&Snapshot {
                step: si + 1,
                time,
                state: &state,
                phi: &phi,
            })?;
        }
    }

    Ok(RunResult {
        series,
        final_state: state,
        final_phi: phi,
        diagnostics,
    })
}
