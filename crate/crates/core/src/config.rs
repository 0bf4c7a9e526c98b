//! TOML simulation configuration: parsing, defaults, validation.
//!
//! Units follow the g/mm/hour system used throughout the crate and are noted
//! per field in the shipped example configs.

use std::path::Path;

use serde::Deserialize;

use crate::calibration::{CalibratedParam, CalibrationSettings, FreeParameter};
use crate::error::{CoreError, Result};
use crate::geometry::GeometrySpec;
use crate::grid::{make_grid, StructuredGrid};
use crate::observables::oh_concentration_for_ph;
use crate::transport::{MaterialParams, SolverOptions};

/// Fully validated simulation configuration.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub extent: [f64; 3],
    pub spacing: f64,
    pub geometry: GeometrySpec,
    pub materials: MaterialParams,
    /// Initial dissolved Mg²⁺ in the fluid, g/mm³.
    pub c_mg0: f64,
    /// Initial Cl⁻ in the fluid, g/mm³.
    pub c_cl0: f64,
    /// Initial OH⁻ in the fluid, g/mm³ (possibly derived from a pH entry).
    pub c_oh0: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Record/snapshot cadence in steps.
    pub snapshot_every: usize,
    /// Reinitialization cadence in steps.
    pub reinit_every: usize,
    pub solver: SolverOptions,
    pub seed: u64,
    pub ascii_vtk: bool,
    pub calibration: Option<CalibrationSettings>,
}

impl SimConfig {
    pub fn grid(&self) -> Result<StructuredGrid> {
        make_grid(self.extent, self.spacing)
    }

    pub fn validate(&self) -> Result<()> {
        make_grid(self.extent, self.spacing)
            .map_err(|e| CoreError::config("grid", e.to_string()))?;
        self.geometry
            .validate()
            .map_err(|e| CoreError::config("geometry", e.to_string()))?;
        self.materials
            .validate()
            .map_err(|e| CoreError::config("materials", e.to_string()))?;
        if !(self.dt > 0.0) {
            return Err(CoreError::config("time.dt", "must be positive"));
        }
        if self.t_end < self.dt {
            return Err(CoreError::config("time.t_end", "must be at least one step (>= dt)"));
        }
        if self.snapshot_every < 1 {
            return Err(CoreError::config("output.snapshot_every", "must be >= 1"));
        }
        if self.reinit_every < 1 {
            return Err(CoreError::config("levelset.reinit_every", "must be >= 1"));
        }
        if !(self.solver.tol > 0.0) {
            return Err(CoreError::config("solver.tol", "must be positive"));
        }
        if self.solver.max_iter == 0 {
            return Err(CoreError::config("solver.max_iter", "must be >= 1"));
        }
        for (v, name) in [
            (self.c_mg0, "initial.c_mg0"),
            (self.c_cl0, "initial.c_cl0"),
            (self.c_oh0, "initial.c_oh0"),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(CoreError::config(name, "must be a non-negative finite value"));
            }
        }
        if let Some(cal) = &self.calibration {
            cal.validate()?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    grid: RawGrid,
    geometry: RawGeometry,
    materials: RawMaterials,
    initial: RawInitial,
    time: RawTime,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    levelset: RawLevelset,
    #[serde(default)]
    solver: RawSolver,
    calibration: Option<RawCalibration>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    /// Box size in mm.
    extent: [f64; 3],
    /// Node spacing in mm.
    spacing: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShape {
    shape: String,
    center: [f64; 3],
    half_sizes: Option<[f64; 3]>,
    radius: Option<f64>,
    axis: Option<[f64; 3]>,
    half_length: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    solids: Vec<RawShape>,
    #[serde(default)]
    cutouts: Vec<RawShape>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterials {
    d_mg: f64,
    k2: f64,
    beta: f64,
    gamma: f64,
    d_cl: Option<f64>,
    d_oh: Option<f64>,
    k1: Option<f64>,
    porosity: Option<f64>,
    tortuosity: Option<f64>,
    mg_sat: Option<f64>,
    mg_sol: Option<f64>,
    rho_film: Option<f64>,
    mg_0: Option<f64>,
    mg_mol: Option<f64>,
    temperature_k: Option<f64>,
    pressure_pa: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    c_mg0: Option<f64>,
    c_cl0: Option<f64>,
    ph0: Option<f64>,
    c_oh0: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: f64,
    t_end: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    snapshot_every: Option<usize>,
    ascii_vtk: Option<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawLevelset {
    reinit_every: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tol: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibration {
    free: Vec<RawFreeParam>,
    k2_grid: Vec<f64>,
    budget: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFreeParam {
    name: String,
    bounds: [f64; 2],
}

fn build_shape(raw: &RawShape, path: &str) -> Result<GeometrySpec> {
    match raw.shape.as_str() {
        "cuboid" => {
            let half_sizes = raw
                .half_sizes
                .ok_or_else(|| CoreError::config(format!("{path}.half_sizes"), "required for cuboid"))?;
            Ok(GeometrySpec::Cuboid {
                center: raw.center,
                half_sizes,
            })
        }
        "sphere" => {
            let radius = raw
                .radius
                .ok_or_else(|| CoreError::config(format!("{path}.radius"), "required for sphere"))?;
            Ok(GeometrySpec::Sphere {
                center: raw.center,
                radius,
            })
        }
        "cylinder" => {
            let radius = raw
                .radius
                .ok_or_else(|| CoreError::config(format!("{path}.radius"), "required for cylinder"))?;
            let axis = raw
                .axis
                .ok_or_else(|| CoreError::config(format!("{path}.axis"), "required for cylinder"))?;
            let half_length = raw
                .half_length
                .ok_or_else(|| CoreError::config(format!("{path}.half_length"), "required for cylinder"))?;
            Ok(GeometrySpec::Cylinder {
                center: raw.center,
                axis,
                radius,
                half_length,
            })
        }
        other => Err(CoreError::config(
            format!("{path}.shape"),
            format!("unknown shape `{other}` (expected cuboid, sphere or cylinder)"),
        )),
    }
}

fn build_geometry(raw: &RawGeometry) -> Result<GeometrySpec> {
    if raw.solids.is_empty() {
        return Err(CoreError::config("geometry.solids", "at least one solid is required"));
    }
    let mut spec: Option<GeometrySpec> = None;
    for (i, s) in raw.solids.iter().enumerate() {
        let shape = build_shape(s, &format!("geometry.solids[{i}]"))?;
        spec = Some(match spec {
            None => shape,
            Some(acc) => GeometrySpec::union(acc, shape),
        });
    }
    let mut spec = spec.expect("non-empty solids");
    for (i, c) in raw.cutouts.iter().enumerate() {
        let shape = build_shape(c, &format!("geometry.cutouts[{i}]"))?;
        spec = GeometrySpec::difference(spec, shape);
    }
    Ok(spec)
}

fn build_config(raw: RawConfig) -> Result<SimConfig> {
    let defaults = MaterialParams::nacl();
    let materials = MaterialParams {
        d_mg: raw.materials.d_mg,
        k2: raw.materials.k2,
        beta: raw.materials.beta,
        gamma: raw.materials.gamma,
        d_cl: raw.materials.d_cl.unwrap_or(defaults.d_cl),
        d_oh: raw.materials.d_oh.unwrap_or(defaults.d_oh),
        k1: raw.materials.k1.unwrap_or(defaults.k1),
        porosity: raw.materials.porosity.unwrap_or(defaults.porosity),
        tortuosity: raw.materials.tortuosity.unwrap_or(defaults.tortuosity),
        mg_sat: raw.materials.mg_sat.unwrap_or(defaults.mg_sat),
        mg_sol: raw.materials.mg_sol.unwrap_or(defaults.mg_sol),
        rho_film: raw.materials.rho_film.unwrap_or(defaults.rho_film),
        mg_0: raw.materials.mg_0.unwrap_or(defaults.mg_0),
        mg_mol: raw.materials.mg_mol.unwrap_or(defaults.mg_mol),
        temperature: raw.materials.temperature_k.unwrap_or(defaults.temperature),
        pressure: raw.materials.pressure_pa.unwrap_or(defaults.pressure),
    };

    let c_oh0 = match (raw.initial.ph0, raw.initial.c_oh0) {
        (Some(_), Some(_)) => {
            return Err(CoreError::config(
                "initial",
                "specify exactly one of ph0 and c_oh0, not both",
            ));
        }
        (Some(ph), None) => {
            if !(0.0..=14.0).contains(&ph) {
                return Err(CoreError::config("initial.ph0", "must lie in [0, 14]"));
            }
            oh_concentration_for_ph(ph)
        }
        (None, Some(c)) => c,
        (None, None) => {
            return Err(CoreError::config("initial", "one of ph0 or c_oh0 is required"));
        }
    };

    let calibration = match raw.calibration {
        None => None,
        Some(rc) => {
            let mut free = Vec::new();
            for (i, p) in rc.free.iter().enumerate() {
                let name: CalibratedParam = p.name.parse().map_err(|e: String| {
                    CoreError::config(format!("calibration.free[{i}].name"), e)
                })?;
                free.push(FreeParameter {
                    name,
                    bounds: (p.bounds[0], p.bounds[1]),
                });
            }
            Some(CalibrationSettings {
                free,
                k2_grid: rc.k2_grid,
                budget: rc.budget,
            })
        }
    };

    let config = SimConfig {
        extent: raw.grid.extent,
        spacing: raw.grid.spacing,
        geometry: build_geometry(&raw.geometry)?,
        materials,
        c_mg0: raw.initial.c_mg0.unwrap_or(0.0),
        c_cl0: raw.initial.c_cl0.unwrap_or(5.175e-6),
        c_oh0,
        dt: raw.time.dt,
        t_end: raw.time.t_end,
        snapshot_every: raw.output.snapshot_every.unwrap_or(1),
        reinit_every: raw.levelset.reinit_every.unwrap_or(10),
        solver: SolverOptions {
            tol: raw.solver.tol.unwrap_or(1e-9),
            max_iter: raw.solver.max_iter.unwrap_or(10_000),
        },
        seed: raw.seed.unwrap_or(0),
        ascii_vtk: raw.output.ascii_vtk.unwrap_or(false),
        calibration,
    };
    config.validate()?;
    Ok(config)
}

/// Parses a TOML config string.
pub fn parse_config(text: &str, source_name: &str) -> Result<SimConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CoreError::Parse {
        file: source_name.to_string(),
        message: e.to_string(),
    })?;
    build_config(raw)
}

/// Loads and validates a TOML config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::io(format!("reading config {}", path.display()), e))?;
    parse_config(&text, &path.display().to_string())
}
