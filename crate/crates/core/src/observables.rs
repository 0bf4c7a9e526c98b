//! Derived quantities: mass loss, evolved hydrogen, pH fields and averages,
//! line probes.

use crate::error::{CoreError, Result};
use crate::geometry::{volume_positive, LevelSetField};
use crate::grid::{ScalarField, Unit};
use crate::transport::MaterialParams;

/// Universal gas constant, J/(mol·K).
pub const GAS_CONSTANT: f64 = 8.314;
/// Molar mass of the hydroxide ion, g/mol.
pub const OH_MOLAR_MASS: f64 = 17.008;

/// One record of the simulation time series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesRow {
    pub time_h: f64,
    pub mass_lost_g: f64,
    pub hydrogen_ml: f64,
    pub avg_ph: f64,
    pub solid_volume_mm3: f64,
}

/// Time-ordered observable records; times strictly increase and the cumulative
/// columns never decrease.
#[derive(Clone, Debug, Default)]
pub struct TimeSeries {
    rows: Vec<SeriesRow>,
}

impl TimeSeries {
    pub fn new() -> Self {
        TimeSeries { rows: Vec::new() }
    }

    pub fn push(&mut self, row: SeriesRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.time_h <= last.time_h {
                return Err(CoreError::invalid(format!(
                    "time series must be strictly increasing: {} after {}",
                    row.time_h, last.time_h
                )));
            }
            if row.mass_lost_g < last.mass_lost_g {
                return Err(CoreError::invalid("mass_lost must be non-decreasing"));
            }
            if row.hydrogen_ml < last.hydrogen_ml {
                return Err(CoreError::invalid("hydrogen must be non-decreasing"));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[SeriesRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Linear interpolation of the hydrogen column at an arbitrary time
    /// inside the covered range; clamped at the ends.
    pub fn hydrogen_at(&self, t: f64) -> Result<f64> {
        if self.rows.is_empty() {
            return Err(CoreError::invalid("empty time series"));
        }
        if t <= self.rows[0].time_h {
            return Ok(self.rows[0].hydrogen_ml);
        }
        if t >= self.rows[self.rows.len() - 1].time_h {
            return Ok(self.rows[self.rows.len() - 1].hydrogen_ml);
        }
        let pos = self.rows.partition_point(|r| r.time_h < t);
        let (a, b) = (&self.rows[pos - 1], &self.rows[pos]);
        let w = (t - a.time_h) / (b.time_h - a.time_h);
        Ok(a.hydrogen_ml + w * (b.hydrogen_ml - a.hydrogen_ml))
    }
}

/// Dissolved solid mass [Mg]_sol · (V₊(0) − V₊(t)) in grams, positive for
/// dissolution.
pub fn mass_loss(phi_t: &LevelSetField, phi_0: &LevelSetField, params: &MaterialParams) -> Result<f64> {
    if phi_t.grid() != phi_0.grid() {
        return Err(CoreError::invalid("mass_loss: level sets on different grids"));
    }
    Ok(params.mg_sol * (volume_positive(phi_0) - volume_positive(phi_t)))
}

/// Evolved hydrogen volume in mL from the dissolved mass, via the ideal gas
/// law at one mole of gas per mole of corroded Mg.
pub fn hydrogen_volume(mass_lost: f64, params: &MaterialParams) -> f64 {
    // m³ → mL
    (mass_lost / params.mg_mol) * GAS_CONSTANT * params.temperature / params.pressure * 1e6
}

fn ph_of_concentration(c_oh: f64, floor: f64) -> f64 {
    let c = c_oh.max(floor);
    // g/mm³ → mol/L
    14.0 + (c * 1e6 / OH_MOLAR_MASS).log10()
}

/// OH⁻ concentration for a given pH, inverse of the pH map (g/mm³).
pub fn oh_concentration_for_ph(ph: f64) -> f64 {
    10f64.powf(ph - 14.0) * OH_MOLAR_MASS * 1e-6
}

/// Pointwise pH field; zero concentrations are floored at `floor_conc`
/// (normally the configured initial OH⁻ level) since the model carries no
/// autoionization term.
pub fn ph_field(c_oh: &ScalarField, floor_conc: f64) -> ScalarField {
    let g = *c_oh.grid();
    let values = c_oh
        .values()
        .iter()
        .map(|&v| ph_of_concentration(v, floor_conc))
        .collect();
    ScalarField::from_values(g, Unit::Dimensionless, values).expect("ph values finite")
}

/// pH of the volume-averaged OH⁻ concentration over the fluid region
/// (φ < 0): the concentration is averaged first, then mapped through the pH
/// relation, because concentration is the conserved quantity.
pub fn avg_ph(c_oh: &ScalarField, phi: &LevelSetField, floor_conc: f64) -> Result<f64> {
    if c_oh.grid() != phi.grid() {
        return Err(CoreError::invalid("avg_ph: fields on different grids"));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (v, p) in c_oh.values().iter().zip(phi.values()) {
        if *p < 0.0 {
            sum += v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(CoreError::invalid("avg_ph: no fluid region (phi >= 0 everywhere)"));
    }
    Ok(ph_of_concentration(sum / count as f64, floor_conc))
}

/// Samples a field at `n` equally spaced points from `p0` to `p1`; returns
/// (distance from p0, value) pairs.
pub fn probe_line(
    field: &ScalarField,
    p0: [f64; 3],
    p1: [f64; 3],
    n_samples: usize,
) -> Result<Vec<(f64, f64)>> {
    if n_samples < 2 {
        return Err(CoreError::invalid("probe_line: need at least 2 samples"));
    }
    if p0 == p1 {
        return Err(CoreError::invalid("probe_line: endpoints must differ"));
    }
    let g = field.grid();
    for p in [p0, p1] {
        if !g.contains(p) {
            return Err(CoreError::OutOfDomain(p[0], p[1], p[2]));
        }
    }
    let len = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2) + (p1[2] - p0[2]).powi(2)).sqrt();
    let mut out = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        let t = s as f64 / (n_samples - 1) as f64;
        let p = [
            p0[0] + t * (p1[0] - p0[0]),
            p0[1] + t * (p1[1] - p0[1]),
            p0[2] + t * (p1[2] - p0[2]),
        ];
        let (q, _) = g.clamp_point(p);
        out.push((t * len, field.sample(q)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sdf_build, GeometrySpec};
    use crate::grid::{make_grid, StructuredGrid};

    fn params() -> MaterialParams {
        MaterialParams::nacl()
    }

    #[test]
    fn mass_loss_zero_when_unchanged() {
        let g = make_grid([10.0, 10.0, 10.0], 0.5).unwrap();
        let spec = GeometrySpec::Sphere {
            center: [5.0, 5.0, 5.0],
            radius: 3.0,
        };
        let phi = sdf_build(&spec, &g).unwrap();
        assert_eq!(mass_loss(&phi, &phi, &params()).unwrap(), 0.0);
    }

    #[test]
    fn mass_loss_of_thinned_slab_matches_analytic() {
        // slab thinned by delta = 0.2 on both large faces, resolved at h = 0.1
        let g = make_grid([62.0, 23.0, 2.0], 0.1).unwrap();
        let thick = GeometrySpec::Cuboid {
            center: [31.0, 11.5, 1.0],
            half_sizes: [30.0, 10.5, 0.4],
        };
        let thin = GeometrySpec::Cuboid {
            center: [31.0, 11.5, 1.0],
            half_sizes: [30.0, 10.5, 0.2],
        };
        let phi0 = sdf_build(&thick, &g).unwrap();
        let phi1 = sdf_build(&thin, &g).unwrap();
        let p = params();
        let loss = mass_loss(&phi1, &phi0, &p).unwrap();
        let exact = p.mg_sol * 2.0 * 0.2 * (60.0 * 21.0);
        assert!(
            (loss - exact).abs() / exact < 0.02,
            "loss {loss} vs exact {exact}"
        );
    }

    #[test]
    fn full_dissolution_of_paper_sheet_mass() {
        // arithmetic check of the magnitude convention
        let p = params();
        let v = 60.0 * 21.0 * 0.2;
        let m = p.mg_sol * v;
        assert!((m - 0.43722).abs() < 1e-5);
    }

    #[test]
    fn mass_loss_invariant_under_rigid_translation() {
        let g = make_grid([16.0, 16.0, 8.0], 0.125).unwrap();
        let slab = |shift: [f64; 3], half_z: f64| GeometrySpec::Cuboid {
            center: [8.0 + shift[0], 8.0 + shift[1], 4.0 + shift[2]],
            half_sizes: [3.0, 3.0, half_z],
        };
        let p = params();
        let base = mass_loss(
            &sdf_build(&slab([0.0; 3], 0.8), &g).unwrap(),
            &sdf_build(&slab([0.0; 3], 1.0), &g).unwrap(),
            &p,
        )
        .unwrap();
        // the same pair of solids, rigidly shifted by a sub-cell offset
        let shift = [0.13, -0.31, 0.07];
        let moved = mass_loss(
            &sdf_build(&slab(shift, 0.8), &g).unwrap(),
            &sdf_build(&slab(shift, 1.0), &g).unwrap(),
            &p,
        )
        .unwrap();
        assert!(
            (moved - base).abs() / base < 0.01,
            "translated loss {moved} vs {base}"
        );
    }

    #[test]
    fn hydrogen_volume_examples() {
        let p = params();
        assert_eq!(hydrogen_volume(0.0, &p), 0.0);
        let v = hydrogen_volume(0.5, &p);
        assert!((v - 498.2).abs() < 1.0, "hydrogen volume {v}");
        let v2 = hydrogen_volume(1.0, &p);
        assert!((v2 - 2.0 * v).abs() < 1e-9 * v2);
    }

    #[test]
    fn ph_field_examples() {
        let g = make_grid([2.0, 2.0, 2.0], 1.0).unwrap();
        // 1e-7 mol/L -> pH 7
        let c7 = 1e-7 * OH_MOLAR_MASS * 1e-6;
        let f = ph_field(&ScalarField::constant(g, Unit::Concentration, c7), 1e-20);
        assert!((f.values()[0] - 7.0).abs() < 1e-10);
        // 1e-4 mol/L -> pH 10
        let c10 = 1e-4 * OH_MOLAR_MASS * 1e-6;
        let f = ph_field(&ScalarField::constant(g, Unit::Concentration, c10), 1e-20);
        assert!((f.values()[0] - 10.0).abs() < 1e-10);
        // configured from an initial pH of 5.6, the field reads back 5.6
        let c = oh_concentration_for_ph(5.6);
        let f = ph_field(&ScalarField::constant(g, Unit::Concentration, c), c);
        for &v in f.values() {
            assert!((v - 5.6).abs() < 1e-10);
        }
    }

    #[test]
    fn ph_floor_applies_to_zero_concentration() {
        let g = make_grid([2.0, 2.0, 2.0], 1.0).unwrap();
        let floor = oh_concentration_for_ph(5.6);
        let f = ph_field(&ScalarField::constant(g, Unit::Concentration, 0.0), floor);
        assert!((f.values()[0] - 5.6).abs() < 1e-10);
    }

    fn half_and_half(g: StructuredGrid, lo: f64, hi: f64) -> ScalarField {
        let half_x = g.origin[0] + g.h * ((g.nx - 1) / 2) as f64;
        ScalarField::from_fn(g, Unit::Concentration, |p| if p[0] <= half_x { lo } else { hi })
    }

    #[test]
    fn avg_ph_averages_concentration_not_ph() {
        let g = make_grid([7.0, 3.0, 3.0], 1.0).unwrap();
        let phi =
            LevelSetField::from_field(ScalarField::constant(g, Unit::Length, -1.0)).unwrap();
        let c_hi = 1e-4 * OH_MOLAR_MASS * 1e-6;
        let c_lo = 1e-6 * OH_MOLAR_MASS * 1e-6;
        let c = half_and_half(g, c_hi, c_lo);
        let ph = avg_ph(&c, &phi, 1e-20).unwrap();
        // mean concentration 5.05e-5 mol/L -> pH 9.7033
        assert!((ph - 9.7033).abs() < 1e-3, "avg pH {ph}");
    }

    #[test]
    fn avg_ph_uniform_matches_pointwise() {
        let g = make_grid([4.0, 4.0, 4.0], 1.0).unwrap();
        let phi =
            LevelSetField::from_field(ScalarField::constant(g, Unit::Length, -1.0)).unwrap();
        let c = 1e-5 * OH_MOLAR_MASS * 1e-6;
        let field = ScalarField::constant(g, Unit::Concentration, c);
        let a = avg_ph(&field, &phi, 1e-20).unwrap();
        let f = ph_field(&field, 1e-20);
        assert!((a - f.values()[7]).abs() < 1e-12);
    }

    #[test]
    fn avg_ph_two_quadrature_routes_agree() {
        let g = make_grid([6.0, 4.0, 4.0], 0.5).unwrap();
        let phi = LevelSetField::from_field(ScalarField::from_fn(g, Unit::Length, |p| 2.0 - p[0]))
            .unwrap();
        let c = ScalarField::from_fn(g, Unit::Concentration, |p| 1e-9 * (1.0 + p[0] * 0.3 + p[1] * 0.1));
        let route_a = avg_ph(&c, &phi, 1e-20).unwrap();
        // independent route: explicit volume integral over fluid nodes x h³
        let cell = g.h * g.h * g.h;
        let mut mass = 0.0;
        let mut vol = 0.0;
        for (v, p) in c.values().iter().zip(phi.values()) {
            if *p < 0.0 {
                mass += v * cell;
                vol += cell;
            }
        }
        let route_b = 14.0 + ((mass / vol) * 1e6 / OH_MOLAR_MASS).log10();
        assert!(
            (route_a - route_b).abs() <= 1e-12 * route_a.abs(),
            "{route_a} vs {route_b}"
        );
    }

    #[test]
    fn avg_ph_without_fluid_region_errors() {
        let g = make_grid([2.0, 2.0, 2.0], 1.0).unwrap();
        let phi = LevelSetField::from_field(ScalarField::constant(g, Unit::Length, 1.0)).unwrap();
        let c = ScalarField::constant(g, Unit::Concentration, 1e-9);
        assert!(avg_ph(&c, &phi, 1e-20).is_err());
    }

    #[test]
    fn probe_line_basics() {
        let g = make_grid([4.0, 4.0, 4.0], 0.5).unwrap();
        let c = ScalarField::constant(g, Unit::Dimensionless, 2.5);
        let samples = probe_line(&c, [0.0, 0.0, 0.0], [4.0, 4.0, 4.0], 5).unwrap();
        assert_eq!(samples.len(), 5);
        assert!(samples.iter().all(|&(_, v)| v == 2.5));

        let ramp = ScalarField::from_fn(g, Unit::Dimensionless, |p| p[0]);
        let samples = probe_line(&ramp, [0.0, 2.0, 2.0], [4.0, 2.0, 2.0], 9).unwrap();
        for (s, (d, v)) in samples.iter().enumerate() {
            assert!((d - 0.5 * s as f64).abs() < 1e-12);
            assert!((v - 0.5 * s as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_line_rejects_bad_input() {
        let g = make_grid([4.0, 4.0, 4.0], 0.5).unwrap();
        let c = ScalarField::constant(g, Unit::Dimensionless, 0.0);
        assert!(probe_line(&c, [0.0; 3], [0.0; 3], 5).is_err());
        assert!(probe_line(&c, [0.0; 3], [5.0, 0.0, 0.0], 5).is_err());
        assert!(probe_line(&c, [0.0; 3], [1.0, 1.0, 1.0], 1).is_err());
    }

    #[test]
    fn series_invariants_enforced() {
        let mut ts = TimeSeries::new();
        ts.push(SeriesRow {
            time_h: 0.0,
            mass_lost_g: 0.0,
            hydrogen_ml: 0.0,
            avg_ph: 5.6,
            solid_volume_mm3: 100.0,
        })
        .unwrap();
        assert!(ts
            .push(SeriesRow {
                time_h: 0.0,
                mass_lost_g: 0.1,
                hydrogen_ml: 1.0,
                avg_ph: 5.6,
                solid_volume_mm3: 99.0,
            })
            .is_err());
        assert!(ts
            .push(SeriesRow {
                time_h: 1.0,
                mass_lost_g: -0.1,
                hydrogen_ml: 0.0,
                avg_ph: 5.6,
                solid_volume_mm3: 100.0,
            })
            .is_err());
        ts.push(SeriesRow {
            time_h: 1.0,
            mass_lost_g: 0.2,
            hydrogen_ml: 2.0,
            avg_ph: 5.9,
            solid_volume_mm3: 98.0,
        })
        .unwrap();
        assert!((ts.hydrogen_at(0.5).unwrap() - 1.0).abs() < 1e-12);
    }
}
