//! Implicit solid geometry: signed-distance constructors for primitives and
//! min/max composites, the level-set field type, and smoothed volume
//! integrals.
//!
//! Sign convention throughout the crate: φ > 0 inside the solid, φ < 0 in the
//! surrounding medium, φ = 0 on the corrosion front.

use crate::error::{CoreError, Result};
use crate::grid::{ScalarField, StructuredGrid, Unit};

/// Implicit solid built from primitives combined by union/difference.
///
/// `signed_distance` is exact for single primitives; composites use the
/// standard min/max approximation (inside-positive: union = max,
/// difference = min(a, -b)).
#[derive(Clone, Debug, PartialEq)]
pub enum GeometrySpec {
    Cuboid {
        center: [f64; 3],
        half_sizes: [f64; 3],
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    /// Finite capped cylinder; `axis` need not be normalized.
    Cylinder {
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        half_length: f64,
    },
    Union(Box<GeometrySpec>, Box<GeometrySpec>),
    Difference(Box<GeometrySpec>, Box<GeometrySpec>),
}

impl GeometrySpec {
    pub fn union(a: GeometrySpec, b: GeometrySpec) -> GeometrySpec {
        GeometrySpec::Union(Box::new(a), Box::new(b))
    }

    pub fn difference(a: GeometrySpec, b: GeometrySpec) -> GeometrySpec {
        GeometrySpec::Difference(Box::new(a), Box::new(b))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GeometrySpec::Cuboid { center, half_sizes } => {
                check_finite(center, "cuboid center")?;
                check_finite(half_sizes, "cuboid half_sizes")?;
                if half_sizes.iter().any(|&s| s <= 0.0) {
                    return Err(CoreError::invalid("cuboid half_sizes must be positive"));
                }
            }
            GeometrySpec::Sphere { center, radius } => {
                check_finite(center, "sphere center")?;
                if !(*radius > 0.0) {
                    return Err(CoreError::invalid("sphere radius must be positive"));
                }
            }
            GeometrySpec::Cylinder {
                center,
                axis,
                radius,
                half_length,
            } => {
                check_finite(center, "cylinder center")?;
                check_finite(axis, "cylinder axis")?;
                if norm(axis) < 1e-12 {
                    return Err(CoreError::invalid("cylinder axis must be non-zero"));
                }
                if !(*radius > 0.0) || !(*half_length > 0.0) {
                    return Err(CoreError::invalid("cylinder radius and half_length must be positive"));
                }
            }
            GeometrySpec::Union(a, b) | GeometrySpec::Difference(a, b) => {
                a.validate()?;
                b.validate()?;
            }
        }
        Ok(())
    }

    /// Inside-positive signed distance to the composite surface.
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        match self {
            GeometrySpec::Sphere { center, radius } => radius - dist(p, *center),
            GeometrySpec::Cuboid { center, half_sizes } => {
                let q = [
                    (p[0] - center[0]).abs() - half_sizes[0],
                    (p[1] - center[1]).abs() - half_sizes[1],
                    (p[2] - center[2]).abs() - half_sizes[2],
                ];
                -box_outside_distance(q)
            }
            GeometrySpec::Cylinder {
                center,
                axis,
                radius,
                half_length,
            } => {
                let d = normalized(*axis);
                let r = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
                let a = r[0] * d[0] + r[1] * d[1] + r[2] * d[2];
                let radial = [r[0] - a * d[0], r[1] - a * d[1], r[2] - a * d[2]];
                let rho = norm(&radial);
                // 2D box problem in (radial, axial) coordinates
                let q0 = rho - radius;
                let q1 = a.abs() - half_length;
                let outside = (q0.max(0.0).powi(2) + q1.max(0.0).powi(2)).sqrt();
                let inside = q0.max(q1).min(0.0);
                -(outside + inside)
            }
            GeometrySpec::Union(a, b) => a.signed_distance(p).max(b.signed_distance(p)),
            GeometrySpec::Difference(a, b) => a.signed_distance(p).min(-b.signed_distance(p)),
        }
    }
}

fn check_finite(v: &[f64; 3], what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::invalid(format!("{what} must be finite")));
    }
    Ok(())
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn normalized(v: [f64; 3]) -> [f64; 3] {
    let n = norm(&v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Outside-positive exact box distance from componentwise offsets `q`.
fn box_outside_distance(q: [f64; 3]) -> f64 {
    let outside = (q[0].max(0.0).powi(2) + q[1].max(0.0).powi(2) + q[2].max(0.0).powi(2)).sqrt();
    let inside = q[0].max(q[1]).max(q[2]).min(0.0);
    outside + inside
}

/// Signed-distance level-set field; the zero iso-contour is the corrosion
/// front.
#[derive(Clone, Debug)]
pub struct LevelSetField {
    field: ScalarField,
    /// Half-width of the region around the zero contour where signed-distance
    /// accuracy is maintained.
    band_width: f64,
}

impl LevelSetField {
    /// Wraps a φ field, assigning the default 3h band.
    pub fn from_field(field: ScalarField) -> Result<Self> {
        if field.unit() != Unit::Length {
            return Err(CoreError::invalid("level-set field must carry length units"));
        }
        let band_width = 3.0 * field.grid().h;
        Ok(LevelSetField { field, band_width })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &StructuredGrid {
        self.field.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn band_width(&self) -> f64 {
        self.band_width
    }

    /// True if the node belongs to the solid region Ω₊ = {φ ≥ 0}.
    #[inline]
    pub fn is_solid(&self, idx: usize) -> bool {
        self.values()[idx] >= 0.0
    }
}

/// Evaluates the composite signed distance at every grid node.
pub fn sdf_build(spec: &GeometrySpec, grid: &StructuredGrid) -> Result<LevelSetField> {
    spec.validate()?;
    let field = ScalarField::from_fn(*grid, Unit::Length, |p| spec.signed_distance(p));
    LevelSetField::from_field(field)
}

/// Smoothed Heaviside with half-width `eps`:
/// 0 below -eps, 1 above eps, ½(1 + φ/ε + sin(πφ/ε)/π) between.
pub(crate) fn smoothed_heaviside(phi: f64, eps: f64) -> f64 {
    if phi < -eps {
        0.0
    } else if phi > eps {
        1.0
    } else {
        let t = phi / eps;
        0.5 * (1.0 + t + (std::f64::consts::PI * t).sin() / std::f64::consts::PI)
    }
}

/// Volume of the solid region Ω₊ via ∫ H_ε(φ) dV with ε = 1.5h.
pub fn volume_positive(phi: &LevelSetField) -> f64 {
    let g = phi.grid();
    let eps = 1.5 * g.h;
    let cell = g.h * g.h * g.h;
    phi.values().iter().map(|&v| smoothed_heaviside(v, eps)).sum::<f64>() * cell
}
