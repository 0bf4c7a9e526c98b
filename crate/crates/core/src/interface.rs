//! Corrosion-front tracking.
//!
//! The front is the zero contour of an inside-positive signed-distance field.
//! Its normal recession speed comes from the Rankine–Hugoniot mass balance
//! `V = Dᵉ ∇ₙC / ([Mg]_sol − [Mg]_sat)`, except on the very first step where
//! an optional Stefan-solution push `γ·2α/√dt` reproduces the fast initial
//! degradation seen in low-diffusion media. Transport of φ uses an explicit
//! Godunov upwind scheme; signed-distance structure is maintained by a
//! fast-sweeping eikonal solver seeded at interface crossings.

use crate::error::{CoreError, Result};
use crate::geometry::LevelSetField;
use crate::grid::{ScalarField, Unit};
use crate::transport::{effective_diffusivity, MaterialParams};
use statrs::function::erf::erfc;

/// Inputs of the 1D Stefan similarity solution.
#[derive(Clone, Copy, Debug)]
pub struct StefanParams {
    /// Initial interface position in mm.
    pub s0: f64,
    /// Mg²⁺ diffusivity in mm²/h.
    pub d: f64,
    /// Initial dissolved concentration in the medium, g/mm³.
    pub mg_0: f64,
    /// Saturation concentration held at the interface, g/mm³.
    pub mg_sat: f64,
    /// Solid bulk concentration (density), g/mm³.
    pub mg_sol: f64,
}

impl StefanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0) {
            return Err(CoreError::invalid("stefan: diffusivity must be positive"));
        }
        if !(self.mg_0 <= self.mg_sat && self.mg_sat < self.mg_sol) {
            return Err(CoreError::invalid(
                "stefan: need mg_0 <= mg_sat < mg_sol for a dissolving front",
            ));
        }
        Ok(())
    }

    pub fn from_materials(params: &MaterialParams) -> StefanParams {
        StefanParams {
            s0: 0.0,
            d: params.d_mg,
            mg_0: params.mg_0,
            mg_sat: params.mg_sat,
            mg_sol: params.mg_sol,
        }
    }
}

/// Similarity-equation residual for the dissolving front (solid on the
/// lower-coordinate side). The physical root is negative: the front recedes
/// into the solid.
fn stefan_residual(alpha: f64, p: &StefanParams) -> f64 {
    let k = (p.mg_0 - p.mg_sat) / (p.mg_sol - p.mg_sat);
    let u = alpha / p.d.sqrt();
    alpha - k * (p.d / std::f64::consts::PI).sqrt() * (-u * u).exp() / erfc(u)
}

/// Solves the similarity equation for the front coefficient α (mm/√h).
///
/// Safeguarded Newton iteration with a bisection fallback over the bracket
/// `[-√D, 0]`, converged to |residual| ≤ 1e-12.
pub fn stefan_alpha(p: &StefanParams) -> Result<f64> {
    p.validate()?;
    let k = (p.mg_0 - p.mg_sat) / (p.mg_sol - p.mg_sat);
    if k == 0.0 {
        return Ok(0.0);
    }
    let sqrt_d = p.d.sqrt();
    let (mut lo, mut hi) = (-sqrt_d, 0.0);
    let (flo, fhi) = (stefan_residual(lo, p), stefan_residual(hi, p));
    if flo.signum() == fhi.signum() {
        return Err(CoreError::RootNotFound(format!(
            "stefan residual has no sign change on [{lo}, {hi}]"
        )));
    }
    // keep lo as the negative-residual end
    if flo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }

    let spi = (p.d / std::f64::consts::PI).sqrt();
    let mut a = k * spi; // first fixed-point iterate, always inside the bracket
    let mut f = stefan_residual(a, p);
    for _ in 0..200 {
        if f.abs() <= 1e-13 {
            return Ok(a);
        }
        if f < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        // analytic derivative of the residual
        let u = a / sqrt_d;
        let e = (-u * u).exp() / erfc(u);
        let e_prime = -(2.0 * a / p.d) * e + (2.0 / (std::f64::consts::PI * p.d).sqrt()) * e * e;
        let fp = 1.0 - k * spi * e_prime;
        let mut next = a - f / fp;
        let (bmin, bmax) = (lo.min(hi), lo.max(hi));
        if !next.is_finite() || next <= bmin || next >= bmax {
            next = 0.5 * (lo + hi);
        }
        a = next;
        f = stefan_residual(a, p);
    }
    if f.abs() <= 1e-12 {
        Ok(a)
    } else {
        Err(CoreError::RootNotFound(format!(
            "stefan newton stalled at residual {f:.3e}"
        )))
    }
}

/// Front position `s0 + 2α√t` of the 1D similarity solution.
pub fn stefan_front(s0: f64, alpha: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    s0 + 2.0 * alpha * t.max(0.0).sqrt()
}

/// Normal recession speed of the front, one value per node (mm/h).
///
/// Positive values dissolve the solid. Only meaningful on the interface band;
/// extended off the band constant along normals.
#[derive(Clone, Debug)]
pub struct VelocityField {
    values: ScalarField,
}

impl VelocityField {
    pub fn from_field(values: ScalarField) -> Self {
        VelocityField { values }
    }

    pub fn values(&self) -> &[f64] {
        self.values.values()
    }

    pub fn field(&self) -> &ScalarField {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Central-difference gradient of φ at one node, one-sided at box faces.
fn phi_gradient(phi: &LevelSetField, i: usize, j: usize, k: usize) -> [f64; 3] {
    let g = phi.grid();
    let v = phi.values();
    let h = g.h;
    let diff = |lo: Option<usize>, hi: Option<usize>, c: usize| -> f64 {
        match (lo, hi) {
            (Some(l), Some(u)) => (v[u] - v[l]) / (2.0 * h),
            (None, Some(u)) => (v[u] - v[c]) / h,
            (Some(l), None) => (v[c] - v[l]) / h,
            (None, None) => 0.0,
        }
    };
    let c = g.index(i, j, k);
    [
        diff(
            (i > 0).then(|| g.index(i - 1, j, k)),
            (i + 1 < g.nx).then(|| g.index(i + 1, j, k)),
            c,
        ),
        diff(
            (j > 0).then(|| g.index(i, j - 1, k)),
            (j + 1 < g.ny).then(|| g.index(i, j + 1, k)),
            c,
        ),
        diff(
            (k > 0).then(|| g.index(i, j, k - 1)),
            (k + 1 < g.nz).then(|| g.index(i, j, k + 1)),
            c,
        ),
    ]
}

/// Offset one-sided normal gradient of the Mg²⁺ concentration on the band:
/// `∇ₙC = (C(x* + h·n) − C(x* + 2h·n)) / h` with the outward normal
/// `n = −∇φ/|∇φ|` and `x* = x + φ·n` the node projected onto the front, so
/// both samples sit at fixed distances from the interface itself. Anchoring
/// at the front keeps the value constant along normals across the band.
/// Zero outside the band; samples falling outside the box are clamped and
/// counted.
pub fn interface_gradient(c_mg: &ScalarField, phi: &LevelSetField) -> Result<(ScalarField, u64)> {
    let g = *phi.grid();
    if c_mg.grid() != &g {
        return Err(CoreError::invalid("interface_gradient: fields on different grids"));
    }
    let h = g.h;
    let band = phi.band_width();
    let mut out = ScalarField::constant(g, Unit::Dimensionless, 0.0);
    let mut clamped: u64 = 0;
    for k in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = g.index(i, j, k);
                let dist = phi.values()[idx];
                if dist.abs() > band {
                    continue;
                }
                let grad = phi_gradient(phi, i, j, k);
                let norm = (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]).sqrt();
                if norm < 1e-12 {
                    continue;
                }
                let n = [-grad[0] / norm, -grad[1] / norm, -grad[2] / norm];
                let x = g.node_pos(i, j, k);
                let front = [x[0] + dist * n[0], x[1] + dist * n[1], x[2] + dist * n[2]];
                let mut sample = |scale: f64| -> Result<f64> {
                    let p = [
                        front[0] + scale * h * n[0],
                        front[1] + scale * h * n[1],
                        front[2] + scale * h * n[2],
                    ];
                    let (q, moved) = g.clamp_point(p);
                    if moved {
                        clamped += 1;
                    }
                    c_mg.sample(q)
                };
                let c1 = sample(1.0)?;
                let c2 = sample(2.0)?;
                out.values_mut()[idx] = (c1 - c2) / h;
            }
        }
    }
    Ok((out, clamped))
}

/// Marks nodes adjacent to a sign change of φ (or exactly on the contour).
fn crossing_layer(phi: &LevelSetField) -> Vec<bool> {
    let g = *phi.grid();
    let v = phi.values();
    let solid = |x: f64| x >= 0.0;
    let mut layer = vec![false; g.node_count()];
    for k in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = g.index(i, j, k);
                let s = solid(v[idx]);
                let mut near = v[idx] == 0.0;
                let mut check = |nb: usize| {
                    if solid(v[nb]) != s {
                        near = true;
                    }
                };
                if i > 0 {
                    check(g.index(i - 1, j, k));
                }
                if i + 1 < g.nx {
                    check(g.index(i + 1, j, k));
                }
                if j > 0 {
                    check(g.index(i, j - 1, k));
                }
                if j + 1 < g.ny {
                    check(g.index(i, j + 1, k));
                }
                if k > 0 {
                    check(g.index(i, j, k - 1));
                }
                if k + 1 < g.nz {
                    check(g.index(i, j, k + 1));
                }
                layer[idx] = near;
            }
        }
    }
    layer
}

/// Extends values held on `core` nodes over the rest of the grid so the field
/// is constant along normals, processing nodes in increasing |φ| and
/// averaging over already-known neighbors weighted by the |φ| drop toward the
/// interface.
fn extend_along_normals(values: &mut [f64], phi: &LevelSetField, core: &[bool]) {
    let g = *phi.grid();
    let pv = phi.values();
    let mut order: Vec<usize> = (0..g.node_count()).filter(|&i| !core[i]).collect();
    order.sort_by(|&a, &b| {
        pv[a].abs()
            .partial_cmp(&pv[b].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for idx in order {
        let (i, j, k) = g.unravel(idx);
        let me = pv[idx].abs();
        let mut wsum = 0.0;
        let mut acc = 0.0;
        let mut visit = |nb: usize| {
            let d = me - pv[nb].abs();
            if d > 0.0 {
                wsum += d;
                acc += d * values[nb];
            }
        };
        if i > 0 {
            visit(g.index(i - 1, j, k));
        }
        if i + 1 < g.nx {
            visit(g.index(i + 1, j, k));
        }
        if j > 0 {
            visit(g.index(i, j - 1, k));
        }
        if j + 1 < g.ny {
            visit(g.index(i, j + 1, k));
        }
        if k > 0 {
            visit(g.index(i, j, k - 1));
        }
        if k + 1 < g.nz {
            visit(g.index(i, j, k + 1));
        }
        values[idx] = if wsum > 0.0 { acc / wsum } else { 0.0 };
    }
}

/// Normal front velocity per Rankine–Hugoniot, with the first-step γ-push.
///
/// On `step_index == 0` with γ > 0 the whole band moves at `γ·2|α|/√dt`
/// (the Stefan branch, evaluated at t := dt to avoid the t = 0 singularity);
/// otherwise `V = Dᵉ_Mg ∇ₙC / (mg_sol − mg_sat)`, positive for dissolution.
/// Returns the field plus the count of clamped gradient samples.
pub fn normal_velocity(
    c_mg: &ScalarField,
    c_film: &ScalarField,
    phi: &LevelSetField,
    params: &MaterialParams,
    step_index: usize,
    dt: f64,
) -> Result<(VelocityField, u64)> {
    let g = *phi.grid();
    if !(dt > 0.0) {
        return Err(CoreError::invalid("normal_velocity: dt must be positive"));
    }
    if step_index == 0 && params.gamma > 0.0 {
        let alpha = stefan_alpha(&StefanParams::from_materials(params))?;
        let v = params.gamma * 2.0 * alpha.abs() / dt.sqrt();
        let field = ScalarField::constant(g, Unit::Velocity, v);
        return Ok((VelocityField::from_field(field), 0));
    }

    let (grad, clamped) = interface_gradient(c_mg, phi)?;
    let denom = params.mg_sol - params.mg_sat;
    // evaluate the Rankine-Hugoniot speed on the crossing-adjacent layer and
    // extend it constant along normals over band and far field alike; a
    // velocity that varies along normals would stretch the distance function
    // every step
    let core = crossing_layer(phi);
    let mut values = vec![0.0; g.node_count()];
    for idx in 0..g.node_count() {
        if core[idx] {
            let d_eff = effective_diffusivity(params.d_mg, c_film.values()[idx], params);
            values[idx] = d_eff * grad.values()[idx] / denom;
        }
    }
    extend_along_normals(&mut values, phi, &core);
    let field = ScalarField::from_values(g, Unit::Velocity, values)?;
    Ok((VelocityField::from_field(field), clamped))
}

/// One explicit Godunov upwind step of ∂φ/∂t + V|∇φ| = 0.
///
/// Fails the CFL precondition max|V|·dt ≤ 0.9h instead of subcycling; the
/// simulation driver splits the step.
pub fn advect(phi: &LevelSetField, vel: &VelocityField, dt: f64) -> Result<LevelSetField> {
    let g = *phi.grid();
    if vel.field().grid() != &g {
        return Err(CoreError::invalid("advect: velocity on a different grid"));
    }
    if !(dt > 0.0) {
        return Err(CoreError::invalid("advect: dt must be positive"));
    }
    let h = g.h;
    let vmax = vel.max_abs();
    if vmax * dt > 0.9 * h * (1.0 + 1e-12) {
        return Err(CoreError::invalid(format!(
            "advect: CFL violation, max|V|*dt = {:.3e} exceeds 0.9h = {:.3e}",
            vmax * dt,
            0.9 * h
        )));
    }

    let v = phi.values();
    let vels = vel.values();
    let mut out = vec![0.0; g.node_count()];
    for k in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = g.index(i, j, k);
                let c = v[idx];
                let dm = |nb: Option<usize>| nb.map_or(0.0, |l| (c - v[l]) / h);
                let dp = |nb: Option<usize>| nb.map_or(0.0, |u| (v[u] - c) / h);
                let xm = dm((i > 0).then(|| g.index(i - 1, j, k)));
                let xp = dp((i + 1 < g.nx).then(|| g.index(i + 1, j, k)));
                let ym = dm((j > 0).then(|| g.index(i, j - 1, k)));
                let yp = dp((j + 1 < g.ny).then(|| g.index(i, j + 1, k)));
                let zm = dm((k > 0).then(|| g.index(i, j, k - 1)));
                let zp = dp((k + 1 < g.nz).then(|| g.index(i, j, k + 1)));
                let speed = vels[idx];
                let grad2 = if speed > 0.0 {
                    xm.max(0.0).powi(2)
                        + xp.min(0.0).powi(2)
                        + ym.max(0.0).powi(2)
                        + yp.min(0.0).powi(2)
                        + zm.max(0.0).powi(2)
                        + zp.min(0.0).powi(2)
                } else {
                    xm.min(0.0).powi(2)
                        + xp.max(0.0).powi(2)
                        + ym.min(0.0).powi(2)
                        + yp.max(0.0).powi(2)
                        + zm.min(0.0).powi(2)
                        + zp.max(0.0).powi(2)
                };
                out[idx] = c - dt * speed * grad2.sqrt();
            }
        }
    }
    LevelSetField::from_field(ScalarField::from_values(g, Unit::Length, out)?)
}

/// Result of [`reinitialize`].
#[derive(Clone, Debug)]
pub struct ReinitOutcome {
    pub phi: LevelSetField,
    /// Set when the input had uniform sign; the field is returned unchanged.
    pub no_interface: bool,
    /// Set when the band already carried a unit gradient and the sweep was
    /// skipped.
    pub skipped: bool,
}

/// Zhao's single-node eikonal update from sorted axis minima a ≤ b ≤ c.
fn eikonal_update(a: f64, b: f64, c: f64, h: f64) -> f64 {
    let mut x = a + h;
    if x > b {
        let disc = 2.0 * h * h - (a - b) * (a - b);
        x = 0.5 * (a + b + disc.sqrt());
        if x > c {
            let s = a + b + c;
            let disc3 = s * s - 3.0 * (a * a + b * b + c * c - h * h);
            if disc3 >= 0.0 {
                x = (s + disc3.sqrt()) / 3.0;
            }
        }
    }
    x
}

fn sort3(mut a: f64, mut b: f64, mut c: f64) -> (f64, f64, f64) {
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    if b > c {
        std::mem::swap(&mut b, &mut c);
    }
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    (a, b, c)
}

/// Rebuilds signed-distance structure around the current zero contour.
///
/// Interface-adjacent nodes are seeded from the sub-cell crossing positions
/// of their sign-change edges (h·|φᵢ|/|φᵢ−φⱼ| per axis, combined across axes),
/// which leaves the interpolated zero contour exactly in place regardless of
/// how far |∇φ| has drifted; a fast-sweeping eikonal solve then fills the
/// rest of the grid. Inputs whose band gradient is already near unity are
/// returned untouched.
pub fn reinitialize(phi: &LevelSetField) -> Result<ReinitOutcome> {
    let g = *phi.grid();
    let v = phi.values();
    let n = g.node_count();
    let h = g.h;

    let has_pos = v.iter().any(|&x| x >= 0.0);
    let has_neg = v.iter().any(|&x| x < 0.0);
    if !(has_pos && has_neg) {
        return Ok(ReinitOutcome {
            phi: phi.clone(),
            no_interface: true,
            skipped: false,
        });
    }

    let seed = crossing_layer(phi);

    // Already a signed distance? Checked on the band, skipping kink nodes
    // (ridges of min/max-composed distances) where one-sided slopes disagree
    // even for an exact SDF. The 5% slack also covers the O(h²κ²) error of
    // central differences on the curved sheets around cuboid edges; anything
    // returned unchanged here is well inside the 10% band-gradient contract.
    let band = phi.band_width();
    let h_inv = 1.0 / h;
    let mut unit_gradient = true;
    'outer: for k in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = g.index(i, j, k);
                if v[idx].abs() > band {
                    continue;
                }
                let one_sided = |lo: Option<usize>, hi: Option<usize>| -> (f64, f64) {
                    let c = v[idx];
                    (
                        lo.map_or(0.0, |l| (c - v[l]) * h_inv),
                        hi.map_or(0.0, |u| (v[u] - c) * h_inv),
                    )
                };
                let (xm, xp) = one_sided(
                    (i > 0).then(|| g.index(i - 1, j, k)),
                    (i + 1 < g.nx).then(|| g.index(i + 1, j, k)),
                );
                let (ym, yp) = one_sided(
                    (j > 0).then(|| g.index(i, j - 1, k)),
                    (j + 1 < g.ny).then(|| g.index(i, j + 1, k)),
                );
                let (zm, zp) = one_sided(
                    (k > 0).then(|| g.index(i, j, k - 1)),
                    (k + 1 < g.nz).then(|| g.index(i, j, k + 1)),
                );
                let kinked = (xp - xm).abs() > 0.3
                    || (yp - ym).abs() > 0.3
                    || (zp - zm).abs() > 0.3;
                if kinked {
                    continue;
                }
                let grad = phi_gradient(phi, i, j, k);
                let norm = (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]).sqrt();
                if (norm - 1.0).abs() > 0.05 {
                    unit_gradient = false;
                    break 'outer;
                }
            }
        }
    }
    if unit_gradient {
        return Ok(ReinitOutcome {
            phi: phi.clone(),
            no_interface: false,
            skipped: true,
        });
    }

    // Seed distances as the smaller of two estimates: (a) the interpolated
    // crossing position of the node's sign-change edges, h·|φᵢ|/|φᵢ−φⱼ| per
    // axis combined as 1/d² (exact for planar fronts and immune to |∇φ|
    // drift), and (b) the gradient-corrected value |φ|/|∇φ| (second-order on
    // smooth fields). Taking the minimum keeps whichever estimate is
    // consistent for the field at hand.
    let mut dist = vec![f64::INFINITY; n];
    let solid = |x: f64| x >= 0.0;
    for k in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = g.index(i, j, k);
                if !seed[idx] {
                    continue;
                }
                if v[idx] == 0.0 {
                    dist[idx] = 0.0;
                    continue;
                }
                let mut inv_sq = 0.0f64;
                let mut visit = |nb: usize| {
                    if solid(v[nb]) != solid(v[idx]) {
                        let d = h * v[idx].abs() / (v[idx] - v[nb]).abs();
                        if d <= 0.0 {
                            inv_sq = f64::INFINITY;
                        } else {
                            inv_sq += 1.0 / (d * d);
                        }
                    }
                };
                if i > 0 {
                    visit(g.index(i - 1, j, k));
                }
                if i + 1 < g.nx {
                    visit(g.index(i + 1, j, k));
                }
                if j > 0 {
                    visit(g.index(i, j - 1, k));
                }
                if j + 1 < g.ny {
                    visit(g.index(i, j + 1, k));
                }
                if k > 0 {
                    visit(g.index(i, j, k - 1));
                }
                if k + 1 < g.nz {
                    visit(g.index(i, j, k + 1));
                }
                let from_crossings = if inv_sq.is_infinite() {
                    0.0
                } else if inv_sq > 0.0 {
                    1.0 / inv_sq.sqrt()
                } else {
                    f64::INFINITY
                };
                let grad = phi_gradient(phi, i, j, k);
                let norm = (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2])
                    .sqrt()
                    .max(1e-6);
                let from_gradient = (v[idx].abs() / norm).min(2.0 * h);
                dist[idx] = from_crossings.min(from_gradient);
            }
        }
    }

    // 2 rounds of the 8 alternating sweep orderings
    for _ in 0..2 {
        for dir in 0..8u8 {
            let xs: Box<dyn Iterator<Item = usize>> = if dir & 1 == 0 {
                Box::new(0..g.nx)
            } else {
                Box::new((0..g.nx).rev())
            };
            let xs: Vec<usize> = xs.collect();
            let ys: Vec<usize> = if dir & 2 == 0 {
                (0..g.ny).collect()
            } else {
                (0..g.ny).rev().collect()
            };
            let zs: Vec<usize> = if dir & 4 == 0 {
                (0..g.nz).collect()
            } else {
                (0..g.nz).rev().collect()
            };
            for &k in &zs {
                for &j in &ys {
                    for &i in &xs {
                        let idx = g.index(i, j, k);
                        if seed[idx] {
                            continue;
                        }
                        let axis_min = |lo: Option<usize>, hi: Option<usize>| -> f64 {
                            let a = lo.map_or(f64::INFINITY, |l| dist[l]);
                            let b = hi.map_or(f64::INFINITY, |u| dist[u]);
                            a.min(b)
                        };
                        let ax = axis_min(
                            (i > 0).then(|| g.index(i - 1, j, k)),
                            (i + 1 < g.nx).then(|| g.index(i + 1, j, k)),
                        );
                        let ay = axis_min(
                            (j > 0).then(|| g.index(i, j - 1, k)),
                            (j + 1 < g.ny).then(|| g.index(i, j + 1, k)),
                        );
                        let az = axis_min(
                            (k > 0).then(|| g.index(i, j, k - 1)),
                            (k + 1 < g.nz).then(|| g.index(i, j, k + 1)),
                        );
                        let (a, b, c) = sort3(ax, ay, az);
                        if a.is_finite() {
                            let x = eikonal_update(a, b, c, h);
                            if x < dist[idx] {
                                dist[idx] = x;
                            }
                        }
                    }
                }
            }
        }
    }

    let signed: Vec<f64> = dist
        .iter()
        .zip(v)
        .map(|(&d, &orig)| if orig >= 0.0 { d } else { -d })
        .collect();
    let out = LevelSetField::from_field(ScalarField::from_values(g, Unit::Length, signed)?)?;
    Ok(ReinitOutcome {
        phi: out,
        no_interface: false,
        skipped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sdf_build, GeometrySpec};
    use crate::grid::make_grid;
    use crate::transport::MaterialParams;

    fn table3_nacl() -> MaterialParams {
        MaterialParams::nacl()
    }

    fn stefan_nacl() -> StefanParams {
        StefanParams {
            s0: 0.0,
            d: 0.06273,
            mg_0: 0.0,
            mg_sat: 134e-6,
            mg_sol: 1735e-6,
        }
    }

    /// Independent bisection of the similarity equation, used as an oracle.
    fn bisect_alpha(p: &StefanParams) -> f64 {
        let (mut lo, mut hi) = (-p.d.sqrt(), 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if stefan_residual(mid, p).signum() == stefan_residual(lo, p).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn alpha_is_zero_at_saturated_medium() {
        let p = StefanParams {
            mg_0: 134e-6,
            ..stefan_nacl()
        };
        assert_eq!(stefan_alpha(&p).unwrap(), 0.0);
    }

    #[test]
    fn alpha_matches_bisection_oracle() {
        let p = stefan_nacl();
        let a = stefan_alpha(&p).unwrap();
        let oracle = bisect_alpha(&p);
        assert!((a - oracle).abs() < 1e-12, "newton {a} vs bisection {oracle}");
        assert!(stefan_residual(a, &p).abs() <= 1e-12);
        // froze against an independent scipy brentq run
        assert!((a - (-0.0112349778)).abs() < 1e-8, "alpha = {a}");
    }

    #[test]
    fn alpha_root_is_negative_and_bracketed() {
        let p = stefan_nacl();
        let a = stefan_alpha(&p).unwrap();
        assert!(a < 0.0 && a > -p.d.sqrt());
    }

    #[test]
    fn alpha_over_sqrt_d_depends_only_on_concentrations() {
        let p = stefan_nacl();
        let a1 = stefan_alpha(&p).unwrap();
        let p4 = StefanParams { d: 4.0 * p.d, ..p };
        let a4 = stefan_alpha(&p4).unwrap();
        assert!((a4 / (4.0 * p.d).sqrt() - a1 / p.d.sqrt()).abs() < 1e-10);
        // doubling of alpha when D quadruples
        assert!((a4 - 2.0 * a1).abs() < 1e-10);
    }

    #[test]
    fn front_position_basics() {
        assert_eq!(stefan_front(3.0, -0.5, 0.0), 3.0);
        assert_eq!(stefan_front(3.0, 0.0, 11.0), 3.0);
        let d1 = (stefan_front(0.0, -0.5, 1.0) - 0.0).abs();
        let d4 = (stefan_front(0.0, -0.5, 4.0) - 0.0).abs();
        assert!((d4 - 2.0 * d1).abs() < 1e-12);
    }

    /// Planar solid occupying x < x0 on a small grid.
    fn planar_phi(x0: f64) -> LevelSetField {
        let g = make_grid([6.0, 3.0, 3.0], 0.5).unwrap();
        LevelSetField::from_field(ScalarField::from_fn(g, Unit::Length, |p| x0 - p[0])).unwrap()
    }

    #[test]
    fn gradient_of_constant_field_is_zero() {
        let phi = planar_phi(3.0);
        let c = ScalarField::constant(*phi.grid(), Unit::Concentration, 5e-6);
        let (grad, clamps) = interface_gradient(&c, &phi).unwrap();
        assert!(grad.values().iter().all(|&v| v == 0.0));
        assert_eq!(clamps, 0);
    }

    #[test]
    fn gradient_of_linear_profile_returns_negated_slope() {
        let phi = planar_phi(3.0);
        let g = *phi.grid();
        let m = 4.0e-6;
        let c = ScalarField::from_fn(g, Unit::Concentration, |p| m * p[0]);
        let (grad, _) = interface_gradient(&c, &phi).unwrap();
        for k in 0..g.nz {
            for j in 0..g.ny {
                for i in 2..g.nx - 4 {
                    let idx = g.index(i, j, k);
                    if phi.values()[idx].abs() <= phi.band_width() {
                        assert!(
                            (grad.values()[idx] - (-m)).abs() < 1e-12,
                            "node {i} gradient {}",
                            grad.values()[idx]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_of_decaying_profile_is_positive_on_band() {
        let phi = planar_phi(2.0);
        let g = *phi.grid();
        // saturated at the front, exponentially decaying into the fluid
        let c = ScalarField::from_fn(g, Unit::Concentration, |p| {
            134e-6 * (-(p[0] - 2.0).max(0.0) / 1.5).exp()
        });
        let (grad, _) = interface_gradient(&c, &phi).unwrap();
        let mut saw_band = false;
        for k in 0..g.nz {
            for j in 0..g.ny {
                for i in 1..g.nx - 4 {
                    let idx = g.index(i, j, k);
                    if phi.values()[idx].abs() <= phi.band_width() && phi.values()[idx] <= 0.0 {
                        saw_band = true;
                        assert!(grad.values()[idx] > 0.0, "fluid band node {i}");
                    }
                }
            }
        }
        assert!(saw_band);
    }

    #[test]
    fn velocity_zero_without_gradient_or_gamma() {
        let phi = planar_phi(3.0);
        let g = *phi.grid();
        let params = MaterialParams {
            gamma: 0.0,
            ..table3_nacl()
        };
        let c = ScalarField::constant(g, Unit::Concentration, params.mg_sat);
        let film = ScalarField::constant(g, Unit::Concentration, 0.0);
        let (vel, _) = normal_velocity(&c, &film, &phi, &params, 0, 0.025).unwrap();
        assert_eq!(vel.max_abs(), 0.0);
    }

    #[test]
    fn gamma_push_magnitude_matches_stefan() {
        let phi = planar_phi(3.0);
        let g = *phi.grid();
        let params = MaterialParams {
            gamma: 1.0,
            ..table3_nacl()
        };
        let dt = 0.025;
        let c = ScalarField::constant(g, Unit::Concentration, 0.0);
        let film = ScalarField::constant(g, Unit::Concentration, 0.0);
        let (vel, _) = normal_velocity(&c, &film, &phi, &params, 0, dt).unwrap();
        let alpha = stefan_alpha(&StefanParams::from_materials(&params)).unwrap();
        let expected = 2.0 * alpha.abs() / dt.sqrt();
        for &v in vel.values() {
            assert!((v - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn rankine_hugoniot_velocity_on_linear_profile() {
        let phi = planar_phi(2.0);
        let g = *phi.grid();
        let params = MaterialParams {
            gamma: 0.0,
            ..table3_nacl()
        };
        // dissolving profile with slope -m along the outward normal
        let m = 2.0e-6;
        let c = ScalarField::from_fn(g, Unit::Concentration, |p| params.mg_sat - m * (p[0] - 2.0));
        let film = ScalarField::constant(g, Unit::Concentration, 0.0);
        let (vel, _) = normal_velocity(&c, &film, &phi, &params, 3, 0.025).unwrap();
        let denom = params.mg_sol - params.mg_sat;
        assert!((denom - 1601e-6).abs() < 1e-18);
        let expected = params.d_mg * m / denom;
        // interior band node
        let idx = g.index(4, 3, 3);
        assert!(phi.values()[idx].abs() <= phi.band_width());
        assert!(
            (vel.values()[idx] - expected).abs() < 1e-9,
            "v = {}, expected {expected}",
            vel.values()[idx]
        );
        assert!(vel.values()[idx] > 0.0);
    }

    #[test]
    fn advect_with_zero_velocity_is_identity() {
        let g = make_grid([8.0, 8.0, 8.0], 0.5).unwrap();
        let spec = GeometrySpec::Sphere {
            center: [4.0, 4.0, 4.0],
            radius: 2.0,
        };
        let phi = sdf_build(&spec, &g).unwrap();
        let vel = VelocityField::from_field(ScalarField::constant(g, Unit::Velocity, 0.0));
        let out = advect(&phi, &vel, 0.1).unwrap();
        assert_eq!(out.values(), phi.values());
    }

    #[test]
    fn advect_cfl_violation_errors() {
        let phi = planar_phi(3.0);
        let g = *phi.grid();
        let vel = VelocityField::from_field(ScalarField::constant(g, Unit::Velocity, 10.0));
        assert!(advect(&phi, &vel, 0.1).is_err());
    }

    /// Locates the φ zero crossing along the x axis through (j, k) by linear
    /// interpolation.
    fn crossing_x(phi: &LevelSetField, j: usize, k: usize) -> f64 {
        let g = phi.grid();
        for i in 0..g.nx - 1 {
            let a = phi.values()[g.index(i, j, k)];
            let b = phi.values()[g.index(i + 1, j, k)];
            if (a >= 0.0) != (b >= 0.0) {
                let t = a / (a - b);
                return g.origin[0] + g.h * (i as f64 + t);
            }
        }
        panic!("no crossing found");
    }

    #[test]
    fn shrinking_sphere_tracks_analytic_radius() {
        let g = make_grid([14.0, 14.0, 14.0], 0.25).unwrap();
        let spec = GeometrySpec::Sphere {
            center: [7.0, 7.0, 7.0],
            radius: 5.0,
        };
        let mut phi = sdf_build(&spec, &g).unwrap();
        let vel = VelocityField::from_field(ScalarField::constant(g, Unit::Velocity, 1.0));
        let dt = 0.1;
        phi = advect(&phi, &vel, dt).unwrap();
        // crossing_x scans from x = 0 and reports the low-x side of the sphere
        let jc = 28;
        let x = crossing_x(&phi, jc, jc);
        let r = 7.0 - x;
        assert!(
            (r - 4.9).abs() <= 0.1 * g.h + 1e-9,
            "radius after one step: {r}"
        );
    }

    #[test]
    fn advect_richardson_self_convergence() {
        let g = make_grid([14.0, 14.0, 14.0], 0.25).unwrap();
        let spec = GeometrySpec::Sphere {
            center: [7.0, 7.0, 7.0],
            radius: 5.0,
        };
        let phi = sdf_build(&spec, &g).unwrap();
        let vel = VelocityField::from_field(ScalarField::constant(g, Unit::Velocity, 1.0));
        let dt = 0.2;
        let one = advect(&phi, &vel, dt).unwrap();
        let half = advect(&advect(&phi, &vel, dt / 2.0).unwrap(), &vel, dt / 2.0).unwrap();
        // compare on the interface band; away from the zero contour the
        // upwind scheme is free to dissipate the SDF cone apex
        let mut max_diff = 0.0f64;
        for (idx, (a, b)) in one.values().iter().zip(half.values()).enumerate() {
            if phi.values()[idx].abs() <= phi.band_width() {
                max_diff = max_diff.max((a - b).abs());
            }
        }
        assert!(max_diff <= 0.05 * dt, "richardson band diff {max_diff}");
    }

    #[test]
    fn planar_advection_is_exact() {
        let mut phi = planar_phi(3.0);
        let g = *phi.grid();
        let v = 0.5;
        let dt = 0.2;
        let vel = VelocityField::from_field(ScalarField::constant(g, Unit::Velocity, v));
        let before = crossing_x(&phi, 1, 1);
        phi = advect(&phi, &vel, dt).unwrap();
        let after = crossing_x(&phi, 1, 1);
        // solid on the low-x side shrinks: the crossing moves down by v*dt
        assert!(
            ((before - after) - v * dt).abs() <= 1e-3 * g.h,
            "displacement {}",
            before - after
        );
    }

    #[test]
    fn reinit_leaves_exact_sdf_unchanged_in_band() {
        let g = make_grid([12.0, 12.0, 12.0], 0.25).unwrap();
        let spec = GeometrySpec::Sphere {
            center: [6.0, 6.0, 6.0],
            radius: 4.0,
        };
        let phi = sdf_build(&spec, &g).unwrap();
        let out = reinitialize(&phi).unwrap();
        assert!(!out.no_interface);
        for (a, b) in out.phi.values().iter().zip(phi.values()) {
            if b.abs() <= phi.band_width() {
                assert!((a - b).abs() <= 1e-6, "band value moved: {a} vs {b}");
            }
        }
    }

    #[test]
    fn reinit_renormalizes_scaled_sdf() {
        let g = make_grid([12.0, 12.0, 12.0], 0.25).unwrap();
        let spec = GeometrySpec::Sphere {
            center: [6.0, 6.0, 6.0],
            radius: 4.0,
        };
        let exact = sdf_build(&spec, &g).unwrap();
        let scaled = LevelSetField::from_field(
            ScalarField::from_values(
                g,
                Unit::Length,
                exact.values().iter().map(|v| 3.0 * v).collect(),
            )
            .unwrap(),
        )
        .unwrap();
        let out = reinitialize(&scaled).unwrap();
        assert!(!out.skipped);
        // zero contour unmoved: sign pattern identical
        for (a, b) in out.phi.values().iter().zip(scaled.values()) {
            assert_eq!(*a >= 0.0, *b >= 0.0);
        }
        // band values back to the exact distance
        let mut max_err = 0.0f64;
        for (a, b) in out.phi.values().iter().zip(exact.values()) {
            if b.abs() <= exact.band_width() {
                max_err = max_err.max((a - b).abs());
            }
        }
        assert!(max_err <= 0.1 * g.h, "band error {max_err}");
        // crossing position preserved within 0.1h
        let before = crossing_x(&scaled, 24, 24);
        let after = crossing_x(&out.phi, 24, 24);
        assert!((before - after).abs() <= 0.1 * g.h);
    }

    #[test]
    fn reinit_restores_unit_gradient_in_band() {
        let g = make_grid([12.0, 12.0, 12.0], 0.25).unwrap();
        let spec = GeometrySpec::Sphere {
            center: [6.0, 6.0, 6.0],
            radius: 4.0,
        };
        let exact = sdf_build(&spec, &g).unwrap();
        // warp: nonlinear distortion that keeps the zero contour
        let warped = LevelSetField::from_field(
            ScalarField::from_values(
                g,
                Unit::Length,
                exact.values().iter().map(|&v| v * (2.0 + (v * 0.8).tanh())).collect(),
            )
            .unwrap(),
        )
        .unwrap();
        let out = reinitialize(&warped).unwrap().phi;
        for k in 1..g.nz - 1 {
            for j in 1..g.ny - 1 {
                for i in 1..g.nx - 1 {
                    let idx = g.index(i, j, k);
                    if out.values()[idx].abs() > out.band_width() {
                        continue;
                    }
                    let grad = phi_gradient(&out, i, j, k);
                    let norm = (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]).sqrt();
                    assert!(
                        (norm - 1.0).abs() <= 0.1,
                        "gradient {norm} at ({i},{j},{k})"
                    );
                }
            }
        }
    }

    #[test]
    fn reinit_uniform_sign_warns_and_passes_through() {
        let g = make_grid([4.0, 4.0, 4.0], 0.5).unwrap();
        let phi = LevelSetField::from_field(ScalarField::constant(g, Unit::Length, 2.0)).unwrap();
        let out = reinitialize(&phi).unwrap();
        assert!(out.no_interface);
        assert_eq!(out.phi.values(), phi.values());
    }
}
