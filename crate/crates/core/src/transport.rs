//! Coupled reaction–diffusion transport of Mg²⁺, protective film, Cl⁻ and
//! OH⁻, advanced by backward-Euler steps.
//!
//! Each step solves one linear system per diffusing species (reaction terms
//! implicit in the solved species, every other species lagged at the old time
//! level). The film carries no diffusion term and reduces to a pointwise ODE.
//! Boundary conditions on the embedded front: Mg²⁺ is pinned to its
//! saturation value at solid nodes by a dominant penalty diagonal, Cl⁻/OH⁻
//! see zero face diffusivity wherever a face touches the solid. The outer box
//! is zero-flux on all six sides.

use crate::error::{CoreError, Result};
use crate::geometry::LevelSetField;
use crate::grid::{ScalarField, StructuredGrid, Unit};
use crate::linalg::{solve, SolveReport, SparseMatrix};

/// All physical and model constants of the transport/interface system.
///
/// Units: diffusivities mm²/h, k1 1/h, k2 mm⁶/(g²·h), concentrations and
/// densities g/mm³, temperature K, pressure Pa. `beta`, `gamma`, `porosity`,
/// `tortuosity` are dimensionless.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    pub d_mg: f64,
    pub d_cl: f64,
    pub d_oh: f64,
    pub k1: f64,
    pub k2: f64,
    pub beta: f64,
    pub gamma: f64,
    pub porosity: f64,
    pub tortuosity: f64,
    pub mg_sat: f64,
    pub mg_sol: f64,
    pub rho_film: f64,
    /// Initial dissolved Mg²⁺ in the medium.
    pub mg_0: f64,
    /// Molar mass of Mg, g/mol.
    pub mg_mol: f64,
    pub temperature: f64,
    pub pressure: f64,
}

impl MaterialParams {
    /// Calibrated parameter set for the saline (NaCl, high-diffusion) medium.
    pub fn nacl() -> MaterialParams {
        MaterialParams {
            d_mg: 0.06273,
            k2: 1e20,
            beta: 0.2,
            gamma: 0.0,
            ..MaterialParams::base()
        }
    }

    /// Calibrated parameter set for simulated body fluid (low diffusion).
    pub fn sbf() -> MaterialParams {
        MaterialParams {
            d_mg: 0.000338,
            k2: 1e15,
            beta: 0.125,
            gamma: 0.65,
            ..MaterialParams::base()
        }
    }

    /// Shared literature constants; `d_mg`, `k2`, `beta`, `gamma` are
    /// medium-specific and overridden by [`Self::nacl`] / [`Self::sbf`].
    fn base() -> MaterialParams {
        MaterialParams {
            d_mg: 0.06273,
            d_cl: 0.05,
            d_oh: 25.2,
            k1: 7.0,
            k2: 1e20,
            beta: 0.2,
            gamma: 0.0,
            porosity: 0.55,
            tortuosity: 1.0,
            mg_sat: 134e-6,
            mg_sol: 1735e-6,
            rho_film: 2344e-6,
            mg_0: 0.0,
            mg_mol: 24.305,
            temperature: 295.15,
            pressure: 101_325.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.d_mg, "d_mg"),
            (self.d_cl, "d_cl"),
            (self.d_oh, "d_oh"),
            (self.mg_sat, "mg_sat"),
            (self.mg_sol, "mg_sol"),
            (self.rho_film, "rho_film"),
            (self.mg_mol, "mg_mol"),
            (self.temperature, "temperature"),
            (self.pressure, "pressure"),
        ];
        for (v, name) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoreError::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.k1 < 0.0 || self.k2 < 0.0 {
            return Err(CoreError::invalid("reaction rates k1 and k2 must be non-negative"));
        }
        if !(self.porosity > 0.0 && self.porosity < 1.0) {
            return Err(CoreError::invalid(format!(
                "porosity must lie in (0, 1), got {}",
                self.porosity
            )));
        }
        if self.tortuosity < 1.0 {
            return Err(CoreError::invalid("tortuosity must be >= 1"));
        }
        if !(self.mg_sat < self.mg_sol) {
            return Err(CoreError::invalid("mg_sat must be below mg_sol"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(CoreError::invalid(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if self.beta < 0.0 || self.mg_0 < 0.0 {
            return Err(CoreError::invalid("beta and mg_0 must be non-negative"));
        }
        Ok(())
    }
}

/// Maximum film concentration ρ_film · (1 − porosity), g/mm³.
pub fn film_capacity(params: &MaterialParams) -> f64 {
    params.rho_film * (1.0 - params.porosity)
}

/// Film-reduced diffusivity: interpolates between the free value `d` and the
/// porous floor `d·ε/τ` by the film fraction, weighted by β. The interpolation
/// weight is clamped so the result stays inside `[d·ε/τ, d]` even for β > 1.
pub fn effective_diffusivity(d: f64, c_film: f64, params: &MaterialParams) -> f64 {
    let cap = film_capacity(params);
    let c = c_film.clamp(0.0, cap);
    let w = (params.beta * c / cap).min(1.0);
    d * ((1.0 - w) + w * params.porosity / params.tortuosity)
}

/// Pointwise reaction rates (g/mm³/h) for the dissolved-Mg, film and OH⁻
/// equations. `r_mg` is the exact negation of `r_film`, preserving Mg
/// conservation between the dissolved and film phases bit for bit.
pub fn reaction_rates(c_mg: f64, c_film: f64, c_cl: f64, params: &MaterialParams) -> (f64, f64, f64) {
    let cap = film_capacity(params);
    let formation = params.k1 * c_mg * (1.0 - params.beta * c_film / cap);
    let dissolution = params.k2 * c_film * c_cl * c_cl;
    let r_film = formation - dissolution;
    (-r_film, r_film, dissolution)
}

/// Concentration fields of the four species at one time level.
#[derive(Clone, Debug)]
pub struct ChemState {
    pub c_mg: ScalarField,
    pub c_film: ScalarField,
    pub c_cl: ScalarField,
    pub c_oh: ScalarField,
    /// Hours.
    pub time: f64,
}

impl ChemState {
    pub fn new(
        c_mg: ScalarField,
        c_film: ScalarField,
        c_cl: ScalarField,
        c_oh: ScalarField,
        time: f64,
    ) -> Result<Self> {
        let g = c_mg.grid();
        for (f, name) in [(&c_film, "c_film"), (&c_cl, "c_cl"), (&c_oh, "c_oh")] {
            if f.grid() != g {
                return Err(CoreError::invalid(format!("{name} lives on a different grid")));
            }
        }
        for (f, name) in [(&c_mg, "c_mg"), (&c_film, "c_film"), (&c_cl, "c_cl"), (&c_oh, "c_oh")] {
            if f.values().iter().any(|&v| v < 0.0) {
                return Err(CoreError::invalid(format!("{name} contains negative concentrations")));
            }
        }
        Ok(ChemState {
            c_mg,
            c_film,
            c_cl,
            c_oh,
            time,
        })
    }

    pub fn grid(&self) -> &StructuredGrid {
        self.c_mg.grid()
    }
}

/// Linear-solver settings for the implicit systems.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

/// Per-step accounting from [`step_transport`].
#[derive(Clone, Copy, Debug, Default)]
pub struct TransportDiagnostics {
    /// Negative round-off values clipped to zero, per species (Mg, Cl, OH).
    pub clipped: [u64; 3],
    pub mg_report: Option<SolveReport>,
    pub cl_report: Option<SolveReport>,
    pub oh_report: Option<SolveReport>,
    /// max |C_Mg − mg_sat| / mg_sat over solid nodes after the step.
    pub max_penalty_deviation: f64,
}

/// Shared 7-point sparsity pattern; values are rewritten per species.
struct StencilPattern {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

fn build_pattern(g: &StructuredGrid) -> StencilPattern {
    let n = g.node_count();
    let (sx, sy, sz) = (1usize, g.nx, g.nx * g.ny);
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(7 * n);
    row_ptr.push(0);
    for k in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = g.index(i, j, k);
                if k > 0 {
                    col_idx.push(idx - sz);
                }
                if j > 0 {
                    col_idx.push(idx - sy);
                }
                if i > 0 {
                    col_idx.push(idx - sx);
                }
                col_idx.push(idx);
                if i + 1 < g.nx {
                    col_idx.push(idx + sx);
                }
                if j + 1 < g.ny {
                    col_idx.push(idx + sy);
                }
                if k + 1 < g.nz {
                    col_idx.push(idx + sz);
                }
                row_ptr.push(col_idx.len());
            }
        }
    }
    StencilPattern { row_ptr, col_idx }
}

/// Harmonic-mean face diffusivity; zero if either side is zero.
#[inline]
fn face_diffusivity(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

struct SpeciesSystem<'a> {
    /// Per-node diffusivity.
    d_node: &'a [f64],
    /// Zero the face diffusivity when a face touches the solid (φ > 0).
    mask_solid_faces: bool,
    /// Implicit reaction diagonal (1/h), zero where inactive.
    reaction_diag: Option<&'a [f64]>,
    /// Explicit source (g/mm³/h), zero where inactive.
    source: Option<&'a [f64]>,
    /// Dirichlet penalty at solid nodes: (coefficient, target value).
    penalty: Option<(f64, f64)>,
}

/// Assembles faces, solves the backward-Euler system in delta form, returns
/// the updated concentrations plus clip count.
fn advance_species(
    g: &StructuredGrid,
    pattern: &StencilPattern,
    phi: &[f64],
    c_old: &[f64],
    sys: &SpeciesSystem,
    dt: f64,
    opts: &SolverOptions,
    label: &str,
) -> Result<(Vec<f64>, SolveReport, u64)> {
    let n = g.node_count();
    let h2 = g.h * g.h;
    let (sx, sy, sz) = (1usize, g.nx, g.nx * g.ny);

    // face transmissibilities, stored at the lower-index node of each face
    let mut tx = vec![0.0; n];
    let mut ty = vec![0.0; n];
    let mut tz = vec![0.0; n];
    let masked = |a: usize, b: usize| sys.mask_solid_faces && (phi[a] > 0.0 || phi[b] > 0.0);
    for k in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = g.index(i, j, k);
                if i + 1 < g.nx && !masked(idx, idx + sx) {
                    tx[idx] = face_diffusivity(sys.d_node[idx], sys.d_node[idx + sx]) / h2;
                }
                if j + 1 < g.ny && !masked(idx, idx + sy) {
                    ty[idx] = face_diffusivity(sys.d_node[idx], sys.d_node[idx + sy]) / h2;
                }
                if k + 1 < g.nz && !masked(idx, idx + sz) {
                    tz[idx] = face_diffusivity(sys.d_node[idx], sys.d_node[idx + sz]) / h2;
                }
            }
        }
    }

    // right-hand side of the delta-form system
    // A (c_new - c_old) = dt (div flux + source - R c_old) + P (target - c_old)
    let mut rhs = vec![0.0; n];
    for k in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = g.index(i, j, k);
                let mut flux = 0.0;
                if i + 1 < g.nx {
                    flux += tx[idx] * (c_old[idx + sx] - c_old[idx]);
                }
                if i > 0 {
                    flux += tx[idx - sx] * (c_old[idx - sx] - c_old[idx]);
                }
                if j + 1 < g.ny {
                    flux += ty[idx] * (c_old[idx + sy] - c_old[idx]);
                }
                if j > 0 {
                    flux += ty[idx - sy] * (c_old[idx - sy] - c_old[idx]);
                }
                if k + 1 < g.nz {
                    flux += tz[idx] * (c_old[idx + sz] - c_old[idx]);
                }
                if k > 0 {
                    flux += tz[idx - sz] * (c_old[idx - sz] - c_old[idx]);
                }
                let mut r = dt * flux;
                if let Some(src) = sys.source {
                    r += dt * src[idx];
                }
                if let Some(rd) = sys.reaction_diag {
                    r -= dt * rd[idx] * c_old[idx];
                }
                if let Some((pc, target)) = sys.penalty {
                    if phi[idx] >= 0.0 {
                        r += pc * (target - c_old[idx]);
                    }
                }
                rhs[idx] = r;
            }
        }
    }

    // matrix values on the shared pattern
    let mut values = vec![0.0; pattern.col_idx.len()];
    {
        let mut e = 0usize;
        for k in 0..g.nz {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let idx = g.index(i, j, k);
                    let mut diag = 1.0;
                    let mut t_sum = 0.0;
                    if k > 0 {
                        values[e] = -dt * tz[idx - sz];
                        t_sum += tz[idx - sz];
                        e += 1;
                    }
                    if j > 0 {
                        values[e] = -dt * ty[idx - sy];
                        t_sum += ty[idx - sy];
                        e += 1;
                    }
                    if i > 0 {
                        values[e] = -dt * tx[idx - sx];
                        t_sum += tx[idx - sx];
                        e += 1;
                    }
                    let diag_slot = e;
                    e += 1;
                    if i + 1 < g.nx {
                        values[e] = -dt * tx[idx];
                        t_sum += tx[idx];
                        e += 1;
                    }
                    if j + 1 < g.ny {
                        values[e] = -dt * ty[idx];
                        t_sum += ty[idx];
                        e += 1;
                    }
                    if k + 1 < g.nz {
                        values[e] = -dt * tz[idx];
                        t_sum += tz[idx];
                        e += 1;
                    }
                    diag += dt * t_sum;
                    if let Some(rd) = sys.reaction_diag {
                        diag += dt * rd[idx];
                    }
                    if let Some((pc, _)) = sys.penalty {
                        if phi[idx] >= 0.0 {
                            diag += pc;
                        }
                    }
                    values[diag_slot] = diag;
                }
            }
        }
    }

    let a = SparseMatrix::from_parts(n, pattern.row_ptr.clone(), pattern.col_idx.clone(), values);
    let (delta, report) = solve(&a, &rhs, opts.tol, opts.max_iter)?;
    if !report.converged {
        return Err(CoreError::SolverFailure {
            residual: report.final_residual,
            iterations: report.iterations,
        });
    }

    let mut clipped = 0u64;
    let mut c_new = Vec::with_capacity(n);
    for i in 0..n {
        let v = c_old[i] + delta[i];
        if v.is_nan() {
            return Err(CoreError::NumericalFailure(format!(
                "NaN in {label} concentration at node {i}"
            )));
        }
        if v < 0.0 {
            clipped += 1;
            c_new.push(0.0);
        } else {
            c_new.push(v);
        }
    }
    Ok((c_new, report, clipped))
}

/// Advances the four-species state by one backward-Euler step of size `dt`.
pub fn step_transport(
    state: &ChemState,
    phi: &LevelSetField,
    params: &MaterialParams,
    dt: f64,
    opts: &SolverOptions,
) -> Result<(ChemState, TransportDiagnostics)> {
    let g = *phi.grid();
    if state.grid() != &g {
        return Err(CoreError::invalid("step_transport: state and phi on different grids"));
    }
    if !(dt > 0.0) {
        return Err(CoreError::invalid("step_transport: dt must be positive"));
    }
    params.validate()?;

    let n = g.node_count();
    let pv = phi.values();
    let m_old = state.c_mg.values();
    let f_old = state.c_film.values();
    let cl_old = state.c_cl.values();
    let oh_old = state.c_oh.values();
    let cap = film_capacity(params);

    // reactions act on the fluid side of the front, where dissolved Mg and
    // chloride coexist
    let gate: Vec<bool> = (0..n)
        .map(|i| pv[i] < 0.0 && m_old[i] > 0.0 && cl_old[i] > 0.0)
        .collect();

    // film-dissolution source, shared by the Mg and OH equations
    let mut source_k2 = vec![0.0; n];
    // implicit film-formation sink coefficient for the Mg equation
    let mut mg_reaction = vec![0.0; n];
    for i in 0..n {
        if gate[i] {
            source_k2[i] = params.k2 * f_old[i] * cl_old[i] * cl_old[i];
            mg_reaction[i] = params.k1 * (1.0 - params.beta * f_old[i] / cap).max(0.0);
        }
    }

    let d_mg_node: Vec<f64> = (0..n)
        .map(|i| effective_diffusivity(params.d_mg, f_old[i], params))
        .collect();
    let d_cl_node: Vec<f64> = (0..n)
        .map(|i| effective_diffusivity(params.d_cl, f_old[i], params))
        .collect();
    let d_oh_node: Vec<f64> = (0..n)
        .map(|i| effective_diffusivity(params.d_oh, f_old[i], params))
        .collect();

    let penalty = 1e8 * params.d_mg.max(params.d_cl).max(params.d_oh) / (g.h * g.h);
    let pattern = build_pattern(&g);

    let (mg_new, mg_report, mg_clip) = advance_species(
        &g,
        &pattern,
        pv,
        m_old,
        &SpeciesSystem {
            d_node: &d_mg_node,
            mask_solid_faces: false,
            reaction_diag: Some(&mg_reaction),
            source: Some(&source_k2),
            penalty: Some((penalty, params.mg_sat)),
        },
        dt,
        opts,
        "Mg",
    )?;
    let (cl_new, cl_report, cl_clip) = advance_species(
        &g,
        &pattern,
        pv,
        cl_old,
        &SpeciesSystem {
            d_node: &d_cl_node,
            mask_solid_faces: true,
            reaction_diag: None,
            source: None,
            penalty: None,
        },
        dt,
        opts,
        "Cl",
    )?;
    let (oh_new, oh_report, oh_clip) = advance_species(
        &g,
        &pattern,
        pv,
        oh_old,
        &SpeciesSystem {
            d_node: &d_oh_node,
            mask_solid_faces: true,
            reaction_diag: None,
            source: Some(&source_k2),
            penalty: None,
        },
        dt,
        opts,
        "OH",
    )?;

    // film ODE, implicit in the film concentration with the other species
    // lagged at the old level:
    //   f' (1 + dt k1 m β/cap + dt k2 cl²) = f + dt k1 m
    let mut film_new = Vec::with_capacity(n);
    for i in 0..n {
        if gate[i] {
            let a = dt * params.k1 * m_old[i];
            let q = dt * params.k2 * cl_old[i] * cl_old[i];
            film_new.push((f_old[i] + a) / (1.0 + a * params.beta / cap + q));
        } else {
            film_new.push(f_old[i]);
        }
    }

    let mut max_penalty_deviation = 0.0f64;
    for i in 0..n {
        if pv[i] >= 0.0 {
            max_penalty_deviation =
                max_penalty_deviation.max((mg_new[i] - params.mg_sat).abs() / params.mg_sat);
        }
    }

    let diag = TransportDiagnostics {
        clipped: [mg_clip, cl_clip, oh_clip],
        mg_report: Some(mg_report),
        cl_report: Some(cl_report),
        oh_report: Some(oh_report),
        max_penalty_deviation,
    };
    let new_state = ChemState {
        c_mg: ScalarField::from_values(g, Unit::Concentration, mg_new)?,
        c_film: ScalarField::from_values(g, Unit::Concentration, film_new)?,
        c_cl: ScalarField::from_values(g, Unit::Concentration, cl_new)?,
        c_oh: ScalarField::from_values(g, Unit::Concentration, oh_new)?,
        time: state.time + dt,
    };
    Ok((new_state, diag))
}
