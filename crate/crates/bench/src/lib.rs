//! Shared fixtures for the kernel benchmarks.

use corrosim_core::{
    make_grid, sdf_build, ChemState, GeometrySpec, LevelSetField, MaterialParams, ScalarField,
    StructuredGrid, Unit,
};

/// 33³ box with a centered slab, the standard benchmark scene.
pub fn bench_scene() -> (StructuredGrid, LevelSetField, ChemState, MaterialParams) {
    let grid = make_grid([16.0, 16.0, 16.0], 0.5).unwrap();
    let spec = GeometrySpec::Cuboid {
        center: [8.0, 8.0, 8.0],
        half_sizes: [4.0, 4.0, 1.0],
    };
    let phi = sdf_build(&spec, &grid).unwrap();
    let params = MaterialParams::nacl();
    let fluid = |idx: usize| phi.values()[idx] < 0.0;
    let n = grid.node_count();
    let select = |fluid_v: f64, solid_v: f64| -> Vec<f64> {
        (0..n).map(|i| if fluid(i) { fluid_v } else { solid_v }).collect()
    };
    let state = ChemState::new(
        ScalarField::from_values(grid, Unit::Concentration, select(0.0, params.mg_sat)).unwrap(),
        ScalarField::constant(grid, Unit::Concentration, 0.0),
        ScalarField::from_values(grid, Unit::Concentration, select(5.175e-6, 0.0)).unwrap(),
        ScalarField::from_values(grid, Unit::Concentration, select(6.77e-14, 0.0)).unwrap(),
        0.0,
    )
    .unwrap();
    (grid, phi, state, params)
}
