use corrosim_core::*;

fn main() {
    let text = r#"
        [grid]
        extent = [40.0, 40.0, 40.0]
        spacing = 0.5
        [[geometry.solids]]
        shape = "cuboid"
        center = [20.0, 20.0, 20.0]
        half_sizes = [5.0, 5.0, 1.0]
        [materials]
        d_mg = 0.06273
        k2 = 1e20
        beta = 0.2
        gamma = 0.0
        [initial]
        ph0 = 5.6
        [time]
        dt = 0.025
        t_end = 6.0
        [output]
        snapshot_every = 1
    "#;
    let cfg = parse_config(text, "t").unwrap();
    let mut prev_v = f64::NAN;
    run_simulation_with(&cfg, false, |snap| {
        let v = volume_positive(snap.phi);
        let dv = if prev_v.is_nan() { 0.0 } else { v - prev_v };
        if dv.abs() > 0.06 || snap.step % 40 == 0 {
            // thickness of the slab along z through the center, via crossings
            let g = snap.phi.grid();
            let (ic, jc) = (40, 40);
            let mut zs = Vec::new();
            for k in 0..g.nz - 1 {
                let a = snap.phi.values()[g.index(ic, jc, k)];
                let b = snap.phi.values()[g.index(ic, jc, k + 1)];
                if (a >= 0.0) != (b >= 0.0) {
                    zs.push(g.h * (k as f64 + a / (a - b)));
                }
            }
            // slab width along x at the midplane
            let kc = 40;
            let mut xs = Vec::new();
            for i in 0..g.nx - 1 {
                let a = snap.phi.values()[g.index(i, jc, kc)];
                let b = snap.phi.values()[g.index(i + 1, jc, kc)];
                if (a >= 0.0) != (b >= 0.0) {
                    xs.push(g.h * (i as f64 + a / (a - b)));
                }
            }
            println!(
                "step {:4} V={:9.4} dV={:+8.4} reinit={} z-faces {:?} x-extent {:?}",
                snap.step,
                v,
                dv,
                snap.step % 10 == 0,
                zs,
                xs
            );
        }
        prev_v = v;
        Ok(())
    })
    .unwrap();
}
