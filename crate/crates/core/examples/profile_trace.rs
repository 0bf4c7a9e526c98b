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
        t_end = 2.5
        [output]
        snapshot_every = 1
    "#;
    let cfg = parse_config(text, "t").unwrap();
    run_simulation_with(&cfg, false, |snap| {
        if (88..=91).contains(&snap.step) {
            let g = snap.phi.grid();
            let prof: Vec<f64> = (34..=46).map(|k| snap.phi.values()[g.index(40, 40, k)]).collect();
            println!("step {} phi(z=17..23 center): {:?}", snap.step, prof.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>());
            // x-profile at the midplane through the slab edge region
            let profx: Vec<f64> = (26..=36).map(|i| snap.phi.values()[g.index(i, 40, 40)]).collect();
            println!("        phi(x=13..18 midpl): {:?}", profx.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>());
            // H-volume per z-slab to localize the loss
            let eps = 1.5 * g.h;
            let mut per_k = vec![0.0f64; g.nz];
            for k in 0..g.nz {
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        let v = snap.phi.values()[g.index(i, j, k)];
                        per_k[k] += if v < -eps { 0.0 } else if v > eps { 1.0 }
                                    else { 0.5 * (1.0 + v / eps + (std::f64::consts::PI * v / eps).sin() / std::f64::consts::PI) };
                    }
                }
            }
            let cell = g.h * g.h * g.h;
            let slabs: Vec<f64> = (34..=46).map(|k| per_k[k] * cell).collect();
            println!("        slab volumes z=17..23: {:?}", slabs.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
        }
        Ok(())
    })
    .unwrap();
}
