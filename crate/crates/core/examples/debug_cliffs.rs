use corrosim_core::*;
use std::time::Instant;

fn stefan_check() {
    let h = 0.02f64;
    let text = format!(
        r#"
        [grid]
        extent = [8.0, 0.04, 0.04]
        spacing = {h}
        [[geometry.solids]]
        shape = "cuboid"
        center = [0.0, 0.02, 0.02]
        half_sizes = [4.0, 1.0, 1.0]
        [materials]
        d_mg = 0.06273
        k2 = 1e20
        beta = 0.2
        gamma = 0.0
        k1 = 0.0
        [initial]
        ph0 = 5.6
        [time]
        dt = 0.025
        t_end = 22.0
        [output]
        snapshot_every = 20
    "#
    );
    let mut cfg = parse_config(&text, "t").unwrap();
    cfg.materials.k2 = 0.0;
    let p = StefanParams {
        s0: 4.0,
        d: cfg.materials.d_mg,
        mg_0: 0.0,
        mg_sat: cfg.materials.mg_sat,
        mg_sol: cfg.materials.mg_sol,
    };
    let alpha = stefan_alpha(&p).unwrap();
    let total = 2.0 * alpha.abs() * 22.0f64.sqrt();
    let mut worst = (0.0, 0.0);
    let t0 = Instant::now();
    run_simulation_with(&cfg, false, |snap| {
        if snap.time >= 0.5 {
            let g = snap.phi.grid();
            for i in 0..g.nx - 1 {
                let a = snap.phi.values()[g.index(i, 1, 1)];
                let b = snap.phi.values()[g.index(i + 1, 1, 1)];
                if (a >= 0.0) != (b >= 0.0) {
                    let front = g.h * (i as f64 + a / (a - b));
                    let err = (front - stefan_front(4.0, alpha, snap.time)).abs();
                    if err > worst.1 {
                        worst = (snap.time, err);
                    }
                    break;
                }
            }
        }
        Ok(())
    })
    .unwrap();
    println!(
        "stefan: {:.0}s worst {:.2}% of total displacement (at t={})",
        t0.elapsed().as_secs_f64(),
        100.0 * worst.1 / total,
        worst.0
    );
}

fn desk(name: &str, mats: &str, t_end: f64) {
    let text = format!(
        r#"
        [grid]
        extent = [40.0, 40.0, 40.0]
        spacing = 0.5
        [[geometry.solids]]
        shape = "cuboid"
        center = [20.0, 20.0, 20.0]
        half_sizes = [5.0, 5.0, 1.0]
        [materials]
        {mats}
        [initial]
        ph0 = 5.6
        [time]
        dt = 0.025
        t_end = {t_end}
        [output]
        snapshot_every = 10
    "#
    );
    let cfg = parse_config(&text, "t").unwrap();
    let t0 = Instant::now();
    let r = run_simulation(&cfg).unwrap();
    let rows = r.series.rows();
    let last = rows[rows.len() - 1];
    let mut max_drop = 0.0f64;
    let mut max_rise = 0.0f64;
    let mut viol = 0;
    let mut worst = 0.0f64;
    let mut maxinc = 0.0f64;
    let mut prev = f64::INFINITY;
    for w in rows.windows(2) {
        let dv = w[1].solid_volume_mm3 - w[0].solid_volume_mm3;
        max_drop = max_drop.max(-dv);
        max_rise = max_rise.max(dv);
        let inc = w[1].hydrogen_ml - w[0].hydrogen_ml;
        maxinc = maxinc.max(inc);
        if w[0].time_h > 0.0 && inc > prev {
            viol += 1;
            worst = worst.max(inc - prev);
        }
        prev = inc;
    }
    println!(
        "{name}: {:.0}s mass={:.4} h2={:.2} vol {:.1}->{:.1}; window maxdrop {:.4} maxrise {:.4}",
        t0.elapsed().as_secs_f64(),
        last.mass_lost_g,
        last.hydrogen_ml,
        rows[0].solid_volume_mm3,
        last.solid_volume_mm3,
        max_drop,
        max_rise
    );
    println!(
        "  concavity viol {viol} worst {:.2e} maxinc {:.2e}; skips {} upticks {} maxup {:.2e}",
        worst,
        maxinc,
        r.diagnostics.reinit_skips,
        r.diagnostics.volume_upticks,
        r.diagnostics.max_volume_uptick
    );
}

fn main() {
    stefan_check();
    let nacl = "d_mg = 0.06273\nk2 = 1e20\nbeta = 0.2\ngamma = 0.0";
    let sbf = "d_mg = 0.000338\nk2 = 1e15\nbeta = 0.125\ngamma = 0.65";
    desk("NaCl t=6", nacl, 6.0);
    desk("SBF  t=6", sbf, 6.0);
}
