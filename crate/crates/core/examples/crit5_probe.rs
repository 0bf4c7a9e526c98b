use corrosim_core::*;
use std::time::Instant;

fn row(name: &str, mats: &str, extent: [f64; 3], center: [f64; 3], h: f64) {
    let text = format!(
        r#"
        [grid]
        extent = [{}, {}, {}]
        spacing = {h}
        [[geometry.solids]]
        shape = "cuboid"
        center = [{}, {}, {}]
        half_sizes = [5.0, 5.0, 1.0]
        [materials]
        {mats}
        [initial]
        ph0 = 5.6
        [time]
        dt = 0.025
        t_end = 22.0
        [output]
        snapshot_every = 80
    "#,
        extent[0], extent[1], extent[2], center[0], center[1], center[2]
    );
    let cfg = parse_config(&text, "t").unwrap();
    let t0 = Instant::now();
    let r = run_simulation(&cfg).unwrap();
    let el = t0.elapsed().as_secs_f64();
    let rows = r.series.rows();
    let incs: Vec<f64> = rows.windows(2).map(|w| (w[1].hydrogen_ml - w[0].hydrogen_ml)).collect();
    let max_inc = incs.iter().cloned().fold(0.0f64, f64::max);
    let mut worst_rise = 0.0f64;
    for w in incs.windows(2) {
        worst_rise = worst_rise.max(w[1] - w[0]);
    }
    let mut vol_up = 0usize;
    let mut max_up = 0.0f64;
    let mut ph_down = 0usize;
    for w in rows.windows(2) {
        let dv = w[1].solid_volume_mm3 - w[0].solid_volume_mm3;
        if dv > 0.0 {
            vol_up += 1;
            max_up = max_up.max(dv);
        }
        if w[1].avg_ph < w[0].avg_ph {
            ph_down += 1;
        }
    }
    println!("{name}: {el:.0}s h2={:.3}mL", rows[rows.len() - 1].hydrogen_ml);
    println!("  2h increments: {:?}", incs.iter().map(|v| (v * 1e5).round() / 1e5).collect::<Vec<_>>());
    println!(
        "  max_inc {max_inc:.4e} worst_rise {worst_rise:.4e} ratio {:.5}; volup {vol_up} (max {max_up:.2e}) phdown {ph_down}",
        worst_rise / max_inc
    );
}

fn main() {
    let nacl = "d_mg = 0.06273\nk2 = 1e20\nbeta = 0.2\ngamma = 0.0";
    let sbf = "d_mg = 0.000338\nk2 = 1e15\nbeta = 0.125\ngamma = 0.65";
    row("NaCl h=0.2 box18", nacl, [18.0, 18.0, 9.0], [9.0, 9.0, 4.5], 0.2);
    row("SBF h=0.5 box40", sbf, [40.0, 40.0, 40.0], [20.0, 20.0, 20.0], 0.5);
}
