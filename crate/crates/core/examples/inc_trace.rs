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
        d_mg = 0.000338
        k2 = 1e15
        beta = 0.125
        gamma = 0.65
        [initial]
        ph0 = 5.6
        [time]
        dt = 0.025
        t_end = 6.0
        [output]
        snapshot_every = 10
    "#;
    let cfg = parse_config(text, "t").unwrap();
    let r = run_simulation(&cfg).unwrap();
    let rows = r.series.rows();
    println!("record-level increments (mL per 0.25 h):");
    for w in rows.windows(2) {
        println!("  t={:5.2} inc={:+.5}", w[1].time_h, w[1].hydrogen_ml - w[0].hydrogen_ml);
    }
}
