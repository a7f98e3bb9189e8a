//! Closed-form upper and lower bounds for a few conditioning regimes.

use decoupled_saddle::evaluation::{complexity_bounds, BoundParams};

fn main() {
    println!(
        "{:>6} {:>6} {:>6} {:>10} {:>10} {:>10} {:>10}",
        "L_x", "L_xy", "L_y", "dm comm", "eg comm", "dm oracle", "lower"
    );
    for (lx, lxy, ly) in [(1.0, 1.0, 1.0), (10.0, 1.0, 1.0), (100.0, 1.0, 1.0), (10.0, 0.5, 10.0)] {
        let b = complexity_bounds(&BoundParams::new(lx, lxy, ly, 1.0, 1.0, 0.1)).unwrap();
        println!(
            "{lx:>6} {lxy:>6} {ly:>6} {:>10.1} {:>10.1} {:>10.1} {:>10.1}",
            b.dmsp_comm, b.eg_comm, b.dmsp_oracle, b.lower_comm
        );
    }
    let skewed = complexity_bounds(&BoundParams::new(0.0, 1.0, 0.0, 1.0, 1.0, 0.1).with_estimates(4.0, 1.0)).unwrap();
    println!("distance estimates (4, 1): theta = {}, comm bound = {:.1}", skewed.theta, skewed.dmsp_comm);
}
