//! The four distances on a few vectors, including one with an outlier
//! coordinate.

use cbir::metrics::{distance, MetricKind};

fn main() -> cbir::Result<()> {
    let a = [1.0, 2.0, 3.0, -1.0];
    let b = [4.0, 6.0, 3.0, 1.0];
    let mut c = b;
    c[1] += 1e9;

    println!("{:<4} {:>12} {:>14}", "", "d(a,b)", "d(a,b+outlier)");
    for kind in MetricKind::ALL {
        println!("{:<4} {:>12.6} {:>14.6}", kind.code(), distance(kind, &a, &b)?, distance(kind, &a, &c)?);
    }
    // bounded per-dimension terms keep hd and cd within the dimension count
    Ok(())
}
