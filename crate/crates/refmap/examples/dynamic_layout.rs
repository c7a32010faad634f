//! Stress-majorization layouts: a static solve, Kruskal stress-1, and a
//! temporally smoothed series over drifting distance targets.
//!
//! ```bash
//! cargo run --example dynamic_layout
//! ```

use refmap::layout::{
    aggregated_stress, dynamic_layout, kruskal_stress, stress_majorization,
    DissimilarityMatrix, Init,
};

fn ring_distances(n: usize, stretch: f64) -> DissimilarityMatrix {
    let venues: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let pos: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            [a.cos(), stretch * a.sin()]
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] =
                ((pos[i][0] - pos[j][0]).powi(2) + (pos[i][1] - pos[j][1]).powi(2)).sqrt();
        }
    }
    DissimilarityMatrix::new(venues, values)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Static: distances of a regular hexagon embed exactly.
    let d = ring_distances(6, 1.0);
    let config = stress_majorization(&d, Init::Random(7), 1e-14, 2000)?;
    println!("static solve: stress-1 = {:.2e}", kruskal_stress(&d, &config)?);
    for (venue, p) in config.venues.iter().zip(&config.positions) {
        println!("  {venue}  ({:6.3}, {:6.3})", p[0], p[1]);
    }

    // Dynamic: the ring stretches into an ellipse over time; higher
    // alpha trades per-frame fit for stability across frames.
    let series: Vec<(i32, DissimilarityMatrix)> = (0..5)
        .map(|t| (2000 + t, ring_distances(6, 1.0 + 0.08 * t as f64)))
        .collect();
    println!("\nalpha      aggregated stress   total movement");
    for alpha in [0.0, 0.5, 5.0, 50.0] {
        let ls = dynamic_layout(&series, alpha, 4, 11, 1e-12, 1000)?;
        let movement: f64 = ls
            .frames
            .windows(2)
            .map(|pair| {
                let (_, a) = &pair[0];
                let (_, b) = &pair[1];
                a.venues
                    .iter()
                    .filter_map(|v| {
                        let pa = a.position_of(v)?;
                        let pb = b.position_of(v)?;
                        Some(((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt())
                    })
                    .sum::<f64>()
            })
            .sum();
        println!(
            "{alpha:6.1}    {:.6}            {movement:.4}",
            aggregated_stress(&ls, &series)?
        );
    }
    Ok(())
}
