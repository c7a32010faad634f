//! Factor analysis of a planted two-block corpus: correlation matrix,
//! principal components, Varimax rotation, interfactorial complexity.
//!
//! ```bash
//! cargo run --example factor_analysis
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refmap::corpus::OccurrenceMatrix;
use refmap::factors::{
    correlation, interfactorial_complexity, principal_components, rotate_varimax,
};

/// Documents decide independently whether to cite the A block and the B
/// block, so the two venue groups correlate within themselves but not
/// with each other.
fn planted_matrix() -> OccurrenceMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut triplets = Vec::new();
    for doc in 0..160 {
        let cites_a = rng.gen_bool(0.5);
        let cites_b = rng.gen_bool(0.5);
        for (block, active) in [("A", cites_a), ("B", cites_b)] {
            for v in 1..=6 {
                let lambda = if active { 3 } else { 0 };
                let count = rng.gen_range(0..=lambda) + u32::from(active);
                if count > 0 {
                    triplets.push((format!("d{doc}"), format!("{block}{v}"), count));
                }
            }
        }
    }
    OccurrenceMatrix::from_triplets(0, &triplets).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = planted_matrix();
    println!("matrix: {} documents x {} venues", m.n_docs(), m.n_venues());

    let c = correlation(&m)?;
    let unrotated = principal_components(&c, 2)?;
    println!(
        "2 factors explain {:.1}% of variance (eigenvalues {:.2}, {:.2})",
        unrotated.pct_variance, unrotated.eigenvalues[0], unrotated.eigenvalues[1]
    );

    let sol = rotate_varimax(&unrotated, true);
    println!("\nloadings after Varimax rotation:");
    for (venue, row) in sol.venues.iter().zip(&sol.loadings) {
        println!("  {venue:4} {:6.3} {:6.3}", row[0], row[1]);
    }

    // Each block claims one factor; no venue loads on both.
    println!();
    for venue in ["A1", "B1"] {
        let k = interfactorial_complexity(&sol, venue, 0.4)?;
        println!("{venue} loads on {k} factor(s) at |loading| >= 0.4");
    }
    Ok(())
}
