//! Venue frequencies, the strict citation threshold, and the rank-
//! frequency log-log fit.
//!
//! ```bash
//! cargo run --example frequency_threshold
//! ```

use refmap::corpus::{apply_threshold, loglog_fit, VenueFrequencyTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A table following freq(rank) = C / rank exactly.
    let c: u64 = 27_720; // lcm(1..=12) keeps every count integral
    let mut table = VenueFrequencyTable::default();
    for r in 1..=12u64 {
        table.entries.insert(format!("VENUE {r:02}"), c / r);
    }

    let (slope, intercept, r2) = loglog_fit(&table)?;
    println!("log-log fit: slope {slope:.4}, intercept {intercept:.4}, r^2 {r2:.4}");

    // The threshold is strict: a venue cited exactly min_count times is out.
    let kept = apply_threshold(&table, c / 6);
    println!(
        "\nvenues cited more than {} times: {:?}",
        c / 6,
        kept.iter().collect::<Vec<_>>()
    );
    println!(
        "VENUE 06 itself (cited exactly {}) is excluded: {}",
        c / 6,
        !kept.contains("VENUE 06")
    );
    Ok(())
}
