//! Venue normalization: sequence-number stripping, conference-name
//! merges, the drop list, and singleton removal.
//!
//! ```bash
//! cargo run --example clean_corpus
//! ```

use refmap::corpus::venue_frequencies;
use refmap::ingest::{
    clean_corpus, normalize_venue, parse_export, to_documents, NormalizationRules,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rules = NormalizationRules::default();

    for raw in [
        "5TH ANN M COGN SCI",
        "7th Ann M Cogn Sci",
        "ANN C COGN SCI",
        "P 6 INT JOINT C AR",
        "THESIS",
        "Q J EXP PSYCHOL",
        "Q J EXP PSYCHOL-A",
    ] {
        match normalize_venue(raw, &rules) {
            Some(name) => println!("{raw:24} -> {name}"),
            None => println!("{raw:24} -> (dropped)"),
        }
    }

    let (docs, _) = to_documents(&parse_export(include_str!("data/sample_export.txt"))?);
    let (corpus, report) = clean_corpus(&docs, &rules)?;
    println!(
        "\nrefs in {}, dropped by rule {}, dropped singleton {}, out {} ({:.1}% retained)",
        report.refs_in,
        report.refs_dropped_by_rule,
        report.refs_dropped_singleton,
        report.refs_out,
        report.pct_retained()
    );

    println!("\nsurviving venues:");
    for (venue, count) in venue_frequencies(&corpus).ranked() {
        println!("  {count:2}  {venue}");
    }
    Ok(())
}
