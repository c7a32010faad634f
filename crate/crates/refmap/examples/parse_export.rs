//! Parse a field-tagged export into records and documents.
//!
//! ```bash
//! cargo run --example parse_export
//! ```

use refmap::ingest::{parse_export, to_documents};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = include_str!("data/sample_export.txt");
    let records = parse_export(text)?;
    println!("parsed {} records", records.len());

    let (docs, warnings) = to_documents(&records);
    println!(
        "{} documents, {} rejected for missing year",
        docs.len(),
        warnings.rejected_missing_year
    );

    let first = &docs[0];
    println!("\nfirst document: {} ({})", first.id, first.pub_year);
    for r in &first.refs {
        println!(
            "  {:24} year={:?} volume={:?} page={:?}",
            r.venue_raw.as_deref().unwrap_or("<none>"),
            r.year,
            r.volume,
            r.page
        );
    }

    // Truncated input is rejected with the byte offset and last good tag.
    let truncated = "PT J\nUT X\nPY 1999\n";
    match parse_export(truncated) {
        Err(e) => println!("\ntruncated input: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
