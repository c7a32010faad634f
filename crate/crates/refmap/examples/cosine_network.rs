//! From an occurrence matrix to a thresholded cosine network with its
//! descriptive statistics.
//!
//! ```bash
//! cargo run --example cosine_network
//! ```

use std::collections::BTreeSet;

use refmap::corpus::{build_matrix, moving_windows};
use refmap::ingest::{clean_corpus, parse_export, to_documents, NormalizationRules};
use refmap::simnet::{avg_clustering, cosine_matrix, density, threshold_network};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (docs, _) = to_documents(&parse_export(include_str!("data/sample_export.txt"))?);
    let (corpus, _) = clean_corpus(&docs, &NormalizationRules::default())?;

    // One window covering every year, all surviving venues admitted.
    let windows = moving_windows(&corpus, 8, false)?;
    let venues: BTreeSet<String> = corpus
        .docs
        .iter()
        .flat_map(|d| d.refs.iter().filter_map(|r| r.venue_raw.clone()))
        .collect();
    let m = build_matrix(&windows[0], &corpus, &venues)?;
    println!("matrix: {} documents x {} venues", m.n_docs(), m.n_venues());

    let s = cosine_matrix(&m)?;
    println!("\nstrongest venue pairs:");
    let mut pairs: Vec<(f64, &str, &str)> = Vec::new();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            if s.value(i, j) > 0.0 {
                pairs.push((s.value(i, j), &s.venues[i], &s.venues[j]));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for (cos, a, b) in pairs.iter().take(8) {
        println!("  {cos:.4}  {a}  --  {b}");
    }

    let net = threshold_network(&s, 0.2)?;
    println!(
        "\nnetwork at cosine > 0.2: {} nodes, {} edges ({} endpoints)",
        net.n_nodes(),
        net.n_edges(),
        net.n_edge_endpoints()
    );
    println!("density            {:.3}", density(&net)?);
    println!("avg clustering     {:.3}", avg_clustering(&net));
    Ok(())
}
