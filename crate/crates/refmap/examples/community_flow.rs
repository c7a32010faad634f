//! Temporal community flows: alignment, split/merge detection, and the
//! alluvial band geometry.
//!
//! ```bash
//! cargo run --example community_flow
//! ```

use refmap::community::Partition;
use refmap::flow::{
    align_communities, alluvial_layout, detect_events, event_counts, series_from_slices,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let nodes: Vec<String> = (0..8).map(|i| format!("v{i}")).collect();
    // One community carries on, a second one splits at the last boundary.
    let series = series_from_slices(vec![
        (2001, nodes.clone(), Partition::new(vec![0, 0, 0, 0, 1, 1, 1, 1])),
        (2002, nodes.clone(), Partition::new(vec![0, 0, 0, 0, 1, 1, 1, 1])),
        (2003, nodes, Partition::new(vec![0, 0, 0, 0, 1, 1, 2, 2])),
    ]);

    let g = align_communities(&series, 0.3)?;
    println!("flow edges:");
    for e in &g.edges {
        println!(
            "  {} c{} -> {} c{}  mass {} overlap {:.2} significant {}",
            g.labels[e.from_slice],
            e.from_community,
            g.labels[e.from_slice + 1],
            e.to_community,
            e.mass,
            e.overlap,
            e.significant
        );
    }

    let events = detect_events(&g);
    println!("\nevents: {:?}", event_counts(&events));
    for e in &events {
        println!(
            "  {} at {} community {} -> {:?}",
            e.kind.as_str(),
            g.labels[e.slice],
            e.community,
            e.counterparts
        );
    }

    // Reversing time turns the split into a merge.
    let back = align_communities(&series.reversed(), 0.3)?;
    println!("\nreversed: {:?}", event_counts(&detect_events(&back)));

    let geo = alluvial_layout(&g);
    println!("\nband geometry (unit square):");
    for b in &geo.bands {
        println!(
            "  slice {} community {}: y [{:.3}, {:.3}]",
            b.slice, b.community, b.y0, b.y1
        );
    }
    Ok(())
}
