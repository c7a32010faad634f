//! Louvain community detection against the exhaustive-search oracle.
//!
//! ```bash
//! cargo run --example communities
//! ```

use refmap::community::{brute_force_partition, louvain, modularity, Partition};
use refmap::simnet::{SimilarityNetwork, WeightedEdge};

fn net(n: usize, edges: &[(usize, usize)]) -> SimilarityNetwork {
    SimilarityNetwork {
        nodes: (0..n).map(|i| format!("N{i}")).collect(),
        edges: edges
            .iter()
            .map(|&(u, v)| WeightedEdge { u, v, weight: 1.0 })
            .collect(),
        tau: 0.0,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Two triangles joined by a bridge: the classic two-community graph.
    let g = net(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);

    let p = louvain(&g, 42, false);
    let q = modularity(&g, &p, false)?;
    println!("louvain: {} communities, Q = {q:.4}", p.n_communities());
    println!("assignment: {:?}", p.assignment());

    let (best, q_opt) = brute_force_partition(&g, false)?;
    println!(
        "\nexhaustive optimum: {} communities, Q = {q_opt:.4}",
        best.n_communities()
    );
    println!("louvain reaches {:.1}% of the optimum", 100.0 * q / q_opt);

    // Reference values for hand-checkable partitions.
    let triangles = Partition::new(vec![0, 0, 0, 1, 1, 1]);
    let together = Partition::new(vec![0; 6]);
    println!(
        "\nQ(triangle split) = {:.4}   Q(all in one) = {:.4}",
        modularity(&g, &triangles, false)?,
        modularity(&g, &together, false)?
    );
    Ok(())
}
