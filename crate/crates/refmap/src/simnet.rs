//! Cosine similarity between venue citation profiles, thresholded
//! similarity networks, and the descriptive network statistics reported
//! per window (density, clustering).

use std::collections::HashSet;

use crate::corpus::OccurrenceMatrix;
use crate::error::{Error, Result};

/// Symmetric matrix of cosines between venue columns, diagonal 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub venues: Vec<String>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(venues: Vec<String>, values: Vec<f64>) -> SimilarityMatrix {
        assert_eq!(values.len(), venues.len() * venues.len());
        SimilarityMatrix { venues, values }
    }

    pub fn len(&self) -> usize {
        self.venues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.venues.is_empty()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.venues.len() + j]
    }
}

/// Cosine-normalize an occurrence matrix: value(u, v) is the cosine of
/// the angle between the two venues' count vectors over citing documents.
pub fn cosine_matrix(m: &OccurrenceMatrix) -> Result<SimilarityMatrix> {
    let n = m.n_venues();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "cosine matrix needs at least 2 venues, got {n}"
        )));
    }
    let mut norms = Vec::with_capacity(n);
    for j in 0..n {
        let norm = m.column_dot(j, j).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNormColumn {
                venue: m.venues[j].clone(),
            });
        }
        norms.push(norm);
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in i + 1..n {
            let c = (m.column_dot(i, j) / (norms[i] * norms[j])).clamp(0.0, 1.0);
            values[i * n + j] = c;
            values[j * n + i] = c;
        }
    }
    Ok(SimilarityMatrix {
        venues: m.venues.clone(),
        values,
    })
}

/// Undirected weighted edge, endpoints as node indices with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Weighted undirected venue network left after thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityNetwork {
    pub nodes: Vec<String>,
    /// Sorted by (u, v); no self-loops.
    pub edges: Vec<WeightedEdge>,
    pub tau: f64,
}

impl SimilarityNetwork {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Doubled edge count, the arc count convention used by the
    /// published descriptive tables.
    pub fn n_edge_endpoints(&self) -> usize {
        2 * self.edges.len()
    }

    /// Adjacency lists with weights.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.u].push((e.v, e.weight));
            adj[e.v].push((e.u, e.weight));
        }
        adj
    }
}

/// Keep edges with cosine strictly greater than `tau`.
pub fn threshold_network(s: &SimilarityMatrix, tau: f64) -> Result<SimilarityNetwork> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::Config(format!(
            "cosine threshold must lie in [0, 1), got {tau}"
        )));
    }
    let n = s.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let w = s.value(u, v);
            if w > tau {
                edges.push(WeightedEdge { u, v, weight: w });
            }
        }
    }
    Ok(SimilarityNetwork {
        nodes: s.venues.clone(),
        edges,
        tau,
    })
}

/// Realized over possible edges: 2E / (N(N-1)).
pub fn density(net: &SimilarityNetwork) -> Result<f64> {
    let n = net.n_nodes();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "density needs at least 2 nodes, got {n}"
        )));
    }
    Ok(net.n_edge_endpoints() as f64 / (n as f64 * (n - 1) as f64))
}

/// Mean local clustering coefficient over all nodes; nodes of degree
/// below 2 contribute 0. Topology only, weights ignored.
pub fn avg_clustering(net: &SimilarityNetwork) -> f64 {
    let n = net.n_nodes();
    if n == 0 {
        return 0.0;
    }
    let mut neighbors: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    for e in &net.edges {
        neighbors[e.u].insert(e.v);
        neighbors[e.v].insert(e.u);
    }
    let mut total = 0.0;
    for v in 0..n {
        let deg = neighbors[v].len();
        if deg < 2 {
            continue;
        }
        let nbrs: Vec<usize> = neighbors[v].iter().copied().collect();
        let mut links = 0usize;
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                if neighbors[a].contains(&b) {
                    links += 1;
                }
            }
        }
        total += links as f64 / (deg * (deg - 1) / 2) as f64;
    }
    total / n as f64
}

/// Per-window descriptive statistics in the shape of the published table.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkMetrics {
    pub n_nodes: usize,
    pub n_edge_endpoints: usize,
    pub n_communities: usize,
    pub modularity: f64,
    pub avg_clustering: f64,
    pub density: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::OccurrenceMatrix;
    use proptest::prelude::*;

    fn matrix(rows: &[(&str, &[(&str, u32)])]) -> OccurrenceMatrix {
        let triplets: Vec<(String, String, u32)> = rows
            .iter()
            .flat_map(|(doc, cites)| {
                cites
                    .iter()
                    .map(move |(v, c)| (doc.to_string(), v.to_string(), *c))
            })
            .collect();
        OccurrenceMatrix::from_triplets(0, &triplets).unwrap()
    }

    fn net(n: usize, edges: &[(usize, usize)]) -> SimilarityNetwork {
        SimilarityNetwork {
            nodes: (0..n).map(|i| format!("N{i}")).collect(),
            edges: edges
                .iter()
                .map(|&(u, v)| WeightedEdge {
                    u: u.min(v),
                    v: u.max(v),
                    weight: 1.0,
                })
                .collect(),
            tau: 0.0,
        }
    }

    #[test]
    fn identical_columns_have_cosine_one() {
        let m = matrix(&[
            ("d1", &[("A", 2), ("B", 2)]),
            ("d2", &[("A", 1), ("B", 1)]),
        ]);
        let s = cosine_matrix(&m).unwrap();
        assert!((s.value(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_supports_have_cosine_zero() {
        let m = matrix(&[("d1", &[("A", 3)]), ("d2", &[("B", 5)])]);
        let s = cosine_matrix(&m).unwrap();
        assert_eq!(s.value(0, 1), 0.0);
    }

    #[test]
    fn hand_computed_cosine() {
        // col A = (1,1,0), col B = (1,0,1): dot 1, norms sqrt(2) -> 0.5.
        let m = matrix(&[
            ("d1", &[("A", 1), ("B", 1)]),
            ("d2", &[("A", 1)]),
            ("d3", &[("B", 1)]),
        ]);
        let s = cosine_matrix(&m).unwrap();
        assert!((s.value(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn diagonal_is_exactly_one() {
        let m = matrix(&[("d1", &[("A", 3), ("B", 1)]), ("d2", &[("B", 2)])]);
        let s = cosine_matrix(&m).unwrap();
        assert_eq!(s.value(0, 0), 1.0);
        assert_eq!(s.value(1, 1), 1.0);
    }

    #[test]
    fn threshold_zero_keeps_positive_cosines() {
        let m = matrix(&[
            ("d1", &[("A", 1), ("B", 1)]),
            ("d2", &[("B", 1), ("C", 1)]),
        ]);
        let s = cosine_matrix(&m).unwrap();
        let n = threshold_network(&s, 0.0).unwrap();
        // A-B and B-C share documents; A-C do not.
        assert_eq!(n.n_edges(), 2);
    }

    #[test]
    fn threshold_near_one_keeps_duplicate_pair() {
        let m = matrix(&[
            ("d1", &[("A", 2), ("B", 2), ("C", 1)]),
            ("d2", &[("A", 1), ("B", 1)]),
        ]);
        let s = cosine_matrix(&m).unwrap();
        let n = threshold_network(&s, 1.0 - 1e-9).unwrap();
        assert_eq!(n.n_edges(), 1);
        assert_eq!((n.edges[0].u, n.edges[0].v), (0, 1));
    }

    #[test]
    fn threshold_is_strict() {
        // Pairwise cosines {0.5, 0.2, 0.19}: tau 0.2 keeps only 0.5.
        let s = SimilarityMatrix::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![1.0, 0.5, 0.2, 0.5, 1.0, 0.19, 0.2, 0.19, 1.0],
        );
        let n = threshold_network(&s, 0.2).unwrap();
        assert_eq!(n.n_edges(), 1);
        assert!((n.edges[0].weight - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tau_one_is_rejected() {
        let s = SimilarityMatrix::new(vec!["A".into(), "B".into()], vec![1.0, 0.3, 0.3, 1.0]);
        assert!(threshold_network(&s, 1.0).is_err());
    }

    #[test]
    fn density_matches_published_rows() {
        // Published: N = 57 with 720 edge endpoints -> 0.226.
        let d: f64 = 720.0 / (57.0 * 56.0);
        assert!((d - 0.226).abs() < 1e-3);
        // Published: N = 203 with 4130 edge endpoints -> 0.101.
        let d: f64 = 4130.0 / (203.0 * 202.0);
        assert!((d - 0.101).abs() < 1e-3);
    }

    #[test]
    fn complete_graph_has_density_one() {
        let g = net(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert!((density(&g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_network_has_density_zero() {
        let g = net(5, &[]);
        assert_eq!(density(&g).unwrap(), 0.0);
    }

    #[test]
    fn single_node_density_is_an_error() {
        let g = net(1, &[]);
        assert!(density(&g).is_err());
    }

    #[test]
    fn triangle_clusters_fully() {
        let g = net(3, &[(0, 1), (1, 2), (0, 2)]);
        assert!((avg_clustering(&g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_has_no_triangles() {
        let g = net(3, &[(0, 1), (1, 2)]);
        assert_eq!(avg_clustering(&g), 0.0);
    }

    #[test]
    fn four_cycle_with_diagonal() {
        // Edges 12,23,34,41,13 -> (2/3 + 1 + 2/3 + 1)/4 = 5/6.
        let g = net(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]);
        assert!((avg_clustering(&g) - 5.0 / 6.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cosine_invariant_under_row_permutation_and_column_scaling(
            counts in proptest::collection::vec(
                (0u32..4, 0u32..4), 3..8),
            scale in 1u32..5,
        ) {
            // Two venues over k documents; B scaled by a positive factor.
            let base: Vec<(String, String, u32)> = counts
                .iter()
                .enumerate()
                .flat_map(|(i, &(a, b))| {
                    vec![
                        (format!("d{i}"), "A".to_string(), a),
                        (format!("d{i}"), "B".to_string(), b),
                    ]
                })
                .filter(|(_, _, c)| *c > 0)
                .collect();
            let scaled: Vec<(String, String, u32)> = base
                .iter()
                .map(|(d, v, c)| {
                    let c = if v == "B" { c * scale } else { *c };
                    (d.clone(), v.clone(), c)
                })
                .collect();
            let mut permuted = base.clone();
            permuted.reverse();

            let build = |t: &[(String, String, u32)]| {
                OccurrenceMatrix::from_triplets(0, t)
                    .ok()
                    .filter(|m| m.n_venues() == 2)
                    .and_then(|m| cosine_matrix(&m).ok())
                    .map(|s| s.value(0, 1))
            };
            if let (Some(a), Some(b), Some(c)) = (build(&base), build(&scaled), build(&permuted)) {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((a - c).abs() < 1e-12);
            }
        }

        #[test]
        fn edge_count_non_increasing_in_tau(
            weights in proptest::collection::vec(0.0f64..1.0, 6),
            tau1 in 0.0f64..0.99,
            tau2 in 0.0f64..0.99,
        ) {
            let n = 4;
            let mut values = vec![0.0; n * n];
            let mut k = 0;
            for i in 0..n {
                values[i * n + i] = 1.0;
                for j in i + 1..n {
                    values[i * n + j] = weights[k];
                    values[j * n + i] = weights[k];
                    k += 1;
                }
            }
            let s = SimilarityMatrix::new(
                (0..n).map(|i| format!("V{i}")).collect(),
                values,
            );
            let (lo, hi) = if tau1 <= tau2 { (tau1, tau2) } else { (tau2, tau1) };
            let e_lo = threshold_network(&s, lo).unwrap().n_edges();
            let e_hi = threshold_network(&s, hi).unwrap().n_edges();
            prop_assert!(e_hi <= e_lo);
        }
    }
}
