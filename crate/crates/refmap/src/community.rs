//! Community structure: modularity, greedy Louvain optimization, and an
//! exhaustive-search oracle for small graphs.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::simnet::SimilarityNetwork;

/// Node-to-community assignment with dense ids starting at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    n_communities: usize,
}

impl Partition {
    /// Build from raw labels, renumbering densely in order of first
    /// appearance.
    pub fn new(raw: Vec<usize>) -> Partition {
        let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
        let mut assignment = Vec::with_capacity(raw.len());
        for label in raw {
            let next = remap.len();
            let id = *remap.entry(label).or_insert(next);
            assignment.push(id);
        }
        Partition {
            assignment,
            n_communities: remap.len(),
        }
    }

    pub fn singletons(n: usize) -> Partition {
        Partition {
            assignment: (0..n).collect(),
            n_communities: n,
        }
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn n_communities(&self) -> usize {
        self.n_communities
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Members of each community, by community id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.n_communities];
        for (node, &c) in self.assignment.iter().enumerate() {
            m[c].push(node);
        }
        m
    }
}

fn edge_weight(w: f64, weighted: bool) -> f64 {
    if weighted {
        w
    } else {
        1.0
    }
}

/// Newman modularity: Q = sum over communities of
/// w_c / W - (s_c / 2W)^2, with w_c the intra-community edge weight,
/// s_c the total strength of members, and W the total edge weight.
pub fn modularity(net: &SimilarityNetwork, p: &Partition, weighted: bool) -> Result<f64> {
    if p.len() != net.n_nodes() {
        return Err(Error::PartitionMismatch {
            expected: net.n_nodes(),
            actual: p.len(),
        });
    }
    let mut total = 0.0;
    let mut intra = vec![0.0; p.n_communities()];
    let mut strength = vec![0.0; p.n_communities()];
    for e in &net.edges {
        let w = edge_weight(e.weight, weighted);
        total += w;
        let (cu, cv) = (p.community_of(e.u), p.community_of(e.v));
        strength[cu] += w;
        strength[cv] += w;
        if cu == cv {
            intra[cu] += w;
        }
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    let q = intra
        .iter()
        .zip(&strength)
        .map(|(&w_c, &s_c)| w_c / total - (s_c / (2.0 * total)).powi(2))
        .sum();
    Ok(q)
}

/// Working graph for the aggregation levels: adjacency without
/// self-loops plus per-node self-loop weight.
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
}

impl LevelGraph {
    fn n(&self) -> usize {
        self.adj.len()
    }

    /// Total edge weight, self-loops included.
    fn total_weight(&self) -> f64 {
        let between: f64 = self
            .adj
            .iter()
            .flat_map(|a| a.iter().map(|&(_, w)| w))
            .sum::<f64>()
            / 2.0;
        between + self.self_loop.iter().sum::<f64>()
    }

    /// Strength of a node: incident edge weight, self-loops twice.
    fn strength(&self, v: usize) -> f64 {
        self.adj[v].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.self_loop[v]
    }
}

/// Modularity of an assignment over a level graph (self-loops are
/// always intra-community weight).
fn level_q(g: &LevelGraph, assignment: &[usize]) -> f64 {
    let total = g.total_weight();
    if total == 0.0 {
        return 0.0;
    }
    let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut intra = vec![0.0; k];
    let mut strength = vec![0.0; k];
    for v in 0..g.n() {
        let cv = assignment[v];
        strength[cv] += g.strength(v);
        intra[cv] += g.self_loop[v];
        for &(u, w) in &g.adj[v] {
            if u > v && assignment[u] == cv {
                intra[cv] += w;
            }
        }
    }
    intra
        .iter()
        .zip(&strength)
        .map(|(&w_c, &s_c)| w_c / total - (s_c / (2.0 * total)).powi(2))
        .sum()
}

/// Smallest community id with no members (every node starts in one of
/// 0..n, so a free slot always exists while any community holds two).
fn free_slot(comm_strength: &[f64], community: &[usize]) -> usize {
    let mut used = vec![false; comm_strength.len()];
    for &c in community {
        used[c] = true;
    }
    used.iter().position(|u| !u).expect("a free community slot exists")
}

/// Greedy local moving on one level, starting from the given assignment.
/// Returns the community labels and whether anything moved.
fn local_moving(g: &LevelGraph, rng: &mut ChaCha8Rng, init: &[usize]) -> (Vec<usize>, bool) {
    let n = g.n();
    let total = g.total_weight();
    let mut community: Vec<usize> = Partition::new(init.to_vec()).assignment().to_vec();
    let strengths: Vec<f64> = (0..n).map(|v| g.strength(v)).collect();
    let mut comm_strength: Vec<f64> = vec![0.0; n];
    for v in 0..n {
        comm_strength[community[v]] += strengths[v];
    }
    let mut any_move = false;

    if total == 0.0 {
        return (community, false);
    }

    let mut order: Vec<usize> = (0..n).collect();
    loop {
        let mut moved = false;
        order.shuffle(rng);
        for &v in &order {
            let old = community[v];
            comm_strength[old] -= strengths[v];

            // Weight from v to each neighboring community (and its own).
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            links.insert(old, 0.0);
            for &(u, w) in &g.adj[v] {
                *links.entry(community[u]).or_insert(0.0) += w;
            }

            // Gain of joining community c: k_vc / W - s_c * s_v / (2 W^2).
            // Staying put wins unless a move is strictly better; among
            // equally good moves the smallest community id wins because
            // links iterates in ascending id order. Isolating v into a
            // fresh community (gain 0) is also on the table.
            let gain_of = |c: usize, k_vc: f64| {
                k_vc / total - comm_strength[c] * strengths[v] / (2.0 * total * total)
            };
            let mut best = None;
            let mut best_gain = gain_of(old, links[&old]);
            if 0.0 > best_gain + 1e-12 {
                best_gain = 0.0;
                best = Some(free_slot(&comm_strength, &community));
            }
            for (&c, &k_vc) in &links {
                if c == old {
                    continue;
                }
                let gain = gain_of(c, k_vc);
                if gain > best_gain + 1e-12 {
                    best = Some(c);
                    best_gain = gain;
                }
            }
            let best = best.unwrap_or(old);
            if best != old {
                moved = true;
                any_move = true;
            }
            community[v] = best;
            comm_strength[best] += strengths[v];
        }
        if !moved {
            break;
        }
    }
    (community, any_move)
}

/// Collapse communities into super-nodes; intra-community weight becomes
/// a self-loop.
fn aggregate(g: &LevelGraph, community: &[usize]) -> (LevelGraph, Vec<usize>) {
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in community {
        let next = remap.len();
        remap.entry(c).or_insert(next);
    }
    let k = remap.len();
    let dense: Vec<usize> = community.iter().map(|c| remap[c]).collect();

    let mut self_loop = vec![0.0; k];
    let mut between: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
    for v in 0..g.n() {
        let cv = dense[v];
        self_loop[cv] += g.self_loop[v];
        for &(u, w) in &g.adj[v] {
            if u < v {
                continue; // visit each undirected pair once
            }
            let cu = dense[u];
            if cu == cv {
                self_loop[cv] += w;
            } else {
                *between[cv].entry(cu).or_insert(0.0) += w;
                *between[cu].entry(cv).or_insert(0.0) += w;
            }
        }
    }
    let adj = between
        .into_iter()
        .map(|m| m.into_iter().collect())
        .collect();
    (LevelGraph { adj, self_loop }, dense)
}

/// One multi-level pass: local moving at the base level from `init`,
/// then alternate aggregation and local moving until nothing improves.
fn louvain_cycle(base: &LevelGraph, rng: &mut ChaCha8Rng, init: &[usize]) -> Vec<usize> {
    let (community, moved) = local_moving(base, rng, init);
    let mut membership = community.clone();
    if !moved && membership == init {
        return membership;
    }
    let (mut graph, dense) = aggregate(base, &community);
    for m in membership.iter_mut() {
        *m = dense[*m];
    }
    loop {
        let singletons: Vec<usize> = (0..graph.n()).collect();
        let (community, moved) = local_moving(&graph, rng, &singletons);
        if !moved {
            break;
        }
        let (next, dense) = aggregate(&graph, &community);
        for m in membership.iter_mut() {
            *m = dense[*m];
        }
        let shrunk = next.n() < graph.n();
        graph = next;
        if !shrunk {
            break;
        }
    }
    membership
}

/// Perturbation rounds after the first descent. The greedy landscape
/// has strong local optima on small fuzzy graphs; kicking a fraction of
/// nodes to random communities and re-descending (iterated local
/// search) escapes basins that plain restarts cannot.
const LOUVAIN_KICKS: usize = 24;
const KICK_RATE: f64 = 0.25;

/// Full greedy descent: iterate multi-level cycles from `init` until no
/// cycle improves modularity.
fn descend(base: &LevelGraph, rng: &mut ChaCha8Rng, init: Vec<usize>) -> (Vec<usize>, f64) {
    let mut current = init;
    let mut current_q = level_q(base, &current);
    loop {
        let candidate = louvain_cycle(base, rng, &current);
        let q = level_q(base, &candidate);
        if q > current_q + 1e-12 {
            current = candidate;
            current_q = q;
        } else {
            return (current, current_q);
        }
    }
}

/// Louvain community detection: greedy local moving alternated with
/// graph aggregation, wrapped in an iterated local search that perturbs
/// the best partition and re-descends. Deterministic for a fixed seed.
pub fn louvain(net: &SimilarityNetwork, seed: u64, weighted: bool) -> Partition {
    let n = net.n_nodes();
    if n == 0 {
        return Partition::new(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = LevelGraph {
        adj: {
            let mut adj = vec![Vec::new(); n];
            for e in &net.edges {
                let w = edge_weight(e.weight, weighted);
                adj[e.u].push((e.v, w));
                adj[e.v].push((e.u, w));
            }
            adj
        },
        self_loop: vec![0.0; n],
    };

    let (mut best, mut best_q) = descend(&base, &mut rng, (0..n).collect());
    for _ in 0..LOUVAIN_KICKS {
        let mut start = best.clone();
        for slot in start.iter_mut() {
            if rng.gen_bool(KICK_RATE) {
                *slot = rng.gen_range(0..n);
            }
        }
        let (candidate, q) = descend(&base, &mut rng, start);
        if q > best_q + 1e-12 {
            best = candidate;
            best_q = q;
        }
    }
    Partition::new(best)
}

const BRUTE_FORCE_LIMIT: usize = 10;

/// Exhaustive modularity maximization over all set partitions
/// (restricted-growth-string enumeration). Guarded to small graphs.
pub fn brute_force_partition(
    net: &SimilarityNetwork,
    weighted: bool,
) -> Result<(Partition, f64)> {
    let n = net.n_nodes();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyNodes {
            nodes: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if n == 0 {
        return Ok((Partition::new(Vec::new()), 0.0));
    }
    let mut best: Option<(Partition, f64)> = None;
    let mut labels = vec![0usize; n];
    enumerate_partitions(&mut labels, 1, net, weighted, &mut best)?;
    Ok(best.expect("at least one partition enumerated"))
}

fn enumerate_partitions(
    labels: &mut Vec<usize>,
    depth: usize,
    net: &SimilarityNetwork,
    weighted: bool,
    best: &mut Option<(Partition, f64)>,
) -> Result<()> {
    if depth == labels.len() {
        let p = Partition::new(labels.clone());
        let q = modularity(net, &p, weighted)?;
        if best.as_ref().is_none_or(|(_, bq)| q > *bq) {
            *best = Some((p, q));
        }
        return Ok(());
    }
    let max = labels[..depth].iter().copied().max().unwrap_or(0);
    for label in 0..=max + 1 {
        labels[depth] = label;
        enumerate_partitions(labels, depth + 1, net, weighted, best)?;
    }
    labels[depth] = 0;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::WeightedEdge;
    use proptest::prelude::*;

    fn unweighted(n: usize, edges: &[(usize, usize)]) -> SimilarityNetwork {
        weighted_net(n, &edges.iter().map(|&(u, v)| (u, v, 1.0)).collect::<Vec<_>>())
    }

    fn weighted_net(n: usize, edges: &[(usize, usize, f64)]) -> SimilarityNetwork {
        SimilarityNetwork {
            nodes: (0..n).map(|i| format!("N{i}")).collect(),
            edges: edges
                .iter()
                .map(|&(u, v, w)| WeightedEdge {
                    u: u.min(v),
                    v: u.max(v),
                    weight: w,
                })
                .collect(),
            tau: 0.0,
        }
    }

    fn two_triangles() -> SimilarityNetwork {
        unweighted(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    }

    fn two_triangles_bridge() -> SimilarityNetwork {
        unweighted(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
    }

    #[test]
    fn all_in_one_has_zero_modularity() {
        let g = two_triangles_bridge();
        let p = Partition::new(vec![0; 6]);
        assert_eq!(modularity(&g, &p, false).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_triangles_split_at_half() {
        let g = two_triangles();
        let p = Partition::new(vec![0, 0, 0, 1, 1, 1]);
        assert!((modularity(&g, &p, false).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bridged_triangles_modularity() {
        let g = two_triangles_bridge();
        let p = Partition::new(vec![0, 0, 0, 1, 1, 1]);
        let expect = 6.0 / 7.0 - 0.5;
        assert!((modularity(&g, &p, false).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn missing_nodes_are_an_error() {
        let g = two_triangles();
        let p = Partition::new(vec![0, 0, 0]);
        assert!(modularity(&g, &p, false).is_err());
    }

    #[test]
    fn louvain_recovers_bridged_triangles() {
        let g = two_triangles_bridge();
        for seed in 0..20 {
            let p = louvain(&g, seed, false);
            assert_eq!(p.n_communities(), 2, "seed {seed}");
            let a = p.community_of(0);
            assert!(
                (0..3).all(|v| p.community_of(v) == a)
                    && (3..6).all(|v| p.community_of(v) != a),
                "seed {seed}: {:?}",
                p.assignment()
            );
        }
    }

    #[test]
    fn louvain_on_edgeless_graph_is_singletons() {
        let g = unweighted(4, &[]);
        let p = louvain(&g, 7, false);
        assert_eq!(p.n_communities(), 4);
    }

    #[test]
    fn louvain_on_complete_graph_is_one_community() {
        let edges: Vec<(usize, usize)> = (0..5)
            .flat_map(|u| ((u + 1)..5).map(move |v| (u, v)))
            .collect();
        let g = unweighted(5, &edges);
        let p = louvain(&g, 3, false);
        assert_eq!(p.n_communities(), 1);
    }

    #[test]
    fn louvain_never_loses_to_singletons() {
        let g = two_triangles_bridge();
        let singles = Partition::singletons(6);
        let q0 = modularity(&g, &singles, false).unwrap();
        let p = louvain(&g, 11, false);
        assert!(modularity(&g, &p, false).unwrap() >= q0);
    }

    #[test]
    fn brute_force_two_triangles() {
        let g = two_triangles();
        let (p, q) = brute_force_partition(&g, false).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
        assert_eq!(p.n_communities(), 2);
    }

    #[test]
    fn brute_force_single_edge() {
        let g = unweighted(2, &[(0, 1)]);
        let (p, q) = brute_force_partition(&g, false).unwrap();
        assert_eq!(p.n_communities(), 1);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn brute_force_triangle_is_one_community() {
        let g = unweighted(3, &[(0, 1), (1, 2), (0, 2)]);
        let (p, _) = brute_force_partition(&g, false).unwrap();
        assert_eq!(p.n_communities(), 1);
    }

    #[test]
    fn brute_force_guards_large_graphs() {
        let g = unweighted(11, &[]);
        assert!(matches!(
            brute_force_partition(&g, false),
            Err(Error::TooManyNodes { .. })
        ));
    }

    proptest! {
        #[test]
        fn modularity_stays_in_range(
            edges in proptest::collection::vec((0usize..7, 0usize..7, 0.01f64..1.0), 0..15),
            labels in proptest::collection::vec(0usize..4, 7),
        ) {
            let edges: Vec<(usize, usize, f64)> = edges
                .into_iter()
                .filter(|&(u, v, _)| u != v)
                .collect();
            let mut seen = std::collections::HashSet::new();
            let edges: Vec<(usize, usize, f64)> = edges
                .into_iter()
                .filter(|&(u, v, _)| seen.insert((u.min(v), u.max(v))))
                .collect();
            let g = weighted_net(7, &edges);
            let p = Partition::new(labels);
            let q = modularity(&g, &p, true).unwrap();
            prop_assert!((-1.0..=1.0).contains(&q));
        }

        #[test]
        fn modularity_invariant_under_relabeling(
            labels in proptest::collection::vec(0usize..3, 6),
            offset in 1usize..5,
        ) {
            let g = two_triangles_bridge();
            let p1 = Partition::new(labels.clone());
            let relabeled: Vec<usize> = labels.iter().map(|&c| (c + offset) * 13).collect();
            let p2 = Partition::new(relabeled);
            let q1 = modularity(&g, &p1, false).unwrap();
            let q2 = modularity(&g, &p2, false).unwrap();
            prop_assert!((q1 - q2).abs() < 1e-12);
        }

        #[test]
        fn constant_weights_match_unweighted(
            labels in proptest::collection::vec(0usize..3, 6),
            k in 0.1f64..5.0,
        ) {
            let edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)];
            let scaled: Vec<(usize, usize, f64)> =
                edges.iter().map(|&(u, v)| (u, v, k)).collect();
            let g = weighted_net(6, &scaled);
            let p = Partition::new(labels);
            let qw = modularity(&g, &p, true).unwrap();
            let qu = modularity(&g, &p, false).unwrap();
            prop_assert!((qw - qu).abs() < 1e-12);
        }
    }
}
