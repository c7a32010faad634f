use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refmap::community::{brute_force_partition, louvain, modularity};
use refmap::simnet::{SimilarityNetwork, WeightedEdge};

fn random_weighted_graph(seed: u64) -> SimilarityNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=8usize);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.5) {
                edges.push(WeightedEdge { u, v, weight: rng.gen_range(0.05..1.0) });
            }
        }
    }
    SimilarityNetwork { nodes: (0..n).map(|i| format!("V{i}")).collect(), edges, tau: 0.0 }
}

fn main() {
    let g = random_weighted_graph(107);
    println!("n={}", g.n_nodes());
    for e in &g.edges { println!("  {}-{} w={:.4}", e.u, e.v, e.weight); }
    let (p_opt, q_opt) = brute_force_partition(&g, true).unwrap();
    println!("optimum: {:?} Q={:.6}", p_opt.assignment(), q_opt);
    let mut hits = 0;
    for seed in 0..100u64 {
        let p = louvain(&g, seed, true);
        let q = modularity(&g, &p, true).unwrap();
        if q >= 0.95 * q_opt { hits += 1; } else if seed < 5 {
            println!("seed {seed}: {:?} Q={:.6}", p.assignment(), q);
        }
    }
    println!("hits {hits}/100 (each = best of 16 restarts)");
}
