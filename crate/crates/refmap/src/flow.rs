//! Temporal community flows: align partitions of consecutive windows by
//! shared membership, classify continuation/split/merge/birth/death
//! events, and lay the result out as stacked bands with ribbons.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::community::Partition;
use crate::error::{Error, Result};

/// Community structure of one window: node names plus their partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunitySlice {
    pub label: i32,
    pub nodes: Vec<String>,
    pub partition: Partition,
}

/// Ordered sequence of window partitions, labels strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunitySeries {
    pub slices: Vec<CommunitySlice>,
}

impl CommunitySeries {
    /// The same series run backwards in time (labels renumbered to stay
    /// increasing).
    pub fn reversed(&self) -> CommunitySeries {
        let labels: Vec<i32> = self.slices.iter().map(|s| s.label).collect();
        let mut slices: Vec<CommunitySlice> = self.slices.iter().rev().cloned().collect();
        for (slice, label) in slices.iter_mut().zip(&labels) {
            slice.label = *label;
        }
        CommunitySeries { slices }
    }
}

/// Membership flow between a community and one in the next slice.
///
/// `overlap` follows the forward convention: shared members over the
/// from-community's presence in the carried-forward universe (nodes
/// present in both slices). `overlap_incoming` is the same mass against
/// the receiving community, which is what incoming-edge classification
/// uses so that reversing time exchanges splits and merges exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowEdge {
    pub from_slice: usize,
    pub from_community: usize,
    pub to_community: usize,
    pub mass: usize,
    pub overlap: f64,
    pub overlap_incoming: f64,
    pub significant: bool,
}

/// Communities per slice linked by membership overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    pub labels: Vec<i32>,
    /// community_sizes[slice][community] = member count.
    pub community_sizes: Vec<Vec<usize>>,
    pub edges: Vec<FlowEdge>,
    pub min_overlap: f64,
    pub warnings: Vec<String>,
}

impl FlowGraph {
    pub fn n_slices(&self) -> usize {
        self.labels.len()
    }

    fn edges_from(&self, slice: usize, community: usize) -> impl Iterator<Item = &FlowEdge> {
        self.edges
            .iter()
            .filter(move |e| e.from_slice == slice && e.from_community == community)
    }

    fn edges_into(&self, slice: usize, community: usize) -> impl Iterator<Item = &FlowEdge> {
        self.edges
            .iter()
            .filter(move |e| e.from_slice + 1 == slice && e.to_community == community)
    }
}

/// Link communities of consecutive slices by shared members.
///
/// An edge exists for every pair sharing at least one member. Overlaps
/// are measured inside the universe U of nodes present in both slices,
/// because window node sets grow and absolute denominators would read
/// growth as splitting. Edges at or above `min_overlap` are significant.
pub fn align_communities(series: &CommunitySeries, min_overlap: f64) -> Result<FlowGraph> {
    if series.slices.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "flow alignment needs at least 2 slices, got {}",
            series.slices.len()
        )));
    }
    if !(min_overlap > 0.0 && min_overlap <= 1.0) {
        return Err(Error::Config(format!(
            "min_overlap must lie in (0, 1], got {min_overlap}"
        )));
    }
    for w in series.slices.windows(2) {
        if w[1].label <= w[0].label {
            return Err(Error::Config(format!(
                "slice labels must increase strictly: {} then {}",
                w[0].label, w[1].label
            )));
        }
    }
    for s in &series.slices {
        if s.partition.len() != s.nodes.len() {
            return Err(Error::PartitionMismatch {
                expected: s.nodes.len(),
                actual: s.partition.len(),
            });
        }
    }

    let community_sizes: Vec<Vec<usize>> = series
        .slices
        .iter()
        .map(|s| s.partition.members().iter().map(Vec::len).collect())
        .collect();

    let mut edges = Vec::new();
    let mut warnings = Vec::new();
    for (t, pair) in series.slices.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let comm_a: HashMap<&str, usize> = a
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), a.partition.community_of(i)))
            .collect();
        let comm_b: HashMap<&str, usize> = b
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), b.partition.community_of(i)))
            .collect();

        // Shared universe and per-community presence inside it.
        let mut mass: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut in_universe_a: HashMap<usize, usize> = HashMap::new();
        let mut in_universe_b: HashMap<usize, usize> = HashMap::new();
        let mut shared_any = false;
        for node in &a.nodes {
            if let (Some(&ca), Some(&cb)) = (comm_a.get(node.as_str()), comm_b.get(node.as_str()))
            {
                shared_any = true;
                *mass.entry((ca, cb)).or_insert(0) += 1;
                *in_universe_a.entry(ca).or_insert(0) += 1;
                *in_universe_b.entry(cb).or_insert(0) += 1;
            }
        }
        if !shared_any {
            warnings.push(format!(
                "slices {} and {} share no nodes; no flow edges",
                a.label, b.label
            ));
            continue;
        }
        for ((ca, cb), m) in mass {
            let overlap = m as f64 / in_universe_a[&ca] as f64;
            let overlap_incoming = m as f64 / in_universe_b[&cb] as f64;
            edges.push(FlowEdge {
                from_slice: t,
                from_community: ca,
                to_community: cb,
                mass: m,
                overlap,
                overlap_incoming,
                significant: overlap >= min_overlap,
            });
        }
    }

    Ok(FlowGraph {
        labels: series.slices.iter().map(|s| s.label).collect(),
        community_sizes,
        edges,
        min_overlap,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FlowEventKind {
    Continuation,
    Split,
    Merge,
    Birth,
    Death,
}

impl FlowEventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlowEventKind::Continuation => "CONTINUATION",
            FlowEventKind::Split => "SPLIT",
            FlowEventKind::Merge => "MERGE",
            FlowEventKind::Birth => "BIRTH",
            FlowEventKind::Death => "DEATH",
        }
    }
}

/// One classified event for a community at a slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowEvent {
    pub kind: FlowEventKind,
    pub slice: usize,
    pub community: usize,
    /// Successor communities (outgoing kinds) or predecessor communities
    /// (incoming kinds) involved in the event.
    pub counterparts: Vec<usize>,
}

/// Classify every community by its significant flow edges.
///
/// Outgoing side (slices before the last): no significant successor is a
/// DEATH, exactly one a CONTINUATION, several a SPLIT. Incoming side
/// (slices after the first): no significant predecessor is a BIRTH,
/// several a MERGE. Incoming significance uses the receiving community's
/// own overlap so the classification commutes with time reversal.
pub fn detect_events(g: &FlowGraph) -> Vec<FlowEvent> {
    let mut events = Vec::new();
    let last = g.n_slices() - 1;
    for slice in 0..g.n_slices() {
        for community in 0..g.community_sizes[slice].len() {
            if slice < last {
                let out: Vec<usize> = g
                    .edges_from(slice, community)
                    .filter(|e| e.significant)
                    .map(|e| e.to_community)
                    .collect();
                let kind = match out.len() {
                    0 => FlowEventKind::Death,
                    1 => FlowEventKind::Continuation,
                    _ => FlowEventKind::Split,
                };
                events.push(FlowEvent {
                    kind,
                    slice,
                    community,
                    counterparts: out,
                });
            }
            if slice > 0 {
                let inc: Vec<usize> = g
                    .edges_into(slice, community)
                    .filter(|e| e.overlap_incoming >= g.min_overlap)
                    .map(|e| e.from_community)
                    .collect();
                match inc.len() {
                    0 => events.push(FlowEvent {
                        kind: FlowEventKind::Birth,
                        slice,
                        community,
                        counterparts: inc,
                    }),
                    1 => {}
                    _ => events.push(FlowEvent {
                        kind: FlowEventKind::Merge,
                        slice,
                        community,
                        counterparts: inc,
                    }),
                }
            }
        }
    }
    events
}

/// Count events by kind.
pub fn event_counts(events: &[FlowEvent]) -> BTreeMap<FlowEventKind, usize> {
    let mut counts = BTreeMap::new();
    for e in events {
        *counts.entry(e.kind).or_insert(0) += 1;
    }
    counts
}

/// One community band at one slice, in unit-square coordinates
/// (y grows downward for rendering).
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub slice: usize,
    pub community: usize,
    pub x: f64,
    pub y0: f64,
    pub y1: f64,
}

/// One ribbon between adjacent bands; the vertical extents on each side
/// are proportional to the edge mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Ribbon {
    pub from_slice: usize,
    pub from_community: usize,
    pub to_community: usize,
    pub mass: usize,
    pub x0: f64,
    pub from_top: f64,
    pub from_bottom: f64,
    pub x1: f64,
    pub to_top: f64,
    pub to_bottom: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlluvialGeometry {
    pub bands: Vec<Band>,
    pub ribbons: Vec<Ribbon>,
}

const BAND_GAP: f64 = 0.02;

/// Stack communities per slice by descending size with a fixed gap of
/// 0.02 of total height, and route one ribbon per flow edge with heights
/// proportional to mass. All coordinates live in the unit square.
pub fn alluvial_layout(g: &FlowGraph) -> AlluvialGeometry {
    let n_slices = g.n_slices();
    let x_of = |slice: usize| {
        if n_slices == 1 {
            0.0
        } else {
            slice as f64 / (n_slices - 1) as f64
        }
    };

    // Band extents per slice.
    let mut band_at: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
    let mut bands = Vec::new();
    for slice in 0..n_slices {
        let sizes = &g.community_sizes[slice];
        let mut order: Vec<usize> = (0..sizes.len()).collect();
        order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
        let total: usize = sizes.iter().sum();
        let gaps = BAND_GAP * sizes.len().saturating_sub(1) as f64;
        let unit = if total == 0 {
            0.0
        } else {
            (1.0 - gaps) / total as f64
        };
        let mut y = 0.0;
        for &community in &order {
            let h = sizes[community] as f64 * unit;
            band_at.insert((slice, community), (y, y + h));
            bands.push(Band {
                slice,
                community,
                x: x_of(slice),
                y0: y,
                y1: y + h,
            });
            y += h + BAND_GAP;
        }
    }
    bands.sort_by_key(|b| (b.slice, b.community));

    // Ribbon slots: stack each band's outgoing (incoming) edges from the
    // top, ordered by the opposite band's vertical position.
    let unit_of = |slice: usize| {
        let sizes = &g.community_sizes[slice];
        let total: usize = sizes.iter().sum();
        let gaps = BAND_GAP * sizes.len().saturating_sub(1) as f64;
        if total == 0 {
            0.0
        } else {
            (1.0 - gaps) / total as f64
        }
    };

    let mut ribbons: Vec<Ribbon> = Vec::new();
    let mut out_cursor: HashMap<(usize, usize), f64> = HashMap::new();
    let mut in_cursor: HashMap<(usize, usize), f64> = HashMap::new();

    let mut edge_order: Vec<&FlowEdge> = g.edges.iter().collect();
    edge_order.sort_by(|a, b| {
        let ka = (
            a.from_slice,
            band_at[&(a.from_slice, a.from_community)]
                .0
                .to_bits(),
            band_at[&(a.from_slice + 1, a.to_community)].0.to_bits(),
        );
        let kb = (
            b.from_slice,
            band_at[&(b.from_slice, b.from_community)]
                .0
                .to_bits(),
            band_at[&(b.from_slice + 1, b.to_community)].0.to_bits(),
        );
        ka.cmp(&kb)
    });

    for e in edge_order {
        let from_key = (e.from_slice, e.from_community);
        let to_key = (e.from_slice + 1, e.to_community);
        let from_h = e.mass as f64 * unit_of(e.from_slice);
        let to_h = e.mass as f64 * unit_of(e.from_slice + 1);
        let from_top = *out_cursor.entry(from_key).or_insert(band_at[&from_key].0);
        let to_top = *in_cursor.entry(to_key).or_insert(band_at[&to_key].0);
        out_cursor.insert(from_key, from_top + from_h);
        in_cursor.insert(to_key, to_top + to_h);
        ribbons.push(Ribbon {
            from_slice: e.from_slice,
            from_community: e.from_community,
            to_community: e.to_community,
            mass: e.mass,
            x0: x_of(e.from_slice),
            from_top,
            from_bottom: from_top + from_h,
            x1: x_of(e.from_slice + 1),
            to_top,
            to_bottom: to_top + to_h,
            significant: e.significant,
        });
    }
    ribbons.sort_by_key(|r| (r.from_slice, r.from_community, r.to_community));

    AlluvialGeometry { bands, ribbons }
}

/// Build a series from (label, nodes, partition) triples.
pub fn series_from_slices(slices: Vec<(i32, Vec<String>, Partition)>) -> CommunitySeries {
    CommunitySeries {
        slices: slices
            .into_iter()
            .map(|(label, nodes, partition)| CommunitySlice {
                label,
                nodes,
                partition,
            })
            .collect(),
    }
}

/// Check flow mass conservation at every slice: a community's outgoing
/// candidate mass plus its members absent from the next slice equals its
/// size. Returns the first violation.
pub fn check_mass_conservation(series: &CommunitySeries, g: &FlowGraph) -> Option<String> {
    for (t, pair) in series.slices.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let b_nodes: BTreeSet<&str> = b.nodes.iter().map(String::as_str).collect();
        let members = a.partition.members();
        for (c, nodes) in members.iter().enumerate() {
            let absent = nodes
                .iter()
                .filter(|&&n| !b_nodes.contains(a.nodes[n].as_str()))
                .count();
            let outgoing: usize = g.edges_from(t, c).map(|e| e.mass).sum();
            if outgoing + absent != nodes.len() {
                return Some(format!(
                    "slice {t} community {c}: {outgoing} outgoing + {absent} absent != {}",
                    nodes.len()
                ));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    /// Two slices over six shared nodes: one community that splits in two.
    fn split_fixture() -> CommunitySeries {
        let nodes = names("v", 6);
        series_from_slices(vec![
            (1, nodes.clone(), Partition::new(vec![0; 6])),
            (2, nodes, Partition::new(vec![0, 0, 0, 1, 1, 1])),
        ])
    }

    fn identity_fixture(slices: usize) -> CommunitySeries {
        let nodes = names("v", 6);
        series_from_slices(
            (0..slices)
                .map(|t| {
                    (
                        t as i32,
                        nodes.clone(),
                        Partition::new(vec![0, 0, 0, 1, 1, 1]),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn identical_partitions_continue_with_full_overlap() {
        let g = align_communities(&identity_fixture(3), 0.3).unwrap();
        let significant: Vec<&FlowEdge> = g.edges.iter().filter(|e| e.significant).collect();
        assert_eq!(significant.len(), 4); // 2 communities x 2 boundaries
        assert!(significant.iter().all(|e| (e.overlap - 1.0).abs() < 1e-12));
        assert!(significant
            .iter()
            .all(|e| e.from_community == e.to_community));
    }

    #[test]
    fn split_yields_two_half_overlaps() {
        let g = align_communities(&split_fixture(), 0.3).unwrap();
        assert_eq!(g.edges.len(), 2);
        for e in &g.edges {
            assert_eq!(e.mass, 3);
            assert!((e.overlap - 0.5).abs() < 1e-12);
            assert!(e.significant);
        }
    }

    #[test]
    fn node_missing_from_next_slice_carries_no_mass() {
        let series = series_from_slices(vec![
            (1, names("v", 3), Partition::new(vec![0, 0, 0])),
            (
                2,
                vec!["v0".into(), "v1".into()],
                Partition::new(vec![0, 0]),
            ),
        ]);
        let g = align_communities(&series, 0.3).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].mass, 2);
        assert!((g.edges[0].overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_slices_warn_instead_of_failing() {
        let series = series_from_slices(vec![
            (1, names("a", 3), Partition::new(vec![0, 0, 0])),
            (2, names("b", 3), Partition::new(vec![0, 0, 0])),
        ]);
        let g = align_communities(&series, 0.3).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(g.warnings.len(), 1);
    }

    #[test]
    fn single_slice_is_an_error() {
        let series = series_from_slices(vec![(1, names("v", 2), Partition::new(vec![0, 0]))]);
        assert!(align_communities(&series, 0.3).is_err());
    }

    #[test]
    fn identity_series_is_all_continuation() {
        let g = align_communities(&identity_fixture(4), 0.3).unwrap();
        let events = detect_events(&g);
        assert!(events
            .iter()
            .all(|e| e.kind == FlowEventKind::Continuation));
        assert_eq!(events.len(), 6); // 2 communities x 3 non-final slices
    }

    #[test]
    fn split_fixture_has_exactly_one_split() {
        let g = align_communities(&split_fixture(), 0.3).unwrap();
        let events = detect_events(&g);
        let counts = event_counts(&events);
        assert_eq!(counts.get(&FlowEventKind::Split).copied(), Some(1));
        assert_eq!(counts.get(&FlowEventKind::Merge), None);
        assert_eq!(counts.get(&FlowEventKind::Birth), None);
        assert_eq!(counts.get(&FlowEventKind::Death), None);
    }

    #[test]
    fn reversed_split_is_one_merge() {
        let g = align_communities(&split_fixture().reversed(), 0.3).unwrap();
        let events = detect_events(&g);
        let counts = event_counts(&events);
        assert_eq!(counts.get(&FlowEventKind::Merge).copied(), Some(1));
        assert_eq!(counts.get(&FlowEventKind::Split), None);
    }

    #[test]
    fn mass_conservation_on_fixtures() {
        for series in [split_fixture(), identity_fixture(5)] {
            let g = align_communities(&series, 0.3).unwrap();
            assert_eq!(check_mass_conservation(&series, &g), None);
        }
    }

    #[test]
    fn single_community_band_fills_the_height() {
        let nodes = names("v", 4);
        let series = series_from_slices(vec![
            (1, nodes.clone(), Partition::new(vec![0; 4])),
            (2, nodes, Partition::new(vec![0; 4])),
        ]);
        let g = align_communities(&series, 0.3).unwrap();
        let geo = alluvial_layout(&g);
        assert_eq!(geo.bands.len(), 2);
        for band in &geo.bands {
            assert!((band.y1 - band.y0 - 1.0).abs() < 1e-12);
        }
        assert_eq!(geo.ribbons.len(), 1);
        let r = &geo.ribbons[0];
        assert!((r.from_bottom - r.from_top - 1.0).abs() < 1e-12);
        assert!((r.to_bottom - r.to_top - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_communities_separated_by_gap() {
        let g = align_communities(&identity_fixture(2), 0.3).unwrap();
        let geo = alluvial_layout(&g);
        let slice0: Vec<&Band> = geo.bands.iter().filter(|b| b.slice == 0).collect();
        assert_eq!(slice0.len(), 2);
        let h0 = slice0[0].y1 - slice0[0].y0;
        let h1 = slice0[1].y1 - slice0[1].y0;
        assert!((h0 - h1).abs() < 1e-12);
        assert!((h0 - 0.49).abs() < 1e-12); // (1 - 0.02) / 2
        let gap = slice0[1].y0.max(slice0[0].y0) - slice0[0].y1.min(slice0[1].y1);
        assert!((gap - 0.02).abs() < 1e-12);
    }

    #[test]
    fn split_ribbons_carry_proportional_mass() {
        let g = align_communities(&split_fixture(), 0.3).unwrap();
        let geo = alluvial_layout(&g);
        assert_eq!(geo.ribbons.len(), 2);
        for r in &geo.ribbons {
            assert_eq!(r.mass, 3);
            // From side: 3 of 6 members of a full-height band.
            assert!((r.from_bottom - r.from_top - 0.5).abs() < 1e-12);
        }
    }

    fn random_series(
        universe: usize,
        slices: usize,
        rng_seed: u64,
    ) -> CommunitySeries {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let pool = names("n", universe);
        let mut out = Vec::new();
        for t in 0..slices {
            let mut nodes: Vec<String> = pool
                .iter()
                .filter(|_| rng.gen_bool(0.7))
                .cloned()
                .collect();
            if nodes.is_empty() {
                nodes.push(pool[0].clone());
            }
            let k = rng.gen_range(1..=3usize);
            let labels: Vec<usize> = (0..nodes.len()).map(|_| rng.gen_range(0..k)).collect();
            out.push((t as i32, nodes, Partition::new(labels)));
        }
        series_from_slices(out)
    }

    proptest! {
        #[test]
        fn split_and_merge_swap_under_time_reversal(seed in 0u64..300) {
            let series = random_series(9, 4, seed);
            let forward = align_communities(&series, 0.3).unwrap();
            let backward = align_communities(&series.reversed(), 0.3).unwrap();
            let f = event_counts(&detect_events(&forward));
            let b = event_counts(&detect_events(&backward));
            let get = |m: &BTreeMap<FlowEventKind, usize>, k| m.get(&k).copied().unwrap_or(0);
            prop_assert_eq!(get(&f, FlowEventKind::Split), get(&b, FlowEventKind::Merge));
            prop_assert_eq!(get(&f, FlowEventKind::Merge), get(&b, FlowEventKind::Split));
            prop_assert_eq!(get(&f, FlowEventKind::Birth), get(&b, FlowEventKind::Death));
            prop_assert_eq!(get(&f, FlowEventKind::Death), get(&b, FlowEventKind::Birth));
        }

        #[test]
        fn mass_is_conserved_on_random_series(seed in 0u64..300) {
            let series = random_series(8, 3, seed);
            let g = align_communities(&series, 0.3).unwrap();
            prop_assert_eq!(check_mass_conservation(&series, &g), None);
        }

        #[test]
        fn alignment_ignores_community_labels(seed in 0u64..100, offset in 1usize..7) {
            let series = random_series(7, 3, seed);
            let relabeled = CommunitySeries {
                slices: series
                    .slices
                    .iter()
                    .map(|s| CommunitySlice {
                        label: s.label,
                        nodes: s.nodes.clone(),
                        partition: Partition::new(
                            s.partition
                                .assignment()
                                .iter()
                                .map(|&c| (c + offset) * 3)
                                .collect(),
                        ),
                    })
                    .collect(),
            };
            let a = align_communities(&series, 0.3).unwrap();
            let b = align_communities(&relabeled, 0.3).unwrap();
            // Dense renumbering by first appearance keeps ids identical.
            prop_assert_eq!(a.edges, b.edges);
        }
    }
}
