//! Stress-based 2-D layouts: a majorization solver for weighted stress,
//! Kruskal stress-1 diagnostics, and temporally smoothed layout series
//! where each frame is anchored to the trailing mean of its predecessors.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::simnet::SimilarityMatrix;

/// Symmetric target distances with per-pair weights, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    pub venues: Vec<String>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl DissimilarityMatrix {
    pub fn new(venues: Vec<String>, values: Vec<f64>) -> DissimilarityMatrix {
        let weights = vec![1.0; values.len()];
        DissimilarityMatrix::with_weights(venues, values, weights)
    }

    pub fn with_weights(
        venues: Vec<String>,
        values: Vec<f64>,
        weights: Vec<f64>,
    ) -> DissimilarityMatrix {
        assert_eq!(values.len(), venues.len() * venues.len());
        assert_eq!(weights.len(), values.len());
        DissimilarityMatrix {
            venues,
            values,
            weights,
        }
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

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.venues.len() + j]
    }
}

const SUBTHRESHOLD_WEIGHT: f64 = 0.1;

/// Distance transform d = 1 - cosine. When `down_weight_tau` is given,
/// pairs at or below the threshold get weight 0.1 instead of 1 so the
/// layout is driven by the visible edges.
pub fn dissimilarity_from_similarity(
    s: &SimilarityMatrix,
    down_weight_tau: Option<f64>,
) -> DissimilarityMatrix {
    let n = s.len();
    let mut values = vec![0.0; n * n];
    let mut weights = vec![1.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let c = s.value(i, j);
            values[i * n + j] = 1.0 - c;
            if let Some(tau) = down_weight_tau {
                if c <= tau {
                    weights[i * n + j] = SUBTHRESHOLD_WEIGHT;
                }
            }
        }
    }
    DissimilarityMatrix::with_weights(s.venues.clone(), values, weights)
}

/// Venue positions for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub venues: Vec<String>,
    pub positions: Vec<[f64; 2]>,
}

impl Configuration {
    pub fn position_of(&self, venue: &str) -> Option<[f64; 2]> {
        self.venues
            .iter()
            .position(|v| v == venue)
            .map(|i| self.positions[i])
    }

    /// Translate so the centroid sits at the origin.
    pub fn center(&mut self) {
        let n = self.positions.len();
        if n == 0 {
            return;
        }
        let cx = self.positions.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        let cy = self.positions.iter().map(|p| p[1]).sum::<f64>() / n as f64;
        for p in self.positions.iter_mut() {
            p[0] -= cx;
            p[1] -= cy;
        }
    }
}

/// Starting positions for the solver.
#[derive(Debug, Clone)]
pub enum Init {
    /// Uniform random positions in [-0.5, 0.5]^2 from this seed.
    Random(u64),
    /// Use these positions (matched by venue name).
    Positions(Configuration),
}

fn random_positions(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)])
        .collect()
}

/// Weighted raw stress sum_{u<v} w_uv (dist(u,v) - d_uv)^2.
pub fn weighted_stress(d: &DissimilarityMatrix, positions: &[[f64; 2]]) -> f64 {
    let n = d.len();
    let mut total = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            let dist = hypot(positions[u], positions[v]);
            let diff = dist - d.value(u, v);
            total += d.weight(u, v) * diff * diff;
        }
    }
    total
}

fn hypot(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Per-node quadratic anchors added to the stress objective:
/// alpha * ||x_v - target_v||^2 for the anchored subset.
#[derive(Debug, Clone, Default)]
struct Anchors {
    /// (node index, target position) pairs.
    targets: Vec<(usize, [f64; 2])>,
    alpha: f64,
}

/// Majorization solver. Each iteration solves the quadratic upper bound
/// exactly, so the (anchored) stress never increases.
struct StressSolver<'a> {
    d: &'a DissimilarityMatrix,
    anchors: Anchors,
    /// Inverse of the majorizer's quadratic form (pseudo-inverse via the
    /// rank-one completion when no anchors pin the translation).
    inv: DMatrix<f64>,
}

impl<'a> StressSolver<'a> {
    fn new(d: &'a DissimilarityMatrix, anchors: Anchors) -> StressSolver<'a> {
        let n = d.len();
        let mut quad = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = d.weight(i, j);
                quad[(i, j)] = -w;
                diag += w;
            }
            quad[(i, i)] = diag;
        }
        let anchored = !anchors.targets.is_empty() && anchors.alpha > 0.0;
        if anchored {
            for &(node, _) in &anchors.targets {
                quad[(node, node)] += anchors.alpha;
            }
            let inv = quad.try_inverse().expect("anchored system is nonsingular");
            StressSolver { d, anchors, inv }
        } else {
            // V is singular (translations); invert V + J/n and subtract
            // J/n, the standard pseudo-inverse for connected weights.
            let jn = 1.0 / n as f64;
            for i in 0..n {
                for j in 0..n {
                    quad[(i, j)] += jn;
                }
            }
            let mut inv = quad.try_inverse().expect("completed system is nonsingular");
            for i in 0..n {
                for j in 0..n {
                    inv[(i, j)] -= jn;
                }
            }
            StressSolver { d, anchors, inv }
        }
    }

    fn objective(&self, positions: &[[f64; 2]]) -> f64 {
        let mut total = weighted_stress(self.d, positions);
        for &(node, target) in &self.anchors.targets {
            total += self.anchors.alpha
                * ((positions[node][0] - target[0]).powi(2)
                    + (positions[node][1] - target[1]).powi(2));
        }
        total
    }

    /// One majorization update.
    fn step(&self, positions: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = self.d.len();
        let mut target = DMatrix::zeros(n, 2);
        // B(Z) Z rows.
        for i in 0..n {
            let mut row = [0.0, 0.0];
            let mut diag = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let dist = hypot(positions[i], positions[j]);
                if dist < 1e-12 {
                    continue;
                }
                let b = self.d.weight(i, j) * self.d.value(i, j) / dist;
                diag += b;
                row[0] -= b * positions[j][0];
                row[1] -= b * positions[j][1];
            }
            target[(i, 0)] = row[0] + diag * positions[i][0];
            target[(i, 1)] = row[1] + diag * positions[i][1];
        }
        for &(node, t) in &self.anchors.targets {
            target[(node, 0)] += self.anchors.alpha * t[0];
            target[(node, 1)] += self.anchors.alpha * t[1];
        }
        let solved = &self.inv * target;
        (0..n).map(|i| [solved[(i, 0)], solved[(i, 1)]]).collect()
    }

    fn solve(&self, mut positions: Vec<[f64; 2]>, tol: f64, max_iter: usize) -> Vec<[f64; 2]> {
        let mut stress = self.objective(&positions);
        for _ in 0..max_iter {
            let next = self.step(&positions);
            let next_stress = self.objective(&next);
            positions = next;
            let drop = stress - next_stress;
            stress = next_stress;
            if stress < 1e-30 || drop <= tol * stress.max(1e-30) {
                break;
            }
        }
        positions
    }
}

/// Minimize weighted stress by majorization from the given start.
/// The returned configuration is centered at the origin.
pub fn stress_majorization(
    d: &DissimilarityMatrix,
    init: Init,
    tol: f64,
    max_iter: usize,
) -> Result<Configuration> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "layout needs at least 2 venues, got {n}"
        )));
    }
    let all_zero = (0..n).all(|i| (0..n).all(|j| d.value(i, j) == 0.0));
    if all_zero && n >= 3 {
        return Err(Error::DegenerateInput(
            "all dissimilarities are zero".into(),
        ));
    }
    let positions = match init {
        Init::Random(seed) => random_positions(n, seed),
        Init::Positions(c) => d
            .venues
            .iter()
            .map(|v| {
                c.position_of(v).ok_or_else(|| Error::UnknownVenue {
                    venue: v.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let solver = StressSolver::new(d, Anchors::default());
    let solved = solver.solve(positions, tol, max_iter);
    let mut config = Configuration {
        venues: d.venues.clone(),
        positions: solved,
    };
    config.center();
    Ok(config)
}

/// Run the solver from several seeded starts and keep the lowest-stress
/// configuration. Stress is non-convex, so a handful of restarts guards
/// against poor local minima; seeds derive deterministically from
/// `base_seed`.
pub fn stress_majorization_multistart(
    d: &DissimilarityMatrix,
    base_seed: u64,
    restarts: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Configuration> {
    let restarts = restarts.max(1);
    let mut best: Option<(f64, Configuration)> = None;
    for r in 0..restarts {
        let config = stress_majorization(
            d,
            Init::Random(crate::seeding::mix(base_seed, r as u64)),
            tol,
            max_iter,
        )?;
        let stress = weighted_stress(d, &config.positions);
        if best.as_ref().is_none_or(|(b, _)| stress < *b) {
            best = Some((stress, config));
        }
    }
    Ok(best.expect("at least one restart ran").1)
}

/// Record of per-iteration stress, for monotonicity checks.
pub fn stress_trace(
    d: &DissimilarityMatrix,
    init: Init,
    iterations: usize,
) -> Result<Vec<f64>> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InsufficientData("need at least 2 venues".into()));
    }
    let positions = match init {
        Init::Random(seed) => random_positions(n, seed),
        Init::Positions(c) => d
            .venues
            .iter()
            .map(|v| {
                c.position_of(v).ok_or_else(|| Error::UnknownVenue {
                    venue: v.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let solver = StressSolver::new(d, Anchors::default());
    let mut trace = vec![solver.objective(&positions)];
    let mut current = positions;
    for _ in 0..iterations {
        current = solver.step(&current);
        trace.push(solver.objective(&current));
    }
    Ok(trace)
}

/// Kruskal stress-1: sqrt of squared residuals over squared targets,
/// unordered pairs, unweighted.
pub fn kruskal_stress(d: &DissimilarityMatrix, c: &Configuration) -> Result<f64> {
    let (num, den) = stress_terms(d, c)?;
    if den == 0.0 {
        return Err(Error::DegenerateInput(
            "all target dissimilarities are zero".into(),
        ));
    }
    Ok((num / den).sqrt())
}

/// Pooled numerator and denominator of stress-1 for one frame.
fn stress_terms(d: &DissimilarityMatrix, c: &Configuration) -> Result<(f64, f64)> {
    let positions: Vec<[f64; 2]> = d
        .venues
        .iter()
        .map(|v| {
            c.position_of(v).ok_or_else(|| Error::UnknownVenue {
                venue: v.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = d.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            let target = d.value(u, v);
            let dist = hypot(positions[u], positions[v]);
            num += (dist - target).powi(2);
            den += target * target;
        }
    }
    Ok((num, den))
}

/// Chained frames with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutSeries {
    pub frames: Vec<(i32, Configuration)>,
    pub alpha: f64,
}

/// Seed of the frame labeled `label` inside a layout run seeded `base`.
pub fn frame_seed(base: u64, label: i32) -> u64 {
    crate::seeding::mix(base, label as u64)
}

/// Solve a series of frames in label order, each anchored to the mean of
/// its venues' positions over the previous `smooth_span` frames with
/// strength `alpha`. With alpha = 0 every frame is exactly the
/// independent static layout for the same derived seed.
///
/// New venues start at the weighted centroid of their full-weight
/// (above-threshold) neighbors already placed, falling back to seeded
/// random positions.
pub fn dynamic_layout(
    series: &[(i32, DissimilarityMatrix)],
    alpha: f64,
    smooth_span: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<LayoutSeries> {
    if series.is_empty() {
        return Err(Error::InsufficientData("no frames to lay out".into()));
    }
    if alpha < 0.0 {
        return Err(Error::Config(format!("alpha must be >= 0, got {alpha}")));
    }
    if smooth_span == 0 {
        return Err(Error::Config("smooth_span must be >= 1".into()));
    }

    let mut frames: Vec<(i32, Configuration)> = Vec::with_capacity(series.len());
    for (t, (label, d)) in series.iter().enumerate() {
        let frame_seed = frame_seed(seed, *label);
        if alpha == 0.0 || t == 0 {
            // Decoupled limit and the opening frame: plain static layout.
            let config = stress_majorization(d, Init::Random(frame_seed), tol, max_iter)?;
            frames.push((*label, config));
            continue;
        }

        // Trailing-mean anchors over the previous min(smooth_span, t) frames.
        let history = &frames[t.saturating_sub(smooth_span)..t];
        let n = d.len();
        let mut anchor_targets: Vec<Option<[f64; 2]>> = vec![None; n];
        for (i, venue) in d.venues.iter().enumerate() {
            let past: Vec<[f64; 2]> = history
                .iter()
                .filter_map(|(_, c)| c.position_of(venue))
                .collect();
            if !past.is_empty() {
                let k = past.len() as f64;
                anchor_targets[i] = Some([
                    past.iter().map(|p| p[0]).sum::<f64>() / k,
                    past.iter().map(|p| p[1]).sum::<f64>() / k,
                ]);
            }
        }

        // Initial placement: anchored venues at their anchors, new ones
        // at the weighted centroid of placed full-weight neighbors.
        let mut positions: Vec<Option<[f64; 2]>> =
            anchor_targets.iter().map(|a| a.to_owned()).collect();
        for i in 0..n {
            if positions[i].is_some() {
                continue;
            }
            let mut acc = [0.0, 0.0];
            let mut total = 0.0;
            for j in 0..n {
                if i == j || d.weight(i, j) < 1.0 {
                    continue;
                }
                if let Some(p) = positions[j] {
                    let w = (1.0 - d.value(i, j)).max(0.0);
                    if w > 0.0 {
                        acc[0] += w * p[0];
                        acc[1] += w * p[1];
                        total += w;
                    }
                }
            }
            if total > 0.0 {
                positions[i] = Some([acc[0] / total, acc[1] / total]);
            }
        }
        // Whatever is still unplaced gets seeded random coordinates.
        let mut rng = ChaCha8Rng::seed_from_u64(frame_seed);
        let init: Vec<[f64; 2]> = positions
            .into_iter()
            .map(|p| p.unwrap_or_else(|| [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]))
            .collect();

        let anchors = Anchors {
            targets: anchor_targets
                .iter()
                .enumerate()
                .filter_map(|(i, a)| a.map(|t| (i, t)))
                .collect(),
            alpha,
        };
        let solver = StressSolver::new(d, anchors);
        let solved = solver.solve(init, tol, max_iter);
        frames.push((
            *label,
            Configuration {
                venues: d.venues.clone(),
                positions: solved,
            },
        ));
    }
    Ok(LayoutSeries { frames, alpha })
}

/// Stress-1 pooled over every frame: pooled residual sum over pooled
/// target sum, square-rooted once.
pub fn aggregated_stress(
    ls: &LayoutSeries,
    series: &[(i32, DissimilarityMatrix)],
) -> Result<f64> {
    if ls.frames.is_empty() || series.is_empty() {
        return Err(Error::InsufficientData("empty layout series".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (label, d) in series {
        let config = ls
            .frames
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| c)
            .ok_or_else(|| Error::InsufficientData(format!("no frame labeled {label}")))?;
        let (frame_num, frame_den) = stress_terms(d, config)?;
        num += frame_num;
        den += frame_den;
    }
    if den == 0.0 {
        return Err(Error::DegenerateInput(
            "all target dissimilarities are zero".into(),
        ));
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform(names: &[&str], entries: &[(usize, usize, f64)]) -> DissimilarityMatrix {
        let n = names.len();
        let mut values = vec![0.0; n * n];
        for &(i, j, v) in entries {
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
        DissimilarityMatrix::new(names.iter().map(|s| s.to_string()).collect(), values)
    }

    fn planted(n: usize, seed: u64) -> (Vec<[f64; 2]>, DissimilarityMatrix) {
        let positions = random_positions(n, seed);
        let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = hypot(positions[i], positions[j]);
            }
        }
        (positions, DissimilarityMatrix::new(names, values))
    }

    #[test]
    fn cosine_transform_is_linear() {
        let s = SimilarityMatrix::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![1.0, 1.0, 0.5, 1.0, 1.0, 0.0, 0.5, 0.0, 1.0],
        );
        let d = dissimilarity_from_similarity(&s, None);
        assert_eq!(d.value(0, 1), 0.0);
        assert_eq!(d.value(0, 2), 0.5);
        assert_eq!(d.value(1, 2), 1.0);
        assert_eq!(d.value(2, 2), 0.0);
    }

    #[test]
    fn subthreshold_pairs_are_down_weighted() {
        let s = SimilarityMatrix::new(
            vec!["A".into(), "B".into()],
            vec![1.0, 0.15, 0.15, 1.0],
        );
        let d = dissimilarity_from_similarity(&s, Some(0.2));
        assert_eq!(d.weight(0, 1), 0.1);
        let d = dissimilarity_from_similarity(&s, None);
        assert_eq!(d.weight(0, 1), 1.0);
    }

    #[test]
    fn two_points_embed_exactly() {
        let d = uniform(&["A", "B"], &[(0, 1, 1.0)]);
        let c = stress_majorization(&d, Init::Random(5), 1e-12, 500).unwrap();
        let dist = hypot(c.positions[0], c.positions[1]);
        assert!((dist - 1.0).abs() < 1e-9, "distance {dist}");
    }

    #[test]
    fn three_equal_targets_make_an_equilateral_triangle() {
        let d = uniform(&["A", "B", "C"], &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]);
        let c = stress_majorization(&d, Init::Random(11), 1e-14, 2000).unwrap();
        let sides = [
            hypot(c.positions[0], c.positions[1]),
            hypot(c.positions[0], c.positions[2]),
            hypot(c.positions[1], c.positions[2]),
        ];
        for pair in sides.windows(2) {
            assert!((pair[0] - pair[1]).abs() < 1e-6, "sides {sides:?}");
        }
    }

    #[test]
    fn planted_distances_recover_to_tiny_stress() {
        for inst in 0..6 {
            let (_, d) = planted(8, 40 + inst);
            let c = stress_majorization_multistart(&d, inst, 4, 1e-15, 3000).unwrap();
            let stress = kruskal_stress(&d, &c).unwrap();
            assert!(stress < 1e-6, "instance {inst}: stress {stress}");
        }
    }

    #[test]
    fn all_zero_targets_are_degenerate() {
        let d = uniform(&["A", "B", "C"], &[]);
        assert!(matches!(
            stress_majorization(&d, Init::Random(1), 1e-9, 100),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn output_is_centered() {
        let (_, d) = planted(6, 9);
        let c = stress_majorization(&d, Init::Random(2), 1e-12, 1000).unwrap();
        let cx: f64 = c.positions.iter().map(|p| p[0]).sum();
        let cy: f64 = c.positions.iter().map(|p| p[1]).sum();
        assert!(cx.abs() < 1e-9 && cy.abs() < 1e-9);
    }

    #[test]
    fn perfect_embedding_has_zero_stress() {
        let (positions, d) = planted(5, 3);
        let c = Configuration {
            venues: d.venues.clone(),
            positions,
        };
        assert!(kruskal_stress(&d, &c).unwrap() < 1e-12);
    }

    #[test]
    fn hand_computed_stress_value() {
        // Targets (1,2,1) with realized distances (1,1,1):
        // sqrt(((1-1)^2 + (1-2)^2 + (1-1)^2) / (1+4+1)) = sqrt(1/6).
        let names = vec!["A".to_string(), "B".to_string(), "C".to_string()];
        let mut values = vec![0.0; 9];
        values[0 * 3 + 1] = 1.0;
        values[1 * 3 + 0] = 1.0;
        values[0 * 3 + 2] = 2.0;
        values[2 * 3 + 0] = 2.0;
        values[1 * 3 + 2] = 1.0;
        values[2 * 3 + 1] = 1.0;
        let d = DissimilarityMatrix::new(names.clone(), values);
        // Equilateral triangle with side 1.
        let c = Configuration {
            venues: names,
            positions: vec![[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]],
        };
        let s = kruskal_stress(&d, &c).unwrap();
        assert!((s - (1.0f64 / 6.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn stress_is_not_scale_invariant() {
        let (positions, d) = planted(5, 8);
        let doubled = Configuration {
            venues: d.venues.clone(),
            positions: positions.iter().map(|p| [2.0 * p[0], 2.0 * p[1]]).collect(),
        };
        let base = Configuration {
            venues: d.venues.clone(),
            positions,
        };
        assert!(kruskal_stress(&d, &doubled).unwrap() > kruskal_stress(&d, &base).unwrap());
    }

    #[test]
    fn rigid_motions_leave_stress_unchanged() {
        let (positions, d) = planted(6, 4);
        let base = Configuration {
            venues: d.venues.clone(),
            positions: positions.clone(),
        };
        let s0 = kruskal_stress(&d, &base).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (sin, cos) = angle.sin_cos();
            let dx: f64 = rng.gen_range(-3.0..3.0);
            let dy: f64 = rng.gen_range(-3.0..3.0);
            let moved = Configuration {
                venues: d.venues.clone(),
                positions: positions
                    .iter()
                    .map(|p| [cos * p[0] - sin * p[1] + dx, sin * p[0] + cos * p[1] + dy])
                    .collect(),
            };
            let s1 = kruskal_stress(&d, &moved).unwrap();
            assert!((s0 - s1).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_targets_make_stress_undefined() {
        let d = uniform(&["A", "B"], &[]);
        let c = Configuration {
            venues: d.venues.clone(),
            positions: vec![[0.0, 0.0], [1.0, 0.0]],
        };
        assert!(matches!(
            kruskal_stress(&d, &c),
            Err(Error::DegenerateInput(_))
        ));
    }

    fn frame_series(n_frames: usize, n: usize) -> Vec<(i32, DissimilarityMatrix)> {
        (0..n_frames)
            .map(|t| {
                let (_, d) = planted(n, 100 + t as u64);
                (2000 + t as i32, d)
            })
            .collect()
    }

    #[test]
    fn alpha_zero_equals_static_layouts() {
        let series = frame_series(3, 6);
        let ls = dynamic_layout(&series, 0.0, 4, 9, 1e-10, 300).unwrap();
        for (label, d) in &series {
            let frame_seed = frame_seed(9, *label);
            let solo = stress_majorization(d, Init::Random(frame_seed), 1e-10, 300).unwrap();
            let frame = ls
                .frames
                .iter()
                .find(|(l, _)| l == label)
                .map(|(_, c)| c)
                .unwrap();
            assert_eq!(frame, &solo);
        }
    }

    #[test]
    fn huge_alpha_freezes_frames() {
        // Same target distances every frame, constant venue set.
        let (_, d) = planted(6, 5);
        let series: Vec<(i32, DissimilarityMatrix)> =
            (0..4).map(|t| (t, d.clone())).collect();
        let ls = dynamic_layout(&series, 1e6, 4, 21, 1e-12, 500).unwrap();
        for pair in ls.frames.windows(2) {
            let (_, a) = &pair[0];
            let (_, b) = &pair[1];
            let max_move = a
                .positions
                .iter()
                .zip(&b.positions)
                .map(|(p, q)| hypot(*p, *q))
                .fold(0.0, f64::max);
            assert!(max_move < 1e-3, "max displacement {max_move}");
        }
    }

    #[test]
    fn single_frame_aggregate_equals_kruskal() {
        let series = frame_series(1, 5);
        let ls = dynamic_layout(&series, 0.5, 4, 3, 1e-10, 300).unwrap();
        let agg = aggregated_stress(&ls, &series).unwrap();
        let solo = kruskal_stress(&series[0].1, &ls.frames[0].1).unwrap();
        assert!((agg - solo).abs() < 1e-12);
    }

    #[test]
    fn perfect_frames_aggregate_to_zero() {
        let (positions, d) = planted(5, 6);
        let c = Configuration {
            venues: d.venues.clone(),
            positions,
        };
        let ls = LayoutSeries {
            frames: vec![(1, c.clone()), (2, c)],
            alpha: 0.0,
        };
        let series = vec![(1, d.clone()), (2, d)];
        assert!(aggregated_stress(&ls, &series).unwrap() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn majorization_never_increases_stress(seed in 0u64..500) {
            let (_, d) = planted(7, seed);
            let trace = stress_trace(&d, Init::Random(seed ^ 0xabc), 60).unwrap();
            for pair in trace.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-12);
            }
        }

        #[test]
        fn more_smoothing_never_adds_movement(seed in 0u64..20) {
            let series = frame_series(3, 5);
            let displacement = |alpha: f64| -> f64 {
                let ls = dynamic_layout(&series, alpha, 4, seed, 1e-10, 300).unwrap();
                ls.frames
                    .windows(2)
                    .map(|pair| {
                        let (_, a) = &pair[0];
                        let (_, b) = &pair[1];
                        a.venues
                            .iter()
                            .filter_map(|v| {
                                let pa = a.position_of(v)?;
                                let pb = b.position_of(v)?;
                                Some(hypot(pa, pb))
                            })
                            .sum::<f64>()
                    })
                    .sum()
            };
            let alphas = [0.1, 1.0, 10.0, 100.0];
            let moves: Vec<f64> = alphas.iter().map(|&a| displacement(a)).collect();
            for pair in moves.windows(2) {
                prop_assert!(pair[1] <= pair[0] * 1.05 + 1e-9, "{moves:?}");
            }
        }
    }
}
