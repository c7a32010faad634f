//! Factor analysis of occurrence matrices: Pearson correlation between
//! venue columns, principal-component extraction, orthogonal Varimax
//! rotation, and the interfactorial-complexity indicator.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::corpus::OccurrenceMatrix;
use crate::error::{Error, Result};

/// Symmetric venue-by-venue Pearson correlation matrix, unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub venues: Vec<String>,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn new(venues: Vec<String>, values: Vec<f64>) -> CorrelationMatrix {
        assert_eq!(values.len(), venues.len() * venues.len());
        CorrelationMatrix { venues, values }
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

/// Pearson correlation between venue count-columns, documents as cases.
pub fn correlation(m: &OccurrenceMatrix) -> Result<CorrelationMatrix> {
    let n_docs = m.n_docs();
    if n_docs < 2 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 2 documents, got {n_docs}"
        )));
    }
    let p = m.n_venues();
    let n = n_docs as f64;
    let totals: Vec<f64> = (0..p).map(|j| m.column_total(j) as f64).collect();
    let mut centered_ss = Vec::with_capacity(p);
    for j in 0..p {
        let ss = m.column_dot(j, j) - totals[j] * totals[j] / n;
        if ss <= 0.0 {
            return Err(Error::ZeroVarianceColumn {
                venue: m.venues[j].clone(),
            });
        }
        centered_ss.push(ss);
    }
    let mut values = vec![0.0; p * p];
    for i in 0..p {
        values[i * p + i] = 1.0;
        for j in i + 1..p {
            let cov = m.column_dot(i, j) - totals[i] * totals[j] / n;
            let r = (cov / (centered_ss[i] * centered_ss[j]).sqrt()).clamp(-1.0, 1.0);
            values[i * p + j] = r;
            values[j * p + i] = r;
        }
    }
    Ok(CorrelationMatrix {
        venues: m.venues.clone(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rotation {
    None,
    Varimax,
}

/// Extracted factor loadings for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSolution {
    pub k: usize,
    pub venues: Vec<String>,
    /// Venue-major: `loadings[v][j]` is the loading of venue v on factor j.
    pub loadings: Vec<Vec<f64>>,
    /// Top-k eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// 100 * sum of the k eigenvalues / number of venues.
    pub pct_variance: f64,
    pub rotation: Rotation,
}

impl FactorSolution {
    /// Sum of squared loadings of one venue across factors.
    pub fn communality(&self, venue_idx: usize) -> f64 {
        self.loadings[venue_idx].iter().map(|l| l * l).sum()
    }
}

const PSD_TOLERANCE: f64 = 1e-8;

/// Principal-component extraction from a correlation matrix: the j-th
/// loading column is sqrt(lambda_j) times the j-th eigenvector. Columns
/// are signed so their largest-magnitude entry is positive, which makes
/// repeated runs identical.
pub fn principal_components(c: &CorrelationMatrix, k: usize) -> Result<FactorSolution> {
    let p = c.len();
    if k == 0 || k > p {
        return Err(Error::Config(format!(
            "factor count must lie in 1..={p}, got {k}"
        )));
    }
    let mat = DMatrix::from_fn(p, p, |i, j| c.value(i, j));
    let eig = SymmetricEigen::new(mat);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOLERANCE {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min_eig,
        });
    }

    let mut eigenvalues = Vec::with_capacity(k);
    let mut loadings = vec![vec![0.0; k]; p];
    for (col, &idx) in order.iter().take(k).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        eigenvalues.push(lambda);
        let scale = lambda.sqrt();
        let vecs = eig.eigenvectors.column(idx);
        for v in 0..p {
            loadings[v][col] = scale * vecs[v];
        }
    }
    sign_fix_columns(&mut loadings, None);

    let pct_variance = 100.0 * eigenvalues.iter().sum::<f64>() / p as f64;
    Ok(FactorSolution {
        k,
        venues: c.venues.clone(),
        loadings,
        eigenvalues,
        pct_variance,
        rotation: Rotation::None,
    })
}

/// All p eigenvalues of the correlation matrix, descending (scree data).
pub fn eigenvalue_scree(c: &CorrelationMatrix) -> Vec<f64> {
    let p = c.len();
    let mat = DMatrix::from_fn(p, p, |i, j| c.value(i, j));
    let eig = SymmetricEigen::new(mat);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    vals
}

/// Flip each loading column so its largest-magnitude entry is positive;
/// mirror the flips into `rotation` columns when given.
fn sign_fix_columns(loadings: &mut [Vec<f64>], mut rotation: Option<&mut Vec<Vec<f64>>>) {
    if loadings.is_empty() {
        return;
    }
    let k = loadings[0].len();
    for j in 0..k {
        let mut arg = 0;
        let mut max = -1.0;
        for (v, row) in loadings.iter().enumerate() {
            if row[j].abs() > max {
                max = row[j].abs();
                arg = v;
            }
        }
        if loadings[arg][j] < 0.0 {
            for row in loadings.iter_mut() {
                row[j] = -row[j];
            }
            if let Some(rot) = rotation.as_deref_mut() {
                for row in rot.iter_mut() {
                    row[j] = -row[j];
                }
            }
        }
    }
}

/// Varimax rotation result: rotated loadings, the orthonormal rotation
/// applied, and the criterion value after each sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct VarimaxOutcome {
    pub loadings: Vec<Vec<f64>>,
    /// k x k orthonormal matrix R with rotated = loadings . R.
    pub rotation: Vec<Vec<f64>>,
    pub criterion_trace: Vec<f64>,
}

/// The raw varimax criterion: per-factor variance of squared loadings.
pub fn varimax_criterion(loadings: &[Vec<f64>]) -> f64 {
    if loadings.is_empty() {
        return 0.0;
    }
    let p = loadings.len() as f64;
    let k = loadings[0].len();
    (0..k)
        .map(|j| {
            let m4: f64 = loadings.iter().map(|r| r[j].powi(4)).sum::<f64>() / p;
            let m2: f64 = loadings.iter().map(|r| r[j] * r[j]).sum::<f64>() / p;
            m4 - m2 * m2
        })
        .sum()
}

const VARIMAX_EPS: f64 = 1e-10;
const VARIMAX_MAX_SWEEPS: usize = 100;

/// Orthogonal Varimax rotation by iterative pairwise planar rotations,
/// with Kaiser row-normalization before and denormalization after when
/// `kaiser` is set. Stops when the criterion gains less than 1e-10 in a
/// sweep or after 100 sweeps. Columns are reordered by explained sum of
/// squares and sign-fixed afterwards; the returned rotation matrix
/// absorbs both so that `rotated = input . rotation` holds exactly.
pub fn varimax(loadings: &[Vec<f64>], kaiser: bool) -> VarimaxOutcome {
    let p = loadings.len();
    let k = if p == 0 { 0 } else { loadings[0].len() };
    let mut rotation: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    if p == 0 || k < 2 {
        return VarimaxOutcome {
            loadings: loadings.to_vec(),
            rotation,
            criterion_trace: vec![varimax_criterion(loadings)],
        };
    }

    // Kaiser: rotate the row-normalized matrix, then scale back.
    let norms: Vec<f64> = loadings
        .iter()
        .map(|row| row.iter().map(|l| l * l).sum::<f64>().sqrt())
        .collect();
    let mut work: Vec<Vec<f64>> = loadings
        .iter()
        .zip(&norms)
        .map(|(row, &h)| {
            if kaiser && h > 0.0 {
                row.iter().map(|l| l / h).collect()
            } else {
                row.clone()
            }
        })
        .collect();

    let mut trace = vec![varimax_criterion(&work)];
    for _ in 0..VARIMAX_MAX_SWEEPS {
        for a in 0..k {
            for b in a + 1..k {
                let (mut aa, mut bb, mut cc, mut dd) = (0.0, 0.0, 0.0, 0.0);
                for row in &work {
                    let (x, y) = (row[a], row[b]);
                    let u = x * x - y * y;
                    let v = 2.0 * x * y;
                    aa += u;
                    bb += v;
                    cc += u * u - v * v;
                    dd += 2.0 * u * v;
                }
                let pf = p as f64;
                let num = dd - 2.0 * aa * bb / pf;
                let den = cc - (aa * aa - bb * bb) / pf;
                let angle = 0.25 * num.atan2(den);
                if angle.abs() < 1e-15 {
                    continue;
                }
                let (sin, cos) = angle.sin_cos();
                for row in work.iter_mut() {
                    let (x, y) = (row[a], row[b]);
                    row[a] = cos * x + sin * y;
                    row[b] = -sin * x + cos * y;
                }
                for row in rotation.iter_mut() {
                    let (x, y) = (row[a], row[b]);
                    row[a] = cos * x + sin * y;
                    row[b] = -sin * x + cos * y;
                }
            }
        }
        let v = varimax_criterion(&work);
        let gained = v - trace.last().unwrap();
        trace.push(v);
        if gained < VARIMAX_EPS {
            break;
        }
    }

    // Denormalize: rotated = diag(h) . (normalized . R) = input . R.
    let mut rotated: Vec<Vec<f64>> = work
        .iter()
        .zip(&norms)
        .map(|(row, &h)| {
            if kaiser && h > 0.0 {
                row.iter().map(|l| l * h).collect()
            } else {
                row.clone()
            }
        })
        .collect();

    // Order factors by explained sum of squares, descending.
    let ss: Vec<f64> = (0..k)
        .map(|j| rotated.iter().map(|r| r[j] * r[j]).sum::<f64>())
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| ss[b].partial_cmp(&ss[a]).expect("finite"));
    rotated = rotated
        .iter()
        .map(|row| order.iter().map(|&j| row[j]).collect())
        .collect();
    rotation = rotation
        .iter()
        .map(|row| order.iter().map(|&j| row[j]).collect())
        .collect();
    sign_fix_columns(&mut rotated, Some(&mut rotation));

    VarimaxOutcome {
        loadings: rotated,
        rotation,
        criterion_trace: trace,
    }
}

/// Rotate a principal-component solution in place.
pub fn rotate_varimax(sol: &FactorSolution, kaiser: bool) -> FactorSolution {
    let outcome = varimax(&sol.loadings, kaiser);
    FactorSolution {
        loadings: outcome.loadings,
        rotation: Rotation::Varimax,
        ..sol.clone()
    }
}

/// Number of factors on which a venue loads at or above the threshold
/// in absolute value. Loading on more than one factor marks the venue
/// as interdisciplinary.
pub fn interfactorial_complexity(
    sol: &FactorSolution,
    venue: &str,
    load_threshold: f64,
) -> Result<usize> {
    if load_threshold <= 0.0 {
        return Err(Error::Config(format!(
            "loading threshold must be positive, got {load_threshold}"
        )));
    }
    let idx = sol
        .venues
        .iter()
        .position(|v| v == venue)
        .ok_or_else(|| Error::UnknownVenue {
            venue: venue.to_string(),
        })?;
    Ok(sol.loadings[idx]
        .iter()
        .filter(|l| l.abs() >= load_threshold)
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::OccurrenceMatrix;
    use proptest::prelude::*;

    fn matrix(cols: &[(&str, &[u32])]) -> OccurrenceMatrix {
        let mut triplets = Vec::new();
        for (venue, counts) in cols {
            for (row, &c) in counts.iter().enumerate() {
                triplets.push((format!("d{row}"), venue.to_string(), c));
            }
        }
        OccurrenceMatrix::from_triplets(0, &triplets).unwrap()
    }

    #[test]
    fn identical_columns_correlate_fully() {
        let m = matrix(&[("A", &[1, 2, 3]), ("B", &[1, 2, 3])]);
        let c = correlation(&m).unwrap();
        assert!((c.value(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_columns_anticorrelate() {
        let m = matrix(&[("A", &[1, 2, 3]), ("B", &[3, 2, 1])]);
        let c = correlation(&m).unwrap();
        assert!((c.value(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_indicator_columns_are_uncorrelated() {
        let m = matrix(&[("A", &[1, 0, 1, 0]), ("B", &[1, 1, 0, 0])]);
        let c = correlation(&m).unwrap();
        assert!(c.value(0, 1).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_column_is_an_error() {
        let m = matrix(&[("A", &[2, 2, 2]), ("B", &[1, 2, 3])]);
        match correlation(&m) {
            Err(Error::ZeroVarianceColumn { venue }) => assert_eq!(venue, "A"),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn identity_corr(p: usize) -> CorrelationMatrix {
        let mut values = vec![0.0; p * p];
        for i in 0..p {
            values[i * p + i] = 1.0;
        }
        CorrelationMatrix::new((0..p).map(|i| format!("V{i}")).collect(), values)
    }

    #[test]
    fn identity_matrix_extraction() {
        let sol = principal_components(&identity_corr(4), 2).unwrap();
        assert!((sol.eigenvalues[0] - 1.0).abs() < 1e-10);
        assert!((sol.eigenvalues[1] - 1.0).abs() < 1e-10);
        assert!((sol.pct_variance - 50.0).abs() < 1e-9);
    }

    #[test]
    fn two_by_two_analytic_eigenvalues() {
        let r = 0.6;
        let c = CorrelationMatrix::new(
            vec!["A".into(), "B".into()],
            vec![1.0, r, r, 1.0],
        );
        let sol = principal_components(&c, 2).unwrap();
        assert!((sol.eigenvalues[0] - (1.0 + r)).abs() < 1e-10);
        assert!((sol.eigenvalues[1] - (1.0 - r)).abs() < 1e-10);
    }

    #[test]
    fn non_psd_matrix_is_rejected() {
        // Correlation-shaped but violates the triangle constraint badly.
        let c = CorrelationMatrix::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0],
        );
        assert!(matches!(
            principal_components(&c, 2),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn extraction_is_deterministic() {
        let m = matrix(&[
            ("A", &[1, 0, 2, 1]),
            ("B", &[0, 1, 1, 2]),
            ("C", &[2, 1, 0, 1]),
        ]);
        let c = correlation(&m).unwrap();
        let a = principal_components(&c, 2).unwrap();
        let b = principal_components(&c, 2).unwrap();
        assert_eq!(a.loadings, b.loadings);
    }

    #[test]
    fn reconstruction_with_all_factors() {
        let m = matrix(&[
            ("A", &[1, 0, 2, 1, 3]),
            ("B", &[0, 1, 1, 2, 0]),
            ("C", &[2, 1, 0, 1, 1]),
        ]);
        let c = correlation(&m).unwrap();
        let sol = principal_components(&c, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let recon: f64 = (0..3)
                    .map(|f| sol.loadings[i][f] * sol.loadings[j][f])
                    .sum();
                assert!(
                    (recon - c.value(i, j)).abs() < 1e-8,
                    "({i},{j}): {recon} vs {}",
                    c.value(i, j)
                );
            }
        }
    }

    #[test]
    fn eigenvalues_sum_to_venue_count() {
        let m = matrix(&[
            ("A", &[1, 0, 2, 1]),
            ("B", &[0, 1, 1, 2]),
            ("C", &[2, 1, 0, 1]),
            ("D", &[1, 1, 3, 0]),
        ]);
        let c = correlation(&m).unwrap();
        let scree = eigenvalue_scree(&c);
        let total: f64 = scree.iter().sum();
        assert!((total - 4.0).abs() < 1e-8);
        assert!(scree.windows(2).all(|w| w[0] >= w[1] - 1e-12));
    }

    #[test]
    fn simple_structure_is_a_fixed_point() {
        let loadings = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ];
        let out = varimax(&loadings, false);
        for (got, want) in out.loadings.iter().flatten().zip(loadings.iter().flatten()) {
            assert!((got.abs() - want.abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn forty_five_degree_mix_rotates_to_simple_structure() {
        let loadings = vec![vec![0.707, 0.707], vec![0.707, -0.707]];
        let out = varimax(&loadings, false);
        let flat: Vec<f64> = out.loadings.iter().flatten().map(|l| l.abs()).collect();
        let mut sorted = flat.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Two entries near 0, two near 0.9998.
        assert!(sorted[0] < 1e-6 && sorted[1] < 1e-6, "{flat:?}");
        assert!((sorted[2] - 0.9998).abs() < 1e-3 && (sorted[3] - 0.9998).abs() < 1e-3);
    }

    #[test]
    fn communalities_survive_rotation() {
        let loadings = vec![
            vec![0.8, 0.1, 0.05],
            vec![0.2, 0.7, 0.1],
            vec![0.1, 0.2, 0.6],
            vec![0.4, 0.4, 0.3],
        ];
        let out = varimax(&loadings, true);
        for (before, after) in loadings.iter().zip(&out.loadings) {
            let hb: f64 = before.iter().map(|l| l * l).sum();
            let ha: f64 = after.iter().map(|l| l * l).sum();
            assert!((hb - ha).abs() < 1e-9);
        }
    }

    #[test]
    fn rotation_matrix_is_orthonormal() {
        let loadings = vec![
            vec![0.8, 0.1, 0.05],
            vec![0.2, 0.7, 0.1],
            vec![0.1, 0.2, 0.6],
            vec![0.4, 0.4, 0.3],
        ];
        let out = varimax(&loadings, true);
        let k = 3;
        for i in 0..k {
            for j in 0..k {
                let dot: f64 = (0..k).map(|r| out.rotation[r][i] * out.rotation[r][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10, "R^T R [{i}{j}] = {dot}");
            }
        }
        // rotated = input . R, exactly as claimed.
        for v in 0..loadings.len() {
            for j in 0..k {
                let prod: f64 = (0..k).map(|f| loadings[v][f] * out.rotation[f][j]).sum();
                assert!((prod - out.loadings[v][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_factor_passes_through() {
        let loadings = vec![vec![0.5], vec![-0.3]];
        let out = varimax(&loadings, true);
        assert_eq!(out.loadings, loadings);
    }

    #[test]
    fn complexity_counts_loadings_at_threshold() {
        let sol = FactorSolution {
            k: 3,
            venues: vec!["A".into(), "B".into()],
            loadings: vec![vec![0.8, 0.05, 0.0], vec![0.3, 0.3, 0.3]],
            eigenvalues: vec![1.0, 1.0, 1.0],
            pct_variance: 100.0,
            rotation: Rotation::None,
        };
        assert_eq!(interfactorial_complexity(&sol, "A", 0.1).unwrap(), 1);
        assert_eq!(interfactorial_complexity(&sol, "B", 0.2).unwrap(), 3);
    }

    #[test]
    fn complexity_of_published_loading_profile() {
        // Main loading .210 plus a minor one .120 crosses the 0.1 line twice.
        let sol = FactorSolution {
            k: 5,
            venues: vec!["COGNITIVE SCI".into()],
            loadings: vec![vec![0.210, 0.120, -0.05, 0.0, 0.0]],
            eigenvalues: vec![1.0; 5],
            pct_variance: 100.0,
            rotation: Rotation::Varimax,
        };
        assert_eq!(interfactorial_complexity(&sol, "COGNITIVE SCI", 0.1).unwrap(), 2);
    }

    #[test]
    fn unknown_venue_is_an_error() {
        let sol = FactorSolution {
            k: 1,
            venues: vec!["A".into()],
            loadings: vec![vec![1.0]],
            eigenvalues: vec![1.0],
            pct_variance: 100.0,
            rotation: Rotation::None,
        };
        assert!(matches!(
            interfactorial_complexity(&sol, "NOPE", 0.1),
            Err(Error::UnknownVenue { .. })
        ));
    }

    proptest! {
        #[test]
        fn varimax_criterion_never_decreases(
            rows in proptest::collection::vec(
                proptest::collection::vec(-1.0f64..1.0, 3), 3..10),
        ) {
            let out = varimax(&rows, true);
            for pair in out.criterion_trace.windows(2) {
                prop_assert!(pair[1] >= pair[0] - 1e-12);
            }
        }

        #[test]
        fn varimax_preserves_row_communalities(
            rows in proptest::collection::vec(
                proptest::collection::vec(-1.0f64..1.0, 4), 2..12),
        ) {
            let out = varimax(&rows, true);
            for (before, after) in rows.iter().zip(&out.loadings) {
                let hb: f64 = before.iter().map(|l| l * l).sum();
                let ha: f64 = after.iter().map(|l| l * l).sum();
                prop_assert!((hb - ha).abs() < 1e-9);
            }
        }
    }
}
