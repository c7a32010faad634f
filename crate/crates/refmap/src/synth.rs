//! Synthetic export generation: corpora with planted co-citation
//! communities, written in the same field-tagged format the ingest
//! module reads. Used by the examples and the end-to-end tests.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Shape of a planted two-community corpus.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub start_year: i32,
    pub n_years: usize,
    /// Venues per community; community A venues are named A1.., B venues B1..
    pub venues_per_community: usize,
    /// Cited references drawn per document.
    pub refs_per_doc: usize,
    /// Probability that one citation crosses into the other community.
    pub cross_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 300,
            start_year: 2000,
            n_years: 12,
            venues_per_community: 10,
            refs_per_doc: 48,
            cross_rate: 0.05,
            seed: 7,
        }
    }
}

/// Generate a field-tagged export with two planted venue communities:
/// documents alternate between citing mostly A-venues and mostly
/// B-venues, with `cross_rate` of citations crossing over. Deterministic
/// for a fixed config.
pub fn two_community_export(cfg: &SynthConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let venues = |side: char| -> Vec<String> {
        (1..=cfg.venues_per_community)
            .map(|i| format!("{side}{i}"))
            .collect()
    };
    let a = venues('A');
    let b = venues('B');

    let mut out = String::from("FN Synthetic Citation Index\nVR 1.0\n");
    for i in 0..cfg.n_docs {
        let year = cfg.start_year + (i % cfg.n_years) as i32;
        let own_is_a = i % 2 == 0;
        let _ = writeln!(out, "PT J");
        let _ = writeln!(out, "UT SYN:{:06}", i + 1);
        let _ = writeln!(out, "PY {year}");
        let _ = writeln!(out, "SO SYNTHETIC COGNITION");
        out.push_str("CR ");
        for r in 0..cfg.refs_per_doc {
            let crossing = rng.gen_bool(cfg.cross_rate);
            let pool = if own_is_a != crossing { &a } else { &b };
            let venue = &pool[rng.gen_range(0..pool.len())];
            let cited_year = year - rng.gen_range(1..=10);
            let volume = rng.gen_range(1..40);
            let page = rng.gen_range(1..=999);
            let line = format!(
                "Author {}, {}, {}, V{}, P{}",
                venue, cited_year, venue, volume, page
            );
            if r == 0 {
                let _ = writeln!(out, "{line}");
            } else {
                let _ = writeln!(out, "   {line}");
            }
        }
        let _ = writeln!(out, "ER");
    }
    out.push_str("EF\n");
    out
}
