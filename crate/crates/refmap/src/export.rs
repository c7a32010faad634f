//! Deterministic writers for the file products: Pajek networks with
//! their partition companion files, the per-window metrics table, factor
//! loading reports, and the alluvial SVG. Identical inputs always yield
//! byte-identical output; Pajek and .clu files round-trip through the
//! bundled readers exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::community::Partition;
use crate::error::{Error, Result};
use crate::factors::FactorSolution;
use crate::flow::{AlluvialGeometry, FlowEdge};
use crate::simnet::{SimilarityNetwork, WeightedEdge};

/// Pajek .net body: vertices with quoted labels, then weighted edges at
/// four decimals. Inner quotes are doubled. LF line terminators.
pub fn pajek_string(net: &SimilarityNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "*Vertices {}", net.n_nodes());
    for (i, label) in net.nodes.iter().enumerate() {
        let _ = writeln!(out, "{} \"{}\"", i + 1, label.replace('"', "\"\""));
    }
    out.push_str("*Edges\n");
    for e in &net.edges {
        let _ = writeln!(out, "{} {} {:.4}", e.u + 1, e.v + 1, e.weight);
    }
    out
}

pub fn write_pajek(net: &SimilarityNetwork, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, pajek_string(net))?;
    Ok(())
}

fn pajek_err(message: impl Into<String>) -> Error {
    Error::Format {
        path: "pajek".into(),
        message: message.into(),
    }
}

/// Parse a Pajek .net body written by [`pajek_string`]. The cosine
/// threshold is not stored in the format, so the caller supplies it.
pub fn read_pajek(text: &str, tau: f64) -> Result<SimilarityNetwork> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| pajek_err("empty file"))?;
    let n: usize = header
        .strip_prefix("*Vertices ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| pajek_err(format!("bad vertices header {header:?}")))?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next().ok_or_else(|| pajek_err("truncated vertex list"))?;
        let rest = line
            .split_once(' ')
            .map(|(_, r)| r)
            .ok_or_else(|| pajek_err(format!("bad vertex line {line:?}")))?;
        let quoted = rest.trim();
        if !(quoted.starts_with('"') && quoted.ends_with('"') && quoted.len() >= 2) {
            return Err(pajek_err(format!("unquoted vertex label {line:?}")));
        }
        nodes.push(quoted[1..quoted.len() - 1].replace("\"\"", "\""));
    }
    match lines.next() {
        Some("*Edges") => {}
        other => return Err(pajek_err(format!("expected *Edges, got {other:?}"))),
    }
    let mut edges = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let u: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| pajek_err(format!("bad edge line {line:?}")))?;
        let v: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| pajek_err(format!("bad edge line {line:?}")))?;
        let w: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| pajek_err(format!("bad edge line {line:?}")))?;
        if u == 0 || v == 0 || u > n || v > n {
            return Err(pajek_err(format!("edge endpoint out of range in {line:?}")));
        }
        edges.push(WeightedEdge {
            u: u - 1,
            v: v - 1,
            weight: w,
        });
    }
    Ok(SimilarityNetwork { nodes, edges, tau })
}

/// Pajek .clu partition companion: vertex count, then one 1-based
/// community id per node in node order.
pub fn clu_string(p: &Partition, node_order: &[String]) -> Result<String> {
    if p.len() != node_order.len() {
        return Err(Error::PartitionMismatch {
            expected: node_order.len(),
            actual: p.len(),
        });
    }
    let mut out = String::new();
    let _ = writeln!(out, "*Vertices {}", node_order.len());
    for node in 0..node_order.len() {
        let _ = writeln!(out, "{}", p.community_of(node) + 1);
    }
    Ok(out)
}

pub fn write_clu(p: &Partition, node_order: &[String], path: &std::path::Path) -> Result<()> {
    std::fs::write(path, clu_string(p, node_order)?)?;
    Ok(())
}

/// Read a .clu body back into a partition.
pub fn read_clu(text: &str) -> Result<Partition> {
    let clu_err = |message: String| Error::Format {
        path: "clu".into(),
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| clu_err("empty file".into()))?;
    let n: usize = header
        .strip_prefix("*Vertices ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| clu_err(format!("bad vertices header {header:?}")))?;
    let mut raw = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| clu_err("truncated partition".into()))?;
        let id: usize = line
            .trim()
            .parse()
            .map_err(|_| clu_err(format!("bad community id {line:?}")))?;
        if id == 0 {
            return Err(clu_err("community ids are 1-based".into()));
        }
        raw.push(id - 1);
    }
    Ok(Partition::new(raw))
}

/// One row of the per-window metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub year_start: i32,
    pub year_end: i32,
    pub n_documents: usize,
    pub n_cited_venues: usize,
    pub n_edge_endpoints: usize,
    pub n_communities: usize,
    pub modularity: f64,
    pub avg_clustering: f64,
    pub density: f64,
}

/// Sample mean and (n-1) standard deviation, the footer convention of
/// the published table.
pub fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

fn footer_stat(values: &[f64]) -> String {
    let (mean, std) = mean_and_sample_std(values);
    format!("{mean:.3} (\u{b1}{std:.3})")
}

/// CSV in the published table's column order, with a footer carrying
/// sums for the count columns and mean (+-sample std) for the rest.
pub fn metrics_report_string(rows: &[MetricsRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InsufficientData("no metric rows".into()));
    }
    let mut out = String::from(
        "years,n_documents,n_cited_venues,n_edge_endpoints,n_communities,modularity,avg_clustering,density\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{}-{},{},{},{},{},{:.3},{:.3},{:.3}",
            r.year_start,
            r.year_end,
            r.n_documents,
            r.n_cited_venues,
            r.n_edge_endpoints,
            r.n_communities,
            r.modularity,
            r.avg_clustering,
            r.density
        );
    }
    let col = |f: fn(&MetricsRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let _ = writeln!(
        out,
        "Sum:,{},{},{},{},{},{},{}",
        rows.iter().map(|r| r.n_documents).sum::<usize>(),
        rows.iter().map(|r| r.n_cited_venues).sum::<usize>(),
        rows.iter().map(|r| r.n_edge_endpoints).sum::<usize>(),
        footer_stat(&col(|r| r.n_communities as f64)),
        footer_stat(&col(|r| r.modularity)),
        footer_stat(&col(|r| r.avg_clustering)),
        footer_stat(&col(|r| r.density)),
    );
    Ok(out)
}

pub fn write_metrics_report(rows: &[MetricsRow], path: &std::path::Path) -> Result<()> {
    std::fs::write(path, metrics_report_string(rows)?)?;
    Ok(())
}

/// Loadings report: per-factor top venue, then the full loading matrix
/// at three decimals. The header carries the percent of variance
/// explained; an optional venue's rows are flagged in a final column.
pub fn loadings_report_string(sol: &FactorSolution, highlight: Option<&str>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} factors,% variance explained,{:.1}", sol.k, sol.pct_variance);
    out.push_str("factor,top_venue,loading,note\n");
    for j in 0..sol.k {
        let mut top = 0usize;
        let mut tie = false;
        for v in 1..sol.venues.len() {
            let (a, b) = (sol.loadings[v][j].abs(), sol.loadings[top][j].abs());
            if a > b {
                top = v;
                tie = false;
            } else if a == b && v != top {
                // Lexicographically smaller venue wins the tie.
                if sol.venues[v] < sol.venues[top] {
                    top = v;
                }
                tie = true;
            }
        }
        let _ = writeln!(
            out,
            "{},{},{:.3},{}",
            j + 1,
            csv_field(&sol.venues[top]),
            sol.loadings[top][j],
            if tie { "tie" } else { "" }
        );
    }
    out.push_str("venue");
    for j in 0..sol.k {
        let _ = write!(out, ",factor_{}", j + 1);
    }
    out.push_str(",flag\n");
    for (v, venue) in sol.venues.iter().enumerate() {
        out.push_str(&csv_field(venue));
        for j in 0..sol.k {
            let _ = write!(out, ",{:.3}", sol.loadings[v][j]);
        }
        let flagged = highlight == Some(venue.as_str());
        let _ = writeln!(out, ",{}", if flagged { "highlight" } else { "" });
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Stable color classes for alluvial bands: a band inherits its color
/// along 1-1 significant continuation links, so a community keeps its
/// color as long as it merely continues.
pub fn continuation_colors(
    n_slices: usize,
    sizes: &[Vec<usize>],
    edges: &[FlowEdge],
) -> HashMap<(usize, usize), usize> {
    let mut color: HashMap<(usize, usize), usize> = HashMap::new();
    let mut next = 0usize;
    for slice in 0..n_slices {
        for community in 0..sizes[slice].len() {
            if !color.contains_key(&(slice, community)) {
                color.insert((slice, community), next);
                next += 1;
            }
            let out: Vec<&FlowEdge> = edges
                .iter()
                .filter(|e| {
                    e.from_slice == slice && e.from_community == community && e.significant
                })
                .collect();
            if out.len() == 1 {
                let succ = out[0].to_community;
                let into: usize = edges
                    .iter()
                    .filter(|e| {
                        e.from_slice == slice && e.to_community == succ && e.significant
                    })
                    .count();
                if into == 1 {
                    let c = color[&(slice, community)];
                    color.entry((slice + 1, succ)).or_insert(c);
                }
            }
        }
    }
    color
}

const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b4", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

const SVG_W: f64 = 1000.0;
const SVG_H: f64 = 600.0;
const MARGIN: f64 = 30.0;
const BAR_W: f64 = 14.0;

/// Standalone SVG: bands as rectangles, ribbons as cubic-Bezier tubes.
/// Byte output is deterministic for a fixed geometry.
pub fn alluvial_svg_string(
    geo: &AlluvialGeometry,
    colors: &HashMap<(usize, usize), usize>,
    labels: &[i32],
) -> String {
    let x_px = |x: f64| MARGIN + x * (SVG_W - 2.0 * MARGIN);
    let y_px = |y: f64| MARGIN + y * (SVG_H - 2.0 * MARGIN);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    for r in &geo.ribbons {
        let x0 = x_px(r.x0) + BAR_W / 2.0;
        let x1 = x_px(r.x1) - BAR_W / 2.0;
        let mid = (x0 + x1) / 2.0;
        let (ft, fb) = (y_px(r.from_top), y_px(r.from_bottom));
        let (tt, tb) = (y_px(r.to_top), y_px(r.to_bottom));
        let color = colors
            .get(&(r.from_slice, r.from_community))
            .map(|&c| PALETTE[c % PALETTE.len()])
            .unwrap_or("#999999");
        let opacity = if r.significant { "0.55" } else { "0.25" };
        let _ = writeln!(
            out,
            "<path d=\"M {x0:.2} {ft:.2} C {mid:.2} {ft:.2} {mid:.2} {tt:.2} {x1:.2} {tt:.2} L {x1:.2} {tb:.2} C {mid:.2} {tb:.2} {mid:.2} {fb:.2} {x0:.2} {fb:.2} Z\" fill=\"{color}\" opacity=\"{opacity}\"/>"
        );
    }
    for b in &geo.bands {
        let x = x_px(b.x) - BAR_W / 2.0;
        let y0 = y_px(b.y0);
        let h = y_px(b.y1) - y0;
        let color = colors
            .get(&(b.slice, b.community))
            .map(|&c| PALETTE[c % PALETTE.len()])
            .unwrap_or("#999999");
        let _ = writeln!(
            out,
            "<rect x=\"{x:.2}\" y=\"{y0:.2}\" width=\"{BAR_W}\" height=\"{h:.2}\" fill=\"{color}\"/>"
        );
    }
    for (slice, label) in labels.iter().enumerate() {
        let x = if labels.len() == 1 {
            x_px(0.0)
        } else {
            x_px(slice as f64 / (labels.len() - 1) as f64)
        };
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{label}</text>",
            SVG_H - 8.0
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_alluvial_svg(
    geo: &AlluvialGeometry,
    colors: &HashMap<(usize, usize), usize>,
    labels: &[i32],
    path: &std::path::Path,
) -> Result<()> {
    std::fs::write(path, alluvial_svg_string(geo, colors, labels))?;
    Ok(())
}
