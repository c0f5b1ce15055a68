//! Closed-form timing models and the data-saving model of the k-extension.

use serde::{Deserialize, Serialize};

use crate::error::{DistError, Result};
use crate::topology::ClusterTopology;

/// Bytes per MB in the saving table.
pub const MB: f64 = 1e6;

/// Chain total: every node's processing plus every hop of the ring,
/// `sum t_pro + sum_{i} t_net(i, i+1) + t_net(n, 1)`, using link latencies.
pub fn chain_time_ns(topology: &ClusterTopology, t_pro: &[u64]) -> Option<u64> {
    let n = topology.node_count;
    let mut total: u64 = t_pro.iter().sum();
    if n > 1 {
        for i in 0..n {
            total += topology.link(i, (i + 1) % n).latency_ns?;
        }
    }
    Some(total)
}

/// Parallel remote component: `max_{i>1} (t_pro_i + t_net(1, i))`.
pub fn parallel_time_ns(topology: &ClusterTopology, t_pro: &[u64]) -> Option<u64> {
    let mut worst = 0;
    for i in 1..topology.node_count {
        worst = worst.max(t_pro[i] + topology.link(0, i).latency_ns?);
    }
    Some(worst)
}

/// Both readings of the saving formula, in bytes. Positive means the
/// k-extension sends less than plain parallel search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saving {
    /// `(n-1)·N·r - [(n-1)·S/k + N + (k-1)·(n-1)]·r`: baseline of N records
    /// per remote node against S/k samples per node, N certified records
    /// and at most k-1 wasted records per remote node.
    pub reconstructed: f64,
    /// `(n-1)·S·r - [(n-1)·S/k + N + (k-1)·n]·r`, the equation as printed.
    pub literal: f64,
}

/// Guaranteed saving for `n` nodes of `s` sensors each, top `big_n`,
/// sampling step `k` and record size `r` bytes.
pub fn analytic_saving(n: u64, s: f64, big_n: u64, k: u64, r: f64) -> Result<Saving> {
    if k == 0 || k >= big_n {
        return Err(DistError::InvalidK {
            k: k as usize,
            n: big_n as usize,
        });
    }
    let (n, big_n, k) = (n as f64, big_n as f64, k as f64);
    let sent = (n - 1.0) * s / k + big_n;
    Ok(Saving {
        reconstructed: (n - 1.0) * big_n * r - (sent + (k - 1.0) * (n - 1.0)) * r,
        literal: (n - 1.0) * s * r - (sent + (k - 1.0) * n) * r,
    })
}

pub const TABLE3_NODES: u64 = 4;
pub const TABLE3_SENSORS_PER_NODE: f64 = 1e6;
pub const TABLE3_K: [u64; 9] = [10, 100, 500, 1_000, 5_000, 10_000, 50_000, 100_000, 500_000];
pub const TABLE3_N: [u64; 9] = [100, 500, 1_000, 5_000, 10_000, 50_000, 100_000, 500_000, 1_000_000];

/// Published savings in MB, rows by k and columns by N; `None` where
/// k ≥ N.
#[rustfmt::skip]
pub const TABLE3_MB: [[Option<f64>; 9]; 9] = [
    [Some(-60.7), Some(-60.5), Some(-60.3), Some(-58.7), Some(-56.7), Some(-40.5), Some(-20.2), Some(141.6), Some(344.0)],
    [None, Some(-5.9), Some(-5.7), Some(-4.1), Some(-2.1), Some(14.1), Some(34.3), Some(196.2), Some(398.5)],
    [None, None, Some(-1.1), Some(0.5), Some(2.5), Some(18.7), Some(38.9), Some(200.8), Some(403.1)],
    [None, None, None, Some(0.8), Some(2.8), Some(19.0), Some(39.3), Some(201.1), Some(403.5)],
    [None, None, None, None, Some(0.9), Some(17.1), Some(37.3), Some(199.2), Some(401.5)],
    [None, None, None, None, None, Some(14.1), Some(34.3), Some(196.2), Some(398.5)],
    [None, None, None, None, None, None, Some(10.1), Some(172.0), Some(374.3)],
    [None, None, None, None, None, None, None, Some(141.6), Some(344.0)],
    [None, None, None, None, None, None, None, None, Some(101.2)],
];

/// Cells match when within 5% of the published value or 0.3 MB, whichever
/// is looser.
pub fn within_tolerance(published: f64, model: f64) -> bool {
    (model - published).abs() <= (0.05 * published.abs()).max(0.3)
}

/// Least-squares record size (bytes) for the reconstructed model. The
/// model is linear in r, so the fit is `sum(g·y) / sum(g·g)`.
pub fn fit_record_size() -> f64 {
    let mut gy = 0.0;
    let mut gg = 0.0;
    for (i, &k) in TABLE3_K.iter().enumerate() {
        for (j, &big_n) in TABLE3_N.iter().enumerate() {
            if let Some(y) = TABLE3_MB[i][j] {
                let g = analytic_saving(TABLE3_NODES, TABLE3_SENSORS_PER_NODE, big_n, k, 1.0)
                    .expect("published cells have k < N")
                    .reconstructed
                    / MB;
                gy += g * y;
                gg += g * g;
            }
        }
    }
    gy / gg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Cell {
    pub k: u64,
    pub n: u64,
    pub published_mb: f64,
    pub model_mb: f64,
    pub literal_mb: f64,
    pub residual_mb: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Report {
    pub nodes: u64,
    pub sensors_per_node: f64,
    pub record_size: f64,
    pub bytes_per_mb: f64,
    pub cells: Vec<Table3Cell>,
    pub matched: usize,
}

impl Table3Report {
    pub fn fraction_matched(&self) -> f64 {
        self.matched as f64 / self.cells.len() as f64
    }

    pub fn cell(&self, k: u64, n: u64) -> Option<&Table3Cell> {
        self.cells.iter().find(|c| c.k == k && c.n == n)
    }
}

/// Evaluates the model over every published cell at record size `r`.
pub fn table3_report(r: f64) -> Table3Report {
    let mut cells = Vec::new();
    for (i, &k) in TABLE3_K.iter().enumerate() {
        for (j, &n) in TABLE3_N.iter().enumerate() {
            let Some(published_mb) = TABLE3_MB[i][j] else {
                continue;
            };
            let s = analytic_saving(TABLE3_NODES, TABLE3_SENSORS_PER_NODE, n, k, r).expect("k < N");
            let model_mb = s.reconstructed / MB;
            cells.push(Table3Cell {
                k,
                n,
                published_mb,
                model_mb,
                literal_mb: s.literal / MB,
                residual_mb: model_mb - published_mb,
                within_tolerance: within_tolerance(published_mb, model_mb),
            });
        }
    }
    Table3Report {
        nodes: TABLE3_NODES,
        sensors_per_node: TABLE3_SENSORS_PER_NODE,
        record_size: r,
        bytes_per_mb: MB,
        matched: cells.iter().filter(|c| c.within_tolerance).count(),
        cells,
    }
}

fn grid(report: &Table3Report, title: &str, value: impl Fn(&Table3Cell) -> String) -> String {
    const W: usize = 9;
    let mut out = format!("{title}\n{:>8} |", "k \\ N");
    for n in TABLE3_N {
        out.push_str(&format!("{n:>W$}"));
    }
    out.push('\n');
    out.push_str(&"-".repeat(10 + W * TABLE3_N.len()));
    out.push('\n');
    for k in TABLE3_K {
        out.push_str(&format!("{k:>8} |"));
        for n in TABLE3_N {
            let text = report.cell(k, n).map(&value).unwrap_or_else(|| "n/a".to_string());
            out.push_str(&format!("{text:>W$}"));
        }
        out.push('\n');
    }
    out
}

/// Aligned text rendering: the model grid, the residual grid and a summary.
/// Positive savings carry a `+`.
pub fn render_table3(report: &Table3Report) -> String {
    let mut out = format!(
        "n = {}, S = {}, r = {:.2} bytes, 1 MB = {} bytes\n\n",
        report.nodes, report.sensors_per_node, report.record_size, report.bytes_per_mb
    );
    out.push_str(&grid(report, "model saving (MB)", |c| format!("{:+.1}", c.model_mb)));
    out.push('\n');
    out.push_str(&grid(report, "residual vs published (MB)", |c| {
        format!("{:+.2}{}", c.residual_mb, if c.within_tolerance { "" } else { "*" })
    }));
    out.push_str(&format!(
        "\n{} of {} cells within max(5%, 0.3 MB); * marks the rest\n",
        report.matched,
        report.cells.len()
    ));
    out
}
