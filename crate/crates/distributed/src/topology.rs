//! Cluster description: nodes, links and per-node processing cost.
//!
//! Nodes are numbered from 0; node 0 is the search request initiator (SRI).
//! All times are integer nanoseconds on the simulator's virtual clock.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DistError, Result};

/// One directed link. `latency_ns = None` means the nodes are not connected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub latency_ns: Option<u64>,
    /// Bytes per second; `None` is unlimited.
    pub bandwidth: Option<f64>,
}

impl Link {
    pub const UNREACHABLE: Link = Link {
        latency_ns: None,
        bandwidth: None,
    };

    pub fn latency(latency_ns: u64) -> Self {
        Link {
            latency_ns: Some(latency_ns),
            bandwidth: None,
        }
    }

    /// Delivery delay for a message of `bytes`, or `None` when unreachable.
    pub fn transfer_ns(&self, bytes: u64) -> Option<u64> {
        let latency = self.latency_ns?;
        let serialization = match self.bandwidth {
            Some(bw) if bytes > 0 => ((bytes as f64) * 1e9 / bw).ceil() as u64,
            _ => 0,
        };
        Some(latency + serialization)
    }
}

/// How long a node spends ranking its local corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessingModel {
    /// A fixed time per node, indexed by node id.
    Fixed { per_node_ns: Vec<u64> },
    /// `base_ns + per_record_ns * local corpus size`.
    Linear { base_ns: u64, per_record_ns: u64 },
    /// Wall-clock time of the actual local ranking. Not reproducible.
    Measured,
}

impl ProcessingModel {
    pub fn duration_ns(&self, node: usize, corpus_len: usize, measured_ns: u64) -> u64 {
        match self {
            ProcessingModel::Fixed { per_node_ns } => per_node_ns[node],
            ProcessingModel::Linear { base_ns, per_record_ns } => base_ns + per_record_ns * corpus_len as u64,
            ProcessingModel::Measured => measured_ns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTopology {
    pub node_count: usize,
    /// Bytes per transmitted (uid, CPWI) record.
    pub record_size: u64,
    /// `links[i][j]` carries messages from node `i` to node `j`.
    pub links: Vec<Vec<Link>>,
    pub processing: ProcessingModel,
    /// Time the SRI spends on each merge of received lists.
    pub merge_ns: u64,
}

impl ClusterTopology {
    /// Fully connected cluster with the same latency on every link and
    /// unlimited bandwidth.
    pub fn uniform(node_count: usize, latency_ns: u64, record_size: u64, processing: ProcessingModel) -> Self {
        let links = (0..node_count)
            .map(|i| {
                (0..node_count)
                    .map(|j| {
                        if i == j {
                            Link::latency(0)
                        } else {
                            Link::latency(latency_ns)
                        }
                    })
                    .collect()
            })
            .collect();
        ClusterTopology {
            node_count,
            record_size,
            links,
            processing,
            merge_ns: 0,
        }
    }

    pub fn link(&self, src: usize, dst: usize) -> Link {
        self.links[src][dst]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.node_count;
        if n == 0 {
            return Err(DistError::InvalidTopology("at least one node is required".into()));
        }
        if self.links.len() != n || self.links.iter().any(|row| row.len() != n) {
            return Err(DistError::InvalidTopology(format!("link matrix must be {n} x {n}")));
        }
        for (i, row) in self.links.iter().enumerate() {
            for (j, link) in row.iter().enumerate() {
                if let Some(bw) = link.bandwidth {
                    if !(bw > 0.0 && bw.is_finite()) {
                        return Err(DistError::InvalidTopology(format!(
                            "bandwidth of link {i} -> {j} must be positive, got {bw}"
                        )));
                    }
                }
            }
        }
        if let ProcessingModel::Fixed { per_node_ns } = &self.processing {
            if per_node_ns.len() != n {
                return Err(DistError::InvalidTopology(format!(
                    "{} processing times given for {n} nodes",
                    per_node_ns.len()
                )));
            }
        }
        Ok(())
    }
}

/// Either one value for every link or a full matrix. `null` entries in a
/// latency matrix mark missing links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkValues {
    Uniform(f64),
    Matrix(Vec<Vec<Option<f64>>>),
}

impl LinkValues {
    fn at(&self, i: usize, j: usize) -> Option<f64> {
        match self {
            LinkValues::Uniform(v) => Some(*v),
            LinkValues::Matrix(m) => m.get(i).and_then(|row| row.get(j)).copied().flatten(),
        }
    }

    fn check_shape(&self, n: usize, what: &str) -> Result<()> {
        if let LinkValues::Matrix(m) = self {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(DistError::InvalidTopology(format!("{what} matrix must be {n} x {n}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessingFile {
    Fixed { ms: Vec<f64> },
    Linear { base_ms: f64, per_record_ns: u64 },
    Measured,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeFile {
    /// Corpus file for this node, relative to the topology file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
}

/// On-disk topology: latency in milliseconds, bandwidth in MB/s (10^6
/// bytes), record size in bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    pub nodes: Vec<NodeFile>,
    pub record_size: u64,
    pub latency_ms: LinkValues,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_mb_s: Option<LinkValues>,
    pub processing: ProcessingFile,
    #[serde(default)]
    pub merge_ms: f64,
}

fn ms_to_ns(ms: f64, what: &str) -> Result<u64> {
    if !(ms >= 0.0 && ms.is_finite()) {
        return Err(DistError::InvalidTopology(format!(
            "{what} must be a non-negative number of ms"
        )));
    }
    Ok((ms * 1e6).round() as u64)
}

impl TopologyFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DistError::InvalidTopology(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| DistError::InvalidTopology(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_topology(&self) -> Result<ClusterTopology> {
        let n = self.nodes.len();
        self.latency_ms.check_shape(n, "latency")?;
        if let Some(bw) = &self.bandwidth_mb_s {
            bw.check_shape(n, "bandwidth")?;
        }
        let mut links = vec![vec![Link::UNREACHABLE; n]; n];
        for (i, row) in links.iter_mut().enumerate() {
            for (j, link) in row.iter_mut().enumerate() {
                if i == j {
                    *link = Link::latency(0);
                    continue;
                }
                link.latency_ns = match self.latency_ms.at(i, j) {
                    Some(ms) => Some(ms_to_ns(ms, "latency")?),
                    None => None,
                };
                link.bandwidth = self.bandwidth_mb_s.as_ref().and_then(|b| b.at(i, j)).map(|mb| mb * 1e6);
            }
        }
        let processing = match &self.processing {
            ProcessingFile::Fixed { ms } => ProcessingModel::Fixed {
                per_node_ns: ms
                    .iter()
                    .map(|&v| ms_to_ns(v, "processing time"))
                    .collect::<Result<_>>()?,
            },
            ProcessingFile::Linear { base_ms, per_record_ns } => ProcessingModel::Linear {
                base_ns: ms_to_ns(*base_ms, "base processing time")?,
                per_record_ns: *per_record_ns,
            },
            ProcessingFile::Measured => ProcessingModel::Measured,
        };
        let topology = ClusterTopology {
            node_count: n,
            record_size: self.record_size,
            links,
            processing,
            merge_ns: ms_to_ns(self.merge_ms, "merge time")?,
        };
        topology.validate()?;
        Ok(topology)
    }

    /// Corpus paths resolved against `base`, one per node.
    pub fn corpus_paths(&self, base: &Path) -> Vec<Option<PathBuf>> {
        self.nodes
            .iter()
            .map(|node| node.corpus.as_ref().map(|p| base.join(p)))
            .collect()
    }
}
