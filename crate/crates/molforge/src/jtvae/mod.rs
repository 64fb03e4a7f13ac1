//! Junction-tree variational autoencoder: molecules coarsen into trees of
//! ring/bond clusters over a learned substructure vocabulary; a tree encoder
//! produces latent codes and a recurrent expansion decodes them back into
//! valence-valid molecules by construction.

mod assemble;
mod decompose;
mod model;
mod train;
mod vocab;

pub use assemble::{enumerate_attachments, AttachmentCandidate};
pub use decompose::{decompose, validate_tree};
pub use model::{DecodeMode, DecodeResult, TreeVae, VaeConfig};
pub use train::{sample_and_report, train_vae, SampleReport, VaeTrainConfig, VaeTrainLog};
pub use vocab::{build_vocabulary, cluster_template, Vocabulary, VocabularyEntry};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum JtvaeError {
    #[error("molecule is disconnected")]
    DisconnectedMolecule,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("cluster {0} is not in the vocabulary")]
    UnknownCluster(String),
    #[error("latent vector has dimension {got}, model expects {want}")]
    BadLatentDimension { got: usize, want: usize },
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Chem(#[from] crate::chem::ChemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterKind {
    Ring,
    Bond,
    AtomBridge,
}

/// A subgraph node of the junction tree: the atoms it covers in the source
/// molecule and, once assigned, its vocabulary id.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub kind: ClusterKind,
    /// Sorted source-molecule atom indices.
    pub atoms: Vec<usize>,
    pub vocab_id: Option<usize>,
}

/// Tree of clusters; adjacent clusters share at least one atom.
#[derive(Debug, Clone)]
pub struct JunctionTree {
    pub clusters: Vec<Cluster>,
    pub edges: Vec<(usize, usize)>,
}

impl JunctionTree {
    pub fn node_count(&self) -> usize {
        self.clusters.len()
    }

    /// Deterministic root: the cluster containing the smallest atom index,
    /// smallest cluster first on ties.
    pub fn root(&self) -> usize {
        (0..self.clusters.len())
            .min_by_key(|&i| {
                let c = &self.clusters[i];
                (c.atoms.first().copied().unwrap_or(usize::MAX), c.atoms.len(), i)
            })
            .expect("non-empty tree")
    }

    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == node {
                    Some(b)
                } else if b == node {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Children of `node` away from the root, ordered by smallest atom index.
    pub fn children(&self, node: usize, parent: Option<usize>) -> Vec<usize> {
        let mut kids: Vec<usize> = self
            .neighbors(node)
            .into_iter()
            .filter(|&n| Some(n) != parent)
            .collect();
        kids.sort_by_key(|&k| {
            (self.clusters[k].atoms.first().copied().unwrap_or(usize::MAX), k)
        });
        kids
    }

    /// Labels in node order; panics when vocabulary ids are unassigned.
    pub fn labels(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.vocab_id.expect("vocab id assigned")).collect()
    }
}

/// Order-free canonical string of a labeled unrooted tree; used to compare a
/// decoded tree against the original.
pub fn canonical_tree_form(labels: &[usize], edges: &[(usize, usize)]) -> String {
    assert!(!labels.is_empty());
    let n = labels.len();
    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    (0..n)
        .map(|root| rooted_form(root, usize::MAX, labels, &adjacency))
        .min()
        .expect("non-empty")
}

fn rooted_form(node: usize, parent: usize, labels: &[usize], adjacency: &[Vec<usize>]) -> String {
    let mut child_forms: Vec<String> = adjacency[node]
        .iter()
        .filter(|&&c| c != parent)
        .map(|&c| rooted_form(c, node, labels, adjacency))
        .collect();
    child_forms.sort();
    format!("({}{})", labels[node], child_forms.concat())
}
