//! Argument structure-aware clustering.
//!
//! Claims are clustered on an undirected alignment graph whose edge weights
//! combine normalized bidirectional entailment with the ARDE signal (the
//! fraction of a claim's reasons that also support the neighboring claim).
//! Reasons aggregated within each claim cluster are then clustered the same
//! way on bidirectional entailment alone. Components of the thresholded
//! graphs become the clusters.
//!
//! All iteration runs in ascending prop id / reason ref order, so results
//! are deterministic given cached scores.

use crate::model::{ClaimCluster, Proposition, ReasonCluster, ReasonRef};
use crate::scoring::{normalize, AlignmentScorer, ScoreError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Clustering thresholds. `tau` and `t_support` live on the normalized
/// [0, 1] scale; the defaults are the images of the raw scale midpoint 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub tau: f64,
    pub t_support: f64,
    pub n_samples: u32,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            t_support: 0.5,
            n_samples: 5,
        }
    }
}

/// Undirected graph over cluster candidates. Every stored edge passed the
/// threshold check (`score > tau`, strict); `a < b` index into `nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentGraph<N> {
    pub nodes: Vec<N>,
    pub edges: Vec<Edge>,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub score: f64,
}

/// Directed raw claim-claim and reason-claim scores for one proposition set.
///
/// `claim_directed[m][n]` is the raw score of "claim m supports claim n"
/// (`None` on the diagonal). `reason_support[m][j][n]` is the raw score of
/// "reason j of claim m supports claim n".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimScoreMatrix {
    pub claim_directed: Vec<Vec<Option<f64>>>,
    pub reason_support: Vec<Vec<Vec<Option<f64>>>>,
}

/// Directed raw reason-reason scores over an aggregated reason set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonScoreMatrix {
    pub refs: Vec<ReasonRef>,
    pub directed: Vec<Vec<Option<f64>>>,
}

/// ARDE: the fraction of `scores` (raw reason-to-claim scores) whose
/// normalized value strictly exceeds `t_support`. `None` when there are no
/// reasons.
fn arde_fraction(scores: &[f64], t_support: f64) -> Result<Option<f64>, ScoreError> {
    if scores.is_empty() {
        return Ok(None);
    }
    let mut supporting = 0usize;
    for &raw in scores {
        if normalize(raw)? > t_support {
            supporting += 1;
        }
    }
    Ok(Some(supporting as f64 / scores.len() as f64))
}

/// Scores every reason of `claim_m` against `claim_n` and returns the
/// supporting fraction, or `None` when `claim_m` has no reasons.
pub fn compute_arde<S: AlignmentScorer>(
    claim_m: &Proposition,
    claim_n: &Proposition,
    t_support: f64,
    scorer: &S,
) -> Result<Option<f64>, ScoreError> {
    let targets = [claim_n.claim.as_str()];
    let mut scores = Vec::with_capacity(claim_m.reasons.len());
    for reason in &claim_m.reasons {
        scores.push(scorer.directed_raw(reason, targets[0])?);
    }
    arde_fraction(&scores, t_support)
}

/// Final alignment score s(m, n): the average of the normalized
/// bidirectional entailment score and the bidirectional ARDE score. When
/// only one ARDE direction is defined that value is used; when neither is,
/// the score is the entailment component alone.
pub fn combined_alignment(
    entail_bi_norm: f64,
    arde_mn: Option<f64>,
    arde_nm: Option<f64>,
) -> f64 {
    let arde_bi = match (arde_mn, arde_nm) {
        (Some(a), Some(b)) => Some((a + b) / 2.0),
        (Some(a), None) | (None, Some(a)) => Some(a),
        (None, None) => None,
    };
    match arde_bi {
        Some(arde) => (entail_bi_norm + arde) / 2.0,
        None => entail_bi_norm,
    }
}

/// Computes the full directed score matrix for a proposition set. One
/// one-to-many call per source when the scorer batches.
pub fn compute_claim_scores(
    props: &[Proposition],
    scorer: &(impl AlignmentScorer + ?Sized),
) -> Result<ClaimScoreMatrix, ScoreError> {
    let n = props.len();
    let mut claim_directed = vec![vec![None; n]; n];
    let mut reason_support: Vec<Vec<Vec<Option<f64>>>> = props
        .iter()
        .map(|p| vec![vec![None; n]; p.reasons.len()])
        .collect();

    for m in 0..n {
        let targets: Vec<&str> = (0..n)
            .filter(|&k| k != m)
            .map(|k| props[k].claim.as_str())
            .collect();
        if targets.is_empty() {
            continue;
        }
        let target_ids: Vec<usize> = (0..n).filter(|&k| k != m).collect();

        let scores = scorer.directed_raw_many(&props[m].claim, &targets)?;
        for (&k, &score) in target_ids.iter().zip(scores.iter()) {
            claim_directed[m][k] = Some(score);
        }
        for (j, reason) in props[m].reasons.iter().enumerate() {
            let scores = scorer.directed_raw_many(reason, &targets)?;
            for (&k, &score) in target_ids.iter().zip(scores.iter()) {
                reason_support[m][j][k] = Some(score);
            }
        }
    }
    Ok(ClaimScoreMatrix {
        claim_directed,
        reason_support,
    })
}

/// Builds the thresholded claim graph from a precomputed score matrix.
pub fn build_claim_graph_from_scores(
    props: &[Proposition],
    cfg: &ClusterConfig,
    scores: &ClaimScoreMatrix,
) -> Result<AlignmentGraph<usize>, ScoreError> {
    let n = props.len();
    let mut edges = Vec::new();
    for m in 0..n {
        for k in m + 1..n {
            let forward = scores.claim_directed[m][k].expect("off-diagonal score");
            let backward = scores.claim_directed[k][m].expect("off-diagonal score");
            let entail_bi = normalize((forward + backward) / 2.0)?;

            let reasons_mk: Vec<f64> = scores.reason_support[m]
                .iter()
                .map(|per_reason| per_reason[k].expect("off-diagonal score"))
                .collect();
            let reasons_km: Vec<f64> = scores.reason_support[k]
                .iter()
                .map(|per_reason| per_reason[m].expect("off-diagonal score"))
                .collect();
            let arde_mk = arde_fraction(&reasons_mk, cfg.t_support)?;
            let arde_km = arde_fraction(&reasons_km, cfg.t_support)?;

            let s = combined_alignment(entail_bi, arde_mk, arde_km);
            if s > cfg.tau {
                edges.push(Edge { a: m, b: k, score: s });
            }
        }
    }
    Ok(AlignmentGraph {
        nodes: props.iter().map(|p| p.prop_id).collect(),
        edges,
        tau: cfg.tau,
    })
}

/// Scores all pairs and builds the thresholded claim graph.
pub fn build_claim_graph<S: AlignmentScorer>(
    props: &[Proposition],
    cfg: &ClusterConfig,
    scorer: &S,
) -> Result<AlignmentGraph<usize>, ScoreError> {
    let scores = compute_claim_scores(props, scorer)?;
    build_claim_graph_from_scores(props, cfg, &scores)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[rb.max(ra)] = rb.min(ra);
        }
    }
}

/// Connected components over node indices, each sorted ascending, ordered
/// by smallest member.
fn components(n_nodes: usize, edges: &[Edge]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n_nodes);
    for e in edges {
        uf.union(e.a, e.b);
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n_nodes {
        by_root.entry(uf.find(i)).or_default().push(i);
    }
    by_root.into_values().collect()
}

/// Contracts the claim graph into claim clusters, ordered by smallest
/// member prop id.
pub fn connected_components(graph: &AlignmentGraph<usize>) -> Vec<ClaimCluster> {
    components(graph.nodes.len(), &graph.edges)
        .into_iter()
        .enumerate()
        .map(|(cluster_id, indices)| ClaimCluster {
            cluster_id,
            member_prop_ids: indices.into_iter().map(|i| graph.nodes[i]).collect(),
        })
        .collect()
}

/// The aggregated reason set of a claim cluster: the union of its members'
/// reason lists, as instance refs, sorted ascending.
pub fn aggregate_reasons(cluster: &ClaimCluster, props: &[Proposition]) -> Vec<ReasonRef> {
    let mut refs: Vec<ReasonRef> = cluster
        .member_prop_ids
        .iter()
        .flat_map(|&pid| {
            (0..props[pid].reasons.len()).map(move |reason_index| ReasonRef {
                prop_id: pid,
                reason_index,
            })
        })
        .collect();
    refs.sort();
    refs
}

fn reason_text(props: &[Proposition], r: ReasonRef) -> &str {
    &props[r.prop_id].reasons[r.reason_index]
}

/// Computes the directed score matrix over an aggregated reason set.
pub fn compute_reason_scores(
    refs: &[ReasonRef],
    props: &[Proposition],
    scorer: &(impl AlignmentScorer + ?Sized),
) -> Result<ReasonScoreMatrix, ScoreError> {
    let n = refs.len();
    let mut directed = vec![vec![None; n]; n];
    for u in 0..n {
        let targets: Vec<&str> = (0..n)
            .filter(|&v| v != u)
            .map(|v| reason_text(props, refs[v]))
            .collect();
        if targets.is_empty() {
            continue;
        }
        let target_ids: Vec<usize> = (0..n).filter(|&v| v != u).collect();
        let scores = scorer.directed_raw_many(reason_text(props, refs[u]), &targets)?;
        for (&v, &score) in target_ids.iter().zip(scores.iter()) {
            directed[u][v] = Some(score);
        }
    }
    Ok(ReasonScoreMatrix {
        refs: refs.to_vec(),
        directed,
    })
}

/// Builds the thresholded reason graph: an edge iff the normalized average
/// of the two directed scores strictly exceeds `tau`.
pub fn build_reason_graph_from_scores(
    cfg: &ClusterConfig,
    scores: &ReasonScoreMatrix,
) -> Result<AlignmentGraph<ReasonRef>, ScoreError> {
    let n = scores.refs.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let forward = scores.directed[u][v].expect("off-diagonal score");
            let backward = scores.directed[v][u].expect("off-diagonal score");
            let bi = normalize((forward + backward) / 2.0)?;
            if bi > cfg.tau {
                edges.push(Edge { a: u, b: v, score: bi });
            }
        }
    }
    Ok(AlignmentGraph {
        nodes: scores.refs.clone(),
        edges,
        tau: cfg.tau,
    })
}

/// Clusters an aggregated reason set. Cluster ids start at
/// `first_cluster_id` and follow the smallest-member ordering.
pub fn cluster_reasons<S: AlignmentScorer>(
    refs: &[ReasonRef],
    props: &[Proposition],
    cfg: &ClusterConfig,
    scorer: &S,
    parent_claim_cluster_id: usize,
    first_cluster_id: usize,
) -> Result<Vec<ReasonCluster>, ScoreError> {
    let scores = compute_reason_scores(refs, props, scorer)?;
    let graph = build_reason_graph_from_scores(cfg, &scores)?;
    Ok(reason_clusters_from_graph(
        &graph,
        parent_claim_cluster_id,
        first_cluster_id,
    ))
}

/// Contracts a reason graph into reason clusters.
pub fn reason_clusters_from_graph(
    graph: &AlignmentGraph<ReasonRef>,
    parent_claim_cluster_id: usize,
    first_cluster_id: usize,
) -> Vec<ReasonCluster> {
    components(graph.nodes.len(), &graph.edges)
        .into_iter()
        .enumerate()
        .map(|(offset, indices)| ReasonCluster {
            cluster_id: first_cluster_id + offset,
            parent_claim_cluster_id,
            members: indices.into_iter().map(|i| graph.nodes[i]).collect(),
        })
        .collect()
}

/// Prevalence per reason cluster: the member count.
pub fn quantify(clusters: &[ReasonCluster]) -> BTreeMap<usize, usize> {
    clusters
        .iter()
        .map(|c| (c.cluster_id, c.members.len()))
        .collect()
}

/// Full clustering output for one thread: the audit-grade score matrices
/// plus the cluster assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreadClustering {
    pub claim_scores: ClaimScoreMatrix,
    pub claim_clusters: Vec<ClaimCluster>,
    /// One matrix per claim cluster, in cluster order (empty matrix for
    /// reason-free clusters).
    pub reason_scores: Vec<ReasonScoreMatrix>,
    pub reason_clusters: Vec<ReasonCluster>,
}

/// Runs the whole clustering stage: claim graph and components, then reason
/// aggregation and clustering per claim cluster. Reason cluster ids are
/// assigned globally, in claim cluster order.
pub fn cluster_thread<S: AlignmentScorer>(
    props: &[Proposition],
    cfg: &ClusterConfig,
    scorer: &S,
) -> Result<ThreadClustering, ScoreError> {
    let claim_scores = compute_claim_scores(props, scorer)?;
    let graph = build_claim_graph_from_scores(props, cfg, &claim_scores)?;
    let claim_clusters = connected_components(&graph);

    let mut reason_scores = Vec::with_capacity(claim_clusters.len());
    let mut reason_clusters = Vec::new();
    let mut next_id = 0usize;
    for cluster in &claim_clusters {
        let refs = aggregate_reasons(cluster, props);
        let scores = compute_reason_scores(&refs, props, scorer)?;
        let reason_graph = build_reason_graph_from_scores(cfg, &scores)?;
        let clusters = reason_clusters_from_graph(&reason_graph, cluster.cluster_id, next_id);
        next_id += clusters.len();
        reason_scores.push(scores);
        reason_clusters.extend(clusters);
    }
    Ok(ThreadClustering {
        claim_scores,
        claim_clusters,
        reason_scores,
        reason_clusters,
    })
}
