//! Graphs, neighbourhoods, and combination-weight matrices.
//!
//! Agents sit on a fixed connected undirected graph. Node `l` fuses data
//! from its neighbourhood `N_l` (which always contains `l` itself) using
//! the weights of a right-stochastic, entrywise-nonnegative, primitive
//! combination matrix supported on the graph.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{substream, StreamKind};

/// Row-sum tolerance for right-stochasticity.
const ROW_SUM_TOL: f64 = 1e-12;

/// Connected undirected graph with self-inclusive neighbourhoods.
#[derive(Debug, Clone)]
pub struct Network {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    neighborhoods: Vec<Vec<usize>>,
}

impl Network {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Canonical edge list, each pair ordered `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted neighbourhood of `l`, including `l` itself.
    pub fn neighborhood(&self, l: usize) -> &[usize] {
        &self.neighborhoods[l]
    }

    /// Number of incident edges (neighbourhood size minus self).
    pub fn degree(&self, l: usize) -> usize {
        self.neighborhoods[l].len() - 1
    }

    /// Longest shortest-path distance over all node pairs.
    pub fn diameter(&self) -> usize {
        let mut worst = 0;
        for start in 0..self.node_count {
            let dist = self.bfs_distances(start);
            for d in dist.iter().flatten() {
                worst = worst.max(*d);
            }
        }
        worst
    }

    fn bfs_distances(&self, start: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count];
        dist[start] = Some(0);
        let mut frontier = vec![start];
        while let Some(u) = frontier.pop() {
            let du = dist[u].unwrap();
            for &v in &self.neighborhoods[u] {
                if v != u && dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    frontier.insert(0, v);
                }
            }
        }
        dist
    }

    /// Serializes to the edge-list exchange format: a `nodes <n>` header
    /// followed by one `u v` pair per line, 0-indexed.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("nodes {}\n", self.node_count);
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Parses the edge-list exchange format produced by
    /// [`Network::to_edge_list_string`]. Blank lines are ignored.
    pub fn from_edge_list_str(text: &str) -> Result<Network> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::validation("topology file is empty"))?;
        let node_count = header
            .strip_prefix("nodes ")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| {
                Error::validation(format!("expected header `nodes <n>`, got `{header}`"))
            })?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let u = it.next().and_then(|s| s.parse::<usize>().ok());
            let v = it.next().and_then(|s| s.parse::<usize>().ok());
            match (u, v, it.next()) {
                (Some(u), Some(v), None) => edges.push((u, v)),
                _ => {
                    return Err(Error::validation(format!(
                        "expected `u v` edge line, got `{line}`"
                    )))
                }
            }
        }
        build_network(node_count, &edges)
    }
}

/// Builds a validated [`Network`] from an edge list.
///
/// Node indices must be in range, self-edges are rejected (self-inclusion
/// of neighbourhoods is implicit), duplicate edges collapse, and the
/// graph must be connected.
pub fn build_network(node_count: usize, edges: &[(usize, usize)]) -> Result<Network> {
    if node_count == 0 {
        return Err(Error::graph("network must have at least one node"));
    }
    let mut canon = BTreeSet::new();
    for &(u, v) in edges {
        if u >= node_count || v >= node_count {
            return Err(Error::graph(format!(
                "edge ({u}, {v}) out of range for {node_count} nodes"
            )));
        }
        if u == v {
            return Err(Error::graph(format!("self-edge ({u}, {v}) is not allowed")));
        }
        canon.insert((u.min(v), u.max(v)));
    }
    let edges: Vec<(usize, usize)> = canon.into_iter().collect();

    let mut neighborhoods: Vec<Vec<usize>> = (0..node_count).map(|l| vec![l]).collect();
    for &(u, v) in &edges {
        neighborhoods[u].push(v);
        neighborhoods[v].push(u);
    }
    for nb in &mut neighborhoods {
        nb.sort_unstable();
    }

    let components = connected_components(node_count, &neighborhoods);
    if components.len() > 1 {
        return Err(Error::graph(format!(
            "graph is disconnected; components: {components:?}"
        )));
    }

    Ok(Network {
        node_count,
        edges,
        neighborhoods,
    })
}

fn connected_components(node_count: usize, neighborhoods: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; node_count];
    let mut components = Vec::new();
    for start in 0..node_count {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            comp.push(u);
            for &v in &neighborhoods[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

/// All nodes within `k` edge-hops of `l` (`k = 0` gives `{l}`), sorted.
pub fn k_hop_neighborhood(net: &Network, l: usize, k: usize) -> Result<Vec<usize>> {
    if l >= net.node_count() {
        return Err(Error::graph(format!(
            "node {l} out of range for {} nodes",
            net.node_count()
        )));
    }
    let mut reach: BTreeSet<usize> = BTreeSet::new();
    reach.insert(l);
    let mut frontier = vec![l];
    for _ in 0..k {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in net.neighborhood(u) {
                if reach.insert(v) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(reach.into_iter().collect())
}

/// Random spanning tree by uniform attachment over a shuffled node order.
fn random_spanning_tree<R: Rng>(nodes: &[usize], rng: &mut R) -> Vec<(usize, usize)> {
    let mut order = nodes.to_vec();
    order.shuffle(rng);
    let mut edges = Vec::with_capacity(order.len().saturating_sub(1));
    for i in 1..order.len() {
        let parent = order[rng.gen_range(0..i)];
        edges.push((order[i].min(parent), order[i].max(parent)));
    }
    edges
}

/// Random connected graph with exactly `edge_count` edges: a random
/// spanning tree plus uniformly sampled chords.
pub fn random_connected_network(node_count: usize, edge_count: usize, seed: u64) -> Result<Network> {
    if node_count == 0 {
        return Err(Error::graph("network must have at least one node"));
    }
    let max_edges = node_count * (node_count - 1) / 2;
    if edge_count + 1 < node_count || edge_count > max_edges {
        return Err(Error::graph(format!(
            "edge count {edge_count} infeasible for {node_count} nodes (need {} ..= {max_edges})",
            node_count - 1
        )));
    }
    let mut rng = substream(seed, StreamKind::Topology, 0, 0);
    let nodes: Vec<usize> = (0..node_count).collect();
    let mut edges: BTreeSet<(usize, usize)> =
        random_spanning_tree(&nodes, &mut rng).into_iter().collect();
    let mut candidates: Vec<(usize, usize)> = (0..node_count)
        .flat_map(|u| ((u + 1)..node_count).map(move |v| (u, v)))
        .filter(|e| !edges.contains(e))
        .collect();
    candidates.shuffle(&mut rng);
    for e in candidates.into_iter().take(edge_count - edges.len()) {
        edges.insert(e);
    }
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    build_network(node_count, &edges)
}

const PAPER_NODES: usize = 20;
const PAPER_EDGES: usize = 40;
const TOPOLOGY_ATTEMPTS: u64 = 1000;

/// Generates the 20-node, 40-link experiment topology: connected, with
/// exactly one node of degree 1 (the pendant that will carry the only
/// vertical observer). Construction: random spanning tree over the other
/// 19 nodes, the pendant attached last, then random chords avoiding the
/// pendant; resampled until the degree census holds.
pub fn generate_paper_topology(seed: u64) -> Result<Network> {
    for attempt in 0..TOPOLOGY_ATTEMPTS {
        let mut rng = substream(seed, StreamKind::Topology, attempt, 1);
        let pendant = rng.gen_range(0..PAPER_NODES);
        let others: Vec<usize> = (0..PAPER_NODES).filter(|&n| n != pendant).collect();

        let mut edges: BTreeSet<(usize, usize)> =
            random_spanning_tree(&others, &mut rng).into_iter().collect();
        let anchor = others[rng.gen_range(0..others.len())];
        edges.insert((pendant.min(anchor), pendant.max(anchor)));

        let mut candidates: Vec<(usize, usize)> = others
            .iter()
            .flat_map(|&u| others.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .filter(|e| !edges.contains(e))
            .collect();
        candidates.shuffle(&mut rng);
        for e in candidates.into_iter().take(PAPER_EDGES - edges.len()) {
            edges.insert(e);
        }
        if edges.len() != PAPER_EDGES {
            continue;
        }

        let edges: Vec<(usize, usize)> = edges.into_iter().collect();
        let net = build_network(PAPER_NODES, &edges)?;
        let degree_one: Vec<usize> = (0..PAPER_NODES).filter(|&l| net.degree(l) == 1).collect();
        if degree_one == [pendant] {
            return Ok(net);
        }
    }
    Err(Error::graph(format!(
        "could not generate a {PAPER_NODES}-node/{PAPER_EDGES}-edge topology with one pendant in {TOPOLOGY_ATTEMPTS} attempts"
    )))
}

/// The node of degree 1, if the network has exactly one.
pub fn pendant_node(net: &Network) -> Option<usize> {
    let mut it = (0..net.node_count()).filter(|&l| net.degree(l) == 1);
    match (it.next(), it.next()) {
        (Some(l), None) => Some(l),
        _ => None,
    }
}

/// Right-stochastic, nonnegative, primitive fusion-weight matrix
/// supported on a network's neighbourhoods.
#[derive(Debug, Clone)]
pub struct CombinationMatrix {
    c: DMatrix<f64>,
}

impl CombinationMatrix {
    /// Validates all structural requirements against `net`: the sparsity
    /// pattern, nonnegativity, unit row sums (within `1e-12`), and
    /// primitivity.
    pub fn new(net: &Network, c: DMatrix<f64>) -> Result<Self> {
        let n = net.node_count();
        if c.shape() != (n, n) {
            return Err(Error::dimension(format!(
                "combination matrix is {}x{}, expected {n}x{n}",
                c.nrows(),
                c.ncols()
            )));
        }
        for l in 0..n {
            let mut row_sum = 0.0;
            for i in 0..n {
                let w = c[(l, i)];
                if w < 0.0 {
                    return Err(Error::validation(format!(
                        "combination weight c[{l},{i}] = {w} is negative"
                    )));
                }
                if w != 0.0 && !net.neighborhood(l).contains(&i) {
                    return Err(Error::validation(format!(
                        "combination weight c[{l},{i}] = {w} lies outside the neighbourhood of {l}"
                    )));
                }
                row_sum += w;
            }
            if (row_sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::validation(format!(
                    "row {l} of the combination matrix sums to {row_sum}, expected 1"
                )));
            }
        }
        if primitivity_exponent(&c)?.is_none() {
            return Err(Error::validation(
                "combination matrix is not primitive",
            ));
        }
        Ok(CombinationMatrix { c })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn node_count(&self) -> usize {
        self.c.nrows()
    }

    pub fn weight(&self, l: usize, i: usize) -> f64 {
        self.c[(l, i)]
    }
}

/// Uniform averaging weights `c_{l,i} = 1/|N_l|` over each neighbourhood.
pub fn uniform_weights(net: &Network) -> Result<CombinationMatrix> {
    let n = net.node_count();
    let mut c = DMatrix::zeros(n, n);
    for l in 0..n {
        let w = 1.0 / net.neighborhood(l).len() as f64;
        for &i in net.neighborhood(l) {
            c[(l, i)] = w;
        }
    }
    CombinationMatrix::new(net, c)
}

/// Metropolis weights: `c_{l,i} = 1/(1 + max(deg l, deg i))` for
/// neighbours `i ≠ l`, remainder on the diagonal.
pub fn metropolis_weights(net: &Network) -> Result<CombinationMatrix> {
    let n = net.node_count();
    let mut c = DMatrix::zeros(n, n);
    for l in 0..n {
        let mut off_sum = 0.0;
        for &i in net.neighborhood(l) {
            if i != l {
                let w = 1.0 / (1.0 + net.degree(l).max(net.degree(i)) as f64);
                c[(l, i)] = w;
                off_sum += w;
            }
        }
        c[(l, l)] = 1.0 - off_sum;
    }
    CombinationMatrix::new(net, c)
}

/// Smallest `m` with `Cᵐ` entrywise positive, searched up to the
/// (n−1)·n + 1 bound; `None` means not primitive. Negative entries are
/// rejected.
pub fn primitivity_exponent(c: &DMatrix<f64>) -> Result<Option<usize>> {
    if c.nrows() != c.ncols() || c.nrows() == 0 {
        return Err(Error::dimension(format!(
            "primitivity requires a non-empty square matrix, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    if c.iter().any(|&v| v < 0.0) {
        return Err(Error::validation(
            "primitivity is defined for nonnegative matrices only",
        ));
    }
    let n = c.nrows();
    let base: Vec<bool> = c.iter().map(|&v| v > 0.0).collect(); // column-major
    let positive = |p: &[bool]| p.iter().all(|&b| b);
    let mut power = base.clone();
    let bound = (n - 1) * n + 1;
    for m in 1..=bound {
        if positive(&power) {
            return Ok(Some(m));
        }
        // boolean product power := power · base
        let mut next = vec![false; n * n];
        for j in 0..n {
            for k in 0..n {
                if base[j * n + k] {
                    for i in 0..n {
                        if power[k * n + i] {
                            next[j * n + i] = true;
                        }
                    }
                }
            }
        }
        power = next;
    }
    Ok(None)
}

/// True iff some power of the nonnegative matrix is entrywise positive.
pub fn is_primitive(c: &DMatrix<f64>) -> Result<bool> {
    Ok(primitivity_exponent(c)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_network_is_valid() {
        let net = build_network(1, &[]).unwrap();
        assert_eq!(net.neighborhood(0), &[0]);
        assert_eq!(net.edge_count(), 0);
    }

    #[test]
    fn two_node_network_neighborhoods() {
        let net = build_network(2, &[(0, 1)]).unwrap();
        assert_eq!(net.neighborhood(0), &[0, 1]);
        assert_eq!(net.neighborhood(1), &[0, 1]);
    }

    #[test]
    fn disconnected_graph_is_rejected_listing_components() {
        let err = build_network(3, &[(0, 1)]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("disconnected"), "{msg}");
        assert!(msg.contains("[2]"), "{msg}");
    }

    #[test]
    fn out_of_range_and_self_edges_are_rejected() {
        assert!(build_network(2, &[(0, 2)]).is_err());
        assert!(build_network(2, &[(1, 1)]).is_err());
    }

    #[test]
    fn neighborhoods_are_symmetric_and_self_inclusive() {
        let net = build_network(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        for l in 0..5 {
            assert!(net.neighborhood(l).contains(&l));
            for &i in net.neighborhood(l) {
                assert!(net.neighborhood(i).contains(&l));
            }
        }
    }

    #[test]
    fn paper_topology_matches_the_degree_census() {
        for seed in [0u64, 1, 7, 42] {
            let net = generate_paper_topology(seed).unwrap();
            assert_eq!(net.node_count(), 20);
            assert_eq!(net.edge_count(), 40);
            let ones: Vec<usize> = (0..20).filter(|&l| net.degree(l) == 1).collect();
            assert_eq!(ones.len(), 1, "seed {seed}: degree-1 nodes {ones:?}");
            assert_eq!(pendant_node(&net), Some(ones[0]));
        }
    }

    #[test]
    fn paper_topology_is_deterministic() {
        let a = generate_paper_topology(3).unwrap();
        let b = generate_paper_topology(3).unwrap();
        assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn uniform_weights_small_cases() {
        let net = build_network(1, &[]).unwrap();
        let c = uniform_weights(&net).unwrap();
        assert_eq!(c.matrix()[(0, 0)], 1.0);

        let net = build_network(2, &[(0, 1)]).unwrap();
        let c = uniform_weights(&net).unwrap();
        assert_eq!(c.matrix().as_slice(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn uniform_weights_on_paper_topology_pass_all_invariants() {
        let net = generate_paper_topology(0).unwrap();
        let cm = uniform_weights(&net).unwrap();
        for l in 0..20 {
            let sum: f64 = (0..20).map(|i| cm.weight(l, i)).sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
        assert!(is_primitive(cm.matrix()).unwrap());
    }

    #[test]
    fn metropolis_weights_are_valid() {
        let net = generate_paper_topology(5).unwrap();
        let cm = metropolis_weights(&net).unwrap();
        // doubly-stochastic by construction: column sums are also 1
        for i in 0..20 {
            let col: f64 = (0..20).map(|l| cm.weight(l, i)).sum();
            assert!((col - 1.0).abs() <= 1e-12, "column {i} sums to {col}");
        }
    }

    #[test]
    fn primitivity_certificates() {
        assert_eq!(
            primitivity_exponent(&DMatrix::from_element(1, 1, 1.0)).unwrap(),
            Some(1)
        );
        assert_eq!(primitivity_exponent(&DMatrix::identity(2, 2)).unwrap(), None);
        // uniform weights on a 3-cycle: neighbourhoods are the whole graph
        let net = build_network(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let cm = uniform_weights(&net).unwrap();
        let m = primitivity_exponent(cm.matrix()).unwrap().unwrap();
        assert!(m <= 2, "exponent {m}");
        // negative entries rejected
        assert!(primitivity_exponent(&DMatrix::from_element(1, 1, -1.0)).is_err());
    }

    #[test]
    fn weights_off_pattern_are_rejected() {
        let net = build_network(3, &[(0, 1), (1, 2)]).unwrap();
        let mut c = DMatrix::zeros(3, 3);
        // nonzero weight between non-neighbours 0 and 2
        c[(0, 0)] = 0.5;
        c[(0, 2)] = 0.5;
        c[(1, 0)] = 0.4;
        c[(1, 1)] = 0.2;
        c[(1, 2)] = 0.4;
        c[(2, 1)] = 0.5;
        c[(2, 2)] = 0.5;
        assert!(CombinationMatrix::new(&net, c).is_err());
    }

    #[test]
    fn k_hop_sets_grow_monotonically() {
        let net = build_network(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(k_hop_neighborhood(&net, 0, 0).unwrap(), vec![0]);
        assert_eq!(k_hop_neighborhood(&net, 0, 1).unwrap(), vec![0, 1]);
        assert_eq!(k_hop_neighborhood(&net, 0, 2).unwrap(), vec![0, 1, 2]);
        // one-hop set equals the neighbourhood
        assert_eq!(
            k_hop_neighborhood(&net, 1, 1).unwrap(),
            net.neighborhood(1).to_vec()
        );
    }

    #[test]
    fn k_hop_at_diameter_covers_paper_topology() {
        let net = generate_paper_topology(2).unwrap();
        let d = net.diameter();
        for l in 0..net.node_count() {
            let all = k_hop_neighborhood(&net, l, d).unwrap();
            assert_eq!(all.len(), 20, "node {l} at k = {d}");
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let net = generate_paper_topology(9).unwrap();
        let text = net.to_edge_list_string();
        let back = Network::from_edge_list_str(&text).unwrap();
        assert_eq!(net.edges(), back.edges());
        assert!(Network::from_edge_list_str("garbage\n").is_err());
        assert!(Network::from_edge_list_str("nodes 2\n0 1 9\n").is_err());
    }

    #[test]
    fn random_connected_networks_are_connected_and_sized() {
        for seed in 0..5u64 {
            let net = random_connected_network(8, 12, seed).unwrap();
            assert_eq!(net.node_count(), 8);
            assert_eq!(net.edge_count(), 12);
        }
        assert!(random_connected_network(5, 3, 0).is_err());
        assert!(random_connected_network(5, 11, 0).is_err());
        let single = random_connected_network(1, 0, 0).unwrap();
        assert_eq!(single.node_count(), 1);
    }
}
