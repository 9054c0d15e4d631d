//! The pipe network graph: undirected, weighted by pipe length in meters,
//! with a designated subset of sensor nodes. Parallel pipes are permitted.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};

/// A pipe between two junctions. Lengths are meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeEdge {
    pub id: String,
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// Undirected water distribution network graph.
///
/// Nodes are addressed by string id externally and by dense index internally.
/// Immutable after construction; `split_pipe` returns a modified copy.
#[derive(Debug, Clone)]
pub struct WdnGraph {
    node_ids: Vec<String>,
    node_index: HashMap<String, usize>,
    edges: Vec<PipeEdge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    sensors: Vec<usize>,
}

impl WdnGraph {
    /// Build and validate a graph. Edges reference node ids; lengths must be
    /// positive and the graph must be connected. The sensor set may be empty
    /// here and assigned later with [`WdnGraph::with_sensors`].
    pub fn new(node_ids: Vec<String>, edges: Vec<(String, String, String, f64)>) -> Result<Self> {
        let mut node_index = HashMap::new();
        for (i, id) in node_ids.iter().enumerate() {
            if node_index.insert(id.clone(), i).is_some() {
                return Err(Error::Value(format!("duplicate node id {id:?}")));
            }
        }
        let mut resolved = Vec::with_capacity(edges.len());
        for (id, a, b, length) in edges {
            let ai = *node_index
                .get(&a)
                .ok_or_else(|| Error::Reference(format!("pipe {id:?} references unknown node {a:?}")))?;
            let bi = *node_index
                .get(&b)
                .ok_or_else(|| Error::Reference(format!("pipe {id:?} references unknown node {b:?}")))?;
            if !(length > 0.0) || !length.is_finite() {
                return Err(Error::Value(format!("pipe {id:?} has non-positive length {length}")));
            }
            resolved.push(PipeEdge {
                id,
                a: ai,
                b: bi,
                length,
            });
        }
        let mut adjacency = vec![Vec::new(); node_ids.len()];
        for e in &resolved {
            adjacency[e.a].push((e.b, e.length));
            adjacency[e.b].push((e.a, e.length));
        }
        let graph = Self {
            node_ids,
            node_index,
            edges: resolved,
            adjacency,
            sensors: Vec::new(),
        };
        graph.check_connected()?;
        Ok(graph)
    }

    fn check_connected(&self) -> Result<()> {
        if self.node_ids.is_empty() {
            return Err(Error::Size("graph has no nodes".into()));
        }
        let mut seen = vec![false; self.node_ids.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        if count != self.node_ids.len() {
            return Err(Error::Connectivity(format!(
                "graph is not connected: reached {count} of {} nodes",
                self.node_ids.len()
            )));
        }
        Ok(())
    }

    /// Return a copy with the given sensor nodes. The set must be nonempty,
    /// duplicate-free and a subset of the nodes.
    pub fn with_sensors(&self, sensor_ids: &[String]) -> Result<Self> {
        if sensor_ids.is_empty() {
            return Err(Error::Size("sensor set must be nonempty".into()));
        }
        let mut sensors = Vec::with_capacity(sensor_ids.len());
        for id in sensor_ids {
            let idx = self
                .node_index
                .get(id)
                .ok_or_else(|| Error::Reference(format!("sensor node {id:?} not in graph")))?;
            if sensors.contains(idx) {
                return Err(Error::Value(format!("duplicate sensor node {id:?}")));
            }
            sensors.push(*idx);
        }
        let mut graph = self.clone();
        graph.sensors = sensors;
        Ok(graph)
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_id(&self, index: usize) -> &str {
        &self.node_ids[index]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn edges(&self) -> &[PipeEdge] {
        &self.edges
    }

    pub fn edge_by_id(&self, id: &str) -> Option<&PipeEdge> {
        self.edges.iter().find(|e| e.id == id)
    }

    /// Sensor node indices, in assignment order.
    pub fn sensors(&self) -> &[usize] {
        &self.sensors
    }

    pub fn sensor_ids(&self) -> Vec<String> {
        self.sensors.iter().map(|&i| self.node_ids[i].clone()).collect()
    }

    /// Sum of all pipe lengths in meters.
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Exact shortest-path distances from `source` to every node (Dijkstra).
    /// Parallel edges contribute their shorter length automatically.
    pub fn shortest_paths(&self, source: &str) -> Result<DistanceTable> {
        let src = self
            .node_index(source)
            .ok_or_else(|| Error::Reference(format!("unknown source node {source:?}")))?;
        let mut dist = vec![f64::INFINITY; self.node_ids.len()];
        dist[src] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapEntry { cost: 0.0, node: src });
        while let Some(HeapEntry { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for &(next, w) in &self.adjacency[node] {
                let c = cost + w;
                if c < dist[next] {
                    dist[next] = c;
                    heap.push(HeapEntry { cost: c, node: next });
                }
            }
        }
        if dist.iter().any(|d| !d.is_finite()) {
            return Err(Error::Connectivity("graph is not connected".into()));
        }
        Ok(DistanceTable { source: src, dist })
    }

    /// Replace the pipe `edge_id` by two pipes of half length joined at a
    /// fresh virtual node; returns the new graph and the virtual node's id.
    pub fn split_pipe(&self, edge_id: &str) -> Result<(WdnGraph, String)> {
        let pos = self
            .edges
            .iter()
            .position(|e| e.id == edge_id)
            .ok_or_else(|| Error::Reference(format!("unknown pipe {edge_id:?}")))?;
        let edge = self.edges[pos].clone();
        let mid_id = format!("{edge_id}::mid");
        if self.node_index.contains_key(&mid_id) {
            return Err(Error::Value(format!("virtual node {mid_id:?} already exists")));
        }
        let mut node_ids = self.node_ids.clone();
        node_ids.push(mid_id.clone());
        let mut edges: Vec<(String, String, String, f64)> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, e)| {
                (
                    e.id.clone(),
                    self.node_ids[e.a].clone(),
                    self.node_ids[e.b].clone(),
                    e.length,
                )
            })
            .collect();
        let half = edge.length / 2.0;
        edges.push((
            format!("{edge_id}::a"),
            self.node_ids[edge.a].clone(),
            mid_id.clone(),
            half,
        ));
        edges.push((
            format!("{edge_id}::b"),
            mid_id.clone(),
            self.node_ids[edge.b].clone(),
            half,
        ));
        let mut graph = WdnGraph::new(node_ids, edges)?;
        graph.sensors = self.sensors.clone();
        Ok((graph, mid_id))
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap; costs are finite by construction
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path distances from one source node to every node, in meters.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    source: usize,
    dist: Vec<f64>,
}

impl DistanceTable {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn distance(&self, node: usize) -> f64 {
        self.dist[node]
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> WdnGraph {
        WdnGraph::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![
                ("P1".into(), "A".into(), "B".into(), 1.0),
                ("P2".into(), "B".into(), "C".into(), 2.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn dijkstra_path_graph() {
        let g = path_graph();
        let d = g.shortest_paths("A").unwrap();
        assert_eq!(d.distance(g.node_index("C").unwrap()), 3.0);
        assert_eq!(d.distance(g.node_index("A").unwrap()), 0.0);
    }

    #[test]
    fn parallel_edges_use_shorter() {
        let g = WdnGraph::new(
            vec!["A".into(), "B".into()],
            vec![
                ("P1".into(), "A".into(), "B".into(), 5.0),
                ("P2".into(), "A".into(), "B".into(), 2.0),
            ],
        )
        .unwrap();
        let d = g.shortest_paths("A").unwrap();
        assert_eq!(d.distance(1), 2.0);
    }

    #[test]
    fn disconnected_graph_rejected() {
        let err = WdnGraph::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![("P1".into(), "A".into(), "B".into(), 1.0)],
        );
        assert!(matches!(err, Err(Error::Connectivity(_))));
    }

    #[test]
    fn non_positive_length_rejected() {
        let err = WdnGraph::new(
            vec!["A".into(), "B".into()],
            vec![("P1".into(), "A".into(), "B".into(), 0.0)],
        );
        assert!(matches!(err, Err(Error::Value(_))));
    }

    #[test]
    fn split_pipe_halves_and_conserves_length() {
        let g = path_graph();
        let before = g.total_length();
        let (split, mid) = g.split_pipe("P1").unwrap();
        assert_eq!(split.total_length(), before);
        let mid_idx = split.node_index(&mid).unwrap();
        assert_eq!(split.adjacency[mid_idx].len(), 2);
        for &(_, w) in &split.adjacency[mid_idx] {
            assert_eq!(w, 0.5);
        }
    }

    #[test]
    fn split_pipe_preserves_shortest_paths() {
        // 5-node graph with a cycle; endpoint distances must be unchanged.
        let g = WdnGraph::new(
            vec!["A".into(), "B".into(), "C".into(), "D".into(), "E".into()],
            vec![
                ("P1".into(), "A".into(), "B".into(), 4.0),
                ("P2".into(), "B".into(), "C".into(), 3.0),
                ("P3".into(), "C".into(), "D".into(), 2.0),
                ("P4".into(), "D".into(), "E".into(), 1.0),
                ("P5".into(), "E".into(), "A".into(), 2.5),
                ("P6".into(), "B".into(), "D".into(), 6.0),
            ],
        )
        .unwrap();
        let (split, _) = g.split_pipe("P2").unwrap();
        for src in ["A", "B", "C", "D", "E"] {
            let before = g.shortest_paths(src).unwrap();
            let after = split.shortest_paths(src).unwrap();
            for id in ["A", "B", "C", "D", "E"] {
                let i = g.node_index(id).unwrap();
                let j = split.node_index(id).unwrap();
                assert!((before.distance(i) - after.distance(j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn split_unknown_pipe_is_reference_error() {
        let g = path_graph();
        assert!(matches!(g.split_pipe("NOPE"), Err(Error::Reference(_))));
    }

    #[test]
    fn sensors_must_exist() {
        let g = path_graph();
        assert!(g.with_sensors(&["A".into(), "Z".into()]).is_err());
        let s = g.with_sensors(&["A".into(), "C".into()]).unwrap();
        assert_eq!(s.sensor_ids(), vec!["A".to_string(), "C".to_string()]);
    }
}
