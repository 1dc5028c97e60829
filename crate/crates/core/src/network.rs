//! Zonal transmission network: zones, undirected links and the graph
//! queries used to assemble transit constraints and find macrozones.

use std::fmt;
use std::io::BufRead;

use thiserror::Error;

/// Position of a zone inside its topology (0-based, contiguous).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZoneId(pub usize);

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Zone {
    pub id: ZoneId,
    pub code: String,
}

/// Undirected link, always stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub a: ZoneId,
    pub b: ZoneId,
}

impl Edge {
    pub fn new(x: ZoneId, y: ZoneId) -> Self {
        if x <= y {
            Edge { a: x, b: y }
        } else {
            Edge { a: y, b: x }
        }
    }

    pub fn forward(self) -> DirectedEdge {
        DirectedEdge {
            from: self.a,
            to: self.b,
        }
    }

    pub fn backward(self) -> DirectedEdge {
        DirectedEdge {
            from: self.b,
            to: self.a,
        }
    }
}

/// Oriented link `from -> to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectedEdge {
    pub from: ZoneId,
    pub to: ZoneId,
}

impl DirectedEdge {
    pub fn new(from: ZoneId, to: ZoneId) -> Self {
        DirectedEdge { from, to }
    }

    pub fn undirected(self) -> Edge {
        Edge::new(self.from, self.to)
    }

    pub fn reversed(self) -> DirectedEdge {
        DirectedEdge {
            from: self.to,
            to: self.from,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("zone index {0} out of range (topology has {1} zones)")]
    InvalidZone(usize, usize),
    #[error("invalid zone code {0:?}: codes must be non-empty, uppercase and without whitespace")]
    InvalidCode(String),
    #[error("duplicate zone code {0}")]
    DuplicateZone(String),
    #[error("unknown zone code {0}")]
    UnknownZone(String),
    #[error("self-loop on zone {0}")]
    SelfLoop(String),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(String, String),
    #[error("no edge between {0} and {1}")]
    NotAnEdge(String, String),
    #[error("topology contains an unsupported cycle through {0}-{1}")]
    UnsupportedCycle(String, String),
    #[error("topology line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Zones plus a symmetric 0/1 adjacency matrix. The edge list is the
/// upper triangle of the matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    zones: Vec<Zone>,
    adjacency: Vec<bool>,
    edges: Vec<Edge>,
}

fn valid_code(code: &str) -> bool {
    !code.is_empty()
        && !code.chars().any(char::is_whitespace)
        && code.chars().all(|c| !c.is_lowercase())
}

impl NetworkTopology {
    /// Builds a topology from zone codes and links given by code.
    pub fn new<S: AsRef<str>>(codes: &[S], links: &[(S, S)]) -> Result<Self, NetworkError> {
        let mut zones = Vec::with_capacity(codes.len());
        for (i, code) in codes.iter().enumerate() {
            let code = code.as_ref();
            if !valid_code(code) {
                return Err(NetworkError::InvalidCode(code.to_string()));
            }
            if zones.iter().any(|z: &Zone| z.code == code) {
                return Err(NetworkError::DuplicateZone(code.to_string()));
            }
            zones.push(Zone {
                id: ZoneId(i),
                code: code.to_string(),
            });
        }
        let mut topo = NetworkTopology {
            adjacency: vec![false; zones.len() * zones.len()],
            zones,
            edges: Vec::new(),
        };
        for (x, y) in links {
            let (x, y) = (x.as_ref(), y.as_ref());
            let i = topo.zone_id(x)?;
            let j = topo.zone_id(y)?;
            if i == j {
                return Err(NetworkError::SelfLoop(x.to_string()));
            }
            if topo.connected(i, j) {
                return Err(NetworkError::DuplicateEdge(x.to_string(), y.to_string()));
            }
            topo.set(i, j, true);
        }
        topo.rebuild_edges();
        Ok(topo)
    }

    /// Parses the line-oriented topology format: a `zones:` section with one
    /// code per line, then an `edges:` section with `CODE_A CODE_B` pairs.
    /// `#` starts a comment.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, NetworkError> {
        enum Section {
            None,
            Zones,
            Edges,
        }
        let mut section = Section::None;
        let mut codes: Vec<String> = Vec::new();
        let mut links: Vec<(String, String)> = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| NetworkError::Syntax {
                line: line_no,
                message: e.to_string(),
            })?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            match content {
                "zones:" => {
                    section = Section::Zones;
                    continue;
                }
                "edges:" => {
                    section = Section::Edges;
                    continue;
                }
                _ => {}
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            match section {
                Section::None => {
                    return Err(NetworkError::Syntax {
                        line: line_no,
                        message: "expected `zones:` header".into(),
                    })
                }
                Section::Zones => {
                    if fields.len() != 1 {
                        return Err(NetworkError::Syntax {
                            line: line_no,
                            message: format!("expected one zone code, found {:?}", content),
                        });
                    }
                    codes.push(fields[0].to_string());
                }
                Section::Edges => {
                    if fields.len() != 2 {
                        return Err(NetworkError::Syntax {
                            line: line_no,
                            message: format!("expected `CODE_A CODE_B`, found {:?}", content),
                        });
                    }
                    links.push((fields[0].to_string(), fields[1].to_string()));
                }
            }
        }
        NetworkTopology::new(&codes, &links)
    }

    pub fn zone_count(&self) -> usize {
        self.zones.len()
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn code(&self, zone: ZoneId) -> &str {
        &self.zones[zone.0].code
    }

    pub fn zone_id(&self, code: &str) -> Result<ZoneId, NetworkError> {
        self.find(code)
            .ok_or_else(|| NetworkError::UnknownZone(code.to_string()))
    }

    pub fn find(&self, code: &str) -> Option<ZoneId> {
        self.zones.iter().find(|z| z.code == code).map(|z| z.id)
    }

    pub fn check_zone(&self, zone: ZoneId) -> Result<(), NetworkError> {
        if zone.0 < self.zones.len() {
            Ok(())
        } else {
            Err(NetworkError::InvalidZone(zone.0, self.zones.len()))
        }
    }

    /// Entry `G[i][j]` of the adjacency matrix.
    pub fn connected(&self, i: ZoneId, j: ZoneId) -> bool {
        self.adjacency[i.0 * self.zones.len() + j.0]
    }

    pub fn has_edge(&self, edge: Edge) -> bool {
        edge.b.0 < self.zones.len() && self.connected(edge.a, edge.b)
    }

    /// Adjacency matrix as rows of 0/1.
    pub fn adjacency_matrix(&self) -> Vec<Vec<u8>> {
        let n = self.zones.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.adjacency[i * n + j] as u8).collect())
            .collect()
    }

    /// Copy of this topology with one link removed.
    pub fn without_edge(&self, edge: Edge) -> Result<Self, NetworkError> {
        if !self.has_edge(edge) {
            return Err(self.not_an_edge(edge));
        }
        let mut topo = self.clone();
        topo.set(edge.a, edge.b, false);
        topo.rebuild_edges();
        Ok(topo)
    }

    pub fn edge_label(&self, edge: Edge) -> String {
        format!("{}-{}", self.code(edge.a), self.code(edge.b))
    }

    pub fn directed_label(&self, edge: DirectedEdge) -> String {
        format!("{}->{}", self.code(edge.from), self.code(edge.to))
    }

    pub(crate) fn not_an_edge(&self, edge: Edge) -> NetworkError {
        let name = |z: ZoneId| {
            self.zones
                .get(z.0)
                .map(|z| z.code.clone())
                .unwrap_or_else(|| z.to_string())
        };
        NetworkError::NotAnEdge(name(edge.a), name(edge.b))
    }

    fn set(&mut self, i: ZoneId, j: ZoneId, value: bool) {
        let n = self.zones.len();
        self.adjacency[i.0 * n + j.0] = value;
        self.adjacency[j.0 * n + i.0] = value;
    }

    fn rebuild_edges(&mut self) {
        let n = self.zones.len();
        self.edges.clear();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacency[i * n + j] {
                    self.edges.push(Edge::new(ZoneId(i), ZoneId(j)));
                }
            }
        }
    }
}

/// Zones on the `from` side of a directed link once the link is opened.
///
/// On a tree these are exactly the zones whose net injection flows through
/// the link in the `from -> to` direction.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCut {
    pub edge: DirectedEdge,
    pub side_membership: Vec<bool>,
}

impl EdgeCut {
    pub fn contains(&self, zone: ZoneId) -> bool {
        self.side_membership[zone.0]
    }
}

/// Depth-first visit from `start` with `removed` links opened.
///
/// Uses an explicit stack and marks nodes when they are pushed, so every
/// zone is expanded at most once and `start` is always part of the result.
pub fn reachable_zones(
    topology: &NetworkTopology,
    start: ZoneId,
    removed: &[Edge],
) -> Result<Vec<bool>, NetworkError> {
    topology.check_zone(start)?;
    for e in removed {
        topology.check_zone(e.a)?;
        topology.check_zone(e.b)?;
    }
    Ok(visit(topology, start, removed))
}

fn visit(topology: &NetworkTopology, start: ZoneId, removed: &[Edge]) -> Vec<bool> {
    let n = topology.zone_count();
    let mut visited = vec![false; n];
    let mut stack = vec![start];
    visited[start.0] = true;
    while let Some(node) = stack.pop() {
        for k in 0..n {
            let next = ZoneId(k);
            if visited[k] || !topology.connected(node, next) {
                continue;
            }
            if removed.contains(&Edge::new(node, next)) {
                continue;
            }
            visited[k] = true;
            stack.push(next);
        }
    }
    visited
}

/// Maximal connected components after opening `removed`, ordered by their
/// smallest zone index; each component lists its zones in ascending order.
pub fn connected_components(topology: &NetworkTopology, removed: &[Edge]) -> Vec<Vec<ZoneId>> {
    let n = topology.zone_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let reached = visit(topology, ZoneId(start), removed);
        let members: Vec<ZoneId> = reached
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| ZoneId(i))
            .collect();
        for z in &members {
            seen[z.0] = true;
        }
        components.push(members);
    }
    components
}

/// Cut of a directed link on an acyclic topology.
pub fn edge_cut(topology: &NetworkTopology, edge: DirectedEdge) -> Result<EdgeCut, NetworkError> {
    topology.check_zone(edge.from)?;
    topology.check_zone(edge.to)?;
    let undirected = edge.undirected();
    if !topology.has_edge(undirected) {
        return Err(topology.not_an_edge(undirected));
    }
    if let Some(e) = detect_cycles(topology).first() {
        return Err(NetworkError::UnsupportedCycle(
            topology.code(e.a).to_string(),
            topology.code(e.b).to_string(),
        ));
    }
    Ok(EdgeCut {
        edge,
        side_membership: visit(topology, edge.from, &[undirected]),
    })
}

/// Links that close a cycle, found by scanning the edge list with a
/// union-find. Empty iff the topology is a forest. Each returned link lies
/// on a cycle, and removing all of them leaves a spanning forest.
pub fn detect_cycles(topology: &NetworkTopology) -> Vec<Edge> {
    let mut parent: Vec<usize> = (0..topology.zone_count()).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut closing = Vec::new();
    for &e in topology.edges() {
        let ra = root(&mut parent, e.a.0);
        let rb = root(&mut parent, e.b.0);
        if ra == rb {
            closing.push(e);
        } else {
            parent[ra] = rb;
        }
    }
    closing
}

/// Removes `ring_edge` when it is the only thing keeping the topology from
/// being a forest. Returns the forest and the link that was opened, if any.
pub fn open_ring(
    topology: &NetworkTopology,
    ring_edge: Option<Edge>,
) -> Result<(NetworkTopology, Option<Edge>), NetworkError> {
    let cycles = detect_cycles(topology);
    let Some(&first) = cycles.first() else {
        return Ok((topology.clone(), None));
    };
    let unsupported = || {
        NetworkError::UnsupportedCycle(
            topology.code(first.a).to_string(),
            topology.code(first.b).to_string(),
        )
    };
    match ring_edge {
        Some(edge) if topology.has_edge(edge) => {
            let opened = topology.without_edge(edge)?;
            if detect_cycles(&opened).is_empty() {
                Ok((opened, Some(edge)))
            } else {
                Err(unsupported())
            }
        }
        _ => Err(unsupported()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> NetworkTopology {
        NetworkTopology::new(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap()
    }

    const A: ZoneId = ZoneId(0);
    const B: ZoneId = ZoneId(1);
    const C: ZoneId = ZoneId(2);
    const D: ZoneId = ZoneId(3);

    #[test]
    fn reachable_on_path() {
        let t = path();
        assert_eq!(reachable_zones(&t, A, &[]).unwrap(), vec![true, true, true]);
        let cut = [Edge::new(A, B)];
        assert_eq!(reachable_zones(&t, A, &cut).unwrap(), vec![true, false, false]);
        assert_eq!(reachable_zones(&t, C, &cut).unwrap(), vec![false, true, true]);
    }

    #[test]
    fn reachable_rejects_bad_index() {
        let t = path();
        assert_eq!(
            reachable_zones(&t, ZoneId(7), &[]),
            Err(NetworkError::InvalidZone(7, 3))
        );
    }

    #[test]
    fn isolated_start_is_visited() {
        let t = NetworkTopology::new::<&str>(&["A", "B"], &[]).unwrap();
        assert_eq!(reachable_zones(&t, B, &[]).unwrap(), vec![false, true]);
    }

    #[test]
    fn components_examples() {
        let t = path();
        assert_eq!(connected_components(&t, &[]), vec![vec![A, B, C]]);
        assert_eq!(
            connected_components(&t, &[Edge::new(B, C)]),
            vec![vec![A, B], vec![C]]
        );
        let star = NetworkTopology::new(
            &["A", "B", "C", "D"],
            &[("D", "A"), ("D", "B"), ("D", "C")],
        )
        .unwrap();
        assert_eq!(
            connected_components(&star, &[Edge::new(D, A), Edge::new(D, B)]),
            vec![vec![A], vec![B], vec![C, D]]
        );
    }

    #[test]
    fn cuts_on_path() {
        let t = path();
        let bc = edge_cut(&t, DirectedEdge::new(B, C)).unwrap();
        assert_eq!(bc.side_membership, vec![true, true, false]);
        let cb = edge_cut(&t, DirectedEdge::new(C, B)).unwrap();
        assert_eq!(cb.side_membership, vec![false, false, true]);
        assert!(matches!(
            edge_cut(&t, DirectedEdge::new(A, C)),
            Err(NetworkError::NotAnEdge(..))
        ));
    }

    #[test]
    fn cut_refuses_cycles() {
        let tri =
            NetworkTopology::new(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]).unwrap();
        assert!(matches!(
            edge_cut(&tri, DirectedEdge::new(A, B)),
            Err(NetworkError::UnsupportedCycle(..))
        ));
    }

    #[test]
    fn cycle_detection() {
        assert!(detect_cycles(&path()).is_empty());
        let tri =
            NetworkTopology::new(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]).unwrap();
        let found = detect_cycles(&tri);
        assert_eq!(found.len(), 1);
        assert!(tri.has_edge(found[0]));
        assert!(detect_cycles(&tri.without_edge(found[0]).unwrap()).is_empty());
    }

    #[test]
    fn ring_opening() {
        let tri =
            NetworkTopology::new(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]).unwrap();
        let (forest, opened) = open_ring(&tri, Some(Edge::new(C, A))).unwrap();
        assert_eq!(opened, Some(Edge::new(A, C)));
        assert_eq!(forest.edges().len(), 2);
        assert!(open_ring(&tri, None).is_err());
        let (same, none) = open_ring(&path(), Some(Edge::new(A, B))).unwrap();
        assert_eq!(none, None);
        assert_eq!(same, path());
    }

    #[test]
    fn adjacency_is_symmetric() {
        let t = path();
        let g = t.adjacency_matrix();
        assert_eq!(g, vec![vec![0, 1, 0], vec![1, 0, 1], vec![0, 1, 0]]);
    }

    #[test]
    fn parse_format() {
        let text = "# two zones\nzones:\nNORD\nSUD # south\n\nedges:\nNORD SUD\n";
        let t = NetworkTopology::parse(text.as_bytes()).unwrap();
        assert_eq!(t.zone_count(), 2);
        assert_eq!(t.edges(), &[Edge::new(ZoneId(0), ZoneId(1))]);
        assert!(matches!(
            NetworkTopology::parse("zones:\nnord\n".as_bytes()),
            Err(NetworkError::InvalidCode(_))
        ));
        assert!(matches!(
            NetworkTopology::parse("zones:\nA\nedges:\nA B\n".as_bytes()),
            Err(NetworkError::UnknownZone(_))
        ));
        assert!(matches!(
            NetworkTopology::parse("NORD\n".as_bytes()),
            Err(NetworkError::Syntax { line: 1, .. })
        ));
    }
}
