//! Square-lattice two-complexes and the site registry.
//!
//! Vertices are `v[i,j]` with `i` the row (increasing downward) and `j` the
//! column. Horizontal edges point right, vertical edges point down. Face
//! `f[i,j]` has its base point at the top-left corner `v[i,j]` and its cycle
//! runs counterclockwise from there: down, right, up, left, giving the sign
//! pattern `(+1, +1, -1, -1)`.
//!
//! In rough-smooth mode the left and right boundaries are rough: every row
//! carries a dangling horizontal edge on both sides, ending on a terminal
//! vertex at column `-1` or `m`. Terminals carry no vertex operator, so the
//! faces touching them are 3-body, as are the vertices on the smooth top and
//! bottom rows.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;
pub type FaceId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Open,
    RoughSmooth,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "rough-smooth" => Ok(Boundary::RoughSmooth),
            _ => Err(Error::Validation(format!("unknown boundary {s:?}"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::RoughSmooth => "rough-smooth",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vertex {
    pub row: i32,
    pub col: i32,
    /// Rough-boundary endpoint of a dangling edge; has no vertex operator.
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub axis: Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub row: i32,
    pub col: i32,
    pub base: VertexId,
    /// Counterclockwise from the base point; `+1` when the edge points along
    /// the traversal. Faces on a rough boundary omit the missing edge.
    pub cycle: Vec<(EdgeId, i8)>,
}

#[derive(Debug, Clone)]
pub struct Lattice {
    n_rows: usize,
    n_cols: usize,
    boundary: Boundary,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    faces: Vec<Face>,
    stars: Vec<Vec<(EdgeId, Direction)>>,
    vertex_at: HashMap<(i32, i32), VertexId>,
    horizontal_at: HashMap<(i32, i32), EdgeId>,
    vertical_at: HashMap<(i32, i32), EdgeId>,
    face_at: HashMap<(i32, i32), FaceId>,
}

impl Lattice {
    /// `n` rows and `m` columns of (non-terminal) vertices.
    pub fn new(n: usize, m: usize, boundary: Boundary) -> Result<Self> {
        if n < 2 || m < 2 {
            return Err(Error::InvalidLattice(format!(
                "need at least 2x2 vertices, got {n}x{m}"
            )));
        }
        let (ni, mi) = (n as i32, m as i32);
        let mut lat = Lattice {
            n_rows: n,
            n_cols: m,
            boundary,
            vertices: Vec::new(),
            edges: Vec::new(),
            faces: Vec::new(),
            stars: Vec::new(),
            vertex_at: HashMap::new(),
            horizontal_at: HashMap::new(),
            vertical_at: HashMap::new(),
            face_at: HashMap::new(),
        };
        let (col_lo, col_hi) = match boundary {
            Boundary::Open => (0, mi - 1),
            Boundary::RoughSmooth => (-1, mi),
        };
        for i in 0..ni {
            for j in col_lo..=col_hi {
                let id = lat.vertices.len();
                lat.vertices.push(Vertex {
                    row: i,
                    col: j,
                    terminal: j < 0 || j >= mi,
                });
                lat.vertex_at.insert((i, j), id);
            }
        }
        for i in 0..ni {
            for j in col_lo..col_hi {
                let e = lat.push_edge((i, j), (i, j + 1), Axis::Horizontal);
                lat.horizontal_at.insert((i, j), e);
            }
        }
        for i in 0..ni - 1 {
            for j in 0..mi {
                let e = lat.push_edge((i, j), (i + 1, j), Axis::Vertical);
                lat.vertical_at.insert((i, j), e);
            }
        }
        for i in 0..ni - 1 {
            for j in col_lo..col_hi {
                let mut cycle = Vec::with_capacity(4);
                if let Some(&e) = lat.vertical_at.get(&(i, j)) {
                    cycle.push((e, 1));
                }
                cycle.push((lat.horizontal_at[&(i + 1, j)], 1));
                if let Some(&e) = lat.vertical_at.get(&(i, j + 1)) {
                    cycle.push((e, -1));
                }
                cycle.push((lat.horizontal_at[&(i, j)], -1));
                let id = lat.faces.len();
                lat.faces.push(Face {
                    row: i,
                    col: j,
                    base: lat.vertex_at[&(i, j)],
                    cycle,
                });
                lat.face_at.insert((i, j), id);
            }
        }
        lat.stars = vec![Vec::new(); lat.vertices.len()];
        for (id, e) in lat.edges.iter().enumerate() {
            lat.stars[e.src].push((id, Direction::Outgoing));
            lat.stars[e.dst].push((id, Direction::Incoming));
        }
        Ok(lat)
    }

    fn push_edge(&mut self, a: (i32, i32), b: (i32, i32), axis: Axis) -> EdgeId {
        let id = self.edges.len();
        self.edges.push(Edge {
            src: self.vertex_at[&a],
            dst: self.vertex_at[&b],
            axis,
        });
        id
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Vertices that carry a vertex operator, in row-major order.
    pub fn stabilizer_vertices(&self) -> Vec<VertexId> {
        (0..self.vertices.len())
            .filter(|&v| !self.vertices[v].terminal)
            .collect()
    }

    pub fn vertex(&self, row: i32, col: i32) -> Result<VertexId> {
        self.vertex_at
            .get(&(row, col))
            .copied()
            .ok_or_else(|| Error::Validation(format!("no vertex v[{row},{col}]")))
    }

    pub fn face(&self, row: i32, col: i32) -> Result<FaceId> {
        self.face_at
            .get(&(row, col))
            .copied()
            .ok_or_else(|| Error::Validation(format!("no face f[{row},{col}]")))
    }

    /// The edge `v[i,j] → v[i,j+1]`.
    pub fn horizontal(&self, row: i32, col: i32) -> Result<EdgeId> {
        self.horizontal_at
            .get(&(row, col))
            .copied()
            .ok_or_else(|| Error::Validation(format!("no edge h:{row}:{col}")))
    }

    /// The edge `v[i,j] → v[i+1,j]`.
    pub fn vertical(&self, row: i32, col: i32) -> Result<EdgeId> {
        self.vertical_at
            .get(&(row, col))
            .copied()
            .ok_or_else(|| Error::Validation(format!("no edge v:{row}:{col}")))
    }

    /// Parses `h:I:J` or `v:I:J`.
    pub fn edge_by_label(&self, label: &str) -> Result<EdgeId> {
        let parts: Vec<&str> = label.split(':').collect();
        let bad = || Error::Validation(format!("bad edge reference {label:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let i: i32 = parts[1].parse().map_err(|_| bad())?;
        let j: i32 = parts[2].parse().map_err(|_| bad())?;
        match parts[0] {
            "h" => self.horizontal(i, j),
            "v" => self.vertical(i, j),
            _ => Err(bad()),
        }
    }

    pub fn edge_label(&self, e: EdgeId) -> String {
        let edge = &self.edges[e];
        let v = &self.vertices[edge.src];
        match edge.axis {
            Axis::Horizontal => format!("h:{}:{}", v.row, v.col),
            Axis::Vertical => format!("v:{}:{}", v.row, v.col),
        }
    }

    pub fn vertex_label(&self, v: VertexId) -> String {
        let x = &self.vertices[v];
        format!("v[{},{}]", x.row, x.col)
    }

    pub fn face_label(&self, f: FaceId) -> String {
        let x = &self.faces[f];
        format!("f[{},{}]", x.row, x.col)
    }

    pub fn vertex_star(&self, v: VertexId) -> Result<&[(EdgeId, Direction)]> {
        check_index("vertex", v, self.vertices.len())?;
        Ok(&self.stars[v])
    }

    pub fn face_cycle(&self, f: FaceId) -> Result<&[(EdgeId, i8)]> {
        check_index("face", f, self.faces.len())?;
        Ok(&self.faces[f].cycle)
    }

    /// Vertex reached after walking edge `e` with sign `sign`.
    fn walk_end(&self, e: EdgeId, sign: i8) -> VertexId {
        if sign > 0 {
            self.edges[e].dst
        } else {
            self.edges[e].src
        }
    }

    fn walk_start(&self, e: EdgeId, sign: i8) -> VertexId {
        if sign > 0 {
            self.edges[e].src
        } else {
            self.edges[e].dst
        }
    }

    /// Full face cycle re-based at `start`, which must be a corner of `f`.
    /// Only complete 4-cycles can be re-based.
    pub fn cycle_from(&self, f: FaceId, start: VertexId) -> Result<Vec<(EdgeId, i8)>> {
        let cycle = self.face_cycle(f)?;
        if cycle.len() != 4 {
            return Err(Error::Protocol(format!(
                "{} is a boundary face and cannot be re-based",
                self.face_label(f)
            )));
        }
        let pos = cycle
            .iter()
            .position(|&(e, s)| self.walk_start(e, s) == start)
            .ok_or_else(|| {
                Error::Protocol(format!(
                    "{} is not a corner of {}",
                    self.vertex_label(start),
                    self.face_label(f)
                ))
            })?;
        Ok(cycle[pos..].iter().chain(&cycle[..pos]).copied().collect())
    }

    pub fn shared_edge(&self, f: FaceId, g: FaceId) -> Result<EdgeId> {
        let a = self.face_cycle(f)?;
        let b = self.face_cycle(g)?;
        a.iter()
            .map(|&(e, _)| e)
            .find(|e| b.iter().any(|&(x, _)| x == *e) && f != g)
            .ok_or_else(|| Error::NotAdjacent(self.face_label(f), self.face_label(g)))
    }

    /// The edge joining two vertices, if any.
    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.stars.get(a)?.iter().map(|&(e, _)| e).find(|&e| {
            let x = &self.edges[e];
            (x.src == a && x.dst == b) || (x.src == b && x.dst == a)
        })
    }

    /// Edges between consecutive vertices of a vertex path.
    pub fn path_edges(&self, path: &[VertexId]) -> Result<Vec<EdgeId>> {
        path.windows(2)
            .map(|w| {
                self.edge_between(w[0], w[1]).ok_or_else(|| {
                    Error::Validation(format!(
                        "{} and {} are not adjacent",
                        self.vertex_label(w[0]),
                        self.vertex_label(w[1])
                    ))
                })
            })
            .collect()
    }

    /// Logical string supports in rough-smooth mode: the Z path runs along
    /// row 0 from rough boundary to rough boundary, the X path crosses every
    /// row through the middle column gap.
    pub fn logical_paths(&self) -> Result<(Vec<EdgeId>, Vec<EdgeId>)> {
        if self.boundary != Boundary::RoughSmooth {
            return Err(Error::WrongBoundary {
                expected: "rough-smooth",
            });
        }
        let m = self.n_cols as i32;
        let z_path = (-1..m).map(|j| self.horizontal_at[&(0, j)]).collect();
        let mid = (m - 1) / 2;
        let x_path = (0..self.n_rows as i32).map(|i| self.horizontal_at[&(i, mid)]).collect();
        Ok((z_path, x_path))
    }

    /// Structural checks on the complex; returns a list of violations.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            let expected = 4;
            let full = face.cycle.len() == expected;
            if !full && face.cycle.len() != 3 {
                out.push(format!("{} has {} edges", self.face_label(f), face.cycle.len()));
            }
            if full {
                if self.walk_start(face.cycle[0].0, face.cycle[0].1) != face.base {
                    out.push(format!("{} does not start at its base", self.face_label(f)));
                }
                for k in 0..4 {
                    let (e, s) = face.cycle[k];
                    let (e2, s2) = face.cycle[(k + 1) % 4];
                    if self.walk_end(e, s) != self.walk_start(e2, s2) {
                        out.push(format!("{} is not a closed walk", self.face_label(f)));
                    }
                }
            }
            let signs: Vec<i8> = face.cycle.iter().map(|&(_, s)| s).collect();
            if full && signs != [1, 1, -1, -1] {
                out.push(format!("{} has sign pattern {signs:?}", self.face_label(f)));
            }
        }
        out
    }
}

/// Flat site indices for code qudits (one per edge), vertex ancillas (one per
/// stabilizer vertex), face ancillas (one per face) and named extra ancillas.
#[derive(Debug, Clone)]
pub struct SiteRegistry {
    num_edges: usize,
    vertex_ancilla: Vec<Option<usize>>,
    face_base: usize,
    num_faces: usize,
    extra: Vec<String>,
    extra_base: usize,
}

impl SiteRegistry {
    pub fn new(lattice: &Lattice, extra: &[&str]) -> Self {
        let num_edges = lattice.num_edges();
        let mut next = num_edges;
        let vertex_ancilla = lattice
            .vertices()
            .iter()
            .map(|v| {
                if v.terminal {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect();
        let face_base = next;
        let num_faces = lattice.num_faces();
        let extra_base = face_base + num_faces;
        Self {
            num_edges,
            vertex_ancilla,
            face_base,
            num_faces,
            extra: extra.iter().map(|s| s.to_string()).collect(),
            extra_base,
        }
    }

    pub fn total_sites(&self) -> usize {
        self.extra_base + self.extra.len()
    }

    pub fn code_sites(&self) -> std::ops::Range<usize> {
        0..self.num_edges
    }

    pub fn edge_site(&self, e: EdgeId) -> Result<usize> {
        check_index("edge", e, self.num_edges)?;
        Ok(e)
    }

    pub fn vertex_ancilla(&self, v: VertexId) -> Result<usize> {
        check_index("vertex", v, self.vertex_ancilla.len())?;
        self.vertex_ancilla[v].ok_or_else(|| Error::Validation(format!("terminal vertex {v} has no ancilla")))
    }

    pub fn face_ancilla(&self, f: FaceId) -> Result<usize> {
        check_index("face", f, self.num_faces)?;
        Ok(self.face_base + f)
    }

    pub fn extra_ancilla(&self, name: &str) -> Result<usize> {
        self.extra
            .iter()
            .position(|n| n == name)
            .map(|k| self.extra_base + k)
            .ok_or_else(|| Error::Validation(format!("no ancilla named {name:?}")))
    }

    pub fn extra_names(&self) -> &[String] {
        &self.extra
    }

    /// All ancilla sites (vertex, face and extra).
    pub fn ancilla_sites(&self) -> std::ops::Range<usize> {
        self.num_edges..self.total_sites()
    }
}
