//! Mesh representation, structured grid generation, text-format parsing
//! and boundary-set tagging.
//!
//! Meshes are 2D with a single element kind per mesh (3-node triangles or
//! 4-node quadrilaterals), counter-clockwise connectivity, and named node
//! and edge sets for boundary conditions. A mesh is immutable once handed
//! to the assembly routines; the `add_*_set` methods exist for tagging
//! extra sets (e.g. support corners) right after construction.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    Tri3,
    Quad4,
}

impl ElementKind {
    pub const fn nodes_per_element(self) -> usize {
        match self {
            Self::Tri3 => 3,
            Self::Quad4 => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeshError {
    Parameter(String),
    /// Connectivity references a node outside `0..num_nodes`.
    NodeIndexOutOfRange {
        element: usize,
        index: usize,
        num_nodes: usize,
    },
    /// Non-positive area (triangle) or corner Jacobian (quad); also flags
    /// clockwise ordering.
    DegenerateElement {
        element: usize,
        detail: String,
    },
    UnknownSet(String),
    /// An edge-set entry is not an exterior edge of exactly one element.
    EdgeNotOnBoundary {
        set: String,
        edge: [usize; 2],
    },
    Parse {
        line: usize,
        detail: String,
    },
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parameter(s) => write!(f, "invalid parameter: {s}"),
            Self::NodeIndexOutOfRange {
                element,
                index,
                num_nodes,
            } => write!(
                f,
                "element {element} references node {index} but mesh has {num_nodes} nodes"
            ),
            Self::DegenerateElement { element, detail } => {
                write!(f, "degenerate element {element}: {detail}")
            }
            Self::UnknownSet(name) => write!(f, "unknown boundary set '{name}'"),
            Self::EdgeNotOnBoundary { set, edge } => write!(
                f,
                "edge set '{set}' contains edge ({}, {}) that is not a boundary edge",
                edge[0], edge[1]
            ),
            Self::Parse { line, detail } => write!(f, "parse error at line {line}: {detail}"),
        }
    }
}

/// 2D finite element mesh with named boundary sets.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    kind: ElementKind,
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 4]>,
    node_sets: BTreeMap<String, Vec<usize>>,
    edge_sets: BTreeMap<String, Vec<[usize; 2]>>,
}

impl Mesh {
    /// Build and validate a mesh from raw connectivity. Triangles pass
    /// `[a, b, c, anything]` rows; only the first 3 indices are used.
    pub fn new(
        kind: ElementKind,
        nodes: Vec<[f64; 2]>,
        elements: Vec<[usize; 4]>,
    ) -> Result<Self, MeshError> {
        let mesh = Self {
            kind,
            nodes,
            elements,
            node_sets: BTreeMap::new(),
            edge_sets: BTreeMap::new(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.kind.nodes_per_element()]
    }

    pub fn node_sets(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.node_sets
    }

    pub fn edge_sets(&self) -> &BTreeMap<String, Vec<[usize; 2]>> {
        &self.edge_sets
    }

    /// Sorted unique node indices of a named set.
    pub fn boundary_nodes(&self, set_name: &str) -> Result<&[usize], MeshError> {
        self.node_sets
            .get(set_name)
            .map(Vec::as_slice)
            .ok_or_else(|| MeshError::UnknownSet(set_name.to_string()))
    }

    pub fn edge_set(&self, set_name: &str) -> Result<&[[usize; 2]], MeshError> {
        self.edge_sets
            .get(set_name)
            .map(Vec::as_slice)
            .ok_or_else(|| MeshError::UnknownSet(set_name.to_string()))
    }

    pub fn add_node_set(
        &mut self,
        name: &str,
        mut indices: Vec<usize>,
    ) -> Result<(), MeshError> {
        for &i in &indices {
            if i >= self.nodes.len() {
                return Err(MeshError::Parameter(format!(
                    "node set '{name}' index {i} out of range"
                )));
            }
        }
        indices.sort_unstable();
        indices.dedup();
        self.node_sets.insert(name.to_string(), indices);
        Ok(())
    }

    pub fn add_edge_set(&mut self, name: &str, edges: Vec<[usize; 2]>) -> Result<(), MeshError> {
        let boundary = self.boundary_edges();
        for &e in &edges {
            let key = if e[0] <= e[1] { e } else { [e[1], e[0]] };
            if !boundary.contains_key(&key) {
                return Err(MeshError::EdgeNotOnBoundary {
                    set: name.to_string(),
                    edge: e,
                });
            }
        }
        self.edge_sets.insert(name.to_string(), edges);
        Ok(())
    }

    /// Undirected exterior edges (those used by exactly one element),
    /// keyed by sorted node pair.
    pub fn boundary_edges(&self) -> BTreeMap<[usize; 2], usize> {
        let mut count: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let nper = self.kind.nodes_per_element();
        for elem in &self.elements {
            for k in 0..nper {
                let a = elem[k];
                let b = elem[(k + 1) % nper];
                let key = if a <= b { [a, b] } else { [b, a] };
                *count.entry(key).or_insert(0) += 1;
            }
        }
        count.retain(|_, c| *c == 1);
        count
    }

    pub fn total_area(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element_area(e)).sum()
    }

    pub fn element_area(&self, e: usize) -> f64 {
        let conn = self.element(e);
        match self.kind {
            ElementKind::Tri3 => {
                let [a, b, c] = [self.nodes[conn[0]], self.nodes[conn[1]], self.nodes[conn[2]]];
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
            }
            ElementKind::Quad4 => {
                // Shoelace formula; exact for bilinear quads.
                let mut area = 0.0;
                for k in 0..4 {
                    let p = self.nodes[conn[k]];
                    let q = self.nodes[conn[(k + 1) % 4]];
                    area += p[0] * q[1] - q[0] * p[1];
                }
                0.5 * area
            }
        }
    }

    fn validate(&self) -> Result<(), MeshError> {
        let nper = self.kind.nodes_per_element();
        for (e, elem) in self.elements.iter().enumerate() {
            for &i in &elem[..nper] {
                if i >= self.nodes.len() {
                    return Err(MeshError::NodeIndexOutOfRange {
                        element: e,
                        index: i,
                        num_nodes: self.nodes.len(),
                    });
                }
            }
            match self.kind {
                ElementKind::Tri3 => {
                    let area = self.element_area(e);
                    if !(area > 0.0) {
                        return Err(MeshError::DegenerateElement {
                            element: e,
                            detail: format!("signed area {area} (nodes must be CCW)"),
                        });
                    }
                }
                ElementKind::Quad4 => {
                    // Bilinear Jacobian determinant at the four corners.
                    for corner in 0..4 {
                        let p = self.nodes[elem[corner]];
                        let next = self.nodes[elem[(corner + 1) % 4]];
                        let prev = self.nodes[elem[(corner + 3) % 4]];
                        let det = (next[0] - p[0]) * (prev[1] - p[1])
                            - (prev[0] - p[0]) * (next[1] - p[1]);
                        if !(det > 0.0) {
                            return Err(MeshError::DegenerateElement {
                                element: e,
                                detail: format!(
                                    "corner {corner} Jacobian determinant {det} (nodes must be CCW and convex enough)"
                                ),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Uniform lattice over the rectangle `[x0,x1] x [y0,y1]` with `nx * ny`
/// nodes, numbered x-fastest row-major. Quads use one element per cell;
/// triangles split each cell along its SW-NE diagonal. Boundary sets
/// "left", "right", "top", "bottom" are populated as both node sets and
/// edge sets.
pub fn generate_structured_rect(
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    nx: usize,
    ny: usize,
    kind: ElementKind,
) -> Result<Mesh, MeshError> {
    if nx < 2 || ny < 2 {
        return Err(MeshError::Parameter(format!(
            "node counts must be >= 2, got nx = {nx}, ny = {ny}"
        )));
    }
    if !(x1 > x0) || !(y1 > y0) {
        return Err(MeshError::Parameter(format!(
            "extents must be increasing, got x: [{x0}, {x1}], y: [{y0}, {y1}]"
        )));
    }
    let mut nodes = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = x0 + (x1 - x0) * i as f64 / (nx - 1) as f64;
            let y = y0 + (y1 - y0) * j as f64 / (ny - 1) as f64;
            nodes.push([x, y]);
        }
    }
    let node = |i: usize, j: usize| j * nx + i;
    let mut elements = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1));
            match kind {
                ElementKind::Quad4 => elements.push([a, b, c, d]),
                ElementKind::Tri3 => {
                    // SW-NE diagonal, deterministically.
                    elements.push([a, b, c, usize::MAX]);
                    elements.push([a, c, d, usize::MAX]);
                }
            }
        }
    }
    let mut mesh = Mesh::new(kind, nodes, elements)?;

    let left: Vec<usize> = (0..ny).map(|j| node(0, j)).collect();
    let right: Vec<usize> = (0..ny).map(|j| node(nx - 1, j)).collect();
    let bottom: Vec<usize> = (0..nx).map(|i| node(i, 0)).collect();
    let top: Vec<usize> = (0..nx).map(|i| node(i, ny - 1)).collect();
    let edges = |chain: &[usize]| -> Vec<[usize; 2]> {
        chain.windows(2).map(|w| [w[0], w[1]]).collect()
    };
    mesh.add_edge_set("left", edges(&left))?;
    mesh.add_edge_set("right", edges(&right))?;
    mesh.add_edge_set("bottom", edges(&bottom))?;
    mesh.add_edge_set("top", edges(&top))?;
    let mut all = Vec::new();
    for set in [&left, &right, &bottom, &top] {
        all.extend_from_slice(set);
    }
    mesh.add_node_set("boundary", all)?;
    mesh.add_node_set("left", left)?;
    mesh.add_node_set("right", right)?;
    mesh.add_node_set("bottom", bottom)?;
    mesh.add_node_set("top", top)?;
    Ok(mesh)
}

/// Boundary condition kinds, split by physics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    DirichletDisplacement,
    NeumannTraction,
    DirichletConcentration,
    NeumannFlux,
}

/// Scalar boundary data: a constant or a coordinate function.
pub enum ScalarValue {
    Const(f64),
    Fn(Box<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl ScalarValue {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Self::Const(v) => *v,
            Self::Fn(f) => f(x, y),
        }
    }
}

impl fmt::Debug for ScalarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Const(v) => write!(f, "Const({v})"),
            Self::Fn(_) => write!(f, "Fn(..)"),
        }
    }
}

/// Vector boundary data: a constant or a coordinate function.
pub enum VectorValue {
    Const([f64; 2]),
    Fn(Box<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>),
}

impl VectorValue {
    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            Self::Const(v) => *v,
            Self::Fn(f) => f(x, y),
        }
    }
}

impl fmt::Debug for VectorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Const(v) => write!(f, "Const({v:?})"),
            Self::Fn(_) => write!(f, "Fn(..)"),
        }
    }
}

/// The payload attached to a boundary condition.
#[derive(Debug)]
pub enum BcValue {
    Scalar(ScalarValue),
    Vector(VectorValue),
    /// Per-component displacement constraint; `None` leaves the component
    /// free (e.g. a roller support).
    MaskedVector {
        x: Option<ScalarValue>,
        y: Option<ScalarValue>,
    },
}

/// One boundary condition: what it constrains, where, and with what value.
///
/// Dirichlet conditions target node sets; Neumann conditions target edge
/// sets. Boundary not covered by any condition of a physics gets the
/// natural (zero Neumann) condition.
#[derive(Debug)]
pub struct BoundaryCondition {
    pub kind: BcKind,
    pub target: String,
    pub value: BcValue,
}

impl BoundaryCondition {
    pub fn dirichlet_concentration(target: &str, value: ScalarValue) -> Self {
        Self {
            kind: BcKind::DirichletConcentration,
            target: target.to_string(),
            value: BcValue::Scalar(value),
        }
    }

    pub fn neumann_flux(target: &str, value: ScalarValue) -> Self {
        Self {
            kind: BcKind::NeumannFlux,
            target: target.to_string(),
            value: BcValue::Scalar(value),
        }
    }

    pub fn dirichlet_displacement(target: &str, value: VectorValue) -> Self {
        Self {
            kind: BcKind::DirichletDisplacement,
            target: target.to_string(),
            value: BcValue::Vector(value),
        }
    }

    pub fn pinned(target: &str, x: Option<ScalarValue>, y: Option<ScalarValue>) -> Self {
        Self {
            kind: BcKind::DirichletDisplacement,
            target: target.to_string(),
            value: BcValue::MaskedVector { x, y },
        }
    }

    pub fn neumann_traction(target: &str, value: VectorValue) -> Self {
        Self {
            kind: BcKind::NeumannTraction,
            target: target.to_string(),
            value: BcValue::Vector(value),
        }
    }
}

/// Well-posedness check per physics: all targets must exist, the
/// Dirichlet and Neumann node populations must not overlap, and each
/// physics needs at least one non-empty Dirichlet set (diffusion always;
/// elasticity so rigid modes are constrained).
pub fn validate_bcs(mesh: &Mesh, bcs: &[BoundaryCondition]) -> Result<(), MeshError> {
    use alloc::collections::BTreeSet;
    for physics in [
        (BcKind::DirichletDisplacement, BcKind::NeumannTraction),
        (BcKind::DirichletConcentration, BcKind::NeumannFlux),
    ] {
        let mut dirichlet_nodes: BTreeSet<usize> = BTreeSet::new();
        let mut neumann_nodes: BTreeSet<usize> = BTreeSet::new();
        let mut has_dirichlet = false;
        for bc in bcs {
            if bc.kind == physics.0 {
                let nodes = mesh.boundary_nodes(&bc.target)?;
                has_dirichlet |= !nodes.is_empty();
                dirichlet_nodes.extend(nodes.iter().copied());
            } else if bc.kind == physics.1 {
                for edge in mesh.edge_set(&bc.target)? {
                    neumann_nodes.insert(edge[0]);
                    neumann_nodes.insert(edge[1]);
                }
            }
        }
        let relevant = bcs.iter().any(|b| b.kind == physics.0 || b.kind == physics.1);
        if relevant && !has_dirichlet {
            return Err(MeshError::Parameter(format!(
                "no non-empty Dirichlet set for {:?}",
                physics.0
            )));
        }
        // Shared corner nodes between a Dirichlet set and a Neumann edge
        // set are fine (Dirichlet wins there); a Neumann edge fully inside
        // the Dirichlet set is a specification error.
        for bc in bcs {
            if bc.kind == physics.1 {
                for edge in mesh.edge_set(&bc.target)? {
                    if dirichlet_nodes.contains(&edge[0]) && dirichlet_nodes.contains(&edge[1]) {
                        // Only flag when the whole set is swallowed; mixed
                        // corners are expected on set boundaries.
                        let all_inside = mesh
                            .edge_set(&bc.target)?
                            .iter()
                            .all(|e| dirichlet_nodes.contains(&e[0]) && dirichlet_nodes.contains(&e[1]));
                        if all_inside {
                            return Err(MeshError::Parameter(format!(
                                "Neumann set '{}' lies entirely inside a Dirichlet region",
                                bc.target
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Text format
//
//   mesh 2d tri|quad
//   nodes N         (then N lines "x y")
//   elements M      (then M lines of 3 or 4 zero-based indices)
//   nodeset NAME K  (then K indices)
//   edgeset NAME K  (then K pairs "n1 n2")
//
// '#' starts a comment; tokens are whitespace-separated decimal floats.
// ---------------------------------------------------------------------------

struct Tokens<'a> {
    toks: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut toks = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                toks.push((lineno + 1, tok));
            }
        }
        Self { toks, pos: 0 }
    }

    fn line(&self) -> usize {
        if self.pos < self.toks.len() {
            self.toks[self.pos].0
        } else {
            self.toks.last().map(|t| t.0).unwrap_or(0)
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str, MeshError> {
        let line = self.line();
        let tok = self
            .toks
            .get(self.pos)
            .map(|t| t.1)
            .ok_or(MeshError::Parse {
                line,
                detail: format!("unexpected end of input, expected {what}"),
            })?;
        self.pos += 1;
        Ok(tok)
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn usize(&mut self, what: &str) -> Result<usize, MeshError> {
        let line = self.line();
        let tok = self.next(what)?;
        tok.parse().map_err(|_| MeshError::Parse {
            line,
            detail: format!("expected {what}, got '{tok}'"),
        })
    }

    fn f64(&mut self, what: &str) -> Result<f64, MeshError> {
        let line = self.line();
        let tok = self.next(what)?;
        tok.parse().map_err(|_| MeshError::Parse {
            line,
            detail: format!("expected {what}, got '{tok}'"),
        })
    }
}

/// Parse a mesh from the line-oriented text format. All mesh invariants
/// are re-validated; connectivity errors carry the offending element.
pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut t = Tokens::new(text);
    let line = t.line();
    if t.next("header 'mesh'")? != "mesh" || t.next("header '2d'")? != "2d" {
        return Err(MeshError::Parse {
            line,
            detail: "expected header 'mesh 2d tri|quad'".to_string(),
        });
    }
    let kind = match t.next("element kind")? {
        "tri" => ElementKind::Tri3,
        "quad" => ElementKind::Quad4,
        other => {
            return Err(MeshError::Parse {
                line,
                detail: format!("unknown element kind '{other}'"),
            })
        }
    };
    let kw = t.next("'nodes'")?;
    if kw != "nodes" {
        return Err(MeshError::Parse {
            line: t.line(),
            detail: format!("expected 'nodes', got '{kw}'"),
        });
    }
    let n = t.usize("node count")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let x = t.f64("node x coordinate")?;
        let y = t.f64("node y coordinate")?;
        nodes.push([x, y]);
    }
    let kw = t.next("'elements'")?;
    if kw != "elements" {
        return Err(MeshError::Parse {
            line: t.line(),
            detail: format!("expected 'elements', got '{kw}'"),
        });
    }
    let m = t.usize("element count")?;
    let nper = kind.nodes_per_element();
    let mut elements = Vec::with_capacity(m);
    for _ in 0..m {
        let mut conn = [usize::MAX; 4];
        for slot in conn.iter_mut().take(nper) {
            *slot = t.usize("node index")?;
        }
        elements.push(conn);
    }
    let mut mesh = Mesh::new(kind, nodes, elements)?;
    while let Some(kw) = t.peek() {
        match kw {
            "nodeset" => {
                t.next("'nodeset'")?;
                let name = t.next("node set name")?;
                let k = t.usize("node set size")?;
                let mut ids = Vec::with_capacity(k);
                for _ in 0..k {
                    ids.push(t.usize("node index")?);
                }
                mesh.add_node_set(name, ids)?;
            }
            "edgeset" => {
                t.next("'edgeset'")?;
                let name = t.next("edge set name")?;
                let k = t.usize("edge set size")?;
                let mut edges = Vec::with_capacity(k);
                for _ in 0..k {
                    let a = t.usize("edge node index")?;
                    let b = t.usize("edge node index")?;
                    edges.push([a, b]);
                }
                mesh.add_edge_set(name, edges)?;
            }
            other => {
                return Err(MeshError::Parse {
                    line: t.line(),
                    detail: format!("unexpected token '{other}'"),
                })
            }
        }
    }
    Ok(mesh)
}

/// Serialize a mesh to the text format. `parse_mesh(format_mesh(m)) == m`
/// exactly; coordinates are printed with round-trip precision.
pub fn format_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let kind = match mesh.kind() {
        ElementKind::Tri3 => "tri",
        ElementKind::Quad4 => "quad",
    };
    out.push_str(&format!("mesh 2d {kind}\n"));
    out.push_str(&format!("nodes {}\n", mesh.num_nodes()));
    for n in mesh.nodes() {
        out.push_str(&format!("{:?} {:?}\n", n[0], n[1]));
    }
    out.push_str(&format!("elements {}\n", mesh.num_elements()));
    for e in 0..mesh.num_elements() {
        let conn = mesh.element(e);
        let mut first = true;
        for &i in conn {
            if !first {
                out.push(' ');
            }
            out.push_str(&i.to_string());
            first = false;
        }
        out.push('\n');
    }
    for (name, ids) in mesh.node_sets() {
        out.push_str(&format!("nodeset {name} {}\n", ids.len()));
        for chunk in ids.chunks(16) {
            let strs: Vec<String> = chunk.iter().map(|i| i.to_string()).collect();
            out.push_str(&strs.join(" "));
            out.push('\n');
        }
    }
    for (name, edges) in mesh.edge_sets() {
        out.push_str(&format!("edgeset {name} {}\n", edges.len()));
        for e in edges {
            out.push_str(&format!("{} {}\n", e[0], e[1]));
        }
    }
    out
}
