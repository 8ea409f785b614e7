//! Triangulations of the unit square and the unit disc.
//!
//! Boundary edges carry a [`BoundaryTag`]: `GammaI` marks the inaccessible
//! part where data is to be recovered, `GammaC` the accessible part where both
//! trace and flux are measured. Triangles are stored counter-clockwise and the
//! boundary edge list forms one closed counter-clockwise loop.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    GammaI,
    GammaC,
}

impl BoundaryTag {
    pub fn complement(self) -> Self {
        match self {
            BoundaryTag::GammaI => BoundaryTag::GammaC,
            BoundaryTag::GammaC => BoundaryTag::GammaI,
        }
    }

    /// Single-letter code used by the text format.
    pub fn code(self) -> char {
        match self {
            BoundaryTag::GammaI => 'I',
            BoundaryTag::GammaC => 'C',
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryTag::GammaI => write!(f, "GammaI"),
            BoundaryTag::GammaC => write!(f, "GammaC"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Maximum edge length.
    pub h: f64,
}

impl Mesh {
    /// Builds a mesh and computes `h`. No validation is performed.
    pub fn from_parts(
        nodes: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Self {
        let mut h: f64 = 0.0;
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if a < nodes.len() && b < nodes.len() {
                    h = h.max(nodes[a].dist(nodes[b]));
                }
            }
        }
        Self {
            nodes,
            triangles,
            boundary_edges,
            h,
        }
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        signed_area(self.triangle_points(t))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn tag_length(&self, tag: BoundaryTag) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| self.nodes[e.a].dist(self.nodes[e.b]))
            .sum()
    }

    /// Writes the whitespace-delimited text format:
    /// `N T E`, then `x y` per node, `i j k` per triangle, `a b tag` per edge.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{} {} {}",
            self.nodes.len(),
            self.triangles.len(),
            self.boundary_edges.len()
        )?;
        for p in &self.nodes {
            writeln!(w, "{:.17e} {:.17e}", p.x, p.y)?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        for e in &self.boundary_edges {
            writeln!(w, "{} {} {}", e.a, e.b, e.tag.code())?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));

        fn next_fields<I>(lines: &mut I, what: &str) -> Result<(usize, Vec<String>)>
        where
            I: Iterator<Item = (usize, std::io::Result<String>)>,
        {
            match lines.next() {
                Some((i, line)) => {
                    let line = line?;
                    Ok((i + 1, line.split_whitespace().map(str::to_owned).collect()))
                }
                None => Err(Error::Parse {
                    line: 0,
                    msg: format!("unexpected end of input, expected {what}"),
                }),
            }
        }
        fn parse<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse `{s}`"),
            })
        }
        fn expect_len(line: usize, f: &[String], n: usize) -> Result<()> {
            if f.len() != n {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {n} fields, found {}", f.len()),
                });
            }
            Ok(())
        }

        let (ln, header) = next_fields(&mut lines, "header")?;
        expect_len(ln, &header, 3)?;
        let n_nodes: usize = parse(ln, &header[0])?;
        let n_tri: usize = parse(ln, &header[1])?;
        let n_edges: usize = parse(ln, &header[2])?;

        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let (ln, f) = next_fields(&mut lines, "node")?;
            expect_len(ln, &f, 2)?;
            nodes.push(Point2::new(parse(ln, &f[0])?, parse(ln, &f[1])?));
        }
        let mut triangles = Vec::with_capacity(n_tri);
        for _ in 0..n_tri {
            let (ln, f) = next_fields(&mut lines, "triangle")?;
            expect_len(ln, &f, 3)?;
            triangles.push([parse(ln, &f[0])?, parse(ln, &f[1])?, parse(ln, &f[2])?]);
        }
        let mut boundary_edges = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            let (ln, f) = next_fields(&mut lines, "edge")?;
            expect_len(ln, &f, 3)?;
            let tag = match f[2].as_str() {
                "I" => BoundaryTag::GammaI,
                "C" => BoundaryTag::GammaC,
                other => {
                    return Err(Error::Parse {
                        line: ln,
                        msg: format!("unknown tag `{other}`"),
                    })
                }
            };
            boundary_edges.push(BoundaryEdge {
                a: parse(ln, &f[0])?,
                b: parse(ln, &f[1])?,
                tag,
            });
        }
        Ok(Mesh::from_parts(nodes, triangles, boundary_edges))
    }
}

pub fn signed_area(p: [Point2; 3]) -> f64 {
    0.5 * ((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y))
}

/// Structured mesh of `(0,1)²` with `n` subdivisions per side; each cell is
/// split along its `(0,0)-(1,1)` diagonal. Edges on `x = 0` form `Γi`; the
/// corners `(0,0)` and `(0,1)` are endpoints shared with `Γc`.
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "square mesh needs n >= 2 subdivisions, got {n}"
        )));
    }
    let stride = n + 1;
    let idx = |i: usize, j: usize| j * stride + i;
    let mut nodes = Vec::with_capacity(stride * stride);
    for j in 0..=n {
        for i in 0..=n {
            nodes.push(Point2::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut edges = Vec::with_capacity(4 * n);
    let c = BoundaryTag::GammaC;
    for i in 0..n {
        edges.push(BoundaryEdge { a: idx(i, 0), b: idx(i + 1, 0), tag: c });
    }
    for j in 0..n {
        edges.push(BoundaryEdge { a: idx(n, j), b: idx(n, j + 1), tag: c });
    }
    for i in (0..n).rev() {
        edges.push(BoundaryEdge { a: idx(i + 1, n), b: idx(i, n), tag: c });
    }
    for j in (0..n).rev() {
        edges.push(BoundaryEdge {
            a: idx(0, j + 1),
            b: idx(0, j),
            tag: BoundaryTag::GammaI,
        });
    }
    Ok(Mesh::from_parts(nodes, triangles, edges))
}

/// Concentric-ring mesh of the unit disc with `n` boundary segments.
///
/// Rings sit at radii `j/m` with `m = round(n / 2π)`; ring `j` carries
/// `round(n j / m)` equally spaced nodes starting at angle 0, so the boundary
/// nodes are exactly at angles `2πk/n`. Neighbouring rings are stitched by
/// advancing along both rings in angle order. Boundary edges whose midpoint
/// angle lies in `(0, π/2)` form `Γi`.
pub fn build_unit_disc_mesh(n: usize) -> Result<Mesh> {
    if n < 16 || !n.is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!(
            "disc mesh needs n >= 16 boundary segments divisible by 4, got {n}"
        )));
    }
    let m = ((n as f64) / (2.0 * PI)).round().max(2.0) as usize;
    let mut nodes = vec![Point2::new(0.0, 0.0)];
    // (first node index, node count) per ring; ring 0 is the centre
    let mut rings: Vec<(usize, usize)> = vec![(0, 1)];
    for j in 1..=m {
        let count = if j == m {
            n
        } else {
            (((n * j) as f64 / m as f64).round() as usize).max(3)
        };
        let r = j as f64 / m as f64;
        let first = nodes.len();
        for k in 0..count {
            let th = 2.0 * PI * k as f64 / count as f64;
            let (s, c) = th.sin_cos();
            nodes.push(Point2::new(r * c, r * s));
        }
        rings.push((first, count));
    }
    // snap the boundary to the exact quadrant points
    let (bfirst, _) = rings[m];
    nodes[bfirst] = Point2::new(1.0, 0.0);
    nodes[bfirst + n / 4] = Point2::new(0.0, 1.0);
    nodes[bfirst + n / 2] = Point2::new(-1.0, 0.0);
    nodes[bfirst + 3 * n / 4] = Point2::new(0.0, -1.0);

    let mut triangles = Vec::new();
    let (f1, c1) = rings[1];
    for k in 0..c1 {
        triangles.push([0, f1 + k, f1 + (k + 1) % c1]);
    }
    for j in 1..m {
        let (fa, na) = rings[j];
        let (fb, nb) = rings[j + 1];
        let (mut i, mut o) = (0usize, 0usize);
        while i < na || o < nb {
            let next_inner = (i + 1) as f64 / na as f64;
            let next_outer = (o + 1) as f64 / nb as f64;
            let advance_inner = o == nb || (i < na && next_inner < next_outer);
            let ai = fa + i % na;
            let bo = fb + o % nb;
            if advance_inner {
                triangles.push([ai, bo, fa + (i + 1) % na]);
                i += 1;
            } else {
                triangles.push([ai, bo, fb + (o + 1) % nb]);
                o += 1;
            }
        }
    }

    let mut edges = Vec::with_capacity(n);
    for k in 0..n {
        // midpoint angle (k + 1/2) 2π/n lies in (0, π/2) iff k < n/4
        let tag = if k < n / 4 {
            BoundaryTag::GammaI
        } else {
            BoundaryTag::GammaC
        };
        edges.push(BoundaryEdge {
            a: bfirst + k,
            b: bfirst + (k + 1) % n,
            tag,
        });
    }
    Ok(Mesh::from_parts(nodes, triangles, edges))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    BadNode,
    BadIndex,
    NegativeArea,
    MissingTag,
    DuplicateTag,
    NotOnBoundary,
    BrokenLoop,
    EmptyTag,
    ShortGammaC,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn violation(kind: ViolationKind, message: String) -> Violation {
    Violation { kind, message }
}

fn undirected(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Checks every mesh invariant; an empty list means the mesh is valid.
pub fn validate(mesh: &Mesh) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();
    let nn = mesh.nodes.len();

    for (i, p) in mesh.nodes.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() {
            out.push(violation(BadNode, format!("non-finite node {i}: ({}, {})", p.x, p.y)));
        }
    }

    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().any(|&v| v >= nn) {
            out.push(violation(BadIndex, format!("triangle {t} references a missing node: {tri:?}")));
            continue;
        }
        let area = mesh.signed_area(t);
        if !(area > 0.0) {
            out.push(violation(
                NegativeArea,
                format!("negative area: triangle {t} {tri:?} has signed area {area:e}"),
            ));
        }
        for k in 0..3 {
            *edge_count.entry(undirected(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    let topo: HashSet<(usize, usize)> = edge_count
        .iter()
        .filter(|(_, &c)| c == 1)
        .map(|(&e, _)| e)
        .collect();

    let mut tagged: BTreeMap<(usize, usize), Vec<BoundaryTag>> = BTreeMap::new();
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        if e.a >= nn || e.b >= nn {
            out.push(violation(BadIndex, format!("boundary edge {k} references a missing node")));
            continue;
        }
        tagged.entry(undirected(e.a, e.b)).or_default().push(e.tag);
    }
    for (e, tags) in &tagged {
        if tags.len() > 1 {
            out.push(violation(
                DuplicateTag,
                format!("duplicate tag: boundary edge {e:?} listed {} times", tags.len()),
            ));
        }
        if !topo.contains(e) {
            out.push(violation(
                NotOnBoundary,
                format!("tagged edge {e:?} is not on the topological boundary"),
            ));
        }
    }
    let mut missing: Vec<_> = topo.iter().filter(|e| !tagged.contains_key(e)).collect();
    missing.sort();
    for e in missing {
        out.push(violation(MissingTag, format!("missing tag: boundary edge {e:?} is untagged")));
    }

    // single closed loop: every boundary node has degree 2 and one walk visits all edges
    if !tagged.is_empty() {
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(a, b) in tagged.keys() {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut bad_degree: Vec<_> = adj.iter().filter(|(_, v)| v.len() != 2).map(|(&k, _)| k).collect();
        bad_degree.sort();
        if !bad_degree.is_empty() {
            out.push(violation(
                BrokenLoop,
                format!("boundary is not a closed loop: nodes {bad_degree:?} have degree != 2"),
            ));
        } else {
            let start = *tagged.keys().next().map(|(a, _)| a).unwrap();
            let (mut prev, mut cur, mut steps) = (start, adj[&start][0], 1usize);
            while cur != start && steps <= tagged.len() {
                let nb = &adj[&cur];
                let next = if nb[0] == prev { nb[1] } else { nb[0] };
                prev = cur;
                cur = next;
                steps += 1;
            }
            if steps != tagged.len() {
                out.push(violation(
                    BrokenLoop,
                    format!(
                        "boundary splits into several loops: walk covers {steps} of {} edges",
                        tagged.len()
                    ),
                ));
            }
        }
    }

    let li = mesh.tag_length(BoundaryTag::GammaI);
    let lc = mesh.tag_length(BoundaryTag::GammaC);
    for tag in [BoundaryTag::GammaI, BoundaryTag::GammaC] {
        if !mesh.boundary_edges.iter().any(|e| e.tag == tag) {
            out.push(violation(EmptyTag, format!("no boundary edge carries tag {tag}")));
        }
    }
    if lc < li {
        out.push(violation(
            ShortGammaC,
            format!("length of GammaC ({lc}) is smaller than length of GammaI ({li})"),
        ));
    }
    out
}

/// Ordered chain of boundary nodes carrying one tag, with arclength and the
/// normalized coordinate `t = 2s/L - 1 ∈ [-1, 1]`.
#[derive(Clone, Debug)]
pub struct BoundarySegment {
    pub tag: BoundaryTag,
    pub nodes: Vec<usize>,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub length: f64,
}

impl BoundarySegment {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Length of edge `k`, joining `nodes[k]` and `nodes[k + 1]`.
    pub fn edge_length(&self, k: usize) -> f64 {
        self.s[k + 1] - self.s[k]
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }
}

/// Extracts the chain of edges carrying `tag`. The chain starts at the
/// endpoint with the smallest `(y, x)`, which orders the square's `Γi` by
/// increasing `y` and the disc's `Γi` by increasing angle.
pub fn boundary_segment(mesh: &Mesh, tag: BoundaryTag) -> Result<BoundarySegment> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in mesh.boundary_edges.iter().filter(|e| e.tag == tag) {
        adj.entry(e.a).or_default().push(e.b);
        adj.entry(e.b).or_default().push(e.a);
    }
    if adj.is_empty() {
        return Err(Error::NotFound(format!("no boundary edges tagged {tag}")));
    }
    let ends: Vec<usize> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(&k, _)| k).collect();
    if ends.len() != 2 || adj.values().any(|v| v.len() > 2) {
        return Err(Error::InvalidArgument(format!(
            "edges tagged {tag} do not form a single open chain"
        )));
    }
    let key = |i: usize| (mesh.nodes[i].y, mesh.nodes[i].x);
    let start = if key(ends[1]) < key(ends[0]) { ends[1] } else { ends[0] };

    let mut nodes = vec![start];
    let mut s = vec![0.0];
    let (mut prev, mut cur) = (usize::MAX, start);
    loop {
        let next = adj[&cur].iter().copied().find(|&v| v != prev);
        match next {
            Some(v) if nodes.len() <= adj.len() => {
                let ds = mesh.nodes[cur].dist(mesh.nodes[v]);
                s.push(s.last().unwrap() + ds);
                nodes.push(v);
                prev = cur;
                cur = v;
            }
            _ => break,
        }
    }
    if nodes.len() != adj.len() {
        return Err(Error::InvalidArgument(format!(
            "edges tagged {tag} do not form a single open chain"
        )));
    }
    let length = *s.last().unwrap();
    let t = s.iter().map(|&si| 2.0 * si / length - 1.0).collect();
    Ok(BoundarySegment {
        tag,
        nodes,
        s,
        t,
        length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_counts_and_tags() {
        let m = build_unit_square_mesh(2).unwrap();
        assert_eq!(m.nodes.len(), 9);
        assert_eq!(m.triangles.len(), 8);

        let m = build_unit_square_mesh(4).unwrap();
        let find = |p: Point2, q: Point2| {
            m.boundary_edges
                .iter()
                .find(|e| {
                    let (a, b) = (m.nodes[e.a], m.nodes[e.b]);
                    (a == p && b == q) || (a == q && b == p)
                })
                .unwrap()
                .tag
        };
        assert_eq!(find(Point2::new(0.0, 0.25), Point2::new(0.0, 0.5)), BoundaryTag::GammaI);
        assert_eq!(find(Point2::new(1.0, 0.0), Point2::new(1.0, 0.25)), BoundaryTag::GammaC);
    }

    #[test]
    fn square_rejects_small_n() {
        assert!(matches!(build_unit_square_mesh(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn disc_rejects_bad_n() {
        assert!(matches!(build_unit_disc_mesh(18), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_unit_disc_mesh(12), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn disc_tags_by_midpoint_angle() {
        let m = build_unit_disc_mesh(16).unwrap();
        for e in &m.boundary_edges {
            let (a, b) = (m.nodes[e.a], m.nodes[e.b]);
            let th = ((a.y + b.y) / 2.0).atan2((a.x + b.x) / 2.0).rem_euclid(2.0 * PI);
            let expected = if th > 0.0 && th < PI / 2.0 {
                BoundaryTag::GammaI
            } else {
                BoundaryTag::GammaC
            };
            assert_eq!(e.tag, expected, "edge at angle {th}");
            if (th - PI / 4.0).abs() < 0.2 {
                assert_eq!(e.tag, BoundaryTag::GammaI);
            }
            if (th - PI).abs() < 0.2 {
                assert_eq!(e.tag, BoundaryTag::GammaC);
            }
        }
    }

    #[test]
    fn generated_meshes_are_valid() {
        for n in [2, 3, 8, 32] {
            assert_eq!(validate(&build_unit_square_mesh(n).unwrap()), vec![]);
        }
        for n in (16..=128).step_by(4) {
            let m = build_unit_disc_mesh(n).unwrap();
            assert_eq!(validate(&m), vec![], "disc n={n}");
        }
    }

    #[test]
    fn flipped_triangle_is_reported() {
        let mut m = build_unit_square_mesh(4).unwrap();
        m.triangles[3].swap(0, 1);
        let v = validate(&m);
        assert!(v.iter().any(|v| v.kind == ViolationKind::NegativeArea));
        assert!(v.iter().any(|v| v.to_string().contains("negative area")));
    }

    #[test]
    fn untagged_edge_is_reported() {
        let mut m = build_unit_square_mesh(4).unwrap();
        m.boundary_edges.remove(5);
        let v = validate(&m);
        assert!(v.iter().any(|v| v.to_string().contains("missing tag")));
    }

    #[test]
    fn gamma_c_must_not_be_shorter() {
        let mut m = build_unit_square_mesh(4).unwrap();
        for e in m.boundary_edges.iter_mut() {
            e.tag = e.tag.complement();
        }
        let v = validate(&m);
        assert!(v.iter().any(|v| v.kind == ViolationKind::ShortGammaC));
    }

    #[test]
    fn square_segments() {
        let m = build_unit_square_mesh(4).unwrap();
        let gi = boundary_segment(&m, BoundaryTag::GammaI).unwrap();
        assert!((gi.length - 1.0).abs() < 1e-15);
        let mid = gi.nodes.iter().position(|&k| m.nodes[k] == Point2::new(0.0, 0.5)).unwrap();
        assert_eq!(gi.t[mid], 0.0);
        assert!(gi.nodes.windows(2).all(|w| m.nodes[w[1]].y > m.nodes[w[0]].y));
        assert_eq!(gi.s[0], 0.0);

        let gc = boundary_segment(&m, BoundaryTag::GammaC).unwrap();
        assert!((gc.length - 3.0).abs() < 1e-14);
        assert!(gc.s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn disc_gamma_i_length() {
        let m = build_unit_disc_mesh(64).unwrap();
        let gi = boundary_segment(&m, BoundaryTag::GammaI).unwrap();
        let rel = (gi.length - PI / 2.0).abs() / (PI / 2.0);
        assert!(rel <= 0.02, "relative chord error {rel}");
        let theta: Vec<f64> = gi.nodes.iter().map(|&k| m.nodes[k].y.atan2(m.nodes[k].x)).collect();
        assert!(theta.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(m.nodes[gi.nodes[0]], Point2::new(1.0, 0.0));
        assert_eq!(m.nodes[*gi.nodes.last().unwrap()], Point2::new(0.0, 1.0));
    }

    #[test]
    fn missing_tag_segment_is_not_found() {
        let mut m = build_unit_square_mesh(3).unwrap();
        for e in m.boundary_edges.iter_mut() {
            e.tag = BoundaryTag::GammaC;
        }
        assert!(matches!(boundary_segment(&m, BoundaryTag::GammaI), Err(Error::NotFound(_))));
    }

    #[test]
    fn areas() {
        let m = build_unit_square_mesh(7).unwrap();
        assert!((m.total_area() - 1.0).abs() < 1e-13);
        for n in [16, 32, 64, 128] {
            let m = build_unit_disc_mesh(n).unwrap();
            let a = m.total_area();
            let nf = n as f64;
            // inscribed polygon area
            let poly = 0.5 * nf * (2.0 * PI / nf).sin();
            assert!((a - poly).abs() < 1e-12, "n={n}: {a} vs {poly}");
            assert!(a <= PI);
            assert!((a - PI).abs() <= 2.0 * PI.powi(3) / (3.0 * nf * nf) * 1.5);
        }
    }

    #[test]
    fn refinement_halves_h() {
        for n in [4, 8, 16] {
            let r = build_unit_square_mesh(n).unwrap().h / build_unit_square_mesh(2 * n).unwrap().h;
            assert!((r - 2.0).abs() <= 0.2, "square n={n}: ratio {r}");
        }
        for n in [16, 32, 64] {
            let r = build_unit_disc_mesh(n).unwrap().h / build_unit_disc_mesh(2 * n).unwrap().h;
            assert!((r - 2.0).abs() <= 0.2, "disc n={n}: ratio {r}");
        }
    }

    #[test]
    fn text_round_trip() {
        let m = build_unit_disc_mesh(20).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let back = Mesh::read_text(&buf[..]).unwrap();
        assert_eq!(back.nodes, m.nodes);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary_edges, m.boundary_edges);
        let header = String::from_utf8(buf).unwrap();
        assert!(header.starts_with(&format!("{} {} 20\n", m.nodes.len(), m.triangles.len())));
    }

    #[test]
    fn text_parse_errors() {
        let err = Mesh::read_text("1 0 0\n0.0 zz\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = Mesh::read_text("3 1 1\n0 0\n1 0\n0 1\n0 1 2\n0 1 Q\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unknown tag"));
    }
}
