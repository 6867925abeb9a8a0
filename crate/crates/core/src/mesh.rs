//! Structured triangulations of rectangles.
//!
//! The grid lines may be non-uniform (graded towards a region of interest).
//! Each grid cell is split into two triangles along one diagonal, or into
//! four triangles around an added centre vertex ("crossed"), which resolves
//! both diagonal directions.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::tensor::{Point, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    /// Diagonal from lower-left to upper-right.
    Diagonal,
    /// Diagonal from lower-right to upper-left.
    AntiDiagonal,
    /// Four triangles around the cell centre.
    Crossed,
}

impl Split {
    fn triangles_per_cell(self) -> usize {
        match self {
            Split::Crossed => 4,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn outward_normal(self) -> Vec2 {
        match self {
            Side::Left => Vec2::new(-1.0, 0.0),
            Side::Right => Vec2::new(1.0, 0.0),
            Side::Bottom => Vec2::new(0.0, -1.0),
            Side::Top => Vec2::new(0.0, 1.0),
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s.trim() {
            "left" => Some(Side::Left),
            "right" => Some(Side::Right),
            "bottom" => Some(Side::Bottom),
            "top" => Some(Side::Top),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
            Side::Bottom => 2,
            Side::Top => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

pub const NO_TRIANGLE: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
pub struct Edge {
    pub v: [usize; 2],
    /// Incident triangles; the second is [`NO_TRIANGLE`] on the boundary.
    pub tris: [usize; 2],
    pub side: Option<Side>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tris[1] == NO_TRIANGLE
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    xs: Vec<f64>,
    ys: Vec<f64>,
    split: Split,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    basis_grads: Vec<[Vec2; 3]>,
    edges: Vec<Edge>,
    kinds: [BoundaryKind; 4],
}

impl Mesh {
    /// Uniform `nx × ny` grid on `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize, split: Split) -> Result<Mesh> {
        if nx == 0 || ny == 0 || !(x1 > x0) || !(y1 > y0) {
            return Err(Error::Invalid(format!("bad rectangle mesh {nx}x{ny} on [{x0},{x1}]x[{y0},{y1}]")));
        }
        let xs = (0..=nx).map(|i| x0 + (x1 - x0) * i as f64 / nx as f64).collect();
        let ys = (0..=ny).map(|j| y0 + (y1 - y0) * j as f64 / ny as f64).collect();
        Mesh::rectilinear(xs, ys, split)
    }

    /// Tensor grid with the given strictly increasing coordinate lines.
    pub fn rectilinear(xs: Vec<f64>, ys: Vec<f64>, split: Split) -> Result<Mesh> {
        let increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&xs) || !increasing(&ys) {
            return Err(Error::Invalid("grid lines must be strictly increasing".into()));
        }
        let nx = xs.len() - 1;
        let ny = ys.len() - 1;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
        for &y in &ys {
            for &x in &xs {
                vertices.push(Vec2::new(x, y));
            }
        }
        let grid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(nx * ny * split.triangles_per_cell());
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v01, v11) = (grid(i, j), grid(i + 1, j), grid(i, j + 1), grid(i + 1, j + 1));
                match split {
                    Split::Diagonal => {
                        triangles.push([v00, v10, v11]);
                        triangles.push([v00, v11, v01]);
                    }
                    Split::AntiDiagonal => {
                        triangles.push([v00, v10, v01]);
                        triangles.push([v10, v11, v01]);
                    }
                    Split::Crossed => {
                        let c = vertices.len();
                        vertices.push(Vec2::new(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])));
                        triangles.push([v00, v10, c]);
                        triangles.push([v10, v11, c]);
                        triangles.push([v11, v01, c]);
                        triangles.push([v01, v00, c]);
                    }
                }
            }
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut basis_grads = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|v| vertices[v]);
            let twice = (b - a).cross(c - a);
            if twice <= 0.0 {
                return Err(Error::DegenerateTriangle(t));
            }
            areas.push(0.5 * twice);
            // ∇λ_i = perp(opposite edge) / (2 area)
            basis_grads.push([
                (c - b).perp() * (1.0 / twice),
                (a - c).perp() * (1.0 / twice),
                (b - a).perp() * (1.0 / twice),
            ]);
        }

        let mut map: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match map.get(&key) {
                    Some(&e) => edges[e].tris[1] = t,
                    None => {
                        map.insert(key, edges.len());
                        edges.push(Edge { v: [a, b], tris: [t, NO_TRIANGLE], side: None });
                    }
                }
            }
        }
        let (x0, x1, y0, y1) = (xs[0], xs[nx], ys[0], ys[ny]);
        for e in edges.iter_mut().filter(|e| e.is_boundary()) {
            let m = (vertices[e.v[0]] + vertices[e.v[1]]) * 0.5;
            e.side = Some(if m.x == x0 {
                Side::Left
            } else if m.x == x1 {
                Side::Right
            } else if m.y == y0 {
                Side::Bottom
            } else if m.y == y1 {
                Side::Top
            } else {
                unreachable!("boundary edge off the rectangle")
            });
        }

        Ok(Mesh {
            xs,
            ys,
            split,
            vertices,
            triangles,
            areas,
            basis_grads,
            edges,
            kinds: [BoundaryKind::Dirichlet; 4],
        })
    }

    pub fn with_boundary(mut self, side: Side, kind: BoundaryKind) -> Self {
        self.kinds[side.index()] = kind;
        self
    }

    pub fn boundary_kind(&self, side: Side) -> BoundaryKind {
        self.kinds[side.index()]
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn grid_lines(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn bounds(&self) -> (Point, Point) {
        (
            Vec2::new(self.xs[0], self.ys[0]),
            Vec2::new(*self.xs.last().unwrap(), *self.ys.last().unwrap()),
        )
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.dist(hi)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        (a + b + c) / 3.0
    }

    /// Gradients of the three barycentric basis functions of triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [Vec2; 3] {
        self.basis_grads[t]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let ed = &self.edges[e];
        self.vertices[ed.v[0]].dist(self.vertices[ed.v[1]])
    }

    /// Boundary edges on sides labelled Dirichlet.
    pub fn dirichlet_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter_map(move |(i, e)| match e.side {
            Some(s) if self.kinds[s.index()] == BoundaryKind::Dirichlet => Some(i),
            _ => None,
        })
    }

    /// Unit normal of edge `e` pointing out of its first incident triangle.
    pub fn edge_normal(&self, e: usize) -> Vec2 {
        let ed = &self.edges[e];
        let (a, b) = (self.vertices[ed.v[0]], self.vertices[ed.v[1]]);
        let d = b - a;
        // triangles are counter-clockwise and the edge is stored in the
        // orientation of its first triangle, so the outward normal is (d.y, -d.x)
        Vec2::new(d.y, -d.x) / d.norm()
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let twice = 2.0 * self.areas[t];
        let l1 = (p - a).cross(c - a) / twice;
        let l2 = (b - a).cross(p - a) / twice;
        [1.0 - l1 - l2, l1, l2]
    }

    fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let tol = 1e-12 * self.diameter();
        let (lo, hi) = self.bounds();
        if p.x < lo.x - tol || p.x > hi.x + tol || p.y < lo.y - tol || p.y > hi.y + tol || !p.is_finite() {
            return None;
        }
        let nx = self.xs.len() - 1;
        let ny = self.ys.len() - 1;
        let i = self.xs.partition_point(|&x| x <= p.x).clamp(1, nx) - 1;
        let j = self.ys.partition_point(|&y| y <= p.y).clamp(1, ny) - 1;
        Some((i, j))
    }

    /// Triangle containing `p` (closed, up to round-off) and its barycentrics.
    pub fn locate(&self, p: Point) -> Result<(usize, [f64; 3])> {
        let (i, j) = self.cell_of(p).ok_or(Error::OutsideMesh(p))?;
        let nx = self.xs.len() - 1;
        let per = self.split.triangles_per_cell();
        let base = (j * nx + i) * per;
        let mut best = (base, [0.0; 3], f64::NEG_INFINITY);
        for t in base..base + per {
            let bary = self.barycentric(t, p);
            let m = bary[0].min(bary[1]).min(bary[2]);
            if m > best.2 {
                best = (t, bary, m);
            }
        }
        Ok((best.0, best.1))
    }

    /// Splits the segment `a → b` at every crossing with a mesh edge.
    /// Returns parameter intervals `(s0, s1)` on `[0, 1]` together with a
    /// triangle that contains the piece.
    pub fn segment_pieces(&self, a: Point, b: Point) -> Result<Vec<(f64, f64, usize)>> {
        self.cell_of(a).ok_or(Error::OutsideMesh(a))?;
        self.cell_of(b).ok_or(Error::OutsideMesh(b))?;
        let d = b - a;
        let mut cuts = vec![0.0, 1.0];
        let eps = 1e-13;
        let push_line = |origin: f64, dir: f64, value: f64, cuts: &mut Vec<f64>| {
            if dir != 0.0 {
                let s = (value - origin) / dir;
                if s > eps && s < 1.0 - eps {
                    cuts.push(s);
                }
            }
        };
        for &x in &self.xs {
            push_line(a.x, d.x, x, &mut cuts);
        }
        for &y in &self.ys {
            push_line(a.y, d.y, y, &mut cuts);
        }
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        cuts.dedup_by(|p, q| (*p - *q).abs() < eps);

        // inside each grid cell, split further at the cell diagonals
        let mut refined = Vec::with_capacity(cuts.len() * 2);
        for w in cuts.windows(2) {
            refined.push(w[0]);
            let mid = a + d * (0.5 * (w[0] + w[1]));
            let (i, j) = self.cell_of(mid).ok_or(Error::OutsideMesh(mid))?;
            let (x0, x1, y0, y1) = (self.xs[i], self.xs[i + 1], self.ys[j], self.ys[j + 1]);
            let diagonals: Vec<(Point, Point)> = match self.split {
                Split::Diagonal => vec![(Vec2::new(x0, y0), Vec2::new(x1, y1))],
                Split::AntiDiagonal => vec![(Vec2::new(x1, y0), Vec2::new(x0, y1))],
                Split::Crossed => vec![
                    (Vec2::new(x0, y0), Vec2::new(x1, y1)),
                    (Vec2::new(x1, y0), Vec2::new(x0, y1)),
                ],
            };
            let mut inner = Vec::new();
            for (p, q) in diagonals {
                let e = q - p;
                let den = d.cross(e);
                if den.abs() <= 1e-14 * d.norm() * e.norm() {
                    continue;
                }
                let s = (p - a).cross(e) / den;
                if s > w[0] + eps && s < w[1] - eps {
                    inner.push(s);
                }
            }
            inner.sort_by(|p, q| p.partial_cmp(q).unwrap());
            refined.extend(inner);
        }
        refined.push(1.0);
        refined.dedup_by(|p, q| (*p - *q).abs() < eps);

        refined
            .windows(2)
            .map(|w| {
                let mid = a + d * (0.5 * (w[0] + w[1]));
                let (t, _) = self.locate(mid)?;
                Ok((w[0], w[1], t))
            })
            .collect()
    }

    /// Writes `vertex_id,x,y` and `triangle_id,v0,v1,v2` tables.
    pub fn write_csv(&self, vertices: impl Write, triangles: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(vertices);
        w.write_record(["vertex_id", "x", "y"])?;
        for (i, v) in self.vertices.iter().enumerate() {
            w.write_record([i.to_string(), v.x.to_string(), v.y.to_string()])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_writer(triangles);
        w.write_record(["triangle_id", "v0", "v1", "v2"])?;
        for (i, t) in self.triangles.iter().enumerate() {
            w.write_record([i.to_string(), t[0].to_string(), t[1].to_string(), t[2].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Grid lines on `[lo, hi]` with uniform spacing `h` on `[fine_lo, fine_hi]`
/// and spacing doubling outwards. `fine_lo`, `fine_hi` must be multiples of
/// `h` lying inside `[lo, hi]`.
pub fn graded_lines(lo: f64, hi: f64, fine_lo: f64, fine_hi: f64, h: f64) -> Vec<f64> {
    let n0 = (fine_lo / h).round() as i64;
    let n1 = (fine_hi / h).round() as i64;
    let mut lines: Vec<f64> = (n0..=n1).map(|m| m as f64 * h).collect();
    let mut x = fine_hi;
    let mut step = h;
    while x < hi {
        step *= 2.0;
        x = if x + step > hi || hi - (x + step) < 0.5 * step { hi } else { x + step };
        lines.push(x);
    }
    let mut x = fine_lo;
    let mut step = h;
    let mut left = Vec::new();
    while x > lo {
        step *= 2.0;
        x = if x - step < lo || (x - step) - lo < 0.5 * step { lo } else { x - step };
        left.push(x);
    }
    left.reverse();
    left.extend(lines);
    left.dedup();
    left
}
