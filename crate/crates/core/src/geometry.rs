//! Periodic-cell geometry: problem configuration, quasi-periodic meshes with
//! classified faces, a structured mesh generator, and the non-trapping check.
//!
//! The computational domain is the periodic cell `(0,L) x (-H,H)` minus the
//! impenetrable obstacles. Meshes are ingested from a plain-text format (see
//! [`ingest_mesh`]); [`structured_mesh_text`] generates such files for
//! rectangle/layer/box geometries. Left and right boundary faces are
//! identified quasi-periodically; the phase factor is applied at assembly,
//! so the mesh itself is phase-free.

use num_complex::Complex;

use crate::assembly::FluxParameters;
use crate::error::{Error, Result};
use crate::scalar::{dot, norm2, sub, Point, Real};
use crate::Cplx;

/// A constant-permittivity material region given by a simple polygon.
#[derive(Debug, Clone)]
pub struct Region<R: Real> {
    pub polygon: Vec<Point<R>>,
    pub eps: Cplx<R>,
}

/// Physical setup of one scattering problem.
#[derive(Debug, Clone)]
pub struct ProblemConfig<R: Real> {
    /// Period length L of the grating.
    pub period: R,
    /// Half-height H of the truncated cell.
    pub half_height: R,
    /// Free-space wavenumber k.
    pub k: R,
    /// Incidence angle, measured against the horizontal, in [-pi, 0].
    pub theta: R,
    /// Relative permittivity above the cell (real, positive).
    pub eps_plus: R,
    /// Relative permittivity below the cell (Re > 0, Im >= 0).
    pub eps_minus: Cplx<R>,
    /// Material regions; the first polygon containing a point wins,
    /// points in no region have permittivity `eps_plus`.
    pub regions: Vec<Region<R>>,
    /// Impenetrable (Dirichlet) obstacles.
    pub obstacles: Vec<Vec<Point<R>>>,
    /// Numerical flux parameters.
    pub flux: FluxParameters<R>,
}

impl<R: Real> ProblemConfig<R> {
    /// Wavenumber in the upper exterior region (real since `eps_plus` is real).
    pub fn kappa_plus(&self) -> R {
        self.k * self.eps_plus.sqrt()
    }

    /// Wavenumber in the lower exterior region (principal square root).
    pub fn kappa_minus(&self) -> Cplx<R> {
        self.eps_minus.sqrt() * self.k
    }

    /// Quasi-periodicity parameter alpha_0 = kappa_plus cos(theta).
    pub fn alpha0(&self) -> R {
        self.kappa_plus() * self.theta.cos()
    }

    /// Permittivity at a point: first matching region, `eps_plus` otherwise.
    pub fn material_at(&self, p: Point<R>) -> Cplx<R> {
        for region in &self.regions {
            if point_in_polygon(&region.polygon, p) {
                return region.eps;
            }
        }
        Complex::new(self.eps_plus, R::zero())
    }

    /// Whether a point lies inside one of the obstacles.
    pub fn in_obstacle(&self, p: Point<R>) -> bool {
        self.obstacles.iter().any(|poly| point_in_polygon(poly, p))
    }

    /// Local wavenumber kappa = k sqrt(eps) at a point.
    pub fn kappa_at(&self, p: Point<R>) -> Cplx<R> {
        self.material_at(p).sqrt() * self.k
    }

    /// Checks parameter ranges and the permittivity invariants near the
    /// top/bottom boundaries.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.period > R::zero()) {
            return bad("period L must be positive");
        }
        if !(self.half_height > R::zero()) {
            return bad("half-height H must be positive");
        }
        if !(self.k > R::zero()) {
            return bad("wavenumber k must be positive");
        }
        if self.theta < -R::PI() || self.theta > R::zero() {
            return bad("incidence angle theta must lie in [-pi, 0]");
        }
        if !(self.eps_plus > R::zero()) {
            return bad("eps_plus must be real positive");
        }
        if !(self.eps_minus.re > R::zero()) || self.eps_minus.im < R::zero() {
            return bad("eps_minus must have Re > 0 and Im >= 0");
        }
        self.flux.validate()?;
        // Material must equal eps_plus just below x2 = H and eps_minus just
        // above x2 = -H: obstacles and interfaces stay strictly inside.
        let tau = self.half_height * R::of(1e-6);
        let samples = 17;
        for i in 0..samples {
            let x1 = self.period * R::of((i as f64 + 0.5) / samples as f64);
            let top = self.material_at([x1, self.half_height - tau]);
            let bottom = self.material_at([x1, -self.half_height + tau]);
            let tol = R::of(1e-12);
            if (top - Complex::new(self.eps_plus, R::zero())).norm() > tol {
                return bad("permittivity next to the top boundary must equal eps_plus");
            }
            if (bottom - self.eps_minus).norm() > tol {
                return bad("permittivity next to the bottom boundary must equal eps_minus");
            }
            if self.in_obstacle([x1, self.half_height - tau])
                || self.in_obstacle([x1, -self.half_height + tau])
            {
                return bad("obstacles must lie strictly inside |x2| < H");
            }
        }
        Ok(())
    }
}

/// Even-odd ray-crossing point-in-polygon test.
///
/// Points within a small relative tolerance of an edge count as inside, so
/// that material lookups are stable for points on region boundaries shared
/// by the background.
pub fn point_in_polygon<R: Real>(poly: &[Point<R>], p: Point<R>) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut scale = R::zero();
    for v in poly {
        scale = scale.max(v[0].abs()).max(v[1].abs());
    }
    let tol = scale * R::of(1e-12);
    // Boundary proximity counts as inside.
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if dist_point_segment(p, a, b) <= tol {
            return true;
        }
    }
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let t = (p[1] - a[1]) / (b[1] - a[1]);
            let x = a[0] + t * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn dist_point_segment<R: Real>(p: Point<R>, a: Point<R>, b: Point<R>) -> R {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = dot(ab, ab);
    if len2 == R::zero() {
        return norm2(ap);
    }
    let t = (dot(ap, ab) / len2).max(R::zero()).min(R::one());
    norm2(sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

/// Face classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Shared by two elements inside the domain.
    Interior,
    /// Identified pair of left (x1=0) and right (x1=L) boundary segments.
    PeriodicPair,
    /// Obstacle boundary with homogeneous Dirichlet condition.
    DirichletGammaD,
    /// Face on the top boundary x2 = H.
    Top,
    /// Face on the bottom boundary x2 = -H.
    Bottom,
}

/// One mesh face with its geometry as seen from each adjacent element.
///
/// For a `PeriodicPair` face, `elem1` is the element adjacent to the left
/// boundary and `(a1,b1)` its segment at x1 = 0, while `elem2` is the right
/// element with `(a2,b2)` at x1 = L; `(a2,b2) = (a1,b1) + (L,0)`. For all
/// other kinds the two segments coincide.
#[derive(Debug, Clone)]
pub struct Face<R: Real> {
    pub kind: FaceKind,
    pub elem1: usize,
    pub elem2: Option<usize>,
    pub a1: Point<R>,
    pub b1: Point<R>,
    pub a2: Point<R>,
    pub b2: Point<R>,
    /// Unit normal from `elem1` into `elem2` (outward on boundary faces).
    pub normal: Point<R>,
    pub length: R,
}

/// A convex mesh element with constant material.
#[derive(Debug, Clone)]
pub struct Element<R: Real> {
    /// Vertex indices in counterclockwise order.
    pub vertices: Vec<usize>,
    pub eps: Cplx<R>,
    /// Local wavenumber kappa = k sqrt(eps).
    pub kappa: Cplx<R>,
}

/// Quasi-periodic mesh of the periodic cell.
#[derive(Debug, Clone)]
pub struct Mesh<R: Real> {
    pub vertices: Vec<Point<R>>,
    pub elements: Vec<Element<R>>,
    pub faces: Vec<Face<R>>,
    /// Indices into `faces` of the PeriodicPair faces.
    pub periodic_faces: Vec<usize>,
    pub period: R,
    pub half_height: R,
}

impl<R: Real> Mesh<R> {
    pub fn element_polygon(&self, e: usize) -> Vec<Point<R>> {
        self.elements[e].vertices.iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn element_centroid(&self, e: usize) -> Point<R> {
        let poly = self.element_polygon(e);
        let n = R::of(poly.len() as f64);
        let mut c = [R::zero(), R::zero()];
        for p in &poly {
            c[0] += p[0];
            c[1] += p[1];
        }
        [c[0] / n, c[1] / n]
    }

    pub fn element_area(&self, e: usize) -> R {
        polygon_area(&self.element_polygon(e))
    }

    /// Longest edge over all elements.
    pub fn mesh_width(&self) -> R {
        let mut h = R::zero();
        for f in &self.faces {
            h = h.max(f.length);
        }
        h
    }

    /// Index of the element containing a point, if any (lowest id wins).
    pub fn locate(&self, p: Point<R>) -> Option<usize> {
        let tol = (self.period + self.half_height) * R::of(1e-12);
        (0..self.elements.len()).find(|&e| {
            let poly = self.element_polygon(e);
            point_in_convex_polygon(&poly, p, tol)
        })
    }
}

/// Containment test for a convex CCW polygon with an absolute tolerance.
pub fn point_in_convex_polygon<R: Real>(poly: &[Point<R>], p: Point<R>, tol: R) -> bool {
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if cross < -tol * norm2(sub(b, a)) {
            return false;
        }
    }
    true
}

pub fn polygon_area<R: Real>(poly: &[Point<R>]) -> R {
    let n = poly.len();
    let mut s = R::zero();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    s / R::of(2.0)
}

/// Parses the plain-text mesh format and builds a classified mesh.
///
/// Format: header `tdgmesh 1`; `vertices N` followed by N lines `x1 x2`;
/// `elements M` followed by M lines `n v1 ... vn region_id`;
/// `regions R` followed by R lines `region_id eps_re eps_im`.
pub fn ingest_mesh<R: Real>(text: &str, config: &ProblemConfig<R>) -> Result<Mesh<R>> {
    let mut tokens = text.split_whitespace();
    let mut next = || tokens.next().ok_or_else(|| Error::Parse("unexpected end of mesh file".into()));
    let magic = next()?;
    let version = next()?;
    if magic != "tdgmesh" || version != "1" {
        return Err(Error::Parse(format!("bad mesh header: {magic} {version}")));
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse(format!("expected integer, got {s:?}")))
    };
    let parse_real = |s: &str| {
        s.parse::<f64>()
            .map(R::of)
            .map_err(|_| Error::Parse(format!("expected number, got {s:?}")))
    };

    let kw = next()?;
    if kw != "vertices" {
        return Err(Error::Parse(format!("expected 'vertices', got {kw:?}")));
    }
    let nv = parse_usize(next()?)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = parse_real(next()?)?;
        let y = parse_real(next()?)?;
        vertices.push([x, y]);
    }

    let kw = next()?;
    if kw != "elements" {
        return Err(Error::Parse(format!("expected 'elements', got {kw:?}")));
    }
    let ne = parse_usize(next()?)?;
    let mut element_vertices = Vec::with_capacity(ne);
    let mut element_regions = Vec::with_capacity(ne);
    for _ in 0..ne {
        let n = parse_usize(next()?)?;
        if n < 3 {
            return Err(Error::Parse("element with fewer than 3 vertices".into()));
        }
        let mut vs = Vec::with_capacity(n);
        for _ in 0..n {
            let v = parse_usize(next()?)?;
            if v >= nv {
                return Err(Error::Parse(format!("vertex index {v} out of range")));
            }
            vs.push(v);
        }
        element_vertices.push(vs);
        element_regions.push(parse_usize(next()?)?);
    }

    let kw = next()?;
    if kw != "regions" {
        return Err(Error::Parse(format!("expected 'regions', got {kw:?}")));
    }
    let nr = parse_usize(next()?)?;
    let mut region_eps = std::collections::BTreeMap::new();
    for _ in 0..nr {
        let id = parse_usize(next()?)?;
        let re = parse_real(next()?)?;
        let im = parse_real(next()?)?;
        region_eps.insert(id, Complex::new(re, im));
    }

    let mut element_eps = Vec::with_capacity(ne);
    for &rid in &element_regions {
        let eps = region_eps
            .get(&rid)
            .ok_or_else(|| Error::Parse(format!("element references unknown region {rid}")))?;
        element_eps.push(*eps);
    }

    build_mesh(vertices, element_vertices, element_eps, config)
}

/// Assembles the face structure, pairing and invariants from raw element data.
pub fn build_mesh<R: Real>(
    mut vertices: Vec<Point<R>>,
    element_vertices: Vec<Vec<usize>>,
    element_eps: Vec<Cplx<R>>,
    config: &ProblemConfig<R>,
) -> Result<Mesh<R>> {
    let period = config.period;
    let half_height = config.half_height;
    let tol = period * R::of(1e-9);

    // Snap coordinates onto the exact cell boundary so classification and
    // the spectral trace formulas see x2 = +-H and x1 in {0, L} exactly.
    for v in vertices.iter_mut() {
        if (v[0]).abs() <= tol {
            v[0] = R::zero();
        }
        if (v[0] - period).abs() <= tol {
            v[0] = period;
        }
        if (v[1] - half_height).abs() <= tol {
            v[1] = half_height;
        }
        if (v[1] + half_height).abs() <= tol {
            v[1] = -half_height;
        }
    }

    let mut elements = Vec::with_capacity(element_vertices.len());
    for (e, mut vs) in element_vertices.into_iter().enumerate() {
        let poly: Vec<Point<R>> = vs.iter().map(|&v| vertices[v]).collect();
        let area = polygon_area(&poly);
        if area.abs() <= tol * tol {
            return Err(Error::Geometry(format!("element {e} is degenerate")));
        }
        if area < R::zero() {
            vs.reverse();
        }
        let poly: Vec<Point<R>> = vs.iter().map(|&v| vertices[v]).collect();
        if !is_convex(&poly) {
            return Err(Error::Geometry(format!("element {e} is not convex")));
        }
        // All vertices, shrunk slightly towards the centroid, must see the
        // same material as the centroid: no straddling of interfaces.
        let centroid = {
            let n = R::of(poly.len() as f64);
            let mut c = [R::zero(), R::zero()];
            for p in &poly {
                c[0] += p[0];
                c[1] += p[1];
            }
            [c[0] / n, c[1] / n]
        };
        let mat = config.material_at(centroid);
        let shrink = R::of(1e-6);
        for p in &poly {
            let q = [
                p[0] + (centroid[0] - p[0]) * shrink,
                p[1] + (centroid[1] - p[1]) * shrink,
            ];
            if (config.material_at(q) - mat).norm() > R::of(1e-9) {
                return Err(Error::MaterialStraddle { element: e });
            }
        }
        let eps = element_eps[e];
        if (eps - mat).norm() > R::of(1e-9) * (R::one() + mat.norm()) {
            return Err(Error::MaterialStraddle { element: e });
        }
        let kappa = eps.sqrt() * config.k;
        elements.push(Element { vertices: vs, eps, kappa });
    }

    // Edge -> adjacent elements.
    use std::collections::BTreeMap;
    let mut edge_map: BTreeMap<(usize, usize), Vec<(usize, usize, usize)>> = BTreeMap::new();
    for (e, el) in elements.iter().enumerate() {
        let n = el.vertices.len();
        for i in 0..n {
            let v = el.vertices[i];
            let w = el.vertices[(i + 1) % n];
            let key = (v.min(w), v.max(w));
            edge_map.entry(key).or_default().push((e, v, w));
        }
    }

    let mut faces: Vec<Face<R>> = Vec::new();
    let mut left_edges: Vec<(usize, usize, usize)> = Vec::new();
    let mut right_edges: Vec<(usize, usize, usize)> = Vec::new();

    for (&(_, _), adj) in edge_map.iter() {
        match adj.len() {
            1 => {
                let (e, v, w) = adj[0];
                let a = vertices[v];
                let b = vertices[w];
                let normal = outward_normal(a, b);
                let length = norm2(sub(b, a));
                if a[1] == half_height && b[1] == half_height {
                    faces.push(Face {
                        kind: FaceKind::Top,
                        elem1: e,
                        elem2: None,
                        a1: a,
                        b1: b,
                        a2: a,
                        b2: b,
                        normal,
                        length,
                    });
                } else if a[1] == -half_height && b[1] == -half_height {
                    faces.push(Face {
                        kind: FaceKind::Bottom,
                        elem1: e,
                        elem2: None,
                        a1: a,
                        b1: b,
                        a2: a,
                        b2: b,
                        normal,
                        length,
                    });
                } else if a[0] == R::zero() && b[0] == R::zero() {
                    left_edges.push((e, v, w));
                } else if a[0] == period && b[0] == period {
                    right_edges.push((e, v, w));
                } else {
                    faces.push(Face {
                        kind: FaceKind::DirichletGammaD,
                        elem1: e,
                        elem2: None,
                        a1: a,
                        b1: b,
                        a2: a,
                        b2: b,
                        normal,
                        length,
                    });
                }
            }
            2 => {
                let (e1, v1, w1) = adj[0];
                let (e2, _, _) = adj[1];
                let (lo, hi) = (e1.min(e2), e1.max(e2));
                // Orient the segment CCW with respect to the lower-id element.
                let (v, w) = if lo == e1 { (v1, w1) } else { (adj[1].1, adj[1].2) };
                let a = vertices[v];
                let b = vertices[w];
                faces.push(Face {
                    kind: FaceKind::Interior,
                    elem1: lo,
                    elem2: Some(hi),
                    a1: a,
                    b1: b,
                    a2: a,
                    b2: b,
                    normal: outward_normal(a, b),
                    length: norm2(sub(b, a)),
                });
            }
            n => {
                return Err(Error::Geometry(format!("edge shared by {n} elements")));
            }
        }
    }

    // Quasi-periodic pairing of left (x1=0) and right (x1=L) segments by
    // their x2 intervals.
    let interval = |v: usize, w: usize| {
        let (ya, yb) = (vertices[v][1], vertices[w][1]);
        if ya <= yb {
            (ya, yb)
        } else {
            (yb, ya)
        }
    };
    let mut right_used = vec![false; right_edges.len()];
    let mut periodic_faces = Vec::new();
    for &(el, vl, wl) in &left_edges {
        let (lo_l, hi_l) = interval(vl, wl);
        let mut matched = None;
        for (ri, &(er, vr, wr)) in right_edges.iter().enumerate() {
            if right_used[ri] {
                continue;
            }
            let (lo_r, hi_r) = interval(vr, wr);
            if (lo_l - lo_r).abs() <= tol && (hi_l - hi_r).abs() <= tol {
                matched = Some((ri, er));
                break;
            }
        }
        let Some((ri, er)) = matched else {
            return Err(Error::PeriodicityViolation(format!(
                "left face x2 in [{}, {}] has no matching right face",
                lo_l.to_f64_lossy(),
                hi_l.to_f64_lossy()
            )));
        };
        right_used[ri] = true;
        // Segment oriented CCW for the left element; the right copy is the
        // exact translate by (L, 0).
        let a1 = vertices[vl];
        let b1 = vertices[wl];
        let a2 = [a1[0] + period, a1[1]];
        let b2 = [b1[0] + period, b1[1]];
        periodic_faces.push(faces.len());
        faces.push(Face {
            kind: FaceKind::PeriodicPair,
            elem1: el,
            elem2: Some(er),
            a1,
            b1,
            a2,
            b2,
            // Outward normal of the left element: (-1, 0).
            normal: [-R::one(), R::zero()],
            length: norm2(sub(b1, a1)),
        });
    }
    if let Some(ri) = right_used.iter().position(|&u| !u) {
        let (_, vr, wr) = right_edges[ri];
        let (lo, hi) = interval(vr, wr);
        return Err(Error::PeriodicityViolation(format!(
            "right face x2 in [{}, {}] has no matching left face",
            lo.to_f64_lossy(),
            hi.to_f64_lossy()
        )));
    }

    let mesh = Mesh { vertices, elements, faces, periodic_faces, period, half_height };

    // Area invariant: element areas must fill the cell minus the obstacles.
    let mut area = R::zero();
    for e in 0..mesh.elements.len() {
        area += mesh.element_area(e);
    }
    let mut expected = period * half_height * R::of(2.0);
    for poly in &config.obstacles {
        expected -= polygon_area(poly).abs();
    }
    if ((area - expected) / expected).abs() > R::epsilon() * R::of(1e4) {
        return Err(Error::Geometry(format!(
            "mesh area {} does not match domain area {}",
            area.to_f64_lossy(),
            expected.to_f64_lossy()
        )));
    }

    Ok(mesh)
}

fn is_convex<R: Real>(poly: &[Point<R>]) -> bool {
    let n = poly.len();
    let mut scale = R::zero();
    for i in 0..n {
        scale = scale.max(norm2(sub(poly[(i + 1) % n], poly[i])));
    }
    let tol = -scale * scale * R::of(1e-12);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross < tol {
            return false;
        }
    }
    true
}

/// Outward normal of the element on a CCW-oriented edge (a, b).
fn outward_normal<R: Real>(a: Point<R>, b: Point<R>) -> Point<R> {
    let t = sub(b, a);
    let len = norm2(t);
    [t[1] / len, -t[0] / len]
}

/// Writes the structured mesh of a rectangle/layer/box configuration in the
/// plain-text mesh format.
///
/// Grid lines are forced at every x1/x2 coordinate appearing in region or
/// obstacle polygons, then each strip is subdivided uniformly so that no
/// cell side exceeds `h`. Cells are split into two triangles; cells inside
/// an obstacle are omitted. Elements are emitted row-by-row (bottom to top)
/// so that the assembled system has small bandwidth.
pub fn structured_mesh_text<R: Real>(config: &ProblemConfig<R>, h: R) -> Result<String> {
    if !(h > R::zero()) {
        return Err(Error::InvalidInput("mesh width h must be positive".into()));
    }
    let period = config.period;
    let half_height = config.half_height;

    let mut xcuts: Vec<R> = vec![R::zero(), period];
    let mut ycuts: Vec<R> = vec![-half_height, half_height];
    for poly in config
        .regions
        .iter()
        .map(|r| &r.polygon)
        .chain(config.obstacles.iter())
    {
        for p in poly {
            if p[0] > R::zero() && p[0] < period {
                xcuts.push(p[0]);
            }
            if p[1] > -half_height && p[1] < half_height {
                ycuts.push(p[1]);
            }
        }
    }
    let xs = subdivide(dedup_sorted(xcuts, period * R::of(1e-12)), h);
    let ys = subdivide(dedup_sorted(ycuts, half_height * R::of(1e-12)), h);
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;

    let vid = |ix: usize, iy: usize| iy * (nx + 1) + ix;
    let mut out = String::new();
    out.push_str("tdgmesh 1\n");
    out.push_str(&format!("vertices {}\n", (nx + 1) * (ny + 1)));
    for y in &ys {
        for x in &xs {
            out.push_str(&format!("{} {}\n", x.to_f64_lossy(), y.to_f64_lossy()));
        }
    }

    // Assign region ids per distinct material, in order of appearance.
    let mut materials: Vec<Cplx<R>> = Vec::new();
    let mut material_id = |eps: Cplx<R>| -> usize {
        match materials.iter().position(|&m| (m - eps).norm() < R::of(1e-12)) {
            Some(i) => i,
            None => {
                materials.push(eps);
                materials.len() - 1
            }
        }
    };

    let third = R::of(1.0 / 3.0);
    let mut elems: Vec<(usize, usize, usize, usize)> = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let (x0, x1) = (xs[ix], xs[ix + 1]);
            let (y0, y1) = (ys[iy], ys[iy + 1]);
            let cell_center = [
                (x0 + x1) * R::of(0.5),
                (y0 + y1) * R::of(0.5),
            ];
            if config.in_obstacle(cell_center) {
                continue;
            }
            let (v00, v10) = (vid(ix, iy), vid(ix + 1, iy));
            let (v01, v11) = (vid(ix, iy + 1), vid(ix + 1, iy + 1));
            // Lower-right triangle (v00, v10, v11) and upper-left (v00, v11, v01).
            for tri in [[v00, v10, v11], [v00, v11, v01]] {
                let centroid = [
                    (x0 + x1 + if tri == [v00, v10, v11] { x1 } else { x0 }) * third,
                    (y0 + y1 + if tri == [v00, v10, v11] { y0 } else { y1 }) * third,
                ];
                let rid = material_id(config.material_at(centroid));
                elems.push((tri[0], tri[1], tri[2], rid));
            }
        }
    }

    out.push_str(&format!("elements {}\n", elems.len()));
    for (a, b, c, rid) in &elems {
        out.push_str(&format!("3 {a} {b} {c} {rid}\n"));
    }
    out.push_str(&format!("regions {}\n", materials.len()));
    for (i, eps) in materials.iter().enumerate() {
        out.push_str(&format!(
            "{} {} {}\n",
            i,
            eps.re.to_f64_lossy(),
            eps.im.to_f64_lossy()
        ));
    }
    Ok(out)
}

/// Generates a structured mesh and ingests it.
pub fn build_structured<R: Real>(config: &ProblemConfig<R>, h: R) -> Result<Mesh<R>> {
    ingest_mesh(&structured_mesh_text(config, h)?, config)
}

fn dedup_sorted<R: Real>(mut v: Vec<R>, tol: R) -> Vec<R> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<R> = Vec::new();
    for x in v {
        if out.last().map_or(true, |&l| (x - l) > tol) {
            out.push(x);
        }
    }
    out
}

fn subdivide<R: Real>(cuts: Vec<R>, h: R) -> Vec<R> {
    let mut out = vec![cuts[0]];
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((b - a) / h).ceil().max(R::one()).to_f64_lossy() as usize;
        for i in 1..=n {
            let t = R::of(i as f64 / n as f64);
            out.push(a + (b - a) * t);
        }
        // Make interval ends exact.
        *out.last_mut().unwrap() = b;
    }
    out
}

/// Diagnostic report of the non-trapping condition.
#[derive(Debug, Clone)]
pub struct NonTrappingReport {
    pub satisfied: bool,
    /// Monotonicity is only defined for real permittivities.
    pub monotonicity_applicable: bool,
    pub violations: Vec<String>,
    /// True when eps is 1 everywhere and there is no obstacle.
    pub trivial_scattering: bool,
}

/// Checks the non-trapping condition: `n2 x2 <= 0` on obstacle boundaries
/// (n pointing from the domain into the obstacle) and permittivity
/// non-decreasing along |x2| on vertical sample lines.
pub fn check_non_trapping<R: Real>(config: &ProblemConfig<R>) -> NonTrappingReport {
    let mut violations = Vec::new();

    for (oi, poly) in config.obstacles.iter().enumerate() {
        let ccw = polygon_area(poly) > R::zero();
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let t = sub(b, a);
            let len = norm2(t);
            if len == R::zero() {
                continue;
            }
            // Unit normal pointing from the domain into the obstacle.
            let n2 = if ccw { t[0] / len } else { -t[0] / len };
            let tol = config.half_height * R::of(1e-12);
            for s in [R::zero(), R::of(0.5), R::one()] {
                let x2 = a[1] + t[1] * s;
                if n2 * x2 > tol {
                    violations.push(format!(
                        "obstacle {oi}: n2*x2 = {} > 0 on edge {i}",
                        (n2 * x2).to_f64_lossy()
                    ));
                    break;
                }
            }
        }
    }

    let mut complex_material = config.eps_minus.im != R::zero();
    for r in &config.regions {
        if r.eps.im != R::zero() {
            complex_material = true;
        }
    }

    if !complex_material {
        // Sample epsilon between consecutive region-interface crossings on
        // vertical lines and check monotonicity away from x2 = 0.
        let mut xsamples: Vec<R> = (0..16)
            .map(|i| config.period * R::of((i as f64 + 0.5) / 16.0))
            .collect();
        let mut cuts: Vec<R> = vec![R::zero(), config.period];
        for r in &config.regions {
            for p in &r.polygon {
                if p[0] > R::zero() && p[0] < config.period {
                    cuts.push(p[0]);
                }
            }
        }
        let cuts = dedup_sorted(cuts, config.period * R::of(1e-12));
        for w in cuts.windows(2) {
            xsamples.push((w[0] + w[1]) * R::of(0.5));
        }

        for &x1 in &xsamples {
            let mut levels: Vec<R> = vec![-config.half_height, R::zero(), config.half_height];
            for r in &config.regions {
                for p in &r.polygon {
                    if p[1].abs() < config.half_height {
                        levels.push(p[1]);
                    }
                }
            }
            let levels = dedup_sorted(levels, config.half_height * R::of(1e-12));
            let eps_at = |y: R| config.material_at([x1, y]).re;
            let mids: Vec<(R, R)> = levels
                .windows(2)
                .map(|w| {
                    let m = (w[0] + w[1]) * R::of(0.5);
                    (m, eps_at(m))
                })
                .collect();
            let tol = R::of(1e-12);
            // Going up from x2 = 0 and going down from x2 = 0, eps must not decrease.
            for w in mids.iter().filter(|(m, _)| *m > R::zero()).collect::<Vec<_>>().windows(2) {
                if w[1].1 < w[0].1 - tol {
                    violations.push(format!(
                        "eps decreases from {} to {} above x2=0 at x1 = {}",
                        w[0].1.to_f64_lossy(),
                        w[1].1.to_f64_lossy(),
                        x1.to_f64_lossy()
                    ));
                }
            }
            let below: Vec<_> = mids.iter().filter(|(m, _)| *m < R::zero()).collect();
            for w in below.windows(2) {
                // below is ordered by increasing x2, i.e. decreasing |x2|.
                if w[0].1 < w[1].1 - tol {
                    violations.push(format!(
                        "eps decreases from {} to {} below x2=0 at x1 = {}",
                        w[1].1.to_f64_lossy(),
                        w[0].1.to_f64_lossy(),
                        x1.to_f64_lossy()
                    ));
                }
            }
            if violations.len() > 20 {
                break;
            }
        }
    }

    let trivial = config.obstacles.is_empty()
        && !complex_material
        && (config.eps_plus - R::one()).abs() < R::of(1e-14)
        && (config.eps_minus - Complex::new(R::one(), R::zero())).norm() < R::of(1e-14)
        && config
            .regions
            .iter()
            .all(|r| (r.eps - Complex::new(R::one(), R::zero())).norm() < R::of(1e-14));

    NonTrappingReport {
        satisfied: violations.is_empty(),
        monotonicity_applicable: !complex_material,
        violations,
        trivial_scattering: trivial,
    }
}

/// Convenience constructor for axis-aligned rectangles.
pub fn rect<R: Real>(x0: R, x1: R, y0: R, y1: R) -> Vec<Point<R>> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}
