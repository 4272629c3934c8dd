use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm};

/// Closed half-space `⟨normal, x⟩ <= offset` with a unit normal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Facet {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let l = norm(&normal);
        if !(l > 0.0 && l.is_finite() && offset.is_finite()) {
            return Err(Error::InvalidInput("facet normal must be finite and nonzero".into()));
        }
        Ok(Facet { normal: normal.iter().map(|x| x / l).collect(), offset: offset / l })
    }

    pub fn slack(&self, x: &[f64]) -> f64 {
        self.offset - dot(&self.normal, x)
    }
}

/// Convex polytope in `[0,1]^d` with both representations and cached volume.
#[derive(Debug, Clone)]
pub struct Polytope {
    d: usize,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Facet>,
    /// Vertex indices on each facet.
    incidence: Vec<Vec<usize>>,
    volume: f64,
}

pub const VERTEX_TOL: f64 = 1e-12;
const HULL_TOL: f64 = 1e-10;
const INTERIOR_SLACK: f64 = 1e-9;

fn subsets(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Supporting facets of the convex hull of `points` (full-dimensional input).
fn hull_facets(points: &[Vec<f64>]) -> Vec<Facet> {
    let d = points[0].len();
    let mut facets: Vec<Facet> = Vec::new();
    let scale = points.iter().flat_map(|p| p.iter()).fold(1.0f64, |a, &b| a.max(b.abs()));
    let tol = HULL_TOL * scale;
    subsets(points.len(), d, |idx| {
        let refs: Vec<&[f64]> = idx.iter().map(|&i| points[i].as_slice()).collect();
        let Some((mut n, mut c)) = linalg::hyperplane_through(&refs, 1e-9) else { return };
        let mut pos = false;
        let mut neg = false;
        for p in points {
            let s = dot(&n, p) - c;
            pos |= s > tol;
            neg |= s < -tol;
            if pos && neg {
                return;
            }
        }
        if pos {
            n.iter_mut().for_each(|x| *x = -*x);
            c = -c;
        }
        if !facets.iter().any(|f| linalg::norm(&linalg::sub(&f.normal, &n)) < 1e-9 && (f.offset - c).abs() < 1e-9) {
            facets.push(Facet { normal: n, offset: c });
        }
    });
    facets
}

/// Volume of the convex hull of `points` in `R^k` (`k >= 1`), any position.
pub(crate) fn hull_volume(points: &[Vec<f64>]) -> f64 {
    let k = points[0].len();
    if k == 1 {
        let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        return hi - lo;
    }
    let diffs: Vec<Vec<f64>> = points.iter().map(|p| linalg::sub(p, &points[0])).collect();
    if linalg::rank(&diffs, 1e-10) < k {
        return 0.0;
    }
    if k == 2 {
        let ordered = order_ccw(points);
        return shoelace(&ordered);
    }
    let facets = hull_facets(points);
    let refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    let c = linalg::centroid(&refs);
    let mut vol = 0.0;
    for f in &facets {
        let on: Vec<&Vec<f64>> = points.iter().filter(|p| (dot(&f.normal, p) - f.offset).abs() < HULL_TOL).collect();
        let basis = linalg::complement_basis(&f.normal);
        let projected: Vec<Vec<f64>> = on.iter().map(|p| basis.iter().map(|b| dot(b, p)).collect()).collect();
        let h = f.offset - dot(&f.normal, &c);
        vol += h * hull_volume(&projected) / k as f64;
    }
    vol
}

/// Counterclockwise order around the centroid; duplicates must be removed first.
pub(crate) fn order_ccw(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    let c = linalg::centroid(&refs);
    let mut v = points.to_vec();
    v.sort_by(|a, b| {
        let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
        let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
        ta.total_cmp(&tb)
    });
    v
}

pub(crate) fn shoelace(poly: &[Vec<f64>]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (&poly[i], &poly[(i + 1) % n]);
        s += a[0] * b[1] - a[1] * b[0];
    }
    s / 2.0
}

impl Polytope {
    /// Convex hull of `points`; interior points are discarded.
    pub fn from_vertices(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegeneratePolytope("no points".into()));
        }
        let d = points[0].len();
        if d < 1 || points.iter().any(|p| p.len() != d || p.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("points must share a dimension and be finite".into()));
        }
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for p in points {
            if !pts.iter().any(|q| linalg::norm(&linalg::sub(q, &p)) < VERTEX_TOL) {
                pts.push(p);
            }
        }
        let diffs: Vec<Vec<f64>> = pts.iter().map(|p| linalg::sub(p, &pts[0])).collect();
        if pts.len() <= d || linalg::rank(&diffs, 1e-10) < d {
            return Err(Error::DegeneratePolytope("points do not span the space".into()));
        }
        let facets = if d == 1 {
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            vec![Facet { normal: vec![-1.0], offset: -lo }, Facet { normal: vec![1.0], offset: hi }]
        } else {
            hull_facets(&pts)
        };
        // a vertex is a point whose incident facet normals span R^d
        let mut vertices = Vec::new();
        for p in &pts {
            let normals: Vec<Vec<f64>> =
                facets.iter().filter(|f| f.slack(p).abs() < HULL_TOL).map(|f| f.normal.clone()).collect();
            if linalg::rank(&normals, 1e-9) == d {
                vertices.push(p.clone());
            }
        }
        if d == 2 {
            vertices = order_ccw(&vertices);
        }
        Self::assemble(d, vertices, facets)
    }

    /// Intersection of half-spaces; redundant ones are dropped.
    pub fn from_halfspaces(facets: Vec<Facet>) -> Result<Self> {
        if facets.is_empty() {
            return Err(Error::DegeneratePolytope("no half-spaces".into()));
        }
        let d = facets[0].normal.len();
        let mut pts: Vec<Vec<f64>> = Vec::new();
        subsets(facets.len(), d, |idx| {
            let a: Vec<Vec<f64>> = idx.iter().map(|&i| facets[i].normal.clone()).collect();
            if linalg::rank(&a, 1e-10) < d {
                return;
            }
            let b: Vec<f64> = idx.iter().map(|&i| facets[i].offset).collect();
            if let Some(x) = linalg::solve(&a, &b) {
                if facets.iter().all(|f| f.slack(&x) > -1e-10) {
                    pts.push(x);
                }
            }
        });
        if pts.is_empty() {
            return Err(Error::DegeneratePolytope("half-spaces have no vertices (empty or unbounded)".into()));
        }
        Self::from_vertices(pts)
    }

    pub fn unit_cube(d: usize) -> Self {
        Self::axis_box(&vec![0.0; d], &vec![1.0; d]).expect("unit cube")
    }

    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = lo.len();
        let mut facets = Vec::with_capacity(2 * d);
        for k in 0..d {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            facets.push(Facet { normal: e.clone(), offset: hi[k] });
            e[k] = -1.0;
            facets.push(Facet { normal: e, offset: -lo[k] });
        }
        Self::from_halfspaces(facets)
    }

    fn assemble(d: usize, vertices: Vec<Vec<f64>>, facets: Vec<Facet>) -> Result<Self> {
        let incidence: Vec<Vec<usize>> = facets
            .iter()
            .map(|f| (0..vertices.len()).filter(|&i| f.slack(&vertices[i]).abs() < 1e-9).collect())
            .collect();
        let volume = if d == 1 {
            facets[0].offset + facets[1].offset
        } else if d == 2 {
            shoelace(&vertices).abs()
        } else {
            hull_volume(&vertices)
        };
        let p = Polytope { d, vertices, facets, incidence, volume };
        p.validate()?;
        Ok(p)
    }

    /// Checks the representation invariants.
    pub fn validate(&self) -> Result<()> {
        for v in &self.vertices {
            if v.iter().any(|&x| !(-VERTEX_TOL..=1.0 + VERTEX_TOL).contains(&x)) {
                return Err(Error::InvalidInput(format!("vertex {v:?} lies outside [0,1]^{}", self.d)));
            }
            for f in &self.facets {
                if f.slack(v) < -VERTEX_TOL {
                    return Err(Error::DegeneratePolytope(format!("vertex {v:?} violates a facet")));
                }
            }
        }
        for (i, on) in self.incidence.iter().enumerate() {
            let pts: Vec<Vec<f64>> = on.iter().map(|&k| linalg::sub(&self.vertices[k], &self.vertices[on[0]])).collect();
            if on.len() < self.d || linalg::rank(&pts, 1e-9) < self.d - 1 {
                return Err(Error::DegeneratePolytope(format!("facet {i} is not spanned by its vertices")));
            }
        }
        if self.volume < 1e-12 {
            return Err(Error::DegeneratePolytope(format!("volume {:e} is below 1e-12", self.volume)));
        }
        let w = self.interior_point();
        if self.facets.iter().any(|f| f.slack(&w) <= INTERIOR_SLACK) {
            return Err(Error::DegeneratePolytope("no interior witness".into()));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet_vertices(&self, i: usize) -> &[usize] {
        &self.incidence[i]
    }

    /// `λ(P)`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn interior_point(&self) -> Vec<f64> {
        let refs: Vec<&[f64]> = self.vertices.iter().map(|p| p.as_slice()).collect();
        linalg::centroid(&refs)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.facets.iter().all(|f| f.slack(x) >= -tol)
    }

    /// Vertex pairs spanning a 1-dimensional face.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.vertices.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let shared: Vec<Vec<f64>> = self
                    .incidence
                    .iter()
                    .zip(&self.facets)
                    .filter(|(on, _)| on.contains(&i) && on.contains(&j))
                    .map(|(_, f)| f.normal.clone())
                    .collect();
                if linalg::rank(&shared, 1e-9) == self.d - 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Polygon edges in counterclockwise order as `(start, end)` vertices.
    pub fn polygon_edges(&self) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        if self.d != 2 {
            return Err(Error::InvalidInput("polygon edges need d = 2".into()));
        }
        let n = self.vertices.len();
        Ok((0..n).map(|i| (self.vertices[i].clone(), self.vertices[(i + 1) % n].clone())).collect())
    }

    /// Image under `x ↦ (x_{perm[0]}, …)` followed by `x ↦ 1 − x` if `reflect`.
    pub fn transformed(&self, perm: &[usize], reflect: bool) -> Result<Self> {
        let map = |v: &[f64]| -> Vec<f64> {
            perm.iter().map(|&p| if reflect { 1.0 - v[p] } else { v[p] }).collect()
        };
        Self::from_vertices(self.vertices.iter().map(|v| map(v)).collect())
    }
}
