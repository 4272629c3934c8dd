use serde::Serialize;

use super::FourierCoefficient;
use crate::error::{Error, Result};
use crate::linalg;
use crate::geometry::{Polytope, SectionFunction3D};

const ORTHO_TOL: f64 = 1e-10;
const DEDUP_TOL: f64 = 1e-9;

/// Complete flag of a cell, as face indices from the largest face down.
#[derive(Debug, Clone, Serialize)]
pub struct FlagProvenance {
    pub cell: usize,
    /// `[edge, vertex]` for polygons, `[vertex]` for intervals.
    pub faces: Vec<usize>,
}

/// Orthonormal coefficient vectors `v` with `L_k(x) = ⟨v_k, x⟩`.
#[derive(Debug, Clone, Serialize)]
pub struct FlagTuple {
    pub vectors: Vec<Vec<f64>>,
    pub multiplicity: usize,
    pub provenance: Vec<FlagProvenance>,
}

/// Form tuples from complete flags, deduplicated by their set of directions
/// up to sign.
#[derive(Debug, Clone, Serialize)]
pub struct FlagFormSet {
    pub dim: usize,
    pub tuples: Vec<FlagTuple>,
    /// Flags enumerated before deduplication.
    pub flag_count: usize,
}

fn canonical(v: &[f64]) -> Vec<f64> {
    let first = v.iter().find(|x| x.abs() > DEDUP_TOL).copied().unwrap_or(1.0);
    v.iter().map(|x| if first < 0.0 { -x } else { *x }).collect()
}

fn direction_key(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut key: Vec<Vec<f64>> = vectors.iter().map(|v| canonical(v)).collect();
    key.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    key
}

fn same_key(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.iter().zip(b).all(|(u, v)| u.iter().zip(v).all(|(x, y)| (x - y).abs() < DEDUP_TOL))
}

/// Gram–Schmidt on a chain of normals, largest face first.
fn gram_schmidt(chain: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(chain.len());
    for v in chain {
        let w = linalg::orthogonalize(v, &out);
        let n = linalg::norm(&w);
        if n < 1e-9 {
            return Err(Error::DegeneratePolytope("flag normals are linearly dependent".into()));
        }
        out.push(w.into_iter().map(|x| x / n).collect());
    }
    Ok(out)
}

impl FlagFormSet {
    fn empty(dim: usize) -> Self {
        FlagFormSet { dim, tuples: Vec::new(), flag_count: 0 }
    }

    fn insert(&mut self, vectors: Vec<Vec<f64>>, prov: FlagProvenance) {
        self.flag_count += 1;
        let key = direction_key(&vectors);
        for t in &mut self.tuples {
            if same_key(&direction_key(&t.vectors), &key) {
                t.multiplicity += 1;
                t.provenance.push(prov);
                return;
            }
        }
        self.tuples.push(FlagTuple { vectors, multiplicity: 1, provenance: vec![prov] });
    }

    fn merge(&mut self, other: FlagFormSet) {
        for t in other.tuples {
            let key = direction_key(&t.vectors);
            self.flag_count += t.multiplicity;
            if let Some(m) = self.tuples.iter_mut().find(|m| same_key(&direction_key(&m.vectors), &key)) {
                m.multiplicity += t.multiplicity;
                m.provenance.extend(t.provenance);
            } else {
                self.tuples.push(t);
            }
        }
    }

    /// Largest `|⟨v_i, v_j⟩|`, `i ≠ j`, over all tuples.
    pub fn max_inner_product(&self) -> f64 {
        let mut m = 0.0f64;
        for t in &self.tuples {
            for i in 0..t.vectors.len() {
                for j in i + 1..t.vectors.len() {
                    m = m.max(t.vectors[i].iter().zip(&t.vectors[j]).map(|(a, b)| a * b).sum::<f64>().abs());
                }
            }
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_inner_product() > ORTHO_TOL {
            return Err(Error::DegeneratePolytope("flag forms are not orthogonal".into()));
        }
        Ok(())
    }
}

/// Forms of every complete flag (edge, endpoint) of a counterclockwise polygon.
pub fn polygon_flag_forms(vertices: &[[f64; 2]], cell: usize) -> Result<FlagFormSet> {
    let m = vertices.len();
    if m < 3 {
        return Err(Error::DegeneratePolytope("polygon needs at least 3 vertices".into()));
    }
    let mut set = FlagFormSet::empty(2);
    for i in 0..m {
        let (p, q) = (vertices[i], vertices[(i + 1) % m]);
        let e = [q[0] - p[0], q[1] - p[1]];
        let l = e[0].hypot(e[1]);
        if l < 1e-15 {
            return Err(Error::DegeneratePolytope(format!("edge {i} has zero length")));
        }
        let normal = vec![e[1] / l, -e[0] / l];
        // the endpoint's outward normal inside the edge
        for (vertex, sign) in [((i + 1) % m, 1.0), (i, -1.0)] {
            let inside = vec![sign * e[0] / l, sign * e[1] / l];
            let vectors = gram_schmidt(&[normal.clone(), inside])?;
            set.insert(vectors, FlagProvenance { cell, faces: vec![i, vertex] });
        }
    }
    set.validate()?;
    Ok(set)
}

/// Flag forms of a polytope of dimension 1 or 2 (the cells of a section).
pub fn flag_forms(a: &Polytope) -> Result<FlagFormSet> {
    match a.d() {
        1 => {
            let mut set = FlagFormSet::empty(1);
            for (i, f) in a.facets().iter().enumerate() {
                set.insert(vec![f.normal.clone()], FlagProvenance { cell: 0, faces: vec![i] });
            }
            Ok(set)
        }
        2 => {
            let v: Vec<[f64; 2]> = a.vertices().iter().map(|p| [p[0], p[1]]).collect();
            polygon_flag_forms(&v, 0)
        }
        d => Err(Error::InvalidInput(format!("flag forms are built for cells of dimension 1 or 2, not {d}"))),
    }
}

/// Union over the cells of a three-dimensional section.
pub fn flag_forms_of_cells(sec: &SectionFunction3D) -> Result<FlagFormSet> {
    let mut set = FlagFormSet::empty(2);
    for (j, c) in sec.cells.iter().enumerate() {
        set.merge(polygon_flag_forms(&c.vertices, j)?);
    }
    Ok(set)
}

/// `Σ_𝓛 1/(|n| Π_k (|L_k(n)| + 1))`.
pub fn flag_envelope(forms: &FlagFormSet, n: &[i64]) -> f64 {
    let nf: Vec<f64> = n.iter().map(|&k| k as f64).collect();
    let norm = nf.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return f64::INFINITY;
    }
    forms
        .tuples
        .iter()
        .map(|t| {
            let prod: f64 = t.vectors.iter().map(|v| v.iter().zip(&nf).map(|(a, b)| a * b).sum::<f64>().abs() + 1.0).product();
            1.0 / (norm * prod)
        })
        .sum()
}

/// `|π_k(n)|` for `k` from the full space down to a point: the norm of `n`
/// restricted to the span of the trailing flag vectors.
pub fn projection_chain_norms(tuple: &FlagTuple, n: &[i64]) -> Vec<f64> {
    let comps: Vec<f64> =
        tuple.vectors.iter().map(|v| v.iter().zip(n).map(|(a, &b)| a * b as f64).sum::<f64>()).collect();
    let mut out: Vec<f64> = (0..comps.len()).map(|j| comps[j..].iter().map(|c| c * c).sum::<f64>().sqrt()).collect();
    out.push(0.0);
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeFit {
    /// `max |f̂(n)| / envelope(n)` over the shell.
    pub c_fit: f64,
    pub argmax: Vec<i64>,
    pub count: usize,
    pub shell: (i64, i64),
}

/// Fits `C` over coefficients with `lo < |n|_∞ <= hi`.
pub fn fit_envelope_constant(coeffs: &[FourierCoefficient], forms: &FlagFormSet, lo: i64, hi: i64) -> EnvelopeFit {
    let mut fit = EnvelopeFit { c_fit: 0.0, argmax: Vec::new(), count: 0, shell: (lo, hi) };
    for c in coeffs {
        let r = c.n.iter().map(|k| k.abs()).max().unwrap_or(0);
        if r <= lo || r > hi {
            continue;
        }
        fit.count += 1;
        let ratio = c.abs() / flag_envelope(forms, &c.n);
        if ratio > fit.c_fit {
            fit.c_fit = ratio;
            fit.argmax = c.n.clone();
        }
    }
    fit
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_flags() {
        let set = flag_forms(&Polytope::unit_cube(2)).unwrap();
        assert_eq!(set.flag_count, 8);
        assert_eq!(set.tuples.len(), 1);
        assert_eq!(set.tuples[0].multiplicity, 8);
        let key = direction_key(&set.tuples[0].vectors);
        assert!(same_key(&key, &[vec![0.0, 1.0], vec![1.0, 0.0]]));
    }

    #[test]
    fn polygon_has_two_flags_per_edge() {
        let p = Polytope::from_vertices(vec![vec![0.1, 0.1], vec![0.9, 0.2], vec![0.7, 0.8], vec![0.2, 0.6], vec![0.05, 0.3]])
            .unwrap();
        let set = flag_forms(&p).unwrap();
        assert_eq!(set.flag_count, 10);
        assert!(set.max_inner_product() < 1e-10);
        for t in &set.tuples {
            for v in &t.vectors {
                assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interval_flags() {
        let set = flag_forms(&Polytope::axis_box(&[0.2], &[0.7]).unwrap()).unwrap();
        assert_eq!(set.flag_count, 2);
        assert_eq!(set.tuples.len(), 1);
        assert!((flag_envelope(&set, &[3]) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn envelope_is_even_and_positive() {
        let p = Polytope::from_vertices(vec![vec![0.1, 0.1], vec![0.9, 0.2], vec![0.3, 0.8]]).unwrap();
        let set = flag_forms(&p).unwrap();
        for n in [[1i64, 0], [3, -2], [-7, 11], [0, 5]] {
            let e = flag_envelope(&set, &n);
            assert!(e > 0.0);
            assert_eq!(e, flag_envelope(&set, &[-n[0], -n[1]]));
        }
    }

    #[test]
    fn projection_chain_is_nonincreasing() {
        let p = Polytope::from_vertices(vec![vec![0.1, 0.1], vec![0.9, 0.2], vec![0.3, 0.8]]).unwrap();
        let set = flag_forms(&p).unwrap();
        for t in &set.tuples {
            for n in [[1i64, 0], [3, -2], [-7, 11]] {
                let norms = projection_chain_norms(t, &n);
                let full = ((n[0] * n[0] + n[1] * n[1]) as f64).sqrt();
                assert!((norms[0] - full).abs() < 1e-12);
                assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
                assert_eq!(*norms.last().unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn dependent_chain_is_rejected() {
        assert!(gram_schmidt(&[vec![1.0, 0.0], vec![2.0, 0.0]]).is_err());
    }
}
