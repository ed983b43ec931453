//! Vietoris-Rips persistence for small point clouds.
//!
//! A simplex enters the filtration at the maximum pairwise distance of its
//! vertices. The fast path computes dimension-0 classes with a union-find
//! sweep over sorted edges and dimension-1 classes by reducing the *cofacet*
//! (transposed-boundary) matrix over Z/2: one column per cycle-creating edge,
//! holding the triangles that contain it, processed in reverse filtration
//! order with the earliest triangle as the pivot. Merge edges are skipped
//! (they are already paired in dimension 0) and columns stay unmaterialized
//! until another column actually needs them, so the typical cost per edge is
//! one linear scan over candidate apex vertices. An independent reference
//! implementation reduces the fully enumerated boundary matrix and is
//! intentionally limited to 8 points.
//!
//! Births and deaths are exact pairwise distances of the input (0 for
//! dimension-0 births); there is no discretization anywhere in this module.

use rayon::prelude::*;

use crate::diagram::{DiagramSample, OmegaBox, PersistenceDiagram, PersistencePair};
use crate::error::{Error, Result};

/// Hard cloud-size limit for [`rips_persistence`] with `max_dim = 0`.
pub const MAX_CLOUD_POINTS: usize = 4096;
/// Hard cloud-size limit for [`rips_persistence`] with `max_dim = 1`; the
/// triangle sweep is cubic in the worst case, so the cap is tighter.
pub const MAX_CLOUD_POINTS_H1: usize = 2048;
/// Cloud-size limit for the reference reduction [`rips_persistence_oracle`].
pub const ORACLE_LIMIT: usize = 8;

/// A finite point cloud in 2 or 3 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    // Stored padded to 3 coordinates; `dim` remembers the declared dimension.
    points: Vec<[f64; 3]>,
    dim: usize,
}

impl PointCloud {
    /// Builds a cloud from row vectors, validating shape and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let expected = rows[0].len();
        if expected != 2 && expected != 3 {
            return Err(Error::UnsupportedDimension(expected));
        }
        let mut points = Vec::with_capacity(rows.len());
        for (row, r) in rows.iter().enumerate() {
            if r.len() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    row,
                    got: r.len(),
                });
            }
            if r.iter().any(|c| !c.is_finite()) {
                return Err(Error::Config(format!(
                    "non-finite coordinate in point row {row}"
                )));
            }
            let mut p = [0.0; 3];
            p[..expected].copy_from_slice(r);
            points.push(p);
        }
        Ok(PointCloud {
            points,
            dim: expected,
        })
    }

    /// Builds a planar cloud.
    pub fn from_points(points: &[[f64; 2]]) -> Result<Self> {
        Self::from_rows(&points.iter().map(|p| p.to_vec()).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Declared coordinate dimension (2 or 3).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Point `i` as a row of `dim` coordinates.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i][..self.dim]
    }

    /// Euclidean distance between points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let a = self.points[i];
        let b = self.points[j];
        let dx = a[0] - b[0];
        let dy = a[1] - b[1];
        let dz = a[2] - b[2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// What to do with classes still alive when the filtration stops.
///
/// `Drop` removes them; `Cap` records them with death equal to the box side,
/// which keeps them inside the diagram domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EssentialPolicy {
    #[default]
    Drop,
    Cap,
}

/// Filtration parameters: highest homology dimension (0 or 1), edge-length
/// cap, and the policy for never-dying classes.
#[derive(Debug, Clone, Copy)]
pub struct FiltrationSpec {
    max_dim: usize,
    max_edge: f64,
    essential: EssentialPolicy,
}

impl FiltrationSpec {
    pub fn new(max_dim: usize, max_edge: f64, essential: EssentialPolicy) -> Result<Self> {
        if max_dim > 1 {
            return Err(Error::UnsupportedDimension(max_dim));
        }
        if !(max_edge.is_finite() && max_edge > 0.0) {
            return Err(Error::InvalidFiltration);
        }
        Ok(FiltrationSpec {
            max_dim,
            max_edge,
            essential,
        })
    }

    /// Spec whose edge cap is the full box side (the default cap).
    pub fn full(max_dim: usize, bbox: OmegaBox, essential: EssentialPolicy) -> Result<Self> {
        Self::new(max_dim, bbox.side(), essential)
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn max_edge(&self) -> f64 {
        self.max_edge
    }

    pub fn essential(&self) -> EssentialPolicy {
        self.essential
    }
}

/// Union-find with path halving and union by size.
struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns false if already joined.
    fn union(&mut self, a: u32, b: u32) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        true
    }
}

/// An edge of the distance graph in filtration order: length, then endpoint
/// indices as the deterministic tie-break.
#[derive(Debug, Clone, Copy)]
struct Edge {
    len: f64,
    u: u32,
    v: u32,
}

/// All edges with length at most `cap`, sorted by (length, u, v).
fn sorted_edges(cloud: &PointCloud, cap: f64) -> Vec<Edge> {
    let n = cloud.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let len = cloud.distance(u, v);
            if len <= cap {
                edges.push(Edge {
                    len,
                    u: u as u32,
                    v: v as u32,
                });
            }
        }
    }
    edges.sort_unstable_by(|a, b| {
        a.len
            .total_cmp(&b.len)
            .then(a.u.cmp(&b.u))
            .then(a.v.cmp(&b.v))
    });
    edges
}

/// Smallest radius at which some vertex is within reach of every other
/// vertex; beyond it the complex is a cone over that vertex, hence has no
/// dimension-1 classes. Zero for a single point.
fn enclosing_radius(cloud: &PointCloud) -> f64 {
    let n = cloud.len();
    if n <= 1 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        let mut worst = 0.0f64;
        for j in 0..n {
            if i != j {
                let d = cloud.distance(i, j);
                if d > worst {
                    worst = d;
                }
            }
        }
        if worst < best {
            best = worst;
        }
    }
    best
}

/// Symmetric difference of two ascending index lists (Z/2 column addition).
fn xor_sorted<T: Ord + Copy>(col: &mut Vec<T>, other: &[T]) {
    let mut out = Vec::with_capacity(col.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < col.len() && j < other.len() {
        match col[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                out.push(col[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&col[i..]);
    out.extend_from_slice(&other[j..]);
    *col = out;
}

/// Vietoris-Rips persistence diagram of a cloud, dimensions `0..=max_dim`.
///
/// Deterministic for fixed input; output pairs are sorted by
/// (dim, birth, death). Fails on clouds above the documented size limits
/// ([`MAX_CLOUD_POINTS`], [`MAX_CLOUD_POINTS_H1`]) or when `max_edge`
/// exceeds the box side.
pub fn rips_persistence(
    cloud: &PointCloud,
    spec: &FiltrationSpec,
    bbox: OmegaBox,
) -> Result<PersistenceDiagram> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::EmptyCloud);
    }
    let limit = if spec.max_dim >= 1 {
        MAX_CLOUD_POINTS_H1
    } else {
        MAX_CLOUD_POINTS
    };
    if n > limit {
        return Err(Error::CloudTooLarge { n, limit });
    }
    if spec.max_edge > bbox.side() {
        return Err(Error::MaxEdgeExceedsBox {
            max_edge: spec.max_edge,
            side: bbox.side(),
        });
    }

    let mut pairs: Vec<PersistencePair> = Vec::new();

    // Dimension 1 may stop edge enumeration at the enclosing radius: past it
    // the complex is a cone, so every 1-cycle is already dead. The shortcut
    // is only sound when the user's cap reaches that radius.
    let r_enc = enclosing_radius(cloud);
    let h1_cap = spec.max_edge.min(r_enc);
    let edges = sorted_edges(cloud, spec.max_edge);

    // Dimension 0: union-find sweep in filtration order. Every merge is a
    // death; the surviving components are essential.
    let mut uf = UnionFind::new(n);
    let mut positive = vec![false; edges.len()];
    for (t, e) in edges.iter().enumerate() {
        if uf.union(e.u, e.v) {
            pairs.push(PersistencePair::new(0.0, e.len, 0));
        } else {
            positive[t] = true;
        }
    }
    let components = (0..n as u32).filter(|&i| uf.find(i) == i).count();
    if let EssentialPolicy::Cap = spec.essential {
        for _ in 0..components {
            pairs.push(PersistencePair::new(0.0, bbox.side(), 0));
        }
    }

    if spec.max_dim >= 1 && n >= 3 {
        let e1 = edges.partition_point(|e| e.len <= h1_cap);
        // Triangle row keys pack the sorted edge ranks (r1 < r2 < r3) of the
        // three sides into 21 bits each; ascending key order is ascending
        // (r3, r2, r1), which refines filtration order because edges are
        // sorted. C(4096, 2) < 2^21, so ranks always fit.
        debug_assert!(e1 <= 1 << 21);
        const NO_KEY: u64 = u64::MAX;
        let pack = |t: u32, a: u32, b: u32| -> u64 {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if t > hi {
                (t as u64) << 42 | (hi as u64) << 21 | lo as u64
            } else if t < lo {
                (hi as u64) << 42 | (lo as u64) << 21 | t as u64
            } else {
                (hi as u64) << 42 | (t as u64) << 21 | lo as u64
            }
        };
        // Rank of each participating edge in filtration order, dense matrix
        // for O(1) lookup; absent edges get a sentinel above every rank.
        let mut rank = vec![u32::MAX; n * n];
        for (t, e) in edges.iter().take(e1).enumerate() {
            rank[e.u as usize * n + e.v as usize] = t as u32;
            rank[e.v as usize * n + e.u as usize] = t as u32;
        }
        // Cofacets of edge `t` are triangles (u, v, k) whose flanking edges
        // (u, k) and (v, k) are both within the cap. The diagonal of `rank`
        // stays at the sentinel, so k == u and k == v skip themselves.
        let cofacet_scan = |t: u32, keys: Option<&mut Vec<u64>>| -> u64 {
            let e = &edges[t as usize];
            let row_u = &rank[e.u as usize * n..e.u as usize * n + n];
            let row_v = &rank[e.v as usize * n..e.v as usize * n + n];
            let mut min_key = NO_KEY;
            let mut keys = keys;
            for k in 0..n {
                let a = row_u[k];
                if a == u32::MAX {
                    continue;
                }
                let b = row_v[k];
                if b == u32::MAX {
                    continue;
                }
                let key = pack(t, a, b);
                if let Some(buf) = keys.as_deref_mut() {
                    buf.push(key);
                }
                if key < min_key {
                    min_key = key;
                }
            }
            min_key
        };
        let expand = |t: u32| -> Vec<u64> {
            let mut keys = Vec::new();
            cofacet_scan(t, Some(&mut keys));
            keys.sort_unstable();
            keys
        };

        // Reduce one column per cycle-creating edge, latest edge first; merge
        // edges are already paired in dimension 0 and always reduce to zero,
        // so they are skipped. A column starts as the edge's cofacet list with
        // the earliest triangle as pivot; it is only materialized when a
        // pivot collision forces an actual Z/2 addition. A column that ends
        // empty is a class that outlives the truncated filtration.
        enum Owned {
            Unexpanded(u32),
            Expanded(Vec<u64>),
        }
        let mut owner: std::collections::HashMap<u64, Owned> = std::collections::HashMap::new();
        for t in (0..e1 as u32).rev() {
            if !positive[t as usize] {
                continue;
            }
            let mut col: Option<Vec<u64>> = None;
            let mut pivot = cofacet_scan(t, None);
            while pivot != NO_KEY {
                match owner.get_mut(&pivot) {
                    None => {
                        let birth = edges[t as usize].len;
                        let death = edges[(pivot >> 42) as usize].len;
                        if birth < death {
                            pairs.push(PersistencePair::new(birth, death, 1));
                        }
                        let column = match col.take() {
                            Some(c) => Owned::Expanded(c),
                            None => Owned::Unexpanded(t),
                        };
                        owner.insert(pivot, column);
                        break;
                    }
                    Some(owned) => {
                        if let Owned::Unexpanded(source) = *owned {
                            *owned = Owned::Expanded(expand(source));
                        }
                        let Owned::Expanded(other) = &*owned else {
                            unreachable!()
                        };
                        let c = col.get_or_insert_with(|| expand(t));
                        xor_sorted(c, other);
                        pivot = c.first().copied().unwrap_or(NO_KEY);
                    }
                }
            }
            if pivot == NO_KEY {
                debug_assert!(
                    h1_cap < r_enc,
                    "no unpaired cycles can survive past the enclosing radius"
                );
                if let EssentialPolicy::Cap = spec.essential {
                    pairs.push(PersistencePair::new(edges[t as usize].len, bbox.side(), 1));
                }
            }
        }
    }

    sort_pairs(&mut pairs);
    PersistenceDiagram::new(pairs, bbox)
}

fn sort_pairs(pairs: &mut [PersistencePair]) {
    pairs.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.total_cmp(&b.birth))
            .then(a.death.total_cmp(&b.death))
    });
}

/// Reference implementation: full boundary-matrix reduction over the complete
/// sorted simplex list (vertices, edges, triangles). Limited to
/// [`ORACLE_LIMIT`] points; identical contract and output to
/// [`rips_persistence`].
pub fn rips_persistence_oracle(
    cloud: &PointCloud,
    spec: &FiltrationSpec,
    bbox: OmegaBox,
) -> Result<PersistenceDiagram> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::EmptyCloud);
    }
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: ORACLE_LIMIT,
        });
    }
    if spec.max_edge > bbox.side() {
        return Err(Error::MaxEdgeExceedsBox {
            max_edge: spec.max_edge,
            side: bbox.side(),
        });
    }

    #[derive(Debug)]
    struct Simplex {
        value: f64,
        verts: Vec<u32>, // ascending
    }

    // Enumerate every simplex of dimension <= max_dim + 1 entering within
    // the edge cap; the simplex value is its maximum pairwise distance.
    let mut simplices: Vec<Simplex> = Vec::new();
    for i in 0..n as u32 {
        simplices.push(Simplex {
            value: 0.0,
            verts: vec![i],
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let len = cloud.distance(i, j);
            if len <= spec.max_edge {
                simplices.push(Simplex {
                    value: len,
                    verts: vec![i as u32, j as u32],
                });
            }
        }
    }
    if spec.max_dim >= 1 {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let value = cloud
                        .distance(i, j)
                        .max(cloud.distance(i, k))
                        .max(cloud.distance(j, k));
                    if value <= spec.max_edge {
                        simplices.push(Simplex {
                            value,
                            verts: vec![i as u32, j as u32, k as u32],
                        });
                    }
                }
            }
        }
    }
    // Filtration order: value, then dimension (faces precede cofaces at equal
    // value), then lexicographic vertices for determinism.
    simplices.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.verts.len().cmp(&b.verts.len()))
            .then(a.verts.cmp(&b.verts))
    });

    let index_of: std::collections::HashMap<Vec<u32>, usize> = simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.verts.clone(), i))
        .collect();

    let m = simplices.len();
    let mut cols: Vec<Vec<u32>> = Vec::with_capacity(m);
    for s in &simplices {
        let mut col: Vec<u32> = if s.verts.len() == 1 {
            Vec::new()
        } else {
            (0..s.verts.len())
                .map(|drop| {
                    let mut face = s.verts.clone();
                    face.remove(drop);
                    index_of[&face] as u32
                })
                .collect()
        };
        col.sort_unstable();
        cols.push(col);
    }

    // Standard column reduction over Z/2.
    let mut pivot_owner: Vec<Option<usize>> = vec![None; m];
    for j in 0..m {
        loop {
            let Some(&low) = cols[j].last() else { break };
            match pivot_owner[low as usize] {
                Some(k) => {
                    let other = cols[k].clone();
                    xor_sorted(&mut cols[j], &other);
                }
                None => {
                    pivot_owner[low as usize] = Some(j);
                    break;
                }
            }
        }
    }

    let mut pairs: Vec<PersistencePair> = Vec::new();
    for i in 0..m {
        if !cols[i].is_empty() {
            continue; // negative simplex: kills a class, creates none
        }
        let dim = (simplices[i].verts.len() - 1) as u32;
        if dim as usize > spec.max_dim {
            continue;
        }
        match pivot_owner[i] {
            Some(j) => {
                let birth = simplices[i].value;
                let death = simplices[j].value;
                if birth < death {
                    pairs.push(PersistencePair::new(birth, death, dim));
                }
            }
            None => {
                if let EssentialPolicy::Cap = spec.essential {
                    pairs.push(PersistencePair::new(simplices[i].value, bbox.side(), dim));
                }
            }
        }
    }
    sort_pairs(&mut pairs);
    PersistenceDiagram::new(pairs, bbox)
}

/// Element-wise [`rips_persistence`] over a list of clouds, order preserved.
/// Elements run in parallel; any element error is reported with its index.
pub fn batch_rips(
    clouds: &[PointCloud],
    spec: &FiltrationSpec,
    bbox: OmegaBox,
) -> Result<DiagramSample> {
    if clouds.is_empty() {
        return Err(Error::EmptySample);
    }
    let results: Vec<Result<PersistenceDiagram>> = clouds
        .par_iter()
        .map(|c| rips_persistence(c, spec, bbox))
        .collect();
    let mut diagrams = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(d) => diagrams.push(d),
            Err(e) => {
                return Err(Error::BatchElement {
                    index,
                    source: Box::new(e),
                })
            }
        }
    }
    DiagramSample::new(diagrams)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(side: f64) -> OmegaBox {
        OmegaBox::new(side).unwrap()
    }

    fn spec(max_dim: usize, max_edge: f64) -> FiltrationSpec {
        FiltrationSpec::new(max_dim, max_edge, EssentialPolicy::Drop).unwrap()
    }

    fn pairs_of(d: &PersistenceDiagram) -> Vec<(f64, f64, u32)> {
        d.pairs().iter().map(|p| (p.birth, p.death, p.dim)).collect()
    }

    #[test]
    fn two_points_single_merge() {
        let cloud = PointCloud::from_points(&[[0.0, 0.0], [0.5, 0.0]]).unwrap();
        let d = rips_persistence(&cloud, &spec(0, 1.0), boxed(1.0)).unwrap();
        assert_eq!(pairs_of(&d), vec![(0.0, 0.5, 0)]);
    }

    #[test]
    fn unit_square_h1() {
        let cloud =
            PointCloud::from_points(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let d = rips_persistence(&cloud, &spec(1, 2.0), boxed(2.0)).unwrap();
        let h1 = d.restrict_dim(1);
        assert_eq!(pairs_of(&h1), vec![(1.0, std::f64::consts::SQRT_2, 1)]);
        // Three merges at distance 1 in dimension 0.
        let h0 = d.restrict_dim(0);
        assert_eq!(pairs_of(&h0), vec![(0.0, 1.0, 0); 3]);
    }

    #[test]
    fn equilateral_triangle_has_no_h1() {
        let s = 0.8f64;
        let h = s * 3.0f64.sqrt() / 2.0;
        let cloud = PointCloud::from_points(&[[0.0, 0.0], [s, 0.0], [s / 2.0, h]]).unwrap();
        let d = rips_persistence(&cloud, &spec(1, 1.0), boxed(1.0)).unwrap();
        assert!(d.restrict_dim(1).is_empty());
        assert_eq!(d.restrict_dim(0).count(), 2);
    }

    #[test]
    fn single_point_and_capping() {
        let cloud = PointCloud::from_points(&[[0.3, 0.4]]).unwrap();
        let d = rips_persistence(&cloud, &spec(0, 1.0), boxed(1.0)).unwrap();
        assert!(d.is_empty());
        let cap = FiltrationSpec::new(0, 1.0, EssentialPolicy::Cap).unwrap();
        let d = rips_persistence(&cloud, &cap, boxed(1.0)).unwrap();
        assert_eq!(pairs_of(&d), vec![(0.0, 1.0, 0)]);
    }

    #[test]
    fn disconnected_components_with_small_cap() {
        let cloud = PointCloud::from_points(&[[0.0, 0.0], [0.5, 0.0]]).unwrap();
        let d = rips_persistence(&cloud, &spec(0, 0.3), boxed(1.0)).unwrap();
        assert!(d.is_empty());
        let cap = FiltrationSpec::new(0, 0.3, EssentialPolicy::Cap).unwrap();
        let d = rips_persistence(&cloud, &cap, boxed(1.0)).unwrap();
        assert_eq!(pairs_of(&d), vec![(0.0, 1.0, 0), (0.0, 1.0, 0)]);
    }

    #[test]
    fn truncation_makes_h1_essential() {
        // Unit square: the cycle born at 1 dies at sqrt(2); stopping the
        // filtration at 1.2 leaves it alive.
        let cloud =
            PointCloud::from_points(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let drop = FiltrationSpec::new(1, 1.2, EssentialPolicy::Drop).unwrap();
        let d = rips_persistence(&cloud, &drop, boxed(2.0)).unwrap();
        assert!(d.restrict_dim(1).is_empty());
        let cap = FiltrationSpec::new(1, 1.2, EssentialPolicy::Cap).unwrap();
        let d = rips_persistence(&cloud, &cap, boxed(2.0)).unwrap();
        assert_eq!(pairs_of(&d.restrict_dim(1)), vec![(1.0, 2.0, 1)]);
        let o = rips_persistence_oracle(&cloud, &cap, boxed(2.0)).unwrap();
        assert_eq!(pairs_of(&d), pairs_of(&o));
    }

    #[test]
    fn oracle_matches_on_examples() {
        let clouds = [
            PointCloud::from_points(&[[0.0, 0.0], [0.5, 0.0]]).unwrap(),
            PointCloud::from_points(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap(),
            PointCloud::from_points(&[[0.0, 0.0], [0.8, 0.0], [0.4, 0.6928203230275509]]).unwrap(),
        ];
        for cloud in &clouds {
            for max_dim in [0, 1] {
                let sp = spec(max_dim, 2.0);
                let fast = rips_persistence(cloud, &sp, boxed(2.0)).unwrap();
                let oracle = rips_persistence_oracle(cloud, &sp, boxed(2.0)).unwrap();
                assert_eq!(pairs_of(&fast), pairs_of(&oracle));
            }
        }
    }

    /// Deterministic 64-bit mixer used to derive test coordinates.
    fn splitmix(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn random_cloud(seed: u64, n: usize) -> PointCloud {
        let mut s = seed;
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                let x = (splitmix(&mut s) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                let y = (splitmix(&mut s) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                [x, y]
            })
            .collect();
        PointCloud::from_points(&pts).unwrap()
    }

    #[test]
    fn oracle_matches_random_five_points() {
        let cloud = random_cloud(42, 5);
        let sp = spec(1, 2.0);
        let fast = rips_persistence(&cloud, &sp, boxed(2.0)).unwrap();
        let oracle = rips_persistence_oracle(&cloud, &sp, boxed(2.0)).unwrap();
        assert_eq!(pairs_of(&fast), pairs_of(&oracle));
    }

    #[test]
    fn births_and_deaths_are_input_distances() {
        let cloud = random_cloud(7, 7);
        let mut dists = Vec::new();
        for i in 0..7 {
            for j in (i + 1)..7 {
                dists.push(cloud.distance(i, j));
            }
        }
        let d = rips_persistence(&cloud, &spec(1, 2.0), boxed(2.0)).unwrap();
        assert!(!d.is_empty());
        for p in d.pairs() {
            if p.dim == 0 {
                assert_eq!(p.birth, 0.0);
            } else {
                assert!(dists.contains(&p.birth), "birth {} not a distance", p.birth);
            }
            assert!(dists.contains(&p.death), "death {} not a distance", p.death);
        }
    }

    #[test]
    fn adding_a_point_adds_h0_mass() {
        for seed in [1u64, 2, 3, 4, 5] {
            let base = random_cloud(seed, 6);
            let mut rows: Vec<Vec<f64>> = (0..6).map(|i| base.row(i).to_vec()).collect();
            rows.push(vec![0.123, 0.456]);
            let bigger = PointCloud::from_rows(&rows).unwrap();
            // With the capping policy every component is recorded, so the
            // dimension-0 count (merges + survivors) is exactly N.
            let cap = FiltrationSpec::new(0, 2.0, EssentialPolicy::Cap).unwrap();
            let d6 = rips_persistence(&base, &cap, boxed(2.0)).unwrap();
            let d7 = rips_persistence(&bigger, &cap, boxed(2.0)).unwrap();
            assert_eq!(d6.count() + 1, d7.count());
        }
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            PointCloud::from_rows(&[]),
            Err(Error::EmptyCloud)
        ));
        assert!(matches!(
            PointCloud::from_rows(&[vec![1.0]]),
            Err(Error::UnsupportedDimension(1))
        ));
        assert!(matches!(
            PointCloud::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0, 3.0]]),
            Err(Error::DimensionMismatch {
                expected: 2,
                row: 1,
                got: 3
            })
        ));
        assert!(PointCloud::from_rows(&[vec![f64::NAN, 0.0]]).is_err());

        let cloud = random_cloud(1, 9);
        assert!(matches!(
            rips_persistence_oracle(&cloud, &spec(1, 1.0), boxed(1.0)),
            Err(Error::TooLarge { n: 9, limit: 8 })
        ));
        assert!(matches!(
            rips_persistence(&cloud, &spec(0, 1.5), boxed(1.0)),
            Err(Error::MaxEdgeExceedsBox { .. })
        ));
        assert!(FiltrationSpec::new(2, 1.0, EssentialPolicy::Drop).is_err());
        assert!(FiltrationSpec::new(1, 0.0, EssentialPolicy::Drop).is_err());
    }

    #[test]
    fn three_d_clouds_work() {
        let cloud = PointCloud::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(cloud.dim(), 3);
        let d = rips_persistence(&cloud, &spec(1, 2.0), boxed(2.0)).unwrap();
        assert_eq!(
            pairs_of(&d.restrict_dim(1)),
            vec![(1.0, std::f64::consts::SQRT_2, 1)]
        );
    }

    #[test]
    fn batch_preserves_order_and_reports_errors() {
        let a = random_cloud(10, 4);
        let b = random_cloud(11, 5);
        let sample = batch_rips(&[a.clone(), b.clone()], &spec(1, 2.0), boxed(2.0)).unwrap();
        assert_eq!(sample.len(), 2);
        let da = rips_persistence(&a, &spec(1, 2.0), boxed(2.0)).unwrap();
        assert_eq!(pairs_of(&sample.diagrams()[0]), pairs_of(&da));

        let bad = rips_persistence(&a, &spec(0, 3.0), boxed(2.0)).unwrap_err();
        drop(bad);
        let err = batch_rips(&[a, b], &spec(0, 3.0), boxed(2.0)).unwrap_err();
        assert!(matches!(err, Error::BatchElement { index: 0, .. }));
        assert!(matches!(
            batch_rips(&[], &spec(0, 1.0), boxed(1.0)),
            Err(Error::EmptySample)
        ));
    }
}
