//! Order-q transport distances between persistence measures.
//!
//! Measures are finite lists of weighted plane atoms. Transport is augmented
//! with the diagonal: every unit of mass may either move to an atom of the
//! other measure (cost `distance^q`) or be absorbed by / emitted from the
//! diagonal at the cost of its own diagonal distance to the power q. The
//! solver is an exact successive-shortest-path min-cost flow on the dense
//! bipartite graph with two extra diagonal terminals; costs live in q-th
//! power space throughout and the q-th root is taken only at the API surface.
//!
//! Zero-cost diagonal-to-diagonal mass is never materialized in plans.

use std::collections::{BTreeMap, BTreeSet};

use crate::diagram::{
    diag_distance, omega_weighted_volume, q_pow, PersistenceDiagram,
};
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Combined-atom limit for the exact solver (quadratic memory, cubic time).
pub const SOLVER_LIMIT: usize = 6000;

/// A weighted atom of a discrete plane measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub point: [f64; 2],
    pub mass: f64,
}

/// Endpoint of a transport move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Site {
    Point([f64; 2]),
    Diagonal,
}

/// One transport move: positive mass from a source site to a target site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub source: Site,
    pub target: Site,
    pub mass: f64,
}

/// q-th-power cost of carrying unit mass between two sites: Euclidean
/// distance between points, diagonal distance for diagonal legs, zero for
/// diagonal-to-diagonal.
pub fn site_cost_q(source: Site, target: Site, q: f64) -> f64 {
    match (source, target) {
        (Site::Point(a), Site::Point(b)) => {
            let dx = a[0] - b[0];
            let dy = a[1] - b[1];
            q_pow((dx * dx + dy * dy).sqrt(), q)
        }
        (Site::Point(a), Site::Diagonal) | (Site::Diagonal, Site::Point(a)) => {
            q_pow(diag_distance(a), q)
        }
        (Site::Diagonal, Site::Diagonal) => 0.0,
    }
}

/// An admissible transport between two measures, with its order and total
/// q-th-power cost.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub moves: Vec<Move>,
    pub q: f64,
    pub cost_q: f64,
}

impl TransportPlan {
    /// Re-derives the q-th-power cost from the moves, in move order.
    pub fn recompute_cost_q(&self) -> f64 {
        self.moves
            .iter()
            .map(|m| m.mass * site_cost_q(m.source, m.target, self.q))
            .sum()
    }

    /// Order-q cost (q-th root of the stored power cost).
    pub fn cost(&self) -> f64 {
        root_q(self.cost_q, self.q)
    }

    /// Checks that per-atom outgoing/incoming mass matches the given
    /// measures within `tol` (the diagonal absorbs and emits freely) and
    /// that the stored cost matches recomputation.
    pub fn check_marginals(&self, a: &[Atom], b: &[Atom], tol: f64) -> Result<()> {
        let mut out: BTreeMap<[u64; 2], f64> = BTreeMap::new();
        let mut inc: BTreeMap<[u64; 2], f64> = BTreeMap::new();
        let key = |p: [f64; 2]| [p[0].to_bits(), p[1].to_bits()];
        for m in &self.moves {
            if m.mass <= 0.0 {
                return Err(Error::Config("plan contains a non-positive move".into()));
            }
            if let Site::Point(p) = m.source {
                *out.entry(key(p)).or_insert(0.0) += m.mass;
            }
            if let Site::Point(p) = m.target {
                *inc.entry(key(p)).or_insert(0.0) += m.mass;
            }
        }
        let check = |atoms: &[Atom], sums: &BTreeMap<[u64; 2], f64>| -> Result<()> {
            let mut expect: BTreeMap<[u64; 2], f64> = BTreeMap::new();
            for a in atoms {
                *expect.entry(key(a.point)).or_insert(0.0) += a.mass;
            }
            for (k, v) in &expect {
                let got = sums.get(k).copied().unwrap_or(0.0);
                if (got - v).abs() > tol {
                    return Err(Error::Config(format!(
                        "marginal mismatch: expected {v}, routed {got}"
                    )));
                }
            }
            for k in sums.keys() {
                if !expect.contains_key(k) {
                    return Err(Error::Config("plan routes mass at a non-atom".into()));
                }
            }
            Ok(())
        };
        check(a, &out)?;
        check(b, &inc)?;
        let rc = self.recompute_cost_q();
        let scale = rc.abs().max(self.cost_q.abs()).max(1e-300);
        if (rc - self.cost_q).abs() / scale > 1e-9 {
            return Err(Error::Config(format!(
                "stored cost {} disagrees with recomputed {rc}",
                self.cost_q
            )));
        }
        Ok(())
    }
}

fn root_q(cost_q: f64, q: f64) -> f64 {
    if cost_q == 0.0 {
        0.0
    } else {
        cost_q.powf(1.0 / q)
    }
}

fn validate_q(q: f64) -> Result<()> {
    if q.is_finite() && (1.0..=16.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::InvalidQ(q))
    }
}

fn validate_atoms(atoms: &[Atom]) -> Result<()> {
    for a in atoms {
        if !(a.point[0].is_finite() && a.point[1].is_finite()) {
            return Err(Error::Config("atom with non-finite location".into()));
        }
        if !(a.mass.is_finite() && a.mass > 0.0) {
            return Err(Error::Config(format!(
                "atom mass must be positive and finite, got {}",
                a.mass
            )));
        }
    }
    Ok(())
}

/// Unit-mass atoms at the points of a diagram, in pair order.
pub fn diagram_to_atoms(d: &PersistenceDiagram) -> Vec<Atom> {
    d.pairs()
        .iter()
        .map(|p| Atom {
            point: p.point(),
            mass: 1.0,
        })
        .collect()
}

/// Exact min-cost flow between `a`-atoms (+ diagonal source) and `b`-atoms
/// (+ diagonal sink) by successive shortest paths with potentials.
struct FlowSolver {
    na: usize,
    nb: usize,
    /// (na + 1) x (nb + 1) q-power costs; row `na` is the diagonal source,
    /// column `nb` the diagonal sink.
    cost: Vec<f64>,
    supply: Vec<f64>,
    demand: Vec<f64>,
    pi_left: Vec<f64>,
    pi_right: Vec<f64>,
    /// Flow per left node keyed by right node; `incoming[j]` mirrors the
    /// support for residual traversal. Ordered containers keep iteration
    /// deterministic.
    flow: Vec<BTreeMap<u32, f64>>,
    incoming: Vec<BTreeSet<u32>>,
    /// Mass below this threshold counts as drained. Unit masses subtract
    /// exactly, but real-valued masses can leave rounding dust that would
    /// otherwise strand an augmentation with no matching sink.
    eps: f64,
}

impl FlowSolver {
    fn new(a: &[Atom], b: &[Atom], q: f64) -> Self {
        let na = a.len();
        let nb = b.len();
        let mut cost = vec![0.0; (na + 1) * (nb + 1)];
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                cost[i * (nb + 1) + j] = site_cost_q(Site::Point(ai.point), Site::Point(bj.point), q);
            }
            cost[i * (nb + 1) + nb] = site_cost_q(Site::Point(ai.point), Site::Diagonal, q);
        }
        for (j, bj) in b.iter().enumerate() {
            cost[na * (nb + 1) + j] = site_cost_q(Site::Diagonal, Site::Point(bj.point), q);
        }
        // cost[na][nb] stays 0: diagonal to diagonal.

        let total_a: f64 = a.iter().map(|x| x.mass).sum();
        let total_b: f64 = b.iter().map(|x| x.mass).sum();
        let mut supply: Vec<f64> = a.iter().map(|x| x.mass).collect();
        supply.push(total_b); // diagonal can emit up to everything b absorbs
        let mut demand: Vec<f64> = b.iter().map(|x| x.mass).collect();
        demand.push(total_a); // diagonal can absorb everything a emits

        let eps = 1e-13 * (total_a + total_b).max(1.0);
        FlowSolver {
            na,
            nb,
            cost,
            supply,
            demand,
            pi_left: vec![0.0; na + 1],
            pi_right: vec![0.0; nb + 1],
            flow: vec![BTreeMap::new(); na + 1],
            incoming: vec![BTreeSet::new(); nb + 1],
            eps,
        }
    }

    #[inline]
    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i * (self.nb + 1) + j]
    }

    /// One augmentation: full Dijkstra over reduced costs from every
    /// remaining source, augment to the nearest remaining sink. Returns
    /// false when no supply remains.
    fn augment(&mut self) -> Result<bool> {
        let nl = self.na + 1;
        let nr = self.nb + 1;
        let nv = nl + nr; // left block first, then right block
        if !self.supply.iter().any(|&s| s > self.eps) {
            return Ok(false);
        }

        let mut dist = vec![f64::INFINITY; nv];
        let mut prev = vec![usize::MAX; nv];
        let mut done = vec![false; nv];
        for (i, &s) in self.supply.iter().enumerate() {
            if s > self.eps {
                dist[i] = 0.0;
            }
        }
        for _ in 0..nv {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nv {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < nl {
                // Forward arcs to every right node.
                for j in 0..nr {
                    let rc = (self.c(u, j) + self.pi_left[u] - self.pi_right[j]).max(0.0);
                    let nd = dist[u] + rc;
                    let v = nl + j;
                    if nd < dist[v] {
                        dist[v] = nd;
                        prev[v] = u;
                    }
                }
            } else {
                // Residual arcs back along positive flow.
                let j = u - nl;
                for &i32v in &self.incoming[j] {
                    let i = i32v as usize;
                    let rc = (self.pi_right[j] - self.pi_left[i] - self.c(i, j)).max(0.0);
                    let nd = dist[u] + rc;
                    if nd < dist[i] {
                        dist[i] = nd;
                        prev[i] = u;
                    }
                }
            }
        }

        // Nearest sink with remaining demand; first index wins ties.
        let mut sink = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..nr {
            if self.demand[j] > self.eps && dist[nl + j] < best {
                best = dist[nl + j];
                sink = j;
            }
        }
        if sink == usize::MAX {
            return Err(Error::Config(
                "transport instance is infeasible (internal invariant broken)".into(),
            ));
        }
        let d_t = dist[nl + sink];

        // Bottleneck along the path: endpoint supplies/demand and residual
        // flows on backward arcs.
        let mut delta = self.demand[sink];
        let mut v = nl + sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if v < nl {
                // backward arc u(right) -> v(left): residual of flow v->u
                let j = u - nl;
                delta = delta.min(self.flow[v][&(j as u32)]);
            }
            v = u;
        }
        let source = v;
        debug_assert!(source < nl);
        delta = delta.min(self.supply[source]);
        debug_assert!(delta > 0.0);

        // Apply the augmentation.
        let mut v = nl + sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if v >= nl {
                // forward arc u(left) -> v(right)
                let j = v - nl;
                let e = self.flow[u].entry(j as u32).or_insert(0.0);
                *e += delta;
                self.incoming[j].insert(u as u32);
            } else {
                // backward arc: reduce flow v(left) -> u(right)
                let j = u - nl;
                let e = self.flow[v].get_mut(&(j as u32)).unwrap();
                *e -= delta;
                if *e == 0.0 {
                    self.flow[v].remove(&(j as u32));
                    self.incoming[j].remove(&(v as u32));
                }
            }
            v = u;
        }
        self.supply[source] -= delta;
        if self.supply[source] < 0.0 {
            self.supply[source] = 0.0;
        }
        self.demand[sink] -= delta;
        if self.demand[sink] < 0.0 {
            self.demand[sink] = 0.0;
        }

        // Potential update capped at the sink distance keeps every residual
        // reduced cost nonnegative, including arcs touching unreached nodes.
        for i in 0..nl {
            self.pi_left[i] += dist[i].min(d_t);
        }
        for j in 0..nr {
            self.pi_right[j] += dist[nl + j].min(d_t);
        }
        Ok(true)
    }

    /// Extracts the plan: left atoms in order (their targets in index
    /// order, diagonal sink last), then diagonal-source emissions in index
    /// order. Diagonal-to-diagonal flow is dropped. The cost is summed in
    /// exactly this move order.
    fn into_plan(self, a: &[Atom], b: &[Atom], q: f64) -> TransportPlan {
        let mut moves = Vec::new();
        let mut cost_q = 0.0;
        for i in 0..=self.na {
            for (&j, &mass) in &self.flow[i] {
                if mass <= 0.0 {
                    continue;
                }
                let j = j as usize;
                let source = if i < self.na {
                    Site::Point(a[i].point)
                } else {
                    Site::Diagonal
                };
                let target = if j < self.nb {
                    Site::Point(b[j].point)
                } else {
                    Site::Diagonal
                };
                if matches!((source, target), (Site::Diagonal, Site::Diagonal)) {
                    continue;
                }
                cost_q += mass * self.c(i, j);
                moves.push(Move {
                    source,
                    target,
                    mass,
                });
            }
        }
        TransportPlan { moves, q, cost_q }
    }
}

/// Optimal order-q transport between two atomic measures with diagonal
/// absorption/creation. Returns the order-q cost and an optimal plan.
pub fn ot_distance_measures(a: &[Atom], b: &[Atom], q: f64) -> Result<(f64, TransportPlan)> {
    validate_q(q)?;
    validate_atoms(a)?;
    validate_atoms(b)?;
    let n = a.len() + b.len();
    if n > SOLVER_LIMIT {
        return Err(Error::SolverLimit {
            n,
            limit: SOLVER_LIMIT,
        });
    }
    let mut solver = FlowSolver::new(a, b, q);
    let budget = 64 + 50 * (n + 2);
    let mut iters = 0usize;
    while solver.augment()? {
        iters += 1;
        if iters > budget {
            return Err(Error::Config(
                "transport solver exceeded its augmentation budget".into(),
            ));
        }
    }
    let plan = solver.into_plan(a, b, q);
    Ok((root_q(plan.cost_q, q), plan))
}

/// Returns true when `a`'s pair list precedes `b`'s in the canonical order
/// (lexicographic by (birth, death, dim), shorter list first on prefix ties).
fn diagram_le(a: &PersistenceDiagram, b: &PersistenceDiagram) -> bool {
    for (pa, pb) in a.pairs().iter().zip(b.pairs()) {
        let ord = pa
            .birth
            .total_cmp(&pb.birth)
            .then(pa.death.total_cmp(&pb.death))
            .then(pa.dim.cmp(&pb.dim));
        match ord {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => continue,
        }
    }
    a.count() <= b.count()
}

/// Optimal order-q transport between two diagrams (unit mass per point).
///
/// The arguments are ordered canonically before solving and the plan is
/// mirrored back, so the result is bit-for-bit symmetric in (a, b).
pub fn ot_distance(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    q: f64,
) -> Result<(f64, TransportPlan)> {
    let atoms_a = diagram_to_atoms(a);
    let atoms_b = diagram_to_atoms(b);
    if diagram_le(a, b) {
        ot_distance_measures(&atoms_a, &atoms_b, q)
    } else {
        let (d, mut plan) = ot_distance_measures(&atoms_b, &atoms_a, q)?;
        for m in plan.moves.iter_mut() {
            std::mem::swap(&mut m.source, &mut m.target);
        }
        Ok((d, plan))
    }
}

/// The explicit per-cell plan between two gridded densities: shared mass
/// stays in place at zero cost, per-cell surplus goes to the diagonal, and
/// per-cell deficit is drawn from the diagonal. Its q-power cost therefore
/// equals `cell^2 * sum |p_a - p_b| * diag_distance(center)^q`.
pub fn constructed_transport(
    p_a: &ScalarField,
    p_b: &ScalarField,
    q: f64,
) -> Result<TransportPlan> {
    validate_q(q)?;
    if !p_a.same_geometry(p_b) {
        return Err(Error::GridMismatch);
    }
    let shape = *p_a.shape();
    let cell2 = shape.cell * shape.cell;
    let mut moves = Vec::new();
    let mut cost_q = 0.0;
    for iy in 0..shape.ny {
        for ix in 0..shape.nx {
            let va = p_a.value(ix, iy);
            let vb = p_b.value(ix, iy);
            let center = shape.node(ix, iy);
            let stay = va.min(vb) * cell2;
            if stay > 0.0 {
                moves.push(Move {
                    source: Site::Point(center),
                    target: Site::Point(center),
                    mass: stay,
                });
            }
            let leg = q_pow(diag_distance(center), q);
            if va > vb {
                let mass = (va - vb) * cell2;
                cost_q += mass * leg;
                moves.push(Move {
                    source: Site::Point(center),
                    target: Site::Diagonal,
                    mass,
                });
            } else if vb > va {
                let mass = (vb - va) * cell2;
                cost_q += mass * leg;
                moves.push(Move {
                    source: Site::Diagonal,
                    target: Site::Point(center),
                    mass,
                });
            }
        }
    }
    Ok(TransportPlan { moves, q, cost_q })
}

/// Closed-form upper bound for the q-power transport cost between expected
/// measures with bounded densities: the q-weighted volume of the triangular
/// domain times the sup-norm gap of the densities.
pub fn ot_upper_bound(p_a: &ScalarField, p_b: &ScalarField, q: f64, side: f64) -> Result<f64> {
    validate_q(q)?;
    let gap = p_a.max_abs_diff(p_b)?;
    Ok(omega_weighted_volume(q, side) * gap)
}

/// One atom per strictly positive cell, at the cell center, carrying the
/// cell's integral mass. Fails on any negative value.
pub fn discretize_field_to_measure(field: &ScalarField) -> Result<Vec<Atom>> {
    let shape = field.shape();
    let cell2 = shape.cell * shape.cell;
    let mut atoms = Vec::new();
    for iy in 0..shape.ny {
        for ix in 0..shape.nx {
            let v = field.value(ix, iy);
            if v < 0.0 {
                return Err(Error::NegativeDensity {
                    index: iy * shape.nx + ix,
                    value: v,
                });
            }
            if v > 0.0 {
                atoms.push(Atom {
                    point: shape.node(ix, iy),
                    mass: v * cell2,
                });
            }
        }
    }
    Ok(atoms)
}
