//! Prokhorov distance between finite-support measures.
//!
//! For a radius `r`, let `δ(r)` be the mass that cannot be transported
//! from `P` to `Q` when an atom may only move to atoms closer than `r`
//! (one minus a bipartite max-flow). By max-flow/min-cut,
//! `max_A P(A) - Q(A^r) = δ(r)`, where `A^r` is the open `r`-neighbourhood,
//! and the same flow bounds the reverse direction. Hence
//!
//! ```text
//! π(P, Q) = inf { ε : δ(ε) <= ε }.
//! ```
//!
//! `δ` only changes at pairwise atom distances, so with `0 = t_0 < t_1 < ...`
//! the distinct distances and `δ_j` the deficiency with edges `d <= t_j`,
//! `π = min_j max(t_j, δ_j)`, which is exact. Supports too large to list
//! every pair fall back to bracketing and bisection on `ε` to an absolute
//! `1e-9`.

use alloc::vec::Vec;

use super::flow::FlowNetwork;
use super::{cmp_points_tol, empirical, empirical_joint, FiniteMeasure};
use crate::error::{Error, Result};

/// Largest `|supp P| * |supp Q|` for which every pairwise distance is
/// listed.
const PAIR_LIMIT: usize = 4_000_000;

/// Bisection tolerance for large supports.
const BISECTION_TOLERANCE: f64 = 1e-9;

/// Values within this of a strict threshold count as on the boundary
/// (and therefore fail a strict `<`).
pub(crate) const TIE: f64 = 1e-12;

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

fn check_dims(p: &FiniteMeasure, q: &FiniteMeasure) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: q.dim() });
    }
    Ok(())
}

/// `1 - maxflow` where atom `i` of `p` may feed atom `j` of `q` iff
/// `d(i, j) < radius`, or `d(i, j) <= radius` when `closed`.
pub fn prokhorov_deficiency(p: &FiniteMeasure, q: &FiniteMeasure, radius: f64, closed: bool) -> Result<f64> {
    check_dims(p, q)?;
    let admit = |d: f64| if closed { d <= radius } else { d < radius };
    let edges = neighbour_pairs(p, q, radius, admit);
    Ok(deficiency_from_edges(p, q, &edges))
}

fn deficiency_from_edges(p: &FiniteMeasure, q: &FiniteMeasure, edges: &[(usize, usize)]) -> f64 {
    let np = p.len();
    let source = np + q.len();
    let sink = source + 1;
    let mut net = FlowNetwork::new(sink + 1);
    for (i, a) in p.atoms().iter().enumerate() {
        net.add_edge(source, i, a.mass);
    }
    for (j, b) in q.atoms().iter().enumerate() {
        net.add_edge(np + j, sink, b.mass);
    }
    for &(i, j) in edges {
        net.add_edge(i, np + j, f64::INFINITY);
    }
    let deficiency = 1.0 - net.max_flow(source, sink);
    if deficiency < FLOW_NOISE {
        0.0
    } else {
        deficiency
    }
}

/// Deficiencies below this are rounding residue of a saturating flow.
const FLOW_NOISE: f64 = 1e-13;

/// Orders the pair so that `π(P, Q)` and `π(Q, P)` run the same
/// computation.
fn canonical<'a>(p: &'a FiniteMeasure, q: &'a FiniteMeasure) -> (&'a FiniteMeasure, &'a FiniteMeasure) {
    let key = |m: &FiniteMeasure| {
        m.atoms()
            .iter()
            .flat_map(|a| a.point.iter().copied().chain(core::iter::once(a.mass)))
            .collect::<Vec<f64>>()
    };
    let (kp, kq) = (key(p), key(q));
    let ord = kp
        .iter()
        .zip(&kq)
        .map(|(a, b)| a.total_cmp(b))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| kp.len().cmp(&kq.len()));
    if ord.is_gt() {
        (q, p)
    } else {
        (p, q)
    }
}

/// Pairs `(i, j)` with `admit(d(p_i, q_j))`, restricted to `d <= radius`.
fn neighbour_pairs(
    p: &FiniteMeasure,
    q: &FiniteMeasure,
    radius: f64,
    admit: impl Fn(f64) -> bool,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if p.len().saturating_mul(q.len()) <= PAIR_LIMIT {
        for (i, a) in p.atoms().iter().enumerate() {
            for (j, b) in q.atoms().iter().enumerate() {
                if admit(distance(&a.point, &b.point)) {
                    out.push((i, j));
                }
            }
        }
        return out;
    }
    // Atoms are sorted by first coordinate, so a window on it bounds the
    // candidates.
    let first: Vec<f64> = q.atoms().iter().map(|b| b.point[0]).collect();
    for (i, a) in p.atoms().iter().enumerate() {
        let x = a.point[0];
        let lo = first.partition_point(|&v| v < x - radius);
        for j in lo..first.len() {
            if first[j] > x + radius {
                break;
            }
            if admit(distance(&a.point, &q.atoms()[j].point)) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Exact Prokhorov distance, in `[0, 1]`.
pub fn prokhorov_distance(p: &FiniteMeasure, q: &FiniteMeasure) -> Result<f64> {
    check_dims(p, q)?;
    let (p, q) = canonical(p, q);
    if p.len().saturating_mul(q.len()) > PAIR_LIMIT {
        return Ok(prokhorov_bisection(p, q));
    }
    // Thresholds at or above one never beat the trivial bound π <= 1.
    let mut thresholds: Vec<f64> = Vec::with_capacity(p.len() * q.len() + 1);
    thresholds.push(0.0);
    for a in p.atoms() {
        for b in q.atoms() {
            let d = distance(&a.point, &b.point);
            if d < 1.0 {
                thresholds.push(d);
            }
        }
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let deficiency = |t: f64| {
        let edges = neighbour_pairs(p, q, t, |d| d <= t);
        deficiency_from_edges(p, q, &edges)
    };
    // δ_j is non-increasing and t_j increasing: find the first j with
    // δ_j <= t_j; the optimum is t_j there or δ_{j-1} just before.
    let (mut lo, mut hi) = (0usize, thresholds.len());
    let mut deficiency_at = alloc::collections::BTreeMap::new();
    while lo < hi {
        let mid = (lo + hi) / 2;
        let d = deficiency(thresholds[mid]);
        deficiency_at.insert(mid, d);
        if d <= thresholds[mid] {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut best: f64 = 1.0;
    if lo < thresholds.len() {
        best = best.min(thresholds[lo]);
    }
    if lo > 0 {
        let d = match deficiency_at.get(&(lo - 1)) {
            Some(&d) => d,
            None => deficiency(thresholds[lo - 1]),
        };
        best = best.min(d);
    }
    Ok(best.clamp(0.0, 1.0))
}

fn prokhorov_bisection(p: &FiniteMeasure, q: &FiniteMeasure) -> f64 {
    let feasible = |eps: f64| {
        let edges = neighbour_pairs(p, q, eps, |d| d < eps);
        deficiency_from_edges(p, q, &edges) <= eps
    };
    // Bracket from below first: small radii keep the flow graphs sparse.
    let (mut lo, mut hi) = (0.0f64, BRACKET_START);
    while hi < 1.0 && !feasible(hi) {
        lo = hi;
        hi *= 2.0;
    }
    hi = hi.min(1.0);
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// First radius tried when bracketing a large-support distance.
const BRACKET_START: f64 = 1.0 / 1024.0;

/// `π(P, Q) < eps`, decided with a single flow computation: it holds iff
/// the deficiency with edges `d < eps` is below `eps`. Any `eps >= 1` is
/// accepted outright since `π <= 1`.
pub fn prokhorov_within(p: &FiniteMeasure, q: &FiniteMeasure, eps: f64) -> Result<bool> {
    check_dims(p, q)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive"));
    }
    if eps >= 1.0 {
        return Ok(true);
    }
    let edges = neighbour_pairs(p, q, eps, |d| d < eps - TIE);
    Ok(deficiency_from_edges(p, q, &edges) < eps - TIE)
}

/// Weak* `eps`-typicality of a scalar sequence with respect to `p`.
pub fn is_typical(x: &[f64], p: &FiniteMeasure, eps: f64) -> Result<bool> {
    prokhorov_within(empirical(x)?.measure(), p, eps)
}

/// Joint weak* `eps`-typicality of `(x, y)` with respect to `pxy`.
pub fn is_jointly_typical(x: &[f64], y: &[f64], pxy: &FiniteMeasure, eps: f64) -> Result<bool> {
    prokhorov_within(empirical_joint(x, y)?.measure(), pxy, eps)
}

/// Total-variation distance `sup_A |P(A) - Q(A)|`.
pub fn total_variation(p: &FiniteMeasure, q: &FiniteMeasure) -> Result<f64> {
    check_dims(p, q)?;
    let (a, b) = (p.atoms(), q.atoms());
    let (mut i, mut j) = (0, 0);
    let mut sum = 0.0;
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => cmp_points_tol(&x.point, &y.point),
            (Some(_), None) => core::cmp::Ordering::Less,
            _ => core::cmp::Ordering::Greater,
        };
        match ord {
            core::cmp::Ordering::Less => {
                sum += a[i].mass;
                i += 1;
            }
            core::cmp::Ordering::Greater => {
                sum += b[j].mass;
                j += 1;
            }
            core::cmp::Ordering::Equal => {
                sum += (a[i].mass - b[j].mass).abs();
                i += 1;
                j += 1;
            }
        }
    }
    Ok(0.5 * sum)
}
