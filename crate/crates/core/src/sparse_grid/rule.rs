//! Nested Clenshaw–Curtis rules on `[-1, 1]`.
//!
//! Every node is identified by its position on a fixed dyadic lattice
//! ([`NodeId`]), and its coordinate is always produced by the same formula
//! from that position. Nested levels therefore share bit-identical
//! abscissae, and exact comparison is a valid way to deduplicate.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Deepest level representable by a [`NodeId`].
pub const MAX_LEVEL: u32 = 30;

const LATTICE_BITS: u32 = 30;
const LATTICE: u32 = 1 << LATTICE_BITS;

/// A Clenshaw–Curtis node, stored as its position `p ∈ [0, 2^30]` on the
/// finest dyadic lattice. Coordinates increase with `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    /// The midpoint node `0`, the only node of level 1.
    pub const CENTER: NodeId = NodeId(LATTICE / 2);

    /// Node `j` (0-based, ascending) of the level-`level` rule.
    pub fn of_level(level: u32, j: usize) -> NodeId {
        debug_assert!((1..=MAX_LEVEL).contains(&level));
        if level == 1 {
            debug_assert_eq!(j, 0);
            return Self::CENTER;
        }
        let stride = LATTICE >> (level - 1);
        NodeId(j as u32 * stride)
    }

    /// The level at which this node first appears.
    pub fn level(self) -> u32 {
        match self.0 {
            p if p == LATTICE / 2 => 1,
            0 | LATTICE => 2,
            p => LATTICE_BITS + 1 - p.trailing_zeros(),
        }
    }

    /// Position of this node inside the level-`level` rule, if it belongs to it.
    pub fn index_in(self, level: u32) -> Option<usize> {
        if level == 1 {
            return (self == Self::CENTER).then_some(0);
        }
        let stride = LATTICE >> (level - 1);
        (self.0 % stride == 0).then(|| (self.0 / stride) as usize)
    }

    /// Abscissa `-cos(π p / 2^30)`, computed as `sin(π (p/2^30 − 1/2))` so
    /// that the rule is exactly symmetric and the midpoint is exactly zero.
    pub fn coordinate(self) -> f64 {
        let r = (2 * self.0 as i64 - LATTICE as i64) as f64 / (2 * LATTICE as i64) as f64;
        libm::sin(PI * r)
    }
}

/// Number of points of the level-`level` rule: 1, then `2^(level-1) + 1`.
pub fn num_points(level: u32) -> usize {
    if level == 1 {
        1
    } else {
        (1usize << (level - 1)) + 1
    }
}

/// One level of the nested Clenshaw–Curtis family.
#[derive(Clone, Debug)]
pub struct OneDimRule {
    pub level: u32,
    pub nodes: Vec<NodeId>,
    pub points: Vec<f64>,
    /// Barycentric weights of the Chebyshev–Lobatto nodes.
    pub bary: Vec<f64>,
}

/// The level-`level` Clenshaw–Curtis rule.
pub fn cc_points(level: u32) -> OneDimRule {
    assert!((1..=MAX_LEVEL).contains(&level), "level must be in 1..=30");
    let m = num_points(level);
    let nodes: Vec<NodeId> = (0..m).map(|j| NodeId::of_level(level, j)).collect();
    let points = nodes.iter().map(|n| n.coordinate()).collect();
    let bary = (0..m)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if m > 1 && (j == 0 || j == m - 1) {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    OneDimRule { level, nodes, points, bary }
}

impl OneDimRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Values of all Lagrange basis polynomials at `y`, written into `out`.
    pub fn lagrange_values(&self, y: f64, out: &mut [f64]) {
        let m = self.len();
        debug_assert_eq!(out.len(), m);
        if m == 1 {
            out[0] = 1.0;
            return;
        }
        if let Some(k) = self.points.iter().position(|&p| p == y) {
            out.fill(0.0);
            out[k] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for j in 0..m {
            let t = self.bary[j] / (y - self.points[j]);
            out[j] = t;
            denom += t;
        }
        for v in out.iter_mut() {
            *v /= denom;
        }
    }

    /// Interpolate samples `values[j] = f(points[j])` at `y`.
    pub fn interpolate(&self, values: &[f64], y: f64) -> f64 {
        let mut l = alloc::vec![0.0; self.len()];
        self.lagrange_values(y, &mut l);
        l.iter().zip(values).map(|(a, b)| a * b).sum()
    }
}

/// Clenshaw–Curtis quadrature weights for the level-`level` rule, normalised
/// to integrate against the uniform density `1/2` (they sum to one).
pub fn cc_weights(level: u32) -> Vec<f64> {
    let m = num_points(level);
    if m == 1 {
        return alloc::vec![1.0];
    }
    let n = m - 1;
    let mut w = alloc::vec![0.0; m];
    for (j, wj) in w.iter_mut().enumerate() {
        let theta = PI * j as f64 / n as f64;
        let mut s = 0.0;
        for k in 1..=n / 2 {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            s += b / (4.0 * (k * k) as f64 - 1.0) * libm::cos(2.0 * k as f64 * theta);
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        // ∫_{-1}^{1} weights, then halved for the density
        *wj = 0.5 * c / n as f64 * (1.0 - s);
    }
    w
}
