//! Sparse grids built by the combination technique.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::rule::{cc_points, NodeId, OneDimRule};
use crate::error::{invalid, Error, Result};
use crate::multi_index::{MultiIndex, MultiIndexSet};

/// A collocation point, one node per parameter dimension.
pub type Point = Box<[NodeId]>;

/// Coordinates of a collocation point.
pub fn coordinates(p: &[NodeId]) -> Vec<f64> {
    p.iter().map(|n| n.coordinate()).collect()
}

/// Rules for levels `1..=max_level`, indexed by `level - 1`.
#[derive(Clone, Debug, Default)]
pub struct RuleCache {
    rules: Vec<OneDimRule>,
}

impl RuleCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, level: u32) -> &OneDimRule {
        while self.rules.len() < level as usize {
            let next = self.rules.len() as u32 + 1;
            self.rules.push(cc_points(next));
        }
        &self.rules[level as usize - 1]
    }

    /// Rule of a level already generated by [`RuleCache::get`] or [`RuleCache::ensure`].
    pub fn rule(&self, level: u32) -> &OneDimRule {
        &self.rules[level as usize - 1]
    }

    pub fn ensure(&mut self, level: u32) {
        let _ = self.get(level);
    }
}

/// Calls `f` for every node tuple of the tensor grid `X_{ν_1} × … × X_{ν_d}`,
/// in row-major order (last dimension fastest).
pub fn for_each_tensor_point(index: &MultiIndex, mut f: impl FnMut(&[NodeId])) {
    let levels = index.levels();
    let d = levels.len();
    let sizes: Vec<usize> = levels.iter().map(|&l| super::rule::num_points(l)).collect();
    let mut counter = alloc::vec![0usize; d];
    let mut nodes: Vec<NodeId> = levels.iter().map(|&l| NodeId::of_level(l, 0)).collect();
    loop {
        f(&nodes);
        let mut j = d;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            counter[j] += 1;
            if counter[j] < sizes[j] {
                nodes[j] = NodeId::of_level(levels[j], counter[j]);
                break;
            }
            counter[j] = 0;
            nodes[j] = NodeId::of_level(levels[j], 0);
        }
    }
}

/// Number of points of the full tensor grid of `index`.
pub fn tensor_size(index: &MultiIndex) -> usize {
    index.levels().iter().map(|&l| super::rule::num_points(l)).product()
}

/// Combination coefficients `c_ν = Σ_{z ∈ {0,1}^d, ν+z ∈ I} (−1)^{|z|}` for
/// every member of an admissible set (zeros included).
pub fn combination_coefficients(set: &MultiIndexSet) -> Result<BTreeMap<MultiIndex, i64>> {
    if !set.is_admissible() {
        return Err(invalid("combination coefficients need an admissible set"));
    }
    let mut out = BTreeMap::new();
    for nu in set.iter() {
        out.insert(nu.clone(), signed_forward_count(set, nu, 0));
    }
    Ok(out)
}

// Downward closedness lets the search over z prune as soon as ν+z leaves I.
fn signed_forward_count(set: &MultiIndexSet, nu: &MultiIndex, from: usize) -> i64 {
    let mut total = 1;
    for j in from..set.dim() {
        let up = nu.raised(j);
        if set.contains(&up) {
            total -= signed_forward_count(set, &up, j + 1);
        }
    }
    total
}

/// One non-zero term `c_ν U^ν` of the combination representation.
#[derive(Clone, Debug)]
pub struct CombinationTerm {
    pub index: MultiIndex,
    pub coeff: i64,
    /// Grid-point indices of the tensor grid of `index`, row-major.
    pub points: Vec<usize>,
}

/// The sparse grid `X(I)` of an admissible multi-index set together with its
/// combination representation.
#[derive(Clone, Debug)]
pub struct SparseGrid {
    set: MultiIndexSet,
    terms: Vec<CombinationTerm>,
    points: Vec<Point>,
    lookup: BTreeMap<Point, usize>,
}

impl SparseGrid {
    pub fn new(set: &MultiIndexSet) -> Result<Self> {
        if set.is_empty() {
            return Err(invalid("empty multi-index set"));
        }
        let coeffs = combination_coefficients(set)?;
        let mut lookup: BTreeMap<Point, usize> = BTreeMap::new();
        for nu in set.iter() {
            for_each_tensor_point(nu, |p| {
                if !lookup.contains_key(p) {
                    lookup.insert(p.into(), 0);
                }
            });
        }
        // lexicographic order of node positions is lexicographic order of coordinates
        let points: Vec<Point> = lookup.keys().cloned().collect();
        for (i, v) in lookup.values_mut().enumerate() {
            *v = i;
        }
        let terms = coeffs
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|(index, coeff)| {
                let mut pts = Vec::with_capacity(tensor_size(&index));
                for_each_tensor_point(&index, |p| pts.push(lookup[p]));
                CombinationTerm { index, coeff, points: pts }
            })
            .collect();
        Ok(Self { set: set.clone(), terms, points, lookup })
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn terms(&self) -> &[CombinationTerm] {
        &self.terms
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: &[NodeId]) -> Option<usize> {
        self.lookup.get(p).copied()
    }

    pub fn contains(&self, p: &[NodeId]) -> bool {
        self.lookup.contains_key(p)
    }

    pub fn coordinates(&self, i: usize) -> Vec<f64> {
        coordinates(&self.points[i])
    }

    /// Values `L_z(y)` of the sparse Lagrange polynomials for every grid point.
    pub fn basis_values(&self, y: &[f64], rules: &mut RuleCache) -> Result<Vec<f64>> {
        check_point(y, self.dim())?;
        for l in self.set.max_levels() {
            rules.ensure(l);
        }
        let mut out = alloc::vec![0.0; self.len()];
        let mut per_dim: Vec<Vec<f64>> = Vec::new();
        for term in &self.terms {
            per_dim.clear();
            for (j, &l) in term.index.levels().iter().enumerate() {
                let r = rules.rule(l);
                let mut v = alloc::vec![0.0; r.len()];
                r.lagrange_values(y[j], &mut v);
                per_dim.push(v);
            }
            let c = term.coeff as f64;
            let mut k = 0;
            tensor_products(&per_dim, |w| {
                out[term.points[k]] += c * w;
                k += 1;
            });
        }
        Ok(out)
    }

    /// Interpolate vector-valued data `values[i]` (one slice per grid point) at `y`.
    pub fn interpolate<V: AsRef<[f64]>>(
        &self,
        values: &[V],
        y: &[f64],
        rules: &mut RuleCache,
    ) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: values.len() });
        }
        let w = self.basis_values(y, rules)?;
        let n = values.first().map_or(0, |v| v.as_ref().len());
        let mut out = alloc::vec![0.0; n];
        for (wi, v) in w.iter().zip(values) {
            if *wi != 0.0 {
                for (o, x) in out.iter_mut().zip(v.as_ref()) {
                    *o += wi * x;
                }
            }
        }
        Ok(out)
    }
}

/// Calls `f` with every product `Π_j factors[j][k_j]`, row-major.
pub(crate) fn tensor_products(factors: &[Vec<f64>], mut f: impl FnMut(f64)) {
    fn rec(factors: &[Vec<f64>], acc: f64, f: &mut impl FnMut(f64)) {
        match factors.split_first() {
            None => f(acc),
            Some((head, tail)) => {
                for &v in head {
                    rec(tail, acc * v, f);
                }
            }
        }
    }
    rec(factors, 1.0, &mut f);
}

pub(crate) fn check_point(y: &[f64], dim: usize) -> Result<()> {
    if y.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: y.len() });
    }
    if y.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::OutsideDomain);
    }
    Ok(())
}

/// The points of `X(I)` as coordinate vectors, lexicographically ordered.
pub fn sparse_points(set: &MultiIndexSet) -> Result<Vec<Vec<f64>>> {
    if !set.is_admissible() {
        return Err(invalid("sparse points need an admissible set"));
    }
    let g = SparseGrid::new(set)?;
    Ok(g.points().iter().map(|p| coordinates(p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn point_examples() {
        assert_eq!(sparse_points(&MultiIndexSet::chain(2)).unwrap(), vec![vec![-1.0], vec![0.0], vec![1.0]]);
        assert_eq!(sparse_points(&MultiIndexSet::root(2)).unwrap(), vec![vec![0.0, 0.0]]);
        let s = MultiIndexSet::root(2).enhance();
        assert_eq!(
            sparse_points(&s).unwrap(),
            vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]
        );
    }

    #[test]
    fn coefficient_examples() {
        let c = combination_coefficients(&MultiIndexSet::chain(3)).unwrap();
        assert_eq!(c[&mi(&[1])], 0);
        assert_eq!(c[&mi(&[2])], 0);
        assert_eq!(c[&mi(&[3])], 1);
        let c = combination_coefficients(&MultiIndexSet::root(2)).unwrap();
        assert_eq!(c[&mi(&[1, 1])], 1);
        let c = combination_coefficients(&MultiIndexSet::root(2).enhance()).unwrap();
        assert_eq!(c[&mi(&[2, 1])], 1);
        assert_eq!(c[&mi(&[1, 2])], 1);
        assert_eq!(c[&mi(&[1, 1])], -1);
    }

    #[test]
    fn non_admissible_sets_are_rejected() {
        let s = MultiIndexSet::from_indices(2, [mi(&[1, 1]), mi(&[3, 1])]).unwrap();
        assert!(combination_coefficients(&s).is_err());
        assert!(SparseGrid::new(&s).is_err());
    }

    #[test]
    fn constant_and_quadratic_reproduction() {
        let mut rules = RuleCache::new();
        let g = SparseGrid::new(&MultiIndexSet::total_degree(3, 2)).unwrap();
        let vals: Vec<Vec<f64>> = (0..g.len()).map(|_| vec![3.7]).collect();
        let v = g.interpolate(&vals, &[0.3, -0.2, 0.9], &mut rules).unwrap();
        assert!((v[0] - 3.7).abs() < 1e-14);

        let g = SparseGrid::new(&MultiIndexSet::chain(2)).unwrap();
        let vals: Vec<Vec<f64>> = (0..g.len()).map(|i| vec![g.coordinates(i)[0].powi(2)]).collect();
        let v = g.interpolate(&vals, &[0.5], &mut rules).unwrap();
        assert!((v[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn outside_domain_is_an_error() {
        let mut rules = RuleCache::new();
        let g = SparseGrid::new(&MultiIndexSet::root(2)).unwrap();
        assert_eq!(g.basis_values(&[1.5, 0.0], &mut rules), Err(Error::OutsideDomain));
    }
}
