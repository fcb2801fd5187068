use std::sync::Arc;

use adaptsc_core::analytic_ode::ORACLE_LEVEL;
use adaptsc_core::linalg::Euclidean;
use adaptsc_core::sparse_grid::*;
use adaptsc_core::{MultiIndex, MultiIndexSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grow(dim: usize, picks: &[usize]) -> MultiIndexSet {
    let mut s = MultiIndexSet::root(dim);
    for &p in picks {
        let rm: Vec<_> = s.reduced_margin().into_iter().collect();
        s.insert(rm[p % rm.len()].clone()).unwrap();
    }
    s
}

fn arb_set(max_dim: usize, max_picks: usize) -> impl Strategy<Value = MultiIndexSet> {
    (1..=max_dim, prop::collection::vec(any::<usize>(), 0..max_picks)).prop_map(|(d, p)| grow(d, &p))
}

/// `∫ f² dρ` by the tensor 1025-point Clenshaw–Curtis rule (d = 1, 2).
fn tensor_quadrature(dim: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let y = cc_points(ORACLE_LEVEL).points;
    let w = cc_weights(ORACLE_LEVEL);
    match dim {
        1 => y.iter().zip(&w).map(|(a, wa)| wa * f(&[*a]).powi(2)).sum(),
        2 => {
            let mut s = 0.0;
            for (a, wa) in y.iter().zip(&w) {
                for (b, wb) in y.iter().zip(&w) {
                    s += wa * wb * f(&[*a, *b]).powi(2);
                }
            }
            s
        }
        _ => unreachable!(),
    }
}

#[test]
fn cc_levels_are_nested() {
    for l in 1..8 {
        let coarse = cc_points(l);
        let fine = cc_points(l + 1);
        assert_eq!(fine.len(), num_points(l + 1));
        for (p, n) in coarse.points.iter().zip(&coarse.nodes) {
            let k = fine.nodes.iter().position(|m| m == n).expect("node missing on the finer level");
            assert_eq!(fine.points[k], *p);
        }
    }
}

#[test]
fn total_degree_sets_reproduce_their_polynomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rules = RuleCache::new();
    for d in 1..=3 {
        for w in 0..=3 {
            let set = MultiIndexSet::total_degree(d, w);
            let grid = Arc::new(SparseGrid::new(&set).unwrap());
            // y^a is exact when some ν in the set has 2^{ν_i − 1} ≥ a_i (and a_i = 0 at level 1).
            for nu in set.iter() {
                let a: Vec<u32> =
                    nu.levels().iter().map(|&l| if l == 1 { 0 } else { 1 << (l - 1) }).collect();
                let f = |y: &[f64]| y.iter().zip(&a).map(|(yi, &ai)| yi.powi(ai as i32)).product::<f64>();
                let s = SparseInterpolant::from_fn(grid.clone(), 0.0, |y| vec![f(y)]).unwrap();
                for _ in 0..20 {
                    let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    let v = s.interpolate(&y, &mut rules).unwrap()[0];
                    assert!((v - f(&y)).abs() < 1e-12, "d={d} w={w} a={a:?}: {v} vs {}", f(&y));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn combination_coefficients_sum_to_one(s in arb_set(4, 15)) {
        let c = combination_coefficients(&s).unwrap();
        prop_assert_eq!(c.values().sum::<i64>(), 1);
        for nu in c.keys() {
            prop_assert!(s.contains(nu));
        }
    }

    #[test]
    fn interpolant_reproduces_nodal_values(s in arb_set(3, 12), seed in any::<u64>()) {
        let grid = Arc::new(SparseGrid::new(&s).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<Vec<f64>> = (0..grid.len()).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let mut rules = RuleCache::new();
        for i in 0..grid.len() {
            let v = grid.interpolate(&values, &grid.coordinates(i), &mut rules).unwrap();
            prop_assert!((v[0] - values[i][0]).abs() < 1e-13 && (v[1] - values[i][1]).abs() < 1e-13);
        }
    }

    #[test]
    fn expansion_agrees_with_nodal_evaluation(s in arb_set(3, 10), seed in any::<u64>()) {
        let grid = Arc::new(SparseGrid::new(&s).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<Vec<f64>> = (0..grid.len()).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect();
        let si = SparseInterpolant::new(grid, values, 0.0).unwrap();
        let e = si.expansion(&mut LegendreTransforms::new()).unwrap();
        let mut rules = RuleCache::new();
        for _ in 0..10 {
            let y: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let a = si.interpolate(&y, &mut rules).unwrap()[0];
            let b = e.evaluate(&y).unwrap()[0];
            prop_assert!((a - b).abs() < 1e-11);
        }
    }
}

#[test]
fn norms_match_tensor_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut transforms = LegendreTransforms::new();
    let mut gram = GramTable::new(Density::Uniform);
    let mut rules = RuleCache::new();
    let sets = [
        MultiIndexSet::chain(4),
        grow(2, &[0, 1, 0, 3, 2]),
        MultiIndexSet::total_degree(2, 3),
        grow(2, &[1, 1, 1, 0, 5, 2]),
    ];
    for set in sets {
        let d = set.dim();
        let grid = Arc::new(SparseGrid::new(&set).unwrap());
        let values: Vec<Vec<f64>> = (0..grid.len()).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect();
        let si = SparseInterpolant::new(grid.clone(), values.clone(), 0.0).unwrap();
        let zero = SparseInterpolant::new(
            Arc::new(SparseGrid::new(&MultiIndexSet::root(d)).unwrap()),
            vec![vec![0.0]],
            0.0,
        )
        .unwrap();

        let quad = tensor_quadrature(d, |y| si.interpolate(y, &mut RuleCache::new()).unwrap()[0]).sqrt();
        let legendre = difference_norm(&si, &zero, &Euclidean, &mut transforms).unwrap();
        let g = cross_gram(&grid, &grid, &mut gram);
        let mut gram_sq = 0.0;
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                gram_sq += values[i][0] * g[i][j] * values[j][0];
            }
        }
        assert!((legendre - quad).abs() < 1e-10, "{set:?}: {legendre} vs {quad}");
        assert!((gram_sq.sqrt() - quad).abs() < 1e-10, "{set:?}: {} vs {quad}", gram_sq.sqrt());

        // A single Lagrange polynomial.
        let z = grid.points()[grid.len() / 2].clone();
        let k = grid.index_of(&z).unwrap();
        let lz = lagrange_norm(&grid, &z, &mut gram).unwrap();
        let q = tensor_quadrature(d, |y| grid.basis_values(y, &mut rules).unwrap()[k]).sqrt();
        assert!((lz - q).abs() < 1e-10, "{set:?}: {lz} vs {q}");
    }
}

#[test]
fn difference_of_nested_interpolants_matches_quadrature() {
    let f = |y: &[f64]| (1.5 * y[0]).sin() * (0.5 + y[1] * y[1]).recip();
    let small = MultiIndexSet::total_degree(2, 2);
    let big = small.enhance();
    let a = SparseInterpolant::from_fn(Arc::new(SparseGrid::new(&big).unwrap()), 0.0, |y| vec![f(y)]).unwrap();
    let b = SparseInterpolant::from_fn(Arc::new(SparseGrid::new(&small).unwrap()), 0.0, |y| vec![f(y)]).unwrap();
    let n = difference_norm(&a, &b, &Euclidean, &mut LegendreTransforms::new()).unwrap();
    let mut r = RuleCache::new();
    let q = tensor_quadrature(2, |y| a.interpolate(y, &mut r).unwrap()[0] - b.interpolate(y, &mut r).unwrap()[0]).sqrt();
    assert!((n - q).abs() < 1e-10, "{n} vs {q}");
    assert!(n > 1e-4);
}

#[test]
fn points_of_a_root_set() {
    let g = SparseGrid::new(&MultiIndexSet::root(3)).unwrap();
    assert_eq!(g.len(), 1);
    assert_eq!(g.coordinates(0), vec![0.0; 3]);
    let nu = MultiIndex::new(vec![2, 1, 1]).unwrap();
    assert_eq!(tensor_size(&nu), 3);
}
