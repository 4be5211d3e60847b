use std::collections::BTreeSet;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realhom::covering::{run_covering, Profile};
use realhom::grid::{self, GridSpec};
use realhom::homology::{
    boundary_matrix, complex_from_facets, homology_from_complex, rational_betti, smith_normal_form,
};
use realhom::meb::min_enclosing_ball;
use realhom::nerve::{build_nerve, build_projective_nerve, projective_reduce, DEFAULT_SIMPLEX_BUDGET};
use realhom::pointestimates::{kappa_at, mu_norm};
use realhom::polysys::{parse_system, sample_kostlan, scaled, serialize_system};
use realhom::PolynomialSystem;

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn random_orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

fn arb_system() -> impl Strategy<Value = PolynomialSystem> {
    (1usize..=3, any::<u64>()).prop_flat_map(|(n, seed)| {
        (1..=n).prop_flat_map(move |m| {
            proptest::collection::vec(2u32..=3, m).prop_map(move |d| sample_kostlan(n, &d, seed).unwrap())
        })
    })
}

fn arb_unit(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, dim)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(unit)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_identity((f, x) in arb_system().prop_flat_map(|f| { let d = f.n() + 1; (Just(f), arb_unit(d)) })) {
        let jac = f.jacobian(&x).unwrap();
        let fx = f.evaluate(&x).unwrap();
        for (i, d) in f.degrees().iter().enumerate() {
            let lhs: f64 = (0..x.len()).map(|j| jac[(i, j)] * x[j]).sum();
            prop_assert!((lhs - f64::from(*d) * fx[i]).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn homogeneity((f, x, lambda) in arb_system().prop_flat_map(|f| { let d = f.n() + 1; (Just(f), arb_unit(d), 0.1f64..3.0) })) {
        let y: Vec<f64> = x.iter().map(|v| v * lambda).collect();
        let fx = f.evaluate(&x).unwrap();
        let fy = f.evaluate(&y).unwrap();
        for (i, d) in f.degrees().iter().enumerate() {
            let expect = lambda.powi(*d as i32) * fx[i];
            prop_assert!((fy[i] - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn weyl_norm_orthogonal_invariance(f in arb_system(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_orthogonal(f.n() + 1, &mut rng);
        let g = f.pullback_orthogonal(&u).unwrap();
        prop_assert!((g.weyl_norm() - f.weyl_norm()).abs() <= 1e-10);
        // mu is invariant as well: mu(f o U, x) = mu(f, U x)
        let x = unit((0..=f.n()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let ux: Vec<f64> = (0..x.len()).map(|i| (0..x.len()).map(|j| u[(i, j)] * x[j]).sum()).collect();
        let (a, b) = (mu_norm(&g, &x).unwrap(), mu_norm(&f, &ux).unwrap());
        prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0));
    }

    #[test]
    fn parse_round_trip(f in arb_system()) {
        let text = serialize_system(&f);
        let g = parse_system(&text).unwrap();
        prop_assert_eq!(&g, &f);
        prop_assert_eq!(serialize_system(&g), text);
    }

    #[test]
    fn scale_invariance((f, x, lambda) in arb_system().prop_flat_map(|f| { let d = f.n() + 1; (Just(f), arb_unit(d), 0.01f64..100.0) })) {
        let g = scaled(&f, lambda).unwrap();
        let (a, b) = (mu_norm(&f, &x).unwrap(), mu_norm(&g, &x).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        let (a, b) = (kappa_at(&f, &x).unwrap(), kappa_at(&g, &x).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }
}

// grid ----------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_covers_sphere(n in 1usize..=3, k in 3u32..=5, x in proptest::collection::vec(-1.0f64..1.0, 4)) {
        let x = unit(x[..=n].to_vec());
        let spec = GridSpec::new(n, k).unwrap();
        let nearest = spec.enumerate(u128::MAX).unwrap().map(|p| dist(&p.sphere(), &x)).fold(f64::INFINITY, f64::min);
        prop_assert!(nearest <= grid::sep(spec.eta(), n));
    }
}

#[test]
fn grid_points_are_unit_distinct_and_symmetric() {
    for n in 1..=3 {
        let spec = GridSpec::new(n, 3).unwrap();
        let pts: Vec<Vec<i64>> = spec.enumerate(u128::MAX).unwrap().map(|p| p.coords().to_vec()).collect();
        let set: BTreeSet<Vec<i64>> = pts.iter().cloned().collect();
        assert_eq!(set.len(), pts.len());
        assert_eq!(pts.len() as u128, spec.count());
        for p in &pts {
            let neg: Vec<i64> = p.iter().map(|v| -v).collect();
            assert!(set.contains(&neg));
        }
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        for p in spec.enumerate(u128::MAX).unwrap() {
            let s = p.sphere();
            assert!((s.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }
}

// smith normal form ---------------------------------------------------------

/// Determinant by fraction-free elimination over i128.
fn det(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    let mut a = m.to_vec();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (0..n)
        .rev()
        .flat_map(|last| {
            subsets(last, k - 1).into_iter().map(move |mut s| {
                s.push(last);
                s
            })
        })
        .collect()
}

/// Determinantal divisors: gcd of all k x k minors, for k = 1.. until zero.
fn minor_gcds(m: &[Vec<i64>]) -> Vec<i128> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut out = Vec::new();
    for k in 1..=rows.min(cols) {
        let mut g = 0;
        for rs in subsets(rows, k) {
            for cs in subsets(cols, k) {
                let minor: Vec<Vec<i128>> =
                    rs.iter().map(|&i| cs.iter().map(|&j| i128::from(m[i][j])).collect()).collect();
                g = gcd(g, det(&minor));
            }
        }
        if g == 0 {
            break;
        }
        out.push(g);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn snf_matches_minor_gcds(m in (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(-5i64..=5, c), r)
    })) {
        let form = smith_normal_form(&m);
        let divisors = minor_gcds(&m);
        prop_assert_eq!(form.rank, divisors.len());
        let mut prod = 1i128;
        for (d, expect) in form.diagonal.iter().zip(&divisors) {
            prod *= i128::try_from(d.clone()).unwrap();
            prop_assert_eq!(prod, *expect);
        }
        for w in form.diagonal.windows(2) {
            prop_assert!((&w[1] % &w[0]) == 0.into());
        }
    }
}

// minimum enclosing ball ----------------------------------------------------

/// Independent oracle: the smallest ball among circumballs of subsets that
/// contain every point, with circumcenters from Cramer-free least squares
/// on the affine hull computed by Gram-Schmidt.
fn meb_oracle(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let support: Vec<&Vec<f64>> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &points[i]).collect();
        let Some(center) = circumcenter(&support) else { continue };
        let r = support.iter().map(|p| dist(p, &center)).fold(0.0, f64::max);
        if points.iter().all(|p| dist(p, &center) <= r + 1e-12) {
            best = best.min(r);
        }
    }
    best
}

fn circumcenter(support: &[&Vec<f64>]) -> Option<Vec<f64>> {
    let p0 = support[0];
    // orthonormal basis of the affine hull directions
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in &support[1..] {
        let mut v: Vec<f64> = p.iter().zip(p0).map(|(a, b)| a - b).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-9 {
            return None;
        }
        basis.push(v.into_iter().map(|x| x / norm).collect());
    }
    // solve for c = p0 + sum t_j b_j with |c - p|^2 = |c - p0|^2
    let k = basis.len();
    let coords: Vec<Vec<f64>> = support[1..]
        .iter()
        .map(|p| basis.iter().map(|b| p.iter().zip(p0).zip(b).map(|((x, y), z)| (x - y) * z).sum()).collect())
        .collect();
    let a = DMatrix::from_fn(k, k, |i, j| 2.0 * coords[i][j]);
    let rhs = nalgebra::DVector::from_fn(k, |i, _| coords[i].iter().map(|v| v * v).sum());
    let t = if k == 0 { nalgebra::DVector::zeros(0) } else { a.lu().solve(&rhs)? };
    let mut c = p0.clone();
    for (tj, b) in t.iter().zip(&basis) {
        c.iter_mut().zip(b).for_each(|(x, y)| *x += tj * y);
    }
    Some(c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn meb_matches_oracle(pts in (1usize..=4).prop_flat_map(|d| {
        proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, d), 1..=6)
    })) {
        let ball = min_enclosing_ball(&pts).unwrap();
        let oracle = meb_oracle(&pts);
        prop_assert!((ball.radius - oracle).abs() <= 1e-9, "{} vs {}", ball.radius, oracle);
        for p in &pts {
            prop_assert!(dist(p, &ball.center) <= ball.radius + 1e-12 * (1.0 + ball.radius));
        }
    }
}

// nerve ---------------------------------------------------------------------

fn brute_force_nerve(points: &[Vec<f64>], eps: f64, q_max: usize) -> Vec<Vec<Vec<usize>>> {
    let mut lists = vec![Vec::new(); q_max + 1];
    for (q, list) in lists.iter_mut().enumerate() {
        let mut subs = subsets(points.len(), q + 1);
        subs.sort();
        for s in subs {
            let pts: Vec<Vec<f64>> = s.iter().map(|&i| points[i].clone()).collect();
            if meb_oracle(&pts) < eps {
                list.push(s);
            }
        }
    }
    lists
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nerve_matches_brute_force(
        pts in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 2), 1..=9),
        eps in 0.1f64..0.9,
    ) {
        let (c, _) = build_nerve(&pts, eps, 2, DEFAULT_SIMPLEX_BUDGET).unwrap();
        prop_assert_eq!(c.to_lists(), brute_force_nerve(&pts, eps, 2));
    }

    #[test]
    fn nerve_is_monotone_in_epsilon(
        pts in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 1..=12),
        eps in 0.1f64..0.6,
        grow in 0.0f64..0.4,
    ) {
        let (small, _) = build_nerve(&pts, eps, 3, DEFAULT_SIMPLEX_BUDGET).unwrap();
        let (large, _) = build_nerve(&pts, eps + grow, 3, DEFAULT_SIMPLEX_BUDGET).unwrap();
        for q in 0..=3 {
            for s in small.iter(q) {
                prop_assert!(large.index_of(s).is_some());
            }
        }
    }

    #[test]
    fn projective_nerve_matches_sign_search(
        raw in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 1..=6),
        eps in 0.2f64..0.9,
    ) {
        let mut seen = BTreeSet::new();
        let reps: Vec<Vec<f64>> = raw
            .into_iter()
            .filter(|v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2 && v[0] != 0.0)
            .map(unit)
            .map(|v| if v[0] < 0.0 { v.iter().map(|x| -x).collect() } else { v })
            .filter(|v: &Vec<f64>| seen.insert(v.iter().map(|x| x.to_bits()).collect::<Vec<_>>()))
            .collect();
        prop_assume!(!reps.is_empty());
        let mut cloud = reps.clone();
        cloud.extend(reps.iter().map(|v| v.iter().map(|x| -x).collect::<Vec<f64>>()));
        let reduced = projective_reduce(&cloud).unwrap();
        prop_assert_eq!(reduced.len(), reps.len());
        let (c, _) = build_projective_nerve(&reduced, eps, 2, DEFAULT_SIMPLEX_BUDGET).unwrap();
        for q in 0..=2 {
            for s in subsets(reduced.len(), q + 1) {
                let present = (0..1usize << q).any(|signs| {
                    let pts: Vec<Vec<f64>> = s.iter().enumerate().map(|(j, &i)| {
                        let flip = j > 0 && signs >> (j - 1) & 1 == 1;
                        reduced[i].iter().map(|x| if flip { -x } else { *x }).collect()
                    }).collect();
                    meb_oracle(&pts) < eps
                });
                prop_assert_eq!(c.index_of(&s).is_some(), present, "simplex {:?}", s);
            }
        }
    }
}

// homology ------------------------------------------------------------------

fn random_clique_complex(seed: u64) -> realhom::nerve::NerveComplex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> =
        (0..rng.random_range(3..14)).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
    let eps = rng.random_range(0.15..0.45);
    build_nerve(&pts, eps, 3, DEFAULT_SIMPLEX_BUDGET).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_of_boundary_vanishes(seed in any::<u64>()) {
        let c = random_clique_complex(seed);
        for k in 1..c.q_max() {
            let lower = boundary_matrix(&c, k).unwrap();
            let upper = boundary_matrix(&c, k + 1).unwrap();
            prop_assert!(lower.compose(&upper).iter().flatten().all(|&v| v == 0));
            prop_assert!(upper.columns.iter().all(|col| col.len() == k + 2));
        }
    }

    #[test]
    fn betti_agree_with_rational_path_and_euler(seed in any::<u64>()) {
        let c = random_clique_complex(seed);
        let h = homology_from_complex(&c, 2).unwrap();
        prop_assert_eq!(&h.betti, &rational_betti(&c, 2).unwrap());
        // planar point sets give complexes with torsion-free homology
        prop_assert!(h.torsion.iter().all(|t| t.is_empty()));
        if c.count(3) == 0 {
            let chi: i64 = (0..=2).map(|k| if k % 2 == 0 { 1 } else { -1 } * c.count(k) as i64).sum();
            let alt: i64 = h.betti.iter().enumerate().map(|(k, b)| if k % 2 == 0 { 1 } else { -1 } * *b as i64).sum();
            prop_assert_eq!(chi, alt);
        }
    }
}

#[test]
fn euler_characteristic_of_test_triangulations() {
    let rp2 = complex_from_facets(6, 3, &rp2_facets()).unwrap();
    let h = homology_from_complex(&rp2, 2).unwrap();
    let chi: i64 = (0..=2).map(|k| if k % 2 == 0 { 1 } else { -1 } * rp2.count(k) as i64).sum();
    assert_eq!(chi, 1);
    assert_eq!(
        h.betti.iter().enumerate().map(|(k, b)| if k % 2 == 0 { *b as i64 } else { -(*b as i64) }).sum::<i64>(),
        1
    );
    assert_eq!(rational_betti(&rp2, 2).unwrap(), vec![1, 0, 0]);
}

fn rp2_facets() -> Vec<Vec<usize>> {
    [[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 1, 5], [1, 2, 4], [2, 3, 5], [1, 3, 4], [2, 4, 5], [1, 3, 5]]
        .iter()
        .map(|f| f.to_vec())
        .collect()
}

// covering ------------------------------------------------------------------

#[test]
fn covering_is_antipodally_closed_and_sorted() {
    let f =
        PolynomialSystem::from_terms(2, &[(2, &[(&[2, 0, 0], 1.0), (&[0, 2, 0], 1.0), (&[0, 0, 2], -2.0)])]).unwrap();
    let cov = run_covering(&f, &Profile::practical()).unwrap();
    let set: BTreeSet<Vec<u64>> = cov.points.iter().map(|p| p.iter().map(|v| (v + 0.0).to_bits()).collect()).collect();
    for p in &cov.points {
        let neg: Vec<u64> = p.iter().map(|v| (-v + 0.0).to_bits()).collect();
        assert!(set.contains(&neg));
    }
    assert!(cov.coords.windows(2).all(|w| w[0] < w[1]));
    // every point is within r of the zero set x2 = +-1/sqrt 3
    let z = 1.0 / 3f64.sqrt();
    for p in &cov.points {
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let nearest = [z, -z]
            .iter()
            .map(|&h| {
                let s = (2.0f64 / 3.0).sqrt();
                ((rho - s).powi(2) + (p[2] - h).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= cov.r, "{nearest} > {}", cov.r);
    }
}
