//! Cross-module invariants: randomized oracle equivalences, structural
//! identities, and round-trip properties.

use foldover::design::{
    alias_matrix, model_matrix, FactorKind, HalfDesign, ModelOrder, ModelSpec, Runs,
};
use foldover::dof::{exact_dof, fake_factor_basis, partition_groups, replicate_pure_error, closed_form_dof};
use foldover::matrix::Matrix;
use proptest::prelude::*;

/// Strategy: a random half design that may contain center rows, replicates,
/// and sign-flipped duplicates. Filtered to rank m.
fn arb_half_design() -> impl Strategy<Value = HalfDesign> {
    (3usize..=6, 0usize..=5)
        .prop_flat_map(|(m, v)| {
            let rows = m + v;
            (
                Just(m),
                proptest::collection::vec(
                    proptest::collection::vec(-1i8..=1, m),
                    rows,
                ),
                proptest::collection::vec(0usize..rows.max(1), 0..=3),
                proptest::collection::vec(proptest::bool::ANY, 3),
            )
        })
        .prop_filter_map("rank-m half design", |(m, mut rows, dups, flips)| {
            // Inject structured duplicates: copy (or fold) earlier rows over
            // later ones so replicate groups actually occur.
            let n = rows.len();
            for (k, &src) in dups.iter().enumerate() {
                let dst = n - 1 - k;
                if src < dst {
                    let mut r = rows[src].clone();
                    if flips[k % flips.len()] {
                        for e in r.iter_mut() {
                            *e = -*e;
                        }
                    }
                    rows[dst] = r;
                }
            }
            let runs = Runs::from_rows(&rows).ok()?;
            HalfDesign::plain(runs, vec![FactorKind::QuadraticCapable; m]).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Closed-form degrees of freedom agree with the exact oracle: p matches
    /// replicate counting on the foldover exactly, and the rank-based g may
    /// exceed f + p only through extra lack of fit.
    #[test]
    fn closed_form_matches_rank_oracle(h in arb_half_design()) {
        let (f, p) = closed_form_dof(&h);
        let design = h.clone().foldover().into_design();
        prop_assert_eq!(replicate_pure_error(&design.all_runs()), p);
        for order in [ModelOrder::TwoFactorInteraction, ModelOrder::FullQuadratic] {
            let s = exact_dof(&design, order).unwrap();
            prop_assert_eq!(s.p, p);
            prop_assert!(s.g >= f + p, "g = {} < f + p = {}", s.g, f + p);
        }
        // Consistency: f never exceeds the null-space dimension.
        prop_assert!(f <= h.v());
        // Center runs force pure error and duplicated foldover rows.
        if h.n0() > 0 {
            prop_assert!(p >= 1);
            let fold = h.foldover();
            let centers = fold
                .runs()
                .iter_rows()
                .filter(|r| r.iter().all(|&e| e == 0))
                .count();
            prop_assert!(centers >= 2);
        }
    }

    /// Group partitioning is invariant to row permutation and global sign
    /// flips of rows.
    #[test]
    fn partition_invariance(h in arb_half_design(), seed in 0u64..1000) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows: Vec<Vec<i8>> = h.runs().iter_rows().map(|r| r.to_vec()).collect();
        rows.shuffle(&mut rng);
        for (i, row) in rows.iter_mut().enumerate() {
            if (seed >> (i % 60)) & 1 == 1 {
                for e in row.iter_mut() {
                    *e = -*e;
                }
            }
        }
        let permuted = HalfDesign::plain(
            Runs::from_rows(&rows).unwrap(),
            vec![FactorKind::QuadraticCapable; h.m()],
        )
        .unwrap();
        let a = partition_groups(&h);
        let b = partition_groups(&permuted);
        prop_assert_eq!(a.n0, b.n0);
        let mut ma = a.multiplicities();
        let mut mb = b.multiplicities();
        ma.sort_unstable();
        mb.sort_unstable();
        prop_assert_eq!(ma, mb);
        prop_assert_eq!(closed_form_dof(&h), closed_form_dof(&permuted));
    }

    /// The labeled null-space split always has the advertised shape.
    #[test]
    fn fake_basis_shape(h in arb_half_design()) {
        let (f, _) = closed_form_dof(&h);
        let basis = fake_factor_basis(&h).unwrap();
        prop_assert_eq!(basis.fake.cols(), f);
        prop_assert_eq!(basis.all().cols(), h.v());
        let ht = h.runs().to_matrix().transpose();
        prop_assert!(ht.matmul(&basis.all()).max_abs() < 1e-8);
    }

    /// Design files round-trip losslessly.
    #[test]
    fn design_io_round_trip(h in arb_half_design(), n_extra in 0usize..3, seed in 0u64..100) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = h.m();
        let extra_rows: Vec<Vec<i8>> = (0..n_extra)
            .map(|_| (0..m).map(|_| [-1i8, 0, 1][rng.random_range(0..3)]).collect())
            .collect();
        let extra = if extra_rows.is_empty() {
            Runs::new(0, m, Vec::new()).unwrap()
        } else {
            Runs::from_rows(&extra_rows).unwrap()
        };
        let design = h.foldover().augment(extra).unwrap();
        let dir = std::env::temp_dir().join(format!("foldover-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("d{seed}.json"));
        foldover::io::write_design(&path, &design, None).unwrap();
        let back = foldover::io::read_design(&path).unwrap();
        prop_assert_eq!(back.all_runs(), design.all_runs());
        prop_assert_eq!(back.base().half(), design.base().half());
        // Writing what was read reproduces the bytes: bit-exact round trip.
        let path2 = dir.join(format!("d{seed}-b.json"));
        foldover::io::write_design(&path2, &back, None).unwrap();
        let csv1 = std::fs::read(path.with_extension("csv")).unwrap();
        let csv2 = std::fs::read(path2.with_extension("csv")).unwrap();
        prop_assert_eq!(csv1, csv2);
    }
}

/// Main-effect variance identity: on a foldover, the main-effect block of
/// (X1ᵀX1)⁻¹ is exactly half of (HᵀH)⁻¹.
#[test]
fn foldover_variance_identity() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4242);
    let mut done = 0;
    while done < 20 {
        let m = rng.random_range(3..7usize);
        let v = rng.random_range(0..4usize);
        let rows: Vec<Vec<i8>> = (0..m + v)
            .map(|_| (0..m).map(|_| [-1i8, 0, 1][rng.random_range(0..3)]).collect())
            .collect();
        let Ok(h) = HalfDesign::plain(
            Runs::from_rows(&rows).unwrap(),
            vec![FactorKind::QuadraticCapable; m],
        ) else {
            continue;
        };
        let fold = h.foldover();
        let spec = ModelSpec::all_quadratic(ModelOrder::MainEffects, m);
        let mm = model_matrix(fold.runs(), &spec);
        let full_inv = mm.x1.gram_matrix().sym_inverse().unwrap();
        let half_inv = h.runs().to_matrix().gram().sym_inverse().unwrap();
        for i in 0..m {
            for j in 0..m {
                let lhs = full_inv[(i + 1, j + 1)];
                let rhs = 0.5 * half_inv[(i, j)];
                assert!((lhs - rhs).abs() < 1e-10, "block mismatch at ({i},{j})");
            }
        }
        done += 1;
    }
}

/// Symmetric inverse is an involution on well-conditioned inputs.
#[test]
fn sym_inverse_involution() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let k = rng.random_range(2..7usize);
        let n = k + rng.random_range(2..6usize);
        let a = Matrix::from_fn(n, k, |_, _| rng.random_range(-3..=3) as f64);
        let gram = a.gram();
        let Ok(inv) = gram.sym_inverse() else { continue };
        let back = inv.sym_inverse().unwrap();
        for i in 0..k {
            for j in 0..k {
                assert!(
                    (back[(i, j)] - gram[(i, j)]).abs() < 1e-6 * gram.max_abs(),
                    "involution broke at ({i},{j})"
                );
            }
        }
    }
}

/// Model-matrix column ordering is frozen: interactions in lexicographic
/// order, then squares of quadratic-capable factors.
#[test]
fn model_matrix_column_order_golden() {
    let spec = ModelSpec::new(
        ModelOrder::FullQuadratic,
        vec![
            FactorKind::QuadraticCapable,
            FactorKind::TwoLevel,
            FactorKind::QuadraticCapable,
            FactorKind::QuadraticCapable,
        ],
    );
    let names: Vec<String> = spec.second_order_terms().iter().map(|t| t.to_string()).collect();
    assert_eq!(
        names,
        ["d1d2", "d1d3", "d1d4", "d2d3", "d2d4", "d3d4", "d1^2", "d3^2", "d4^2"]
    );
}

/// The information matrix of a foldover has the block form with exact zeros
/// between mains and everything second order.
#[test]
fn foldover_information_block_structure() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let mut done = 0;
    while done < 25 {
        let m = rng.random_range(3..7usize);
        let v = rng.random_range(0..4usize);
        let rows: Vec<Vec<i8>> = (0..m + v)
            .map(|_| (0..m).map(|_| [-1i8, 0, 1][rng.random_range(0..3)]).collect())
            .collect();
        let Ok(h) = HalfDesign::plain(
            Runs::from_rows(&rows).unwrap(),
            vec![FactorKind::QuadraticCapable; m],
        ) else {
            continue;
        };
        let fold = h.foldover();
        let spec = ModelSpec::all_quadratic(ModelOrder::FullQuadratic, m);
        let mm = model_matrix(fold.runs(), &spec);
        // Main-effect rows of X1ᵀX2 cancel exactly in integer arithmetic.
        let cross = mm.x1.cross(&mm.x2);
        for row in cross.iter().skip(1) {
            assert!(row.iter().all(|&c| c == 0));
        }
        // Intercept-to-main block of X1ᵀX1 is exactly zero too.
        let gram = mm.x1.cross(&mm.x1);
        for (j, &entry) in gram[0].iter().enumerate().skip(1) {
            assert_eq!(entry, 0, "intercept column not orthogonal to main {j}");
        }
        let a = alias_matrix(&mm).unwrap();
        for i in 1..a.rows() {
            for j in 0..a.cols() {
                assert_eq!(a[(i, j)], 0.0);
            }
        }
        done += 1;
    }
}

/// Regular two-level fractions: the resolution-V half fraction of five
/// factors leaves main effects clean of two-factor interactions.
#[test]
fn half_fraction_resolution_v_alias_structure() {
    // 2^(5-1) with the five-factor defining relation: d5 = d1·d2·d3·d4.
    let mut rows: Vec<Vec<i8>> = Vec::new();
    for k in 0..16u32 {
        let mut r: Vec<i8> =
            (0..4).map(|j| if k >> j & 1 == 1 { 1i8 } else { -1 }).collect();
        let prod: i8 = r.iter().product();
        r.push(prod);
        rows.push(r);
    }
    let runs = Runs::from_rows(&rows).unwrap();
    let spec = ModelSpec::all_two_level(ModelOrder::TwoFactorInteraction, 5);
    let mm = model_matrix(&runs, &spec);
    let a = alias_matrix(&mm).unwrap();
    for i in 1..a.rows() {
        for j in 0..a.cols() {
            assert_eq!(a[(i, j)], 0.0, "main {} aliased with 2FI {}", i, j);
        }
    }
}

/// Rank decisions are insensitive to the cutoff across four orders of
/// magnitude on integer-entry design matrices.
#[test]
fn rank_tolerance_plateau() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
    for _ in 0..40 {
        let m = rng.random_range(3..8usize);
        let rows = m + rng.random_range(0..5usize);
        let a = Matrix::from_fn(rows, m, |_, _| rng.random_range(-1..=1) as f64);
        let r1 = a.rank_with_tol(1e-10).unwrap();
        let r2 = a.rank_with_tol(1e-8).unwrap();
        let r3 = a.rank_with_tol(1e-6).unwrap();
        assert!(r1 == r2 && r2 == r3, "rank moved with tolerance: {r1} {r2} {r3}");
    }
}

/// The mod-0 direct construction is universally optimal: every design
/// variance equals 1/(n/2).
#[test]
fn c0_variances_hit_lower_bound() {
    use foldover::construct::{construct_direct, ConstructOptions, Scheme};
    for (n, m) in [(16usize, 5usize), (16, 7), (24, 9), (32, 11)] {
        let built = construct_direct(Scheme::C0, n, m, &ConstructOptions::default()).unwrap();
        let v = foldover::criteria::design_variances(&built.half).unwrap();
        for vj in v {
            assert!((vj - 1.0 / (n / 2) as f64).abs() < 1e-12, "n={n} m={m}: v_j {vj}");
        }
    }
}

/// A saturated half design (v = 0) leaves no degrees of freedom: the
/// criterion reports an infinite sentinel with a diagnostic instead of
/// failing.
#[test]
fn eci_sentinel_when_no_degrees_of_freedom() {
    let rows: Vec<Vec<i8>> = (0..4)
        .map(|i| (0..4).map(|j| if i == j { 0 } else if j > i { 1 } else { -1 }).collect())
        .collect();
    let h = HalfDesign::plain(
        Runs::from_rows(&rows).unwrap(),
        vec![FactorKind::QuadraticCapable; 4],
    )
    .unwrap();
    let r = foldover::criteria::eci_foldover(&h, 0.05, ModelOrder::FullQuadratic).unwrap();
    assert!(r.eci.is_infinite());
    assert_eq!(r.g_used, 0);
    assert!(r.note.is_some());
}
