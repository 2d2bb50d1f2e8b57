mod common;

use cfran_core::map_engine::{combiner_sinr, fuse_estimates, joint_sinr, mmse_combiner, Branch};
use cfran_core::{Complex64, DMatrix, DVector};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn mmse_combiner_attains_max_rayleigh_quotient() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = random_channel(&mut rng, 4, 3);
    let (p, s2) = (1.3, 2e-3);
    for k in 0..3 {
        let v = mmse_combiner(&h, p, s2, k).unwrap();
        let got = combiner_sinr(&v, &h, p, s2, k);
        let want = max_rayleigh_quotient(&h, p, s2, k);
        assert!(rel_err(got, want) < 1e-8, "k={k}: {got} vs {want}");
    }
}

#[test]
fn combiner_sinr_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = random_channel(&mut rng, 5, 3);
    let v = mmse_combiner(&h, 1.0, 1e-2, 1).unwrap();
    let base = combiner_sinr(&v, &h, 1.0, 1e-2, 1);
    for c in [Complex64::new(-3.0, 0.5), Complex64::new(0.0, 1e-4), Complex64::new(1e3, -2e3)] {
        let scaled = combiner_sinr(&(&v * c), &h, 1.0, 1e-2, 1);
        assert!(rel_err(base, scaled) < 1e-12);
    }
}

#[test]
fn joint_sinr_matches_explicit_combiner() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = random_channel(&mut rng, 6, 4);
    let (p, s2) = (0.7, 5e-3);
    for k in 0..4 {
        let joint = joint_sinr(&h, p, s2, k).unwrap();
        let v = mmse_combiner(&h, p, s2, k).unwrap();
        let explicit = combiner_sinr(&v, &h, p, s2, k);
        assert!(rel_err(joint, explicit) < 1e-10, "{joint} vs {explicit}");
    }
}

#[test]
fn single_user_sinr_is_channel_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = random_channel(&mut rng, 7, 1);
    let want = 2.0 * h.column(0).norm_squared() / 0.1;
    assert!(rel_err(joint_sinr(&h, 2.0, 0.1, 0).unwrap(), want) < 1e-12);
}

#[test]
fn three_branch_fusion_matches_weight_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let k_users = 4;
    let branches: Vec<Branch> = (0..3)
        .map(|_| Branch {
            gains: DVector::from_fn(k_users, |_, _| cfran_core::channel::complex_normal(&mut rng)),
            noise: rng.random_range(0.1..2.0),
        })
        .collect();
    let p = 1.0;
    let k = 2;
    let report = fuse_estimates(&branches, p, k).unwrap();

    let a = DVector::from_fn(3, |j, _| branches[j].gains[k]);
    let g = DMatrix::from_fn(3, k_users, |j, i| branches[j].gains[i]);
    let mut f = interference_covariance(&g, p, 0.0, k);
    for j in 0..3 {
        f[(j, j)] += branches[j].noise;
    }
    let search = brute_force_fusion(&a, &f, p, 1e-7);
    assert!(rel_err(report.sinr, search) < 1e-4, "{} vs {search}", report.sinr);
    assert!(search <= report.sinr * (1.0 + 1e-9));
    for (j, b) in branches.iter().enumerate() {
        let own = p * a[j].norm_sqr() / f[(j, j)].re;
        assert!(report.sinr >= own);
        assert!(rel_err(own, b.sinr(p, k)) < 1e-12);
    }
    // Fused estimate carries exactly the fused SINR.
    let fused = report.fused_branch(&branches);
    assert!(rel_err(fused.sinr(p, k), report.sinr) < 1e-10);
}

#[test]
fn fusion_of_single_antenna_blocks_equals_joint_when_interference_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = random_channel(&mut rng, 5, 1);
    let (p, s2) = (1.0, 1e-2);
    let branches: Vec<Branch> = (0..5)
        .map(|m| Branch::mmse(&h.rows(m, 1).into_owned(), p, s2, 0).unwrap())
        .collect();
    let fused = fuse_estimates(&branches, p, 0).unwrap().sinr;
    let joint = joint_sinr(&h, p, s2, 0).unwrap();
    assert!(rel_err(fused, joint) < 1e-10);
}

#[test]
fn block_fusion_never_beats_joint_processing() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let h = random_channel(&mut rng, 8, 5);
        let (p, s2) = (1.0, 1e-3);
        for k in 0..5 {
            let branches: Vec<Branch> = (0..4)
                .map(|b| Branch::mmse(&h.rows(2 * b, 2).into_owned(), p, s2, k).unwrap())
                .collect();
            let fused = fuse_estimates(&branches, p, k).unwrap().sinr;
            let joint = joint_sinr(&h, p, s2, k).unwrap();
            assert!(le_rel(fused, joint, 1e-9), "{fused} > {joint}");
        }
    }
}
