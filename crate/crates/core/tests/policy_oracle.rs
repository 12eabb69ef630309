mod common;

use colband::linalg::Matrix;
use colband::policies::{BanditPolicy, Candidate, CoLin, FactorUcb};
use colband::similarity::SimilarityMatrix;
use common::{gauss_jordan_inverse, solve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kron(w: &[f64], x: &[f64]) -> Vec<f64> {
    w.iter()
        .flat_map(|wj| x.iter().map(move |xi| wj * xi))
        .collect()
}

fn quad(a: &[Vec<f64>], z: &[f64]) -> f64 {
    let inv = gauss_jordan_inverse(a);
    let mut s = 0.0;
    for (r, row) in inv.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            s += z[r] * v * z[c];
        }
    }
    s
}

fn add_outer(a: &mut [Vec<f64>], u: &[f64]) {
    for r in 0..u.len() {
        for c in 0..u.len() {
            a[r][c] += u[r] * u[c];
        }
    }
}

fn eye(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect()
}

/// Column `i` of the column-major reshape of `flat` into `p × m`.
fn column(flat: &[f64], p: usize, i: usize) -> Vec<f64> {
    flat[i * p..(i + 1) * p].to_vec()
}

/// Shared parameter `Θ w_i` from the flattened estimate.
fn shared(flat: &[f64], p: usize, w_i: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; p];
    for (j, wj) in w_i.iter().enumerate() {
        for (r, v) in column(flat, p, j).iter().enumerate() {
            s[r] += wj * v;
        }
    }
    s
}

fn test_w() -> SimilarityMatrix {
    let raw = Matrix::from_rows(&[
        vec![0.6, 0.3, 0.1],
        vec![0.3, 0.5, 0.2],
        vec![0.1, 0.2, 0.7],
    ])
    .unwrap();
    SimilarityMatrix::from_matrix(raw, 100.0).unwrap()
}

fn random_stream(seed: u64, d: usize, m: usize, n: usize) -> Vec<(usize, Candidate, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let arm = rng.random_range(0..4);
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            (
                rng.random_range(0..m),
                Candidate::new(format!("a{arm}"), x),
                rng.random_range(0.0..1.0),
            )
        })
        .collect()
}

#[test]
fn colin_matches_dense_reference() {
    let (d, alpha) = (3, 0.7);
    let w = test_w();
    let m = w.m();
    let mut pol = CoLin::new(alpha, d, w.clone());
    let mut a = eye(d * m);
    let mut b = vec![0.0; d * m];
    for (cluster, cand, reward) in random_stream(1, d, m, 60) {
        let w_i = w.column(cluster);
        let flat = solve(&a, &b);
        let u = kron(&w_i, &cand.features);
        let th = shared(&flat, d, &w_i);
        let want = th
            .iter()
            .zip(&cand.features)
            .map(|(p, q)| p * q)
            .sum::<f64>()
            + alpha * quad(&a, &u).sqrt();
        let got = pol.scores(cluster, std::slice::from_ref(&cand)).unwrap()[0];
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");

        pol.update(cluster, &cand, reward).unwrap();
        add_outer(&mut a, &u);
        for (bi, ui) in b.iter_mut().zip(&u) {
            *bi += reward * ui;
        }
    }
    let flat = solve(&a, &b);
    for i in 0..m {
        let want = column(&flat, d, i);
        for (r, v) in want.iter().enumerate() {
            assert!((pol.theta().get(r, i) - v).abs() < 1e-10);
        }
    }
}

#[test]
fn factorucb_matches_dense_reference() {
    let (d, dl, a1, a2) = (2, 2, 0.4, 0.3);
    let w = test_w();
    let m = w.m();
    let p = d + dl;
    let mut pol = FactorUcb::new(a1, a2, d, dl, w.clone()).with_latent_init(5, 0.2);

    let mut a = eye(p * m);
    let mut b = vec![0.0; p * m];
    // per arm: (E, d vector)
    let mut arms: std::collections::HashMap<String, (Vec<Vec<f64>>, Vec<f64>)> = Default::default();

    for (cluster, cand, reward) in random_stream(2, d, m, 80) {
        let w_i = w.column(cluster);
        let (e, dv) = arms
            .entry(cand.arm_id.clone())
            .or_insert_with(|| (eye(dl), pol.fresh_arm(&cand.arm_id).v_hat.clone()))
            .clone();
        let v_hat = solve(&e, &dv);
        let mut z = cand.features.clone();
        z.extend(&v_hat);
        let u = kron(&w_i, &z);
        let flat = solve(&a, &b);
        let sh = shared(&flat, p, &w_i);
        let g = sh[d..].to_vec();

        let want = sh.iter().zip(&z).map(|(s, zi)| s * zi).sum::<f64>()
            + a1 * quad(&a, &u).sqrt()
            + a2 * quad(&e, &g).sqrt();
        let got = pol.scores(cluster, std::slice::from_ref(&cand)).unwrap()[0];
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");

        pol.update(cluster, &cand, reward).unwrap();
        let residual = reward
            - sh[..d]
                .iter()
                .zip(&cand.features)
                .map(|(s, x)| s * x)
                .sum::<f64>();
        add_outer(&mut a, &u);
        for (bi, ui) in b.iter_mut().zip(&u) {
            *bi += reward * ui;
        }
        let entry = arms.get_mut(&cand.arm_id).unwrap();
        add_outer(&mut entry.0, &g);
        for (di, gi) in entry.1.iter_mut().zip(&g) {
            *di += gi * residual;
        }
        let want_v = solve(&entry.0, &entry.1);
        for (x, y) in pol.arm(&cand.arm_id).unwrap().v_hat.iter().zip(&want_v) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn factorucb_first_step_by_hand() {
    // d = d_l = 1, one cluster: after one update with x = 1 and reward 1 from
    // v̂ = v, Θ = (1, v)/(2 + v²) and E is untouched because g was zero.
    let w = SimilarityMatrix::identity(1);
    let mut pol = FactorUcb::new(0.5, 0.25, 1, 1, w).with_latent_init(11, 0.3);
    let v = pol.fresh_arm("a").v_hat[0];
    assert!(v != 0.0);
    let cand = Candidate::new("a", vec![1.0]);
    pol.update(0, &cand, 1.0).unwrap();
    let den = 2.0 + v * v;
    assert!((pol.theta().get(0, 0) - 1.0 / den).abs() < 1e-15);
    assert!((pol.theta().get(1, 0) - v / den).abs() < 1e-15);
    assert_eq!(pol.arm("a").unwrap().v_hat, vec![v]);

    let mean = (1.0 + v * v) / den;
    let want = mean + 0.5 * mean.sqrt() + 0.25 * (v / den).abs();
    let got = pol.scores(0, &[cand]).unwrap()[0];
    assert!((got - want).abs() < 1e-14, "{got} vs {want}");
}
