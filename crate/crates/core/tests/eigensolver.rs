//! The Lanczos solver against nalgebra's dense symmetric eigensolver.

use proptest::prelude::*;
use spectral_labels::*;

fn random_corpus(d: usize, rows: Vec<Vec<u32>>) -> SparseCorpus {
    let rows = rows.into_iter().map(|r| r.into_iter().map(|v| v % d as u32).collect()).collect();
    SparseCorpus::new(d, rows).unwrap()
}

fn compare(m2: &PairwiseMoment, k: usize) {
    let dense = dense_eig(m2, k, 1e-10).unwrap();
    let lz = truncated_eig(m2, k, 1e-10, 10 * m2.dim(), 3).unwrap();
    for i in 0..k {
        let (a, b) = (dense.values[i], lz.values[i]);
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "value {i}: {a} vs {b}");
        // residual of the Lanczos pair against the actual matrix
        let w = lz.vectors.column(i).clone_owned();
        let mut r = vec![0.0; m2.dim()];
        m2.matvec(w.as_slice(), &mut r);
        let res: f64 = r.iter().zip(w.iter()).map(|(x, y)| (x - b * y).powi(2)).sum::<f64>().sqrt();
        assert!(res <= 1e-8 * b, "residual {res} for value {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lanczos_matches_dense(
        d in 8usize..60,
        rows in prop::collection::vec(prop::collection::vec(0u32..1000, 2..8), 60..200),
        k in 1usize..5,
    ) {
        let c = random_corpus(d, rows);
        let m2 = estimate_m2(&c, Estimator::Full, Exec::Sequential).unwrap();
        // skip spectra whose k-th value is not separated from zero
        prop_assume!(k <= d && dense_eig(&m2, k, 1e-6).is_ok());
        compare(&m2, k);
    }
}

#[test]
fn lanczos_on_trained_scale_corpus() {
    let truth = sample_params(200, 20, 6, 0.3, 9).unwrap();
    let (c, _) = generate_corpus(&truth, 5000, 15, 2, 10).unwrap();
    let m2 = estimate_m2(&c, Estimator::Full, Exec::Sequential).unwrap();
    compare(&m2, 6);
}

#[test]
fn eigenvectors_are_orthonormal() {
    let truth = sample_params(80, 10, 4, 0.5, 2).unwrap();
    let (c, _) = generate_corpus(&truth, 3000, 10, 1, 3).unwrap();
    let m2 = estimate_m2(&c, Estimator::Full, Exec::Sequential).unwrap();
    let e = truncated_eig(&m2, 4, 1e-10, 800, 1).unwrap();
    let gram = e.vectors.transpose() * &e.vectors;
    assert!((gram - nalgebra::DMatrix::<f64>::identity(4, 4)).norm() <= 1e-10);
}
