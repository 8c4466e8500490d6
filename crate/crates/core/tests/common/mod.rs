#![allow(dead_code)]

use quaddiag::{gen_gaussian, gen_uniform01, GaussianStream, MatrixHandle};

pub fn example() -> MatrixHandle {
    MatrixHandle::from_rows(&[&[2.0, 1.0], &[0.0, 3.0]]).unwrap()
}

pub fn one() -> MatrixHandle {
    MatrixHandle::from_rows(&[&[1.0]]).unwrap()
}

fn symmetric(d: usize, seed: u64) -> MatrixHandle {
    let g = gen_gaussian(d, seed).unwrap();
    let mut data = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            data[i * d + j] = 0.5 * (g.get(i, j).unwrap() + g.get(j, i).unwrap());
        }
    }
    MatrixHandle::from_dense(d, data).unwrap()
}

fn diagonal(d: usize, seed: u64) -> MatrixHandle {
    let g = gen_gaussian(d, seed).unwrap();
    MatrixHandle::diagonal(&g.diag()).unwrap()
}

/// Roughly 30% dense, asymmetric, sparse storage; the diagonal is always kept.
fn sparse(d: usize, seed: u64) -> MatrixHandle {
    let g = gen_gaussian(d, seed).unwrap();
    let keep = gen_uniform01(d, seed ^ 0xABCD).unwrap();
    let mut trip = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if i == j || keep.get(i, j).unwrap() < 0.3 {
                trip.push((i, j, g.get(i, j).unwrap()));
            }
        }
    }
    MatrixHandle::from_triplets(d, trip).unwrap()
}

/// Test battery: dense Gaussian, uniform, diagonal, symmetric and sparse
/// matrices for d in {1, 2, 5, 8}, plus the two hand-derived anchors.
pub fn battery() -> Vec<(String, MatrixHandle)> {
    let mut out = vec![
        ("anchor-[1]".to_string(), one()),
        ("anchor-[[2,1],[0,3]]".to_string(), example()),
    ];
    for d in [1usize, 2, 5, 8] {
        let s = 100 + d as u64;
        out.push((format!("gauss-{d}"), gen_gaussian(d, s).unwrap()));
        out.push((format!("uniform-{d}"), gen_uniform01(d, s).unwrap()));
        out.push((format!("diagonal-{d}"), diagonal(d, s + 1)));
        out.push((format!("symmetric-{d}"), symmetric(d, s + 2)));
        out.push((format!("sparse-{d}"), sparse(d, s + 3)));
    }
    out
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Random vector from a stream reserved for test inputs.
pub fn random_vec(seed: u64, j: u64, d: usize) -> Vec<f64> {
    GaussianStream::validation(seed ^ 0x7e57).sample(j, d)
}
