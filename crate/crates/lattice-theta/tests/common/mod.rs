#![allow(dead_code)]

use lattice_theta::{normalize_density, Lattice, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Identity plus a uniform perturbation, rejected until reasonably conditioned.
pub fn random_lattice(rng: &mut ChaCha8Rng, d: usize, spread: f64) -> Lattice {
    loop {
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-spread..spread)).collect())
            .collect();
        let m = Matrix::from_columns(&cols).unwrap();
        if m.det().abs() < 0.25 {
            continue;
        }
        let l = Lattice::new(m).unwrap();
        if l.lambda_min() > 0.05 {
            return l;
        }
    }
}

pub fn random_unit_lattice(rng: &mut ChaCha8Rng, d: usize) -> Lattice {
    normalize_density(&random_lattice(rng, d, 0.6))
}

pub fn random_shift(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Points of L in the coefficient box [-n, n]^d with |p − c|² ≤ r2.
pub fn box_count(l: &Lattice, c: &[f64], r2: f64, n: i64) -> usize {
    let d = l.dim();
    let side = (2 * n + 1) as usize;
    let mut count = 0;
    for idx in 0..side.pow(d as u32) {
        let mut k = idx;
        let z: Vec<i64> = (0..d)
            .map(|_| {
                let v = (k % side) as i64 - n;
                k /= side;
                v
            })
            .collect();
        let p = l.point(&z);
        let n2: f64 = p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
        if n2 <= r2 {
            count += 1;
        }
    }
    count
}

/// θ_{L+u}(α) by brute force over a coefficient box.
pub fn box_theta(l: &Lattice, u: &[f64], alpha: f64, n: i64) -> f64 {
    let d = l.dim();
    let side = (2 * n + 1) as usize;
    let mut s = 0.0;
    for idx in 0..side.pow(d as u32) {
        let mut k = idx;
        let z: Vec<i64> = (0..d)
            .map(|_| {
                let v = (k % side) as i64 - n;
                k /= side;
                v
            })
            .collect();
        let p = l.point(&z);
        let n2: f64 = p.iter().zip(u).map(|(a, b)| (a + b) * (a + b)).sum();
        s += (-std::f64::consts::PI * alpha * n2).exp();
    }
    s
}
