//! Deterministic low-discrepancy point sets.

const PRIMES: [u32; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103,
    107, 109, 113, 127, 131,
];

pub const MAX_HALTON_DIM: usize = PRIMES.len();

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// The `index`-th Halton point in `[0,1)^dim`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= MAX_HALTON_DIM, "Halton dimension {dim} exceeds {MAX_HALTON_DIM}");
    PRIMES[..dim].iter().map(|&p| radical_inverse(index, p as u64)).collect()
}

/// `count` Halton points starting at index 1 (index 0 is the origin corner).
pub fn halton_points(count: usize, dim: usize) -> Vec<Vec<f64>> {
    (1..=count as u64).map(|i| halton(i, dim)).collect()
}

/// Low-discrepancy unit vectors in `ℂ^r`, built from Halton points in
/// `(0,1)^{2r}` through the Box–Muller map and normalized.
pub fn sphere_points(count: usize, r: usize) -> Vec<Vec<num_complex::Complex64>> {
    use std::f64::consts::TAU;
    let mut out = Vec::with_capacity(count);
    let mut index = 1u64;
    while out.len() < count {
        let u = halton(index, 2 * r);
        index += 1;
        let mut v: Vec<num_complex::Complex64> = (0..r)
            .map(|k| {
                let (u1, u2) = (u[2 * k].max(1e-300), u[2 * k + 1]);
                let rad = (-2.0 * u1.ln()).sqrt();
                num_complex::Complex64::from_polar(rad, TAU * u2)
            })
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        out.push(v);
    }
    out
}
