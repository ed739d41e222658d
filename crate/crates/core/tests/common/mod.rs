//! Reference implementations shared by the integration tests. Everything here is written
//! from the definitions, without going through the library's fast paths.

#![allow(dead_code)]

use prodpolar::FrozenSet;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense `T_N` built by the block recursion `T_2N = [[T_N, 0], [T_N, T_N]]`.
pub fn dense_transform(n: usize) -> Vec<Vec<u8>> {
    assert!(n.is_power_of_two());
    let mut t = vec![vec![1u8]];
    while t.len() < n {
        let m = t.len();
        let mut next = vec![vec![0u8; 2 * m]; 2 * m];
        for i in 0..m {
            for j in 0..m {
                next[i][j] = t[i][j];
                next[m + i][j] = t[i][j];
                next[m + i][m + j] = t[i][j];
            }
        }
        t = next;
    }
    t
}

/// `u · T` by an explicit vector-matrix product over GF(2).
pub fn dense_encode(u: &[u8], t: &[Vec<u8>]) -> Vec<u8> {
    let n = u.len();
    (0..n)
        .map(|j| (0..n).fold(0u8, |acc, i| acc ^ (u[i] & t[i][j])))
        .collect()
}

pub fn random_bits<R: Rng>(rng: &mut R, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..=1u8)).collect()
}

/// Uniformly random frozen set of uniformly random size.
pub fn random_frozen<R: Rng>(rng: &mut R, n: usize) -> FrozenSet {
    let size = rng.random_range(0..=n);
    FrozenSet::new(n, sample(rng, n, size).into_vec()).unwrap()
}

/// Every codeword of the polar code with frozen set `frozen`, by enumerating the inputs.
pub fn polar_codewords(frozen: &FrozenSet) -> Vec<Vec<u8>> {
    let n = frozen.code_length();
    let t = dense_transform(n);
    let info: Vec<usize> = (0..n).filter(|i| !frozen.contains(*i)).collect();
    (0u64..1 << info.len())
        .map(|m| {
            let mut u = vec![0u8; n];
            for (b, &p) in info.iter().enumerate() {
                u[p] = ((m >> b) & 1) as u8;
            }
            dense_encode(&u, &t)
        })
        .collect()
}

/// Whether `x` lies in the polar code with frozen set `frozen` (the transform is an involution).
pub fn is_polar_codeword(x: &[u8], frozen: &FrozenSet, t: &[Vec<u8>]) -> bool {
    let u = dense_encode(x, t);
    frozen.indices().iter().all(|&i| u[i] == 0)
}

/// Component frozen sets obtained from the code itself: bit `l` of row `i` is frozen when the
/// length-`n_r` input of row `i` has a zero at `l` for every codeword, and likewise for columns.
/// Codewords are spanned by the images of the information unit vectors.
pub fn semantic_component_sets(frozen: &FrozenSet, n_r: usize, n_c: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let n = n_r * n_c;
    let t = dense_transform(n);
    let t_r = dense_transform(n_r);
    let t_c = dense_transform(n_c);
    let mut row_used = vec![vec![false; n_r]; n_c];
    let mut col_used = vec![vec![false; n_c]; n_r];
    for p in (0..n).filter(|p| !frozen.contains(*p)) {
        let mut e = vec![0u8; n];
        e[p] = 1;
        let x = dense_encode(&e, &t);
        for i in 0..n_c {
            let input = dense_encode(&x[i * n_r..(i + 1) * n_r], &t_r);
            for (l, &b) in input.iter().enumerate() {
                row_used[i][l] |= b == 1;
            }
        }
        for j in 0..n_r {
            let column: Vec<u8> = (0..n_c).map(|i| x[i * n_r + j]).collect();
            let input = dense_encode(&column, &t_c);
            for (k, &b) in input.iter().enumerate() {
                col_used[j][k] |= b == 1;
            }
        }
    }
    let zeros = |v: &Vec<bool>| v.iter().enumerate().filter(|(_, &u)| !u).map(|(i, _)| i).collect();
    (row_used.iter().map(zeros).collect(), col_used.iter().map(zeros).collect())
}

/// Exact path metric `-ln P(x | y) = Σ ln(1 + exp(-(1 - 2 x_i) λ_i))` of a codeword.
pub fn exact_metric(x: &[u8], llrs: &[f64]) -> f64 {
    x.iter()
        .zip(llrs)
        .map(|(&b, &l)| {
            let a = if b == 0 { l } else { -l };
            // ln(1 + e^{-a}) evaluated stably
            (-a).max(0.0) + (-a.abs()).exp().ln_1p()
        })
        .sum()
}

/// Brute-force maximum-likelihood codeword and its metric.
pub fn ml_decode(frozen: &FrozenSet, llrs: &[f64]) -> (Vec<u8>, f64) {
    polar_codewords(frozen)
        .into_iter()
        .map(|x| {
            let m = exact_metric(&x, llrs);
            (x, m)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

/// BPSK over AWGN at `eb_n0_db` for rate `rate`, returning channel LLRs.
pub fn awgn_llrs<R: Rng>(rng: &mut R, x: &[u8], eb_n0_db: f64, rate: f64) -> Vec<f64> {
    let var = 1.0 / (2.0 * rate * 10f64.powf(eb_n0_db / 10.0));
    x.iter()
        .map(|&b| {
            let s = 1.0 - 2.0 * f64::from(b);
            let n: f64 = rng.sample(StandardNormal);
            2.0 * (s + var.sqrt() * n) / var
        })
        .collect()
}

/// 95% Wilson score interval of `successes` out of `trials`.
pub fn wilson95(successes: u64, trials: u64) -> (f64, f64) {
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}
