mod common;

use common::{dense_encode, dense_transform, random_bits};
use prodpolar::construction::transform_matrix;
use prodpolar::polar::{polar_encode, product_encode, row_flatten, row_reshape};
use prodpolar::BitMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn butterfly_matches_dense_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1usize, 2, 4, 8, 16, 32, 64, 128] {
        let t = dense_transform(n);
        for _ in 0..50 {
            let u = random_bits(&mut rng, n);
            assert_eq!(&*polar_encode(&u).unwrap(), &dense_encode(&u, &t)[..], "n = {n}");
        }
    }
}

#[test]
fn library_transform_matrix_matches_block_recursion() {
    for n in [1usize, 2, 4, 8, 16, 32] {
        let t = transform_matrix(n).unwrap();
        let dense = dense_transform(n);
        for (i, row) in dense.iter().enumerate() {
            assert_eq!(t.row(i), &row[..]);
        }
    }
}

/// Row-major flattening of `T_c^T U T_r` is `vec(U) (T_c ⊗ T_r)`.
#[test]
fn product_encoding_is_flat_encoding_exhaustively_up_to_16() {
    for n_c in [1usize, 2, 4, 8, 16] {
        for n_r in [1usize, 2, 4, 8, 16] {
            let n = n_r * n_c;
            if n > 16 {
                continue;
            }
            for m in 0u32..1 << n {
                let u: Vec<u8> = (0..n).map(|b| ((m >> b) & 1) as u8).collect();
                let matrix = row_reshape(&u, n_c, n_r).unwrap();
                let x = product_encode(&matrix).unwrap();
                assert_eq!(row_flatten(&x), polar_encode(&u).unwrap().into_inner());
            }
        }
    }
}

#[test]
fn product_encoding_is_flat_encoding_randomly_up_to_64() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n_c in [2usize, 4, 8, 16, 32] {
        for n_r in [2usize, 4, 8, 16, 32] {
            let n = n_r * n_c;
            if n > 64 {
                continue;
            }
            let t = dense_transform(n);
            for _ in 0..1000 {
                let u = random_bits(&mut rng, n);
                let x = product_encode(&BitMatrix::from_vec(n_c, n_r, u.clone()).unwrap()).unwrap();
                assert_eq!(row_flatten(&x), dense_encode(&u, &t));
            }
        }
    }
}

#[test]
fn rows_encode_the_column_transformed_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (n_c, n_r) = (8, 4);
    let t_r = dense_transform(n_r);
    let t_c = dense_transform(n_c);
    for _ in 0..200 {
        let u = BitMatrix::from_vec(n_c, n_r, random_bits(&mut rng, n_c * n_r)).unwrap();
        let x = product_encode(&u).unwrap();
        // rows: X = (T_c^T U) T_r, so each row is the encoding of row i of T_c^T U
        let left: Vec<Vec<u8>> = (0..n_r)
            .map(|j| dense_encode(&u.column(j), &t_c))
            .collect();
        for i in 0..n_c {
            let row_input: Vec<u8> = (0..n_r).map(|j| left[j][i]).collect();
            assert_eq!(x.row(i), &dense_encode(&row_input, &t_r)[..]);
        }
    }
}

proptest! {
    #[test]
    fn product_encoding_is_linear(a in prop::collection::vec(0u8..=1, 64), b in prop::collection::vec(0u8..=1, 64)) {
        let ma = BitMatrix::from_vec(8, 8, a).unwrap();
        let mb = BitMatrix::from_vec(8, 8, b).unwrap();
        let lhs = product_encode(&ma.xor(&mb)).unwrap();
        let rhs = product_encode(&ma).unwrap().xor(&product_encode(&mb).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn product_encoding_is_an_involution(bits in prop::collection::vec(0u8..=1, 32)) {
        let m = BitMatrix::from_vec(4, 8, bits).unwrap();
        prop_assert_eq!(product_encode(&product_encode(&m).unwrap()).unwrap(), m);
    }
}
