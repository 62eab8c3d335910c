//! Property tests: shape algebra, boundedness, and the no-NaN contract.

use ecgdk_nn::{conv_out_len, conv1d, maxpool1d, relu, softmax_lastdim, Rng, Tensor};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_length_formula_holds(
        len in 4usize..64,
        k in 1usize..5,
        stride in 1usize..4,
        padding in 0usize..3,
    ) {
        prop_assume!(k <= len + 2 * padding);
        let x = Tensor::from_vec(&[1, 1, len], vec![0.5; len], false);
        let w = Tensor::from_vec(&[2, 1, k], vec![0.1; 2 * k], false);
        let b = Tensor::from_vec(&[2], vec![0.0; 2], false);
        let y = conv1d(&x, &w, &b, stride, padding);
        prop_assert_eq!(y.shape()[2], conv_out_len(len, k, stride, padding));
    }

    #[test]
    fn pool_length_formula_holds(len in 2usize..64, k in 1usize..5, stride in 1usize..4) {
        prop_assume!(k <= len);
        let x = Tensor::from_vec(&[1, 1, len], vec![1.0; len], false);
        let y = maxpool1d(&x, k, stride);
        prop_assert_eq!(y.shape()[2], (len - k) / stride + 1);
    }

    #[test]
    fn softmax_rows_are_distributions(seed in 0u64..500, rows in 1usize..6, cols in 2usize..9) {
        let mut rng = Rng::new(seed, 0);
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.uniform_in(-30.0, 30.0)).collect();
        let x = Tensor::from_vec(&[rows, cols], data, false);
        let y = softmax_lastdim(&x);
        let v = y.to_vec();
        for r in 0..rows {
            let row = &v[r * cols..(r + 1) * cols];
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn forward_backward_stay_finite(seed in 0u64..300) {
        // Random bounded inputs through a conv + relu + softmax chain must
        // never produce a non-finite value, in values or gradients.
        let mut rng = Rng::new(seed, 1);
        let x = Tensor::from_vec(
            &[1, 2, 12],
            (0..24).map(|_| rng.uniform_in(-10.0, 10.0)).collect(),
            true,
        );
        let w = Tensor::from_vec(
            &[3, 2, 3],
            (0..18).map(|_| rng.uniform_in(-2.0, 2.0)).collect(),
            true,
        );
        let b = Tensor::from_vec(&[3], vec![0.1; 3], true);
        let h = relu(&conv1d(&x, &w, &b, 1, 1));
        let flat = ecgdk_nn::reshape(&h, &[3, 12]);
        let s = softmax_lastdim(&flat);
        let loss = ecgdk_nn::ops::weighted_sum(&s, &vec![1.0; 36]);
        loss.backward();
        prop_assert!(loss.item().is_finite());
        prop_assert!(x.grad().unwrap().iter().all(|g| g.is_finite()));
        prop_assert!(w.grad().unwrap().iter().all(|g| g.is_finite()));
    }
}
