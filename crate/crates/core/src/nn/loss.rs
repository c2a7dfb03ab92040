use super::RealBatch;
use crate::{Error, Result};

/// Mean squared error over complex entries held as real pairs.
///
/// Each row packs `cols / 2` complex values, so the loss is
/// `Σ|x̂ − x|² / (rows · cols / 2)` and the gradient with respect to every real
/// component of the prediction is `2·(x̂ − x) / (rows · cols / 2)`.
pub fn mse_loss(prediction: &RealBatch, target: &RealBatch) -> Result<(f64, RealBatch)> {
    prediction.same_shape(target, "mse")?;
    if !prediction.cols().is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "mse expects real/imag pairs, got {} columns",
            prediction.cols()
        )));
    }
    let n_complex = (prediction.rows() * prediction.cols() / 2) as f64;
    let mut grad = prediction.clone();
    let mut sum = 0.0;
    for (g, &t) in grad.as_mut_slice().iter_mut().zip(target.as_slice()) {
        let d = *g - t;
        sum += d * d;
        *g = 2.0 * d / n_complex;
    }
    Ok((sum / n_complex, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{central_difference, max_relative_error};
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let x = RealBatch::new(1, 2, vec![1.0, 1.0]).unwrap();
        let (l, g) = mse_loss(&x, &x).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.as_slice().iter().all(|&v| v == 0.0));

        // x = 1+1j, x̂ = 0
        let zero = RealBatch::zeros(1, 2);
        assert_eq!(mse_loss(&zero, &x).unwrap().0, 2.0);
    }

    #[test]
    fn shape_errors() {
        let a = RealBatch::zeros(1, 2);
        let b = RealBatch::zeros(2, 2);
        assert!(mse_loss(&a, &b).is_err());
        let odd = RealBatch::zeros(1, 3);
        assert!(mse_loss(&odd, &odd).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = RealBatch::new(2, 4, (0..8).map(|i| (i as f64 * 0.7).cos()).collect()).unwrap();
        let t = RealBatch::new(2, 4, (0..8).map(|i| (i as f64 * 1.3).sin()).collect()).unwrap();
        let (_, g) = mse_loss(&p, &t).unwrap();
        let fd = central_difference(p.as_slice(), |v| {
            mse_loss(&RealBatch::new(2, 4, v.to_vec()).unwrap(), &t)
                .unwrap()
                .0
        });
        assert!(max_relative_error(g.as_slice(), &fd) < 1e-6);
    }

    proptest! {
        #[test]
        fn nonnegative_and_zero_only_at_equality(
            a in proptest::collection::vec(-3.0f64..3.0, 6),
            b in proptest::collection::vec(-3.0f64..3.0, 6),
        ) {
            let pa = RealBatch::new(1, 6, a.clone()).unwrap();
            let pb = RealBatch::new(1, 6, b.clone()).unwrap();
            let (l, _) = mse_loss(&pa, &pb).unwrap();
            prop_assert!(l >= 0.0);
            prop_assert_eq!(l == 0.0, a == b);
        }
    }
}
