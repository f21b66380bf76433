//! The componentwise partial order `x ≼ y`.

use crate::error::{check_dim, Result};

pub fn partial_order_leq(x: &[f64], y: &[f64]) -> Result<bool> {
    check_dim(x.len(), y.len())?;
    Ok(leq(x, y))
}

#[inline]
pub(crate) fn leq(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a <= b)
}

/// `|x| ≼ y`.
#[inline]
pub(crate) fn abs_leq(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a.abs() <= *b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert!(partial_order_leq(&[1.0, 2.0], &[1.0, 3.0]).unwrap());
        assert!(!partial_order_leq(&[1.0, 4.0], &[2.0, 3.0]).unwrap());
        assert!(!partial_order_leq(&[2.0, 3.0], &[1.0, 4.0]).unwrap());
        assert!(partial_order_leq(&[0.0, 0.0], &[0.0, 0.0]).unwrap());
        assert!(partial_order_leq(&[0.0], &[0.0, 0.0]).is_err());
    }

    fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..5).prop_flat_map(|n| {
            let v = || proptest::collection::vec(-3i32..3, n).prop_map(|v| v.into_iter().map(f64::from).collect());
            (v(), v(), v())
        })
    }

    proptest! {
        #[test]
        fn partial_order_axioms((x, y, z) in triple()) {
            prop_assert!(leq(&x, &x));
            if leq(&x, &y) && leq(&y, &x) {
                prop_assert_eq!(&x, &y);
            }
            if leq(&x, &y) && leq(&y, &z) {
                prop_assert!(leq(&x, &z));
            }
        }
    }
}
