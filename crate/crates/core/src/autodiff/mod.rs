//! Minimal reverse-mode differentiation for the dense networks in
//! [`crate::model`]: a tape of matrix ops, a parameter store with Adam, and a
//! finite-difference checker.

mod gradcheck;
mod params;
mod tape;

pub use gradcheck::{grad_check, relative_error, Coords, GradCheckConfig, GradCheckReport, ParamCheck};
pub use params::{AdamConfig, ParamStore, ParamVars};
pub use tape::{sort_ascending, Gradients, Tape, TapeNode, Var};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor2;

    #[test]
    fn affine_identity_forward() {
        let mut t = Tape::new();
        let x = t.constant(Tensor2::from_vec(1, 2, vec![1.0, 0.0]).unwrap()).unwrap();
        let w = t.param("w", Tensor2::identity(2)).unwrap();
        let b = t.param("b", Tensor2::zeros(1, 2)).unwrap();
        let y = t.affine(x, w, b).unwrap();
        assert_eq!(t.value(y).data(), &[1.0, 0.0]);

        let s = t.sum(y).unwrap();
        let g = t.backward(s).unwrap();
        assert_eq!(g.wrt(b).unwrap().data(), &[1.0, 1.0]);
    }

    #[test]
    fn affine_rejects_bad_shapes() {
        let mut t = Tape::new();
        let x = t.constant(Tensor2::zeros(1, 3)).unwrap();
        let w = t.constant(Tensor2::zeros(2, 2)).unwrap();
        let b = t.constant(Tensor2::zeros(1, 2)).unwrap();
        assert!(t.affine(x, w, b).is_err());
    }

    #[test]
    fn relu_forward_and_subgradient() {
        let mut t = Tape::new();
        let x = t.param("x", Tensor2::from_vec(1, 3, vec![-1.0, 0.0, 2.0]).unwrap()).unwrap();
        let y = t.relu(x).unwrap();
        assert_eq!(t.value(y).data(), &[0.0, 0.0, 2.0]);
        let s = t.sum(y).unwrap();
        let g = t.backward(s).unwrap();
        assert_eq!(g.wrt(x).unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn l2_normalize_345() {
        let mut t = Tape::new();
        let x = t.constant(Tensor2::from_vec(2, 2, vec![3.0, 4.0, 0.6, 0.8]).unwrap()).unwrap();
        let y = t.l2_normalize_rows(x).unwrap();
        let v = t.value(y).data();
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
        assert!((v[2] - 0.6).abs() < 1e-15 && (v[3] - 0.8).abs() < 1e-15);

        let z = t.constant(Tensor2::zeros(1, 2)).unwrap();
        assert!(t.l2_normalize_rows(z).is_err());
    }

    #[test]
    fn sort_permutation_and_gradients() {
        let (sorted, perm) = sort_ascending(&[3.0, 1.0, 2.0]);
        assert_eq!(sorted, vec![1.0, 2.0, 3.0]);
        assert_eq!(perm, vec![1, 2, 0]);

        let mut t = Tape::new();
        let x = t.param("x", Tensor2::from_vec(1, 3, vec![3.0, 1.0, 2.0]).unwrap()).unwrap();
        let y = t.sort_rows(x).unwrap();
        let s = t.sum(y).unwrap();
        assert_eq!(t.backward(s).unwrap().wrt(x).unwrap().data(), &[1.0, 1.0, 1.0]);

        let first = t.slice_cols(y, 0, 1).unwrap();
        let s0 = t.sum(first).unwrap();
        assert_eq!(t.backward(s0).unwrap().wrt(x).unwrap().data(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn sort_ties_are_stable() {
        let (_, perm) = sort_ascending(&[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(perm, vec![1, 3, 0, 2]);
    }

    #[test]
    fn reuse_doubles_gradient() {
        let mut t = Tape::new();
        let x = t.param("x", Tensor2::from_vec(1, 2, vec![0.5, -1.5]).unwrap()).unwrap();
        let once = t.sum(x).unwrap();
        let twice = t.linear_combination(&[(once, 1.0), (once, 1.0)]).unwrap();
        let g1 = t.backward(once).unwrap();
        let g2 = t.backward(twice).unwrap();
        for (a, b) in g1.wrt(x).unwrap().data().iter().zip(g2.wrt(x).unwrap().data()) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn non_finite_values_are_refused() {
        let mut t = Tape::new();
        assert!(t.constant(Tensor2::scalar(f64::INFINITY)).is_err());
        let x = t.constant(Tensor2::scalar(1.0)).unwrap();
        let s = t.constant(Tensor2::scalar(-1000.0)).unwrap();
        assert!(t.scale_by_inv_exp(x, s).is_err());
    }

    #[test]
    fn quadratic_gradcheck_is_exact() {
        let mut store = ParamStore::new();
        store.insert("x", Tensor2::from_vec(1, 4, vec![0.3, -1.2, 2.5, 0.0]).unwrap());
        let report = grad_check(
            &store,
            |t, p| t.sum_squares(p.var("x")),
            &GradCheckConfig {
                denom_floor: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(report.max_rel_error() < 1e-9, "{report:?}");
        assert_eq!(report.coords_checked(), 4);
    }
}
