use super::{Parameter, Tensor2D};

/// Central difference of `f` with respect to the scalar reached through `slot`.
///
/// The step is measured as the actual difference of the two perturbed `f32`
/// values, so rounding of `x ± h` does not bias the quotient.
pub fn central_difference<S, F>(
    state: &mut S,
    slot: impl Fn(&mut S) -> &mut f32,
    h: f32,
    mut f: F,
) -> f32
where
    F: FnMut(&S) -> f32,
{
    let original = *slot(state);
    let plus = original + h;
    let minus = original - h;
    *slot(state) = plus;
    let f_plus = f(state) as f64;
    *slot(state) = minus;
    let f_minus = f(state) as f64;
    *slot(state) = original;
    ((f_plus - f_minus) / (plus as f64 - minus as f64)) as f32
}

/// Elementwise central-difference gradient of `f` at `p.value`.
pub fn finite_diff_grad(p: &Parameter, h: f32, mut f: impl FnMut(&Tensor2D) -> f32) -> Tensor2D {
    let mut probe = p.value.clone();
    let mut out = Tensor2D::zeros(probe.rows(), probe.cols());
    for i in 0..probe.len() {
        let d = central_difference(&mut probe, |t| &mut t.data_mut()[i], h, &mut f);
        out.data_mut()[i] = d;
    }
    out
}

/// `‖a − b‖₂ / max(‖a‖₂, ‖b‖₂)`, zero when both vectors are zero.
pub fn relative_error(a: &[f32], b: &[f32]) -> f64 {
    let norm = |v: &[f32]| v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_has_unit_gradient() {
        let p = Parameter::new(Tensor2D::from_rows(&[vec![0.3, -1.2], vec![4.0, 0.0]]).unwrap());
        let g = finite_diff_grad(&p, 1e-3, |t| t.sum());
        for &v in g.data() {
            assert!((v - 1.0).abs() < 1e-3, "{v}");
        }
    }

    #[test]
    fn half_squared_norm_recovers_point() {
        let p = Parameter::new(Tensor2D::row_vector(vec![2.0, -1.0]));
        let g = finite_diff_grad(&p, 1e-3, |t| 0.5 * t.data().iter().map(|x| x * x).sum::<f32>());
        assert!((g.get(0, 0) - 2.0).abs() < 1e-3);
        assert!((g.get(0, 1) + 1.0).abs() < 1e-3);
    }

    #[test]
    fn relative_error_is_scale_free() {
        assert_eq!(relative_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        let e = relative_error(&[1.0, 0.0], &[1.001, 0.0]);
        assert!((e - 0.001 / 1.001).abs() < 1e-6);
    }
}
