//! Small dense-vector helpers on plain slices.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

pub fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// Orthonormal basis whose leading vectors span `seed` (Gram–Schmidt, then
/// padded from the standard basis). `seed` must be linearly independent.
pub fn complete_basis(seed: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    let candidates = seed.iter().cloned().chain((0..d).map(|i| unit(d, i)));
    for mut v in candidates {
        if basis.len() == d {
            break;
        }
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    basis
}

/// Frame whose last vector is `up`; the first d-1 vectors span its orthogonal complement.
pub fn frame_with_up(up: &[f64]) -> Vec<Vec<f64>> {
    let d = up.len();
    let mut b = complete_basis(&[up.to_vec()], d);
    b.rotate_left(1);
    b
}

/// Coordinates of `v` in an orthonormal `frame`.
pub fn to_frame(frame: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    frame.iter().map(|b| dot(b, v)).collect()
}

/// Point with the given `coords` in `frame`.
pub fn from_frame(frame: &[Vec<f64>], coords: &[f64]) -> Vec<f64> {
    let d = frame[0].len();
    let mut out = vec![0.0; d];
    for (b, c) in frame.iter().zip(coords) {
        out.iter_mut().zip(b).for_each(|(o, x)| *o += c * x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completed_basis_is_orthonormal() {
        let up = normalized(&[1.0, 2.0, -0.5, 0.3]);
        let f = frame_with_up(&up);
        assert_eq!(f.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&f[i], &f[j]) - want).abs() < 1e-14);
            }
        }
        assert!((dot(&f[3], &up) - 1.0).abs() < 1e-14);
        let v = [0.3, -1.0, 2.0, 0.1];
        let back = from_frame(&f, &to_frame(&f, &v));
        for (a, b) in back.iter().zip(v) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
