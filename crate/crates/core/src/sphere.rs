//! Deterministic sampling and derivative-free descent on unit spheres.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// An RNG owned by one worker: the stream is derived from `(seed, stream)`
/// so results do not depend on scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = norm(&v);
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn normalized(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

/// Points on `S^{n-1}` in hyperspherical coordinates with `resolution`
/// points per great circle. Poles are listed once.
pub fn sphere_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    assert!(n >= 1 && resolution >= 2);
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..resolution)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / resolution as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let half = resolution.div_ceil(2);
            let sub = sphere_grid(n - 1, resolution);
            let mut out = Vec::new();
            for t in 0..=half {
                let theta = std::f64::consts::PI * t as f64 / half as f64;
                let (c, s) = (theta.cos(), theta.sin());
                if t == 0 || t == half {
                    let mut p = vec![0.0; n];
                    p[0] = if t == 0 { 1.0 } else { -1.0 };
                    out.push(p);
                    continue;
                }
                for q in &sub {
                    let mut p = Vec::with_capacity(n);
                    p.push(c);
                    p.extend(q.iter().map(|x| s * x));
                    out.push(p);
                }
            }
            out
        }
    }
}

/// Whether the first component of magnitude above `1e-12` is positive.
pub fn is_canonical(v: &[f64]) -> bool {
    v.iter()
        .find(|x| x.abs() > 1e-12)
        .is_some_and(|&x| x > 0.0)
}

/// `v` or `-v`, whichever is canonical.
pub fn canonical_sign(v: &[f64]) -> Vec<f64> {
    if is_canonical(v) {
        v.to_vec()
    } else {
        v.iter().map(|x| -x).collect()
    }
}

/// The hemisphere of [`sphere_grid`] selected by [`is_canonical`].
pub fn hemisphere_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    sphere_grid(n, resolution)
        .into_iter()
        .filter(|p| is_canonical(p))
        .collect()
}

/// Orthonormal basis of `x^⊥` (Gram-Schmidt against the coordinate axes).
pub fn tangent_basis(x: &[f64]) -> Vec<Vec<f64>> {
    orthonormal_complement(&[x.to_vec()], x.len())
}

/// Orthonormal basis of the complement of `span(vectors)` in `R^n`.
pub fn orthonormal_complement(vectors: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let d = dot(&w, b);
            w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= d * bi);
        }
        let nw = norm(&w);
        if nw > 1e-10 {
            basis.push(w.into_iter().map(|x| x / nw).collect());
        }
    }
    let fixed = basis.len();
    for axis in 0..n {
        if basis.len() == n {
            break;
        }
        let mut w = vec![0.0; n];
        w[axis] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let d = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= d * bi);
            }
        }
        let nw = norm(&w);
        if nw > 1e-8 {
            basis.push(w.into_iter().map(|x| x / nw).collect());
        }
    }
    basis.split_off(fixed)
}

/// Compass search for a minimizer of `f` over the unit sphere, starting at
/// `x0` with angular step `step`. Returns the best point and value.
pub fn minimize_on_sphere<F>(x0: &[f64], step: f64, iterations: usize, f: F) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = normalized(x0);
    let mut fx = f(&x);
    if x.len() < 2 {
        return (x, fx);
    }
    let mut theta = step;
    for _ in 0..iterations {
        if theta < 1e-13 {
            break;
        }
        let (c, s) = (theta.cos(), theta.sin());
        let mut best: Option<(Vec<f64>, f64)> = None;
        for t in tangent_basis(&x) {
            for sign in [1.0, -1.0] {
                let cand: Vec<f64> = x.iter().zip(&t).map(|(a, b)| c * a + sign * s * b).collect();
                let cand = normalized(&cand);
                let fc = f(&cand);
                if fc < best.as_ref().map_or(fx, |b| b.1) {
                    best = Some((cand, fc));
                }
            }
        }
        match best {
            Some((xn, fnew)) => {
                x = xn;
                fx = fnew;
            }
            None => theta *= 0.5,
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_are_unit() {
        for n in 1..5 {
            for p in sphere_grid(n, 8) {
                assert!((norm(&p) - 1.0).abs() < 1e-14);
            }
        }
        assert_eq!(sphere_grid(2, 16).len(), 16);
    }

    #[test]
    fn hemisphere_is_canonical() {
        let h = hemisphere_grid(3, 12);
        assert!(h.iter().all(|p| is_canonical(p)));
        assert!(!h.is_empty());
    }

    #[test]
    fn complement_is_orthonormal() {
        let v = vec![vec![1.0, 1.0, 0.0]];
        let c = orthonormal_complement(&v, 3);
        assert_eq!(c.len(), 2);
        for a in &c {
            assert!(dot(a, &v[0]).abs() < 1e-14);
            assert!((norm(a) - 1.0).abs() < 1e-14);
        }
        assert!(dot(&c[0], &c[1]).abs() < 1e-14);
    }

    #[test]
    fn compass_search_finds_axis() {
        let target = normalized(&[0.2, -0.5, 0.7]);
        let (x, fx) = minimize_on_sphere(&[1.0, 0.0, 0.0], 0.5, 500, |p| {
            let d: Vec<f64> = p.iter().zip(&target).map(|(a, b)| a - b).collect();
            norm(&d)
        });
        assert!(fx < 1e-9, "{x:?} {fx}");
    }

    #[test]
    fn streams_are_reproducible() {
        let a: f64 = stream_rng(7, 3).random();
        let b: f64 = stream_rng(7, 3).random();
        let c: f64 = stream_rng(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
