//! Euclidean projection onto the scaled probability simplex.

/// Project `w` in place onto `{ x : x_i >= 0, sum x_i = total }`.
///
/// Sort-based exact algorithm: find the largest support size for which the
/// uniform shift keeps all retained coordinates positive, then clip.
/// `total` must be positive and `w` non-empty.
pub fn project_simplex(w: &mut [f64], total: f64) {
    assert!(!w.is_empty(), "cannot project an empty vector");
    assert!(total > 0.0, "simplex scale must be positive");

    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("non-finite coordinate"));

    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - total) / (j as f64 + 1.0);
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    for x in w.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn point_on_simplex_is_unchanged() {
        let mut w = vec![0.25, 0.5, 0.25];
        project_simplex(&mut w, 1.0);
        assert_eq!(w, vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn negative_mass_is_clipped() {
        let mut w = vec![1.2, -0.2];
        project_simplex(&mut w, 1.0);
        assert_relative_eq!(w[0], 1.0);
        assert_relative_eq!(w[1], 0.0);
    }

    proptest! {
        #[test]
        fn projection_lands_on_simplex(
            w in proptest::collection::vec(-5.0f64..5.0, 1..12),
            total in 0.1f64..10.0,
        ) {
            let mut p = w.clone();
            project_simplex(&mut p, total);
            prop_assert!(p.iter().all(|x| *x >= 0.0));
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - total).abs() < 1e-9 * total.max(1.0));
        }

        #[test]
        fn projection_is_idempotent(
            w in proptest::collection::vec(-5.0f64..5.0, 1..12),
        ) {
            let mut once = w.clone();
            project_simplex(&mut once, 1.0);
            let mut twice = once.clone();
            project_simplex(&mut twice, 1.0);
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn projection_minimizes_distance_against_samples(
            w in proptest::collection::vec(-2.0f64..2.0, 2..6),
            seed in 0u64..32,
        ) {
            // The projection must be at least as close to w as random
            // simplex points are.
            use rand::Rng;
            let mut p = w.clone();
            project_simplex(&mut p, 1.0);
            let dist = |a: &[f64], b: &[f64]| -> f64 {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
            };
            let d_proj = dist(&p, &w);
            let mut rng = crate::rng::stream_rng(seed, 0);
            for _ in 0..50 {
                let mut q: Vec<f64> = (0..w.len()).map(|_| rng.random::<f64>()).collect();
                let s: f64 = q.iter().sum();
                q.iter_mut().for_each(|x| *x /= s);
                prop_assert!(d_proj <= dist(&q, &w) + 1e-12);
            }
        }
    }
}
