//! Seeded random parameter draws for property checks and searches.

use rand::Rng;

use crate::params::Params;

/// Smallest and largest δ drawn; δ is log-uniform on this range.
pub const DELTA_RANGE: (f64, f64) = (0.01, 2.0);

/// Group sizes uniform on `2..=max_n`, γ uniform on the open interval
/// `(1/2, 1)`, δ log-uniform on [`DELTA_RANGE`].
pub fn random_params<R: Rng + ?Sized>(rng: &mut R, max_n: u32) -> Params {
    assert!(max_n >= 2, "max_n must be at least 2");
    let n_a = rng.gen_range(2..=max_n);
    let n_b = rng.gen_range(2..=max_n);
    let gamma_a = open_gamma(rng);
    let gamma_b = open_gamma(rng);
    let (lo, hi) = DELTA_RANGE;
    let delta = (rng.gen_range(lo.ln()..=hi.ln())).exp();
    Params::new(n_a, n_b, gamma_a, gamma_b, delta).expect("draw lies inside the valid region")
}

fn open_gamma<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let g: f64 = rng.gen_range(0.5..1.0);
        if g > 0.5 {
            return g;
        }
    }
}

/// Rejection sampling: the first draw satisfying `accept`, or `None` after
/// `max_tries` failures.
pub fn sample_where<R: Rng + ?Sized>(
    rng: &mut R,
    max_n: u32,
    max_tries: usize,
    mut accept: impl FnMut(&Params) -> bool,
) -> Option<Params> {
    (0..max_tries).map(|_| random_params(rng, max_n)).find(|p| accept(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_are_valid_and_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let p = random_params(&mut a, 9);
            let q = random_params(&mut b, 9);
            assert_eq!(p.to_json(), q.to_json());
            assert!((2..=9).contains(&p.n_a()) && (2..=9).contains(&p.n_b()));
            assert!(p.gamma_a() > 0.5 && p.gamma_a() < 1.0);
            assert!(p.delta() >= 0.01 - 1e-12 && p.delta() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn rejection_sampling_respects_the_predicate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = sample_where(&mut rng, 10, 10_000, |p| p.n_a() > p.n_b()).unwrap();
        assert!(p.n_a() > p.n_b());
        assert!(sample_where(&mut rng, 10, 50, |_| false).is_none());
    }
}
