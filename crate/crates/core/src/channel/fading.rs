use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// Power gain of a unit-mean Rayleigh-faded channel (exponentially
/// distributed with mean 1).
pub fn rayleigh_power<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let x: f64 = Exp1.sample(rng);
    // keep log10 finite
    x.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean = (0..n).map(|_| rayleigh_power(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }
}
