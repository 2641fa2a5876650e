use rand::Rng;

/// Fills `out` with samples from U(−1/√fan_in, 1/√fan_in).
pub(crate) fn uniform_fan_in<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, out: &mut [f64]) {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    for v in out {
        *v = rng.random_range(-bound..=bound);
    }
}
