use crate::error::{Error, Result};

/// Per-component gradient buffers, one flat vector per parameter slice, in the
/// order returned by [`Parameterized::param_slices`].
pub type Grads = Vec<Vec<f64>>;

/// Anything whose trainable state is a fixed list of flat `f64` slices.
pub trait Parameterized {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// All parameters concatenated.
    fn flat_params(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    /// Overwrites every parameter from a flat vector of matching length.
    fn load_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Config(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut offset = 0;
        for slice in self.param_slices_mut() {
            let n = slice.len();
            slice.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

/// Zero gradient buffers shaped like `p`'s parameters.
pub fn zero_grads<P: Parameterized + ?Sized>(p: &P) -> Grads {
    p.param_slices().iter().map(|s| vec![0.0; s.len()]).collect()
}

pub fn all_finite<P: Parameterized + ?Sized>(p: &P) -> bool {
    p.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
}

/// Polyak tracking: `target ← τ·online + (1−τ)·target`, element-wise.
pub fn soft_update<P: Parameterized + ?Sized>(target: &mut P, online: &P, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!("soft-update rate {tau} outside [0, 1]")));
    }
    let src = online.param_slices();
    let mut dst = target.param_slices_mut();
    if src.len() != dst.len() || src.iter().zip(dst.iter()).any(|(s, d)| s.len() != d.len()) {
        return Err(Error::Config("soft update between differently shaped networks".into()));
    }
    for (d, s) in dst.iter_mut().zip(&src) {
        if tau == 1.0 {
            d.copy_from_slice(s);
            continue;
        }
        for (t, &o) in d.iter_mut().zip(s.iter()) {
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
    Ok(())
}
