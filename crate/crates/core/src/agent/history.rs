use std::collections::VecDeque;

use crate::env::Observation;
use crate::error::{Error, Result};

/// Sliding window of the last `len` observations of the running episode.
///
/// Starts (and restarts at every episode boundary) as all-zero frames.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryWindow {
    dim: usize,
    frames: VecDeque<Vec<f64>>,
}

impl HistoryWindow {
    pub fn new(len: usize, dim: usize) -> Self {
        Self {
            dim,
            frames: (0..len).map(|_| vec![0.0; dim]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn reset(&mut self) {
        for f in &mut self.frames {
            f.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Drops the oldest frame and appends `obs`.
    pub fn push(&mut self, obs: &[f64]) {
        if self.frames.is_empty() {
            return;
        }
        debug_assert_eq!(obs.len(), self.dim);
        self.frames.pop_front();
        self.frames.push_back(obs.to_vec());
    }

    /// Frames oldest first.
    pub fn frames(&self) -> Vec<Vec<f64>> {
        self.frames.iter().cloned().collect()
    }
}

/// Concatenates `previous` (oldest first) and `current` into one frame-stacked
/// observation. All frames must share mode and width.
pub fn stack_frames(current: &Observation, previous: &[Observation]) -> Result<Observation> {
    let mut values = Vec::with_capacity(current.len() * (previous.len() + 1));
    for frame in previous {
        if frame.mode != current.mode || frame.len() != current.len() {
            return Err(Error::Config(format!(
                "frame stack mixes {} ({} values) with {} ({} values)",
                frame.mode,
                frame.len(),
                current.mode,
                current.len()
            )));
        }
        values.extend_from_slice(&frame.values);
    }
    values.extend_from_slice(&current.values);
    Ok(Observation {
        mode: current.mode,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ObservationMode;

    fn obs(mode: ObservationMode, values: Vec<f64>) -> Observation {
        Observation { mode, values }
    }

    #[test]
    fn episode_start_stacks_zero_dummies() {
        let dim = 26;
        let current = obs(ObservationMode::Rv, (0..dim).map(|v| v as f64).collect());
        let window = HistoryWindow::new(2, dim);
        let previous: Vec<Observation> = window
            .frames()
            .into_iter()
            .map(|v| obs(ObservationMode::Rv, v))
            .collect();
        let stacked = stack_frames(&current, &previous).unwrap();
        assert_eq!(stacked.len(), 78);
        assert!(stacked.values[..52].iter().all(|&v| v == 0.0));
        assert_eq!(&stacked.values[52..], current.as_slice());
    }

    #[test]
    fn fixed_point_gives_identical_blocks() {
        let o = obs(ObservationMode::Mdp, vec![0.1, -0.2, 0.3]);
        let s = stack_frames(&o, &[o.clone(), o.clone()]).unwrap();
        assert_eq!(&s.values[0..3], &s.values[3..6]);
        assert_eq!(&s.values[3..6], &s.values[6..9]);
    }

    #[test]
    fn mixed_modes_rejected() {
        let a = obs(ObservationMode::Mdp, vec![0.0; 6]);
        let b = obs(ObservationMode::Rv, vec![0.0; 6]);
        assert!(matches!(stack_frames(&a, &[b]), Err(Error::Config(_))));
    }

    #[test]
    fn window_slides_and_resets() {
        let mut w = HistoryWindow::new(2, 1);
        w.push(&[1.0]);
        assert_eq!(w.frames(), vec![vec![0.0], vec![1.0]]);
        w.push(&[2.0]);
        w.push(&[3.0]);
        assert_eq!(w.frames(), vec![vec![2.0], vec![3.0]]);
        w.reset();
        assert_eq!(w.frames(), vec![vec![0.0], vec![0.0]]);
    }

    #[test]
    fn zero_length_window_is_inert() {
        let mut w = HistoryWindow::new(0, 3);
        w.push(&[1.0, 2.0, 3.0]);
        assert!(w.frames().is_empty());
    }
}
