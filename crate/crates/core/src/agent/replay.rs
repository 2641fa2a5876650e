use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::Batch;

/// One environment step as stored in the replay buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: f64,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
    /// Episode counter within the run.
    pub episode: u64,
    /// Index of `obs` within its episode (0 right after reset).
    pub step: usize,
}

/// Mini-batch with reconstructed histories; `history[k]` is the `k`-th oldest
/// frame of every sample's window.
#[derive(Debug, Clone)]
pub struct SampledBatch {
    pub slots: Vec<usize>,
    pub obs: Batch,
    pub actions: Batch,
    pub rewards: Vec<f64>,
    pub next_obs: Batch,
    pub dones: Vec<f64>,
    pub history: Vec<Batch>,
    pub next_history: Vec<Batch>,
}

/// Fixed-capacity FIFO ring of transitions.
///
/// Histories are not stored; they are rebuilt at sample time from the
/// neighbouring slots, checking episode id and step index so that windows
/// never cross an episode boundary or read a slot that has been overwritten.
/// Missing frames are zero.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    slots: Vec<Transition>,
    cursor: usize,
    pushed: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay buffer capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            slots: Vec::with_capacity(capacity.min(1 << 20)),
            cursor: 0,
            pushed: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Transitions inserted over the buffer's lifetime.
    pub fn total_pushed(&self) -> u64 {
        self.pushed
    }

    /// Stores `t`, evicting the oldest transition once full. Returns the slot used.
    pub fn push(&mut self, t: Transition) -> usize {
        let slot = self.cursor;
        if self.slots.len() < self.capacity {
            self.slots.push(t);
        } else {
            self.slots[slot] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        self.pushed += 1;
        slot
    }

    pub fn get(&self, slot: usize) -> Option<&Transition> {
        self.slots.get(slot)
    }

    /// Slots ordered from oldest to newest.
    pub fn slots_in_order(&self) -> impl Iterator<Item = usize> + '_ {
        let start = if self.slots.len() < self.capacity {
            0
        } else {
            self.cursor
        };
        (0..self.slots.len()).map(move |k| (start + k) % self.capacity)
    }

    /// Observation of the transition `back` slots before `slot`, if it is
    /// step `step` of `episode` and still stored.
    fn predecessor(&self, slot: usize, back: usize, episode: u64, step: usize) -> Option<&[f64]> {
        if back > slot && self.slots.len() < self.capacity {
            return None;
        }
        if back >= self.capacity {
            return None;
        }
        let s = (slot + self.capacity - back) % self.capacity;
        let t = &self.slots[s];
        (t.episode == episode && t.step == step).then_some(t.obs.as_slice())
    }

    /// Window of `len` frames ending at episode step `last` (inclusive),
    /// relative to the transition in `slot`. Frames before the episode start
    /// or no longer in the buffer are zero.
    fn window(&self, slot: usize, len: usize, last: isize) -> Vec<Vec<f64>> {
        let t = &self.slots[slot];
        let dim = t.obs.len();
        (0..len)
            .map(|j| {
                let s = last - (len - 1 - j) as isize;
                if s < 0 {
                    return vec![0.0; dim];
                }
                let s = s as usize;
                let back = t.step - s;
                if back == 0 {
                    return t.obs.clone();
                }
                self.predecessor(slot, back, t.episode, s)
                    .map_or_else(|| vec![0.0; dim], <[f64]>::to_vec)
            })
            .collect()
    }

    /// `(o_{t−len}, …, o_{t−1})` for the transition in `slot`, oldest first.
    pub fn history(&self, slot: usize, len: usize) -> Vec<Vec<f64>> {
        let t = &self.slots[slot];
        self.window(slot, len, t.step as isize - 1)
    }

    /// `(o_{t+1−len}, …, o_t)`: the history that accompanies `next_obs`.
    pub fn next_history(&self, slot: usize, len: usize) -> Vec<Vec<f64>> {
        let t = &self.slots[slot];
        self.window(slot, len, t.step as isize)
    }

    /// Uniform mini-batch without replacement, with histories of length `history_len`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, history_len: usize, rng: &mut R) -> Result<SampledBatch> {
        if n == 0 || n > self.len() {
            return Err(Error::Contract(format!(
                "cannot sample {n} transitions from a buffer holding {}",
                self.len()
            )));
        }
        let slots = index::sample(rng, self.len(), n).into_vec();
        self.gather(&slots, history_len)
    }

    /// Batch for explicit slots.
    pub fn gather(&self, slots: &[usize], history_len: usize) -> Result<SampledBatch> {
        let rows: Vec<&Transition> = slots
            .iter()
            .map(|&s| {
                self.slots
                    .get(s)
                    .ok_or_else(|| Error::Contract(format!("slot {s} is not filled")))
            })
            .collect::<Result<_>>()?;
        let obs = Batch::from_rows(&rows.iter().map(|t| t.obs.as_slice()).collect::<Vec<_>>())?;
        let next_obs = Batch::from_rows(&rows.iter().map(|t| t.next_obs.as_slice()).collect::<Vec<_>>())?;
        let actions = Batch::from_vec(rows.len(), 1, rows.iter().map(|t| t.action).collect())?;
        let dim = obs.cols();
        let mut history = vec![Batch::zeros(slots.len(), dim); history_len];
        let mut next_history = vec![Batch::zeros(slots.len(), dim); history_len];
        for (r, &slot) in slots.iter().enumerate() {
            for (k, frame) in self.history(slot, history_len).into_iter().enumerate() {
                history[k].row_mut(r).copy_from_slice(&frame);
            }
            for (k, frame) in self.next_history(slot, history_len).into_iter().enumerate() {
                next_history[k].row_mut(r).copy_from_slice(&frame);
            }
        }
        Ok(SampledBatch {
            slots: slots.to_vec(),
            obs,
            actions,
            rewards: rows.iter().map(|t| t.reward).collect(),
            next_obs,
            dones: rows.iter().map(|t| if t.done { 1.0 } else { 0.0 }).collect(),
            history,
            next_history,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn tr(episode: u64, step: usize, tag: f64, done: bool) -> Transition {
        Transition {
            obs: vec![tag, tag + 0.5],
            action: 0.0,
            reward: tag,
            next_obs: vec![tag + 1.0, tag + 1.5],
            done,
            episode,
            step,
        }
    }

    fn fill(buf: &mut ReplayBuffer, episodes: &[usize]) {
        let mut tag = 0.0;
        for (e, &len) in episodes.iter().enumerate() {
            for s in 0..len {
                buf.push(tr(e as u64, s, tag, s + 1 == len));
                tag += 1.0;
            }
        }
    }

    #[test]
    fn fifo_eviction_keeps_newest() {
        let mut buf = ReplayBuffer::new(3).unwrap();
        for k in 0..5 {
            buf.push(tr(0, k, k as f64, false));
        }
        let kept: Vec<f64> = buf.slots_in_order().map(|s| buf.get(s).unwrap().reward).collect();
        assert_eq!(kept, vec![2.0, 3.0, 4.0]);
        assert_eq!(buf.total_pushed(), 5);
    }

    #[test]
    fn first_step_history_is_zero() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        fill(&mut buf, &[4]);
        assert_eq!(buf.history(0, 2), vec![vec![0.0; 2]; 2]);
        assert_eq!(buf.history(1, 2), vec![vec![0.0, 0.0], vec![0.0, 0.5]]);
        assert_eq!(buf.history(3, 2), vec![vec![1.0, 1.5], vec![2.0, 2.5]]);
    }

    #[test]
    fn next_history_slides_by_one() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        fill(&mut buf, &[4]);
        // h_{t+1} = (h_t without its oldest frame) followed by o_t
        let h = buf.history(2, 2);
        let next = buf.next_history(2, 2);
        assert_eq!(next[0], h[1]);
        assert_eq!(next[1], buf.get(2).unwrap().obs);
    }

    #[test]
    fn windows_do_not_cross_episodes() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        fill(&mut buf, &[3, 3]);
        // slot 3 is step 0 of episode 1: nothing from episode 0 may leak in.
        assert_eq!(buf.history(3, 2), vec![vec![0.0; 2]; 2]);
        assert_eq!(buf.history(4, 2)[0], vec![0.0; 2]);
    }

    #[test]
    fn evicted_predecessors_become_zero() {
        let mut buf = ReplayBuffer::new(4).unwrap();
        fill(&mut buf, &[6]);
        // Steps 2..=5 remain in slots 2, 3, 0, 1. Step 2 lost steps 0 and 1.
        assert_eq!(buf.get(2).unwrap().step, 2);
        assert_eq!(buf.history(2, 2), vec![vec![0.0; 2]; 2]);
        assert_eq!(buf.history(3, 2), vec![vec![0.0; 2], vec![2.0, 2.5]]);
        assert_eq!(buf.history(1, 2), vec![vec![3.0, 3.5], vec![4.0, 4.5]]);
    }

    #[test]
    fn sample_is_without_replacement_and_filled_only() {
        let mut buf = ReplayBuffer::new(100).unwrap();
        fill(&mut buf, &[20]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = buf.sample(20, 2, &mut rng).unwrap();
        let unique: HashSet<usize> = b.slots.iter().copied().collect();
        assert_eq!(unique.len(), 20);
        assert!(b.slots.iter().all(|&s| s < 20));
        assert!(buf.sample(21, 2, &mut rng).is_err());
        assert_eq!(b.history.len(), 2);
        assert_eq!(b.history[0].rows(), 20);
    }

    #[test]
    fn terminal_flag_round_trips() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        fill(&mut buf, &[3]);
        let b = buf.gather(&[2, 0], 0).unwrap();
        assert_eq!(b.dones, vec![1.0, 0.0]);
        assert!(b.history.is_empty());
    }
}
