use nalgebra::Vector2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::scenario::FrameMeasurements;

/// Which observations were exchanged, for auditing a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SwapLog {
    /// `(frame, landmark_a, landmark_b)` for every transposition.
    pub swaps: Vec<(usize, usize, usize)>,
    /// Bernoulli draws made for a landmark that was still unswapped and had
    /// an available partner.
    pub opportunities: usize,
}

impl SwapLog {
    pub fn swap_fraction(&self) -> f64 {
        if self.opportunities == 0 {
            0.0
        } else {
            self.swaps.len() as f64 / self.opportunities as f64
        }
    }
}

/// Swaps observations between nearby visible landmarks.
///
/// Every visible landmark draws one Bernoulli(`rho`) per frame, in index
/// order. On success its observation is exchanged with that of the nearest
/// (ground-truth distance) other visible landmark that has not been swapped
/// in this frame. Each observation takes part in at most one swap per frame.
pub fn corrupt_swaps<R: Rng + ?Sized>(
    frames: &[FrameMeasurements],
    gt_landmarks: &[Vector2<f64>],
    rho: f64,
    rng: &mut R,
) -> (Vec<FrameMeasurements>, SwapLog) {
    let mut log = SwapLog::default();
    let mut out = frames.to_vec();
    for (k, frame) in out.iter_mut().enumerate() {
        let n = frame.visible.len();
        let mut used = vec![false; n];
        for a in 0..n {
            let draw: f64 = rng.random();
            if used[a] {
                continue;
            }
            let la = gt_landmarks[frame.visible[a]];
            let partner = (0..n).filter(|&b| b != a && !used[b]).min_by(|&b, &c| {
                let db = (gt_landmarks[frame.visible[b]] - la).norm_squared();
                let dc = (gt_landmarks[frame.visible[c]] - la).norm_squared();
                db.total_cmp(&dc).then(b.cmp(&c))
            });
            let Some(b) = partner else { continue };
            log.opportunities += 1;
            if draw < rho {
                frame.observed.swap(a, b);
                used[a] = true;
                used[b] = true;
                log.swaps.push((k, frame.visible[a], frame.visible[b]));
            }
        }
    }
    (out, log)
}

/// Ground truth plus i.i.d. `N(0, variance)` per coordinate.
pub fn corrupt_init<R: Rng + ?Sized>(
    gt_landmarks: &[Vector2<f64>],
    variance: f64,
    rng: &mut R,
) -> Vec<Vector2<f64>> {
    if variance == 0.0 {
        return gt_landmarks.to_vec();
    }
    let noise = Normal::new(0.0, variance.sqrt()).expect("variance validated non-negative");
    gt_landmarks
        .iter()
        .map(|l| l + Vector2::new(noise.sample(rng), noise.sample(rng)))
        .collect()
}
