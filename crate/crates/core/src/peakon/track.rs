use serde::Serialize;

use crate::grid::RealField;
use crate::{Error, Result};

/// Crest trajectory extracted from a sequence of frames.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeakTrack {
    pub times: Vec<f64>,
    /// Unwrapped crest positions, continuous across the seam.
    pub positions: Vec<f64>,
    /// Least-squares slope of position against time.
    pub speed: f64,
    pub intercept: f64,
}

/// Sub-grid crest position of one frame: argmax refined by the vertex of
/// the parabola through the maximum and its two neighbours.
fn crest(frame: &RealField) -> f64 {
    let s = frame.samples();
    let n = s.len();
    let j = s
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, _)| j)
        .unwrap_or(0);
    let (fm, f0, fp) = (s[(j + n - 1) % n], s[j], s[(j + 1) % n]);
    let curv = fm - 2.0 * f0 + fp;
    let offset = if curv < 0.0 {
        0.5 * (fm - fp) / curv
    } else {
        0.0
    };
    frame.grid().node(j) + offset.clamp(-0.5, 0.5) * frame.grid().spacing()
}

/// Follows the maximum of `frames` and fits a constant speed.
pub fn track_peak(times: &[f64], frames: &[RealField]) -> Result<PeakTrack> {
    if times.len() != frames.len() {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            got: frames.len(),
        });
    }
    if frames.len() < 2 {
        return Err(Error::InsufficientData {
            have: frames.len(),
            need: 2,
        });
    }
    let grid = frames[0].grid();
    if frames.iter().any(|f| f.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    if frames.iter().any(|f| !f.is_finite()) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite);
    }
    let l = grid.length();
    let mut positions = Vec::with_capacity(frames.len());
    for f in frames {
        let raw = crest(f);
        let x = match positions.last() {
            None => raw,
            Some(&prev) => prev + super::wrap_centered(raw - prev, l),
        };
        positions.push(x);
    }
    let k = times.len() as f64;
    let tm = times.iter().sum::<f64>() / k;
    let xm = positions.iter().sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, x) in times.iter().zip(&positions) {
        sxy += (t - tm) * (x - xm);
        sxx += (t - tm) * (t - tm);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidState("frames share a single time".into()));
    }
    let speed = sxy / sxx;
    Ok(PeakTrack {
        times: times.to_vec(),
        positions,
        speed,
        intercept: xm - speed * tm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use rand::{Rng, SeedableRng};

    fn bump(grid: &PeriodicGrid, at: f64) -> RealField {
        let l = grid.length();
        grid.sample(|x| {
            let z = crate::peakon::wrap_centered(x - at, l);
            (-z * z).exp()
        })
    }

    #[test]
    fn manufactured_translation() {
        let grid = PeriodicGrid::new(512, 20.0).unwrap();
        let times: Vec<f64> = (0..41).map(|k| 0.05 * k as f64).collect();
        // crosses the seam on the way
        let frames: Vec<_> = times.iter().map(|t| bump(&grid, 19.0 + 0.7 * t)).collect();
        let track = track_peak(&times, &frames).unwrap();
        assert!((track.speed - 0.7).abs() < 1e-3, "{}", track.speed);
        assert!(track.positions.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn stationary_profile() {
        let grid = PeriodicGrid::new(256, 10.0).unwrap();
        let frames = vec![bump(&grid, 3.3); 5];
        let track = track_peak(&[0.0, 1.0, 2.0, 3.0, 4.0], &frames).unwrap();
        assert!(track.speed.abs() < 1e-14);
    }

    #[test]
    fn noisy_translation() {
        let grid = PeriodicGrid::new(512, 20.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let times: Vec<f64> = (0..41).map(|k| 0.05 * k as f64).collect();
        let frames: Vec<_> = times
            .iter()
            .map(|t| {
                let clean = bump(&grid, 5.0 + 0.7 * t).into_samples();
                grid.field(
                    clean
                        .into_iter()
                        .map(|v| v + 1e-3 * rng.gen_range(-1.0..1.0))
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let track = track_peak(&times, &frames).unwrap();
        assert!((track.speed - 0.7).abs() < 1e-2, "{}", track.speed);
    }

    #[test]
    fn needs_two_frames() {
        let grid = PeriodicGrid::new(64, 10.0).unwrap();
        assert!(matches!(
            track_peak(&[0.0], &[grid.zeros()]),
            Err(Error::InsufficientData { .. })
        ));
    }
}
