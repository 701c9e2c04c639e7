//! Modulation dynamics: a power STFT along time applied independently to
//! every feature channel of a temporal representation.

use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis};

use crate::dsp::{PadMode, StftConfig, StftPlan};
use crate::error::{Error, Result};

/// F×J×K power tensor (feature, STFT frame, modulation bin).
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationDynamics {
    pub values: Array3<f64>,
    pub mod_bin_hz: f64,
}

impl ModulationDynamics {
    pub fn n_features(&self) -> usize {
        self.values.dim().0
    }

    pub fn n_frames(&self) -> usize {
        self.values.dim().1
    }

    pub fn n_bins(&self) -> usize {
        self.values.dim().2
    }

    /// Average over STFT frames, giving an F×K map.
    pub fn time_average(&self) -> Array2<f64> {
        self.values.mean_axis(Axis(1)).expect("at least one frame")
    }

    pub fn freq_axis(&self) -> Vec<f64> {
        (0..self.n_bins()).map(|k| k as f64 * self.mod_bin_hz).collect()
    }
}

/// Modulation frequency of each one-sided bin.
pub fn mod_freq_axis(cfg: &StftConfig, frame_rate_hz: f64) -> Vec<f64> {
    let spacing = frame_rate_hz / cfg.n_fft as f64;
    (0..cfg.n_bins()).map(|k| k as f64 * spacing).collect()
}

/// Prepared transform for series at a fixed frame rate.
#[derive(Debug, Clone)]
pub struct ModulationTransform {
    plan: StftPlan,
    pad: PadMode,
    frame_rate_hz: f64,
    n_fft: usize,
}

impl ModulationTransform {
    pub fn new(cfg: &StftConfig, frame_rate_hz: f64) -> Result<Self> {
        Ok(Self {
            plan: StftPlan::new(cfg, frame_rate_hz)?,
            pad: cfg.pad,
            frame_rate_hz,
            n_fft: cfg.n_fft,
        })
    }

    pub fn window_frames(&self) -> usize {
        self.plan.window_len()
    }

    pub fn hop_frames(&self) -> usize {
        self.plan.hop()
    }

    pub fn n_bins(&self) -> usize {
        self.plan.n_bins()
    }

    /// Length of the time axis after padding.
    pub fn padded_len(&self, t: usize) -> Result<usize> {
        let window = self.plan.window_len();
        if t >= window {
            return Ok(t);
        }
        match self.pad {
            PadMode::Zero => Ok(window),
            PadMode::None => Err(Error::invalid(format!(
                "{t} frames is shorter than the {window}-frame modulation window and padding is disabled"
            ))),
        }
    }

    pub fn n_frames(&self, t: usize) -> Result<usize> {
        Ok(self.plan.n_frames(self.padded_len(t)?))
    }

    fn column(&self, rep: &ArrayView2<f64>, f: usize, len: usize) -> Vec<f64> {
        let mut col: Vec<f64> = rep.column(f).to_vec();
        col.resize(len, 0.0);
        col
    }

    /// Apply to a T×F matrix.
    pub fn forward(&self, rep: ArrayView2<f64>) -> Result<ModulationDynamics> {
        let (t, n_feat) = rep.dim();
        let len = self.padded_len(t)?;
        let n_frames = self.plan.n_frames(len);
        let mut values = Array3::zeros((n_feat, n_frames, self.n_bins()));
        for f in 0..n_feat {
            let power = self.plan.power(&self.column(&rep, f, len))?;
            values.slice_mut(s![f, .., ..]).assign(&power);
        }
        Ok(ModulationDynamics {
            values,
            mod_bin_hz: self.frame_rate_hz / self.n_fft as f64,
        })
    }

    /// Gradient with respect to the T×F input given the gradient with
    /// respect to every dynamics value.
    pub fn backward(&self, rep: ArrayView2<f64>, grad: ArrayView3<f64>) -> Result<Array2<f64>> {
        let (t, n_feat) = rep.dim();
        let len = self.padded_len(t)?;
        if grad.dim().0 != n_feat {
            return Err(Error::invalid("dynamics gradient has the wrong feature count"));
        }
        let mut out = Array2::zeros((t, n_feat));
        for f in 0..n_feat {
            let g = self
                .plan
                .power_backward(&self.column(&rep, f, len), grad.slice(s![f, .., ..]))?;
            for (dst, v) in out.column_mut(f).iter_mut().zip(g) {
                *dst = v;
            }
        }
        Ok(out)
    }
}

/// Modulation dynamics of a T×F representation sampled at `frame_rate_hz`.
pub fn modulation_transform(rep: ArrayView2<f64>, frame_rate_hz: f64, cfg: &StftConfig) -> Result<ModulationDynamics> {
    ModulationTransform::new(cfg, frame_rate_hz)?.forward(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn axis_resolution() {
        let axis = mod_freq_axis(&StftConfig::default(), 50.0);
        assert_eq!(axis.len(), 201);
        assert_eq!(axis[0], 0.0);
        assert_eq!(axis[1], 0.125);
        assert_eq!(axis[200], 25.0);
    }

    #[test]
    fn constant_channel_is_dc() {
        let rep = Array2::from_elem((100, 2), 3.0);
        let d = modulation_transform(rep.view(), 50.0, &StftConfig::new(8000.0, 2000.0, 400)).unwrap();
        for f in 0..2usize {
            for j in 0..d.n_frames() {
                let row = d.values.slice(s![f, j, ..]);
                let total: f64 = row.sum();
                assert!(row[0] / total > 0.05);
                let peak = row.iter().cloned().fold(f64::MIN, f64::max);
                assert_eq!(row[0], peak);
            }
        }
    }

    #[test]
    fn half_hertz_lands_on_bin_four() {
        let t = 800;
        let rep = Array2::from_shape_fn((t, 1), |(i, _)| (2.0 * PI * 0.5 * i as f64 / 50.0).sin());
        let d = modulation_transform(rep.view(), 50.0, &StftConfig::new(8000.0, 2000.0, 400)).unwrap();
        for j in 0..d.n_frames() {
            let row = d.values.slice(s![0, j, ..]);
            let k = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(k, 4);
        }
    }

    #[test]
    fn shape_with_table_defaults() {
        let rep = Array2::from_elem((500, 768), 0.1);
        let tr = ModulationTransform::new(&StftConfig::default(), 50.0).unwrap();
        assert_eq!((tr.window_frames(), tr.hop_frames()), (13, 3));
        assert_eq!(tr.n_frames(500).unwrap(), 163);
        let d = tr.forward(rep.view()).unwrap();
        assert_eq!(d.values.dim(), (768, 163, 201));
        assert_eq!(d.mod_bin_hz, 0.125);
    }

    #[test]
    fn short_input_padding() {
        let rep = Array2::from_elem((5, 3), 1.0);
        let d = modulation_transform(rep.view(), 50.0, &StftConfig::default()).unwrap();
        assert_eq!(d.n_frames(), 1);
        let cfg = StftConfig {
            pad: PadMode::None,
            ..StftConfig::default()
        };
        assert!(matches!(
            modulation_transform(rep.view(), 50.0, &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }
}
