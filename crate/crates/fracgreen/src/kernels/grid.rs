//! Uniform spatial lattice and its dual frequency lattice.
//!
//! Points are x_j = -L + j h, h = 2L/M per axis; frequencies are
//! xi_k = pi k / L for k in [-M/2, M/2). With this pairing the discrete
//! synthesis of a symbol is an M-point inverse DFT per axis, and the
//! lattice sum of the synthesized field times h^n equals the symbol at
//! xi = 0 exactly (the DC bin), which keeps normalization checks sharp.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        let g = GridSpec {
            n,
            half_width,
            points_per_axis,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("grid needs n >= 1".into()));
        }
        if !(self.half_width > 0.0) {
            return Err(Error::Config(format!(
                "grid half-width must be positive, got {}",
                self.half_width
            )));
        }
        if self.points_per_axis < 2 || self.points_per_axis % 2 != 0 {
            return Err(Error::Config(format!(
                "points_per_axis must be even and >= 2, got {}",
                self.points_per_axis
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    pub fn point_count(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    /// Largest frequency magnitude per axis on the dual lattice.
    pub fn xi_max(&self) -> f64 {
        std::f64::consts::PI * self.points_per_axis as f64 / (2.0 * self.half_width)
    }

    pub fn multi_of(&self, mut lin: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        for a in (0..self.n).rev() {
            idx[a] = lin % self.points_per_axis;
            lin /= self.points_per_axis;
        }
        idx
    }

    pub fn linear_of(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for &i in idx {
            lin = lin * self.points_per_axis + i;
        }
        lin
    }

    pub fn coords(&self, p: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_of(p)
            .iter()
            .map(|&j| -self.half_width + j as f64 * h)
            .collect()
    }

    /// Frequency vector of the shifted lattice index (k' per axis in 0..M).
    pub fn freq_of(&self, idx: &[usize]) -> Vec<f64> {
        let half = self.points_per_axis / 2;
        idx.iter()
            .map(|&k| std::f64::consts::PI * (k as f64 - half as f64) / self.half_width)
            .collect()
    }

    /// Linear index of x = 0 (j = M/2 on every axis).
    pub fn origin_index(&self) -> usize {
        let idx = vec![self.points_per_axis / 2; self.n];
        self.linear_of(&idx)
    }
}
