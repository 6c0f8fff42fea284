//! Spatially correlated log-normal shadowing, one independent field per beam.
//!
//! Each field is a zero-mean Gaussian process on a regular grid with the
//! isotropic exponential autocorrelation `exp(-d / d_corr)`. Samples are
//! drawn by spectral filtering of white noise on a periodic embedding of the
//! grid (circulant embedding), which reproduces the target covariance
//! exactly on the grid. Values between grid points are bilinearly
//! interpolated.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};

/// RNG stream offset reserved for shadowing so traffic streams never collide.
const SHADOWING_STREAM_BASE: u64 = 1 << 40;

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowingField {
    pub resolution: f64,
    pub correlation_distance: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Grid points along x and y; point `(i, j)` sits at `(i, j) * resolution`.
    pub nx: usize,
    pub ny: usize,
    /// One row-major (`j * nx + i`) grid per beam, in dB.
    pub beams: Vec<Vec<f64>>,
}

/// 2D FFT in place on a square `m × m` row-major buffer.
struct Fft2 {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(m: usize, inverse: bool) -> Self {
        let mut planner = FftPlanner::new();
        let fft = if inverse {
            planner.plan_fft_inverse(m)
        } else {
            planner.plan_fft_forward(m)
        };
        Fft2 { m, fft }
    }

    fn process(&self, data: &mut [Complex64]) {
        let m = self.m;
        self.fft.process(data);
        transpose(data, m);
        self.fft.process(data);
        transpose(data, m);
    }
}

fn transpose(data: &mut [Complex64], m: usize) {
    for r in 0..m {
        for c in r + 1..m {
            data.swap(r * m + c, c * m + r);
        }
    }
}

/// Square root of the circulant-embedding eigenvalues for an `m × m` torus,
/// pre-scaled so that `FFT(sqrt_eig * z)` has the target covariance.
fn embedding_spectrum(m: usize, resolution: f64, d_corr: f64, sigma: f64) -> Vec<f64> {
    let mut cov = vec![Complex64::new(0.0, 0.0); m * m];
    for r in 0..m {
        let dy = r.min(m - r) as f64 * resolution;
        for c in 0..m {
            let dx = c.min(m - c) as f64 * resolution;
            let d = dx.hypot(dy);
            cov[r * m + c] = Complex64::new(sigma * sigma * (-d / d_corr).exp(), 0.0);
        }
    }
    Fft2::new(m, false).process(&mut cov);
    let norm = (m * m) as f64;
    let mut clipped = 0usize;
    let out = cov
        .iter()
        .map(|l| {
            if l.re < 0.0 {
                clipped += 1;
            }
            (l.re.max(0.0) / norm).sqrt()
        })
        .collect();
    if clipped > 0 {
        log::debug!("shadowing embedding: clipped {clipped} negative eigenvalues");
    }
    out
}

impl ShadowingField {
    /// A field that is identically zero.
    pub fn zeros(width: f64, height: f64, resolution: f64, n_beams: usize) -> Self {
        let nx = (width / resolution).round() as usize + 1;
        let ny = (height / resolution).round() as usize + 1;
        ShadowingField {
            resolution,
            correlation_distance: 1.0,
            sigma: 0.0,
            seed: 0,
            nx,
            ny,
            beams: vec![vec![0.0; nx * ny]; n_beams],
        }
    }

    pub fn n_beams(&self) -> usize {
        self.beams.len()
    }

    /// Grid value at point `(i, j)`.
    pub fn at(&self, beam: usize, i: usize, j: usize) -> f64 {
        self.beams[beam][j * self.nx + i]
    }

    /// Bilinearly interpolated shadowing in dB at `(x, y)` metres. Positions
    /// outside the grid are clamped to its edge.
    pub fn value(&self, beam: usize, x: f64, y: f64) -> Result<f64> {
        let grid = self.beams.get(beam).ok_or(Error::BeamIndex {
            beam,
            n_beams: self.beams.len(),
        })?;
        let fx = (x / self.resolution).clamp(0.0, (self.nx - 1) as f64);
        let fy = (y / self.resolution).clamp(0.0, (self.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let j0 = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
        let i1 = (i0 + 1).min(self.nx - 1);
        let j1 = (j0 + 1).min(self.ny - 1);
        let v00 = grid[j0 * self.nx + i0];
        let v10 = grid[j0 * self.nx + i1];
        let v01 = grid[j1 * self.nx + i0];
        let v11 = grid[j1 * self.nx + i1];
        Ok(v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty)
    }

    /// Sample mean and (population) standard deviation of one beam's field.
    pub fn moments(&self, beam: usize) -> (f64, f64) {
        let g = &self.beams[beam];
        let n = g.len() as f64;
        let mean = g.iter().sum::<f64>() / n;
        let var = g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    /// Empirical autocorrelation at an axis-aligned lag of `lag` grid
    /// points, pooled over both axes, normalised by the field variance.
    /// Returns the estimate and the number of sample pairs used.
    pub fn autocorrelation(&self, beam: usize, lag: usize) -> (f64, usize) {
        let g = &self.beams[beam];
        let (mean, std) = self.moments(beam);
        let mut acc = 0.0;
        let mut pairs = 0usize;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = g[j * self.nx + i] - mean;
                if i + lag < self.nx {
                    acc += v * (g[j * self.nx + i + lag] - mean);
                    pairs += 1;
                }
                if j + lag < self.ny {
                    acc += v * (g[(j + lag) * self.nx + i] - mean);
                    pairs += 1;
                }
            }
        }
        (acc / pairs as f64 / (std * std), pairs)
    }

    /// Writes the field as `x,y,beam,db` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,beam,db")?;
        for (b, grid) in self.beams.iter().enumerate() {
            for j in 0..self.ny {
                for i in 0..self.nx {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        i as f64 * self.resolution,
                        j as f64 * self.resolution,
                        b,
                        grid[j * self.nx + i]
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Generates one independent shadowing field per beam over `area`
/// (`width × height` metres, origin at `(0, 0)`).
///
/// Beam `b` draws its white noise from ChaCha stream `b` of `seed`, so the
/// output does not depend on thread scheduling. Each field is shifted to a
/// zero sample mean.
pub fn generate_shadowing(
    seed: u64,
    area: (f64, f64),
    resolution: f64,
    d_corr: f64,
    sigma: f64,
    n_beams: usize,
    exec: Execution,
) -> Result<ShadowingField> {
    if !(sigma > 0.0) || !(d_corr > 0.0) || !(resolution > 0.0) {
        return Err(Error::Config(format!(
            "shadowing needs positive sigma, correlation distance and resolution (got {sigma}, {d_corr}, {resolution})"
        )));
    }
    if resolution > d_corr {
        return Err(Error::Config(format!(
            "shadowing resolution {resolution} m exceeds correlation distance {d_corr} m"
        )));
    }
    let (width, height) = area;
    if !(width > 0.0) || !(height > 0.0) {
        return Err(Error::Config("shadowing area must be positive".into()));
    }
    let nx = (width / resolution).round() as usize + 1;
    let ny = (height / resolution).round() as usize + 1;
    // torus large enough that wrap-around lags are at least the grid extent
    let m = (2 * nx.max(ny)).next_power_of_two();
    let spectrum = embedding_spectrum(m, resolution, d_corr, sigma);
    let fft = Fft2::new(m, false);

    let beams = map_range(exec, n_beams, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SHADOWING_STREAM_BASE + b as u64);
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .map(|&s| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(s * re, s * im)
            })
            .collect();
        fft.process(&mut buf);
        let mut grid = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                grid.push(buf[j * m + i].re);
            }
        }
        let mean = grid.iter().sum::<f64>() / grid.len() as f64;
        for v in &mut grid {
            *v -= mean;
        }
        grid
    });

    Ok(ShadowingField {
        resolution,
        correlation_distance: d_corr,
        sigma,
        seed,
        nx,
        ny,
        beams,
    })
}
