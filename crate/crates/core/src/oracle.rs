//! Brute-force cross-checks of the coefficient pipeline: direct Fresnel
//! propagation through the grating stack, and Monte-Carlo momentum kicks.
//!
//! For a point source at x0 the intensity at the third grating depends on
//! x3 + x0 only:
//! |psi(x3)|^2 ~ |G(x3 + x0)|^2 with G(s) = int t2(x) exp(i k (x^2 - x s) / L) dx.
//! The incoherent source sum therefore needs G on a single lattice of s
//! values, which keeps the direct quadrature affordable.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::decoherence::{DecoherenceScenario, Kick};
use crate::error::{Error, Result};
use crate::model::{grid_visibility, Kinematics, Pattern};
use crate::quadrature::QuadOptions;
use crate::talbot::Interferometer;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Grating-2 periods inside the simulated window.
    pub slit_window: usize,
    /// Minimum cells per grating-2 period. Raised to 4 window / (L / L_talbot)
    /// so the chirp advances by less than a radian per cell across the window.
    pub cells_per_period: usize,
    /// Output samples per detector period.
    pub samples_per_period: usize,
    /// Minimum number of source points per grating-1 slit; the output grid
    /// is refined until each slit holds this many lattice points.
    pub source_points_per_slit: usize,
    /// Monte-Carlo trajectories.
    pub mc_trajectories: usize,
    pub seed: u64,
    /// Re-run with doubled window and doubled sampling and require the
    /// pattern to move by less than `convergence_tolerance` (relative L2).
    pub check_convergence: bool,
    pub convergence_tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            slit_window: 512,
            cells_per_period: 256,
            samples_per_period: 1024,
            source_points_per_slit: 32,
            mc_trajectories: 10_000,
            seed: 0,
            check_convergence: true,
            convergence_tolerance: 1e-3,
        }
    }
}

/// Complex samples on a uniform grid x_i = x0 + i dx.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<Complex64>,
}

impl Field {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx).sqrt()
    }
}

// Boundary samples may carry at most this fraction of the peak amplitude.
const WINDOW_LIMIT: f64 = 1e-6;

/// psi_L(x) = sqrt(p_z / (2 pi hbar i L)) int exp(i p_z (x - x0)^2 / (2 hbar L)) psi_0(x0) dx0
/// by direct quadrature, evaluated on the input grid.
pub fn fresnel_propagate(field: &Field, distance: f64, kin: &Kinematics) -> Result<Field> {
    let n = field.values.len();
    if n < 2 {
        return Err(Error::numeric(
            "fresnel_propagate",
            "need at least two samples",
        ));
    }
    let peak = field.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = field.values[0].norm().max(field.values[n - 1].norm());
    if peak > 0.0 && edge > WINDOW_LIMIT * peak {
        return Err(Error::Window {
            ratio: edge / peak,
            limit: WINDOW_LIMIT,
        });
    }
    if distance == 0.0 {
        return Ok(field.clone());
    }
    let k = kin.p_z / crate::units::HBAR;
    let pref = (Complex64::new(0.0, 2.0 * PI * distance / k)).sqrt().inv() * field.dx;
    let a = 0.5 * k / distance;
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = field.x(i);
            let mut acc = Complex64::default();
            for (j, v) in field.values.iter().enumerate() {
                if v.re == 0.0 && v.im == 0.0 {
                    continue;
                }
                let u = xi - field.x(j);
                let ph = a * u * u;
                acc += v * Complex64::new(ph.cos(), ph.sin());
            }
            acc * pref
        })
        .collect();
    Ok(Field {
        x0: field.x0,
        dx: field.dx,
        values,
    })
}

/// Density at the third grating and detector signal, each over one detector
/// period, from direct propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub density: Pattern,
    pub signal: Pattern,
    /// Visibility of the detector signal.
    pub visibility: f64,
    /// Relative L2 change of the signal under doubled window and doubled
    /// sampling, when checked.
    pub window_change: Option<f64>,
    pub sampling_change: Option<f64>,
}

/// Incoherent sum over point sources on grating 1 of
/// |propagate, multiply by t2, propagate|^2 at z = 2L.
pub fn coherent_pattern_oracle(
    ifm: &Interferometer,
    v_z: f64,
    config: &OracleConfig,
) -> Result<OracleResult> {
    if config.slit_window < 4 || config.samples_per_period < 8 || config.cells_per_period < 8 {
        return Err(Error::invalid(
            "oracle",
            "window needs >= 4 periods and >= 8 cells and samples per period",
        ));
    }
    let f1 = ifm.intensity_fraction(0, v_z);
    let nout = config
        .samples_per_period
        .max((config.source_points_per_slit as f64 / f1).ceil() as usize);
    let nout = nout + nout % 2;
    let window = config.slit_window + config.slit_window % 2;
    let s = ifm.setup.separation() / ifm.kinematics(v_z)?.talbot_length;
    let cells = config
        .cells_per_period
        .max((4.0 * window as f64 / s).ceil() as usize);
    let base = oracle_run(ifm, v_z, window, cells, nout)?;
    let (mut window_change, mut sampling_change) = (None, None);
    if config.check_convergence {
        let wide = oracle_run(ifm, v_z, 2 * window, cells, nout)?;
        let fine = oracle_run(ifm, v_z, window, 2 * cells, 2 * nout)?;
        let fine_on_base: Vec<f64> = fine.1.iter().step_by(2).copied().collect();
        let cw = relative_l2(&base.1, &wide.1);
        let cs = relative_l2(&base.1, &fine_on_base);
        let worst = cw.max(cs);
        if !(worst < config.convergence_tolerance) {
            return Err(Error::numeric(
                "coherent_pattern_oracle",
                format!(
                    "pattern moved by {worst:.3e} (window {cw:.3e}, sampling {cs:.3e}) under doubling; limit {:.1e}",
                    config.convergence_tolerance
                ),
            ));
        }
        window_change = Some(cw);
        sampling_change = Some(cs);
    }
    let d1 = ifm.setup.d1();
    let x: Vec<f64> = (0..nout).map(|i| d1 * i as f64 / nout as f64).collect();
    let density = Pattern::from_samples(x.clone(), base.0)?;
    let signal = Pattern::from_samples(x, base.1)?;
    Ok(OracleResult {
        visibility: signal.visibility,
        density,
        signal,
        window_change,
        sampling_change,
    })
}

/// One oracle evaluation; returns (density, signal) on `nout` points per detector period.
fn oracle_run(
    ifm: &Interferometer,
    v_z: f64,
    window: usize,
    cells: usize,
    nout: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let kin = ifm.kinematics(v_z)?;
    let s = ifm.setup.separation() / kin.talbot_length;
    // Work in units of the grating-2 period: k x^2 / L = beta xi^2.
    let beta = 2.0 * PI / s;
    let profile = ifm.profile(v_z);
    let quad = QuadOptions::with_abs_tol(1e-12);

    // Cell integrals of t2 over one period, cells tiling [0, 1).
    let delta = 1.0 / cells as f64;
    let cell: Vec<Complex64> = (0..cells)
        .map(|j| {
            let (a, b) = (j as f64 * delta, (j + 1) as f64 * delta);
            // split at 1/2 so each piece lies inside one reduced period
            let mut v = Complex64::default();
            for (lo, hi) in [(a, b.min(0.5)), (a.max(0.5) - 1.0, b - 1.0)] {
                if hi > lo {
                    v += profile.integrate_transmission(lo, hi, &quad)?;
                }
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;

    let half = 0.5 * window as f64;
    let total = window * cells;
    let edge = 0.1 * half;
    let coeffs: Vec<Complex64> = (0..total)
        .map(|j| {
            let xi = -half + (j as f64 + 0.5) * delta;
            let r = xi.abs();
            let taper = if r < half - edge {
                1.0
            } else {
                let t = 0.5 * PI * (r - (half - edge)) / edge;
                t.cos().powi(2)
            };
            let ph = beta * xi * xi;
            cell[j % cells] * taper * Complex64::new(ph.cos(), ph.sin())
        })
        .collect();

    // Lattice of s values in units of d, spacing one output sample.
    let ratio = ifm.setup.d1() / ifm.setup.d();
    let hs = ratio / nout as f64;
    // Stationary points (xi = s / 2) stay in the inner quarter of the window,
    // over a whole number of detector periods. Diffraction order n comes from
    // n L/L_talbot periods away, so the orders missing at the window edge set
    // an error that falls like 1 / window for sharp slits.
    let periods = ((0.5 * half / ratio).floor() as i64).max(1);
    let nmax = periods * nout as i64;
    let intensities: Vec<f64> = chirp_z(&coeffs, beta * delta * hs, -nmax, (2 * nmax) as usize)
        .into_iter()
        .map(|g| g.norm_sqr())
        .collect();
    let mut h = vec![0.0; nout];
    for (idx, v) in intensities.iter().enumerate() {
        let n = idx as i64 - nmax;
        h[n.rem_euclid(nout as i64) as usize] += v;
    }

    let f1 = ifm.intensity_fraction(0, v_z);
    let f3 = ifm.intensity_fraction(2, v_z);
    let w1 = cell_weights(f1, nout);
    let w3 = cell_weights(f3, nout);
    // w(x_i) = sum_q |t1(u_q)|^2 H(x_i + u_q)
    let density: Vec<f64> = (0..nout)
        .map(|i| {
            w1.iter()
                .map(|(q, c)| c * h[(i as i64 + q).rem_euclid(nout as i64) as usize])
                .sum()
        })
        .collect();
    // S(x_s) = sum_q w(x_s + u_q) |t3(u_q)|^2
    let signal: Vec<f64> = (0..nout)
        .map(|i| {
            w3.iter()
                .map(|(q, c)| c * density[(i as i64 + q).rem_euclid(nout as i64) as usize])
                .sum()
        })
        .collect();
    let norm = signal.iter().sum::<f64>() / nout as f64;
    let dnorm = density.iter().sum::<f64>() / nout as f64;
    if !(norm > 0.0 && dnorm > 0.0) {
        return Err(Error::DegenerateSignal);
    }
    Ok((
        density.into_iter().map(|v| v / dnorm).collect(),
        signal.into_iter().map(|v| v / norm).collect(),
    ))
}

/// Chirp-z transform: G(n) = sum_j c_j exp(-i alpha j n) for n = n0 .. n0 + m,
/// by Bluestein's identity jn = (j^2 + n^2 - (n - j)^2) / 2.
fn chirp_z(c: &[Complex64], alpha: f64, n0: i64, m: usize) -> Vec<Complex64> {
    let j_len = c.len();
    let size = (j_len + m - 1).next_power_of_two();
    // exp(-i alpha t^2 / 2), phase reduced with t^2 exact in f64
    let chirp = |t: i64| {
        let ph = -0.5 * alpha * ((t * t) as f64);
        Complex64::new(ph.cos(), ph.sin())
    };
    let shift = |j: usize| {
        let ph = -alpha * (j as f64) * (n0 as f64);
        Complex64::new(ph.cos(), ph.sin())
    };
    let mut a = vec![Complex64::default(); size];
    a.par_iter_mut()
        .zip(c.par_iter())
        .enumerate()
        .for_each(|(j, (slot, cj))| *slot = cj * shift(j) * chirp(j as i64));
    let mut k = vec![Complex64::default(); size];
    // kernel exp(+i alpha t^2 / 2) for t = -(J - 1) .. m - 1, stored circularly
    for t in 0..m as i64 {
        k[t as usize] = chirp(t).conj();
    }
    for t in 1..j_len as i64 {
        k[size - t as usize] = chirp(t).conj();
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    fwd.process(&mut a);
    fwd.process(&mut k);
    a.iter_mut().zip(&k).for_each(|(x, y)| *x *= y);
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    (0..m).map(|i| a[i] * chirp(i as i64) * scale).collect()
}

/// Lattice offsets q (in output samples) inside a centered slit of open
/// fraction f, weighted by the open part of each sample cell.
fn cell_weights(f: f64, n: usize) -> Vec<(i64, f64)> {
    let h = 0.5 * f * n as f64;
    let qmax = h.ceil() as i64 + 1;
    (-qmax..=qmax)
        .filter_map(|q| {
            let (a, b) = (q as f64 - 0.5, q as f64 + 0.5);
            let open = b.min(h) - a.max(-h);
            (open > 0.0).then_some((q, open))
        })
        .collect()
}

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    (num / den).sqrt()
}

/// Agreement between two patterns over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// ||a - b|| / ||a|| after scaling both to unit mean.
    pub relative_l2: f64,
    pub visibility_difference: f64,
}

/// Compares two one-period patterns. `b` is resampled onto `a`'s grid by
/// periodic linear interpolation when the grids differ.
pub fn compare(a: &Pattern, b: &Pattern) -> Comparison {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let na: Vec<f64> = {
        let m = mean(&a.values);
        a.values.iter().map(|v| v / m).collect()
    };
    let same = a.x.len() == b.x.len()
        && a.x
            .iter()
            .zip(&b.x)
            .all(|(p, q)| (p - q).abs() <= 1e-12 * p.abs().max(1e-300));
    let bv: Vec<f64> = if same {
        b.values.clone()
    } else {
        let n = b.x.len();
        let period = (b.x[1] - b.x[0]) * n as f64;
        a.x.iter()
            .map(|&x| {
                let t = (x - b.x[0]).rem_euclid(period) / (b.x[1] - b.x[0]);
                let i = t.floor() as usize % n;
                let frac = t - t.floor();
                b.values[i] * (1.0 - frac) + b.values[(i + 1) % n] * frac
            })
            .collect()
    };
    let mb = mean(&bv);
    let nb: Vec<f64> = bv.iter().map(|v| v / mb).collect();
    let vb = grid_visibility(&nb).unwrap_or(f64::NAN);
    Comparison {
        relative_l2: relative_l2(&na, &nb),
        visibility_difference: (a.visibility - vb).abs(),
    }
}

/// Fourier coefficients c_l, l = 0..=n/2, of a real periodic sample vector.
fn harmonics(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    (0..=n / 2)
        .map(|l| {
            let mut acc = Complex64::default();
            for (i, v) in values.iter().enumerate() {
                let ph = -2.0 * PI * ((l * i) % n) as f64 / n as f64;
                acc += Complex64::new(ph.cos(), ph.sin()) * v;
            }
            acc / n as f64
        })
        .collect()
}

/// Samples sum_l c_l g_l exp(2 pi i l i / n) for hermitian c, with the
/// Nyquist term split symmetrically.
fn synthesize(c: &[Complex64], g: &[Complex64], n: usize) -> Vec<f64> {
    let nyq = n / 2;
    (0..n)
        .map(|i| {
            let mut v = (c[0] * g[0]).re;
            for l in 1..c.len() {
                let ph = 2.0 * PI * ((l * i) % n) as f64 / n as f64;
                let t = (c[l] * g[l] * Complex64::new(ph.cos(), ph.sin())).re;
                v += if l == nyq && n % 2 == 0 { t } else { 2.0 * t };
            }
            v
        })
        .collect()
}

/// Monte-Carlo unraveling result.
#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub signal: Pattern,
    pub visibility: f64,
    /// Batch-means standard error of the visibility.
    pub standard_error: f64,
    /// Visibility of the base pattern with each harmonic l multiplied by the
    /// stationary suppression factor exp(-sum exponent(l r)).
    pub predicted_visibility: f64,
    pub trajectories: usize,
}

const MC_BATCHES: usize = 20;

/// Decohered signal by random momentum kicks. A kick q at z shifts the
/// single-source intensity at the third grating by (q / p_z) l(z), so each
/// trajectory displaces the coherent oracle pattern `base` as a whole.
pub fn mc_decohered_pattern(
    ifm: &Interferometer,
    v_z: f64,
    scenarios: &[DecoherenceScenario],
    base: &OracleResult,
    config: &OracleConfig,
) -> Result<McResult> {
    let kin = ifm.kinematics(v_z)?;
    let ctx = ifm.decoherence_context(kin);
    let prepared = scenarios
        .iter()
        .map(|s| s.prepare(&ctx))
        .collect::<Result<Vec<_>>>()?;
    let samplers = prepared
        .iter()
        .map(|p| p.kick_sampler())
        .collect::<Result<Vec<_>>>()?;
    let n = config.mc_trajectories;
    if n < MC_BATCHES {
        return Err(Error::invalid(
            "oracle.mc_trajectories",
            format!("need at least {MC_BATCHES}"),
        ));
    }
    let np = base.signal.len();
    let c = harmonics(&base.signal.values);
    let nh = c.len();
    let d1 = ifm.setup.d1();
    let r = ifm.setup.r() as i64;

    let batch_sums: Vec<(Vec<Complex64>, bool)> = (0..MC_BATCHES)
        .into_par_iter()
        .map(|b| {
            let (start, end) = (b * n / MC_BATCHES, (b + 1) * n / MC_BATCHES);
            let mut acc = vec![Complex64::default(); nh];
            let mut moved = false;
            for t in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(t as u64);
                let mut shift = 0.0;
                let mut randomized = false;
                for (p, smp) in prepared.iter().zip(&samplers) {
                    for (z, kick) in p.sample_events(&mut rng, smp)? {
                        let lever = ctx.lever(z);
                        match kick {
                            Kick::Momentum(q) => shift += q / kin.p_z * lever / d1,
                            Kick::Randomize => randomized |= lever > 0.0,
                        }
                    }
                }
                if randomized {
                    shift = rng.gen::<f64>();
                }
                moved |= shift != 0.0;
                let step = Complex64::new(0.0, -2.0 * PI * shift.rem_euclid(1.0)).exp();
                let mut ph = Complex64::new(1.0, 0.0);
                for a in acc.iter_mut() {
                    *a += ph;
                    ph *= step;
                }
            }
            Ok((acc, moved))
        })
        .collect::<Result<Vec<_>>>()?;

    let moved = batch_sums.iter().any(|(_, m)| *m);
    let mut total = vec![Complex64::default(); nh];
    let mut batch_vis = Vec::with_capacity(MC_BATCHES);
    for (b, (sums, _)) in batch_sums.iter().enumerate() {
        let count = ((b + 1) * n / MC_BATCHES - b * n / MC_BATCHES) as f64;
        let g: Vec<Complex64> = sums.iter().map(|s| s / count).collect();
        batch_vis.push(grid_visibility(&synthesize(&c, &g, np))?);
        for (t, s) in total.iter_mut().zip(sums) {
            *t += s;
        }
    }
    let signal = if moved {
        let g: Vec<Complex64> = total.iter().map(|s| s / n as f64).collect();
        Pattern::from_samples(base.signal.x.clone(), synthesize(&c, &g, np))?
    } else {
        base.signal.clone()
    };
    let mean = batch_vis.iter().sum::<f64>() / MC_BATCHES as f64;
    let var = batch_vis.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (MC_BATCHES - 1) as f64;
    let standard_error = (var / MC_BATCHES as f64).sqrt();

    let factors = (0..nh as i64)
        .map(|l| {
            let mut e = Complex64::default();
            for p in &prepared {
                e += p.exponent(l * r)?;
            }
            Ok((-e).exp())
        })
        .collect::<Result<Vec<_>>>()?;
    let predicted_visibility = grid_visibility(&synthesize(&c, &factors, np))?;
    Ok(McResult {
        visibility: signal.visibility,
        signal,
        standard_error,
        predicted_visibility,
        trajectories: n,
    })
}
