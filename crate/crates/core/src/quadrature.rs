//! Adaptive Gauss-Kronrod quadrature, an integrator for unit-modulus
//! oscillatory integrands exp(i psi(x)) whose phase diverges at the interval
//! ends, and Gauss-Legendre nodes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_intervals: 1 << 20,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            ..Default::default()
        }
    }
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7/K15 quadrature over consecutive breakpoints.
///
/// `breaks` must be sorted; the integral runs from the first to the last.
pub fn integrate_complex<F: Fn(f64) -> Complex64>(
    f: &F,
    breaks: &[f64],
    opts: &QuadOptions,
    context: &str,
) -> Result<Complex64> {
    let mut heap = BinaryHeap::new();
    let mut total = Complex64::default();
    let mut err = 0.0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = gk15(f, w[0], w[1]);
        total += value;
        err += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let mut count = heap.len();
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= tol {
            break;
        }
        if count >= opts.max_intervals {
            return Err(Error::Quadrature {
                context: context.to_string(),
                achieved: err,
                requested: tol,
                intervals: count,
            });
        }
        let Some(s) = heap.pop() else { break };
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            // Interval cannot be split further in floating point.
            return Err(Error::Quadrature {
                context: context.to_string(),
                achieved: err,
                requested: tol,
                intervals: count,
            });
        }
        let (v1, e1) = gk15(f, s.a, m);
        let (v2, e2) = gk15(f, m, s.b);
        total += v1 + v2 - s.value;
        err += e1 + e2 - s.error;
        heap.push(Segment {
            a: s.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: m,
            b: s.b,
            value: v2,
            error: e2,
        });
        count += 1;
    }
    // Re-sum to shed the drift of the running updates.
    Ok(heap.iter().map(|s| s.value).sum())
}

pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    opts: &QuadOptions,
    context: &str,
) -> Result<f64> {
    let g = |x: f64| Complex64::new(f(x), 0.0);
    integrate_complex(&g, breaks, opts, context).map(|c| c.re)
}

/// Integral over [0, inf) through the substitution x = tan(theta).
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: &F,
    opts: &QuadOptions,
    context: &str,
) -> Result<f64> {
    let g = |t: f64| {
        let c = t.cos();
        f(t.tan()) / (c * c)
    };
    integrate(
        &g,
        &[0.0, 0.25 * std::f64::consts::PI, 0.5 * std::f64::consts::PI],
        opts,
        context,
    )
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Phase psi and its first three derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseJet {
    pub psi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Where the phase of an oscillatory integrand blows up.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Walls {
    /// Singular point at or left of the lower limit.
    pub lower: Option<f64>,
    /// Singular point at or right of the upper limit.
    pub upper: Option<f64>,
}

// Zones need at least this many radians of phase before the
// integration-by-parts expansion is trusted.
const MIN_ASYMPTOTIC_PHASE: f64 = 200.0;

/// Integrates exp(i psi(x)) over [a, b].
///
/// Near each wall the interval is cut geometrically (widths doubling away
/// from the wall). A band whose phase is monotone and winds fast enough is
/// replaced by three terms of the integration-by-parts expansion, with the
/// third term bounding the error; the rest goes to adaptive Gauss-Kronrod.
pub fn integrate_unit_phase<F: Fn(f64) -> PhaseJet>(
    jet: &F,
    a: f64,
    b: f64,
    walls: Walls,
    opts: &QuadOptions,
    context: &str,
) -> Result<Complex64> {
    if !(b > a) {
        return Ok(Complex64::default());
    }
    let mid = 0.5 * (a + b);
    let mut lower = vec![a];
    if let Some(w) = walls.lower {
        let c = a - w;
        if c > 0.0 {
            let mut k = 1;
            loop {
                let x = w + c * f64::powi(2.0, k);
                if x >= mid {
                    break;
                }
                lower.push(x);
                k += 1;
            }
        }
    }
    let mut upper = vec![b];
    if let Some(w) = walls.upper {
        let c = w - b;
        if c > 0.0 {
            let mut k = 1;
            loop {
                let x = w - c * f64::powi(2.0, k);
                if x <= mid {
                    break;
                }
                upper.push(x);
                k += 1;
            }
        }
    }

    let zones_est = (lower.len() + upper.len()).max(1) as f64;
    let zone_tol = 0.25 * opts.abs_tol / zones_est;
    let mut asym = Complex64::default();

    // Bands adjacent to the lower wall, innermost first, as long as they stay asymptotic.
    let mut lo_end = 0;
    while lo_end + 1 < lower.len() {
        match asymptotic_band(jet, lower[lo_end], lower[lo_end + 1], zone_tol) {
            Some(v) => {
                asym += v;
                lo_end += 1;
            }
            None => break,
        }
    }
    let mut hi_end = 0;
    while hi_end + 1 < upper.len() {
        match asymptotic_band(jet, upper[hi_end + 1], upper[hi_end], zone_tol) {
            Some(v) => {
                asym += v;
                hi_end += 1;
            }
            None => break,
        }
    }

    let mut breaks: Vec<f64> = lower[lo_end..].to_vec();
    breaks.extend(upper[hi_end..].iter().rev());
    breaks.dedup();
    let f = |x: f64| {
        let p = jet(x).psi;
        Complex64::new(p.cos(), p.sin())
    };
    let inner_opts = QuadOptions {
        abs_tol: 0.5 * opts.abs_tol,
        ..*opts
    };
    let body = integrate_complex(&f, &breaks, &inner_opts, context)?;
    Ok(body + asym)
}

fn asymptotic_band<F: Fn(f64) -> PhaseJet>(jet: &F, a: f64, b: f64, tol: f64) -> Option<Complex64> {
    let ja = jet(a);
    let jb = jet(b);
    let sign = ja.d1.signum();
    if sign == 0.0 || jb.d1.signum() != sign {
        return None;
    }
    for k in 1..8 {
        let x = a + (b - a) * k as f64 / 8.0;
        let j = jet(x);
        if j.d1.signum() != sign || j.d1.abs() * (b - a) < MIN_ASYMPTOTIC_PHASE {
            return None;
        }
    }
    if ja.d1.abs() * (b - a) < MIN_ASYMPTOTIC_PHASE || jb.d1.abs() * (b - a) < MIN_ASYMPTOTIC_PHASE
    {
        return None;
    }
    let (va, ea) = ibp_terms(&ja);
    let (vb, eb) = ibp_terms(&jb);
    if ea + eb > tol {
        return None;
    }
    Some(vb - va)
}

/// Antiderivative of exp(i psi) from three integration-by-parts terms, with
/// the size of the last term as an error proxy.
fn ibp_terms(j: &PhaseJet) -> (Complex64, f64) {
    let i = Complex64::i();
    let p1 = j.d1;
    let t1 = 1.0 / p1;
    let t2 = j.d2 / (p1 * p1 * p1);
    let t3 = (j.d3 / p1 - 3.0 * j.d2 * j.d2 / (p1 * p1)) / (p1 * p1 * p1);
    // 1/(i psi') - psi''/psi'^3 + (psi'''/psi'^4 - 3 psi''^2/psi'^5)/i
    let s = -i * t1 - t2 - i * t3;
    let e = Complex64::new(j.psi.cos(), j.psi.sin());
    (e * s, t3.abs())
}
