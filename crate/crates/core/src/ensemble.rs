//! Orientation ensembles (single crystals and powders), stick-spectrum
//! accumulation, Gaussian lineshape convolution, and 2D field–frequency
//! maps.
//!
//! Everything is folded onto θ ∈ [0, π/2]: H(π − θ) is unitarily
//! equivalent to H(θ), so an isotropic or crystal ensemble loses nothing.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spin::{
    build_hamiltonian, eigensystem, enumerate_transitions, NvCenter, TransitionClass,
};

/// Default Gaussian linewidth (FWHM), MHz.
pub const DEFAULT_FWHM_MHZ: f64 = 20.0;
/// Default powder quadrature order.
pub const DEFAULT_POWDER_POINTS: usize = 512;

/// One orientation: angle to the field and its ensemble weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientationSample {
    /// Radians, in [0, π/2].
    pub theta: f64,
    /// Dimensionless, positive; weights of a set sum to 1.
    pub weight: f64,
}

/// A weighted set of NV-axis orientations representing a crystal or powder.
///
/// Samples are kept sorted by angle, so reductions over the set are
/// independent of construction order.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientationSet {
    samples: Vec<OrientationSample>,
    label: String,
}

impl OrientationSet {
    /// Isotropic powder: `n`-point Gauss–Legendre quadrature in u = cosθ,
    /// mapped to u ∈ (0, 1) with weights summing to 1 (the θ ∈ [π/2, π]
    /// half folds onto [0, π/2] by symmetry).
    pub fn powder(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(
                "orientations",
                format!("powder quadrature needs at least 2 points (got {n})"),
            ));
        }
        let (nodes, weights) = gauss_legendre(n);
        let mut samples: Vec<OrientationSample> = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| {
                let u = 0.5 * (x + 1.0);
                OrientationSample {
                    theta: u.acos(),
                    weight: 0.5 * w,
                }
            })
            .collect();
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        for s in &mut samples {
            s.weight /= total;
        }
        samples.sort_by(|a, b| a.theta.total_cmp(&b.theta));
        Ok(OrientationSet {
            samples,
            label: format!("powder:{n}"),
        })
    }

    /// Single crystal with a [1 1 1] axis along the field: one quarter of
    /// the NV axes aligned (θ = 0), three quarters at 109.47°, which folds
    /// to arccos(1/3).
    pub fn axis_111() -> Self {
        OrientationSet {
            samples: vec![
                OrientationSample {
                    theta: 0.0,
                    weight: 0.25,
                },
                OrientationSample {
                    theta: (1.0f64 / 3.0).acos(),
                    weight: 0.75,
                },
            ],
            label: "axis-111".to_string(),
        }
    }

    /// Single crystal with a [1 0 0] axis along the field: all four NV
    /// axes at arccos(1/√3) ≈ 54.74°.
    pub fn axis_100() -> Self {
        OrientationSet {
            samples: vec![OrientationSample {
                theta: (1.0f64 / 3.0f64.sqrt()).acos(),
                weight: 1.0,
            }],
            label: "axis-100".to_string(),
        }
    }

    /// Explicit (θ, weight) list. Angles in [0, π] are folded onto
    /// [0, π/2]; weights must be positive and are normalized to sum 1.
    pub fn custom(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("orientations", "custom list is empty"));
        }
        let mut samples = Vec::with_capacity(pairs.len());
        for &(theta, weight) in pairs {
            if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
                return Err(Error::invalid(
                    "orientations",
                    format!("angle must lie in [0, π] (got {theta})"),
                ));
            }
            if !weight.is_finite() || weight <= 0.0 {
                return Err(Error::invalid(
                    "orientations",
                    format!("weight must be finite and positive (got {weight})"),
                ));
            }
            let folded = if theta > FRAC_PI_2 { PI - theta } else { theta };
            samples.push(OrientationSample {
                theta: folded,
                weight,
            });
        }
        // sort before normalizing so the weight sum is accumulated in a
        // canonical order and permuted input gives bit-identical sets
        samples.sort_by(|a, b| {
            a.theta
                .total_cmp(&b.theta)
                .then(a.weight.total_cmp(&b.weight))
        });
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        for s in &mut samples {
            s.weight /= total;
        }
        Ok(OrientationSet {
            samples,
            label: "custom".to_string(),
        })
    }

    pub fn samples(&self) -> &[OrientationSample] {
        &self.samples
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Gauss–Legendre nodes (ascending) and weights on [−1, 1], by Newton
/// iteration on P_n. Weights sum to 2.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let mut p_now = 1.0;
            let mut p_prev = 0.0;
            for j in 0..n {
                let p_old = p_prev;
                p_prev = p_now;
                p_now = (((2 * j + 1) as f64) * z * p_prev - (j as f64) * p_old) / (j as f64 + 1.0);
            }
            deriv = n as f64 * (z * p_now - p_prev) / (z * z - 1.0);
            let dz = p_now / deriv;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * deriv * deriv);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// One κ-weighted spectral line of the ensemble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stick {
    /// MHz, ≥ 0.
    pub freq: f64,
    /// Signed amplitude, −κ × orientation weight. The sign flip makes the
    /// canonical pumped single-quantum transition (Δ⟨ρ⟩ = −1,
    /// Δ⟨S_z²⟩ = +1) positive contrast.
    pub amp: f64,
    pub class: TransitionClass,
    /// Originating orientation, radians.
    pub theta: f64,
}

fn class_rank(c: TransitionClass) -> u8 {
    match c {
        TransitionClass::Sq => 0,
        TransitionClass::Ot => 1,
    }
}

fn stick_order(a: &Stick, b: &Stick) -> Ordering {
    a.freq
        .total_cmp(&b.freq)
        .then(a.theta.total_cmp(&b.theta))
        .then(class_rank(a.class).cmp(&class_rank(b.class)))
        .then(a.amp.total_cmp(&b.amp))
}

/// All transitions of an ensemble at field magnitude `b`, three sticks per
/// orientation, sorted by frequency (reductions downstream are then
/// independent of sample order).
pub fn stick_spectrum(nv: &NvCenter, b: f64, orientations: &OrientationSet) -> Result<Vec<Stick>> {
    let mut sticks = Vec::with_capacity(orientations.samples().len() * 3);
    for s in orientations.samples() {
        let p = nv.at(b, s.theta);
        let h = build_hamiltonian(&p)?;
        let es = eigensystem(&h)?;
        for t in enumerate_transitions(&es, &p) {
            sticks.push(Stick {
                freq: t.freq,
                amp: -t.kappa * s.weight,
                class: t.class,
                theta: s.theta,
            });
        }
    }
    sticks.sort_by(stick_order);
    Ok(sticks)
}

/// Which transition classes to keep in a spectrum or map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassFilter {
    All,
    Sq,
    Ot,
}

impl ClassFilter {
    pub fn accepts(&self, class: TransitionClass) -> bool {
        match self {
            ClassFilter::All => true,
            ClassFilter::Sq => class == TransitionClass::Sq,
            ClassFilter::Ot => class == TransitionClass::Ot,
        }
    }
}

/// Uniform frequency grid, endpoints inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreqGrid {
    /// MHz.
    pub min: f64,
    /// MHz.
    pub max: f64,
    /// MHz, > 0.
    pub step: f64,
}

impl FreqGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let g = FreqGrid { min, max, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() || !self.step.is_finite() {
            return Err(Error::invalid("grid", "grid bounds must be finite"));
        }
        if self.step <= 0.0 {
            return Err(Error::invalid(
                "grid",
                format!("grid step must be positive (got {})", self.step),
            ));
        }
        if self.max <= self.min {
            return Err(Error::invalid(
                "grid",
                format!("grid needs max > min (got {}..{})", self.min, self.max),
            ));
        }
        Ok(())
    }

    pub fn num_points(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.num_points())
            .map(|i| self.min + i as f64 * self.step)
            .collect()
    }
}

/// Default ODMR frequency grid, 0–7000 MHz in 5 MHz steps.
pub fn default_freq_grid() -> FreqGrid {
    FreqGrid {
        min: 0.0,
        max: 7000.0,
        step: 5.0,
    }
}

/// Default magnetic-field grid, 0–3500 G in 10 G steps.
pub fn default_field_grid() -> Vec<f64> {
    linear_grid(0.0, 3500.0, 10.0).expect("static grid")
}

/// Points `min, min+step, ..., max` (inclusive).
pub fn linear_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    Ok(FreqGrid::new(min, max, step)?.points())
}

/// `n` log-spaced points from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite()) || min <= 0.0 || max <= min {
        return Err(Error::invalid(
            "grid",
            format!("log grid needs 0 < min < max (got {min}..{max})"),
        ));
    }
    if n < 2 {
        return Err(Error::invalid(
            "grid",
            format!("log grid needs at least 2 points (got {n})"),
        ));
    }
    let (lo, hi) = (min.ln(), max.ln());
    Ok((0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

/// A stick list rendered onto a uniform grid with finite linewidth.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// MHz, uniform ascending grid.
    pub freqs: Vec<f64>,
    /// Signed amplitude per MHz.
    pub amps: Vec<f64>,
}

/// How far (in FWHM units) a stick reaches before it is dropped: beyond
/// 5 FWHM a unit-area Gaussian is below 1e−30 and contributes nothing at
/// f64 precision.
const LINE_REACH_FWHM: f64 = 5.0;

/// Deposit each stick as a unit-area Gaussian of the given FWHM onto the
/// grid. Sticks more than 5 FWHM outside the grid are skipped.
pub fn convolve_lineshape(
    sticks: &[Stick],
    grid: &FreqGrid,
    fwhm: f64,
    filter: ClassFilter,
) -> Result<Spectrum> {
    grid.validate()?;
    if !fwhm.is_finite() || fwhm <= 0.0 {
        return Err(Error::invalid(
            "fwhm",
            format!("linewidth must be finite and positive (got {fwhm})"),
        ));
    }
    let freqs = grid.points();
    let mut amps = vec![0.0; freqs.len()];
    let sigma = fwhm / (8.0 * LN_2).sqrt();
    let peak = 1.0 / (sigma * (2.0 * PI).sqrt());
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    let reach = LINE_REACH_FWHM * fwhm;

    let mut order: Vec<usize> = (0..sticks.len()).collect();
    order.sort_by(|&a, &b| stick_order(&sticks[a], &sticks[b]));

    for idx in order {
        let stick = &sticks[idx];
        if !filter.accepts(stick.class) {
            continue;
        }
        if stick.freq < grid.min - reach || stick.freq > grid.max + reach {
            continue;
        }
        let lo_f = ((stick.freq - reach - grid.min) / grid.step)
            .ceil()
            .max(0.0);
        let hi_f = ((stick.freq + reach - grid.min) / grid.step).floor();
        if hi_f < lo_f {
            continue;
        }
        let lo = lo_f as usize;
        if lo >= freqs.len() {
            continue;
        }
        let hi = (hi_f as usize).min(freqs.len() - 1);
        for r in lo..=hi {
            let dx = freqs[r] - stick.freq;
            amps[r] += stick.amp * peak * (-dx * dx * inv_two_sigma_sq).exp();
        }
    }
    Ok(Spectrum { freqs, amps })
}

/// 2D field–frequency map: one convolved spectrum per field value.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMap {
    /// Gauss, as supplied.
    pub fields: Vec<f64>,
    /// MHz grid shared by all rows.
    pub freqs: Vec<f64>,
    amps: Vec<f64>,
}

impl FieldMap {
    /// Amplitudes for field index `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.freqs.len();
        &self.amps[i * n..(i + 1) * n]
    }

    pub fn at(&self, field_idx: usize, freq_idx: usize) -> f64 {
        self.amps[field_idx * self.freqs.len() + freq_idx]
    }

    /// Row-major amplitudes, fields × freqs.
    pub fn amps(&self) -> &[f64] {
        &self.amps
    }
}

/// Compute one spectrum per field value. Rows are evaluated in parallel
/// and assembled in field order, so the result does not depend on the
/// thread count.
pub fn field_map(
    nv: &NvCenter,
    fields: &[f64],
    grid: &FreqGrid,
    fwhm: f64,
    orientations: &OrientationSet,
    filter: ClassFilter,
) -> Result<FieldMap> {
    if fields.is_empty() {
        return Err(Error::invalid("fields", "field grid is empty"));
    }
    grid.validate()?;
    let rows = fields
        .par_iter()
        .map(|&b| {
            let sticks = stick_spectrum(nv, b, orientations)?;
            convolve_lineshape(&sticks, grid, fwhm, filter)
        })
        .collect::<Result<Vec<Spectrum>>>()?;
    let freqs = grid.points();
    let mut amps = Vec::with_capacity(fields.len() * freqs.len());
    for row in &rows {
        amps.extend_from_slice(&row.amps);
    }
    Ok(FieldMap {
        fields: fields.to_vec(),
        freqs,
        amps,
    })
}
