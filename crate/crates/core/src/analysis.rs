//! Powder-pattern characteristic widths σ(B), polarization density
//! p(ν; B), and maximum integrated polarization versus sweep width.
//!
//! Widths weight sticks by |κ| (the observable pattern); polarization
//! weights by the population difference |Δ⟨ρ⟩|, the quantity an adiabatic
//! frequency sweep can transfer. The contrast weighting is also available
//! through [`DensityWeight`] for comparison.

use rayon::prelude::*;

use crate::ensemble::{stick_spectrum, ClassFilter, OrientationSet, Stick};
use crate::error::{Error, Result};
use crate::spin::{
    build_hamiltonian, eigensystem, enumerate_transitions, NvCenter, TransitionClass,
};

/// Square root of the |κ|-weighted second moment of one powder pattern.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatternWidth {
    /// MHz, ≥ 0.
    pub sigma: f64,
    /// True when no stick of the requested class carried weight (the
    /// width is reported as 0).
    pub zero_weight: bool,
}

fn width_of_sticks(sticks: &[Stick], class: TransitionClass) -> PatternWidth {
    let mut total = 0.0;
    let mut first_moment = 0.0;
    for s in sticks.iter().filter(|s| s.class == class) {
        let w = s.amp.abs();
        total += w;
        first_moment += w * s.freq;
    }
    if total <= 0.0 {
        return PatternWidth {
            sigma: 0.0,
            zero_weight: true,
        };
    }
    let mean = first_moment / total;
    let mut second_moment = 0.0;
    for s in sticks.iter().filter(|s| s.class == class) {
        let w = s.amp.abs();
        second_moment += w * (s.freq - mean) * (s.freq - mean);
    }
    PatternWidth {
        sigma: (second_moment / total).max(0.0).sqrt(),
        zero_weight: false,
    }
}

/// Characteristic width of the unconvolved powder pattern of one class at
/// field `b`, computed on sticks weighted by |amp| = |κ| × orientation
/// weight. Zero total weight reports σ = 0 with the flag set.
pub fn characteristic_width(
    nv: &NvCenter,
    b: f64,
    orientations: &OrientationSet,
    class: TransitionClass,
) -> Result<PatternWidth> {
    let sticks = stick_spectrum(nv, b, orientations)?;
    Ok(width_of_sticks(&sticks, class))
}

/// σ(B) for both classes over a field grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WidthCurve {
    /// Gauss.
    pub fields: Vec<f64>,
    /// MHz, single-quantum pattern width per field.
    pub sigma_sq: Vec<f64>,
    /// MHz, overtone pattern width per field.
    pub sigma_ot: Vec<f64>,
}

/// Evaluate [`characteristic_width`] for both classes at every field.
/// Fields are processed in parallel and assembled in grid order.
pub fn width_curve(
    nv: &NvCenter,
    fields: &[f64],
    orientations: &OrientationSet,
) -> Result<WidthCurve> {
    if fields.is_empty() {
        return Err(Error::invalid("fields", "field grid is empty"));
    }
    let pairs = fields
        .par_iter()
        .map(|&b| {
            let sticks = stick_spectrum(nv, b, orientations)?;
            Ok((
                width_of_sticks(&sticks, TransitionClass::Sq).sigma,
                width_of_sticks(&sticks, TransitionClass::Ot).sigma,
            ))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(WidthCurve {
        fields: fields.to_vec(),
        sigma_sq: pairs.iter().map(|p| p.0).collect(),
        sigma_ot: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Per-transition weight deposited in the polarization histogram.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityWeight {
    /// |Δ⟨ρ⟩|: available population difference (default).
    PopulationDiff,
    /// |κ|: the ODMR contrast weighting, exposed for comparison.
    OdmrContrast,
}

/// One ensemble transition reduced to what the histogram needs.
struct EnsembleLine {
    freq: f64,
    /// orientation weight × |Δ⟨ρ⟩|
    pop: f64,
    /// orientation weight × |κ|
    contrast: f64,
    class: TransitionClass,
}

fn ensemble_lines(
    nv: &NvCenter,
    b: f64,
    orientations: &OrientationSet,
) -> Result<Vec<EnsembleLine>> {
    let mut lines = Vec::with_capacity(orientations.samples().len() * 3);
    for s in orientations.samples() {
        let p = nv.at(b, s.theta);
        let es = eigensystem(&build_hamiltonian(&p)?)?;
        for t in enumerate_transitions(&es, &p) {
            lines.push(EnsembleLine {
                freq: t.freq,
                pop: s.weight * t.delta_rho.abs(),
                contrast: s.weight * t.kappa.abs(),
                class: t.class,
            });
        }
    }
    Ok(lines)
}

/// Polarization available per unit frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityCurve {
    /// Bin centers, MHz.
    pub freqs: Vec<f64>,
    /// Dimensionless polarization per MHz, ≥ 0.
    pub density: Vec<f64>,
    /// Bin width, MHz.
    pub bin: f64,
    pub class: ClassFilter,
}

impl DensityCurve {
    /// Σ density · Δν — the whole-pattern integrated polarization.
    pub fn total(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin
    }
}

fn histogram(
    lines: &[EnsembleLine],
    class: ClassFilter,
    span: (f64, f64),
    bin: f64,
    weight: DensityWeight,
) -> DensityCurve {
    let nbins = (((span.1 - span.0) / bin).ceil() as usize).max(1);
    let mut mass = vec![0.0; nbins];
    for line in lines.iter().filter(|l| class.accepts(l.class)) {
        let w = match weight {
            DensityWeight::PopulationDiff => line.pop,
            DensityWeight::OdmrContrast => line.contrast,
        };
        // lines outside the span land in the edge bins so that the
        // integral always equals the ensemble sum
        let idx = (((line.freq - span.0) / bin).floor().max(0.0) as usize).min(nbins - 1);
        mass[idx] += w;
    }
    DensityCurve {
        freqs: (0..nbins)
            .map(|i| span.0 + (i as f64 + 0.5) * bin)
            .collect(),
        density: mass.iter().map(|m| m / bin).collect(),
        bin,
        class,
    }
}

fn validate_span_bin(span: (f64, f64), bin: f64) -> Result<()> {
    if !bin.is_finite() || bin <= 0.0 {
        return Err(Error::invalid(
            "bin",
            format!("bin width must be finite and positive (got {bin})"),
        ));
    }
    if !span.0.is_finite() || !span.1.is_finite() || span.1 <= span.0 {
        return Err(Error::invalid(
            "span",
            format!("span needs finite max > min (got {}..{})", span.0, span.1),
        ));
    }
    Ok(())
}

/// A frequency span wide enough to hold every transition of the ensemble
/// at field `b`, with one bin of headroom.
pub fn full_span(
    nv: &NvCenter,
    b: f64,
    orientations: &OrientationSet,
    bin: f64,
) -> Result<(f64, f64)> {
    let lines = ensemble_lines(nv, b, orientations)?;
    let max_freq = lines.iter().map(|l| l.freq).fold(0.0f64, f64::max);
    Ok((0.0, max_freq + bin))
}

/// Histogram of orientation-weighted |Δ⟨ρ⟩| (or |κ|) over frequency bins,
/// divided by the bin width. Transitions falling outside `span` are
/// accumulated into the edge bins, so the integral equals the ensemble
/// sum regardless of the span.
pub fn polarization_density(
    nv: &NvCenter,
    b: f64,
    orientations: &OrientationSet,
    class: ClassFilter,
    span: (f64, f64),
    bin: f64,
    weight: DensityWeight,
) -> Result<DensityCurve> {
    validate_span_bin(span, bin)?;
    let lines = ensemble_lines(nv, b, orientations)?;
    Ok(histogram(&lines, class, span, bin, weight))
}

/// Largest ∫ density dν over any window of the given width, with the
/// window quantized to whole bins (nearest count). Widths that round to
/// zero bins give 0.
pub fn integrated_polarization(curve: &DensityCurve, width: f64) -> f64 {
    if width.is_nan() || width <= 0.0 || curve.density.is_empty() {
        return 0.0;
    }
    let nbins = curve.density.len();
    let win = (((width / curve.bin).round()) as usize).min(nbins);
    if win == 0 {
        return 0.0;
    }
    let mut prefix = Vec::with_capacity(nbins + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &rho in &curve.density {
        acc += rho * curve.bin;
        prefix.push(acc);
    }
    let mut best = 0.0f64;
    for start in 0..=(nbins - win) {
        best = best.max(prefix[start + win] - prefix[start]);
    }
    best
}

/// Maximum integrated polarization as a function of sweep width, for one
/// class at one field.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCurve {
    /// MHz.
    pub widths: Vec<f64>,
    /// Dimensionless, non-decreasing in width.
    pub p_max: Vec<f64>,
    pub class: TransitionClass,
    /// Gauss.
    pub b: f64,
}

/// Sweep-planning curves for the single-quantum and overtone patterns at
/// field `b`, both histogrammed on a shared span with the given bin.
pub fn sweep_curve(
    nv: &NvCenter,
    b: f64,
    orientations: &OrientationSet,
    widths: &[f64],
    bin: f64,
    weight: DensityWeight,
) -> Result<(SweepCurve, SweepCurve)> {
    if widths.is_empty() {
        return Err(Error::invalid("widths", "width grid is empty"));
    }
    let lines = ensemble_lines(nv, b, orientations)?;
    let max_freq = lines.iter().map(|l| l.freq).fold(0.0f64, f64::max);
    let span = (0.0, max_freq + bin);
    validate_span_bin(span, bin)?;
    let density_sq = histogram(&lines, ClassFilter::Sq, span, bin, weight);
    let density_ot = histogram(&lines, ClassFilter::Ot, span, bin, weight);
    let curve = |density: &DensityCurve, class| SweepCurve {
        widths: widths.to_vec(),
        p_max: widths
            .iter()
            .map(|&w| integrated_polarization(density, w))
            .collect(),
        class,
        b,
    };
    Ok((
        curve(&density_sq, TransitionClass::Sq),
        curve(&density_ot, TransitionClass::Ot),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_field_widths_vanish() {
        let nv = NvCenter::default();
        let powder = OrientationSet::powder(128).unwrap();
        let sq = characteristic_width(&nv, 0.0, &powder, TransitionClass::Sq).unwrap();
        let ot = characteristic_width(&nv, 0.0, &powder, TransitionClass::Ot).unwrap();
        assert_abs_diff_eq!(sq.sigma, 0.0, epsilon = 1e-6);
        assert!(!sq.zero_weight);
        assert_abs_diff_eq!(ot.sigma, 0.0, epsilon = 1e-9);
        assert!(
            ot.zero_weight,
            "forbidden overtones carry no weight at B = 0"
        );
    }

    #[test]
    fn overtone_width_scales_inversely_with_field() {
        let nv = NvCenter::default();
        let powder = OrientationSet::powder(256).unwrap();
        let w1 = characteristic_width(&nv, 1.0e4, &powder, TransitionClass::Ot)
            .unwrap()
            .sigma;
        let w2 = characteristic_width(&nv, 2.0e4, &powder, TransitionClass::Ot)
            .unwrap()
            .sigma;
        let ratio = w2 / w1;
        assert!(
            (ratio - 0.5).abs() < 0.1,
            "second-order narrowing expects ratio 0.5, got {ratio}"
        );
    }

    #[test]
    fn width_curve_trends_and_product_bound() {
        let nv = NvCenter::default();
        let powder = OrientationSet::powder(128).unwrap();
        let fields = crate::ensemble::log_grid(2000.0, 5.0e4, 12).unwrap();
        let curve = width_curve(&nv, &fields, &powder).unwrap();
        for pair in curve.sigma_sq.windows(2) {
            assert!(pair[1] >= pair[0], "sigma_sq rises toward saturation");
        }
        let last = *curve.sigma_sq.last().unwrap();
        assert!(
            (1700.0..=2300.0).contains(&last),
            "sigma_sq saturates near 2 GHz, got {last}"
        );
        // the 1/B narrowing keeps sigma_ot * B bounded at high field
        for (b, s) in curve.fields.iter().zip(&curve.sigma_ot) {
            if *b >= 1.0e4 {
                assert!(s * b < 1.5e5, "sigma_ot * B = {}", s * b);
            }
        }
    }

    #[test]
    fn width_curve_matches_direct_calls() {
        let nv = NvCenter::default();
        let powder = OrientationSet::powder(64).unwrap();
        let fields = [500.0, 2000.0, 9000.0];
        let curve = width_curve(&nv, &fields, &powder).unwrap();
        let direct = characteristic_width(&nv, fields[0], &powder, TransitionClass::Sq).unwrap();
        assert_eq!(curve.sigma_sq[0], direct.sigma);
        let direct_ot = characteristic_width(&nv, fields[2], &powder, TransitionClass::Ot).unwrap();
        assert_eq!(curve.sigma_ot[2], direct_ot.sigma);
        assert!(width_curve(&nv, &[], &powder).is_err());
    }

    #[test]
    fn zero_field_density_integrates_to_two() {
        let nv = NvCenter::default();
        let powder = OrientationSet::powder(128).unwrap();
        let curve = polarization_density(
            &nv,
            0.0,
            &powder,
            ClassFilter::All,
            (0.0, 4000.0),
            1.0,
            DensityWeight::PopulationDiff,
        )
        .unwrap();
        // two pumped single-quantum transitions with |Δρ| = 1 apiece;
        // the overtone carries none
        assert_abs_diff_eq!(curve.total(), 2.0, epsilon = 1e-9);
        let ot = polarization_density(
            &nv,
            0.0,
            &powder,
            ClassFilter::Ot,
            (0.0, 4000.0),
            1.0,
            DensityWeight::PopulationDiff,
        )
        .unwrap();
        assert_abs_diff_eq!(ot.total(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn density_mass_survives_rebinning() {
        let nv = NvCenter::default();
        let powder = OrientationSet::powder(96).unwrap();
        let span = full_span(&nv, 2000.0, &powder, 5.0).unwrap();
        let fine = polarization_density(
            &nv,
            2000.0,
            &powder,
            ClassFilter::All,
            span,
            1.0,
            DensityWeight::PopulationDiff,
        )
        .unwrap();
        let coarse = polarization_density(
            &nv,
            2000.0,
            &powder,
            ClassFilter::All,
            span,
            5.0,
            DensityWeight::PopulationDiff,
        )
        .unwrap();
        assert_abs_diff_eq!(fine.total(), coarse.total(), epsilon = 1e-9);
    }

    #[test]
    fn density_rejects_bad_bins() {
        let nv = NvCenter::default();
        let set = OrientationSet::axis_100();
        for bin in [0.0, -1.0, f64::NAN] {
            assert!(polarization_density(
                &nv,
                100.0,
                &set,
                ClassFilter::All,
                (0.0, 1000.0),
                bin,
                DensityWeight::PopulationDiff,
            )
            .is_err());
        }
    }

    #[test]
    fn full_window_captures_total() {
        let nv = NvCenter::default();
        let powder = OrientationSet::powder(64).unwrap();
        let span = full_span(&nv, 1500.0, &powder, 1.0).unwrap();
        let curve = polarization_density(
            &nv,
            1500.0,
            &powder,
            ClassFilter::Sq,
            span,
            1.0,
            DensityWeight::PopulationDiff,
        )
        .unwrap();
        let whole = integrated_polarization(&curve, span.1 - span.0 + 10.0);
        assert_abs_diff_eq!(whole, curve.total(), epsilon = 1e-12);
        assert_eq!(integrated_polarization(&curve, -5.0), 0.0);
    }

    #[test]
    fn sweep_curve_monotone_and_consistent() {
        let nv = NvCenter::default();
        let powder = OrientationSet::powder(64).unwrap();
        let widths: Vec<f64> = (1..=50).map(|k| 100.0 * k as f64).collect();
        let (sq, ot) = sweep_curve(
            &nv,
            2000.0,
            &powder,
            &widths,
            1.0,
            DensityWeight::PopulationDiff,
        )
        .unwrap();
        for curve in [&sq, &ot] {
            for pair in curve.p_max.windows(2) {
                assert!(pair[1] >= pair[0], "p_max must not decrease with width");
            }
        }

        // a single-width grid reduces to integrated_polarization
        let (single, _) = sweep_curve(
            &nv,
            2000.0,
            &powder,
            &[300.0],
            1.0,
            DensityWeight::PopulationDiff,
        )
        .unwrap();
        let span = full_span(&nv, 2000.0, &powder, 1.0).unwrap();
        let density = polarization_density(
            &nv,
            2000.0,
            &powder,
            ClassFilter::Sq,
            span,
            1.0,
            DensityWeight::PopulationDiff,
        )
        .unwrap();
        assert_eq!(single.p_max[0], integrated_polarization(&density, 300.0));
    }

    #[test]
    fn stability_under_quadrature_refinement() {
        let nv = NvCenter::default();
        let coarse = OrientationSet::powder(512).unwrap();
        let fine = OrientationSet::powder(1024).unwrap();
        for class in [TransitionClass::Sq, TransitionClass::Ot] {
            let a = characteristic_width(&nv, 2000.0, &coarse, class)
                .unwrap()
                .sigma;
            let b = characteristic_width(&nv, 2000.0, &fine, class)
                .unwrap()
                .sigma;
            assert!((a - b).abs() / b < 0.01, "sigma {class:?}: {a} vs {b}");
        }
        let span = (0.0, 20000.0);
        let density = |set: &OrientationSet| {
            polarization_density(
                &nv,
                2000.0,
                set,
                ClassFilter::Sq,
                span,
                1.0,
                DensityWeight::PopulationDiff,
            )
            .unwrap()
            .total()
        };
        let a = density(&coarse);
        let b = density(&fine);
        assert!((a - b).abs() / b < 0.01, "density total: {a} vs {b}");
    }
}
