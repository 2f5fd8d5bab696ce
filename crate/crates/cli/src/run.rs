//! Command execution: compute through the library, then write artifacts.
//! All file writes happen from this single thread after the parallel
//! reductions inside the library have finished.

use std::path::PathBuf;

use rayon::prelude::*;

use nvsim_core::analysis::{full_span, polarization_density, sweep_curve, width_curve};
use nvsim_core::ensemble::{convolve_lineshape, field_map, stick_spectrum};

use crate::config::{from_core, CliError, ModelCfg, RunConfig};
use crate::output::{write_csv, write_pgm};

fn artifact(prefix: &str, ext: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}.{ext}"))
}

pub fn run(cfg: RunConfig) -> Result<(), CliError> {
    match cfg {
        RunConfig::Spectrum {
            model,
            field,
            grid,
            fwhm,
            class,
        } => {
            let sticks =
                stick_spectrum(&model.nv, field, &model.orientations).map_err(from_core)?;
            let spec = convolve_lineshape(&sticks, &grid, fwhm, class).map_err(from_core)?;
            let path = artifact(&model.out, "csv");
            write_csv(
                &path,
                "freq_mhz,amplitude",
                spec.freqs.iter().zip(&spec.amps).map(|(f, a)| [*f, *a]),
            )
            .map_err(|e| CliError::output(path.clone(), e))?;
            println!("wrote {}", path.display());
            Ok(())
        }

        RunConfig::Map2d {
            model,
            fields,
            grid,
            fwhm,
            class,
        } => {
            let map = field_map(&model.nv, &fields, &grid, fwhm, &model.orientations, class)
                .map_err(from_core)?;
            let csv = artifact(&model.out, "csv");
            let n_freq = map.freqs.len();
            write_csv(
                &csv,
                "field_g,freq_mhz,amplitude",
                map.amps().iter().enumerate().map(|(idx, a)| {
                    let fi = idx / n_freq;
                    let qi = idx % n_freq;
                    [map.fields[fi], map.freqs[qi], *a]
                }),
            )
            .map_err(|e| CliError::output(csv.clone(), e))?;
            println!("wrote {}", csv.display());

            let pgm = artifact(&model.out, "pgm");
            write_pgm(&pgm, n_freq, map.fields.len(), map.amps())
                .map_err(|e| CliError::output(pgm.clone(), e))?;
            println!("wrote {}", pgm.display());
            Ok(())
        }

        RunConfig::Widths { model, fields } => {
            let curve = width_curve(&model.nv, &fields, &model.orientations).map_err(from_core)?;
            let path = artifact(&model.out, "csv");
            write_csv(
                &path,
                "field_g,sigma_sq_mhz,sigma_ot_mhz",
                (0..curve.fields.len())
                    .map(|k| [curve.fields[k], curve.sigma_sq[k], curve.sigma_ot[k]]),
            )
            .map_err(|e| CliError::output(path.clone(), e))?;
            println!("wrote {}", path.display());
            Ok(())
        }

        RunConfig::Poldensity {
            model,
            field,
            fields,
            span,
            bin,
            class,
            weight,
        } => {
            let ModelCfg {
                nv, orientations, ..
            } = &model;
            // 1D slice at the requested field
            let slice_span = match span {
                Some(s) => s,
                None => full_span(nv, field, orientations, bin).map_err(from_core)?,
            };
            let slice =
                polarization_density(nv, field, orientations, class, slice_span, bin, weight)
                    .map_err(from_core)?;
            let csv = artifact(&model.out, "csv");
            write_csv(
                &csv,
                "freq_mhz,density_per_mhz",
                slice
                    .freqs
                    .iter()
                    .zip(&slice.density)
                    .map(|(f, d)| [*f, *d]),
            )
            .map_err(|e| CliError::output(csv.clone(), e))?;
            println!("wrote {}", csv.display());

            // 2D map over the field grid on a common frequency axis
            let common_span = match span {
                Some(s) => s,
                None => {
                    let spans = fields
                        .par_iter()
                        .map(|&b| full_span(nv, b, orientations, bin))
                        .collect::<nvsim_core::Result<Vec<_>>>()
                        .map_err(from_core)?;
                    let hi = spans.iter().map(|s| s.1).fold(0.0f64, f64::max);
                    (0.0, hi)
                }
            };
            let rows = fields
                .par_iter()
                .map(|&b| {
                    polarization_density(nv, b, orientations, class, common_span, bin, weight)
                        .map(|c| c.density)
                })
                .collect::<nvsim_core::Result<Vec<_>>>()
                .map_err(from_core)?;
            let n_bins = rows.first().map(|r| r.len()).unwrap_or(0);
            let mut matrix = Vec::with_capacity(fields.len() * n_bins);
            for row in &rows {
                matrix.extend_from_slice(row);
            }
            let pgm = artifact(&model.out, "pgm");
            write_pgm(&pgm, n_bins, fields.len(), &matrix)
                .map_err(|e| CliError::output(pgm.clone(), e))?;
            println!("wrote {}", pgm.display());
            Ok(())
        }

        RunConfig::Sweep {
            model,
            field,
            widths,
            bin,
            weight,
        } => {
            let (sq, ot) = sweep_curve(&model.nv, field, &model.orientations, &widths, bin, weight)
                .map_err(from_core)?;
            let path = artifact(&model.out, "csv");
            write_csv(
                &path,
                "width_mhz,pmax_sq,pmax_ot",
                (0..widths.len()).map(|k| [widths[k], sq.p_max[k], ot.p_max[k]]),
            )
            .map_err(|e| CliError::output(path.clone(), e))?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}
