//! Argument parsing, config-file merging, and upfront validation.
//!
//! Flags override config-file entries; the config file is `key = value`
//! lines with `#` comments. Every numeric setting is checked against the
//! library preconditions before any computation starts.

use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use nvsim_core::analysis::DensityWeight;
use nvsim_core::ensemble::{
    linear_grid, log_grid, ClassFilter, FreqGrid, OrientationSet, DEFAULT_FWHM_MHZ,
    DEFAULT_POWDER_POINTS,
};
use nvsim_core::spin::{D_ZFS_MHZ, GAMMA_E_MHZ_PER_G};
use nvsim_core::NvCenter;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerics(nvsim_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Output { .. } => 3,
            CliError::Numerics(_) => 4,
        }
    }

    pub fn output(path: PathBuf, source: std::io::Error) -> Self {
        CliError::Output { path, source }
    }
}

/// Map a library error to an exit class: solver failures are numerical
/// (exit 4), precondition violations are configuration problems (exit 2).
pub fn from_core(e: nvsim_core::Error) -> CliError {
    match e {
        nvsim_core::Error::NoConvergence { .. }
        | nvsim_core::Error::NotHermitian { .. }
        | nvsim_core::Error::ComplexEntries { .. } => CliError::Numerics(e),
        nvsim_core::Error::InvalidParam { .. } => CliError::Config(e.to_string()),
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "nvsim",
    version,
    about = "ODMR spectra of NV- centers in diamond: single crystals, powders, and sweep planning",
    after_help = "Grids: linear MIN:STEP:MAX, or LOG:MIN:MAX:N for fields/widths. \
                  Orientations: powder:N | axis-111 | axis-100 | custom:THETA[@W],THETA[@W],... \
                  Config file: one `key = value` per line, `#` comments; flags win."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// 1D spectrum at a fixed field (CSV)
    Spectrum(SpectrumArgs),
    /// 2D field-frequency map (CSV + PGM heatmap)
    Map2d(Map2dArgs),
    /// Characteristic pattern widths versus field (CSV)
    Widths(WidthsArgs),
    /// Polarization density: 1D slice (CSV) + field-frequency map (PGM)
    Poldensity(PoldensityArgs),
    /// Maximum integrated polarization versus sweep width (CSV)
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Config file with `key = value` lines; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Zero-field splitting, MHz
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<f64>,
    /// Electron gyromagnetic ratio, MHz/G
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// `powder:N` | `axis-111` | `axis-100` | `custom:THETA[@W],...`
    #[arg(long)]
    pub orientations: Option<String>,
    /// Output path prefix (files get .csv / .pgm appended)
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Magnetic field, Gauss
    #[arg(long, allow_negative_numbers = true)]
    pub field: Option<f64>,
    /// Frequency grid MIN:STEP:MAX, MHz
    #[arg(long)]
    pub grid: Option<String>,
    /// Gaussian linewidth (FWHM), MHz
    #[arg(long, allow_negative_numbers = true)]
    pub fwhm: Option<f64>,
    /// all | sq | ot
    #[arg(long)]
    pub class: Option<String>,
}

#[derive(Args, Debug)]
pub struct Map2dArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Field grid MIN:STEP:MAX or log:MIN:MAX:N, Gauss
    #[arg(long)]
    pub fields: Option<String>,
    /// Frequency grid MIN:STEP:MAX, MHz
    #[arg(long)]
    pub freqs: Option<String>,
    /// Gaussian linewidth (FWHM), MHz
    #[arg(long, allow_negative_numbers = true)]
    pub fwhm: Option<f64>,
    /// all | sq | ot
    #[arg(long)]
    pub class: Option<String>,
}

#[derive(Args, Debug)]
pub struct WidthsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Field grid MIN:STEP:MAX or log:MIN:MAX:N, Gauss
    #[arg(long)]
    pub fields: Option<String>,
}

#[derive(Args, Debug)]
pub struct PoldensityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Field for the 1D slice, Gauss
    #[arg(long, allow_negative_numbers = true)]
    pub field: Option<f64>,
    /// Field grid for the 2D heatmap, Gauss
    #[arg(long)]
    pub fields: Option<String>,
    /// Frequency span MIN:MAX (MHz) or `auto`
    #[arg(long)]
    pub span: Option<String>,
    /// Histogram bin width, MHz
    #[arg(long, allow_negative_numbers = true)]
    pub bin: Option<f64>,
    /// all | sq | ot
    #[arg(long)]
    pub class: Option<String>,
    /// population | kappa
    #[arg(long)]
    pub weight: Option<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Magnetic field, Gauss
    #[arg(long, allow_negative_numbers = true)]
    pub field: Option<f64>,
    /// Sweep-width grid MIN:STEP:MAX or log:MIN:MAX:N, MHz
    #[arg(long)]
    pub widths: Option<String>,
    /// Histogram bin width, MHz
    #[arg(long, allow_negative_numbers = true)]
    pub bin: Option<f64>,
    /// population | kappa
    #[arg(long)]
    pub weight: Option<String>,
}

/// Fully validated run description.
pub struct ModelCfg {
    pub nv: NvCenter,
    pub orientations: OrientationSet,
    pub out: String,
}

pub enum RunConfig {
    Spectrum {
        model: ModelCfg,
        field: f64,
        grid: FreqGrid,
        fwhm: f64,
        class: ClassFilter,
    },
    Map2d {
        model: ModelCfg,
        fields: Vec<f64>,
        grid: FreqGrid,
        fwhm: f64,
        class: ClassFilter,
    },
    Widths {
        model: ModelCfg,
        fields: Vec<f64>,
    },
    Poldensity {
        model: ModelCfg,
        field: f64,
        fields: Vec<f64>,
        span: Option<(f64, f64)>,
        bin: f64,
        class: ClassFilter,
        weight: DensityWeight,
    },
    Sweep {
        model: ModelCfg,
        field: f64,
        widths: Vec<f64>,
        bin: f64,
        weight: DensityWeight,
    },
}

const KNOWN_KEYS: &[&str] = &[
    "d",
    "gamma",
    "orientations",
    "out",
    "field",
    "fields",
    "freqs",
    "grid",
    "span",
    "widths",
    "fwhm",
    "class",
    "bin",
    "weight",
];

fn load_config_file(path: &PathBuf) -> Result<HashMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read config file {}: {e}", path.display()))
    })?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "config line {}: expected `key = value`, got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "config line {}: unknown key '{key}'",
                lineno + 1
            )));
        }
        map.insert(key.to_string(), value.to_string());
    }
    Ok(map)
}

/// Flag value, else config value, else default.
struct Resolver {
    cfg: HashMap<String, String>,
}

impl Resolver {
    fn num(&self, flag: Option<f64>, key: &str, default: f64) -> Result<f64, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.cfg.get(key) {
            Some(s) => s.parse::<f64>().map_err(|_| {
                CliError::Config(format!(
                    "config key '{key}': cannot parse '{s}' as a number"
                ))
            }),
            None => Ok(default),
        }
    }

    fn text(&self, flag: Option<String>, key: &str, default: &str) -> String {
        flag.or_else(|| self.cfg.get(key).cloned())
            .unwrap_or_else(|| default.to_string())
    }
}

fn check_positive(v: f64, name: &str) -> Result<f64, CliError> {
    if !v.is_finite() || v <= 0.0 {
        return Err(CliError::Config(format!(
            "{name} must be finite and positive (got {v})"
        )));
    }
    Ok(v)
}

fn check_field(v: f64) -> Result<f64, CliError> {
    if !v.is_finite() || v < 0.0 {
        return Err(CliError::Config(format!(
            "field must be nonnegative and finite (got {v})"
        )));
    }
    Ok(v)
}

fn parse_class(s: &str) -> Result<ClassFilter, CliError> {
    match s {
        "all" => Ok(ClassFilter::All),
        "sq" => Ok(ClassFilter::Sq),
        "ot" => Ok(ClassFilter::Ot),
        other => Err(CliError::Config(format!(
            "class must be one of all|sq|ot (got '{other}')"
        ))),
    }
}

fn parse_weight(s: &str) -> Result<DensityWeight, CliError> {
    match s {
        "population" => Ok(DensityWeight::PopulationDiff),
        "kappa" => Ok(DensityWeight::OdmrContrast),
        other => Err(CliError::Config(format!(
            "weight must be population|kappa (got '{other}')"
        ))),
    }
}

fn parse_orientations(s: &str) -> Result<OrientationSet, CliError> {
    if let Some(n) = s.strip_prefix("powder:") {
        let n: usize = n.parse().map_err(|_| {
            CliError::Config(format!("orientations: cannot parse powder order '{n}'"))
        })?;
        return OrientationSet::powder(n).map_err(|e| CliError::Config(e.to_string()));
    }
    match s {
        "axis-111" => return Ok(OrientationSet::axis_111()),
        "axis-100" => return Ok(OrientationSet::axis_100()),
        _ => {}
    }
    if let Some(list) = s.strip_prefix("custom:") {
        let mut pairs = Vec::new();
        for item in list.split(',') {
            let (theta, weight) = match item.split_once('@') {
                Some((t, w)) => {
                    let theta: f64 = t.parse().map_err(|_| {
                        CliError::Config(format!("orientations: bad angle '{t}' in '{item}'"))
                    })?;
                    let weight: f64 = w.parse().map_err(|_| {
                        CliError::Config(format!("orientations: bad weight '{w}' in '{item}'"))
                    })?;
                    (theta, weight)
                }
                None => {
                    let theta: f64 = item.parse().map_err(|_| {
                        CliError::Config(format!("orientations: bad angle '{item}'"))
                    })?;
                    (theta, 1.0)
                }
            };
            pairs.push((theta, weight));
        }
        return OrientationSet::custom(&pairs).map_err(|e| CliError::Config(e.to_string()));
    }
    Err(CliError::Config(format!(
        "orientations must be powder:N, axis-111, axis-100, or custom:... (got '{s}')"
    )))
}

/// Linear `MIN:STEP:MAX` or `log:MIN:MAX:N` point grid.
fn parse_points_grid(s: &str, key: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Config(format!("{key}: {why} (got '{s}')"));
    if let Some(rest) = s.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("log grid must be log:MIN:MAX:N"));
        }
        let min: f64 = parts[0].parse().map_err(|_| bad("bad MIN"))?;
        let max: f64 = parts[1].parse().map_err(|_| bad("bad MAX"))?;
        let n: usize = parts[2].parse().map_err(|_| bad("bad N"))?;
        return log_grid(min, max, n).map_err(|e| CliError::Config(format!("{key}: {e}")));
    }
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("grid must be MIN:STEP:MAX"));
    }
    let min: f64 = parts[0].parse().map_err(|_| bad("bad MIN"))?;
    let step: f64 = parts[1].parse().map_err(|_| bad("bad STEP"))?;
    let max: f64 = parts[2].parse().map_err(|_| bad("bad MAX"))?;
    linear_grid(min, max, step).map_err(|e| CliError::Config(format!("{key}: {e}")))
}

fn parse_freq_grid(s: &str, key: &str) -> Result<FreqGrid, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = |why: &str| CliError::Config(format!("{key}: {why} (got '{s}')"));
    if parts.len() != 3 {
        return Err(bad("frequency grid must be MIN:STEP:MAX"));
    }
    let min: f64 = parts[0].parse().map_err(|_| bad("bad MIN"))?;
    let step: f64 = parts[1].parse().map_err(|_| bad("bad STEP"))?;
    let max: f64 = parts[2].parse().map_err(|_| bad("bad MAX"))?;
    FreqGrid::new(min, max, step).map_err(|e| CliError::Config(format!("{key}: {e}")))
}

fn parse_span(s: &str) -> Result<Option<(f64, f64)>, CliError> {
    if s == "auto" {
        return Ok(None);
    }
    let bad = || CliError::Config(format!("span must be `auto` or MIN:MAX (got '{s}')"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    if !lo.is_finite() || !hi.is_finite() || hi <= lo {
        return Err(bad());
    }
    Ok(Some((lo, hi)))
}

fn check_fields(fields: Vec<f64>, key: &str) -> Result<Vec<f64>, CliError> {
    for &b in &fields {
        if !b.is_finite() || b < 0.0 {
            return Err(CliError::Config(format!(
                "{key}: every field must be nonnegative (got {b})"
            )));
        }
    }
    Ok(fields)
}

fn resolve_model(
    r: &Resolver,
    common: CommonArgs,
    default_out: &str,
) -> Result<ModelCfg, CliError> {
    let d = check_positive(r.num(common.d, "d", D_ZFS_MHZ)?, "d")?;
    let gamma = check_positive(r.num(common.gamma, "gamma", GAMMA_E_MHZ_PER_G)?, "gamma")?;
    let orientations = parse_orientations(&r.text(
        common.orientations,
        "orientations",
        &format!("powder:{DEFAULT_POWDER_POINTS}"),
    ))?;
    let out = r.text(common.out, "out", default_out);
    Ok(ModelCfg {
        nv: NvCenter { d, gamma },
        orientations,
        out,
    })
}

/// Merge flags with the optional config file and validate everything.
pub fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    match cli.command {
        Command::Spectrum(mut args) => {
            let r = Resolver {
                cfg: match args.common.config.take() {
                    Some(p) => load_config_file(&p)?,
                    None => HashMap::new(),
                },
            };
            let model = resolve_model(&r, args.common, "spectrum")?;
            let field = check_field(r.num(args.field, "field", 0.0)?)?;
            let grid = parse_freq_grid(&r.text(args.grid, "grid", "0:5:7000"), "grid")?;
            let fwhm = check_positive(r.num(args.fwhm, "fwhm", DEFAULT_FWHM_MHZ)?, "fwhm")?;
            let class = parse_class(&r.text(args.class, "class", "all"))?;
            Ok(RunConfig::Spectrum {
                model,
                field,
                grid,
                fwhm,
                class,
            })
        }
        Command::Map2d(mut args) => {
            let r = Resolver {
                cfg: match args.common.config.take() {
                    Some(p) => load_config_file(&p)?,
                    None => HashMap::new(),
                },
            };
            let model = resolve_model(&r, args.common, "map2d")?;
            let fields = check_fields(
                parse_points_grid(&r.text(args.fields, "fields", "0:10:3500"), "fields")?,
                "fields",
            )?;
            let grid = parse_freq_grid(&r.text(args.freqs, "freqs", "0:5:7000"), "freqs")?;
            let fwhm = check_positive(r.num(args.fwhm, "fwhm", DEFAULT_FWHM_MHZ)?, "fwhm")?;
            let class = parse_class(&r.text(args.class, "class", "all"))?;
            Ok(RunConfig::Map2d {
                model,
                fields,
                grid,
                fwhm,
                class,
            })
        }
        Command::Widths(mut args) => {
            let r = Resolver {
                cfg: match args.common.config.take() {
                    Some(p) => load_config_file(&p)?,
                    None => HashMap::new(),
                },
            };
            let model = resolve_model(&r, args.common, "widths")?;
            let fields = check_fields(
                parse_points_grid(&r.text(args.fields, "fields", "log:100:50000:40"), "fields")?,
                "fields",
            )?;
            Ok(RunConfig::Widths { model, fields })
        }
        Command::Poldensity(mut args) => {
            let r = Resolver {
                cfg: match args.common.config.take() {
                    Some(p) => load_config_file(&p)?,
                    None => HashMap::new(),
                },
            };
            let model = resolve_model(&r, args.common, "poldensity")?;
            let field = check_field(r.num(args.field, "field", 0.0)?)?;
            let fields = check_fields(
                parse_points_grid(&r.text(args.fields, "fields", "0:10:3500"), "fields")?,
                "fields",
            )?;
            let span = parse_span(&r.text(args.span, "span", "auto"))?;
            let bin = check_positive(r.num(args.bin, "bin", 1.0)?, "bin")?;
            let class = parse_class(&r.text(args.class, "class", "all"))?;
            let weight = parse_weight(&r.text(args.weight, "weight", "population"))?;
            Ok(RunConfig::Poldensity {
                model,
                field,
                fields,
                span,
                bin,
                class,
                weight,
            })
        }
        Command::Sweep(mut args) => {
            let r = Resolver {
                cfg: match args.common.config.take() {
                    Some(p) => load_config_file(&p)?,
                    None => HashMap::new(),
                },
            };
            let model = resolve_model(&r, args.common, "sweep")?;
            let field = check_field(r.num(args.field, "field", 0.0)?)?;
            let widths = parse_points_grid(&r.text(args.widths, "widths", "10:10:5000"), "widths")?;
            for &w in &widths {
                if !w.is_finite() || w <= 0.0 {
                    return Err(CliError::Config(format!(
                        "widths: every sweep width must be positive (got {w})"
                    )));
                }
            }
            let bin = check_positive(r.num(args.bin, "bin", 1.0)?, "bin")?;
            let weight = parse_weight(&r.text(args.weight, "weight", "population"))?;
            Ok(RunConfig::Sweep {
                model,
                field,
                widths,
                bin,
                weight,
            })
        }
    }
}
