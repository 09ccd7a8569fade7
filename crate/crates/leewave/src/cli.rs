//! Command line front end: configuration resolution, the pipeline
//! subcommands, and the built-in validation suite.
//!
//! Flags are long-form only. Every value flag can also be supplied through a
//! key-value configuration file (`--config`), with flags taking precedence;
//! the output directory can additionally come from the `LEEWAVE_OUTPUT_DIR`
//! environment variable (flag beats environment beats file). All stages are
//! deterministic: the same resolved configuration writes identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::atmosphere::{
    cira_like_profile, compute_scorer, estimate_f0_fstar, liouville_map, scorer_consistency,
    Regime, DEFAULT_TAIL_FRACTION,
};
use crate::error::{LeewaveError, Result};
use crate::field::{
    boundary_data, convolution_grid, radiation_diagnostic, solve, stability_report,
    staggered_columns, TerrainProfile,
};
use crate::io::{self, FieldQuantity};
use crate::kernel::{kernel_field, KernelGrid, KernelParams};
use crate::oracles::{lyra_kernel, morse_eigenvalues, morse_sigma, poisson_kernel, MorseParams};
use crate::spectral::{
    build_spectral_data, find_bound_states, spectral_density, Potential, SigmaMethod,
};
use crate::util::ode::linspace;

/// Environment variable overriding the output directory.
pub const OUTPUT_DIR_ENV: &str = "LEEWAVE_OUTPUT_DIR";

/// Smallest accepted grid resolution.
pub const MIN_RESOLUTION: usize = 16;

#[derive(Parser, Debug)]
#[command(
    name = "leewave",
    version,
    about = "Mountain-wave fields from a background profile: Scorer \
             coefficients, spectral data, Green's kernel, and solved fields",
    disable_help_flag = true,
    disable_version_flag = true
)]
pub struct Cli {
    /// Key-value configuration file; flags override its entries.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory receiving all output artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Print help.
    #[arg(long, global = true, action = clap::ArgAction::Help)]
    help: Option<bool>,
    /// Print version.
    #[arg(long, action = clap::ArgAction::Version)]
    version: Option<bool>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute Scorer coefficients and the normal-form map from a profile.
    Scorer(ScorerArgs),
    /// Compute spectral data (density samples and trapped modes).
    Spectrum(SpectrumArgs),
    /// Assemble the Green's kernel on a grid.
    Kernel(KernelArgs),
    /// Convolve a kernel with terrain forcing and write the wave field.
    Solve(SolveArgs),
    /// Run the built-in oracle checks and print a pass/fail table.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Default)]
#[command(disable_help_flag = true)]
pub struct ScorerArgs {
    /// Input profile file.
    #[arg(long, value_name = "PATH")]
    pub profile: Option<PathBuf>,
    /// Coefficient regime: full, classical, or boussinesq.
    #[arg(long, value_name = "NAME")]
    pub regime: Option<String>,
    /// Fraction of the mapped grid averaged for the asymptotic constant.
    #[arg(long, value_name = "FRACTION", allow_negative_numbers = true)]
    pub tail_fraction: Option<f64>,
}

#[derive(Args, Debug, Default)]
#[command(disable_help_flag = true)]
pub struct SpectrumArgs {
    /// Scorer artifact to read.
    #[arg(long, value_name = "PATH")]
    pub scorer: Option<PathBuf>,
    /// Density evaluation route: limit or jost.
    #[arg(long, value_name = "NAME")]
    pub sigma_method: Option<String>,
    /// Smallest density sample, as a multiple of F0.
    #[arg(long, value_name = "RATIO", allow_negative_numbers = true)]
    pub lambda_min: Option<f64>,
    /// Largest density sample, as a multiple of F0.
    #[arg(long, value_name = "RATIO", allow_negative_numbers = true)]
    pub lambda_max: Option<f64>,
    /// Number of density samples (log-spaced).
    #[arg(long, value_name = "COUNT")]
    pub lambda_count: Option<usize>,
}

#[derive(Args, Debug, Default)]
#[command(disable_help_flag = true)]
pub struct KernelArgs {
    /// Spectrum artifact to read.
    #[arg(long, value_name = "PATH")]
    pub spectrum: Option<PathBuf>,
    /// Grid mode: rect (inspection grid) or convolution (solve lattice).
    #[arg(long, value_name = "MODE")]
    pub grid: Option<String>,
    /// Rectangular grid: smallest column.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    /// Rectangular grid: largest column.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub x_max: Option<f64>,
    /// Rectangular grid: number of columns (the grid must avoid x = 0).
    #[arg(long, value_name = "COUNT")]
    pub x_count: Option<usize>,
    /// Smallest height row.
    #[arg(long, value_name = "ZETA", allow_negative_numbers = true)]
    pub zeta_min: Option<f64>,
    /// Largest height row.
    #[arg(long, value_name = "ZETA", allow_negative_numbers = true)]
    pub zeta_max: Option<f64>,
    /// Number of height rows.
    #[arg(long, value_name = "COUNT")]
    pub zeta_count: Option<usize>,
    /// Convolution lattice: left edge of the terrain grid.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub terrain_min: Option<f64>,
    /// Convolution lattice: right edge of the terrain grid.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub terrain_max: Option<f64>,
    /// Convolution lattice: number of terrain nodes.
    #[arg(long, value_name = "COUNT")]
    pub terrain_count: Option<usize>,
    /// Convolution lattice: left edge of the output window.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub out_min: Option<f64>,
    /// Convolution lattice: right edge of the output window.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub out_max: Option<f64>,
    /// Truncation of the evanescent wavenumber integral.
    #[arg(long, value_name = "MU", allow_negative_numbers = true)]
    pub mu_cap: Option<f64>,
    /// Gauss-Legendre nodes per wavenumber panel.
    #[arg(long, value_name = "COUNT")]
    pub mu_panel_nodes: Option<usize>,
    /// Gauss-Legendre nodes for the radiated integral.
    #[arg(long, value_name = "COUNT")]
    pub theta_nodes: Option<usize>,
    /// Fail if the discarded evanescent tail exceeds this bound.
    #[arg(long, value_name = "TOL", allow_negative_numbers = true)]
    pub tail_tolerance: Option<f64>,
}

#[derive(Args, Debug, Default)]
#[command(disable_help_flag = true)]
pub struct SolveArgs {
    /// Kernel artifact to read.
    #[arg(long, value_name = "PATH")]
    pub kernel: Option<PathBuf>,
    /// Terrain family: flat, witch, bump, or samples.
    #[arg(long, value_name = "NAME")]
    pub terrain: Option<String>,
    /// Peak terrain height.
    #[arg(long, value_name = "H", allow_negative_numbers = true)]
    pub terrain_height: Option<f64>,
    /// Half-width of the witch profile.
    #[arg(long, value_name = "B", allow_negative_numbers = true)]
    pub terrain_width: Option<f64>,
    /// Left endpoint of the bump support.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub bump_lo: Option<f64>,
    /// Right endpoint of the bump support.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub bump_hi: Option<f64>,
    /// Terrain sample file (for --terrain samples).
    #[arg(long, value_name = "PATH")]
    pub terrain_file: Option<PathBuf>,
    /// Left edge of the terrain grid.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub terrain_min: Option<f64>,
    /// Right edge of the terrain grid.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub terrain_max: Option<f64>,
    /// Number of terrain nodes.
    #[arg(long, value_name = "COUNT")]
    pub terrain_count: Option<usize>,
    /// Left edge of the output window.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub out_min: Option<f64>,
    /// Right edge of the output window.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub out_max: Option<f64>,
    /// Background wind at the surface.
    #[arg(long, value_name = "U", allow_negative_numbers = true)]
    pub surface_wind: Option<f64>,
    /// Scorer artifact for undoing the normal-form transform.
    #[arg(long, value_name = "PATH")]
    pub scorer: Option<PathBuf>,
    /// Spectrum artifact enabling the windward radiation diagnostic.
    #[arg(long, value_name = "PATH")]
    pub spectrum: Option<PathBuf>,
    /// Left edge of the windward fit window.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub radiation_min: Option<f64>,
    /// Right edge of the windward fit window.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    pub radiation_max: Option<f64>,
    /// Height at which the radiation diagnostic is evaluated.
    #[arg(long, value_name = "ZETA", allow_negative_numbers = true)]
    pub radiation_height: Option<f64>,
}

#[derive(Args, Debug, Default)]
#[command(disable_help_flag = true)]
pub struct ValidateArgs {}

/// Configuration keys accepted in `--config` files.
const KNOWN_KEYS: &[&str] = &[
    "output-dir",
    "profile",
    "regime",
    "tail-fraction",
    "scorer",
    "sigma-method",
    "lambda-min",
    "lambda-max",
    "lambda-count",
    "spectrum",
    "grid",
    "x-min",
    "x-max",
    "x-count",
    "zeta-min",
    "zeta-max",
    "zeta-count",
    "mu-cap",
    "mu-panel-nodes",
    "theta-nodes",
    "tail-tolerance",
    "kernel",
    "terrain",
    "terrain-height",
    "terrain-width",
    "bump-lo",
    "bump-hi",
    "terrain-file",
    "terrain-min",
    "terrain-max",
    "terrain-count",
    "out-min",
    "out-max",
    "surface-wind",
    "radiation-min",
    "radiation-max",
    "radiation-height",
];

/// Values from a key-value configuration file, consulted for any flag the
/// command line leaves unset.
struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    fn empty() -> Self {
        Settings {
            map: BTreeMap::new(),
        }
    }

    fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            LeewaveError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once(char::is_whitespace) else {
                return Err(LeewaveError::Config(format!(
                    "{}:{}: entry '{line}' has no value",
                    path.display(),
                    i + 1
                )));
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(LeewaveError::Config(format!(
                    "{}:{}: unknown configuration key '{key}'",
                    path.display(),
                    i + 1
                )));
            }
            map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Settings { map })
    }

    /// Flag value if set, else the parsed config entry, else the default.
    fn value<T: Clone + FromStr>(&self, key: &str, flag: &Option<T>, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v.clone());
        }
        match self.map.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|_| {
                LeewaveError::Config(format!(
                    "configuration value '{raw}' for '{key}' is invalid"
                ))
            }),
        }
    }

    /// Flag value if set, else the parsed config entry, else nothing.
    fn optional<T: Clone + FromStr>(&self, key: &str, flag: &Option<T>) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag.clone());
        }
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| {
                    LeewaveError::Config(format!(
                        "configuration value '{raw}' for '{key}' is invalid"
                    ))
                }),
        }
    }

    /// Flag or config entry; an error if neither supplies the key.
    fn required<T: Clone + FromStr>(&self, key: &str, flag: &Option<T>) -> Result<T> {
        self.optional(key, flag)?.ok_or_else(|| {
            LeewaveError::Config(format!("missing required option '--{key}'"))
        })
    }
}

/// Terrain families selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerrainKind {
    Flat,
    Witch,
    Bump,
    Samples,
}

impl FromStr for TerrainKind {
    type Err = LeewaveError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(TerrainKind::Flat),
            "witch" => Ok(TerrainKind::Witch),
            "bump" => Ok(TerrainKind::Bump),
            "samples" => Ok(TerrainKind::Samples),
            other => Err(LeewaveError::Config(format!(
                "unknown terrain '{other}'; expected 'flat', 'witch', 'bump', or 'samples'"
            ))),
        }
    }
}

/// Resolved terrain description.
#[derive(Clone, Debug)]
pub struct TerrainSpec {
    pub kind: TerrainKind,
    pub height: f64,
    pub width: f64,
    pub bump_lo: f64,
    pub bump_hi: f64,
    pub file: Option<PathBuf>,
}

impl TerrainSpec {
    pub fn build(&self) -> Result<TerrainProfile> {
        match self.kind {
            TerrainKind::Flat => Ok(TerrainProfile::Flat),
            TerrainKind::Witch => Ok(TerrainProfile::Witch {
                h0: self.height,
                b: self.width,
            }),
            TerrainKind::Bump => Ok(TerrainProfile::Bump {
                h0: self.height,
                a: self.bump_lo,
                b: self.bump_hi,
            }),
            TerrainKind::Samples => {
                let path = self.file.as_ref().ok_or_else(|| {
                    LeewaveError::Config(
                        "terrain 'samples' needs --terrain-file".to_string(),
                    )
                })?;
                io::read_terrain(path)
            }
        }
    }
}

/// Kernel grid request.
#[derive(Clone, Debug)]
pub enum GridSpec {
    /// Direct rectangular grid for kernel inspection.
    Rect {
        x_min: f64,
        x_max: f64,
        x_count: usize,
        zeta_min: f64,
        zeta_max: f64,
        zeta_count: usize,
    },
    /// Column-difference lattice matching a later `solve` run.
    Convolution {
        terrain_min: f64,
        terrain_max: f64,
        terrain_count: usize,
        out_min: f64,
        out_max: f64,
        zeta_min: f64,
        zeta_max: f64,
        zeta_count: usize,
    },
}

#[derive(Clone, Debug)]
pub struct ScorerConfig {
    pub profile: PathBuf,
    pub regime: Regime,
    pub tail_fraction: f64,
}

#[derive(Clone, Debug)]
pub struct SpectrumConfig {
    pub scorer: PathBuf,
    pub method: SigmaMethod,
    /// Density sample range as multiples of `F0`, log-spaced.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
}

#[derive(Clone, Debug)]
pub struct KernelConfig {
    pub spectrum: PathBuf,
    pub grid: GridSpec,
    pub params: KernelParams,
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub kernel: PathBuf,
    pub terrain: TerrainSpec,
    pub terrain_min: f64,
    pub terrain_max: f64,
    pub terrain_count: usize,
    pub out_min: f64,
    pub out_max: f64,
    pub surface_wind: f64,
    pub scorer: Option<PathBuf>,
    pub spectrum: Option<PathBuf>,
    pub radiation_min: f64,
    pub radiation_max: f64,
    pub radiation_height: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum ResolvedCommand {
    Scorer(ScorerConfig),
    Spectrum(SpectrumConfig),
    Kernel(KernelConfig),
    Solve(SolveConfig),
    Validate,
}

/// A fully resolved run: the subcommand with every knob fixed after merging
/// defaults, the configuration file, flags, and the environment.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: ResolvedCommand,
    pub output_dir: PathBuf,
    /// Always true: no stage consumes randomness, so identical
    /// configurations write identical artifact bytes.
    pub deterministic: bool,
}

impl RunConfig {
    /// Checks the cross-cutting invariants: positive tolerances, grids that
    /// avoid the singular column `x = 0`, and resolutions of at least
    /// [`MIN_RESOLUTION`].
    pub fn validate(&self) -> Result<()> {
        if !self.deterministic {
            return Err(LeewaveError::Config(
                "determinism cannot be disabled".to_string(),
            ));
        }
        match &self.command {
            ResolvedCommand::Scorer(c) => {
                if !(c.tail_fraction > 0.0 && c.tail_fraction < 1.0) {
                    return Err(LeewaveError::Config(format!(
                        "tail fraction must lie in (0, 1), got {}",
                        c.tail_fraction
                    )));
                }
            }
            ResolvedCommand::Spectrum(c) => {
                require_resolution("lambda-count", c.lambda_count)?;
                if !(c.lambda_min > 0.0 && c.lambda_max > c.lambda_min) {
                    return Err(LeewaveError::Config(format!(
                        "density sample range must satisfy 0 < lambda-min < lambda-max, \
                         got [{}, {}]",
                        c.lambda_min, c.lambda_max
                    )));
                }
            }
            ResolvedCommand::Kernel(c) => {
                validate_kernel_params(&c.params)?;
                match &c.grid {
                    GridSpec::Rect {
                        x_min,
                        x_max,
                        x_count,
                        zeta_min,
                        zeta_max,
                        zeta_count,
                    } => {
                        require_resolution("x-count", *x_count)?;
                        require_resolution("zeta-count", *zeta_count)?;
                        require_window("x", *x_min, *x_max)?;
                        require_window("zeta", *zeta_min, *zeta_max)?;
                        if *zeta_min < 0.0 {
                            return Err(LeewaveError::Config(format!(
                                "height rows must be nonnegative, got zeta-min {zeta_min}"
                            )));
                        }
                        let x = linspace(*x_min, *x_max, *x_count);
                        let span = x_max.abs().max(x_min.abs());
                        if x.iter().any(|v| v.abs() < 1e-12 * span) {
                            return Err(LeewaveError::Config(
                                "the requested grid contains the singular column x = 0; \
                                 shift the extents or change the count"
                                    .to_string(),
                            ));
                        }
                    }
                    GridSpec::Convolution {
                        terrain_min,
                        terrain_max,
                        terrain_count,
                        out_min,
                        out_max,
                        zeta_min,
                        zeta_max,
                        zeta_count,
                    } => {
                        require_resolution("terrain-count", *terrain_count)?;
                        require_resolution("zeta-count", *zeta_count)?;
                        require_window("terrain", *terrain_min, *terrain_max)?;
                        require_window("out", *out_min, *out_max)?;
                        require_window("zeta", *zeta_min, *zeta_max)?;
                        if *zeta_min < 0.0 {
                            return Err(LeewaveError::Config(format!(
                                "height rows must be nonnegative, got zeta-min {zeta_min}"
                            )));
                        }
                    }
                }
            }
            ResolvedCommand::Solve(c) => {
                require_resolution("terrain-count", c.terrain_count)?;
                require_window("terrain", c.terrain_min, c.terrain_max)?;
                require_window("out", c.out_min, c.out_max)?;
                if !(c.surface_wind > 0.0) || !c.surface_wind.is_finite() {
                    return Err(LeewaveError::Config(format!(
                        "surface wind must be positive, got {}",
                        c.surface_wind
                    )));
                }
                if !(c.radiation_min < c.radiation_max && c.radiation_max < 0.0) {
                    return Err(LeewaveError::Config(format!(
                        "the windward fit window must be negative and ordered, \
                         got [{}, {}]",
                        c.radiation_min, c.radiation_max
                    )));
                }
                if let Some(h) = c.radiation_height {
                    if !(h >= 0.0) || !h.is_finite() {
                        return Err(LeewaveError::Config(format!(
                            "radiation height must be nonnegative, got {h}"
                        )));
                    }
                }
                match c.terrain.kind {
                    TerrainKind::Witch => {
                        if !(c.terrain.width > 0.0) {
                            return Err(LeewaveError::Config(format!(
                                "witch half-width must be positive, got {}",
                                c.terrain.width
                            )));
                        }
                    }
                    TerrainKind::Bump => {
                        if !(c.terrain.bump_lo < c.terrain.bump_hi) {
                            return Err(LeewaveError::Config(format!(
                                "bump support must be ordered, got [{}, {}]",
                                c.terrain.bump_lo, c.terrain.bump_hi
                            )));
                        }
                    }
                    TerrainKind::Flat | TerrainKind::Samples => {}
                }
            }
            ResolvedCommand::Validate => {}
        }
        Ok(())
    }
}

fn require_resolution(name: &str, count: usize) -> Result<()> {
    if count < MIN_RESOLUTION {
        return Err(LeewaveError::Config(format!(
            "{name} must be at least {MIN_RESOLUTION}, got {count}"
        )));
    }
    Ok(())
}

fn require_window(name: &str, lo: f64, hi: f64) -> Result<()> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(LeewaveError::Config(format!(
            "{name} window must be finite and ordered, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn validate_kernel_params(params: &KernelParams) -> Result<()> {
    if let Some(cap) = params.mu_cap {
        if !(cap > 0.0) || !cap.is_finite() {
            return Err(LeewaveError::Config(format!(
                "wavenumber cap must be positive, got {cap}"
            )));
        }
    }
    if let Some(tol) = params.tail_tolerance {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(LeewaveError::Config(format!(
                "tail tolerance must be positive, got {tol}"
            )));
        }
    }
    if params.mu_panel_nodes < 2 {
        return Err(LeewaveError::Config(format!(
            "mu-panel-nodes must be at least 2, got {}",
            params.mu_panel_nodes
        )));
    }
    if params.theta_nodes < 8 {
        return Err(LeewaveError::Config(format!(
            "theta-nodes must be at least 8, got {}",
            params.theta_nodes
        )));
    }
    Ok(())
}

/// Merges flags, the configuration file, the environment, and defaults into
/// a validated [`RunConfig`].
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let settings = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::empty(),
    };
    let output_dir = match &cli.output_dir {
        Some(dir) => dir.clone(),
        None => match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) => PathBuf::from(dir),
            None => settings.value("output-dir", &None, PathBuf::from("."))?,
        },
    };
    let command = match &cli.command {
        Command::Scorer(a) => {
            let regime: Regime = settings
                .value("regime", &a.regime, "full".to_string())?
                .parse()?;
            ResolvedCommand::Scorer(ScorerConfig {
                profile: settings.required("profile", &a.profile)?,
                regime,
                tail_fraction: settings.value(
                    "tail-fraction",
                    &a.tail_fraction,
                    DEFAULT_TAIL_FRACTION,
                )?,
            })
        }
        Command::Spectrum(a) => {
            let method: SigmaMethod = settings
                .value("sigma-method", &a.sigma_method, "limit".to_string())?
                .parse()?;
            ResolvedCommand::Spectrum(SpectrumConfig {
                scorer: settings.required("scorer", &a.scorer)?,
                method,
                lambda_min: settings.value("lambda-min", &a.lambda_min, 1e-2)?,
                lambda_max: settings.value("lambda-max", &a.lambda_max, 1e2)?,
                lambda_count: settings.value("lambda-count", &a.lambda_count, 65)?,
            })
        }
        Command::Kernel(a) => {
            let mode = settings.value("grid", &a.grid, "rect".to_string())?;
            let grid = match mode.as_str() {
                "rect" => GridSpec::Rect {
                    x_min: settings.value("x-min", &a.x_min, -10.0)?,
                    x_max: settings.value("x-max", &a.x_max, 10.0)?,
                    x_count: settings.value("x-count", &a.x_count, 160)?,
                    zeta_min: settings.value("zeta-min", &a.zeta_min, 0.0)?,
                    zeta_max: settings.value("zeta-max", &a.zeta_max, 6.0)?,
                    zeta_count: settings.value("zeta-count", &a.zeta_count, 61)?,
                },
                "convolution" => GridSpec::Convolution {
                    terrain_min: settings.value("terrain-min", &a.terrain_min, -12.0)?,
                    terrain_max: settings.value("terrain-max", &a.terrain_max, 12.0)?,
                    terrain_count: settings.value("terrain-count", &a.terrain_count, 241)?,
                    out_min: settings.value("out-min", &a.out_min, -15.0)?,
                    out_max: settings.value("out-max", &a.out_max, 30.0)?,
                    zeta_min: settings.value("zeta-min", &a.zeta_min, 0.25)?,
                    zeta_max: settings.value("zeta-max", &a.zeta_max, 4.0)?,
                    zeta_count: settings.value("zeta-count", &a.zeta_count, 16)?,
                },
                other => {
                    return Err(LeewaveError::Config(format!(
                        "unknown grid mode '{other}'; expected 'rect' or 'convolution'"
                    )))
                }
            };
            let params = KernelParams {
                mu_cap: settings.optional("mu-cap", &a.mu_cap)?,
                mu_panel_nodes: settings.value("mu-panel-nodes", &a.mu_panel_nodes, 8)?,
                theta_nodes: settings.value("theta-nodes", &a.theta_nodes, 512)?,
                tail_tolerance: settings.optional("tail-tolerance", &a.tail_tolerance)?,
            };
            ResolvedCommand::Kernel(KernelConfig {
                spectrum: settings.required("spectrum", &a.spectrum)?,
                grid,
                params,
            })
        }
        Command::Solve(a) => {
            let kind: TerrainKind = settings
                .value("terrain", &a.terrain, "witch".to_string())?
                .parse()?;
            let terrain = TerrainSpec {
                kind,
                height: settings.value("terrain-height", &a.terrain_height, 0.5)?,
                width: settings.value("terrain-width", &a.terrain_width, 1.0)?,
                bump_lo: settings.value("bump-lo", &a.bump_lo, 1.0)?,
                bump_hi: settings.value("bump-hi", &a.bump_hi, 3.0)?,
                file: settings.optional("terrain-file", &a.terrain_file)?,
            };
            ResolvedCommand::Solve(SolveConfig {
                kernel: settings.required("kernel", &a.kernel)?,
                terrain,
                terrain_min: settings.value("terrain-min", &a.terrain_min, -12.0)?,
                terrain_max: settings.value("terrain-max", &a.terrain_max, 12.0)?,
                terrain_count: settings.value("terrain-count", &a.terrain_count, 241)?,
                out_min: settings.value("out-min", &a.out_min, -15.0)?,
                out_max: settings.value("out-max", &a.out_max, 30.0)?,
                surface_wind: settings.value("surface-wind", &a.surface_wind, 1.0)?,
                scorer: settings.optional("scorer", &a.scorer)?,
                spectrum: settings.optional("spectrum", &a.spectrum)?,
                radiation_min: settings.value("radiation-min", &a.radiation_min, -60.0)?,
                radiation_max: settings.value("radiation-max", &a.radiation_max, -20.0)?,
                radiation_height: settings.optional("radiation-height", &a.radiation_height)?,
            })
        }
        Command::Validate(_) => ResolvedCommand::Validate,
    };
    let config = RunConfig {
        command,
        output_dir,
        deterministic: true,
    };
    config.validate()?;
    Ok(config)
}

/// Parses, resolves, and runs; returns false when the validation suite
/// reports failures.
pub fn execute(cli: &Cli) -> Result<bool> {
    let config = resolve(cli)?;
    run(&config)
}

/// Executes a resolved configuration.
pub fn run(config: &RunConfig) -> Result<bool> {
    fs::create_dir_all(&config.output_dir).map_err(|e| {
        LeewaveError::Config(format!(
            "cannot create output directory {}: {e}",
            config.output_dir.display()
        ))
    })?;
    match &config.command {
        ResolvedCommand::Scorer(c) => {
            run_scorer(c, &config.output_dir)?;
            Ok(true)
        }
        ResolvedCommand::Spectrum(c) => {
            run_spectrum(c, &config.output_dir)?;
            Ok(true)
        }
        ResolvedCommand::Kernel(c) => {
            run_kernel(c, &config.output_dir)?;
            Ok(true)
        }
        ResolvedCommand::Solve(c) => {
            run_solve(c, &config.output_dir)?;
            Ok(true)
        }
        ResolvedCommand::Validate => run_validate(),
    }
}

fn run_scorer(config: &ScorerConfig, out: &Path) -> Result<()> {
    let profile = io::read_profile(&config.profile)?.load()?;
    let mut scorer = compute_scorer(&profile, config.regime)?;
    liouville_map(&mut scorer)?;
    let report = estimate_f0_fstar(&mut scorer, config.tail_fraction)?;
    let path = out.join("scorer.dat");
    io::write_scorer(&path, &scorer)?;
    println!(
        "scorer: regime {}, {} nodes, F0 {:.6e}, F* {:.6e}",
        scorer.regime,
        scorer.z.len(),
        report.f0,
        report.f_star
    );
    println!(
        "scorer: tail deviation integrals {:.3e} (plain), {:.3e} (weighted)",
        report.integral_abs, report.integral_weighted
    );
    println!("scorer: wrote {}", path.display());
    Ok(())
}

fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn run_spectrum(config: &SpectrumConfig, out: &Path) -> Result<()> {
    let scorer = io::read_scorer(&config.scorer)?;
    let potential = Potential::from_scorer(&scorer)?;
    let f0 = potential.f0;
    if !(f0 > 0.0) {
        return Err(LeewaveError::AssumptionViolated(format!(
            "asymptotic Scorer parameter F0 = {f0} is not positive; \
             no spectral data exists for this background"
        )));
    }
    let lambdas = log_spaced(
        config.lambda_min * f0,
        config.lambda_max * f0,
        config.lambda_count,
    );
    let data = build_spectral_data(potential, &lambdas, config.method)?;
    let path = out.join("spectrum.dat");
    io::write_spectrum(&path, &data)?;
    println!(
        "spectrum: F0 {:.6e}, {} density samples ({}), {} trapped modes",
        f0,
        data.sigma_samples.len(),
        config.method,
        data.bound_states.len()
    );
    for state in &data.bound_states {
        println!(
            "spectrum: trapped mode at lambda {:.6e} (lambda/F0 {:.6e})",
            state.lambda,
            state.lambda / f0
        );
    }
    println!("spectrum: wrote {}", path.display());
    Ok(())
}

fn run_kernel(config: &KernelConfig, out: &Path) -> Result<()> {
    let data = io::read_spectrum(&config.spectrum)?;
    let grid = match &config.grid {
        GridSpec::Rect {
            x_min,
            x_max,
            x_count,
            zeta_min,
            zeta_max,
            zeta_count,
        } => KernelGrid::new(
            linspace(*x_min, *x_max, *x_count),
            linspace(*zeta_min, *zeta_max, *zeta_count),
        )?,
        GridSpec::Convolution {
            terrain_min,
            terrain_max,
            terrain_count,
            out_min,
            out_max,
            zeta_min,
            zeta_max,
            zeta_count,
        } => {
            let lattice = linspace(*terrain_min, *terrain_max, *terrain_count);
            let boundary = boundary_data(&TerrainProfile::Flat, 1.0, &lattice)?;
            let out_x = staggered_columns(&boundary, *out_min, *out_max)?;
            convolution_grid(&boundary, &out_x, linspace(*zeta_min, *zeta_max, *zeta_count))?
        }
    };
    let field = kernel_field(&data, &grid, &config.params)?;
    let path = out.join("kernel.dat");
    io::write_kernel(&path, &field)?;
    println!(
        "kernel: {} columns x {} rows, F0 {:.6e}, {} trapped modes folded in",
        field.x.len(),
        field.zeta.len(),
        field.f0,
        if field.trapped.iter().flatten().any(|&v| v != 0.0) {
            1
        } else {
            0
        }
    );
    println!(
        "kernel: wavenumber cap {:.3e} with {} nodes, tail bound {:.3e}",
        field.mu_cap, field.mu_nodes, field.tail_bound
    );
    println!("kernel: wrote {}", path.display());
    Ok(())
}

fn nearest_index(values: &[f64], target: f64) -> usize {
    let mut best = 0;
    let mut gap = f64::INFINITY;
    for (i, &v) in values.iter().enumerate() {
        let g = (v - target).abs();
        if g < gap {
            gap = g;
            best = i;
        }
    }
    best
}

fn run_solve(config: &SolveConfig, out: &Path) -> Result<()> {
    let kernel = io::read_kernel(&config.kernel)?;
    let terrain = config.terrain.build()?;
    let lattice = linspace(config.terrain_min, config.terrain_max, config.terrain_count);
    let boundary = boundary_data(&terrain, config.surface_wind, &lattice)?;
    let out_x = staggered_columns(&boundary, config.out_min, config.out_max)?;
    let scorer = match &config.scorer {
        Some(path) => Some(io::read_scorer(path)?),
        None => None,
    };
    let field = solve(&kernel, &boundary, &out_x, scorer.as_ref())?;
    let stability = stability_report(&field, &boundary)?;

    let mut entries: Vec<(String, String)> = vec![
        ("nx".to_string(), field.x.len().to_string()),
        ("nheights".to_string(), field.zeta.len().to_string()),
        ("f0".to_string(), io::fmt_float(kernel.f0)),
        ("f_star".to_string(), io::fmt_float(kernel.f_star)),
        ("sup_w".to_string(), io::fmt_float(stability.sup_w)),
        ("f_l1".to_string(), io::fmt_float(stability.f_l1)),
        ("f_linf".to_string(), io::fmt_float(stability.f_linf)),
        ("implied_c".to_string(), io::fmt_float(stability.implied_c)),
    ];
    if let Some(spectrum_path) = &config.spectrum {
        let data = io::read_spectrum(spectrum_path)?;
        let drift = (data.potential.f0 - kernel.f0).abs();
        if drift > 1e-12 * kernel.f0.abs().max(1.0) {
            return Err(LeewaveError::InvalidInput(format!(
                "spectrum and kernel artifacts disagree: F0 {} vs {}",
                data.potential.f0, kernel.f0
            )));
        }
        let zeta_index = match config.radiation_height {
            Some(h) => nearest_index(&field.zeta, h),
            None => field.zeta.len() / 2,
        };
        let report = radiation_diagnostic(
            &field,
            &data,
            &boundary,
            config.radiation_min,
            config.radiation_max,
            zeta_index,
        )?;
        entries.extend([
            (
                "radiation_exponent".to_string(),
                io::fmt_float(report.exponent),
            ),
            (
                "radiation_fitted_coefficient".to_string(),
                io::fmt_float(report.fitted_coefficient),
            ),
            (
                "radiation_predicted_coefficient".to_string(),
                io::fmt_float(report.predicted_coefficient),
            ),
            (
                "radiation_mean_dominated".to_string(),
                report.mean_dominated.to_string(),
            ),
            (
                "radiation_monotone".to_string(),
                report.monotone.to_string(),
            ),
            ("boundary_mean".to_string(), io::fmt_float(report.mean)),
            (
                "boundary_first_moment".to_string(),
                io::fmt_float(report.first_moment),
            ),
            ("radiation_zeta".to_string(), io::fmt_float(report.zeta)),
            ("v_edge".to_string(), io::fmt_float(report.v_edge)),
            ("sigma_edge".to_string(), io::fmt_float(report.sigma_edge)),
        ]);
        println!(
            "solve: windward decay exponent {:.4}, coefficient {:.4e} \
             (predicted {:.4e})",
            report.exponent, report.fitted_coefficient, report.predicted_coefficient
        );
    }

    let w_path = out.join("wave_w.dat");
    let wbar_path = out.join("wave_wbar.dat");
    let heat_path = out.join("heatmap.dat");
    let diag_path = out.join("diagnostics.dat");
    io::write_field_matrix(&w_path, &field, FieldQuantity::W)?;
    io::write_field_matrix(&wbar_path, &field, FieldQuantity::WBar)?;
    io::write_heatmap(&heat_path, &field)?;
    io::write_diagnostics(&diag_path, &entries)?;
    println!(
        "solve: {} columns x {} rows, sup|w| {:.6e}",
        field.x.len(),
        field.zeta.len(),
        stability.sup_w
    );
    println!(
        "solve: wrote {} {} {} {}",
        w_path.display(),
        wbar_path.display(),
        heat_path.display(),
        diag_path.display()
    );
    Ok(())
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn poisson_case() -> Result<(bool, String)> {
    let p = Potential::free(0.0, 4.0, 401)?;
    let data = build_spectral_data(p, &[], SigmaMethod::Limit)?;
    let grid = KernelGrid::new(
        vec![-6.0, -2.5, -0.8, 1.2, 3.0, 7.5],
        vec![0.3, 1.0, 2.2, 4.5],
    )?;
    let field = kernel_field(&data, &grid, &KernelParams::default())?;
    let mut worst = 0.0f64;
    for (i, &x) in field.x.iter().enumerate() {
        for (j, &z) in field.zeta.iter().enumerate() {
            worst = worst.max((field.total(i, j) - poisson_kernel(x, z)).abs());
        }
    }
    Ok((worst <= 1e-6, format!("max abs err {worst:.3e}")))
}

fn lyra_case() -> Result<(bool, String)> {
    let p = Potential::free(1.0, 6.0, 601)?;
    let data = build_spectral_data(p, &[], SigmaMethod::Limit)?;
    let grid = KernelGrid::new(
        vec![-8.0, -3.0, -1.0, 1.5, 4.0, 9.0],
        vec![0.4, 1.2, 2.5, 5.0],
    )?;
    let field = kernel_field(&data, &grid, &KernelParams::default())?;
    let mut worst = 0.0f64;
    for (i, &x) in field.x.iter().enumerate() {
        for (j, &z) in field.zeta.iter().enumerate() {
            worst = worst.max((field.total(i, j) - lyra_kernel(x, z, 1.0)?).abs());
        }
    }
    Ok((worst <= 1e-6, format!("max abs err {worst:.3e}")))
}

fn morse_case() -> Result<(bool, String)> {
    let params = MorseParams::canonical();
    let p = Potential::morse(params, 1.0, 30.0, 3001)?;
    let found = find_bound_states(&p)?;
    if found.states.len() != 1 {
        return Ok((
            false,
            format!("expected 1 trapped mode, found {}", found.states.len()),
        ));
    }
    let lambda = found.states[0].lambda;
    let ratio = lambda / p.f0;
    let freq = ((p.f0 - lambda) / p.f0).sqrt();
    let exact = morse_eigenvalues(&params)?;
    let gap = (lambda - exact[0]).abs() / exact[0].abs();
    let passed = (-0.182..=-0.178).contains(&ratio)
        && (1.084..=1.088).contains(&freq)
        && gap <= 1e-8;
    Ok((
        passed,
        format!("lambda/F0 {ratio:.5}, freq ratio {freq:.5}, oracle gap {gap:.1e}"),
    ))
}

fn density_case() -> Result<(bool, String)> {
    let params = MorseParams::canonical();
    let p = Potential::morse(params, 1.0, 30.0, 3001)?;
    let mut worst = 0.0f64;
    for lambda in [0.01, 1.0, 100.0] {
        let limit = spectral_density(&p, lambda, SigmaMethod::Limit)?;
        let jost = spectral_density(&p, lambda, SigmaMethod::Jost)?;
        let exact = morse_sigma(&params, lambda)?;
        worst = worst.max((limit - jost).abs() / exact);
        worst = worst.max((limit - exact).abs() / exact);
    }
    Ok((worst <= 1e-8, format!("max rel err {worst:.3e}")))
}

fn coefficient_case() -> Result<(bool, String)> {
    let report = scorer_consistency(&cira_like_profile())?;
    let worst = report
        .b_forms_max_rel
        .max(report.d_forms_max_rel)
        .max(report.f_assembly_max_rel);
    Ok((worst <= 1e-9, format!("max rel disagreement {worst:.3e}")))
}

fn run_validate() -> Result<bool> {
    let checks = [
        check("poisson kernel recovery", poisson_case()),
        check("lyra kernel closed form", lyra_case()),
        check("morse single trapped mode", morse_case()),
        check("density limit vs jost vs oracle", density_case()),
        check("coefficient form consistency", coefficient_case()),
    ];
    println!("{:<34} result", "check");
    for c in &checks {
        let status = if c.passed { "pass" } else { "FAIL" };
        println!("{:<34} {:<4}  {}", c.name, status, c.detail);
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    println!("validate: {passed} of {} checks passed", checks.len());
    Ok(passed == checks.len())
}
