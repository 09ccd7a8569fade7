//! Background atmospheres and the Scorer coefficient pipeline.
//!
//! The pipeline runs in four stages: ingest tabulated profiles
//! ([`load_profile`]), complete them hydrostatically
//! ([`hydrostatic_complete`]), evaluate the coefficients of the reduced
//! vertical-structure equation under a selectable approximation regime
//! ([`compute_scorer`]), and change variables to Liouville normal form
//! ([`liouville_map`]). [`estimate_f0_fstar`] then extracts the asymptotic
//! constant `F0` and the supremum `F*` of the Scorer parameter, which the
//! spectral machinery downstream requires to be positive.
//!
//! All quantities are non-dimensional. The background state `(u0, T0, rho0,
//! p0)` lives on a strictly increasing altitude grid starting at `z = 0`;
//! gravity `g` and the gas-constant ratio `mu` are scalars. Hydrostatic
//! balance `p0' = -g rho0` and the gas law `p0 = rho0 T0` tie the
//! thermodynamic fields together, so derivatives of `rho0` and `p0` are
//! always evaluated through these relations:
//!
//! ```text
//! rho0'/rho0  = -(g + T0')/T0
//! rho0''/rho0 = -T0''/T0 + (g + T0')(g + 2 T0')/T0^2
//! ```
//!
//! and only `u0` and `T0` are differentiated numerically (natural cubic
//! splines, differentiated analytically). This matters because `rho0` and
//! `p0` decay exponentially with altitude while `T0` stays at one order of
//! magnitude, so the relations above are far better conditioned than direct
//! numerical differentiation of the decaying fields.

use crate::error::{LeewaveError, Result};
use crate::util::ode::linspace;
use crate::util::quad::{cumtrapz, refine_grid, trapezoid};
use crate::util::roots::brent;
use crate::util::spline::CubicSpline;

/// Standard gravitational acceleration in m s^-2, used to form the
/// non-dimensional gravity constant `g = g' L' / U'^2`.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Default gas-constant ratio `mu = R'/cp'` for dry air.
pub const DEFAULT_MU: f64 = 0.287;

/// Default fraction of the upper grid used when estimating `F0`.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;

/// Refinement factor for the spline-refined quadrature grids used by the
/// hydrostatic, Liouville, and transform-weight integrals.
const QUAD_REFINE: usize = 8;

/// Whether input records carry physical units or are already reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitsMode {
    /// Altitude in m, wind in m/s, temperature in K, density in kg m^-3,
    /// pressure in Pa; divided by the reference scales on load.
    Dimensional,
    /// Values are stored as given.
    NonDimensional,
}

impl std::str::FromStr for UnitsMode {
    type Err = LeewaveError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dimensional" => Ok(UnitsMode::Dimensional),
            "nondimensional" | "non-dimensional" => Ok(UnitsMode::NonDimensional),
            other => Err(LeewaveError::Config(format!(
                "unknown units mode '{other}' (expected 'dimensional' or 'nondimensional')"
            ))),
        }
    }
}

impl std::fmt::Display for UnitsMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnitsMode::Dimensional => write!(f, "dimensional"),
            UnitsMode::NonDimensional => write!(f, "nondimensional"),
        }
    }
}

/// Reference scales used to reduce dimensional data: length `L'` in m,
/// velocity `U'` in m/s, density in kg m^-3, and the specific gas constant
/// in m^2 s^-2 K^-1. The defaults are the usual mountain-wave choices
/// `L' = 2 km`, `U' = 20 m/s`, unit density, and dry air.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scales {
    pub length: f64,
    pub velocity: f64,
    pub density: f64,
    pub gas_constant: f64,
}

impl Default for Scales {
    fn default() -> Self {
        Scales {
            length: 2000.0,
            velocity: 20.0,
            density: 1.0,
            gas_constant: 287.0,
        }
    }
}

impl Scales {
    /// Non-dimensional gravity `g = g' L' / U'^2` (about 49 for the default
    /// scales).
    pub fn gravity(&self) -> f64 {
        STANDARD_GRAVITY * self.length / (self.velocity * self.velocity)
    }

    /// Factor converting kelvin to non-dimensional temperature,
    /// `T0 = T' R' / U'^2`.
    pub fn temperature_factor(&self) -> f64 {
        self.gas_constant / (self.velocity * self.velocity)
    }

    /// Reference pressure `rho' U'^2` in Pa.
    pub fn pressure_scale(&self) -> f64 {
        self.density * self.velocity * self.velocity
    }

    fn validate(&self) -> Result<()> {
        let vals = [self.length, self.velocity, self.density, self.gas_constant];
        if vals.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(LeewaveError::InvalidInput(
                "reference scales must be finite and positive".into(),
            ));
        }
        Ok(())
    }
}

/// One record of a tabulated sounding. Density and pressure are optional;
/// when absent they are supplied by [`hydrostatic_complete`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileRecord {
    pub altitude: f64,
    pub wind: f64,
    pub temperature: f64,
    pub density: Option<f64>,
    pub pressure: Option<f64>,
}

impl ProfileRecord {
    /// Convenience constructor for records without thermodynamic columns.
    pub fn new(altitude: f64, wind: f64, temperature: f64) -> Self {
        ProfileRecord {
            altitude,
            wind,
            temperature,
            density: None,
            pressure: None,
        }
    }
}

/// Non-dimensional background state on a vertical grid.
///
/// Invariants maintained by the constructors: `z` is strictly increasing
/// with `z[0] = 0`, `u0 > 0`, `T0 > 0`, and after completion `rho0 > 0`,
/// `p0 > 0` with `p0 = rho0 T0` at every node.
#[derive(Clone, Debug)]
pub struct BackgroundProfile {
    /// Altitude grid, strictly increasing, starting at 0.
    pub z: Vec<f64>,
    /// Horizontal wind, strictly positive (the flow does not reverse).
    pub u0: Vec<f64>,
    /// Temperature, strictly positive.
    pub t0: Vec<f64>,
    /// Density; `None` until supplied or completed.
    pub rho0: Option<Vec<f64>>,
    /// Pressure; `None` until supplied or completed.
    pub p0: Option<Vec<f64>>,
    /// Non-dimensional gravity.
    pub g: f64,
    /// Gas-constant ratio `R'/cp'`.
    pub mu: f64,
}

impl BackgroundProfile {
    /// Number of grid nodes.
    pub fn len(&self) -> usize {
        self.z.len()
    }

    /// True when the grid is empty (never the case for loaded profiles).
    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// True once density and pressure are available at every node.
    pub fn is_complete(&self) -> bool {
        self.rho0.is_some() && self.p0.is_some()
    }
}

/// Builds a [`BackgroundProfile`] from tabulated records.
///
/// Records are sorted by altitude; the lowest altitude is shifted to zero.
/// Dimensional inputs are divided by the reference scales (`z' / L'`,
/// `u' / U'`, `T' R' / U'^2`, `rho' / rho_ref`, `p' / (rho_ref U'^2)`).
/// Density and pressure columns must each be present on all records or on
/// none. Gravity is set to `g' L' / U'^2` and `mu` to [`DEFAULT_MU`]; both
/// fields are public and may be overridden afterwards.
pub fn load_profile(
    records: &[ProfileRecord],
    units: UnitsMode,
    scales: &Scales,
) -> Result<BackgroundProfile> {
    scales.validate()?;
    if records.len() < 4 {
        return Err(LeewaveError::InvalidInput(format!(
            "profile needs at least 4 records, got {}",
            records.len()
        )));
    }
    for r in records {
        let mut vals = vec![r.altitude, r.wind, r.temperature];
        vals.extend(r.density);
        vals.extend(r.pressure);
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(LeewaveError::InvalidInput(
                "profile records must contain only finite values".into(),
            ));
        }
    }

    let mut sorted: Vec<ProfileRecord> = records.to_vec();
    sorted.sort_by(|a, b| {
        a.altitude
            .partial_cmp(&b.altitude)
            .expect("altitudes are finite")
    });
    for pair in sorted.windows(2) {
        if pair[1].altitude <= pair[0].altitude {
            return Err(LeewaveError::InvalidInput(format!(
                "altitudes must be strictly increasing after sorting; \
                 duplicate or reversed node near altitude {}",
                pair[0].altitude
            )));
        }
    }
    if let Some(r) = sorted
        .iter()
        .find(|r| r.wind <= 0.0 || r.temperature <= 0.0)
    {
        return Err(LeewaveError::InvalidInput(format!(
            "wind and temperature must be strictly positive \
             (offending record at altitude {})",
            r.altitude
        )));
    }
    let n_rho = sorted.iter().filter(|r| r.density.is_some()).count();
    let n_p = sorted.iter().filter(|r| r.pressure.is_some()).count();
    if n_rho != 0 && n_rho != sorted.len() {
        return Err(LeewaveError::InvalidInput(
            "density column must be present on all records or on none".into(),
        ));
    }
    if n_p != 0 && n_p != sorted.len() {
        return Err(LeewaveError::InvalidInput(
            "pressure column must be present on all records or on none".into(),
        ));
    }
    if sorted
        .iter()
        .any(|r| r.density.is_some_and(|v| v <= 0.0) || r.pressure.is_some_and(|v| v <= 0.0))
    {
        return Err(LeewaveError::InvalidInput(
            "density and pressure must be strictly positive where given".into(),
        ));
    }

    let (len_scale, vel_scale, temp_factor, rho_scale, p_scale) = match units {
        UnitsMode::Dimensional => (
            scales.length,
            scales.velocity,
            scales.temperature_factor(),
            scales.density,
            scales.pressure_scale(),
        ),
        UnitsMode::NonDimensional => (1.0, 1.0, 1.0, 1.0, 1.0),
    };

    let z_base = sorted[0].altitude;
    let z: Vec<f64> = sorted
        .iter()
        .map(|r| (r.altitude - z_base) / len_scale)
        .collect();
    let u0: Vec<f64> = sorted.iter().map(|r| r.wind / vel_scale).collect();
    let t0: Vec<f64> = sorted
        .iter()
        .map(|r| r.temperature * temp_factor)
        .collect();
    let rho0 = (n_rho > 0).then(|| {
        sorted
            .iter()
            .map(|r| r.density.expect("checked above") / rho_scale)
            .collect()
    });
    let p0 = (n_p > 0).then(|| {
        sorted
            .iter()
            .map(|r| r.pressure.expect("checked above") / p_scale)
            .collect()
    });

    Ok(BackgroundProfile {
        z,
        u0,
        t0,
        rho0,
        p0,
        g: scales.gravity(),
        mu: DEFAULT_MU,
    })
}

/// Cumulative integral of sampled data at the sample nodes: the samples are
/// interpolated by a natural cubic spline, the grid is refined by
/// `QUAD_REFINE`, and a composite trapezoid runs over the refined grid.
fn cumulative_refined(z: &[f64], samples: &[f64]) -> Result<Vec<f64>> {
    let s = CubicSpline::new(z.to_vec(), samples.to_vec())?;
    let zr = refine_grid(z, QUAD_REFINE);
    let yr: Vec<f64> = zr.iter().map(|&x| s.eval(x)).collect();
    let cum = cumtrapz(&zr, &yr);
    Ok((0..z.len()).map(|i| cum[i * QUAD_REFINE]).collect())
}

/// Completes a profile hydrostatically: `p0(z) = p0_surface exp(-I(z))` with
/// `I(z)` the cumulative quadrature of `g/T0`, then `rho0 = p0/T0`.
///
/// Any density or pressure columns already present are replaced, so the
/// output satisfies the hydrostatic balance and the gas law exactly at the
/// grid nodes; this internal consistency is what the coefficient formulas
/// downstream rely on. When `p0_surface` is `None` the surface pressure
/// defaults to gas-law consistency at `z = 0`: the tabulated `p0[0]` if
/// present, otherwise `rho0[0] * T0[0]` with `rho0[0]` defaulting to 1.
pub fn hydrostatic_complete(
    profile: &BackgroundProfile,
    p0_surface: Option<f64>,
) -> Result<BackgroundProfile> {
    let ps = match p0_surface {
        Some(v) => v,
        None => match (&profile.p0, &profile.rho0) {
            (Some(p), _) => p[0],
            (None, Some(r)) => r[0] * profile.t0[0],
            (None, None) => profile.t0[0],
        },
    };
    if !ps.is_finite() || ps <= 0.0 {
        return Err(LeewaveError::InvalidInput(format!(
            "surface pressure must be finite and positive, got {ps}"
        )));
    }
    let integrand: Vec<f64> = profile.t0.iter().map(|&t| profile.g / t).collect();
    let integral = cumulative_refined(&profile.z, &integrand)?;
    let p0: Vec<f64> = integral.iter().map(|&i| ps * (-i).exp()).collect();
    let rho0: Vec<f64> = p0
        .iter()
        .zip(&profile.t0)
        .map(|(&p, &t)| p / t)
        .collect();
    let mut out = profile.clone();
    out.p0 = Some(p0);
    out.rho0 = Some(rho0);
    Ok(out)
}

/// Approximation regime for the Scorer coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Exact coefficients, no simplifying assumptions.
    Full,
    /// The classical approximation `rho0/p0 -> 0`: `A = 1`, `zeta = z`, and
    /// the textbook Scorer parameter.
    Classical,
    /// Boussinesq: additionally `rho0' -> 0` in all terms without `g`.
    Boussinesq,
}

impl std::str::FromStr for Regime {
    type Err = LeewaveError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Regime::Full),
            "classical" => Ok(Regime::Classical),
            "boussinesq" => Ok(Regime::Boussinesq),
            other => Err(LeewaveError::Config(format!(
                "unknown regime '{other}' (expected 'full', 'classical', or 'boussinesq')"
            ))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Full => write!(f, "full"),
            Regime::Classical => write!(f, "classical"),
            Regime::Boussinesq => write!(f, "boussinesq"),
        }
    }
}

/// Scorer coefficients and the Liouville normal-form map.
///
/// `compute_scorer` fills the coefficient grids over `z`; `liouville_map`
/// populates the `zeta` fields; `estimate_f0_fstar` fills `f0` and `f_star`.
#[derive(Clone, Debug)]
pub struct ScorerData {
    pub regime: Regime,
    /// Gravity and gas-constant ratio, copied from the profile.
    pub g: f64,
    pub mu: f64,
    /// Altitude grid (same nodes as the source profile).
    pub z: Vec<f64>,
    /// Second-order coefficient `A >= 1` (identically 1 in the reduced
    /// regimes).
    pub a: Vec<f64>,
    /// First-order coefficient `B`.
    pub b: Vec<f64>,
    /// Zeroth-order coefficient `C`.
    pub c: Vec<f64>,
    /// Damping coefficient `D` after the independent-variable change.
    pub d: Vec<f64>,
    /// Amplitude factor `E` with `E(0) = 1`; the physical field is `w/E`.
    pub e: Vec<f64>,
    /// Scorer parameter `F` of the normal form.
    pub f: Vec<f64>,
    /// Static stability `beta = (mu g + T0')/T0`.
    pub beta: Vec<f64>,
    /// `zeta(z)` at each altitude node; empty until `liouville_map` runs.
    pub zeta_of_z: Vec<f64>,
    /// Uniform grid in `zeta`; empty until `liouville_map` runs.
    pub zeta_grid: Vec<f64>,
    /// `z` at each `zeta_grid` node.
    pub z_of_zeta: Vec<f64>,
    /// `F` resampled onto `zeta_grid`.
    pub f_of_zeta: Vec<f64>,
    /// `E` resampled onto `zeta_grid` (used to undo the transform).
    pub e_of_zeta: Vec<f64>,
    /// Asymptotic constant of `F`; set by `estimate_f0_fstar`.
    pub f0: Option<f64>,
    /// Supremum of `F` over the grid; set by `estimate_f0_fstar`.
    pub f_star: Option<f64>,
}

impl ScorerData {
    /// True once the Liouville map has been populated.
    pub fn is_mapped(&self) -> bool {
        !self.zeta_grid.is_empty()
    }

    /// Interpolates `zeta(z)`. Requires [`liouville_map`] to have run.
    pub fn zeta_at(&self, z: f64) -> Result<f64> {
        if !self.is_mapped() {
            return Err(LeewaveError::InvalidInput(
                "Liouville map not populated; run liouville_map first".into(),
            ));
        }
        let s = CubicSpline::new(self.z.clone(), self.zeta_of_z.clone())?;
        Ok(s.eval(z))
    }

    /// Inverts the map, returning the altitude with `zeta(z) = zeta`.
    /// Requires [`liouville_map`] to have run.
    pub fn z_at(&self, zeta: f64) -> Result<f64> {
        if !self.is_mapped() {
            return Err(LeewaveError::InvalidInput(
                "Liouville map not populated; run liouville_map first".into(),
            ));
        }
        let s = CubicSpline::new(self.z.clone(), self.zeta_of_z.clone())?;
        invert_monotone(&self.z, &self.zeta_of_z, &s, zeta)
    }
}

/// All coefficient values at a single node, including the redundant forms
/// used for cross-checking the algebra.
struct CoeffRow {
    a: f64,
    b: f64,
    b_alt: f64,
    c: f64,
    d: f64,
    d_alt: f64,
    f: f64,
    f_alt: f64,
    e_integrand: f64,
}

/// Exact coefficients at one node. Inputs: gravity, gas ratio, wind and
/// temperature with two spline derivatives each, density, pressure. The
/// density derivatives come from the hydrostatic relations, so `rho0` and
/// `p0` themselves are used only as values.
#[allow(clippy::too_many_arguments)]
fn full_coefficient_row(
    g: f64,
    mu: f64,
    u: f64,
    u1: f64,
    u2: f64,
    t: f64,
    t1: f64,
    t2: f64,
    r: f64,
    p: f64,
) -> CoeffRow {
    let om = 1.0 - mu;
    let rr1 = -(g + t1) / t;
    let rr2 = -t2 / t + (g + t1) * (g + 2.0 * t1) / (t * t);
    let r1 = rr1 * r;
    let r2 = rr2 * r;
    let p2 = p * p;
    let p3 = p2 * p;
    let p4 = p3 * p;
    let u3 = u * u * u;
    let u4 = u3 * u;

    let a = 1.0 / (1.0 - om * r * u * u / p);
    let a2 = a * a;
    let ap = a2 * om * (r1 * u * u / p + g * r * r * u * u / p2 + 2.0 * r * u * u1 / p);
    let app = 2.0 * ap * ap / a
        + a2 * om
            * (r2 * u * u / p
                + 3.0 * g * r * r1 * u * u / p2
                + 4.0 * r1 * u * u1 / p
                + 2.0 * g * g * r * r * r * u * u / p3
                + 4.0 * g * r * r * u * u1 / p2
                + 2.0 * r * u1 * u1 / p
                + 2.0 * r * u * u2 / p);

    let b = a2 * (rr1 + 2.0 * om * r * u * u1 / p + g * om * r * r * u * u / p2);
    let b_alt = ap - (g + t1) * a / t;
    let bp = 2.0 * ap * b / a
        + a2 * (rr2 - rr1 * rr1
            + 2.0 * om
                * (r1 * u * u1 / p
                    + r * u1 * u1 / p
                    + r * u * u2 / p
                    + 2.0 * g * r * r * u * u1 / p2
                    + g * r * r1 * u * u / p2
                    + g * g * r * r * r * u * u / p3));

    let c = -a2
        * (r1 * u1 / (r * u)
            + u2 / u
            + g * r1 / (r * u * u)
            + 2.0 * om * r * u1 * u1 / p
            - om * r * u * u2 / p
            + 2.0 * g * om * r * u1 / (p * u)
            + g * g * om * r / (p * u * u)
            + g * om * r * r * u * u1 / p2
            + g * g * mu * om * r * r / p2);

    let d = a.powf(1.5)
        * (rr1 + om * u * (-r1 * u / (2.0 * p) + r * u1 / p + g * r * r * u / (2.0 * p2)));
    let d_alt = (b - 0.5 * ap) / a.sqrt();

    // The expanded Scorer parameter, written as A^-3 F term by term.
    let om2 = om * om;
    let sum = -r1 * u1 / (r * u)
        - u2 / u
        - g * r1 / (r * u * u)
        + r1 * r1 / (4.0 * r * r)
        - r2 / (2.0 * r)
        - om * r1 * r1 * u * u / (p * r)
        + 3.0 * om * r2 * u * u / (4.0 * p)
        - om * r1 * u * u1 / p
        - 5.0 * om * r * u1 * u1 / (2.0 * p)
        + 3.0 * om * r * u * u2 / (2.0 * p)
        + g * om * r1 / p
        - 2.0 * g * om * r * u1 / (p * u)
        - g * g * om * r / (p * u * u)
        + 5.0 * om2 * r1 * r1 * u4 / (16.0 * p2)
        - om2 * r * r2 * u4 / (4.0 * p2)
        + om2 * r * r1 * u3 * u1 / (4.0 * p2)
        + 3.0 * om2 * r * r * u * u * u1 * u1 / (4.0 * p2)
        - om2 * r * r * u3 * u2 / (2.0 * p2)
        - 5.0 * g * om * r * r1 * u * u / (4.0 * p2)
        - 2.0 * g * mu * om * r * r * u * u1 / p2
        + g * g * (1.0 - 3.0 * mu + 2.0 * mu * mu) * r * r / p2
        + 3.0 * g * om2 * r * r * r1 * u4 / (8.0 * p3)
        + g * om2 * r * r * r * u3 * u1 / (4.0 * p3)
        + g * g * om * (-0.5 + mu - mu * mu) * r * r * r * u * u / p3
        + g * g * om2 * r * r * r * r * u4 / (16.0 * p4);
    let f = a * a2 * sum;

    // Normal-form assembly from the coefficients themselves; equal to the
    // expanded formula up to rounding and kept as a transcription guard.
    let f_alt =
        c - b * b / (4.0 * a) + b * ap / (2.0 * a) - 3.0 * ap * ap / (16.0 * a) - bp / 2.0
            + app / 4.0;

    // Weight of the amplitude integral: E = sqrt(rho0/rho0(0)) exp(int ...).
    let e_integrand =
        a * om * (r1 * u * u / (4.0 * p) + r * u * u1 / (2.0 * p) + g * r * r * u * u / (4.0 * p2));

    CoeffRow {
        a,
        b,
        b_alt,
        c,
        d,
        d_alt,
        f,
        f_alt,
        e_integrand,
    }
}

fn spline_pair(profile: &BackgroundProfile) -> Result<(CubicSpline, CubicSpline)> {
    let su = CubicSpline::new(profile.z.clone(), profile.u0.clone())?;
    let st = CubicSpline::new(profile.z.clone(), profile.t0.clone())?;
    Ok((su, st))
}

fn completed_fields<'p>(profile: &'p BackgroundProfile) -> Result<(&'p [f64], &'p [f64])> {
    match (&profile.rho0, &profile.p0) {
        (Some(r), Some(p)) => Ok((r, p)),
        _ => Err(LeewaveError::InvalidInput(
            "profile has no density/pressure; run hydrostatic completion first".into(),
        )),
    }
}

fn check_denominator(profile: &BackgroundProfile, i: usize, denom: f64) -> Result<()> {
    if denom <= 0.0 || !denom.is_finite() {
        return Err(LeewaveError::InvalidInput(format!(
            "coefficient denominator 1 - (1-mu) rho0 u0^2 / p0 = {denom} \
             is not positive at z = {}; the background flow is too fast for \
             the reduction",
            profile.z[i]
        )));
    }
    Ok(())
}

/// Evaluates the Scorer coefficients `(A, B, C, D, E, F)` and the stability
/// `beta` on the profile grid.
///
/// Regime `full` uses the exact expanded formula for `F` (and the exact
/// `A, B, C, D, E`); regime `classical` applies `rho0/p0 -> 0`, giving
/// `A = 1`, `B = rho0'/rho0`, the textbook Scorer parameter, and
/// `E = sqrt(rho0/rho0(0))`; regime `boussinesq` additionally drops
/// `rho0'` outside the buoyancy term, giving `F = -u0''/u0 + g beta/u0^2`
/// and `E = 1`.
pub fn compute_scorer(profile: &BackgroundProfile, regime: Regime) -> Result<ScorerData> {
    let n = profile.len();
    let (rho0, p0) = completed_fields(profile)?;
    let (su, st) = spline_pair(profile)?;
    let g = profile.g;
    let mu = profile.mu;

    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    let mut e = vec![1.0; n];
    let mut f = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut e_integrand = Vec::with_capacity(n);

    for i in 0..n {
        let z = profile.z[i];
        let u = profile.u0[i];
        let t = profile.t0[i];
        let (u1, u2) = (su.deriv(z), su.deriv2(z));
        let (t1, t2) = (st.deriv(z), st.deriv2(z));
        let (r, p) = (rho0[i], p0[i]);
        let rr1 = -(g + t1) / t;
        let rr2 = -t2 / t + (g + t1) * (g + 2.0 * t1) / (t * t);
        beta.push((mu * g + t1) / t);

        match regime {
            Regime::Full => {
                let denom = 1.0 - (1.0 - mu) * r * u * u / p;
                check_denominator(profile, i, denom)?;
                let row = full_coefficient_row(g, mu, u, u1, u2, t, t1, t2, r, p);
                a.push(row.a);
                b.push(row.b);
                c.push(row.c);
                d.push(row.d);
                f.push(row.f);
                e_integrand.push(row.e_integrand);
            }
            Regime::Classical => {
                a.push(1.0);
                b.push(rr1);
                c.push(-rr1 * u1 / u - u2 / u + g * beta[i] / (u * u));
                d.push(rr1);
                f.push(c[i] - rr1 * rr1 / 4.0 - 0.5 * (rr2 - rr1 * rr1));
                e[i] = (r / rho0[0]).sqrt();
            }
            Regime::Boussinesq => {
                a.push(1.0);
                b.push(0.0);
                c.push(-u2 / u + g * beta[i] / (u * u));
                d.push(0.0);
                f.push(c[i]);
            }
        }
    }

    if regime == Regime::Full {
        let cum = cumulative_refined(&profile.z, &e_integrand)?;
        for i in 0..n {
            e[i] = (rho0[i] / rho0[0]).sqrt() * cum[i].exp();
        }
    }

    if f.iter().any(|v| !v.is_finite()) || e.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(LeewaveError::Numerical(
            "Scorer coefficient evaluation produced non-finite values".into(),
        ));
    }

    Ok(ScorerData {
        regime,
        g,
        mu,
        z: profile.z.clone(),
        a,
        b,
        c,
        d,
        e,
        f,
        beta,
        zeta_of_z: Vec::new(),
        zeta_grid: Vec::new(),
        z_of_zeta: Vec::new(),
        f_of_zeta: Vec::new(),
        e_of_zeta: Vec::new(),
        f0: None,
        f_star: None,
    })
}

/// Largest relative deviations between redundant forms of the full-regime
/// coefficients, evaluated over the whole grid. All three are pure algebra
/// checks: the two published forms of `B`, the damping coefficient `D`
/// against `(B - A'/2)/sqrt(A)`, and the expanded Scorer parameter against
/// its assembly from `A, A', A'', B, B', C`. Values much above rounding
/// noise indicate a transcription defect.
#[derive(Clone, Copy, Debug)]
pub struct ScorerConsistency {
    pub b_forms_max_rel: f64,
    pub d_forms_max_rel: f64,
    pub f_assembly_max_rel: f64,
}

/// Evaluates the redundant full-regime coefficient forms on a completed
/// profile and reports their largest relative disagreement.
pub fn scorer_consistency(profile: &BackgroundProfile) -> Result<ScorerConsistency> {
    let (rho0, p0) = completed_fields(profile)?;
    let (su, st) = spline_pair(profile)?;
    let (g, mu) = (profile.g, profile.mu);
    let mut out = ScorerConsistency {
        b_forms_max_rel: 0.0,
        d_forms_max_rel: 0.0,
        f_assembly_max_rel: 0.0,
    };
    for i in 0..profile.len() {
        let z = profile.z[i];
        let (u, t) = (profile.u0[i], profile.t0[i]);
        let denom = 1.0 - (1.0 - mu) * rho0[i] * u * u / p0[i];
        check_denominator(profile, i, denom)?;
        let row = full_coefficient_row(
            g,
            mu,
            u,
            su.deriv(z),
            su.deriv2(z),
            t,
            st.deriv(z),
            st.deriv2(z),
            rho0[i],
            p0[i],
        );
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1.0);
        out.b_forms_max_rel = out.b_forms_max_rel.max(rel(row.b, row.b_alt));
        out.d_forms_max_rel = out.d_forms_max_rel.max(rel(row.d, row.d_alt));
        out.f_assembly_max_rel = out.f_assembly_max_rel.max(rel(row.f, row.f_alt));
    }
    Ok(out)
}

fn invert_monotone(
    z: &[f64],
    zeta: &[f64],
    forward: &CubicSpline,
    target: f64,
) -> Result<f64> {
    let n = zeta.len();
    if target <= zeta[0] {
        return Ok(z[0]);
    }
    if target >= zeta[n - 1] {
        return Ok(z[n - 1]);
    }
    let k = zeta.partition_point(|&v| v < target);
    let (lo, hi) = (z[k - 1], z[k]);
    brent(
        |x| forward.eval(x) - target,
        lo,
        hi,
        1e-13 * (1.0 + hi.abs()),
    )
}

/// Populates the Liouville change of variables `zeta(z) = int dz'/sqrt(A)`:
/// cumulative quadrature for `zeta_of_z`, monotone inversion for
/// `z_of_zeta`, and resampling of `F` and `E` onto a uniform `zeta` grid.
pub fn liouville_map(scorer: &mut ScorerData) -> Result<()> {
    if let Some(&bad) = scorer.a.iter().find(|&&v| v <= 0.0 || !v.is_finite()) {
        return Err(LeewaveError::InvalidInput(format!(
            "coefficient A must be positive for the Liouville map, found {bad}"
        )));
    }
    let n = scorer.z.len();
    let integrand: Vec<f64> = scorer.a.iter().map(|&v| 1.0 / v.sqrt()).collect();
    let zeta_of_z = cumulative_refined(&scorer.z, &integrand)?;
    for pair in zeta_of_z.windows(2) {
        if pair[1] <= pair[0] {
            return Err(LeewaveError::Numerical(
                "Liouville map is not strictly increasing".into(),
            ));
        }
    }

    let n_zeta = QUAD_REFINE * (n - 1) + 1;
    let zeta_top = *zeta_of_z.last().expect("non-empty grid");
    let zeta_grid = linspace(0.0, zeta_top, n_zeta);
    let forward = CubicSpline::new(scorer.z.clone(), zeta_of_z.clone())?;
    let mut z_of_zeta = Vec::with_capacity(n_zeta);
    for &zt in &zeta_grid {
        z_of_zeta.push(invert_monotone(&scorer.z, &zeta_of_z, &forward, zt)?);
    }
    let sf = CubicSpline::new(scorer.z.clone(), scorer.f.clone())?;
    let se = CubicSpline::new(scorer.z.clone(), scorer.e.clone())?;
    scorer.f_of_zeta = z_of_zeta.iter().map(|&z| sf.eval(z)).collect();
    scorer.e_of_zeta = z_of_zeta.iter().map(|&z| se.eval(z)).collect();
    scorer.zeta_of_z = zeta_of_z;
    scorer.zeta_grid = zeta_grid;
    scorer.z_of_zeta = z_of_zeta;
    Ok(())
}

/// Validation summary for the wave-guide assumption: `F` must approach a
/// positive constant `F0` aloft. The integrals are finite-grid proxies for
/// the required decay of `F - F0`.
#[derive(Clone, Copy, Debug)]
pub struct AssumptionReport {
    pub f0: f64,
    pub f_star: f64,
    pub tail_fraction: f64,
    /// Trapezoid of `|F - F0|` over the `zeta` grid.
    pub integral_abs: f64,
    /// Trapezoid of `zeta |F - F0|` over the `zeta` grid.
    pub integral_weighted: f64,
}

/// Estimates `F0` (mean of `F` over the top `tail_fraction` of the `zeta`
/// grid) and `F* = max F`, storing both on the [`ScorerData`].
///
/// Fails with an assumption violation when the estimated `F0` is not
/// positive: a non-positive asymptotic Scorer parameter admits no waves and
/// the spectral machinery must not run.
pub fn estimate_f0_fstar(
    scorer: &mut ScorerData,
    tail_fraction: f64,
) -> Result<AssumptionReport> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(LeewaveError::InvalidInput(format!(
            "tail fraction must lie in (0, 1), got {tail_fraction}"
        )));
    }
    if !scorer.is_mapped() {
        return Err(LeewaveError::InvalidInput(
            "Liouville map not populated; run liouville_map before estimating F0".into(),
        ));
    }
    let fz = &scorer.f_of_zeta;
    let n = fz.len();
    let m = ((tail_fraction * n as f64).round() as usize).clamp(1, n);
    let f0 = fz[n - m..].iter().sum::<f64>() / m as f64;
    let f_star = fz.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if f0 <= 0.0 {
        return Err(LeewaveError::AssumptionViolated(format!(
            "estimated asymptotic Scorer parameter F0 = {f0} is not positive; \
             no guided waves exist for this background"
        )));
    }
    let dev: Vec<f64> = fz.iter().map(|&v| (v - f0).abs()).collect();
    let weighted: Vec<f64> = scorer
        .zeta_grid
        .iter()
        .zip(&dev)
        .map(|(&zt, &dv)| zt * dv)
        .collect();
    let report = AssumptionReport {
        f0,
        f_star,
        tail_fraction,
        integral_abs: trapezoid(&scorer.zeta_grid, &dev),
        integral_weighted: trapezoid(&scorer.zeta_grid, &weighted),
    };
    scorer.f0 = Some(f0);
    scorer.f_star = Some(f_star);
    Ok(report)
}

/// Records of the bundled analytic sample profile, shaped like a
/// mid-latitude climatology: weak low-level wind strengthening through a
/// shear layer, and a temperature that falls through the troposphere and
/// levels off aloft. Already non-dimensional.
///
/// `u0(z) = 0.3 + 0.1 tanh((z - 5)/3)`,
/// `T0(z) = 195 - 18 tanh((z - 4)/2.5)` on 251 nodes over `0 <= z <= 12.5`.
pub fn cira_like_records() -> Vec<ProfileRecord> {
    linspace(0.0, 12.5, 251)
        .iter()
        .map(|&zi| {
            ProfileRecord::new(
                zi,
                0.3 + 0.1 * ((zi - 5.0) / 3.0).tanh(),
                195.0 - 18.0 * ((zi - 4.0) / 2.5).tanh(),
            )
        })
        .collect()
}

/// The bundled analytic sample profile of [`cira_like_records`], loaded and
/// hydrostatically completed.
pub fn cira_like_profile() -> BackgroundProfile {
    let records = cira_like_records();
    let profile = load_profile(&records, UnitsMode::NonDimensional, &Scales::default())
        .expect("analytic sample profile is valid");
    hydrostatic_complete(&profile, None).expect("analytic sample profile completes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    fn assert_rel(a: f64, b: f64, tol: f64) {
        assert!(rel(a, b) <= tol, "{a} vs {b}, rel {} > {tol}", rel(a, b));
    }

    fn synthetic_profile(n: usize, ztop: f64, wind_scale: f64) -> BackgroundProfile {
        let z = linspace(0.0, ztop, n);
        let records: Vec<ProfileRecord> = z
            .iter()
            .map(|&zi| {
                ProfileRecord::new(
                    zi,
                    wind_scale * (1.0 + 0.3 * ((zi - 5.0) / 2.0).tanh()),
                    205.0 - 12.0 * ((zi - 4.0) / 2.5).tanh(),
                )
            })
            .collect();
        let p = load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).unwrap();
        hydrostatic_complete(&p, None).unwrap()
    }

    #[test]
    fn load_dimensional_maps_reference_values() {
        let records: Vec<ProfileRecord> = (0..5)
            .map(|i| ProfileRecord::new(2000.0 * i as f64, 20.0, 287.0))
            .collect();
        let p = load_profile(&records, UnitsMode::Dimensional, &Scales::default()).unwrap();
        // z' = 2000 m with L' = 2 km lands at z = 1; u' = 20 m/s at u0 = 1.
        assert_rel(p.z[1], 1.0, 1e-14);
        assert_rel(p.u0[1], 1.0, 1e-14);
        // T' = 287 K maps to T0 = 287 * 287 / 400.
        for &t in &p.t0 {
            assert_rel(t, 205.9225, 1e-13);
        }
        assert_rel(p.g, STANDARD_GRAVITY * 2000.0 / 400.0, 1e-14);
        assert_eq!(p.mu, DEFAULT_MU);
    }

    #[test]
    fn load_nondimensional_is_identity_and_sorts() {
        let z = [0.0, 1.0, 2.5, 4.0, 6.0];
        let mut records: Vec<ProfileRecord> = z
            .iter()
            .map(|&zi| ProfileRecord::new(zi, 1.0 + 0.1 * zi, 200.0 - zi))
            .collect();
        records.swap(1, 3);
        records.swap(0, 2);
        let p = load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).unwrap();
        for (i, &zi) in z.iter().enumerate() {
            assert_eq!(p.z[i], zi);
            assert_eq!(p.u0[i], 1.0 + 0.1 * zi);
            assert_eq!(p.t0[i], 200.0 - zi);
        }
        assert!(p.rho0.is_none() && p.p0.is_none());
    }

    #[test]
    fn load_shifts_lowest_altitude_to_zero() {
        let records: Vec<ProfileRecord> = (0..6)
            .map(|i| ProfileRecord::new(3.0 + 0.5 * i as f64, 1.0, 200.0))
            .collect();
        let p = load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).unwrap();
        assert_eq!(p.z[0], 0.0);
        assert_rel(p.z[5], 2.5, 1e-14);
    }

    #[test]
    fn load_rejects_invalid_input() {
        let good = |i: usize| ProfileRecord::new(i as f64, 1.0, 200.0);
        let records: Vec<ProfileRecord> = (0..3).map(good).collect();
        assert!(matches!(
            load_profile(&records, UnitsMode::NonDimensional, &Scales::default()),
            Err(LeewaveError::InvalidInput(_))
        ));

        let mut records: Vec<ProfileRecord> = (0..5).map(good).collect();
        records[3].altitude = 2.0;
        assert!(load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).is_err());

        let mut records: Vec<ProfileRecord> = (0..5).map(good).collect();
        records[2].wind = -1.0;
        assert!(load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).is_err());

        let mut records: Vec<ProfileRecord> = (0..5).map(good).collect();
        records[4].temperature = 0.0;
        assert!(load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).is_err());

        let mut records: Vec<ProfileRecord> = (0..5).map(good).collect();
        records[1].density = Some(1.0);
        let err = load_profile(&records, UnitsMode::NonDimensional, &Scales::default());
        assert!(matches!(err, Err(LeewaveError::InvalidInput(_))));
    }

    #[test]
    fn hydrostatic_isothermal_is_exact() {
        let records: Vec<ProfileRecord> = linspace(0.0, 10.0, 41)
            .iter()
            .map(|&zi| ProfileRecord::new(zi, 1.0, 200.0))
            .collect();
        let p = load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).unwrap();
        let c = hydrostatic_complete(&p, Some(150.0)).unwrap();
        let p0 = c.p0.as_ref().unwrap();
        let rho0 = c.rho0.as_ref().unwrap();
        for (i, &zi) in c.z.iter().enumerate() {
            // Constant integrand, so the trapezoid rule is exact.
            assert_rel(p0[i], 150.0 * (-c.g * zi / 200.0).exp(), 1e-13);
            assert_rel(rho0[i], p0[i] / 200.0, 1e-15);
        }
    }

    #[test]
    fn hydrostatic_default_surface_pressure_is_gas_law_consistent() {
        let records: Vec<ProfileRecord> = linspace(0.0, 5.0, 11)
            .iter()
            .map(|&zi| ProfileRecord::new(zi, 1.0, 210.0))
            .collect();
        let p = load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).unwrap();
        let c = hydrostatic_complete(&p, None).unwrap();
        // rho0(0) defaults to 1, so p0(0) = T0(0).
        assert_rel(c.p0.as_ref().unwrap()[0], 210.0, 1e-15);
        assert_rel(c.rho0.as_ref().unwrap()[0], 1.0, 1e-15);
    }

    #[test]
    fn hydrostatic_linear_temperature_matches_power_law() {
        let tbar = 200.0;
        let gamma = 0.05;
        let records: Vec<ProfileRecord> = linspace(0.0, 10.0, 51)
            .iter()
            .map(|&zi| ProfileRecord::new(zi, 1.0, tbar * (1.0 + gamma * zi)))
            .collect();
        let p = load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).unwrap();
        let c = hydrostatic_complete(&p, Some(180.0)).unwrap();
        let p0 = c.p0.as_ref().unwrap();
        let expo = -c.g / (tbar * gamma);
        for (i, &zi) in c.z.iter().enumerate() {
            assert_rel(p0[i], 180.0 * (1.0 + gamma * zi).powf(expo), 1e-5);
        }
    }

    #[test]
    fn hydrostatic_residual_matches_balance_relation() {
        let c = cira_like_profile();
        let p0 = c.p0.as_ref().unwrap();
        let sp = CubicSpline::new(c.z.clone(), p0.clone()).unwrap();
        let n = c.z.len();
        for i in 3..n - 3 {
            let lhs = sp.deriv(c.z[i]) / p0[i];
            let rhs = -c.g / c.t0[i];
            assert!(
                (lhs - rhs).abs() <= 1e-3 * rhs.abs(),
                "hydrostatic residual too large at z = {}: {lhs} vs {rhs}",
                c.z[i]
            );
        }
    }

    #[test]
    fn hydrostatic_rejects_bad_surface_pressure() {
        let p = cira_like_profile();
        assert!(matches!(
            hydrostatic_complete(&p, Some(0.0)),
            Err(LeewaveError::InvalidInput(_))
        ));
        assert!(hydrostatic_complete(&p, Some(-1.0)).is_err());
    }

    #[test]
    fn scorer_boussinesq_constant_background_gives_constant_f() {
        let records: Vec<ProfileRecord> = linspace(0.0, 8.0, 33)
            .iter()
            .map(|&zi| ProfileRecord::new(zi, 0.8, 200.0))
            .collect();
        let p = load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).unwrap();
        let c = hydrostatic_complete(&p, None).unwrap();
        let s = compute_scorer(&c, Regime::Boussinesq).unwrap();
        // Constant wind and temperature: F = g (mu g)/(T0 u0^2) everywhere.
        let expected = c.g * (c.mu * c.g) / (200.0 * 0.64);
        for i in 0..s.z.len() {
            assert_rel(s.f[i], expected, 1e-11);
            assert_eq!(s.a[i], 1.0);
            assert_eq!(s.b[i], 0.0);
            assert_eq!(s.e[i], 1.0);
        }
    }

    #[test]
    fn scorer_full_redundant_forms_agree() {
        let p = synthetic_profile(121, 12.0, 1.0);
        let chk = scorer_consistency(&p).unwrap();
        // Pure-algebra identities; anything beyond rounding noise means a
        // transcription defect in one of the coefficient formulas.
        assert!(chk.b_forms_max_rel <= 1e-8, "B forms: {}", chk.b_forms_max_rel);
        assert!(chk.d_forms_max_rel <= 1e-10, "D forms: {}", chk.d_forms_max_rel);
        assert!(
            chk.f_assembly_max_rel <= 1e-8,
            "F assembly: {}",
            chk.f_assembly_max_rel
        );
    }

    #[test]
    fn scorer_classical_close_to_full_on_sample_profile() {
        let p = cira_like_profile();
        let full = compute_scorer(&p, Regime::Full).unwrap();
        let cl = compute_scorer(&p, Regime::Classical).unwrap();
        for i in 0..full.z.len() {
            assert!(
                (full.f[i] - cl.f[i]).abs() <= 1e-2 * full.f[i].abs(),
                "regimes diverge at z = {}: {} vs {}",
                full.z[i],
                full.f[i],
                cl.f[i]
            );
        }
    }

    #[test]
    fn scorer_regimes_converge_at_first_order() {
        // Shrinking the wind by sqrt(c) shrinks u0^2/T0 by c; the relative
        // gap between full and classical coefficients must shrink by the
        // same factor.
        let mut deltas = Vec::new();
        for &cfac in &[1.0, 4.0, 16.0] {
            let p = synthetic_profile(101, 10.0, 1.0 / (cfac as f64).sqrt());
            let full = compute_scorer(&p, Regime::Full).unwrap();
            let cl = compute_scorer(&p, Regime::Classical).unwrap();
            let n = p.len();
            let max_f = full.f.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
            let gap_f = (0..n)
                .map(|i| (full.f[i] - cl.f[i]).abs())
                .fold(0.0_f64, f64::max)
                / max_f;
            let gap_a = full.a.iter().map(|&v| (v - 1.0).abs()).fold(0.0, f64::max);
            let gap_b = (0..n)
                .map(|i| (full.b[i] - cl.b[i]).abs())
                .fold(0.0_f64, f64::max);
            let gap_e = (0..n)
                .map(|i| (full.e[i] - cl.e[i]).abs())
                .fold(0.0_f64, f64::max);
            deltas.push([gap_f, gap_a, gap_b, gap_e]);
        }
        for k in 0..4 {
            for step in 0..2 {
                let ratio = deltas[step][k] / deltas[step + 1][k];
                assert!(
                    (3.2..4.8).contains(&ratio),
                    "first-order convergence violated for component {k}: ratio {ratio}"
                );
            }
        }
    }

    #[test]
    fn scorer_amplitude_factor_normalized_and_positive() {
        let p = cira_like_profile();
        for regime in [Regime::Full, Regime::Classical, Regime::Boussinesq] {
            let s = compute_scorer(&p, regime).unwrap();
            assert_eq!(s.e[0], 1.0, "E(0) in {regime}");
            assert!(s.e.iter().all(|&v| v > 0.0), "E > 0 in {regime}");
        }
    }

    #[test]
    fn scorer_rejects_incomplete_and_supersonic_profiles() {
        let records: Vec<ProfileRecord> = linspace(0.0, 5.0, 11)
            .iter()
            .map(|&zi| ProfileRecord::new(zi, 1.0, 200.0))
            .collect();
        let p = load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).unwrap();
        assert!(matches!(
            compute_scorer(&p, Regime::Full),
            Err(LeewaveError::InvalidInput(_))
        ));

        // Wind fast enough that 1 - (1-mu) u0^2/T0 goes non-positive.
        let records: Vec<ProfileRecord> = linspace(0.0, 5.0, 11)
            .iter()
            .map(|&zi| ProfileRecord::new(zi, 20.0, 200.0))
            .collect();
        let fast = load_profile(&records, UnitsMode::NonDimensional, &Scales::default()).unwrap();
        let fast = hydrostatic_complete(&fast, None).unwrap();
        assert!(matches!(
            compute_scorer(&fast, Regime::Full),
            Err(LeewaveError::InvalidInput(_))
        ));
    }

    #[test]
    fn liouville_identity_when_a_is_one() {
        let p = synthetic_profile(61, 6.0, 1.0);
        let mut s = compute_scorer(&p, Regime::Boussinesq).unwrap();
        liouville_map(&mut s).unwrap();
        for i in 0..s.z.len() {
            assert!((s.zeta_of_z[i] - s.z[i]).abs() <= 1e-12);
        }
        for (zt, zz) in s.zeta_grid.iter().zip(&s.z_of_zeta) {
            assert!((zt - zz).abs() <= 1e-10);
        }
    }

    #[test]
    fn liouville_constant_a_scales_the_axis() {
        let p = synthetic_profile(41, 8.0, 1.0);
        let mut s = compute_scorer(&p, Regime::Boussinesq).unwrap();
        s.a = vec![4.0; s.z.len()];
        liouville_map(&mut s).unwrap();
        for i in 0..s.z.len() {
            assert!((s.zeta_of_z[i] - 0.5 * s.z[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn liouville_round_trip_and_resample() {
        let p = cira_like_profile();
        let mut s = compute_scorer(&p, Regime::Full).unwrap();
        liouville_map(&mut s).unwrap();
        assert_eq!(s.zeta_of_z[0], 0.0);
        for &z in linspace(0.2, 12.3, 20).iter() {
            let zeta = s.zeta_at(z).unwrap();
            let back = s.z_at(zeta).unwrap();
            assert!((back - z).abs() <= 1e-9, "round trip drifted: {z} -> {back}");
        }
        // F resampled to zeta and read back at the original nodes.
        let szf = CubicSpline::new(s.zeta_grid.clone(), s.f_of_zeta.clone()).unwrap();
        for i in 0..s.z.len() {
            assert_rel(szf.eval(s.zeta_of_z[i]), s.f[i], 1e-6);
        }
    }

    fn synthetic_scorer(zeta_top: f64, n: usize, f: impl Fn(f64) -> f64) -> ScorerData {
        let zeta = linspace(0.0, zeta_top, n);
        let fz: Vec<f64> = zeta.iter().map(|&x| f(x)).collect();
        ScorerData {
            regime: Regime::Boussinesq,
            g: 49.0,
            mu: DEFAULT_MU,
            z: zeta.clone(),
            a: vec![1.0; n],
            b: vec![0.0; n],
            c: fz.clone(),
            d: vec![0.0; n],
            e: vec![1.0; n],
            f: fz.clone(),
            beta: vec![0.0; n],
            zeta_of_z: zeta.clone(),
            zeta_grid: zeta.clone(),
            z_of_zeta: zeta,
            f_of_zeta: fz,
            e_of_zeta: vec![1.0; n],
            f0: None,
            f_star: None,
        }
    }

    #[test]
    fn estimate_constant_f_is_exact() {
        let mut s = synthetic_scorer(10.0, 101, |_| 3.0);
        let rep = estimate_f0_fstar(&mut s, DEFAULT_TAIL_FRACTION).unwrap();
        assert_eq!(rep.f0, 3.0);
        assert_eq!(rep.f_star, 3.0);
        assert!(rep.integral_abs.abs() <= 1e-14);
        assert!(rep.integral_weighted.abs() <= 1e-13);
        assert_eq!(s.f0, Some(3.0));
    }

    #[test]
    fn estimate_recovers_morse_shaped_parameter() {
        // F = F0 + Q (2 e^{-a s} - e^{-2 a s}), s = zeta - z0: the classic
        // single-hump Scorer parameter. Its maximum over the grid exceeds F0
        // by exactly Q when z0 is a grid node.
        let (f0_true, q, a, z0) = (1.5, 2.0, 1.0, 3.0);
        let shape = move |x: f64| {
            let s = x - z0;
            2.0 * (-a * s).exp() - (-2.0 * a * s).exp()
        };
        let mut s = synthetic_scorer(14.0, 1401, |x| f0_true + q * shape(x));
        let rep = estimate_f0_fstar(&mut s, DEFAULT_TAIL_FRACTION).unwrap();
        assert!((rep.f0 - f0_true).abs() <= 2e-3);
        assert!((rep.f_star - (f0_true + q)).abs() <= 1e-12);
        assert!(rep.f_star > rep.f0);
    }

    #[test]
    fn estimate_tail_error_is_bounded_by_decay() {
        let zeta_top = 10.0;
        let mut s = synthetic_scorer(zeta_top, 1001, |x| 2.0 + (-x).exp());
        let rep = estimate_f0_fstar(&mut s, DEFAULT_TAIL_FRACTION).unwrap();
        assert!((rep.f0 - 2.0).abs() <= (-zeta_top * 0.8).exp());
        assert_rel(rep.f_star, 3.0, 1e-14);
    }

    #[test]
    fn estimate_rejects_invalid_requests() {
        let mut s = synthetic_scorer(10.0, 101, |_| -1.0);
        assert!(matches!(
            estimate_f0_fstar(&mut s, 0.2),
            Err(LeewaveError::AssumptionViolated(_))
        ));
        let mut s = synthetic_scorer(10.0, 101, |_| 3.0);
        assert!(matches!(
            estimate_f0_fstar(&mut s, 0.0),
            Err(LeewaveError::InvalidInput(_))
        ));
        assert!(estimate_f0_fstar(&mut s, 1.0).is_err());
        s.zeta_grid.clear();
        assert!(matches!(
            estimate_f0_fstar(&mut s, 0.2),
            Err(LeewaveError::InvalidInput(_))
        ));
    }

    #[test]
    fn sample_profile_has_waveguide_shape() {
        let p = cira_like_profile();
        assert_eq!(p.len(), 251);
        assert_eq!(p.z[0], 0.0);
        assert_rel(p.z[250], 12.5, 1e-14);
        assert!(p.is_complete());

        let mut s = compute_scorer(&p, Regime::Full).unwrap();
        liouville_map(&mut s).unwrap();
        let rep = estimate_f0_fstar(&mut s, DEFAULT_TAIL_FRACTION).unwrap();
        // Positive everywhere, large near the ground, plateauing aloft.
        assert!(s.f.iter().all(|&v| v > 0.0));
        assert!(s.f[0] > 2.0 * rep.f0);
        let upper: Vec<f64> = s
            .z
            .iter()
            .zip(&s.f)
            .filter(|(&z, _)| z >= 6.0)
            .map(|(_, &f)| f)
            .collect();
        let (lo, hi) = upper
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                (l.min(v), h.max(v))
            });
        assert!((hi - lo) / rep.f0 <= 0.05, "no plateau: {lo}..{hi}");
        assert!(rep.f_star >= rep.f0 && rep.f0 > 0.0);
    }
}
