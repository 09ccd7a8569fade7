//! Spectral data for the half-line operator `L = -d^2/dzeta^2 + q(zeta)`.
//!
//! The refraction profile enters through `q = F0 - F`, which decays aloft
//! when `F` settles to its asymptotic constant. The operator with boundary
//! condition `v(0) = 0` then has an absolutely continuous spectrum on
//! `lambda > 0` with density `sigma(lambda)`, plus finitely many simple
//! eigenvalues on `lambda < 0` (the trapped modes). This module computes the
//! regular solution, the density by two independent routes, the bound
//! states by a stable two-sided shooting method, counting bounds for the
//! number of trapped modes, and the expansion/synthesis pair that
//! diagonalizes `L`.

use crate::atmosphere::ScorerData;
use crate::error::{LeewaveError, Result};
use crate::util::ode::{integrate_endpoint, integrate_grid, linspace};
use crate::util::quad::{simpson_uniform, trapezoid, GaussLegendre};
use crate::util::roots::brent_with;
use crate::util::spline::CubicSpline;
use ode_solvers::SVector;
use std::f64::consts::PI;

/// Default local error tolerance for [`solve_regular`].
pub const DEFAULT_SOLVE_RTOL: f64 = 1e-10;

/// Tighter tolerance used inside density and eigenvalue computations, where
/// two independent routes are later required to agree to 1e-8.
const SIGMA_RTOL: f64 = 1e-12;
const SIGMA_ATOL: f64 = 1e-14;

/// Relative tolerance on refined eigenvalues.
const EIGEN_XTOL_REL: f64 = 1e-10;

/// Bound states with `|lambda| < THRESHOLD_REJECT_REL * F0` are set aside:
/// that close to the continuum edge their tails decay too slowly for the
/// truncated domain to represent them reliably.
const THRESHOLD_REJECT_REL: f64 = 1e-8;

/// How the potential samples were produced.
#[derive(Clone, Debug)]
enum PotentialKind {
    /// `q` vanishes identically (constant refraction profile).
    Free,
    /// Exact Morse well, evaluated analytically inside the cutoff.
    Morse(crate::oracles::MorseParams),
    /// Tabulated samples interpolated by a cubic spline.
    Sampled { spline: CubicSpline },
}

/// Decaying potential `q` on a uniform grid, truncated to zero above
/// `zeta_max`.
///
/// The truncation is part of the problem definition: every operation in this
/// module solves the truncated operator exactly, and `tail_estimate` reports
/// how much of `|q|` the truncation discarded.
#[derive(Clone, Debug)]
pub struct Potential {
    kind: PotentialKind,
    /// Asymptotic constant of the refraction profile `F = F0 - q`.
    pub f0: f64,
    /// Supremum of `F` over the grid; `f_star - f0` is the well depth.
    pub f_star: f64,
    /// Cutoff height: `q(zeta) = 0` for `zeta > zeta_max`.
    pub zeta_max: f64,
    grid: Vec<f64>,
    q_grid: Vec<f64>,
    /// `Integral of |q|` over the grid.
    pub integral_abs_q: f64,
    /// `Integral of zeta |q|` over the grid (Bargmann-type bound).
    pub integral_weighted_q: f64,
    /// Estimated integral of `|q|` beyond the cutoff, from an exponential
    /// fit to the last tenth of the sampled range.
    pub tail_estimate: f64,
}

impl Potential {
    /// The vanishing potential on a solution grid `[0, zeta_top]`.
    pub fn free(f0: f64, zeta_top: f64, n: usize) -> Result<Self> {
        validate_grid_request(zeta_top, n)?;
        let grid = linspace(0.0, zeta_top, n);
        let q_grid = vec![0.0; n];
        Ok(Potential {
            kind: PotentialKind::Free,
            f0,
            f_star: f0,
            zeta_max: 0.0,
            grid,
            q_grid,
            integral_abs_q: 0.0,
            integral_weighted_q: 0.0,
            tail_estimate: 0.0,
        })
    }

    /// A Morse well `q = Q (e^{-2a(z - z0)} - 2 e^{-a(z - z0)})` truncated at
    /// `zeta_max`, evaluated analytically inside the cutoff.
    pub fn morse(
        params: crate::oracles::MorseParams,
        f0: f64,
        zeta_max: f64,
        n: usize,
    ) -> Result<Self> {
        validate_grid_request(zeta_max, n)?;
        let grid = linspace(0.0, zeta_max, n);
        let q_grid: Vec<f64> = grid.iter().map(|&z| params.q(z)).collect();
        Ok(Potential::finalize(
            PotentialKind::Morse(params),
            f0,
            grid,
            q_grid,
        ))
    }

    /// Tabulated samples on a uniform grid; `q` is spline-interpolated
    /// between nodes and zero beyond the last one.
    pub fn sampled(zeta: Vec<f64>, q: Vec<f64>, f0: f64) -> Result<Self> {
        if zeta.len() != q.len() {
            return Err(LeewaveError::InvalidInput(format!(
                "potential grids disagree: {} heights, {} samples",
                zeta.len(),
                q.len()
            )));
        }
        validate_grid_request(*zeta.last().unwrap_or(&0.0), zeta.len())?;
        if zeta[0] != 0.0 {
            return Err(LeewaveError::InvalidInput(format!(
                "potential grid must start at zero, got {}",
                zeta[0]
            )));
        }
        let dz = zeta[1] - zeta[0];
        for i in 1..zeta.len() {
            let step = zeta[i] - zeta[i - 1];
            if !(step > 0.0) || (step - dz).abs() > 1e-9 * dz {
                return Err(LeewaveError::InvalidInput(
                    "potential grid must be uniform and increasing".into(),
                ));
            }
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(LeewaveError::InvalidInput(
                "potential samples must be finite".into(),
            ));
        }
        let spline = CubicSpline::new(zeta.clone(), q.clone())?;
        Ok(Potential::finalize(
            PotentialKind::Sampled { spline },
            f0,
            zeta,
            q,
        ))
    }

    /// Builds the spectral potential `q = F0 - F` from mapped Scorer data.
    ///
    /// Requires both the Liouville map and the asymptotic-constant estimate
    /// to have been computed.
    pub fn from_scorer(scorer: &ScorerData) -> Result<Self> {
        if !scorer.is_mapped() {
            return Err(LeewaveError::InvalidInput(
                "Liouville map not populated; run liouville_map first".into(),
            ));
        }
        let f0 = scorer.f0.ok_or_else(|| {
            LeewaveError::InvalidInput(
                "asymptotic constant not set; run estimate_f0_fstar first".into(),
            )
        })?;
        let zeta = scorer.zeta_grid.clone();
        let q: Vec<f64> = scorer.f_of_zeta.iter().map(|&f| f0 - f).collect();
        Potential::sampled(zeta, q, f0)
    }

    fn finalize(kind: PotentialKind, f0: f64, grid: Vec<f64>, q_grid: Vec<f64>) -> Self {
        let abs_q: Vec<f64> = q_grid.iter().map(|v| v.abs()).collect();
        let weighted: Vec<f64> = grid.iter().zip(&abs_q).map(|(&z, &a)| z * a).collect();
        let integral_abs_q = trapezoid(&grid, &abs_q);
        let integral_weighted_q = trapezoid(&grid, &weighted);
        let depth = -q_grid.iter().cloned().fold(f64::INFINITY, f64::min);
        let f_star = f0 + depth.max(0.0);
        let zeta_max = *grid.last().unwrap();
        let tail_estimate = tail_fit(&grid, &q_grid);
        Potential {
            kind,
            f0,
            f_star,
            zeta_max,
            grid,
            q_grid,
            integral_abs_q,
            integral_weighted_q,
            tail_estimate,
        }
    }

    /// The potential, truncated to zero above the cutoff.
    pub fn q_at(&self, zeta: f64) -> f64 {
        if zeta > self.zeta_max {
            return 0.0;
        }
        match &self.kind {
            PotentialKind::Free => 0.0,
            PotentialKind::Morse(params) => params.q(zeta),
            PotentialKind::Sampled { spline } => {
                if zeta <= 0.0 {
                    self.q_grid[0]
                } else {
                    spline.eval(zeta)
                }
            }
        }
    }

    /// Uniform solution grid spanning `[0, max(zeta_max, zeta_top)]`.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Potential samples at the grid nodes.
    pub fn q_samples(&self) -> &[f64] {
        &self.q_grid
    }

    /// Grid spacing.
    pub fn dzeta(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }
}

fn validate_grid_request(zeta_top: f64, n: usize) -> Result<()> {
    if !(zeta_top > 0.0) || !zeta_top.is_finite() {
        return Err(LeewaveError::InvalidInput(format!(
            "domain height must be positive and finite, got {zeta_top}"
        )));
    }
    if n < 4 {
        return Err(LeewaveError::InvalidInput(format!(
            "potential grid needs at least 4 nodes, got {n}"
        )));
    }
    Ok(())
}

/// Integral of `|q|` beyond the last node, from an exponential fit over the
/// last tenth of the range. Falls back to one more window at the boundary
/// level when the samples do not decay.
fn tail_fit(grid: &[f64], q: &[f64]) -> f64 {
    let n = grid.len();
    let i1 = ((n - 1) as f64 * 0.9).floor() as usize;
    let i1 = i1.min(n - 2);
    let q1 = q[i1].abs();
    let q2 = q[n - 1].abs();
    if q2 == 0.0 {
        return 0.0;
    }
    let span = grid[n - 1] - grid[i1];
    if q1 > q2 {
        let rate = (q1 / q2).ln() / span;
        q2 / rate
    } else {
        q2 * span
    }
}

/// The regular solution `v(zeta, lambda)` with `v(0) = 0`, `v'(0) = 1`,
/// sampled on the potential's grid.
#[derive(Clone, Debug)]
pub struct RegularSolution {
    pub lambda: f64,
    pub zeta: Vec<f64>,
    pub v: Vec<f64>,
    pub vp: Vec<f64>,
    spline_v: CubicSpline,
    spline_vp: CubicSpline,
}

impl RegularSolution {
    /// Value at an arbitrary height: spline interpolation on the grid,
    /// exact free-equation continuation beyond it.
    pub fn value_at(&self, zeta: f64) -> f64 {
        let end = *self.zeta.last().unwrap();
        if zeta <= end {
            self.spline_v.eval(zeta)
        } else {
            self.continue_free(zeta).0
        }
    }

    /// Derivative at an arbitrary height, continued like [`value_at`].
    pub fn deriv_at(&self, zeta: f64) -> f64 {
        let end = *self.zeta.last().unwrap();
        if zeta <= end {
            self.spline_vp.eval(zeta)
        } else {
            self.continue_free(zeta).1
        }
    }

    /// Solves `v'' = -lambda v` beyond the grid from the endpoint data.
    fn continue_free(&self, zeta: f64) -> (f64, f64) {
        let end = *self.zeta.last().unwrap();
        let v0 = *self.v.last().unwrap();
        let p0 = *self.vp.last().unwrap();
        let dz = zeta - end;
        if self.lambda > 0.0 {
            let rt = self.lambda.sqrt();
            let (s, c) = (rt * dz).sin_cos();
            (v0 * c + p0 * s / rt, -v0 * rt * s + p0 * c)
        } else if self.lambda < 0.0 {
            let kp = (-self.lambda).sqrt();
            let (sh, ch) = ((kp * dz).sinh(), (kp * dz).cosh());
            (v0 * ch + p0 * sh / kp, v0 * kp * sh + p0 * ch)
        } else {
            (v0 + p0 * dz, p0)
        }
    }

    /// `(v, v')` at the truncation height.
    pub fn end_values(&self) -> (f64, f64) {
        (*self.v.last().unwrap(), *self.vp.last().unwrap())
    }

    /// Number of interior sign changes; by Sturm theory this counts the
    /// eigenvalues below `lambda`.
    pub fn node_count(&self) -> usize {
        let mut count = 0;
        let mut last = 0.0_f64;
        for &value in self.v.iter().skip(1) {
            if value == 0.0 {
                continue;
            }
            if last != 0.0 && value.signum() != last.signum() {
                count += 1;
            }
            last = value;
        }
        count
    }
}

/// Integrates the regular solution across the grid at the default tolerance.
pub fn solve_regular(potential: &Potential, lambda: f64) -> Result<RegularSolution> {
    solve_regular_with(potential, lambda, DEFAULT_SOLVE_RTOL)
}

/// Integrates the regular solution with an explicit local error tolerance.
pub fn solve_regular_with(
    potential: &Potential,
    lambda: f64,
    rtol: f64,
) -> Result<RegularSolution> {
    if !lambda.is_finite() {
        return Err(LeewaveError::InvalidInput(format!(
            "spectral parameter must be finite, got {lambda}"
        )));
    }
    let rhs = |zeta: f64, y: &SVector<f64, 2>, dy: &mut SVector<f64, 2>| {
        dy[0] = y[1];
        dy[1] = (potential.q_at(zeta) - lambda) * y[0];
    };
    let states = integrate_grid(rhs, potential.grid(), SVector::from([0.0, 1.0]), rtol, SIGMA_ATOL)?;
    let v: Vec<f64> = states.iter().map(|s| s[0]).collect();
    let vp: Vec<f64> = states.iter().map(|s| s[1]).collect();
    if v.iter().chain(vp.iter()).any(|x| !x.is_finite()) {
        return Err(LeewaveError::Numerical(format!(
            "regular solution overflowed at lambda = {lambda}; reduce the domain height"
        )));
    }
    let zeta = potential.grid().to_vec();
    let spline_v = CubicSpline::new(zeta.clone(), v.clone())?;
    let spline_vp = CubicSpline::new(zeta.clone(), vp.clone())?;
    Ok(RegularSolution {
        lambda,
        zeta,
        v,
        vp,
        spline_v,
        spline_vp,
    })
}

/// Route used to evaluate the continuous spectral density.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaMethod {
    /// Conserved-flux formula from the regular solution at the cutoff.
    Limit,
    /// Modulus of the complex Jost solution integrated back to the wall.
    Jost,
}

impl std::str::FromStr for SigmaMethod {
    type Err = LeewaveError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "limit" => Ok(SigmaMethod::Limit),
            "jost" => Ok(SigmaMethod::Jost),
            other => Err(LeewaveError::Config(format!(
                "unknown sigma method '{other}'; expected 'limit' or 'jost'"
            ))),
        }
    }
}

impl std::fmt::Display for SigmaMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SigmaMethod::Limit => write!(f, "limit"),
            SigmaMethod::Jost => write!(f, "jost"),
        }
    }
}

/// Continuous spectral density `sigma(lambda)` for `lambda > 0`.
///
/// The `Limit` route integrates the regular solution to the cutoff and reads
/// the conserved combination `(v'^2/sqrt(lambda) + sqrt(lambda) v^2)^{-1}/pi`,
/// which is exactly height-independent where `q` vanishes. The `Jost` route
/// starts the outgoing wave `e^{i sqrt(lambda) zeta}` at the cutoff,
/// integrates it back to the wall, and reads
/// `sigma = sqrt(lambda) / (pi |v_+(0)|^2)`. Both formulas depend only on
/// solution moduli, so they are insensitive to accumulated phase error.
pub fn spectral_density(
    potential: &Potential,
    lambda: f64,
    method: SigmaMethod,
) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(LeewaveError::InvalidInput(format!(
            "spectral density requires lambda > 0, got {lambda}"
        )));
    }
    let rt = lambda.sqrt();
    let cutoff = potential.zeta_max;
    match method {
        SigmaMethod::Limit => {
            let (v, vp) = if cutoff > 0.0 {
                let rhs = |zeta: f64, y: &SVector<f64, 2>, dy: &mut SVector<f64, 2>| {
                    dy[0] = y[1];
                    dy[1] = (potential.q_at(zeta) - lambda) * y[0];
                };
                let y = integrate_endpoint(
                    rhs,
                    0.0,
                    cutoff,
                    SVector::from([0.0, 1.0]),
                    SIGMA_RTOL,
                    SIGMA_ATOL,
                )?;
                (y[0], y[1])
            } else {
                (0.0, 1.0)
            };
            let flux = vp * vp / rt + rt * v * v;
            if !(flux > 0.0) || !flux.is_finite() {
                return Err(LeewaveError::Numerical(format!(
                    "degenerate flux {flux} in density at lambda = {lambda}"
                )));
            }
            Ok(1.0 / (PI * flux))
        }
        SigmaMethod::Jost => {
            let norm_sq = if cutoff > 0.0 {
                let theta = rt * cutoff;
                let y0 = SVector::from([
                    theta.cos(),
                    theta.sin(),
                    -rt * theta.sin(),
                    rt * theta.cos(),
                ]);
                let rhs = |zeta: f64, y: &SVector<f64, 4>, dy: &mut SVector<f64, 4>| {
                    let qm = potential.q_at(zeta) - lambda;
                    dy[0] = y[2];
                    dy[1] = y[3];
                    dy[2] = qm * y[0];
                    dy[3] = qm * y[1];
                };
                let y = integrate_endpoint(rhs, cutoff, 0.0, y0, SIGMA_RTOL, SIGMA_ATOL)?;
                y[0] * y[0] + y[1] * y[1]
            } else {
                1.0
            };
            if !(norm_sq > 0.0) || !norm_sq.is_finite() {
                return Err(LeewaveError::Numerical(format!(
                    "degenerate Jost modulus {norm_sq} at lambda = {lambda}"
                )));
            }
            Ok(rt / (PI * norm_sq))
        }
    }
}

/// One trapped mode: its eigenvalue, the regular solution sampled on the
/// potential grid, and its squared norm over the half-line (grid integral
/// plus the exact exponential tail).
#[derive(Clone, Debug)]
pub struct BoundState {
    pub lambda: f64,
    pub values: Vec<f64>,
    pub norm_sq: f64,
}

/// Result of the bound-state search.
#[derive(Clone, Debug, Default)]
pub struct BoundStateSet {
    /// Accepted eigenvalues, ascending.
    pub states: Vec<BoundState>,
    /// Roots discarded for sitting within `1e-8 F0` of the continuum edge.
    pub rejected_near_threshold: Vec<f64>,
}

/// Matching abscissa: the outermost grid node still inside the classically
/// allowed region `q <= lambda`, or the well minimum when the region is
/// empty. Shooting from both ends toward this point keeps the locally
/// growing mode dominant in each sweep.
fn matching_index(potential: &Potential, lambda: f64) -> usize {
    let q = potential.q_samples();
    match q.iter().rposition(|&qi| qi <= lambda) {
        Some(i) => i,
        None => {
            let mut imin = 0;
            for (i, &qi) in q.iter().enumerate() {
                if qi < q[imin] {
                    imin = i;
                }
            }
            imin
        }
    }
}

/// Stable evaluation of the eigenvalue condition at `lambda < 0`.
///
/// The condition is that the regular solution matches the decaying free
/// solution `e^{-kappa zeta}` at the cutoff. Evaluating `v' + kappa v` there
/// directly would require integrating the regular solution across the
/// classically forbidden region, where it grows like `e^{kappa zeta}` and
/// drowns the decaying component. Instead the decaying solution `u`, scaled
/// to `u = 1`, `u' = -kappa` at the cutoff, is integrated backward (its
/// growing direction), and the Wronskian `v'u - vu'` is formed at the
/// matching abscissa. The result equals `v'(cutoff) + kappa v(cutoff)`
/// exactly, but every integration runs in its stable direction.
fn matching_value(potential: &Potential, lambda: f64) -> Result<f64> {
    let kappa = (-lambda).sqrt();
    let grid = potential.grid();
    let end = *grid.last().unwrap();
    let xc = grid[matching_index(potential, lambda)];
    let rhs = |zeta: f64, y: &SVector<f64, 2>, dy: &mut SVector<f64, 2>| {
        dy[0] = y[1];
        dy[1] = (potential.q_at(zeta) - lambda) * y[0];
    };
    let vf = if xc > 0.0 {
        integrate_endpoint(
            rhs,
            0.0,
            xc,
            SVector::from([0.0, 1.0]),
            SIGMA_RTOL,
            SIGMA_ATOL,
        )?
    } else {
        SVector::from([0.0, 1.0])
    };
    let ub = if xc < end {
        integrate_endpoint(
            rhs,
            end,
            xc,
            SVector::from([1.0, -kappa]),
            SIGMA_RTOL,
            SIGMA_ATOL,
        )?
    } else {
        SVector::from([1.0, -kappa])
    };
    Ok(vf[1] * ub[0] - vf[0] * ub[1])
}

/// Assembles the eigenfunction at a refined eigenvalue by the same two-sided
/// sweeps used in the matching function.
fn assemble_state(potential: &Potential, lambda: f64) -> Result<BoundState> {
    let kappa = (-lambda).sqrt();
    let grid = potential.grid();
    let n = grid.len();
    let ic = matching_index(potential, lambda);
    let rhs = |zeta: f64, y: &SVector<f64, 2>, dy: &mut SVector<f64, 2>| {
        dy[0] = y[1];
        dy[1] = (potential.q_at(zeta) - lambda) * y[0];
    };
    let forward = integrate_grid(
        rhs,
        &grid[..=ic],
        SVector::from([0.0, 1.0]),
        SIGMA_RTOL,
        SIGMA_ATOL,
    )?;
    let mut values: Vec<f64> = forward.iter().map(|s| s[0]).collect();
    if ic < n - 1 {
        let reversed: Vec<f64> = grid[ic..].iter().rev().cloned().collect();
        let backward = integrate_grid(
            &rhs,
            &reversed,
            SVector::from([1.0, -kappa]),
            SIGMA_RTOL,
            SIGMA_ATOL,
        )?;
        let u_at_match = backward[backward.len() - 1];
        // Match on the larger component so a node of the eigenfunction near
        // the matching abscissa cannot poison the scale factor.
        let vf = forward[ic];
        let unit = kappa.max(1.0);
        let scale = if vf[0].abs() * unit >= vf[1].abs() {
            if u_at_match[0] == 0.0 {
                return Err(LeewaveError::Numerical(format!(
                    "degenerate matching data for eigenvalue {lambda}"
                )));
            }
            vf[0] / u_at_match[0]
        } else {
            if u_at_match[1] == 0.0 {
                return Err(LeewaveError::Numerical(format!(
                    "degenerate matching data for eigenvalue {lambda}"
                )));
            }
            vf[1] / u_at_match[1]
        };
        for (offset, state) in backward.iter().rev().enumerate() {
            if offset == 0 {
                continue;
            }
            values.push(scale * state[0]);
        }
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(LeewaveError::Numerical(format!(
            "eigenfunction assembly overflowed at lambda = {lambda}"
        )));
    }
    let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
    let tail = values[n - 1] * values[n - 1] / (2.0 * kappa);
    let norm_sq = simpson_uniform(&squares, potential.dzeta()) + tail;
    if !(norm_sq > 0.0) || !norm_sq.is_finite() {
        return Err(LeewaveError::Numerical(format!(
            "non-positive eigenfunction norm at lambda = {lambda}"
        )));
    }
    Ok(BoundState {
        lambda,
        values,
        norm_sq,
    })
}

/// Semiclassical estimate of the trapped-mode count, used to set the
/// bracketing scan density.
fn semiclassical_count(potential: &Potential) -> f64 {
    let phase: Vec<f64> = potential
        .q_samples()
        .iter()
        .map(|&q| (-q).max(0.0).sqrt())
        .collect();
    trapezoid(potential.grid(), &phase) / PI
}

/// Finds all trapped modes `lambda < 0` of the truncated operator.
///
/// The matching function changes sign exactly at the eigenvalues, so a
/// descending scan in `kappa = sqrt(-lambda)` brackets each one; brackets
/// are refined by Brent iteration to a relative tolerance of `1e-10`. If
/// the scan finds fewer roots than the guaranteed counting lower bound it
/// is repeated at four times the density before reporting failure.
pub fn find_bound_states(potential: &Potential) -> Result<BoundStateSet> {
    let mut set = BoundStateSet::default();
    let depth = potential.f_star - potential.f0;
    if depth <= 0.0 {
        return Ok(set);
    }
    let kappa_max = depth.sqrt() * (1.0 - 1e-9);
    let threshold = THRESHOLD_REJECT_REL * potential.f0.abs();
    let kappa_min = threshold.max(f64::MIN_POSITIVE).sqrt();
    if kappa_min >= kappa_max {
        return Ok(set);
    }
    let (lower, _) = counting_bounds(potential, depth.sqrt())?;
    let mut n_scan = 48.max((10.0 * (semiclassical_count(potential) + 2.0)).ceil() as usize);
    for attempt in 0..3 {
        if attempt > 0 {
            n_scan *= 4;
        }
        let kappas = linspace(kappa_max, kappa_min, n_scan);
        let mut values = Vec::with_capacity(n_scan);
        for &kappa in &kappas {
            values.push(matching_value(potential, -kappa * kappa)?);
        }
        let mut lambdas = Vec::new();
        for i in 0..n_scan - 1 {
            let (la, lb) = (-kappas[i] * kappas[i], -kappas[i + 1] * kappas[i + 1]);
            if values[i] == 0.0 {
                lambdas.push(la);
                continue;
            }
            if values[i] * values[i + 1] < 0.0 {
                let mut failure = None;
                let mut condition = |lam: f64| match matching_value(potential, lam) {
                    Ok(v) => v,
                    Err(e) => {
                        failure = Some(e);
                        f64::NAN
                    }
                };
                let xtol = EIGEN_XTOL_REL * la.abs().max(lb.abs());
                let root = brent_with(&mut condition, la, lb, values[i], values[i + 1], xtol);
                if let Some(e) = failure {
                    return Err(e);
                }
                lambdas.push(root?);
            }
        }
        let mut accepted = Vec::new();
        let mut rejected = Vec::new();
        for lam in lambdas {
            if lam.abs() < threshold {
                rejected.push(lam);
            } else {
                accepted.push(lam);
            }
        }
        if accepted.len() + rejected.len() >= lower {
            for &lam in &accepted {
                set.states.push(assemble_state(potential, lam)?);
            }
            set.rejected_near_threshold = rejected;
            return Ok(set);
        }
    }
    Err(LeewaveError::Numerical(format!(
        "bound-state bracketing scan exhausted: found fewer roots than the \
         counting lower bound {lower} at scan density {n_scan}"
    )))
}

/// Counting bounds for the number of trapped modes.
///
/// Returns `(lower, upper)` where `lower = floor(1/2 + I/(pi M))` with
/// `I` the signed integral of `-q` and `M` any frequency bound satisfying
/// `M^2 >= f_star - f0`, and `upper` is the weighted integral of `|q|`.
pub fn counting_bounds(potential: &Potential, m_freq: f64) -> Result<(usize, f64)> {
    let depth = (potential.f_star - potential.f0).max(0.0);
    if !(m_freq > 0.0) || !m_freq.is_finite() || m_freq * m_freq < depth * (1.0 - 1e-12) {
        return Err(LeewaveError::InvalidInput(format!(
            "frequency bound M = {m_freq} must satisfy M^2 >= f_star - f0 = {depth}"
        )));
    }
    let minus_q: Vec<f64> = potential.q_samples().iter().map(|&q| -q).collect();
    let signed = trapezoid(potential.grid(), &minus_q);
    let lower_real = (0.5 + signed / (PI * m_freq)).floor();
    let lower = if lower_real > 0.0 { lower_real as usize } else { 0 };
    Ok((lower, potential.integral_weighted_q))
}

/// Quadrature rule in the spectral variable `lambda > 0`.
///
/// Nodes come from Gauss-Legendre panels in the wavenumber `mu = sqrt(lambda)`,
/// geometrically refined toward `mu = 0` where the density varies fastest;
/// each weight already includes the Jacobian `d lambda = 2 mu d mu`.
#[derive(Clone, Debug)]
pub struct LambdaRule {
    /// `(lambda, weight)` pairs, ascending in `lambda`.
    pub nodes: Vec<(f64, f64)>,
}

impl LambdaRule {
    /// Builds the rule covering `lambda` in `(0, mu_max^2]` with roughly
    /// `n_nodes` nodes split evenly across the geometric panels.
    pub fn geometric(mu_max: f64, n_nodes: usize) -> Result<Self> {
        if !(mu_max > 0.0) || !mu_max.is_finite() {
            return Err(LeewaveError::InvalidInput(format!(
                "wavenumber cap must be positive, got {mu_max}"
            )));
        }
        if n_nodes < 8 {
            return Err(LeewaveError::InvalidInput(format!(
                "spectral rule needs at least 8 nodes, got {n_nodes}"
            )));
        }
        let mut edges = vec![0.0, mu_max / 128.0];
        while *edges.last().unwrap() < mu_max / 2.0 * (1.0 + 1e-12) {
            edges.push(edges.last().unwrap() * 2.0);
        }
        if *edges.last().unwrap() < mu_max {
            edges.push(mu_max);
        }
        let panels = edges.len() - 1;
        let per_panel = (n_nodes + panels - 1) / panels;
        let gauss = GaussLegendre::new(per_panel.max(2));
        let mut nodes = Vec::with_capacity(per_panel * panels);
        for w in edges.windows(2) {
            for (mu, wt) in gauss.mapped(w[0], w[1]) {
                nodes.push((mu * mu, 2.0 * mu * wt));
            }
        }
        Ok(LambdaRule { nodes })
    }
}

/// Spectral coefficients of a boundary function: the continuous transform
/// sampled at the rule nodes plus one coefficient per bound state.
#[derive(Clone, Debug)]
pub struct Expansion {
    /// `(lambda, weight, coefficient, density)` per continuous node.
    pub continuous: Vec<(f64, f64, f64, f64)>,
    /// `Integral of g v_j` per bound state, aligned with the state list.
    pub discrete: Vec<f64>,
}

/// Expands grid samples of `g` in the eigenfunctions of `L`.
///
/// Continuous coefficients are `integral of g(zeta) v(zeta, lambda)` over
/// the grid; the density at each node is computed by the conserved-flux
/// route. The function `g` should be negligible near the top of the grid,
/// since the integrals are truncated there.
pub fn expand(g: &[f64], data: &SpectralData, rule: &LambdaRule) -> Result<Expansion> {
    let potential = &data.potential;
    let n = potential.grid().len();
    if g.len() != n {
        return Err(LeewaveError::InvalidInput(format!(
            "expected {n} samples on the potential grid, got {}",
            g.len()
        )));
    }
    if rule.nodes.is_empty() {
        return Err(LeewaveError::InvalidInput(
            "empty spectral quadrature rule".into(),
        ));
    }
    let dz = potential.dzeta();
    let mut continuous = Vec::with_capacity(rule.nodes.len());
    for &(lambda, weight) in &rule.nodes {
        let sol = solve_regular_with(potential, lambda, SIGMA_RTOL)?;
        let integrand: Vec<f64> = g.iter().zip(&sol.v).map(|(&a, &b)| a * b).collect();
        let coeff = simpson_uniform(&integrand, dz);
        let density = spectral_density(potential, lambda, SigmaMethod::Limit)?;
        continuous.push((lambda, weight, coeff, density));
    }
    let mut discrete = Vec::with_capacity(data.bound_states.len());
    for state in &data.bound_states {
        let integrand: Vec<f64> = g.iter().zip(&state.values).map(|(&a, &b)| a * b).collect();
        discrete.push(simpson_uniform(&integrand, dz));
    }
    Ok(Expansion {
        continuous,
        discrete,
    })
}

/// Synthesizes grid samples back from spectral coefficients:
/// the bound-state sum plus the quadrature of the continuous transform.
pub fn synthesize(expansion: &Expansion, data: &SpectralData) -> Result<Vec<f64>> {
    let potential = &data.potential;
    let n = potential.grid().len();
    if expansion.discrete.len() != data.bound_states.len() {
        return Err(LeewaveError::InvalidInput(format!(
            "expansion carries {} bound-state coefficients, spectral data has {}",
            expansion.discrete.len(),
            data.bound_states.len()
        )));
    }
    let mut out = vec![0.0; n];
    for (state, &coeff) in data.bound_states.iter().zip(&expansion.discrete) {
        let scale = coeff / state.norm_sq;
        for (o, &v) in out.iter_mut().zip(&state.values) {
            *o += scale * v;
        }
    }
    for &(lambda, weight, coeff, density) in &expansion.continuous {
        let sol = solve_regular_with(potential, lambda, SIGMA_RTOL)?;
        let scale = weight * coeff * density;
        for (o, &v) in out.iter_mut().zip(&sol.v) {
            *o += scale * v;
        }
    }
    Ok(out)
}

/// Everything the kernel assembly needs about the operator: the potential,
/// density samples on a reference grid, and the trapped modes.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub potential: Potential,
    /// `(lambda, sigma)` samples, ascending in `lambda`.
    pub sigma_samples: Vec<(f64, f64)>,
    pub bound_states: Vec<BoundState>,
    /// Near-threshold roots excluded from the trapped sum.
    pub rejected_near_threshold: Vec<f64>,
}

/// Computes density samples and bound states for a potential in one pass.
pub fn build_spectral_data(
    potential: Potential,
    sigma_lambdas: &[f64],
    method: SigmaMethod,
) -> Result<SpectralData> {
    let mut sigma_samples = Vec::with_capacity(sigma_lambdas.len());
    for &lambda in sigma_lambdas {
        let sigma = spectral_density(&potential, lambda, method)?;
        sigma_samples.push((lambda, sigma));
    }
    let found = find_bound_states(&potential)?;
    Ok(SpectralData {
        potential,
        sigma_samples,
        bound_states: found.states,
        rejected_near_threshold: found.rejected_near_threshold,
    })
}
