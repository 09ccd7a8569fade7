//! Plain-text artifact files shared by the command line pipeline.
//!
//! Every artifact uses one layout: a magic first line `# leewave-<kind> v1`,
//! header lines `# <key> <value>`, and named tables introduced by
//! `# table <name>` and `# columns <c1> <c2> ...`, followed by one
//! space-delimited data row per line. Floats are written in scientific
//! notation with the shortest digit string that parses back to the same
//! value, so a write/read cycle is exact and rewriting the same data is
//! byte-identical.
//!
//! Structural damage (bad magic, unreadable numbers, wrong row shapes,
//! missing keys) is reported as a configuration error; structurally sound
//! files whose values fail validation are invalid input. The key names
//! `table` and `columns` are reserved by the layout.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::atmosphere::{
    hydrostatic_complete, load_profile, BackgroundProfile, ProfileRecord, Regime, Scales,
    ScorerData, UnitsMode,
};
use crate::error::{LeewaveError, Result};
use crate::field::{TerrainProfile, WaveField};
use crate::kernel::{KernelField, KernelGrid};
use crate::spectral::{BoundState, Potential, SpectralData};

/// Version tag written into every artifact header.
pub const FORMAT_VERSION: u32 = 1;

/// Shortest scientific representation that parses back to the same value.
pub fn fmt_float(v: f64) -> String {
    format!("{v:e}")
}

fn annotate_io(path: &Path, e: std::io::Error) -> LeewaveError {
    LeewaveError::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

fn invalid(msg: impl std::fmt::Display) -> LeewaveError {
    LeewaveError::InvalidInput(msg.to_string())
}

fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid(format!("{what} contains a non-finite value")));
    }
    Ok(())
}

fn ensure_increasing(what: &str, values: &[f64]) -> Result<()> {
    if values.windows(2).any(|p| p[1] <= p[0]) {
        return Err(invalid(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

struct Writer {
    buf: String,
}

impl Writer {
    fn new(kind: &str) -> Self {
        Writer {
            buf: format!("# leewave-{kind} v{FORMAT_VERSION}\n"),
        }
    }

    fn key(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.buf, "# {key} {value}");
    }

    fn key_float(&mut self, key: &str, v: f64) {
        let _ = writeln!(self.buf, "# {key} {}", fmt_float(v));
    }

    fn table<S: AsRef<str>>(&mut self, name: &str, columns: &[S]) {
        let _ = writeln!(self.buf, "# table {name}");
        self.buf.push_str("# columns");
        for c in columns {
            self.buf.push(' ');
            self.buf.push_str(c.as_ref());
        }
        self.buf.push('\n');
    }

    fn row(&mut self, values: &[f64]) {
        for (i, &v) in values.iter().enumerate() {
            if i > 0 {
                self.buf.push(' ');
            }
            self.buf.push_str(&fmt_float(v));
        }
        self.buf.push('\n');
    }

    fn save(self, path: &Path) -> Result<()> {
        fs::write(path, self.buf.as_bytes()).map_err(|e| annotate_io(path, e))
    }
}

/// One named table of an artifact: column names plus parsed rows.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn index(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| {
            LeewaveError::Config(format!("table '{}' has no column '{name}'", self.name))
        })
    }

    /// Extracts one column by name.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.index(name)?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }
}

/// A parsed artifact: its kind, header keys in file order, and tables.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub kind: String,
    pub version: u32,
    source: String,
    keys: Vec<(String, String)>,
    tables: Vec<Table>,
}

impl Artifact {
    /// Reads and parses any artifact file.
    pub fn read(path: impl AsRef<Path>) -> Result<Artifact> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| annotate_io(path, e))?;
        parse_artifact(&path.display().to_string(), &text)
    }

    fn expect(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(LeewaveError::Config(format!(
                "{}: expected a '{kind}' artifact, found '{}'",
                self.source, self.kind
            )));
        }
        Ok(())
    }

    /// Raw header value, if present.
    pub fn key(&self, name: &str) -> Option<&str> {
        self.keys
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn require_key(&self, name: &str) -> Result<&str> {
        self.key(name).ok_or_else(|| {
            LeewaveError::Config(format!("{}: missing header key '{name}'", self.source))
        })
    }

    fn float_key(&self, name: &str) -> Result<f64> {
        let raw = self.require_key(name)?;
        raw.parse().map_err(|_| {
            LeewaveError::Config(format!(
                "{}: header key '{name}' is not a number: '{raw}'",
                self.source
            ))
        })
    }

    fn opt_float_key(&self, name: &str) -> Result<Option<f64>> {
        match self.key(name) {
            None => Ok(None),
            Some(_) => self.float_key(name).map(Some),
        }
    }

    fn usize_key(&self, name: &str) -> Result<usize> {
        let raw = self.require_key(name)?;
        raw.parse().map_err(|_| {
            LeewaveError::Config(format!(
                "{}: header key '{name}' is not a count: '{raw}'",
                self.source
            ))
        })
    }

    /// Looks up a table by name.
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn require_table(&self, name: &str) -> Result<&Table> {
        self.table(name).ok_or_else(|| {
            LeewaveError::Config(format!("{}: missing table '{name}'", self.source))
        })
    }
}

fn parse_artifact(source: &str, text: &str) -> Result<Artifact> {
    fn fail(source: &str, lineno: usize, msg: impl std::fmt::Display) -> LeewaveError {
        LeewaveError::Config(format!("{source}:{lineno}: {msg}"))
    }

    let mut kind: Option<String> = None;
    let mut keys: Vec<(String, String)> = Vec::new();
    let mut tables: Vec<Table> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if kind.is_none() {
                let mut it = rest.split_whitespace();
                let family = it.next().unwrap_or("");
                let Some(k) = family.strip_prefix("leewave-") else {
                    return Err(fail(
                        source,
                        lineno,
                        "first header must be '# leewave-<kind> v<version>'",
                    ));
                };
                let vtag = it
                    .next()
                    .ok_or_else(|| fail(source, lineno, "missing version tag"))?;
                let version: u32 = vtag
                    .strip_prefix('v')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| fail(source, lineno, format!("bad version tag '{vtag}'")))?;
                if it.next().is_some() {
                    return Err(fail(source, lineno, "unexpected tokens after the version"));
                }
                if version != FORMAT_VERSION {
                    return Err(fail(
                        source,
                        lineno,
                        format!("unsupported format version {version} (this build reads v{FORMAT_VERSION})"),
                    ));
                }
                kind = Some(k.to_string());
                continue;
            }
            let Some((key, value)) = rest.split_once(char::is_whitespace) else {
                return Err(fail(source, lineno, format!("header '{rest}' has no value")));
            };
            let value = value.trim();
            match key {
                "table" => {
                    if tables.iter().any(|t| t.name == value) {
                        return Err(fail(source, lineno, format!("duplicate table '{value}'")));
                    }
                    tables.push(Table {
                        name: value.to_string(),
                        columns: Vec::new(),
                        rows: Vec::new(),
                    });
                }
                "columns" => {
                    let Some(t) = tables.last_mut() else {
                        return Err(fail(source, lineno, "'# columns' before any '# table'"));
                    };
                    if !t.columns.is_empty() {
                        return Err(fail(
                            source,
                            lineno,
                            format!("table '{}' already has columns", t.name),
                        ));
                    }
                    t.columns = value.split_whitespace().map(str::to_string).collect();
                }
                _ => keys.push((key.to_string(), value.to_string())),
            }
            continue;
        }
        let Some(t) = tables.last_mut() else {
            return Err(fail(source, lineno, "data row before any '# table' header"));
        };
        if t.columns.is_empty() {
            return Err(fail(source, lineno, "data row before '# columns'"));
        }
        let mut row = Vec::with_capacity(t.columns.len());
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| fail(source, lineno, format!("unreadable number '{tok}'")))?;
            row.push(v);
        }
        if row.len() != t.columns.len() {
            return Err(fail(
                source,
                lineno,
                format!("expected {} values, got {}", t.columns.len(), row.len()),
            ));
        }
        t.rows.push(row);
    }
    let kind = kind.ok_or_else(|| LeewaveError::Config(format!("{source}: empty artifact")))?;
    Ok(Artifact {
        kind,
        version: FORMAT_VERSION,
        source: source.to_string(),
        keys,
        tables,
    })
}

/// A profile file: tabulated sounding records plus the unit system needed
/// to reduce them. This is the one artifact meant to be written by hand;
/// the reader accepts dimensional soundings and reduces them on load.
#[derive(Clone, Debug)]
pub struct ProfileFile {
    pub records: Vec<ProfileRecord>,
    pub units: UnitsMode,
    pub scales: Scales,
    /// Gas-constant ratio override; the loader default applies when absent.
    pub mu: Option<f64>,
    /// Surface pressure for hydrostatic completion.
    pub p0_surface: Option<f64>,
}

impl ProfileFile {
    /// Wraps already non-dimensional records with the default scales.
    pub fn nondimensional(records: Vec<ProfileRecord>) -> Self {
        ProfileFile {
            records,
            units: UnitsMode::NonDimensional,
            scales: Scales::default(),
            mu: None,
            p0_surface: None,
        }
    }

    /// Loads the records into a background profile. Hydrostatic completion
    /// runs when density or pressure columns are missing, or always when a
    /// surface pressure is given (replacing any tabulated columns).
    pub fn load(&self) -> Result<BackgroundProfile> {
        let mut profile = load_profile(&self.records, self.units, &self.scales)?;
        if let Some(mu) = self.mu {
            if !mu.is_finite() || !(mu > 0.0 && mu < 1.0) {
                return Err(invalid(format!(
                    "gas-constant ratio must lie in (0, 1), got {mu}"
                )));
            }
            profile.mu = mu;
        }
        if profile.is_complete() && self.p0_surface.is_none() {
            Ok(profile)
        } else {
            hydrostatic_complete(&profile, self.p0_surface)
        }
    }
}

/// Writes a profile file.
pub fn write_profile(path: impl AsRef<Path>, file: &ProfileFile) -> Result<()> {
    let n = file.records.len();
    let n_rho = file.records.iter().filter(|r| r.density.is_some()).count();
    let n_p = file.records.iter().filter(|r| r.pressure.is_some()).count();
    if n_rho != 0 && n_rho != n {
        return Err(invalid(
            "density must be present on all records or on none",
        ));
    }
    if n_p != 0 && n_p != n {
        return Err(invalid(
            "pressure must be present on all records or on none",
        ));
    }
    let mut w = Writer::new("profile");
    w.key("units", file.units);
    w.key_float("scale_length", file.scales.length);
    w.key_float("scale_velocity", file.scales.velocity);
    w.key_float("scale_density", file.scales.density);
    w.key_float("scale_gas_constant", file.scales.gas_constant);
    if let Some(mu) = file.mu {
        w.key_float("mu", mu);
    }
    if let Some(ps) = file.p0_surface {
        w.key_float("p0_surface", ps);
    }
    let mut cols = vec!["altitude", "wind", "temperature"];
    if n_rho > 0 {
        cols.push("density");
    }
    if n_p > 0 {
        cols.push("pressure");
    }
    w.table("records", &cols);
    for r in &file.records {
        let mut row = vec![r.altitude, r.wind, r.temperature];
        row.extend(r.density);
        row.extend(r.pressure);
        w.row(&row);
    }
    w.save(path.as_ref())
}

/// Reads a profile file. Missing scale keys fall back to the defaults.
pub fn read_profile(path: impl AsRef<Path>) -> Result<ProfileFile> {
    let art = Artifact::read(path)?;
    art.expect("profile")?;
    let units: UnitsMode = art.require_key("units")?.parse()?;
    let d = Scales::default();
    let scales = Scales {
        length: art.opt_float_key("scale_length")?.unwrap_or(d.length),
        velocity: art.opt_float_key("scale_velocity")?.unwrap_or(d.velocity),
        density: art.opt_float_key("scale_density")?.unwrap_or(d.density),
        gas_constant: art
            .opt_float_key("scale_gas_constant")?
            .unwrap_or(d.gas_constant),
    };
    let mu = art.opt_float_key("mu")?;
    let p0_surface = art.opt_float_key("p0_surface")?;
    let t = art.require_table("records")?;
    let altitude = t.column("altitude")?;
    let wind = t.column("wind")?;
    let temperature = t.column("temperature")?;
    let density = t
        .has_column("density")
        .then(|| t.column("density"))
        .transpose()?;
    let pressure = t
        .has_column("pressure")
        .then(|| t.column("pressure"))
        .transpose()?;
    let records = (0..altitude.len())
        .map(|i| ProfileRecord {
            altitude: altitude[i],
            wind: wind[i],
            temperature: temperature[i],
            density: density.as_ref().map(|v| v[i]),
            pressure: pressure.as_ref().map(|v| v[i]),
        })
        .collect();
    Ok(ProfileFile {
        records,
        units,
        scales,
        mu,
        p0_surface,
    })
}

/// Writes Scorer coefficients, including the normal-form map when present.
pub fn write_scorer(path: impl AsRef<Path>, data: &ScorerData) -> Result<()> {
    let n = data.z.len();
    let coeffs: [(&str, &[f64]); 7] = [
        ("a", &data.a),
        ("b", &data.b),
        ("c", &data.c),
        ("d", &data.d),
        ("e", &data.e),
        ("f", &data.f),
        ("beta", &data.beta),
    ];
    for (name, v) in coeffs {
        if v.len() != n {
            return Err(invalid(format!(
                "coefficient '{name}' has {} values for {n} altitude nodes",
                v.len()
            )));
        }
    }
    let mapped = data.is_mapped();
    let m = data.zeta_grid.len();
    if mapped
        && (data.zeta_of_z.len() != n
            || data.z_of_zeta.len() != m
            || data.f_of_zeta.len() != m
            || data.e_of_zeta.len() != m)
    {
        return Err(invalid("normal-form map grids disagree in length"));
    }
    let mut w = Writer::new("scorer");
    w.key("regime", data.regime);
    w.key_float("g", data.g);
    w.key_float("mu", data.mu);
    if let Some(f0) = data.f0 {
        w.key_float("f0", f0);
    }
    if let Some(fs) = data.f_star {
        w.key_float("f_star", fs);
    }
    let mut cols = vec!["z", "a", "b", "c", "d", "e", "f", "beta"];
    if mapped {
        cols.push("zeta");
    }
    w.table("coefficients", &cols);
    for i in 0..n {
        let mut row = vec![
            data.z[i],
            data.a[i],
            data.b[i],
            data.c[i],
            data.d[i],
            data.e[i],
            data.f[i],
            data.beta[i],
        ];
        if mapped {
            row.push(data.zeta_of_z[i]);
        }
        w.row(&row);
    }
    if mapped {
        w.table("mapped", &["zeta", "z", "f", "e"]);
        for i in 0..m {
            w.row(&[
                data.zeta_grid[i],
                data.z_of_zeta[i],
                data.f_of_zeta[i],
                data.e_of_zeta[i],
            ]);
        }
    }
    w.save(path.as_ref())
}

/// Reads a Scorer artifact back into memory.
pub fn read_scorer(path: impl AsRef<Path>) -> Result<ScorerData> {
    let art = Artifact::read(path)?;
    art.expect("scorer")?;
    let regime: Regime = art.require_key("regime")?.parse()?;
    let g = art.float_key("g")?;
    let mu = art.float_key("mu")?;
    let f0 = art.opt_float_key("f0")?;
    let f_star = art.opt_float_key("f_star")?;
    let t = art.require_table("coefficients")?;
    let z = t.column("z")?;
    let a = t.column("a")?;
    let b = t.column("b")?;
    let c = t.column("c")?;
    let e = t.column("e")?;
    let d = t.column("d")?;
    let f = t.column("f")?;
    let beta = t.column("beta")?;
    let zeta_of_z = if t.has_column("zeta") {
        t.column("zeta")?
    } else {
        Vec::new()
    };
    for (name, v) in [
        ("z", &z),
        ("a", &a),
        ("b", &b),
        ("c", &c),
        ("d", &d),
        ("e", &e),
        ("f", &f),
        ("beta", &beta),
        ("zeta", &zeta_of_z),
    ] {
        ensure_finite(&format!("scorer column '{name}'"), v)?;
    }
    ensure_increasing("the altitude grid", &z)?;
    let (zeta_grid, z_of_zeta, f_of_zeta, e_of_zeta) = match art.table("mapped") {
        None => (Vec::new(), Vec::new(), Vec::new(), Vec::new()),
        Some(mt) => {
            let zg = mt.column("zeta")?;
            let zz = mt.column("z")?;
            let fz = mt.column("f")?;
            let ez = mt.column("e")?;
            ensure_finite("the mapped table", &zg)?;
            ensure_finite("the mapped table", &zz)?;
            ensure_finite("the mapped table", &fz)?;
            ensure_finite("the mapped table", &ez)?;
            ensure_increasing("the zeta grid", &zg)?;
            (zg, zz, fz, ez)
        }
    };
    if zeta_of_z.is_empty() != zeta_grid.is_empty() {
        return Err(invalid(
            "the mapped table and the zeta column must be present together",
        ));
    }
    Ok(ScorerData {
        regime,
        g,
        mu,
        z,
        a,
        b,
        c,
        d,
        e,
        f,
        beta,
        zeta_of_z,
        zeta_grid,
        z_of_zeta,
        f_of_zeta,
        e_of_zeta,
        f0,
        f_star,
    })
}

/// Writes spectral data: potential samples, density samples, and trapped
/// modes.
pub fn write_spectrum(path: impl AsRef<Path>, data: &SpectralData) -> Result<()> {
    let grid = data.potential.grid();
    let q = data.potential.q_samples();
    for state in &data.bound_states {
        if state.values.len() != grid.len() {
            return Err(invalid("trapped-mode samples do not match the grid"));
        }
    }
    let mut w = Writer::new("spectrum");
    w.key_float("f0", data.potential.f0);
    w.key("n_states", data.bound_states.len());
    w.table("potential", &["zeta", "q"]);
    for (&zi, &qi) in grid.iter().zip(q) {
        w.row(&[zi, qi]);
    }
    w.table("sigma", &["lambda", "sigma"]);
    for &(l, s) in &data.sigma_samples {
        w.row(&[l, s]);
    }
    if !data.bound_states.is_empty() {
        w.table("eigenvalues", &["lambda", "norm_sq"]);
        for state in &data.bound_states {
            w.row(&[state.lambda, state.norm_sq]);
        }
        let cols: Vec<String> = (0..data.bound_states.len())
            .map(|j| format!("m{j}"))
            .collect();
        w.table("modes", &cols);
        for i in 0..grid.len() {
            let row: Vec<f64> = data.bound_states.iter().map(|s| s.values[i]).collect();
            w.row(&row);
        }
    }
    if !data.rejected_near_threshold.is_empty() {
        w.table("rejected", &["lambda"]);
        for &l in &data.rejected_near_threshold {
            w.row(&[l]);
        }
    }
    w.save(path.as_ref())
}

/// Reads a spectrum artifact; the potential comes back as tabulated samples.
pub fn read_spectrum(path: impl AsRef<Path>) -> Result<SpectralData> {
    let art = Artifact::read(path)?;
    art.expect("spectrum")?;
    let f0 = art.float_key("f0")?;
    let n_states = art.usize_key("n_states")?;
    let pt = art.require_table("potential")?;
    let zeta = pt.column("zeta")?;
    let q = pt.column("q")?;
    ensure_finite("the potential", &zeta)?;
    if !f0.is_finite() {
        return Err(invalid("the asymptotic constant must be finite"));
    }
    let potential = Potential::sampled(zeta, q, f0)?;
    let st = art.require_table("sigma")?;
    let lambdas = st.column("lambda")?;
    let sigmas = st.column("sigma")?;
    ensure_finite("the density table", &lambdas)?;
    ensure_finite("the density table", &sigmas)?;
    ensure_increasing("density sample abscissae", &lambdas)?;
    let sigma_samples = lambdas.into_iter().zip(sigmas).collect();
    let bound_states = if n_states == 0 {
        Vec::new()
    } else {
        let et = art.require_table("eigenvalues")?;
        let lambdas = et.column("lambda")?;
        let norms = et.column("norm_sq")?;
        if lambdas.len() != n_states {
            return Err(invalid(format!(
                "header declares {n_states} trapped modes, eigenvalue table has {}",
                lambdas.len()
            )));
        }
        ensure_increasing("trapped eigenvalues", &lambdas)?;
        let mt = art.require_table("modes")?;
        if mt.columns.len() != n_states || mt.rows.len() != potential.grid().len() {
            return Err(invalid("trapped-mode samples do not match the grid"));
        }
        let mut states = Vec::with_capacity(n_states);
        for j in 0..n_states {
            let lambda = lambdas[j];
            let norm_sq = norms[j];
            if !lambda.is_finite() || lambda >= 0.0 {
                return Err(invalid(format!(
                    "trapped eigenvalues must be negative, got {lambda}"
                )));
            }
            if !norm_sq.is_finite() || norm_sq <= 0.0 {
                return Err(invalid(format!(
                    "trapped-mode norms must be positive, got {norm_sq}"
                )));
            }
            let values = mt.column(&format!("m{j}"))?;
            ensure_finite("a trapped mode", &values)?;
            states.push(BoundState {
                lambda,
                values,
                norm_sq,
            });
        }
        states
    };
    let rejected_near_threshold = match art.table("rejected") {
        None => Vec::new(),
        Some(rt) => rt.column("lambda")?,
    };
    Ok(SpectralData {
        potential,
        sigma_samples,
        bound_states,
        rejected_near_threshold,
    })
}

/// Writes a kernel field, one row per grid point, heights varying fastest.
pub fn write_kernel(path: impl AsRef<Path>, field: &KernelField) -> Result<()> {
    let nx = field.x.len();
    let nz = field.zeta.len();
    let pieces: [(&str, &Vec<Vec<f64>>); 3] = [
        ("evanescent", &field.evanescent_minus_k0),
        ("radiated", &field.radiated),
        ("trapped", &field.trapped),
    ];
    for (name, m) in pieces {
        if m.len() != nx || m.iter().any(|r| r.len() != nz) {
            return Err(invalid(format!(
                "kernel piece '{name}' does not match the {nx} x {nz} grid"
            )));
        }
    }
    let mut w = Writer::new("kernel");
    w.key_float("f0", field.f0);
    w.key_float("f_star", field.f_star);
    w.key_float("mu_cap", field.mu_cap);
    w.key("mu_nodes", field.mu_nodes);
    w.key("theta_nodes", field.theta_nodes);
    w.key_float("tail_bound", field.tail_bound);
    w.key("nx", nx);
    w.key("nzeta", nz);
    w.table("field", &["x", "zeta", "evanescent", "radiated", "trapped"]);
    for i in 0..nx {
        for j in 0..nz {
            w.row(&[
                field.x[i],
                field.zeta[j],
                field.evanescent_minus_k0[i][j],
                field.radiated[i][j],
                field.trapped[i][j],
            ]);
        }
    }
    w.save(path.as_ref())
}

/// Reads a kernel artifact back into memory.
pub fn read_kernel(path: impl AsRef<Path>) -> Result<KernelField> {
    let art = Artifact::read(path)?;
    art.expect("kernel")?;
    let f0 = art.float_key("f0")?;
    let f_star = art.float_key("f_star")?;
    let mu_cap = art.float_key("mu_cap")?;
    let mu_nodes = art.usize_key("mu_nodes")?;
    let theta_nodes = art.usize_key("theta_nodes")?;
    let tail_bound = art.float_key("tail_bound")?;
    let nx = art.usize_key("nx")?;
    let nz = art.usize_key("nzeta")?;
    let t = art.require_table("field")?;
    if t.rows.len() != nx * nz || nx == 0 || nz == 0 {
        return Err(LeewaveError::Config(format!(
            "kernel table has {} rows for a declared {nx} x {nz} grid",
            t.rows.len()
        )));
    }
    let cx = t.index("x")?;
    let cz = t.index("zeta")?;
    let ce = t.index("evanescent")?;
    let cr = t.index("radiated")?;
    let ct = t.index("trapped")?;
    let x: Vec<f64> = (0..nx).map(|i| t.rows[i * nz][cx]).collect();
    let zeta: Vec<f64> = (0..nz).map(|j| t.rows[j][cz]).collect();
    let mut evanescent_minus_k0 = vec![vec![0.0; nz]; nx];
    let mut radiated = vec![vec![0.0; nz]; nx];
    let mut trapped = vec![vec![0.0; nz]; nx];
    for i in 0..nx {
        for j in 0..nz {
            let row = &t.rows[i * nz + j];
            if row[cx] != x[i] || row[cz] != zeta[j] {
                return Err(invalid("kernel rows are not in grid order"));
            }
            evanescent_minus_k0[i][j] = row[ce];
            radiated[i][j] = row[cr];
            trapped[i][j] = row[ct];
        }
    }
    for m in [&evanescent_minus_k0, &radiated, &trapped] {
        for row in m {
            ensure_finite("the kernel field", row)?;
        }
    }
    let grid = KernelGrid::new(x, zeta)?;
    Ok(KernelField {
        x: grid.x,
        zeta: grid.zeta,
        evanescent_minus_k0,
        radiated,
        trapped,
        f0,
        f_star,
        mu_cap,
        mu_nodes,
        theta_nodes,
        tail_bound,
    })
}

/// Writes tabulated terrain samples.
pub fn write_terrain(path: impl AsRef<Path>, x: &[f64], h: &[f64]) -> Result<()> {
    if x.len() != h.len() {
        return Err(invalid(format!(
            "terrain grids disagree: {} abscissae, {} heights",
            x.len(),
            h.len()
        )));
    }
    let mut w = Writer::new("terrain");
    w.table("samples", &["x", "h"]);
    for (&xi, &hi) in x.iter().zip(h) {
        w.row(&[xi, hi]);
    }
    w.save(path.as_ref())
}

/// Reads tabulated terrain into a sampled profile.
pub fn read_terrain(path: impl AsRef<Path>) -> Result<TerrainProfile> {
    let art = Artifact::read(path)?;
    art.expect("terrain")?;
    let t = art.require_table("samples")?;
    let profile = TerrainProfile::Samples {
        x: t.column("x")?,
        h: t.column("h")?,
    };
    profile.validate()?;
    Ok(profile)
}

/// Which field a matrix file carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldQuantity {
    /// The normal-form field `w`.
    W,
    /// The physical vertical velocity `w / E`.
    WBar,
}

impl FieldQuantity {
    fn name(self) -> &'static str {
        match self {
            FieldQuantity::W => "w",
            FieldQuantity::WBar => "wbar",
        }
    }

    fn select(self, field: &WaveField) -> &[Vec<f64>] {
        match self {
            FieldQuantity::W => &field.w,
            FieldQuantity::WBar => &field.wbar,
        }
    }
}

fn check_field_shape(field: &WaveField) -> Result<()> {
    let nx = field.x.len();
    let nz = field.zeta.len();
    let consistent = field.z.len() == nz
        && field.w.len() == nx
        && field.wbar.len() == nx
        && field.w.iter().all(|r| r.len() == nz)
        && field.wbar.iter().all(|r| r.len() == nz);
    if !consistent {
        return Err(invalid("wave field grids disagree in length"));
    }
    Ok(())
}

/// Writes one field matrix: a heights table, then one row per column of the
/// solution grid with the abscissa first.
pub fn write_field_matrix(
    path: impl AsRef<Path>,
    field: &WaveField,
    which: FieldQuantity,
) -> Result<()> {
    check_field_shape(field)?;
    let nz = field.zeta.len();
    let m = which.select(field);
    let mut w = Writer::new("field-matrix");
    w.key("field", which.name());
    w.key("nx", field.x.len());
    w.key("nheights", nz);
    w.table("heights", &["zeta", "z"]);
    for j in 0..nz {
        w.row(&[field.zeta[j], field.z[j]]);
    }
    let mut cols = vec!["x".to_string()];
    cols.extend((0..nz).map(|j| format!("v{j}")));
    w.table("matrix", &cols);
    for (i, &xi) in field.x.iter().enumerate() {
        let mut row = Vec::with_capacity(nz + 1);
        row.push(xi);
        row.extend_from_slice(&m[i]);
        w.row(&row);
    }
    w.save(path.as_ref())
}

/// Writes the long-format table with one row per grid point: abscissa,
/// physical altitude, normal-form field, physical field.
pub fn write_heatmap(path: impl AsRef<Path>, field: &WaveField) -> Result<()> {
    check_field_shape(field)?;
    let mut w = Writer::new("heatmap");
    w.key("nx", field.x.len());
    w.key("nheights", field.zeta.len());
    w.table("samples", &["x", "z", "w", "wbar"]);
    for (i, &xi) in field.x.iter().enumerate() {
        for (j, &zj) in field.z.iter().enumerate() {
            w.row(&[xi, zj, field.w[i][j], field.wbar[i][j]]);
        }
    }
    w.save(path.as_ref())
}

/// Writes machine-readable diagnostics as ordered key-value pairs.
pub fn write_diagnostics(path: impl AsRef<Path>, entries: &[(String, String)]) -> Result<()> {
    let mut w = Writer::new("diagnostics");
    for (key, value) in entries {
        if key.is_empty()
            || key.contains(char::is_whitespace)
            || key == "table"
            || key == "columns"
        {
            return Err(invalid(format!("unusable diagnostics key '{key}'")));
        }
        w.key(key, value);
    }
    w.save(path.as_ref())
}
