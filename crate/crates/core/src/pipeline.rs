//! Configuration, stage orchestration and artifact writing for the command-line tool.

use crate::correction_one::FirstCorrection;
use crate::correction_two::{ProfileConfig, SecondCorrection, DEFAULT_BUMP, DEFAULT_DEPTH};
use crate::error::{Error, Result};
use crate::profile;
use crate::residual::certify_e2_bound;
use crate::scaling::ScalingParams;
use crate::simulator::{self, RunReport, SimConfig};
use crate::spectral::{find_xi_d, SpectralConfig, SpectralData, ODE_TOL};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment overrides: `QBLOW_THREADS`, `QBLOW_SCALING__NU`, `QBLOW_SIMULATE__TAU1`, ...
pub const ENV_PREFIX: &str = "QBLOW_";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_GATE: i32 = 4;

/// Largest admissible series tail bound.
pub const TAIL_GATE: f64 = 1e-8;
/// Largest admissible ratio between consecutive certified slice sups.
pub const SLICE_RATIO_GATE: f64 = 3.0;
/// Largest admissible transform round-trip and diagonalization error.
pub const TRANSFORM_GATE: f64 = 1e-3;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Validation(_) => EXIT_VALIDATION,
        Error::TruncationOverflow { .. } | Error::Numerical(_) | Error::Divergence(_) => EXIT_NUMERICAL,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecursionConfig {
    pub depth: usize,
    pub n_max_time: usize,
    /// Width b₁ of the smoothstep continuing u₂ past the cone.
    pub bump: f64,
    /// Radial resolution of the residual scan per slice.
    pub certify_resolution: usize,
    /// Certified slices t₀/2, t₀/4, ...
    pub certify_slices: usize,
}

impl Default for RecursionConfig {
    fn default() -> Self {
        Self { depth: DEFAULT_DEPTH, n_max_time: 8, bump: DEFAULT_BUMP, certify_resolution: 400, certify_slices: 3 }
    }
}

impl RecursionConfig {
    pub fn profile(&self) -> ProfileConfig {
        ProfileConfig { depth: self.depth, n_max_time: self.n_max_time, bump: self.bump }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub svg: bool,
    /// Log-spaced radii in the profile tables.
    pub profile_points: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), svg: false, profile_points: 241 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Worker threads; 0 keeps the runtime default.
    pub threads: usize,
    pub scaling: ScalingParams,
    pub recursion: RecursionConfig,
    pub spectral: SpectralConfig,
    pub simulate: SimConfig,
    pub output: OutputConfig,
}

impl Config {
    /// Parses TOML text, applies `QBLOW_` overrides from `env`, and validates.
    pub fn from_toml_with_env(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Validation(format!("config: {e}")))?;
        for (k, v) in env {
            let Some(rest) = k.strip_prefix(ENV_PREFIX) else { continue };
            let path: Vec<String> = rest.split("__").map(|s| s.to_ascii_lowercase()).collect();
            apply_override(&mut table, &path, &v)?;
        }
        let cfg: Config = table.try_into().map_err(|e| Error::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Validation(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_with_env(&text, std::env::vars())
    }

    /// Every violated rule, prefixed with its key path.
    pub fn violations(&self, stages: &[Stage]) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |key: &str, ok: bool, why: &str| {
            if !ok {
                out.push(format!("{key}: {why}"));
            }
        };
        let r = &self.recursion;
        check("recursion.depth", r.depth >= 1, "must be at least 1");
        check("recursion.bump", r.bump > 0.0 && r.bump.is_finite(), "must be positive");
        check("recursion.certify_resolution", r.certify_resolution >= 10, "must be at least 10");
        check("recursion.certify_slices", r.certify_slices >= 2, "must be at least 2");
        check("output.profile_points", self.output.profile_points >= 2, "must be at least 2");
        let mut results = vec![
            ("scaling", self.scaling.validate()),
            ("spectral", self.spectral.validate()),
            ("simulate", self.simulate.validate()),
        ];
        if stages.iter().any(|s| s.needs_recursion()) {
            results.push(("scaling.nu", self.scaling.validate_level(1)));
            results.push(("scaling.nu", self.scaling.validate_level(2)));
        }
        for (key, r) in results {
            if let Err(e) = r {
                out.push(format!("{key}: {e}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_for(&[])
    }

    pub fn validate_for(&self, stages: &[Stage]) -> Result<()> {
        let v = self.violations(stages);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v.join("; ")))
        }
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> Result<String> {
        let text = toml::to_string(self).map_err(|e| Error::Numerical(format!("config serialization: {e}")))?;
        Ok(hex(&Sha256::digest(text.as_bytes())))
    }
}

fn apply_override(table: &mut toml::Table, path: &[String], raw: &str) -> Result<()> {
    let (last, parents) = path.split_last().ok_or_else(|| Error::Validation("empty override key".into()))?;
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Validation(format!("override path {} is not a section", path.join("."))))?;
    }
    // Parse as a TOML value when possible, otherwise keep the raw string.
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    cur.insert(last.clone(), value);
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Caps the global worker pool; a second call keeps the first setting.
pub fn configure_threads(n: usize) {
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    DumpProfiles,
    BuildV1,
    BuildProfile,
    Certify,
    Spectral,
    Simulate,
}

impl Stage {
    pub const ALL: [Stage; 6] =
        [Stage::DumpProfiles, Stage::BuildV1, Stage::BuildProfile, Stage::Certify, Stage::Spectral, Stage::Simulate];

    pub fn name(self) -> &'static str {
        match self {
            Stage::DumpProfiles => "dump-profiles",
            Stage::BuildV1 => "build-v1",
            Stage::BuildProfile => "build-profile",
            Stage::Certify => "certify",
            Stage::Spectral => "spectral",
            Stage::Simulate => "simulate",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name() == s)
    }

    fn needs_recursion(self) -> bool {
        matches!(self, Stage::BuildProfile | Stage::Certify | Stage::Simulate)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub stages: Vec<String>,
    pub versions: BTreeMap<String, String>,
    pub constants: BTreeMap<String, f64>,
    /// Gate name → passed.
    pub gates: BTreeMap<String, bool>,
    pub files: Vec<FileEntry>,
    /// Wall-clock seconds per stage; the only field that varies between identical runs.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn failed_gates(&self) -> Vec<&str> {
        self.gates.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k.as_str()).collect()
    }
}

/// Per-stage path overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub spectral_out: Option<PathBuf>,
    pub simulate_out: Option<PathBuf>,
    pub svg: Option<bool>,
}

pub struct Pipeline {
    pub config: Config,
    pub manifest: RunManifest,
    out_dir: PathBuf,
    overrides: Overrides,
    first: Option<FirstCorrection>,
    second: Option<SecondCorrection>,
    pub simulation: Option<RunReport>,
}

const MODULES: [&str; 8] =
    ["scaling", "profile", "correction_one", "correction_two", "residual", "spectral", "simulator", "pipeline"];

impl Pipeline {
    pub fn new(config: Config, overrides: Overrides) -> Result<Self> {
        config.validate()?;
        let out_dir = overrides.out_dir.clone().unwrap_or_else(|| config.output.dir.clone());
        let version = env!("CARGO_PKG_VERSION").to_string();
        let mut manifest = RunManifest { config_hash: config.hash()?, ..Default::default() };
        manifest.versions.insert(env!("CARGO_PKG_NAME").to_string(), version.clone());
        for m in MODULES {
            manifest.versions.insert(m.to_string(), version.clone());
        }
        Ok(Self { config, manifest, out_dir, overrides, first: None, second: None, simulation: None })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Runs `stages` in pipeline order and writes the manifest. Gate failures are recorded,
    /// not raised; errors abort.
    pub fn run(&mut self, stages: &[Stage]) -> Result<&RunManifest> {
        self.config.validate_for(stages)?;
        configure_threads(self.config.threads);
        std::fs::create_dir_all(&self.out_dir).map_err(io_err(&self.out_dir))?;
        let mut order: Vec<Stage> = stages.to_vec();
        order.sort();
        order.dedup();
        for st in order {
            let start = Instant::now();
            self.run_stage(st)?;
            self.manifest.stages.push(st.name().to_string());
            self.manifest.timings.insert(st.name().to_string(), start.elapsed().as_secs_f64());
        }
        self.write_manifest()?;
        Ok(&self.manifest)
    }

    fn run_stage(&mut self, st: Stage) -> Result<()> {
        match st {
            Stage::DumpProfiles => self.dump_profiles(),
            Stage::BuildV1 => self.build_v1(),
            Stage::BuildProfile => self.build_profile(),
            Stage::Certify => self.certify(),
            Stage::Spectral => self.spectral(),
            Stage::Simulate => self.simulate(),
        }
    }

    fn radii(&self) -> Vec<f64> {
        let n = self.config.output.profile_points;
        (0..n).map(|k| 10f64.powf(-2.0 + 6.0 * k as f64 / (n - 1) as f64)).collect()
    }

    fn dump_profiles(&mut self) -> Result<()> {
        let mut rows = Vec::new();
        for r in self.radii() {
            rows.push(vec![
                r,
                profile::w(r),
                profile::phi1(r),
                profile::phi2(r)?,
                profile::phi_tilde1(r),
                profile::phi_tilde2(r),
                profile::g1(r),
                profile::g2(r),
                profile::potential(r),
            ]);
        }
        let cols = ["R", "W", "phi1", "phi2", "phi_tilde1", "phi_tilde2", "g1", "g2", "potential"];
        self.write_csv(None, "profiles.csv", &cols, &rows)
    }

    fn first(&mut self) -> Result<&FirstCorrection> {
        if self.first.is_none() {
            self.first = Some(FirstCorrection::build(&self.config.scaling, self.config.recursion.n_max_time)?);
        }
        Ok(self.first.as_ref().unwrap())
    }

    fn second(&mut self) -> Result<&SecondCorrection> {
        if self.second.is_none() {
            let first = self.first()?.clone();
            self.second = Some(SecondCorrection::from_first(first, &self.config.recursion.profile())?);
        }
        Ok(self.second.as_ref().unwrap())
    }

    fn build_v1(&mut self) -> Result<()> {
        let radii = self.radii();
        let fc = self.first()?;
        let mut rows = Vec::new();
        for r in radii {
            rows.push(vec![r, fc.f[0].eval(r)?, fc.f[1].eval(r)?, fc.f[0].l0_residual(r)?, fc.f[1].l0_residual(r)?]);
        }
        let heads: Vec<(String, f64)> = (0..2)
            .flat_map(|j| {
                let h = &fc.f[j].head;
                [(format!("b1_{}", j + 1), h.b1), (format!("b2_{}", j + 1), h.b2), (format!("b3_{}", j + 1), h.b3())]
            })
            .collect();
        self.manifest.constants.extend(heads);
        self.write_csv(None, "first_correction.csv", &["R", "f1", "f2", "l0_residual_1", "l0_residual_2"], &rows)
    }

    fn build_profile(&mut self) -> Result<()> {
        let sc = self.second()?;
        let reports = [sc.q[0].certify()?, sc.q[1].certify()?];
        let depth = reports[0].per_level.len().max(reports[1].per_level.len());
        let rows: Vec<Vec<f64>> = (0..depth)
            .map(|n| {
                let g = |k: usize| reports[k].per_level.get(n).copied().unwrap_or(f64::NAN);
                vec![(n + 1) as f64, g(0), g(1)]
            })
            .collect();
        for (j, g) in reports.iter().enumerate() {
            self.manifest.constants.insert(format!("c0_q{}", j + 1), g.c0);
            self.manifest.constants.insert(format!("c0_drift_q{}", j + 1), g.drift);
            self.manifest.constants.insert(format!("tail_bound_q{}", j + 1), g.tail_bound);
            self.manifest.gates.insert(format!("series_tail_q{}", j + 1), g.tail_bound < TAIL_GATE);
        }
        self.write_csv(None, "growth.csv", &["n", "growth_q1", "growth_q2"], &rows)
    }

    fn certify(&mut self) -> Result<()> {
        let (t0, k, res) =
            (self.config.scaling.t0, self.config.recursion.certify_slices, self.config.recursion.certify_resolution);
        let ts: Vec<f64> = (1..=k).map(|j| t0 * 0.5f64.powi(j as i32)).collect();
        let rep = certify_e2_bound(self.second()?, &ts, res)?;
        let rows: Vec<Vec<f64>> = rep
            .slices
            .iter()
            .zip(rep.energy_in.iter().zip(&rep.energy_out))
            .map(|(s, (ei, eo))| vec![s.t, s.mu, s.sup, s.argmax, s.near_origin, *ei, *eo])
            .collect();
        for (j, s) in rep.slices.iter().enumerate() {
            self.manifest.constants.insert(format!("e2_sup_slice{}", j + 1), s.sup);
        }
        let ratio = rep.max_step_ratio();
        self.manifest.constants.insert("e2_max_step_ratio".into(), ratio);
        self.manifest.gates.insert("e2_slices_within_factor".into(), ratio <= SLICE_RATIO_GATE);
        let cols = ["t", "mu", "sup", "argmax", "near_origin", "energy_in", "energy_out"];
        self.write_csv(None, "residual.csv", &cols, &rows)
    }

    fn spectral(&mut self) -> Result<()> {
        let sd = SpectralData::build(&self.config.spectral)?;
        let (rt, dg) = sd.bump_check(3.0, 2.0)?;
        let c = &mut self.manifest.constants;
        c.insert("xi_d".into(), sd.xi_d);
        c.insert("phi_d_norm2".into(), sd.phi_d_norm2);
        c.insert("transform_round_trip".into(), rt);
        c.insert("transform_diagonalization".into(), dg);
        self.manifest.gates.insert("transform_round_trip".into(), rt <= TRANSFORM_GATE);
        self.manifest.gates.insert("transform_diagonalization".into(), dg <= TRANSFORM_GATE);
        let dens: Vec<Vec<f64>> = (0..sd.xi.len()).map(|i| vec![sd.xi[i], sd.rho[i], sd.a_amp[i].re, sd.a_amp[i].im]).collect();
        let bound: Vec<Vec<f64>> = sd.r.iter().zip(&sd.phi_d).map(|(r, p)| vec![*r, *p]).collect();
        let dens_path = self.overrides.spectral_out.clone();
        self.write_csv(dens_path, "spectral_density.csv", &["xi", "rho", "amp_re", "amp_im"], &dens)?;
        self.write_csv(None, "bound_state.csv", &["R", "phi_d"], &bound)
    }

    fn simulate(&mut self) -> Result<()> {
        let cfg = self.config.simulate.clone();
        let rep = simulator::run(self.second()?, &cfg)?;
        let c = &mut self.manifest.constants;
        c.insert("sim_steps".into(), rep.steps as f64);
        c.insert("sim_r_max".into(), rep.r_max);
        c.insert("sim_max_sup_eps".into(), rep.max_sup_eps);
        if let Some(e) = rep.energy_exponent {
            c.insert("sim_energy_exponent".into(), e);
        }
        self.manifest.gates.insert("sim_perturbation_small".into(), rep.max_sup_eps < 1.0);
        let rows: Vec<Vec<f64>> = rep
            .samples
            .iter()
            .map(|s| vec![s.tau, s.t, s.energy_in, s.energy_out, s.sup_eps, s.lambda_fit, s.kappa_eff])
            .collect();
        let cols = ["tau", "t", "energy_in", "energy_out", "sup_eps", "lambda_fit", "kappa_eff"];
        let path = self.overrides.simulate_out.clone();
        self.write_csv(path, "trajectory.csv", &cols, &rows)?;
        if self.overrides.svg.unwrap_or(self.config.output.svg) {
            let pts: Vec<(f64, f64)> =
                rep.samples.iter().filter(|s| s.energy_in > 0.0).map(|s| (s.tau, s.energy_in.log10())).collect();
            let svg = polyline_svg(&pts, "tau", "log10 energy_in");
            self.write_file(None, "trajectory.svg", svg.into_bytes())?;
        }
        self.simulation = Some(rep);
        Ok(())
    }

    fn write_csv(&mut self, path: Option<PathBuf>, default: &str, cols: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        self.write_file(path, default, csv_text(cols, rows).into_bytes())
    }

    fn write_file(&mut self, path: Option<PathBuf>, default: &str, bytes: Vec<u8>) -> Result<()> {
        let path = path.unwrap_or_else(|| self.out_dir.join(default));
        if let Some(d) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(d).map_err(io_err(d))?;
        }
        std::fs::write(&path, &bytes).map_err(io_err(&path))?;
        let name = path.strip_prefix(&self.out_dir).unwrap_or(&path).display().to_string();
        self.manifest.files.retain(|f| f.name != name);
        self.manifest.files.push(FileEntry { name, bytes: bytes.len() as u64, sha256: hex(&Sha256::digest(&bytes)) });
        Ok(())
    }

    fn write_manifest(&self) -> Result<()> {
        let text = toml::to_string(&self.manifest).map_err(|e| Error::Numerical(format!("manifest serialization: {e}")))?;
        let p = self.out_dir.join("manifest.toml");
        std::fs::write(&p, text).map_err(io_err(&p))
    }
}

/// ξ_d alone, without building the transform tables.
pub fn xi_d_only(cfg: &Config) -> Result<f64> {
    Ok(find_xi_d(cfg.spectral.tol.min(ODE_TOL), 1.0, 250)?.xi_d)
}

fn io_err(p: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Validation(format!("{}: {e}", p.display()))
}

/// Header row plus floats in 17 significant digits.
pub fn csv_text(cols: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = cols.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|x| format!("{x:.16e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Minimal line plot.
pub fn polyline_svg(pts: &[(f64, f64)], xlabel: &str, ylabel: &str) -> String {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let fin = pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite());
    let (x0, x1, y0, y1) = fin
        .clone()
        .fold((f64::MAX, f64::MIN, f64::MAX, f64::MIN), |a, (x, y)| (a.0.min(*x), a.1.max(*x), a.2.min(*y), a.3.max(*y)));
    let sx = |x: f64| m + (w - 2.0 * m) * if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.5 };
    let sy = |y: f64| h - m - (h - 2.0 * m) * if y1 > y0 { (y - y0) / (y1 - y0) } else { 0.5 };
    let path: Vec<String> = fin.map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <polyline fill=\"none\" stroke=\"black\" points=\"{}\"/>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"12\">{xlabel} [{x0:.4e}, {x1:.4e}]</text>\n\
         <text x=\"5\" y=\"20\" font-size=\"12\">{ylabel} [{y0:.4e}, {y1:.4e}]</text>\n</svg>\n",
        path.join(" "),
        m,
        h - 10.0
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env() -> Vec<(String, String)> {
        vec![]
    }

    #[test]
    fn empty_config_is_the_default() {
        let c = Config::from_toml_with_env("", no_env()).unwrap();
        assert_eq!(c, Config::default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_section() {
        let e = Config::from_toml_with_env("[scaling]\nnu = 3.5\nfoo = 1\n", no_env()).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("foo") && msg.contains("scaling"), "{msg}");
        assert_eq!(exit_code(&e), EXIT_VALIDATION);
    }

    #[test]
    fn env_overrides_reach_nested_keys() {
        let env = vec![
            ("QBLOW_SCALING__EPS0".to_string(), "0.0".to_string()),
            ("QBLOW_THREADS".to_string(), "2".to_string()),
            ("QBLOW_OUTPUT__DIR".to_string(), "elsewhere".to_string()),
            ("UNRELATED".to_string(), "x".to_string()),
        ];
        let c = Config::from_toml_with_env("[scaling]\neps0 = 0.02\n", env).unwrap();
        assert_eq!(c.scaling.eps0, 0.0);
        assert_eq!(c.threads, 2);
        assert_eq!(c.output.dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn level_one_below_threshold_is_rejected() {
        let c = Config::from_toml_with_env("[scaling]\nnu = 2.0\n", no_env()).unwrap();
        let e = c.validate_for(&[Stage::BuildProfile]).unwrap_err();
        assert!(e.to_string().contains("scaling.nu"), "{e}");
        assert!(c.validate_for(&[Stage::DumpProfiles]).is_ok());
    }

    #[test]
    fn violations_carry_key_paths() {
        let mut c = Config::default();
        c.simulate.cfl = 0.9;
        c.recursion.certify_slices = 1;
        let v = c.violations(&[]);
        assert!(v.iter().any(|m| m.starts_with("simulate")));
        assert!(v.iter().any(|m| m.starts_with("recursion.certify_slices")));
    }

    #[test]
    fn csv_uses_seventeen_significant_digits() {
        let s = csv_text(&["a", "b"], &[vec![1.0 / 3.0, -2.5e-300]]);
        assert_eq!(s, "a,b\n3.3333333333333331e-1,-2.5000000000000000e-300\n");
        let back: f64 = s.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = Config::default();
        let mut b = a.clone();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.scaling.eps0 = 0.0;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(Stage::parse(s.name()), Some(s));
        }
        assert_eq!(Stage::parse("nope"), None);
    }

    #[test]
    fn svg_is_a_single_polyline() {
        let s = polyline_svg(&[(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)], "x", "y");
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(s.contains("50.00,350.00") && s.contains("590.00,50.00"));
    }
}
