//! Run configuration files.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::averaging::{hermite_rule, QuadratureRule};
use crate::error::{Error, Result};
use crate::fields::{make_builtin, Builtin, Field, Params};
use crate::integrators::{Scheme, SchemeConfig};
use crate::packet::{CanonicalState, GaussianPacket, C64};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that redirects all output files into a directory.
pub const OUT_DIR_ENV: &str = "MAGWAVE_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub builtin: String,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    pub eps: f64,
    pub q0: Vec<f64>,
    pub p0: Vec<f64>,
    #[serde(rename = "Q0_re")]
    pub q0_re: Vec<Vec<f64>>,
    #[serde(rename = "Q0_im")]
    pub q0_im: Vec<Vec<f64>>,
    #[serde(rename = "P0_re")]
    pub p0_re: Vec<Vec<f64>>,
    #[serde(rename = "P0_im")]
    pub p0_im: Vec<Vec<f64>>,
    #[serde(rename = "S0", default)]
    pub s0: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default)]
    pub t0: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub name: String,
    #[serde(default = "default_guard")]
    pub guard: f64,
}

fn default_guard() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(rename = "N")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_every")]
    pub every: usize,
    pub path: String,
}

fn default_every() -> usize {
    1
}

/// Raw file contents, before validation.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub experiment: ExperimentSection,
    pub packet: PacketSection,
    pub time: TimeSection,
    pub scheme: SchemeSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    pub output: OutputSection,
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub builtin_id: String,
    pub params: Params,
    pub field: Builtin,
    pub packet: GaussianPacket,
    pub t0: f64,
    pub t_end: f64,
    pub scheme: SchemeConfig,
    pub quad_n: usize,
    pub output_every: usize,
    pub out_path: PathBuf,
}

/// Nodes per axis used when a config does not set one.
pub fn default_nodes(builtin: &str) -> usize {
    match builtin {
        "penning" => 5,
        "sym_translation" | "sym_rotation" => 11,
        _ => 7,
    }
}

fn matrix(rows: &[Vec<f64>], d: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Config(format!("{name} must be a {d}x{d} array of rows")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn complex(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<C64> {
    re.zip_map(im, C64::new)
}

/// Number of steps of size `tau` covering `[t0, t_end]`.
pub fn step_count(t0: f64, t_end: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    if !(t_end >= t0) {
        return Err(Error::Config(format!("T = {t_end} precedes t0 = {t0}")));
    }
    let ratio = (t_end - t0) / tau;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-12 * ratio.max(1.0) {
        return Err(Error::Config(format!(
            "tau = {tau} does not divide the interval [{t0}, {t_end}]"
        )));
    }
    Ok(n as usize)
}

impl RunConfig {
    pub fn from_file(file: ConfigFile) -> Result<Self> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let field = make_builtin(&file.experiment.builtin, &file.experiment.params)?;
        let d = field.dim();
        let pk = &file.packet;
        if pk.q0.len() != d || pk.p0.len() != d {
            return Err(Error::Config(format!(
                "{} is {d}-dimensional but q0, p0 have lengths {}, {}",
                file.experiment.builtin,
                pk.q0.len(),
                pk.p0.len()
            )));
        }
        let q_mat = complex(&matrix(&pk.q0_re, d, "Q0_re")?, &matrix(&pk.q0_im, d, "Q0_im")?);
        let p_mat = complex(&matrix(&pk.p0_re, d, "P0_re")?, &matrix(&pk.p0_im, d, "P0_im")?);
        let packet = GaussianPacket::new(
            pk.eps,
            DVector::from_column_slice(&pk.q0),
            DVector::from_column_slice(&pk.p0),
            q_mat,
            p_mat,
            pk.s0,
        )?;
        let time = &file.time;
        step_count(time.t0, time.t_end, time.tau)?;
        let scheme: Scheme = file.scheme.name.parse()?;
        if scheme == Scheme::Symplectic4 && field.is_time_dependent() {
            return Err(Error::TimeDependentUnsupported);
        }
        if !(file.scheme.guard > 0.0) {
            return Err(Error::Config("scheme.guard must be positive".into()));
        }
        let quad_n = file.quadrature.n.unwrap_or_else(|| default_nodes(&file.experiment.builtin));
        if quad_n == 0 {
            return Err(Error::Config("quadrature.N must be at least 1".into()));
        }
        if file.output.every == 0 {
            return Err(Error::Config("output.every must be at least 1".into()));
        }
        Ok(RunConfig {
            builtin_id: file.experiment.builtin.clone(),
            params: file.experiment.params.clone(),
            field,
            packet,
            t0: time.t0,
            t_end: time.t_end,
            scheme: SchemeConfig {
                scheme,
                tau: time.tau,
                guard: file.scheme.guard,
            },
            quad_n,
            output_every: file.output.every,
            out_path: PathBuf::from(&file.output.path),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    pub fn steps(&self) -> usize {
        step_count(self.t0, self.t_end, self.scheme.tau).expect("validated on construction")
    }

    pub fn rule(&self) -> QuadratureRule {
        hermite_rule(self.quad_n)
    }

    pub fn initial_state(&self) -> CanonicalState {
        self.packet.vectorize(self.t0)
    }

    /// Same run with another step size.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        step_count(self.t0, self.t_end, tau)?;
        let mut out = self.clone();
        out.scheme.tau = tau;
        Ok(out)
    }

    /// Where the CSV goes, honouring the output-directory override.
    pub fn resolved_out_path(&self) -> PathBuf {
        resolve_out_path(&self.out_path)
    }
}

pub fn resolve_out_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => {
            let name = path.file_name().map(PathBuf::from).unwrap_or_else(|| path.to_path_buf());
            PathBuf::from(dir).join(name)
        }
        _ => path.to_path_buf(),
    }
}
