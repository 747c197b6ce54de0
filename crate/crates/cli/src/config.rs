use std::path::{Path, PathBuf};

use anyhow::bail;
use clap::Args;
use serde::Deserialize;

use porestokes::calibrate::{BoundaryMode, FitOptions};
use porestokes::ddpnm::{DdpnmOptions, DtnTolerances};
use porestokes::fem::{SaddleMethod, SaddleOptions};

/// Options shared by every subcommand. Any of them may also come from the
/// `--config` JSON file; flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunArgs {
    /// Geometry JSON file.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Build a structured grid mesh with this spacing (rectangular solids
    /// only).
    #[arg(long)]
    pub structured_h: Option<f64>,
    /// Mesh node file (with --mesh-eles and --mesh-edges).
    #[arg(long)]
    pub mesh_nodes: Option<PathBuf>,
    #[arg(long)]
    pub mesh_eles: Option<PathBuf>,
    #[arg(long)]
    pub mesh_edges: Option<PathBuf>,
    /// Uniform refinement levels applied to the mesh.
    #[arg(long)]
    pub refine: Option<usize>,
    /// Random interface displacement bound ε.
    #[arg(long)]
    pub perturb: Option<f64>,
    /// Seed for the perturbation (defaults to the geometry's seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pore-level worker threads (defaults to all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Saddle solver: direct or pressure-schur-cg.
    #[arg(long, value_parser = kebab::<SaddleMethod>)]
    pub saddle_method: Option<SaddleMethod>,
    /// Relative residual of every saddle solve.
    #[arg(long)]
    pub tol_saddle: Option<f64>,
    /// Relative residual of the interface Schur solve.
    #[arg(long)]
    pub tol_interface: Option<f64>,
    /// Relative tolerance of the DtN symmetry and row-sum checks.
    #[arg(long)]
    pub tol_dtn: Option<f64>,
    /// Relative objective change that stops a calibration fit.
    #[arg(long)]
    pub tol_fit: Option<f64>,
    #[arg(long)]
    pub max_fit_iters: Option<usize>,
    /// Boundary faces in the calibrated network: terminal or pore-pressure.
    #[arg(long, value_parser = kebab::<BoundaryMode>)]
    pub boundary_mode: Option<BoundaryMode>,
    /// JSON file providing defaults for any of these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Parses a kebab-case enum value through its serde representation.
fn kebab<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

/// Where the mesh comes from.
#[derive(Debug, Clone)]
pub enum MeshSource {
    Structured(f64),
    Files { nodes: PathBuf, eles: PathBuf, edges: PathBuf },
}

impl RunArgs {
    /// Fills unset options from the `--config` file, if any.
    pub fn resolve(mut self) -> anyhow::Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|e| input_error(format!("reading config {}: {e}", path.display())))?;
        let file: RunArgs = serde_json::from_str(&text)
            .map_err(|e| input_error(format!("parsing config {}: {e}", path.display())))?;
        overlay!(
            self, file, geometry, structured_h, mesh_nodes, mesh_eles, mesh_edges, refine, perturb, seed, workers, out,
            saddle_method, tol_saddle, tol_interface, tol_dtn, tol_fit, max_fit_iters, boundary_mode
        );
        Ok(self)
    }

    pub fn geometry(&self) -> anyhow::Result<&Path> {
        self.geometry.as_deref().ok_or_else(|| input_error("--geometry is required"))
    }

    pub fn out_dir(&self) -> anyhow::Result<PathBuf> {
        let dir = self.out.clone().ok_or_else(|| input_error("--out is required"))?;
        std::fs::create_dir_all(&dir)
            .map_err(|e| input_error(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(dir)
    }

    pub fn mesh_source(&self) -> anyhow::Result<MeshSource> {
        let files = [&self.mesh_nodes, &self.mesh_eles, &self.mesh_edges];
        let n_files = files.iter().filter(|f| f.is_some()).count();
        match (self.structured_h, n_files) {
            (Some(h), 0) => Ok(MeshSource::Structured(h)),
            (None, 3) => Ok(MeshSource::Files {
                nodes: self.mesh_nodes.clone().unwrap(),
                eles: self.mesh_eles.clone().unwrap(),
                edges: self.mesh_edges.clone().unwrap(),
            }),
            (None, 0) => Err(input_error("a mesh is required: --structured-h or --mesh-nodes/--mesh-eles/--mesh-edges")),
            (Some(_), _) => Err(input_error("give either --structured-h or mesh files, not both")),
            _ => Err(input_error("--mesh-nodes, --mesh-eles and --mesh-edges must be given together")),
        }
    }

    pub fn saddle(&self) -> SaddleOptions {
        let mut o = SaddleOptions::default();
        if let Some(m) = self.saddle_method {
            o.method = m;
        }
        if let Some(t) = self.tol_saddle {
            o.tol = t;
        }
        o
    }

    pub fn ddpnm(&self) -> DdpnmOptions {
        let mut dtn = DtnTolerances::default();
        if let Some(t) = self.tol_dtn {
            dtn.symmetry = t;
            dtn.row_sum = t;
        }
        DdpnmOptions {
            saddle: self.saddle(),
            dtn,
            interface_tol: self.tol_interface.unwrap_or(DdpnmOptions::default().interface_tol),
        }
    }

    pub fn fit(&self) -> FitOptions {
        let mut o = FitOptions::default();
        if let Some(t) = self.tol_fit {
            o.tol = t;
        }
        if let Some(n) = self.max_fit_iters {
            o.max_iters = n;
        }
        o
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if let Some(e) = self.perturb {
            if !(e >= 0.0 && e.is_finite()) {
                bail!(input_error(format!("--perturb must be a nonnegative number, got {e}")));
            }
        }
        if let Some(h) = self.structured_h {
            if !(h > 0.0 && h.is_finite()) {
                bail!(input_error(format!("--structured-h must be positive, got {h}")));
            }
        }
        if self.workers == Some(0) {
            bail!(input_error("--workers must be at least 1"));
        }
        Ok(())
    }
}

/// Error caused by the user's input (exit code 2).
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

pub trait InputContext<T> {
    fn input_context(self, msg: impl FnOnce() -> String) -> anyhow::Result<T>;
}

impl<T, E: std::fmt::Display> InputContext<T> for Result<T, E> {
    fn input_context(self, msg: impl FnOnce() -> String) -> anyhow::Result<T> {
        self.map_err(|e| input_error(format!("{}: {e}", msg())))
    }
}

