//! Pore-scale Stokes flow in 2-D porous geometries.
//!
//! Three solvers share one geometry and mesh layer: a monolithic
//! Taylor–Hood finite-element reference ([`fem`]), a domain-decomposition
//! pore-network method that couples per-pore Dirichlet-to-Neumann maps
//! through scalar interface tractions ([`ddpnm`]), and a classical pore
//! network with Hagen–Poiseuille throats ([`cpnm`]). [`calibrate`] recovers
//! network conductances from the DtN maps.
//!
//! Everything numeric is generic over [`scalar::Real`]; the aliases at the
//! crate root fix the scalar to `f64`.

pub mod calibrate;
pub mod cpnm;
pub mod ddpnm;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod scalar;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GeometrySpec = geometry::GeometrySpec<f64>;
pub type NetworkTopology = geometry::NetworkTopology<f64>;
pub type InterfaceSegment = geometry::InterfaceSegment<f64>;
pub type Mesh = mesh::Mesh<f64>;
pub type SubdomainMesh = mesh::SubdomainMesh<f64>;
pub type FlowField = fem::FlowField<f64>;
pub type StokesOperators = fem::StokesOperators<f64>;
pub type DdpnmSolution = ddpnm::DdpnmSolution<f64>;
pub type DtNMap = ddpnm::DtNMap<f64>;
pub type PoreNetwork = cpnm::PoreNetwork<f64>;
pub type NetworkSolution = cpnm::NetworkSolution<f64>;
pub type Calibration = calibrate::Calibration<f64>;
