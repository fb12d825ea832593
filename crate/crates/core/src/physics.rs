//! Model data: material parameters and their dimensionless form, the
//! lower-order effective field, the discrete free energy, and the initial
//! and boundary data used by the experiments.

use crate::fvem::{discrete_h1_seminorm, VectorField3};
use crate::mesh::{DualGeometry, TriMesh};
use crate::vec3::{self, Vec3};
use crate::{Error, Result, Scalar};

/// Vacuum permeability in T·m/A.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;
/// Electron gyromagnetic ratio in rad/(s·T).
pub const GAMMA_E: f64 = 1.76086e11;

/// SI material description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams<T> {
    /// Saturation magnetization (A/m).
    pub ms: T,
    /// Exchange constant (J/m).
    pub a_ex: T,
    /// Uniaxial anisotropy constant (J/m³).
    pub ku: T,
    pub mu0: T,
    pub gamma: T,
    pub alpha: T,
    /// Length scale mapping one dimensionless unit to metres.
    pub length: T,
}

impl<T: Scalar> MaterialParams<T> {
    /// Permalloy-like film used by the micromagnetics examples
    /// (`Ms = 8e5 A/m`, `A = 1.3e-11 J/m`).
    pub fn permalloy(ku: f64, alpha: f64, length: f64) -> Self {
        Self {
            ms: T::lit(8.0e5),
            a_ex: T::lit(1.3e-11),
            ku: T::lit(ku),
            mu0: T::lit(MU0),
            gamma: T::lit(GAMMA_E),
            alpha: T::lit(alpha),
            length: T::lit(length),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("Ms", self.ms),
            ("A", self.a_ex),
            ("mu0", self.mu0),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("L", self.length),
        ];
        for (name, v) in pos {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.ku >= T::zero() && self.ku.is_finite()) {
            return Err(Error::InvalidParameter(format!("Ku must be >= 0, got {}", self.ku)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AnisotropyAxis {
    /// Easy axis `e1`: penalizes `m2` and `m3`.
    #[default]
    E1,
    /// Easy axis `e3`: penalizes `m1` and `m2`.
    E3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimensionlessParams<T> {
    /// Exchange coefficient `ε`.
    pub eps: T,
    /// Anisotropy coefficient `q`.
    pub q: T,
    pub alpha: T,
    /// External field `h_e`.
    pub h_e: Vec3<T>,
    pub anisotropy_axis: AnisotropyAxis,
    /// Include the thin-film stray-field term `-m3 e3`.
    pub stray_field: bool,
    /// Seconds per dimensionless time unit, when derived from SI data.
    pub time_unit: Option<T>,
}

impl<T: Scalar> DimensionlessParams<T> {
    /// Exchange-only model `∂t m = -m×Δm - α m×(m×Δm)`.
    pub fn exchange_only(alpha: T) -> Self {
        Self {
            eps: T::one(),
            q: T::zero(),
            alpha,
            h_e: vec3::zero(),
            anisotropy_axis: AnisotropyAxis::E1,
            stray_field: false,
            time_unit: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > T::zero() && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be > 0, got {}", self.eps)));
        }
        if !(self.q >= T::zero() && self.q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q must be >= 0, got {}", self.q)));
        }
        if !(self.alpha >= T::zero() && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !vec3::is_finite(self.h_e) {
            return Err(Error::InvalidParameter("external field must be finite".into()));
        }
        Ok(())
    }

    /// Converts a duration in seconds to dimensionless time.
    pub fn seconds_to_time(&self, seconds: T) -> Result<T> {
        match self.time_unit {
            Some(u) => Ok(seconds / u),
            None => Err(Error::InvalidParameter("no SI time unit attached to these parameters".into())),
        }
    }
}

/// `ε = 2A/(μ0 Ms² L²)`, `q = 2Ku/(μ0 Ms²)`, time unit `1/(μ0 γ Ms)`.
pub fn nondimensionalize<T: Scalar>(p: &MaterialParams<T>) -> Result<DimensionlessParams<T>> {
    p.validate()?;
    let two = T::lit(2.0);
    let denom = p.mu0 * p.ms * p.ms;
    Ok(DimensionlessParams {
        eps: two * p.a_ex / (denom * p.length * p.length),
        q: two * p.ku / denom,
        alpha: p.alpha,
        h_e: vec3::zero(),
        anisotropy_axis: AnisotropyAxis::E1,
        stray_field: true,
        time_unit: Some(T::one() / (p.mu0 * p.gamma * p.ms)),
    })
}

/// Pointwise lower-order field `-q(...) - m3 e3 + h_e`.
#[inline]
pub fn loworder_field_at<T: Scalar>(m: Vec3<T>, cfg: &DimensionlessParams<T>) -> Vec3<T> {
    let mut f = cfg.h_e;
    match cfg.anisotropy_axis {
        AnisotropyAxis::E1 => {
            f[1] -= cfg.q * m[1];
            f[2] -= cfg.q * m[2];
        }
        AnisotropyAxis::E3 => {
            f[0] -= cfg.q * m[0];
            f[1] -= cfg.q * m[1];
        }
    }
    if cfg.stray_field {
        f[2] -= m[2];
    }
    f
}

pub fn effective_field_loworder<T: Scalar>(m: &VectorField3<T>, cfg: &DimensionlessParams<T>) -> Vec<Vec3<T>> {
    m.values.iter().map(|&v| loworder_field_at(v, cfg)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiscreteEnergy<T> {
    pub total: T,
    pub exchange_part: T,
    pub anisotropy_part: T,
    pub zeeman_part: T,
    pub stray_part: T,
}

/// `F[m_h] = (ε/2)|||m_h|||² + Σ_i |V_i| F̂(m_i)`.
pub fn energy<T: Scalar>(
    m: &VectorField3<T>,
    cfg: &DimensionlessParams<T>,
    mesh: &TriMesh<T>,
    dual: &DualGeometry<T>,
) -> Result<DiscreteEnergy<T>> {
    m.check_len(mesh.num_nodes())?;
    let half = T::lit(0.5);
    let semi = discrete_h1_seminorm(m, mesh)?;
    let exchange_part = half * cfg.eps * semi * semi;
    let mut aniso = T::zero();
    let mut zeeman = T::zero();
    let mut stray = T::zero();
    for (&v, &a) in m.values.iter().zip(&dual.cv_area) {
        aniso += a * match cfg.anisotropy_axis {
            AnisotropyAxis::E1 => v[1] * v[1] + v[2] * v[2],
            AnisotropyAxis::E3 => v[0] * v[0] + v[1] * v[1],
        };
        zeeman -= a * vec3::dot(cfg.h_e, v);
        stray += a * v[2] * v[2];
    }
    let anisotropy_part = half * cfg.q * aniso;
    let stray_part = if cfg.stray_field { half * stray } else { T::zero() };
    Ok(DiscreteEnergy {
        total: exchange_part + anisotropy_part + zeeman + stray_part,
        exchange_part,
        anisotropy_part,
        zeeman_part: zeeman,
        stray_part,
    })
}

/// Smooth unit-length field `(sin x cos(y+t), cos x cos(y+t), sin(y+t))`.
pub fn manufactured_solution<T: Scalar>(x: T, y: T, t: T) -> Vec3<T> {
    let s = y + t;
    [x.sin() * s.cos(), x.cos() * s.cos(), s.sin()]
}

/// `[∂x m_c, ∂y m_c]` for each component of [`manufactured_solution`].
pub fn manufactured_gradient<T: Scalar>(x: T, y: T, t: T) -> [[T; 2]; 3] {
    let s = y + t;
    [[x.cos() * s.cos(), -x.sin() * s.sin()], [-x.sin() * s.cos(), -x.cos() * s.sin()], [T::zero(), s.cos()]]
}

pub fn manufactured_time_derivative<T: Scalar>(x: T, y: T, t: T) -> Vec3<T> {
    let s = y + t;
    [-x.sin() * s.sin(), -x.cos() * s.sin(), s.cos()]
}

pub fn manufactured_laplacian<T: Scalar>(x: T, y: T, t: T) -> Vec3<T> {
    let s = y + t;
    let two = T::lit(2.0);
    [-two * x.sin() * s.cos(), -two * x.cos() * s.cos(), -s.sin()]
}

/// Source making [`manufactured_solution`] exact for
/// `∂t m = -m×Δm - α m×(m×Δm) + f`.
pub fn manufactured_source<T: Scalar>(x: T, y: T, t: T, alpha: T) -> Vec3<T> {
    let m = manufactured_solution(x, y, t);
    let lap = manufactured_laplacian(x, y, t);
    let m_t = manufactured_time_derivative(x, y, t);
    let mxl = vec3::cross(m, lap);
    let mxmxl = vec3::cross(m, mxl);
    vec3::add(vec3::add(m_t, mxl), vec3::scale(mxmxl, alpha))
}

/// Radially symmetric texture that develops a gradient singularity at
/// `center`; `(0, 0, -1)` outside radius 1/2.
pub fn blowup_ic<T: Scalar>(x: [T; 2], center: [T; 2]) -> Vec3<T> {
    let dx = x[0] - center[0];
    let dy = x[1] - center[1];
    let r2 = dx * dx + dy * dy;
    if r2.sqrt() >= T::lit(0.5) {
        return [T::zero(), T::zero(), -T::one()];
    }
    let two = T::lit(2.0);
    let a = (T::one() - two * r2).powi(4);
    let den = a * a + r2;
    [two * dx * a / den, two * dy * a / den, (a * a - r2) / den]
}

/// Dirichlet data on the rectangle boundary.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition<T> {
    /// Frozen values, ordered like `mesh.boundary_nodes`.
    Fixed(Vec<Vec3<T>>),
    /// [`manufactured_solution`] at `t = 0` for all times.
    ManufacturedStatic,
    /// [`manufactured_solution`] at the current time.
    ManufacturedMoving,
    /// `(0,1,0)` on `x = x0`, `(0,-1,0)` on `x = x1`, `(-1,0,0)` on `y = y0`,
    /// `(1,0,0)` on `y = y1`; the vertical sides own the corners.
    VortexFrame,
}

impl<T: Scalar> BoundaryCondition<T> {
    pub fn fixed_from(field: &VectorField3<T>, mesh: &TriMesh<T>) -> Self {
        Self::Fixed(mesh.boundary_nodes.iter().map(|&i| field.values[i]).collect())
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, Self::ManufacturedMoving)
    }

    pub fn value_at(&self, x: [T; 2], t: T, mesh: &TriMesh<T>) -> Vec3<T> {
        let (o, l) = (T::zero(), T::one());
        match self {
            Self::Fixed(_) => panic!("value_at is undefined for node-indexed data"),
            Self::ManufacturedStatic => manufactured_solution(x[0], x[1], o),
            Self::ManufacturedMoving => manufactured_solution(x[0], x[1], t),
            Self::VortexFrame => {
                let r = mesh.rect;
                if x[0] == r.x0 {
                    [o, l, o]
                } else if x[0] == r.x1 {
                    [o, -l, o]
                } else if x[1] == r.y0 {
                    [-l, o, o]
                } else {
                    [l, o, o]
                }
            }
        }
    }

    /// Values at `mesh.boundary_nodes` at time `t`.
    pub fn values(&self, mesh: &TriMesh<T>, t: T) -> Vec<Vec3<T>> {
        match self {
            Self::Fixed(v) => v.clone(),
            _ => mesh.boundary_nodes.iter().map(|&i| self.value_at(mesh.nodes[i], t, mesh)).collect(),
        }
    }
}

/// Initial magnetization presets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialCondition<T> {
    /// [`manufactured_solution`] at `t = 0`.
    Manufactured,
    Blowup {
        center: [T; 2],
    },
    Uniform(Vec3<T>),
    /// Uniform `e3` inside, boundary nodes from the vortex frame.
    VortexE3,
    /// Near-uniform in-plane state along `e1` with a slight tilt.
    SingleDomain,
    /// In-plane circulation around the domain center with an out-of-plane core.
    FluxClosure,
}

impl<T: Scalar> InitialCondition<T> {
    pub fn sample(&self, mesh: &TriMesh<T>) -> VectorField3<T> {
        let r = mesh.rect;
        let half = T::lit(0.5);
        let center = [(r.x0 + r.x1) * half, (r.y0 + r.y1) * half];
        let unit = |v: Vec3<T>| vec3::scale(v, T::one() / vec3::norm(v));
        let mut f = VectorField3::from_fn(mesh, |x| match *self {
            Self::Manufactured => manufactured_solution(x[0], x[1], T::zero()),
            Self::Blowup { center } => blowup_ic(x, center),
            Self::Uniform(v) => unit(v),
            Self::VortexE3 => [T::zero(), T::zero(), T::one()],
            Self::SingleDomain => unit([T::one(), T::lit(0.1), T::lit(0.05)]),
            Self::FluxClosure => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                let core = T::lit(0.2) * r.height().min(r.width());
                unit([-dy, dx, core])
            }
        });
        if matches!(self, Self::VortexE3) {
            let bc = BoundaryCondition::VortexFrame;
            for &i in &mesh.boundary_nodes {
                f.values[i] = bc.value_at(mesh.nodes[i], T::zero(), mesh);
            }
        }
        f
    }
}
