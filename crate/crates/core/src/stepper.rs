//! Time stepping: the Gauss–Seidel projection method and a linearized
//! backward-Euler (Picard) iteration.

use std::sync::Arc;

use crate::fvem::{
    assemble_bh_matrix, assemble_gradient_weighted_mass, assemble_mass, assemble_stiffness, discrete_h1_norm,
    element_gradient, nodal_rhs, VectorField3,
};
use crate::mesh::{build_dual, DualGeometry, TriMesh};
use crate::physics::{loworder_field_at, BoundaryCondition, DimensionlessParams};
use crate::solver::{prepare, FactorizedOperator, LinearOperatorSpec, SolverKind, SparseSolver};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::vec3::{self, Vec3};
use crate::{Error, Result, Scalar};

/// Source term `f(x, t)` added to the right-hand side of the equation.
pub type Source<'a, T> = &'a dyn Fn([T; 2], T) -> Vec3<T>;

/// Mesh, dual mesh and the coefficient-free operators built on them.
#[derive(Clone, Debug)]
pub struct Discretization<T> {
    pub mesh: TriMesh<T>,
    pub dual: DualGeometry<T>,
    pub mass: CsrMatrix<T>,
    pub stiffness: CsrMatrix<T>,
}

impl<T: Scalar> Discretization<T> {
    pub fn new(mesh: TriMesh<T>) -> Result<Self> {
        let dual = build_dual(&mesh)?;
        let mass = assemble_mass(&mesh, &dual);
        let stiffness = assemble_stiffness(&mesh, &dual);
        Ok(Self { mesh, dual, mass, stiffness })
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }
}

/// Which field the two auxiliary heat solves for `g1`, `g2` start from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GaussSeidelRhs {
    /// `M* m_i^n`: both auxiliary solves use the old components. This is
    /// only first-order consistent when `m*` and `m^n` coincide.
    Previous,
    /// `M* m̂_i`: each auxiliary solve uses the component just updated,
    /// so the update is sequential across the whole mesh.
    #[default]
    Updated,
}

/// Boundary values given to the auxiliary heat solves for `m*`, `g1`, `g2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AuxiliaryBoundary {
    /// The Dirichlet data at `t_{n+1}`.
    #[default]
    Target,
    /// The current boundary values `m^n`.
    Current,
    /// `m^n + Δt h⊥`, with the tangential effective field `h⊥` recovered
    /// from the boundary velocity `(g(t_{n+1}) - g(t_n))/Δt`.
    FieldConsistent,
}

/// Coefficient `c_i` of the damping term `-α c_i m_i^n + α m_i*` in the
/// pointwise update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DampingForm {
    /// `c_2 = m̂1 g1 + m2 m2* + m3 m3*`, `c_3 = m̂1 g1 + m̂2 g2 + m3 m3*`.
    AsWritten,
    /// `c_i = m^n · m*` for every component.
    #[default]
    Frozen,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GspmOptions {
    pub gauss_seidel_rhs: GaussSeidelRhs,
    pub damping: DampingForm,
    pub aux_boundary: AuxiliaryBoundary,
    pub solver: SolverKind,
}

/// Intermediate fields of the most recent step.
#[derive(Clone, Debug)]
pub struct GspmWorkspace<T> {
    pub m_star: VectorField3<T>,
    pub g1: Vec<T>,
    pub g2: Vec<T>,
    pub m_hat: VectorField3<T>,
    pub dt: T,
}

impl<T: Scalar> GspmWorkspace<T> {
    fn new(n: usize, dt: T) -> Self {
        Self {
            m_star: VectorField3::zeros(n),
            g1: vec![T::zero(); n],
            g2: vec![T::zero(); n],
            m_hat: VectorField3::zeros(n),
            dt,
        }
    }
}

/// GSPM integrator for one simulation at a fixed time step.
#[derive(Clone, Debug)]
pub struct GspmStepper<T> {
    disc: Arc<Discretization<T>>,
    cfg: DimensionlessParams<T>,
    bc: BoundaryCondition<T>,
    op: FactorizedOperator<T>,
    ws: GspmWorkspace<T>,
    options: GspmOptions,
    /// Split boundary values, cached for time-independent data.
    bc_cache: Option<[Vec<T>; 3]>,
}

fn split_components<T: Scalar>(v: &[Vec3<T>]) -> [Vec<T>; 3] {
    [0, 1, 2].map(|c| v.iter().map(|x| x[c]).collect())
}

impl<T: Scalar> GspmStepper<T> {
    pub fn new(
        disc: Arc<Discretization<T>>,
        cfg: DimensionlessParams<T>,
        bc: BoundaryCondition<T>,
        dt: T,
        options: GspmOptions,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        if let BoundaryCondition::Fixed(v) = &bc {
            if v.len() != disc.mesh.boundary_nodes.len() {
                return Err(Error::DimensionMismatch { expected: disc.mesh.boundary_nodes.len(), found: v.len() });
            }
        }
        let op = prepare(&LinearOperatorSpec {
            mass: &disc.mass,
            stiffness: &disc.stiffness,
            shift: dt * cfg.eps,
            dirichlet_nodes: &disc.mesh.boundary_nodes,
            kind: options.solver,
        })?;
        let bc_cache = (!bc.is_time_dependent()).then(|| split_components(&bc.values(&disc.mesh, T::zero())));
        let ws = GspmWorkspace::new(disc.num_nodes(), dt);
        Ok(Self { disc, cfg, bc, op, ws, options, bc_cache })
    }

    pub fn dt(&self) -> T {
        self.ws.dt
    }

    pub fn params(&self) -> &DimensionlessParams<T> {
        &self.cfg
    }

    pub fn boundary(&self) -> &BoundaryCondition<T> {
        &self.bc
    }

    pub fn discretization(&self) -> &Arc<Discretization<T>> {
        &self.disc
    }

    pub fn workspace(&self) -> &GspmWorkspace<T> {
        &self.ws
    }

    pub fn operator(&self) -> &FactorizedOperator<T> {
        &self.op
    }

    fn has_loworder_terms(&self) -> bool {
        self.cfg.q != T::zero() || self.cfg.stray_field || self.cfg.h_e.iter().any(|v| *v != T::zero())
    }

    /// `Δt · nodal_rhs(f̂(m))`, split by component.
    fn loworder_rhs(&self, m: &VectorField3<T>) -> Result<[Vec<T>; 3]> {
        let f: Vec<_> = m.values.iter().map(|&v| loworder_field_at(v, &self.cfg)).collect();
        let mut r = split_components(&nodal_rhs(&f, &self.disc.dual)?);
        for c in &mut r {
            for v in c.iter_mut() {
                *v *= self.ws.dt;
            }
        }
        Ok(r)
    }

    /// Solves `(M* + Δt ε A) x = M* u + extra` with boundary values `bc`.
    fn heat_solve(&self, u: &[T], extra: Option<&[T]>, bc: &[T]) -> Result<Vec<T>> {
        let mut rhs = self.disc.mass.mul_vec(u);
        if let Some(e) = extra {
            for (r, v) in rhs.iter_mut().zip(e) {
                *r += *v;
            }
        }
        self.op.solve(&rhs, bc)
    }

    /// Boundary values for the `m*` solves, plus the boundary effective
    /// field estimate when [`AuxiliaryBoundary::FieldConsistent`] is active.
    fn auxiliary_boundary(
        &self,
        m_n: &VectorField3<T>,
        t_n: T,
        bc_next: &[Vec<T>; 3],
        source: Option<Source<'_, T>>,
    ) -> Result<([Vec<T>; 3], Option<Vec<Vec3<T>>>)> {
        let mesh = &self.disc.mesh;
        match self.options.aux_boundary {
            AuxiliaryBoundary::Target => Ok((bc_next.clone(), None)),
            AuxiliaryBoundary::Current => {
                let old: Vec<_> = mesh.boundary_nodes.iter().map(|&i| m_n.values[i]).collect();
                Ok((split_components(&old), None))
            }
            AuxiliaryBoundary::FieldConsistent => {
                let dt = self.ws.dt;
                let a = self.cfg.alpha;
                let grad_sq = boundary_gradient_sq(m_n, mesh)?;
                let mut star = Vec::with_capacity(mesh.boundary_nodes.len());
                let mut field = Vec::with_capacity(mesh.boundary_nodes.len());
                for (k, &i) in mesh.boundary_nodes.iter().enumerate() {
                    let m = m_n.values[i];
                    let next = [bc_next[0][k], bc_next[1][k], bc_next[2][k]];
                    let mut v = vec3::scale(vec3::sub(next, m), T::one() / dt);
                    if let Some(f) = source {
                        v = vec3::sub(v, f(mesh.nodes[i], t_n));
                    }
                    v = vec3::sub(v, vec3::scale(m, vec3::dot(v, m)));
                    // Inverts v = -m×h - α m×(m×h) on the plane orthogonal to m.
                    let h_perp =
                        vec3::scale(vec3::add(vec3::scale(v, a), vec3::cross(m, v)), T::one() / (T::one() + a * a));
                    // Normal part: m·(εΔm + f̂) = -ε|∇m|² + m·f̂.
                    let par = vec3::dot(m, loworder_field_at(m, &self.cfg)) - self.cfg.eps * grad_sq[k];
                    let h = vec3::add(h_perp, vec3::scale(m, par));
                    star.push(vec3::add(m, vec3::scale(h, dt)));
                    field.push(h);
                }
                Ok((split_components(&star), Some(field)))
            }
        }
    }

    /// Advances `m_n` from `t_n` to `t_n + Δt`.
    pub fn step(&mut self, m_n: &VectorField3<T>, t_n: T, source: Option<Source<'_, T>>) -> Result<VectorField3<T>> {
        let n = self.disc.num_nodes();
        m_n.check_len(n)?;
        if let Some(i) = m_n.values.iter().position(|v| !vec3::is_finite(*v)) {
            return Err(Error::NonFinite(format!("magnetization at node {i}")));
        }
        let dt = self.ws.dt;
        let t_next = t_n + dt;
        let bc = match &self.bc_cache {
            Some(c) => c.clone(),
            None => split_components(&self.bc.values(&self.disc.mesh, t_next)),
        };
        let loworder = self.has_loworder_terms();
        let comps = [m_n.component(0), m_n.component(1), m_n.component(2)];
        let (star_bc, _) = self.auxiliary_boundary(m_n, t_n, &bc, source)?;
        // Boundary data for g_i: consistent with `u + Δt h` where `u` is the
        // field the solve starts from.
        let g_boundary = |c: usize, u: &[T]| -> Vec<T> {
            self.disc
                .mesh
                .boundary_nodes
                .iter()
                .enumerate()
                .map(|(k, &i)| match self.options.aux_boundary {
                    AuxiliaryBoundary::Target => star_bc[c][k],
                    _ => u[i] + (star_bc[c][k] - m_n.values[i][c]),
                })
                .collect()
        };

        // (1) m* from the heat operator.
        let f_n = if loworder { Some(self.loworder_rhs(m_n)?) } else { None };
        let rhs: Vec<Vec<T>> = (0..3)
            .map(|c| {
                let mut r = self.disc.mass.mul_vec(&comps[c]);
                if let Some(f) = &f_n {
                    for (r, v) in r.iter_mut().zip(&f[c]) {
                        *r += *v;
                    }
                }
                r
            })
            .collect();
        let star = self.op.solve_many(&[&rhs[0], &rhs[1], &rhs[2]], &[&star_bc[0], &star_bc[1], &star_bc[2]])?;
        for c in 0..3 {
            self.ws.m_star.set_component(c, &star[c]);
        }
        let f_star = if loworder { Some(self.loworder_rhs(&self.ws.m_star)?) } else { None };
        let alpha = self.cfg.alpha;
        let damping = self.options.damping;
        let mut hat = vec![vec3::zero(); n];

        // (2)-(3) auxiliary solves and the pointwise update.
        match self.options.gauss_seidel_rhs {
            GaussSeidelRhs::Previous => {
                let (g1, g2) = match &f_star {
                    Some(f) => (
                        self.heat_solve(&comps[0], Some(&f[0]), &g_boundary(0, &comps[0]))?,
                        self.heat_solve(&comps[1], Some(&f[1]), &g_boundary(1, &comps[1]))?,
                    ),
                    // Without lower-order terms both solves reproduce m*.
                    None => (star[0].clone(), star[1].clone()),
                };
                for i in 0..n {
                    hat[i] =
                        gauss_seidel_update_with(m_n.values[i], self.ws.m_star.values[i], g1[i], g2[i], alpha, damping);
                }
                self.ws.g1 = g1;
                self.ws.g2 = g2;
            }
            GaussSeidelRhs::Updated => {
                let mut h1 = vec![T::zero(); n];
                for i in 0..n {
                    h1[i] = update_first(m_n.values[i], self.ws.m_star.values[i], alpha);
                }
                let g1 = self.heat_solve(&h1, f_star.as_ref().map(|f| f[0].as_slice()), &g_boundary(0, &h1))?;
                let mut h2 = vec![T::zero(); n];
                for i in 0..n {
                    h2[i] = update_second(m_n.values[i], self.ws.m_star.values[i], h1[i], g1[i], alpha, damping);
                }
                let g2 = self.heat_solve(&h2, f_star.as_ref().map(|f| f[1].as_slice()), &g_boundary(1, &h2))?;
                for i in 0..n {
                    let h3 = update_third(
                        m_n.values[i],
                        self.ws.m_star.values[i],
                        h1[i],
                        h2[i],
                        g1[i],
                        g2[i],
                        alpha,
                        damping,
                    );
                    hat[i] = [h1[i], h2[i], h3];
                }
                self.ws.g1 = g1;
                self.ws.g2 = g2;
            }
        }

        // (4) source, (5) boundary data.
        if let Some(f) = source {
            for (h, &x) in hat.iter_mut().zip(&self.disc.mesh.nodes) {
                *h = vec3::add(*h, vec3::scale(f(x, t_n), dt));
            }
        }
        for (k, &i) in self.disc.mesh.boundary_nodes.iter().enumerate() {
            hat[i] = [bc[0][k], bc[1][k], bc[2][k]];
        }
        self.ws.m_hat = VectorField3::new(hat);

        // (6) projection.
        project(&self.ws.m_hat)
    }
}

/// Area-weighted average of `|∇m|²_K` over the elements around each
/// boundary node, ordered like `mesh.boundary_nodes`.
fn boundary_gradient_sq<T: Scalar>(m: &VectorField3<T>, mesh: &TriMesh<T>) -> Result<Vec<T>> {
    let n = mesh.num_nodes();
    let mut num = vec![T::zero(); n];
    let mut den = vec![T::zero(); n];
    let mask = mesh.boundary_mask();
    for (e, tri) in mesh.triangles.iter().enumerate() {
        if !tri.iter().any(|&v| mask[v]) {
            continue;
        }
        let g = element_gradient(m, mesh, e)?;
        let w: T = g.iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum();
        let a = mesh.signed_area(e);
        for &v in tri {
            num[v] += a * w;
            den[v] += a;
        }
    }
    Ok(mesh.boundary_nodes.iter().map(|&i| num[i] / den[i]).collect())
}

#[inline]
fn update_first<T: Scalar>(m: Vec3<T>, s: Vec3<T>, alpha: T) -> T {
    m[0] - (m[1] * s[2] - m[2] * s[1]) - alpha * vec3::dot(m, s) * m[0] + alpha * s[0]
}

#[inline]
fn update_second<T: Scalar>(m: Vec3<T>, s: Vec3<T>, h1: T, g1: T, alpha: T, form: DampingForm) -> T {
    let c = match form {
        DampingForm::AsWritten => h1 * g1 + m[1] * s[1] + m[2] * s[2],
        DampingForm::Frozen => vec3::dot(m, s),
    };
    m[1] - (m[2] * g1 - h1 * s[2]) - alpha * c * m[1] + alpha * s[1]
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn update_third<T: Scalar>(m: Vec3<T>, s: Vec3<T>, h1: T, h2: T, g1: T, g2: T, alpha: T, form: DampingForm) -> T {
    let c = match form {
        DampingForm::AsWritten => h1 * g1 + h2 * g2 + m[2] * s[2],
        DampingForm::Frozen => vec3::dot(m, s),
    };
    m[2] - (h1 * g2 - h2 * g1) - alpha * c * m[2] + alpha * s[2]
}

/// Sequential pointwise update: `m̂1` from `(m, m*)`, then `m̂2` using
/// `m̂1, g1`, then `m̂3` using `m̂1, m̂2, g1, g2`. The damping coefficients
/// mix updated and old components as in [`DampingForm::AsWritten`].
pub fn gauss_seidel_update<T: Scalar>(m_n: Vec3<T>, m_star: Vec3<T>, g1: T, g2: T, alpha: T) -> Vec3<T> {
    gauss_seidel_update_with(m_n, m_star, g1, g2, alpha, DampingForm::AsWritten)
}

pub fn gauss_seidel_update_with<T: Scalar>(
    m_n: Vec3<T>,
    m_star: Vec3<T>,
    g1: T,
    g2: T,
    alpha: T,
    form: DampingForm,
) -> Vec3<T> {
    let h1 = update_first(m_n, m_star, alpha);
    let h2 = update_second(m_n, m_star, h1, g1, alpha, form);
    let h3 = update_third(m_n, m_star, h1, h2, g1, g2, alpha, form);
    [h1, h2, h3]
}

/// Nodewise normalization onto the unit sphere.
pub fn project<T: Scalar>(m_hat: &VectorField3<T>) -> Result<VectorField3<T>> {
    let mut out = Vec::with_capacity(m_hat.len());
    for (i, &v) in m_hat.values.iter().enumerate() {
        if !vec3::is_finite(v) {
            return Err(Error::NonFinite(format!("pre-projection value at node {i}")));
        }
        let n = vec3::norm(v);
        if !(n > T::min_positive_value()) {
            return Err(Error::ZeroMagnitude { node: i });
        }
        out.push(vec3::scale(v, T::one() / n));
    }
    Ok(VectorField3::new(out))
}

/// Iteration state of the linearized backward-Euler solve.
#[derive(Clone, Debug)]
pub struct PicardState<T> {
    pub iterate: VectorField3<T>,
    /// Discrete `H¹` norm of the last increment `m̃^{l+1} - m̃^l`.
    pub increment_h1: T,
    pub tol: T,
    pub max_iters: usize,
    pub iterations: usize,
}

impl<T: Scalar> PicardState<T> {
    pub fn new(tol: T, max_iters: usize) -> Self {
        Self { iterate: VectorField3::zeros(0), increment_h1: T::zero(), tol, max_iters, iterations: 0 }
    }
}

/// `M ⊗ I3` on interleaved unknowns, scaled by `s`.
fn push_kron_identity<T: Scalar>(b: &mut TripletBuilder<T>, m: &CsrMatrix<T>, s: T) {
    for (i, j, v) in m.triplets() {
        for c in 0..3 {
            b.push(3 * i + c, 3 * j + c, s * v);
        }
    }
}

/// One backward-Euler step of size `tau` solved by the fixed-point iteration
/// `[(1/τ)M* + αεA + εB(m̃^l) - αεW(m̃^l)] m̃^{l+1} = (1/τ)M* m^n`.
///
/// Boundary nodes take `bc` at `t_n + tau`; a source, if given, is evaluated
/// there too. The result is not projected. Returns the converged iterate and
/// the increment norms, one per iteration.
#[allow(clippy::too_many_arguments)]
pub fn picard_implicit_step<T: Scalar>(
    m_n: &VectorField3<T>,
    t_n: T,
    tau: T,
    cfg: &DimensionlessParams<T>,
    disc: &Discretization<T>,
    bc: &BoundaryCondition<T>,
    source: Option<Source<'_, T>>,
    state: &mut PicardState<T>,
    kind: SolverKind,
) -> Result<(VectorField3<T>, Vec<T>)> {
    cfg.validate()?;
    let n = disc.num_nodes();
    m_n.check_len(n)?;
    if !(tau > T::zero() && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    if state.max_iters == 0 || !(state.tol > T::zero()) {
        return Err(Error::InvalidParameter("Picard tolerance and iteration cap must be positive".into()));
    }
    let mesh = &disc.mesh;
    let t_next = t_n + tau;
    let inv_tau = T::one() / tau;
    let bc_vals = bc.values(mesh, t_next);
    let mut mask = vec![false; 3 * n];
    for &i in &mesh.boundary_nodes {
        for c in 0..3 {
            mask[3 * i + c] = true;
        }
    }

    let mut rhs = vec![T::zero(); 3 * n];
    for c in 0..3 {
        let mc = disc.mass.mul_vec(&m_n.component(c));
        for i in 0..n {
            rhs[3 * i + c] = inv_tau * mc[i];
        }
    }
    if let Some(f) = source {
        let vals: Vec<_> = mesh.nodes.iter().map(|&x| f(x, t_next)).collect();
        for (i, v) in nodal_rhs(&vals, &disc.dual)?.into_iter().enumerate() {
            for c in 0..3 {
                rhs[3 * i + c] += v[c];
            }
        }
    }
    for (k, &i) in mesh.boundary_nodes.iter().enumerate() {
        for c in 0..3 {
            rhs[3 * i + c] = bc_vals[k][c];
        }
    }

    let eps = cfg.eps;
    let ae = cfg.alpha * eps;
    let mut iterate = m_n.clone();
    let mut trace = Vec::new();
    state.iterations = 0;
    for _ in 0..state.max_iters {
        let bh = assemble_bh_matrix(&iterate, mesh, &disc.dual)?;
        let w = assemble_gradient_weighted_mass(&iterate, mesh, &disc.dual)?;
        let mut b = TripletBuilder::with_capacity(3 * n, 3 * n, bh.nnz() + 9 * disc.mass.nnz());
        push_kron_identity(&mut b, &disc.mass, inv_tau);
        push_kron_identity(&mut b, &disc.stiffness, ae);
        push_kron_identity(&mut b, &w, -ae);
        for (i, j, v) in bh.triplets() {
            b.push(i, j, eps * v);
        }
        let op = b.build().with_identity_rows(&mask);
        let x = SparseSolver::new(op, kind)?.solve(&rhs)?;
        let next = VectorField3::from_interleaved(&x);
        let inc = discrete_h1_norm(&next.sub(&iterate), mesh, &disc.dual)?;
        trace.push(inc);
        state.iterations += 1;
        state.increment_h1 = inc;
        iterate = next;
        if inc < state.tol {
            state.iterate = iterate.clone();
            return Ok((iterate, trace));
        }
    }
    state.iterate = iterate;
    Err(Error::PicardNotConverged { trace: trace.iter().map(|v| v.to_f64_lossy()).collect() })
}
