//! Flat `key = value` experiment descriptions.
//!
//! One assignment per line, `#` starts a comment. A file either names a
//! `preset` to start from or an `experiment`, whose default preset is then
//! used as the base; every other key overrides a single field. In `units =
//! si` mode all times (`dt`, `t_end`, `snapshot_times`) are in seconds.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::mesh::Rect;
use crate::physics::{
    nondimensionalize, AnisotropyAxis, BoundaryCondition, DimensionlessParams, InitialCondition, MaterialParams,
};
use crate::solver::SolverKind;
use crate::stepper::{AuxiliaryBoundary, DampingForm, GaussSeidelRhs, GspmOptions};
use crate::vec3::Vec3;
use crate::{Error, Result};

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($(#[$vm:meta])* $variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq)]
        pub enum $name {
            $($(#[$vm])* $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(format!(
                        "unknown value `{s}`, expected one of: {}",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(Experiment {
    Convergence => "convergence",
    Energy => "energy",
    Blowup => "blowup",
    Micromag => "micromag",
    PicardCheck => "picard-check",
});

keyword_enum!(
    /// How the time step follows the mesh size in a convergence sweep.
    Refinement {
        Linked => "linked",
        Quadratic => "quadratic",
    }
);

keyword_enum!(Units {
    Dimensionless => "dimensionless",
    Si => "si",
});

keyword_enum!(BoundaryKind {
    FixedFromIc => "fixed-from-ic",
    ManufacturedStatic => "manufactured-static",
    ManufacturedMoving => "manufactured-moving",
    VortexFrame => "vortex-frame",
});

keyword_enum!(IcKind {
    Manufactured => "manufactured",
    Blowup => "blowup",
    Uniform => "uniform",
    VortexE3 => "vortex-e3",
    SingleDomain => "single-domain",
    FluxClosure => "flux-closure",
});

keyword_enum!(
    /// Forcing term added to the equation.
    SourceKind {
        None => "none",
        /// Source that makes the smooth manufactured field an exact solution.
        Manufactured => "manufactured",
    }
);

keyword_enum!(
    /// H¹ error used in convergence tables.
    H1Norm {
        /// Continuous seminorm against the exact gradient.
        ExactGradient => "exact-gradient",
        /// Discrete seminorm of the nodal error.
        Nodal => "nodal",
    }
);

keyword_enum!(GsRhsKey {
    Previous => "previous",
    Updated => "updated",
});

keyword_enum!(AuxKey {
    Target => "target",
    Current => "current",
    FieldConsistent => "field-consistent",
});

keyword_enum!(DampingKey {
    AsWritten => "as-written",
    Frozen => "frozen",
});

keyword_enum!(SolverKey {
    Auto => "auto",
    Direct => "direct",
    Iterative => "iterative",
});

/// Model coefficients, either dimensionless or SI.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub units: Units,
    pub eps: f64,
    pub q: f64,
    pub alpha: f64,
    pub h_e: Vec3<f64>,
    pub anisotropy_axis: AnisotropyAxis,
    pub stray_field: bool,
    pub material: MaterialParams<f64>,
}

impl ModelSpec {
    pub fn dimensionless(&self) -> Result<DimensionlessParams<f64>> {
        let p = match self.units {
            Units::Dimensionless => DimensionlessParams {
                eps: self.eps,
                q: self.q,
                alpha: self.alpha,
                h_e: self.h_e,
                anisotropy_axis: self.anisotropy_axis,
                stray_field: self.stray_field,
                time_unit: None,
            },
            Units::Si => {
                let material = MaterialParams { alpha: self.alpha, ..self.material };
                DimensionlessParams {
                    h_e: self.h_e,
                    anisotropy_axis: self.anisotropy_axis,
                    stray_field: self.stray_field,
                    ..nondimensionalize(&material)?
                }
            }
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Stem for every output file.
    pub name: String,
    pub nx: usize,
    pub ny: usize,
    pub rect: Rect<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub model: ModelSpec,
    pub bc: BoundaryKind,
    pub ic: IcKind,
    pub ic_center: [f64; 2],
    pub ic_direction: Vec3<f64>,
    /// Amplitude of a seeded random perturbation of interior initial values.
    pub ic_noise: f64,
    pub seed: u64,
    /// Ignored by convergence runs, which always use the manufactured source.
    pub source: SourceKind,
    pub refinement: Refinement,
    pub resolutions: Vec<usize>,
    pub h1_norm: H1Norm,
    pub gspm: GspmOptions,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub picard_taus: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    pub series_every: usize,
    /// Allowed relative energy increase per step.
    pub energy_tol: f64,
    /// Radius of the disc around the probe center used for core statistics.
    pub probe_radius: f64,
}

const PRESETS: &[(&str, &str)] = &[
    ("linked", include_str!("../../configs/linked.cfg")),
    ("quadratic", include_str!("../../configs/quadratic.cfg")),
    ("linked-weak-damping", include_str!("../../configs/linked_weak_damping.cfg")),
    ("quadratic-weak-damping", include_str!("../../configs/quadratic_weak_damping.cfg")),
    ("energy-static", include_str!("../../configs/energy_static.cfg")),
    ("energy-moving", include_str!("../../configs/energy_moving.cfg")),
    ("blowup", include_str!("../../configs/blowup.cfg")),
    ("blowup-desk", include_str!("../../configs/blowup_desk.cfg")),
    ("axis-e1", include_str!("../../configs/axis_e1.cfg")),
    ("axis-e3", include_str!("../../configs/axis_e3.cfg")),
    ("vortex", include_str!("../../configs/vortex.cfg")),
    ("metastable-1", include_str!("../../configs/metastable_1.cfg")),
    ("metastable-2", include_str!("../../configs/metastable_2.cfg")),
    ("picard", include_str!("../../configs/picard.cfg")),
];

impl Experiment {
    /// Preset used when a file names only the experiment.
    pub fn default_preset(self) -> &'static str {
        match self {
            Experiment::Convergence => "linked",
            Experiment::Energy => "energy-static",
            Experiment::Blowup => "blowup-desk",
            Experiment::Micromag => "vortex",
            Experiment::PicardCheck => "picard",
        }
    }
}

impl ExperimentConfig {
    /// Values every preset starts from.
    pub fn base(experiment: Experiment) -> Self {
        Self {
            experiment,
            name: experiment.as_str().replace('-', "_"),
            nx: 16,
            ny: 16,
            rect: Rect::unit(),
            dt: 0.01,
            t_end: 1.0,
            model: ModelSpec {
                units: Units::Dimensionless,
                eps: 1.0,
                q: 0.0,
                alpha: 0.1,
                h_e: [0.0; 3],
                anisotropy_axis: AnisotropyAxis::E1,
                stray_field: false,
                material: MaterialParams::permalloy(0.0, 0.1, 1e-6),
            },
            bc: BoundaryKind::FixedFromIc,
            ic: IcKind::Manufactured,
            ic_center: [0.0, 0.0],
            ic_direction: [1.0, 0.0, 0.0],
            ic_noise: 0.0,
            seed: 0,
            source: SourceKind::None,
            refinement: Refinement::Linked,
            resolutions: vec![32, 64, 128],
            h1_norm: H1Norm::ExactGradient,
            gspm: GspmOptions::default(),
            picard_tol: 1e-10,
            picard_max_iters: 50,
            picard_taus: vec![1e-3, 5e-4],
            snapshot_times: Vec::new(),
            series_every: 1,
            energy_tol: 1e-8,
            probe_radius: 0.2,
        }
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|(n, _)| *n)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
            let known: Vec<_> = Self::preset_names().collect();
            Error::InvalidParameter(format!("unknown preset `{name}`, expected one of: {}", known.join(", ")))
        })?;
        Self::parse_inner(text, Path::new(name), None, true)
    }

    /// Reads and parses a config file. `default_experiment` fills in a
    /// missing `experiment` key; a conflicting key is an error.
    pub fn load(path: &Path, default_experiment: Option<Experiment>) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| Error::ReadFile { path: path.to_path_buf(), source })?;
        Self::parse(&text, path, default_experiment)
    }

    pub fn parse(text: &str, path: &Path, default_experiment: Option<Experiment>) -> Result<Self> {
        Self::parse_inner(text, path, default_experiment, false)
    }

    /// Built-in presets start from [`ExperimentConfig::base`] so they do not
    /// depend on each other.
    fn parse_inner(text: &str, path: &Path, default_experiment: Option<Experiment>, builtin: bool) -> Result<Self> {
        let err = |line: usize, message: String| Error::Config { path: path.to_path_buf(), line, message };
        let mut entries: Vec<(usize, &str, &str)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, found `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(err(line, "empty key".into()));
            }
            if let Some((first, ..)) = entries.iter().find(|(_, k, _)| *k == key) {
                return Err(err(line, format!("duplicate key `{key}` (first set on line {first})")));
            }
            entries.push((line, key, value));
        }

        let find = |key: &str| entries.iter().find(|(_, k, _)| *k == key).copied();
        let declared = match find("experiment") {
            Some((line, _, v)) => Some(v.parse::<Experiment>().map_err(|m| err(line, m))?),
            None => None,
        };
        if let (Some(d), Some(e)) = (declared, default_experiment) {
            if d != e {
                let line = find("experiment").map(|e| e.0).unwrap_or(0);
                return Err(err(line, format!("config describes `{d}`, but `{e}` was requested")));
            }
        }
        let mut cfg = match find("preset") {
            Some((line, _, name)) => {
                let base = Self::preset(name).map_err(|e| err(line, e.to_string()))?;
                if let Some(d) = declared.or(default_experiment) {
                    if d != base.experiment {
                        return Err(err(line, format!("preset `{name}` is a `{}` run, not `{d}`", base.experiment)));
                    }
                }
                base
            }
            None => match declared.or(default_experiment) {
                Some(e) if builtin => Self::base(e),
                Some(e) => {
                    let mut c = Self::preset(e.default_preset()).map_err(|x| err(0, x.to_string()))?;
                    c.name = Self::base(e).name;
                    c
                }
                None => return Err(err(0, "missing `experiment` (or `preset`) key".into())),
            },
        };

        for (line, key, value) in entries {
            if key == "preset" || key == "experiment" {
                continue;
            }
            cfg.set(key, value).map_err(|m| err(line, m))?;
        }
        cfg.validate().map_err(|e| err(0, e.to_string()))?;
        Ok(cfg)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let m = &mut self.model;
        match key {
            "name" => {
                if value.is_empty() || !value.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(format!("name must be non-empty and use only [A-Za-z0-9_-], found `{value}`"));
                }
                self.name = value.to_string();
            }
            "nx" => self.nx = parse_count(value)?,
            "ny" => self.ny = parse_count(value)?,
            "rect" => {
                let v = parse_list::<f64>(value)?;
                let [x0, x1, y0, y1] = v[..] else {
                    return Err(format!("rect needs 4 numbers `x0, x1, y0, y1`, found {}", v.len()));
                };
                self.rect = Rect::new(x0, x1, y0, y1);
            }
            "dt" => self.dt = parse_num(value)?,
            "t_end" => self.t_end = parse_num(value)?,
            "units" => m.units = value.parse()?,
            "eps" => m.eps = parse_num(value)?,
            "q" => m.q = parse_num(value)?,
            "alpha" => m.alpha = parse_num(value)?,
            "h_e" => m.h_e = parse_vec3(value)?,
            "anisotropy_axis" => {
                m.anisotropy_axis = match value {
                    "e1" => AnisotropyAxis::E1,
                    "e3" => AnisotropyAxis::E3,
                    _ => return Err(format!("unknown value `{value}`, expected one of: e1, e3")),
                }
            }
            "stray_field" => m.stray_field = parse_bool(value)?,
            "ms" => m.material.ms = parse_num(value)?,
            "a_ex" => m.material.a_ex = parse_num(value)?,
            "ku" => m.material.ku = parse_num(value)?,
            "mu0" => m.material.mu0 = parse_num(value)?,
            "gamma" => m.material.gamma = parse_num(value)?,
            "length" => m.material.length = parse_num(value)?,
            "bc" => self.bc = value.parse()?,
            "ic" => self.ic = value.parse()?,
            "ic_center" => {
                let v = parse_list::<f64>(value)?;
                let [x, y] = v[..] else {
                    return Err(format!("ic_center needs 2 numbers, found {}", v.len()));
                };
                self.ic_center = [x, y];
            }
            "ic_direction" => self.ic_direction = parse_vec3(value)?,
            "ic_noise" => self.ic_noise = parse_num(value)?,
            "seed" => {
                self.seed = value.parse().map_err(|_| format!("expected an unsigned integer, found `{value}`"))?
            }
            "source" => self.source = value.parse()?,
            "refinement" => self.refinement = value.parse()?,
            "resolutions" => {
                self.resolutions = parse_list::<usize>(value)?;
                if self.resolutions.contains(&0) {
                    return Err("resolutions must be positive".into());
                }
            }
            "h1_norm" => self.h1_norm = value.parse()?,
            "gauss_seidel_rhs" => {
                self.gspm.gauss_seidel_rhs = match value.parse::<GsRhsKey>()? {
                    GsRhsKey::Previous => GaussSeidelRhs::Previous,
                    GsRhsKey::Updated => GaussSeidelRhs::Updated,
                }
            }
            "aux_boundary" => {
                self.gspm.aux_boundary = match value.parse::<AuxKey>()? {
                    AuxKey::Target => AuxiliaryBoundary::Target,
                    AuxKey::Current => AuxiliaryBoundary::Current,
                    AuxKey::FieldConsistent => AuxiliaryBoundary::FieldConsistent,
                }
            }
            "damping" => {
                self.gspm.damping = match value.parse::<DampingKey>()? {
                    DampingKey::AsWritten => DampingForm::AsWritten,
                    DampingKey::Frozen => DampingForm::Frozen,
                }
            }
            "solver" => {
                self.gspm.solver = match value.parse::<SolverKey>()? {
                    SolverKey::Auto => SolverKind::Auto,
                    SolverKey::Direct => SolverKind::Direct,
                    SolverKey::Iterative => SolverKind::Iterative,
                }
            }
            "picard_tol" => self.picard_tol = parse_num(value)?,
            "picard_max_iters" => self.picard_max_iters = parse_count(value)?,
            "picard_taus" => self.picard_taus = parse_list(value)?,
            "snapshot_times" => self.snapshot_times = if value.is_empty() { Vec::new() } else { parse_list(value)? },
            "series_every" => self.series_every = parse_count(value)?,
            "energy_tol" => self.energy_tol = parse_num(value)?,
            "probe_radius" => self.probe_radius = parse_num(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.nx == 0 || self.ny == 0 {
            return bad("mesh counts must be at least 1".into());
        }
        let r = self.rect;
        if !(r.width() > 0.0 && r.height() > 0.0) {
            return bad(format!("rectangle must have positive width and height, got {r:?}"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if self.experiment != Experiment::PicardCheck
            && self.experiment != Experiment::Convergence
            && !(self.t_end >= self.dt)
        {
            return bad(format!("t_end must be >= dt, got t_end = {} and dt = {}", self.t_end, self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be >= 0, got {}", self.t_end));
        }
        if self.experiment == Experiment::Convergence && self.resolutions.is_empty() {
            return bad("convergence runs need at least one resolution".into());
        }
        if self.experiment == Experiment::PicardCheck && self.picard_taus.iter().any(|&t| !(t > 0.0)) {
            return bad("picard_taus must be positive".into());
        }
        if !(self.ic_noise >= 0.0) || !(self.energy_tol >= 0.0) || !(self.probe_radius >= 0.0) {
            return bad("ic_noise, energy_tol and probe_radius must be >= 0".into());
        }
        if self.snapshot_times.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("snapshot_times must be strictly increasing".into());
        }
        self.model.dimensionless()?;
        Ok(())
    }

    pub fn params(&self) -> Result<DimensionlessParams<f64>> {
        self.model.dimensionless()
    }

    /// Converts a configured time to dimensionless time.
    pub fn to_model_time(&self, t: f64) -> Result<f64> {
        match self.model.units {
            Units::Dimensionless => Ok(t),
            Units::Si => self.params()?.seconds_to_time(t),
        }
    }

    pub fn initial_condition(&self) -> InitialCondition<f64> {
        match self.ic {
            IcKind::Manufactured => InitialCondition::Manufactured,
            IcKind::Blowup => InitialCondition::Blowup { center: self.ic_center },
            IcKind::Uniform => InitialCondition::Uniform(self.ic_direction),
            IcKind::VortexE3 => InitialCondition::VortexE3,
            IcKind::SingleDomain => InitialCondition::SingleDomain,
            IcKind::FluxClosure => InitialCondition::FluxClosure,
        }
    }

    /// Boundary data; `initial` supplies the values for `fixed-from-ic`.
    pub fn boundary_condition(&self, initial: &[Vec3<f64>]) -> BoundaryCondition<f64> {
        match self.bc {
            BoundaryKind::FixedFromIc => BoundaryCondition::Fixed(initial.to_vec()),
            BoundaryKind::ManufacturedStatic => BoundaryCondition::ManufacturedStatic,
            BoundaryKind::ManufacturedMoving => BoundaryCondition::ManufacturedMoving,
            BoundaryKind::VortexFrame => BoundaryCondition::VortexFrame,
        }
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let v3 = |v: Vec3<f64>| list(&v);
        let gs = match self.gspm.gauss_seidel_rhs {
            GaussSeidelRhs::Previous => GsRhsKey::Previous,
            GaussSeidelRhs::Updated => GsRhsKey::Updated,
        };
        let aux = match self.gspm.aux_boundary {
            AuxiliaryBoundary::Target => AuxKey::Target,
            AuxiliaryBoundary::Current => AuxKey::Current,
            AuxiliaryBoundary::FieldConsistent => AuxKey::FieldConsistent,
        };
        let damping = match self.gspm.damping {
            DampingForm::AsWritten => DampingKey::AsWritten,
            DampingForm::Frozen => DampingKey::Frozen,
        };
        let solver = match self.gspm.solver {
            SolverKind::Auto => SolverKey::Auto,
            SolverKind::Direct => SolverKey::Direct,
            SolverKind::Iterative => SolverKey::Iterative,
        };
        let axis = match m.anisotropy_axis {
            AnisotropyAxis::E1 => "e1",
            AnisotropyAxis::E3 => "e3",
        };
        let r = self.rect;
        let rows: Vec<(&str, String)> = vec![
            ("experiment", self.experiment.to_string()),
            ("name", self.name.clone()),
            ("nx", self.nx.to_string()),
            ("ny", self.ny.to_string()),
            ("rect", list(&[r.x0, r.x1, r.y0, r.y1])),
            ("dt", format!("{:?}", self.dt)),
            ("t_end", format!("{:?}", self.t_end)),
            ("units", m.units.to_string()),
            ("eps", format!("{:?}", m.eps)),
            ("q", format!("{:?}", m.q)),
            ("alpha", format!("{:?}", m.alpha)),
            ("h_e", v3(m.h_e)),
            ("anisotropy_axis", axis.to_string()),
            ("stray_field", m.stray_field.to_string()),
            ("ms", format!("{:?}", m.material.ms)),
            ("a_ex", format!("{:?}", m.material.a_ex)),
            ("ku", format!("{:?}", m.material.ku)),
            ("mu0", format!("{:?}", m.material.mu0)),
            ("gamma", format!("{:?}", m.material.gamma)),
            ("length", format!("{:?}", m.material.length)),
            ("bc", self.bc.to_string()),
            ("ic", self.ic.to_string()),
            ("ic_center", list(&self.ic_center)),
            ("ic_direction", v3(self.ic_direction)),
            ("ic_noise", format!("{:?}", self.ic_noise)),
            ("seed", self.seed.to_string()),
            ("source", self.source.to_string()),
            ("refinement", self.refinement.to_string()),
            ("resolutions", self.resolutions.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")),
            ("h1_norm", self.h1_norm.to_string()),
            ("gauss_seidel_rhs", gs.to_string()),
            ("aux_boundary", aux.to_string()),
            ("damping", damping.to_string()),
            ("solver", solver.to_string()),
            ("picard_tol", format!("{:?}", self.picard_tol)),
            ("picard_max_iters", self.picard_max_iters.to_string()),
            ("picard_taus", list(&self.picard_taus)),
            ("snapshot_times", list(&self.snapshot_times)),
            ("series_every", self.series_every.to_string()),
            ("energy_tol", format!("{:?}", self.energy_tol)),
            ("probe_radius", format!("{:?}", self.probe_radius)),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn parse_num(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, found `{v}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, found `{v}`"))
    }
}

fn parse_count(v: &str) -> std::result::Result<usize, String> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer, found `{v}`")),
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(format!("expected true or false, found `{v}`")),
    }
}

fn parse_list<X: FromStr>(v: &str) -> std::result::Result<Vec<X>, String> {
    v.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<X>().map_err(|_| format!("cannot parse list item `{s}`"))
        })
        .collect()
}

fn parse_vec3(v: &str) -> std::result::Result<Vec3<f64>, String> {
    let xs = parse_list::<f64>(v)?;
    match xs[..] {
        [a, b, c] if xs.iter().all(|x| x.is_finite()) => Ok([a, b, c]),
        _ => Err(format!("expected 3 finite numbers, found `{v}`")),
    }
}

/// Default output location for a run.
pub fn default_output_dir(cfg: &ExperimentConfig) -> PathBuf {
    PathBuf::from("out").join(&cfg.name)
}
