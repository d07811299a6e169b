//! Concrete geometric data for the push-out construction: compact obstacle
//! sets with decidable membership margins, shrink schedules, the graph
//! transform `ψ(z, ζ) = (z, ζ - f(z))`, and deterministic low-discrepancy
//! samplers for sets and their boundaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calg::{AlgError, CVec, Cpx, MultiPoly, PolyMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error("invalid scenario data: {0}")]
    Invalid(String),
    #[error("scenario rejected: {reason} (measured {measured:e}, required {required:e})")]
    Admission {
        reason: String,
        measured: f64,
        required: f64,
    },
    #[error("parameter point lies outside L (signed gap {gap:e})")]
    OutsideParameterSet { gap: f64 },
}

/// Compact set with an explicit signed membership margin.
///
/// `signed_gap(x) <= 0` iff `x` belongs to the set; for balls the gap is the
/// Euclidean distance to the centre minus the radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompactSet {
    Ball {
        center: CVec,
        radius: f64,
    },
    Polydisc {
        center: CVec,
        radii: Vec<f64>,
    },
    Union {
        parts: Vec<CompactSet>,
        convexity_assumed: bool,
    },
}

impl CompactSet {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self {
            CompactSet::Ball { radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(ScenarioError::Invalid("ball radius must be positive".into()));
                }
            }
            CompactSet::Polydisc { center, radii } => {
                if center.len() != radii.len() {
                    return Err(ScenarioError::Invalid(
                        "polydisc radii length must match dimension".into(),
                    ));
                }
                if radii.iter().any(|r| !(*r > 0.0)) {
                    return Err(ScenarioError::Invalid(
                        "polydisc radii must be positive".into(),
                    ));
                }
            }
            CompactSet::Union { parts, .. } => {
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            CompactSet::Ball { center, .. } => center.len(),
            CompactSet::Polydisc { center, .. } => center.len(),
            CompactSet::Union { parts, .. } => parts.first().map(|p| p.dim()).unwrap_or(0),
        }
    }

    pub fn is_empty_union(&self) -> bool {
        matches!(self, CompactSet::Union { parts, .. } if parts.is_empty())
    }

    /// Signed distance surrogate: nonpositive inside, positive outside.
    pub fn signed_gap(&self, x: &CVec) -> Result<f64, ScenarioError> {
        match self {
            CompactSet::Ball { center, radius } => Ok(x.dist(center)? - radius),
            CompactSet::Polydisc { center, radii } => {
                if x.len() != center.len() {
                    return Err(ScenarioError::Alg(AlgError::DimMismatch {
                        expected: center.len(),
                        got: x.len(),
                    }));
                }
                let mut gap = f64::NEG_INFINITY;
                for i in 0..radii.len() {
                    gap = gap.max((x[i] - center[i]).norm() - radii[i]);
                }
                Ok(gap)
            }
            CompactSet::Union { parts, .. } => {
                let mut gap = f64::INFINITY;
                for p in parts {
                    gap = gap.min(p.signed_gap(x)?);
                }
                Ok(gap)
            }
        }
    }

    /// Metric inflation by `c >= 0`.
    pub fn inflate(&self, c: f64) -> CompactSet {
        match self {
            CompactSet::Ball { center, radius } => CompactSet::Ball {
                center: center.clone(),
                radius: radius + c,
            },
            CompactSet::Polydisc { center, radii } => CompactSet::Polydisc {
                center: center.clone(),
                radii: radii.iter().map(|r| r + c).collect(),
            },
            CompactSet::Union {
                parts,
                convexity_assumed,
            } => CompactSet::Union {
                parts: parts.iter().map(|p| p.inflate(c)).collect(),
                convexity_assumed: *convexity_assumed,
            },
        }
    }

    /// Translate by a vector of the same dimension.
    pub fn translate(&self, shift: &CVec) -> Result<CompactSet, ScenarioError> {
        Ok(match self {
            CompactSet::Ball { center, radius } => CompactSet::Ball {
                center: center.add(shift)?,
                radius: *radius,
            },
            CompactSet::Polydisc { center, radii } => CompactSet::Polydisc {
                center: center.add(shift)?,
                radii: radii.clone(),
            },
            CompactSet::Union {
                parts,
                convexity_assumed,
            } => CompactSet::Union {
                parts: parts
                    .iter()
                    .map(|p| p.translate(shift))
                    .collect::<Result<_, _>>()?,
                convexity_assumed: *convexity_assumed,
            },
        })
    }

    /// A radius scale for margins: ball radius, max polydisc radius, max over
    /// union parts.
    pub fn radius_scale(&self) -> f64 {
        match self {
            CompactSet::Ball { radius, .. } => *radius,
            CompactSet::Polydisc { radii, .. } => radii.iter().cloned().fold(0.0, f64::max),
            CompactSet::Union { parts, .. } => {
                parts.iter().map(|p| p.radius_scale()).fold(0.0, f64::max)
            }
        }
    }
}

/// Decreasing inflation gaps `c_1 > c_2 > ... -> 0` defining `K_i` as the
/// base set inflated by `c_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkSchedule {
    pub c1: f64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// Optional explicit leading gaps overriding the geometric rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<f64>>,
}

fn default_ratio() -> f64 {
    0.5
}

impl ShrinkSchedule {
    pub fn geometric(c1: f64) -> Self {
        Self {
            c1,
            ratio: 0.5,
            explicit: None,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.c1 > 0.0) || !(self.ratio > 0.0) || !(self.ratio < 1.0) {
            return Err(ScenarioError::Invalid(
                "shrink schedule requires c1 > 0 and 0 < ratio < 1".into(),
            ));
        }
        if let Some(gaps) = &self.explicit {
            let mut prev = f64::INFINITY;
            for &g in gaps {
                if !(g > 0.0) || g >= prev {
                    return Err(ScenarioError::Invalid(
                        "explicit gaps must be positive and strictly decreasing".into(),
                    ));
                }
                prev = g;
            }
        }
        Ok(())
    }

    /// Gap `c_i` for stage `i >= 1`.
    pub fn gap(&self, i: usize) -> f64 {
        assert!(i >= 1, "shrink schedule is 1-indexed");
        if let Some(gaps) = &self.explicit {
            if i <= gaps.len() {
                return gaps[i - 1];
            }
            let last = *gaps.last().unwrap_or(&self.c1);
            return last * self.ratio.powi((i - gaps.len()) as i32);
        }
        self.c1 * self.ratio.powi((i - 1) as i32)
    }
}

/// Fixed obstacle or a parameter-dependent family per the variable-fibre
/// variant: the base set translated by a polynomial shift of the parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObstacleSpec {
    Fixed { set: CompactSet },
    Moving { base: CompactSet, shift: PolyMap },
}

impl ObstacleSpec {
    pub fn set_at(&self, z: &CVec) -> Result<CompactSet, ScenarioError> {
        match self {
            ObstacleSpec::Fixed { set } => Ok(set.clone()),
            ObstacleSpec::Moving { base, shift } => {
                let s = shift.eval(z)?;
                base.translate(&s)
            }
        }
    }

    pub fn base(&self) -> &CompactSet {
        match self {
            ObstacleSpec::Fixed { set } => set,
            ObstacleSpec::Moving { base, .. } => base,
        }
    }

    pub fn is_moving(&self) -> bool {
        matches!(self, ObstacleSpec::Moving { .. })
    }
}

/// Tolerances and guards for scenario admission and plan evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Admission margin between `f(L)` and `K_1`; `None` uses
    /// `0.05 * radius_scale(K)`.
    #[serde(default)]
    pub margin_tau: Option<f64>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_conv_tol")]
    pub conv_tol: f64,
}

fn default_eps0() -> f64 {
    1e-3
}

fn default_conv_tol() -> f64 {
    1e-8
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            margin_tau: None,
            eps0: default_eps0(),
            conv_tol: default_conv_tol(),
        }
    }
}

/// Serializable scenario data; [`Scenario::new`] performs the sampled
/// admission checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub name: String,
    /// Fibre dimension `n >= 2`.
    pub n: usize,
    /// Parameter dimension `N >= 0`.
    pub param_dim: usize,
    pub obstacle: ObstacleSpec,
    /// Parameter set `L` in `C^N`.
    pub l_set: CompactSet,
    /// Centre map `f : C^N -> C^n`.
    pub f: PolyMap,
    pub schedule: ShrinkSchedule,
    /// Radius of the small fibre ball `B`.
    pub ball_b: f64,
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

pub(crate) fn default_schema_version() -> u32 {
    1
}

/// Admitted scenario: the hypotheses have been checked on samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioConfig", into = "ScenarioConfig")]
pub struct Scenario {
    config: ScenarioConfig,
}

impl TryFrom<ScenarioConfig> for Scenario {
    type Error = ScenarioError;
    fn try_from(c: ScenarioConfig) -> Result<Self, ScenarioError> {
        Scenario::new(c)
    }
}

impl From<Scenario> for ScenarioConfig {
    fn from(s: Scenario) -> ScenarioConfig {
        s.config
    }
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        let c = &config;
        if c.n < 2 {
            return Err(ScenarioError::Invalid("fibre dimension must be >= 2".into()));
        }
        if !(c.ball_b > 0.0) {
            return Err(ScenarioError::Invalid("ball_b must be positive".into()));
        }
        c.schedule.validate()?;
        c.l_set.validate()?;
        c.obstacle.base().validate()?;
        if c.l_set.dim() != c.param_dim && !c.l_set.is_empty_union() {
            return Err(ScenarioError::Invalid(
                "parameter set dimension must equal param_dim".into(),
            ));
        }
        if c.f.src_dim() != c.param_dim || c.f.dst_dim() != c.n {
            return Err(ScenarioError::Invalid(
                "centre map must send C^param_dim to C^n".into(),
            ));
        }
        if c.obstacle.base().dim() != c.n && !c.obstacle.base().is_empty_union() {
            return Err(ScenarioError::Invalid(
                "obstacle dimension must equal n".into(),
            ));
        }
        if let ObstacleSpec::Moving { shift, .. } = &c.obstacle {
            if shift.src_dim() != c.param_dim || shift.dst_dim() != c.n {
                return Err(ScenarioError::Invalid(
                    "obstacle shift must send C^param_dim to C^n".into(),
                ));
            }
        }

        let scenario = Self { config };
        scenario.check_admission(256)?;
        Ok(scenario)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn param_dim(&self) -> usize {
        self.config.param_dim
    }

    pub fn ball_b(&self) -> f64 {
        self.config.ball_b
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn margin_tau(&self) -> f64 {
        self.config
            .tolerances
            .margin_tau
            .unwrap_or(0.05 * self.config.obstacle.base().radius_scale())
    }

    /// Obstacle set at a parameter value.
    pub fn obstacle_at(&self, z: &CVec) -> Result<CompactSet, ScenarioError> {
        self.config.obstacle.set_at(z)
    }

    /// Inflated obstacle `K_i` at a parameter value.
    pub fn k_stage_at(&self, i: usize, z: &CVec) -> Result<CompactSet, ScenarioError> {
        Ok(self.obstacle_at(z)?.inflate(self.config.schedule.gap(i)))
    }

    /// Sampled realization of the theorem hypotheses: every sampled `f(z)`
    /// keeps a `tau` margin from `K_1(z)`, and no sampled point of
    /// `S_1 = ψ(L x K_1)` meets `L x B`.
    fn check_admission(&self, count: usize) -> Result<(), ScenarioError> {
        if self.config.obstacle.base().is_empty_union() {
            return Ok(());
        }
        let tau = self.margin_tau();
        let seed = mix_seed(self.config.seed, SEED_ADMISSION);
        let z_samples = sample_mixed(&self.config.l_set, self.config.param_dim, count, seed);
        let mut min_margin = f64::INFINITY;
        for z in &z_samples {
            let fz = self.f_at(z)?;
            let gap = self.k_stage_at(1, z)?.signed_gap(&fz)?;
            min_margin = min_margin.min(gap);
        }
        if min_margin < tau {
            return Err(ScenarioError::Admission {
                reason: "sampled f(z) comes too close to K_1".into(),
                measured: min_margin,
                required: tau,
            });
        }
        let pushed = self.pushed_set_samples(1, count, mix_seed(self.config.seed, SEED_ADMISSION_B))?;
        let mut min_fibre = f64::INFINITY;
        for s in &pushed {
            let (_, zeta) = s.split(self.config.param_dim)?;
            min_fibre = min_fibre.min(zeta.norm());
        }
        if min_fibre <= self.config.ball_b {
            return Err(ScenarioError::Admission {
                reason: "sampled S_1 intersects L x B".into(),
                measured: min_fibre,
                required: self.config.ball_b,
            });
        }
        Ok(())
    }

    pub fn f_at(&self, z: &CVec) -> Result<CVec, ScenarioError> {
        Ok(self.config.f.eval(z)?)
    }

    /// Deterministic samples of `S_i = ψ(L x K_i)` as points of `C^{N+n}`;
    /// at least half the samples combine boundary points of `L` and of `K_i`.
    pub fn pushed_set_samples(
        &self,
        i: usize,
        count: usize,
        seed: u64,
    ) -> Result<Vec<CVec>, ScenarioError> {
        if self.config.obstacle.base().is_empty_union() {
            return Ok(Vec::new());
        }
        let n_boundary = count.div_ceil(2);
        let z_bnd = sample_boundary(
            &self.config.l_set,
            self.config.param_dim,
            n_boundary,
            mix_seed(seed, 1),
        );
        let z_vol = sample_volume(
            &self.config.l_set,
            self.config.param_dim,
            count - n_boundary,
            mix_seed(seed, 2),
        );
        let mut out = Vec::with_capacity(count);
        for (pos, z) in z_bnd.iter().chain(z_vol.iter()).enumerate() {
            let k_set = self.k_stage_at(i, z)?;
            let k = if pos < n_boundary {
                sample_boundary_indexed(&k_set, self.config.n, pos, mix_seed(seed, 3))
            } else {
                sample_volume_indexed(&k_set, self.config.n, pos, mix_seed(seed, 4))
            };
            let point = z.concat(&k);
            out.push(graph_transform(&self.config.f, GraphDirection::Forward, &point)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphDirection {
    /// `(z, ζ) -> (z, ζ - f(z))`
    Forward,
    /// `(z, ζ) -> (z, ζ + f(z))`
    Inverse,
}

/// Coordinate change straightening the graph of `f`.
pub fn graph_transform(
    f: &PolyMap,
    direction: GraphDirection,
    point: &CVec,
) -> Result<CVec, ScenarioError> {
    let expected = f.src_dim() + f.dst_dim();
    if point.len() != expected {
        return Err(ScenarioError::Alg(AlgError::DimMismatch {
            expected,
            got: point.len(),
        }));
    }
    let (z, zeta) = point.split(f.src_dim())?;
    let fz = f.eval(&z)?;
    let new_zeta = match direction {
        GraphDirection::Forward => zeta.sub(&fz)?,
        GraphDirection::Inverse => zeta.add(&fz)?,
    };
    Ok(z.concat(&new_zeta))
}

// ---------------------------------------------------------------------------
// Deterministic low-discrepancy sampling
// ---------------------------------------------------------------------------

const PRIMES: [u64; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

pub(crate) const SEED_ADMISSION: u64 = 0x41444d31;
pub(crate) const SEED_ADMISSION_B: u64 = 0x41444d32;

/// SplitMix64 step used to derive purpose-specific seeds from one master seed.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Halton coordinate with a seeded Cranley-Patterson rotation.
fn ld_coord(index: u64, dim: usize, seed: u64) -> f64 {
    let h = halton(index + 1, PRIMES[dim % PRIMES.len()]);
    let shift = (mix_seed(seed, dim as u64 + 1) >> 11) as f64 / (1u64 << 53) as f64;
    let v = h + shift;
    v - v.floor()
}

fn gaussian_pair(u1: f64, u2: f64) -> (f64, f64) {
    let u1 = u1.clamp(1e-12, 1.0);
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}

fn ball_point(center: &CVec, radius: f64, dim: usize, index: u64, seed: u64, boundary: bool) -> CVec {
    if dim == 0 {
        return CVec::zero(0);
    }
    // Direction from 2*dim Gaussians, radius from the final coordinate.
    let mut g = Vec::with_capacity(2 * dim);
    for pair in 0..dim {
        let (a, b) = gaussian_pair(
            ld_coord(index, 2 * pair, seed),
            ld_coord(index, 2 * pair + 1, seed),
        );
        g.push(a);
        g.push(b);
    }
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let r = if boundary {
        radius
    } else {
        radius * ld_coord(index, 2 * dim, seed).powf(1.0 / (2.0 * dim as f64))
    };
    let coords: Vec<Cpx> = (0..dim)
        .map(|i| center[i] + Cpx::new(g[2 * i] / norm * r, g[2 * i + 1] / norm * r))
        .collect();
    CVec::from_raw(coords)
}

fn polydisc_point(
    center: &CVec,
    radii: &[f64],
    index: u64,
    seed: u64,
    boundary: bool,
) -> CVec {
    let coords: Vec<Cpx> = radii
        .iter()
        .enumerate()
        .map(|(i, &rad)| {
            let theta = 2.0 * std::f64::consts::PI * ld_coord(index, 2 * i, seed);
            let rho = if boundary {
                rad
            } else {
                rad * ld_coord(index, 2 * i + 1, seed).sqrt()
            };
            center[i] + Cpx::from_polar(rho, theta)
        })
        .collect();
    CVec::from_raw(coords)
}

fn set_point(set: &CompactSet, dim: usize, index: u64, seed: u64, boundary: bool) -> CVec {
    match set {
        CompactSet::Ball { center, radius } => {
            ball_point(center, *radius, dim, index, seed, boundary)
        }
        CompactSet::Polydisc { center, radii } => {
            polydisc_point(center, radii, index, seed, boundary)
        }
        CompactSet::Union { parts, .. } => {
            if parts.is_empty() {
                CVec::zero(dim)
            } else {
                let part = (index % parts.len() as u64) as usize;
                set_point(&parts[part], dim, index / parts.len() as u64, seed, boundary)
            }
        }
    }
}

/// Deterministic volume samples: identical `(set, count, seed)` yields an
/// identical list.
pub fn sample_volume(set: &CompactSet, dim: usize, count: usize, seed: u64) -> Vec<CVec> {
    (0..count as u64)
        .map(|i| set_point(set, dim, i, seed, false))
        .collect()
}

/// Deterministic boundary samples (sphere for balls, distinguished boundary
/// for polydiscs).
pub fn sample_boundary(set: &CompactSet, dim: usize, count: usize, seed: u64) -> Vec<CVec> {
    (0..count as u64)
        .map(|i| set_point(set, dim, i, seed, true))
        .collect()
}

/// Mix of volume and boundary samples, alternating.
pub fn sample_mixed(set: &CompactSet, dim: usize, count: usize, seed: u64) -> Vec<CVec> {
    (0..count as u64)
        .map(|i| set_point(set, dim, i, seed, i % 2 == 0))
        .collect()
}

fn sample_volume_indexed(set: &CompactSet, dim: usize, index: usize, seed: u64) -> CVec {
    set_point(set, dim, index as u64, seed, false)
}

fn sample_boundary_indexed(set: &CompactSet, dim: usize, index: usize, seed: u64) -> CVec {
    set_point(set, dim, index as u64, seed, true)
}

// ---------------------------------------------------------------------------
// Shipped presets
// ---------------------------------------------------------------------------

fn obstacle_ball() -> CompactSet {
    CompactSet::Ball {
        center: CVec::new(vec![Cpx::new(2.0, 0.0), Cpx::new(0.0, 0.0)]).unwrap(),
        radius: 0.5,
    }
}

fn trivial_l() -> CompactSet {
    CompactSet::Ball {
        center: CVec::zero(0),
        radius: 1.0,
    }
}

fn unit_disc() -> CompactSet {
    CompactSet::Ball {
        center: CVec::zero(1),
        radius: 1.0,
    }
}

/// `ball-avoid`: no parameters, obstacle ball((2,0), 0.5), centre map 0.
pub fn preset_ball_avoid() -> ScenarioConfig {
    ScenarioConfig {
        schema_version: 1,
        name: "ball-avoid".into(),
        n: 2,
        param_dim: 0,
        obstacle: ObstacleSpec::Fixed {
            set: obstacle_ball(),
        },
        l_set: trivial_l(),
        f: PolyMap::zero(0, 2),
        schedule: ShrinkSchedule::geometric(0.25),
        ball_b: 0.2,
        seed: 20260811,
        tolerances: Tolerances::default(),
    }
}

/// `param-disc`: parameter disc, centre map `f(z) = (z/2, 0)`, same obstacle.
pub fn preset_param_disc() -> ScenarioConfig {
    let f = PolyMap::new(
        1,
        vec![
            MultiPoly::monomial(1, vec![1], Cpx::new(0.5, 0.0)).unwrap(),
            MultiPoly::zero(1),
        ],
    )
    .unwrap();
    ScenarioConfig {
        schema_version: 1,
        name: "param-disc".into(),
        n: 2,
        param_dim: 1,
        obstacle: ObstacleSpec::Fixed {
            set: obstacle_ball(),
        },
        l_set: unit_disc(),
        f,
        schedule: ShrinkSchedule::geometric(0.25),
        ball_b: 0.2,
        seed: 20260811,
        tolerances: Tolerances::default(),
    }
}

/// `moving-fibre`: obstacle fibres `K_z = ball((2 + z/4, 0), 0.5)`.
pub fn preset_moving_fibre() -> ScenarioConfig {
    let shift = PolyMap::new(
        1,
        vec![
            MultiPoly::monomial(1, vec![1], Cpx::new(0.25, 0.0)).unwrap(),
            MultiPoly::zero(1),
        ],
    )
    .unwrap();
    ScenarioConfig {
        schema_version: 1,
        name: "moving-fibre".into(),
        n: 2,
        param_dim: 1,
        obstacle: ObstacleSpec::Moving {
            base: obstacle_ball(),
            shift,
        },
        l_set: unit_disc(),
        f: PolyMap::zero(1, 2),
        schedule: ShrinkSchedule::geometric(0.25),
        ball_b: 0.2,
        seed: 20260811,
        tolerances: Tolerances::default(),
    }
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    match name {
        "ball-avoid" => Some(preset_ball_avoid()),
        "param-disc" => Some(preset_param_disc()),
        "moving-fibre" => Some(preset_moving_fibre()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cpx {
        Cpx::new(re, im)
    }

    #[test]
    fn signed_gap_examples() {
        let ball = CompactSet::Ball {
            center: CVec::zero(2),
            radius: 1.0,
        };
        let x = CVec::new(vec![c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((ball.signed_gap(&x).unwrap() - 1.0).abs() < 1e-15);
        assert!((ball.signed_gap(&CVec::zero(2)).unwrap() + 1.0).abs() < 1e-15);

        let pd = CompactSet::Polydisc {
            center: CVec::zero(2),
            radii: vec![1.0, 2.0],
        };
        let y = CVec::new(vec![c(0.0, 0.0), c(0.0, 3.0)]).unwrap();
        assert!((pd.signed_gap(&y).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_nesting_for_balls() {
        let sched = ShrinkSchedule::geometric(0.25);
        let base = CompactSet::Ball {
            center: CVec::zero(2),
            radius: 0.5,
        };
        let x = CVec::new(vec![c(1.3, 0.0), c(0.0, -0.4)]).unwrap();
        for i in 1..8 {
            let gi = base.inflate(sched.gap(i)).signed_gap(&x).unwrap();
            let gi1 = base.inflate(sched.gap(i + 1)).signed_gap(&x).unwrap();
            let diff = sched.gap(i) - sched.gap(i + 1);
            assert!(diff > 0.0);
            assert!((gi1 - gi - diff).abs() < 1e-12, "inflation monotonicity");
        }
    }

    #[test]
    fn graph_transform_examples() {
        // f = 0 is the identity.
        let f0 = PolyMap::zero(1, 2);
        let p = CVec::new(vec![c(1.0, 0.0), c(3.0, 0.0), c(7.0, 0.0)]).unwrap();
        assert_eq!(
            graph_transform(&f0, GraphDirection::Forward, &p).unwrap(),
            p
        );

        // f(z) = (z, 0): (1, (3, 7)) -> (1, (2, 7)).
        let f = PolyMap::new(
            1,
            vec![MultiPoly::var(1, 0).unwrap(), MultiPoly::zero(1)],
        )
        .unwrap();
        let out = graph_transform(&f, GraphDirection::Forward, &p).unwrap();
        assert_eq!(
            out.as_slice(),
            &[c(1.0, 0.0), c(2.0, 0.0), c(7.0, 0.0)]
        );

        // Round trip.
        let mut r = crate::testkit::rng(12);
        for _ in 0..1000 {
            let f = crate::testkit::sample_poly_map(&mut r, 2, 3, 4, 1.0);
            let p = crate::testkit::sample_cvec(&mut r, 4, 2.0);
            let fwd = graph_transform(&f, GraphDirection::Forward, &p).unwrap();
            let back = graph_transform(&f, GraphDirection::Inverse, &fwd).unwrap();
            assert!(back.sub(&p).unwrap().norm() <= 1e-13 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn sampler_is_deterministic_and_in_set() {
        let ball = CompactSet::Ball {
            center: CVec::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap(),
            radius: 0.7,
        };
        let a = sample_volume(&ball, 2, 200, 42);
        let b = sample_volume(&ball, 2, 200, 42);
        assert_eq!(a, b);
        for p in &a {
            assert!(ball.signed_gap(p).unwrap() <= 1e-12);
        }
        let bd = sample_boundary(&ball, 2, 100, 42);
        for p in &bd {
            assert!(ball.signed_gap(p).unwrap().abs() <= 1e-12);
        }
        let other = sample_volume(&ball, 2, 200, 43);
        assert_ne!(a, other);
    }

    #[test]
    fn polydisc_sampler_in_set() {
        let pd = CompactSet::Polydisc {
            center: CVec::zero(2),
            radii: vec![0.5, 2.0],
        };
        for p in sample_volume(&pd, 2, 200, 7) {
            assert!(pd.signed_gap(&p).unwrap() <= 1e-12);
        }
        for p in sample_boundary(&pd, 2, 50, 7) {
            assert!(pd.signed_gap(&p).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn pushed_samples_inside_inflated_obstacle() {
        // With f = 0 the pushed samples are (z, k) with k in K_i.
        let scn = Scenario::new(preset_ball_avoid()).unwrap();
        let samples = scn.pushed_set_samples(2, 300, 99).unwrap();
        let k2 = scn
            .k_stage_at(2, &CVec::zero(0))
            .unwrap();
        for s in &samples {
            let (_, zeta) = s.split(0).unwrap();
            assert!(k2.signed_gap(&zeta).unwrap() <= 1e-10);
        }
        // Determinism end to end.
        let again = scn.pushed_set_samples(2, 300, 99).unwrap();
        assert_eq!(samples, again);
    }

    #[test]
    fn presets_admit() {
        for name in ["ball-avoid", "param-disc", "moving-fibre"] {
            let cfg = preset(name).unwrap();
            Scenario::new(cfg).expect(name);
        }
    }

    #[test]
    fn admission_rejects_centre_inside_obstacle() {
        let mut cfg = preset_param_disc();
        // Centre map landing inside the obstacle: f(z) = (2, 0).
        cfg.f = PolyMap::new(
            1,
            vec![
                MultiPoly::constant(1, c(2.0, 0.0)),
                MultiPoly::zero(1),
            ],
        )
        .unwrap();
        match Scenario::new(cfg) {
            Err(ScenarioError::Admission { .. }) => {}
            other => panic!("expected admission failure, got {other:?}"),
        }
    }

    #[test]
    fn moving_fibre_obstacle_tracks_parameter() {
        let scn = Scenario::new(preset_moving_fibre()).unwrap();
        let z = CVec::new(vec![c(1.0, 0.0)]).unwrap();
        let k = scn.obstacle_at(&z).unwrap();
        match k {
            CompactSet::Ball { center, radius } => {
                assert!((center[0] - c(2.25, 0.0)).norm() < 1e-15);
                assert_eq!(radius, 0.5);
            }
            other => panic!("unexpected set {other:?}"),
        }
    }
}
