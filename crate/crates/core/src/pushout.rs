//! The inductive push-out engine. Stage `k` produces a fibred,
//! origin-fixing automorphism word that approximates the identity on
//! `L x kB` while moving the current image of the pushed set `S_k` past
//! `(k+1)B`, so that the composite `Φ^k = Φ_k ∘ ... ∘ Φ_1` expels
//! `S = ψ(L x K)` to infinity while converging on the bounded-orbit set.
//! The limit of the inverse words yields the family
//! `F(z, ζ) = φ(z, ζ) + f(z)` whose fibre images are Fatou-Bieberbach
//! domains avoiding the obstacle.
//!
//! A stage word is a short sequential composition of exactly-flowed single
//! fields: a lift shear separates the pushed cluster from the ball in one
//! fibre coordinate, then per-coordinate multiplicative overshears realize
//! the fibre scaling `θ_r` on the separated cluster. Every phase is a
//! weighted least-squares dichotomy in one fibre coordinate with polynomial
//! parameter dependence, the exact time-one flow of a single shear or
//! overshear field. The word is certified a posteriori on fresh samples;
//! on failure the data degree and identity weight escalate and the stage is
//! rebuilt.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autword::{AutWord, ParamAutWord, ParamLetter, PreparedWord, WordError};
use crate::calg::{AlgError, CMatrix, CVec, Cpx, MultiPoly};
use crate::fields::{matrix_rank, FieldError};
use crate::scenario::{
    mix_seed, sample_boundary, sample_mixed, sample_volume, CompactSet, Scenario, ScenarioError,
};

const SEED_FIT_PARAM: u64 = 0x464950;
const SEED_FIT_NEAR: u64 = 0x46494e;
const SEED_FIT_PUSHED: u64 = 0x464953;
const SEED_CERT_PARAM: u64 = 0x435050;
const SEED_CERT_NEAR: u64 = 0x43504e;
const SEED_CERT_PUSHED: u64 = 0x435053;
const SEED_FB_PARAM: u64 = 0x46425a;
const SEED_FB_AVOID: u64 = 0x464241;
const SEED_FB_INJ: u64 = 0x46424a;
const SEED_FB_SIGMA: u64 = 0x464253;

#[derive(Debug, Error)]
pub enum PushOutError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error("stage {stage} failed certification of condition {condition}: measured deviation {measured_deviation:e} (budget {eps:e}), pushed gap {measured_gap:e} after {attempts} attempts")]
    Certification {
        stage: usize,
        condition: String,
        measured_deviation: f64,
        eps: f64,
        measured_gap: f64,
        attempts: usize,
        /// Stages certified before the failure.
        partial: Vec<Stage>,
    },
    #[error("least-squares system could not be factorized")]
    FitSingular,
    #[error("parameter point lies outside L (signed gap {gap:e})")]
    OutsideParameterSet { gap: f64 },
}

/// Engine knobs. Every sampled quantity derives from the scenario seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    #[serde(default = "d_max_stages")]
    pub max_stages: usize,
    /// Degree of the letter-data dichotomies in the pivot coordinate.
    #[serde(default = "d_fit_degree")]
    pub fit_degree: u32,
    #[serde(default = "d_param_degree")]
    pub param_degree: u32,
    #[serde(default = "d_retries")]
    pub retries: usize,
    /// Per-stage fibre scaling factor `r` applied to the pushed cluster.
    #[serde(default = "d_scale_r")]
    pub scale_r: f64,
    /// The identity-side rows are weighted `boost / (phase budget)`; the
    /// boost grows fourfold per retry.
    #[serde(default = "d_near_weight_boost")]
    pub near_weight_boost: f64,
    #[serde(default = "d_fit_fibre_samples")]
    pub fit_fibre_samples: usize,
    #[serde(default = "d_fit_param_samples")]
    pub fit_param_samples: usize,
    #[serde(default = "d_cert_fibre_samples")]
    pub cert_fibre_samples: usize,
    #[serde(default = "d_cert_param_samples")]
    pub cert_param_samples: usize,
    /// Escape classification radius for limit evaluation, as a multiple of
    /// `max_stages * ball_b`.
    #[serde(default = "d_escape_factor")]
    pub escape_radius_factor: f64,
}

fn d_max_stages() -> usize {
    8
}
fn d_fit_degree() -> u32 {
    20
}
fn d_param_degree() -> u32 {
    6
}
fn d_retries() -> usize {
    3
}
fn d_scale_r() -> f64 {
    2.0
}
fn d_near_weight_boost() -> f64 {
    3.0
}
fn d_fit_fibre_samples() -> usize {
    700
}
fn d_fit_param_samples() -> usize {
    12
}
fn d_cert_fibre_samples() -> usize {
    1600
}
fn d_cert_param_samples() -> usize {
    64
}
fn d_escape_factor() -> f64 {
    16.0
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_stages: d_max_stages(),
            fit_degree: d_fit_degree(),
            param_degree: d_param_degree(),
            retries: d_retries(),
            scale_r: d_scale_r(),
            near_weight_boost: d_near_weight_boost(),
            fit_fibre_samples: d_fit_fibre_samples(),
            fit_param_samples: d_fit_param_samples(),
            cert_fibre_samples: d_cert_fibre_samples(),
            cert_param_samples: d_cert_param_samples(),
            escape_radius_factor: d_escape_factor(),
        }
    }
}

/// Sampled evidence for the stage conditions: identity approximation on
/// `L x kB` and expulsion of the pushed set past `(k+1)B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCertificate {
    pub eps: f64,
    pub max_identity_deviation_on_kb: f64,
    /// `min |fibre(Φ^k(s))| - (k+1) b` over pushed samples; `None` when the
    /// obstacle is empty and nothing is pushed.
    pub min_gap_pushed: Option<f64>,
    /// Expulsion trace value `min |fibre(Φ^k(s))|`.
    pub min_pushed_modulus: Option<f64>,
    pub near_samples: usize,
    pub pushed_samples: usize,
    pub param_samples: usize,
    pub seed: u64,
    pub fit_degree_used: u32,
    pub attempts_used: usize,
    /// Maximum far-side relative fit residual across the stage phases.
    pub fit_residual_far_rel: f64,
    pub word_letters: usize,
    pub convexity_note: String,
}

/// One certified stage of the induction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub index: usize,
    pub word: ParamAutWord,
    pub certificate: StageCertificate,
}

/// A certified plan: the scenario, the engine configuration snapshot, and
/// the stage sequence with certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PushOutPlan {
    #[serde(default = "crate::scenario::default_schema_version")]
    pub schema_version: u32,
    pub scenario: Scenario,
    pub engine: EngineConfig,
    pub stages: Vec<Stage>,
}

/// Per-run report rows, serialized alongside the plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario_name: String,
    pub stages: Vec<StageCertificate>,
    /// `min |fibre(Φ^k(S_k))|` per stage.
    pub expulsion_trace: Vec<f64>,
    pub assumptions: Vec<String>,
    pub eps_budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LimitClassification {
    Converged { value: CVec, stage_reached: usize },
    Escaped { stage: usize },
    Undecided { max_stages: usize },
}

fn fibre_ball(n: usize, radius: f64) -> CompactSet {
    CompactSet::Ball {
        center: CVec::zero(n),
        radius,
    }
}

fn param_samples_for(scenario: &Scenario, count: usize, seed: u64) -> Vec<CVec> {
    if scenario.param_dim() == 0 {
        vec![CVec::zero(0)]
    } else {
        sample_mixed(&scenario.config().l_set, scenario.param_dim(), count, seed)
    }
}

// ---------------------------------------------------------------------------
// Stage construction
// ---------------------------------------------------------------------------

/// Apply the fibre parts of specialized stage words in sequence.
fn push_fibre_through(words: &[AutWord], zeta: &CVec) -> Result<CVec, WordError> {
    let mut cur = zeta.clone();
    for w in words {
        cur = w.apply(&cur)?;
    }
    Ok(cur)
}

/// Per-parameter sample clouds for one stage: fibre points of `L x kB` and
/// the current positions of `S_k` samples under the prior stages. The
/// clouds advance through the phase letters as the stage word grows.
struct StageClouds {
    n: usize,
    z_points: Vec<CVec>,
    near: Vec<Vec<CVec>>,
    pushed: Vec<Vec<CVec>>,
}

impl StageClouds {
    #[allow(clippy::too_many_arguments)]
    fn build(
        scenario: &Scenario,
        k: usize,
        prior: &[Stage],
        z_points: Vec<CVec>,
        fibre_per_z: usize,
        seed_near: u64,
        seed_pushed: u64,
    ) -> Result<Self, PushOutError> {
        let n = scenario.n();
        let b = scenario.ball_b();
        let near_ball = fibre_ball(n, k as f64 * b);
        let mut near = Vec::with_capacity(z_points.len());
        let mut pushed = Vec::with_capacity(z_points.len());
        for (zi, z) in z_points.iter().enumerate() {
            let stack: Vec<AutWord> = prior
                .iter()
                .map(|s| s.word.specialize(z))
                .collect::<Result<_, _>>()?;
            let n_bnd = fibre_per_z / 2;
            let mut near_f =
                sample_boundary(&near_ball, n, n_bnd, mix_seed(seed_near, (zi as u64) << 8));
            near_f.extend(sample_volume(
                &near_ball,
                n,
                fibre_per_z - n_bnd,
                mix_seed(seed_near, ((zi as u64) << 8) | 1),
            ));
            near.push(near_f);

            let k_set = scenario.k_stage_at(k, z)?;
            let f_z = scenario.f_at(z)?;
            let mut cluster =
                sample_boundary(&k_set, n, n_bnd, mix_seed(seed_pushed, (zi as u64) << 8));
            cluster.extend(sample_volume(
                &k_set,
                n,
                fibre_per_z - n_bnd,
                mix_seed(seed_pushed, ((zi as u64) << 8) | 1),
            ));
            let mut cur = Vec::with_capacity(cluster.len());
            for fb in cluster {
                let zeta0 = fb.sub(&f_z)?;
                cur.push(push_fibre_through(&stack, &zeta0)?);
            }
            pushed.push(cur);
        }
        Ok(Self {
            n,
            z_points,
            near,
            pushed,
        })
    }

    fn advance(&mut self, param_dim: usize, letter: &ParamLetter) -> Result<(), PushOutError> {
        let word = ParamAutWord::new(param_dim, self.n, vec![letter.clone()])?;
        for (zi, z) in self.z_points.iter().enumerate() {
            let specialized = word.specialize(z)?;
            for v in self.near[zi].iter_mut().chain(self.pushed[zi].iter_mut()) {
                *v = specialized.apply(v)?;
            }
        }
        Ok(())
    }

    fn min_pushed_coord(&self, j: usize) -> f64 {
        self.pushed
            .iter()
            .flatten()
            .map(|v| v[j].norm())
            .fold(f64::INFINITY, f64::min)
    }

    fn max_pushed_coord(&self, j: usize) -> f64 {
        self.pushed
            .iter()
            .flatten()
            .map(|v| v[j].norm())
            .fold(0.0, f64::max)
    }

    /// Weak-constraint samples covering the band between the identity ball
    /// and the pushed cluster in the coordinate a phase reads, so the
    /// fitted data stays mild wherever orbits transit.
    fn mid_cloud(&self, reading: usize, count_per_z: usize, seed: u64) -> Vec<Vec<CVec>> {
        let radius = 0.9 * self.min_pushed_coord(reading);
        if !(radius > 1e-9) {
            return vec![Vec::new(); self.z_points.len()];
        }
        let ball = fibre_ball(self.n, radius);
        self.z_points
            .iter()
            .enumerate()
            .map(|(zi, _)| sample_volume(&ball, self.n, count_per_z, mix_seed(seed, zi as u64)))
            .collect()
    }
}

fn param_exponents(param_dim: usize, param_degree: u32) -> Vec<Vec<u32>> {
    fn gen(prefix: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if pos == prefix.len() {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=left {
            prefix[pos] = e;
            gen(prefix, pos + 1, left - e, out);
        }
        prefix[pos] = 0;
    }
    let mut out = Vec::new();
    let mut prefix = vec![0u32; param_dim];
    gen(&mut prefix, 0, param_degree, &mut out);
    out.sort();
    out
}

struct PhaseFit {
    data: MultiPoly,
    far_residual_rel: f64,
}

/// Weighted least-squares fit of letter data: a polynomial in the
/// parameters and the single fibre coordinate `pivot`, vanishing at
/// `ζ_pivot = 0`, matching `0` on the near cloud and the prescribed value
/// on the pushed cloud. Returns the polynomial in the data space of a
/// letter acting on coordinate `acting` (parameters first, fibre
/// coordinates except `acting`).
#[allow(clippy::too_many_arguments)]
fn fit_letter_data(
    param_dim: usize,
    n: usize,
    pivot: usize,
    acting: usize,
    clouds: &StageClouds,
    mid: &[Vec<CVec>],
    far_target: Cpx,
    degree: u32,
    param_degree: u32,
    w_near: f64,
    w_mid: f64,
    w_far: f64,
) -> Result<PhaseFit, PushOutError> {
    debug_assert_ne!(pivot, acting);
    let betas = param_exponents(param_dim, param_degree);
    let mut col_exps: Vec<(&Vec<u32>, u32)> = Vec::new();
    for beta in &betas {
        for i in 1..=degree {
            col_exps.push((beta, i));
        }
    }

    let mut rows: Vec<(usize, &CVec, Cpx, f64)> = Vec::new();
    for (zi, _) in clouds.z_points.iter().enumerate() {
        for v in &clouds.near[zi] {
            rows.push((zi, v, Cpx::new(0.0, 0.0), w_near));
        }
        for v in &mid[zi] {
            rows.push((zi, v, Cpx::new(0.0, 0.0), w_mid));
        }
        for v in &clouds.pushed[zi] {
            rows.push((zi, v, far_target, w_far));
        }
    }
    let rho = rows
        .iter()
        .map(|(_, v, _, _)| v[pivot].norm())
        .fold(0.0f64, f64::max)
        .max(1e-12);

    let n_rows = rows.len();
    let n_cols = col_exps.len();
    let mut g = CMatrix::zeros(n_rows, n_cols);
    let mut b = DVector::from_element(n_rows, Cpx::new(0.0, 0.0));
    for (r, (zi, v, target, w)) in rows.iter().enumerate() {
        let z = &clouds.z_points[*zi];
        let base = v[pivot] / rho;
        for (c, (beta, i)) in col_exps.iter().enumerate() {
            let mut val = Cpx::new(*w, 0.0);
            for (bi, &e) in beta.iter().enumerate() {
                for _ in 0..e {
                    val *= z[bi];
                }
            }
            for _ in 0..*i {
                val *= base;
            }
            g[(r, c)] = val;
        }
        b[r] = target * Cpx::new(*w, 0.0);
    }
    let mut col_scale = vec![1.0f64; n_cols];
    for c in 0..n_cols {
        let norm = g.column(c).norm();
        if norm > 0.0 {
            col_scale[c] = norm;
            for r in 0..n_rows {
                g[(r, c)] /= Cpx::new(norm, 0.0);
            }
        }
    }
    let svd = g.clone().svd(false, true);
    let svd = {
        // nalgebra needs both factors for solve
        drop(svd);
        g.clone().svd(true, true)
    };
    let sv_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if sv_max == 0.0 {
        return Err(PushOutError::FitSingular);
    }
    let y = svd
        .solve(&b, 1e-12 * sv_max)
        .map_err(|_| PushOutError::FitSingular)?;

    let fitted = &g * &y;
    let mut far_residual_rel: f64 = 0.0;
    let far_scale = far_target.norm().max(1e-12);
    for (r, (_, _, target, w)) in rows.iter().enumerate() {
        if target.norm() > 0.0 {
            far_residual_rel =
                far_residual_rel.max((fitted[r] - b[r]).norm() / w / far_scale);
        }
    }

    // Assemble in the letter-data space: parameters first, then the fibre
    // coordinates with `acting` removed.
    let pivot_data_pos = param_dim + if pivot < acting { pivot } else { pivot - 1 };
    let data_dim = param_dim + n - 1;
    let mut terms = Vec::with_capacity(n_cols);
    for (c, (beta, i)) in col_exps.iter().enumerate() {
        let coeff = y[c] / Cpx::new(col_scale[c], 0.0) / Cpx::new(rho.powi(*i as i32), 0.0);
        let mut exps = vec![0u32; data_dim];
        exps[..param_dim].copy_from_slice(beta);
        exps[pivot_data_pos] = *i;
        terms.push((exps, coeff));
    }
    Ok(PhaseFit {
        data: MultiPoly::from_terms(data_dim, terms).map_err(PushOutError::Alg)?,
        far_residual_rel,
    })
}

/// Build and certify stage `k` (1-indexed) on top of the prior stages.
pub fn build_stage(
    scenario: &Scenario,
    k: usize,
    prior: &[Stage],
    cfg: &EngineConfig,
) -> Result<Stage, PushOutError> {
    let n = scenario.n();
    let param_dim = scenario.param_dim();
    let b = scenario.ball_b();
    let seed = scenario.seed();
    let eps_k = scenario.config().tolerances.eps0 * 0.5f64.powi(k as i32);
    let convexity_note = convexity_note(scenario);

    // Empty obstacle: nothing to push, the identity stage certifies trivially.
    if scenario.config().obstacle.base().is_empty_union() {
        return Ok(Stage {
            index: k,
            word: ParamAutWord::identity(param_dim, n),
            certificate: StageCertificate {
                eps: eps_k,
                max_identity_deviation_on_kb: 0.0,
                min_gap_pushed: None,
                min_pushed_modulus: None,
                near_samples: 0,
                pushed_samples: 0,
                param_samples: 0,
                seed,
                fit_degree_used: 0,
                attempts_used: 0,
                fit_residual_far_rel: 0.0,
                word_letters: 0,
                convexity_note,
            },
        });
    }

    let ln_r = cfg.scale_r.ln();
    let stage_seed = mix_seed(seed, k as u64);

    let z_fit = param_samples_for(
        scenario,
        cfg.fit_param_samples,
        mix_seed(stage_seed, SEED_FIT_PARAM),
    );
    let fit_per_z = cfg.fit_fibre_samples.div_ceil(z_fit.len());

    // Certification clouds (fresh seeds, fixed across attempts).
    let z_cert = param_samples_for(
        scenario,
        cfg.cert_param_samples,
        mix_seed(stage_seed, SEED_CERT_PARAM),
    );
    let cert_per_z = cfg.cert_fibre_samples.div_ceil(z_cert.len());
    let cert_near_ball = fibre_ball(n, k as f64 * b);
    let mut cert_near: Vec<Vec<CVec>> = Vec::new();
    let mut cert_pushed: Vec<Vec<CVec>> = Vec::new();
    for (zi, z) in z_cert.iter().enumerate() {
        let n_bnd = cert_per_z / 2;
        let mut fibres = sample_boundary(
            &cert_near_ball,
            n,
            n_bnd,
            mix_seed(stage_seed, SEED_CERT_NEAR ^ ((zi as u64) << 8)),
        );
        fibres.extend(sample_volume(
            &cert_near_ball,
            n,
            cert_per_z - n_bnd,
            mix_seed(stage_seed, (SEED_CERT_NEAR ^ ((zi as u64) << 8)).wrapping_add(1)),
        ));
        cert_near.push(fibres);

        let k_set = scenario.k_stage_at(k, z)?;
        let f_z = scenario.f_at(z)?;
        let stack: Vec<AutWord> = prior
            .iter()
            .map(|s| s.word.specialize(z))
            .collect::<Result<_, _>>()?;
        let mut fibres = sample_boundary(
            &k_set,
            n,
            n_bnd,
            mix_seed(stage_seed, SEED_CERT_PUSHED ^ ((zi as u64) << 8)),
        );
        fibres.extend(sample_volume(
            &k_set,
            n,
            cert_per_z - n_bnd,
            mix_seed(stage_seed, (SEED_CERT_PUSHED ^ ((zi as u64) << 8)).wrapping_add(1)),
        ));
        let mut pushed = Vec::with_capacity(fibres.len());
        for fb in fibres {
            let zeta0 = fb.sub(&f_z)?;
            pushed.push(push_fibre_through(&stack, &zeta0)?);
        }
        cert_pushed.push(pushed);
    }

    let mut last_dev = f64::INFINITY;
    let mut last_gap = f64::NEG_INFINITY;
    let attempts = cfg.retries.max(1);
    for attempt in 0..attempts {
        let degree = cfg.fit_degree + 6 * attempt as u32;
        let boost = cfg.near_weight_boost * 4f64.powi(attempt as i32);
        let mut clouds = StageClouds::build(
            scenario,
            k,
            prior,
            z_fit.clone(),
            fit_per_z,
            mix_seed(stage_seed, SEED_FIT_NEAR),
            mix_seed(stage_seed, SEED_FIT_PUSHED),
        )?;

        // Pivot: the fibre coordinate along which the pushed cluster stays
        // furthest from the origin, uniformly over the parameter samples.
        let pivot = (0..n)
            .max_by(|&a, &bb| {
                clouds
                    .min_pushed_coord(a)
                    .partial_cmp(&clouds.min_pushed_coord(bb))
                    .unwrap()
            })
            .expect("n >= 2");
        let lift = (0..n).find(|&j| j != pivot).expect("n >= 2");

        // Identity budget per phase; the word composes n + 1 letters.
        let phase_budget = eps_k / (2.0 * (n + 1) as f64);
        let w_near = boost / phase_budget;
        let mut max_far_rel: f64 = 0.0;

        // Phase 1: lift shear separating the cluster in the `lift`
        // coordinate, reading the pivot.
        let lift_target = 2.0 * ((k + 1) as f64 * b + clouds.max_pushed_coord(lift));
        let w_far = 1.0 / (0.05 * lift_target);
        let mid = clouds.mid_cloud(pivot, fit_per_z, mix_seed(stage_seed, 0x4d4944));
        let fit = fit_letter_data(
            param_dim,
            n,
            pivot,
            lift,
            &clouds,
            &mid,
            Cpx::new(lift_target, 0.0),
            degree,
            cfg.param_degree,
            w_near / lift_target,
            0.3 * w_far,
            w_far,
        )?;
        max_far_rel = max_far_rel.max(fit.far_residual_rel);
        let mut letters = vec![ParamLetter::Shear {
            j: lift,
            p: fit.data,
        }];
        clouds.advance(param_dim, &letters[0])?;

        // Phase 2: scale the pivot coordinate, reading the lifted one.
        let w_far = 1.0 / (0.05 * ln_r);
        let mid = clouds.mid_cloud(lift, fit_per_z, mix_seed(stage_seed, 0x4d4945));
        let fit = fit_letter_data(
            param_dim,
            n,
            lift,
            pivot,
            &clouds,
            &mid,
            Cpx::new(ln_r, 0.0),
            degree,
            cfg.param_degree,
            w_near / (ln_r * (k as f64 * b).max(1.0)),
            0.3 * w_far,
            w_far,
        )?;
        max_far_rel = max_far_rel.max(fit.far_residual_rel);
        let letter = ParamLetter::Overshear {
            j: pivot,
            p: fit.data,
            q: MultiPoly::zero(param_dim + n - 1),
        };
        clouds.advance(param_dim, &letter)?;
        letters.push(letter);

        // Remaining phases: scale every other coordinate, reading the pivot.
        for j in 0..n {
            if j == pivot {
                continue;
            }
            let w_far = 1.0 / (0.05 * ln_r);
            let mid = clouds.mid_cloud(pivot, fit_per_z, mix_seed(stage_seed, 0x4d4946 + j as u64));
            let fit = fit_letter_data(
                param_dim,
                n,
                pivot,
                j,
                &clouds,
                &mid,
                Cpx::new(ln_r, 0.0),
                degree,
                cfg.param_degree,
                w_near / (ln_r * (k as f64 * b).max(1.0)),
                0.3 * w_far,
                w_far,
            )?;
            max_far_rel = max_far_rel.max(fit.far_residual_rel);
            let letter = ParamLetter::Overshear {
                j,
                p: fit.data,
                q: MultiPoly::zero(param_dim + n - 1),
            };
            clouds.advance(param_dim, &letter)?;
            letters.push(letter);
        }

        let word = ParamAutWord::new(param_dim, n, letters)?;
        debug_assert!(word.is_origin_fixing());

        // Certify on fresh samples.
        let mut dev: f64 = 0.0;
        let mut min_mod = f64::INFINITY;
        let mut escaped = false;
        for (zi, z) in z_cert.iter().enumerate() {
            let word_z = word.specialize(z)?;
            for fb in &cert_near[zi] {
                match word_z.apply(fb) {
                    Ok(out) => dev = dev.max(out.sub(fb)?.norm()),
                    Err(WordError::Escaped { .. }) => {
                        escaped = true;
                        dev = f64::INFINITY;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            for zeta in &cert_pushed[zi] {
                match word_z.apply(zeta) {
                    Ok(out) => min_mod = min_mod.min(out.norm()),
                    Err(WordError::Escaped { .. }) => {
                        escaped = true;
                        min_mod = 0.0;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        let gap = min_mod - (k + 1) as f64 * b;
        last_dev = dev;
        last_gap = gap;
        if !escaped && dev <= eps_k && gap > 0.0 {
            let word_letters = word.len();
            return Ok(Stage {
                index: k,
                word,
                certificate: StageCertificate {
                    eps: eps_k,
                    max_identity_deviation_on_kb: dev,
                    min_gap_pushed: Some(gap),
                    min_pushed_modulus: Some(min_mod),
                    near_samples: cert_near.iter().map(|v| v.len()).sum(),
                    pushed_samples: cert_pushed.iter().map(|v| v.len()).sum(),
                    param_samples: z_cert.len(),
                    seed: stage_seed,
                    fit_degree_used: degree,
                    attempts_used: attempt + 1,
                    fit_residual_far_rel: max_far_rel,
                    word_letters,
                    convexity_note: convexity_note.clone(),
                },
            });
        }
    }
    Err(PushOutError::Certification {
        stage: k,
        condition: if last_dev > eps_k { "(i)" } else { "(ii)" }.into(),
        measured_deviation: last_dev,
        eps: eps_k,
        measured_gap: last_gap,
        attempts,
        partial: prior.to_vec(),
    })
}

fn convexity_note(scenario: &Scenario) -> String {
    match scenario.config().obstacle.base() {
        CompactSet::Union {
            convexity_assumed, ..
        } => format!(
            "polynomial convexity of the union obstacle is an assumption (declared: {})",
            convexity_assumed
        ),
        _ => "obstacle shape is convex; polynomial convexity holds".into(),
    }
}

/// Build the full stage sequence and the run report.
pub fn run_pushout(
    scenario: &Scenario,
    cfg: &EngineConfig,
) -> Result<(PushOutPlan, RunReport), PushOutError> {
    let mut stages: Vec<Stage> = Vec::new();
    for k in 1..=cfg.max_stages {
        let stage = build_stage(scenario, k, &stages, cfg)?;
        stages.push(stage);
    }
    let expulsion_trace: Vec<f64> = stages
        .iter()
        .filter_map(|s| s.certificate.min_pushed_modulus)
        .collect();
    let eps_budget: f64 = stages.iter().map(|s| s.certificate.eps).sum();
    let mut assumptions = vec![convexity_note(scenario)];
    assumptions.push(
        "identity-approximation budgets eps_k and certification margins are sampled surrogates"
            .into(),
    );
    let report = RunReport {
        schema_version: 1,
        scenario_name: scenario.config().name.clone(),
        stages: stages.iter().map(|s| s.certificate.clone()).collect(),
        expulsion_trace,
        assumptions,
        eps_budget,
    };
    let plan = PushOutPlan {
        schema_version: 1,
        scenario: scenario.clone(),
        engine: cfg.clone(),
        stages,
    };
    Ok((plan, report))
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Stage words specialized at one parameter value, with inverses, ready for
/// repeated fibre evaluation.
pub struct SpecializedPlan {
    pub z: CVec,
    pub f_z: CVec,
    forward: Vec<AutWord>,
    inverse: Vec<AutWord>,
    prepared_inverse: Vec<PreparedWord>,
    /// Per-stage displacement tolerances derived from the certified
    /// identity deviations.
    stage_tols: Vec<f64>,
    n: usize,
    ball_b: f64,
    conv_tol: f64,
    escape_radius: f64,
}

impl PushOutPlan {
    pub fn n(&self) -> usize {
        self.scenario.n()
    }

    /// Escape classification radius for limit evaluation.
    pub fn escape_radius(&self) -> f64 {
        self.engine.escape_radius_factor
            * (self.engine.max_stages.max(1) as f64)
            * self.scenario.ball_b()
    }

    /// Specialize every stage word at `z` (margin-checked against `L`).
    pub fn specialize(&self, z: &CVec) -> Result<SpecializedPlan, PushOutError> {
        let gap = self
            .scenario
            .config()
            .l_set
            .signed_gap(z)
            .map_err(PushOutError::Scenario)?;
        if gap > 1e-9 {
            return Err(PushOutError::OutsideParameterSet { gap });
        }
        let forward: Vec<AutWord> = self
            .stages
            .iter()
            .map(|s| s.word.specialize(z))
            .collect::<Result<_, _>>()?;
        let inverse: Vec<AutWord> = forward
            .iter()
            .map(|w| w.invert())
            .collect::<Result<_, _>>()?;
        let prepared_inverse = inverse
            .iter()
            .map(|w| PreparedWord::new(w.clone()))
            .collect();
        let conv_tol = self.scenario.config().tolerances.conv_tol;
        let stage_tols = self
            .stages
            .iter()
            .map(|s| 2.0 * s.certificate.max_identity_deviation_on_kb + conv_tol)
            .collect();
        Ok(SpecializedPlan {
            z: z.clone(),
            f_z: self.scenario.f_at(z)?,
            forward,
            inverse,
            prepared_inverse,
            stage_tols,
            n: self.scenario.n(),
            ball_b: self.scenario.ball_b(),
            conv_tol: self.scenario.config().tolerances.conv_tol,
            escape_radius: self.escape_radius(),
        })
    }
}

impl SpecializedPlan {
    pub fn stage_count(&self) -> usize {
        self.forward.len()
    }

    pub fn forward_words(&self) -> &[AutWord] {
        &self.forward
    }

    /// Classify the forward orbit of `(z, ζ)` under the stage words.
    pub fn eval_limit(&self, zeta: &CVec) -> LimitClassification {
        let stages = self.forward.len();
        if stages == 0 {
            return LimitClassification::Converged {
                value: zeta.clone(),
                stage_reached: 0,
            };
        }
        let required = 3.min(stages);
        let mut streak = 0usize;
        let mut cur = zeta.clone();
        for (k, w) in self.forward.iter().enumerate() {
            let stage = k + 1;
            let next = match w.apply(&cur) {
                Ok(v) => v,
                Err(WordError::Escaped { .. }) => return LimitClassification::Escaped { stage },
                Err(_) => return LimitClassification::Undecided { max_stages: stages },
            };
            let norm = next.norm();
            if norm > self.escape_radius {
                return LimitClassification::Escaped { stage };
            }
            let disp = next.sub(&cur).expect("dims match").norm();
            let inside = norm <= stage as f64 * self.ball_b;
            if disp < self.stage_tols[k] && inside {
                streak += 1;
                if streak >= required {
                    return LimitClassification::Converged {
                        value: next,
                        stage_reached: stage - required + 1,
                    };
                }
            } else {
                streak = 0;
            }
            cur = next;
        }
        LimitClassification::Undecided { max_stages: stages }
    }

    /// Fibre part of the inverse limit: apply the inverse words of stages
    /// `K..1` to `ζ`.
    pub fn fb_fibre(&self, zeta: &CVec) -> Result<CVec, WordError> {
        let mut cur = zeta.clone();
        for w in self.inverse.iter().rev() {
            cur = w.apply(&cur)?;
        }
        Ok(cur)
    }

    /// `F(z, ζ) = φ(z, ζ) + f(z)`, iterating stage prefixes until the
    /// displacement drops below the convergence tolerance (all stages are
    /// used when it never does).
    pub fn fb_eval(&self, zeta: &CVec) -> Result<CVec, WordError> {
        let stages = self.inverse.len();
        let mut prev = zeta.clone();
        let mut value = zeta.clone();
        for k in 1..=stages {
            let mut cur = zeta.clone();
            for w in self.inverse[..k].iter().rev() {
                cur = w.apply(&cur)?;
            }
            let disp = cur.sub(&prev).expect("dims").norm();
            value = cur.clone();
            prev = cur;
            if k > 1 && disp < self.conv_tol {
                break;
            }
        }
        value.add(&self.f_z).map_err(WordError::Alg)
    }

    /// Fast full-depth evaluation used by the bulk checks; identical to
    /// `fb_eval` once the tail displacements are below tolerance.
    pub fn fb_eval_full(&self, zeta: &CVec) -> Result<CVec, WordError> {
        self.fb_fibre(zeta)?.add(&self.f_z).map_err(WordError::Alg)
    }

    /// Jacobian of the fibre part `φ(z, ·)` at `ζ`.
    pub fn fb_jacobian(&self, zeta: &CVec) -> Result<CMatrix, WordError> {
        let mut buf = zeta.as_slice().to_vec();
        let mut jac = CMatrix::identity(self.n, self.n);
        for w in self.prepared_inverse.iter().rev() {
            w.jacobian_mut(&mut buf, &mut jac)?;
        }
        Ok(jac)
    }
}

/// Convenience single-point evaluators on the plan level.
pub fn eval_limit(
    plan: &PushOutPlan,
    z: &CVec,
    zeta: &CVec,
) -> Result<LimitClassification, PushOutError> {
    Ok(plan.specialize(z)?.eval_limit(zeta))
}

pub fn fb_eval(plan: &PushOutPlan, z: &CVec, zeta: &CVec) -> Result<CVec, PushOutError> {
    Ok(plan.specialize(z)?.fb_eval(zeta)?)
}

// ---------------------------------------------------------------------------
// Family checks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FbCheckConfig {
    #[serde(default = "d_fb_param")]
    pub param_samples: usize,
    #[serde(default = "d_fb_avoid")]
    pub avoid_samples: usize,
    #[serde(default = "d_fb_inj")]
    pub injectivity_pairs: usize,
    /// Radius of the sampled `ζ` ball; `None` selects
    /// `0.9 * stages * ball_b`.
    #[serde(default)]
    pub zeta_radius: Option<f64>,
    #[serde(default = "d_fb_sigma")]
    pub sigma_grid: usize,
}

fn d_fb_param() -> usize {
    64
}
fn d_fb_avoid() -> usize {
    100_000
}
fn d_fb_inj() -> usize {
    10_000
}
fn d_fb_sigma() -> usize {
    16
}

impl Default for FbCheckConfig {
    fn default() -> Self {
        Self {
            param_samples: d_fb_param(),
            avoid_samples: d_fb_avoid(),
            injectivity_pairs: d_fb_inj(),
            zeta_radius: None,
            sigma_grid: d_fb_sigma(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FbReport {
    pub schema_version: u32,
    pub scenario_name: String,
    pub param_samples: usize,
    pub zeta_radius: f64,
    /// (A) `max |F(z, 0) - f(z)|` over parameter samples.
    pub center_max_deviation: f64,
    /// (B) minimum signed gap of sampled `F(z, ζ)` to the obstacle; `None`
    /// when the obstacle is empty.
    pub avoidance_min_gap: Option<f64>,
    pub avoidance_samples: usize,
    pub avoidance_worst: Option<WitnessPoint>,
    /// (C) minimum of `|F(z,ζ)-F(z,ζ')| / |ζ-ζ'|` over sampled pairs.
    pub injectivity_min_ratio: f64,
    pub injectivity_pairs: usize,
    pub injectivity_violations: usize,
    pub separation_floor: f64,
    /// (D) minimum `σ_min/σ_max` of `∂_ζ F(z, ·)|_0`.
    pub domination_min_sigma_ratio: f64,
    pub domination_rank_full: bool,
    pub failures: Vec<String>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessPoint {
    pub z: Vec<[f64; 2]>,
    pub zeta: Vec<[f64; 2]>,
    pub value: Vec<[f64; 2]>,
    pub gap: f64,
}

fn to_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

/// Verify the family checks: centre identity, obstacle avoidance,
/// injectivity separation, and fibre-differential domination.
pub fn fb_check(plan: &PushOutPlan, cfg: &FbCheckConfig) -> Result<FbReport, PushOutError> {
    let scenario = &plan.scenario;
    let n = scenario.n();
    let seed = scenario.seed();
    let stages = plan.stages.len().max(1);
    let zeta_radius = cfg
        .zeta_radius
        .unwrap_or(0.9 * stages as f64 * scenario.ball_b());
    let z_samples = param_samples_for(scenario, cfg.param_samples, mix_seed(seed, SEED_FB_PARAM));
    let empty_obstacle = scenario.config().obstacle.base().is_empty_union();

    let per_z_avoid = cfg.avoid_samples.div_ceil(z_samples.len());
    let per_z_pairs = cfg.injectivity_pairs.div_ceil(z_samples.len());

    let mut center_max: f64 = 0.0;
    let mut avoid_min: Option<(f64, WitnessPoint)> = None;
    let mut avoid_count = 0usize;
    let mut inj_min_ratio = f64::INFINITY;
    let mut inj_violations = 0usize;
    let mut pair_count = 0usize;
    let mut sigma_floor = f64::INFINITY;
    let mut domination_min_ratio = f64::INFINITY;

    let zeta_ball = fibre_ball(n, zeta_radius);
    for (zi, z) in z_samples.iter().enumerate() {
        let sp = plan.specialize(z)?;
        let obstacle = scenario.obstacle_at(z)?;

        // (A) centre identity.
        let center = sp.fb_eval_full(&CVec::zero(n))?;
        center_max = center_max.max(center.sub(&sp.f_z)?.norm());

        // (D) domination and the pair-separation floor.
        let j0 = sp.fb_jacobian(&CVec::zero(n))?;
        let (smin, smax) = sigma_extremes(&j0);
        domination_min_ratio = domination_min_ratio.min(if smax > 0.0 { smin / smax } else { 0.0 });
        sigma_floor = sigma_floor.min(smin);
        let sigma_points = sample_volume(
            &zeta_ball,
            n,
            cfg.sigma_grid,
            mix_seed(seed, SEED_FB_SIGMA ^ ((zi as u64) << 8)),
        );
        for p in &sigma_points {
            let (smin, _) = sigma_extremes(&sp.fb_jacobian(p)?);
            sigma_floor = sigma_floor.min(smin);
        }

        // (B) avoidance over the sampled fibre ball.
        if !empty_obstacle {
            let points = sample_volume(
                &zeta_ball,
                n,
                per_z_avoid,
                mix_seed(seed, SEED_FB_AVOID ^ ((zi as u64) << 8)),
            );
            let gaps: Vec<f64> = points
                .par_iter()
                .map(|zeta| {
                    let value = sp.fb_eval_full(zeta).expect("fb orbit bounded");
                    obstacle.signed_gap(&value).expect("dims")
                })
                .collect();
            avoid_count += gaps.len();
            for (gap, zeta) in gaps.iter().zip(points.iter()) {
                let better = match &avoid_min {
                    None => true,
                    Some((g, _)) => gap < g,
                };
                if better {
                    let value = sp.fb_eval_full(zeta).expect("bounded");
                    avoid_min = Some((
                        *gap,
                        WitnessPoint {
                            z: to_pairs(z),
                            zeta: to_pairs(zeta),
                            value: to_pairs(&value),
                            gap: *gap,
                        },
                    ));
                }
            }
        }

        // (C) injectivity pairs.
        let pair_points = sample_volume(
            &zeta_ball,
            n,
            2 * per_z_pairs,
            mix_seed(seed, SEED_FB_INJ ^ ((zi as u64) << 8)),
        );
        let ratios: Vec<Option<f64>> = (0..per_z_pairs)
            .into_par_iter()
            .map(|i| {
                let za = &pair_points[2 * i];
                let zb = &pair_points[2 * i + 1];
                let d_in = za.sub(zb).expect("dims").norm();
                if d_in < 1e-12 {
                    return None;
                }
                let fa = sp.fb_eval_full(za).expect("bounded");
                let fb = sp.fb_eval_full(zb).expect("bounded");
                Some(fa.sub(&fb).expect("dims").norm() / d_in)
            })
            .collect();
        for r in ratios.into_iter().flatten() {
            pair_count += 1;
            inj_min_ratio = inj_min_ratio.min(r);
        }
    }

    // Condition-number-scaled separation: the per-unit-displacement image
    // separation must stay above a floor tied to the smallest fibre
    // differential seen, with a generous safety factor for curvature.
    let separation_floor = 1e-3 * sigma_floor;
    if inj_min_ratio < separation_floor {
        inj_violations += 1;
    }

    let mut failures = Vec::new();
    if center_max > 1e-9 {
        failures.push(format!(
            "centre identity deviation {center_max:e} exceeds 1e-9"
        ));
    }
    if let Some((gap, w)) = &avoid_min {
        if *gap <= 0.0 {
            failures.push(format!(
                "avoidance violated: gap {gap:e} at z={:?} zeta={:?}",
                w.z, w.zeta
            ));
        }
    }
    if inj_violations > 0 {
        failures.push(format!(
            "injectivity separation {inj_min_ratio:e} below floor {separation_floor:e}"
        ));
    }
    let rank_full = domination_min_ratio > 1e-8;
    if !rank_full {
        failures.push(format!(
            "fibre differential at 0 is rank-deficient (sigma ratio {domination_min_ratio:e})"
        ));
    }

    Ok(FbReport {
        schema_version: 1,
        scenario_name: scenario.config().name.clone(),
        param_samples: z_samples.len(),
        zeta_radius,
        center_max_deviation: center_max,
        avoidance_min_gap: avoid_min.as_ref().map(|(g, _)| *g),
        avoidance_samples: avoid_count,
        avoidance_worst: avoid_min.map(|(_, w)| w),
        injectivity_min_ratio: if pair_count > 0 { inj_min_ratio } else { 0.0 },
        injectivity_pairs: pair_count,
        injectivity_violations: inj_violations,
        separation_floor,
        domination_min_sigma_ratio: domination_min_ratio,
        domination_rank_full: rank_full,
        failures: failures.clone(),
        all_pass: failures.is_empty(),
    })
}

fn sigma_extremes(m: &CMatrix) -> (f64, f64) {
    let svd = m.clone().svd(false, false);
    let mut smin = f64::INFINITY;
    let mut smax = 0.0f64;
    for s in svd.singular_values.iter() {
        smin = smin.min(*s);
        smax = smax.max(*s);
    }
    (smin, smax)
}

/// Rank of the fibre differential of `F(z, ·)` at the origin.
pub fn domination_rank(plan: &PushOutPlan, z: &CVec) -> Result<usize, PushOutError> {
    let sp = plan.specialize(z)?;
    let j = sp.fb_jacobian(&CVec::zero(plan.n()))?;
    Ok(matrix_rank(&j, 1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{preset_ball_avoid, ScenarioConfig, Tolerances};

    fn tiny_engine() -> EngineConfig {
        EngineConfig {
            max_stages: 2,
            fit_fibre_samples: 300,
            fit_param_samples: 6,
            cert_fibre_samples: 400,
            cert_param_samples: 8,
            ..EngineConfig::default()
        }
    }

    fn c(re: f64, im: f64) -> Cpx {
        Cpx::new(re, im)
    }

    #[test]
    fn identity_plan_for_empty_obstacle() {
        let mut cfg: ScenarioConfig = preset_ball_avoid();
        cfg.obstacle = crate::scenario::ObstacleSpec::Fixed {
            set: CompactSet::Union {
                parts: vec![],
                convexity_assumed: true,
            },
        };
        cfg.tolerances = Tolerances::default();
        let scenario = Scenario::new(cfg).unwrap();
        let (plan, report) = run_pushout(&scenario, &tiny_engine()).unwrap();
        assert_eq!(plan.stages.len(), 2);
        assert!(plan.stages.iter().all(|s| s.word.is_empty()));
        assert!(report.expulsion_trace.is_empty());

        // F(z, zeta) = zeta + f(z) for the identity plan.
        let z = CVec::zero(0);
        let zeta = CVec::new(vec![c(0.3, 0.1), c(-0.2, 0.4)]).unwrap();
        let val = fb_eval(&plan, &z, &zeta).unwrap();
        assert!(val.sub(&zeta).unwrap().norm() < 1e-15);
        // Inside the stage windows the orbit converges trivially.
        let small = CVec::new(vec![c(0.05, 0.02), c(-0.03, 0.01)]).unwrap();
        match eval_limit(&plan, &z, &small).unwrap() {
            LimitClassification::Converged { value, .. } => {
                assert!(value.sub(&small).unwrap().norm() < 1e-15)
            }
            other => panic!("expected converged, got {other:?}"),
        }

        // A zero-stage plan converges immediately everywhere.
        let mut zero_cfg = tiny_engine();
        zero_cfg.max_stages = 0;
        let scenario2 = Scenario::new(preset_ball_avoid()).unwrap();
        let (plan0, _) = run_pushout(&scenario2, &zero_cfg).unwrap();
        match eval_limit(&plan0, &z, &zeta).unwrap() {
            LimitClassification::Converged { value, stage_reached } => {
                assert_eq!(stage_reached, 0);
                assert_eq!(value, zeta);
            }
            other => panic!("expected converged, got {other:?}"),
        }
        assert!(fb_eval(&plan0, &z, &zeta)
            .unwrap()
            .sub(&zeta)
            .unwrap()
            .norm()
            < 1e-15);
    }

    #[test]
    fn first_stage_certifies_on_ball_avoid() {
        let scenario = Scenario::new(preset_ball_avoid()).unwrap();
        let cfg = tiny_engine();
        let stage = build_stage(&scenario, 1, &[], &cfg).unwrap();
        let cert = &stage.certificate;
        assert!(cert.max_identity_deviation_on_kb <= cert.eps);
        assert!(cert.min_gap_pushed.unwrap() > 0.0);
        assert!(stage.word.is_origin_fixing());

        // Origin is fixed exactly.
        let w = stage.word.specialize(&CVec::zero(0)).unwrap();
        let origin = CVec::zero(2);
        assert_eq!(w.apply(&origin).unwrap(), origin);
    }

    #[test]
    fn infeasible_budget_fails_certification() {
        let mut sc = preset_ball_avoid();
        sc.tolerances.eps0 = 1e-16;
        let scenario = Scenario::new(sc).unwrap();
        let mut cfg = tiny_engine();
        cfg.retries = 2;
        match run_pushout(&scenario, &cfg) {
            Err(PushOutError::Certification { stage, .. }) => {
                assert_eq!(stage, 1);
            }
            other => panic!("expected certification failure, got {other:?}"),
        }
    }

    #[test]
    fn two_stage_plan_basics() {
        let scenario = Scenario::new(preset_ball_avoid()).unwrap();
        let (plan, report) = run_pushout(&scenario, &tiny_engine()).unwrap();
        assert_eq!(plan.stages.len(), 2);
        assert_eq!(report.expulsion_trace.len(), 2);
        // Pushed set recedes.
        assert!(report.expulsion_trace[1] > report.expulsion_trace[0]);

        let sp = plan.specialize(&CVec::zero(0)).unwrap();
        // zeta = 0 converges immediately at stage 1.
        match sp.eval_limit(&CVec::zero(2)) {
            LimitClassification::Converged {
                value,
                stage_reached,
            } => {
                assert_eq!(stage_reached, 1);
                assert_eq!(value.norm(), 0.0);
            }
            other => panic!("{other:?}"),
        }

        // Centre identity is exact and the Jacobian has full rank.
        let fb0 = sp.fb_eval_full(&CVec::zero(2)).unwrap();
        assert!(fb0.sub(&sp.f_z).unwrap().norm() == 0.0);
        assert_eq!(domination_rank(&plan, &CVec::zero(0)).unwrap(), 2);
    }

    #[test]
    fn plan_serialization_roundtrip() {
        let scenario = Scenario::new(preset_ball_avoid()).unwrap();
        let mut cfg = tiny_engine();
        cfg.max_stages = 1;
        let (plan, _) = run_pushout(&scenario, &cfg).unwrap();
        let s = serde_json::to_string(&plan).unwrap();
        let back: PushOutPlan = serde_json::from_str(&s).unwrap();
        assert_eq!(back.stages.len(), plan.stages.len());
        assert_eq!(back.stages[0].word, plan.stages[0].word);
        // Bit-exact re-serialization.
        assert_eq!(s, serde_json::to_string(&back).unwrap());
    }
}
