//! Polynomial vector fields on `C^n` and their decomposition into complete
//! shear/overshear fields with exact closed-form flows.
//!
//! A shear field `p(x̂_j) ∂/∂x_j` flows as `x_j -> x_j + t p(x̂_j)`; an
//! overshear field `(x_j p(x̂_j) + q(x̂_j)) ∂/∂x_j` flows as
//! `x_j -> x_j e^{tp} + q (e^{tp} - 1)/p`. Both are complete for all complex
//! time. `al_decompose` writes an arbitrary polynomial field as a finite sum
//! of such fields, possibly under linear conjugation:
//!
//! * monomials of own-degree 0 or 1 in their own coordinate pass through as
//!   shears and multiplicative overshears;
//! * a monomial `x_j^k q(x̂_j) ∂/∂x_j` with `k >= 2` is handled by first
//!   cancelling its divergence with conjugated overshears whose divergences
//!   are powers of the transvection forms `ℓ_i = x_j + ω^i x_{j'}`, and then
//!   writing the divergence-free remainder as the planar Hamiltonian field of
//!   a polynomial `h`, whose power-of-`ℓ_i` decomposition yields conjugated
//!   shears. The forms use a common set of roots of unity `ω^i` so that parts
//!   with equal conjugation merge, which keeps part counts small.
//!
//! All constructions are deterministic; coefficients come from the closed
//! polarization formula `s^{m-c} t^c = Σ_i ω^{-ic} (s + ω^i t)^m / (F C(m,c))`
//! over all `F`-th roots of unity with `F > m`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calg::{AlgError, CMatrix, CVec, Cpx, MatrixRecord, MultiPoly, PolyMap};

/// Default total-degree cap for decomposable fields.
pub const DEFAULT_MAX_FIELD_DEGREE: u32 = 8;

/// Modulus guard for integrated orbits.
pub const FLOW_ESCAPE_GUARD: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error("field degree {degree} exceeds the configured cap {max}")]
    DegreeCap { degree: u32, max: u32 },
    #[error("decomposition requires at least two active coordinates, got {active}")]
    TooFewCoordinates { active: usize },
    #[error("component {index} must vanish on the spectator block")]
    SpectatorComponent { index: usize },
    #[error("decomposition residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },
    #[error("orbit escaped the modulus guard {guard:e}")]
    Escaped { guard: f64 },
    #[error("step count must be at least 1")]
    ZeroSteps,
}

/// Polynomial vector field `V(x) = Σ V_j(x) ∂/∂x_j` on `C^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolyField {
    map: PolyMap,
}

impl PolyField {
    pub fn new(map: PolyMap) -> Result<Self, FieldError> {
        if map.src_dim() != map.dst_dim() {
            return Err(FieldError::Alg(AlgError::DimMismatch {
                expected: map.src_dim(),
                got: map.dst_dim(),
            }));
        }
        Ok(Self { map })
    }

    pub fn from_components(components: Vec<MultiPoly>) -> Result<Self, FieldError> {
        let dim = components.len();
        Ok(Self::new(PolyMap::new(dim, components).map_err(FieldError::Alg)?)?)
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            map: PolyMap::zero(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.map.src_dim()
    }

    pub fn component(&self, j: usize) -> &MultiPoly {
        self.map.component(j)
    }

    pub fn components(&self) -> &[MultiPoly] {
        self.map.components()
    }

    pub fn degree(&self) -> u32 {
        self.map.degree()
    }

    pub fn value(&self, x: &CVec) -> Result<CVec, FieldError> {
        Ok(self.map.eval(x)?)
    }

    pub fn as_map(&self) -> &PolyMap {
        &self.map
    }

    pub fn add(&self, other: &PolyField) -> Result<PolyField, FieldError> {
        let comps: Result<Vec<_>, AlgError> = self
            .components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a.add(b))
            .collect();
        PolyField::from_components(comps?)
    }

    pub fn sub(&self, other: &PolyField) -> Result<PolyField, FieldError> {
        let comps: Result<Vec<_>, AlgError> = self
            .components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a.sub(b))
            .collect();
        PolyField::from_components(comps?)
    }

    /// Largest coefficient modulus across components.
    pub fn max_coeff_norm(&self) -> f64 {
        self.components()
            .iter()
            .map(|c| c.max_coeff_norm())
            .fold(0.0, f64::max)
    }
}

/// Linear conjugation `flow = A^{-1} ∘ basic flow ∘ A` with the inverse
/// stored explicitly (transvections invert exactly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConjRepr", into = "ConjRepr")]
pub struct Conjugation {
    a: CMatrix,
    a_inv: CMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConjRepr {
    a: MatrixRecord,
    a_inv: MatrixRecord,
}

impl TryFrom<ConjRepr> for Conjugation {
    type Error = AlgError;
    fn try_from(r: ConjRepr) -> Result<Self, AlgError> {
        Ok(Conjugation {
            a: r.a.to_matrix()?,
            a_inv: r.a_inv.to_matrix()?,
        })
    }
}

impl From<Conjugation> for ConjRepr {
    fn from(c: Conjugation) -> Self {
        ConjRepr {
            a: MatrixRecord::from_matrix(&c.a),
            a_inv: MatrixRecord::from_matrix(&c.a_inv),
        }
    }
}

impl Conjugation {
    /// `y_row = x_row + coeff * x_col`, identity elsewhere. The inverse is
    /// the same transvection with `-coeff`, so both directions are exact.
    pub fn transvection(dim: usize, row: usize, col: usize, coeff: Cpx) -> Self {
        let mut a = CMatrix::identity(dim, dim);
        let mut a_inv = CMatrix::identity(dim, dim);
        a[(row, col)] = coeff;
        a_inv[(row, col)] = -coeff;
        Self { a, a_inv }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    pub fn inverse(&self) -> &CMatrix {
        &self.a_inv
    }

    fn forward(&self, x: &[Cpx], out: &mut Vec<Cpx>) {
        mat_vec(&self.a, x, out);
    }

    fn backward(&self, y: &[Cpx], out: &mut Vec<Cpx>) {
        mat_vec(&self.a_inv, y, out);
    }
}

fn mat_vec(m: &CMatrix, x: &[Cpx], out: &mut Vec<Cpx>) {
    out.clear();
    for i in 0..m.nrows() {
        let mut acc = Cpx::new(0.0, 0.0);
        for (k, v) in x.iter().enumerate() {
            acc += m[(i, k)] * v;
        }
        out.push(acc);
    }
}

/// A complete basic field, possibly under linear conjugation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicField {
    pub kind: BasicFieldKind,
    pub conj: Option<Conjugation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasicFieldKind {
    /// `p(x̂_j) ∂/∂x_j`
    Shear { j: usize, p: MultiPoly },
    /// `(x_j p(x̂_j) + q(x̂_j)) ∂/∂x_j`
    Overshear { j: usize, p: MultiPoly, q: MultiPoly },
}

impl BasicField {
    pub fn shear(j: usize, p: MultiPoly) -> Self {
        Self {
            kind: BasicFieldKind::Shear { j, p },
            conj: None,
        }
    }

    pub fn overshear(j: usize, p: MultiPoly, q: MultiPoly) -> Self {
        Self {
            kind: BasicFieldKind::Overshear { j, p, q },
            conj: None,
        }
    }

    pub fn with_conj(mut self, conj: Conjugation) -> Self {
        self.conj = Some(conj);
        self
    }

    fn own_coordinate(&self) -> usize {
        match &self.kind {
            BasicFieldKind::Shear { j, .. } => *j,
            BasicFieldKind::Overshear { j, .. } => *j,
        }
    }

    /// Ambient dimension implied by the letter data.
    pub fn dim(&self) -> usize {
        match &self.kind {
            BasicFieldKind::Shear { p, .. } => p.dim() + 1,
            BasicFieldKind::Overshear { p, .. } => p.dim() + 1,
        }
    }

    /// Field value at a point.
    pub fn value(&self, x: &CVec) -> Result<CVec, FieldError> {
        let n = self.dim();
        if x.len() != n {
            return Err(FieldError::Alg(AlgError::DimMismatch {
                expected: n,
                got: x.len(),
            }));
        }
        let mut buf = x.as_slice().to_vec();
        let mut out = vec![Cpx::new(0.0, 0.0); n];
        match &self.conj {
            None => {
                self.basic_value(&buf, &mut out);
            }
            Some(c) => {
                let mut y = Vec::with_capacity(n);
                c.forward(&buf, &mut y);
                let mut v = vec![Cpx::new(0.0, 0.0); n];
                self.basic_value(&y, &mut v);
                c.backward(&v, &mut buf);
                out.copy_from_slice(&buf);
            }
        }
        Ok(CVec::new(out).map_err(FieldError::Alg)?)
    }

    /// Magnitude of the letter data at `x`: the displacement rate `|p|` for
    /// shears, the multiplicative rate `|p|` for overshears. Governs how
    /// finely a composed flow must substep.
    pub fn data_rate(&self, x: &CVec) -> Result<f64, FieldError> {
        let n = self.dim();
        if x.len() != n {
            return Err(FieldError::Alg(AlgError::DimMismatch {
                expected: n,
                got: x.len(),
            }));
        }
        let buf;
        let point: &[Cpx] = match &self.conj {
            None => x.as_slice(),
            Some(c) => {
                let mut y = Vec::with_capacity(n);
                c.forward(x.as_slice(), &mut y);
                buf = y;
                &buf
            }
        };
        Ok(match &self.kind {
            BasicFieldKind::Shear { j, p } => p.eval_slice_excl(point, *j).norm(),
            BasicFieldKind::Overshear { j, p, .. } => p.eval_slice_excl(point, *j).norm(),
        })
    }

    fn basic_value(&self, y: &[Cpx], out: &mut [Cpx]) {
        for v in out.iter_mut() {
            *v = Cpx::new(0.0, 0.0);
        }
        match &self.kind {
            BasicFieldKind::Shear { j, p } => {
                out[*j] = p.eval_slice_excl(y, *j);
            }
            BasicFieldKind::Overshear { j, p, q } => {
                out[*j] = y[*j] * p.eval_slice_excl(y, *j) + q.eval_slice_excl(y, *j);
            }
        }
    }

    fn basic_flow_in_place(&self, t: Cpx, y: &mut [Cpx]) {
        match &self.kind {
            BasicFieldKind::Shear { j, p } => {
                y[*j] += t * p.eval_slice_excl(y, *j);
            }
            BasicFieldKind::Overshear { j, p, q } => {
                let a = p.eval_slice_excl(y, *j);
                let u = t * a;
                let eu = u.exp();
                let b = q.eval_slice_excl(y, *j);
                y[*j] = y[*j] * eu + b * t * phi(u);
            }
        }
    }

    pub(crate) fn flow_in_place(&self, t: Cpx, x: &mut Vec<Cpx>, scratch: &mut Vec<Cpx>) {
        match &self.conj {
            None => self.basic_flow_in_place(t, x),
            Some(c) => {
                c.forward(x, scratch);
                self.basic_flow_in_place(t, scratch);
                c.backward(&scratch.clone(), x);
            }
        }
    }

    /// Expand (including the conjugation) to an explicit polynomial field.
    pub fn expand(&self) -> Result<PolyField, FieldError> {
        let n = self.dim();
        let j = self.own_coordinate();
        let mut comps = vec![MultiPoly::zero(n); n];
        match &self.kind {
            BasicFieldKind::Shear { p, .. } => {
                comps[j] = p.insert_var(j)?;
            }
            BasicFieldKind::Overshear { p, q, .. } => {
                let own = MultiPoly::var(n, j)?;
                comps[j] = own.mul(&p.insert_var(j)?)?.add(&q.insert_var(j)?)?;
            }
        }
        let basic = PolyField::from_components(comps)?;
        match &self.conj {
            None => Ok(basic),
            Some(c) => {
                let zero = CVec::zero(n);
                // W(x) = A^{-1} B(A x)
                let pulled: Vec<MultiPoly> = basic
                    .components()
                    .iter()
                    .map(|comp| comp.compose_affine(c.matrix(), &zero))
                    .collect::<Result<_, _>>()?;
                let mut comps = Vec::with_capacity(n);
                for i in 0..n {
                    let mut acc = MultiPoly::zero(n);
                    for (k, pk) in pulled.iter().enumerate() {
                        let coeff = c.inverse()[(i, k)];
                        if coeff.norm() != 0.0 {
                            acc = acc.add(&pk.scale(coeff))?;
                        }
                    }
                    comps.push(acc);
                }
                PolyField::from_components(comps)
            }
        }
    }
}

/// `(e^u - 1)/u` with a series branch near the removable singularity.
fn phi(u: Cpx) -> Cpx {
    if u.norm() < 1e-6 {
        // 1 + u/2 + u^2/6 + u^3/24, error O(|u|^4)
        Cpx::new(1.0, 0.0) + u * 0.5 + u * u * (1.0 / 6.0) + u * u * u * (1.0 / 24.0)
    } else {
        (u.exp() - Cpx::new(1.0, 0.0)) / u
    }
}

/// Exact time-`t` flow of a basic field.
pub fn exact_flow(field: &BasicField, t: Cpx, x: &CVec) -> Result<CVec, FieldError> {
    let n = field.dim();
    if x.len() != n {
        return Err(FieldError::Alg(AlgError::DimMismatch {
            expected: n,
            got: x.len(),
        }));
    }
    let mut buf = x.as_slice().to_vec();
    let mut scratch = Vec::with_capacity(n);
    field.flow_in_place(t, &mut buf, &mut scratch);
    CVec::new(buf).map_err(|_| FieldError::Escaped {
        guard: FLOW_ESCAPE_GUARD,
    })
}

/// Decomposition of a polynomial field into complete parts whose expanded
/// sum reproduces `claimed_total` coefficientwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSum {
    pub parts: Vec<BasicField>,
    pub claimed_total: PolyField,
}

impl FieldSum {
    /// Largest coefficient deviation between the expanded part sum and the
    /// claimed total.
    pub fn residual(&self) -> Result<f64, FieldError> {
        let mut acc = PolyField::zero(self.claimed_total.dim());
        for p in &self.parts {
            acc = acc.add(&p.expand()?)?;
        }
        Ok(acc.sub(&self.claimed_total)?.max_coeff_norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldClass {
    /// Every monomial is already a shear or fits the overshear shape.
    PureShearSum,
    NeedsDecomposition,
}

/// A field is a pure shear/overshear sum iff no component has own-coordinate
/// degree above one.
pub fn classify_field(v: &PolyField) -> FieldClass {
    for j in 0..v.dim() {
        if v.component(j).degree_in(j) > 1 {
            return FieldClass::NeedsDecomposition;
        }
    }
    FieldClass::PureShearSum
}

fn binomial(m: u32, c: u32) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..c {
        acc = acc * (m - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Exponent vector over all coordinates except `skip`.
fn drop_coord(exps: &[u32], skip: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(exps.len() - 1);
    for (i, &e) in exps.iter().enumerate() {
        if i != skip {
            out.push(e);
        }
    }
    out
}

/// Decompose with spectator coordinates `0..spectator_prefix` treated as
/// parameters: the field must vanish on the spectator block and the produced
/// parts only act on active coordinates. `spectator_prefix = 0` is the plain
/// decomposition on `C^n`.
pub fn decompose_fibred(
    v: &PolyField,
    spectator_prefix: usize,
    max_degree: u32,
) -> Result<FieldSum, FieldError> {
    let nn = v.dim();
    let active = nn - spectator_prefix;
    if active < 2 {
        return Err(FieldError::TooFewCoordinates { active });
    }
    if v.degree() > max_degree {
        return Err(FieldError::DegreeCap {
            degree: v.degree(),
            max: max_degree,
        });
    }
    for idx in 0..spectator_prefix {
        if !v.component(idx).is_zero() {
            return Err(FieldError::SpectatorComponent { index: idx });
        }
    }

    let mut parts: Vec<BasicField> = Vec::new();
    for j in spectator_prefix..nn {
        let comp = v.component(j);
        if comp.is_zero() {
            continue;
        }
        let j_prime = (spectator_prefix..nn).find(|&i| i != j).expect("active >= 2");

        let mut shear_terms: Vec<(Vec<u32>, Cpx)> = Vec::new();
        let mut over_terms: Vec<(Vec<u32>, Cpx)> = Vec::new();
        let mut high: Vec<(Vec<u32>, Cpx)> = Vec::new();
        for (exps, c) in comp.terms() {
            match exps[j] {
                0 => shear_terms.push((drop_coord(exps, j), *c)),
                1 => {
                    let mut e = exps.clone();
                    e[j] = 0;
                    over_terms.push((drop_coord(&e, j), *c));
                }
                _ => high.push((exps.clone(), *c)),
            }
        }
        let over_p = MultiPoly::from_terms(nn - 1, over_terms)?;
        if !over_p.is_zero() {
            parts.push(BasicField::overshear(j, over_p, MultiPoly::zero(nn - 1)));
        }
        let shear_p = MultiPoly::from_terms(nn - 1, shear_terms)?;
        if !shear_p.is_zero() {
            parts.push(BasicField::shear(j, shear_p));
        }
        if high.is_empty() {
            continue;
        }

        // Shared root-of-unity forms l_i = x_j + w^i x_{j'} covering every
        // bivariate degree up to the Hamiltonian degree.
        let dmax = high
            .iter()
            .map(|(e, _)| e[j] + e[j_prime] + 1)
            .max()
            .unwrap();
        let forms = (dmax + 1) as usize;
        let omega: Vec<Cpx> = (0..forms)
            .map(|i| {
                Cpx::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / forms as f64)
            })
            .collect();

        let mut over_acc = vec![MultiPoly::zero(nn - 1); forms];
        let mut shear_acc = vec![MultiPoly::zero(nn - 1); forms];

        // Map a full-coordinate exponent vector (with e[j_prime] == 0) into
        // the data space of parts acting on j_prime.
        let embed = |e_full: &[u32]| drop_coord(e_full, j_prime);

        for (exps, coef) in &high {
            let k = exps[j];
            let a = exps[j_prime];
            let m1 = k - 1 + a;
            // Divergence kill: overshears along j_prime, conjugated so their
            // divergences are multiples of l_i^{m1} times the spectator part.
            let kf = Cpx::new(k as f64, 0.0);
            let denom = forms as f64 * binomial(m1, a);
            for i in 0..forms {
                let w_i = omega[i].powu(a).conj() / denom;
                let mut e = exps.clone();
                e[j] = m1;
                e[j_prime] = 0;
                let data = MultiPoly::monomial(nn - 1, embed(&e), coef * kf * w_i)?;
                over_acc[i] = over_acc[i].add(&data)?;
            }

            // Remainder D = T - sum O_i is divergence-free in the (j, j')
            // plane; integrate it to a Hamiltonian h.
            let ell = |i: usize| -> Result<MultiPoly, AlgError> {
                let mut e1 = vec![0u32; nn];
                e1[j] = 1;
                let mut e2 = vec![0u32; nn];
                e2[j_prime] = 1;
                MultiPoly::from_terms(nn, vec![(e1, Cpx::new(1.0, 0.0)), (e2, omega[i])])
            };
            let mut d_j = MultiPoly::monomial(nn, exps.clone(), *coef)?;
            let mut d_jp = MultiPoly::zero(nn);
            for i in 0..forms {
                // P_i = x_{j'} * l_i^{m1} * (spectator part), with the
                // overshear coefficient folded in.
                let w_i = omega[i].powu(a).conj() / denom;
                let mut s = exps.clone();
                s[j] = 0;
                s[j_prime] = 1;
                let spectator = MultiPoly::monomial(nn, s, coef * kf * w_i)?;
                let p_i = spectator.mul(&ell(i)?.pow(m1))?;
                d_j = d_j.add(&p_i.scale(omega[i]))?;
                d_jp = d_jp.sub(&p_i)?;
            }

            // h(s, t) = int_0^t D_j dt' - int_0^s D_{j'}(s', 0) ds'
            let mut h = MultiPoly::zero(nn);
            for (e, c) in d_j.terms() {
                let mut ne = e.clone();
                ne[j_prime] += 1;
                h = h.add(&MultiPoly::monomial(
                    nn,
                    ne,
                    c / Cpx::new((e[j_prime] + 1) as f64, 0.0),
                )?)?;
            }
            for (e, c) in d_jp.terms() {
                if e[j_prime] != 0 {
                    continue;
                }
                let mut ne = e.clone();
                ne[j] += 1;
                h = h.sub(&MultiPoly::monomial(
                    nn,
                    ne,
                    c / Cpx::new((e[j] + 1) as f64, 0.0),
                )?)?;
            }

            // Hamiltonian fields of powers of l_i are conjugated shears.
            for (e, c) in h.terms() {
                let b = e[j];
                let cc = e[j_prime];
                let m2 = b + cc;
                debug_assert!(m2 >= 1 && (m2 as usize) < forms + 1);
                let denom2 = forms as f64 * binomial(m2, cc);
                for i in 0..forms {
                    let w_i = omega[i].powu(cc).conj() / denom2;
                    let mut ne = e.clone();
                    ne[j] = m2 - 1;
                    ne[j_prime] = 0;
                    let contrib = MultiPoly::monomial(
                        nn - 1,
                        embed(&ne),
                        -c * w_i * Cpx::new(m2 as f64, 0.0),
                    )?;
                    shear_acc[i] = shear_acc[i].add(&contrib)?;
                }
            }
        }

        for i in 0..forms {
            let conj = Conjugation::transvection(nn, j, j_prime, omega[i]);
            if !over_acc[i].is_zero() {
                parts.push(
                    BasicField::overshear(j_prime, over_acc[i].clone(), MultiPoly::zero(nn - 1))
                        .with_conj(conj.clone()),
                );
            }
            if !shear_acc[i].is_zero() {
                parts.push(
                    BasicField::shear(j_prime, shear_acc[i].clone()).with_conj(conj.clone()),
                );
            }
        }
    }

    let sum = FieldSum {
        parts,
        claimed_total: v.clone(),
    };
    let residual = sum.residual()?;
    let tol = 1e-12 * (1.0 + v.max_coeff_norm());
    if residual > tol {
        return Err(FieldError::Residual { residual, tol });
    }
    Ok(sum)
}

/// Decompose a polynomial field on `C^n` (`n >= 2`) into complete
/// shear/overshear fields, with the default degree cap.
pub fn al_decompose(v: &PolyField) -> Result<FieldSum, FieldError> {
    decompose_fibred(v, 0, DEFAULT_MAX_FIELD_DEGREE)
}

/// Splitting scheme for composed flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// First-order Lie-Trotter sweep.
    #[default]
    Lie,
    /// Second-order symmetrized sweep.
    Strang,
}

/// Composed flow `(Π_parts flow_{t/m})^m` applied to `x`.
pub fn trotter_flow(
    sum: &FieldSum,
    t: Cpx,
    m: usize,
    x: &CVec,
    splitting: Splitting,
) -> Result<CVec, FieldError> {
    if m == 0 {
        return Err(FieldError::ZeroSteps);
    }
    let n = sum.claimed_total.dim();
    if x.len() != n {
        return Err(FieldError::Alg(AlgError::DimMismatch {
            expected: n,
            got: x.len(),
        }));
    }
    let tau = t / Cpx::new(m as f64, 0.0);
    let mut buf = x.as_slice().to_vec();
    let mut scratch = Vec::with_capacity(n);
    let guard2 = FLOW_ESCAPE_GUARD * FLOW_ESCAPE_GUARD;
    for _ in 0..m {
        match splitting {
            Splitting::Lie => {
                for part in &sum.parts {
                    part.flow_in_place(tau, &mut buf, &mut scratch);
                }
            }
            Splitting::Strang => {
                let half = tau * 0.5;
                for part in &sum.parts {
                    part.flow_in_place(half, &mut buf, &mut scratch);
                }
                for part in sum.parts.iter().rev() {
                    part.flow_in_place(half, &mut buf, &mut scratch);
                }
            }
        }
        for v in &buf {
            if !(v.re.is_finite() && v.im.is_finite()) || v.norm_sqr() > guard2 {
                return Err(FieldError::Escaped {
                    guard: FLOW_ESCAPE_GUARD,
                });
            }
        }
    }
    Ok(CVec::from_raw(buf))
}

/// Classical fourth-order integration of `dx/dt = V(x)` over real time.
/// Reference oracle only.
pub fn rk4_flow(v: &PolyField, t: f64, steps: usize, x: &CVec) -> Result<CVec, FieldError> {
    if steps == 0 {
        return Err(FieldError::ZeroSteps);
    }
    let n = v.dim();
    if x.len() != n {
        return Err(FieldError::Alg(AlgError::DimMismatch {
            expected: n,
            got: x.len(),
        }));
    }
    let h = Cpx::new(t / steps as f64, 0.0);
    let guard2 = FLOW_ESCAPE_GUARD * FLOW_ESCAPE_GUARD;
    let eval = |buf: &[Cpx]| -> Vec<Cpx> {
        v.components().iter().map(|c| c.eval_slice(buf)).collect()
    };
    let mut y = x.as_slice().to_vec();
    for _ in 0..steps {
        let k1 = eval(&y);
        let y2: Vec<Cpx> = y.iter().zip(&k1).map(|(a, k)| a + k * h * 0.5).collect();
        let k2 = eval(&y2);
        let y3: Vec<Cpx> = y.iter().zip(&k2).map(|(a, k)| a + k * h * 0.5).collect();
        let k3 = eval(&y3);
        let y4: Vec<Cpx> = y.iter().zip(&k3).map(|(a, k)| a + k * h).collect();
        let k4 = eval(&y4);
        for i in 0..n {
            y[i] += h * (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (1.0 / 6.0);
            if !(y[i].re.is_finite() && y[i].im.is_finite()) || y[i].norm_sqr() > guard2 {
                return Err(FieldError::Escaped {
                    guard: FLOW_ESCAPE_GUARD,
                });
            }
        }
    }
    Ok(CVec::from_raw(y))
}

/// `Ψ(s_1..s_m, x) = flow_{m, s_m} ∘ ... ∘ flow_{1, s_1}(x)`.
pub fn compose_spanning_flows(
    fields: &[BasicField],
    s: &CVec,
    x: &CVec,
) -> Result<CVec, FieldError> {
    if s.len() != fields.len() {
        return Err(FieldError::Alg(AlgError::DimMismatch {
            expected: fields.len(),
            got: s.len(),
        }));
    }
    let mut buf = x.as_slice().to_vec();
    let mut scratch = Vec::with_capacity(x.len());
    for (i, f) in fields.iter().enumerate() {
        f.flow_in_place(s[i], &mut buf, &mut scratch);
    }
    Ok(CVec::from_raw(buf))
}

/// Rank of the `s`-differential of the composed flow at `s = 0`, which equals
/// the rank of the matrix whose columns are the field values at `x`.
pub fn spanning_rank(fields: &[BasicField], x: &CVec) -> Result<usize, FieldError> {
    let n = x.len();
    let mut m = CMatrix::zeros(n, fields.len());
    for (c, f) in fields.iter().enumerate() {
        let v = f.value(x)?;
        for r in 0..n {
            m[(r, c)] = v[r];
        }
    }
    Ok(matrix_rank(&m, 1e-8))
}

/// Numerical rank with a relative singular-value threshold.
pub fn matrix_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > rel_tol * max)
        .count()
}
