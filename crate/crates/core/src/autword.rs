//! The group calculus of basic holomorphic automorphisms of `C^n`: shears,
//! overshears, invertible affine maps and fibre scalings, composed into
//! finite words applied left to right. Shear letters invert coefficient
//! exactly; overshear letters invert symbolically (negated exponent), an
//! overshear with additive part splitting into a shear followed by a pure
//! overshear.
//!
//! Words are immutable and application is pure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calg::{AlgError, CMatrix, CVec, Cpx, MatrixRecord, MultiPoly};

/// Orbit guard: any intermediate coordinate beyond this modulus aborts the
/// application with an [`WordError::Escaped`] signal. Push-out orbits
/// legitimately diverge; the signal distinguishes that from numerical failure.
pub const ESCAPE_GUARD: f64 = 1e12;

/// Minimum `|det A|` accepted for affine letters.
pub const AFFINE_DET_MIN: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WordError {
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error("orbit escaped the modulus guard {guard:e} at letter {letter}")]
    Escaped { letter: usize, guard: f64 },
    #[error("affine letter is singular (|det| = {det:e})")]
    SingularAffine { det: f64 },
    #[error("letter data does not match word dimension {dim}")]
    BadLetter { dim: usize },
}

/// One basic automorphism of `C^n`.
///
/// * `Shear`: `x_j -> x_j + p(x̂_j)` with `p` a polynomial in the `n - 1`
///   coordinates excluding `j`; all other coordinates fixed.
/// * `Overshear`: `x_j -> x_j e^{p(x̂_j)} + q(x̂_j)`.
/// * `Affine`: `x -> A x + b` with `A` invertible.
/// * `Scale`: `(z, ζ) -> (z, tζ)` on the coordinates from `fibre_start` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LetterRepr", into = "LetterRepr")]
pub enum BasicAut {
    Shear { j: usize, p: MultiPoly },
    Overshear { j: usize, p: MultiPoly, q: MultiPoly },
    Affine { a: CMatrix, b: CVec },
    Scale { t: Cpx, fibre_start: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LetterRepr {
    Shear {
        j: usize,
        p: MultiPoly,
    },
    Overshear {
        j: usize,
        p: MultiPoly,
        q: MultiPoly,
    },
    Affine {
        a: MatrixRecord,
        b: CVec,
    },
    Scale {
        t: [f64; 2],
        fibre_start: usize,
    },
}

impl TryFrom<LetterRepr> for BasicAut {
    type Error = AlgError;
    fn try_from(r: LetterRepr) -> Result<Self, AlgError> {
        Ok(match r {
            LetterRepr::Shear { j, p } => BasicAut::Shear { j, p },
            LetterRepr::Overshear { j, p, q } => BasicAut::Overshear { j, p, q },
            LetterRepr::Affine { a, b } => BasicAut::Affine {
                a: a.to_matrix()?,
                b,
            },
            LetterRepr::Scale { t, fibre_start } => BasicAut::Scale {
                t: Cpx::new(t[0], t[1]),
                fibre_start,
            },
        })
    }
}

impl From<BasicAut> for LetterRepr {
    fn from(l: BasicAut) -> Self {
        match l {
            BasicAut::Shear { j, p } => LetterRepr::Shear { j, p },
            BasicAut::Overshear { j, p, q } => LetterRepr::Overshear { j, p, q },
            BasicAut::Affine { a, b } => LetterRepr::Affine {
                a: MatrixRecord::from_matrix(&a),
                b,
            },
            BasicAut::Scale { t, fibre_start } => LetterRepr::Scale {
                t: [t.re, t.im],
                fibre_start,
            },
        }
    }
}

impl BasicAut {
    fn validate(&self, dim: usize) -> Result<(), WordError> {
        let bad = WordError::BadLetter { dim };
        match self {
            BasicAut::Shear { j, p } => {
                if *j >= dim || p.dim() != dim - 1 {
                    return Err(bad);
                }
            }
            BasicAut::Overshear { j, p, q } => {
                if *j >= dim || p.dim() != dim - 1 || q.dim() != dim - 1 {
                    return Err(bad);
                }
            }
            BasicAut::Affine { a, b } => {
                if a.nrows() != dim || a.ncols() != dim || b.len() != dim {
                    return Err(bad);
                }
                let det = a.determinant().norm();
                if det <= AFFINE_DET_MIN {
                    return Err(WordError::SingularAffine { det });
                }
            }
            BasicAut::Scale { t, fibre_start } => {
                if *fibre_start > dim || t.norm() == 0.0 {
                    return Err(bad);
                }
            }
        }
        Ok(())
    }

    fn apply_in_place(&self, x: &mut [Cpx], scratch: &mut Vec<Cpx>) {
        match self {
            BasicAut::Shear { j, p } => {
                x[*j] += p.eval_slice_excl(x, *j);
            }
            BasicAut::Overshear { j, p, q } => {
                let u = p.eval_slice_excl(x, *j);
                let v = q.eval_slice_excl(x, *j);
                x[*j] = x[*j] * u.exp() + v;
            }
            BasicAut::Affine { a, b } => {
                scratch.clear();
                scratch.extend_from_slice(x);
                for i in 0..x.len() {
                    let mut acc = b[i];
                    for (k, s) in scratch.iter().enumerate() {
                        acc += a[(i, k)] * s;
                    }
                    x[i] = acc;
                }
            }
            BasicAut::Scale { t, fibre_start } => {
                for v in x[*fibre_start..].iter_mut() {
                    *v *= t;
                }
            }
        }
    }

    /// Jacobian of this letter at the point `x` (before applying it).
    fn jacobian(&self, x: &[Cpx]) -> CMatrix {
        let n = x.len();
        match self {
            BasicAut::Shear { j, p } => {
                let mut m = CMatrix::identity(n, n);
                for col in 0..n {
                    if col == *j {
                        continue;
                    }
                    let var = if col < *j { col } else { col - 1 };
                    m[(*j, col)] = p.partial(var).expect("valid var").eval_slice_excl(x, *j);
                }
                m
            }
            BasicAut::Overshear { j, p, q } => {
                let mut m = CMatrix::identity(n, n);
                let eu = p.eval_slice_excl(x, *j).exp();
                m[(*j, *j)] = eu;
                for col in 0..n {
                    if col == *j {
                        continue;
                    }
                    let var = if col < *j { col } else { col - 1 };
                    let dp = p.partial(var).expect("valid var").eval_slice_excl(x, *j);
                    let dq = q.partial(var).expect("valid var").eval_slice_excl(x, *j);
                    m[(*j, col)] = x[*j] * eu * dp + dq;
                }
                m
            }
            BasicAut::Affine { a, .. } => a.clone(),
            BasicAut::Scale { t, fibre_start } => {
                let mut m = CMatrix::identity(n, n);
                for d in *fibre_start..n {
                    m[(d, d)] = *t;
                }
                m
            }
        }
    }

    /// Push the inverse of this letter (as one or two letters, in application
    /// order) onto `out`.
    fn invert_into(&self, out: &mut Vec<BasicAut>) -> Result<(), WordError> {
        match self {
            BasicAut::Shear { j, p } => out.push(BasicAut::Shear { j: *j, p: p.neg() }),
            BasicAut::Overshear { j, p, q } => {
                if !q.is_zero() {
                    out.push(BasicAut::Shear { j: *j, p: q.neg() });
                }
                out.push(BasicAut::Overshear {
                    j: *j,
                    p: p.neg(),
                    q: MultiPoly::zero(p.dim()),
                });
            }
            BasicAut::Affine { a, b } => {
                let det = a.determinant().norm();
                if det <= AFFINE_DET_MIN {
                    return Err(WordError::SingularAffine { det });
                }
                let inv = a.clone().try_inverse().ok_or(WordError::SingularAffine { det })?;
                let nb = {
                    let mut coords = Vec::with_capacity(b.len());
                    for i in 0..b.len() {
                        let mut acc = Cpx::new(0.0, 0.0);
                        for k in 0..b.len() {
                            acc -= inv[(i, k)] * b[k];
                        }
                        coords.push(acc);
                    }
                    CVec::new(coords).map_err(WordError::Alg)?
                };
                out.push(BasicAut::Affine { a: inv, b: nb });
            }
            BasicAut::Scale { t, fibre_start } => out.push(BasicAut::Scale {
                t: Cpx::new(1.0, 0.0) / t,
                fibre_start: *fibre_start,
            }),
        }
        Ok(())
    }
}

/// Finite composition of basic automorphisms, applied left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WordRepr", into = "WordRepr")]
pub struct AutWord {
    dim: usize,
    letters: Vec<BasicAut>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WordRepr {
    dim: usize,
    letters: Vec<BasicAut>,
}

impl TryFrom<WordRepr> for AutWord {
    type Error = WordError;
    fn try_from(r: WordRepr) -> Result<Self, WordError> {
        AutWord::new(r.dim, r.letters)
    }
}

impl From<AutWord> for WordRepr {
    fn from(w: AutWord) -> Self {
        WordRepr {
            dim: w.dim,
            letters: w.letters,
        }
    }
}

impl AutWord {
    pub fn new(dim: usize, letters: Vec<BasicAut>) -> Result<Self, WordError> {
        for l in &letters {
            l.validate(dim)?;
        }
        Ok(Self { dim, letters })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            letters: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn letters(&self) -> &[BasicAut] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// `compose(u, v)` acts as `u` first, then `v`.
    pub fn compose(&self, then: &AutWord) -> Result<AutWord, WordError> {
        if self.dim != then.dim {
            return Err(WordError::Alg(AlgError::DimMismatch {
                expected: self.dim,
                got: then.dim,
            }));
        }
        let mut letters = self.letters.clone();
        letters.extend(then.letters.iter().cloned());
        Ok(AutWord {
            dim: self.dim,
            letters,
        })
    }

    pub fn apply(&self, x: &CVec) -> Result<CVec, WordError> {
        if x.len() != self.dim {
            return Err(WordError::Alg(AlgError::DimMismatch {
                expected: self.dim,
                got: x.len(),
            }));
        }
        let mut buf = x.as_slice().to_vec();
        self.apply_mut(&mut buf)?;
        Ok(CVec::from_raw(buf))
    }

    pub(crate) fn apply_mut(&self, buf: &mut Vec<Cpx>) -> Result<(), WordError> {
        let mut scratch = Vec::with_capacity(self.dim);
        for (idx, l) in self.letters.iter().enumerate() {
            l.apply_in_place(buf, &mut scratch);
            for v in buf.iter() {
                if !(v.re.is_finite() && v.im.is_finite()) || v.norm_sqr() > ESCAPE_GUARD * ESCAPE_GUARD
                {
                    return Err(WordError::Escaped {
                        letter: idx,
                        guard: ESCAPE_GUARD,
                    });
                }
            }
        }
        Ok(())
    }

    /// Exact structural inverse: letters reversed and inverted one by one.
    pub fn invert(&self) -> Result<AutWord, WordError> {
        let mut letters = Vec::with_capacity(self.letters.len());
        for l in self.letters.iter().rev() {
            l.invert_into(&mut letters)?;
        }
        Ok(AutWord {
            dim: self.dim,
            letters,
        })
    }

    /// Chain-rule Jacobian of the whole word along the orbit of `x`.
    pub fn jacobian(&self, x: &CVec) -> Result<CMatrix, WordError> {
        if x.len() != self.dim {
            return Err(WordError::Alg(AlgError::DimMismatch {
                expected: self.dim,
                got: x.len(),
            }));
        }
        let mut buf = x.as_slice().to_vec();
        let mut scratch = Vec::with_capacity(self.dim);
        let mut jac = CMatrix::identity(self.dim, self.dim);
        for (idx, l) in self.letters.iter().enumerate() {
            jac = l.jacobian(&buf) * jac;
            l.apply_in_place(&mut buf, &mut scratch);
            for v in buf.iter() {
                if !(v.re.is_finite() && v.im.is_finite()) || v.norm_sqr() > ESCAPE_GUARD * ESCAPE_GUARD
                {
                    return Err(WordError::Escaped {
                        letter: idx,
                        guard: ESCAPE_GUARD,
                    });
                }
            }
        }
        Ok(jac)
    }
}

/// A word with the per-letter partial derivatives precomputed, for repeated
/// Jacobian evaluation along orbits.
#[derive(Debug, Clone)]
pub struct PreparedWord {
    word: AutWord,
    partials: Vec<Vec<(MultiPoly, MultiPoly)>>,
}

impl PreparedWord {
    pub fn new(word: AutWord) -> Self {
        let dim = word.dim();
        let partials = word
            .letters()
            .iter()
            .map(|l| match l {
                BasicAut::Shear { p, .. } => (0..dim - 1)
                    .map(|v| (p.partial(v).expect("valid"), MultiPoly::zero(dim - 1)))
                    .collect(),
                BasicAut::Overshear { p, q, .. } => (0..dim - 1)
                    .map(|v| (p.partial(v).expect("valid"), q.partial(v).expect("valid")))
                    .collect(),
                _ => Vec::new(),
            })
            .collect();
        Self { word, partials }
    }

    pub fn word(&self) -> &AutWord {
        &self.word
    }

    pub fn apply(&self, x: &CVec) -> Result<CVec, WordError> {
        self.word.apply(x)
    }

    /// Chain-rule Jacobian, accumulating into `jac` while advancing `buf`
    /// along the orbit.
    pub(crate) fn jacobian_mut(
        &self,
        buf: &mut Vec<Cpx>,
        jac: &mut CMatrix,
    ) -> Result<(), WordError> {
        let n = self.word.dim();
        let mut scratch = Vec::with_capacity(n);
        for (idx, l) in self.word.letters().iter().enumerate() {
            let lj = match l {
                BasicAut::Shear { j, .. } => {
                    let mut m = CMatrix::identity(n, n);
                    for col in 0..n {
                        if col == *j {
                            continue;
                        }
                        let var = if col < *j { col } else { col - 1 };
                        m[(*j, col)] = self.partials[idx][var].0.eval_slice_excl(buf, *j);
                    }
                    m
                }
                BasicAut::Overshear { j, p, .. } => {
                    let mut m = CMatrix::identity(n, n);
                    let eu = p.eval_slice_excl(buf, *j).exp();
                    m[(*j, *j)] = eu;
                    for col in 0..n {
                        if col == *j {
                            continue;
                        }
                        let var = if col < *j { col } else { col - 1 };
                        let dp = self.partials[idx][var].0.eval_slice_excl(buf, *j);
                        let dq = self.partials[idx][var].1.eval_slice_excl(buf, *j);
                        m[(*j, col)] = buf[*j] * eu * dp + dq;
                    }
                    m
                }
                other => other.jacobian(buf),
            };
            *jac = lj * jac.clone();
            l.apply_in_place(buf, &mut scratch);
            for v in buf.iter() {
                if !(v.re.is_finite() && v.im.is_finite())
                    || v.norm_sqr() > ESCAPE_GUARD * ESCAPE_GUARD
                {
                    return Err(WordError::Escaped {
                        letter: idx,
                        guard: ESCAPE_GUARD,
                    });
                }
            }
        }
        Ok(())
    }
}

/// A word whose shear/overshear data depend polynomially on a parameter
/// point `w` in `C^N`; specialization at any `w` yields an [`AutWord`] on the
/// fibre `C^n`. Polynomial letter data live in `N + n - 1` variables with the
/// parameter block first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamWordRepr", into = "ParamWordRepr")]
pub struct ParamAutWord {
    param_dim: usize,
    dim: usize,
    letters: Vec<ParamLetter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LetterRepr", into = "LetterRepr")]
pub enum ParamLetter {
    /// `ζ_j -> ζ_j + p(w, ζ̂_j)`
    Shear { j: usize, p: MultiPoly },
    /// `ζ_j -> ζ_j e^{p(w, ζ̂_j)} + q(w, ζ̂_j)`
    Overshear { j: usize, p: MultiPoly, q: MultiPoly },
    /// Parameter-independent affine letter on the fibre.
    Affine { a: CMatrix, b: CVec },
    Scale { t: Cpx, fibre_start: usize },
}

impl TryFrom<LetterRepr> for ParamLetter {
    type Error = AlgError;
    fn try_from(r: LetterRepr) -> Result<Self, AlgError> {
        Ok(match BasicAut::try_from(r)? {
            BasicAut::Shear { j, p } => ParamLetter::Shear { j, p },
            BasicAut::Overshear { j, p, q } => ParamLetter::Overshear { j, p, q },
            BasicAut::Affine { a, b } => ParamLetter::Affine { a, b },
            BasicAut::Scale { t, fibre_start } => ParamLetter::Scale { t, fibre_start },
        })
    }
}

impl From<ParamLetter> for LetterRepr {
    fn from(l: ParamLetter) -> Self {
        match l {
            ParamLetter::Shear { j, p } => LetterRepr::Shear { j, p },
            ParamLetter::Overshear { j, p, q } => LetterRepr::Overshear { j, p, q },
            ParamLetter::Affine { a, b } => LetterRepr::Affine {
                a: MatrixRecord::from_matrix(&a),
                b,
            },
            ParamLetter::Scale { t, fibre_start } => LetterRepr::Scale {
                t: [t.re, t.im],
                fibre_start,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamWordRepr {
    param_dim: usize,
    dim: usize,
    letters: Vec<ParamLetter>,
}

impl TryFrom<ParamWordRepr> for ParamAutWord {
    type Error = WordError;
    fn try_from(r: ParamWordRepr) -> Result<Self, WordError> {
        ParamAutWord::new(r.param_dim, r.dim, r.letters)
    }
}

impl From<ParamAutWord> for ParamWordRepr {
    fn from(w: ParamAutWord) -> Self {
        ParamWordRepr {
            param_dim: w.param_dim,
            dim: w.dim,
            letters: w.letters,
        }
    }
}

impl ParamAutWord {
    pub fn new(
        param_dim: usize,
        dim: usize,
        letters: Vec<ParamLetter>,
    ) -> Result<Self, WordError> {
        let data_dim = param_dim + dim - 1;
        for l in &letters {
            let ok = match l {
                ParamLetter::Shear { j, p } => *j < dim && p.dim() == data_dim,
                ParamLetter::Overshear { j, p, q } => {
                    *j < dim && p.dim() == data_dim && q.dim() == data_dim
                }
                ParamLetter::Affine { a, b } => {
                    a.nrows() == dim
                        && a.ncols() == dim
                        && b.len() == dim
                        && a.determinant().norm() > AFFINE_DET_MIN
                }
                ParamLetter::Scale { t, fibre_start } => *fibre_start <= dim && t.norm() > 0.0,
            };
            if !ok {
                return Err(WordError::BadLetter { dim });
            }
        }
        Ok(Self {
            param_dim,
            dim,
            letters,
        })
    }

    pub fn identity(param_dim: usize, dim: usize) -> Self {
        Self {
            param_dim,
            dim,
            letters: Vec::new(),
        }
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn letters(&self) -> &[ParamLetter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Evaluate every letter's polynomial data at the parameter point.
    pub fn specialize(&self, w: &CVec) -> Result<AutWord, WordError> {
        if w.len() != self.param_dim {
            return Err(WordError::Alg(AlgError::DimMismatch {
                expected: self.param_dim,
                got: w.len(),
            }));
        }
        let mut letters = Vec::with_capacity(self.letters.len());
        for l in &self.letters {
            letters.push(match l {
                ParamLetter::Shear { j, p } => BasicAut::Shear {
                    j: *j,
                    p: p.eval_prefix(w.as_slice()).map_err(WordError::Alg)?,
                },
                ParamLetter::Overshear { j, p, q } => BasicAut::Overshear {
                    j: *j,
                    p: p.eval_prefix(w.as_slice()).map_err(WordError::Alg)?,
                    q: q.eval_prefix(w.as_slice()).map_err(WordError::Alg)?,
                },
                ParamLetter::Affine { a, b } => BasicAut::Affine {
                    a: a.clone(),
                    b: b.clone(),
                },
                ParamLetter::Scale { t, fibre_start } => BasicAut::Scale {
                    t: *t,
                    fibre_start: *fibre_start,
                },
            });
        }
        AutWord::new(self.dim, letters)
    }

    /// Structural check that every specialization fixes the fibre origin:
    /// additive letter data must have no term that is constant in the fibre
    /// variables, and affine letters must be linear.
    pub fn is_origin_fixing(&self) -> bool {
        let fibre_from = self.param_dim;
        let has_fibre_constant = |p: &MultiPoly| {
            p.terms()
                .any(|(exps, _)| exps[fibre_from..].iter().all(|&e| e == 0))
        };
        self.letters.iter().all(|l| match l {
            ParamLetter::Shear { p, .. } => !has_fibre_constant(p),
            ParamLetter::Overshear { q, .. } => !has_fibre_constant(q),
            ParamLetter::Affine { b, .. } => b.iter().all(|c| c.re == 0.0 && c.im == 0.0),
            ParamLetter::Scale { .. } => true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{rng, sample_cvec, sample_poly};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Cpx {
        Cpx::new(re, im)
    }

    fn shear(dim: usize, j: usize, p: MultiPoly) -> BasicAut {
        BasicAut::Shear { j, p }
    }

    #[test]
    fn shear_apply_example() {
        // Shear on the second coordinate by z^2: (2, 0) -> (2, 4).
        let p = MultiPoly::monomial(1, vec![2], c(1.0, 0.0)).unwrap();
        let w = AutWord::new(2, vec![shear(2, 1, p)]).unwrap();
        let x = CVec::new(vec![c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        let y = w.apply(&x).unwrap();
        assert_eq!(y.as_slice(), &[c(2.0, 0.0), c(4.0, 0.0)]);
    }

    #[test]
    fn empty_word_is_identity() {
        let w = AutWord::identity(3);
        let x = CVec::new(vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)]).unwrap();
        assert_eq!(w.apply(&x).unwrap(), x);
        assert!(w.invert().unwrap().is_empty());
    }

    #[test]
    fn scale_on_whole_fibre() {
        let w = AutWord::new(
            2,
            vec![BasicAut::Scale {
                t: c(3.0, 0.0),
                fibre_start: 0,
            }],
        )
        .unwrap();
        let x = CVec::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(
            w.apply(&x).unwrap().as_slice(),
            &[c(3.0, 0.0), c(3.0, 0.0)]
        );
    }

    #[test]
    fn shear_inverse_is_negated() {
        let p = MultiPoly::monomial(1, vec![2], c(1.0, 0.0)).unwrap();
        let w = AutWord::new(2, vec![shear(2, 1, p.clone())]).unwrap();
        let inv = w.invert().unwrap();
        assert_eq!(
            inv.letters()[0],
            BasicAut::Shear { j: 1, p: p.neg() }
        );
    }

    fn random_word(r: &mut ChaCha8Rng, dim: usize, len: usize) -> AutWord {
        let mut letters = Vec::new();
        for _ in 0..len {
            let kind = r.gen_range(0..4);
            letters.push(match kind {
                0 => BasicAut::Shear {
                    j: r.gen_range(0..dim),
                    p: sample_poly(r, dim - 1, 3, 3, 0.5),
                },
                1 => BasicAut::Overshear {
                    j: r.gen_range(0..dim),
                    p: sample_poly(r, dim - 1, 2, 2, 0.15),
                    q: sample_poly(r, dim - 1, 2, 2, 0.3),
                },
                // Well-conditioned affine letters: a perturbation of the
                // identity keeps the word round-trippable at tight tolerance.
                2 => loop {
                    let mut a = CMatrix::identity(dim, dim);
                    for i in 0..dim {
                        for j in 0..dim {
                            a[(i, j)] += Cpx::new(r.gen_range(-0.3..0.3), r.gen_range(-0.3..0.3));
                        }
                    }
                    if a.determinant().norm() > 0.4 {
                        break BasicAut::Affine {
                            a,
                            b: sample_cvec(r, dim, 0.5),
                        };
                    }
                },
                _ => BasicAut::Scale {
                    t: Cpx::new(r.gen_range(0.5..1.5), r.gen_range(-0.3..0.3)),
                    fibre_start: r.gen_range(0..dim),
                },
            });
        }
        AutWord::new(dim, letters).unwrap()
    }

    fn random_shear_word(r: &mut ChaCha8Rng, dim: usize, len: usize) -> AutWord {
        let letters = (0..len)
            .map(|_| BasicAut::Shear {
                j: r.gen_range(0..dim),
                p: sample_poly(r, dim - 1, 2, 3, 0.35),
            })
            .collect();
        AutWord::new(dim, letters).unwrap()
    }

    #[test]
    fn shear_word_roundtrip_is_tight() {
        let mut r = rng(101);
        let mut worst: f64 = 0.0;
        let mut measured = 0;
        while measured < 1000 {
            let w = random_shear_word(&mut r, 2, 6);
            let inv = w.invert().unwrap();
            let x = sample_cvec(&mut r, 2, 1.0);
            let y = match w.apply(&x) {
                Ok(y) => y,
                Err(WordError::Escaped { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let back = inv.apply(&y).unwrap();
            let err = back.sub(&x).unwrap().norm() / (1.0 + x.norm());
            worst = worst.max(err);
            measured += 1;
        }
        assert!(worst <= 1e-13, "shear round-trip relative error {worst:e}");
    }

    #[test]
    fn mixed_word_roundtrip() {
        let mut r = rng(202);
        let mut worst: f64 = 0.0;
        let mut measured = 0;
        while measured < 1000 {
            let w = random_word(&mut r, 2, 10);
            let inv = w.invert().unwrap();
            let x = sample_cvec(&mut r, 2, 0.8);
            let back = match w.apply(&x).and_then(|y| inv.apply(&y)) {
                Ok(b) => b,
                Err(WordError::Escaped { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let err = back.sub(&x).unwrap().norm() / (1.0 + x.norm());
            worst = worst.max(err);
            measured += 1;
        }
        assert!(worst <= 1e-10, "mixed round-trip relative error {worst:e}");
    }

    #[test]
    fn double_inverse_has_same_action() {
        let mut r = rng(303);
        for _ in 0..100 {
            let w = random_word(&mut r, 2, 5);
            let ww = w.invert().unwrap().invert().unwrap();
            let x = sample_cvec(&mut r, 2, 0.8);
            let (a, b) = match (w.apply(&x), ww.apply(&x)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            assert!(a.sub(&b).unwrap().norm() <= 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn group_law() {
        let mut r = rng(404);
        for _ in 0..200 {
            let u = random_word(&mut r, 2, 4);
            let v = random_word(&mut r, 2, 4);
            let uv = u.compose(&v).unwrap();
            let x = sample_cvec(&mut r, 2, 0.7);
            let lhs = match uv.apply(&x) {
                Ok(y) => y,
                Err(_) => continue,
            };
            let rhs = v.apply(&u.apply(&x).unwrap()).unwrap();
            assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-12 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn word_jacobian_examples() {
        let x = CVec::new(vec![c(0.7, 0.1), c(-0.3, 0.4)]).unwrap();
        assert_eq!(
            AutWord::identity(2).jacobian(&x).unwrap(),
            CMatrix::identity(2, 2)
        );

        // Shear on coord 2 by z^2 has Jacobian [[1, 0], [2a, 1]] at (a, b).
        let p = MultiPoly::monomial(1, vec![2], c(1.0, 0.0)).unwrap();
        let w = AutWord::new(2, vec![shear(2, 1, p)]).unwrap();
        let a = c(0.7, 0.1);
        let j = w.jacobian(&x).unwrap();
        assert_eq!(j[(0, 0)], c(1.0, 0.0));
        assert_eq!(j[(0, 1)], c(0.0, 0.0));
        assert!((j[(1, 0)] - a.scale(2.0)).norm() < 1e-15);
        assert_eq!(j[(1, 1)], c(1.0, 0.0));
    }

    #[test]
    fn word_jacobian_matches_finite_differences() {
        let mut r = rng(505);
        let h = 1e-5;
        for _ in 0..50 {
            let w = random_word(&mut r, 2, 6);
            let x = sample_cvec(&mut r, 2, 0.6);
            let jac = match w.jacobian(&x) {
                Ok(j) => j,
                Err(_) => continue,
            };
            for col in 0..2 {
                let mut xp = x.as_slice().to_vec();
                let mut xm = xp.clone();
                xp[col] += c(h, 0.0);
                xm[col] -= c(h, 0.0);
                let yp = w.apply(&CVec::new(xp).unwrap()).unwrap();
                let ym = w.apply(&CVec::new(xm).unwrap()).unwrap();
                for row in 0..2 {
                    let fd = (yp[row] - ym[row]) / c(2.0 * h, 0.0);
                    assert!(
                        (jac[(row, col)] - fd).norm() <= 1e-6 * (1.0 + jac[(row, col)].norm()),
                        "jacobian vs finite differences"
                    );
                }
            }
        }
    }

    #[test]
    fn shear_letter_jacobian_is_unimodular() {
        let mut r = rng(606);
        for _ in 0..100 {
            let w = random_shear_word(&mut r, 3, 5);
            let x = sample_cvec(&mut r, 3, 1.0);
            // Each shear letter is volume-preserving at every sampled point
            // along the orbit.
            let mut buf = x.as_slice().to_vec();
            let mut scratch = Vec::new();
            for l in w.letters() {
                let det = l.jacobian(&buf).determinant();
                assert!((det - c(1.0, 0.0)).norm() < 1e-12);
                l.apply_in_place(&mut buf, &mut scratch);
            }
            // The whole word is unimodular as well, up to rounding in the
            // matrix product.
            let j = w.jacobian(&x).unwrap();
            let scale = j.iter().map(|v| v.norm()).fold(1.0, f64::max);
            assert!((j.determinant() - c(1.0, 0.0)).norm() < 1e-10 * scale * scale);
        }
    }

    #[test]
    fn escape_guard_signals() {
        // Iterated squaring shear escapes from a large seed.
        let p = MultiPoly::monomial(1, vec![8], c(1e3, 0.0)).unwrap();
        let letters = vec![shear(2, 0, MultiPoly::zero(1)); 0];
        drop(letters);
        let w = AutWord::new(
            2,
            vec![
                BasicAut::Shear { j: 1, p },
                BasicAut::Scale {
                    t: c(1e4, 0.0),
                    fibre_start: 0,
                },
            ],
        )
        .unwrap();
        let x = CVec::new(vec![c(100.0, 0.0), c(0.0, 0.0)]).unwrap();
        match w.apply(&x) {
            Err(WordError::Escaped { .. }) => {}
            other => panic!("expected escape, got {other:?}"),
        }
    }

    #[test]
    fn param_specialize_examples() {
        // Parameter-independent word specializes identically everywhere.
        let p_ind = MultiPoly::monomial(2, vec![0, 2], c(1.0, 0.0)).unwrap();
        let pw = ParamAutWord::new(1, 2, vec![ParamLetter::Shear { j: 1, p: p_ind }]).unwrap();
        let w0 = pw.specialize(&CVec::new(vec![c(0.3, 0.0)]).unwrap()).unwrap();
        let w1 = pw.specialize(&CVec::new(vec![c(-2.0, 1.0)]).unwrap()).unwrap();
        assert_eq!(w0, w1);

        // p_w(z) = w * z^2 vanishes at w = 0.
        let p_dep = MultiPoly::monomial(2, vec![1, 2], c(1.0, 0.0)).unwrap();
        let pw = ParamAutWord::new(1, 2, vec![ParamLetter::Shear { j: 1, p: p_dep }]).unwrap();
        let w = pw.specialize(&CVec::zero(1)).unwrap();
        let x = CVec::new(vec![c(2.0, 0.0), c(5.0, 0.0)]).unwrap();
        assert_eq!(w.apply(&x).unwrap(), x);
    }

    #[test]
    fn origin_fixing_structural_and_sampled() {
        let mut r = rng(707);
        // Letters whose additive data carry a fibre factor fix the origin.
        let p = MultiPoly::from_terms(
            2,
            vec![(vec![3, 1], c(0.7, 0.2)), (vec![0, 2], c(-0.1, 0.0))],
        )
        .unwrap();
        let pw = ParamAutWord::new(
            1,
            2,
            vec![
                ParamLetter::Shear { j: 0, p: p.clone() },
                ParamLetter::Overshear {
                    j: 1,
                    p: MultiPoly::constant(2, c(0.2, 0.0)),
                    q: p,
                },
            ],
        )
        .unwrap();
        assert!(pw.is_origin_fixing());
        for _ in 0..100 {
            let w = sample_cvec(&mut r, 1, 2.0);
            let word = pw.specialize(&w).unwrap();
            let origin = CVec::zero(2);
            assert_eq!(word.apply(&origin).unwrap(), origin);
        }

        // A parameter-only additive term breaks the property.
        let bad = MultiPoly::monomial(2, vec![2, 0], c(1.0, 0.0)).unwrap();
        let pw = ParamAutWord::new(1, 2, vec![ParamLetter::Shear { j: 0, p: bad }]).unwrap();
        assert!(!pw.is_origin_fixing());
    }

    #[test]
    fn prepared_word_jacobian_matches_plain() {
        let mut r = rng(909);
        for _ in 0..50 {
            let w = random_word(&mut r, 2, 6);
            let x = sample_cvec(&mut r, 2, 0.6);
            let plain = match w.jacobian(&x) {
                Ok(j) => j,
                Err(_) => continue,
            };
            let prep = PreparedWord::new(w.clone());
            let mut buf = x.as_slice().to_vec();
            let mut jac = CMatrix::identity(2, 2);
            prep.jacobian_mut(&mut buf, &mut jac).unwrap();
            assert!((&jac - &plain).norm() < 1e-12 * (1.0 + plain.norm()));
            let end = w.apply(&x).unwrap();
            for i in 0..2 {
                assert!((buf[i] - end[i]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn word_serde_roundtrip_bit_exact() {
        let mut r = rng(808);
        for _ in 0..20 {
            let w = random_word(&mut r, 2, 6);
            let s = serde_json::to_string(&w).unwrap();
            let back: AutWord = serde_json::from_str(&s).unwrap();
            assert_eq!(w, back);
        }
    }
}
