//! Sparse multivariate polynomials over `C` in canonical form: no stored zero
//! coefficients, terms kept in a `BTreeMap` keyed by the exponent multi-index,
//! so iteration (and therefore evaluation and serialization) is always in
//! lexicographic order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{is_finite_c, AlgError, CMatrix, CVec, Cpx};

/// One serialized term of a polynomial literal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermRecord {
    pub exponents: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

/// Sparse polynomial in `dim` complex variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, Cpx>,
}

impl MultiPoly {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Cpx) -> Self {
        let mut p = Self::zero(dim);
        p.insert_term(vec![0; dim], c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, Cpx::new(1.0, 0.0))
    }

    /// The coordinate polynomial `x_j`.
    pub fn var(dim: usize, j: usize) -> Result<Self, AlgError> {
        if j >= dim {
            return Err(AlgError::IndexOutOfRange { index: j, dim });
        }
        let mut exps = vec![0u32; dim];
        exps[j] = 1;
        Ok(Self::monomial(dim, exps, Cpx::new(1.0, 0.0))?)
    }

    pub fn monomial(dim: usize, exponents: Vec<u32>, c: Cpx) -> Result<Self, AlgError> {
        if exponents.len() != dim {
            return Err(AlgError::DimMismatch {
                expected: dim,
                got: exponents.len(),
            });
        }
        if !is_finite_c(c) {
            return Err(AlgError::NonFinite);
        }
        let mut p = Self::zero(dim);
        p.insert_term(exponents, c);
        Ok(p)
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self, AlgError>
    where
        I: IntoIterator<Item = (Vec<u32>, Cpx)>,
    {
        let mut p = Self::zero(dim);
        for (exps, c) in terms {
            if exps.len() != dim {
                return Err(AlgError::DimMismatch {
                    expected: dim,
                    got: exps.len(),
                });
            }
            if !is_finite_c(c) {
                return Err(AlgError::NonFinite);
            }
            p.insert_term(exps, c);
        }
        Ok(p)
    }

    fn insert_term(&mut self, exps: Vec<u32>, c: Cpx) {
        if c.re == 0.0 && c.im == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let v = *e.get() + c;
                if v.re == 0.0 && v.im == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Degree in the single variable `j`.
    pub fn degree_in(&self, j: usize) -> u32 {
        self.terms.keys().map(|e| e[j]).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Cpx)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Cpx {
        self.terms
            .get(exps)
            .copied()
            .unwrap_or(Cpx::new(0.0, 0.0))
    }

    /// Largest coefficient modulus; 0 for the zero polynomial.
    pub fn max_coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_term(e.clone(), *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_term(e.clone(), -c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, t: Cpx) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.insert_term(e.clone(), c * t);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, AlgError> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
                out.insert_term(exps, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.dim);
        for _ in 0..k {
            out = out.mul(self).expect("same dim");
        }
        out
    }

    /// Evaluate at a point, iterating terms in lexicographic order.
    pub fn eval(&self, x: &CVec) -> Result<Cpx, AlgError> {
        if x.len() != self.dim {
            return Err(AlgError::DimMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.eval_slice(x.as_slice()))
    }

    pub(crate) fn eval_slice(&self, x: &[Cpx]) -> Cpx {
        let mut acc = Cpx::new(0.0, 0.0);
        for (exps, c) in &self.terms {
            let mut term = *c;
            for (i, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    term *= x[i];
                }
            }
            acc += term;
        }
        acc
    }

    /// Evaluate over `x` with coordinate `skip` removed, i.e. the polynomial's
    /// variable `i` reads `x[i]` for `i < skip` and `x[i + 1]` otherwise.
    /// Used for shear data given in the coordinates excluding the sheared one.
    pub(crate) fn eval_slice_excl(&self, x: &[Cpx], skip: usize) -> Cpx {
        debug_assert_eq!(x.len(), self.dim + 1);
        let mut acc = Cpx::new(0.0, 0.0);
        for (exps, c) in &self.terms {
            let mut term = *c;
            for (i, &e) in exps.iter().enumerate() {
                let xi = if i < skip { x[i] } else { x[i + 1] };
                for _ in 0..e {
                    term *= xi;
                }
            }
            acc += term;
        }
        acc
    }

    /// Formal partial derivative in variable `j`.
    pub fn partial(&self, j: usize) -> Result<Self, AlgError> {
        if j >= self.dim {
            return Err(AlgError::IndexOutOfRange { index: j, dim: self.dim });
        }
        let mut out = Self::zero(self.dim);
        for (exps, c) in &self.terms {
            let e = exps[j];
            if e == 0 {
                continue;
            }
            let mut ne = exps.clone();
            ne[j] = e - 1;
            out.insert_term(ne, c * Cpx::new(e as f64, 0.0));
        }
        Ok(out)
    }

    /// Exact coefficient expansion of `x -> self(A x + b)`.
    pub fn compose_affine(&self, a: &CMatrix, b: &CVec) -> Result<Self, AlgError> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(AlgError::DimMismatch {
                expected: self.dim,
                got: a.nrows().max(a.ncols()),
            });
        }
        if b.len() != self.dim {
            return Err(AlgError::DimMismatch {
                expected: self.dim,
                got: b.len(),
            });
        }
        // Affine forms l_i(x) = sum_j a[i][j] x_j + b_i.
        let forms: Vec<MultiPoly> = (0..self.dim)
            .map(|i| {
                let mut f = MultiPoly::constant(self.dim, b[i]);
                for j in 0..self.dim {
                    let mut exps = vec![0u32; self.dim];
                    exps[j] = 1;
                    f.insert_term(exps, a[(i, j)]);
                }
                f
            })
            .collect();

        let mut out = Self::zero(self.dim);
        for (exps, c) in &self.terms {
            let mut prod = Self::constant(self.dim, *c);
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    prod = prod.mul(&forms[i].pow(e))?;
                }
            }
            out = out.add(&prod)?;
        }
        Ok(out)
    }

    /// Partially evaluate the first `vals.len()` variables, returning a
    /// polynomial in the remaining `dim - vals.len()` variables.
    pub fn eval_prefix(&self, vals: &[Cpx]) -> Result<Self, AlgError> {
        let k = vals.len();
        if k > self.dim {
            return Err(AlgError::DimMismatch {
                expected: self.dim,
                got: k,
            });
        }
        let mut out = Self::zero(self.dim - k);
        for (exps, c) in &self.terms {
            let mut coeff = *c;
            for (i, &v) in vals.iter().enumerate() {
                for _ in 0..exps[i] {
                    coeff *= v;
                }
            }
            out.insert_term(exps[k..].to_vec(), coeff);
        }
        Ok(out)
    }

    /// Re-embed into `dim + 1` variables by inserting a fresh variable with
    /// exponent zero at position `at`.
    pub fn insert_var(&self, at: usize) -> Result<Self, AlgError> {
        if at > self.dim {
            return Err(AlgError::IndexOutOfRange {
                index: at,
                dim: self.dim,
            });
        }
        let mut out = Self::zero(self.dim + 1);
        for (exps, c) in &self.terms {
            let mut ne = Vec::with_capacity(self.dim + 1);
            ne.extend_from_slice(&exps[..at]);
            ne.push(0);
            ne.extend_from_slice(&exps[at..]);
            out.insert_term(ne, *c);
        }
        Ok(out)
    }

    /// Polynomial literal: term records sorted lexicographically by exponents.
    pub fn to_literal(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(e, c)| TermRecord {
                exponents: e.clone(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn from_literal(dim: usize, records: &[TermRecord]) -> Result<Self, AlgError> {
        Self::from_terms(
            dim,
            records
                .iter()
                .map(|r| (r.exponents.clone(), Cpx::new(r.re, r.im))),
        )
    }

    fn check_dim(&self, other: &Self) -> Result<(), AlgError> {
        if self.dim != other.dim {
            Err(AlgError::DimMismatch {
                expected: self.dim,
                got: other.dim,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolyRepr {
    dim: usize,
    terms: Vec<TermRecord>,
}

impl Serialize for MultiPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolyRepr {
            dim: self.dim,
            terms: self.to_literal(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        MultiPoly::from_literal(repr.dim, &repr.terms).map_err(serde::de::Error::custom)
    }
}

/// Polynomial map `C^{src} -> C^{dst}` given componentwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyMapRepr", into = "PolyMapRepr")]
pub struct PolyMap {
    src_dim: usize,
    components: Vec<MultiPoly>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolyMapRepr {
    src_dim: usize,
    components: Vec<MultiPoly>,
}

impl TryFrom<PolyMapRepr> for PolyMap {
    type Error = AlgError;
    fn try_from(r: PolyMapRepr) -> Result<Self, AlgError> {
        PolyMap::new(r.src_dim, r.components)
    }
}

impl From<PolyMap> for PolyMapRepr {
    fn from(m: PolyMap) -> Self {
        PolyMapRepr {
            src_dim: m.src_dim,
            components: m.components,
        }
    }
}

impl PolyMap {
    pub fn new(src_dim: usize, components: Vec<MultiPoly>) -> Result<Self, AlgError> {
        for c in &components {
            if c.dim() != src_dim {
                return Err(AlgError::DimMismatch {
                    expected: src_dim,
                    got: c.dim(),
                });
            }
        }
        Ok(Self {
            src_dim,
            components,
        })
    }

    pub fn zero(src_dim: usize, dst_dim: usize) -> Self {
        Self {
            src_dim,
            components: vec![MultiPoly::zero(src_dim); dst_dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            src_dim: dim,
            components: (0..dim).map(|j| MultiPoly::var(dim, j).unwrap()).collect(),
        }
    }

    pub fn src_dim(&self) -> usize {
        self.src_dim
    }

    pub fn dst_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[MultiPoly] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &MultiPoly {
        &self.components[i]
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(|c| c.degree()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &CVec) -> Result<CVec, AlgError> {
        if x.len() != self.src_dim {
            return Err(AlgError::DimMismatch {
                expected: self.src_dim,
                got: x.len(),
            });
        }
        Ok(CVec::from_raw(
            self.components
                .iter()
                .map(|c| c.eval_slice(x.as_slice()))
                .collect(),
        ))
    }

    /// Jacobian matrix at `x`: entry `(i, j)` is `d m_i / d x_j` at `x`.
    pub fn jacobian_at(&self, x: &CVec) -> Result<CMatrix, AlgError> {
        if x.len() != self.src_dim {
            return Err(AlgError::DimMismatch {
                expected: self.src_dim,
                got: x.len(),
            });
        }
        let mut jac = CMatrix::zeros(self.dst_dim(), self.src_dim);
        for (i, comp) in self.components.iter().enumerate() {
            for j in 0..self.src_dim {
                jac[(i, j)] = comp.partial(j)?.eval_slice(x.as_slice());
            }
        }
        Ok(jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{rng, sample_cvec, sample_poly};
    use rand::Rng;

    fn c(re: f64, im: f64) -> Cpx {
        Cpx::new(re, im)
    }

    fn poly_approx_eq(a: &MultiPoly, b: &MultiPoly, tol: f64) -> bool {
        let scale = 1.0 + a.max_coeff_norm().max(b.max_coeff_norm());
        let diff = a.sub(b).unwrap();
        diff.max_coeff_norm() <= tol * scale
    }

    #[test]
    fn eval_examples() {
        // z^2 + w at (1 + i, 2) = 2 + 2i
        let p = MultiPoly::from_terms(2, vec![(vec![2, 0], c(1.0, 0.0)), (vec![0, 1], c(1.0, 0.0))])
            .unwrap();
        let x = CVec::new(vec![c(1.0, 1.0), c(2.0, 0.0)]).unwrap();
        assert_eq!(p.eval(&x).unwrap(), c(2.0, 2.0));

        // zero polynomial
        assert_eq!(MultiPoly::zero(2).eval(&x).unwrap(), c(0.0, 0.0));

        // z*w - 3 at (2, 5) = 7
        let q = MultiPoly::from_terms(2, vec![(vec![1, 1], c(1.0, 0.0)), (vec![0, 0], c(-3.0, 0.0))])
            .unwrap();
        let y = CVec::new(vec![c(2.0, 0.0), c(5.0, 0.0)]).unwrap();
        assert_eq!(q.eval(&y).unwrap(), c(7.0, 0.0));
    }

    #[test]
    fn arith_examples() {
        let z = MultiPoly::var(2, 0).unwrap();
        let z2 = z.mul(&z).unwrap();
        assert_eq!(z2.coefficient(&[2, 0]), c(1.0, 0.0));
        assert_eq!(z2.num_terms(), 1);

        let w = MultiPoly::var(2, 1).unwrap();
        let s = z.add(&w).unwrap();
        assert!(s.sub(&s).unwrap().is_zero());

        // (z + 1)(z - 1) = z^2 - 1
        let one = MultiPoly::one(1);
        let zz = MultiPoly::var(1, 0).unwrap();
        let prod = zz.add(&one).unwrap().mul(&zz.sub(&one).unwrap()).unwrap();
        assert_eq!(prod.coefficient(&[2]), c(1.0, 0.0));
        assert_eq!(prod.coefficient(&[0]), c(-1.0, 0.0));
        assert_eq!(prod.num_terms(), 2);
    }

    #[test]
    fn mul_degree_adds() {
        let mut r = rng(11);
        for _ in 0..50 {
            let a = sample_poly(&mut r, 2, 3, 4, 1.0);
            let b = sample_poly(&mut r, 2, 3, 4, 1.0);
            if a.is_zero() || b.is_zero() {
                continue;
            }
            assert_eq!(a.mul(&b).unwrap().degree(), a.degree() + b.degree());
        }
    }

    #[test]
    fn compose_affine_examples() {
        let z2 = MultiPoly::monomial(2, vec![2, 0], c(1.0, 0.0)).unwrap();
        let id = CMatrix::identity(2, 2);
        let zero = CVec::zero(2);
        assert_eq!(z2.compose_affine(&id, &zero).unwrap(), z2);

        // coordinate swap sends z to w
        let z = MultiPoly::var(2, 0).unwrap();
        let mut swap = CMatrix::zeros(2, 2);
        swap[(0, 1)] = c(1.0, 0.0);
        swap[(1, 0)] = c(1.0, 0.0);
        assert_eq!(
            z.compose_affine(&swap, &zero).unwrap(),
            MultiPoly::var(2, 1).unwrap()
        );

        // z^2 shifted by (1, 0): z^2 + 2z + 1
        let b = CVec::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let shifted = z2.compose_affine(&id, &b).unwrap();
        assert_eq!(shifted.coefficient(&[2, 0]), c(1.0, 0.0));
        assert_eq!(shifted.coefficient(&[1, 0]), c(2.0, 0.0));
        assert_eq!(shifted.coefficient(&[0, 0]), c(1.0, 0.0));
    }

    #[test]
    fn partial_examples() {
        // d(z^2 w)/dz = 2 z w
        let p = MultiPoly::monomial(2, vec![2, 1], c(1.0, 0.0)).unwrap();
        let dz = p.partial(0).unwrap();
        assert_eq!(dz.coefficient(&[1, 1]), c(2.0, 0.0));

        assert!(MultiPoly::one(2).partial(0).unwrap().is_zero());

        // d(z^2 + w^3)/dw = 3 w^2
        let q = MultiPoly::from_terms(2, vec![(vec![2, 0], c(1.0, 0.0)), (vec![0, 3], c(1.0, 0.0))])
            .unwrap();
        let dw = q.partial(1).unwrap();
        assert_eq!(dw.coefficient(&[0, 2]), c(3.0, 0.0));
        assert_eq!(dw.num_terms(), 1);

        assert!(q.partial(5).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let id = PolyMap::identity(2);
        let x = CVec::new(vec![c(0.3, 0.1), c(-1.0, 2.0)]).unwrap();
        assert_eq!(id.jacobian_at(&x).unwrap(), CMatrix::identity(2, 2));

        let swap = PolyMap::new(
            2,
            vec![MultiPoly::var(2, 1).unwrap(), MultiPoly::var(2, 0).unwrap()],
        )
        .unwrap();
        let j = swap.jacobian_at(&x).unwrap();
        assert_eq!(j[(0, 1)], c(1.0, 0.0));
        assert_eq!(j[(1, 0)], c(1.0, 0.0));
        assert_eq!(j[(0, 0)], c(0.0, 0.0));

        // m(z, w) = (z + w^2, w) at (0, 1 + i)
        let m = PolyMap::new(
            2,
            vec![
                MultiPoly::from_terms(2, vec![(vec![1, 0], c(1.0, 0.0)), (vec![0, 2], c(1.0, 0.0))])
                    .unwrap(),
                MultiPoly::var(2, 1).unwrap(),
            ],
        )
        .unwrap();
        let p = CVec::new(vec![c(0.0, 0.0), c(1.0, 1.0)]).unwrap();
        let j = m.jacobian_at(&p).unwrap();
        assert_eq!(j[(0, 0)], c(1.0, 0.0));
        assert_eq!(j[(0, 1)], c(2.0, 2.0));
        assert_eq!(j[(1, 0)], c(0.0, 0.0));
        assert_eq!(j[(1, 1)], c(1.0, 0.0));
    }

    #[test]
    fn canonical_form_sub_self_is_empty() {
        let mut r = rng(7);
        for _ in 0..1000 {
            let a = sample_poly(&mut r, 3, 4, 6, 2.0);
            let d = a.sub(&a).unwrap();
            assert!(d.is_zero(), "a - a must have an empty term map");
        }
    }

    #[test]
    fn composition_consistency_random() {
        let mut r = rng(23);
        for _ in 0..200 {
            let p = sample_poly(&mut r, 2, 6, 6, 1.0);
            let mut a = CMatrix::zeros(2, 2);
            for i in 0..2 {
                for j in 0..2 {
                    a[(i, j)] = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                }
            }
            let b = sample_cvec(&mut r, 2, 1.0);
            let x = sample_cvec(&mut r, 2, 2.0);
            let q = p.compose_affine(&a, &b).unwrap();
            let lhs = q.eval(&x).unwrap();
            let ax = {
                let mut v = Vec::new();
                for i in 0..2 {
                    let mut acc = b[i];
                    for j in 0..2 {
                        acc += a[(i, j)] * x[j];
                    }
                    v.push(acc);
                }
                CVec::new(v).unwrap()
            };
            let rhs = p.eval(&ax).unwrap();
            let scale = 1.0 + lhs.norm().max(rhs.norm());
            assert!(
                (lhs - rhs).norm() <= 1e-12 * scale,
                "composition mismatch: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn partial_matches_central_difference() {
        let mut r = rng(31);
        let h = 1e-5;
        for _ in 0..200 {
            let p = sample_poly(&mut r, 2, 5, 6, 1.0);
            let x = sample_cvec(&mut r, 2, 1.5);
            for j in 0..2 {
                let d = p.partial(j).unwrap().eval(&x).unwrap();
                let mut xp = x.as_slice().to_vec();
                let mut xm = xp.clone();
                xp[j] += c(h, 0.0);
                xm[j] -= c(h, 0.0);
                let fd = (p.eval_slice(&xp) - p.eval_slice(&xm)) / c(2.0 * h, 0.0);
                assert!(
                    (d - fd).norm() <= 1e-6 * (1.0 + d.norm()),
                    "derivative vs finite difference: {d} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn ring_laws_random() {
        let mut r = rng(5);
        for _ in 0..300 {
            let a = sample_poly(&mut r, 2, 3, 5, 1.0);
            let b = sample_poly(&mut r, 2, 3, 5, 1.0);
            let cc = sample_poly(&mut r, 2, 3, 5, 1.0);
            let assoc_l = a.mul(&b).unwrap().mul(&cc).unwrap();
            let assoc_r = a.mul(&b.mul(&cc).unwrap()).unwrap();
            assert!(poly_approx_eq(&assoc_l, &assoc_r, 1e-12));
            let dist_l = a.mul(&b.add(&cc).unwrap()).unwrap();
            let dist_r = a.mul(&b).unwrap().add(&a.mul(&cc).unwrap()).unwrap();
            assert!(poly_approx_eq(&dist_l, &dist_r, 1e-12));
        }
    }

    #[test]
    fn literal_roundtrip_bit_exact() {
        let mut r = rng(77);
        for _ in 0..50 {
            let p = sample_poly(&mut r, 3, 5, 8, 3.0);
            let s = serde_json::to_string(&p).unwrap();
            let back: MultiPoly = serde_json::from_str(&s).unwrap();
            assert_eq!(p, back);
        }
    }
}
