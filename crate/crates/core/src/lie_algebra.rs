//! Matrix Lie algebras with an Ad-invariant inner product.
//!
//! Elements of 𝔤 are carried as coordinate vectors in a fixed reference basis
//! `{e_1, …, e_d}` of generator matrices. Group elements are complex matrices
//! produced by the exponential map. The phase-space color charge uses the
//! *lowered* coordinates `ξ_α = ⟨ξ, e_α⟩`; [`LieAlgebra::lower`] and
//! [`LieAlgebra::raise`] convert between the two.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{expm, inverse, unitary_defect, CMatrix, C64};
use crate::tensor::Tensor3;

const CLOSURE_TOL: f64 = 1e-10;

/// Structure constants `c^β_{αμ}` with `[e_α, e_μ] = c^β_{αμ} e_β`.
///
/// Stored as a tensor indexed `(β, α, μ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    c: Tensor3,
}

impl StructureConstants {
    pub fn dim(&self) -> usize {
        self.c.shape()[0]
    }

    /// `c^β_{αμ}`.
    #[inline]
    pub fn get(&self, beta: usize, alpha: usize, mu: usize) -> f64 {
        self.c.get(beta, alpha, mu)
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.c
    }

    /// Bracket in coordinates.
    pub fn bracket(&self, xi: &[f64], eta: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (beta, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (alpha, &x) in xi.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let row = self.c.fiber(beta, alpha);
                for (mu, &y) in eta.iter().enumerate() {
                    acc += row[mu] * x * y;
                }
            }
            *o = acc;
        }
        out
    }

    pub fn is_abelian(&self) -> bool {
        self.c.max_abs() == 0.0
    }

    /// Largest component of the cyclic Jacobi sum over all basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim();
        let basis = |k: usize| {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            e
        };
        let mut worst = 0.0_f64;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let (ea, eb, ec) = (basis(a), basis(b), basis(c));
                    let t1 = self.bracket(&ea, &self.bracket(&eb, &ec));
                    let t2 = self.bracket(&eb, &self.bracket(&ec, &ea));
                    let t3 = self.bracket(&ec, &self.bracket(&ea, &eb));
                    for k in 0..d {
                        worst = worst.max((t1[k] + t2[k] + t3[k]).abs());
                    }
                }
            }
        }
        worst
    }
}

/// A basis of 𝔤 made of points on one adjoint orbit.
#[derive(Clone, Debug)]
pub struct AdjointOrbitBasis {
    /// Orbit representative ξ₀ (reference-basis coordinates).
    pub seed: DVector<f64>,
    /// `e_j = u_j ξ₀ u_j⁻¹`, reference-basis coordinates.
    pub elements: Vec<DVector<f64>>,
    /// Group elements `u_j` realising each basis element.
    pub witnesses: Vec<CMatrix>,
}

impl AdjointOrbitBasis {
    /// Columns are the basis elements.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.elements)
    }
}

/// A real matrix Lie algebra with reference basis and Ad-invariant metric.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    name: String,
    generators: Vec<CMatrix>,
    inner: DMatrix<f64>,
    inner_inv: DMatrix<f64>,
    frobenius_gram_inv: DMatrix<f64>,
    structure: StructureConstants,
    unitary: bool,
}

impl LieAlgebra {
    /// Validates linear independence, closure under the commutator, positive
    /// definiteness and Ad-invariance of the inner product.
    pub fn new(name: &str, generators: Vec<CMatrix>, inner: DMatrix<f64>) -> Result<Self> {
        let d = generators.len();
        if d == 0 {
            return Err(Error::Inconsistent("no generators".into()));
        }
        let m = generators[0].nrows();
        for g in &generators {
            if g.nrows() != m || g.ncols() != m {
                return Err(Error::Dimension("generators must share one square size".into()));
            }
        }
        if inner.nrows() != d || inner.ncols() != d {
            return Err(Error::Dimension(format!("inner product must be {d}×{d}")));
        }
        if (&inner - inner.transpose()).amax() > 1e-12 {
            return Err(Error::Inconsistent("inner product is not symmetric".into()));
        }
        if inner.clone().cholesky().is_none() {
            return Err(Error::Inconsistent("inner product is not positive definite".into()));
        }
        let gram = DMatrix::from_fn(d, d, |a, b| frobenius(&generators[a], &generators[b]));
        let gram_inv = gram
            .clone()
            .try_inverse()
            .filter(|_| gram.clone().svd(false, false).singular_values.min() > 1e-12)
            .ok_or_else(|| Error::Inconsistent("generators are linearly dependent".into()))?;
        let inner_inv = inner
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Inconsistent("inner product is singular".into()))?;
        let unitary = generators
            .iter()
            .all(|g| (g + g.adjoint()).iter().all(|z| z.norm() < 1e-12));

        let mut algebra = LieAlgebra {
            name: name.to_string(),
            generators,
            inner,
            inner_inv,
            frobenius_gram_inv: gram_inv,
            structure: StructureConstants {
                c: Tensor3::zeros(d, d, d),
            },
            unitary,
        };

        let mut c = Tensor3::zeros(d, d, d);
        for alpha in 0..d {
            for mu in 0..d {
                let comm = commutator(&algebra.generators[alpha], &algebra.generators[mu]);
                let (coords, residual) = algebra.project(&comm);
                let scale = 1.0 + comm.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if residual > CLOSURE_TOL * scale {
                    return Err(Error::Inconsistent(format!(
                        "[e{alpha}, e{mu}] leaves the span of the generators (residual {residual:e})"
                    )));
                }
                for beta in 0..d {
                    c.set(beta, alpha, mu, coords[beta]);
                }
            }
        }
        algebra.structure = StructureConstants { c };

        let residual = algebra.ad_invariance_residual();
        if residual > 1e-10 {
            return Err(Error::Inconsistent(format!(
                "inner product is not Ad-invariant (residual {residual:e})"
            )));
        }
        Ok(algebra)
    }

    /// 𝔲(1) = iℝ with generator `i` and ⟨ia, ib⟩ = ab.
    pub fn u1() -> Self {
        let e = CMatrix::from_element(1, 1, C64::new(0.0, 1.0));
        Self::new("u1", vec![e], DMatrix::identity(1, 1)).expect("u(1) is consistent")
    }

    /// 𝔰𝔲(2) with `e_k = -i σ_k`, so `[e_1, e_2] = 2 e_3`, and
    /// ⟨ξ, η⟩ = -½ Re tr(ξη) making the generators orthonormal.
    pub fn su2() -> Self {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let sigma = [
            CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
            CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        ];
        let gens = sigma.iter().map(|s| s * (-i)).collect();
        Self::new("su2", gens, DMatrix::identity(3, 3)).expect("su(2) is consistent")
    }

    /// 𝔰𝔬(3) with `(L_k)_{ij} = -ε_{kij}`, so `[L_1, L_2] = L_3`, and
    /// ⟨ξ, η⟩ = -½ tr(ξη).
    pub fn so3() -> Self {
        let mut gens = Vec::new();
        for k in 0..3 {
            let m = CMatrix::from_fn(3, 3, |i, j| C64::new(-levi_civita(k, i, j), 0.0));
            gens.push(m);
        }
        Self::new("so3", gens, DMatrix::identity(3, 3)).expect("so(3) is consistent")
    }

    /// Built-in catalog lookup: `u1`, `su2`, `so3`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "u1" => Ok(Self::u1()),
            "su2" => Ok(Self::su2()),
            "so3" => Ok(Self::so3()),
            other => Err(Error::Precondition(format!("unknown Lie algebra '{other}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn matrix_size(&self) -> usize {
        self.generators[0].nrows()
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// Gram matrix ⟨e_α, e_β⟩ of the reference basis.
    pub fn inner_coefficients(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        &self.structure
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    fn check(&self, xi: &DVector<f64>) -> Result<()> {
        check_dim("Lie algebra element", xi.len(), self.dim())
    }

    pub fn to_matrix(&self, xi: &DVector<f64>) -> Result<CMatrix> {
        self.check(xi)?;
        let m = self.matrix_size();
        let mut out = CMatrix::zeros(m, m);
        for (g, &x) in self.generators.iter().zip(xi.iter()) {
            out += g * C64::new(x, 0.0);
        }
        Ok(out)
    }

    /// Least-squares coordinates of a matrix and the norm of what is left over.
    fn project(&self, mat: &CMatrix) -> (DVector<f64>, f64) {
        let d = self.dim();
        let rhs = DVector::from_fn(d, |a, _| frobenius(&self.generators[a], mat));
        let coords = &self.frobenius_gram_inv * rhs;
        let mut back = mat.clone();
        for (g, &x) in self.generators.iter().zip(coords.iter()) {
            back -= g * C64::new(x, 0.0);
        }
        let residual = back.iter().map(|z| z.norm()).fold(0.0, f64::max);
        (coords, residual)
    }

    /// Coordinates of a matrix known to lie in 𝔤.
    pub fn from_matrix(&self, mat: &CMatrix) -> Result<DVector<f64>> {
        let m = self.matrix_size();
        if mat.nrows() != m || mat.ncols() != m {
            return Err(Error::Dimension(format!("expected a {m}×{m} matrix")));
        }
        Ok(self.project(mat).0)
    }

    /// Matrix commutator `ξη − ηξ`, re-expressed in the reference basis.
    pub fn bracket(&self, xi: &DVector<f64>, eta: &DVector<f64>) -> Result<DVector<f64>> {
        let a = self.to_matrix(xi)?;
        let b = self.to_matrix(eta)?;
        self.from_matrix(&commutator(&a, &b))
    }

    pub fn inner(&self, xi: &DVector<f64>, eta: &DVector<f64>) -> Result<f64> {
        self.check(xi)?;
        self.check(eta)?;
        Ok(xi.dot(&(&self.inner * eta)))
    }

    pub fn norm(&self, xi: &DVector<f64>) -> Result<f64> {
        Ok(self.inner(xi, xi)?.max(0.0).sqrt())
    }

    /// Reference coordinates ξ^α ↦ lowered coordinates ξ_α = ⟨ξ, e_α⟩.
    pub fn lower(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.inner * xi
    }

    /// Lowered coordinates back to reference coordinates.
    pub fn raise(&self, xi_lower: &DVector<f64>) -> DVector<f64> {
        &self.inner_inv * xi_lower
    }

    /// Norm of an element given by lowered coordinates.
    pub fn norm_lower(&self, xi_lower: &DVector<f64>) -> f64 {
        xi_lower.dot(&(&self.inner_inv * xi_lower)).max(0.0).sqrt()
    }

    /// Group exponential of an algebra element.
    pub fn exp(&self, zeta: &DVector<f64>) -> Result<CMatrix> {
        Ok(expm(&self.to_matrix(zeta)?))
    }

    /// `u ξ u⁻¹` in the reference basis.
    pub fn adjoint_act(&self, u: &CMatrix, xi: &DVector<f64>) -> Result<DVector<f64>> {
        let inv = inverse(u)?;
        let x = self.to_matrix(xi)?;
        self.from_matrix(&(u * x * inv))
    }

    /// Matrix of `Ad_u` acting on reference coordinates.
    pub fn ad_matrix(&self, u: &CMatrix) -> Result<DMatrix<f64>> {
        let inv = inverse(u)?;
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (alpha, g) in self.generators.iter().enumerate() {
            let col = self.project(&(u * g * &inv)).0;
            out.set_column(alpha, &col);
        }
        Ok(out)
    }

    /// Distance of `u` from the group (unitary defect for compact matrix groups).
    pub fn group_defect(&self, u: &CMatrix) -> f64 {
        if self.unitary {
            unitary_defect(u)
        } else {
            0.0
        }
    }

    /// Largest |⟨[e_ζ, e_α], e_β⟩ + ⟨e_α, [e_ζ, e_β]⟩| over basis triples.
    pub fn ad_invariance_residual(&self) -> f64 {
        let d = self.dim();
        let c = &self.structure;
        let mut worst = 0.0_f64;
        for z in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let mut s = 0.0;
                    for g in 0..d {
                        s += c.get(g, z, a) * self.inner[(g, b)] + c.get(g, z, b) * self.inner[(a, g)];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        worst
    }

    /// Draw `sample_count` group elements `exp(ζ)` with ζ standard normal in
    /// the reference basis and greedily keep the orbit points that add the most
    /// new rank, until `d` of them span 𝔤.
    pub fn find_basis_in_orbit(
        &self,
        seed: &DVector<f64>,
        sample_count: usize,
        rng_seed: u64,
    ) -> Result<AdjointOrbitBasis> {
        self.check(seed)?;
        let seed_norm = self.norm(seed)?;
        if seed_norm == 0.0 {
            return Err(Error::Precondition(
                "orbit seed is zero: the trivial orbit spans nothing".into(),
            ));
        }
        let d = self.dim();
        let m = self.matrix_size();
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut candidates = vec![(seed.clone(), CMatrix::identity(m, m))];
        for _ in 0..sample_count {
            let zeta = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let u = self.exp(&zeta)?;
            candidates.push((self.adjoint_act(&u, seed)?, u));
        }

        // Greedy Gram–Schmidt in the Ad-invariant metric.
        let mut chosen: Vec<usize> = Vec::new();
        let mut ortho: Vec<DVector<f64>> = Vec::new();
        while chosen.len() < d {
            let mut best: Option<(usize, f64, DVector<f64>)> = None;
            for (idx, (x, _)) in candidates.iter().enumerate() {
                if chosen.contains(&idx) {
                    continue;
                }
                let mut r = x.clone();
                for q in &ortho {
                    let proj = self.inner(&r, q)?;
                    r -= q * proj;
                }
                let rn = self.norm(&r)?;
                if best.as_ref().map_or(true, |b| rn > b.1) {
                    best = Some((idx, rn, r));
                }
            }
            match best {
                Some((idx, rn, r)) if rn > 1e-8 * seed_norm => {
                    chosen.push(idx);
                    ortho.push(r / rn);
                }
                _ => {
                    return Err(Error::OrbitDoesNotSpan(format!(
                        "rank {} of {d} after {sample_count} orbit samples",
                        chosen.len()
                    )))
                }
            }
        }
        let elements = chosen.iter().map(|&i| candidates[i].0.clone()).collect();
        let witnesses = chosen.iter().map(|&i| candidates[i].1.clone()).collect();
        Ok(AdjointOrbitBasis {
            seed: seed.clone(),
            elements,
            witnesses,
        })
    }

    /// Deterministic orbit samples `Ad_{exp ζ} ξ₀`, ζ standard normal.
    pub fn sample_orbit(&self, seed: &DVector<f64>, count: usize, rng_seed: u64) -> Result<Vec<DVector<f64>>> {
        self.check(seed)?;
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        (0..count)
            .map(|_| {
                let zeta = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                self.adjoint_act(&self.exp(&zeta)?, seed)
            })
            .collect()
    }
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Real Frobenius pairing Re tr(a* b).
fn frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(d: usize, k: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d);
        v[k] = 1.0;
        v
    }

    fn random_element(d: usize, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn bracket_with_itself_vanishes() {
        let su2 = LieAlgebra::su2();
        let xi = DVector::from_vec(vec![0.3, -1.2, 0.7]);
        assert!(su2.bracket(&xi, &xi).unwrap().amax() < 1e-15);
    }

    #[test]
    fn su2_convention_gives_two_e3() {
        // Hand commutator: (-iσ1)(-iσ2) - (-iσ2)(-iσ1) = -[σ1, σ2] = -2iσ3 = 2(-iσ3).
        let su2 = LieAlgebra::su2();
        let b = su2.bracket(&e(3, 0), &e(3, 1)).unwrap();
        assert!((b - e(3, 2) * 2.0).amax() < 1e-14);
        let c = su2.structure_constants();
        assert!((c.get(2, 0, 1) - 2.0).abs() < 1e-14);
        assert!((c.get(2, 1, 0) + 2.0).abs() < 1e-14);
        assert!((c.get(0, 1, 2) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn u1_is_abelian() {
        let u1 = LieAlgebra::u1();
        let b = u1
            .bracket(&DVector::from_vec(vec![2.5]), &DVector::from_vec(vec![-0.4]))
            .unwrap();
        assert_eq!(b[0], 0.0);
        assert!(u1.structure_constants().is_abelian());
    }

    #[test]
    fn so3_convention() {
        let so3 = LieAlgebra::so3();
        let b = so3.bracket(&e(3, 0), &e(3, 1)).unwrap();
        assert!((b - e(3, 2)).amax() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_structural_error() {
        let su2 = LieAlgebra::su2();
        let err = su2.bracket(&e(2, 0), &e(3, 1)).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn inner_product_is_positive_and_infinitesimally_invariant() {
        for g in [LieAlgebra::u1(), LieAlgebra::su2(), LieAlgebra::so3()] {
            let d = g.dim();
            let xi = random_element(d, 1);
            assert!(g.inner(&xi, &xi).unwrap() > 0.0);
            let zeta = random_element(d, 2);
            let eta = random_element(d, 3);
            let lhs = g.inner(&g.bracket(&zeta, &xi).unwrap(), &eta).unwrap();
            let rhs = -g.inner(&xi, &g.bracket(&zeta, &eta).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
            assert!(g.ad_invariance_residual() < 1e-12);
        }
    }

    #[test]
    fn adjoint_action_by_identity_and_composition() {
        let su2 = LieAlgebra::su2();
        let xi = random_element(3, 5);
        let id = CMatrix::identity(2, 2);
        assert!((su2.adjoint_act(&id, &xi).unwrap() - &xi).amax() < 1e-15);
        let u = su2.exp(&random_element(3, 6)).unwrap();
        let w = su2.exp(&random_element(3, 7)).unwrap();
        let lhs = su2.adjoint_act(&u, &su2.adjoint_act(&w, &xi).unwrap()).unwrap();
        let rhs = su2.adjoint_act(&(&u * &w), &xi).unwrap();
        assert!((lhs - rhs).amax() < 1e-10);
    }

    #[test]
    fn ad_matrix_agrees_with_adjoint_act() {
        let so3 = LieAlgebra::so3();
        let u = so3.exp(&random_element(3, 8)).unwrap();
        let xi = random_element(3, 9);
        let direct = so3.adjoint_act(&u, &xi).unwrap();
        let via = so3.ad_matrix(&u).unwrap() * &xi;
        assert!((direct - via).amax() < 1e-13);
    }

    #[test]
    fn structure_constants_for_u1_vanish_and_jacobi_holds() {
        assert_eq!(LieAlgebra::u1().structure_constants().tensor().max_abs(), 0.0);
        for g in [LieAlgebra::su2(), LieAlgebra::so3()] {
            assert!(g.structure_constants().jacobi_residual() < 1e-12);
        }
    }

    #[test]
    fn non_closing_generators_are_rejected() {
        // Two of the three su(2) generators do not close under the bracket.
        let su2 = LieAlgebra::su2();
        let gens = su2.generators()[..2].to_vec();
        let err = LieAlgebra::new("broken", gens, DMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::Inconsistent(_)));
    }

    #[test]
    fn u1_orbit_is_a_point_and_spans() {
        let u1 = LieAlgebra::u1();
        let basis = u1
            .find_basis_in_orbit(&DVector::from_vec(vec![1.0]), 4, 11)
            .unwrap();
        assert_eq!(basis.elements.len(), 1);
        assert!((basis.elements[0][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn su2_orbit_spans_with_norm_preserved() {
        let su2 = LieAlgebra::su2();
        let seed = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let basis = su2.find_basis_in_orbit(&seed, 16, 3).unwrap();
        assert_eq!(basis.elements.len(), 3);
        for (el, u) in basis.elements.iter().zip(&basis.witnesses) {
            assert!((su2.norm(el).unwrap() - 1.0).abs() < 1e-10);
            assert!((su2.adjoint_act(u, &seed).unwrap() - el).amax() < 1e-12);
        }
        let rank = basis.matrix().rank(1e-8);
        assert_eq!(rank, 3);
    }

    #[test]
    fn zero_seed_is_rejected() {
        let err = LieAlgebra::su2()
            .find_basis_in_orbit(&DVector::zeros(3), 8, 1)
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn abelian_sum_with_seed_in_one_factor_does_not_span() {
        let i = C64::new(0.0, 1.0);
        let z = C64::new(0.0, 0.0);
        let g1 = CMatrix::from_row_slice(2, 2, &[i, z, z, z]);
        let g2 = CMatrix::from_row_slice(2, 2, &[z, z, z, i]);
        let u1u1 = LieAlgebra::new("u1+u1", vec![g1, g2], DMatrix::identity(2, 2)).unwrap();
        let err = u1u1
            .find_basis_in_orbit(&DVector::from_vec(vec![1.0, 0.0]), 32, 4)
            .unwrap_err();
        assert!(matches!(err, Error::OrbitDoesNotSpan(_)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn bracket_is_antisymmetric(a in prop::collection::vec(-3.0..3.0f64, 3),
                                    b in prop::collection::vec(-3.0..3.0f64, 3)) {
            let g = LieAlgebra::su2();
            let (x, y) = (DVector::from_vec(a), DVector::from_vec(b));
            let s = g.bracket(&x, &y).unwrap() + g.bracket(&y, &x).unwrap();
            prop_assert!(s.amax() < 1e-12);
        }

        #[test]
        fn jacobi_on_random_triples(a in prop::collection::vec(-2.0..2.0f64, 3),
                                    b in prop::collection::vec(-2.0..2.0f64, 3),
                                    c in prop::collection::vec(-2.0..2.0f64, 3)) {
            let g = LieAlgebra::so3();
            let (x, y, z) = (DVector::from_vec(a), DVector::from_vec(b), DVector::from_vec(c));
            let br = |p: &DVector<f64>, q: &DVector<f64>| g.bracket(p, q).unwrap();
            let s = br(&x, &br(&y, &z)) + br(&y, &br(&z, &x)) + br(&z, &br(&x, &y));
            prop_assert!(s.amax() < 1e-10);
        }

        #[test]
        fn adjoint_action_preserves_norm(z in prop::collection::vec(-3.0..3.0f64, 3),
                                         x in prop::collection::vec(-3.0..3.0f64, 3)) {
            let g = LieAlgebra::su2();
            let xi = DVector::from_vec(x);
            let u = g.exp(&DVector::from_vec(z)).unwrap();
            let n0 = g.norm(&xi).unwrap();
            let n1 = g.norm(&g.adjoint_act(&u, &xi).unwrap()).unwrap();
            prop_assert!((n0 - n1).abs() <= 1e-10 * n0.max(1e-300));
        }

        #[test]
        fn inner_product_is_ad_invariant(z in prop::collection::vec(-3.0..3.0f64, 3),
                                         x in prop::collection::vec(-3.0..3.0f64, 3),
                                         y in prop::collection::vec(-3.0..3.0f64, 3)) {
            let g = LieAlgebra::so3();
            let u = g.exp(&DVector::from_vec(z)).unwrap();
            let (xi, eta) = (DVector::from_vec(x), DVector::from_vec(y));
            let lhs = g.inner(&g.adjoint_act(&u, &xi).unwrap(), &g.adjoint_act(&u, &eta).unwrap()).unwrap();
            prop_assert!((lhs - g.inner(&xi, &eta).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn orbit_basis_always_satisfies_invariants(s in prop::collection::vec(-2.0..2.0f64, 3), seed in 0u64..1000) {
            let g = LieAlgebra::su2();
            let xi0 = DVector::from_vec(s);
            prop_assume!(xi0.norm() > 1e-3);
            let basis = g.find_basis_in_orbit(&xi0, 12, seed).unwrap();
            let n0 = g.norm(&xi0).unwrap();
            for el in &basis.elements {
                prop_assert!((g.norm(el).unwrap() - n0).abs() < 1e-10 * n0);
            }
            prop_assert_eq!(basis.matrix().rank(1e-9 * n0), 3);
        }
    }
}
