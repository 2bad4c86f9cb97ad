//! Module machinery for matrix Lie algebras over finite fields: submodule
//! spin-up, Las Vegas splitting of modules into simple pieces, endomorphism
//! rings and their field structure, primitive idempotents of matrix algebras,
//! and the factorization of a simple module over a direct sum of ideals into
//! a tensor product with one factor per ideal.
//!
//! Everything here is exact arithmetic. Randomized routines take an explicit
//! generator, state their retry budgets as constants, and either certify
//! their answer or fail with an explicit error; none of them guess.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{factor_poly, FieldSpec, Poly};
use crate::linalg::{Matrix, SpanSolver, Subspace};

/// Rounds of random splitting-element sampling. A round decides (either way)
/// whenever the sampled element has an irreducible minimal-polynomial factor
/// whose kernel dimension equals its degree; such elements occupy at least
/// roughly a 1/8 fraction of the acting algebra, so (7/8)^128 < 2^-24 bounds
/// the chance of exhausting the budget on a well-formed input.
const SPLIT_ROUNDS: usize = 128;

/// Samples drawn before a randomized search concedes.
pub(crate) const SAMPLE_BUDGET: usize = 96;

/// Ceiling on exhaustive fallback scans over a coefficient space.
pub(crate) const EXHAUSTIVE_LIMIT: u128 = 1 << 16;

fn mat_to_flat(m: &Matrix) -> Vec<u64> {
    m.flatten()
}

fn mat_from_flat(field: &FieldSpec, rows: usize, cols: usize, v: &[u64]) -> Matrix {
    Matrix::from_flat(field.clone(), rows, cols, v.to_vec())
}

/// Linear combination of matrices with the given k-word coefficients.
pub(crate) fn combine(field: &FieldSpec, basis: &[Matrix], coeffs: &[u64]) -> Matrix {
    let k = field.words();
    assert!(!basis.is_empty());
    let mut out = Matrix::zero(field.clone(), basis[0].rows(), basis[0].cols());
    for (i, b) in basis.iter().enumerate() {
        let c = &coeffs[i * k..(i + 1) * k];
        if field.is_zero(c) {
            continue;
        }
        out = out.add(&b.scale(c));
    }
    out
}

fn bracket(a: &Matrix, b: &Matrix) -> Matrix {
    a.matmul(b).sub(&b.matmul(a))
}

// ---------------------------------------------------------------------------
// Matrix Lie algebras
// ---------------------------------------------------------------------------

/// A Lie algebra of d×d matrices given by a linearly independent,
/// bracket-closed basis, together with its structure constants.
#[derive(Clone)]
pub struct MatrixLieAlgebra {
    field: FieldSpec,
    dim_v: usize,
    basis: Vec<Matrix>,
    solver: SpanSolver,
    /// brackets[i * dim + j] = coordinates of [basis_i, basis_j].
    brackets: Vec<Vec<u64>>,
}

impl std::fmt::Debug for MatrixLieAlgebra {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatrixLieAlgebra")
            .field("dim_v", &self.dim_v)
            .field("dim", &self.basis.len())
            .finish()
    }
}

impl MatrixLieAlgebra {
    /// Wraps an independent basis, verifying bracket closure and recording
    /// structure constants. The basis order is preserved exactly.
    pub fn new(field: FieldSpec, dim_v: usize, basis: Vec<Matrix>) -> Result<MatrixLieAlgebra> {
        let mut solver = SpanSolver::new(field.clone(), dim_v * dim_v);
        for b in &basis {
            if b.rows() != dim_v || b.cols() != dim_v {
                return Err(Error::DimensionMismatch { expected: dim_v, got: b.rows() });
            }
            if b.field() != &field {
                return Err(Error::FieldMismatch);
            }
            if !solver.insert(&mat_to_flat(b)) {
                return Err(Error::Precondition(
                    "algebra basis is linearly dependent".into(),
                ));
            }
        }
        let n = basis.len();
        let mut brackets = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let br = bracket(&basis[i], &basis[j]);
                match solver.express(&mat_to_flat(&br)) {
                    Some(c) => brackets.push(c),
                    None => return Err(Error::NotBracketClosed),
                }
            }
        }
        Ok(MatrixLieAlgebra { field, dim_v, basis, solver, brackets })
    }

    /// Builds the Lie algebra generated by `gens`: closes the span under
    /// brackets and reduces to an independent basis.
    pub fn closure(field: FieldSpec, dim_v: usize, gens: &[Matrix]) -> Result<MatrixLieAlgebra> {
        let mut solver = SpanSolver::new(field.clone(), dim_v * dim_v);
        let mut basis: Vec<Matrix> = Vec::new();
        let mut queue: Vec<Matrix> = Vec::new();
        for g in gens {
            if g.rows() != dim_v || g.cols() != dim_v {
                return Err(Error::DimensionMismatch { expected: dim_v, got: g.rows() });
            }
            if solver.insert(&mat_to_flat(g)) {
                basis.push(g.clone());
                queue.push(g.clone());
            }
        }
        while let Some(a) = queue.pop() {
            // Bracket the new element against everything kept so far.
            let snapshot: Vec<Matrix> = basis.clone();
            for b in &snapshot {
                let br = bracket(&a, b);
                if solver.insert(&mat_to_flat(&br)) {
                    basis.push(br.clone());
                    queue.push(br);
                }
            }
        }
        MatrixLieAlgebra::new(field, dim_v, basis)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    /// Dimension of the space the algebra acts on.
    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    /// Dimension of the algebra itself.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    pub fn matrix(&self, i: usize) -> &Matrix {
        &self.basis[i]
    }

    pub fn contains(&self, m: &Matrix) -> bool {
        m.rows() == self.dim_v
            && m.cols() == self.dim_v
            && self.solver.express(&mat_to_flat(m)).is_some()
    }

    /// Coordinates of a matrix over the basis, when it lies in the algebra.
    pub fn coordinates(&self, m: &Matrix) -> Option<Vec<u64>> {
        if m.rows() != self.dim_v || m.cols() != self.dim_v {
            return None;
        }
        self.solver.express(&mat_to_flat(m))
    }

    /// Coordinates of [basis_i, basis_j] over the basis.
    pub fn structure_constants(&self, i: usize, j: usize) -> &[u64] {
        &self.brackets[i * self.basis.len() + j]
    }

    /// Matrices of ad(basis_i) acting on the algebra's own coordinates.
    pub fn adjoint_matrices(&self) -> Vec<Matrix> {
        let n = self.basis.len();
        let k = self.field.words();
        (0..n)
            .map(|i| {
                let mut m = Matrix::zero(self.field.clone(), n, n);
                for j in 0..n {
                    let c = self.structure_constants(i, j);
                    for l in 0..n {
                        m.set_entry(l, j, &c[l * k..(l + 1) * k]);
                    }
                }
                m
            })
            .collect()
    }

    /// Basis of the center { z : [z, x] = 0 for all x in the algebra }.
    pub fn center(&self) -> Vec<Matrix> {
        let n = self.basis.len();
        if n == 0 {
            return Vec::new();
        }
        let k = self.field.words();
        // Unknown coordinates x with sum_i x_i [b_i, b_j] = 0 for every j.
        let mut rows = Vec::with_capacity(n * n * k);
        for j in 0..n {
            for comp in 0..n {
                let mut row = vec![0u64; n * k];
                for i in 0..n {
                    let c = self.structure_constants(i, j);
                    row[i * k..(i + 1) * k].copy_from_slice(&c[comp * k..(comp + 1) * k]);
                }
                rows.extend(row);
            }
        }
        let system = Matrix::from_flat(self.field.clone(), n * n, n, rows);
        let ker = system.kernel();
        (0..ker.rows())
            .map(|r| combine(&self.field, &self.basis, ker.row(r)))
            .collect()
    }

    /// Independent basis of the span of all brackets [x, y].
    pub fn derived_subalgebra(&self) -> Vec<Matrix> {
        let mut solver = SpanSolver::new(self.field.clone(), self.dim_v * self.dim_v);
        let mut out = Vec::new();
        for i in 0..self.basis.len() {
            for j in (i + 1)..self.basis.len() {
                let br = bracket(&self.basis[i], &self.basis[j]);
                if solver.insert(&mat_to_flat(&br)) {
                    out.push(br);
                }
            }
        }
        out
    }

    pub fn is_abelian(&self) -> bool {
        let k = self.field.words();
        self.brackets.iter().all(|c| c.iter().take(self.basis.len() * k).all(|&w| w == 0))
    }

    /// Whether `sub`'s span is an ideal: [self, sub] inside sub's span.
    pub fn has_ideal(&self, sub: &MatrixLieAlgebra) -> bool {
        self.basis.iter().all(|x| {
            sub.basis.iter().all(|m| sub.contains(&bracket(x, m)))
        })
    }
}

/// A module for a matrix Lie algebra: the algebra acting on its natural
/// column space.
#[derive(Clone, Debug)]
pub struct LieModule {
    algebra: MatrixLieAlgebra,
}

impl LieModule {
    pub fn new(algebra: MatrixLieAlgebra) -> LieModule {
        LieModule { algebra }
    }

    pub fn algebra(&self) -> &MatrixLieAlgebra {
        &self.algebra
    }

    pub fn field(&self) -> &FieldSpec {
        self.algebra.field()
    }

    /// Dimension of the underlying column space.
    pub fn dim(&self) -> usize {
        self.algebra.dim_v()
    }

    /// The action matrices (the algebra basis itself).
    pub fn action(&self) -> &[Matrix] {
        self.algebra.basis()
    }
}

// ---------------------------------------------------------------------------
// Spin-up and restriction
// ---------------------------------------------------------------------------

/// The smallest subspace containing `seeds` and invariant under every
/// generator, computed by worklist closure.
pub fn spin(gens: &[Matrix], seeds: &[Vec<u64>]) -> Subspace {
    assert!(!gens.is_empty(), "spin needs at least one generator");
    let field = gens[0].field().clone();
    let n = gens[0].rows();
    let mut solver = SpanSolver::new(field.clone(), n);
    let mut kept: Vec<Vec<u64>> = Vec::new();
    let mut queue: Vec<Vec<u64>> = Vec::new();
    for s in seeds {
        if solver.insert(s) {
            kept.push(s.clone());
            queue.push(s.clone());
        }
    }
    while let Some(v) = queue.pop() {
        if solver.dim() == n {
            break;
        }
        for g in gens {
            let w = g.apply(&v);
            if solver.insert(&w) {
                kept.push(w.clone());
                queue.push(w);
            }
        }
    }
    let k = field.words();
    let mut flat = Vec::with_capacity(kept.len() * n * k);
    for v in &kept {
        flat.extend_from_slice(v);
    }
    Subspace::from_rows(&Matrix::from_flat(field, kept.len(), n, flat))
}

/// Restricts each action matrix to an invariant subspace, in the subspace's
/// basis coordinates. Errors when the subspace is not invariant.
pub fn restrict_action(gens: &[Matrix], sub: &Subspace) -> Result<Vec<Matrix>> {
    let d = sub.dim();
    let basis = sub.basis();
    let mut out = Vec::with_capacity(gens.len());
    for g in gens {
        let field = g.field().clone();
        let k = field.words();
        let mut m = Matrix::zero(field, d, d);
        for j in 0..d {
            let image = g.apply(basis.row(j));
            let coords = sub.coordinates(&image).ok_or_else(|| {
                Error::Precondition("subspace is not invariant under the action".into())
            })?;
            for i in 0..d {
                m.set_entry(i, j, &coords[i * k..(i + 1) * k]);
            }
        }
        out.push(m);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Associative envelopes
// ---------------------------------------------------------------------------

/// The associative matrix algebra generated by a set of operators: all
/// products of the generators (plus the identity when `unital`).
#[derive(Clone)]
pub struct Envelope {
    field: FieldSpec,
    dim_v: usize,
    basis: Vec<Matrix>,
    solver: SpanSolver,
}

impl std::fmt::Debug for Envelope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Envelope")
            .field("dim_v", &self.dim_v)
            .field("dim", &self.basis.len())
            .finish()
    }
}

/// Closes `gens` under products, by repeated left multiplication.
pub fn associative_envelope(gens: &[Matrix], unital: bool) -> Envelope {
    assert!(!gens.is_empty(), "envelope needs at least one generator");
    let field = gens[0].field().clone();
    let n = gens[0].rows();
    let mut solver = SpanSolver::new(field.clone(), n * n);
    let mut basis: Vec<Matrix> = Vec::new();
    let mut queue: Vec<Matrix> = Vec::new();
    let push = |m: Matrix, solver: &mut SpanSolver, basis: &mut Vec<Matrix>, queue: &mut Vec<Matrix>| {
        if solver.insert(&mat_to_flat(&m)) {
            basis.push(m.clone());
            queue.push(m);
        }
    };
    if unital {
        push(Matrix::identity(field.clone(), n), &mut solver, &mut basis, &mut queue);
    }
    for g in gens {
        push(g.clone(), &mut solver, &mut basis, &mut queue);
    }
    while let Some(b) = queue.pop() {
        if solver.dim() == n * n {
            break;
        }
        for g in gens {
            let prod = g.matmul(&b);
            push(prod, &mut solver, &mut basis, &mut queue);
        }
    }
    Envelope { field, dim_v: n, basis, solver }
}

impl Envelope {
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    pub fn contains(&self, m: &Matrix) -> bool {
        m.rows() == self.dim_v
            && m.cols() == self.dim_v
            && self.solver.express(&mat_to_flat(m)).is_some()
    }

    /// A uniformly random element of the span.
    pub fn random_element(&self, rng: &mut impl Rng) -> Matrix {
        let k = self.field.words();
        let mut coeffs = Vec::with_capacity(self.basis.len() * k);
        for _ in 0..self.basis.len() {
            coeffs.extend(self.field.random(rng));
        }
        combine(&self.field, &self.basis, &coeffs)
    }

    /// The two-sided identity element of the algebra, when one exists.
    pub fn unit(&self) -> Option<Matrix> {
        let n = self.dim_v;
        let e = self.basis.len();
        let k = self.field.words();
        // Solve sum_j x_j b_j b_i = b_i and sum_j x_j b_i b_j = b_i for all i.
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for i in 0..e {
            let left: Vec<Matrix> = self.basis.iter().map(|b| b.matmul(&self.basis[i])).collect();
            let right: Vec<Matrix> = self.basis.iter().map(|b| self.basis[i].matmul(b)).collect();
            for (products, _) in [(&left, 0), (&right, 1)] {
                let flats: Vec<Vec<u64>> = products.iter().map(mat_to_flat).collect();
                let target = mat_to_flat(&self.basis[i]);
                for comp in 0..n * n {
                    let mut row = vec![0u64; e * k];
                    for (j, fl) in flats.iter().enumerate() {
                        row[j * k..(j + 1) * k].copy_from_slice(&fl[comp * k..(comp + 1) * k]);
                    }
                    rows.extend(row);
                    rhs.extend_from_slice(&target[comp * k..(comp + 1) * k]);
                }
            }
        }
        let system = Matrix::from_flat(self.field.clone(), 2 * e * n * n, e, rows);
        system.solve(&rhs).map(|x| combine(&self.field, &self.basis, &x))
    }
}

// ---------------------------------------------------------------------------
// Module splitting (Las Vegas meataxe)
// ---------------------------------------------------------------------------

/// Outcome of a splitting run: a certificate of simplicity, or a proper
/// nonzero invariant subspace.
#[derive(Clone, Debug)]
pub enum MeataxeOutcome {
    Simple,
    Submodule(Subspace),
}

impl MeataxeOutcome {
    pub fn is_simple(&self) -> bool {
        matches!(self, MeataxeOutcome::Simple)
    }
}

/// Tests whether the natural module of a matrix Lie algebra is simple,
/// returning a proper invariant subspace otherwise.
pub fn meataxe_split(module: &LieModule, rng: &mut impl Rng) -> Result<MeataxeOutcome> {
    meataxe_gens(module.field(), module.dim(), module.action(), rng)
}

/// Splitting over an arbitrary generating set of operators. Works in the
/// associative envelope: a random element's minimal polynomial is factored,
/// kernels of irreducible factors are spun up, and a factor whose kernel
/// dimension equals its degree decides the round (with a transposed-action
/// spin certifying simplicity).
pub(crate) fn meataxe_gens(
    field: &FieldSpec,
    n: usize,
    gens: &[Matrix],
    rng: &mut impl Rng,
) -> Result<MeataxeOutcome> {
    if n == 0 {
        return Err(Error::Precondition("module dimension is zero".into()));
    }
    if n == 1 {
        return Ok(MeataxeOutcome::Simple);
    }
    let k = field.words();
    if gens.is_empty() || gens.iter().all(|g| g.is_zero()) {
        // Zero action: every line is invariant.
        let mut line = vec![0u64; n * k];
        line[..k].copy_from_slice(&field.one());
        return Ok(MeataxeOutcome::Submodule(Subspace::from_rows(&Matrix::from_flat(
            field.clone(),
            1,
            n,
            line,
        ))));
    }
    let env = associative_envelope(gens, true);
    let gens_t: Vec<Matrix> = gens.iter().map(|g| g.transpose()).collect();
    for _ in 0..SPLIT_ROUNDS {
        let a = env.random_element(rng);
        if a.is_zero() {
            continue;
        }
        let mp = a.min_poly();
        let factors = factor_poly(&mp)?.factors;
        for (g, _) in &factors {
            let b = a.eval_poly(g);
            let ker = b.kernel();
            if ker.rows() == 0 {
                continue;
            }
            for r in 0..ker.rows() {
                let u = spin(gens, &[ker.row(r).to_vec()]);
                if u.dim() < n {
                    return Ok(MeataxeOutcome::Submodule(u));
                }
            }
            if Some(ker.rows()) == g.degree() {
                // Every kernel vector generates; the kernel is a line over
                // the residue field, so the transposed action settles it.
                let kt = b.transpose().kernel();
                let dual = spin(&gens_t, &[kt.row(0).to_vec()]);
                if dual.dim() == n {
                    return Ok(MeataxeOutcome::Simple);
                }
                // The annihilator of a proper dual submodule is a proper
                // submodule: the vectors killed by all its functionals.
                let ann = Subspace::from_rows(&dual.basis().kernel());
                if ann.dim() == 0 || ann.dim() >= n {
                    return Err(Error::Internal(
                        "dual annihilator has the wrong dimension".into(),
                    ));
                }
                for g in gens {
                    for r in 0..ann.basis().rows() {
                        if !ann.contains(&g.apply(ann.basis().row(r))) {
                            return Err(Error::Internal(
                                "dual annihilator is not invariant".into(),
                            ));
                        }
                    }
                }
                return Ok(MeataxeOutcome::Submodule(ann));
            }
        }
    }
    Err(Error::RetryBudgetExhausted("module splitting element search"))
}

// ---------------------------------------------------------------------------
// Hom spaces and endomorphism rings
// ---------------------------------------------------------------------------

/// Basis of { h : h x1_i = x2_i h for all i }, the maps intertwining two
/// action lists (matrices from the first module's space to the second's).
pub fn hom_space(gens1: &[Matrix], gens2: &[Matrix]) -> Vec<Matrix> {
    assert_eq!(gens1.len(), gens2.len());
    assert!(!gens1.is_empty());
    let field = gens1[0].field().clone();
    let k = field.words();
    let d1 = gens1[0].rows();
    let d2 = gens2[0].rows();
    // Unknown h is d2 x d1; equation block per generator pair.
    let unknowns = d2 * d1;
    let mut rows = Vec::new();
    for (x1, x2) in gens1.iter().zip(gens2) {
        for i in 0..d2 {
            for j in 0..d1 {
                let mut row = vec![0u64; unknowns * k];
                // (h x1)[i,j] contributes x1[l,j] at unknown h[i,l].
                for l in 0..d1 {
                    let idx = (i * d1 + l) * k;
                    let cur = row[idx..idx + k].to_vec();
                    field.add_into(&cur, x1.entry(l, j), &mut row[idx..idx + k]);
                }
                // -(x2 h)[i,j] contributes -x2[i,l] at unknown h[l,j].
                for l in 0..d2 {
                    let idx = (l * d1 + j) * k;
                    let neg = field.neg(x2.entry(i, l));
                    let cur = row[idx..idx + k].to_vec();
                    field.add_into(&cur, &neg, &mut row[idx..idx + k]);
                }
                rows.extend(row);
            }
        }
    }
    let system = Matrix::from_flat(field.clone(), gens1.len() * d2 * d1, unknowns, rows);
    let ker = system.kernel();
    (0..ker.rows()).map(|r| mat_from_flat(&field, d2, d1, ker.row(r))).collect()
}

/// Basis of the commutant { f : f x = x f } of an action list.
pub fn commutant(gens: &[Matrix]) -> Vec<Matrix> {
    hom_space(gens, gens)
}

/// Searches the span of `basis` for an invertible element: random samples
/// first, then an exhaustive scan when the space is small enough, otherwise
/// an honest abort.
pub(crate) fn invertible_in_span(
    field: &FieldSpec,
    basis: &[Matrix],
    rng: &mut impl Rng,
) -> Result<Option<Matrix>> {
    if basis.is_empty() {
        return Ok(None);
    }
    let k = field.words();
    for _ in 0..SAMPLE_BUDGET {
        let mut coeffs = Vec::with_capacity(basis.len() * k);
        for _ in 0..basis.len() {
            coeffs.extend(field.random(rng));
        }
        let m = combine(field, basis, &coeffs);
        if m.is_invertible() {
            return Ok(Some(m));
        }
    }
    let q = field.order();
    let total = q.checked_pow(basis.len() as u32);
    match total {
        Some(t) if t <= EXHAUSTIVE_LIMIT => {
            for idx in 1..t {
                let mut coeffs = Vec::with_capacity(basis.len() * k);
                let mut rem = idx;
                for _ in 0..basis.len() {
                    coeffs.extend(field.element_from_index(rem % q));
                    rem /= q;
                }
                let m = combine(field, basis, &coeffs);
                if m.is_invertible() {
                    return Ok(Some(m));
                }
            }
            Ok(None)
        }
        _ => Err(Error::RetryBudgetExhausted("invertible element search")),
    }
}

/// The endomorphism ring of a module: all matrices commuting with the action.
#[derive(Clone, Debug)]
pub struct EndomorphismRing {
    field: FieldSpec,
    dim_v: usize,
    basis: Vec<Matrix>,
}

/// A commutative matrix algebra certified to be a field: a primitive
/// element, its irreducible minimal polynomial, and the abstract field.
#[derive(Clone, Debug)]
pub struct FieldStructure {
    primitive: Matrix,
    min_poly: Poly,
    delta: FieldSpec,
}

impl FieldStructure {
    pub fn primitive(&self) -> &Matrix {
        &self.primitive
    }

    pub fn min_poly(&self) -> &Poly {
        &self.min_poly
    }

    /// The field the algebra is isomorphic to.
    pub fn delta(&self) -> &FieldSpec {
        &self.delta
    }

    /// Degree of the field over the coefficient field of the module.
    pub fn degree(&self) -> usize {
        self.min_poly.degree().unwrap_or(0)
    }
}

pub fn endomorphism_ring(module: &LieModule) -> EndomorphismRing {
    let basis = commutant(module.action());
    EndomorphismRing { field: module.field().clone(), dim_v: module.dim(), basis }
}

impl EndomorphismRing {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn contains(&self, m: &Matrix) -> bool {
        let mut solver = SpanSolver::new(self.field.clone(), self.dim_v * self.dim_v);
        for b in &self.basis {
            solver.insert(&mat_to_flat(b));
        }
        solver.express(&mat_to_flat(m)).is_some()
    }

    /// Certifies the ring as a field and extracts a primitive element, or
    /// reports that it is not one (non-simple or non-central module).
    pub fn field_structure(&self, rng: &mut impl Rng) -> Result<FieldStructure> {
        algebra_field_structure(&self.field, &self.basis, rng)
    }
}

/// Shared field-certification: commutativity check, then primitive-element
/// sampling. A sample whose minimal polynomial has two distinct irreducible
/// factors, or a repeated factor, exhibits a zero divisor and settles the
/// question negatively; a sample with an irreducible minimal polynomial of
/// full degree settles it positively.
fn algebra_field_structure(
    field: &FieldSpec,
    basis: &[Matrix],
    rng: &mut impl Rng,
) -> Result<FieldStructure> {
    let e = basis.len();
    if e == 0 {
        return Err(Error::NotAField);
    }
    for i in 0..e {
        for j in (i + 1)..e {
            if basis[i].matmul(&basis[j]) != basis[j].matmul(&basis[i]) {
                return Err(Error::NotAField);
            }
        }
    }
    let k = field.words();
    for _ in 0..SAMPLE_BUDGET {
        let mut coeffs = Vec::with_capacity(e * k);
        for _ in 0..e {
            coeffs.extend(field.random(rng));
        }
        let c = combine(field, basis, &coeffs);
        if c.is_zero() {
            continue;
        }
        let mp = c.min_poly();
        let factors = factor_poly(&mp)?.factors;
        if factors.len() > 1 || factors[0].1 > 1 {
            // Coprime components or a nilpotent part: a zero divisor exists.
            return Err(Error::NotAField);
        }
        let deg = mp.degree().unwrap_or(0);
        if deg == e {
            let delta = if e == 1 {
                field.clone()
            } else if field.k() == 1 {
                let coeffs: Vec<u64> = (0..=e).map(|i| mp.coeff(i)[0]).collect();
                FieldSpec::with_modulus(field.p(), coeffs)?
            } else {
                // A representative of the isomorphism class; the modulus of
                // a relative extension is not tracked over extension fields.
                FieldSpec::make_field(field.p(), field.k() * e)?
            };
            return Ok(FieldStructure { primitive: c, min_poly: mp, delta });
        }
        // Irreducible but short: the sample sits in a proper subfield of
        // whatever this ring is; try again.
    }
    Err(Error::RetryBudgetExhausted("primitive element search"))
}

// ---------------------------------------------------------------------------
// Primitive idempotents
// ---------------------------------------------------------------------------

/// A primitive idempotent of a matrix algebra that is a full matrix ring
/// over a field on its support. Verifies the central-simple shape (identity
/// on the support, field center, square dimension), then descends from the
/// identity by splitting corner algebras with minimal-polynomial idempotent
/// lifts until the rank certifies primitivity.
pub fn primitive_idempotent(env: &Envelope, rng: &mut impl Rng) -> Result<Matrix> {
    let field = env.field().clone();
    let n = env.dim_v();
    // Support: the sum of the images of the algebra's elements.
    let mut image_rows = Vec::new();
    let k = field.words();
    for b in env.basis() {
        let bt = b.transpose();
        for j in 0..n {
            image_rows.extend_from_slice(bt.row(j));
        }
    }
    let support = Subspace::from_rows(&Matrix::from_flat(
        field.clone(),
        image_rows.len() / (n * k),
        n,
        image_rows,
    ));
    if support.dim() == 0 {
        return Err(Error::Precondition("algebra acts as zero".into()));
    }
    let unit = env
        .unit()
        .ok_or_else(|| Error::Precondition("algebra has no identity on its support".into()))?;
    // Restricted copy of the algebra on its support, reduced to a basis.
    let restricted = restrict_action(env.basis(), &support)?;
    let mut solver = SpanSolver::new(field.clone(), support.dim() * support.dim());
    let mut w_basis = Vec::new();
    for m in &restricted {
        if solver.insert(&mat_to_flat(m)) {
            w_basis.push(m.clone());
        }
    }
    let dim_a = w_basis.len();
    // Center of the restricted algebra: elements commuting with everything.
    let mut rows = Vec::new();
    let w = support.dim();
    for b in &w_basis {
        let comms: Vec<Vec<u64>> =
            w_basis.iter().map(|c| mat_to_flat(&bracket(c, b))).collect();
        for comp in 0..w * w {
            let mut row = vec![0u64; dim_a * k];
            for (j, fl) in comms.iter().enumerate() {
                row[j * k..(j + 1) * k].copy_from_slice(&fl[comp * k..(comp + 1) * k]);
            }
            rows.extend(row);
        }
    }
    let system = Matrix::from_flat(field.clone(), dim_a * w * w, dim_a, rows);
    let center: Vec<Matrix> = {
        let ker = system.kernel();
        (0..ker.rows()).map(|r| combine(&field, &w_basis, ker.row(r))).collect()
    };
    let center_field = algebra_field_structure(&field, &center, rng).map_err(|e| match e {
        Error::NotAField => Error::Precondition("algebra center is not a field".into()),
        other => other,
    })?;
    let e_deg = center_field.degree();
    if dim_a % e_deg != 0 {
        return Err(Error::Precondition("algebra is not central simple".into()));
    }
    let f2 = dim_a / e_deg;
    let f = (f2 as f64).sqrt().round() as usize;
    if f * f != f2 {
        return Err(Error::Precondition("algebra is not central simple".into()));
    }
    if support.dim() % f != 0 {
        return Err(Error::Precondition("support does not match a full matrix ring".into()));
    }
    let target = support.dim() / f;
    let mut idem = unit;
    let mut guard = 0usize;
    while idem.rank() > target {
        guard += 1;
        if guard > n + 2 {
            return Err(Error::Internal("idempotent refinement failed to descend".into()));
        }
        idem = refine_idempotent(env, &idem, rng)?;
    }
    if idem.rank() != target || !idem.matmul(&idem).eq(&idem) || !env.contains(&idem) {
        return Err(Error::Internal("idempotent verification failed".into()));
    }
    Ok(idem)
}

/// Finds an idempotent of strictly smaller positive rank inside the corner
/// algebra e A e, via the coprime-component projections of a sampled
/// element's minimal polynomial.
fn refine_idempotent(env: &Envelope, e: &Matrix, rng: &mut impl Rng) -> Result<Matrix> {
    let field = env.field().clone();
    // Column space of e; the corner algebra acts on it.
    let et = e.transpose();
    let image = Subspace::from_rows(&et);
    for _ in 0..SAMPLE_BUDGET {
        let r = env.random_element(rng);
        let b = e.matmul(&r).matmul(e);
        if b.is_zero() {
            continue;
        }
        let b_restricted = restrict_action(&[b.clone()], &image)?;
        let mp = b_restricted[0].min_poly();
        let factors = factor_poly(&mp)?.factors;
        // Pick the smallest non-nilpotent component projection.
        let mut best: Option<Matrix> = None;
        for (g, m) in &factors {
            if g.degree() == Some(1) && field.is_zero(&g.coeff(0)) {
                continue; // x^m component: nilpotent part.
            }
            let primary = power_poly(g, *m);
            let (rest, remainder) = mp.div_rem(&primary)?;
            if !remainder.is_zero() {
                return Err(Error::Internal("primary decomposition misfactored".into()));
            }
            // u * rest + v * primary = 1; then (u * rest)(b) projects onto
            // the primary component, giving an idempotent of K[b].
            let (gcd, u, _) = poly_xgcd(&rest, &primary)?;
            if gcd.degree() != Some(0) {
                return Err(Error::Internal("primary components are not coprime".into()));
            }
            let scale = field.inv(&gcd.coeff(0))?;
            let q = u.mul(&rest).mul_scalar(&scale).rem(&mp)?;
            let candidate = b.eval_poly(&q).matmul(e);
            let rank = candidate.rank();
            if rank == 0 || rank >= e.rank() {
                continue;
            }
            if best.as_ref().map_or(true, |cur| rank < cur.rank()) {
                best = Some(candidate);
            }
        }
        if let Some(c) = best {
            if !c.matmul(&c).eq(&c) {
                return Err(Error::Internal("projected element is not idempotent".into()));
            }
            return Ok(c);
        }
    }
    Err(Error::RetryBudgetExhausted("idempotent refinement"))
}

fn power_poly(g: &Poly, m: usize) -> Poly {
    let mut out = Poly::one(g.field().clone());
    for _ in 0..m {
        out = out.mul(g);
    }
    out
}

/// Extended gcd for polynomials: returns (g, u, v) with u a + v b = g.
fn poly_xgcd(a: &Poly, b: &Poly) -> Result<(Poly, Poly, Poly)> {
    let field = a.field().clone();
    let mut r0 = a.clone();
    let mut r1 = b.clone();
    let mut s0 = Poly::one(field.clone());
    let mut s1 = Poly::zero(field.clone());
    let mut t0 = Poly::zero(field.clone());
    let mut t1 = Poly::one(field.clone());
    while !r1.is_zero() {
        let (q, r) = r0.div_rem(&r1)?;
        let s = s0.sub(&q.mul(&s1));
        let t = t0.sub(&q.mul(&t1));
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s;
        t0 = t1;
        t1 = t;
    }
    Ok((r0, s0, t0))
}

// ---------------------------------------------------------------------------
// Transverse split-off
// ---------------------------------------------------------------------------

/// A decomposition V = S ⊕ C with C built from images of S under the
/// complementary ideal, plus the witness operator embedding S into C.
#[derive(Clone, Debug)]
pub struct SplitOff {
    complement: Subspace,
    witness: Matrix,
    embedding: Matrix,
}

impl SplitOff {
    pub fn complement(&self) -> &Subspace {
        &self.complement
    }

    /// The element of the complementary ideal realizing the embedding.
    pub fn witness(&self) -> &Matrix {
        &self.witness
    }

    /// The embedding S → C as a matrix from S-coordinates into the module.
    pub fn embedding(&self) -> &Matrix {
        &self.embedding
    }
}

/// Verifies that `m_ideal` and `n_ideal` decompose the module's algebra into
/// transversely acting ideals.
fn validate_ideal_pair(
    module: &LieModule,
    m_ideal: &MatrixLieAlgebra,
    n_ideal: &MatrixLieAlgebra,
) -> Result<()> {
    let alg = module.algebra();
    if m_ideal.field() != alg.field() || n_ideal.field() != alg.field() {
        return Err(Error::FieldMismatch);
    }
    if m_ideal.dim_v() != alg.dim_v() || n_ideal.dim_v() != alg.dim_v() {
        return Err(Error::DimensionMismatch { expected: alg.dim_v(), got: m_ideal.dim_v() });
    }
    if m_ideal.dim() + n_ideal.dim() != alg.dim() {
        return Err(Error::Precondition(
            "ideal dimensions do not sum to the algebra dimension".into(),
        ));
    }
    let mut solver = SpanSolver::new(alg.field().clone(), alg.dim_v() * alg.dim_v());
    for b in m_ideal.basis().iter().chain(n_ideal.basis()) {
        if !alg.contains(b) {
            return Err(Error::Precondition("ideal basis lies outside the algebra".into()));
        }
        if !solver.insert(&mat_to_flat(b)) {
            return Err(Error::Precondition("ideal bases overlap".into()));
        }
    }
    if !alg.has_ideal(m_ideal) || !alg.has_ideal(n_ideal) {
        return Err(Error::Precondition("summand is not an ideal".into()));
    }
    for m in m_ideal.basis() {
        for nn in n_ideal.basis() {
            if m.matmul(nn) != nn.matmul(m) {
                return Err(Error::Precondition("ideals do not act transversely".into()));
            }
        }
    }
    Ok(())
}

/// Splits a simple module over M ⊕ N as V = S ⊕ C where S is a given
/// simple M-submodule and C is a direct sum of images n·S, each an
/// M-submodule by transversality; the first image used gives an M-module
/// embedding of S.
pub fn split_off(
    module: &LieModule,
    m_ideal: &MatrixLieAlgebra,
    n_ideal: &MatrixLieAlgebra,
    s: &Subspace,
    rng: &mut impl Rng,
) -> Result<SplitOff> {
    validate_ideal_pair(module, m_ideal, n_ideal)?;
    let field = module.field().clone();
    let n = module.dim();
    if s.dim() == 0 || s.dim() >= n {
        return Err(Error::Precondition("seed submodule must be proper and nonzero".into()));
    }
    if !meataxe_gens(&field, n, module.action(), rng)?.is_simple() {
        return Err(Error::NotSimple);
    }
    let restricted = restrict_action(m_ideal.basis(), s)
        .map_err(|_| Error::Precondition("seed subspace is not an M-submodule".into()))?;
    if !meataxe_gens(&field, s.dim(), &restricted, rng)?.is_simple() {
        return Err(Error::Precondition("seed submodule is not simple".into()));
    }

    let mut solver = SpanSolver::new(field.clone(), n);
    for r in 0..s.dim() {
        solver.insert(s.basis().row(r));
    }
    let env_n = associative_envelope(n_ideal.basis(), false);
    let mut complement_rows: Vec<Vec<u64>> = Vec::new();
    let mut witness: Option<Matrix> = None;
    let mut candidates: Vec<Matrix> = n_ideal.basis().to_vec();
    candidates.extend(env_n.basis().iter().cloned());
    for _ in 0..SAMPLE_BUDGET {
        candidates.push(env_n.random_element(rng));
    }
    for cand in candidates {
        if solver.dim() == n {
            break;
        }
        let images: Vec<Vec<u64>> = (0..s.dim()).map(|r| cand.apply(s.basis().row(r))).collect();
        // The image must be a fresh copy of S: all of it disjoint from what
        // is already collected.
        let mut trial = solver.clone();
        if !images.iter().all(|v| trial.insert(v)) {
            continue;
        }
        solver = trial;
        complement_rows.extend(images);
        if witness.is_none() {
            witness = Some(cand);
        }
    }
    if solver.dim() != n {
        return Err(Error::RetryBudgetExhausted("transverse complement search"));
    }
    let k = field.words();
    let mut flat = Vec::with_capacity(complement_rows.len() * n * k);
    for v in &complement_rows {
        flat.extend_from_slice(v);
    }
    let complement =
        Subspace::from_rows(&Matrix::from_flat(field.clone(), complement_rows.len(), n, flat));
    // The complement is M-invariant because m(n s) = n(m s); check it.
    restrict_action(m_ideal.basis(), &complement)
        .map_err(|_| Error::Internal("complement is not an M-submodule".into()))?;
    let witness = witness.expect("complement built from at least one image");
    let embedding = witness.matmul(&s.basis().transpose());
    if embedding.rank() != s.dim() {
        return Err(Error::Internal("embedding witness is not injective".into()));
    }
    for m in m_ideal.basis() {
        for r in 0..s.dim() {
            let v = s.basis().row(r);
            if witness.apply(&m.apply(v)) != m.apply(&witness.apply(v)) {
                return Err(Error::Internal("embedding is not equivariant".into()));
            }
        }
    }
    Ok(SplitOff { complement, witness, embedding })
}

// ---------------------------------------------------------------------------
// Tensor factorization
// ---------------------------------------------------------------------------

/// A verified factorization of a simple module V over M ⊕ N as a tensor
/// product S ⊗ T over Δ = End_M(S): coordinates adapted to Δ, the factor
/// actions, and the invertible change of basis intertwining both sides.
#[derive(Clone)]
pub struct TensorFactorization {
    s_basis: Matrix,
    t_maps: Vec<Matrix>,
    s_action: Vec<Matrix>,
    t_action: Vec<Matrix>,
    delta: FieldSpec,
    delta_degree: usize,
    dim_s: usize,
    dim_t: usize,
    iso: Matrix,
}

impl std::fmt::Debug for TensorFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TensorFactorization")
            .field("dim_s", &self.dim_s)
            .field("dim_t", &self.dim_t)
            .field("delta_degree", &self.delta_degree)
            .finish()
    }
}

impl TensorFactorization {
    /// Rows: the adapted basis of the simple M-submodule S inside V.
    pub fn s_basis(&self) -> &Matrix {
        &self.s_basis
    }

    /// A Δ-basis of the M-equivariant maps S → V.
    pub fn t_maps(&self) -> &[Matrix] {
        &self.t_maps
    }

    /// Action of each M basis element on S, in the adapted basis.
    pub fn s_action(&self) -> &[Matrix] {
        &self.s_action
    }

    /// Action of each N basis element on T, in the adapted basis.
    pub fn t_action(&self) -> &[Matrix] {
        &self.t_action
    }

    /// The endomorphism field Δ = End_M(S).
    pub fn delta(&self) -> &FieldSpec {
        &self.delta
    }

    /// Degree of Δ over the coefficient field.
    pub fn delta_degree(&self) -> usize {
        self.delta_degree
    }

    /// Dimension of S over Δ.
    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    /// Dimension of T over Δ.
    pub fn dim_t(&self) -> usize {
        self.dim_t
    }

    /// The invertible map from V to S ⊗ T coordinates (S index slowest,
    /// then the T index, then the Δ-coordinate).
    pub fn iso(&self) -> &Matrix {
        &self.iso
    }
}

/// The action of `m` on the S side of S ⊗ T, written over the coefficient
/// field: entry ((a,b,l),(a',b',l')) = [b = b'] · m[(a,l),(a',l')].
fn expand_s_side(m: &Matrix, dim_t: usize, e: usize) -> Matrix {
    let field = m.field().clone();
    let d = m.rows();
    let s = d / e;
    let total = s * dim_t * e;
    let mut out = Matrix::zero(field, total, total);
    for a in 0..s {
        for l in 0..e {
            for a2 in 0..s {
                for l2 in 0..e {
                    let v = m.entry(a * e + l, a2 * e + l2);
                    for b in 0..dim_t {
                        out.set_entry(
                            (a * dim_t + b) * e + l,
                            (a2 * dim_t + b) * e + l2,
                            v,
                        );
                    }
                }
            }
        }
    }
    out
}

/// The action of `t` on the T side: entry ((a,b,l),(a',b',l')) =
/// [a = a'] · t[(b,l),(b',l')].
fn expand_t_side(t: &Matrix, dim_s: usize, e: usize) -> Matrix {
    let field = t.field().clone();
    let re = t.rows();
    let r = re / e;
    let total = dim_s * r * e;
    let mut out = Matrix::zero(field, total, total);
    for b in 0..r {
        for l in 0..e {
            for b2 in 0..r {
                for l2 in 0..e {
                    let v = t.entry(b * e + l, b2 * e + l2);
                    for a in 0..dim_s {
                        out.set_entry(
                            (a * r + b) * e + l,
                            (a * r + b2) * e + l2,
                            v,
                        );
                    }
                }
            }
        }
    }
    out
}

/// Factors a simple module over L = M ⊕ N as S ⊗_Δ T: S a simple
/// M-submodule, Δ its endomorphism field, T the space of M-equivariant maps
/// S → V carrying the N-action. The returned isomorphism is verified to
/// intertwine both ideal actions exactly; an M-simple module yields the
/// trivial factorization with T one-dimensional.
pub fn tensor_decompose(
    module: &LieModule,
    m_ideal: &MatrixLieAlgebra,
    n_ideal: &MatrixLieAlgebra,
    rng: &mut impl Rng,
) -> Result<TensorFactorization> {
    validate_ideal_pair(module, m_ideal, n_ideal)?;
    if m_ideal.dim() == 0 {
        return Err(Error::Precondition("first ideal is zero".into()));
    }
    let field = module.field().clone();
    let n = module.dim();
    if !meataxe_gens(&field, n, module.action(), rng)?.is_simple() {
        return Err(Error::NotSimple);
    }

    // Descend to a simple M-submodule S, tracking its basis inside V.
    let mut s_rows = Matrix::identity(field.clone(), n);
    let mut s_gens: Vec<Matrix> = m_ideal.basis().to_vec();
    loop {
        match meataxe_gens(&field, s_rows.rows(), &s_gens, rng)? {
            MeataxeOutcome::Simple => break,
            MeataxeOutcome::Submodule(u) => {
                s_gens = restrict_action(&s_gens, &u)?;
                s_rows = u.basis().matmul(&s_rows);
            }
        }
    }
    let d = s_rows.rows();

    // Δ = End_M(S), certified to be a field since S is simple.
    let delta_basis = commutant(&s_gens);
    let delta_struct = algebra_field_structure(&field, &delta_basis, rng)?;
    let e = delta_struct.degree();
    if d % e != 0 {
        return Err(Error::Internal("endomorphism degree does not divide dim S".into()));
    }
    let dim_s = d / e;
    let c = delta_struct.primitive().clone();

    // Adapt the S-basis to Δ: blocks v, cv, ..., c^{e-1}v.
    let mut c_pows = vec![Matrix::identity(field.clone(), d)];
    for l in 1..e {
        c_pows.push(c.matmul(&c_pows[l - 1]));
    }
    let k = field.words();
    let mut adapt_solver = SpanSolver::new(field.clone(), d);
    let mut adapted: Vec<Vec<u64>> = Vec::new();
    for cand in 0..d {
        if adapted.len() == d {
            break;
        }
        let mut v = vec![0u64; d * k];
        v[cand * k..cand * k + k].copy_from_slice(&field.one());
        if adapt_solver.express(&v).is_some() {
            continue;
        }
        let block: Vec<Vec<u64>> = c_pows.iter().map(|cp| cp.apply(&v)).collect();
        let mut trial = adapt_solver.clone();
        if !block.iter().all(|w| trial.insert(w)) {
            return Err(Error::Internal("endomorphism orbit is not free".into()));
        }
        adapt_solver = trial;
        adapted.extend(block);
    }
    if adapted.len() != d {
        return Err(Error::Internal("adapted basis construction fell short".into()));
    }
    // Change of basis on S: columns are the adapted vectors.
    let mut cb = Matrix::zero(field.clone(), d, d);
    for (j, v) in adapted.iter().enumerate() {
        for i in 0..d {
            cb.set_entry(i, j, &v[i * k..(i + 1) * k]);
        }
    }
    let cb_inv = cb.inverse()?;
    let s_gens_adapted: Vec<Matrix> =
        s_gens.iter().map(|m| cb_inv.matmul(m).matmul(&cb)).collect();
    let c_adapted = cb_inv.matmul(&c).matmul(&cb);
    // S basis as vectors of V, in adapted order.
    let s_basis = cb.transpose().matmul(&s_rows);

    // T = the M-equivariant maps S → V, with S in adapted coordinates.
    let m_on_v = m_ideal.basis();
    let t_flat = hom_space_rectangular(&s_gens_adapted, m_on_v, &s_basis)?;
    if t_flat.is_empty() {
        return Err(Error::Internal("equivariant map space is empty".into()));
    }
    let dim_t_k = t_flat.len();
    if dim_t_k % e != 0 {
        return Err(Error::Internal("map space is not free over the endomorphism field".into()));
    }
    let dim_t = dim_t_k / e;

    // Δ-basis of T: greedily extend by full orbits h, h∘c, ..., h∘c^{e-1}.
    let mut c_ad_pows = vec![Matrix::identity(field.clone(), d)];
    for l in 1..e {
        c_ad_pows.push(c_ad_pows[l - 1].matmul(&c_adapted));
    }
    let mut t_solver = SpanSolver::new(field.clone(), n * d);
    let mut t_maps: Vec<Matrix> = Vec::new();
    let mut t_basis_flat: Vec<Matrix> = Vec::new();
    for h in &t_flat {
        if t_maps.len() == dim_t {
            break;
        }
        if t_solver.express(&mat_to_flat(h)).is_some() {
            continue;
        }
        let orbit: Vec<Matrix> = c_ad_pows.iter().map(|cp| h.matmul(cp)).collect();
        let mut trial = t_solver.clone();
        if !orbit.iter().all(|o| trial.insert(&mat_to_flat(o))) {
            return Err(Error::Internal("map orbit is not free".into()));
        }
        t_solver = trial;
        t_basis_flat.extend(orbit.iter().cloned());
        t_maps.push(h.clone());
    }
    if t_maps.len() != dim_t {
        return Err(Error::Internal("adapted map basis construction fell short".into()));
    }

    // Columns of the inverse isomorphism: h_b applied to adapted basis
    // vector (a, l), laid out with the S index slowest.
    let total = dim_s * dim_t * e;
    if total != n {
        return Err(Error::Internal("factor dimensions do not multiply to dim V".into()));
    }
    let mut p = Matrix::zero(field.clone(), n, n);
    for a in 0..dim_s {
        for b in 0..dim_t {
            for l in 0..e {
                let col = (a * dim_t + b) * e + l;
                let h = &t_maps[b];
                for i in 0..n {
                    p.set_entry(i, col, h.entry(i, a * e + l));
                }
            }
        }
    }
    let iso = p.inverse().map_err(|_| {
        Error::Internal("module is not isotypic over the first ideal".into())
    })?;

    // Action of N on T: n∘(h_b∘c^l) expressed over the adapted map basis.
    let mut t_action = Vec::with_capacity(n_ideal.dim());
    for nn in n_ideal.basis() {
        let mut tm = Matrix::zero(field.clone(), dim_t * e, dim_t * e);
        for b in 0..dim_t {
            for l in 0..e {
                let composed = nn.matmul(&t_basis_flat[b * e + l]);
                let coords = t_solver.express(&mat_to_flat(&composed)).ok_or_else(|| {
                    Error::Internal("composed map leaves the equivariant space".into())
                })?;
                for row in 0..dim_t * e {
                    tm.set_entry(row, b * e + l, &coords[row * k..(row + 1) * k]);
                }
            }
        }
        t_action.push(tm);
    }

    // Exact intertwining on both sides.
    for (m_v, m_s) in m_on_v.iter().zip(&s_gens_adapted) {
        let lhs = iso.matmul(m_v).matmul(&p);
        let rhs = expand_s_side(m_s, dim_t, e);
        if lhs != rhs {
            return Err(Error::Internal("isomorphism fails to intertwine the first ideal".into()));
        }
    }
    for (n_v, n_t) in n_ideal.basis().iter().zip(&t_action) {
        let lhs = iso.matmul(n_v).matmul(&p);
        let rhs = expand_t_side(n_t, dim_s, e);
        if lhs != rhs {
            return Err(Error::Internal(
                "isomorphism fails to intertwine the second ideal".into(),
            ));
        }
    }

    Ok(TensorFactorization {
        s_basis,
        t_maps,
        s_action: s_gens_adapted,
        t_action,
        delta: delta_struct.delta().clone(),
        delta_degree: e,
        dim_s,
        dim_t,
        iso,
    })
}

/// Maps h from S (in its own coordinates, dimension d) into V that satisfy
/// h ∘ m|_S = m ∘ h for every generator, where `s_basis` embeds S into V.
fn hom_space_rectangular(
    s_gens: &[Matrix],
    v_gens: &[Matrix],
    s_basis: &Matrix,
) -> Result<Vec<Matrix>> {
    assert_eq!(s_gens.len(), v_gens.len());
    let field = s_basis.field().clone();
    let k = field.words();
    let d = s_basis.rows();
    let n = s_basis.cols();
    let unknowns = n * d;
    let mut rows = Vec::new();
    for (ms, mv) in s_gens.iter().zip(v_gens) {
        for i in 0..n {
            for j in 0..d {
                let mut row = vec![0u64; unknowns * k];
                for l in 0..d {
                    let idx = (i * d + l) * k;
                    let cur = row[idx..idx + k].to_vec();
                    field.add_into(&cur, ms.entry(l, j), &mut row[idx..idx + k]);
                }
                for l in 0..n {
                    let idx = (l * d + j) * k;
                    let neg = field.neg(mv.entry(i, l));
                    let cur = row[idx..idx + k].to_vec();
                    field.add_into(&cur, &neg, &mut row[idx..idx + k]);
                }
                rows.extend(row);
            }
        }
    }
    let system =
        Matrix::from_flat(field.clone(), s_gens.len() * n * d, unknowns, rows);
    let ker = system.kernel();
    Ok((0..ker.rows()).map(|r| mat_from_flat(&field, n, d, ker.row(r))).collect())
}

// ---------------------------------------------------------------------------
// Full tensor decomposition over an ideal decomposition
// ---------------------------------------------------------------------------

/// An iterated factorization V ≅ S_1 ⊗ ... ⊗ S_r, one factor per ideal, with
/// the composite change of basis verified against every ideal's action.
#[derive(Clone)]
pub struct FullFactorization {
    factor_actions: Vec<Vec<Matrix>>,
    iso: Matrix,
}

impl std::fmt::Debug for FullFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FullFactorization").field("dims", &self.factor_dims()).finish()
    }
}

impl FullFactorization {
    /// Action matrices of each ideal's basis on its own tensor factor.
    pub fn factor_actions(&self) -> &[Vec<Matrix>] {
        &self.factor_actions
    }

    pub fn factor_dims(&self) -> Vec<usize> {
        self.factor_actions
            .iter()
            .map(|a| a.first().map_or(1, |m| m.rows()))
            .collect()
    }

    /// The composite invertible map from V to the tensor coordinates.
    pub fn iso(&self) -> &Matrix {
        &self.iso
    }
}

/// Iterates `tensor_decompose`, peeling one ideal at a time. Requires every
/// stage's endomorphism field to be the coefficient field itself; factors
/// with genuine extension scalars are out of scope here and error loudly.
pub fn full_tensor_decompose(
    module: &LieModule,
    decomposition: &IdealDecomposition,
    rng: &mut impl Rng,
) -> Result<FullFactorization> {
    let field = module.field().clone();
    let alg = module.algebra();
    let mut ideals: Vec<&MatrixLieAlgebra> = Vec::new();
    if decomposition.center().dim() > 0 {
        ideals.push(decomposition.center());
    }
    ideals.extend(decomposition.components().iter());
    if ideals.is_empty() {
        return Err(Error::Precondition("ideal decomposition is empty".into()));
    }
    let total: usize = ideals.iter().map(|i| i.dim()).sum();
    if total != alg.dim() || !ideals.iter().all(|i| i.basis().iter().all(|b| alg.contains(b))) {
        return Err(Error::Precondition(
            "ideal decomposition does not span the module's algebra".into(),
        ));
    }
    let original: Vec<Vec<Matrix>> = ideals.iter().map(|i| i.basis().to_vec()).collect();

    let mut cur_gens: Vec<Vec<Matrix>> = original.clone();
    let mut cur_dim = module.dim();
    let mut iso = Matrix::identity(field.clone(), cur_dim);
    let mut leading = 1usize;
    let mut factor_actions: Vec<Vec<Matrix>> = Vec::new();

    for stage in 0..ideals.len() {
        if stage == ideals.len() - 1 {
            factor_actions.push(cur_gens[stage].clone());
            break;
        }
        let m_alg = MatrixLieAlgebra::new(field.clone(), cur_dim, cur_gens[stage].clone())?;
        let n_basis: Vec<Matrix> =
            cur_gens[stage + 1..].iter().flatten().cloned().collect();
        let n_alg = MatrixLieAlgebra::new(field.clone(), cur_dim, n_basis)?;
        let all: Vec<Matrix> =
            cur_gens[stage..].iter().flatten().cloned().collect();
        let stage_module =
            LieModule::new(MatrixLieAlgebra::new(field.clone(), cur_dim, all)?);
        let td = tensor_decompose(&stage_module, &m_alg, &n_alg, rng)?;
        if td.delta_degree() != 1 {
            return Err(Error::OutsideScopedClass(
                "tensor factor carries endomorphisms beyond the coefficient field".into(),
            ));
        }
        factor_actions.push(td.s_action().to_vec());
        iso = Matrix::identity(field.clone(), leading).kronecker(td.iso()).matmul(&iso);
        leading *= td.dim_s();

        // Remaining ideals now act on T through the factorization.
        let mut offset = 0;
        let mut next: Vec<Vec<Matrix>> = Vec::new();
        for later in &cur_gens[stage + 1..] {
            let slice = td.t_action()[offset..offset + later.len()].to_vec();
            offset += later.len();
            next.push(slice);
        }
        cur_dim = td.dim_t();
        let mut rebuilt = vec![Vec::new(); stage + 1];
        rebuilt.extend(next);
        cur_gens = rebuilt;
    }

    // Verify the composite map against the original actions.
    let dims = factor_actions
        .iter()
        .map(|a| a.first().map_or(1, |m| m.rows()))
        .collect::<Vec<_>>();
    let iso_inv = iso.inverse()?;
    for (i, basis) in original.iter().enumerate() {
        let before: usize = dims[..i].iter().product();
        let after: usize = dims[i + 1..].iter().product();
        for (j, x) in basis.iter().enumerate() {
            let expected = Matrix::identity(field.clone(), before)
                .kronecker(&factor_actions[i][j])
                .kronecker(&Matrix::identity(field.clone(), after));
            let got = iso.matmul(x).matmul(&iso_inv);
            if got != expected {
                return Err(Error::Internal(
                    "composite isomorphism fails to intertwine an ideal".into(),
                ));
            }
        }
    }
    Ok(FullFactorization { factor_actions, iso })
}

// ---------------------------------------------------------------------------
// Module isomorphism over a fixed algebra
// ---------------------------------------------------------------------------

/// Decides whether two modules over the same algebra (given by corresponding
/// basis lists) are isomorphic, producing an invertible intertwiner Ψ with
/// Ψ·x⁽¹⁾ = x⁽²⁾·Ψ, or None when the modules are genuinely non-isomorphic.
pub fn module_iso_fixed_algebra(
    v1: &LieModule,
    v2: &LieModule,
    rng: &mut impl Rng,
) -> Result<Option<Matrix>> {
    if v1.field() != v2.field() {
        return Err(Error::FieldMismatch);
    }
    if v1.algebra().dim() != v2.algebra().dim() {
        return Err(Error::Precondition(
            "modules are not over the same algebra basis".into(),
        ));
    }
    if v1.dim() != v2.dim() {
        return Ok(None);
    }
    let homs = hom_space(v1.action(), v2.action());
    let found = invertible_in_span(v1.field(), &homs, rng)?;
    if let Some(psi) = &found {
        for (x1, x2) in v1.action().iter().zip(v2.action()) {
            if psi.matmul(x1) != x2.matmul(psi) {
                return Err(Error::Internal("intertwiner verification failed".into()));
            }
        }
    }
    Ok(found)
}

// ---------------------------------------------------------------------------
// Cyclic-algebra pseudo-isomorphism
// ---------------------------------------------------------------------------

/// A pseudo-isomorphism between modules of two cyclic matrix algebras: a
/// polynomial g twisting the first generator into the second algebra, and an
/// invertible intertwiner for the twisted actions.
#[derive(Clone, Debug)]
pub struct CyclicPseudoIso {
    poly: Poly,
    intertwiner: Matrix,
}

impl CyclicPseudoIso {
    /// The twist: g with f₁(g) ≡ 0 mod f₂, where fᵢ are the minimal
    /// polynomials of the generators.
    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn intertwiner(&self) -> &Matrix {
        &self.intertwiner
    }
}

/// Finds a single generator of a commutative envelope (an element whose
/// minimal polynomial has degree equal to the algebra dimension).
pub fn cyclic_generator(env: &Envelope, rng: &mut impl Rng) -> Result<Matrix> {
    let e = env.dim();
    for i in 0..e {
        for j in (i + 1)..e {
            if env.basis()[i].matmul(&env.basis()[j]) != env.basis()[j].matmul(&env.basis()[i]) {
                return Err(Error::NotCyclic);
            }
        }
    }
    for _ in 0..SAMPLE_BUDGET {
        let c = env.random_element(rng);
        if c.min_poly().degree() == Some(e) {
            return Ok(c);
        }
    }
    Err(Error::RetryBudgetExhausted("cyclic generator search"))
}

/// Composition f(g) reduced mod m, all over the same coefficient field.
fn compose_mod(f: &Poly, g: &Poly, m: &Poly) -> Result<Poly> {
    let field = f.field().clone();
    let mut acc = Poly::zero(field);
    let deg = match f.degree() {
        None => return Ok(acc),
        Some(d) => d,
    };
    for i in (0..=deg).rev() {
        acc = acc.mul(g).add(&Poly::from_flat(f.field().clone(), f.coeff(i))).rem(m)?;
    }
    Ok(acc)
}

/// Enumerates the twist polynomials g with f₁(g) ≡ 0 mod f₂ — every root of
/// f₁ in the quotient ring K[x]/(f₂). Roots come from field factorization
/// when the modulus is irreducible over a prime field, and from an exhaustive
/// scan of the quotient ring otherwise, bounded in size. The flag reports
/// whether the list is known to be exhaustive; every returned polynomial
/// genuinely satisfies the congruence.
pub(crate) fn cyclic_twist_candidates(f1: &Poly, f2: &Poly) -> Result<(Vec<Poly>, bool)> {
    let field = f1.field().clone();
    let d = f2.degree().unwrap_or(0);
    if d == 0 {
        return Err(Error::Precondition("zero-dimensional generator".into()));
    }
    let mut candidates: Vec<Poly> = Vec::new();
    let mut complete = false;
    if f1 == f2 && d > 1 {
        candidates.push(Poly::x(field.clone()));
    }
    if d == 1 {
        // The quotient ring is the field itself.
        for root in crate::field::all_roots(f1, &field)? {
            candidates.push(Poly::from_flat(field.clone(), root));
        }
        complete = true;
    } else if field.k() == 1 && f2.is_irreducible() {
        let mut coeffs: Vec<u64> = (0..=d).map(|i| f2.coeff(i)[0]).collect();
        coeffs[d] = 1;
        let ext = FieldSpec::with_modulus(field.p(), coeffs)?;
        for root in crate::field::all_roots(f1, &ext)? {
            // A root of f₁ in K[x]/(f₂): its coordinates are the
            // coefficients of the twist polynomial.
            candidates.push(Poly::from_flat(field.clone(), root));
        }
        complete = true;
    } else {
        let q = field.order();
        if let Some(total) = q.checked_pow(d as u32) {
            if total <= EXHAUSTIVE_LIMIT {
                let k = field.words();
                for idx in 0..total {
                    let mut coeffs = Vec::with_capacity(d * k);
                    let mut rem = idx;
                    for _ in 0..d {
                        coeffs.extend(field.element_from_index(rem % q));
                        rem /= q;
                    }
                    let g = Poly::from_flat(field.clone(), coeffs);
                    if compose_mod(f1, &g, f2)?.is_zero() {
                        candidates.push(g);
                    }
                }
                complete = true;
            }
        }
    }
    Ok((candidates, complete))
}

/// Decides pseudo-isomorphism between the natural modules of K[c₁] and
/// K[c₂]: searches for g with f₁(g) ≡ 0 mod f₂ and an invertible Ψ with
/// Ψ·c₁ = g(c₂)·Ψ. Root candidates come from field factorization when the
/// second minimal polynomial is irreducible over a prime field, and from an
/// exhaustive scan of the quotient ring otherwise (bounded; errors honestly
/// past the bound).
pub fn cyclic_pseudo_iso(
    c1: &Matrix,
    c2: &Matrix,
    rng: &mut impl Rng,
) -> Result<Option<CyclicPseudoIso>> {
    if c1.field() != c2.field() {
        return Err(Error::FieldMismatch);
    }
    let field = c1.field().clone();
    let f1 = c1.min_poly();
    let f2 = c2.min_poly();
    if f1.degree() != f2.degree() || c1.rows() != c2.rows() {
        return Ok(None);
    }
    let (candidates, complete) = cyclic_twist_candidates(&f1, &f2)?;

    for g in &candidates {
        let twisted = c2.eval_poly(g);
        let homs = hom_space(&[c1.clone()], &[twisted.clone()]);
        if let Some(psi) = invertible_in_span(&field, &homs, rng)? {
            if psi.matmul(c1) != twisted.matmul(&psi) {
                return Err(Error::Internal("twisted intertwiner verification failed".into()));
            }
            return Ok(Some(CyclicPseudoIso { poly: g.clone(), intertwiner: psi }));
        }
    }
    if complete {
        Ok(None)
    } else {
        Err(Error::SearchSpaceTooLarge(
            "twist candidates over a reducible modulus of this size".into(),
        ))
    }
}

// ---------------------------------------------------------------------------
// Minimal ideals of a reductive algebra
// ---------------------------------------------------------------------------

/// A verified decomposition L = Z(L) ⊕ M₁ ⊕ ... ⊕ M_r into the center and
/// minimal nonabelian ideals.
#[derive(Clone, Debug)]
pub struct IdealDecomposition {
    center: MatrixLieAlgebra,
    components: Vec<MatrixLieAlgebra>,
}

impl IdealDecomposition {
    /// The abelian part: the center of the algebra (possibly zero).
    pub fn center(&self) -> &MatrixLieAlgebra {
        &self.center
    }

    /// The minimal nonabelian ideals.
    pub fn components(&self) -> &[MatrixLieAlgebra] {
        &self.components
    }
}

/// Solves for a projection commuting with every generator, fixing `u`
/// pointwise, with image inside `u`. Its kernel is an invariant complement.
fn equivariant_projection(gens: &[Matrix], u: &Subspace) -> Result<Matrix> {
    assert!(!gens.is_empty());
    let field = gens[0].field().clone();
    let k = field.words();
    let w = gens[0].rows();
    let unknowns = w * w;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    // Commutation: (π g - g π)[i,j] = 0.
    for g in gens {
        for i in 0..w {
            for j in 0..w {
                let mut row = vec![0u64; unknowns * k];
                for l in 0..w {
                    let idx = (i * w + l) * k;
                    let cur = row[idx..idx + k].to_vec();
                    field.add_into(&cur, g.entry(l, j), &mut row[idx..idx + k]);
                    let idx2 = (l * w + j) * k;
                    let neg = field.neg(g.entry(i, l));
                    let cur2 = row[idx2..idx2 + k].to_vec();
                    field.add_into(&cur2, &neg, &mut row[idx2..idx2 + k]);
                }
                rows.extend(row);
                rhs.extend(field.zero());
            }
        }
    }
    // Fixing u: π u_r = u_r for each basis vector.
    for r in 0..u.dim() {
        let v = u.basis().row(r);
        for i in 0..w {
            let mut row = vec![0u64; unknowns * k];
            for l in 0..w {
                let idx = (i * w + l) * k;
                row[idx..idx + k].copy_from_slice(&v[l * k..(l + 1) * k]);
            }
            rows.extend(row);
            rhs.extend_from_slice(&v[i * k..(i + 1) * k]);
        }
    }
    // Image constraint: functionals annihilating u kill every π column.
    let ann = u.basis().kernel();
    for a in 0..ann.rows() {
        let fvec = ann.row(a);
        for j in 0..w {
            let mut row = vec![0u64; unknowns * k];
            for l in 0..w {
                let idx = (l * w + j) * k;
                row[idx..idx + k].copy_from_slice(&fvec[l * k..(l + 1) * k]);
            }
            rows.extend(row);
            rhs.extend(field.zero());
        }
    }
    let total_rows = rows.len() / (unknowns * k);
    let system = Matrix::from_flat(field.clone(), total_rows, unknowns, rows);
    let sol = system.solve(&rhs).ok_or_else(|| {
        Error::NotReductive("an invariant subspace admits no invariant complement".into())
    })?;
    Ok(mat_from_flat(&field, w, w, &sol))
}

/// Decomposes a matrix Lie algebra as center ⊕ minimal nonabelian ideals,
/// verifying the reductive split; the derived subalgebra is decomposed by
/// running the module splitter on the adjoint action.
pub fn minimal_ideals(
    algebra: &MatrixLieAlgebra,
    rng: &mut impl Rng,
) -> Result<IdealDecomposition> {
    let field = algebra.field().clone();
    let n = algebra.dim();
    if n == 0 {
        return Err(Error::Precondition("algebra is zero".into()));
    }
    let center_mats = algebra.center();
    let derived_mats = algebra.derived_subalgebra();
    let mut solver = SpanSolver::new(field.clone(), algebra.dim_v() * algebra.dim_v());
    for m in center_mats.iter().chain(&derived_mats) {
        if !solver.insert(&mat_to_flat(m)) {
            return Err(Error::NotReductive(
                "center meets the derived subalgebra".into(),
            ));
        }
    }
    if solver.dim() != n {
        return Err(Error::NotReductive(
            "center and derived subalgebra do not span the algebra".into(),
        ));
    }
    let center = MatrixLieAlgebra::new(field.clone(), algebra.dim_v(), center_mats)?;

    let mut components = Vec::new();
    if !derived_mats.is_empty() {
        // Coordinates of the derived subalgebra inside the algebra.
        let k = field.words();
        let dim_d = derived_mats.len();
        let mut rows = Vec::with_capacity(dim_d * n * k);
        for m in &derived_mats {
            rows.extend(algebra.coordinates(m).ok_or_else(|| {
                Error::Internal("derived element escapes the algebra".into())
            })?);
        }
        let d_rows = Matrix::from_flat(field.clone(), dim_d, n, rows);
        let d_sub = Subspace::from_rows(&d_rows);
        // The adjoint action of the whole algebra restricted to it.
        let ad = algebra.adjoint_matrices();
        let ad_on_d = restrict_action(&ad, &d_sub)
            .map_err(|_| Error::Internal("derived subalgebra is not an ideal".into()))?;

        // Split the adjoint module into simple pieces, with complements
        // obtained from equivariant projections.
        let mut stack: Vec<(Matrix, Vec<Matrix>)> =
            vec![(d_sub.basis().clone(), ad_on_d)];
        while let Some((emb, gens)) = stack.pop() {
            match meataxe_gens(&field, emb.rows(), &gens, rng)? {
                MeataxeOutcome::Simple => {
                    // Convert the embedding rows back into matrices of L.
                    let mats: Vec<Matrix> = (0..emb.rows())
                        .map(|r| combine(&field, algebra.basis(), emb.row(r)))
                        .collect();
                    let piece =
                        MatrixLieAlgebra::new(field.clone(), algebra.dim_v(), mats)?;
                    if piece.is_abelian() {
                        return Err(Error::NotReductive(
                            "derived subalgebra contains an abelian minimal ideal".into(),
                        ));
                    }
                    if !algebra.has_ideal(&piece) {
                        return Err(Error::Internal("split piece is not an ideal".into()));
                    }
                    components.push(piece);
                }
                MeataxeOutcome::Submodule(u) => {
                    let pi = equivariant_projection(&gens, &u)?;
                    let comp = Subspace::from_rows(&pi.kernel());
                    if comp.dim() + u.dim() != emb.rows() {
                        return Err(Error::Internal("projection kernel has wrong size".into()));
                    }
                    for part in [u, comp] {
                        let part_gens = restrict_action(&gens, &part)?;
                        let part_emb = part.basis().matmul(&emb);
                        stack.push((part_emb, part_gens));
                    }
                }
            }
        }
    }
    components.sort_by_key(|c| std::cmp::Reverse(c.dim()));
    Ok(IdealDecomposition { center, components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{gl_basis, sl_basis};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf(p: u64) -> FieldSpec {
        FieldSpec::make_field(p, 1).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn sl2(field: &FieldSpec) -> Vec<Matrix> {
        vec![
            Matrix::from_int_rows(field.clone(), &[&[0, 1], &[0, 0]]),
            Matrix::from_int_rows(field.clone(), &[&[0, 0], &[1, 0]]),
            Matrix::from_int_rows(field.clone(), &[&[1, 0], &[0, -1]]),
        ]
    }

    /// x ⊗ I + placement helpers for actions on tensor products.
    fn on_left(x: &Matrix, right_dim: usize) -> Matrix {
        x.kronecker(&Matrix::identity(x.field().clone(), right_dim))
    }

    fn on_right(x: &Matrix, left_dim: usize) -> Matrix {
        Matrix::identity(x.field().clone(), left_dim).kronecker(x)
    }

    fn unit_vec(field: &FieldSpec, n: usize, i: usize) -> Vec<u64> {
        let k = field.words();
        let mut v = vec![0u64; n * k];
        v[i * k..(i + 1) * k].copy_from_slice(&field.one());
        v
    }

    #[test]
    fn spin_reaches_the_smallest_invariant_subspace() {
        let f = gf(5);
        let gens = sl2(&f);
        // A seed spanning the space spins to the space.
        let full = spin(&gens, &[unit_vec(&f, 2, 0), unit_vec(&f, 2, 1)]);
        assert_eq!(full.dim(), 2);
        // The natural module is simple: one seed suffices.
        assert_eq!(spin(&gens, &[unit_vec(&f, 2, 0)]).dim(), 2);
        // A nilpotent shift annihilates e_1, so e_1 spins to a line,
        // while e_3 walks up the chain to the whole space.
        let shift = Matrix::from_int_rows(f.clone(), &[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]);
        assert_eq!(spin(&[shift.clone()], &[unit_vec(&f, 3, 0)]).dim(), 1);
        assert_eq!(spin(&[shift], &[unit_vec(&f, 3, 2)]).dim(), 3);
    }

    #[test]
    fn spin_output_is_invariant_under_every_generator() {
        let f = gf(7);
        let mut r = rng(41);
        for _ in 0..10 {
            let gens: Vec<Matrix> = (0..2).map(|_| Matrix::random(f.clone(), 4, 4, &mut r)).collect();
            let seed = (0..4).flat_map(|_| f.random(&mut r)).collect::<Vec<_>>();
            let u = spin(&gens, &[seed]);
            for g in &gens {
                for row in 0..u.dim() {
                    assert!(u.contains(&g.apply(u.basis().row(row))));
                }
            }
        }
    }

    #[test]
    fn meataxe_certifies_the_simple_natural_module() {
        let f = gf(5);
        let alg = MatrixLieAlgebra::new(f.clone(), 2, sl2(&f)).unwrap();
        let module = LieModule::new(alg);
        assert!(meataxe_split(&module, &mut rng(1)).unwrap().is_simple());
    }

    #[test]
    fn meataxe_splits_a_visible_block_sum() {
        let f = gf(5);
        let doubled: Vec<Matrix> = sl2(&f)
            .iter()
            .map(|x| {
                let mut m = Matrix::zero(f.clone(), 4, 4);
                for i in 0..2 {
                    for j in 0..2 {
                        m.set_entry(i, j, x.entry(i, j));
                        m.set_entry(i + 2, j + 2, x.entry(i, j));
                    }
                }
                m
            })
            .collect();
        let alg = MatrixLieAlgebra::new(f.clone(), 4, doubled.clone()).unwrap();
        match meataxe_split(&LieModule::new(alg), &mut rng(2)).unwrap() {
            MeataxeOutcome::Simple => panic!("doubled module certified simple"),
            MeataxeOutcome::Submodule(u) => {
                assert_eq!(u.dim(), 2);
                for g in &doubled {
                    for r in 0..u.dim() {
                        assert!(u.contains(&g.apply(u.basis().row(r))));
                    }
                }
            }
        }
    }

    #[test]
    fn meataxe_certifies_the_adjoint_module_of_sl3() {
        let f = gf(7);
        let alg = MatrixLieAlgebra::new(f.clone(), 3, sl_basis(&f, 3)).unwrap();
        let ad = alg.adjoint_matrices();
        let ad_alg = MatrixLieAlgebra::new(f.clone(), 8, ad.clone()).unwrap();
        assert!(meataxe_split(&LieModule::new(ad_alg), &mut rng(3)).unwrap().is_simple());
        // Exhaustive cross-check: every coordinate vector generates.
        for i in 0..8 {
            assert_eq!(spin(&ad, &[unit_vec(&f, 8, i)]).dim(), 8);
        }
    }

    #[test]
    fn meataxe_never_certifies_reducible_random_modules() {
        let f = gf(5);
        let mut r = rng(4);
        for trial in 0..200 {
            let gens: Vec<Matrix> = if trial % 2 == 0 {
                // Hidden block sum of two natural modules.
                let g = Matrix::random_invertible(f.clone(), 4, &mut r);
                let gi = g.inverse().unwrap();
                sl2(&f)
                    .iter()
                    .map(|x| {
                        let mut m = Matrix::zero(f.clone(), 4, 4);
                        for i in 0..2 {
                            for j in 0..2 {
                                m.set_entry(i, j, x.entry(i, j));
                                m.set_entry(i + 2, j + 2, x.entry(i, j));
                            }
                        }
                        g.matmul(&m).matmul(&gi)
                    })
                    .collect()
            } else {
                // Hidden diagonal action on a tensor square (reducible:
                // the symmetric and alternating parts are invariant).
                let g = Matrix::random_invertible(f.clone(), 4, &mut r);
                let gi = g.inverse().unwrap();
                sl2(&f)
                    .iter()
                    .map(|x| {
                        let m = on_left(x, 2).add(&on_right(x, 2));
                        g.matmul(&m).matmul(&gi)
                    })
                    .collect()
            };
            match meataxe_gens(&f, 4, &gens, &mut r).unwrap() {
                MeataxeOutcome::Simple => panic!("reducible module certified simple"),
                MeataxeOutcome::Submodule(u) => {
                    assert!(u.dim() > 0 && u.dim() < 4);
                    for g in &gens {
                        for row in 0..u.dim() {
                            assert!(u.contains(&g.apply(u.basis().row(row))));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn endomorphisms_of_a_simple_module_form_the_base_field() {
        let f = gf(5);
        let alg = MatrixLieAlgebra::new(f.clone(), 2, sl2(&f)).unwrap();
        let ring = endomorphism_ring(&LieModule::new(alg));
        assert_eq!(ring.dim(), 1);
        let fs = ring.field_structure(&mut rng(5)).unwrap();
        assert_eq!(fs.degree(), 1);
        assert_eq!(fs.delta().order(), 5);
    }

    /// Regular representation of the quadratic extension of GF(2): a + bω
    /// with ω² = ω + 1 becomes [[a, b], [b, a+b]].
    fn gf4_block(f2: &FieldSpec, a: u64, b: u64) -> Matrix {
        Matrix::from_int_rows(f2.clone(), &[
            &[a as i64, b as i64],
            &[b as i64, (a + b) as i64],
        ])
    }

    #[test]
    fn endomorphisms_over_a_subfield_realize_the_extension_field() {
        // The natural module of 2×2 trace-zero matrices over the quadratic
        // extension of GF(2), written as 4×4 matrices over GF(2): its
        // endomorphism ring is the extension itself.
        let f2 = gf(2);
        let zero = gf4_block(&f2, 0, 0);
        let one = gf4_block(&f2, 1, 0);
        let omega = gf4_block(&f2, 0, 1);
        let blocks = |a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix| {
            let mut m = Matrix::zero(f2.clone(), 4, 4);
            for i in 0..2 {
                for j in 0..2 {
                    m.set_entry(i, j, a.entry(i, j));
                    m.set_entry(i, j + 2, b.entry(i, j));
                    m.set_entry(i + 2, j, c.entry(i, j));
                    m.set_entry(i + 2, j + 2, d.entry(i, j));
                }
            }
            m
        };
        let mut gens = Vec::new();
        for s in [&one, &omega] {
            gens.push(blocks(&zero, s, &zero, &zero)); // upper
            gens.push(blocks(&zero, &zero, s, &zero)); // lower
            gens.push(blocks(s, &zero, &zero, s)); // diagonal (char 2)
        }
        let alg = MatrixLieAlgebra::new(f2.clone(), 4, gens).unwrap();
        let ring = endomorphism_ring(&LieModule::new(alg));
        assert_eq!(ring.dim(), 2);
        let fs = ring.field_structure(&mut rng(6)).unwrap();
        assert_eq!(fs.degree(), 2);
        assert_eq!(fs.delta().order(), 4);
        assert!(fs.min_poly().is_irreducible());
    }

    #[test]
    fn endomorphisms_of_a_doubled_module_do_not_form_a_field() {
        let f = gf(5);
        let doubled: Vec<Matrix> = sl2(&f)
            .iter()
            .map(|x| {
                let mut m = Matrix::zero(f.clone(), 4, 4);
                for i in 0..2 {
                    for j in 0..2 {
                        m.set_entry(i, j, x.entry(i, j));
                        m.set_entry(i + 2, j + 2, x.entry(i, j));
                    }
                }
                m
            })
            .collect();
        let alg = MatrixLieAlgebra::new(f.clone(), 4, doubled).unwrap();
        let ring = endomorphism_ring(&LieModule::new(alg));
        assert_eq!(ring.dim(), 4);
        assert!(matches!(ring.field_structure(&mut rng(7)), Err(Error::NotAField)));
    }

    #[test]
    fn primitive_idempotent_in_a_full_matrix_algebra_has_rank_one() {
        let f = gf(5);
        let gens = vec![
            Matrix::from_int_rows(f.clone(), &[&[1, 0], &[0, 0]]),
            Matrix::from_int_rows(f.clone(), &[&[0, 1], &[1, 0]]),
        ];
        let env = associative_envelope(&gens, false);
        assert_eq!(env.dim(), 4);
        let e = primitive_idempotent(&env, &mut rng(8)).unwrap();
        assert_eq!(e.rank(), 1);
        assert_eq!(e.matmul(&e).flat(), e.flat());
        assert!(env.contains(&e));
    }

    #[test]
    fn primitive_idempotent_of_scalars_is_the_identity() {
        let f = gf(5);
        let env = associative_envelope(&[Matrix::identity(f.clone(), 3)], false);
        let e = primitive_idempotent(&env, &mut rng(9)).unwrap();
        assert_eq!(e.flat(), Matrix::identity(f, 3).flat());
    }

    #[test]
    fn primitive_idempotent_of_an_embedded_field_is_the_identity() {
        // The companion matrix of an irreducible quadratic generates a copy
        // of the 25-element field: a division algebra has no proper
        // idempotents.
        let f = gf(5);
        let c = Matrix::from_int_rows(f.clone(), &[&[0, 2], &[1, 0]]);
        assert!(c.min_poly().is_irreducible());
        let env = associative_envelope(&[c], false);
        assert_eq!(env.dim(), 2);
        let e = primitive_idempotent(&env, &mut rng(10)).unwrap();
        assert_eq!(e.flat(), Matrix::identity(f, 2).flat());
    }

    #[test]
    fn split_off_builds_the_expected_transverse_complement() {
        let f = gf(5);
        let left: Vec<Matrix> = sl2(&f).iter().map(|x| on_left(x, 2)).collect();
        let right: Vec<Matrix> = sl2(&f).iter().map(|x| on_right(x, 2)).collect();
        let all: Vec<Matrix> = left.iter().chain(&right).cloned().collect();
        let module = LieModule::new(MatrixLieAlgebra::new(f.clone(), 4, all).unwrap());
        let m_ideal = MatrixLieAlgebra::new(f.clone(), 4, left).unwrap();
        let n_ideal = MatrixLieAlgebra::new(f.clone(), 4, right).unwrap();
        // S: the plane of vectors v ⊗ e_1 (second index fastest).
        let s = Subspace::from_rows(&Matrix::from_int_rows(f.clone(), &[
            &[1, 0, 0, 0],
            &[0, 0, 1, 0],
        ]));
        let split = split_off(&module, &m_ideal, &n_ideal, &s, &mut rng(11)).unwrap();
        let expected = Subspace::from_rows(&Matrix::from_int_rows(f.clone(), &[
            &[0, 1, 0, 0],
            &[0, 0, 0, 1],
        ]));
        assert_eq!(*split.complement(), expected);
        assert_eq!(split.embedding().rank(), 2);
        // The embedding intertwines the first ideal's action.
        for m in m_ideal.basis() {
            for r in 0..s.dim() {
                let v = s.basis().row(r);
                assert_eq!(
                    split.witness().apply(&m.apply(v)),
                    m.apply(&split.witness().apply(v))
                );
            }
        }
    }

    #[test]
    fn split_off_rejects_improper_or_nonsimple_seeds() {
        let f = gf(5);
        let left: Vec<Matrix> = sl2(&f).iter().map(|x| on_left(x, 2)).collect();
        let right: Vec<Matrix> = sl2(&f).iter().map(|x| on_right(x, 2)).collect();
        let all: Vec<Matrix> = left.iter().chain(&right).cloned().collect();
        let module = LieModule::new(MatrixLieAlgebra::new(f.clone(), 4, all).unwrap());
        let m_ideal = MatrixLieAlgebra::new(f.clone(), 4, left).unwrap();
        let n_ideal = MatrixLieAlgebra::new(f.clone(), 4, right).unwrap();
        // The whole space is not a proper seed.
        let full = Subspace::full(f.clone(), 4);
        assert!(matches!(
            split_off(&module, &m_ideal, &n_ideal, &full, &mut rng(12)),
            Err(Error::Precondition(_))
        ));
        // A scalar ideal admits no simple seed of dimension two: scalars
        // leave every line invariant, so a plane is never simple.
        let scalars = MatrixLieAlgebra::new(
            f.clone(),
            4,
            vec![Matrix::identity(f.clone(), 4)],
        )
        .unwrap();
        let rest = MatrixLieAlgebra::new(
            f.clone(),
            4,
            sl2(&f)
                .iter()
                .map(|x| on_left(x, 2))
                .chain(sl2(&f).iter().map(|x| on_right(x, 2)))
                .collect(),
        )
        .unwrap();
        let big = LieModule::new(
            MatrixLieAlgebra::new(
                f.clone(),
                4,
                scalars.basis().iter().chain(rest.basis()).cloned().collect(),
            )
            .unwrap(),
        );
        let plane = Subspace::from_rows(&Matrix::from_int_rows(f.clone(), &[
            &[1, 0, 0, 0],
            &[0, 1, 0, 0],
        ]));
        assert!(matches!(
            split_off(&big, &scalars, &rest, &plane, &mut rng(13)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn tensor_decompose_splits_a_kronecker_product_action() {
        let f = gf(7);
        let left: Vec<Matrix> = sl2(&f).iter().map(|x| on_left(x, 2)).collect();
        let right: Vec<Matrix> = sl2(&f).iter().map(|x| on_right(x, 2)).collect();
        let all: Vec<Matrix> = left.iter().chain(&right).cloned().collect();
        let module = LieModule::new(MatrixLieAlgebra::new(f.clone(), 4, all).unwrap());
        let m_ideal = MatrixLieAlgebra::new(f.clone(), 4, left.clone()).unwrap();
        let n_ideal = MatrixLieAlgebra::new(f.clone(), 4, right.clone()).unwrap();
        let td = tensor_decompose(&module, &m_ideal, &n_ideal, &mut rng(14)).unwrap();
        assert_eq!((td.dim_s(), td.dim_t(), td.delta_degree()), (2, 2, 1));
        assert_eq!(td.delta().order(), 7);
        // Re-verify the intertwining from the accessors.
        let p = td.iso().inverse().unwrap();
        for (mv, ms) in left.iter().zip(td.s_action()) {
            let lhs = td.iso().matmul(mv).matmul(&p);
            let rhs = ms.kronecker(&Matrix::identity(f.clone(), 2));
            assert_eq!(lhs.flat(), rhs.flat());
        }
        for (nv, nt) in right.iter().zip(td.t_action()) {
            let lhs = td.iso().matmul(nv).matmul(&p);
            let rhs = Matrix::identity(f.clone(), 2).kronecker(nt);
            assert_eq!(lhs.flat(), rhs.flat());
        }
    }

    #[test]
    fn tensor_decompose_of_an_m_simple_module_is_trivial() {
        let f = gf(5);
        let module =
            LieModule::new(MatrixLieAlgebra::new(f.clone(), 2, sl2(&f)).unwrap());
        let m_ideal = MatrixLieAlgebra::new(f.clone(), 2, sl2(&f)).unwrap();
        let n_ideal = MatrixLieAlgebra::new(f.clone(), 2, Vec::new()).unwrap();
        let td = tensor_decompose(&module, &m_ideal, &n_ideal, &mut rng(15)).unwrap();
        assert_eq!((td.dim_s(), td.dim_t(), td.delta_degree()), (2, 1, 1));
    }

    #[test]
    fn tensor_decompose_handles_distinct_factor_sizes() {
        let f = gf(5);
        let left: Vec<Matrix> = sl2(&f).iter().map(|x| on_left(x, 3)).collect();
        let right: Vec<Matrix> = sl_basis(&f, 3).iter().map(|x| on_right(x, 2)).collect();
        let all: Vec<Matrix> = left.iter().chain(&right).cloned().collect();
        let module = LieModule::new(MatrixLieAlgebra::new(f.clone(), 6, all).unwrap());
        let m_ideal = MatrixLieAlgebra::new(f.clone(), 6, left).unwrap();
        let n_ideal = MatrixLieAlgebra::new(f.clone(), 6, right).unwrap();
        let td = tensor_decompose(&module, &m_ideal, &n_ideal, &mut rng(16)).unwrap();
        assert_eq!((td.dim_s(), td.dim_t(), td.delta_degree()), (2, 3, 1));
        assert_eq!(td.dim_s() * td.dim_t() * td.delta_degree(), 6);
    }

    #[test]
    fn tensor_decompose_rejects_a_decomposable_module() {
        let f = gf(5);
        let doubled: Vec<Matrix> = sl2(&f)
            .iter()
            .map(|x| {
                let mut m = Matrix::zero(f.clone(), 4, 4);
                for i in 0..2 {
                    for j in 0..2 {
                        m.set_entry(i, j, x.entry(i, j));
                        m.set_entry(i + 2, j + 2, x.entry(i, j));
                    }
                }
                m
            })
            .collect();
        let module =
            LieModule::new(MatrixLieAlgebra::new(f.clone(), 4, doubled.clone()).unwrap());
        let m_ideal = MatrixLieAlgebra::new(f.clone(), 4, doubled).unwrap();
        let n_ideal = MatrixLieAlgebra::new(f.clone(), 4, Vec::new()).unwrap();
        assert!(matches!(
            tensor_decompose(&module, &m_ideal, &n_ideal, &mut rng(17)),
            Err(Error::NotSimple)
        ));
    }

    #[test]
    fn full_tensor_decompose_recovers_three_factors() {
        let f = gf(5);
        let id2 = Matrix::identity(f.clone(), 2);
        let place = |x: &Matrix, slot: usize| -> Matrix {
            let parts = [
                if slot == 0 { x } else { &id2 },
                if slot == 1 { x } else { &id2 },
                if slot == 2 { x } else { &id2 },
            ];
            parts[0].kronecker(parts[1]).kronecker(parts[2])
        };
        let mut gens = Vec::new();
        for slot in 0..3 {
            for x in sl2(&f) {
                gens.push(place(&x, slot));
            }
        }
        let alg = MatrixLieAlgebra::new(f.clone(), 8, gens).unwrap();
        let module = LieModule::new(alg.clone());
        let decomposition = minimal_ideals(&alg, &mut rng(18)).unwrap();
        assert_eq!(decomposition.center().dim(), 0);
        assert_eq!(decomposition.components().len(), 3);
        let full = full_tensor_decompose(&module, &decomposition, &mut rng(19)).unwrap();
        assert_eq!(full.factor_dims(), vec![2, 2, 2]);
        assert!(full.iso().is_invertible());
    }

    #[test]
    fn full_tensor_decompose_of_a_single_ideal_is_the_module_itself() {
        let f = gf(5);
        let alg = MatrixLieAlgebra::new(f.clone(), 2, sl2(&f)).unwrap();
        let module = LieModule::new(alg.clone());
        let decomposition = minimal_ideals(&alg, &mut rng(20)).unwrap();
        assert_eq!(decomposition.components().len(), 1);
        let full = full_tensor_decompose(&module, &decomposition, &mut rng(21)).unwrap();
        assert_eq!(full.factor_dims(), vec![2]);
        assert_eq!(full.iso().flat(), Matrix::identity(f, 2).flat());
    }

    #[test]
    fn minimal_ideals_separates_two_simple_summands() {
        let f = gf(5);
        let mut gens = Vec::new();
        for x in sl2(&f) {
            let mut m = Matrix::zero(f.clone(), 4, 4);
            for i in 0..2 {
                for j in 0..2 {
                    m.set_entry(i, j, x.entry(i, j));
                }
            }
            gens.push(m);
        }
        for x in sl2(&f) {
            let mut m = Matrix::zero(f.clone(), 4, 4);
            for i in 0..2 {
                for j in 0..2 {
                    m.set_entry(i + 2, j + 2, x.entry(i, j));
                }
            }
            gens.push(m);
        }
        let alg = MatrixLieAlgebra::new(f.clone(), 4, gens).unwrap();
        let decomposition = minimal_ideals(&alg, &mut rng(22)).unwrap();
        assert_eq!(decomposition.center().dim(), 0);
        let dims: Vec<usize> =
            decomposition.components().iter().map(|c| c.dim()).collect();
        assert_eq!(dims, vec![3, 3]);
        for c in decomposition.components() {
            assert!(!c.is_abelian());
            assert!(alg.has_ideal(c));
        }
    }

    #[test]
    fn minimal_ideals_finds_the_scalar_center_of_gl2() {
        let f = gf(7);
        let alg = MatrixLieAlgebra::new(f.clone(), 2, gl_basis(&f, 2)).unwrap();
        let decomposition = minimal_ideals(&alg, &mut rng(23)).unwrap();
        assert_eq!(decomposition.center().dim(), 1);
        assert!(decomposition.center().is_abelian());
        assert_eq!(decomposition.components().len(), 1);
        assert_eq!(decomposition.components()[0].dim(), 3);
    }

    #[test]
    fn minimal_ideals_rejects_a_nilpotent_algebra() {
        let f = gf(5);
        let gens = vec![
            Matrix::from_int_rows(f.clone(), &[&[0, 1, 0], &[0, 0, 0], &[0, 0, 0]]),
            Matrix::from_int_rows(f.clone(), &[&[0, 0, 1], &[0, 0, 0], &[0, 0, 0]]),
            Matrix::from_int_rows(f.clone(), &[&[0, 0, 0], &[0, 0, 1], &[0, 0, 0]]),
        ];
        let alg = MatrixLieAlgebra::new(f.clone(), 3, gens).unwrap();
        assert!(matches!(
            minimal_ideals(&alg, &mut rng(24)),
            Err(Error::NotReductive(_))
        ));
    }

    #[test]
    fn module_iso_finds_the_symplectic_intertwiner() {
        let f = gf(5);
        let natural = MatrixLieAlgebra::new(f.clone(), 2, sl2(&f)).unwrap();
        let dual_gens: Vec<Matrix> = sl2(&f).iter().map(|x| x.transpose().neg()).collect();
        let dual = MatrixLieAlgebra::new(f.clone(), 2, dual_gens.clone()).unwrap();
        let psi = module_iso_fixed_algebra(
            &LieModule::new(natural.clone()),
            &LieModule::new(dual),
            &mut rng(25),
        )
        .unwrap()
        .expect("the natural and dual modules of the 2×2 algebra are isomorphic");
        assert!(psi.is_invertible());
        for (x, xd) in sl2(&f).iter().zip(&dual_gens) {
            assert_eq!(psi.matmul(x).flat(), xd.matmul(&psi).flat());
        }
        // A module is always isomorphic to itself.
        assert!(module_iso_fixed_algebra(
            &LieModule::new(natural.clone()),
            &LieModule::new(natural),
            &mut rng(26),
        )
        .unwrap()
        .is_some());
    }

    #[test]
    fn module_iso_reports_the_natural_and_dual_cubic_modules_as_distinct() {
        let f = gf(5);
        let natural = MatrixLieAlgebra::new(f.clone(), 3, sl_basis(&f, 3)).unwrap();
        let dual_gens: Vec<Matrix> =
            sl_basis(&f, 3).iter().map(|x| x.transpose().neg()).collect();
        let dual = MatrixLieAlgebra::new(f.clone(), 3, dual_gens).unwrap();
        assert!(module_iso_fixed_algebra(
            &LieModule::new(natural),
            &LieModule::new(dual),
            &mut rng(27),
        )
        .unwrap()
        .is_none());
    }

    #[test]
    fn cyclic_pseudo_iso_twists_between_conjugate_field_generators() {
        // Companion matrices of two irreducible quadratics generating the
        // same 25-element field: a twist polynomial must exist.
        let f = gf(5);
        let c1 = Matrix::from_int_rows(f.clone(), &[&[0, 2], &[1, 0]]); // x² − 2
        let c2 = Matrix::from_int_rows(f.clone(), &[&[0, 3], &[1, 0]]); // x² − 3
        let found = cyclic_pseudo_iso(&c1, &c2, &mut rng(28)).unwrap().unwrap();
        let f1 = c1.min_poly();
        let f2 = c2.min_poly();
        assert!(compose_mod(&f1, found.poly(), &f2).unwrap().is_zero());
        let twisted = c2.eval_poly(found.poly());
        assert_eq!(
            found.intertwiner().matmul(&c1).flat(),
            twisted.matmul(found.intertwiner()).flat()
        );
        assert!(found.intertwiner().is_invertible());
    }

    #[test]
    fn cyclic_pseudo_iso_accepts_equal_generators_and_rejects_size_mismatch() {
        let f = gf(5);
        let c = Matrix::from_int_rows(f.clone(), &[&[1, 0], &[0, 2]]);
        let same = cyclic_pseudo_iso(&c, &c, &mut rng(29)).unwrap().unwrap();
        assert!(same.intertwiner().is_invertible());
        // A scalar against a two-valued diagonal: algebra dimensions differ.
        let scalar = Matrix::identity(f.clone(), 2);
        assert!(cyclic_pseudo_iso(&scalar, &c, &mut rng(30)).unwrap().is_none());
    }

    #[test]
    fn cyclic_generator_finds_a_single_generator_of_a_diagonal_algebra() {
        let f = gf(5);
        let c = Matrix::from_int_rows(f.clone(), &[&[1, 0], &[0, 2]]);
        let env = associative_envelope(&[c], false);
        assert_eq!(env.dim(), 2);
        let g = cyclic_generator(&env, &mut rng(31)).unwrap();
        assert_eq!(g.min_poly().degree(), Some(2));
    }

    #[test]
    fn envelope_of_the_natural_module_is_the_full_matrix_ring() {
        let f = gf(5);
        let env = associative_envelope(&sl2(&f), true);
        assert_eq!(env.dim(), 4);
        let shift = Matrix::from_int_rows(f.clone(), &[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]);
        let nilpotent = associative_envelope(&[shift], false);
        assert_eq!(nilpotent.dim(), 2);
        assert!(nilpotent.unit().is_none());
    }

    #[test]
    fn algebra_constructors_enforce_closure_and_build_closures() {
        let f = gf(5);
        let e = Matrix::from_int_rows(f.clone(), &[&[0, 1], &[0, 0]]);
        let fm = Matrix::from_int_rows(f.clone(), &[&[0, 0], &[1, 0]]);
        assert!(matches!(
            MatrixLieAlgebra::new(f.clone(), 2, vec![e.clone(), fm.clone()]),
            Err(Error::NotBracketClosed)
        ));
        let closed = MatrixLieAlgebra::closure(f.clone(), 2, &[e, fm]).unwrap();
        assert_eq!(closed.dim(), 3);
        assert!(!closed.is_abelian());
    }

    #[test]
    fn adjoint_matrices_represent_the_bracket() {
        for (p, n) in [(5u64, 2usize), (7, 3)] {
            let f = gf(p);
            let alg = MatrixLieAlgebra::new(f.clone(), n, sl_basis(&f, n)).unwrap();
            let ad = alg.adjoint_matrices();
            for i in 0..alg.dim() {
                for j in 0..alg.dim() {
                    let br = bracket(alg.matrix(i), alg.matrix(j));
                    let coords = alg.coordinates(&br).unwrap();
                    let lhs = combine(&f, &ad, &coords);
                    let rhs = bracket(&ad[i], &ad[j]);
                    assert_eq!(lhs.flat(), rhs.flat());
                }
            }
        }
    }
}
