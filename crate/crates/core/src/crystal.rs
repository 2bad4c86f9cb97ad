//! Young-tableau combinatorics for type-A tensor decompositions, and the
//! module constructions built on them: multiplicities of simple summands in
//! tensor products counted by insertion on diagrams, explicit simple modules
//! for the trace-zero algebras at desk scale, and the packaging of a module
//! action as a bilinear-map tensor together with its two-step nilpotent
//! algebra.
//!
//! Tableaux are read in the far-eastern order — columns from rightmost to
//! leftmost, top to bottom within a column — and tensor multiplicities come
//! from folding reading words through row insertion. Worked single-row
//! example over the alphabet {1, 2}: the fillings of a row of two boxes are
//! 11, 12, 22, with reading words (1,1), (2,1), (2,2). Folding them into the
//! one-box diagram (1): word (1,1) gives (2) then (3), a diagram whose
//! fillings number 4; word (2,1) gives (0) then (1), with 2 fillings; word
//! (2,2) gives (0) and then an invalid negative part, contributing 0. The
//! total 4 + 2 + 0 = 6 equals 2 · 3, the product of the two filling counts —
//! the cardinality identity that pins the reading convention down.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::linalg::Matrix;
use crate::modules::{meataxe_split, restrict_action, spin, LieModule, MatrixLieAlgebra};
use crate::tensor::{BimapView, Frame, OperatorTuple, Tensor};

/// A weakly decreasing tuple of nonnegative integers with a fixed number of
/// slots; trailing zeros are significant for the slot count.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    /// Validates weak decrease.
    pub fn new(parts: Vec<usize>) -> Result<Partition> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Precondition("parts must weakly decrease".into()));
        }
        Ok(Partition { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// The number of slots, zeros included.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// The number of boxes: the sum of the parts.
    pub fn weight(&self) -> usize {
        self.parts.iter().sum()
    }
}

/// A filling of a partition's boxes: row `r` holds `parts[r]` entries.
/// Semistandard throughout — rows weakly increase, columns strictly increase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    shape: Partition,
    rows: Vec<Vec<usize>>,
}

impl Tableau {
    pub fn shape(&self) -> &Partition {
        &self.shape
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// The far-eastern reading: columns from rightmost to leftmost, top to
    /// bottom within each column.
    pub fn reading_word(&self) -> Vec<usize> {
        let width = self.shape.parts.first().copied().unwrap_or(0);
        let mut word = Vec::with_capacity(self.shape.weight());
        for c in (0..width).rev() {
            for (r, part) in self.shape.parts.iter().enumerate() {
                if *part > c {
                    word.push(self.rows[r][c]);
                }
            }
        }
        word
    }

    /// Whether the entries are exactly 1 through the box count, each once.
    pub fn is_standard(&self) -> bool {
        let m = self.shape.weight();
        let mut seen = vec![false; m + 1];
        for row in &self.rows {
            for &e in row {
                if e == 0 || e > m || seen[e] {
                    return false;
                }
                seen[e] = true;
            }
        }
        true
    }
}

/// A tensor-product multiplicity query: the number of summands of the third
/// shape in the product of the first two, stored with its computed value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LRQuery {
    lambda: Partition,
    mu: Partition,
    nu: Partition,
    value: usize,
}

impl LRQuery {
    pub fn compute(lambda: Partition, mu: Partition, nu: Partition) -> Result<LRQuery> {
        let value = lr_coefficient(&lambda, &mu, &nu)?;
        Ok(LRQuery { lambda, mu, nu, value })
    }

    pub fn lambda(&self) -> &Partition {
        &self.lambda
    }

    pub fn mu(&self) -> &Partition {
        &self.mu
    }

    pub fn nu(&self) -> &Partition {
        &self.nu
    }

    pub fn value(&self) -> usize {
        self.value
    }
}

/// Row insertion on a diagram with n slots: letter j ≤ n adds a box to row
/// j, and the letter n+1 removes a full column, subtracting one box from
/// every row. Returns `None` when the result is not a diagram (a row
/// outgrowing the one above it, or a negative part).
pub fn row_insert(shape: &Partition, j: usize) -> Result<Option<Partition>> {
    let n = shape.len();
    if j == 0 || j > n + 1 {
        return Err(Error::Precondition(format!(
            "insertion letter {j} outside 1..={}",
            n + 1
        )));
    }
    let mut parts = shape.parts.clone();
    if j <= n {
        parts[j - 1] += 1;
        if j >= 2 && parts[j - 1] > parts[j - 2] {
            return Ok(None);
        }
    } else {
        for p in &mut parts {
            if *p == 0 {
                return Ok(None);
            }
            *p -= 1;
        }
    }
    Ok(Some(Partition { parts }))
}

/// Left-to-right fold of [`row_insert`]; `None` as soon as any prefix leaves
/// the set of diagrams, regardless of the suffix.
pub fn iterated_insert(shape: &Partition, word: &[usize]) -> Result<Option<Partition>> {
    let mut current = shape.clone();
    for &j in word {
        match row_insert(&current, j)? {
            Some(next) => current = next,
            None => return Ok(None),
        }
    }
    Ok(Some(current))
}

/// Every semistandard filling of the shape from the alphabet 1..=alphabet,
/// ordered lexicographically by reading word.
pub fn enumerate_ssyt(shape: &Partition, alphabet: usize) -> Vec<Tableau> {
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for (r, &part) in shape.parts.iter().enumerate() {
        for c in 0..part {
            cells.push((r, c));
        }
    }
    let mut rows: Vec<Vec<usize>> = shape.parts.iter().map(|&p| vec![0; p]).collect();
    let mut out = Vec::new();
    fill(&cells, 0, alphabet, &mut rows, shape, &mut out);
    out.sort_by(|a, b| a.reading_word().cmp(&b.reading_word()));
    out
}

fn fill(
    cells: &[(usize, usize)],
    pos: usize,
    alphabet: usize,
    rows: &mut Vec<Vec<usize>>,
    shape: &Partition,
    out: &mut Vec<Tableau>,
) {
    if pos == cells.len() {
        out.push(Tableau { shape: shape.clone(), rows: rows.clone() });
        return;
    }
    let (r, c) = cells[pos];
    let min_row = if c > 0 { rows[r][c - 1] } else { 1 };
    let min_col = if r > 0 && shape.parts[r - 1] > c { rows[r - 1][c] + 1 } else { 1 };
    for e in min_row.max(min_col)..=alphabet {
        rows[r][c] = e;
        fill(cells, pos + 1, alphabet, rows, shape, out);
    }
    rows[r][c] = 0;
}

/// The multiplicity of the third shape among the summands of the tensor
/// product of the first two: the number of fillings of the second shape
/// whose reading words fold the first shape onto the third with every
/// prefix a diagram. All three shapes share the slot count n; the alphabet
/// is n+1.
pub fn lr_coefficient(lambda: &Partition, mu: &Partition, nu: &Partition) -> Result<usize> {
    let n = lambda.len();
    if mu.len() != n || nu.len() != n {
        return Err(Error::Precondition("shapes must share the slot count".into()));
    }
    let mut count = 0;
    for t in enumerate_ssyt(mu, n + 1) {
        if iterated_insert(lambda, &t.reading_word())?.as_ref() == Some(nu) {
            count += 1;
        }
    }
    Ok(count)
}

/// Closed form for the self-multiplicity against the shape (2, 1, …, 1) of
/// weight n+1: the number of distinct nonzero part sizes.
pub fn lr_adjoint_formula(lambda: &Partition) -> usize {
    lambda
        .parts
        .iter()
        .filter(|&&p| p > 0)
        .collect::<BTreeSet<_>>()
        .len()
}

/// The number of divisors of m that are at most n.
pub fn divisor_count(m: u64, n: u64) -> Result<u64> {
    if m == 0 || n == 0 {
        return Err(Error::Precondition("divisor counting needs positive arguments".into()));
    }
    Ok((1..=n.min(m)).filter(|d| m % d == 0).count() as u64)
}

/// Lexicographically ordered k-element subsets of 0..n.
fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn extend(n: usize, k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            if n - i < k - current.len() {
                break;
            }
            current.push(i);
            extend(n, k, i + 1, current, out);
            current.pop();
        }
    }
    extend(n, k, 0, &mut current, &mut out);
    out
}

/// The action of a matrix on the k-th exterior power, in the basis of
/// lexicographically ordered k-subsets of coordinates: the matrix acts as a
/// derivation across the wedge factors, with signs from resorting.
fn exterior_power_action(x: &Matrix, k: usize) -> Matrix {
    let field = x.field().clone();
    let n = x.rows();
    let subsets = k_subsets(n, k);
    let mut rank = std::collections::HashMap::new();
    for (i, s) in subsets.iter().enumerate() {
        rank.insert(s.clone(), i);
    }
    let d = subsets.len();
    let mut m = Matrix::zero(field.clone(), d, d);
    for (col, s) in subsets.iter().enumerate() {
        for t in 0..k {
            for a in 0..n {
                let coeff = x.entry(a, s[t]).to_vec();
                if field.is_zero(&coeff) {
                    continue;
                }
                if a != s[t] && s.contains(&a) {
                    continue;
                }
                // Replace the t-th element by a and resort, tracking parity.
                let mut target = s.clone();
                target[t] = a;
                let mut swaps = 0usize;
                let mut i = t;
                while i > 0 && target[i] < target[i - 1] {
                    target.swap(i, i - 1);
                    swaps += 1;
                    i -= 1;
                }
                while i + 1 < k && target[i] > target[i + 1] {
                    target.swap(i, i + 1);
                    swaps += 1;
                    i += 1;
                }
                let signed = if swaps % 2 == 1 { field.neg(&coeff) } else { coeff };
                let row = rank[&target];
                let sum = field.add(m.entry(row, col), &signed);
                m.set_entry(row, col, &sum);
            }
        }
    }
    m
}

/// The action on the ℓ-th tensor power of a d-dimensional space: the sum of
/// the single-slot actions.
fn tensor_power_action(x: &Matrix, ell: usize) -> Matrix {
    let field = x.field().clone();
    let d = x.rows();
    let total = d.pow(ell as u32);
    let mut out = Matrix::zero(field.clone(), total, total);
    for pos in 0..ell {
        let before = Matrix::identity(field.clone(), d.pow(pos as u32));
        let after = Matrix::identity(field.clone(), d.pow((ell - 1 - pos) as u32));
        out = out.add(&before.kronecker(x).kronecker(&after));
    }
    out
}

/// Builds the simple module of the trace-zero (n+1)×(n+1) algebra whose
/// highest weight is the given partition, with explicit action matrices in
/// the order of [`crate::examples::sl_basis`]. Shapes are restricted to all
/// nonzero parts equal to some ℓ (which covers the fundamental shapes at
/// ℓ = 1): ℓ = 1 gives the exterior power directly on its subset basis;
/// ℓ ≥ 2 spins the unique maximal-weight vector inside the ℓ-th tensor power
/// of that exterior power and certifies simplicity, refusing honestly when
/// small characteristic breaks it rather than returning a non-simple module.
pub fn build_simple_module(
    n: usize,
    lambda: &Partition,
    field: &FieldSpec,
    rng: &mut impl Rng,
) -> Result<LieModule> {
    if n == 0 || lambda.len() != n {
        return Err(Error::Precondition("the shape needs n ≥ 1 slots".into()));
    }
    let p = field.p();
    if (n as u64 + 1) % p == 0 {
        return Err(Error::Precondition(format!(
            "characteristic {p} divides n+1 = {}",
            n + 1
        )));
    }
    let m = lambda.weight() as u64;
    if m == 0 {
        return Err(Error::Precondition("the zero shape has no faithful module".into()));
    }
    if p <= m {
        return Err(Error::CharTooSmall { p, bound: m });
    }
    let nonzero: Vec<usize> = lambda.parts.iter().copied().filter(|&x| x > 0).collect();
    let ell = nonzero[0];
    if nonzero.iter().any(|&x| x != ell) {
        return Err(Error::Precondition(
            "nonzero parts must all be equal for this construction".into(),
        ));
    }
    let r = nonzero.len();
    let gens = crate::examples::sl_basis(field, n + 1);
    let wedge: Vec<Matrix> = gens.iter().map(|x| exterior_power_action(x, r)).collect();
    if ell == 1 {
        let alg = MatrixLieAlgebra::new(field.clone(), wedge[0].rows(), wedge)?;
        return Ok(LieModule::new(alg));
    }
    let power: Vec<Matrix> = wedge.iter().map(|w| tensor_power_action(w, ell)).collect();
    // The subset {0, …, r−1} is first in lexicographic order, so the
    // maximal-weight vector of the power is coordinate 0.
    let total = power[0].rows();
    let k = field.words();
    let mut seed = vec![0u64; total * k];
    seed[0] = 1;
    let sub = spin(&power, &[seed]);
    let action = restrict_action(&power, &sub)?;
    let alg = MatrixLieAlgebra::new(field.clone(), sub.dim(), action)?;
    let module = LieModule::new(alg);
    if !meataxe_split(&module, rng)?.is_simple() {
        return Err(Error::OutsideScopedClass(format!(
            "the maximal-weight submodule is not simple over GF({p}) for this shape"
        )));
    }
    Ok(module)
}

/// A module action packaged as tensors: the bilinear map algebra × module →
/// module on the frame (dim algebra, dim module, dim module), and the
/// two-step nilpotent product it induces on module ⊕ algebra ⊕ module,
/// graded so that (m, x, m′)·(n, y, n′) = (0, 0, x·n − y·m) with the value
/// landing in the last summand.
pub struct FamilyMember {
    module: LieModule,
    tensor: Tensor,
    brahana: Tensor,
}

impl FamilyMember {
    pub fn module(&self) -> &LieModule {
        &self.module
    }

    /// The module action as a bilinear-map tensor.
    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    /// The induced nilpotent algebra's structure tensor.
    pub fn brahana(&self) -> &Tensor {
        &self.brahana
    }

    /// The embedding of the acting algebra into the derivations of the
    /// action tensor: basis element x maps to the triple (ad x on the
    /// algebra slot, x on the module slot, x on the codomain), which
    /// satisfies the derivation identity because the module axiom is
    /// exactly the product rule.
    pub fn embedded_derivations(&self) -> Result<Vec<OperatorTuple>> {
        let view = BimapView::new(&self.tensor)?;
        let ad = self.module.algebra().adjoint_matrices();
        let mut out = Vec::with_capacity(ad.len());
        for (x, ad_x) in self.module.algebra().basis().iter().zip(&ad) {
            out.push(view.tuple_from_parts(x, x, ad_x)?);
        }
        Ok(out)
    }
}

/// Builds the simple module for the shape and packages its action: the
/// bilinear-map tensor on frame (dim L, dim V, dim V) whose entries are the
/// action's structure constants, and the nilpotent algebra on V ⊕ L ⊕ V.
pub fn family_tensor(
    n: usize,
    lambda: &Partition,
    field: &FieldSpec,
    rng: &mut impl Rng,
) -> Result<FamilyMember> {
    let module = build_simple_module(n, lambda, field, rng)?;
    let dim_l = module.algebra().dim();
    let dim_v = module.dim();
    let frame = Frame::new(field.clone(), &[dim_l, dim_v, dim_v])?;
    let mut tensor = Tensor::zero(frame);
    for (i, x) in module.algebra().basis().iter().enumerate() {
        for j in 0..dim_v {
            for kk in 0..dim_v {
                let value = x.entry(kk, j);
                if !field.is_zero(value) {
                    tensor.set_entry(&[i, j, kk], value)?;
                }
            }
        }
    }

    let w = 2 * dim_v + dim_l;
    let last = dim_v + dim_l;
    let frame_b = Frame::new(field.clone(), &[w, w, w])?;
    let mut brahana = Tensor::zero(frame_b);
    for (i, x) in module.algebra().basis().iter().enumerate() {
        for j in 0..dim_v {
            for kk in 0..dim_v {
                let value = x.entry(kk, j);
                if field.is_zero(value) {
                    continue;
                }
                // Algebra slot times leading module slot, landing last.
                brahana.set_entry(&[dim_v + i, j, last + kk], value)?;
                // Leading module slot times algebra slot: the negative.
                brahana.set_entry(&[j, dim_v + i, last + kk], &field.neg(value))?;
            }
        }
    }
    Ok(FamilyMember { module, tensor, brahana })
}
