//! Pseudo-isomorphism of Lie modules: a simultaneous change of algebra and
//! module coordinates. A pseudo-isomorphism between modules is a pair
//! (ψ, Ψ) — an isomorphism ψ between the acting algebras and an invertible
//! matrix Ψ between the underlying spaces — satisfying the intertwining
//! identity Ψ·x = ψ(x)·Ψ for every x in the first algebra. Since ψ is then
//! forced to be conjugation by Ψ, the question is exactly whether some
//! invertible matrix carries the first algebra onto the second.
//!
//! The decision procedure covers faithful simple modules of reductive
//! algebras whose simple ideals are recognized split type A and whose
//! abelian part acts through a cyclic algebra. Both modules are factored
//! into tensor slots, one per ideal; matched slots contribute either the
//! standard-basis identification or its diagram-twisted variant; and the
//! per-slot intertwiners are assembled through the two tensor
//! coordinatizations. Inner twists are absorbed by the linear intertwiner
//! solve, so per-slot failures of every candidate are decisive.

use rand::Rng;

use crate::chevalley::{diagram_twist, recognize_type_a, TypeAOutcome, TypeARecognition};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::linalg::Matrix;
use crate::modules::{
    associative_envelope, combine, cyclic_generator, cyclic_twist_candidates,
    full_tensor_decompose, hom_space, invertible_in_span, meataxe_split, minimal_ideals,
    LieModule, MatrixLieAlgebra, EXHAUSTIVE_LIMIT, SAMPLE_BUDGET,
};

/// A verified pseudo-isomorphism: the images of the source algebra's basis
/// under ψ (each a member of the target algebra) and the intertwiner Ψ.
#[derive(Clone, Debug)]
pub struct PseudoIso {
    psi: Vec<Matrix>,
    intertwiner: Matrix,
}

impl PseudoIso {
    /// ψ on the source algebra's basis, in order: the image matrices.
    pub fn psi(&self) -> &[Matrix] {
        &self.psi
    }

    /// The invertible map Ψ between the module spaces.
    pub fn intertwiner(&self) -> &Matrix {
        &self.intertwiner
    }
}

/// The defining identity Ψ·x = ψ(x)·Ψ, checked on every basis element.
fn intertwines(action: &[Matrix], images: &[Matrix], psi_mat: &Matrix) -> bool {
    action
        .iter()
        .zip(images)
        .all(|(x, y)| psi_mat.matmul(x) == y.matmul(psi_mat))
}

/// Pseudo-isomorphism between two simple modules whose acting algebras are
/// recognized split type A. The candidate algebra maps are the standard-basis
/// identification and, at rank ≥ 2, its composition with the negated
/// anti-transpose — the unique outer class; negation is what makes the
/// reflection bracket-preserving. Inner freedom is absorbed by the
/// intertwiner solve, so returning none after both candidates fail is
/// decisive for the recognized class.
pub fn simple_factor_pseudo_iso(
    rec1: &TypeARecognition,
    rec2: &TypeARecognition,
    rng: &mut impl Rng,
) -> Result<Option<PseudoIso>> {
    if rec1.field() != rec2.field() {
        return Err(Error::FieldMismatch);
    }
    if rec1.n() != rec2.n() {
        return Ok(None);
    }
    let dim1 = rec1.domain_basis()[0].rows();
    let dim2 = rec2.domain_basis()[0].rows();
    if dim1 != dim2 {
        return Ok(None);
    }
    let field = rec1.field().clone();
    let twists: &[bool] = if rec1.n() == 1 { &[false] } else { &[false, true] };
    for &twisted in twists {
        let mut images = Vec::with_capacity(rec1.domain_basis().len());
        for b in rec1.domain_basis() {
            let s = rec1
                .to_standard(b)
                .ok_or_else(|| Error::Internal("recognition basis fails to express".into()))?;
            let s = if twisted { diagram_twist(rec1.n(), &s).neg() } else { s };
            let y = rec2.from_standard(&s).ok_or_else(|| {
                Error::Internal("standard coordinates fail to pull back".into())
            })?;
            images.push(y);
        }
        let homs = hom_space(rec1.domain_basis(), &images);
        if let Some(psi_mat) = invertible_in_span(&field, &homs, rng)? {
            if !intertwines(rec1.domain_basis(), &images, &psi_mat) {
                return Err(Error::Internal(
                    "intertwiner fails its defining identity".into(),
                ));
            }
            return Ok(Some(PseudoIso { psi: images, intertwiner: psi_mat }));
        }
    }
    Ok(None)
}

/// Decides pseudo-isomorphism of two faithful simple Lie modules over the
/// scoped class: reductive algebras whose simple ideals are recognized split
/// type A, with any center acting through scalars, or purely abelian
/// algebras acting through a single field extension. Every positive answer
/// carries an exactly verified witness; a none is an exhausted complete
/// candidate set.
pub fn pseudo_iso(
    v1: &LieModule,
    v2: &LieModule,
    rng: &mut impl Rng,
) -> Result<Option<PseudoIso>> {
    if v1.field() != v2.field() {
        return Err(Error::FieldMismatch);
    }
    let field = v1.field().clone();
    // Conjugation preserves both dimensions; mismatches are immediate.
    if v1.dim() != v2.dim() || v1.algebra().dim() != v2.algebra().dim() {
        return Ok(None);
    }
    for v in [v1, v2] {
        if !meataxe_split(v, rng)?.is_simple() {
            return Err(Error::NotSimple);
        }
    }
    let d1 = minimal_ideals(v1.algebra(), rng)?;
    let d2 = minimal_ideals(v2.algebra(), rng)?;
    // An isomorphism matches centers with centers and ideals with ideals.
    if d1.center().dim() != d2.center().dim()
        || d1.components().len() != d2.components().len()
    {
        return Ok(None);
    }
    if d1.components().is_empty() {
        return abelian_pseudo_iso(v1, v2, rng);
    }

    let f1 = full_tensor_decompose(v1, &d1, rng)?;
    let f2 = full_tensor_decompose(v2, &d2, rng)?;
    let has_center = d1.center().dim() > 0;
    let offset = usize::from(has_center);
    let dims1 = f1.factor_dims();
    let dims2 = f2.factor_dims();
    if has_center && (dims1[0] != 1 || dims2[0] != 1) {
        return Err(Error::Internal("a scalar center must act on a trivial slot".into()));
    }

    let r = d1.components().len();
    let mut recs1 = Vec::with_capacity(r);
    let mut recs2 = Vec::with_capacity(r);
    for k in 0..r {
        recs1.push(recognize_factor(&field, dims1[offset + k], &f1.factor_actions()[offset + k], rng)?);
        recs2.push(recognize_factor(&field, dims2[offset + k], &f2.factor_actions()[offset + k], rng)?);
    }

    // Try every pairing of the simple slots whose ranks and sizes line up.
    for sigma in permutations(r) {
        let viable = (0..r).all(|k| {
            recs1[k].n() == recs2[sigma[k]].n()
                && dims1[offset + k] == dims2[offset + sigma[k]]
        });
        if !viable {
            continue;
        }
        let mut factors: Vec<PseudoIso> = Vec::with_capacity(r);
        for k in 0..r {
            match simple_factor_pseudo_iso(&recs1[k], &recs2[sigma[k]], rng)? {
                Some(found) => factors.push(found),
                None => break,
            }
        }
        if factors.len() < r {
            continue;
        }

        // Assemble: per-slot intertwiners in source slot order, the slot
        // permutation into the target's ordering, and the two tensor
        // coordinatizations on the outside.
        let mut kron = Matrix::identity(field.clone(), 1);
        if has_center {
            kron = kron.kronecker(&Matrix::identity(field.clone(), 1));
        }
        for factor in &factors {
            kron = kron.kronecker(factor.intertwiner());
        }
        let mut sigma_full = vec![0usize; offset + r];
        for k in 0..r {
            sigma_full[offset + k] = offset + sigma[k];
        }
        let perm = slot_permutation(&field, &dims2, &sigma_full);
        let psi_mat = f2
            .iso()
            .inverse()?
            .matmul(&perm)
            .matmul(&kron)
            .matmul(f1.iso());
        return finish(v1, v2, psi_mat).map(Some);
    }
    Ok(None)
}

/// Derives ψ from the assembled intertwiner as conjugation and verifies that
/// every image lies in the target algebra — guaranteed by the construction,
/// so a failure here is an internal fault, not a verdict.
fn finish(v1: &LieModule, v2: &LieModule, psi_mat: Matrix) -> Result<PseudoIso> {
    let psi_inv = psi_mat.inverse()?;
    let mut images = Vec::with_capacity(v1.algebra().dim());
    for b in v1.algebra().basis() {
        let img = psi_mat.matmul(b).matmul(&psi_inv);
        if v2.algebra().coordinates(&img).is_none() {
            return Err(Error::Internal(
                "assembled conjugation leaves the target algebra".into(),
            ));
        }
        images.push(img);
    }
    if !intertwines(v1.algebra().basis(), &images, &psi_mat) {
        return Err(Error::Internal("assembled intertwiner fails its identity".into()));
    }
    Ok(PseudoIso { psi: images, intertwiner: psi_mat })
}

/// Builds the slot's algebra from its action matrices and recognizes it as
/// split type A, surfacing the diagnostic as a scoped-class error otherwise.
fn recognize_factor(
    field: &FieldSpec,
    dim: usize,
    action: &[Matrix],
    rng: &mut impl Rng,
) -> Result<TypeARecognition> {
    let alg = MatrixLieAlgebra::new(field.clone(), dim, action.to_vec())?;
    match recognize_type_a(&alg, rng)? {
        TypeAOutcome::Recognized(rec) => Ok(rec),
        TypeAOutcome::NotTypeA(why) => Err(Error::OutsideScopedClass(format!(
            "a simple ideal is not recognized split type A: {why}"
        ))),
    }
}

/// The purely abelian case. Both algebras act through field envelopes (the
/// modules are simple); a generator of the first envelope is drawn from the
/// algebra's own span, so whether its conjugate under a candidate twist lands
/// the whole algebra inside the target is independent of which intertwiner
/// the solver picked — any two differ by an element of the envelope, which
/// commutes with everything in play. Exhausting a complete twist list is
/// therefore a decisive none.
fn abelian_pseudo_iso(
    v1: &LieModule,
    v2: &LieModule,
    rng: &mut impl Rng,
) -> Result<Option<PseudoIso>> {
    let field = v1.field().clone();
    let env1 = associative_envelope(v1.action(), true);
    let env2 = associative_envelope(v2.action(), true);
    if env1.dim() != env2.dim() {
        return Ok(None);
    }
    let c1 = generator_in_span(&field, v1.action(), env1.dim(), rng)?;
    let c2 = cyclic_generator(&env2, rng)?;
    let f1 = c1.min_poly();
    let f2 = c2.min_poly();
    let (candidates, complete) = cyclic_twist_candidates(&f1, &f2)?;
    for g in &candidates {
        let twisted = c2.eval_poly(g);
        let homs = hom_space(&[c1.clone()], &[twisted.clone()]);
        let Some(psi_mat) = invertible_in_span(&field, &homs, rng)? else {
            continue;
        };
        let psi_inv = psi_mat.inverse()?;
        let inside = v1
            .algebra()
            .basis()
            .iter()
            .all(|b| v2.algebra().coordinates(&psi_mat.matmul(b).matmul(&psi_inv)).is_some());
        if !inside {
            continue;
        }
        let images = v1
            .algebra()
            .basis()
            .iter()
            .map(|b| psi_mat.matmul(b).matmul(&psi_inv))
            .collect::<Vec<_>>();
        if !intertwines(v1.algebra().basis(), &images, &psi_mat) {
            return Err(Error::Internal("cyclic intertwiner fails its identity".into()));
        }
        return Ok(Some(PseudoIso { psi: images, intertwiner: psi_mat }));
    }
    if complete {
        Ok(None)
    } else {
        Err(Error::SearchSpaceTooLarge(
            "twist candidates over a reducible modulus of this size".into(),
        ))
    }
}

/// An element of the span of `gens` whose minimal polynomial reaches
/// `target_deg` — a single generator of the envelope drawn from the algebra
/// itself. A field envelope always contains one in the span: a span avoiding
/// every generator would lie inside a union of at most a handful of proper
/// subfields, hence inside one of them, contradicting generation.
fn generator_in_span(
    field: &FieldSpec,
    gens: &[Matrix],
    target_deg: usize,
    rng: &mut impl Rng,
) -> Result<Matrix> {
    let k = field.words();
    for _ in 0..SAMPLE_BUDGET {
        let mut coeffs = Vec::with_capacity(gens.len() * k);
        for _ in 0..gens.len() {
            coeffs.extend(field.random(rng));
        }
        let c = combine(field, gens, &coeffs);
        if c.min_poly().degree() == Some(target_deg) {
            return Ok(c);
        }
    }
    let q = field.order();
    if let Some(total) = q.checked_pow(gens.len() as u32) {
        if total <= EXHAUSTIVE_LIMIT {
            for idx in 1..total {
                let mut coeffs = Vec::with_capacity(gens.len() * k);
                let mut rem = idx;
                for _ in 0..gens.len() {
                    coeffs.extend(field.element_from_index(rem % q));
                    rem /= q;
                }
                let c = combine(field, gens, &coeffs);
                if c.min_poly().degree() == Some(target_deg) {
                    return Ok(c);
                }
            }
            return Err(Error::Internal(
                "no envelope generator inside the algebra span".into(),
            ));
        }
    }
    Err(Error::RetryBudgetExhausted("envelope generator search"))
}

/// All permutations of 0..r.
pub(crate) fn permutations(r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(r - 1) {
        for pos in 0..r {
            let mut q = p.clone();
            q.insert(pos, r - 1);
            out.push(q);
        }
    }
    out
}

/// The permutation matrix routing tensor slot s of the input to slot
/// `sigma[s]` of the output, where output slot t has size `out_dims[t]` (so
/// input slot s has size `out_dims[sigma[s]]`). Row-major multi-indices on
/// both sides, first slot slowest.
fn slot_permutation(field: &FieldSpec, out_dims: &[usize], sigma: &[usize]) -> Matrix {
    let total: usize = out_dims.iter().product();
    let slots = out_dims.len();
    let in_dims: Vec<usize> = sigma.iter().map(|&t| out_dims[t]).collect();
    let one = field.one();
    let mut m = Matrix::zero(field.clone(), total, total);
    for col in 0..total {
        let mut rem = col;
        let mut j = vec![0usize; slots];
        for s in (0..slots).rev() {
            j[s] = rem % in_dims[s];
            rem /= in_dims[s];
        }
        let mut i = vec![0usize; slots];
        for s in 0..slots {
            i[sigma[s]] = j[s];
        }
        let mut row = 0usize;
        for s in 0..slots {
            row = row * out_dims[s] + i[s];
        }
        m.set_entry(row, col, &one);
    }
    m
}
