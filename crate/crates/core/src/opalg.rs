//! Operator spaces attached to tensors: the joint kernel of a weighted
//! substitution condition, specialised to derivation algebras (all-ones
//! weights, closed under commutator) and adjoint algebras (the two-sided
//! associativity condition on bilinear maps, closed under a twisted
//! product).

use crate::linalg::SpanSolver;
use crate::tensor::{Frame, LinearForm, OperatorTuple, Tensor};
use crate::{Error, Matrix, Result};

/// How an operator space is closed under products of its elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    /// No product structure beyond the linear span.
    Linear,
    /// Closed under the slot-wise commutator.
    Lie,
    /// Closed under the twisted composition that reverses the first slot.
    TwistedAssociative,
}

/// A linear space of operator tuples cut out by a weighted substitution
/// condition against a set of tensors, with a canonical basis.
#[derive(Clone)]
pub struct OperatorSpace {
    frame: Frame,
    form: LinearForm,
    basis: Vec<OperatorTuple>,
    solver: SpanSolver,
    structure: Structure,
}

impl std::fmt::Debug for OperatorSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorSpace")
            .field("dims", &self.frame.dims())
            .field("dim", &self.basis.len())
            .field("structure", &self.structure)
            .finish()
    }
}

impl PartialEq for OperatorSpace {
    fn eq(&self, other: &Self) -> bool {
        self.frame == other.frame && self.form == other.form && self.basis == other.basis
    }
}

impl OperatorSpace {
    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn form(&self) -> &LinearForm {
        &self.form
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Canonical basis tuples; matrices on axes outside the form's support
    /// are zero.
    pub fn basis(&self) -> &[OperatorTuple] {
        &self.basis
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    /// Membership in the span of the basis.
    pub fn contains(&self, tuple: &OperatorTuple) -> bool {
        tuple.matches_frame(&self.frame) && self.solver.express(&tuple.flat()).is_some()
    }

    /// Coordinates of a tuple over the basis, when it lies in the space.
    pub fn coordinates(&self, tuple: &OperatorTuple) -> Option<Vec<u64>> {
        if !tuple.matches_frame(&self.frame) {
            return None;
        }
        self.solver.express(&tuple.flat())
    }

    /// The linear combination of basis tuples with the given coordinates
    /// (one field element per basis vector).
    pub fn tuple_from_coordinates(&self, coords: &[u64]) -> Result<OperatorTuple> {
        let k = self.frame.field().words();
        if coords.len() != self.basis.len() * k {
            return Err(Error::DimensionMismatch {
                expected: self.basis.len() * k,
                got: coords.len(),
            });
        }
        let mut acc = OperatorTuple::zero(&self.frame);
        for (b, c) in self.basis.iter().zip(coords.chunks(k)) {
            acc = acc.add(&b.scale(c))?;
        }
        Ok(acc)
    }

    /// True when the space is closed under the slot-wise commutator; used
    /// to certify the Lie structure tag.
    pub fn is_bracket_closed(&self) -> Result<bool> {
        for (i, u) in self.basis.iter().enumerate() {
            for v in &self.basis[i + 1..] {
                if !self.contains(&u.bracket(v)?) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// True when the space contains the identity tuple on its active axes
    /// and is closed under the twisted composition.
    pub fn is_twisted_closed(&self) -> Result<bool> {
        let id = self.active_identity();
        if !self.contains(&id) {
            return Ok(false);
        }
        for u in &self.basis {
            for v in &self.basis {
                if !self.contains(&twisted_compose(u, v)?) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// The identity on active axes, zero elsewhere.
    fn active_identity(&self) -> OperatorTuple {
        let mut id = OperatorTuple::zero(&self.frame);
        for &a in &self.form.active_axes() {
            let d = self.frame.dims()[a - 1];
            id = id
                .with_mat(a, Matrix::identity(self.frame.field().clone(), d))
                .expect("axis in range");
        }
        id
    }
}

/// The space of operator tuples annihilating every tensor in `tensors`
/// under the weighted substitution given by `form`: all tuples `w` with
/// `sum_a form[a] * apply_axis(t, a, w_a) = 0` for each `t`.  Matrices on
/// axes where the form vanishes are unconstrained and are pinned to zero.
pub fn op_space(tensors: &[Tensor], form: &LinearForm) -> Result<OperatorSpace> {
    if tensors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let frame = tensors[0].frame().clone();
    for t in tensors {
        if t.frame() != &frame {
            return Err(Error::FrameMismatch);
        }
    }
    if form.len() != frame.valence() {
        return Err(Error::DimensionMismatch { expected: frame.valence(), got: form.len() });
    }
    if form.field() != frame.field() {
        return Err(Error::FieldMismatch);
    }
    let f = frame.field().clone();
    let k = f.words();
    let dims = frame.dims().to_vec();
    let strides = frame.strides();
    let total = frame.total();

    let active = form.active_axes();
    let mut col_base = vec![usize::MAX; dims.len()];
    let mut n_cols = 0usize;
    for &a in &active {
        col_base[a - 1] = n_cols;
        n_cols += dims[a - 1] * dims[a - 1];
    }

    // One equation per tensor and multi-index; the unknown on axis a at
    // matrix position (j, i_a) receives coefficient form[a] * t[idx with
    // axis a moved to j].
    let mut system = Matrix::zero(f.clone(), tensors.len() * total, n_cols);
    let mut idx = vec![0usize; dims.len()];
    for (ti, t) in tensors.iter().enumerate() {
        idx.iter_mut().for_each(|x| *x = 0);
        for off in 0..total {
            let row = ti * total + off;
            for &a in &active {
                let d = dims[a - 1];
                let stride = strides[a - 1];
                let ia = idx[a - 1];
                let alpha = form.coeff(a)?;
                for j in 0..d {
                    let ent_off = (off + j * stride) - ia * stride;
                    let entry = &t.flat()[ent_off * k..(ent_off + 1) * k];
                    let coeff = f.mul(alpha, entry);
                    if coeff.iter().any(|&w| w != 0) {
                        system.set_entry(row, col_base[a - 1] + j * d + ia, &coeff);
                    }
                }
            }
            // Odometer increment, last axis fastest.
            for a in (0..dims.len()).rev() {
                idx[a] += 1;
                if idx[a] < dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    let kern = system.kernel();
    let mut basis = Vec::with_capacity(kern.rows());
    for r in 0..kern.rows() {
        let row = kern.row(r);
        let mut tuple = OperatorTuple::zero(&frame);
        for &a in &active {
            let d = dims[a - 1];
            let base = col_base[a - 1];
            let chunk = row[base * k..(base + d * d) * k].to_vec();
            tuple = tuple.with_mat(a, Matrix::from_flat(f.clone(), d, d, chunk))?;
        }
        basis.push(tuple);
    }

    // Self-check: every basis tuple annihilates every input tensor.
    for b in &basis {
        for t in tensors {
            if !t.apply_operator(b, form)?.is_zero() {
                return Err(Error::Internal("operator space basis fails its own condition".into()));
            }
        }
    }

    let full_len: usize = dims.iter().map(|&d| d * d).sum();
    let mut solver = SpanSolver::new(f, full_len);
    for b in &basis {
        solver.insert(&b.flat());
    }

    Ok(OperatorSpace { frame, form: form.clone(), basis, solver, structure: Structure::Linear })
}

/// The derivation algebra of a tensor: operator tuples whose weighted
/// substitution with all-ones weights annihilates it.  The result is
/// verified to be closed under the slot-wise commutator and tagged
/// accordingly.
pub fn derivation_algebra(t: &Tensor) -> Result<OperatorSpace> {
    let form = LinearForm::derivation(t.field().clone(), t.valence())?;
    let mut sp = op_space(std::slice::from_ref(t), &form)?;
    if !sp.is_bracket_closed()? {
        return Err(Error::NotBracketClosed);
    }
    sp.structure = Structure::Lie;
    Ok(sp)
}

/// The adjoint algebra of a valence-3 tensor read as a bilinear map: pairs
/// `(a, b)` on the two argument axes with `t(a u, v, .) = t(u, b v, .)`.
/// The result is verified to contain the identity pair and to be closed
/// under the twisted composition, and tagged accordingly.
pub fn adjoint_algebra(t: &Tensor) -> Result<OperatorSpace> {
    if t.valence() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: t.valence() });
    }
    let form = LinearForm::adjoint(t.field().clone())?;
    let mut sp = op_space(std::slice::from_ref(t), &form)?;
    if !sp.is_twisted_closed()? {
        return Err(Error::NotProductClosed);
    }
    sp.structure = Structure::TwistedAssociative;
    Ok(sp)
}

/// True when the tuple is a derivation of the tensor.
pub fn is_derivation(t: &Tensor, tuple: &OperatorTuple) -> Result<bool> {
    let form = LinearForm::derivation(t.field().clone(), t.valence())?;
    Ok(t.apply_operator(tuple, &form)?.is_zero())
}

/// The composition under which adjoint pairs are closed: the first slot
/// multiplies in reverse order, the second in forward order, matching
/// `t(a'a u, v) = t(a u, b'v) = t(u, b b' v)`.  Slots past the second are
/// zeroed.
pub fn twisted_compose(u: &OperatorTuple, v: &OperatorTuple) -> Result<OperatorTuple> {
    if u.len() != v.len() || u.len() < 2 {
        return Err(Error::FrameMismatch);
    }
    let mut mats = vec![v.mat(1)?.matmul(u.mat(1)?), u.mat(2)?.matmul(v.mat(2)?)];
    for axis in 3..=u.len() {
        let d = u.mat(axis)?.rows();
        mats.push(Matrix::zero(u.field().clone(), d, d));
    }
    OperatorTuple::new(mats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::FieldSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf(p: u64) -> FieldSpec {
        FieldSpec::make_field(p, 1).unwrap()
    }

    #[test]
    fn derivations_of_the_dot_pairing_have_one_extra_dimension() {
        // Pairs (d2, d1) with d1 = lambda - transpose(d2): n^2 + 1 dims.
        for n in 2..=3usize {
            let f = gf(5);
            let t = examples::dot_pairing(&f, n).unwrap();
            let der = derivation_algebra(&t).unwrap();
            assert_eq!(der.dim(), n * n + 1);
            assert_eq!(der.structure(), Structure::Lie);
        }
    }

    #[test]
    fn derivations_of_matrix_multiplication_have_gl_sum_dimension() {
        let f = gf(5);
        for (a, b, c) in [(2usize, 2usize, 2usize), (2, 2, 3)] {
            let t = examples::matmul(&f, a, b, c).unwrap();
            let der = derivation_algebra(&t).unwrap();
            assert_eq!(der.dim(), a * a + b * b + c * c - 1);
        }
    }

    #[test]
    fn derivations_of_the_zero_tensor_fill_the_whole_operator_space() {
        let f = gf(5);
        let fr = crate::Frame::new(f.clone(), &[2, 2, 2]).unwrap();
        let t = crate::Tensor::zero(fr);
        let der = derivation_algebra(&t).unwrap();
        assert_eq!(der.dim(), 4 + 4 + 4);
        // The adjoint condition only constrains the two argument axes.
        let adj = adjoint_algebra(&t).unwrap();
        assert_eq!(adj.dim(), 4 + 4);
        for b in adj.basis() {
            assert!(b.mat(3).unwrap().is_zero());
        }
    }

    #[test]
    fn adjoint_pairs_of_the_dot_pairing_are_transpose_pairs() {
        let f = gf(5);
        for n in 2..=3usize {
            let t = examples::dot_pairing(&f, n).unwrap();
            let adj = adjoint_algebra(&t).unwrap();
            assert_eq!(adj.dim(), n * n);
            assert_eq!(adj.structure(), Structure::TwistedAssociative);
            for b in adj.basis() {
                assert_eq!(b.mat(2).unwrap(), &b.mat(1).unwrap().transpose());
            }
        }
    }

    #[test]
    fn adjoint_algebra_of_matrix_multiplication_is_the_inner_factor() {
        // Right-multiplication on the first slot against left-multiplication
        // on the second: a copy of the b-by-b matrix algebra.
        let f = gf(5);
        let t = examples::matmul(&f, 2, 2, 2).unwrap();
        let adj = adjoint_algebra(&t).unwrap();
        assert_eq!(adj.dim(), 4);
        let t2 = examples::matmul(&f, 2, 3, 2).unwrap();
        let adj2 = adjoint_algebra(&t2).unwrap();
        assert_eq!(adj2.dim(), 9);
    }

    #[test]
    fn scalar_tuples_are_derivations_exactly_when_weights_cancel() {
        let f = gf(5);
        let fr = crate::Frame::new(f.clone(), &[2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = crate::Tensor::random(fr.clone(), &mut rng);
        assert!(!t.is_zero());
        for a1 in 0..5u64 {
            for a2 in 0..5u64 {
                let tuple = OperatorTuple::new(vec![
                    Matrix::scalar(f.clone(), 2, &[a1]),
                    Matrix::scalar(f.clone(), 2, &[a2]),
                ])
                .unwrap();
                let expected = (a1 + a2) % 5 == 0;
                assert_eq!(is_derivation(&t, &tuple).unwrap(), expected);
            }
        }
    }

    #[test]
    fn more_tensors_can_only_shrink_the_operator_space() {
        let f = gf(5);
        let fr = crate::Frame::new(f.clone(), &[2, 2, 2]).unwrap();
        let form = LinearForm::derivation(f.clone(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ts: Vec<crate::Tensor> =
            (0..3).map(|_| crate::Tensor::random(fr.clone(), &mut rng)).collect();
        let s1 = op_space(&ts[..1], &form).unwrap();
        let s2 = op_space(&ts[..2], &form).unwrap();
        let s3 = op_space(&ts, &form).unwrap();
        assert!(s1.dim() >= s2.dim() && s2.dim() >= s3.dim());
        for b in s2.basis() {
            assert!(s1.contains(b));
        }
        for b in s3.basis() {
            assert!(s2.contains(b));
        }
    }

    #[test]
    fn basis_elements_are_derivations_and_random_tuples_are_not() {
        let f = gf(5);
        let t = examples::matmul(&f, 2, 2, 2).unwrap();
        let der = derivation_algebra(&t).unwrap();
        for b in der.basis() {
            assert!(is_derivation(&t, b).unwrap());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut rejected = 0;
        for _ in 0..20 {
            let tuple = OperatorTuple::new(
                t.dims().iter().map(|&d| Matrix::random(f.clone(), d, d, &mut rng)).collect(),
            )
            .unwrap();
            if !is_derivation(&t, &tuple).unwrap() {
                rejected += 1;
            }
        }
        assert!(rejected >= 19);
    }

    #[test]
    fn heisenberg_derivation_dimension_grows_linearly() {
        let t = examples::heisenberg(5).unwrap();
        let der = derivation_algebra(&t).unwrap();
        assert_eq!(der.dim(), 6 * 5);
    }

    #[test]
    fn coordinates_round_trip_through_the_basis() {
        let f = gf(7);
        let t = examples::matmul(&f, 2, 2, 2).unwrap();
        let der = derivation_algebra(&t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let coords: Vec<u64> = (0..der.dim()).map(|_| f.random(&mut rng)[0]).collect();
        let tuple = der.tuple_from_coordinates(&coords).unwrap();
        assert!(der.contains(&tuple));
        let back = der.coordinates(&tuple).unwrap();
        let again = der.tuple_from_coordinates(&back).unwrap();
        assert_eq!(again, tuple);
    }

    #[test]
    fn generic_small_bilinear_maps_have_commutant_sized_adjoints() {
        // With both slices invertible the adjoint pairs are determined by
        // matrices commuting with the ratio of the two slices, generically a
        // two-dimensional algebra on a 2x2x2 frame.
        let f = gf(5);
        let fr = crate::Frame::new(f.clone(), &[2, 2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut dim_two = 0;
        for _ in 0..50 {
            let t = crate::Tensor::random(fr.clone(), &mut rng);
            let adj = adjoint_algebra(&t).unwrap();
            assert!(adj.dim() >= 1);
            if adj.dim() == 2 {
                dim_two += 1;
            }
        }
        assert!(dim_two >= 25, "commutant lines should dominate, saw {dim_two}");
    }

    #[test]
    fn operator_spaces_work_over_extension_fields() {
        let f = FieldSpec::make_field(2, 2).unwrap();
        let t = examples::dot_pairing(&f, 2).unwrap();
        let der = derivation_algebra(&t).unwrap();
        assert_eq!(der.dim(), 5);
        let adj = adjoint_algebra(&t).unwrap();
        assert_eq!(adj.dim(), 4);
    }

    #[test]
    fn twisted_composition_reverses_only_the_first_slot() {
        let f = gf(5);
        let t = examples::matmul(&f, 2, 2, 2).unwrap();
        let adj = adjoint_algebra(&t).unwrap();
        let u = &adj.basis()[0];
        let v = &adj.basis()[adj.dim() - 1];
        let w = twisted_compose(u, v).unwrap();
        assert_eq!(w.mat(1).unwrap(), &v.mat(1).unwrap().matmul(u.mat(1).unwrap()));
        assert_eq!(w.mat(2).unwrap(), &u.mat(2).unwrap().matmul(v.mat(2).unwrap()));
        assert!(adj.contains(&w));
    }
}
