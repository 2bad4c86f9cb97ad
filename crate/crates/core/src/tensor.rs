//! Dense multilinear forms over finite fields.
//!
//! A tensor here is a multilinear map on a product of column-vector spaces,
//! stored as a flat coordinate array.  Axis numbering is 1-based and axis 1
//! varies slowest in the flat layout (row-major over the dimension vector).
//! Bilinear maps `U x V -> W` are stored as trilinear forms with the codomain
//! contributing the *last* axis through its dual basis; see [`BimapView`] for
//! the dictionary between the two pictures.

use rand::Rng;

use crate::{Error, FieldSpec, Matrix, Result};

/// The shape of a tensor: a coefficient field together with an ordered list
/// of axis dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    field: FieldSpec,
    dims: Vec<usize>,
}

impl Frame {
    /// A frame with the given axis dimensions.  Every axis must be nonempty
    /// and there must be at least one axis.
    pub fn new(field: FieldSpec, dims: &[usize]) -> Result<Frame> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::EmptyInput);
        }
        Ok(Frame { field, dims: dims.to_vec() })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of axes (the valence of tensors over this frame).
    pub fn valence(&self) -> usize {
        self.dims.len()
    }

    /// Dimension of one axis, 1-based.
    pub fn dim(&self, axis: usize) -> Result<usize> {
        if axis == 0 || axis > self.dims.len() {
            return Err(Error::BadAxis { axis, axes: self.dims.len() });
        }
        Ok(self.dims[axis - 1])
    }

    /// Total number of coordinate entries, the product of all dimensions.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Entry strides in the flat layout: axis 1 is slowest, the last axis
    /// has stride 1.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for a in (0..self.dims.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.dims[a + 1];
        }
        s
    }

    /// Flat entry offset of a multi-index (0-based components).
    pub fn offset(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dims.len() {
            return Err(Error::DimensionMismatch { expected: self.dims.len(), got: idx.len() });
        }
        let mut off = 0usize;
        for (a, (&i, &d)) in idx.iter().zip(&self.dims).enumerate() {
            if i >= d {
                return Err(Error::BadAxis { axis: a + 1, axes: self.dims.len() });
            }
            off = off * d + i;
        }
        Ok(off)
    }
}

/// A dense tensor: a frame plus one field element per multi-index, each
/// element occupying `field.words()` machine words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor {
    frame: Frame,
    data: Vec<u64>,
}

impl Tensor {
    /// The zero tensor over a frame.
    pub fn zero(frame: Frame) -> Tensor {
        let words = frame.total() * frame.field.words();
        Tensor { frame, data: vec![0; words] }
    }

    /// Build a tensor from a flat coordinate array (axis 1 slowest), one
    /// field element per entry in word representation.
    pub fn from_flat(frame: Frame, data: Vec<u64>) -> Result<Tensor> {
        let k = frame.field.words();
        if data.len() != frame.total() * k {
            return Err(Error::DimensionMismatch {
                expected: frame.total() * k,
                got: data.len(),
            });
        }
        let p = frame.field.p();
        if data.iter().any(|&w| w >= p) {
            return Err(Error::Malformed("tensor entry out of range".into()));
        }
        Ok(Tensor { frame, data })
    }

    /// Build a tensor from signed integer entries (flat, axis 1 slowest),
    /// reduced into the prime subfield.
    pub fn from_ints(frame: Frame, entries: &[i64]) -> Result<Tensor> {
        if entries.len() != frame.total() {
            return Err(Error::DimensionMismatch { expected: frame.total(), got: entries.len() });
        }
        let k = frame.field.words();
        let p = frame.field.p() as i64;
        let mut data = vec![0u64; entries.len() * k];
        for (c, &e) in data.chunks_mut(k).zip(entries) {
            c[0] = e.rem_euclid(p) as u64;
        }
        Ok(Tensor { frame, data })
    }

    /// A tensor with entries drawn uniformly at random.
    pub fn random(frame: Frame, rng: &mut impl Rng) -> Tensor {
        let k = frame.field.words();
        let mut data = vec![0u64; frame.total() * k];
        for c in data.chunks_mut(k) {
            c.copy_from_slice(&frame.field.random(rng));
        }
        Tensor { frame, data }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn field(&self) -> &FieldSpec {
        &self.frame.field
    }

    pub fn dims(&self) -> &[usize] {
        &self.frame.dims
    }

    pub fn valence(&self) -> usize {
        self.frame.dims.len()
    }

    /// Flat coordinate data, axis 1 slowest, `words()` words per entry.
    pub fn flat(&self) -> &[u64] {
        &self.data
    }

    /// One entry as a field-element word slice.
    pub fn entry(&self, idx: &[usize]) -> Result<&[u64]> {
        let k = self.frame.field.words();
        let off = self.frame.offset(idx)?;
        Ok(&self.data[off * k..(off + 1) * k])
    }

    /// Overwrite one entry.
    pub fn set_entry(&mut self, idx: &[usize], value: &[u64]) -> Result<()> {
        let k = self.frame.field.words();
        let off = self.frame.offset(idx)?;
        self.data[off * k..(off + 1) * k].copy_from_slice(value);
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.frame != other.frame {
            return Err(Error::FrameMismatch);
        }
        let f = &self.frame.field;
        let k = f.words();
        let mut out = self.clone();
        for (c, d) in out.data.chunks_mut(k).zip(other.data.chunks(k)) {
            let cur = c.to_vec();
            f.add_into(&cur, d, c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        if self.frame != other.frame {
            return Err(Error::FrameMismatch);
        }
        let f = &self.frame.field;
        let k = f.words();
        let mut out = self.clone();
        for (c, d) in out.data.chunks_mut(k).zip(other.data.chunks(k)) {
            let cur = c.to_vec();
            f.sub_into(&cur, d, c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Tensor {
        let f = &self.frame.field;
        let k = f.words();
        let mut out = self.clone();
        for c in out.data.chunks_mut(k) {
            let cur = c.to_vec();
            f.neg_into(&cur, c);
        }
        out
    }

    pub fn scale(&self, s: &[u64]) -> Tensor {
        let f = &self.frame.field;
        let k = f.words();
        let mut out = self.clone();
        for c in out.data.chunks_mut(k) {
            let cur = c.to_vec();
            f.mul_into(&cur, s, c);
        }
        out
    }

    /// Evaluate the multilinear form at one vector per axis.  Each vector is
    /// given in word representation with `dims[a] * words()` words.
    pub fn evaluate(&self, vectors: &[Vec<u64>]) -> Result<Vec<u64>> {
        let f = &self.frame.field;
        let k = f.words();
        if vectors.len() != self.valence() {
            return Err(Error::DimensionMismatch {
                expected: self.valence(),
                got: vectors.len(),
            });
        }
        for (a, v) in vectors.iter().enumerate() {
            if v.len() != self.frame.dims[a] * k {
                return Err(Error::DimensionMismatch {
                    expected: self.frame.dims[a] * k,
                    got: v.len(),
                });
            }
        }
        // Contract the fastest axis first; each pass shrinks the coordinate
        // array by one axis.
        let mut cur = self.data.clone();
        for (a, v) in vectors.iter().enumerate().rev() {
            let d = self.frame.dims[a];
            let blocks = cur.len() / (d * k);
            let mut next = vec![0u64; blocks * k];
            for b in 0..blocks {
                let acc = &mut next[b * k..(b + 1) * k];
                for j in 0..d {
                    let entry = &cur[(b * d + j) * k..(b * d + j + 1) * k];
                    f.mul_add_into(entry, &v[j * k..(j + 1) * k], acc);
                }
            }
            cur = next;
        }
        debug_assert_eq!(cur.len(), k);
        Ok(cur)
    }

    /// Substitute `m * v` for the argument on one axis (1-based): the result
    /// satisfies `s(.., v, ..) = t(.., m v, ..)` with `m` square of the axis
    /// dimension.
    pub fn apply_axis(&self, axis: usize, m: &Matrix) -> Result<Tensor> {
        let d = self.frame.dim(axis)?;
        let f = &self.frame.field;
        if m.field() != f {
            return Err(Error::FieldMismatch);
        }
        if m.rows() != d || m.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: m.rows().max(m.cols()) });
        }
        let k = f.words();
        let stride = self.frame.strides()[axis - 1];
        let outer = self.frame.total() / (d * stride);
        let mut out = vec![0u64; self.data.len()];
        if k == 1 {
            // Accumulate in 128 bits; each product stays below 2^62.
            let p = f.p();
            for o in 0..outer {
                let base = o * d * stride;
                for s in 0..stride {
                    for i in 0..d {
                        let mut acc: u128 = 0;
                        for j in 0..d {
                            acc += self.data[base + j * stride + s] as u128
                                * m.entry(j, i)[0] as u128;
                        }
                        out[base + i * stride + s] = (acc % p as u128) as u64;
                    }
                }
            }
        } else {
            for o in 0..outer {
                let base = o * d * stride;
                for s in 0..stride {
                    for i in 0..d {
                        let acc_off = (base + i * stride + s) * k;
                        for j in 0..d {
                            let ent_off = (base + j * stride + s) * k;
                            let entry = self.data[ent_off..ent_off + k].to_vec();
                            f.mul_add_into(
                                &entry,
                                m.entry(j, i),
                                &mut out[acc_off..acc_off + k],
                            );
                        }
                    }
                }
            }
        }
        Ok(Tensor { frame: self.frame.clone(), data: out })
    }

    /// Push a tuple of matrices into the argument slots: the result `s`
    /// satisfies `s(v_1, .., v_l) = t(m_1 v_1, .., m_l v_l)`.  This is a
    /// right action: acting by `phi` and then `psi` equals acting by the
    /// slot-wise product `phi * psi`.
    pub fn act(&self, phi: &OperatorTuple) -> Result<Tensor> {
        if phi.mats.len() != self.valence() {
            return Err(Error::DimensionMismatch {
                expected: self.valence(),
                got: phi.mats.len(),
            });
        }
        let mut cur = self.clone();
        for (a, m) in phi.mats.iter().enumerate() {
            cur = cur.apply_axis(a + 1, m)?;
        }
        Ok(cur)
    }

    /// Apply a weighted operator tuple: the sum over axes of
    /// `coeff[a] * apply_axis(t, a, m_a)`.  Axes with coefficient zero are
    /// skipped, so their matrices are ignored.
    pub fn apply_operator(&self, omega: &OperatorTuple, form: &LinearForm) -> Result<Tensor> {
        if omega.mats.len() != self.valence() || form.coeffs.len() != self.valence() {
            return Err(Error::DimensionMismatch {
                expected: self.valence(),
                got: omega.mats.len().max(form.coeffs.len()),
            });
        }
        if form.field != self.frame.field {
            return Err(Error::FieldMismatch);
        }
        let mut acc = Tensor::zero(self.frame.clone());
        for a in 0..self.valence() {
            let c = &form.coeffs[a];
            if c.iter().all(|&w| w == 0) {
                continue;
            }
            let term = self.apply_axis(a + 1, &omega.mats[a])?.scale(c);
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// The matrix whose row `j` lists the entries with the given axis
    /// (1-based) fixed at `j`, remaining indices in row-major order.
    pub fn flatten(&self, axis: usize) -> Result<Matrix> {
        let d = self.frame.dim(axis)?;
        let k = self.frame.field.words();
        let stride = self.frame.strides()[axis - 1];
        let outer = self.frame.total() / (d * stride);
        let cols = outer * stride;
        let mut data = vec![0u64; d * cols * k];
        for o in 0..outer {
            for j in 0..d {
                for s in 0..stride {
                    let src = ((o * d + j) * stride + s) * k;
                    let dst = (j * cols + o * stride + s) * k;
                    data[dst..dst + k].copy_from_slice(&self.data[src..src + k]);
                }
            }
        }
        Ok(Matrix::from_flat(self.frame.field.clone(), d, cols, data))
    }

    /// Per-axis nondegeneracy: entry `a` is true when no nonzero vector on
    /// axis `a+1` annihilates the form against all choices on the other
    /// axes.
    pub fn nondegeneracy_profile(&self) -> Result<Vec<bool>> {
        let mut profile = Vec::with_capacity(self.valence());
        for a in 1..=self.valence() {
            let m = self.flatten(a)?;
            profile.push(m.rank() == self.frame.dims[a - 1]);
        }
        Ok(profile)
    }

    /// True when every axis is nondegenerate.
    pub fn is_nondegenerate(&self) -> Result<bool> {
        Ok(self.nondegeneracy_profile()?.iter().all(|&b| b))
    }
}

/// A tuple of square matrices, one per axis of a frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorTuple {
    mats: Vec<Matrix>,
}

impl OperatorTuple {
    pub fn new(mats: Vec<Matrix>) -> Result<OperatorTuple> {
        if mats.is_empty() {
            return Err(Error::EmptyInput);
        }
        let f = mats[0].field().clone();
        for m in &mats {
            if m.field() != &f {
                return Err(Error::FieldMismatch);
            }
            if m.rows() != m.cols() {
                return Err(Error::NotSquare);
            }
        }
        Ok(OperatorTuple { mats })
    }

    /// The all-zero tuple over a frame.
    pub fn zero(frame: &Frame) -> OperatorTuple {
        let mats = frame
            .dims
            .iter()
            .map(|&d| Matrix::zero(frame.field.clone(), d, d))
            .collect();
        OperatorTuple { mats }
    }

    /// The tuple of identity matrices over a frame.
    pub fn identity(frame: &Frame) -> OperatorTuple {
        let mats = frame
            .dims
            .iter()
            .map(|&d| Matrix::identity(frame.field.clone(), d))
            .collect();
        OperatorTuple { mats }
    }

    pub fn mats(&self) -> &[Matrix] {
        &self.mats
    }

    pub fn mat(&self, axis: usize) -> Result<&Matrix> {
        if axis == 0 || axis > self.mats.len() {
            return Err(Error::BadAxis { axis, axes: self.mats.len() });
        }
        Ok(&self.mats[axis - 1])
    }

    /// Replace the matrix on one axis (1-based).
    pub fn with_mat(&self, axis: usize, m: Matrix) -> Result<OperatorTuple> {
        if axis == 0 || axis > self.mats.len() {
            return Err(Error::BadAxis { axis, axes: self.mats.len() });
        }
        let mut mats = self.mats.clone();
        mats[axis - 1] = m;
        OperatorTuple::new(mats)
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn field(&self) -> &FieldSpec {
        self.mats[0].field()
    }

    pub fn matches_frame(&self, frame: &Frame) -> bool {
        self.mats.len() == frame.dims.len()
            && self.mats.iter().zip(&frame.dims).all(|(m, &d)| m.rows() == d)
            && self.mats.iter().all(|m| m.field() == &frame.field)
    }

    pub fn is_zero(&self) -> bool {
        self.mats.iter().all(Matrix::is_zero)
    }

    fn check_shape(&self, other: &OperatorTuple) -> Result<()> {
        if self.mats.len() != other.mats.len()
            || self.mats.iter().zip(&other.mats).any(|(a, b)| a.rows() != b.rows())
        {
            return Err(Error::FrameMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &OperatorTuple) -> Result<OperatorTuple> {
        self.check_shape(other)?;
        let mats = self.mats.iter().zip(&other.mats).map(|(a, b)| a.add(b)).collect();
        Ok(OperatorTuple { mats })
    }

    pub fn sub(&self, other: &OperatorTuple) -> Result<OperatorTuple> {
        self.check_shape(other)?;
        let mats = self.mats.iter().zip(&other.mats).map(|(a, b)| a.sub(b)).collect();
        Ok(OperatorTuple { mats })
    }

    pub fn scale(&self, s: &[u64]) -> OperatorTuple {
        OperatorTuple { mats: self.mats.iter().map(|m| m.scale(s)).collect() }
    }

    pub fn neg(&self) -> OperatorTuple {
        OperatorTuple { mats: self.mats.iter().map(Matrix::neg).collect() }
    }

    /// Slot-wise matrix product.
    pub fn compose(&self, other: &OperatorTuple) -> Result<OperatorTuple> {
        self.check_shape(other)?;
        let mats = self.mats.iter().zip(&other.mats).map(|(a, b)| a.matmul(b)).collect();
        Ok(OperatorTuple { mats })
    }

    /// Slot-wise commutator `self * other - other * self`.
    pub fn bracket(&self, other: &OperatorTuple) -> Result<OperatorTuple> {
        self.check_shape(other)?;
        let mats = self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| a.matmul(b).sub(&b.matmul(a)))
            .collect();
        Ok(OperatorTuple { mats })
    }

    /// Slot-wise inverse; fails when any component is singular.
    pub fn inverse(&self) -> Result<OperatorTuple> {
        let mats = self.mats.iter().map(Matrix::inverse).collect::<Result<Vec<_>>>()?;
        Ok(OperatorTuple { mats })
    }

    pub fn is_invertible(&self) -> bool {
        self.mats.iter().all(Matrix::is_invertible)
    }

    /// All matrix entries concatenated, axis 1 first, each matrix row-major.
    pub fn flat(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for m in &self.mats {
            out.extend_from_slice(m.flat());
        }
        out
    }

    /// Rebuild a tuple from the layout produced by [`OperatorTuple::flat`].
    pub fn from_flat(frame: &Frame, words: &[u64]) -> Result<OperatorTuple> {
        let k = frame.field.words();
        let expected: usize = frame.dims.iter().map(|&d| d * d * k).sum();
        if words.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: words.len() });
        }
        let mut mats = Vec::with_capacity(frame.dims.len());
        let mut off = 0usize;
        for &d in &frame.dims {
            let n = d * d * k;
            mats.push(Matrix::from_flat(
                frame.field.clone(),
                d,
                d,
                words[off..off + n].to_vec(),
            ));
            off += n;
        }
        Ok(OperatorTuple { mats })
    }
}

/// A formal linear combination of the axis substitution slots, fixing which
/// axes an operator space constrains and with what sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearForm {
    field: FieldSpec,
    coeffs: Vec<Vec<u64>>,
}

impl LinearForm {
    /// A form from one coefficient per axis; at least one must be nonzero.
    pub fn new(field: FieldSpec, coeffs: Vec<Vec<u64>>) -> Result<LinearForm> {
        let k = field.words();
        if coeffs.is_empty() {
            return Err(Error::EmptyInput);
        }
        for c in &coeffs {
            if c.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: c.len() });
            }
        }
        if coeffs.iter().all(|c| c.iter().all(|&w| w == 0)) {
            return Err(Error::BadLinearForm);
        }
        Ok(LinearForm { field, coeffs })
    }

    /// Convenience constructor from signed integers.
    pub fn from_ints(field: FieldSpec, coeffs: &[i64]) -> Result<LinearForm> {
        let k = field.words();
        let p = field.p() as i64;
        let cs = coeffs
            .iter()
            .map(|&c| {
                let mut w = vec![0u64; k];
                w[0] = c.rem_euclid(p) as u64;
                w
            })
            .collect();
        LinearForm::new(field, cs)
    }

    /// The all-ones form `x_1 + .. + x_l`, whose operator space is the
    /// derivation algebra.
    pub fn derivation(field: FieldSpec, valence: usize) -> Result<LinearForm> {
        LinearForm::from_ints(field, &vec![1i64; valence])
    }

    /// The form `x_2 - x_1` on three axes, whose operator space is the
    /// adjoint algebra of a bilinear map in trilinear storage.
    pub fn adjoint(field: FieldSpec) -> Result<LinearForm> {
        LinearForm::from_ints(field, &[-1, 1, 0])
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn coeffs(&self) -> &[Vec<u64>] {
        &self.coeffs
    }

    pub fn coeff(&self, axis: usize) -> Result<&[u64]> {
        if axis == 0 || axis > self.coeffs.len() {
            return Err(Error::BadAxis { axis, axes: self.coeffs.len() });
        }
        Ok(&self.coeffs[axis - 1])
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Axes with nonzero coefficient, 1-based, increasing.
    pub fn active_axes(&self) -> Vec<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.iter().any(|&w| w != 0))
            .map(|(a, _)| a + 1)
            .collect()
    }
}

/// A valence-3 tensor read as a bilinear map `V_2 x V_1 -> V_0`.
///
/// Axis 1 carries `V_2` (the left argument), axis 2 carries `V_1` (the
/// right argument), and axis 3 indexes the dual basis of the codomain
/// `V_0`: entry `(i, j, m)` is the `m`-th coordinate of the product of the
/// `i`-th and `j`-th basis vectors.  Under this dictionary a triple
/// `(d_0, d_1, d_2)` acting on codomain, right, and left slots corresponds
/// to the axis tuple `(d_2, d_1, -transpose(d_0))`: the codomain operator
/// acts on dual coordinates, which transposes it and flips its sign in the
/// defining identity.
pub struct BimapView<'a> {
    t: &'a Tensor,
}

impl<'a> BimapView<'a> {
    pub fn new(t: &'a Tensor) -> Result<BimapView<'a>> {
        if t.valence() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: t.valence() });
        }
        Ok(BimapView { t })
    }

    pub fn tensor(&self) -> &Tensor {
        self.t
    }

    /// Dimension of the left argument space `V_2`.
    pub fn left_dim(&self) -> usize {
        self.t.dims()[0]
    }

    /// Dimension of the right argument space `V_1`.
    pub fn right_dim(&self) -> usize {
        self.t.dims()[1]
    }

    /// Dimension of the codomain `V_0`.
    pub fn codomain_dim(&self) -> usize {
        self.t.dims()[2]
    }

    /// The product of two argument vectors as a codomain vector.
    pub fn eval(&self, left: &[u64], right: &[u64]) -> Result<Vec<u64>> {
        let f = self.t.field();
        let k = f.words();
        let (d2, d1, d0) = (self.left_dim(), self.right_dim(), self.codomain_dim());
        if left.len() != d2 * k || right.len() != d1 * k {
            return Err(Error::DimensionMismatch {
                expected: d2 * k,
                got: left.len().min(right.len()),
            });
        }
        let mut out = vec![0u64; d0 * k];
        for i in 0..d2 {
            if left[i * k..(i + 1) * k].iter().all(|&w| w == 0) {
                continue;
            }
            for j in 0..d1 {
                let mut c = vec![0u64; k];
                f.mul_into(&left[i * k..(i + 1) * k], &right[j * k..(j + 1) * k], &mut c);
                if c.iter().all(|&w| w == 0) {
                    continue;
                }
                for m in 0..d0 {
                    let entry = self.t.entry(&[i, j, m])?.to_vec();
                    f.mul_add_into(&entry, &c, &mut out[m * k..(m + 1) * k]);
                }
            }
        }
        Ok(out)
    }

    /// Matrix of `v -> left * v` from the right space to the codomain.
    pub fn left_mult(&self, left: &[u64]) -> Result<Matrix> {
        let f = self.t.field().clone();
        let k = f.words();
        let (d1, d0) = (self.right_dim(), self.codomain_dim());
        let mut data = vec![0u64; d0 * d1 * k];
        for j in 0..d1 {
            let mut e = vec![0u64; d1 * k];
            e[j * k] = 1;
            let col = self.eval(left, &e)?;
            for m in 0..d0 {
                data[(m * d1 + j) * k..(m * d1 + j + 1) * k]
                    .copy_from_slice(&col[m * k..(m + 1) * k]);
            }
        }
        Ok(Matrix::from_flat(f, d0, d1, data))
    }

    /// Matrix of `u -> u * right` from the left space to the codomain.
    pub fn right_mult(&self, right: &[u64]) -> Result<Matrix> {
        let f = self.t.field().clone();
        let k = f.words();
        let (d2, d0) = (self.left_dim(), self.codomain_dim());
        let mut data = vec![0u64; d0 * d2 * k];
        for i in 0..d2 {
            let mut e = vec![0u64; d2 * k];
            e[i * k] = 1;
            let col = self.eval(&e, right)?;
            for m in 0..d0 {
                data[(m * d2 + i) * k..(m * d2 + i + 1) * k]
                    .copy_from_slice(&col[m * k..(m + 1) * k]);
            }
        }
        Ok(Matrix::from_flat(f, d0, d2, data))
    }

    /// The axis tuple corresponding to a bilinear-map triple
    /// `(d_0 on codomain, d_1 on right, d_2 on left)`.
    pub fn tuple_from_parts(
        &self,
        d0: &Matrix,
        d1: &Matrix,
        d2: &Matrix,
    ) -> Result<OperatorTuple> {
        if d0.rows() != self.codomain_dim()
            || d1.rows() != self.right_dim()
            || d2.rows() != self.left_dim()
        {
            return Err(Error::FrameMismatch);
        }
        OperatorTuple::new(vec![d2.clone(), d1.clone(), d0.transpose().neg()])
    }

    /// Recover the bilinear-map triple `(d_0, d_1, d_2)` from an axis tuple.
    pub fn parts_from_tuple(&self, omega: &OperatorTuple) -> Result<(Matrix, Matrix, Matrix)> {
        if omega.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: omega.len() });
        }
        let d0 = omega.mat(3)?.transpose().neg();
        Ok((d0, omega.mat(2)?.clone(), omega.mat(1)?.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf(p: u64) -> FieldSpec {
        FieldSpec::make_field(p, 1).unwrap()
    }

    fn vec_from_ints(f: &FieldSpec, ints: &[i64]) -> Vec<u64> {
        let k = f.words();
        let p = f.p() as i64;
        let mut out = vec![0u64; ints.len() * k];
        for (c, &v) in out.chunks_mut(k).zip(ints) {
            c[0] = v.rem_euclid(p) as u64;
        }
        out
    }

    fn random_vector(f: &FieldSpec, d: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
        (0..d).flat_map(|_| f.random(rng)).collect()
    }

    #[test]
    fn strides_and_offsets_row_major_axis_one_slowest() {
        let f = gf(5);
        let fr = Frame::new(f, &[2, 3, 4]).unwrap();
        assert_eq!(fr.strides(), vec![12, 4, 1]);
        assert_eq!(fr.offset(&[0, 0, 0]).unwrap(), 0);
        assert_eq!(fr.offset(&[1, 0, 0]).unwrap(), 12);
        assert_eq!(fr.offset(&[0, 2, 3]).unwrap(), 11);
        assert_eq!(fr.offset(&[1, 2, 3]).unwrap(), 23);
        assert!(fr.offset(&[2, 0, 0]).is_err());
        assert!(fr.offset(&[0, 0]).is_err());
    }

    #[test]
    fn dot_product_evaluates_by_coordinate_pairing() {
        let f = gf(5);
        let t = examples::dot(&f, 2).unwrap();
        let u = vec_from_ints(&f, &[1, 2]);
        let v = vec_from_ints(&f, &[3, 4]);
        // 1*3 + 2*4 = 11 = 1 mod 5.
        assert_eq!(t.evaluate(&[u, v]).unwrap(), vec![1]);
    }

    #[test]
    fn evaluation_is_multilinear_in_every_slot() {
        let f = gf(7);
        let fr = Frame::new(f.clone(), &[2, 3, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let t = Tensor::random(fr.clone(), &mut rng);
            for slot in 0..3 {
                let d = fr.dims()[slot];
                let mut vs: Vec<Vec<u64>> =
                    (0..3).map(|a| random_vector(&f, fr.dims()[a], &mut rng)).collect();
                let u = random_vector(&f, d, &mut rng);
                let lam = f.random(&mut rng);
                // t(.., v + lam u, ..) = t(.., v, ..) + lam t(.., u, ..)
                let mixed: Vec<u64> = vs[slot]
                    .chunks(f.words())
                    .zip(u.chunks(f.words()))
                    .flat_map(|(a, b)| f.add(a, &f.mul(&lam, b)))
                    .collect();
                let base = t.evaluate(&vs).unwrap();
                let mut alt = vs.clone();
                alt[slot] = u.clone();
                let other = t.evaluate(&alt).unwrap();
                vs[slot] = mixed;
                let lhs = t.evaluate(&vs).unwrap();
                let rhs = f.add(&base, &f.mul(&lam, &other));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn acting_by_identity_preserves_and_inverse_undoes() {
        let f = gf(5);
        let fr = Frame::new(f.clone(), &[2, 3, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = Tensor::random(fr.clone(), &mut rng);
        assert_eq!(t.act(&OperatorTuple::identity(&fr)).unwrap(), t);
        let mats: Vec<Matrix> = fr
            .dims()
            .iter()
            .map(|&d| Matrix::random_invertible(f.clone(), d, &mut rng))
            .collect();
        let phi = OperatorTuple::new(mats).unwrap();
        let back = t.act(&phi).unwrap().act(&phi.inverse().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn action_composes_as_a_right_action() {
        let f = gf(5);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for dims in [[2usize, 2, 2], [2, 3, 4]] {
            let fr = Frame::new(f.clone(), &dims).unwrap();
            for _ in 0..50 {
                let t = Tensor::random(fr.clone(), &mut rng);
                let phi = OperatorTuple::new(
                    dims.iter().map(|&d| Matrix::random(f.clone(), d, d, &mut rng)).collect(),
                )
                .unwrap();
                let psi = OperatorTuple::new(
                    dims.iter().map(|&d| Matrix::random(f.clone(), d, d, &mut rng)).collect(),
                )
                .unwrap();
                let two_step = t.act(&phi).unwrap().act(&psi).unwrap();
                let one_step = t.act(&phi.compose(&psi).unwrap()).unwrap();
                assert_eq!(two_step, one_step);
            }
        }
    }

    #[test]
    fn action_agrees_with_argument_substitution() {
        let f = gf(7);
        let fr = Frame::new(f.clone(), &[2, 3, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let t = Tensor::random(fr.clone(), &mut rng);
            let phi = OperatorTuple::new(
                fr.dims().iter().map(|&d| Matrix::random(f.clone(), d, d, &mut rng)).collect(),
            )
            .unwrap();
            let s = t.act(&phi).unwrap();
            let vs: Vec<Vec<u64>> =
                fr.dims().iter().map(|&d| random_vector(&f, d, &mut rng)).collect();
            let moved: Vec<Vec<u64>> =
                vs.iter().zip(phi.mats()).map(|(v, m)| m.apply(v)).collect();
            assert_eq!(s.evaluate(&vs).unwrap(), t.evaluate(&moved).unwrap());
        }
    }

    #[test]
    fn dot_product_is_invariant_under_contragredient_pairs() {
        let f = gf(7);
        let t = examples::dot(&f, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let a = Matrix::random_invertible(f.clone(), 3, &mut rng);
            let b = a.transpose().inverse().unwrap();
            let phi = OperatorTuple::new(vec![a, b]).unwrap();
            assert_eq!(t.act(&phi).unwrap(), t);
        }
    }

    #[test]
    fn matrix_product_tensor_evaluates_to_trace_pairing() {
        let f = gf(5);
        let (a, b, c) = (2usize, 2usize, 3usize);
        let t = examples::matmul(&f, a, b, c).unwrap();
        assert_eq!(t.dims(), &[a * b, b * c, a * c]);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let x = Matrix::random(f.clone(), a, b, &mut rng);
            let y = Matrix::random(f.clone(), b, c, &mut rng);
            let z = Matrix::random(f.clone(), a, c, &mut rng);
            let got = t
                .evaluate(&[x.flat().to_vec(), y.flat().to_vec(), z.flat().to_vec()])
                .unwrap();
            // Entrywise pairing of x*y with z.
            let xy = x.matmul(&y);
            let mut want = vec![0u64; f.words()];
            for i in 0..a {
                for k in 0..c {
                    f.mul_add_into(xy.entry(i, k), z.entry(i, k), &mut want);
                }
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn applying_one_axis_substitutes_that_argument() {
        let f = gf(5);
        let fr = Frame::new(f.clone(), &[3, 2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for axis in 1..=3usize {
            let t = Tensor::random(fr.clone(), &mut rng);
            let d = fr.dims()[axis - 1];
            let m = Matrix::random(f.clone(), d, d, &mut rng);
            let s = t.apply_axis(axis, &m).unwrap();
            let vs: Vec<Vec<u64>> =
                fr.dims().iter().map(|&dd| random_vector(&f, dd, &mut rng)).collect();
            let mut moved = vs.clone();
            moved[axis - 1] = m.apply(&vs[axis - 1]);
            assert_eq!(s.evaluate(&vs).unwrap(), t.evaluate(&moved).unwrap());
        }
    }

    #[test]
    fn weighted_operator_application_matches_scalar_bookkeeping() {
        let f = gf(7);
        let fr = Frame::new(f.clone(), &[2, 2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let t = Tensor::random(fr.clone(), &mut rng);
        let form = LinearForm::derivation(f.clone(), 3).unwrap();
        // Scalar tuples add their coefficients: sum over axes of c_a * t.
        let c = [2i64, 3, 5];
        let omega = OperatorTuple::new(
            fr.dims()
                .iter()
                .zip(c.iter())
                .map(|(&d, &ci)| Matrix::scalar(f.clone(), d, &vec_from_ints(&f, &[ci])))
                .collect(),
        )
        .unwrap();
        let total = (2 + 3 + 5) % 7;
        let want = t.scale(&vec_from_ints(&f, &[total]));
        assert_eq!(t.apply_operator(&omega, &form).unwrap(), want);
        // The zero tuple maps everything to zero.
        let z = OperatorTuple::zero(&fr);
        assert!(t.apply_operator(&z, &form).unwrap().is_zero());
        // Axes with zero coefficient are ignored entirely.
        let partial = LinearForm::from_ints(f.clone(), &[1, 0, 0]).unwrap();
        let junk = OperatorTuple::identity(&fr)
            .with_mat(2, Matrix::random(f.clone(), 2, 2, &mut rng))
            .unwrap();
        assert_eq!(t.apply_operator(&junk, &partial).unwrap(), t);
    }

    #[test]
    fn flattening_fixes_one_axis_and_orders_the_rest() {
        let f = gf(5);
        let t = examples::dot(&f, 3).unwrap();
        assert_eq!(t.flatten(1).unwrap(), Matrix::identity(f.clone(), 3));
        assert_eq!(t.flatten(2).unwrap(), Matrix::identity(f.clone(), 3));

        let fr = Frame::new(f.clone(), &[2, 3, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let t = Tensor::random(fr.clone(), &mut rng);
        let m = t.flatten(2).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 8));
        for j in 0..3 {
            for (col, (i, l)) in (0..2).flat_map(|i| (0..4).map(move |l| (i, l))).enumerate() {
                assert_eq!(m.entry(j, col), t.entry(&[i, j, l]).unwrap());
            }
        }
    }

    #[test]
    fn nondegeneracy_profile_matches_exhaustive_radical_search() {
        // Exhaustive ground truth: axis a is degenerate exactly when some
        // nonzero vector there kills the form against all basis choices on
        // the remaining axes.
        for (p, dims) in [(2u64, vec![2usize, 2, 2]), (3, vec![2, 2]), (2, vec![2, 3, 2])] {
            let f = gf(p);
            let fr = Frame::new(f.clone(), &dims).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(p * 100 + dims.len() as u64);
            let mut pool: Vec<Tensor> =
                (0..30).map(|_| Tensor::random(fr.clone(), &mut rng)).collect();
            pool.push(Tensor::zero(fr.clone()));
            for t in pool {
                let profile = t.nondegeneracy_profile().unwrap();
                for (a, &nondeg) in profile.iter().enumerate() {
                    let d = dims[a];
                    let flat = t.flatten(a + 1).unwrap();
                    let mut found_radical = false;
                    for code in 1..f.order().pow(d as u32) {
                        let mut v = vec![0u64; d * f.words()];
                        let mut cc = code;
                        for i in 0..d {
                            v[i * f.words()..(i + 1) * f.words()]
                                .copy_from_slice(&f.element_from_index(cc % f.order()));
                            cc /= f.order();
                        }
                        let vm = Matrix::from_flat(f.clone(), 1, d, v);
                        if vm.matmul(&flat).is_zero() {
                            found_radical = true;
                            break;
                        }
                    }
                    assert_eq!(nondeg, !found_radical);
                }
            }
        }
    }

    #[test]
    fn standard_examples_are_nondegenerate() {
        let f = gf(5);
        assert!(examples::dot(&f, 4).unwrap().is_nondegenerate().unwrap());
        assert!(examples::matmul(&f, 2, 2, 2).unwrap().is_nondegenerate().unwrap());
        assert!(examples::matmul(&f, 2, 3, 2).unwrap().is_nondegenerate().unwrap());
        let h = examples::heisenberg(5).unwrap();
        assert!(h.is_nondegenerate().unwrap());
    }

    #[test]
    fn heisenberg_commutator_is_antisymmetric_and_truncates() {
        let p = 5u64;
        let t = examples::heisenberg(p).unwrap();
        let n = p as usize;
        assert_eq!(t.dims(), &[2 * n, 2 * n, n]);
        for i in 0..2 * n {
            for j in 0..2 * n {
                for m in 0..n {
                    let a = t.entry(&[i, j, m]).unwrap().to_vec();
                    let b = t.entry(&[j, i, m]).unwrap();
                    assert_eq!(t.field().neg(&a), b.to_vec());
                }
            }
        }
        let f = t.field().clone();
        let view = BimapView::new(&t).unwrap();
        // (1, 0) with (0, 1) multiplies to the constant monomial.
        let mut e_a0 = vec![0u64; 2 * n];
        e_a0[0] = 1;
        let mut e_b0 = vec![0u64; 2 * n];
        e_b0[n] = 1;
        let mut want = vec![0u64; n];
        want[0] = 1;
        assert_eq!(view.eval(&e_a0, &e_b0).unwrap(), want);
        let mut minus_want = vec![0u64; n];
        minus_want[0] = f.p() - 1;
        assert_eq!(view.eval(&e_b0, &e_a0).unwrap(), minus_want);
        // Top-degree products truncate to zero: x * x^(p-1) = 0.
        let mut e_a1 = vec![0u64; 2 * n];
        e_a1[1] = 1;
        let mut e_btop = vec![0u64; 2 * n];
        e_btop[2 * n - 1] = 1;
        assert!(view.eval(&e_a1, &e_btop).unwrap().iter().all(|&w| w == 0));
    }

    #[test]
    fn bimap_triples_translate_to_axis_tuples_faithfully() {
        let f = gf(7);
        let t = examples::dot_pairing(&f, 2).unwrap();
        let view = BimapView::new(&t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let form = LinearForm::derivation(f.clone(), 3).unwrap();
        let mut seen_product_rule = false;
        let mut seen_failure = false;
        for trial in 0..200 {
            let d2 = Matrix::random(f.clone(), 2, 2, &mut rng);
            if trial % 3 == 0 {
                // A completion that must satisfy the product rule:
                // d0 = lambda and d1 = lambda - transpose(d2).
                let lam = f.random(&mut rng);
                let d1 = Matrix::scalar(f.clone(), 2, &lam).sub(&d2.transpose());
                let tup = view
                    .tuple_from_parts(&Matrix::scalar(f.clone(), 1, &lam), &d1, &d2)
                    .unwrap();
                assert!(t.apply_operator(&tup, &form).unwrap().is_zero());
                seen_product_rule = true;
                continue;
            }
            let d1 = Matrix::random(f.clone(), 2, 2, &mut rng);
            let d0 = Matrix::random(f.clone(), 1, 1, &mut rng);
            let tuple = view.tuple_from_parts(&d0, &d1, &d2).unwrap();
            // Ground truth: the product rule checked on all basis pairs.
            let mut holds = true;
            'outer: for i in 0..2usize {
                for j in 0..2usize {
                    let mut e_i = vec![0u64; 2];
                    e_i[i] = 1;
                    let mut e_j = vec![0u64; 2];
                    e_j[j] = 1;
                    let prod = view.eval(&e_i, &e_j).unwrap();
                    let lhs = d0.apply(&prod);
                    let term1 = view.eval(&d2.apply(&e_i), &e_j).unwrap();
                    let term2 = view.eval(&e_i, &d1.apply(&e_j)).unwrap();
                    if lhs != f.add(&term1, &term2) {
                        holds = false;
                        break 'outer;
                    }
                }
            }
            let kills = t.apply_operator(&tuple, &form).unwrap().is_zero();
            assert_eq!(kills, holds);
            if !kills {
                seen_failure = true;
            }
        }
        assert!(seen_product_rule && seen_failure);
        // Round trip of the dictionary.
        let d0 = Matrix::random(f.clone(), 1, 1, &mut rng);
        let d1 = Matrix::random(f.clone(), 2, 2, &mut rng);
        let d2 = Matrix::random(f.clone(), 2, 2, &mut rng);
        let tuple = view.tuple_from_parts(&d0, &d1, &d2).unwrap();
        let (r0, r1, r2) = view.parts_from_tuple(&tuple).unwrap();
        assert_eq!((r0, r1, r2), (d0, d1, d2));
    }

    #[test]
    fn bimap_multiplication_matrices_match_evaluation() {
        let f = gf(5);
        let t = examples::matmul(&f, 2, 2, 2).unwrap();
        let view = BimapView::new(&t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..20 {
            let x = random_vector(&f, 4, &mut rng);
            let y = random_vector(&f, 4, &mut rng);
            let via_eval = view.eval(&x, &y).unwrap();
            let lx = view.left_mult(&x).unwrap();
            let ry = view.right_mult(&y).unwrap();
            assert_eq!(lx.apply(&y), via_eval);
            assert_eq!(ry.apply(&x), via_eval);
        }
    }

    #[test]
    fn random_tensors_are_reproducible_from_the_seed() {
        let f = gf(5);
        let fr = Frame::new(f, &[3, 3, 3]).unwrap();
        let a = Tensor::random(fr.clone(), &mut ChaCha8Rng::seed_from_u64(99));
        let b = Tensor::random(fr, &mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a, b);
    }
}
