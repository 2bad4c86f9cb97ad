//! Tensor subspaces cut out by operator annihilation: the joint kernel of a
//! family of weighted substitution operators, its specialisation to the
//! smallest derivation-closed subspace containing a tensor, and the
//! order-reversing correspondence between tensor sets and operator sets.

use crate::opalg::{op_space, OperatorSpace};
use crate::tensor::{Frame, LinearForm, OperatorTuple, Tensor};
use crate::{Error, Matrix, Result, Subspace};

/// A linear subspace of the tensors over one frame, with a canonical basis
/// in reduced row-echelon form over flat coordinates.
#[derive(Clone)]
pub struct TensorSpace {
    frame: Frame,
    space: Subspace,
    vacuous: bool,
}

impl std::fmt::Debug for TensorSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TensorSpace")
            .field("dims", &self.frame.dims())
            .field("dim", &self.space.dim())
            .field("vacuous", &self.vacuous)
            .finish()
    }
}

impl PartialEq for TensorSpace {
    fn eq(&self, other: &Self) -> bool {
        self.frame == other.frame && self.space == other.space
    }
}

impl TensorSpace {
    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// True when the defining operator family imposed no constraint at all
    /// (it was empty or all zero), so the space is the full tensor space by
    /// default rather than by computation.
    pub fn is_vacuous(&self) -> bool {
        self.vacuous
    }

    /// The canonical basis as tensors.
    pub fn basis(&self) -> Vec<Tensor> {
        let b = self.space.basis();
        (0..b.rows())
            .map(|r| {
                Tensor::from_flat(self.frame.clone(), b.row(r).to_vec())
                    .expect("basis rows are valid coordinate arrays")
            })
            .collect()
    }

    pub fn contains(&self, t: &Tensor) -> bool {
        t.frame() == &self.frame && self.space.contains(t.flat())
    }

    /// Coordinates of a member tensor over the canonical basis.
    pub fn coordinates(&self, t: &Tensor) -> Option<Vec<u64>> {
        if t.frame() != &self.frame {
            return None;
        }
        self.space.coordinates(t.flat())
    }

    fn full(frame: Frame, vacuous: bool) -> TensorSpace {
        let total = frame.total();
        let space = Subspace::full(frame.field().clone(), total);
        TensorSpace { frame, space, vacuous }
    }

    fn from_tensors(frame: Frame, tensors: &[Tensor]) -> TensorSpace {
        let k = frame.field().words();
        let total = frame.total();
        let mut rows = Matrix::zero(frame.field().clone(), tensors.len(), total);
        for (r, t) in tensors.iter().enumerate() {
            for c in 0..total {
                rows.set_entry(r, c, &t.flat()[c * k..(c + 1) * k]);
            }
        }
        let space = Subspace::from_rows(&rows);
        TensorSpace { frame, space, vacuous: false }
    }
}

/// The subspace of tensors annihilated by every operator in the family
/// under the weighted substitution given by `form`.  An empty or all-zero
/// family imposes no condition: the result is the full space, flagged
/// vacuous.
///
/// The kernel is computed one operator at a time, restricting the basis
/// found so far before the next operator is imposed; the running basis
/// shrinks quickly, which keeps the largest elimination at the size of a
/// single operator's matrix.
pub fn ten_space(
    frame: &Frame,
    form: &LinearForm,
    operators: &[OperatorTuple],
) -> Result<TensorSpace> {
    if form.len() != frame.valence() {
        return Err(Error::DimensionMismatch { expected: frame.valence(), got: form.len() });
    }
    if form.field() != frame.field() {
        return Err(Error::FieldMismatch);
    }
    let effective: Vec<&OperatorTuple> = operators.iter().filter(|o| !o.is_zero()).collect();
    for o in &effective {
        if !o.matches_frame(frame) {
            return Err(Error::FrameMismatch);
        }
    }
    if effective.is_empty() {
        return Ok(TensorSpace::full(frame.clone(), true));
    }

    let f = frame.field().clone();
    let k = f.words();
    let total = frame.total();

    // Start from the standard basis implicitly: the first kernel is taken
    // over raw coordinates, later ones over coefficients of the running
    // basis.
    let mut basis: Option<Vec<Tensor>> = None;
    for op in effective {
        let current_dim = basis.as_ref().map_or(total, Vec::len);
        if current_dim == 0 {
            break;
        }
        let mut images = Matrix::zero(f.clone(), total, current_dim);
        for j in 0..current_dim {
            let image = match &basis {
                None => {
                    let mut e = Tensor::zero(frame.clone());
                    let mut one = vec![0u64; k];
                    one[0] = 1;
                    let mut flat = e.flat().to_vec();
                    flat[j * k] = one[0];
                    e = Tensor::from_flat(frame.clone(), flat)?;
                    e.apply_operator(op, form)?
                }
                Some(b) => b[j].apply_operator(op, form)?,
            };
            for r in 0..total {
                images.set_entry(r, j, &image.flat()[r * k..(r + 1) * k]);
            }
        }
        let kern = images.kernel();
        let mut next = Vec::with_capacity(kern.rows());
        for r in 0..kern.rows() {
            let coeffs = kern.row(r);
            let t = match &basis {
                None => Tensor::from_flat(frame.clone(), coeffs.to_vec())?,
                Some(b) => {
                    let mut acc = vec![0u64; total * k];
                    for (j, bj) in b.iter().enumerate() {
                        let c = &coeffs[j * k..(j + 1) * k];
                        if c.iter().all(|&w| w == 0) {
                            continue;
                        }
                        for w in 0..total {
                            let entry = bj.flat()[w * k..(w + 1) * k].to_vec();
                            f.mul_add_into(&entry, c, &mut acc[w * k..(w + 1) * k]);
                        }
                    }
                    Tensor::from_flat(frame.clone(), acc)?
                }
            };
            next.push(t);
        }
        basis = Some(next);
    }

    Ok(TensorSpace::from_tensors(frame.clone(), &basis.unwrap_or_default()))
}

/// The smallest derivation-closed tensor subspace containing `t`: all
/// tensors annihilated by every derivation of `t`.  Always contains `t`.
pub fn densor(t: &Tensor) -> Result<TensorSpace> {
    let der = crate::opalg::derivation_algebra(t)?;
    let form = LinearForm::derivation(t.field().clone(), t.valence())?;
    let sp = ten_space(t.frame(), &form, der.basis())?;
    if !sp.contains(t) {
        return Err(Error::Internal("tensor missing from its own derivation-closed span".into()));
    }
    Ok(sp)
}

/// The tensors whose derivation algebra contains every operator of `l`:
/// the joint annihilator of `l` under the all-ones weighting.
pub fn lie_tensor_space(l: &OperatorSpace) -> Result<TensorSpace> {
    let form = LinearForm::derivation(l.frame().field().clone(), l.frame().valence())?;
    ten_space(l.frame(), &form, l.basis())
}

/// The two sides of the order-reversing correspondence between tensor sets
/// and operator sets, evaluated independently.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaloisCheck {
    /// Every tensor of `s` is annihilated by every given operator.
    pub tensors_in_annihilator: bool,
    /// Every given operator annihilates every tensor of `s`.
    pub operators_in_annihilator: bool,
    /// The two sides agree, as they must for a correct implementation.
    pub consistent: bool,
}

/// Evaluate both membership directions of the correspondence:
/// `S` inside `ten_space(form, upsilon)` against `upsilon` inside
/// `op_space(S, form)`.  The two answers are computed by independent code
/// paths and must coincide; `consistent` records whether they do.
pub fn galois_check(
    s: &[Tensor],
    form: &LinearForm,
    upsilon: &[OperatorTuple],
) -> Result<GaloisCheck> {
    if s.is_empty() {
        return Err(Error::EmptyInput);
    }
    let frame = s[0].frame().clone();
    let ten = ten_space(&frame, form, upsilon)?;
    let tensors_in = s.iter().all(|t| ten.contains(t));
    let ops = op_space(s, form)?;
    let ops_in = upsilon.iter().all(|o| ops.contains(o));
    Ok(GaloisCheck {
        tensors_in_annihilator: tensors_in,
        operators_in_annihilator: ops_in,
        consistent: tensors_in == ops_in,
    })
}
