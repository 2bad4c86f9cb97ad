//! Standard example tensors and matrix algebras used throughout the crate
//! and its tests.


use crate::{Error, FieldSpec, Frame, Matrix, Result, Tensor};

/// The coordinate dot product on `K^n` as a valence-2 tensor: the identity
/// matrix viewed as a bilinear form.
pub fn dot(field: &FieldSpec, n: usize) -> Result<Tensor> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let frame = Frame::new(field.clone(), &[n, n])?;
    let mut t = Tensor::zero(frame);
    let mut one = vec![0u64; field.words()];
    one[0] = 1;
    for i in 0..n {
        t.set_entry(&[i, i], &one)?;
    }
    Ok(t)
}

/// The dot product packaged as a bilinear map `K^n x K^n -> K`, i.e. a
/// valence-3 tensor with a one-dimensional codomain axis.
pub fn dot_pairing(field: &FieldSpec, n: usize) -> Result<Tensor> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let frame = Frame::new(field.clone(), &[n, n, 1])?;
    let mut t = Tensor::zero(frame);
    let mut one = vec![0u64; field.words()];
    one[0] = 1;
    for i in 0..n {
        t.set_entry(&[i, i, 0], &one)?;
    }
    Ok(t)
}

/// Matrix multiplication `M_{a x b} x M_{b x c} -> M_{a x c}` as a valence-3
/// tensor on frame `(ab, bc, ac)`.  Matrices enter as row-major coordinate
/// vectors; evaluation returns the entrywise pairing of the product `X * Y`
/// with the third argument.
pub fn matmul(field: &FieldSpec, a: usize, b: usize, c: usize) -> Result<Tensor> {
    if a == 0 || b == 0 || c == 0 {
        return Err(Error::EmptyInput);
    }
    let frame = Frame::new(field.clone(), &[a * b, b * c, a * c])?;
    let mut t = Tensor::zero(frame);
    let mut one = vec![0u64; field.words()];
    one[0] = 1;
    for i in 0..a {
        for j in 0..b {
            for k in 0..c {
                t.set_entry(&[i * b + j, j * c + k, i * c + k], &one)?;
            }
        }
    }
    Ok(t)
}

/// The commutator form of the exponent-`p` Heisenberg group over the
/// truncated polynomial ring `A = F_p[x]/(x^p)`: the alternating map
/// `A^2 x A^2 -> A` sending `(a, b), (u, v)` to `a v - b u`, on frame
/// `(2p, 2p, p)` in the monomial basis `1, x, .., x^(p-1)`.
pub fn heisenberg(p: u64) -> Result<Tensor> {
    let field = FieldSpec::make_field(p, 1)?;
    let n = p as usize;
    let frame = Frame::new(field.clone(), &[2 * n, 2 * n, n])?;
    let mut t = Tensor::zero(frame);
    let mut one = vec![0u64; field.words()];
    one[0] = 1;
    let minus = field.neg(&one);
    for i in 0..n {
        for j in 0..n {
            if i + j < n {
                // x^i in the first component times x^j in the second.
                t.set_entry(&[i, n + j, i + j], &one)?;
                t.set_entry(&[n + i, j, i + j], &minus)?;
            }
        }
    }
    Ok(t)
}

/// The standard basis of the trace-zero `n x n` matrices: the diagonal
/// differences `E_ii - E_(i+1)(i+1)` followed by the off-diagonal units
/// `E_ij` in row-major order. Dimension `n^2 - 1`.
pub fn sl_basis(field: &FieldSpec, n: usize) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(n * n - 1);
    let one = {
        let mut v = vec![0u64; field.words()];
        v[0] = 1;
        v
    };
    let minus = field.neg(&one);
    for i in 0..n - 1 {
        let mut m = Matrix::zero(field.clone(), n, n);
        m.set_entry(i, i, &one);
        m.set_entry(i + 1, i + 1, &minus);
        out.push(m);
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut m = Matrix::zero(field.clone(), n, n);
            m.set_entry(i, j, &one);
            out.push(m);
        }
    }
    out
}

/// The full matrix-unit basis of the `n x n` matrices, row-major.
/// Dimension `n^2`.
pub fn gl_basis(field: &FieldSpec, n: usize) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(n * n);
    let one = {
        let mut v = vec![0u64; field.words()];
        v[0] = 1;
        v
    };
    for i in 0..n {
        for j in 0..n {
            let mut m = Matrix::zero(field.clone(), n, n);
            m.set_entry(i, j, &one);
            out.push(m);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_is_the_identity_matrix_as_a_form() {
        let f = FieldSpec::make_field(7, 1).unwrap();
        let t = dot(&f, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = u64::from(i == j);
                assert_eq!(t.entry(&[i, j]).unwrap(), &[want]);
            }
        }
        let pairing = dot_pairing(&f, 3).unwrap();
        assert_eq!(pairing.dims(), &[3, 3, 1]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(pairing.entry(&[i, j, 0]).unwrap(), t.entry(&[i, j]).unwrap());
            }
        }
    }

    #[test]
    fn matmul_entries_are_structure_constants_of_composition() {
        let f = FieldSpec::make_field(5, 1).unwrap();
        let t = matmul(&f, 2, 3, 2).unwrap();
        assert_eq!(t.dims(), &[6, 6, 4]);
        let mut ones = 0usize;
        for v in t.flat() {
            assert!(*v <= 1);
            ones += *v as usize;
        }
        // One nonzero entry per (i, j, k) triple.
        assert_eq!(ones, 2 * 3 * 2);
    }

    #[test]
    fn heisenberg_requires_a_prime() {
        assert!(heisenberg(6).is_err());
        assert!(heisenberg(5).is_ok());
    }

    #[test]
    fn matrix_algebra_bases_have_trace_and_dimension_as_named() {
        let f = FieldSpec::make_field(5, 1).unwrap();
        for n in 2..=4 {
            let sl = sl_basis(&f, n);
            assert_eq!(sl.len(), n * n - 1);
            for m in &sl {
                assert_eq!(m.trace(), f.zero());
            }
            assert_eq!(gl_basis(&f, n).len(), n * n);
        }
    }
}
