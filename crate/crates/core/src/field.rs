//! Finite fields GF(p^k) with exact, deterministic arithmetic.
//!
//! Elements are coefficient vectors over GF(p), stored low-degree-first as
//! `k` consecutive `u64` words (a single word for prime fields). All
//! comparisons and canonical choices (modulus selection, factor ordering,
//! root selection) use lexicographic order on those coefficient vectors,
//! constant term first, so every run of every routine is reproducible.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Largest supported extension degree (schoolbook buffers are sized for it).
pub const MAX_EXT_DEGREE: usize = 12;

#[derive(Debug)]
struct FieldInner {
    p: u64,
    k: usize,
    /// Monic irreducible of degree k, `k + 1` coefficients low-degree-first.
    /// Absent exactly when `k == 1`.
    modulus: Option<Vec<u64>>,
    /// floor(2^64 / p), for Barrett reduction of products below p^2.
    barrett: u64,
    /// Row j holds the coefficients of x^(k+j) mod modulus, j in 0..k-1.
    red: Vec<u64>,
    prime_subfield: OnceLock<FieldSpec>,
    generator: OnceLock<Vec<u64>>,
}

/// A finite field GF(p^k). Cheap to clone; two specs are equal when they
/// have the same characteristic, degree, and modulus.
#[derive(Clone)]
pub struct FieldSpec {
    inner: Arc<FieldInner>,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.inner.p == other.inner.p
            && self.inner.k == other.inner.k
            && self.inner.modulus == other.inner.modulus
    }
}
impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inner.k == 1 {
            write!(f, "GF({})", self.inner.p)
        } else {
            write!(f, "GF({}^{})", self.inner.p, self.inner.k)
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Deterministic Miller-Rabin primality test, exact for all `u64` inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powm = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powm(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl FieldSpec {
    /// Constructs GF(p^k), choosing the lexicographically smallest monic
    /// irreducible modulus (coefficients compared constant term first) when
    /// k exceeds 1. Deterministic across runs.
    pub fn make_field(p: u64, k: usize) -> Result<FieldSpec> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p >= 1 << 31 {
            return Err(Error::Precondition(format!(
                "characteristic {p} exceeds the supported bound 2^31"
            )));
        }
        if k == 0 {
            return Err(Error::BadDegree);
        }
        if k == 1 {
            return Ok(Self::build(p, 1, None));
        }
        if k > MAX_EXT_DEGREE {
            return Err(Error::Precondition(format!(
                "extension degree {k} exceeds the supported bound {MAX_EXT_DEGREE}"
            )));
        }
        let base = Self::build(p, 1, None);
        // Scan monic degree-k polynomials in lexicographic order of
        // (c_0, c_1, ..., c_{k-1}).
        let mut coeffs = vec![0u64; k + 1];
        coeffs[k] = 1;
        loop {
            let cand = Poly::from_flat(base.clone(), coeffs.clone());
            if cand.is_irreducible() {
                return Ok(Self::build(p, k, Some(coeffs)));
            }
            // Increment with c_{k-1} as the fastest digit.
            let mut i = k;
            loop {
                if i == 0 {
                    return Err(Error::Internal(
                        "no irreducible polynomial found (impossible)".into(),
                    ));
                }
                i -= 1;
                coeffs[i] += 1;
                if coeffs[i] < p {
                    break;
                }
                coeffs[i] = 0;
            }
        }
    }

    /// Constructs GF(p^k) with a caller-supplied monic irreducible modulus
    /// of degree k at least 2, coefficients low-degree-first.
    pub fn with_modulus(p: u64, modulus: Vec<u64>) -> Result<FieldSpec> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p >= 1 << 31 {
            return Err(Error::Precondition(format!(
                "characteristic {p} exceeds the supported bound 2^31"
            )));
        }
        let k = modulus.len().saturating_sub(1);
        if k < 2 || k > MAX_EXT_DEGREE {
            return Err(Error::BadModulus);
        }
        if modulus[k] != 1 || modulus.iter().any(|&c| c >= p) {
            return Err(Error::BadModulus);
        }
        let base = Self::build(p, 1, None);
        let m = Poly::from_flat(base, modulus.clone());
        if !m.is_irreducible() {
            return Err(Error::BadModulus);
        }
        Ok(Self::build(p, k, Some(modulus)))
    }

    fn build(p: u64, k: usize, modulus: Option<Vec<u64>>) -> FieldSpec {
        let barrett = ((1u128 << 64) / p as u128) as u64;
        let mut red = Vec::new();
        if let Some(m) = &modulus {
            // Row 0: x^k = -(m_0 + ... + m_{k-1} x^{k-1}).
            red = vec![0u64; k * k.saturating_sub(1).max(1)];
            let mut row = vec![0u64; k];
            for i in 0..k {
                row[i] = (p - m[i] % p) % p;
            }
            red[..k].copy_from_slice(&row);
            for j in 1..k - 1 {
                // x^(k+j) = x * x^(k+j-1): shift, then fold the overflow term.
                let carry = row[k - 1];
                for i in (1..k).rev() {
                    row[i] = row[i - 1];
                }
                row[0] = 0;
                if carry != 0 {
                    for i in 0..k {
                        let add = (carry as u128 * red[i] as u128 % p as u128) as u64;
                        row[i] = (row[i] + add) % p;
                    }
                }
                red[j * k..(j + 1) * k].copy_from_slice(&row);
            }
            if k == 1 {
                red.clear();
            }
        }
        FieldSpec {
            inner: Arc::new(FieldInner {
                p,
                k,
                modulus,
                barrett,
                red,
                prime_subfield: OnceLock::new(),
                generator: OnceLock::new(),
            }),
        }
    }

    /// The characteristic p.
    pub fn p(&self) -> u64 {
        self.inner.p
    }

    /// The extension degree k.
    pub fn k(&self) -> usize {
        self.inner.k
    }

    /// Words per element (equal to the extension degree).
    pub fn words(&self) -> usize {
        self.inner.k
    }

    /// The modulus coefficients, low-degree-first, when k exceeds 1.
    pub fn modulus(&self) -> Option<&[u64]> {
        self.inner.modulus.as_deref()
    }

    /// The field order p^k.
    pub fn order(&self) -> u128 {
        (self.inner.p as u128)
            .checked_pow(self.inner.k as u32)
            .expect("field order overflows u128")
    }

    /// GF(p) sitting inside this field.
    pub fn prime_subfield(&self) -> FieldSpec {
        if self.inner.k == 1 {
            return self.clone();
        }
        self.inner
            .prime_subfield
            .get_or_init(|| Self::build(self.inner.p, 1, None))
            .clone()
    }

    #[inline]
    pub(crate) fn base_reduce(&self, t: u64) -> u64 {
        let p = self.inner.p;
        let q = ((t as u128 * self.inner.barrett as u128) >> 64) as u64;
        let mut r = t - q * p;
        while r >= p {
            r -= p;
        }
        r
    }

    #[inline]
    pub(crate) fn base_mul(&self, a: u64, b: u64) -> u64 {
        self.base_reduce(a * b)
    }

    fn base_inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        // Extended Euclid on integers.
        let p = self.inner.p as i128;
        let (mut r0, mut r1) = (p, a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(t0.rem_euclid(p) as u64)
    }

    /// The additive identity.
    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.inner.k]
    }

    /// The multiplicative identity.
    pub fn one(&self) -> Vec<u64> {
        let mut v = vec![0; self.inner.k];
        v[0] = 1;
        v
    }

    /// Embeds an integer through the prime subfield.
    pub fn from_u64(&self, n: u64) -> Vec<u64> {
        let mut v = vec![0; self.inner.k];
        v[0] = n % self.inner.p;
        v
    }

    /// Embeds a prime-subfield element already reduced mod p.
    pub fn embed_base(&self, c: u64) -> Vec<u64> {
        debug_assert!(c < self.inner.p);
        let mut v = vec![0; self.inner.k];
        v[0] = c;
        v
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self, a: &[u64]) -> bool {
        a[0] == 1 && a[1..].iter().all(|&c| c == 0)
    }

    #[inline]
    pub fn add_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        let p = self.inner.p;
        for i in 0..self.inner.k {
            let s = a[i] + b[i];
            out[i] = if s >= p { s - p } else { s };
        }
    }

    #[inline]
    pub fn sub_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        let p = self.inner.p;
        for i in 0..self.inner.k {
            let s = a[i] + p - b[i];
            out[i] = if s >= p { s - p } else { s };
        }
    }

    #[inline]
    pub fn neg_into(&self, a: &[u64], out: &mut [u64]) {
        let p = self.inner.p;
        for i in 0..self.inner.k {
            out[i] = if a[i] == 0 { 0 } else { p - a[i] };
        }
    }

    /// out = a * b. Slices may not alias.
    pub fn mul_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        let k = self.inner.k;
        if k == 1 {
            out[0] = self.base_mul(a[0], b[0]);
            return;
        }
        let mut t = [0u64; 2 * MAX_EXT_DEGREE - 1];
        for i in 0..k {
            if a[i] == 0 {
                continue;
            }
            for j in 0..k {
                let prod = self.base_mul(a[i], b[j]);
                let s = t[i + j] + prod;
                t[i + j] = if s >= self.inner.p { s - self.inner.p } else { s };
            }
        }
        // Fold x^(k+j) terms through the reduction table.
        for j in (0..k - 1).rev() {
            let c = t[k + j];
            if c == 0 {
                continue;
            }
            let row = &self.inner.red[j * k..(j + 1) * k];
            for i in 0..k {
                let add = self.base_mul(c, row[i]);
                let s = t[i] + add;
                t[i] = if s >= self.inner.p { s - self.inner.p } else { s };
            }
        }
        out[..k].copy_from_slice(&t[..k]);
    }

    /// acc += a * b.
    pub fn mul_add_into(&self, a: &[u64], b: &[u64], acc: &mut [u64]) {
        let k = self.inner.k;
        if k == 1 {
            let s = acc[0] + self.base_mul(a[0], b[0]);
            acc[0] = if s >= self.inner.p { s - self.inner.p } else { s };
            return;
        }
        let mut t = [0u64; MAX_EXT_DEGREE];
        self.mul_into(a, b, &mut t[..k]);
        let p = self.inner.p;
        for i in 0..k {
            let s = acc[i] + t[i];
            acc[i] = if s >= p { s - p } else { s };
        }
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = vec![0; self.inner.k];
        self.mul_into(a, b, &mut out);
        out
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = vec![0; self.inner.k];
        self.add_into(a, b, &mut out);
        out
    }

    pub fn sub(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = vec![0; self.inner.k];
        self.sub_into(a, b, &mut out);
        out
    }

    pub fn neg(&self, a: &[u64]) -> Vec<u64> {
        let mut out = vec![0; self.inner.k];
        self.neg_into(a, &mut out);
        out
    }

    /// Multiplicative inverse.
    pub fn inv(&self, a: &[u64]) -> Result<Vec<u64>> {
        if self.is_zero(a) {
            return Err(Error::DivisionByZero);
        }
        let k = self.inner.k;
        if k == 1 {
            return Ok(vec![self.base_inv(a[0])?]);
        }
        // Extended Euclid in GF(p)[x] against the modulus.
        let base = self.prime_subfield();
        let m = Poly::from_flat(base.clone(), self.inner.modulus.clone().unwrap());
        let ap = Poly::from_flat(base.clone(), a.to_vec());
        let (g, _, v) = poly_ext_gcd(&m, &ap);
        if g.degree() != Some(0) {
            return Err(Error::Internal("gcd with irreducible modulus not 1".into()));
        }
        // v * a = g mod m; normalize g to 1.
        let ginv = base.base_inv(g.c[0])?;
        let mut out = vec![0u64; k];
        for (i, ch) in v.c.iter().enumerate() {
            if i < k {
                out[i] = base.base_mul(*ch, ginv);
            }
        }
        Ok(out)
    }

    pub fn div(&self, a: &[u64], b: &[u64]) -> Result<Vec<u64>> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    /// a^e by binary exponentiation.
    pub fn pow(&self, a: &[u64], mut e: u128) -> Vec<u64> {
        let mut acc = self.one();
        let mut base = a.to_vec();
        let mut tmp = vec![0u64; self.inner.k];
        while e > 0 {
            if e & 1 == 1 {
                self.mul_into(&acc.clone(), &base, &mut tmp);
                acc.copy_from_slice(&tmp);
            }
            self.mul_into(&base.clone(), &base, &mut tmp);
            base.copy_from_slice(&tmp);
            e >>= 1;
        }
        acc
    }

    /// The p-power Frobenius a -> a^p.
    pub fn frobenius(&self, a: &[u64]) -> Vec<u64> {
        self.pow(a, self.inner.p as u128)
    }

    /// Inverse of Frobenius: the unique b with b^p = a.
    pub fn pth_root(&self, a: &[u64]) -> Vec<u64> {
        if self.inner.k == 1 {
            return a.to_vec();
        }
        // a^(p^(k-1)) since a^(p^k) = a.
        let e = (self.inner.p as u128)
            .checked_pow(self.inner.k as u32 - 1)
            .expect("p^(k-1) overflows u128");
        self.pow(a, e)
    }

    /// Canonical ordering key: coefficient vectors compared constant term
    /// first, exactly as in modulus selection.
    pub fn encode(&self, a: &[u64]) -> u128 {
        let mut n = 0u128;
        for &c in a.iter() {
            n = n * self.inner.p as u128 + c as u128;
        }
        n
    }

    /// Inverse of [`encode`](Self::encode); indices 0..order() enumerate the
    /// field in canonical order.
    pub fn element_from_index(&self, mut n: u128) -> Vec<u64> {
        let k = self.inner.k;
        let mut v = vec![0u64; k];
        for i in (0..k).rev() {
            v[i] = (n % self.inner.p as u128) as u64;
            n /= self.inner.p as u128;
        }
        v
    }

    /// All field elements in canonical order. Intended for small fields.
    pub fn elements(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        let q = self.order();
        (0..q).map(move |n| self.element_from_index(n))
    }

    /// A uniformly random element.
    pub fn random(&self, rng: &mut impl Rng) -> Vec<u64> {
        (0..self.inner.k)
            .map(|_| rng.random_range(0..self.inner.p))
            .collect()
    }

    /// A uniformly random nonzero element.
    pub fn random_nonzero(&self, rng: &mut impl Rng) -> Vec<u64> {
        loop {
            let a = self.random(rng);
            if !self.is_zero(&a) {
                return a;
            }
        }
    }

    /// The canonical generator of the multiplicative group: the element of
    /// smallest encoding whose order is p^k - 1.
    pub fn multiplicative_generator(&self) -> Vec<u64> {
        self.inner
            .generator
            .get_or_init(|| {
                let q1 = self.order() - 1;
                let primes = prime_factors_u128(q1);
                'cand: for n in 1..self.order() {
                    let a = self.element_from_index(n);
                    for &r in &primes {
                        if self.is_one(&self.pow(&a, q1 / r)) {
                            continue 'cand;
                        }
                    }
                    return a;
                }
                unreachable!("multiplicative group of a finite field is cyclic")
            })
            .clone()
    }

    /// Multiplicative order of a nonzero element.
    pub fn element_order(&self, a: &[u64]) -> u128 {
        assert!(!self.is_zero(a), "zero has no multiplicative order");
        let q1 = self.order() - 1;
        let mut ord = q1;
        for r in prime_factors_u128(q1) {
            while ord % r == 0 && self.is_one(&self.pow(a, ord / r)) {
                ord /= r;
            }
        }
        ord
    }

    /// Renders an element for diagnostics: a bare integer for prime fields,
    /// otherwise the coefficient list low-degree-first.
    pub fn render(&self, a: &[u64]) -> String {
        if self.inner.k == 1 {
            format!("{}", a[0])
        } else {
            format!("{:?}", a)
        }
    }
}

fn prime_factors_u128(mut n: u128) -> Vec<u128> {
    let mut out = Vec::new();
    let mut d = 2u128;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// A univariate polynomial with coefficients in a fixed finite field,
/// stored low-degree-first with no trailing zero coefficient.
#[derive(Clone)]
pub struct Poly {
    field: FieldSpec,
    /// Flat coefficient storage, `field.words()` words per coefficient.
    c: Vec<u64>,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.c == other.c
    }
}
impl Eq for Poly {}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.field.words();
        let coeffs: Vec<String> = (0..self.num_coeffs())
            .map(|i| self.field.render(&self.c[i * k..(i + 1) * k]))
            .collect();
        write!(f, "Poly[{}]", coeffs.join(", "))
    }
}

impl Poly {
    /// Builds from flat coefficient words, low-degree-first, normalizing away
    /// trailing zeros. For prime fields each word is one coefficient.
    pub fn from_flat(field: FieldSpec, c: Vec<u64>) -> Poly {
        let k = field.words();
        assert!(c.len() % k == 0, "flat coefficients must be a multiple of k words");
        assert!(
            c.iter().all(|&w| w < field.p()),
            "coefficient words must be reduced mod p"
        );
        let mut poly = Poly { field, c };
        poly.normalize();
        poly
    }

    /// Builds from integer coefficients embedded through the prime subfield.
    pub fn from_ints(field: FieldSpec, ints: &[u64]) -> Poly {
        let k = field.words();
        let mut c = vec![0u64; ints.len() * k];
        for (i, &n) in ints.iter().enumerate() {
            c[i * k] = n % field.p();
        }
        Poly::from_flat(field, c)
    }

    pub fn zero(field: FieldSpec) -> Poly {
        Poly { field, c: Vec::new() }
    }

    pub fn one(field: FieldSpec) -> Poly {
        let c = field.one();
        Poly { field, c }
    }

    /// The monomial x.
    pub fn x(field: FieldSpec) -> Poly {
        let mut c = field.zero();
        c.extend(field.one());
        Poly { field, c }
    }

    /// c * x^d.
    pub fn monomial(field: FieldSpec, coeff: &[u64], d: usize) -> Poly {
        let k = field.words();
        let mut c = vec![0u64; (d + 1) * k];
        c[d * k..].copy_from_slice(coeff);
        Poly::from_flat(field, c)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    fn num_coeffs(&self) -> usize {
        self.c.len() / self.field.words().max(1)
    }

    fn normalize(&mut self) {
        let k = self.field.words();
        while !self.c.is_empty() && self.c[self.c.len() - k..].iter().all(|&w| w == 0) {
            self.c.truncate(self.c.len() - k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.num_coeffs() - 1)
        }
    }

    /// Coefficient of x^i (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> Vec<u64> {
        let k = self.field.words();
        if i < self.num_coeffs() {
            self.c[i * k..(i + 1) * k].to_vec()
        } else {
            self.field.zero()
        }
    }

    /// Leading coefficient; panics on the zero polynomial.
    pub fn leading(&self) -> Vec<u64> {
        let k = self.field.words();
        assert!(!self.is_zero());
        self.c[self.c.len() - k..].to_vec()
    }

    pub fn is_monic(&self) -> bool {
        !self.is_zero() && self.field.is_one(&self.leading())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert!(self.field == other.field);
        let k = self.field.words();
        let n = self.c.len().max(other.c.len());
        let mut c = vec![0u64; n];
        for i in 0..n / k.max(1) {
            let a = if i < self.num_coeffs() { &self.c[i * k..(i + 1) * k] } else { &[] };
            let b = if i < other.num_coeffs() { &other.c[i * k..(i + 1) * k] } else { &[] };
            let za = self.field.zero();
            let a = if a.is_empty() { &za[..] } else { a };
            let zb = self.field.zero();
            let b = if b.is_empty() { &zb[..] } else { b };
            self.field.add_into(a, b, &mut c[i * k..(i + 1) * k]);
        }
        Poly::from_flat(self.field.clone(), c)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        let k = self.field.words();
        let mut c = vec![0u64; self.c.len()];
        for i in 0..self.num_coeffs() {
            self.field
                .neg_into(&self.c[i * k..(i + 1) * k], &mut c[i * k..(i + 1) * k]);
        }
        Poly { field: self.field.clone(), c }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert!(self.field == other.field);
        if self.is_zero() || other.is_zero() {
            return Poly::zero(self.field.clone());
        }
        let k = self.field.words();
        let (n, m) = (self.num_coeffs(), other.num_coeffs());
        let mut c = vec![0u64; (n + m - 1) * k];
        for i in 0..n {
            let a = &self.c[i * k..(i + 1) * k];
            if self.field.is_zero(a) {
                continue;
            }
            for j in 0..m {
                let b = &other.c[j * k..(j + 1) * k];
                self.field.mul_add_into(a, b, &mut c[(i + j) * k..(i + j + 1) * k]);
            }
        }
        Poly::from_flat(self.field.clone(), c)
    }

    pub fn mul_scalar(&self, s: &[u64]) -> Poly {
        let k = self.field.words();
        let mut c = vec![0u64; self.c.len()];
        for i in 0..self.num_coeffs() {
            self.field
                .mul_into(s, &self.c[i * k..(i + 1) * k], &mut c[i * k..(i + 1) * k]);
        }
        Poly::from_flat(self.field.clone(), c)
    }

    /// Euclidean division: self = q * d + r with deg r < deg d.
    pub fn div_rem(&self, d: &Poly) -> Result<(Poly, Poly)> {
        assert!(self.field == d.field);
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let k = self.field.words();
        let dd = d.degree().unwrap();
        let lead_inv = self.field.inv(&d.leading())?;
        let mut r = self.c.clone();
        let mut q = vec![0u64; 0];
        let rdeg = |r: &Vec<u64>| -> Option<usize> {
            let mut n = r.len() / k;
            while n > 0 && r[(n - 1) * k..n * k].iter().all(|&w| w == 0) {
                n -= 1;
            }
            n.checked_sub(1)
        };
        if let Some(nd) = rdeg(&r) {
            if nd >= dd {
                q = vec![0u64; (nd - dd + 1) * k];
            }
        }
        while let Some(nd) = rdeg(&r) {
            if nd < dd {
                break;
            }
            let mut factor = vec![0u64; k];
            self.field.mul_into(&r[nd * k..(nd + 1) * k], &lead_inv, &mut factor);
            let shift = nd - dd;
            q[shift * k..(shift + 1) * k].copy_from_slice(&factor);
            // r -= factor * x^shift * d
            let mut t = vec![0u64; k];
            for j in 0..=dd {
                self.field.mul_into(&factor, &d.c[j * k..(j + 1) * k], &mut t);
                let dst = &mut r[(shift + j) * k..(shift + j + 1) * k];
                let cur = dst.to_vec();
                self.field.sub_into(&cur, &t, dst);
            }
        }
        Ok((
            Poly::from_flat(self.field.clone(), q),
            Poly::from_flat(self.field.clone(), r),
        ))
    }

    pub fn rem(&self, d: &Poly) -> Result<Poly> {
        Ok(self.div_rem(d)?.1)
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> Poly {
        assert!(!self.is_zero());
        let inv = self.field.inv(&self.leading()).expect("nonzero leading");
        self.mul_scalar(&inv)
    }

    pub fn derivative(&self) -> Poly {
        let k = self.field.words();
        if self.num_coeffs() <= 1 {
            return Poly::zero(self.field.clone());
        }
        let mut c = vec![0u64; self.c.len() - k];
        for i in 1..self.num_coeffs() {
            let scalar = self.field.from_u64(i as u64);
            self.field.mul_into(
                &scalar,
                &self.c[i * k..(i + 1) * k],
                &mut c[(i - 1) * k..i * k],
            );
        }
        Poly::from_flat(self.field.clone(), c)
    }

    /// Evaluates at a field element by Horner's rule.
    pub fn eval(&self, x: &[u64]) -> Vec<u64> {
        let k = self.field.words();
        let mut acc = self.field.zero();
        for i in (0..self.num_coeffs()).rev() {
            let prev = acc.clone();
            self.field.mul_into(&prev, x, &mut acc);
            let cur = acc.clone();
            self.field.add_into(&cur, &self.c[i * k..(i + 1) * k], &mut acc);
        }
        acc
    }

    /// self^e mod m by binary exponentiation.
    pub fn pow_mod(&self, mut e: u128, m: &Poly) -> Result<Poly> {
        let mut acc = Poly::one(self.field.clone()).rem(m)?;
        let mut base = self.rem(m)?;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(m)?;
            }
            base = base.mul(&base).rem(m)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Rabin's irreducibility test over the coefficient field.
    pub fn is_irreducible(&self) -> bool {
        let n = match self.degree() {
            None | Some(0) => return false,
            Some(n) => n,
        };
        if n == 1 {
            return true;
        }
        let f = self.monic();
        let q = self.field.order();
        let x = Poly::x(self.field.clone());
        // x^(q^n) = x mod f
        let mut xq = x.clone();
        for _ in 0..n {
            xq = frobenius_power(&xq, q, &f);
        }
        if xq != x.rem(&f).unwrap() {
            return false;
        }
        // gcd(x^(q^(n/r)) - x, f) = 1 for every prime r | n
        for r in prime_factors_u128(n as u128) {
            let e = n / r as usize;
            let mut xe = x.clone();
            for _ in 0..e {
                xe = frobenius_power(&xe, q, &f);
            }
            let g = xe.sub(&x).gcd(&f);
            if g.degree() != Some(0) {
                return false;
            }
        }
        true
    }

    /// Canonical comparison key: (degree, coefficients constant term first).
    fn sort_key(&self) -> (usize, Vec<u64>) {
        (self.degree().map_or(0, |d| d + 1), self.c.clone())
    }
}

/// g^(q) mod f, i.e. one application of the q-power map to a residue.
fn frobenius_power(g: &Poly, q: u128, f: &Poly) -> Poly {
    g.pow_mod(q, f).expect("nonzero modulus")
}

/// Extended Euclid: returns (g, u, v) with u*a + v*b = g (g not normalized).
fn poly_ext_gcd(a: &Poly, b: &Poly) -> (Poly, Poly, Poly) {
    let field = a.field().clone();
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut u0, mut u1) = (Poly::one(field.clone()), Poly::zero(field.clone()));
    let (mut v0, mut v1) = (Poly::zero(field.clone()), Poly::one(field));
    while !r1.is_zero() {
        let (q, r) = r0.div_rem(&r1).expect("nonzero divisor");
        r0 = r1;
        r1 = r;
        let nu = u0.sub(&q.mul(&u1));
        u0 = u1;
        u1 = nu;
        let nv = v0.sub(&q.mul(&v1));
        v0 = v1;
        v1 = nv;
    }
    (r0, u0, v0)
}

/// A complete factorization: `unit * prod factor_i^mult_i` recovers the input.
#[derive(Clone, Debug)]
pub struct Factorization {
    /// Leading unit of the input polynomial.
    pub unit: Vec<u64>,
    /// Monic irreducible factors with multiplicities, sorted by degree then
    /// by coefficients (constant term first).
    pub factors: Vec<(Poly, usize)>,
}

impl Factorization {
    /// Multiplies the factorization back out.
    pub fn product(&self, field: &FieldSpec) -> Poly {
        let mut acc = Poly::from_flat(field.clone(), self.unit.clone());
        for (f, m) in &self.factors {
            for _ in 0..*m {
                acc = acc.mul(f);
            }
        }
        acc
    }
}

/// Factors a nonzero polynomial into monic irreducibles. Las Vegas inside
/// (seeded, so deterministic across runs); the result is canonically sorted
/// and re-multiplied as a self-check before being returned.
pub fn factor_poly(f: &Poly) -> Result<Factorization> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let field = f.field().clone();
    let unit = f.leading();
    let mut factors: Vec<(Poly, usize)> = Vec::new();
    if f.degree() == Some(0) {
        return Ok(Factorization { unit, factors });
    }
    let monic = f.monic();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0f5eed);
    for (g, mult) in squarefree_decomposition(&monic)? {
        for (h, d) in distinct_degree_split(&g)? {
            for irr in equal_degree_factor(&h, d, &mut rng)? {
                factors.push((irr, mult));
            }
        }
    }
    factors.sort_by(|a, b| a.0.sort_key().cmp(&b.0.sort_key()));
    let fact = Factorization { unit, factors };
    let check = fact.product(&field);
    if &check != f {
        return Err(Error::Internal("factorization does not re-multiply".into()));
    }
    Ok(fact)
}

/// Writes a monic polynomial as a product of coprime squarefree parts with
/// multiplicities, handling the char-p collapse f = g(x^p).
fn squarefree_decomposition(f: &Poly) -> Result<Vec<(Poly, usize)>> {
    let mut out = Vec::new();
    if f.degree() == Some(0) {
        return Ok(out);
    }
    let fp = f.derivative();
    if fp.is_zero() {
        let g = pth_root_poly(f);
        let p = f.field().p() as usize;
        for (h, m) in squarefree_decomposition(&g)? {
            out.push((h, m * p));
        }
        return Ok(out);
    }
    let mut c = f.gcd(&fp);
    let mut w = f.div_rem(&c)?.0.monic();
    let mut i = 1usize;
    while w.degree() != Some(0) {
        let y = w.gcd(&c);
        let z = w.div_rem(&y)?.0;
        if z.degree() != Some(0) {
            out.push((z.monic(), i));
        }
        w = y;
        c = c.div_rem(&w)?.0;
        if c.is_zero() {
            return Err(Error::Internal("squarefree bookkeeping broke".into()));
        }
        i += 1;
    }
    if c.degree() != Some(0) {
        // The remaining part is a polynomial in x^p.
        let g = pth_root_poly(&c.monic());
        let p = f.field().p() as usize;
        for (h, m) in squarefree_decomposition(&g)? {
            out.push((h, m * p));
        }
    }
    Ok(out)
}

/// For f with zero derivative, the unique g with g(x)^p = f(x).
fn pth_root_poly(f: &Poly) -> Poly {
    let field = f.field().clone();
    let p = field.p() as usize;
    let k = field.words();
    let deg = f.degree().unwrap_or(0);
    let mut c = Vec::new();
    let mut i = 0;
    while i * p <= deg {
        let coeff = f.coeff(i * p);
        c.extend(field.pth_root(&coeff));
        i += 1;
    }
    let _ = k;
    Poly::from_flat(field, c)
}

/// Splits a monic squarefree polynomial into parts whose irreducible factors
/// all share one degree; returns (part, degree) pairs.
fn distinct_degree_split(f: &Poly) -> Result<Vec<(Poly, usize)>> {
    let field = f.field().clone();
    let q = field.order();
    let x = Poly::x(field.clone());
    let mut out = Vec::new();
    let mut rest = f.clone();
    let mut h = x.rem(&rest)?;
    let mut d = 0usize;
    while rest.degree().map_or(false, |deg| deg > 0) {
        d += 1;
        if rest.degree() == Some(d) {
            out.push((rest.clone(), d));
            break;
        }
        if 2 * d > rest.degree().unwrap() {
            // Whatever remains is a single irreducible of full degree.
            out.push((rest.clone(), rest.degree().unwrap()));
            break;
        }
        h = frobenius_power(&h, q, &rest);
        let g = h.sub(&x).gcd(&rest);
        if g.degree().map_or(false, |deg| deg > 0) {
            out.push((g.clone(), d));
            rest = rest.div_rem(&g)?.0.monic();
            h = h.rem(&rest)?;
        }
    }
    Ok(out)
}

const EQUAL_DEGREE_RETRIES: usize = 64;

/// Cantor-Zassenhaus equal-degree factorization of a monic squarefree
/// polynomial whose irreducible factors all have degree d.
fn equal_degree_factor(f: &Poly, d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Poly>> {
    let deg = f.degree().unwrap();
    if deg == d {
        return Ok(vec![f.monic()]);
    }
    let field = f.field().clone();
    let q = field.order();
    let k = field.words();
    for _ in 0..EQUAL_DEGREE_RETRIES {
        // Random nonconstant h of degree < deg f.
        let mut c = vec![0u64; deg * k];
        for w in c.iter_mut() {
            *w = rng.random_range(0..field.p());
        }
        let h = Poly::from_flat(field.clone(), c);
        if h.degree().map_or(true, |dh| dh == 0) {
            continue;
        }
        let g = if field.p() == 2 {
            // Trace map over GF(2): h + h^2 + h^4 + ... has dk summands.
            let bits = (d as u32) * (field.k() as u32);
            let mut t = Poly::zero(field.clone());
            let mut cur = h.rem(f)?;
            for _ in 0..bits {
                t = t.add(&cur);
                cur = cur.mul(&cur).rem(f)?;
            }
            t.gcd(f)
        } else {
            let e = (q.checked_pow(d as u32).expect("q^d overflows u128") - 1) / 2;
            let probe = h.pow_mod(e, f)?;
            probe.sub(&Poly::one(field.clone())).gcd(f)
        };
        if let Some(dg) = g.degree() {
            if dg > 0 && dg < deg {
                let rest = f.div_rem(&g)?.0.monic();
                let mut out = equal_degree_factor(&g, d, rng)?;
                out.extend(equal_degree_factor(&rest, d, rng)?);
                return Ok(out);
            }
        }
    }
    Err(Error::RetryBudgetExhausted("equal-degree factorization"))
}

/// Finds the canonical root (smallest by encoding) of f in the field `ext`,
/// or None when f has no root there. Coefficients of f must lie in `ext`
/// itself or in its prime subfield; anything else is an unsupported tower.
pub fn find_root(f: &Poly, ext: &FieldSpec) -> Result<Option<Vec<u64>>> {
    let base = f.field();
    let g = if base == ext {
        f.clone()
    } else if base.k() == 1 && base.p() == ext.p() {
        // Coefficient-wise embedding through the prime subfield.
        let mut c = Vec::with_capacity(f.num_coeffs() * ext.words());
        for i in 0..f.num_coeffs() {
            c.extend(ext.embed_base(f.coeff(i)[0]));
        }
        Poly::from_flat(ext.clone(), c)
    } else if base.p() != ext.p() {
        return Err(Error::FieldMismatch);
    } else {
        return Err(Error::UnsupportedTower);
    };
    if g.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let mut best: Option<Vec<u64>> = None;
    for (factor, _) in factor_poly(&g)?.factors {
        if factor.degree() == Some(1) {
            // Monic x + c has root -c.
            let root = ext.neg(&factor.coeff(0));
            if best.as_ref().map_or(true, |b| ext.encode(&root) < ext.encode(b)) {
                best = Some(root);
            }
        }
    }
    Ok(best)
}

/// All roots of f in `ext` (with the same embedding rules as [`find_root`]),
/// in canonical order, ignoring multiplicity.
pub fn all_roots(f: &Poly, ext: &FieldSpec) -> Result<Vec<Vec<u64>>> {
    let base = f.field();
    let g = if base == ext {
        f.clone()
    } else if base.k() == 1 && base.p() == ext.p() {
        let mut c = Vec::with_capacity(f.num_coeffs() * ext.words());
        for i in 0..f.num_coeffs() {
            c.extend(ext.embed_base(f.coeff(i)[0]));
        }
        Poly::from_flat(ext.clone(), c)
    } else if base.p() != ext.p() {
        return Err(Error::FieldMismatch);
    } else {
        return Err(Error::UnsupportedTower);
    };
    if g.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let mut roots = Vec::new();
    for (factor, _) in factor_poly(&g)?.factors {
        if factor.degree() == Some(1) {
            roots.push(ext.neg(&factor.coeff(0)));
        }
    }
    roots.sort_by_key(|r| ext.encode(r));
    Ok(roots)
}
