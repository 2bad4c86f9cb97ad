//! Exact-arithmetic toolkit for deciding isomorphism of multiway tensors over
//! finite fields by way of their derivation algebras and the smallest
//! derivation-closed tensor spaces containing them.
//!
//! The crate is organised bottom-up: finite fields ([`field`]), dense exact
//! linear algebra ([`linalg`]), tensors and their actions ([`tensor`]),
//! operator spaces such as derivation and adjoint algebras ([`opalg`]),
//! derivation-closed tensor spaces ([`spaces`]), Lie-module machinery
//! ([`modules`]), Chevalley recognition ([`chevalley`]), pseudo-isomorphism
//! ([`pseudo`]), crystal combinatorics and module constructions ([`crystal`]),
//! and the isomorphism engine itself ([`engine`]).

pub mod error;
pub mod field;

pub use error::{Error, Result};
pub use field::{FieldSpec, Poly};
pub mod linalg;
pub use linalg::{Matrix, Subspace};
pub mod tensor;
pub use tensor::{BimapView, Frame, LinearForm, OperatorTuple, Tensor};
pub mod examples;
pub mod opalg;
pub use opalg::{adjoint_algebra, derivation_algebra, is_derivation, op_space, OperatorSpace, Structure};
pub mod spaces;
pub use spaces::{densor, galois_check, lie_tensor_space, ten_space, GaloisCheck, TensorSpace};
pub mod chevalley;
pub use chevalley::{anti_transpose, diagram_twist, recognize_type_a, TypeAOutcome, TypeARecognition};
pub mod modules;
pub use modules::{
    associative_envelope, commutant, cyclic_generator, cyclic_pseudo_iso, endomorphism_ring,
    full_tensor_decompose, hom_space, meataxe_split, minimal_ideals, module_iso_fixed_algebra,
    primitive_idempotent, restrict_action, spin, split_off, tensor_decompose, CyclicPseudoIso,
    EndomorphismRing, Envelope, FieldStructure, FullFactorization, IdealDecomposition,
    LieModule, MatrixLieAlgebra, MeataxeOutcome, SplitOff, TensorFactorization,
};
pub mod pseudo;
pub use pseudo::{pseudo_iso, simple_factor_pseudo_iso, PseudoIso};
pub mod crystal;
pub use crystal::{
    build_simple_module, divisor_count, enumerate_ssyt, family_tensor, iterated_insert,
    lr_adjoint_formula, lr_coefficient, row_insert, FamilyMember, LRQuery, Partition, Tableau,
};
pub mod engine;
pub use engine::{
    aut_generators, brute_force_iso, decide_isomorphism, gen_example, iso_test, tiny_densor_iso,
    AutGenerators, IsoMethod, IsoResult, Verdict, VerdictReason,
};
