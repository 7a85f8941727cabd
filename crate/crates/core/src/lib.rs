//! Exact computations for adjoint local factors of tamely ramified
//! symplectic Weil group parameters over p-adic fields.

pub mod chars;
pub mod exactnum;
pub mod galoisgrp;
pub mod localfactors;
pub mod tamefield;
pub mod verifier;
pub mod weilrep;
