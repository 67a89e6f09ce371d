//! Exact computations with sheaves of modules over finite topological spaces.

pub mod checks;
pub mod exactalg;
pub mod oracle;
pub mod pairing;
pub mod random;
pub mod sheaf;
pub mod space;
pub mod symplectic;
