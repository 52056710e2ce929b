//! Fixtures shared by the benchmarks.

use vortexpair::profiles::{bump, patch};
use vortexpair::{Domain, Field};

/// Builtin patch on a `nx x nx/2` grid over `(4, 4)`.
pub fn patch_on(nx: usize) -> Field {
    patch(Domain::new(4.0, 4.0, nx, nx / 2).expect("valid grid"))
}

/// Smooth bump on a `nx x nx/2` grid over `(2, 2)`.
pub fn bump_on(nx: usize) -> Field {
    bump(Domain::new(2.0, 2.0, nx, nx / 2).expect("valid grid"))
}
