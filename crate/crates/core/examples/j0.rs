//! The first positive zero of the Bessel function `J0`.
//!
//!     cargo run --example j0

use broxlab::oracle::{bessel_j0, j0_constant};

fn main() {
    let z = j0_constant();
    println!("{z:.15}");
    println!("J0 at the zero: {:.3e}", bessel_j0(z));
}
