//! The four link functions and their derivatives.
//!
//! cargo run --example links

use uwarma::Link;

fn main() -> uwarma::Result<()> {
    println!("{:<8} {:>10} {:>10} {:>10}", "link", "g(0.3)", "g'(0.3)", "g^-1(0.5)");
    for link in Link::ALL {
        println!(
            "{:<8} {:>10.5} {:>10.5} {:>10.5}",
            link.name(),
            link.eval(0.3)?,
            link.deriv(0.3)?,
            link.inverse(0.5)
        );
    }
    Ok(())
}
