//! Special functions.

/// Digamma function for positive arguments.
///
/// Shifts the argument above 10 with `psi(x) = psi(x + 1) - 1/x`, then sums
/// the Bernoulli asymptotic series.
pub fn digamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "digamma is only implemented for x > 0");
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // B_{2n} / (2n) for n = 1..7
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 / x - series
}
