//! Small internal 1-D solvers shared by the design and fitting modules.

/// Golden-section minimization of `f` on `[a, b]` (requires a unimodal
/// objective on the bracket). Returns the abscissa of the minimum once the
/// bracket shrinks below `rel_tol` relative to its midpoint.
pub(crate) fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > rel_tol * (a.abs() + b.abs()).max(1e-300) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Bisection for `f(x) = 0` on `[a, b]` where `f(a)` and `f(b)` differ in
/// sign. Runs until the bracket is below `rel_tol` relative width.
pub(crate) fn bisect_root<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
) -> f64 {
    let mut fa = f(a);
    debug_assert!(fa * f(b) <= 0.0, "bisection bracket does not straddle a root");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
    }
    0.5 * (a + b)
}
