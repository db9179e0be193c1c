use super::{Ivifn, IvifnError, Level};

fn same_shapes(x: &Ivifn, y: &Ivifn) -> Result<(), IvifnError> {
    if x.shapes() == y.shapes() {
        Ok(())
    } else {
        Err(IvifnError::ShapeMismatch)
    }
}

/// Componentwise sum.
pub fn add(x: &Ivifn, y: &Ivifn) -> Result<Ivifn, IvifnError> {
    same_shapes(x, y)?;
    let mut s = [0.0; 8];
    for (i, v) in s.iter_mut().enumerate() {
        *v = x.spreads()[i] + y.spreads()[i];
    }
    Ok(Ivifn::from_parts(x.mean() + y.mean(), s, x.shapes().clone()))
}

/// `x - y`: left spreads of `x` pair with right spreads of `y`.
pub fn sub(x: &Ivifn, y: &Ivifn) -> Result<Ivifn, IvifnError> {
    same_shapes(x, y)?;
    let a = x.spreads();
    let b = y.spreads();
    let mut s = [0.0; 8];
    for pair in 0..4 {
        let (l, r) = (2 * pair, 2 * pair + 1);
        s[l] = a[l] + b[r];
        s[r] = a[r] + b[l];
    }
    Ok(Ivifn::from_parts(x.mean() - y.mean(), s, x.shapes().clone()))
}

/// `lambda * x`; a negative factor swaps every left/right pair.
pub fn scalar_mul(lambda: f64, x: &Ivifn) -> Ivifn {
    let a = x.spreads();
    let mut s = [0.0; 8];
    for pair in 0..4 {
        let (l, r) = (2 * pair, 2 * pair + 1);
        if lambda >= 0.0 {
            s[l] = lambda * a[l];
            s[r] = lambda * a[r];
        } else {
            s[l] = -lambda * a[r];
            s[r] = -lambda * a[l];
        }
    }
    Ivifn::from_parts(lambda * x.mean(), s, x.shapes().clone())
}

/// Product: each support of the result is the interval product of the
/// matching supports, re-centred on `a1 * a2`.
pub fn mul(x: &Ivifn, y: &Ivifn) -> Result<Ivifn, IvifnError> {
    same_shapes(x, y)?;
    let mean = x.mean() * y.mean();
    let mut s = [0.0; 8];
    for level in Level::ALL {
        let p = x.level(level).mul(&y.level(level));
        let (l, r) = level.spreads();
        s[l.index()] = mean - p.lo;
        s[r.index()] = p.hi - mean;
    }
    Ivifn::with_shapes(mean, s, x.shapes().clone())
}

impl std::ops::Neg for &Ivifn {
    type Output = Ivifn;

    fn neg(self) -> Ivifn {
        scalar_mul(-1.0, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(a: f64, s: [f64; 8]) -> Ivifn {
        Ivifn::new(a, s).unwrap()
    }

    #[test]
    fn product_of_positive_numbers() {
        let five = n(5.0, [2.0, 2.0, 3.0, 3.0, 5.0, 5.0, 5.0, 4.0]);
        let eight = n(8.0, [1.0, 1.0, 2.0, 2.0, 4.0, 4.0, 2.0, 3.0]);
        let p = mul(&five, &eight).unwrap();
        assert_eq!(p, n(40.0, [19.0, 23.0, 28.0, 40.0, 40.0, 80.0, 40.0, 59.0]));
    }

    #[test]
    fn negative_scalar_swaps_pairs() {
        let eight = n(8.0, [1.0, 1.0, 2.0, 2.0, 4.0, 4.0, 2.0, 3.0]);
        let m = scalar_mul(-5.0, &eight);
        assert_eq!(m, n(-40.0, [5.0, 5.0, 10.0, 10.0, 20.0, 20.0, 15.0, 10.0]));
    }

    #[test]
    fn subtraction_crosses_spreads() {
        let x = n(10.0, [1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let y = n(4.0, [3.0, 5.0, 3.0, 5.0, 3.0, 5.0, 3.0, 5.0]);
        let d = sub(&x, &y).unwrap();
        assert_eq!(d, n(6.0, [6.0, 5.0, 6.0, 5.0, 6.0, 5.0, 6.0, 5.0]));
    }

    #[test]
    fn crisp_product_is_scalar_product() {
        let x = n(-3.0, [1.0, 2.0, 1.5, 2.5, 3.0, 4.0, 2.0, 3.0]);
        let c = Ivifn::crisp(-2.0);
        assert!(mul(&c, &x).unwrap().approx_eq(&scalar_mul(-2.0, &x), 1e-12));
    }
}
