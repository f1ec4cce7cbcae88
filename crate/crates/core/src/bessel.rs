//! Integer-order Bessel functions `J_k(x)` for the Chebyshev propagator.

/// `J_0(x) ..= J_n(x)` for real `x ≥ 0`, by Miller's backward recurrence
/// normalized with `J_0 + 2 Σ J_2k = 1`.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let x = x.abs();
    let top = n.max(x.ceil() as usize);
    // Starting order well above both n and x so the recurrence has converged
    // onto the minimal solution by the time it reaches the orders we keep.
    let mut start = top + 30 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;

    let mut j_next = 0.0;
    let mut j_cur = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur now holds order k - 1.
        let order = k - 1;
        if order <= n {
            out[order] = j_cur;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += j_cur;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from scipy.special.jv.
    const REFERENCE: &[(usize, f64, f64)] = &[
        (0, 1.0, 0.7651976865579666),
        (1, 1.0, 0.44005058574493355),
        (0, 10.0, -0.24593576445134832),
        (5, 10.0, -0.2340615281867936),
        (50, 100.0, -0.03869833972852563),
        (120, 100.0, 1.1476221795665094e-05),
        (3, 0.001, 2.083333203125009e-11),
        (0, 250.5, -0.0021425350229667406),
        (260, 250.5, 0.008116782141827686),
        (30, 0.001, 3.511074556422315e-132),
    ];

    #[test]
    fn matches_reference_values() {
        for &(n, x, expected) in REFERENCE {
            let j = bessel_j_sequence(x, n.max(5));
            let err = (j[n] - expected).abs() / expected.abs();
            assert!(err < 1e-11, "J_{n}({x}) = {} vs {expected}", j[n]);
        }
    }

    #[test]
    fn zero_argument() {
        assert_eq!(bessel_j_sequence(0.0, 3), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sum_rules() {
        for x in [0.3, 4.0, 77.7, 900.0] {
            let j = bessel_j_sequence(x, (x as usize) * 2 + 60);
            let sq: f64 = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((sq - 1.0).abs() < 1e-12, "x = {x}: {sq}");
        }
    }
}
