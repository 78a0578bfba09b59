//! Central finite differences and gradient comparison.

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate.
pub fn central_diff(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let x0 = x[i];
            x[i] = x0 + h;
            let fp = f(&x);
            x[i] = x0 - h;
            let fm = f(&x);
            x[i] = x0;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Outcome of comparing an analytic gradient with a numeric one.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    /// `|a - n| - (atol + rtol |n|)` at the worst index; `<= 0` passes.
    pub excess: f64,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.excess <= 0.0
    }
}

pub fn compare(analytic: &[f64], numeric: &[f64], rtol: f64, atol: f64) -> GradCheck {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    let mut worst = GradCheck {
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        excess: f64::NEG_INFINITY,
    };
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let excess = if a.is_finite() && n.is_finite() {
            (a - n).abs() - (atol + rtol * n.abs())
        } else {
            f64::INFINITY
        };
        if excess > worst.excess {
            worst = GradCheck {
                worst_index: i,
                analytic: a,
                numeric: n,
                excess,
            };
        }
    }
    worst
}

/// Panics with the worst offending entry when the gradients disagree.
pub fn assert_grad_close(analytic: &[f64], numeric: &[f64], rtol: f64, atol: f64) {
    let c = compare(analytic, numeric, rtol, atol);
    assert!(
        c.passed(),
        "gradient mismatch at {}: analytic {} vs numeric {}",
        c.worst_index,
        c.analytic,
        c.numeric
    );
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
