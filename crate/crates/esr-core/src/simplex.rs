//! Derivative-free Nelder-Mead simplex descent.
//!
//! Small and deliberately plain: reflection, expansion, contraction, shrink
//! with the textbook coefficients. The best objective value is recorded per
//! iteration and never increases (the accepted point always replaces the
//! worst vertex only when it improves on it).

/// Outcome of a simplex run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value after each iteration, non-increasing.
    pub history: Vec<f64>,
}

/// Minimizes `f` starting at `x0`, displacing each coordinate by the
/// matching entry of `steps` to span the initial simplex.
///
/// Converges when the best objective reaches `floor` (for sums of squares
/// the caller passes its resolution scale, so an exact starting guess stops
/// within one cycle), or when the simplex value spread — the most the
/// objective can still change within one cycle — drops below `rel_tol`
/// relative to the vertex values. Gives up after `max_iterations`.
pub fn minimize(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    rel_tol: f64,
    floor: f64,
    max_iterations: usize,
) -> SimplexResult {
    assert_eq!(x0.len(), steps.len());
    let n = x0.len();
    assert!(n > 0, "at least one free parameter");

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for k in 0..n {
        let mut v = x0.to_vec();
        v[k] += steps[k];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = values.iter().cloned().fold(f64::INFINITY, f64::min) <= floor;

    while !converged && iterations < max_iterations {
        // Order vertices best → worst.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for &idx in order.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += x / n as f64;
            }
        }

        let point_along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = point_along(1.0);
        let f_reflected = f(&reflected);

        if f_reflected < values[best] {
            let expanded = point_along(2.0);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            let contracted = if f_reflected < values[worst] {
                point_along(0.5)
            } else {
                point_along(-0.5)
            };
            let f_contracted = f(&contracted);
            if f_contracted < values[worst].min(f_reflected) {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[best].clone();
                for idx in 0..=n {
                    if idx == best {
                        continue;
                    }
                    for (x, a) in simplex[idx].iter_mut().zip(&anchor) {
                        *x = a + 0.5 * (*x - a);
                    }
                    values[idx] = f(&simplex[idx]);
                }
            }
        }

        iterations += 1;
        let new_best = values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        history.push(new_best);

        let new_worst = values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let spread = new_worst - new_best;
        let denom = (new_best.abs() + new_worst.abs()).max(f64::MIN_POSITIVE);
        if new_best <= floor || spread <= rel_tol * denom {
            converged = true;
        }
    }

    let (best_idx, &objective) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("non-empty simplex");
    SimplexResult {
        x: simplex[best_idx].clone(),
        objective,
        iterations,
        converged,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let mut f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2);
        let res = minimize(&mut f, &[0.0, 0.0], &[0.5, 0.5], 1e-12, 0.0, 2000);
        assert!(res.converged);
        assert!((res.x[0] - 3.0).abs() < 1e-4, "x = {:?}", res.x);
        assert!((res.x[1] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn exact_start_converges_within_one_cycle() {
        let mut f = |x: &[f64]| (x[0] - 1.0).powi(2);
        let res = minimize(&mut f, &[1.0], &[0.1], 1e-10, 0.0, 100);
        assert!(res.converged);
        assert_eq!(res.objective, 0.0);
        // One cycle = n + 1 iterations.
        assert!(res.iterations <= 2);
    }

    #[test]
    fn history_non_increasing() {
        let mut f = |x: &[f64]| {
            // Rosenbrock-ish valley.
            let (a, b) = (x[0], x[1]);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let res = minimize(&mut f, &[-1.2, 1.0], &[0.3, 0.3], 1e-14, 0.0, 5000);
        for w in res.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-30, "best objective increased: {w:?}");
        }
        assert!(res.objective < 1e-6, "objective = {:e}", res.objective);
    }
}
