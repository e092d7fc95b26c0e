//! Derivative-free simplex minimizer with standard reflection, expansion,
//! contraction, and shrink coefficients.

/// Outcome of a simplex run.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Best value seen after each function evaluation.
    pub history: Vec<f64>,
}

/// Minimizes `f` from `x0`, stepping `step` along each axis for the
/// initial simplex, stopping after `max_evaluations` or when the simplex
/// collapses.
pub fn minimize(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_evaluations: usize,
) -> MinimizeResult {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let dim = x0.len();
    assert!(dim >= 1);
    let mut evaluations = 0usize;
    let mut history = Vec::new();
    let mut best_seen = f64::INFINITY;
    let eval = |f: &mut dyn FnMut(&[f64]) -> f64,
                    x: &[f64],
                    evaluations: &mut usize,
                    history: &mut Vec<f64>,
                    best_seen: &mut f64|
     -> f64 {
        let v = f(x);
        *evaluations += 1;
        if v < *best_seen {
            *best_seen = v;
        }
        history.push(*best_seen);
        v
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(f, x0, &mut evaluations, &mut history, &mut best_seen);
    simplex.push((x0.to_vec(), v0));
    for i in 0..dim {
        if evaluations >= max_evaluations {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(f, &x, &mut evaluations, &mut history, &mut best_seen);
        simplex.push((x, v));
    }

    while evaluations < max_evaluations && simplex.len() == dim + 1 {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = simplex[dim].1 - simplex[0].1;
        let size: f64 = (0..dim)
            .map(|i| {
                simplex
                    .iter()
                    .map(|(x, _)| (x[i] - simplex[0].0[i]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() < 1e-12 * (1.0 + simplex[0].1.abs()) && size < 1e-10 {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|i| simplex[..dim].iter().map(|(x, _)| x[i]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();

        let reflected: Vec<f64> = (0..dim)
            .map(|i| centroid[i] + ALPHA * (centroid[i] - worst.0[i]))
            .collect();
        let v_reflected = eval(f, &reflected, &mut evaluations, &mut history, &mut best_seen);

        if v_reflected < simplex[0].1 {
            if evaluations >= max_evaluations {
                simplex[dim] = (reflected, v_reflected);
                break;
            }
            let expanded: Vec<f64> = (0..dim)
                .map(|i| centroid[i] + GAMMA * (reflected[i] - centroid[i]))
                .collect();
            let v_expanded = eval(f, &expanded, &mut evaluations, &mut history, &mut best_seen);
            simplex[dim] = if v_expanded < v_reflected {
                (expanded, v_expanded)
            } else {
                (reflected, v_reflected)
            };
        } else if v_reflected < simplex[dim - 1].1 {
            simplex[dim] = (reflected, v_reflected);
        } else {
            if evaluations >= max_evaluations {
                break;
            }
            let contracted: Vec<f64> = (0..dim)
                .map(|i| centroid[i] + RHO * (worst.0[i] - centroid[i]))
                .collect();
            let v_contracted = eval(f, &contracted, &mut evaluations, &mut history, &mut best_seen);
            if v_contracted < worst.1 {
                simplex[dim] = (contracted, v_contracted);
            } else {
                // Shrink toward the best point.
                let best = simplex[0].0.clone();
                for k in 1..=dim {
                    if evaluations >= max_evaluations {
                        break;
                    }
                    let x: Vec<f64> = (0..dim)
                        .map(|i| best[i] + SIGMA * (simplex[k].0[i] - best[i]))
                        .collect();
                    let v = eval(f, &x, &mut evaluations, &mut history, &mut best_seen);
                    simplex[k] = (x, v);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    MinimizeResult {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        evaluations,
        history,
    }
}
