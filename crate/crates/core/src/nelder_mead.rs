//! Budgeted Nelder–Mead simplex search.

pub(crate) struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Minimize `f` starting from `start` with per-coordinate initial simplex
/// steps `scale`, spending at most `budget` evaluations (including the start).
/// Never returns a point worse than `start`.
pub(crate) fn minimize<F>(mut f: F, start: &[f64], scale: &[f64], budget: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(start, &mut evals);
    simplex.push((start.to_vec(), v0));
    for i in 0..n {
        if evals >= budget {
            break;
        }
        let mut x = start.to_vec();
        x[i] += scale[i];
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    if simplex.len() < n + 1 {
        return best_of(simplex);
    }

    while evals < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };

        let reflected = along(1.0);
        let fr = eval(&reflected, &mut evals);
        if fr < simplex[0].1 {
            if evals >= budget {
                simplex[n] = (reflected, fr);
                break;
            }
            let expanded = along(2.0);
            let fe = eval(&expanded, &mut evals);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        if evals >= budget {
            break;
        }
        let (contracted, fc) = if fr < worst.1 {
            let x = along(0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (contracted, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if evals >= budget {
                break;
            }
            let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
            let v = eval(&x, &mut evals);
            *vertex = (x, v);
        }
    }
    best_of(simplex)
}

fn best_of(simplex: Vec<(Vec<f64>, f64)>) -> Minimum {
    let (point, value) = simplex
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("simplex has at least the start point");
    Minimum { point, value }
}
