//! Nelder–Mead minimization with dimension-adaptive coefficients.

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub max_iters: usize,
    /// Stop once the spread of function values across the simplex falls
    /// below this.
    pub f_tol: f64,
    /// ... and every vertex lies within this of the best one (max norm).
    pub x_tol: f64,
}

fn order(fs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fs.len()).collect();
    idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]).then(a.cmp(&b)));
    idx
}

/// Minimizes `f` from `x0` using an axis-aligned initial simplex of edge
/// `step`. Non-finite values are treated as `+∞`.
pub fn minimize(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: f64, opts: SimplexOptions) -> SimplexResult {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma) = (1.0, 1.0 + 2.0 / nf);
    let rho = 0.75 - 1.0 / (2.0 * nf);
    let sigma = 1.0 - 1.0 / nf;

    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        let v = f(x);
        if v.is_finite() { v } else { f64::INFINITY }
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut fs: Vec<f64> = pts.iter().map(|p| eval(p)).collect();

    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        let idx = order(&fs);
        let (best, worst, second) = (idx[0], idx[n], idx[n - 1]);

        let spread = fs[worst] - fs[best];
        if spread.is_finite() && spread <= opts.f_tol {
            let xb = &pts[best];
            let diam = pts
                .iter()
                .flat_map(|p| p.iter().zip(xb).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if diam <= opts.x_tol {
                converged = true;
                break;
            }
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (k, p) in pts.iter().enumerate() {
            if k != worst {
                centroid.iter_mut().zip(p).for_each(|(c, v)| *c += v);
            }
        }
        centroid.iter_mut().for_each(|c| *c /= nf);

        let xw = &pts[worst];
        for i in 0..n {
            trial[i] = centroid[i] + alpha * (centroid[i] - xw[i]);
        }
        let fr = eval(&trial);

        if fr < fs[best] {
            for i in 0..n {
                trial2[i] = centroid[i] + gamma * (trial[i] - centroid[i]);
            }
            let fe = eval(&trial2);
            if fe < fr {
                pts[worst].copy_from_slice(&trial2);
                fs[worst] = fe;
            } else {
                pts[worst].copy_from_slice(&trial);
                fs[worst] = fr;
            }
            continue;
        }
        if fr < fs[second] {
            pts[worst].copy_from_slice(&trial);
            fs[worst] = fr;
            continue;
        }
        // contraction, outside if the reflection improved on the worst
        let outside = fr < fs[worst];
        for i in 0..n {
            trial2[i] = if outside {
                centroid[i] + rho * (trial[i] - centroid[i])
            } else {
                centroid[i] + rho * (xw[i] - centroid[i])
            };
        }
        let fc = eval(&trial2);
        if fc < fr.min(fs[worst]) {
            pts[worst].copy_from_slice(&trial2);
            fs[worst] = fc;
            continue;
        }
        let xb = pts[best].clone();
        for k in 0..=n {
            if k == best {
                continue;
            }
            for i in 0..n {
                pts[k][i] = xb[i] + sigma * (pts[k][i] - xb[i]);
            }
            fs[k] = eval(&pts[k]);
        }
    }

    let best = order(&fs)[0];
    SimplexResult { x: pts[best].clone(), f: fs[best], iterations, evaluations: evals, converged }
}
