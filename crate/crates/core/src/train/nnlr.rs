use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{MonotoneDirection, TrainError};

/// Settings for the sign-constrained logistic regression solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnlrOptions {
    /// Ridge weight on the slopes; the bias is never penalised.
    pub c: f64,
    /// Stop once every projected-gradient component is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NnlrOptions {
    fn default() -> Self {
        Self { c: 0.0, tolerance: 1e-7, max_iterations: 50_000 }
    }
}

/// Solution of a constrained logistic regression in the caller's
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct NnlrFit {
    pub bias: f64,
    pub coefficients: Vec<f64>,
    pub objective: f64,
    /// Largest projected-gradient component at the solution.
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Columns with zero variance; their coefficients are fixed at 0.
    pub dropped: Vec<usize>,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    crate::approx::sigmoid(z)
}

/// Mean logistic loss plus `c * sum(beta^2)` over a fixed design matrix.
#[derive(Debug, Clone, Copy)]
pub struct NnlrObjective<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    c: f64,
}

impl<'a> NnlrObjective<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: &'a [u8], c: f64) -> Self {
        Self { x, y, c }
    }

    fn logits(&self, bias: f64, beta: &[f64]) -> Array1<f64> {
        let b = Array1::from(beta.to_vec());
        self.x.dot(&b) + bias
    }

    pub fn value(&self, bias: f64, beta: &[f64]) -> f64 {
        let z = self.logits(bias, beta);
        let loss: f64 = z.iter().zip(self.y).map(|(&z, &y)| softplus(z) - f64::from(y) * z).sum();
        loss / self.y.len() as f64 + self.c * beta.iter().map(|b| b * b).sum::<f64>()
    }

    /// Gradient with respect to `(bias, beta)`.
    pub fn gradient(&self, bias: f64, beta: &[f64]) -> (f64, Vec<f64>) {
        let z = self.logits(bias, beta);
        let m = self.y.len() as f64;
        let r: Array1<f64> = z.iter().zip(self.y).map(|(&z, &y)| (sigmoid(z) - f64::from(y)) / m).collect();
        let gb = r.sum();
        let gx = self.x.t().dot(&r);
        let g = gx.iter().zip(beta).map(|(g, b)| g + 2.0 * self.c * b).collect();
        (gb, g)
    }
}

/// Largest violation of the first-order conditions: gradient magnitude on
/// free coordinates, outward-pointing gradient on active bounds.
pub fn kkt_residual(gb: f64, grad: &[f64], beta: &[f64], directions: &[MonotoneDirection]) -> f64 {
    let mut worst = gb.abs();
    for ((&g, &b), &d) in grad.iter().zip(beta).zip(directions) {
        let v = match d {
            MonotoneDirection::Increasing if b <= 0.0 => (-g).max(0.0),
            MonotoneDirection::Decreasing if b >= 0.0 => g.max(0.0),
            _ => g.abs(),
        };
        worst = worst.max(v);
    }
    worst
}

/// Working problem on standardised, non-constant columns.
struct Standardised {
    x: Array2<f64>,
    mean: Vec<f64>,
    scale: Vec<f64>,
    keep: Vec<usize>,
    dirs: Vec<MonotoneDirection>,
    /// ridge weight per kept coordinate, `c / scale^2`
    ridge: Vec<f64>,
}

impl Standardised {
    fn new(x: ArrayView2<f64>, directions: &[MonotoneDirection], c: f64) -> Self {
        let m = x.nrows() as f64;
        let mut keep = Vec::new();
        let mut mean = Vec::new();
        let mut scale = Vec::new();
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let mu = col.sum() / m;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m;
            if var > 0.0 && col.iter().any(|&v| v != col[0]) {
                keep.push(j);
                mean.push(mu);
                scale.push(var.sqrt());
            }
        }
        let mut xs = Array2::zeros((x.nrows(), keep.len()));
        for (k, &j) in keep.iter().enumerate() {
            let (mu, s) = (mean[k], scale[k]);
            for (dst, &src) in xs.column_mut(k).iter_mut().zip(x.column(j)) {
                *dst = (src - mu) / s;
            }
        }
        let dirs = keep.iter().map(|&j| directions[j]).collect();
        let ridge = scale.iter().map(|s| c / (s * s)).collect();
        Self { x: xs, mean, scale, keep, dirs, ridge }
    }

    /// `w = [bias, slopes...]` in standardised coordinates.
    fn value_grad(&self, w: &[f64], y: &[u8], want_grad: bool) -> (f64, Vec<f64>) {
        let m = y.len() as f64;
        let beta = Array1::from(w[1..].to_vec());
        let z = self.x.dot(&beta) + w[0];
        let mut loss = 0.0;
        for (&z, &y) in z.iter().zip(y) {
            loss += softplus(z) - f64::from(y) * z;
        }
        let mut f = loss / m;
        for (b, r) in w[1..].iter().zip(&self.ridge) {
            f += r * b * b;
        }
        if !want_grad {
            return (f, Vec::new());
        }
        let r: Array1<f64> = z.iter().zip(y).map(|(&z, &y)| (sigmoid(z) - f64::from(y)) / m).collect();
        let mut g = Vec::with_capacity(w.len());
        g.push(r.sum());
        let gx = self.x.t().dot(&r);
        for ((gj, b), rw) in gx.iter().zip(&w[1..]).zip(&self.ridge) {
            g.push(gj + 2.0 * rw * b);
        }
        (f, g)
    }

    fn project(&self, w: &mut [f64]) {
        for (b, d) in w[1..].iter_mut().zip(&self.dirs) {
            *b = d.project(*b);
        }
    }

    /// Back to the caller's coordinates over all `d` columns.
    fn to_original(&self, w: &[f64], d: usize) -> (f64, Vec<f64>) {
        let mut beta = vec![0.0; d];
        let mut bias = w[0];
        for (k, &j) in self.keep.iter().enumerate() {
            beta[j] = w[k + 1] / self.scale[k];
            bias -= beta[j] * self.mean[k];
        }
        (bias, beta)
    }

    fn to_scaled(&self, bias: f64, beta: &[f64]) -> Vec<f64> {
        let mut w = vec![bias];
        for (k, &j) in self.keep.iter().enumerate() {
            w[0] += beta[j] * self.mean[k];
            w.push(beta[j] * self.scale[k]);
        }
        w
    }

    /// Projected-gradient residual expressed in the caller's coordinates.
    fn residual(&self, w: &[f64], g: &[f64], c: f64) -> f64 {
        let gb = g[0];
        let mut worst = gb.abs();
        for k in 0..self.keep.len() {
            let s = self.scale[k];
            let beta = w[k + 1] / s;
            let loss_g = g[k + 1] - 2.0 * self.ridge[k] * w[k + 1];
            let go = s * loss_g + self.mean[k] * gb + 2.0 * c * beta;
            let v = match self.dirs[k] {
                MonotoneDirection::Increasing if beta <= 0.0 => (-go).max(0.0),
                MonotoneDirection::Decreasing if beta >= 0.0 => go.max(0.0),
                _ => go.abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

fn validate(x: ArrayView2<f64>, y: &[u8], directions: &[MonotoneDirection], opts: &NnlrOptions) -> Result<(), TrainError> {
    if x.nrows() != y.len() {
        return Err(TrainError::Shape(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    if x.ncols() != directions.len() {
        return Err(TrainError::Shape(format!("{} columns but {} directions", x.ncols(), directions.len())));
    }
    if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(TrainError::NonFinite(format!("design matrix entry ({i}, {j}) is {v}")));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(TrainError::Shape("labels must be 0 or 1".into()));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(TrainError::SingleClass);
    }
    if !(opts.c.is_finite() && opts.c >= 0.0) {
        return Err(TrainError::InvalidParameter(format!("C must be finite and nonnegative, got {}", opts.c)));
    }
    if !(opts.tolerance.is_finite() && opts.tolerance > 0.0) {
        return Err(TrainError::InvalidParameter(format!("tolerance must be positive, got {}", opts.tolerance)));
    }
    Ok(())
}

/// Minimises mean logistic loss plus `c * sum(beta^2)` subject to
/// `beta_j >= 0` on increasing and `beta_j <= 0` on decreasing columns.
///
/// Spectral projected gradient (Barzilai-Borwein steps with a nonmonotone
/// Armijo search) on internally standardised columns; constant columns are
/// dropped with a warning and get a zero coefficient.
pub fn solve_nnlr(
    x: ArrayView2<f64>,
    y: &[u8],
    directions: &[MonotoneDirection],
    opts: &NnlrOptions,
) -> Result<NnlrFit, TrainError> {
    solve_nnlr_from(x, y, directions, opts, None)
}

/// [`solve_nnlr`] from a given `(bias, coefficients)` start, projected onto
/// the feasible set first.
pub fn solve_nnlr_from(
    x: ArrayView2<f64>,
    y: &[u8],
    directions: &[MonotoneDirection],
    opts: &NnlrOptions,
    start: Option<(f64, &[f64])>,
) -> Result<NnlrFit, TrainError> {
    const MEMORY: usize = 10;
    const GAMMA: f64 = 1e-4;
    const STEP_MIN: f64 = 1e-10;
    const STEP_MAX: f64 = 1e10;

    validate(x, y, directions, opts)?;
    let d = x.ncols();
    let prob = Standardised::new(x, directions, opts.c);
    let dropped: Vec<usize> = (0..d).filter(|j| !prob.keep.contains(j)).collect();
    for &j in &dropped {
        log::warn!("column {j} has zero variance; dropped from the fit");
    }

    let mut w = match start {
        Some((b, beta)) => {
            if beta.len() != d {
                return Err(TrainError::Shape(format!("start has {} coefficients, expected {d}", beta.len())));
            }
            prob.to_scaled(b, beta)
        }
        None => {
            let pos = y.iter().filter(|&&v| v == 1).count() as f64;
            let mut w = vec![0.0; prob.keep.len() + 1];
            w[0] = (pos / (y.len() as f64 - pos)).ln();
            w
        }
    };
    prob.project(&mut w);
    let (mut f, mut g) = prob.value_grad(&w, y, true);
    let mut history = vec![f];
    let n = w.len();

    let pg_step = |w: &[f64], g: &[f64], lambda: f64| -> Vec<f64> {
        let mut t: Vec<f64> = w.iter().zip(g).map(|(a, b)| a - lambda * b).collect();
        prob.project(&mut t);
        t.iter().zip(w).map(|(a, b)| a - b).collect()
    };
    let mut lambda = {
        let unit = pg_step(&w, &g, 1.0);
        let norm = unit.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm > 0.0 { (1.0 / norm).clamp(STEP_MIN, STEP_MAX) } else { 1.0 }
    };

    let mut iterations = 0;
    loop {
        let residual = prob.residual(&w, &g, opts.c);
        if residual <= opts.tolerance {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(TrainError::NoConvergence { iterations, residual });
        }
        iterations += 1;

        let dir = pg_step(&w, &g, lambda);
        let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        let f_ref = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut t = 1.0;
        let (w_new, f_new) = loop {
            let cand: Vec<f64> = w.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            let (fc, _) = prob.value_grad(&cand, y, false);
            if fc <= f_ref + GAMMA * t * slope {
                break (cand, fc);
            }
            t *= 0.5;
            if t < 1e-20 {
                // no representable decrease left along this direction
                return Err(TrainError::NoConvergence { iterations, residual });
            }
        };
        let (_, g_new) = prob.value_grad(&w_new, y, true);
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let s = w_new[i] - w[i];
            ss += s * s;
            sy += s * (g_new[i] - g[i]);
        }
        lambda = if sy > 0.0 { (ss / sy).clamp(STEP_MIN, STEP_MAX) } else { STEP_MAX };
        w = w_new;
        f = f_new;
        g = g_new;
        history.push(f);
        if history.len() > MEMORY {
            history.remove(0);
        }
    }

    let kkt = prob.residual(&w, &g, opts.c);
    let (bias, coefficients) = prob.to_original(&w, d);
    Ok(NnlrFit { bias, coefficients, objective: f, kkt_residual: kkt, iterations, dropped })
}
