//! Nelder-Mead simplex search in two dimensions.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadResult {
    pub x: [f64; 2],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `start` with initial simplex steps `step`. Stops when
/// the spread of simplex values drops below `ftol` or after `max_iter`.
pub fn nelder_mead<F>(f: F, start: [f64; 2], step: [f64; 2], ftol: f64, max_iter: usize) -> NelderMeadResult
where
    F: Fn([f64; 2]) -> f64,
{
    let mut pts = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]];
    let mut vals = pts.map(&f);
    let lerp = |a: [f64; 2], b: [f64; 2], w: f64| [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])];

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.map(|i| pts[i]);
        vals = order.map(|i| vals[i]);
        if (vals[2] - vals[0]).abs() <= ftol * (vals[0].abs() + ftol) {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid = lerp(pts[0], pts[1], 0.5);
        let reflected = lerp(centroid, pts[2], -1.0);
        let fr = f(reflected);
        if fr < vals[0] {
            let expanded = lerp(centroid, pts[2], -2.0);
            let fe = f(expanded);
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
        } else {
            let (target, ft) = if fr < vals[2] { (reflected, fr) } else { (pts[2], vals[2]) };
            let contracted = lerp(centroid, target, 0.5);
            let fc = f(contracted);
            if fc < ft {
                pts[2] = contracted;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    pts[i] = lerp(pts[0], pts[i], 0.5);
                    vals[i] = f(pts[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    NelderMeadResult { x: pts[best], value: vals[best], iterations, converged }
}
