//! Gauss rules on the unit interval and the reference triangle, and
//! adaptive composite integration with an error estimate and node budget.

use std::f64::consts::PI;

/// Nodes and weights on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Rule1 {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Points `(ξ, η)` and weights on the reference triangle (weights sum to 1/2).
#[derive(Clone, Debug)]
pub struct Rule2 {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

/// `n`-point Gauss–Legendre rule mapped to `[0, 1]`; exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Rule1 {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    Rule1 { nodes, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Collapsed (Duffy) product rule with `n × n` points; exact for
/// polynomials of total degree `2n - 2`.
pub fn triangle_rule(n: usize) -> Rule2 {
    let g = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&u, &wu) in g.nodes.iter().zip(&g.weights) {
        for (&v, &wv) in g.nodes.iter().zip(&g.weights) {
            points.push((u, v * (1.0 - u)));
            weights.push(wu * wv * (1.0 - u));
        }
    }
    Rule2 { points, weights }
}

/// Outcome of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Sum of local coarse/fine discrepancies.
    pub error: f64,
    pub evals: usize,
}

/// Tolerance and node budget for adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Adaptive {
    pub tol: f64,
    pub max_evals: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive { tol: 1e-12, max_evals: 2_000_000 }
    }
}

const ORDER_1D: usize = 5;
const ORDER_2D: usize = 5;

struct Piece<R> {
    region: R,
    value: f64,
    error: f64,
}

impl<R> PartialEq for Piece<R> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<R> Eq for Piece<R> {}
impl<R> PartialOrd for Piece<R> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<R> Ord for Piece<R> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive refinement: always split the pieces with the largest
/// local error until the summed error meets the tolerance. `apply` returns a
/// high- and a low-order value on a piece; their difference is the local
/// error estimate.
fn global_adaptive<R: Clone>(
    root: R,
    rule_evals: usize,
    apply: impl Fn(&R) -> (f64, f64),
    split: impl Fn(&R) -> Vec<R>,
    floor: impl Fn(&R) -> f64,
    opts: Adaptive,
) -> Result<Estimate, Estimate> {
    let piece = |region: R| {
        let (hi, lo) = apply(&region);
        let error = (hi - lo).abs().max(floor(&region));
        Piece { region, value: hi, error }
    };
    let first: Vec<Piece<R>> = split(&root).into_iter().map(piece).collect();
    let mut evals = first.len() * rule_evals;
    let mut heap = std::collections::BinaryHeap::from(first);
    loop {
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let value: f64 = heap.iter().map(|p| p.value).sum();
        if error <= opts.tol {
            return Ok(Estimate { value, error, evals });
        }
        if evals >= opts.max_evals {
            return Err(Estimate { value, error, evals });
        }
        // refine a batch of the worst pieces before re-summing
        let batch = (heap.len() / 8).max(1);
        for _ in 0..batch {
            let Some(worst) = heap.pop() else { break };
            let kids = split(&worst.region);
            evals += kids.len() * rule_evals;
            heap.extend(kids.into_iter().map(piece));
        }
    }
}

/// `∫₀¹ f(s) ds`. Returns `Err` with the achieved estimate when the budget
/// runs out before the tolerance is met.
pub fn integrate_unit_interval(f: impl Fn(f64) -> f64, opts: Adaptive) -> Result<Estimate, Estimate> {
    integrate_unit_interval_with(f, |_, _| 0.0, opts)
}

/// As [`integrate_unit_interval`], with `floor(a, b)` a lower bound imposed
/// on the local error estimate of the piece `[a, b]`.
pub fn integrate_unit_interval_with(
    f: impl Fn(f64) -> f64,
    floor: impl Fn(f64, f64) -> f64,
    opts: Adaptive,
) -> Result<Estimate, Estimate> {
    let high = gauss_legendre(ORDER_1D);
    let low = gauss_legendre(ORDER_1D - 2);
    let rule = |r: &Rule1, a: f64, h: f64| r.nodes.iter().zip(&r.weights).map(|(&s, &w)| w * f(a + h * s)).sum::<f64>() * h;
    let apply = |r: &(f64, f64)| {
        let h = r.1 - r.0;
        (rule(&high, r.0, h), rule(&low, r.0, h))
    };
    let split = |r: &(f64, f64)| {
        let m = 0.5 * (r.0 + r.1);
        vec![(r.0, m), (m, r.1)]
    };
    global_adaptive((0.0, 1.0), 2 * ORDER_1D - 2, apply, split, |r: &(f64, f64)| floor(r.0, r.1), opts)
}

/// A triangle in the reference coordinates.
pub type Tri = [(f64, f64); 3];

/// `∫_T f(ξ, η)` over the reference triangle `T`.
pub fn integrate_reference_triangle(f: impl Fn(f64, f64) -> f64, opts: Adaptive) -> Result<Estimate, Estimate> {
    integrate_reference_triangle_with(f, |_| 0.0, opts)
}

/// As [`integrate_reference_triangle`], with `floor` a lower bound imposed
/// on the local error estimate of each sub-triangle.
pub fn integrate_reference_triangle_with(
    f: impl Fn(f64, f64) -> f64,
    floor: impl Fn(&Tri) -> f64,
    opts: Adaptive,
) -> Result<Estimate, Estimate> {
    let high = triangle_rule(ORDER_2D);
    let low = triangle_rule(ORDER_2D - 2);
    let rule = |r: &Rule2, t: &Tri| -> f64 {
        let (a, b, c) = (t[0], t[1], t[2]);
        let jac = ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)).abs();
        r.points
            .iter()
            .zip(&r.weights)
            .map(|(&(u, v), &w)| {
                let x = a.0 + (b.0 - a.0) * u + (c.0 - a.0) * v;
                let y = a.1 + (b.1 - a.1) * u + (c.1 - a.1) * v;
                w * f(x, y)
            })
            .sum::<f64>()
            * jac
    };
    let apply = |t: &Tri| (rule(&high, t), rule(&low, t));
    let split = |t: &Tri| {
        let mid = |p: (f64, f64), q: (f64, f64)| (0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1));
        let (ab, bc, ca) = (mid(t[0], t[1]), mid(t[1], t[2]), mid(t[2], t[0]));
        vec![[t[0], ab, ca], [ab, t[1], bc], [ca, bc, t[2]], [ab, bc, ca]]
    };
    let root: Tri = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
    let n = ORDER_2D * ORDER_2D + (ORDER_2D - 2) * (ORDER_2D - 2);
    global_adaptive(root, n, apply, split, floor, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_exactness() {
        for n in 1..=8 {
            let r = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn triangle_exactness() {
        // ∫_T ξ^a η^b = a! b! / (a + b + 2)!
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        let r = triangle_rule(4);
        for a in 0..=6 {
            for b in 0..=(6 - a) {
                let q: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(&(x, y), w)| w * x.powi(a as i32) * y.powi(b as i32))
                    .sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-15, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn adaptive_handles_kinks() {
        let est = integrate_unit_interval(|s| (s - 0.3).abs(), Adaptive::default()).unwrap();
        assert!((est.value - (0.045 + 0.245)).abs() < 1e-12);
        // kinks across a 2D cell converge only algebraically
        let opts = Adaptive { tol: 1e-7, max_evals: 2_000_000 };
        let est = integrate_reference_triangle(|x, y| (x - y).abs(), opts).unwrap();
        assert!((est.value - 1.0 / 6.0).abs() < 1e-7, "{}", est.value);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let tight = Adaptive { tol: 1e-300, max_evals: 200 };
        let r = integrate_unit_interval(|s| (1.0 / (s + 1e-9)).sqrt(), tight);
        assert!(r.is_err());
    }
}
