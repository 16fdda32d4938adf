//! Moreau envelopes, proximal points and Lipschitz regularization, all exact
//! over the grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extgrid::{ExtReal, GridFn};

/// Strictly decreasing positive step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LambdaSchedule(Vec<f64>);

impl LambdaSchedule {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::BadParameter("empty lambda schedule".into()));
        }
        if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::BadParameter("lambdas must be positive and finite".into()));
        }
        if lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::BadParameter("lambda schedule must strictly decrease".into()));
        }
        Ok(LambdaSchedule(lambdas))
    }

    /// `2^0, 2^-1, ..., 2^-k`.
    pub fn dyadic(k: u32) -> Self {
        LambdaSchedule((0..=k).map(|j| 0.5f64.powi(j as i32)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for LambdaSchedule {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LambdaSchedule> for Vec<f64> {
    fn from(s: LambdaSchedule) -> Self {
        s.0
    }
}

fn check(f: &GridFn, lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::BadParameter(format!("lambda must be positive, got {lambda}")));
    }
    if !f.is_proper() {
        return Err(Error::ImproperInput);
    }
    Ok(())
}

/// `f_lambda(x_j) = min_i f(x_i) + (x_j - x_i)^2 / (2 lambda)`, computed as a
/// lower envelope of parabolas in linear time.
pub fn moreau_envelope(f: &GridFn, lambda: f64) -> Result<GridFn> {
    check(f, lambda)?;
    let (xs, arg) = envelope_argmin(f, lambda);
    let g = f.grid();
    let values = xs
        .iter()
        .zip(&arg)
        .map(|(&x, &i)| {
            let d = x - g.point(i);
            ExtReal::Finite(f.value(i).to_f64() + d * d / (2.0 * lambda))
        })
        .collect();
    GridFn::new(*g, values)
}

/// Grid index of the parabola that is lowest at each grid point.
fn envelope_argmin(f: &GridFn, lambda: f64) -> (Vec<f64>, Vec<usize>) {
    let g = f.grid();
    let xs: Vec<f64> = g.points().collect();
    // parabola i: f_i + (x - x_i)^2 / (2 lambda); p and q meet at
    // ((f_q - f_p) lambda + (x_q^2 - x_p^2) / 2) / (x_q - x_p)
    let meet = |p: usize, q: usize| {
        let (fp, fq) = (f.value(p).to_f64(), f.value(q).to_f64());
        ((fq - fp) * lambda + 0.5 * (xs[q] * xs[q] - xs[p] * xs[p])) / (xs[q] - xs[p])
    };
    let mut v: Vec<usize> = Vec::new();
    let mut z: Vec<f64> = Vec::new();
    for q in (0..xs.len()).filter(|&i| f.value(i).is_finite()) {
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let s = meet(p, q);
            if s <= *z.last().expect("z tracks v") {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    let mut k = 0;
    let arg = xs
        .iter()
        .map(|&x| {
            while k + 1 < v.len() && z[k + 1] < x {
                k += 1;
            }
            v[k]
        })
        .collect();
    (xs, arg)
}

/// Grid minimizer of `f(y) + (x - y)^2 / (2 lambda)`; ties go to the smaller
/// `y`.
pub fn prox(f: &GridFn, lambda: f64, x: f64) -> Result<f64> {
    Ok(prox_index(f, lambda, x)?.0)
}

/// [`prox`] together with the grid index and the attained value.
pub fn prox_index(f: &GridFn, lambda: f64, x: f64) -> Result<(f64, usize, f64)> {
    check(f, lambda)?;
    let g = f.grid();
    let mut best = (f64::NAN, usize::MAX, f64::INFINITY);
    for (i, v) in f.values().iter().enumerate() {
        if let Some(fy) = v.finite() {
            let y = g.point(i);
            let val = fy + (x - y) * (x - y) / (2.0 * lambda);
            if val < best.2 {
                best = (y, i, val);
            }
        }
    }
    Ok(best)
}

/// `f_lambda(x)` at an arbitrary real `x`.
pub fn moreau_at(f: &GridFn, lambda: f64, x: f64) -> Result<f64> {
    Ok(prox_index(f, lambda, x)?.2)
}

/// Envelopes for every step of the schedule, in schedule order.
pub fn moreau_schedule(f: &GridFn, sched: &LambdaSchedule) -> Result<Vec<GridFn>> {
    use rayon::prelude::*;
    sched
        .as_slice()
        .par_iter()
        .map(|&l| moreau_envelope(f, l))
        .collect()
}

/// `g □ sigma_[a, b]` where `sigma_[a, b](u) = max(a u, b u)`, by two linear
/// sweeps. Exact over grid splits.
pub fn inf_conv_support(g: &GridFn, a: f64, b: f64) -> Result<GridFn> {
    if a > b {
        return Err(Error::EmptySet { lo: a, hi: b });
    }
    if !g.is_proper() {
        return Err(Error::ImproperInput);
    }
    let h = g.grid().spacing();
    let v = g.raw();
    let n = v.len();
    // splits with the argument to the left use the slope b, to the right -a
    let mut fwd = v.clone();
    for i in 1..n {
        fwd[i] = fwd[i].min(fwd[i - 1] + b * h);
    }
    let mut bwd = v;
    for i in (0..n - 1).rev() {
        bwd[i] = bwd[i].min(bwd[i + 1] - a * h);
    }
    let values = fwd
        .into_iter()
        .zip(bwd)
        .map(|(p, q)| ExtReal::from_f64(p.min(q)))
        .collect();
    GridFn::new(*g.grid(), values)
}

/// Pasch–Hausdorff envelope `g □ n|.|`: the largest `n`-Lipschitz minorant.
pub fn lipschitz_reg(g: &GridFn, n: u32) -> Result<GridFn> {
    let n = n as f64;
    inf_conv_support(g, -n, n)
}

/// Brute-force `g □ n|.|` over grid splits, kept for cross-checks.
pub fn lipschitz_reg_oracle(g: &GridFn, n: u32) -> Result<GridFn> {
    if !g.is_proper() {
        return Err(Error::ImproperInput);
    }
    let grid = g.grid();
    let values = grid
        .points()
        .map(|s| {
            g.values()
                .iter()
                .zip(grid.points())
                .filter_map(|(v, t)| v.finite().map(|gv| gv + n as f64 * (s - t).abs()))
                .fold(f64::INFINITY, f64::min)
        })
        .map(ExtReal::from_f64)
        .collect();
    GridFn::new(*grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extgrid::Grid1D;

    fn grid(w: f64, n: usize) -> Grid1D {
        Grid1D::symmetric(w, n).unwrap()
    }

    fn brute_envelope(f: &GridFn, lambda: f64) -> Vec<f64> {
        let g = f.grid();
        g.points()
            .map(|x| {
                g.points()
                    .zip(f.values())
                    .filter_map(|(y, v)| v.finite().map(|fy| fy + (x - y) * (x - y) / (2.0 * lambda)))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    fn max_err(a: &GridFn, exact: impl Fn(f64) -> f64) -> f64 {
        a.grid()
            .points()
            .zip(a.values())
            .map(|(x, v)| (v.to_f64() - exact(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn envelope_examples() {
        let g = grid(2.0, 401);
        let h = g.spacing();
        let d0 = GridFn::indicator(g, 0.0, 0.0).unwrap();
        for lambda in [1.0, 0.3] {
            let e = moreau_envelope(&d0, lambda).unwrap();
            assert!(max_err(&e, |x| x * x / (2.0 * lambda)) <= 1e-12);
        }
        let abs = GridFn::from_fn(g, f64::abs).unwrap();
        let huber = |x: f64| if x.abs() <= 1.0 { 0.5 * x * x } else { x.abs() - 0.5 };
        let e = moreau_envelope(&abs, 1.0).unwrap();
        assert!(max_err(&e, huber) <= h * h);
        let q = GridFn::from_fn(g, |x| 0.5 * x * x).unwrap();
        let e = moreau_envelope(&q, 0.5).unwrap();
        assert!(max_err(&e, |x| x * x / 3.0) <= h * h);
    }

    #[test]
    fn envelope_matches_brute_force() {
        let g = grid(1.5, 201);
        let f = GridFn::from_fn(g, |x| {
            if x < -1.2 {
                f64::INFINITY
            } else {
                (3.0 * x).sin() + x.abs()
            }
        })
        .unwrap();
        for lambda in [2.0, 0.1, 0.003] {
            let fast = moreau_envelope(&f, lambda).unwrap().raw();
            let slow = brute_envelope(&f, lambda);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn prox_examples() {
        let g = grid(4.0, 801);
        let d0 = GridFn::indicator(g, 0.0, 0.0).unwrap();
        assert_eq!(prox(&d0, 1.0, 3.0).unwrap(), 0.0);
        let abs = GridFn::from_fn(g, f64::abs).unwrap();
        assert!((prox(&abs, 1.0, 3.0).unwrap() - 2.0).abs() < 1e-12);
        let q = GridFn::from_fn(g, |x| 0.5 * x * x).unwrap();
        assert!((prox(&q, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        // equidistant grid points tie; the smaller one wins
        let flat = GridFn::constant(grid(1.0, 5), 0.0);
        assert_eq!(prox(&flat, 1.0, -0.25).unwrap(), -0.5);
    }

    #[test]
    fn schedule_increases_toward_f() {
        let g = grid(2.0, 401);
        let abs = GridFn::from_fn(g, f64::abs).unwrap();
        let sched = LambdaSchedule::new(vec![1.0, 0.5, 0.25]).unwrap();
        let envs = moreau_schedule(&abs, &sched).unwrap();
        for w in envs.windows(2) {
            assert!(w[0].pointwise_le(&w[1], 0.0));
        }
        assert!(envs[2].pointwise_le(&abs, 0.0));
        for (env, &l) in envs.iter().zip(sched.as_slice()) {
            let slow = brute_envelope(&abs, l);
            assert!(env.raw().iter().zip(&slow).all(|(a, b)| (a - b).abs() < 1e-12));
        }

        let c = GridFn::constant(g, 2.5);
        for e in moreau_schedule(&c, &sched).unwrap() {
            assert_eq!(e, c);
        }

        let ind = GridFn::indicator(g, -1.0, 1.0).unwrap();
        let at2: Vec<f64> = moreau_schedule(&ind, &LambdaSchedule::dyadic(6))
            .unwrap()
            .iter()
            .map(|e| e.eval(2.0).unwrap().to_f64())
            .collect();
        for (k, v) in at2.iter().enumerate() {
            let lambda = 0.5f64.powi(k as i32);
            assert!((v - 1.0 / (2.0 * lambda)).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_schedules_and_steps() {
        assert!(LambdaSchedule::new(vec![1.0, 1.0]).is_err());
        assert!(LambdaSchedule::new(vec![1.0, -0.5]).is_err());
        let g = grid(1.0, 5);
        let f = GridFn::constant(g, 0.0);
        assert!(matches!(moreau_envelope(&f, 0.0), Err(Error::BadParameter(_))));
        let bad = GridFn::from_fn(g, |_| f64::INFINITY).unwrap();
        assert_eq!(moreau_envelope(&bad, 1.0), Err(Error::ImproperInput));
    }

    #[test]
    fn lipschitz_examples() {
        let s = grid(3.0, 301);
        let q = GridFn::from_fn(s, |t| 0.5 * t * t).unwrap();
        let r = lipschitz_reg(&q, 1).unwrap();
        let exact = |t: f64| if t.abs() <= 1.0 { 0.5 * t * t } else { t.abs() - 0.5 };
        assert!(max_err(&r, exact) <= s.spacing().powi(2));
        let oracle = lipschitz_reg_oracle(&q, 1).unwrap();
        assert!(r.raw().iter().zip(oracle.raw()).all(|(a, b)| (a - b).abs() < 1e-12));

        let abs = GridFn::from_fn(s, f64::abs).unwrap();
        assert_eq!(lipschitz_reg(&abs, 2).unwrap(), abs);

        let d0 = GridFn::indicator(s, 0.0, 0.0).unwrap();
        for n in [1, 3, 7] {
            let r = lipschitz_reg(&d0, n).unwrap();
            assert!(max_err(&r, |t| n as f64 * t.abs()) <= 1e-12);
        }
    }
}
