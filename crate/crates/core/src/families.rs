//! Registry of closed-form test families with their expected verdicts.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::extgrid::{Extension, FnSeq, Grid1D, GridFn};
use crate::gamma::GammaParams;
use crate::verdict::Diagnosis;

/// Seed used when none is given for randomized families.
pub const DEFAULT_SEED: u64 = 0x5eed_0e91_1117;

/// Horizon every registry family is checked at.
pub const DEFAULT_HORIZON: usize = 512;

/// Dual points at which the witness construction is exercised.
pub const WITNESS_SLOPES: [f64; 5] = [-0.75, -0.5, 0.0, 0.25, 0.5];

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// Worked example from the literature.
    Published,
    /// Immediate from the definitions.
    Trivial,
    /// Closed forms checked against independent oracles.
    Derived,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Published => "published",
            Origin::Trivial => "trivial",
            Origin::Derived => "derived",
        })
    }
}

/// Checks with a registry expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    GammaCheck,
    DualCheck,
    AttouchCheck,
}

impl Check {
    pub const ALL: [Check; 3] = [Check::GammaCheck, Check::DualCheck, Check::AttouchCheck];

    pub fn name(self) -> &'static str {
        match self {
            Check::GammaCheck => "gamma-check",
            Check::DualCheck => "dual-check",
            Check::AttouchCheck => "attouch-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    Hypothesis(Diagnosis),
}

impl Outcome {
    /// Process exit code reporting this outcome.
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 2,
            Outcome::Hypothesis(_) => 3,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Pass => f.write_str("pass"),
            Outcome::Fail => f.write_str("fail"),
            Outcome::Hypothesis(d) => write!(f, "hypothesis: {d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub check: Check,
    pub outcome: Outcome,
    pub tol: f64,
    pub origin: Origin,
}

/// `g(x) = s_0 x + sum_j (s_j - s_{j-1}) max(0, x - b_j)` with increasing
/// slopes, hence convex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    pub slopes: Vec<f64>,
    pub breaks: Vec<f64>,
}

impl PiecewiseLinear {
    /// `pieces` slopes sorted in `[-1, 1]`, breakpoints sorted in
    /// `[-0.9, 0.9]`.
    pub fn random(seed: u64, pieces: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut slopes: Vec<f64> = (0..pieces).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut breaks: Vec<f64> = (1..pieces).map(|_| rng.gen_range(-0.9..=0.9)).collect();
        slopes.sort_by(f64::total_cmp);
        breaks.sort_by(f64::total_cmp);
        PiecewiseLinear { slopes, breaks }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.slopes[0] * x
            + self
                .slopes
                .windows(2)
                .zip(&self.breaks)
                .map(|(s, &b)| (s[1] - s[0]) * (x - b).max(0.0))
                .sum::<f64>()
    }
}

/// Closed-form generator `(n, x) -> f_n(x)` and its Γ-limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Rule {
    /// `|x| / n + n`; no proper limit.
    Blowup,
    /// `x^2 / 2` for every `n`.
    Constant,
    /// Support function `(1 - 1/n) |x|` of `[-1 + 1/n, 1 - 1/n]`.
    NestedIntervals,
    /// `(1 + 1/n) x^2 / 2`.
    Quadratic,
    /// `g(x - 1/n)` for a seeded convex piecewise-linear `g`.
    RandomPl(PiecewiseLinear),
    /// `|x - 1/n|`.
    Translation,
}

impl Rule {
    pub fn eval(&self, n: usize, x: f64) -> f64 {
        let t = 1.0 / n as f64;
        match self {
            Rule::Blowup => x.abs() * t + n as f64,
            Rule::Constant => 0.5 * x * x,
            Rule::NestedIntervals => (1.0 - t) * x.abs(),
            Rule::Quadratic => 0.5 * (1.0 + t) * x * x,
            Rule::RandomPl(g) => g.eval(x - t),
            Rule::Translation => (x - t).abs(),
        }
    }

    /// The expected limit; the zero function for the blow-up family, which
    /// has none.
    pub fn limit(&self, x: f64) -> f64 {
        match self {
            Rule::Blowup => 0.0,
            Rule::Constant | Rule::Quadratic => 0.5 * x * x,
            Rule::NestedIntervals | Rule::Translation => x.abs(),
            Rule::RandomPl(g) => g.eval(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySpec {
    pub name: &'static str,
    pub description: &'static str,
    pub rule: Rule,
    pub grid: Grid1D,
    pub slope_grid: Grid1D,
    pub extension: Extension,
    pub horizon: usize,
    pub expected: Vec<Expectation>,
}

impl FamilySpec {
    /// The family on its own grid.
    pub fn seq(&self) -> Result<FnSeq> {
        self.seq_on(self.grid)
    }

    /// The family resampled from the closed form on `grid`.
    pub fn seq_on(&self, grid: Grid1D) -> Result<FnSeq> {
        let rule = self.rule.clone();
        Ok(FnSeq::from_rule(grid, self.horizon, move |n, x| rule.eval(n, x))?
            .with_extension(self.extension)
            .with_slope_grid(self.slope_grid))
    }

    pub fn candidate(&self) -> Result<GridFn> {
        self.candidate_on(self.grid)
    }

    pub fn candidate_on(&self, grid: Grid1D) -> Result<GridFn> {
        GridFn::from_fn(grid, |x| self.rule.limit(x))
    }

    pub fn params(&self) -> Result<GammaParams> {
        GammaParams::for_grid(&self.grid, self.horizon)
    }

    pub fn expectation(&self, check: Check) -> Option<&Expectation> {
        self.expected.iter().find(|e| e.check == check)
    }
}

fn grid(half: f64, count: usize) -> Grid1D {
    Grid1D::symmetric(half, count).expect("registry grids are valid")
}

fn all(outcome: Outcome, origin: Origin) -> Vec<Expectation> {
    Check::ALL
        .iter()
        .map(|&check| Expectation { check, outcome: outcome.clone(), tol: 0.0, origin })
        .collect()
}

/// All families, sorted by name. `seed` drives the randomized family.
pub fn registry(seed: u64) -> Vec<FamilySpec> {
    let wide = grid(2.0, 1025);
    let family = |name, description, rule, x: Grid1D, s: Grid1D, extension, expected| FamilySpec {
        name,
        description,
        rule,
        grid: x,
        slope_grid: s,
        extension,
        horizon: DEFAULT_HORIZON,
        expected,
    };
    let hyp = Outcome::Hypothesis(Diagnosis::DomLimsupEmpty);
    vec![
        family(
            "blowup",
            "|x|/n + n: conjugates are indicators of [-1/n, 1/n] minus n",
            Rule::Blowup,
            wide,
            wide,
            Extension::Affine,
            vec![
                Expectation { check: Check::GammaCheck, outcome: Outcome::Fail, tol: 0.0, origin: Origin::Published },
                Expectation { check: Check::DualCheck, outcome: hyp.clone(), tol: 0.0, origin: Origin::Published },
                Expectation { check: Check::AttouchCheck, outcome: hyp, tol: 0.0, origin: Origin::Published },
            ],
        ),
        family(
            "constant",
            "x^2/2 for every n",
            Rule::Constant,
            wide,
            wide,
            Extension::Window,
            all(Outcome::Pass, Origin::Trivial),
        ),
        family(
            "nested-intervals",
            "support functions of [-1+1/n, 1-1/n], increasing to |x|",
            Rule::NestedIntervals,
            grid(1.0, 1025),
            wide,
            Extension::Affine,
            all(Outcome::Pass, Origin::Derived),
        ),
        family(
            "quadratic",
            "(1+1/n) x^2/2 decreasing to x^2/2",
            Rule::Quadratic,
            grid(1.5, 1025),
            grid(2.0, 2049),
            Extension::Window,
            all(Outcome::Pass, Origin::Derived),
        ),
        family(
            "random-pl",
            "seeded convex piecewise-linear g, translated by 1/n",
            Rule::RandomPl(PiecewiseLinear::random(seed, 6)),
            wide,
            wide,
            Extension::Affine,
            all(Outcome::Pass, Origin::Derived),
        ),
        family(
            "translation",
            "|x - 1/n| translating to |x|",
            Rule::Translation,
            wide,
            wide,
            Extension::Affine,
            all(Outcome::Pass, Origin::Derived),
        ),
    ]
}

pub fn lookup(name: &str, seed: u64) -> Option<FamilySpec> {
    registry(seed).into_iter().find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_sorted_and_unique() {
        let r = registry(DEFAULT_SEED);
        let names: Vec<_> = r.iter().map(|f| f.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(names, sorted);
        assert!(names.contains(&"blowup") && names.contains(&"translation") && names.contains(&"quadratic"));
    }

    #[test]
    fn every_family_has_all_expectations() {
        for f in registry(DEFAULT_SEED) {
            for c in Check::ALL {
                assert!(f.expectation(c).is_some(), "{} {}", f.name, c.name());
            }
            assert_eq!(f.grid.count() % 2, 1);
        }
    }

    #[test]
    fn random_family_is_convex_and_seeded() {
        let a = PiecewiseLinear::random(7, 6);
        assert_eq!(a, PiecewiseLinear::random(7, 6));
        assert_ne!(a, PiecewiseLinear::random(8, 6));
        assert!(a.slopes.windows(2).all(|w| w[0] <= w[1]));
        let g = GridFn::from_fn(grid(2.0, 401), |x| a.eval(x)).unwrap();
        assert!(g.is_convex(1e-12));
    }

    #[test]
    fn rules_at_a_point() {
        assert_eq!(Rule::Blowup.eval(4, -2.0), 4.5);
        assert_eq!(Rule::Translation.eval(4, 0.0), 0.25);
        assert_eq!(Rule::NestedIntervals.eval(2, 1.0), 0.5);
        assert_eq!(Rule::Quadratic.eval(1, 1.0), 1.0);
    }

    #[test]
    fn witness_slopes_lie_on_the_slope_grids() {
        for f in registry(DEFAULT_SEED) {
            for s in WITNESS_SLOPES {
                let i = f.slope_grid.nearest_index(s);
                assert_eq!(f.slope_grid.point(i), s, "{}", f.name);
            }
        }
    }
}
