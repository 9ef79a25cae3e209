//! Crank-Nicolson solver for the linear g equation on a truncated factor
//! range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::ModelParams;

use super::FkDriftDiscount;

/// Treatment of the truncated factor boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Zero slope, imposed with a reflected ghost node.
    #[default]
    NeumannZero,
    /// Zero curvature with a one-sided upwind slope.
    ZeroCurvature,
}

/// Uniform `(t, m)` grid on `[t0, T] x [-m_max, m_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub t0: f64,
    pub t_end: f64,
    pub n_t: usize,
    pub m_max: f64,
    pub n_m: usize,
    pub boundary: Boundary,
}

impl Grid2D {
    pub fn new(t0: f64, t_end: f64, n_t: usize, m_max: f64, n_m: usize) -> Result<Self> {
        if n_t < 3 || n_m < 5 || !(m_max > 0.0) || !(t0 < t_end) {
            return Err(Error::Precondition(format!(
                "grid needs n_t >= 3, n_m >= 5, m_max > 0, t0 < T (got {n_t}, {n_m}, {m_max}, [{t0}, {t_end}])"
            )));
        }
        Ok(Grid2D {
            t0,
            t_end,
            n_t,
            m_max,
            n_m,
            boundary: Boundary::NeumannZero,
        })
    }

    /// Grid over the model horizon.
    pub fn over(params: &ModelParams, n_t: usize, m_max: f64, n_m: usize) -> Result<Self> {
        Self::new(params.horizon.t0, params.horizon.t_end, n_t, m_max, n_m)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / (self.n_t - 1) as f64
    }

    pub fn dm(&self) -> f64 {
        2.0 * self.m_max / (self.n_m - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i + 1 == self.n_t {
            self.t_end
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn m(&self, j: usize) -> f64 {
        -self.m_max + j as f64 * self.dm()
    }

    /// `count` random nodes `(i, j)` with `|m| <= m_abs`, excluding the
    /// last two time rows.
    pub fn sample_nodes(&self, count: usize, m_abs: f64, seed: u64) -> Vec<(usize, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centre = self.n_m / 2;
        let half = ((m_abs / self.dm()) as usize).min(centre);
        (0..count)
            .map(|_| {
                (
                    rng.random_range(0..self.n_t.saturating_sub(2).max(1)),
                    rng.random_range(centre - half..=centre + half),
                )
            })
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n_t).flat_map(move |i| (0..self.n_m).map(move |j| (self.t(i), self.m(j))))
    }
}

/// Grid values, row `i` holding time `t(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSolution {
    pub grid: Grid2D,
    pub values: Vec<Vec<f64>>,
}

impl FdSolution {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

/// Linear operator `D g_mm + b(m) g_m + c(m) g` plus a constant source.
struct Operator {
    diffusion: f64,
    drift: Vec<f64>,
    rate: Vec<f64>,
    source: f64,
}

/// Tridiagonal rows `(lower, diag, upper)` of the spatial operator.
fn stencil(op: &Operator, grid: &Grid2D) -> Vec<(f64, f64, f64)> {
    let n = grid.n_m;
    let dm = grid.dm();
    let d2 = op.diffusion / (dm * dm);
    (0..n)
        .map(|j| {
            let b = op.drift[j];
            let c = op.rate[j];
            let edge = j == 0 || j + 1 == n;
            match (edge, grid.boundary) {
                (false, _) => (d2 - b / (2.0 * dm), -2.0 * d2 + c, d2 + b / (2.0 * dm)),
                (true, Boundary::NeumannZero) => {
                    if j == 0 {
                        (0.0, -2.0 * d2 + c, 2.0 * d2)
                    } else {
                        (2.0 * d2, -2.0 * d2 + c, 0.0)
                    }
                }
                (true, Boundary::ZeroCurvature) => {
                    // One-sided slope pointing into the domain; curvature dropped.
                    if j == 0 {
                        (0.0, -b / dm + c, b / dm)
                    } else {
                        (-b / dm, b / dm + c, 0.0)
                    }
                }
            }
        })
        .collect()
}

/// Solves `lower x_{j-1} + diag x_j + upper x_{j+1} = rhs_j`.
fn thomas(rows: &[(f64, f64, f64)], rhs: &mut [f64]) -> Result<()> {
    let n = rows.len();
    let mut upper = vec![0.0; n];
    let mut pivot = rows[0].1;
    if pivot.abs() < 1e-300 {
        return Err(Error::SingularLinearSystem { row: 0 });
    }
    upper[0] = rows[0].2 / pivot;
    rhs[0] /= pivot;
    for j in 1..n {
        let (a, b, c) = rows[j];
        pivot = b - a * upper[j - 1];
        if pivot.abs() < 1e-300 || !pivot.is_finite() {
            return Err(Error::SingularLinearSystem { row: j });
        }
        upper[j] = c / pivot;
        rhs[j] = (rhs[j] - a * rhs[j - 1]) / pivot;
    }
    for j in (0..n - 1).rev() {
        rhs[j] -= upper[j] * rhs[j + 1];
    }
    Ok(())
}

fn solve(op: &Operator, grid: &Grid2D) -> Result<FdSolution> {
    let n = grid.n_m;
    let dt = grid.dt();
    let rows = stencil(op, grid);
    // Implicit half: I - dt/2 L, which must be diagonally dominant.
    let implicit: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|&(a, b, c)| (-0.5 * dt * a, 1.0 - 0.5 * dt * b, -0.5 * dt * c))
        .collect();
    for (j, &(a, b, c)) in implicit.iter().enumerate() {
        if b.abs() < a.abs() + c.abs() {
            return Err(Error::StabilityViolation(format!(
                "implicit matrix loses diagonal dominance at m = {} ({} < {}); refine dt or dm",
                grid.m(j),
                b.abs(),
                a.abs() + c.abs()
            )));
        }
    }
    let mut values = vec![vec![0.0; n]; grid.n_t];
    values[grid.n_t - 1] = vec![1.0; n];
    let mut rhs = vec![0.0; n];
    for i in (0..grid.n_t - 1).rev() {
        let next = &values[i + 1];
        for j in 0..n {
            let (a, b, c) = rows[j];
            let mut lg = b * next[j];
            if j > 0 {
                lg += a * next[j - 1];
            }
            if j + 1 < n {
                lg += c * next[j + 1];
            }
            rhs[j] = next[j] + 0.5 * dt * lg + dt * op.source;
        }
        thomas(&implicit, &mut rhs)?;
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::StabilityViolation(format!("non-finite value at t = {}", grid.t(i))));
        }
        values[i].copy_from_slice(&rhs);
    }
    Ok(FdSolution { grid: *grid, values })
}

/// Solves the linear g equation backward from `g(T, .) = 1`.
pub fn fd_solve_g(params: &ModelParams, grid: &Grid2D) -> Result<FdSolution> {
    let fk = FkDriftDiscount::new(params)?;
    let ms: Vec<f64> = (0..grid.n_m).map(|j| grid.m(j)).collect();
    let op = Operator {
        diffusion: 0.5 * fk.beta() * fk.beta(),
        drift: ms.iter().map(|&m| fk.h2(m)).collect(),
        rate: ms.iter().map(|&m| fk.h1(m)).collect(),
        source: fk.source(),
    };
    solve(&op, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactSolver;
    use crate::solution::Solution;

    #[test]
    fn thomas_solves_small_system() {
        let rows = [(0.0, 2.0, 1.0), (1.0, 3.0, 1.0), (1.0, 2.0, 0.0)];
        let mut rhs = [3.0, 5.0, 3.0];
        thomas(&rows, &mut rhs).unwrap();
        for v in rhs {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let mut rhs = [1.0, 1.0];
        assert!(thomas(&[(0.0, 0.0, 1.0), (1.0, 1.0, 0.0)], &mut rhs).is_err());
    }

    #[test]
    fn degenerate_diffusion_reduces_to_ode() {
        let mut p = ModelParams::baseline();
        p.market.beta = 0.0;
        p.market.a = p.market.r;
        let grid = Grid2D::over(&p, 400, 4.0, 401).unwrap();
        let sol = fd_solve_g(&p, &grid).unwrap();
        let fk = FkDriftDiscount::new(&p).unwrap();
        let rate = fk.h1(0.0);
        let tau = p.horizon.t_end - p.horizon.t0;
        let exact = (rate * tau).exp() + fk.source() * (rate * tau).exp_m1() / rate;
        assert!((sol.at(0, 200) - exact).abs() < 1e-8);
    }

    #[test]
    fn second_order_convergence() {
        let p = ModelParams::baseline();
        let s = ExactSolver::new(&p).unwrap();
        let err = |n_t: usize, n_m: usize| {
            let grid = Grid2D::over(&p, n_t, 4.0, n_m).unwrap();
            let sol = fd_solve_g(&p, &grid).unwrap();
            let mut worst: f64 = 0.0;
            for j in 0..n_m {
                let m = grid.m(j);
                if m.abs() <= 1.0 {
                    let g = s.g(grid.t(0), m).unwrap().g;
                    worst = worst.max((sol.at(0, j) - g).abs() / g);
                }
            }
            worst
        };
        // Coarser grids are drift dominated and not yet asymptotic.
        let coarse = err(321, 161);
        let fine = err(641, 321);
        let ratio = coarse / fine;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio} ({coarse:e}, {fine:e})");
    }

    #[test]
    fn zero_curvature_boundary_agrees_in_interior() {
        let p = ModelParams::baseline();
        let grid = Grid2D::over(&p, 201, 4.0, 201).unwrap();
        let a = fd_solve_g(&p, &grid).unwrap();
        let b = fd_solve_g(&p, &grid.with_boundary(Boundary::ZeroCurvature)).unwrap();
        assert!((a.at(0, 100) - b.at(0, 100)).abs() < 1e-10);
    }

    #[test]
    fn coarse_time_step_is_rejected() {
        let p = ModelParams::baseline();
        let grid = Grid2D::over(&p, 3, 40.0, 4001).unwrap();
        assert!(matches!(fd_solve_g(&p, &grid), Err(Error::StabilityViolation(_))));
    }
}
