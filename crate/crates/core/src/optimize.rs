//! Box-bounded minimizers: a real-coded genetic algorithm, global-best
//! particle swarm optimization, and projected gradient descent.
//!
//! All three consume an [`Objective`] and a seeded config, evaluate only
//! inside the box, and return the best point found together with exact
//! evaluation counts. Fixed seeds give identical results.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed;

fn positive_real(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

type EvalFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>;
type GradFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync + 'a>;

/// A black-box objective over a box-bounded real vector, optionally
/// differentiable. Evaluation must be reentrant; the minimizers never mutate
/// shared state through it.
pub struct Objective<'a> {
    bounds: Vec<(f64, f64)>,
    eval_fn: EvalFn<'a>,
    grad_fn: Option<GradFn<'a>>,
}

impl<'a> Objective<'a> {
    pub fn new<F>(bounds: Vec<(f64, f64)>, eval: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'a,
    {
        if bounds.is_empty() {
            return Err(Error::config("objective needs at least one coordinate"));
        }
        if bounds.iter().any(|&(lo, hi)| lo > hi || lo.is_nan() || hi.is_nan()) {
            return Err(Error::config("objective bounds must satisfy lo <= hi"));
        }
        Ok(Self {
            bounds,
            eval_fn: Box::new(eval),
            grad_fn: None,
        })
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'a,
    {
        self.grad_fn = Some(Box::new(gradient));
        self
    }

    pub fn arity(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn has_gradient(&self) -> bool {
        self.grad_fn.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval_fn)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad_fn.as_ref().map(|g| g(x))
    }

    fn require_finite_box(&self) -> Result<()> {
        if self
            .bounds
            .iter()
            .any(|(lo, hi)| !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::config("optimizer requires a finite bounding box"));
        }
        Ok(())
    }

    fn clip(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(&self.bounds) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn random_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| rng.gen_range(lo..=hi))
            .collect()
    }
}

/// Outcome of one minimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// Exact number of objective evaluations performed.
    pub evaluations: usize,
    /// Generations (GA), iterations (PSO), or descent steps (GD) executed.
    pub iterations: usize,
    /// GD: gradient tolerance reached before the iteration cap. GA/PSO run a
    /// fixed budget and always report true.
    pub converged: bool,
}

/// Real-coded GA parameters. `mutation_sigma` is the Gaussian mutation
/// standard deviation as a fraction of each coordinate's box width.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub blend_alpha: f64,
    pub mutation_sigma: f64,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 100,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            blend_alpha: 0.5,
            mutation_sigma: 0.1,
            elitism: 1,
            seed: 0,
        }
    }
}

impl GaConfig {
    fn validate(&self) -> Result<()> {
        if self.population == 0 || self.generations == 0 {
            return Err(Error::config("GA population and generations must be positive"));
        }
        if self.tournament_size < 2 {
            return Err(Error::config("GA tournament_size must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate)
        {
            return Err(Error::config("GA rates must lie in [0, 1]"));
        }
        if !positive_real(self.blend_alpha) || !positive_real(self.mutation_sigma) {
            return Err(Error::config("GA blend_alpha and mutation_sigma must be positive"));
        }
        if self.elitism == 0 || self.elitism >= self.population {
            return Err(Error::config("GA elitism must satisfy 1 <= elitism < population"));
        }
        Ok(())
    }
}

/// Global-best PSO parameters. `velocity_clamp` limits each velocity
/// component to that fraction of the coordinate's box width.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub swarm: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub velocity_clamp: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm: 30,
            iterations: 200,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            velocity_clamp: 0.5,
            seed: 0,
        }
    }
}

impl PsoConfig {
    fn validate(&self) -> Result<()> {
        if self.swarm == 0 || self.iterations == 0 {
            return Err(Error::config("PSO swarm and iterations must be positive"));
        }
        if !(self.inertia > 0.0 && self.inertia < 1.0) {
            return Err(Error::config("PSO inertia must lie in (0, 1)"));
        }
        if self.cognitive < 0.0 || self.social < 0.0 {
            return Err(Error::config("PSO acceleration constants must be nonnegative"));
        }
        if !(self.velocity_clamp > 0.0 && self.velocity_clamp <= 1.0) {
            return Err(Error::config("PSO velocity_clamp must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Projected gradient descent parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GdConfig {
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop once the gradient L2 norm drops to this level.
    pub grad_tolerance: f64,
    pub seed: u64,
    /// Explicit start point; `None` draws one uniformly from the box.
    pub start: Option<Vec<f64>>,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            max_iters: 500,
            grad_tolerance: 1e-6,
            seed: 0,
            start: None,
        }
    }
}

impl GdConfig {
    fn validate(&self) -> Result<()> {
        if !positive_real(self.step_size) || !positive_real(self.grad_tolerance) || self.max_iters == 0 {
            return Err(Error::config(
                "GD step_size, grad_tolerance and max_iters must be positive",
            ));
        }
        Ok(())
    }
}

/// Real-coded genetic algorithm: uniform init in the box, tournament
/// selection, BLX-alpha crossover, additive Gaussian mutation clipped to the
/// box, and elitism. Returns the best individual ever evaluated.
pub fn ga_minimize(obj: &Objective, cfg: &GaConfig) -> Result<OptResult> {
    Ok(ga_minimize_with_history(obj, cfg)?.0)
}

/// [`ga_minimize`] plus the population-best objective after every generation.
pub fn ga_minimize_with_history(obj: &Objective, cfg: &GaConfig) -> Result<(OptResult, Vec<f64>)> {
    cfg.validate()?;
    obj.require_finite_box()?;
    let mut rng = seed::rng(cfg.seed);
    let dim = obj.arity();
    let mut evaluations = 0usize;

    let mut population: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| obj.random_point(&mut rng))
        .collect();
    let mut fitness: Vec<f64> = population
        .iter()
        .map(|x| {
            evaluations += 1;
            obj.eval(x)
        })
        .collect();

    let best_idx = argmin(&fitness);
    let mut best_x = population[best_idx].clone();
    let mut best_f = fitness[best_idx];

    let sigmas: Vec<f64> = obj
        .bounds
        .iter()
        .map(|&(lo, hi)| (cfg.mutation_sigma * (hi - lo)).max(f64::MIN_POSITIVE))
        .collect();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut best_history = Vec::with_capacity(cfg.generations);
    for _gen in 0..cfg.generations {
        let mut ranked: Vec<usize> = (0..cfg.population).collect();
        ranked.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));

        let mut next_pop: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
        let mut next_fit: Vec<f64> = Vec::with_capacity(cfg.population);
        for &e in ranked.iter().take(cfg.elitism) {
            next_pop.push(population[e].clone());
            next_fit.push(fitness[e]); // elites keep their cached fitness
        }

        while next_pop.len() < cfg.population {
            let p1 = tournament(&population, &fitness, cfg.tournament_size, &mut rng);
            let p2 = tournament(&population, &fitness, cfg.tournament_size, &mut rng);
            let (mut c1, mut c2) = if rng.gen::<f64>() < cfg.crossover_rate {
                blend_crossover(&population[p1], &population[p2], cfg.blend_alpha, &mut rng)
            } else {
                (population[p1].clone(), population[p2].clone())
            };
            for child in [&mut c1, &mut c2] {
                for d in 0..dim {
                    if rng.gen::<f64>() < cfg.mutation_rate {
                        child[d] += sigmas[d] * normal.sample(&mut rng);
                    }
                }
                obj.clip(child);
            }
            for child in [c1, c2] {
                if next_pop.len() == cfg.population {
                    break;
                }
                evaluations += 1;
                let f = obj.eval(&child);
                if f < best_f {
                    best_f = f;
                    best_x = child.clone();
                }
                next_pop.push(child);
                next_fit.push(f);
            }
        }
        population = next_pop;
        fitness = next_fit;
        // Elites carry the previous best forward, so this never increases.
        best_history.push(fitness.iter().copied().fold(f64::INFINITY, f64::min));
    }

    Ok((
        OptResult {
            x_star: best_x,
            f_star: best_f,
            evaluations,
            iterations: cfg.generations,
            converged: true,
        },
        best_history,
    ))
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

fn tournament<R: Rng>(
    population: &[Vec<f64>],
    fitness: &[f64],
    size: usize,
    rng: &mut R,
) -> usize {
    let mut winner = rng.gen_range(0..population.len());
    for _ in 1..size {
        let challenger = rng.gen_range(0..population.len());
        if fitness[challenger] < fitness[winner] {
            winner = challenger;
        }
    }
    winner
}

/// BLX-alpha: each child gene is uniform on the parents' interval expanded by
/// `alpha` times its width.
fn blend_crossover<R: Rng>(
    p1: &[f64],
    p2: &[f64],
    alpha: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = Vec::with_capacity(p1.len());
    let mut c2 = Vec::with_capacity(p1.len());
    for (&a, &b) in p1.iter().zip(p2) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let spread = alpha * (hi - lo);
        let (lo, hi) = (lo - spread, hi + spread);
        c1.push(rng.gen_range(lo..=hi));
        c2.push(rng.gen_range(lo..=hi));
    }
    (c1, c2)
}

/// Global-best PSO with zero initial velocities, per-component velocity
/// clamping and box clipping.
pub fn pso_minimize(obj: &Objective, cfg: &PsoConfig) -> Result<OptResult> {
    Ok(pso_minimize_with_history(obj, cfg)?.0)
}

/// [`pso_minimize`] plus the global-best objective after every iteration.
pub fn pso_minimize_with_history(
    obj: &Objective,
    cfg: &PsoConfig,
) -> Result<(OptResult, Vec<f64>)> {
    cfg.validate()?;
    obj.require_finite_box()?;
    let mut rng = seed::rng(cfg.seed);
    let dim = obj.arity();
    let mut evaluations = 0usize;

    let mut positions: Vec<Vec<f64>> = (0..cfg.swarm)
        .map(|_| obj.random_point(&mut rng))
        .collect();
    let mut velocities: Vec<Vec<f64>> = vec![vec![0.0; dim]; cfg.swarm];
    let mut pbest = positions.clone();
    let mut pbest_f: Vec<f64> = positions
        .iter()
        .map(|x| {
            evaluations += 1;
            obj.eval(x)
        })
        .collect();
    let g = argmin(&pbest_f);
    let mut gbest = pbest[g].clone();
    let mut gbest_f = pbest_f[g];

    let vmax: Vec<f64> = obj
        .bounds
        .iter()
        .map(|&(lo, hi)| cfg.velocity_clamp * (hi - lo))
        .collect();

    let mut best_history = Vec::with_capacity(cfg.iterations);
    for _iter in 0..cfg.iterations {
        for i in 0..cfg.swarm {
            for d in 0..dim {
                let r1 = rng.gen::<f64>();
                let r2 = rng.gen::<f64>();
                let v = cfg.inertia * velocities[i][d]
                    + cfg.cognitive * r1 * (pbest[i][d] - positions[i][d])
                    + cfg.social * r2 * (gbest[d] - positions[i][d]);
                velocities[i][d] = v.clamp(-vmax[d], vmax[d]);
                positions[i][d] += velocities[i][d];
            }
            obj.clip(&mut positions[i]);
            evaluations += 1;
            let f = obj.eval(&positions[i]);
            if f < pbest_f[i] {
                pbest_f[i] = f;
                pbest[i] = positions[i].clone();
            }
            if f < gbest_f {
                gbest_f = f;
                gbest = positions[i].clone();
            }
        }
        best_history.push(gbest_f);
    }

    Ok((
        OptResult {
            x_star: gbest,
            f_star: gbest_f,
            evaluations,
            iterations: cfg.iterations,
            converged: true,
        },
        best_history,
    ))
}

/// Projected gradient descent `x <- clip(x - eta * grad f(x))`, stopping when
/// the gradient norm reaches `grad_tolerance` or the iteration cap.
///
/// Errors with [`Error::UnsupportedObjective`] when the objective carries no
/// gradient.
pub fn mle_minimize(obj: &Objective, cfg: &GdConfig) -> Result<OptResult> {
    cfg.validate()?;
    obj.require_finite_box()?;
    if !obj.has_gradient() {
        return Err(Error::UnsupportedObjective);
    }
    if let Some(start) = &cfg.start {
        if start.len() != obj.arity() {
            return Err(Error::shape(format!(
                "start point has {} coordinates, objective has {}",
                start.len(),
                obj.arity()
            )));
        }
    }

    let mut x = match &cfg.start {
        Some(start) => start.clone(),
        None => {
            let mut rng = seed::rng(cfg.seed);
            obj.random_point(&mut rng)
        }
    };
    obj.clip(&mut x);

    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < cfg.max_iters {
        let grad = obj.gradient(&x).expect("gradient checked above");
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm <= cfg.grad_tolerance {
            converged = true;
            break;
        }
        for (v, g) in x.iter_mut().zip(&grad) {
            *v -= cfg.step_size * g;
        }
        obj.clip(&mut x);
        iterations += 1;
    }
    if !converged {
        // The cap was hit; report convergence if the final point satisfies
        // the tolerance anyway.
        let grad = obj.gradient(&x).expect("gradient checked above");
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        converged = norm <= cfg.grad_tolerance;
    }

    let f_star = obj.eval(&x);
    Ok(OptResult {
        x_star: x,
        f_star,
        evaluations: 1,
        iterations,
        converged,
    })
}
