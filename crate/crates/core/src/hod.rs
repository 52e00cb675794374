//! Latent-variable (naive Bayes) representation of the joint access distribution.
//!
//! A hidden variable `H` takes `F` states with prior `lambda`; given `H = f`, client `i`
//! accesses independently with probability `p[i][f]`. The model is fitted to pairwise
//! tables by minimizing the summed KL divergence with gradient descent on
//! softmax/sigmoid logits, and then answers queries of any order.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::airsim::ExactJointDistribution;
use crate::error::{invalid, Result};
use crate::law::AccessLaw;
use crate::stream_rng;
use crate::tomography::{ChannelPairs, PairTable};

/// Laplace-style mass added to every measured cell before the KL divergence.
pub const SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentModel {
    pub channel: usize,
    pub f: usize,
    pub lambda: Vec<f64>,
    /// `p[i][f]`: probability client `i` accesses given latent state `f`.
    pub p: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    /// Loss after each accepted step, starting with the initial loss.
    #[serde(skip)]
    pub loss_trace: Vec<f64>,
}

/// `P(G accesses exactly as g)`: members of `access` can transmit, `blocked` cannot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalQuery {
    pub group: Vec<usize>,
    pub access: Vec<usize>,
}

impl MarginalQuery {
    pub fn new(group: Vec<usize>, access: Vec<usize>) -> Result<Self> {
        if access.iter().any(|a| !group.contains(a)) {
            return Err(invalid("query access set must be a subset of its group"));
        }
        Ok(Self { group, access })
    }

    pub fn blocked(&self) -> Vec<usize> {
        self.group.iter().copied().filter(|c| !self.access.contains(c)).collect()
    }
}

impl LatentModel {
    pub fn new(channel: usize, lambda: Vec<f64>, p: Vec<Vec<f64>>) -> Result<Self> {
        let f = lambda.len();
        if f == 0 {
            return Err(invalid("latent alphabet must be non-empty"));
        }
        if lambda.iter().any(|&l| !(0.0..=1.0).contains(&l)) || (lambda.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("lambda must be a probability vector"));
        }
        if p.iter().any(|row| row.len() != f || row.iter().any(|&x| !(0.0..=1.0).contains(&x))) {
            return Err(invalid("P rows must have length F with entries in [0, 1]"));
        }
        Ok(Self {
            channel,
            f,
            lambda,
            p,
            fit: None,
            loss_trace: Vec::new(),
        })
    }

    /// Model of `n` clients that access independently with the given marginals.
    pub fn independent(channel: usize, marginals: &[f64]) -> Result<Self> {
        Self::new(channel, vec![1.0], marginals.iter().map(|&m| vec![m]).collect())
    }

    pub fn num_clients(&self) -> usize {
        self.p.len()
    }

    pub fn query(&self, q: &MarginalQuery) -> f64 {
        self.joint(&q.access, &q.blocked())
    }

    /// Model 2x2 table for clients `(i, j)`.
    pub fn model_pair(&self, i: usize, j: usize) -> Result<PairTable> {
        if i == j {
            return Err(invalid("model_pair needs two distinct clients"));
        }
        let mut p = [[0.0; 2]; 2];
        for (f, &l) in self.lambda.iter().enumerate() {
            let (pi, pj) = (self.p[i][f], self.p[j][f]);
            p[1][1] += l * pi * pj;
            p[1][0] += l * pi * (1.0 - pj);
            p[0][1] += l * (1.0 - pi) * pj;
            p[0][0] += l * (1.0 - pi) * (1.0 - pj);
        }
        Ok(PairTable { i, j, p })
    }

    /// Joint access vector `lambda ∘ P(i, :)`.
    pub fn joint_access_vector(&self, i: usize) -> Vec<f64> {
        self.lambda.iter().zip(&self.p[i]).map(|(l, p)| l * p).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl AccessLaw for LatentModel {
    fn num_clients(&self) -> usize {
        self.p.len()
    }

    fn joint(&self, access: &[usize], blocked: &[usize]) -> f64 {
        let v: f64 = (0..self.f)
            .map(|f| {
                let a: f64 = access.iter().map(|&i| self.p[i][f]).product();
                let b: f64 = blocked.iter().map(|&j| 1.0 - self.p[j][f]).product();
                self.lambda[f] * a * b
            })
            .sum();
        v.clamp(0.0, 1.0)
    }

    /// Per latent state, the count of other accessing members is Poisson-binomial.
    fn access_profile(&self, group: &[usize]) -> Vec<Vec<f64>> {
        let n = group.len();
        let mut profile = vec![vec![0.0; n.max(1)]; n];
        let mut dist = vec![0.0; n.max(1)];
        for f in 0..self.f {
            let l = self.lambda[f];
            for (m, row) in profile.iter_mut().enumerate() {
                dist.iter_mut().for_each(|d| *d = 0.0);
                dist[0] = 1.0;
                let mut seen = 0;
                for (k, &c) in group.iter().enumerate() {
                    if k == m {
                        continue;
                    }
                    let q = self.p[c][f];
                    seen += 1;
                    for s in (1..=seen).rev() {
                        dist[s] = dist[s] * (1.0 - q) + dist[s - 1] * q;
                    }
                    dist[0] *= 1.0 - q;
                }
                let w = l * self.p[group[m]][f];
                for (r, d) in row.iter_mut().zip(&dist) {
                    *r += w * d;
                }
            }
        }
        profile
    }
}

/// Mean squared error between model queries and the exact distribution over its subset,
/// averaged over all `2^n` access patterns.
pub fn hod_mse(model: &LatentModel, truth: &ExactJointDistribution) -> f64 {
    let n = truth.clients.len();
    let mut access = Vec::with_capacity(n);
    let mut blocked = Vec::with_capacity(n);
    let mut sum = 0.0;
    for (pattern, &t) in truth.probabilities.iter().enumerate() {
        access.clear();
        blocked.clear();
        for (k, &c) in truth.clients.iter().enumerate() {
            if pattern >> k & 1 == 1 {
                access.push(c);
            } else {
                blocked.push(c);
            }
        }
        let d = model.joint(&access, &blocked) - t;
        sum += d * d;
    }
    sum / truth.probabilities.len() as f64
}

/// Minimizer of the pairwise KL loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    /// Full-batch gradient descent on softmax/sigmoid logits with Armijo backtracking.
    GradientDescent,
    /// Expectation-maximization over the latent state of each measured pair outcome.
    /// Reaches states with access probabilities of exactly 0 or 1, where the logits of
    /// gradient descent saturate.
    #[default]
    Em,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub optimizer: Optimizer,
    pub initial_step: f64,
    pub armijo_c: f64,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    /// Half-width of the uniform noise added to the initial `P` entries.
    pub init_noise: f64,
    /// Independent initializations tried; the best after `restart_iterations` is run on.
    pub restarts: usize,
    pub restart_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Em,
            initial_step: 0.1,
            armijo_c: 1e-4,
            max_iterations: 5000,
            relative_tolerance: 1e-8,
            init_noise: 0.05,
            restarts: 4,
            restart_iterations: 200,
        }
    }
}

const INIT_CLAMP: f64 = 1e-3;
const EM_CLAMP: f64 = 1e-15;
const MAX_HALVINGS: usize = 60;

struct Problem {
    n: usize,
    f: usize,
    /// `(i, j, [t00, t01, t10, t11])` with smoothed measured cells.
    pairs: Vec<(usize, usize, [f64; 4])>,
    /// `sum t ln t`, so the loss is a true KL divergence.
    entropy: f64,
}

struct Params {
    lambda: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Params {
    fn from_logits(theta: &[f64], w: &[f64]) -> Self {
        let max = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = theta.iter().map(|t| (t - max).exp()).collect();
        let z: f64 = e.iter().sum();
        Self {
            lambda: e.iter().map(|x| x / z).collect(),
            p: w.iter().map(|&x| sigmoid(x)).collect(),
            q: w.iter().map(|&x| sigmoid(-x)).collect(),
        }
    }

    fn from_probs(lambda: Vec<f64>, p: Vec<f64>) -> Self {
        let q = p.iter().map(|x| 1.0 - x).collect();
        Self { lambda, p, q }
    }
}

impl Problem {
    fn new(pairs: &ChannelPairs, n: usize, f: usize) -> Result<Self> {
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        let mut entropy = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let t = pairs.get(i, j)?;
                let raw = [t.p[0][0], t.p[0][1], t.p[1][0], t.p[1][1]];
                if raw.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(invalid(format!("pair ({i}, {j}) has an invalid table")));
                }
                let z: f64 = raw.iter().sum::<f64>() + 4.0 * SMOOTHING;
                let s = raw.map(|x| (x + SMOOTHING) / z);
                entropy += s.iter().map(|x| x * x.ln()).sum::<f64>();
                out.push((i, j, s));
            }
        }
        Ok(Self { n, f, pairs: out, entropy })
    }

    fn cells(&self, x: &Params, i: usize, j: usize) -> [f64; 4] {
        let f = self.f;
        let (pi, qi) = (&x.p[i * f..(i + 1) * f], &x.q[i * f..(i + 1) * f]);
        let (pj, qj) = (&x.p[j * f..(j + 1) * f], &x.q[j * f..(j + 1) * f]);
        let mut m = [0.0; 4];
        for k in 0..f {
            let l = x.lambda[k];
            let (li, lqi) = (l * pi[k], l * qi[k]);
            m[0] += lqi * qj[k];
            m[1] += lqi * pj[k];
            m[2] += li * qj[k];
            m[3] += li * pj[k];
        }
        m
    }

    fn loss(&self, x: &Params) -> f64 {
        let mut cross = 0.0;
        for &(i, j, t) in &self.pairs {
            let m = self.cells(x, i, j);
            cross += t[0] * m[0].ln() + t[1] * m[1].ln() + t[2] * m[2].ln() + t[3] * m[3].ln();
        }
        self.entropy - cross
    }

    /// Loss and gradient with respect to the logits `(theta, w)`.
    fn loss_grad(&self, x: &Params, g_theta: &mut [f64], g_w: &mut [f64]) -> f64 {
        let f = self.f;
        let mut g_lambda = vec![0.0; f];
        let mut g_p = vec![0.0; self.n * f];
        let mut cross = 0.0;
        for &(i, j, t) in &self.pairs {
            let m = self.cells(x, i, j);
            cross += t[0] * m[0].ln() + t[1] * m[1].ln() + t[2] * m[2].ln() + t[3] * m[3].ln();
            let g = [-t[0] / m[0], -t[1] / m[1], -t[2] / m[2], -t[3] / m[3]];
            let (pi, qi) = (&x.p[i * f..(i + 1) * f], &x.q[i * f..(i + 1) * f]);
            let (pj, qj) = (&x.p[j * f..(j + 1) * f], &x.q[j * f..(j + 1) * f]);
            for k in 0..f {
                let l = x.lambda[k];
                g_p[i * f + k] += l * ((g[3] - g[1]) * pj[k] + (g[2] - g[0]) * qj[k]);
                g_p[j * f + k] += l * ((g[3] - g[2]) * pi[k] + (g[1] - g[0]) * qi[k]);
                g_lambda[k] += g[0] * qi[k] * qj[k] + g[1] * qi[k] * pj[k] + g[2] * pi[k] * qj[k] + g[3] * pi[k] * pj[k];
            }
        }
        let mean: f64 = x.lambda.iter().zip(&g_lambda).map(|(l, g)| l * g).sum();
        for k in 0..f {
            g_theta[k] = x.lambda[k] * (g_lambda[k] - mean);
        }
        for (idx, g) in g_w.iter_mut().enumerate() {
            *g = g_p[idx] * x.p[idx] * x.q[idx];
        }
        self.entropy - cross
    }

    /// One EM update. Each measured pair outcome is treated as a draw with its own latent
    /// state, so the update never increases the loss.
    fn em_step(&self, x: &Params) -> Params {
        let f = self.f;
        let mut lam = vec![0.0; f];
        let mut num = vec![0.0; self.n * f];
        let mut den = vec![0.0; self.n * f];
        let mut w = vec![[0.0; 4]; f];
        for &(i, j, t) in &self.pairs {
            let (pi, qi) = (&x.p[i * f..(i + 1) * f], &x.q[i * f..(i + 1) * f]);
            let (pj, qj) = (&x.p[j * f..(j + 1) * f], &x.q[j * f..(j + 1) * f]);
            let mut m = [0.0; 4];
            for k in 0..f {
                let l = x.lambda[k];
                let (li, lqi) = (l * pi[k], l * qi[k]);
                w[k] = [lqi * qj[k], lqi * pj[k], li * qj[k], li * pj[k]];
                for c in 0..4 {
                    m[c] += w[k][c];
                }
            }
            let r = [t[0] / m[0], t[1] / m[1], t[2] / m[2], t[3] / m[3]];
            for k in 0..f {
                let post = [w[k][0] * r[0], w[k][1] * r[1], w[k][2] * r[2], w[k][3] * r[3]];
                let total = post[0] + post[1] + post[2] + post[3];
                lam[k] += total;
                den[i * f + k] += total;
                den[j * f + k] += total;
                num[i * f + k] += post[2] + post[3];
                num[j * f + k] += post[1] + post[3];
            }
        }
        let z: f64 = lam.iter().sum();
        let lambda = lam.iter().map(|l| l / z).collect();
        let p = num
            .iter()
            .zip(&den)
            .zip(&x.p)
            .map(|((a, b), old)| if *b > 0.0 { (a / b).clamp(EM_CLAMP, 1.0 - EM_CLAMP) } else { *old })
            .collect();
        Params::from_probs(lambda, p)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

struct Outcome {
    x: Params,
    loss: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn relative_change(old: f64, new: f64) -> f64 {
    (old - new).abs() / old.abs().max(f64::MIN_POSITIVE)
}

fn gradient_descent(problem: &Problem, start: &Params, opts: &FitOptions, budget: usize) -> Outcome {
    let f = problem.f;
    let mut theta: Vec<f64> = start.lambda.iter().map(|l| l.max(f64::MIN_POSITIVE).ln()).collect();
    let mut w: Vec<f64> = start.p.iter().map(|&p| logit(p.clamp(EM_CLAMP, 1.0 - EM_CLAMP))).collect();
    let mut x = Params::from_logits(&theta, &w);
    let mut g_theta = vec![0.0; f];
    let mut g_w = vec![0.0; w.len()];
    let mut loss = problem.loss_grad(&x, &mut g_theta, &mut g_w);
    let mut trace = vec![loss];
    let mut step = opts.initial_step;
    let mut converged = false;
    let mut iterations = 0;
    let mut trial_theta = theta.clone();
    let mut trial_w = w.clone();

    while iterations < budget && !problem.pairs.is_empty() {
        iterations += 1;
        let g2: f64 = g_theta.iter().chain(&g_w).map(|g| g * g).sum();
        if g2 == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            for (t, (a, g)) in trial_theta.iter_mut().zip(theta.iter().zip(&g_theta)) {
                *t = a - step * g;
            }
            for (t, (a, g)) in trial_w.iter_mut().zip(w.iter().zip(&g_w)) {
                *t = a - step * g;
            }
            let cand = Params::from_logits(&trial_theta, &trial_w);
            let l = problem.loss(&cand);
            if l.is_finite() && l <= loss - opts.armijo_c * step * g2 {
                accepted = Some((cand, l));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, new_loss)) = accepted else {
            converged = true;
            break;
        };
        std::mem::swap(&mut theta, &mut trial_theta);
        std::mem::swap(&mut w, &mut trial_w);
        x = cand;
        let rel = relative_change(loss, new_loss);
        loss = problem.loss_grad(&x, &mut g_theta, &mut g_w);
        trace.push(loss);
        if rel < opts.relative_tolerance {
            converged = true;
            break;
        }
        step *= 2.0;
    }
    Outcome { x, loss, trace, iterations, converged }
}

fn expectation_maximization(problem: &Problem, start: &Params, opts: &FitOptions, budget: usize) -> Outcome {
    let mut x = Params::from_probs(start.lambda.clone(), start.p.clone());
    let mut loss = problem.loss(&x);
    let mut trace = vec![loss];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < budget && !problem.pairs.is_empty() {
        iterations += 1;
        let cand = problem.em_step(&x);
        let new_loss = problem.loss(&cand);
        if !(new_loss <= loss) {
            converged = true;
            break;
        }
        let rel = relative_change(loss, new_loss);
        x = cand;
        loss = new_loss;
        trace.push(loss);
        if rel < opts.relative_tolerance {
            converged = true;
            break;
        }
    }
    Outcome { x, loss, trace, iterations, converged }
}

/// Fit a latent model with alphabet size `f` to the pairwise tables of one channel.
///
/// `marginals[i]` is client `i`'s first-order access probability, used for initialization.
/// All `n(n-1)/2` pairs must be present.
pub fn fit(
    pairs: &ChannelPairs,
    marginals: &[f64],
    f: usize,
    opts: &FitOptions,
    seed: u64,
) -> Result<LatentModel> {
    if f == 0 {
        return Err(invalid("F must be at least 1"));
    }
    let n = marginals.len();
    let problem = Problem::new(pairs, n, f)?;
    let mut rng = stream_rng(seed, pairs.channel as u64);
    let mut draw_init = || -> Params {
        let p = (0..n * f)
            .map(|idx| {
                let noise = if opts.init_noise > 0.0 {
                    rng.random_range(-opts.init_noise..=opts.init_noise)
                } else {
                    0.0
                };
                (marginals[idx / f] + noise).clamp(INIT_CLAMP, 1.0 - INIT_CLAMP)
            })
            .collect();
        Params::from_probs(vec![1.0 / f as f64; f], p)
    };
    let run = |start: &Params, budget: usize| match opts.optimizer {
        Optimizer::GradientDescent => gradient_descent(&problem, start, opts, budget),
        Optimizer::Em => expectation_maximization(&problem, start, opts, budget),
    };
    let first = draw_init();
    let out = if opts.restarts <= 1 || opts.restart_iterations >= opts.max_iterations {
        run(&first, opts.max_iterations)
    } else {
        let mut best = run(&first, opts.restart_iterations);
        for _ in 1..opts.restarts {
            let o = run(&draw_init(), opts.restart_iterations);
            if o.loss < best.loss {
                best = o;
            }
        }
        if best.converged {
            best
        } else {
            let rest = run(&best.x, opts.max_iterations - best.iterations);
            let mut trace = best.trace;
            trace.extend_from_slice(&rest.trace[1..]);
            Outcome { x: rest.x, loss: rest.loss, trace, iterations: best.iterations + rest.iterations, converged: rest.converged }
        }
    };
    let p = (0..n).map(|i| out.x.p[i * f..(i + 1) * f].to_vec()).collect();
    Ok(LatentModel {
        channel: pairs.channel,
        f,
        lambda: out.x.lambda,
        p,
        fit: Some(FitSummary {
            initial_loss: out.trace[0],
            final_loss: out.loss,
            iterations: out.iterations,
            converged: out.converged,
        }),
        loss_trace: out.trace,
    })
}

/// Summed KL divergence of `model` from the smoothed tables in `pairs`, for any model.
pub fn pairwise_loss(model: &LatentModel, pairs: &ChannelPairs) -> Result<f64> {
    let n = model.num_clients();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let t = pairs.get(i, j)?;
            let m = model.model_pair(i, j)?;
            let z: f64 = t.total() + 4.0 * SMOOTHING;
            for a in 0..2 {
                for b in 0..2 {
                    let s = (t.p[a][b] + SMOOTHING) / z;
                    total += s * (s / m.p[a][b]).ln();
                }
            }
        }
    }
    Ok(total)
}
