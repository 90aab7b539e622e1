//! Dormand-Prince 5(4) integration of `(v z')' + W v z = 0` and `u'' + K u = 0`
//! with dense output and bracketed zeros.
//!
//! The state is `(z, q)` with the flux `q = v z'`; the Jacobi equation is the
//! case `v = 1`, `W = K`.

use crate::error::{Error, Result};
use crate::profiles::{CoefficientPair, CurvatureProfile, Profile};
use crate::quadrature::{integrate_fn, QuadOptions};
use crate::scalar::Real;
use std::io::{self, Write};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Abscissa of the singular start.
pub const SINGULAR_EPSILON: f64 = 1e-6;
/// Largest admissible change of `z'(eps)` under a second Picard iterate.
pub const PICARD_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node<T> {
    pub t: T,
    pub z: T,
    pub dz: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroCertificate<T> {
    pub t_lo: T,
    pub t_hi: T,
    pub sign_before: i8,
    pub sign_after: i8,
}

impl<T: Real> ZeroCertificate<T> {
    pub fn midpoint(&self) -> T {
        T::lit(0.5) * (self.t_lo + self.t_hi)
    }

    pub fn width(&self) -> T {
        self.t_hi - self.t_lo
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    HorizonReached,
    ZeroCapReached,
    StepUnderflow,
}

/// How the trajectory was started.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Start<T> {
    /// Regular initial data at `t0`.
    Regular { t0: T, z0: T, dz0: T },
    /// Picard bootstrap from the singular origin; `delta` is the change of
    /// `z'(eps)` produced by the second iterate.
    Singular { epsilon: T, z0: T, delta: T },
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions<T> {
    pub tol: T,
    pub zero_tol: T,
    /// Stop after this many certified zeros.
    pub zero_cap: Option<usize>,
    pub max_steps: usize,
}

impl<T: Real> SolveOptions<T> {
    pub fn new(tol: T) -> Self {
        SolveOptions { tol, zero_tol: tol, zero_cap: None, max_steps: 2_000_000 }
    }

    pub fn with_zero_cap(mut self, cap: usize) -> Self {
        self.zero_cap = Some(cap);
        self
    }

    pub fn with_zero_tol(mut self, zero_tol: T) -> Self {
        self.zero_tol = zero_tol;
        self
    }
}

#[derive(Clone, Debug)]
struct DenseStep<T> {
    t0: T,
    h: T,
    r: [[T; 2]; 5],
}

impl<T: Real> DenseStep<T> {
    fn eval(&self, t: T) -> [T; 2] {
        let th = (t - self.t0) / self.h;
        let th1 = T::one() - th;
        let r = &self.r;
        let comp = |i: usize| r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        [comp(0), comp(1)]
    }
}

#[derive(Clone, Debug)]
struct Rhs<T> {
    /// `None` encodes `v = 1`.
    v: Option<Profile<T>>,
    wv: Profile<T>,
}

impl<T: Real> Rhs<T> {
    #[inline]
    fn v(&self, t: T) -> T {
        self.v.as_ref().map_or(T::one(), |v| v.eval(t))
    }

    #[inline]
    fn eval(&self, t: T, y: [T; 2]) -> [T; 2] {
        [y[1] / self.v(t), -self.wv.eval(t) * y[0]]
    }
}

/// Dense ODE solution with certified zeros.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub nodes: Vec<Node<T>>,
    flux: Vec<T>,
    steps: Vec<DenseStep<T>>,
    pub zeros: Vec<ZeroCertificate<T>>,
    /// Abscissae of tangential near-zeros without a sign change.
    pub suspects: Vec<T>,
    pub terminated: Termination,
    pub start: Start<T>,
    pub tol: T,
    rhs: Rhs<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn t_start(&self) -> T {
        self.nodes[0].t
    }

    pub fn t_end(&self) -> T {
        self.nodes[self.nodes.len() - 1].t
    }

    /// Flux `v z'` at each node.
    pub fn flux(&self) -> &[T] {
        &self.flux
    }

    pub fn first_zero(&self) -> Option<&ZeroCertificate<T>> {
        self.zeros.first()
    }

    /// `v` (1 for the Jacobi equation).
    pub fn v(&self, t: T) -> T {
        self.rhs.v(t)
    }

    /// Whether `v` is the unit profile.
    pub fn unit_weight(&self) -> bool {
        self.rhs.v.is_none()
    }

    /// `W v` (or `K` for the Jacobi equation).
    pub fn wv(&self, t: T) -> T {
        self.rhs.wv.eval(t)
    }

    fn step_index(&self, t: T) -> Option<usize> {
        if self.steps.is_empty() || t < self.t_start() || t > self.t_end() {
            return None;
        }
        let i = self.steps.partition_point(|s| s.t0 <= t);
        Some(i.saturating_sub(1))
    }

    /// `(z, v z')` from the dense output.
    pub fn state_at(&self, t: T) -> Option<[T; 2]> {
        if self.steps.is_empty() {
            return (t == self.t_start()).then(|| [self.nodes[0].z, self.flux[0]]);
        }
        self.step_index(t).map(|i| self.steps[i].eval(t))
    }

    pub fn value_at(&self, t: T) -> Option<T> {
        self.state_at(t).map(|s| s[0])
    }

    pub fn flux_at(&self, t: T) -> Option<T> {
        self.state_at(t).map(|s| s[1])
    }

    pub fn derivative_at(&self, t: T) -> Option<T> {
        self.state_at(t).map(|s| s[1] / self.rhs.v(t))
    }

    /// `(q(t+h) - q(t-h)) / 2h + W v z`, reconstructed from dense output.
    pub fn residual_at(&self, t: T, h: T) -> Option<T> {
        let qp = self.flux_at(t + h)?;
        let qm = self.flux_at(t - h)?;
        let z = self.value_at(t)?;
        Some((qp - qm) / (T::lit(2.0) * h) + self.wv(t) * z)
    }

    pub fn max_abs_value(&self) -> T {
        self.nodes.iter().fold(T::zero(), |m, n| m.max(n.z.abs()))
    }

    /// Writes `t z dz` rows followed by `# zero t_lo t_hi` lines.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# t\tz\tdz")?;
        for n in &self.nodes {
            writeln!(w, "{}\t{}\t{}", g12(n.t), g12(n.z), g12(n.dz))?;
        }
        for c in &self.zeros {
            writeln!(w, "# zero {} {}", g12(c.t_lo), g12(c.t_hi))?;
        }
        Ok(())
    }
}

fn g12<T: Real>(x: T) -> String {
    crate::report::fmt_g12(x.as_f64())
}

fn sign<T: Real>(x: T) -> i8 {
    if x > T::zero() {
        1
    } else if x < T::zero() {
        -1
    } else {
        0
    }
}

#[derive(Clone, Copy)]
struct SignState<T> {
    sign: i8,
    t: T,
}

fn bisect<T: Real>(step: &DenseStep<T>, mut lo: T, mut hi: T, sign_lo: i8, zero_tol: T) -> (T, T) {
    for _ in 0..200 {
        if hi - lo <= zero_tol {
            break;
        }
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sign(step.eval(mid)[0]) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Brackets every sign change inside one dense step.
fn scan_step<T: Real>(
    step: &DenseStep<T>,
    first: bool,
    state: &mut Option<SignState<T>>,
    zero_tol: T,
    out: &mut Vec<ZeroCertificate<T>>,
) {
    const THETAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    for &th in THETAS.iter().skip(if first { 0 } else { 1 }) {
        let t = if th == 1.0 { step.t0 + step.h } else { step.t0 + step.h * T::lit(th) };
        let s = sign(step.eval(t)[0]);
        if s == 0 {
            continue;
        }
        if let Some(prev) = *state {
            if prev.sign != s {
                // Crossings from an earlier step are bracketed against that step's
                // right end, which coincides with this step's left end.
                let lo = prev.t.max(step.t0);
                let sign_lo = sign(step.eval(lo)[0]);
                let (lo, sign_lo) = if sign_lo == prev.sign { (lo, sign_lo) } else { (step.t0, prev.sign) };
                let (a, b) = bisect(step, lo, t, sign_lo, zero_tol);
                out.push(ZeroCertificate { t_lo: a, t_hi: b, sign_before: prev.sign, sign_after: s });
            }
        }
        *state = Some(SignState { sign: s, t });
    }
}

fn find_suspects<T: Real>(nodes: &[Node<T>], tol: T) -> Vec<T> {
    let scale = nodes.iter().fold(T::zero(), |m, n| m.max(n.z.abs()));
    nodes
        .windows(3)
        .filter(|w| {
            let (a, b, c) = (w[0].z, w[1].z, w[2].z);
            sign(a) == sign(c)
                && sign(a) == sign(b)
                && b.abs() < a.abs()
                && b.abs() < c.abs()
                && b.abs() < tol * scale
        })
        .map(|w| w[1].t)
        .collect()
}

/// Re-brackets every sign change of the dense output to width `zero_tol` and
/// lists tangential near-zeros as suspects.
pub fn locate_zeros<T: Real>(traj: &Trajectory<T>, zero_tol: T) -> (Vec<ZeroCertificate<T>>, Vec<T>) {
    let mut zeros = Vec::new();
    let mut state = None;
    for (i, step) in traj.steps.iter().enumerate() {
        scan_step(step, i == 0, &mut state, zero_tol, &mut zeros);
    }
    (zeros, find_suspects(&traj.nodes, traj.tol))
}

/// Resumable integrator; [`Integrator::advance_to`] continues a trajectory.
pub struct Integrator<T> {
    traj: Trajectory<T>,
    t: T,
    y: [T; 2],
    k1: [T; 2],
    h: T,
    opts: SolveOptions<T>,
    sign_state: Option<SignState<T>>,
    steps_taken: usize,
}

impl<T: Real> Integrator<T> {
    fn new(rhs: Rhs<T>, t0: T, y0: [T; 2], start: Start<T>, opts: SolveOptions<T>) -> Result<Self> {
        let k1 = rhs.eval(t0, y0);
        if !(k1[0].is_finite() && k1[1].is_finite()) {
            return Err(Error::NonFiniteSample { t: t0.as_f64(), value: f64::NAN });
        }
        let dz0 = y0[1] / rhs.v(t0);
        let h = if t0 > T::zero() { t0 * T::lit(1e-2) } else { T::lit(1e-4) };
        Ok(Integrator {
            traj: Trajectory {
                nodes: vec![Node { t: t0, z: y0[0], dz: dz0 }],
                flux: vec![y0[1]],
                steps: Vec::new(),
                zeros: Vec::new(),
                suspects: Vec::new(),
                terminated: Termination::HorizonReached,
                start,
                tol: opts.tol,
                rhs,
            },
            t: t0,
            y: y0,
            k1,
            h,
            opts,
            sign_state: None,
            steps_taken: 0,
        })
    }

    fn error_norm(&self, y1: [T; 2], err: [T; 2], t1: T) -> T {
        let (atol, rtol) = (self.opts.tol, self.opts.tol);
        let sc_z = atol + rtol * self.y[0].abs().max(y1[0].abs());
        // Flux errors are scaled in derivative units so that a vanishing `v`
        // near the origin does not loosen the control.
        let v = self.traj.rhs.v(t1).abs();
        let sc_q = v * atol + rtol * self.y[1].abs().max(y1[1].abs());
        let e0 = err[0] / sc_z;
        let e1 = err[1] / sc_q;
        ((e0 * e0 + e1 * e1) * T::lit(0.5)).sqrt()
    }

    /// Integrates up to `t_end`, or until the zero cap or step underflow stops it.
    pub fn advance_to(&mut self, t_end: T) {
        if self.traj.terminated != Termination::HorizonReached {
            return;
        }
        let rhs = self.traj.rhs.clone();
        while self.t < t_end {
            if self.steps_taken >= self.opts.max_steps {
                self.traj.terminated = Termination::StepUnderflow;
                break;
            }
            let mut h = self.h.min(t_end - self.t);
            let last = h >= t_end - self.t;
            if h <= T::epsilon() * T::lit(16.0) * self.t.abs().max(T::min_positive_value()) {
                self.traj.terminated = Termination::StepUnderflow;
                break;
            }
            let (t, y) = (self.t, self.y);
            let mut k = [[T::zero(); 2]; 7];
            k[0] = self.k1;
            for s in 1..7 {
                let mut ys = y;
                for (i, ysi) in ys.iter_mut().enumerate() {
                    let mut acc = T::zero();
                    for j in 0..s {
                        acc = acc + T::lit(A[s][j]) * k[j][i];
                    }
                    *ysi = *ysi + h * acc;
                }
                k[s] = rhs.eval(t + T::lit(C[s]) * h, ys);
            }
            let mut y1 = y;
            let mut err = [T::zero(); 2];
            for i in 0..2 {
                let mut acc = T::zero();
                let mut eacc = T::zero();
                for j in 0..6 {
                    acc = acc + T::lit(A[6][j]) * k[j][i];
                }
                for j in 0..7 {
                    eacc = eacc + T::lit(E[j]) * k[j][i];
                }
                y1[i] = y[i] + h * acc;
                err[i] = h * eacc;
            }
            let t1 = if last { t_end } else { t + h };
            let en = self.error_norm(y1, err, t1);
            let finite = en.is_finite() && y1.iter().all(|x| x.is_finite());
            if !finite || en > T::one() {
                let fac = if finite { (T::lit(0.9) * en.powf(T::lit(-0.2))).max(T::lit(0.2)) } else { T::lit(0.2) };
                self.h = h * fac;
                continue;
            }
            self.steps_taken += 1;
            let k7 = k[6];
            let ydiff = [y1[0] - y[0], y1[1] - y[1]];
            let bspl = [h * k[0][0] - ydiff[0], h * k[0][1] - ydiff[1]];
            let mut r = [[T::zero(); 2]; 5];
            for i in 0..2 {
                r[0][i] = y[i];
                r[1][i] = ydiff[i];
                r[2][i] = bspl[i];
                r[3][i] = ydiff[i] - h * k7[i] - bspl[i];
                let mut acc = T::zero();
                for j in 0..7 {
                    acc = acc + T::lit(D[j]) * k[j][i];
                }
                r[4][i] = h * acc;
            }
            if last {
                h = t1 - t;
            }
            let step = DenseStep { t0: t, h, r };
            let first = self.traj.steps.is_empty();
            let before = self.traj.zeros.len();
            scan_step(&step, first, &mut self.sign_state, self.opts.zero_tol, &mut self.traj.zeros);
            self.traj.steps.push(step);
            self.traj.nodes.push(Node { t: t1, z: y1[0], dz: y1[1] / rhs.v(t1) });
            self.traj.flux.push(y1[1]);
            self.t = t1;
            self.y = y1;
            self.k1 = k7;
            let fac = if en == T::zero() { T::lit(10.0) } else { (T::lit(0.9) * en.powf(T::lit(-0.2))).min(T::lit(10.0)) };
            self.h = h.max(self.h) * fac.max(T::lit(0.2));
            if let Some(cap) = self.opts.zero_cap {
                if self.traj.zeros.len() >= cap {
                    self.traj.zeros.truncate(cap.max(before));
                    self.traj.terminated = Termination::ZeroCapReached;
                    break;
                }
            }
        }
        self.traj.suspects = find_suspects(&self.traj.nodes, self.opts.tol);
    }

    pub fn trajectory(&self) -> &Trajectory<T> {
        &self.traj
    }

    pub fn into_trajectory(self) -> Trajectory<T> {
        self.traj
    }
}

/// Solves `u'' + K u = 0` with `u(0) = 0`, `u'(0) = 1` on `[0, horizon]`.
pub fn solve_jacobi<T: Real>(k: &CurvatureProfile<T>, horizon: T, tol: T) -> Result<Trajectory<T>> {
    solve_jacobi_with(k, horizon, &SolveOptions::new(tol))
}

pub fn solve_jacobi_with<T: Real>(
    k: &CurvatureProfile<T>,
    horizon: T,
    opts: &SolveOptions<T>,
) -> Result<Trajectory<T>> {
    check_horizon(horizon)?;
    let rhs = Rhs { v: None, wv: k.k.clone() };
    // A curvature singular at the origin is started one epsilon out on the
    // linear branch u = t.
    let t0 = if k.k.eval(T::zero()).is_finite() { T::zero() } else { T::lit(SINGULAR_EPSILON) };
    let start = Start::Regular { t0, z0: t0, dz0: T::one() };
    let mut it = Integrator::new(rhs, t0, [t0, T::one()], start, *opts)?;
    it.advance_to(horizon);
    Ok(it.into_trajectory())
}

/// Solves the radial problem with `z(0+) = z0` (or `z(t0) = z0`, `z'(t0) = 0`
/// when the pair starts at `t0 > 0`).
pub fn solve_radial<T: Real>(pair: &CoefficientPair<T>, z0: T, horizon: T, tol: T) -> Result<Trajectory<T>> {
    solve_radial_with(pair, z0, horizon, &SolveOptions::new(tol))
}

pub fn solve_radial_with<T: Real>(
    pair: &CoefficientPair<T>,
    z0: T,
    horizon: T,
    opts: &SolveOptions<T>,
) -> Result<Trajectory<T>> {
    let mut it = radial_integrator(pair, z0, opts)?;
    check_horizon(horizon)?;
    it.advance_to(horizon);
    Ok(it.into_trajectory())
}

/// Radial problem with explicit regular data `z(t0) = z0`, `z'(t0) = dz0`, `t0 > 0`.
pub fn solve_radial_from<T: Real>(
    pair: &CoefficientPair<T>,
    t0: T,
    z0: T,
    dz0: T,
    horizon: T,
    opts: &SolveOptions<T>,
) -> Result<Trajectory<T>> {
    if !(t0 > T::zero()) || !(horizon > t0) {
        return Err(Error::InvalidParams(format!("need 0 < t0 < horizon, got t0 = {t0}, horizon = {horizon}")));
    }
    let rhs = Rhs { v: Some(pair.v.clone()), wv: pair.wv().clone() };
    let q0 = pair.v.eval(t0) * dz0;
    let mut it = Integrator::new(rhs, t0, [z0, q0], Start::Regular { t0, z0, dz0 }, *opts)?;
    it.advance_to(horizon);
    Ok(it.into_trajectory())
}

fn check_horizon<T: Real>(horizon: T) -> Result<()> {
    if horizon > T::zero() && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("horizon must be positive and finite, got {horizon}")))
    }
}

/// Builds the integrator at the start of the radial problem, bootstrapping the
/// singular origin by Picard iteration when needed.
pub fn radial_integrator<T: Real>(pair: &CoefficientPair<T>, z0: T, opts: &SolveOptions<T>) -> Result<Integrator<T>> {
    if !(z0 > T::zero()) {
        return Err(Error::InvalidParams(format!("z0 must be positive, got {z0}")));
    }
    let rhs = Rhs { v: Some(pair.v.clone()), wv: pair.wv().clone() };
    if !pair.singular_start() {
        let t0 = pair.start;
        return Integrator::new(rhs, t0, [z0, T::zero()], Start::Regular { t0, z0, dz0: T::zero() }, *opts);
    }
    let eps = T::lit(SINGULAR_EPSILON);
    let (q1, delta) = picard_start(pair, z0, eps)?;
    if !(delta < T::lit(PICARD_TOLERANCE)) {
        return Err(Error::SingularStartFailure { delta: delta.as_f64() });
    }
    Integrator::new(rhs, eps, [z0, q1], Start::Singular { epsilon: eps, z0, delta }, *opts)
}

/// First and second Picard iterates for the flux at `eps`; returns the first
/// iterate and the change of `z'(eps)` between them.
fn picard_start<T: Real>(pair: &CoefficientPair<T>, z0: T, eps: T) -> Result<(T, T)> {
    let o = QuadOptions::relative(T::lit(1e-12));
    let wv = pair.wv();
    let flux1 = |r: T| -> Result<T> { Ok(-z0 * integrate_fn(|s| wv.eval(s), T::zero(), r, &o)?.value) };
    let q1 = flux1(eps)?;
    let v_eps = pair.v.eval(eps);
    // z1(s) = z0 + int_0^s q1 / v.
    let z1 = |s: T| -> Result<T> {
        let inner = std::cell::Cell::new(None);
        let val = integrate_fn(
            |r| match flux1(r) {
                Ok(q) => q / pair.v.eval(r),
                Err(e) => {
                    inner.set(Some(e));
                    T::zero()
                }
            },
            T::zero(),
            s,
            &o,
        )?
        .value;
        match inner.take() {
            Some(e) => Err(e),
            None => Ok(z0 + val),
        }
    };
    let failure = std::cell::Cell::new(None);
    let q2 = -integrate_fn(
        |s| match z1(s) {
            Ok(z) => wv.eval(s) * z,
            Err(e) => {
                failure.set(Some(e));
                T::zero()
            }
        },
        T::zero(),
        eps,
        &o,
    )?
    .value;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let delta = ((q2 - q1) / v_eps).abs();
    if !delta.is_finite() {
        return Err(Error::SingularStartFailure { delta: delta.as_f64() });
    }
    Ok((q1, delta))
}

/// Outcome of [`extend_until_zero`].
#[derive(Clone, Debug)]
pub enum FirstZero<T> {
    Found { zero: ZeroCertificate<T>, trajectory: Trajectory<T> },
    Inconclusive { horizon: T, trajectory: Trajectory<T> },
}

impl<T: Real> FirstZero<T> {
    pub fn zero(&self) -> Option<&ZeroCertificate<T>> {
        match self {
            FirstZero::Found { zero, .. } => Some(zero),
            FirstZero::Inconclusive { .. } => None,
        }
    }
}

/// Doubles the horizon, starting from 1 (or the domain start plus 1), until a
/// first zero is certified or `horizon_cap` is reached.
pub fn extend_until_zero<T: Real>(
    pair: &CoefficientPair<T>,
    z0: T,
    horizon_cap: T,
    tol: T,
) -> Result<FirstZero<T>> {
    if !(horizon_cap >= T::one()) {
        return Err(Error::InvalidParams(format!("horizon cap must be >= 1, got {horizon_cap}")));
    }
    let opts = SolveOptions::new(tol).with_zero_cap(1);
    let mut it = radial_integrator(pair, z0, &opts)?;
    let mut horizon = (pair.start + T::one()).min(horizon_cap);
    loop {
        it.advance_to(horizon);
        let traj = it.trajectory();
        if let Some(z) = traj.first_zero() {
            let zero = *z;
            return Ok(FirstZero::Found { zero, trajectory: it.into_trajectory() });
        }
        if traj.terminated == Termination::StepUnderflow {
            return Err(Error::StepUnderflow { t: traj.t_end().as_f64() });
        }
        if horizon >= horizon_cap {
            return Ok(FirstZero::Inconclusive { horizon, trajectory: it.into_trajectory() });
        }
        horizon = (horizon * T::lit(2.0)).min(horizon_cap);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const TOL: f64 = 1e-10;

    fn curvature(k: f64) -> CurvatureProfile<f64> {
        CurvatureProfile::new(Profile::constant(k), (-k).max(0.0).sqrt(), 3)
    }

    fn euclid3(w: f64) -> CoefficientPair<f64> {
        CoefficientPair::new(Profile::power(1.0, 2.0), Profile::constant(w), 0.0)
    }

    fn euler(mu: f64) -> CoefficientPair<f64> {
        let w = Profile::new("euler", Expr::lit(mu) * Expr::t().powf(-2.0));
        CoefficientPair::new(Profile::constant(1.0), w, 0.0).with_start(1.0)
    }

    /// Zeros of the Euler solution with `z(1) = 1`, `z'(1) = 0`:
    /// `t_k = exp((atan(2w) + k pi) / w)`, `w = sqrt(mu - 1/4)`.
    fn euler_zero(mu: f64, k: u32) -> f64 {
        let w = (mu - 0.25).sqrt();
        (((2.0 * w).atan() + k as f64 * PI) / w).exp()
    }

    #[test]
    fn jacobi_sphere_zero_at_pi() {
        let tr = solve_jacobi(&curvature(1.0), 4.0, TOL).unwrap();
        assert_eq!(tr.zeros.len(), 1);
        assert!((tr.zeros[0].midpoint() - PI).abs() < 1e-6);
        assert_eq!(tr.terminated, Termination::HorizonReached);
        assert_eq!(tr.t_end(), 4.0);
    }

    #[test]
    fn jacobi_flat_and_hyperbolic_have_no_zeros() {
        let flat = solve_jacobi(&curvature(0.0), 10.0, TOL).unwrap();
        assert!(flat.zeros.is_empty());
        assert!((flat.value_at(10.0).unwrap() - 10.0).abs() < 1e-8);
        let hyp = solve_jacobi(&curvature(-1.0), 50.0, TOL).unwrap();
        assert!(hyp.zeros.is_empty());
        let rel = hyp.value_at(20.0).unwrap() / 20f64.sinh() - 1.0;
        assert!(rel.abs() < 1e-8, "{rel}");
    }

    #[test]
    fn radial_sinc_zeros() {
        let tr = solve_radial(&euclid3(1.0), 1.0, 7.0, TOL).unwrap();
        assert!(matches!(tr.start, Start::Singular { .. }));
        assert_eq!(tr.zeros.len(), 2);
        assert!((tr.zeros[0].midpoint() - PI).abs() < 1e-6);
        assert!((tr.zeros[1].midpoint() - 2.0 * PI).abs() < 1e-6);
        for t in [0.5, 2.0, 5.0] {
            assert!((tr.value_at(t).unwrap() - t.sin() / t).abs() < 1e-8);
        }
    }

    #[test]
    fn radial_constant_solution() {
        let tr = solve_radial(&euclid3(0.0), 1.0, 100.0, TOL).unwrap();
        assert!(tr.zeros.is_empty());
        assert!(tr.nodes.iter().all(|n| (n.z - 1.0).abs() < 1e-12));
        assert!(locate_zeros(&tr, 1e-8).0.is_empty());
    }

    #[test]
    fn euler_zeros_follow_closed_form() {
        let tr = solve_radial(&euler(0.3), 1.0, 1e4, TOL).unwrap();
        assert_eq!(tr.zeros.len(), 1);
        let t1 = euler_zero(0.3, 0);
        assert!((tr.zeros[0].midpoint() - t1).abs() < 1e-6 * t1);
        let long = solve_radial(&euler(0.3), 1.0, 1e14, TOL).unwrap();
        assert_eq!(long.zeros.len(), 3);
        for (k, z) in long.zeros.iter().enumerate() {
            let tk = euler_zero(0.3, k as u32);
            assert!((z.midpoint() - tk).abs() < 1e-5 * tk, "zero {k}: {} vs {tk}", z.midpoint());
        }
    }

    #[test]
    fn singular_start_failure() {
        // A huge W makes the first Picard iterate useless at eps.
        let pair = CoefficientPair::new(
            Profile::power(1.0, 2.0),
            Profile::new("strong", Expr::lit(-1e30) * Expr::t().powf(2.0)),
            0.0,
        );
        assert!(matches!(solve_radial(&pair, 1.0, 1.0, TOL), Err(Error::SingularStartFailure { .. })));
    }

    #[test]
    fn locate_zeros_examples() {
        let k = curvature(1.0);
        let tr = solve_jacobi(&k, 7.0, TOL).unwrap();
        let (zeros, suspects) = locate_zeros(&tr, 1e-8);
        assert_eq!(zeros.len(), 2);
        assert!(suspects.is_empty());
        for (z, want) in zeros.iter().zip([PI, 2.0 * PI]) {
            assert!(z.t_lo < want + 1e-8 && z.t_hi > want - 1e-8);
            assert!(z.width() <= 1e-8);
            assert!(tr.value_at(z.t_lo).unwrap() * tr.value_at(z.t_hi).unwrap() < 0.0);
        }
        let sinh = CoefficientPair::new(Profile::constant(1.0), Profile::constant(-1.0), 1.0).with_start(0.1);
        let tr = solve_radial_from(&sinh, 0.1, 0.1f64.sinh(), 0.1f64.cosh(), 50.0, &SolveOptions::new(TOL)).unwrap();
        assert!(locate_zeros(&tr, 1e-8).0.is_empty());
    }

    #[test]
    fn extend_until_zero_examples() {
        let found = extend_until_zero(&euclid3(1.0), 1.0, 10.0, TOL).unwrap();
        assert!((found.zero().unwrap().midpoint() - PI).abs() < 1e-6);
        match extend_until_zero(&euclid3(0.0), 1.0, 1e4, TOL).unwrap() {
            FirstZero::Inconclusive { horizon, trajectory } => {
                assert_eq!(horizon, 1e4);
                assert!(trajectory.nodes.iter().all(|n| n.z > 0.0));
            }
            other => panic!("expected inconclusive, got {other:?}"),
        }
        let e = extend_until_zero(&euler(0.3), 1.0, 1e4, TOL).unwrap();
        assert!((e.zero().unwrap().midpoint() - euler_zero(0.3, 0)).abs() < 1e-5);
    }

    #[test]
    fn zero_cap_stops_integration() {
        let tr = solve_jacobi_with(&curvature(1.0), 100.0, &SolveOptions::new(TOL).with_zero_cap(2)).unwrap();
        assert_eq!(tr.terminated, Termination::ZeroCapReached);
        assert_eq!(tr.zeros.len(), 2);
        assert!(tr.t_end() < 3.0 * PI);
    }

    #[test]
    fn residual_is_small() {
        let tr = solve_radial(&euclid3(1.0), 1.0, 10.0, TOL).unwrap();
        for t in [0.7, 3.3, 8.1] {
            assert!(tr.residual_at(t, 1e-4).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn refinement_moves_zeros_less_than_zero_tol() {
        let zero_tol = 1e-8;
        let coarse = solve_radial_with(&euclid3(1.0), 1.0, 20.0, &SolveOptions::new(1e-10).with_zero_tol(zero_tol)).unwrap();
        let fine = solve_radial_with(&euclid3(1.0), 1.0, 20.0, &SolveOptions::new(5e-11).with_zero_tol(zero_tol)).unwrap();
        assert_eq!(coarse.zeros.len(), fine.zeros.len());
        for (a, b) in coarse.zeros.iter().zip(&fine.zeros) {
            assert!((a.midpoint() - b.midpoint()).abs() < zero_tol);
        }
    }

    #[test]
    fn tsv_dump() {
        let tr = solve_jacobi(&curvature(1.0), 4.0, TOL).unwrap();
        let mut buf = Vec::new();
        tr.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# t\tz\tdz\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("# zero ")).count(), 1);
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), tr.nodes.len());
    }

    #[test]
    fn f32_jacobi() {
        let k = CurvatureProfile::new(Profile::<f32>::constant(1.0), 0.0, 3);
        let tr = solve_jacobi(&k, 4.0, 1e-5).unwrap();
        assert_eq!(tr.zeros.len(), 1);
        assert!((tr.zeros[0].midpoint() - std::f32::consts::PI).abs() < 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn weighted_wronskian_is_constant(a in 0.1f64..2.0, p in 0.5f64..2.0, w in 0.2f64..3.0) {
            let pair = CoefficientPair::new(
                Profile::new("v", Expr::lit(a) + Expr::t().powf(p)),
                Profile::new("w", Expr::lit(w) / (Expr::lit(1.0) + Expr::t())),
                0.0,
            );
            let o = SolveOptions::new(1e-12);
            let z1 = solve_radial_from(&pair, 1.0, 1.0, 0.0, 15.0, &o).unwrap();
            let z2 = solve_radial_from(&pair, 1.0, 0.0, 1.0, 15.0, &o).unwrap();
            let wr = |t: f64| z1.value_at(t).unwrap() * z2.flux_at(t).unwrap() - z2.value_at(t).unwrap() * z1.flux_at(t).unwrap();
            let w0 = wr(1.0);
            for t in [2.0, 5.0, 9.5, 15.0] {
                prop_assert!((wr(t) - w0).abs() <= 1e-8 * w0.abs());
            }
        }

        #[test]
        fn sturm_separation_on_euler(mu in 2.0f64..20.0, phase in 0.0f64..3.0) {
            let pair = euler(mu);
            let o = SolveOptions::new(1e-11);
            let a = solve_radial_from(&pair, 1.0, 1.0, 0.0, 1e4, &o).unwrap();
            let b = solve_radial_from(&pair, 1.0, phase.cos(), phase.sin() + 0.5, 1e4, &o).unwrap();
            prop_assert!(a.zeros.len() >= 3);
            for w in a.zeros.windows(2) {
                let (lo, hi) = (w[0].midpoint(), w[1].midpoint());
                let inside = b.zeros.iter().filter(|z| z.midpoint() > lo && z.midpoint() < hi).count();
                prop_assert_eq!(inside, 1);
            }
        }
    }
}
