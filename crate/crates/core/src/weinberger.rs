//! Weinberger's profile recursion for the cooperative system on a
//! truncated line, used to bracket the spreading speeds without
//! linearizing.
//!
//! One step maps a non-increasing profile `a` to
//! `max(phi / n, T_{-c omega} Q a)` where `Q` is the nonlinear period map
//! and `T` is a spatial shift. Iterating from zero gives a nondecreasing
//! sequence whose limit at the right end decides whether `c` is below the
//! speed.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::orbits::PeriodicOrbit;
use crate::pde::{Form, LineModel, LineState};
use crate::system::SystemSpec;

/// Two-component profile on `[-A, A]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub half_width: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl Profile {
    pub fn zeros(half_width: f64, n: usize) -> Self {
        Self { half_width, first: vec![0.0; n + 1], second: vec![0.0; n + 1] }
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    /// Linear interpolation of both components, constant past the ends.
    pub fn value_at(&self, x: f64) -> [f64; 2] {
        [interp(&self.first, self.half_width, x), interp(&self.second, self.half_width, x)]
    }

    pub fn left_plateau(&self) -> [f64; 2] {
        [self.first[0], self.second[0]]
    }

    pub fn right_value(&self) -> [f64; 2] {
        [self.first[self.len() - 1], self.second[self.len() - 1]]
    }

    /// Largest amount by which either component increases to the right.
    pub fn monotonicity_defect(&self) -> f64 {
        [&self.first, &self.second]
            .iter()
            .flat_map(|v| v.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }

    /// CSV with columns `x, v1, v2, m`.
    pub fn write_csv<W: Write>(&self, mut w: W, iteration: usize) -> std::io::Result<()> {
        writeln!(w, "x,v1,v2,m")?;
        for i in 0..self.len() {
            writeln!(w, "{},{},{},{iteration}", self.x(i), self.first[i], self.second[i])?;
        }
        Ok(())
    }
}

fn interp(v: &[f64], a: f64, x: f64) -> f64 {
    let n = v.len() - 1;
    let s = (x + a) / (2.0 * a) * n as f64;
    if s <= 0.0 {
        return v[0];
    }
    if s >= n as f64 {
        return v[n];
    }
    let k = s.floor() as usize;
    let w = s - k as f64;
    (1.0 - w) * v[k] + w * v[(k + 1).min(n)]
}

/// The initial function: a smooth non-increasing ramp from `beta/2` at
/// `x <= -A/2` down to exactly zero for `x >= 0`, on `n + 1` nodes.
pub fn init_profile(beta: [f64; 2], half_width: f64, n: usize) -> Profile {
    let mut p = Profile::zeros(half_width, n);
    for i in 0..=n {
        let x = p.x(i);
        let s = (-x / (0.5 * half_width)).clamp(0.0, 1.0);
        let ramp = if x >= 0.0 { 0.0 } else { 0.5 * (1.0 - (std::f64::consts::PI * s).cos()) };
        p.first[i] = 0.5 * beta[0] * ramp;
        p.second[i] = 0.5 * beta[1] * ramp;
    }
    p
}

/// Closest non-increasing sequence in least squares (pool adjacent violators).
pub fn pava_nonincreasing(v: &mut [f64]) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v.iter() {
        let mut sum = x;
        let mut count = 1;
        while let Some(&(s, c)) = blocks.last() {
            if s / (c as f64) < sum / count as f64 {
                sum += s;
                count += c;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push((sum, count));
    }
    let mut i = 0;
    for (s, c) in blocks {
        let m = s / c as f64;
        v[i..i + c].iter_mut().for_each(|x| *x = m);
        i += c;
    }
}

/// Replaces everything right of node `k` by the exponential continuation
/// of the slope at `k`, capped at flat. Returns the per-node ratio.
fn continue_tail(v: &mut [f64], k: usize) -> f64 {
    let rho = if k == 0 || v[k - 1] <= f64::MIN_POSITIVE { 0.0 } else { (v[k] / v[k - 1]).clamp(0.0, 1.0) };
    for i in k + 1..v.len() {
        v[i] = v[i - 1] * rho;
    }
    rho
}

/// `v[i] <- v(x_i + shift)` by linear interpolation. The plateau continues
/// past the left end; past the right end the tail keeps shrinking by `rho`
/// per node.
fn shift_left(v: &[f64], shift_nodes: f64, rho: f64, out: &mut [f64]) {
    let n = v.len() - 1;
    let p = shift_nodes.floor();
    let w = shift_nodes - p;
    let p = p as i64;
    let at = |i: i64| {
        if i > n as i64 {
            v[n] * rho.powi((i - n as i64) as i32)
        } else {
            v[i.max(0) as usize]
        }
    };
    for (i, o) in out.iter_mut().enumerate() {
        let k = i as i64 + p;
        *o = (1.0 - w) * at(k) + w * at(k + 1);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionOptions {
    /// Sup change between iterates that counts as converged.
    pub tol: f64,
    pub cap: usize,
    pub bisection_steps: usize,
    pub exec: Exec,
}

impl Default for RecursionOptions {
    fn default() -> Self {
        Self { tol: 1e-6, cap: 300, bisection_steps: 8, exec: Exec::default() }
    }
}

/// The recursion bound to a system, its semi-trivial states and a grid.
#[derive(Debug, Clone)]
pub struct Recursion {
    line: LineModel,
    omega: f64,
    ell: f64,
    half_width: f64,
    /// Plateau estimate per cooperative component.
    beta: [f64; 2],
    /// `beta(0, x)` at every node.
    target: [Vec<f64>; 2],
    floor: Profile,
    /// Distance from the right end at which the tail is continued, clear
    /// of the zero-flux boundary layer.
    tail_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Limit {
    pub profile: Profile,
    pub iterations: usize,
    pub last_change: f64,
    /// The cap stopped the iteration before the change fell below `tol`.
    pub cap_reached: bool,
    /// Largest decrease between consecutive iterates at any node.
    pub monotone_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Zero,
    Intermediate,
    Beta,
}

impl Class {
    fn label(self) -> &'static str {
        match self {
            Class::Zero => "zero",
            Class::Intermediate => "intermediate",
            Class::Beta => "beta",
        }
    }
}

/// Fraction of the target counting as the full state.
pub const BETA_FRACTION: f64 = 0.95;
/// Fraction of the target below which the state counts as vacant.
pub const ZERO_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classified {
    pub c: f64,
    pub class: Class,
    /// First component over its target at `A - 2L`.
    pub right_end_value: f64,
    /// First component over its target at `-A`.
    pub left_plateau: f64,
    pub iterations: usize,
    pub cap_reached: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedBracket {
    pub c_lo: f64,
    pub c_hi: f64,
    /// The transition was not seen inside the searched range.
    pub open_ended: bool,
}

impl SpeedBracket {
    pub fn width(&self) -> f64 {
        self.c_hi - self.c_lo
    }

    pub fn contains(&self, c: f64) -> bool {
        self.c_lo <= c && c <= self.c_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Brackets {
    pub cstar: SpeedBracket,
    pub cbar: SpeedBracket,
    /// Every classification made, sorted by `c`.
    pub trace: Vec<Classified>,
}

impl Brackets {
    /// CSV with columns `c, classification, right_end_value, left_plateau`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "c,classification,right_end_value,left_plateau")?;
        for r in &self.trace {
            writeln!(w, "{},{},{},{}", r.c, r.class.label(), r.right_end_value, r.left_plateau)?;
        }
        Ok(())
    }
}

impl Recursion {
    /// `[-A, A]` split into `n` intervals. When `a21` vanishes the second
    /// species ignores the first, so its cooperative plateau is zero.
    pub fn new(sys: &SystemSpec, u1: &PeriodicOrbit, u2: &PeriodicOrbit, half_width: f64, n: usize) -> Result<Self> {
        let ell = sys.ell();
        if half_width < 10.0 * ell {
            return Err(Error::Invalid(format!("half width {half_width} is below 10 L = {}", 10.0 * ell)));
        }
        if n < 200 {
            return Err(Error::Invalid(format!("recursion grid needs at least 200 intervals, got {n}")));
        }
        if u1.extinct {
            return Err(Error::Invalid("u1* is extinct, the recursion has no upper state".into()));
        }
        let line = LineModel::new(sys, -half_width, half_width, n)?.with_u2_star(u2.as_field())?;
        let t1 = line.sample(&u1.as_field(), 0);
        let t2 = if sys.a21_vanishes() { vec![0.0; t1.len()] } else { line.sample(&u2.as_field(), 0) };
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let beta = [min(&t1), min(&t2)];
        let d_max = sys.d1.max().max(sys.d2.max());
        let tail_offset = ell.max(4.0 * (d_max * sys.omega()).sqrt());
        if tail_offset >= half_width {
            return Err(Error::Invalid(format!("half width {half_width} leaves no room for the tail continuation")));
        }
        Ok(Self {
            tail_offset,
            omega: sys.omega(),
            ell,
            half_width,
            beta,
            floor: init_profile(beta, half_width, n),
            target: [t1, t2],
            line,
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.line = self.line.with_exec(exec);
        self
    }

    pub fn beta(&self) -> [f64; 2] {
        self.beta
    }

    pub fn floor(&self) -> &Profile {
        &self.floor
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Where the right-end limit is read off: `A - 2L`.
    pub fn probe(&self) -> f64 {
        self.half_width - 2.0 * self.ell
    }

    /// `R[a] = max(phi / n, Q a shifted by c omega)`.
    pub fn apply(&self, p: &Profile, c: f64, n_index: usize) -> Result<Profile> {
        let shift = c * self.omega;
        if shift.abs() > 0.25 * self.half_width {
            return Err(Error::ShiftOutOfRange { shift, half_width: self.half_width });
        }
        if p.len() != self.line.len() {
            return Err(Error::Invalid("profile does not match the recursion grid".into()));
        }
        let mut state = LineState {
            x_lo: -self.half_width,
            x_hi: self.half_width,
            t: 0.0,
            form: Form::Cooperative,
            first: p.first.clone(),
            second: p.second.clone(),
        };
        self.line.evolve(&mut state, self.omega)?;
        let inv_n = 1.0 / n_index.max(1) as f64;
        let mut out = Profile::zeros(self.half_width, p.len() - 1);
        let nodes = shift / p.dx();
        let edge = p.len() - 1 - (self.tail_offset / p.dx()).round() as usize;
        for (src, dst, floor) in [
            (&mut state.first, &mut out.first, &self.floor.first),
            (&mut state.second, &mut out.second, &self.floor.second),
        ] {
            let rho = continue_tail(src, edge);
            shift_left(src, nodes, rho, dst);
            pava_nonincreasing(dst);
            for (v, f) in dst.iter_mut().zip(floor) {
                *v = v.max(inv_n * f).max(0.0);
            }
        }
        Ok(out)
    }

    /// Iterates from zero until the sup change drops below `tol`, the cap
    /// is hit or `stop` accepts the current iterate.
    fn iterate(
        &self,
        c: f64,
        n_index: usize,
        opts: &RecursionOptions,
        stop: impl Fn(&Profile) -> bool,
    ) -> Result<Limit> {
        let mut a = Profile::zeros(self.half_width, self.line.len() - 1);
        let mut defect = 0.0f64;
        let mut change = f64::INFINITY;
        for m in 1..=opts.cap {
            let next = self.apply(&a, c, n_index)?;
            change = 0.0;
            for (new, old) in [(&next.first, &a.first), (&next.second, &a.second)] {
                for (x, y) in new.iter().zip(old) {
                    change = change.max((x - y).abs());
                    defect = defect.max(y - x);
                }
            }
            a = next;
            if change < opts.tol || stop(&a) {
                return Ok(Limit { profile: a, iterations: m, last_change: change, cap_reached: false, monotone_defect: defect });
            }
        }
        Ok(Limit { profile: a, iterations: opts.cap, last_change: change, cap_reached: true, monotone_defect: defect })
    }

    /// The limit profile `a(c, 1/n; .)`.
    pub fn limit(&self, c: f64, n_index: usize, opts: &RecursionOptions) -> Result<Limit> {
        self.iterate(c, n_index, opts, |_| false)
    }

    /// Component ratios against `beta(0, x)` at `x`; inactive components
    /// are skipped.
    fn ratios(&self, p: &Profile, x: f64) -> Vec<f64> {
        let v = p.value_at(x);
        (0..2)
            .filter(|&i| self.beta[i] > 0.0)
            .map(|i| v[i] / interp(&self.target[i], self.half_width, x))
            .collect()
    }

    fn class_of(&self, p: &Profile) -> Class {
        let r = self.ratios(p, self.probe());
        if r.iter().all(|&v| v >= BETA_FRACTION) {
            Class::Beta
        } else if r.iter().all(|&v| v < ZERO_FRACTION) {
            Class::Zero
        } else {
            Class::Intermediate
        }
    }

    /// Classifies `a(c, 1; A - 2L)`. Iterates are nondecreasing, so a
    /// "beta" reading is final as soon as it appears.
    pub fn classify(&self, c: f64, opts: &RecursionOptions) -> Result<Classified> {
        let lim = self.iterate(c, 1, opts, |p| self.class_of(p) == Class::Beta)?;
        let p = &lim.profile;
        Ok(Classified {
            c,
            class: self.class_of(p),
            right_end_value: p.value_at(self.probe())[0] / interp(&self.target[0], self.half_width, self.probe()),
            left_plateau: p.first[0] / self.target[0][0],
            iterations: lim.iterations,
            cap_reached: lim.cap_reached,
        })
    }

    /// Bisects `[c_lo, c_hi]` for the beta/not-beta transition (`c*`) and
    /// the positive/zero transition (`c bar`) at the same time.
    pub fn bracket_speeds(&self, c_lo: f64, c_hi: f64, opts: &RecursionOptions) -> Result<Brackets> {
        if !(c_hi > c_lo) {
            return Err(Error::Invalid(format!("empty speed range [{c_lo}, {c_hi}]")));
        }
        let mut seen: BTreeMap<u64, Classified> = BTreeMap::new();
        let key = |c: f64| c.to_bits();
        let (lo, hi) = opts.exec.join(|| self.classify(c_lo, opts), || self.classify(c_hi, opts));
        let (lo, hi) = (lo?, hi?);
        let (lo_class, hi_class) = (lo.class, hi.class);
        seen.insert(key(c_lo), lo);
        seen.insert(key(c_hi), hi);

        let (mut s_lo, mut s_hi) = (c_lo, c_hi);
        let (mut b_lo, mut b_hi) = (c_lo, c_hi);
        let star_open = lo_class != Class::Beta || hi_class == Class::Beta;
        let bar_open = lo_class == Class::Zero || hi_class != Class::Zero;

        for _ in 0..opts.bisection_steps {
            let ms = 0.5 * (s_lo + s_hi);
            let mb = 0.5 * (b_lo + b_hi);
            let fresh: Vec<f64> = if ms == mb { vec![ms] } else { vec![ms, mb] };
            let results: Vec<Result<Classified>> = if fresh.len() == 2 {
                let (a, b) = opts.exec.join(|| self.classify(fresh[0], opts), || self.classify(fresh[1], opts));
                vec![a, b]
            } else {
                vec![self.classify(fresh[0], opts)]
            };
            for r in results {
                let r = r?;
                let c = r.c;
                if !star_open && c > s_lo && c < s_hi {
                    if r.class == Class::Beta {
                        s_lo = c;
                    } else {
                        s_hi = c;
                    }
                }
                if !bar_open && c > b_lo && c < b_hi {
                    if r.class == Class::Zero {
                        b_hi = c;
                    } else {
                        b_lo = c;
                    }
                }
                seen.insert(key(c), r);
            }
        }

        let mut trace: Vec<Classified> = seen.into_values().collect();
        trace.sort_by(|a, b| a.c.total_cmp(&b.c));
        if let Some(w) = trace.windows(2).find(|w| w[1].class > w[0].class) {
            let msg = trace
                .iter()
                .map(|r| format!("{}:{}", r.c, r.class.label()))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Error::InconsistentClassification(format!(
                "class rises between c = {} and c = {} [{msg}]",
                w[0].c, w[1].c
            )));
        }
        Ok(Brackets {
            cstar: SpeedBracket { c_lo: s_lo, c_hi: s_hi, open_ended: star_open },
            cbar: SpeedBracket { c_lo: b_lo, c_hi: b_hi, open_ended: bar_open },
            trace,
        })
    }
}
