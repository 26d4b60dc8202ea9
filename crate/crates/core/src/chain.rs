//! Population-level chain on the complete graph.
//!
//! On `K_{n+1}` the configuration is summarised by the red, blue and white
//! counts `(r, b, w)`. From a state with `r >= 1` the red population grows at
//! total rate `lambda * r * w`, shrinks by chase at rate `r * b` and by
//! conversion at rate `alpha * r`. The common factor `r` cancels from the
//! embedded jump chain.

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{exponential, uniform_open01};
use crate::scalar::{Field, Real};

/// Largest supported white-site budget. `lambda * r * w` must stay exact
/// enough in double precision.
pub const MAX_N: u64 = 100_000_000;

/// Initial coloring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// One red root, every other vertex white, on `K_{n+1}`.
    Standard,
    /// One red, one blue and `n` white vertices on `K_{n+2}`.
    Kortchemski,
}

impl InitMode {
    pub fn initial_blue(self) -> u64 {
        match self {
            InitMode::Standard => 0,
            InitMode::Kortchemski => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Standard => "standard",
            InitMode::Kortchemski => "kortchemski",
        }
    }
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(InitMode::Standard),
            "kortchemski" => Ok(InitMode::Kortchemski),
            other => Err(Error::InvalidInput(format!("unknown init mode `{other}`"))),
        }
    }
}

/// Validated model parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Params<T> {
    n: u64,
    lambda: T,
    alpha: T,
    init_mode: InitMode,
}

fn is_finite_rate<T: Field>(x: &T) -> bool {
    match T::from_f64(f64::MAX) {
        Some(max) => *x < max,
        None => true,
    }
}

impl<T: Field> Params<T> {
    pub fn new(n: u64, lambda: T, alpha: T, init_mode: InitMode) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if n > MAX_N {
            return Err(Error::InvalidParams(format!("n = {n} exceeds the maximum {MAX_N}")));
        }
        if !(lambda > T::zero()) || !is_finite_rate(&lambda) {
            return Err(Error::InvalidParams(format!(
                "lambda must be positive and finite, got {lambda:?}"
            )));
        }
        if !(alpha >= T::zero()) || !is_finite_rate(&alpha) {
            return Err(Error::InvalidParams(format!(
                "alpha must be non-negative and finite, got {alpha:?}"
            )));
        }
        if init_mode == InitMode::Standard && alpha == T::zero() {
            return Err(Error::InvalidParams(
                "alpha = 0 with the standard initial condition never fixates".into(),
            ));
        }
        Ok(Self { n, lambda, alpha, init_mode })
    }

    /// Standard initial condition on `K_{n+1}`.
    pub fn standard(n: u64, lambda: T, alpha: T) -> Result<Self> {
        Self::new(n, lambda, alpha, InitMode::Standard)
    }

    /// One red, one blue and `n` white vertices on `K_{n+2}`.
    pub fn kortchemski(n: u64, lambda: T, alpha: T) -> Result<Self> {
        Self::new(n, lambda, alpha, InitMode::Kortchemski)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn lambda(&self) -> &T {
        &self.lambda
    }

    pub fn alpha(&self) -> &T {
        &self.alpha
    }

    pub fn init_mode(&self) -> InitMode {
        self.init_mode
    }

    /// Number of vertices of the complete graph: `n + 1` or `n + 2`.
    pub fn total_vertices(&self) -> u64 {
        self.n + 1 + self.init_mode.initial_blue()
    }
}

/// Red, blue and white counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PopulationState {
    pub r: u64,
    pub b: u64,
    pub w: u64,
}

impl PopulationState {
    pub fn new(r: u64, b: u64, w: u64) -> Self {
        Self { r, b, w }
    }

    pub fn total(&self) -> u64 {
        self.r + self.b + self.w
    }

    /// `r + 2b`, which increases by exactly one at every jump.
    pub fn layer(&self) -> u64 {
        self.r + 2 * self.b
    }

    pub fn is_fixated(&self) -> bool {
        self.r == 0
    }

    pub fn apply(&self, event: EventKind) -> Self {
        match event {
            EventKind::Grow => Self::new(self.r + 1, self.b, self.w - 1),
            EventKind::Chase | EventKind::Convert => Self::new(self.r - 1, self.b + 1, self.w),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// A white vertex turns red.
    Grow,
    /// A red vertex turns blue through a blue neighbour.
    Chase,
    /// A red vertex turns blue spontaneously.
    Convert,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Grow => "grow",
            EventKind::Chase => "chase",
            EventKind::Convert => "convert",
        }
    }

    pub fn is_red_decrease(self) -> bool {
        !matches!(self, EventKind::Grow)
    }
}

impl std::str::FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grow" => Ok(EventKind::Grow),
            "chase" => Ok(EventKind::Chase),
            "convert" => Ok(EventKind::Convert),
            other => Err(Error::InvalidInput(format!("unknown event `{other}`"))),
        }
    }
}

/// Statistics read off at fixation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixationResult<T> {
    /// White vertices that never turned red.
    pub white_survivors: u64,
    pub blue_total: u64,
    /// Blue vertices produced by conversion rather than chase.
    pub conversions: u64,
    /// Time of the last jump, measured on the clock of the engine that
    /// produced the result.
    pub fixation_time: T,
    pub jump_count: u64,
}

/// One recorded jump: the state immediately after it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Jump<T> {
    pub time: T,
    pub state: PopulationState,
    pub event: EventKind,
}

/// A full realization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory<T> {
    pub initial: PopulationState,
    pub jumps: Vec<Jump<T>>,
}

impl<T: Real> Trajectory<T> {
    /// Checks conservation, legality of every transition, increasing times
    /// and absorption at the end.
    pub fn validate(&self) -> Result<()> {
        let total = self.initial.total();
        let mut prev = self.initial;
        let mut prev_time = T::zero();
        for (i, jump) in self.jumps.iter().enumerate() {
            let bad = |msg: &str| Error::InvalidInput(format!("jump {}: {msg}", i + 1));
            if prev.r == 0 {
                return Err(bad("transition out of a fixated state"));
            }
            if jump.state.total() != total {
                return Err(bad("vertex count not conserved"));
            }
            let legal = match jump.event {
                EventKind::Grow => prev.w > 0 && jump.state == prev.apply(EventKind::Grow),
                EventKind::Chase => prev.b > 0 && jump.state == prev.apply(EventKind::Chase),
                EventKind::Convert => jump.state == prev.apply(EventKind::Convert),
            };
            if !legal {
                return Err(bad("illegal transition"));
            }
            if !(jump.time > prev_time) {
                return Err(bad("times not strictly increasing"));
            }
            prev = jump.state;
            prev_time = jump.time;
        }
        if prev.r != 0 {
            return Err(Error::InvalidInput("trajectory does not end at fixation".into()));
        }
        Ok(())
    }

    pub fn result(&self) -> FixationResult<T> {
        let last = self.jumps.last().map(|j| j.state).unwrap_or(self.initial);
        FixationResult {
            white_survivors: last.w,
            blue_total: last.b,
            conversions: self.jumps.iter().filter(|j| j.event == EventKind::Convert).count() as u64,
            fixation_time: self.jumps.last().map(|j| j.time).unwrap_or_else(T::zero),
            jump_count: self.jumps.len() as u64,
        }
    }
}

/// Embedded-chain transition probabilities with the factor `r` cancelled.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpProbabilities<T> {
    pub grow: T,
    pub chase: T,
    pub convert: T,
}

pub fn initial_state<T: Field>(params: &Params<T>) -> PopulationState {
    PopulationState::new(1, params.init_mode.initial_blue(), params.n)
}

fn reduced_weights<T: Field>(state: &PopulationState, params: &Params<T>) -> Result<(T, T, T)> {
    if state.r == 0 {
        return Err(Error::NoTransition);
    }
    let grow = params.lambda.clone() * T::from_count(state.w);
    let chase = T::from_count(state.b);
    let convert = params.alpha.clone();
    if state.w == 0 && state.b == 0 && convert == T::zero() {
        return Err(Error::InvalidInput(
            "red vertices with no white or blue vertices and alpha = 0 cannot move".into(),
        ));
    }
    Ok((grow, chase, convert))
}

pub fn jump_probabilities<T: Field>(
    state: &PopulationState,
    params: &Params<T>,
) -> Result<JumpProbabilities<T>> {
    let (grow, chase, convert) = reduced_weights(state, params)?;
    let denom = grow.clone() + chase.clone() + convert.clone();
    Ok(JumpProbabilities {
        grow: grow / denom.clone(),
        chase: chase / denom.clone(),
        convert: convert / denom,
    })
}

/// `r (lambda w + b + alpha)`.
pub fn total_rate<T: Field>(state: &PopulationState, params: &Params<T>) -> Result<T> {
    if state.r == 0 {
        return Err(Error::NoTransition);
    }
    let (grow, chase, convert) = reduced_weights(state, params)?;
    Ok(T::from_count(state.r) * (grow + chase + convert))
}

/// One jump of the chain.
///
/// Draw order is fixed: one uniform decides growth against red decrease,
/// a second uniform (only on red decrease) splits chase from conversion with
/// probability `alpha / (b + alpha)` for conversion, and a third gives the
/// exponential holding time.
pub fn step<T: Real, R: RngCore + ?Sized>(
    state: &PopulationState,
    params: &Params<T>,
    rng: &mut R,
) -> Result<(PopulationState, EventKind, T)> {
    let (grow, chase, convert) = reduced_weights(state, params)?;
    let decrease = chase + convert;
    let u = T::lit(uniform_open01(rng));
    let event = if u * (grow + decrease) < grow {
        EventKind::Grow
    } else if T::lit(uniform_open01(rng)) * decrease < convert {
        EventKind::Convert
    } else {
        EventKind::Chase
    };
    let rate = T::from_count(state.r) * (grow + decrease);
    let holding = exponential(rng, rate);
    Ok((state.apply(event), event, holding))
}

fn simulate<T, R, F>(params: &Params<T>, rng: &mut R, mut on_jump: F) -> Result<FixationResult<T>>
where
    T: Real,
    R: RngCore + ?Sized,
    F: FnMut(T, PopulationState, EventKind),
{
    let mut state = initial_state(params);
    let total = state.total();
    let mut time = T::zero();
    let mut conversions = 0;
    let mut jumps = 0;
    while !state.is_fixated() {
        let (next, event, holding) = step(&state, params, rng)?;
        debug_assert_eq!(next.layer(), state.layer() + 1);
        debug_assert_eq!(next.total(), total);
        time = time + holding;
        jumps += 1;
        if event == EventKind::Convert {
            conversions += 1;
        }
        state = next;
        on_jump(time, state, event);
    }
    // Each vertex turns red at most once and blue at most once.
    debug_assert!(jumps <= 2 * total);
    Ok(FixationResult {
        white_survivors: state.w,
        blue_total: state.b,
        conversions,
        fixation_time: time,
        jump_count: jumps,
    })
}

/// Runs the chain until no red vertex remains.
pub fn run_to_fixation<T: Real, R: RngCore + ?Sized>(
    params: &Params<T>,
    rng: &mut R,
) -> Result<FixationResult<T>> {
    simulate(params, rng, |_, _, _| {})
}

/// Like [`run_to_fixation`] but keeps every jump. Consumes the generator
/// identically, so the same seed yields the same realization.
pub fn record_trajectory<T: Real, R: RngCore + ?Sized>(
    params: &Params<T>,
    rng: &mut R,
) -> Result<Trajectory<T>> {
    let mut jumps = Vec::new();
    simulate(params, rng, |time, state, event| jumps.push(Jump { time, state, event }))?;
    Ok(Trajectory { initial: initial_state(params), jumps })
}
