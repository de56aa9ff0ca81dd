//! Stochastic exclusion process with two crossing species.
//!
//! Red individuals walk towards `+x` (index `i`), blue ones towards `+y`
//! (index `j`). Each may side-step: "against" is the lateral step opposite
//! to the other group's walking direction (red down, blue left), "with" is
//! the lateral step along it (red up, blue right). The lattice is periodic.
//!
//! The random generator is ChaCha8 seeded from a `u64`; all draws happen in
//! a fixed order so equal seeds give identical trajectories.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagonal_anisotropy, segregation_index, DiagnosticsSample, DiagnosticsSeries};
use crate::error::{Error, Result};
use crate::field::Field2;
use crate::params::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Empty,
    Red,
    Blue,
}

impl Cell {
    pub fn symbol(self) -> char {
        match self {
            Cell::Empty => '.',
            Cell::Red => 'R',
            Cell::Blue => 'B',
        }
    }

    fn swapped(self) -> Self {
        match self {
            Cell::Empty => Cell::Empty,
            Cell::Red => Cell::Blue,
            Cell::Blue => Cell::Red,
        }
    }
}

/// Update order within one time step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheduler {
    /// Everyone decides on the old configuration; collisions on a target
    /// cell are resolved by a uniformly chosen winner, the others stay.
    Synchronous,
    /// Individuals move one at a time in a fresh random order, each seeing
    /// the moves already made.
    RandomSequential,
}

impl std::str::FromStr for Scheduler {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "synchronous" => Ok(Scheduler::Synchronous),
            "random_sequential" => Ok(Scheduler::RandomSequential),
            other => Err(format!(
                "unknown scheduler `{other}` (synchronous|random_sequential)"
            )),
        }
    }
}

impl std::fmt::Display for Scheduler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheduler::Synchronous => "synchronous",
            Scheduler::RandomSequential => "random_sequential",
        })
    }
}

/// Jump probabilities of one individual. For red: forward = right,
/// against = down, with = up. For blue: forward = up, against = left,
/// with = right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveProbs {
    pub forward: f64,
    pub against: f64,
    pub with: f64,
    pub stay: f64,
}

impl MoveProbs {
    pub fn total(&self) -> f64 {
        self.forward + self.against + self.with + self.stay
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState {
    n: usize,
    cells: Vec<Cell>,
    pub step_count: u64,
    rng: ChaCha8Rng,
}

impl LatticeState {
    /// Lattice from explicit cells in `j * n + i` order.
    pub fn from_cells(n: usize, cells: Vec<Cell>, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", format!("need at least 2 cells, got {n}")));
        }
        if cells.len() != n * n {
            return Err(Error::invalid(
                "cells",
                format!("expected {} cells, got {}", n * n, cells.len()),
            ));
        }
        Ok(Self {
            n,
            cells,
            step_count: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn empty(n: usize, seed: u64) -> Result<Self> {
        Self::from_cells(n, vec![Cell::Empty; n * n], seed)
    }

    /// Uniform placement of `red + blue` individuals on distinct cells.
    pub fn random(n: usize, red: usize, blue: usize, seed: u64) -> Result<Self> {
        if red + blue > n * n {
            return Err(Error::invalid(
                "population",
                format!("{} individuals do not fit on {} cells", red + blue, n * n),
            ));
        }
        let mut state = Self::empty(n, seed)?;
        let picks = index::sample(&mut state.rng, n * n, red + blue);
        for (k, idx) in picks.into_iter().enumerate() {
            state.cells[idx] = if k < red { Cell::Red } else { Cell::Blue };
        }
        Ok(state)
    }

    /// Random placement at total density `rho_total` with a fraction
    /// `red_fraction` of red individuals.
    pub fn random_with_density(
        n: usize,
        rho_total: f64,
        red_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho_total) {
            return Err(Error::invalid("rho_total", format!("must lie in [0, 1], got {rho_total}")));
        }
        if !(0.0..=1.0).contains(&red_fraction) {
            return Err(Error::invalid(
                "red_fraction",
                format!("must lie in [0, 1], got {red_fraction}"),
            ));
        }
        let total = (rho_total * (n * n) as f64).round() as usize;
        let red = (red_fraction * total as f64).round() as usize;
        Self::random(n, red, total - red, seed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cell {
        self.cells[j * self.n + i]
    }

    pub fn set(&mut self, i: usize, j: usize, cell: Cell) {
        self.cells[j * self.n + i] = cell;
    }

    #[inline]
    fn wrap(&self, k: isize) -> usize {
        k.rem_euclid(self.n as isize) as usize
    }

    pub fn count(&self, species: Cell) -> usize {
        self.cells.iter().filter(|&&c| c == species).count()
    }

    /// Transposes the lattice and exchanges the species. The generator
    /// state is kept.
    pub fn swap_transposed(&self) -> Self {
        let n = self.n;
        let mut cells = vec![Cell::Empty; n * n];
        for j in 0..n {
            for i in 0..n {
                cells[i * n + j] = self.get(i, j).swapped();
            }
        }
        Self {
            n,
            cells,
            step_count: self.step_count,
            rng: self.rng.clone(),
        }
    }

    /// Occupancy indicator fields `(red, blue)`.
    pub fn occupancy_fields(&self) -> (Field2, Field2) {
        let red = Field2::from_fn(self.n, |i, j| (self.get(i, j) == Cell::Red) as u8 as f64);
        let blue = Field2::from_fn(self.n, |i, j| (self.get(i, j) == Cell::Blue) as u8 as f64);
        (red, blue)
    }

    /// One line per row `j = 0, 1, ...`, one character per cell.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.n * (self.n + 1));
        for j in 0..self.n {
            for i in 0..self.n {
                out.push(self.get(i, j).symbol());
            }
            out.push('\n');
        }
        out
    }

    /// `i,j,species` rows for every occupied cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,species\n");
        for j in 0..self.n {
            for i in 0..self.n {
                let c = self.get(i, j);
                if c != Cell::Empty {
                    out.push_str(&format!("{i},{j},{}\n", c.symbol()));
                }
            }
        }
        out
    }

    #[inline]
    fn occupied(&self, i: usize, j: usize) -> f64 {
        (self.get(i, j) != Cell::Empty) as u8 as f64
    }

    /// Target cells `[forward, against, with]` of an individual at `(i, j)`.
    fn targets(&self, species: Cell, i: usize, j: usize) -> [(usize, usize); 3] {
        let (ii, jj) = (i as isize, j as isize);
        match species {
            Cell::Red => [
                (self.wrap(ii + 1), j),
                (i, self.wrap(jj - 1)),
                (i, self.wrap(jj + 1)),
            ],
            Cell::Blue => [
                (i, self.wrap(jj + 1)),
                (self.wrap(ii - 1), j),
                (self.wrap(ii + 1), j),
            ],
            Cell::Empty => unreachable!("empty cells do not move"),
        }
    }

    fn move_probs(&self, species: Cell, i: usize, j: usize, p: &ModelParams) -> MoveProbs {
        let [fwd, against, with] = self.targets(species, i, j);
        let other = match species {
            Cell::Red => Cell::Blue,
            _ => Cell::Red,
        };
        // the other species blocking the forward cell triggers side-steps
        let blocked = (self.get(fwd.0, fwd.1) == other) as u8 as f64;
        let forward = p.alpha * (1.0 - self.occupied(fwd.0, fwd.1));
        let against = p.alpha * (1.0 - self.occupied(against.0, against.1)) * (p.gamma0 + p.gamma1 * blocked);
        let with = p.alpha * (1.0 - self.occupied(with.0, with.1)) * (p.gamma0 + p.gamma2 * blocked);
        let stay = (1.0 - forward - against - with).max(0.0);
        MoveProbs {
            forward,
            against,
            with,
            stay,
        }
    }

    /// Probabilities `(right, down, up, stay)` packed as
    /// `(forward, against, with, stay)` for the red individual at `(i, j)`.
    pub fn transition_probs_red(&self, i: usize, j: usize, p: &ModelParams) -> Result<MoveProbs> {
        if self.get(i, j) != Cell::Red {
            return Err(Error::WrongSpecies {
                i,
                j,
                expected: "red",
            });
        }
        Ok(self.move_probs(Cell::Red, i, j, p))
    }

    /// Probabilities `(up, left, right, stay)` packed as
    /// `(forward, against, with, stay)` for the blue individual at `(i, j)`.
    pub fn transition_probs_blue(&self, i: usize, j: usize, p: &ModelParams) -> Result<MoveProbs> {
        if self.get(i, j) != Cell::Blue {
            return Err(Error::WrongSpecies {
                i,
                j,
                expected: "blue",
            });
        }
        Ok(self.move_probs(Cell::Blue, i, j, p))
    }

    fn choose_target(
        &mut self,
        species: Cell,
        i: usize,
        j: usize,
        p: &ModelParams,
    ) -> Option<(usize, usize)> {
        let probs = self.move_probs(species, i, j, p);
        let u: f64 = self.rng.gen();
        let [fwd, against, with] = self.targets(species, i, j);
        if u < probs.forward {
            Some(fwd)
        } else if u < probs.forward + probs.against {
            Some(against)
        } else if u < probs.forward + probs.against + probs.with {
            Some(with)
        } else {
            None
        }
    }

    fn individuals(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n * n)
            .filter(|&k| self.cells[k] != Cell::Empty)
            .map(|k| (k % n, k / n))
            .collect()
    }

    /// Advances the lattice by one time step.
    pub fn step(&mut self, p: &ModelParams, scheduler: Scheduler) -> Result<()> {
        if !p.jump_probabilities_bounded() {
            return Err(Error::invalid(
                "alpha",
                "alpha * max(1 + 2 gamma0, 2 gamma0 + gamma1 + gamma2) must not exceed 1",
            ));
        }
        match scheduler {
            Scheduler::Synchronous => self.step_synchronous(p),
            Scheduler::RandomSequential => self.step_random_sequential(p),
        }
        self.step_count += 1;
        Ok(())
    }

    fn step_synchronous(&mut self, p: &ModelParams) {
        let n = self.n;
        let mut claims: Vec<(usize, usize)> = Vec::new();
        for (i, j) in self.individuals() {
            let species = self.get(i, j);
            if let Some((ti, tj)) = self.choose_target(species, i, j, p) {
                claims.push((tj * n + ti, j * n + i));
            }
        }
        // stable sort keeps scan order within a target
        claims.sort_by_key(|&(target, _)| target);
        let old = self.cells.clone();
        let mut start = 0;
        while start < claims.len() {
            let target = claims[start].0;
            let mut end = start + 1;
            while end < claims.len() && claims[end].0 == target {
                end += 1;
            }
            let winner = if end - start > 1 {
                start + self.rng.gen_range(0..end - start)
            } else {
                start
            };
            let source = claims[winner].1;
            self.cells[target] = old[source];
            self.cells[source] = Cell::Empty;
            start = end;
        }
    }

    fn step_random_sequential(&mut self, p: &ModelParams) {
        let n = self.n;
        let mut order = self.individuals();
        order.shuffle(&mut self.rng);
        for (i, j) in order {
            let species = self.get(i, j);
            if let Some((ti, tj)) = self.choose_target(species, i, j, p) {
                self.cells[tj * n + ti] = species;
                self.cells[j * n + i] = Cell::Empty;
            }
        }
    }
}

/// Sampling options of [`run`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeRunOptions {
    pub steps: u64,
    /// Diagnostics and observer cadence in steps; 0 disables sampling
    /// except for the initial and final states.
    pub sample_every: u64,
    /// Block size for the coarse-grained density used by the anisotropy
    /// column; must divide the lattice size.
    pub coarse_factor: usize,
}

/// Diagnostics sample of a lattice state: occupancy counts as masses,
/// segregation index and diagonal anisotropy of the coarse-grained total
/// density.
pub fn sample_lattice(state: &LatticeState, dt: f64, coarse_factor: usize) -> DiagnosticsSample {
    let (red, blue) = state.occupancy_fields();
    let rho = red.zip_map(&blue, |a, b| a + b);
    let coarse = rho.coarsen(coarse_factor);
    DiagnosticsSample {
        t: state.step_count as f64 * dt,
        mass_r: state.count(Cell::Red) as f64,
        mass_b: state.count(Cell::Blue) as f64,
        segregation: segregation_index(state),
        anisotropy: Some(diagonal_anisotropy(&coarse)),
        ..DiagnosticsSample::default()
    }
}

/// Applies `options.steps` steps, sampling diagnostics and calling
/// `observer` on the initial state, every `sample_every` steps and on the
/// final state.
pub fn run(
    initial: LatticeState,
    p: &ModelParams,
    scheduler: Scheduler,
    options: LatticeRunOptions,
    mut observer: impl FnMut(&LatticeState),
) -> Result<(LatticeState, DiagnosticsSeries)> {
    if options.coarse_factor == 0 || !initial.n.is_multiple_of(options.coarse_factor) {
        return Err(Error::invalid(
            "coarse_factor",
            format!("must divide the lattice size {}", initial.n),
        ));
    }
    let mut state = initial;
    let mut series = DiagnosticsSeries::default();
    let dt = if p.dt > 0.0 { p.dt } else { 1.0 };
    series.push(sample_lattice(&state, dt, options.coarse_factor))?;
    observer(&state);
    for s in 1..=options.steps {
        state.step(p, scheduler)?;
        let sample_now = (options.sample_every > 0 && s % options.sample_every == 0) || s == options.steps;
        if sample_now {
            series.push(sample_lattice(&state, dt, options.coarse_factor))?;
            observer(&state);
        }
    }
    Ok((state, series))
}
