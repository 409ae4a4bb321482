//! The five-state recurrence machine.
//!
//! One machine follows one trajectory. Each step it receives the code of the
//! cell the trajectory currently sits in and updates the cell store: marking
//! fresh cells, promoting recurrent cells to a new attractor, and finally
//! labelling the initial condition.

use crate::attractors::AttractorStore;
use crate::error::{Error, Result};
use crate::grid::{AttractorId, CellCode, CellStore};
use crate::params::RecurrenceParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MachineState {
    /// Looking for recurrences on marked cells.
    AttSearch,
    /// A new attractor was declared; painting its cells.
    AttFound,
    /// Trajectory sits on cells of a known attractor.
    AttHit,
    /// Trajectory sits on cells of a known basin.
    BasHit,
    /// Trajectory is outside the grid.
    Lost,
}

impl MachineState {
    pub const ALL: [MachineState; 5] = [
        MachineState::AttSearch,
        MachineState::AttFound,
        MachineState::AttHit,
        MachineState::BasHit,
        MachineState::Lost,
    ];
}

/// What the trajectory sees at its current position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Input {
    Unknown,
    Marked,
    Attractor(AttractorId),
    Basin(AttractorId),
    Outside,
}

impl Input {
    /// Input for a cell code. Diverged cells read as unknown.
    #[inline]
    pub fn from_code(code: CellCode) -> Input {
        match code.0 {
            0 => Input::Marked,
            c if c >= 2 && c % 2 == 0 => Input::Attractor((c / 2) as AttractorId),
            c if c >= 3 => Input::Basin((c / 2) as AttractorId),
            _ => Input::Unknown,
        }
    }

    #[inline]
    pub fn observe(store: &CellStore, cell: Option<usize>) -> Input {
        cell.map_or(Input::Outside, |c| Input::from_code(store.get(c)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    Continue,
    /// The run is over; the initial-condition cell now holds this code.
    Halt(CellCode),
}

/// Machine state for one initial condition.
#[derive(Debug, Clone)]
pub struct Machine {
    state: MachineState,
    cnt: u32,
    saved_state: MachineState,
    saved_cnt: u32,
    lost_cnt: u32,
    prev_input: Option<Input>,
    current_attractor: Option<AttractorId>,
    visited: Vec<usize>,
    ic: usize,
    collisions: u64,
    halted: bool,
}

impl Machine {
    pub fn new(ic: usize) -> Self {
        Machine {
            state: MachineState::AttSearch,
            cnt: 0,
            saved_state: MachineState::AttSearch,
            saved_cnt: 0,
            lost_cnt: 0,
            prev_input: None,
            current_attractor: None,
            visited: Vec::new(),
            ic,
            collisions: 0,
            halted: false,
        }
    }

    /// Prepares for a new initial condition, keeping allocations and the
    /// collision tally.
    pub fn reset(&mut self, ic: usize) {
        debug_assert!(self.visited.is_empty());
        let collisions = self.collisions;
        let visited = std::mem::take(&mut self.visited);
        *self = Machine::new(ic);
        self.visited = visited;
        self.collisions = collisions;
    }

    pub fn state(&self) -> MachineState {
        self.state
    }

    pub fn counter(&self) -> u32 {
        self.cnt
    }

    /// Counter of the interrupted state while lost.
    pub fn saved_counter(&self) -> u32 {
        self.saved_cnt
    }

    pub fn lost_counter(&self) -> u32 {
        self.lost_cnt
    }

    pub fn prev_input(&self) -> Option<Input> {
        self.prev_input
    }

    pub fn current_attractor(&self) -> Option<AttractorId> {
        self.current_attractor
    }

    pub fn visited(&self) -> &[usize] {
        &self.visited
    }

    pub fn initial_cell(&self) -> usize {
        self.ic
    }

    /// Times a locating phase ran into a different attractor's cell.
    pub fn collisions(&self) -> u64 {
        self.collisions
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    /// Feeds one input. `cell` is the linear index the input was read from
    /// (`None` exactly when the input is `Outside`), `point` the current full
    /// state, recorded when a cell is promoted to an attractor cell.
    pub fn step(
        &mut self,
        input: Input,
        cell: Option<usize>,
        point: &[f64],
        store: &mut CellStore,
        attractors: &mut AttractorStore,
        params: &RecurrenceParams,
    ) -> Result<Transition> {
        if self.halted {
            return Err(Error::Contract("machine already halted".into()));
        }
        let cell = match (input, cell) {
            (Input::Outside, _) => return Ok(self.outside(store, params)),
            (_, Some(c)) => c,
            (_, None) => {
                return Err(Error::Contract("in-grid input without a cell index".into()));
            }
        };
        if input == Input::Marked && self.visited.is_empty() {
            return Err(Error::Consistency(format!(
                "cell {cell} is marked but this run marked nothing"
            )));
        }
        debug_assert!(input != Input::Marked || self.visited.contains(&cell));

        if self.state == MachineState::Lost {
            self.state = self.saved_state;
            self.cnt = self.saved_cnt;
            self.lost_cnt = 0;
        }

        let out = if self.state == MachineState::AttFound {
            self.locate(input, cell, point, store, attractors, params)
        } else {
            let target = match input {
                Input::Unknown | Input::Marked => MachineState::AttSearch,
                Input::Attractor(_) => MachineState::AttHit,
                Input::Basin(_) => MachineState::BasHit,
                Input::Outside => unreachable!(),
            };
            if target != self.state {
                self.state = target;
                self.cnt = 0;
                if input == Input::Unknown {
                    self.mark(cell, store);
                }
                Transition::Continue
            } else {
                self.same_state(input, cell, point, store, attractors, params)
            }
        };
        self.prev_input = Some(input);
        Ok(out)
    }

    fn outside(&mut self, store: &mut CellStore, params: &RecurrenceParams) -> Transition {
        if self.state != MachineState::Lost {
            self.saved_state = self.state;
            self.saved_cnt = self.cnt;
            self.state = MachineState::Lost;
            self.lost_cnt = 0;
        }
        self.lost_cnt += 1;
        if self.lost_cnt >= params.mx_chk_lost {
            Transition::Halt(self.finish(CellCode::DIVERGED, store))
        } else {
            Transition::Continue
        }
    }

    fn same_state(
        &mut self,
        input: Input,
        cell: usize,
        point: &[f64],
        store: &mut CellStore,
        attractors: &mut AttractorStore,
        params: &RecurrenceParams,
    ) -> Transition {
        match (self.state, input) {
            (MachineState::AttSearch, Input::Unknown) => {
                self.mark(cell, store);
                self.cnt = 0;
            }
            (MachineState::AttSearch, Input::Marked) => {
                self.cnt += 1;
                if self.cnt >= params.mx_chk_fnd_att {
                    let k = store.allocate_attractor();
                    store.set(cell, CellCode::attractor(k));
                    attractors.push(k, point);
                    self.current_attractor = Some(k);
                    self.state = MachineState::AttFound;
                    self.cnt = 0;
                }
            }
            (MachineState::AttHit, Input::Attractor(k)) => {
                if self.prev_input == Some(input) {
                    self.cnt += 1;
                    if self.cnt >= params.mx_chk_att {
                        return Transition::Halt(self.finish(CellCode::basin(k), store));
                    }
                } else {
                    self.cnt = 0;
                }
            }
            (MachineState::BasHit, Input::Basin(k)) => {
                if self.prev_input == Some(input) {
                    self.cnt += 1;
                    if self.cnt >= params.mx_chk_hit_bas {
                        return Transition::Halt(self.finish(CellCode::basin(k), store));
                    }
                } else {
                    self.cnt = 0;
                }
            }
            (state, input) => unreachable!("{input:?} does not keep the machine in {state:?}"),
        }
        Transition::Continue
    }

    /// Locating phase of a freshly found attractor.
    fn locate(
        &mut self,
        input: Input,
        cell: usize,
        point: &[f64],
        store: &mut CellStore,
        attractors: &mut AttractorStore,
        params: &RecurrenceParams,
    ) -> Transition {
        let k = self
            .current_attractor
            .expect("locating phase always has a current attractor");
        match input {
            Input::Attractor(j) if j == k => {
                self.cnt += 1;
                if self.cnt >= params.mx_chk_loc_att {
                    return Transition::Halt(self.finish(CellCode::basin(k), store));
                }
            }
            Input::Attractor(j) => {
                log::debug!("attractor {k} ran into cell {cell} of attractor {j} while locating");
                self.collisions += 1;
                self.cnt = 0;
            }
            Input::Unknown | Input::Marked | Input::Basin(_) => {
                // diverged cells stay diverged
                if store.get(cell) != CellCode::DIVERGED {
                    store.set(cell, CellCode::attractor(k));
                    attractors.push(k, point);
                }
                self.cnt = 0;
            }
            Input::Outside => unreachable!(),
        }
        Transition::Continue
    }

    fn mark(&mut self, cell: usize, store: &mut CellStore) {
        if store.get(cell) == CellCode::UNKNOWN {
            store.set(cell, CellCode::MARKED);
            self.visited.push(cell);
        }
    }

    /// Ends the run: clears this run's marks and labels the initial
    /// condition. An initial cell that became an attractor cell keeps its
    /// even code. Returns the code left in the initial cell.
    pub fn finish(&mut self, label: CellCode, store: &mut CellStore) -> CellCode {
        for &c in &self.visited {
            if store.get(c) == CellCode::MARKED {
                store.set(c, CellCode::UNKNOWN);
            }
        }
        self.visited.clear();
        self.halted = true;
        let current = store.get(self.ic);
        if current.is_attractor() {
            current
        } else {
            store.set(self.ic, label);
            label
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn store(n: usize) -> CellStore {
        CellStore::new(Grid::from_ranges(&[(0.0, (n - 1) as f64, n)]).unwrap())
    }

    fn feed(
        m: &mut Machine,
        s: &mut CellStore,
        a: &mut AttractorStore,
        p: &RecurrenceParams,
        cell: Option<usize>,
    ) -> Transition {
        let input = Input::observe(s, cell);
        m.step(input, cell, &[cell.unwrap_or(0) as f64], s, a, p).unwrap()
    }

    #[test]
    fn unknown_marks_cell() {
        let (mut s, mut a, p) = (store(10), AttractorStore::new(), RecurrenceParams::default());
        let mut m = Machine::new(0);
        assert_eq!(feed(&mut m, &mut s, &mut a, &p, Some(3)), Transition::Continue);
        assert_eq!(s.get(3), CellCode::MARKED);
        assert_eq!(m.state(), MachineState::AttSearch);
        assert_eq!(m.counter(), 0);
        assert_eq!(m.visited(), &[3]);
    }

    #[test]
    fn fixed_point_found_then_located() {
        let (mut s, mut a, p) = (store(10), AttractorStore::new(), RecurrenceParams::default());
        let mut m = Machine::new(0);
        feed(&mut m, &mut s, &mut a, &p, Some(5));
        for i in 1..100 {
            feed(&mut m, &mut s, &mut a, &p, Some(5));
            assert_eq!(m.counter(), i);
        }
        feed(&mut m, &mut s, &mut a, &p, Some(5));
        assert_eq!(m.state(), MachineState::AttFound);
        assert_eq!(s.get(5), CellCode(2));
        assert_eq!(a.get(1).unwrap().len(), 1);
        for _ in 0..99 {
            assert_eq!(feed(&mut m, &mut s, &mut a, &p, Some(5)), Transition::Continue);
        }
        assert_eq!(feed(&mut m, &mut s, &mut a, &p, Some(5)), Transition::Halt(CellCode(3)));
        assert_eq!(s.get(0), CellCode(3));
        assert_eq!(s.count_code(CellCode::MARKED), 0);
    }

    #[test]
    fn consistency_error_on_foreign_mark() {
        let (mut s, mut a, p) = (store(4), AttractorStore::new(), RecurrenceParams::default());
        s.set(2, CellCode::MARKED);
        let mut m = Machine::new(0);
        let r = m.step(Input::Marked, Some(2), &[0.0], &mut s, &mut a, &p);
        assert!(matches!(r, Err(Error::Consistency(_))));
    }

    #[test]
    fn diverged_cells_are_read_as_unknown_but_not_marked() {
        let (mut s, mut a, p) = (store(4), AttractorStore::new(), RecurrenceParams::default());
        s.set(2, CellCode::DIVERGED);
        let mut m = Machine::new(0);
        assert_eq!(Input::observe(&s, Some(2)), Input::Unknown);
        feed(&mut m, &mut s, &mut a, &p, Some(2));
        assert_eq!(s.get(2), CellCode::DIVERGED);
        assert!(m.visited().is_empty());
    }
}
