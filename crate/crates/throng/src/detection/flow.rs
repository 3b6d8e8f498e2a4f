//! Free-flow strategy: entered/left counting per grid over a sliding window.

use std::collections::{HashMap, VecDeque};

use crate::world::{locate, GridId, GridPartition, Layer, Snapshot};

/// Flow through one grid over the counting window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCounter {
    pub grid: GridId,
    pub entered: u32,
    pub left: u32,
    pub window: f64,
}

/// Free-flow verdict: more leavers than entrants means free flow; anything
/// else is congestion, except that an empty grid is never congested.
pub fn detect_free_flow(flow: &FlowCounter, occupancy: u32) -> bool {
    if flow.left > flow.entered {
        false
    } else {
        occupancy > 0
    }
}

type Transitions = HashMap<GridId, (u32, u32)>;

/// Accumulates grid entry/exit transitions across snapshots. The first
/// observed snapshot is the baseline: no transitions are counted for it.
#[derive(Debug, Clone)]
pub struct FlowTracker {
    partition: GridPartition,
    window: f64,
    window_ticks: usize,
    primed: bool,
    prev_cells: HashMap<u32, [GridId; 4]>,
    history: VecDeque<Transitions>,
    occupancy: HashMap<GridId, u32>,
}

impl FlowTracker {
    pub fn new(partition: &GridPartition, window: f64, dt: f64) -> FlowTracker {
        let ticks = (window / dt).round() as usize;
        FlowTracker {
            partition: partition.clone(),
            window,
            window_ticks: ticks.max(1),
            primed: false,
            prev_cells: HashMap::new(),
            history: VecDeque::new(),
            occupancy: HashMap::new(),
        }
    }

    /// Folds one snapshot into the counters.
    pub fn observe(&mut self, snap: &Snapshot) {
        let mut cur_cells: HashMap<u32, [GridId; 4]> = HashMap::with_capacity(snap.pedestrians.len());
        let mut occupancy: HashMap<GridId, u32> = HashMap::new();
        for ped in &snap.pedestrians {
            let cells = [
                locate(&self.partition, ped.position, Layer::Base).expect("pedestrian in field"),
                locate(&self.partition, ped.position, Layer::ShiftedX).expect("pedestrian in field"),
                locate(&self.partition, ped.position, Layer::ShiftedY).expect("pedestrian in field"),
                locate(&self.partition, ped.position, Layer::ShiftedXy).expect("pedestrian in field"),
            ];
            for cell in cells {
                *occupancy.entry(cell).or_insert(0) += 1;
            }
            cur_cells.insert(ped.id, cells);
        }

        if self.primed {
            let mut transitions: Transitions = HashMap::new();
            for ped in &snap.pedestrians {
                let cur = cur_cells[&ped.id];
                match self.prev_cells.get(&ped.id) {
                    Some(prev) => {
                        for k in 0..4 {
                            if prev[k] != cur[k] {
                                transitions.entry(prev[k]).or_insert((0, 0)).1 += 1;
                                transitions.entry(cur[k]).or_insert((0, 0)).0 += 1;
                            }
                        }
                    }
                    None => {
                        for cell in cur {
                            transitions.entry(cell).or_insert((0, 0)).0 += 1;
                        }
                    }
                }
            }
            // Pedestrians gone from the snapshot (exited) left their cells.
            for (id, prev) in &self.prev_cells {
                if !cur_cells.contains_key(id) {
                    for cell in prev {
                        transitions.entry(*cell).or_insert((0, 0)).1 += 1;
                    }
                }
            }
            self.history.push_back(transitions);
            while self.history.len() > self.window_ticks {
                self.history.pop_front();
            }
        } else {
            self.primed = true;
        }
        self.prev_cells = cur_cells;
        self.occupancy = occupancy;
    }

    pub fn counter(&self, grid: GridId) -> FlowCounter {
        let mut entered = 0;
        let mut left = 0;
        for transitions in &self.history {
            if let Some(&(e, l)) = transitions.get(&grid) {
                entered += e;
                left += l;
            }
        }
        FlowCounter { grid, entered, left, window: self.window }
    }

    pub fn occupancy(&self, grid: GridId) -> u32 {
        self.occupancy.get(&grid).copied().unwrap_or(0)
    }

    pub fn verdict(&self, grid: GridId) -> bool {
        detect_free_flow(&self.counter(grid), self.occupancy(grid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counter(entered: u32, left: u32) -> FlowCounter {
        FlowCounter {
            grid: GridId::new(Layer::Base, 0, 0),
            entered,
            left,
            window: 1.0,
        }
    }

    #[test]
    fn more_leavers_than_entrants_is_free_flow() {
        assert!(!detect_free_flow(&counter(3, 5), 40));
    }

    #[test]
    fn balanced_flow_with_occupancy_is_congested() {
        assert!(detect_free_flow(&counter(5, 5), 40));
        assert!(detect_free_flow(&counter(6, 5), 1));
    }

    #[test]
    fn empty_grid_is_never_congested() {
        assert!(!detect_free_flow(&counter(0, 0), 0));
    }

    use crate::world::{build_partition, FieldConfig, Goal, Pedestrian, Vec2};

    fn snapshot(tick: u64, positions: &[(u32, f64, f64)]) -> Snapshot {
        let pedestrians = positions
            .iter()
            .map(|&(id, x, y)| Pedestrian {
                id,
                position: Vec2::new(x, y),
                velocity: Vec2::ZERO,
                goal: Goal::Heading { direction: Vec2::new(1.0, 0.0) },
                group_hint: 0,
                v_max: 1.5,
                obedient: true,
                active_instruction: None,
            })
            .collect();
        Snapshot {
            tick,
            sim_time: tick as f64 * 0.1,
            dt: 0.1,
            pedestrians,
            previous_positions: Default::default(),
        }
    }

    #[test]
    fn tracker_counts_transitions_after_baseline() {
        let field = FieldConfig::open(100.0, 100.0);
        let partition = build_partition(&field, 10.0).unwrap();
        let mut tracker = FlowTracker::new(&partition, 1.0, 0.1);

        // Baseline: one pedestrian in base cell (0, 0). No counts yet.
        tracker.observe(&snapshot(0, &[(1, 2.0, 2.0)]));
        let g00 = GridId::new(Layer::Base, 0, 0);
        let g10 = GridId::new(Layer::Base, 1, 0);
        assert_eq!(tracker.counter(g00), FlowCounter { grid: g00, entered: 0, left: 0, window: 1.0 });

        // Move across the base column boundary: left (0,0), entered (1,0).
        tracker.observe(&snapshot(1, &[(1, 12.0, 2.0)]));
        assert_eq!(tracker.counter(g00).left, 1);
        assert_eq!(tracker.counter(g10).entered, 1);
        assert!(!tracker.verdict(g00), "emptied cell is free flow");
        assert!(tracker.verdict(g10), "entered-only cell with occupancy is congested");
    }

    #[test]
    fn tracker_window_expires_old_transitions() {
        let field = FieldConfig::open(100.0, 100.0);
        let partition = build_partition(&field, 10.0).unwrap();
        let mut tracker = FlowTracker::new(&partition, 0.3, 0.1);
        let g00 = GridId::new(Layer::Base, 0, 0);

        tracker.observe(&snapshot(0, &[(1, 2.0, 2.0)]));
        tracker.observe(&snapshot(1, &[(1, 12.0, 2.0)]));
        assert_eq!(tracker.counter(g00).left, 1);
        // Three further still snapshots push the transition out of a 3-tick window.
        for t in 2..5 {
            tracker.observe(&snapshot(t, &[(1, 12.0, 2.0)]));
        }
        assert_eq!(tracker.counter(g00).left, 0);
    }

    #[test]
    fn tracker_counts_exits_as_leavers() {
        let field = FieldConfig::open(100.0, 100.0);
        let partition = build_partition(&field, 10.0).unwrap();
        let mut tracker = FlowTracker::new(&partition, 1.0, 0.1);
        let g00 = GridId::new(Layer::Base, 0, 0);

        tracker.observe(&snapshot(0, &[(1, 2.0, 2.0), (2, 3.0, 2.0)]));
        tracker.observe(&snapshot(1, &[(2, 3.0, 2.0)]));
        assert_eq!(tracker.counter(g00).left, 1);
        assert_eq!(tracker.occupancy(g00), 1);
    }
}
