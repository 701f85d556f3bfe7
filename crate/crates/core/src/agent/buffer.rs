use ndarray::Array2;
use rand::Rng;

use crate::masking::ActionBounds;

/// One stored step: state, active bounds, executed action, reward, next
/// state with the bounds that apply there, and the MDP-terminal flag
/// (time-limit truncation is not terminal).
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub bounds: ActionBounds,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub bounds_next: ActionBounds,
    pub terminal: bool,
}

/// Fixed-capacity FIFO ring of transitions.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    slots: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { slots: Vec::with_capacity(capacity.min(1 << 16)), capacity, cursor: 0 }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, transition: Transition) {
        if self.slots.len() < self.capacity {
            self.slots.push(transition);
        } else {
            self.slots[self.cursor] = transition;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.slots.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.slots.iter()
    }

    /// Indices drawn uniformly with replacement over the filled slots.
    pub fn sample_indices(&self, n: usize, rng: &mut impl Rng) -> Vec<usize> {
        assert!(!self.slots.is_empty(), "cannot sample an empty buffer");
        (0..n).map(|_| rng.random_range(0..self.slots.len())).collect()
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Batch {
        let idx = self.sample_indices(n, rng);
        Batch::from_transitions(idx.iter().map(|&i| &self.slots[i]))
    }
}

/// Row-per-sample matrices assembled from transitions.
#[derive(Clone, Debug)]
pub struct Batch {
    pub s: Array2<f64>,
    pub lower: Array2<f64>,
    pub upper: Array2<f64>,
    pub a: Array2<f64>,
    pub r: Vec<f64>,
    pub s_next: Array2<f64>,
    pub lower_next: Array2<f64>,
    pub upper_next: Array2<f64>,
    pub terminal: Vec<bool>,
}

impl Batch {
    pub fn from_transitions<'a>(items: impl IntoIterator<Item = &'a Transition>) -> Self {
        let items: Vec<&Transition> = items.into_iter().collect();
        assert!(!items.is_empty(), "empty batch");
        let n = items.len();
        let rows = |f: &dyn Fn(&Transition) -> &[f64]| {
            let width = f(items[0]).len();
            let flat: Vec<f64> = items.iter().flat_map(|t| f(t).iter().copied()).collect();
            Array2::from_shape_vec((n, width), flat).expect("ragged transitions")
        };
        Self {
            s: rows(&|t| &t.s),
            lower: rows(&|t| &t.bounds.lower),
            upper: rows(&|t| &t.bounds.upper),
            a: rows(&|t| &t.a),
            r: items.iter().map(|t| t.r).collect(),
            s_next: rows(&|t| &t.s_next),
            lower_next: rows(&|t| &t.bounds_next.lower),
            upper_next: rows(&|t| &t.bounds_next.upper),
            terminal: items.iter().map(|t| t.terminal).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}
