use ndarray::ArrayView1;

use crate::data::Task;
use crate::group::Group;

/// A deterministic predictor `ŷ = h(x, s)`.
pub trait Predictor: Sync {
    fn score(&self, x: ArrayView1<'_, f64>, s: Group) -> f64;

    fn task(&self) -> Task;

    /// Label 1 iff the score is positive.
    fn decision(&self, x: ArrayView1<'_, f64>, s: Group) -> f64 {
        if self.score(x, s) > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    /// What counterfactual comparisons look at: the decided label for
    /// classification, the raw score for regression.
    fn prediction(&self, x: ArrayView1<'_, f64>, s: Group) -> f64 {
        match self.task() {
            Task::Classification => self.decision(x, s),
            Task::Regression => self.score(x, s),
        }
    }
}

/// `h(x, s) = value` everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPredictor {
    pub value: f64,
    pub task: Task,
}

impl Predictor for ConstantPredictor {
    fn score(&self, _: ArrayView1<'_, f64>, _: Group) -> f64 {
        self.value
    }

    fn task(&self) -> Task {
        self.task
    }
}

/// Wraps a closure.
pub struct FnPredictor<F> {
    f: F,
    task: Task,
}

impl<F> FnPredictor<F>
where
    F: Fn(ArrayView1<'_, f64>, Group) -> f64 + Sync,
{
    pub fn new(task: Task, f: F) -> Self {
        FnPredictor { f, task }
    }
}

impl<F> Predictor for FnPredictor<F>
where
    F: Fn(ArrayView1<'_, f64>, Group) -> f64 + Sync,
{
    fn score(&self, x: ArrayView1<'_, f64>, s: Group) -> f64 {
        (self.f)(x, s)
    }

    fn task(&self) -> Task {
        self.task
    }
}
