//! Wall-clock attribution of solver work to (phase, kernel, level) keys.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Setup,
    Solve,
}

pub mod kernel {
    pub const ASSEMBLY: &str = "assembly";
    pub const TRANSFER_SETUP: &str = "transfer_setup";
    pub const PATCH_SETUP: &str = "patch_setup";
    pub const EIGEN_ESTIMATE: &str = "eigen_estimate";
    pub const COARSE_FACTOR: &str = "coarse_factor";
    pub const SCHUR_FACTOR: &str = "schur_factor";

    pub const RELAXATION: &str = "relaxation";
    pub const RESIDUAL: &str = "residual";
    pub const TRANSFER: &str = "transfer";
    pub const COARSE_SOLVE: &str = "coarse_solve";
    pub const SCHUR_SOLVE: &str = "schur_solve";
    pub const BLOCK_PRODUCTS: &str = "block_products";
    pub const KRYLOV_OPERATOR: &str = "krylov_operator";
    pub const ORTHOGONALIZATION: &str = "orthogonalization";
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelKey {
    pub phase: Phase,
    pub kernel: &'static str,
    pub level: Option<usize>,
}

impl KernelKey {
    /// `kernel` or `kernel_l<level>`.
    pub fn label(&self) -> String {
        match self.level {
            Some(l) => format!("{}_l{}", self.kernel, l),
            None => self.kernel.to_string(),
        }
    }
}

/// Accumulates seconds per key. Timed regions must not nest.
#[derive(Debug)]
pub struct Profiler {
    phase: Mutex<Phase>,
    entries: Mutex<BTreeMap<KernelKey, f64>>,
}

impl Default for Profiler {
    fn default() -> Self {
        Profiler::new()
    }
}

impl Profiler {
    pub fn new() -> Self {
        Profiler { phase: Mutex::new(Phase::Setup), entries: Mutex::new(BTreeMap::new()) }
    }

    pub fn set_phase(&self, phase: Phase) {
        *self.phase.lock().unwrap() = phase;
    }

    pub fn phase(&self) -> Phase {
        *self.phase.lock().unwrap()
    }

    pub fn add(&self, kernel: &'static str, level: Option<usize>, seconds: f64) {
        let key = KernelKey { phase: self.phase(), kernel, level };
        *self.entries.lock().unwrap().entry(key).or_insert(0.0) += seconds;
    }

    pub fn time<T>(&self, kernel: &'static str, level: Option<usize>, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.add(kernel, level, t.elapsed().as_secs_f64());
        out
    }

    pub fn entries(&self) -> Vec<(KernelKey, f64)> {
        self.entries.lock().unwrap().iter().map(|(k, v)| (k.clone(), *v)).collect()
    }

    pub fn phase_entries(&self, phase: Phase) -> Vec<(String, f64)> {
        self.entries().into_iter().filter(|(k, _)| k.phase == phase).map(|(k, v)| (k.label(), v)).collect()
    }

    pub fn total(&self, phase: Phase) -> f64 {
        self.entries.lock().unwrap().iter().filter(|(k, _)| k.phase == phase).map(|(_, v)| v).sum()
    }

    pub fn clear(&self) {
        self.entries.lock().unwrap().clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulates_per_phase() {
        let p = Profiler::new();
        p.add(kernel::ASSEMBLY, None, 1.0);
        p.set_phase(Phase::Solve);
        p.add(kernel::RELAXATION, Some(0), 0.5);
        p.add(kernel::RELAXATION, Some(0), 0.25);
        p.add(kernel::RELAXATION, Some(1), 0.125);
        assert_eq!(p.total(Phase::Setup), 1.0);
        assert_eq!(p.total(Phase::Solve), 0.875);
        let solve = p.phase_entries(Phase::Solve);
        assert_eq!(solve, vec![("relaxation_l0".to_string(), 0.75), ("relaxation_l1".to_string(), 0.125)]);
        let x = p.time(kernel::TRANSFER, None, || 3);
        assert_eq!(x, 3);
        assert_eq!(p.phase_entries(Phase::Solve).len(), 3);
    }
}
