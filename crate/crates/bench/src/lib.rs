//! Benchmark fixtures shared by the criterion targets.
