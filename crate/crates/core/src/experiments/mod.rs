//! Worked examples, randomized schedule families and the property suites
//! that check every certificate against simulation.

mod examples;
mod random;
mod suites;
mod verify;

pub use examples::{
    example1_recursion, example1_schedule, example2_schedule, run_example2, table1, table1_row, DecayConstant,
    EdgeSense, Example2Params, Example2Run, Example2Summary, Table1Row, WindowLayout, PAPER_TABLE1,
};
pub use random::{case_rng, random_schedule, random_states, random_target, RandomScheduleParams, TargetShape};
pub use suites::{
    first_order_invariants, junit_xml, oracle_reachability, run_case, run_suite, second_order_invariants,
    CaseOutcome, Suite, SuiteReport,
};
pub use verify::{
    verify_certificate, verify_diameter_series, verify_second_order, BlockCheck, CertificateCheck, VERIFY_TOL,
};
