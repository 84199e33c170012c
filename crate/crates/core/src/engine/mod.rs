pub mod gates;
pub mod observables;
pub mod schedule;

pub use gates::GmVariant;
pub use observables::{observables, Observables};
pub use schedule::{build_schedule, run, Order, TrotterSchedule};
