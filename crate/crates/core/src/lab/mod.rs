//! Problem generators and the experiment drivers: the β sweep, the mode
//! split study and the shifted-operator study.

mod shifted;
mod study;
mod synthetic;

pub use shifted::{shifted_base, shifted_study, write_shifted_csv, ShiftedRow, SHIFT_TAUS};
pub use study::{
    mode_split_study, mode_split_study_with, sweep_beta, sweep_config, write_mode_split_csv, write_sweep_csv,
    LoadKind, ModeSplitRow, SweepReport, SweepRow, SweepSetup, FLAG_REL_PRESSURE,
};
pub use synthetic::{
    gen_class, gen_example31, gen_in_coordinates, gen_shifted, gen_synthetic, gen_synthetic_factored, AKind, Example31, ShiftedFamily,
    SyntheticProblem, SyntheticSpec,
};
