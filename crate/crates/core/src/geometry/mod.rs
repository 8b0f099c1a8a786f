//! NACA 4-digit airfoils, the 248-point coordinate layout and labeled datasets.

mod airfoil;
mod dataset;
mod naca;

pub use airfoil::{format_g17, Airfoil};
pub use dataset::{
    build_dataset, read_shapes_csv, write_shapes_csv, Dataset, DatasetProvenance,
    GridRange, GridSpec,
};
pub use naca::{discretize, naca4_camber, naca4_thickness, Naca4Params};

/// Points per airfoil in the dataset layout.
pub const N_POINTS: usize = 248;
/// Length of the coordinate vector `(x1..x248, y1..y248)`.
pub const COORD_LEN: usize = 2 * N_POINTS;
