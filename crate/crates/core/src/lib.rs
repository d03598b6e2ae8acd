pub mod estimate;
pub mod fig3;
pub mod fisher;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod povm;
pub mod rng;
pub mod symmetry;
pub mod zoo;
