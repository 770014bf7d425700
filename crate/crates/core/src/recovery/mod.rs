//! Sparse recovery on the delay/Doppler dictionary: grid OMP and the
//! Newtonized OMP detector with local and joint Newton refinement.

mod cfar;
mod correlate;
mod detection;
mod dictionary;
mod lsq;
mod nomp;
mod objective;
mod omp;
mod refine;

pub use cfar::{cfar_threshold, noise_floor_estimate};
pub use correlate::{coarse_detect, correlate_residual, CoarseEstimate, CorrelationMap, CorrelationMode, Correlator};
pub use detection::{CfarCells, Detection, DetectionSet, DetectorConfig, DetectorOutput, GlobalMode, Provenance};
pub use dictionary::{ind2sub, ind2sub_one_based, sub2ind, sub2ind_one_based, DictionarySpec};
pub use lsq::{ls_gains, residual_after, LsSolution};
pub use nomp::nomp_detect;
pub use objective::{
    concentrated_gain, joint_derivatives, joint_residual_energy, local_objective, objective_derivatives,
    JointEval, ObjectiveEval,
};
pub use omp::{omp_detect, OmpStop};
pub use refine::{refine_global, refine_local, GlobalRefinement};
