//! Semi-discrete Hamiltonian test systems, Crank–Nicolson time stepping and
//! symplectic model reduction.

pub mod integrator;
pub mod io;
pub mod rom;
pub mod sparse;
pub mod systems;
pub mod vlasov_ic;

pub use integrator::{crank_nicolson, simulate_full, HamiltonianFlow, IntegratorOptions, Trajectory};
pub use rom::{
    build_rom, compute_basis, relative_errors, Centering, ErrorReport, NonlinearTreatment, ReducedBasis, ReducedSystem,
    Reduction,
};
pub use sparse::Csr;
pub use systems::{
    schrodinger_system, sine_gordon_system, vlasov_system, wave_system, HamiltonianSystem, Nonlinearity,
    SchrodingerParams, SineGordonParams, WaveParams,
};
pub use vlasov_ic::{sample_vlasov_ic, VlasovIcParams};
