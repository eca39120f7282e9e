//! Iteratively refined wavefield reconstruction inversion: alternating
//! wavefield and model updates with scaled dual ascent over frequency batches.

mod batch;
mod outer;
mod virtual_source;

pub use batch::{build_batches, frequency_grid, FrequencyBatch};
pub use outer::{
    assemble_virtual_sources, check_stop, dual_update, irwri_iteration, model_step, run_batch,
    run_continuation, synthesize_data, wavefield_step, write_irwri_log, Acquisition, BatchProblem,
    BatchResult, ContinuationResult, IrwriParams, IrwriRecord, IrwriState, ModelingSetup, ObservedData,
    Regularization, Residuals, StopStatus, StoppingCriteria,
};
pub use virtual_source::{virtual_source_block, VirtualSourceSystem};
