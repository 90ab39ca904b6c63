//! Dense optical flow between grayscale frames.

mod frame;
mod io;
mod pyramid;
mod solver;

pub use frame::{warp, FlowField, Frame};
pub use io::{
    decode_flo, encode_flo, frame_to_bytes, read_flo, read_pgm, write_flo, write_gray_pgm, write_pgm, FLO_MAGIC,
};
pub use solver::{estimate_flow, estimate_flow_traced, flow_energy, FlowSolverConfig, FlowTrace, LevelTrace};
