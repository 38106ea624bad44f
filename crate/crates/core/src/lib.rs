//! Polar codes over large binary kernels, with fast window processors for
//! two 16x16 kernels.

pub mod arikan;
pub mod binmat;
pub mod codec;
pub mod error;
pub mod fast16;
pub mod harness;
pub mod kernel;
pub mod ops;
pub mod winproc;

pub use binmat::BinMatrix;
pub use codec::{CodeSpec, Crc, DecodeResult, Decoder, ProcessorKind};
pub use error::{Error, Result};
pub use fast16::{Fast16Kernel, Fast16State};
pub use kernel::{Kernel, WindowPlan};
pub use ops::OpCounter;
pub use winproc::{GenericProcessor, KernelProcessor};
