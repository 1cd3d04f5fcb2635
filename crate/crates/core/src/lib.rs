pub mod compare;
pub mod error;
pub mod mining;
pub mod model;
pub mod parsers;
pub mod qc;
pub mod stats;
pub mod svg;
pub mod table_io;
pub mod text;
pub mod unify;

pub use error::{Error, Result};
pub use model::{CorpusTable, Turn};
