pub mod cases;
pub mod lp;
pub mod network;
pub mod opf;
pub mod ph;
pub mod runtime;
