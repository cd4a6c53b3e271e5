pub mod config;
pub mod drivers;
pub mod linalg;
pub mod mesh_io;
pub mod output;
pub mod run;
