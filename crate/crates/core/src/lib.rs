pub mod blocks;
pub mod homs;
pub mod numkernel;
pub mod tower;
pub mod traces;
