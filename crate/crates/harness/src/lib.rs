pub mod bench;
pub mod cli;
pub mod estimate;
pub mod experiment;
pub mod params;
pub mod run;
