pub mod compare;
pub mod export_heatmap;
pub mod gradcheck;
pub mod kd_demo;
pub mod train;

pub use compare::cmd_compare;
pub use export_heatmap::cmd_export_heatmap;
pub use gradcheck::cmd_gradcheck;
pub use kd_demo::cmd_kd_demo;
pub use train::cmd_train;
