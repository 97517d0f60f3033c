use std::path::Path;

use alr_core::train::train;

use crate::artifacts::write_run_artifacts;
use crate::config::ExperimentConfig;
use crate::error::Result;

pub fn cmd_train(config_path: &Path) -> Result<()> {
    let config = ExperimentConfig::load(config_path)?;
    let run = config.resolve(None, None, None)?;
    let outcome = train(&run.settings, &run.train, &run.test)?;
    write_run_artifacts(&run, &outcome)?;

    let last = outcome.final_record();
    println!(
        "{} seed {}: train_acc {:.4} test_acc {:.4} after {} epochs -> {}",
        run.method.as_str(),
        run.settings.seed,
        last.train_acc,
        last.test_acc,
        run.settings.epochs,
        run.output_dir.display()
    );
    Ok(())
}
