//! The decay experiment with default parameters and its h = 0 control.
use hypfield::fieldmc::{triviality_run, write_q_csv, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for cfg in [RunConfig::default(), RunConfig { amplitude: 0.0, ..RunConfig::default() }] {
        let run = triviality_run(&cfg)?;
        println!("amplitude {}: conical tiles {:?}", cfg.amplitude, run.conical_tiles);
        write_q_csv(std::io::stdout().lock(), &run)?;
        println!(
            "{} rate {:.4e}, 95% CI [{:.4e}, {:.4e}]\n",
            if run.passed { "decay certified:" } else { "no certified decay:" },
            run.epsilon_hat,
            run.ci_low,
            run.ci_high
        );
    }
    Ok(())
}
