use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vof_core::experiment::{
    cmd_compare, cmd_eval, cmd_gen_data, cmd_sweep, cmd_train, cmd_uc, ExperimentConfig, ExperimentError,
};
use vof_core::forecaster::LossKind;

#[derive(Parser)]
#[command(name = "vof", version, about = "Value-oriented wind forecasting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured dataset (synthetic unless a path is set) as CSV.
    GenData(Common),
    /// Train one model; the loss comes from the config or --loss.
    Train(Common),
    /// Evaluate a trained model on the test split.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Train and evaluate every configured approach on one split.
    Compare(Common),
    /// Repeat the comparison at each wind capacity.
    Sweep(Common),
    /// Evaluate under a unit-commitment day-ahead stage.
    Uc(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Value,
    Mse,
    Pinball,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (file for gen-data).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    #[arg(long)]
    quantile: Option<f64>,
    #[arg(long)]
    scenarios: Option<usize>,
    #[arg(long)]
    knn: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    capacities: Option<Vec<f64>>,
    /// Real-time up-regulation prices used at evaluation.
    #[arg(long = "rt-cost-override", value_delimiter = ',')]
    rt_cost_override: Option<Vec<f64>>,
}

impl Common {
    fn config(&self, seed_required: bool) -> Result<ExperimentConfig, ExperimentError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        match self.seed {
            Some(s) => cfg.training.seed = s,
            None if seed_required => return Err(ExperimentError::Config("--seed is required".into())),
            None => {}
        }
        match (self.loss, self.quantile) {
            (Some(LossArg::Value), _) => cfg.training.loss = LossKind::Value,
            (Some(LossArg::Mse), _) => cfg.training.loss = LossKind::Mse,
            (Some(LossArg::Pinball), Some(q)) => cfg.training.loss = LossKind::Pinball { quantile: q },
            (Some(LossArg::Pinball), None) => {
                return Err(ExperimentError::Config("--loss pinball needs --quantile".into()))
            }
            (None, Some(q)) => match cfg.training.loss {
                LossKind::Pinball { .. } => cfg.training.loss = LossKind::Pinball { quantile: q },
                _ => return Err(ExperimentError::Config("--quantile only applies to the pinball loss".into())),
            },
            (None, None) => {}
        }
        if let Some(s) = self.scenarios {
            cfg.evaluation.scenarios = s;
        }
        if let Some(k) = self.knn {
            cfg.evaluation.knn = k;
        }
        if let Some(c) = &self.capacities {
            cfg.evaluation.capacities = c.clone();
        }
        if let Some(o) = &self.rt_cost_override {
            cfg.evaluation.rt_up_override = Some(o.clone());
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<String, ExperimentError> {
    match cli.command {
        Command::GenData(c) => {
            let set = cmd_gen_data(&c.config(false)?, &c.out)?;
            Ok(format!("wrote {} records to {}", set.len(), c.out.display()))
        }
        Command::Train(c) => {
            let model = cmd_train(&c.config(true)?, &c.out)?;
            Ok(format!("model written to {}", model.display()))
        }
        Command::Eval { common, model } => {
            let r = cmd_eval(&common.config(false)?, &model, &common.out)?;
            Ok(format!("avg_cost {:.4} rmse {:.4}", r.avg_cost, r.rmse))
        }
        Command::Compare(c) => {
            let out = cmd_compare(&c.config(true)?, &c.out)?;
            let mut lines = Vec::new();
            for (name, m) in &out.metrics.approaches {
                lines.push(format!("{name}: avg_cost {:.4} rmse {:.4}", m.avg_cost, m.rmse));
            }
            Ok(lines.join("\n"))
        }
        Command::Sweep(c) => {
            let cells = cmd_sweep(&c.config(false)?, &c.out)?;
            Ok(cells
                .iter()
                .map(|x| format!("{} @ {}: avg_cost {:.4}", x.approach, x.capacity, x.avg_cost))
                .collect::<Vec<_>>()
                .join("\n"))
        }
        Command::Uc(c) => {
            let reports = cmd_uc(&c.config(false)?, &c.out)?;
            Ok(reports.iter().map(|(k, r)| format!("{k}: avg_cost {:.4}", r.avg_cost)).collect::<Vec<_>>().join("\n"))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
