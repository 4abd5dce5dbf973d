use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hemoforge_cli::classify::render_totals;
use hemoforge_cli::{
    cmd_classify_to, cmd_count, cmd_crossval, cmd_preprocess, cmd_report, cmd_segment, cmd_train_classifier,
    cmd_train_unet, ClassifyOptions, CliError, Method, PipelineConfig,
};

#[derive(Parser)]
#[command(name = "hemoforge", version, about = "Blood-smear preprocessing, segmentation, classification and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Segmentation method; for `train`, `unet` trains the segmentation network.
    #[arg(long, global = true, value_enum, default_value_t = Method::Watershed)]
    method: Method,
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    weights: Option<PathBuf>,
    /// U-Net weights used by classify/count with `--method unet`.
    #[arg(long, global = true)]
    unet_weights: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Resize and CLAHE every image into a mirror tree.
    Preprocess,
    /// Extract per-cell ROIs with JSON sidecars.
    Segment,
    /// k-fold cross-validation of the classifier.
    Crossval,
    /// Train the classifier (or the U-Net with `--method unet`) and save weights.
    Train,
    /// Classify every cell and write per-cell records.
    Classify,
    /// Classify every cell and print per-class totals.
    Count,
    /// Render the fold table of a crossval report (`--input report.json`).
    Report,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if let Command::Report = cli.command {
        let default = PathBuf::from("report.json");
        print!("{}", cmd_report(cli.input.as_deref().unwrap_or(&default))?);
        return Ok(true);
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let cfg = PipelineConfig::load(path)?;
    let (input, out) = (cli.input.as_deref(), cli.out.as_deref());
    let opts = ClassifyOptions {
        method: cli.method,
        input,
        weights: cli.weights.as_deref(),
        unet_weights: cli.unet_weights.as_deref(),
    };
    let clean = match cli.command {
        Command::Preprocess => cmd_preprocess(&cfg, input, out)?.failures.is_empty(),
        Command::Segment => cmd_segment(&cfg, cli.method, input, out, cli.weights.as_deref())?.failures.is_empty(),
        Command::Crossval => {
            let r = cmd_crossval(&cfg, input, out)?;
            print!("{}", r.report.table()?);
            println!("report: {}", r.report_path.display());
            true
        }
        Command::Train => {
            match cli.method {
                Method::Unet => {
                    let t = cmd_train_unet(&cfg, input, out)?;
                    println!(
                        "held-out mean IoU {:.4}, mean Dice {:.4}; weights: {}",
                        t.report.mean_iou,
                        t.report.mean_dice,
                        t.weights.display()
                    );
                }
                Method::Watershed => {
                    let t = cmd_train_classifier(&cfg, input, out)?;
                    println!("weights: {}", t.weights.display());
                }
            }
            true
        }
        Command::Classify => {
            let o = cmd_classify_to(&cfg, &opts, out)?;
            print!("{}", render_totals(&o.totals));
            o.failures.is_empty()
        }
        Command::Count => {
            let o = cmd_count(&cfg, &opts, out)?;
            print!("{}", render_totals(&o.totals));
            o.failures.is_empty()
        }
        Command::Report => unreachable!("handled above"),
    };
    Ok(clean)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
    }
}
