use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trustmap::document::{predictions_table, to_document_string, ScaleDocument};
use trustmap::{Activation, LinguisticScale, TrustPipeline};
use trustmap_cli::commands::{self, Overrides, RunManifest};
use trustmap_cli::{service, CliError};

#[derive(Parser)]
#[command(name = "trustmap", version, about = "Fuzzy cognitive map trust quantification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct InferenceFlags {
    /// Convergence threshold on the max-norm state change
    #[arg(long)]
    epsilon: Option<f64>,
    /// Iteration cap
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Longest cycle period searched for
    #[arg(long = "cycle-window")]
    cycle_window: Option<usize>,
    #[arg(long, value_parser = ["tanh", "sigmoid"])]
    activation: Option<String>,
    /// Match linguistic labels exactly instead of normalizing case, spacing and apostrophes
    #[arg(long = "strict-labels")]
    strict_labels: bool,
}

impl InferenceFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            cycle_window: self.cycle_window,
            activation: self
                .activation
                .as_deref()
                .map(|a| a.parse::<Activation>().expect("restricted by clap")),
            strict_labels: Some(self.strict_labels),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Quantify trust for one or more expert surveys
    TrustQuantify {
        surveys: Vec<PathBuf>,
        #[command(flatten)]
        flags: InferenceFlags,
        /// Directory for per-survey reports and summary.tsv
        #[arg(long)]
        out: Option<PathBuf>,
        /// Custom rating scale document
        #[arg(long = "rating-scale")]
        rating_scale: Option<PathBuf>,
        /// Custom influence scale document
        #[arg(long = "influence-scale")]
        influence_scale: Option<PathBuf>,
    },
    /// Execute a run manifest (surveys, and optionally rules with patients)
    Run {
        manifest: PathBuf,
        /// Overrides the manifest's output directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterate a fuzzy cognitive map from an initial state
    FcmRun {
        model: PathBuf,
        state: PathBuf,
        #[command(flatten)]
        flags: InferenceFlags,
        /// Directory for trace.csv and outcome.json
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "influence-scale")]
        influence_scale: Option<PathBuf>,
    },
    /// Classify patient records with a threshold rule set
    RulesClassify {
        rules: PathBuf,
        patients: PathBuf,
        /// Print the per-condition evaluation for every record
        #[arg(long)]
        explain: bool,
        /// Directory for predictions.json and predictions.tsv
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in linguistic scales as scale documents
    Scales {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the local HTTP service
    Serve {
        #[arg(long, default_value_t = 8750)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        bind: IpAddr,
        /// Permit binding a non-loopback address
        #[arg(long = "allow-remote")]
        allow_remote: bool,
    },
}

fn pipeline_with_scales(
    base: TrustPipeline,
    rating: Option<&PathBuf>,
    influence: Option<&PathBuf>,
) -> Result<TrustPipeline, CliError> {
    let mut p = base;
    if let Some(path) = rating {
        p.rating_scale = commands::load_scale(path)?;
    }
    if let Some(path) = influence {
        p.influence_scale = commands::load_scale(path)?;
    }
    Ok(p)
}

fn announce(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn quantify(manifest: &RunManifest, pipeline: &TrustPipeline) -> Result<(), CliError> {
    let out = commands::cmd_trust_quantify(manifest, pipeline)?;
    if let Some(dir) = &manifest.output {
        announce(&commands::write_quantify_output(&out, dir)?);
    }
    print!("{}", out.summary);
    Ok(())
}

fn classify(
    rules: &Path,
    patients: &Path,
    explain: bool,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    let doc = commands::cmd_rules_classify(rules, patients, explain)?;
    if let Some(dir) = out {
        announce(&commands::write_predictions(&doc, dir)?);
    }
    print!("{}", predictions_table(&doc.predictions));
    if explain {
        println!();
        print!("{}", commands::explanation_text(&doc));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::TrustQuantify {
            surveys,
            flags,
            out,
            rating_scale,
            influence_scale,
        } => {
            let o = flags.overrides();
            let mut manifest = RunManifest::new(surveys);
            manifest.config = o.config(manifest.config)?;
            manifest.output = out;
            let pipeline = pipeline_with_scales(
                o.pipeline(TrustPipeline::default()),
                rating_scale.as_ref(),
                influence_scale.as_ref(),
            )?;
            quantify(&manifest, &pipeline)
        }
        Command::Run { manifest, out } => {
            let mut m = RunManifest::load(&manifest)?;
            if out.is_some() {
                m.output = out;
            }
            quantify(&m, &m.pipeline(TrustPipeline::default()))?;
            if let (Some(rules), Some(patients)) = (&m.rules, &m.patients) {
                println!();
                classify(rules, patients, false, m.output.as_ref())?;
            }
            Ok(())
        }
        Command::FcmRun {
            model,
            state,
            flags,
            out,
            influence_scale,
        } => {
            let scale = match &influence_scale {
                Some(p) => commands::load_scale(p)?,
                None => LinguisticScale::influence(),
            };
            let (m, outcome) = commands::cmd_fcm_run(&model, &state, &flags.overrides(), &scale)?;
            if let Some(dir) = &out {
                announce(&commands::write_fcm_output(&m, &outcome, dir)?);
            }
            print!("{}", commands::fcm_summary(&m, &outcome));
            Ok(())
        }
        Command::RulesClassify {
            rules,
            patients,
            explain,
            out,
        } => classify(&rules, &patients, explain, out.as_ref()),
        Command::Scales { out } => {
            let scales = [LinguisticScale::rating(), LinguisticScale::influence()];
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                    let mut written = Vec::new();
                    for s in &scales {
                        let p = dir.join(format!("{}.json", s.name()));
                        commands::write_text(&p, &to_document_string(&ScaleDocument::from_scale(s)))?;
                        written.push(p);
                    }
                    announce(&written);
                }
                None => {
                    for s in &scales {
                        println!("{}", s.name());
                        for t in s.terms() {
                            let [a, b, c]: [f64; 3] = t.tfn.into();
                            println!("  {:<28} ({a}, {b}, {c})  -> {}", t.label, t.defuzzified);
                        }
                    }
                }
            }
            Ok(())
        }
        Command::Serve {
            port,
            bind,
            allow_remote,
        } => {
            service::check_bind(bind, allow_remote)?;
            let rt = tokio::runtime::Runtime::new()
                .map_err(|e| CliError::Internal(format!("starting runtime: {e}")))?;
            rt.block_on(service::serve(SocketAddr::new(bind, port), allow_remote))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            for d in e.details() {
                eprintln!("  - {d}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
