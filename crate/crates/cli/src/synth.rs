use std::path::PathBuf;

use portagrad::synth::{RampShape, StepTruth};
use portagrad::{synth_glide, synth_step, write_wav, GlideSpec, GlideTruth, StepSpec, Timbre};
use serde::Serialize;

use crate::args::{Ramp, SignalKind, SynthArgs};
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Sidecar {
    Glide { wav: String, spec: GlideSpec<f64>, truth: GlideTruth<f64> },
    Step { wav: String, spec: StepSpec<f64>, truth: StepTruth<f64> },
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let timbre = Timbre {
        n_harmonics: args.harmonics,
        harmonic_rolloff_db_per_partial: args.rolloff_db,
        vibrato_cents: args.vibrato_cents,
        vibrato_rate_hz: args.vibrato_rate,
        snr_db: args.snr_db,
        sample_rate: args.sample_rate,
        amplitude: args.amplitude,
        seed: args.seed,
    };
    let wav = args.out.display().to_string();
    let (buffer, sidecar) = match args.kind {
        SignalKind::Glide => {
            let spec = GlideSpec {
                f_start: args.f_start,
                f_end: args.f_end,
                pre_hold_s: args.pre_hold_s,
                glide_s: args.glide_s,
                post_hold_s: args.post_hold_s,
                ramp: match args.ramp {
                    Ramp::LinearHz => RampShape::LinearHz,
                    Ramp::LinearCents => RampShape::LinearCents,
                },
                timbre,
            };
            let (buffer, truth) = synth_glide(&spec).map_err(CliError::from_core)?;
            (buffer, Sidecar::Glide { wav, spec, truth })
        }
        SignalKind::Step => {
            let spec = StepSpec { f1: args.f_start, f2: args.f_end, gap_s: args.gap_s, hold_s: args.hold_s, timbre };
            let (buffer, truth) = synth_step(&spec).map_err(CliError::from_core)?;
            (buffer, Sidecar::Step { wav, spec, truth })
        }
    };
    write_wav(&buffer, &args.out).map_err(|e| CliError::at(&args.out, e))?;
    let truth_path = args.truth.clone().unwrap_or_else(|| PathBuf::from(&args.out).with_extension("json"));
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(&truth_path, format!("{json}\n")).map_err(|e| CliError::io(&truth_path, e))?;
    println!("{}", serde_json::to_string(&sidecar).expect("sidecar serializes"));
    Ok(())
}
