use portagrad::{make_calibration, measure_from_pixels, CalibrationParams, PixelPoint};
use serde::Serialize;

use crate::args::MeasureArgs;
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct MeasureReport {
    pub p1: PixelPoint<f64>,
    pub p2: PixelPoint<f64>,
    pub calibration: CalibrationParams<f64>,
    pub gradient_px: f64,
    pub gradient_hz_s: f64,
    pub duration_s: f64,
    pub delta_f_hz: f64,
}

pub fn measure(args: &MeasureArgs) -> CliResult<MeasureReport> {
    let cal = make_calibration(args.range, args.height, args.width, args.window).map_err(CliError::from_core)?;
    let point = |(x, y): (f64, f64), flag: &str| {
        PixelPoint::new(x, y).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
    };
    let (p1, p2) = (point(args.p1, "p1")?, point(args.p2, "p2")?);
    let m = measure_from_pixels(p1, p2, &cal).map_err(CliError::from_core)?;
    Ok(MeasureReport {
        p1,
        p2,
        calibration: cal,
        gradient_px: m.gradient_px,
        gradient_hz_s: m.gradient_hz_s,
        duration_s: m.duration_s,
        delta_f_hz: m.delta_f_hz,
    })
}

/// Human-readable text on stderr, the JSON object on stdout.
pub fn run(args: &MeasureArgs) -> CliResult<()> {
    let r = measure(args)?;
    eprintln!("gradient: {:.1} Hz/s", r.gradient_hz_s);
    eprintln!("duration: {:.5} s", r.duration_s);
    eprintln!("delta f:  {:.2} Hz", r.delta_f_hz);
    println!("{}", serde_json::to_string(&r).expect("report serializes"));
    Ok(())
}
