//! Built-in analytic self-checks behind `quditlab validate`.

use quditlab::channels::{evolve, Channel, ErrorModelKind};
use quditlab::fit::{fit, kohlrausch, FidelitySeries};
use quditlab::metrics::encoded_process_fidelity;
use quditlab::ops::{
    encoding_projectors, gen_z, logical_bell, qudit_qft, LogicalLevels, QuditDim, RegisterShape,
};
use quditlab::qec;
use quditlab::ComplexMatrix;

fn check(name: &str, result: Result<bool, quditlab::Error>) -> bool {
    let ok = matches!(result, Ok(true));
    match result {
        Ok(true) => println!("PASS {name}"),
        Ok(false) => println!("FAIL {name}"),
        Err(e) => println!("FAIL {name} ({e})"),
    }
    ok
}

/// d=2 closed form: F(t) = 0.5 + 0.5 (1 - 2p)^t for the Z and X' models.
fn d2_closed_form(kind: ErrorModelKind) -> Result<bool, quditlab::Error> {
    let d = QuditDim::new(2)?;
    let p = 0.01;
    let shape = RegisterShape::new(2, d)?;
    let levels = LogicalLevels::polarized(d);
    let bell = logical_bell(d, levels)?;
    let (pen, _) = encoding_projectors(d, levels)?;
    let channel = Channel::from_model(kind, d, p, vec![2])?;
    let states = evolve(&bell, shape, &channel, 50)?;
    for (t, st) in states.iter().enumerate() {
        let f = encoded_process_fidelity(&bell, st, &pen)?;
        let expected = 0.5 + 0.5 * (1.0 - 2.0 * p).powi(t as i32);
        if (f - expected).abs() > 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn projector_algebra() -> Result<bool, quditlab::Error> {
    for n in 2..=6 {
        let d = QuditDim::new(n)?;
        let (p, q) = encoding_projectors(d, LogicalLevels::polarized(d))?;
        let idem = p.matmul(&p)?.max_abs_diff(&p);
        let ortho = p.matmul(&q)?.max_abs();
        let complete = p.add(&q)?.max_abs_diff(&ComplexMatrix::identity(n * n));
        if idem > 1e-14 || ortho > 1e-14 || complete > 1e-14 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn qft_unitarity() -> Result<bool, quditlab::Error> {
    for n in 2..=8 {
        let d = QuditDim::new(n)?;
        if qudit_qft(d).unitarity_deviation() > 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn kohlrausch_round_trip() -> Result<bool, quditlab::Error> {
    let (b, tau, alpha) = (0.5, 49.498, 1.0);
    let values: Vec<f64> = (0..=400)
        .map(|t| kohlrausch(t as f64, b, tau, alpha))
        .collect();
    let k = fit(&FidelitySeries::from_values(values)?)?;
    Ok((k.b - b).abs() < 1e-6 && (k.tau - tau).abs() < 1e-3 && (k.alpha - alpha).abs() < 1e-6)
}

fn qec_single_error_correction() -> Result<bool, quditlab::Error> {
    let d = QuditDim::new(2)?;
    let z = gen_z(d);
    let encoded = qec::encode(&qec::initial_register(d)?, d)?;
    let ini2 = quditlab::ops::full_entangled(d)?;
    for qudit in 1..=3 {
        let outcome = qec::qec_round(
            &encoded,
            d,
            &qec::ErrorSource::Injected {
                data_qudit: qudit,
                op: z.clone(),
            },
        )?;
        if quditlab::metrics::fidelity(&ini2, &outcome.decoded)? < 1.0 - 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs every self-check; returns true when all pass.
pub fn run_all() -> bool {
    let mut ok = true;
    ok &= check("d2-closed-form-z", d2_closed_form(ErrorModelKind::Z));
    ok &= check("d2-closed-form-xprime", d2_closed_form(ErrorModelKind::XPrime));
    ok &= check("projector-algebra", projector_algebra());
    ok &= check("qft-unitarity", qft_unitarity());
    ok &= check("kohlrausch-round-trip", kohlrausch_round_trip());
    ok &= check("qec-single-error-correction", qec_single_error_correction());
    ok
}
