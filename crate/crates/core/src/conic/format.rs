use crate::error::{Error, Result};

use super::ConicProgram;

/// Identifier written into every document.
pub const CONIC_FORMAT: &str = "otdro-conic";
pub const CONIC_VERSION: u32 = 1;

/// Pretty-printed JSON. Field order and number formatting are fixed, so two
/// builds of the same instance give byte-identical documents.
pub fn serialize_conic(program: &ConicProgram) -> String {
    let mut text = serde_json::to_string_pretty(program).expect("conic programs always serialize");
    text.push('\n');
    text
}

pub fn parse_conic(text: &str) -> Result<ConicProgram> {
    let program: ConicProgram = serde_json::from_str(text).map_err(|e| Error::Input(format!("conic JSON: {e}")))?;
    if program.format != CONIC_FORMAT {
        return Err(Error::Input(format!("expected format {CONIC_FORMAT}, got {}", program.format)));
    }
    if program.version != CONIC_VERSION {
        return Err(Error::Input(format!("unsupported conic format version {}", program.version)));
    }
    let bad_index = program
        .rows
        .iter()
        .flat_map(|r| r.terms.iter().map(|t| t.0))
        .chain(
            program
                .cones
                .iter()
                .flat_map(|c| c.entries.iter().flat_map(|e| e.terms.iter().map(|t| t.0))),
        )
        .chain(program.objective.terms.iter().map(|t| t.0))
        .any(|j| j >= program.n_vars);
    if bad_index {
        return Err(Error::Input("conic document references a variable out of range".into()));
    }
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::build_conic;
    use crate::cost::GroundCost;
    use crate::divergences::EntropyFunction;
    use crate::instance::ValueDomain;
    use crate::lifting::build_interpolated;
    use crate::loss::{Loss, PiecewiseAffineLoss};
    use crate::measure::DiscreteMeasure;

    #[test]
    fn round_trip_and_determinism() {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0, -2.0], 0.1), (vec![0.0, 0.5], 0.0)])
            .unwrap()
            .into();
        let mu = DiscreteMeasure::uniform(vec![vec![0.0, 0.1], vec![0.3, -0.2]]).unwrap();
        let dom = ValueDomain::boxed(vec![-1.0, -1.0], vec![1.0, 1.0], 2.0).unwrap();
        for ground in [GroundCost::p_norm(1.0).unwrap(), GroundCost::p_norm(2.0).unwrap()] {
            let inst = build_interpolated(
                loss.clone(),
                ground,
                EntropyFunction::KullbackLeibler,
                &mu,
                0.2,
                1.0,
                1.0,
                Some(dom.clone()),
            )
            .unwrap();
            let a = serialize_conic(&build_conic(&inst).unwrap());
            let b = serialize_conic(&build_conic(&inst).unwrap());
            assert_eq!(a, b);
            assert_eq!(parse_conic(&a).unwrap(), build_conic(&inst).unwrap());
        }
    }

    #[test]
    fn rejects_foreign_format() {
        assert!(parse_conic(r#"{"format":"other"}"#).is_err());
    }
}
