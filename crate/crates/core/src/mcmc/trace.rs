use std::io::Write;

use crate::error::Result;

use super::ChainSet;

/// Writes every draw of every chain set as CSV: `chain,iteration,phase,<parameters…>`.
/// Iterations count from 1; `phase` is `burn_in` or `sample`.
pub fn write_trace_csv<W: Write>(sets: &[ChainSet], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = sets.first() else {
        w.flush()?;
        return Ok(());
    };
    let names: Vec<&str> = first.names().collect();
    let mut header = vec!["chain", "iteration", "phase"];
    header.extend(&names);
    w.write_record(&header).map_err(csv_err)?;
    for (c, set) in sets.iter().enumerate() {
        let columns: Vec<&[f64]> = names
            .iter()
            .map(|n| set.get(n).map_or(&[][..], |ch| ch.draws.as_slice()))
            .collect();
        for t in 0..set.iterations() {
            let phase = if t < set.burn_in { "burn_in" } else { "sample" };
            let mut record = vec![c.to_string(), (t + 1).to_string(), phase.to_string()];
            record.extend(columns.iter().map(|col| col.get(t).map_or(String::new(), f64::to_string)));
            w.write_record(&record).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::Chain;
    use crate::model::ModelKind;

    #[test]
    fn layout() {
        let set = ChainSet::new(
            ModelKind::Random,
            1,
            0,
            1,
            vec![Chain::new("zeta", vec![0.5, 0.25]), Chain::new("tau", vec![1.0, 2.0])],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&[set], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "chain,iteration,phase,zeta,tau\n0,1,burn_in,0.5,1\n0,2,sample,0.25,2\n"
        );
    }
}
