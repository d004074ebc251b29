//! `evalset/v1` record files.

use super::EvalRecord;
use crate::format::{body_lines, write_records, FormatError, EVALSET_V1};

pub fn read_evalset(text: &str) -> Result<Vec<EvalRecord>, FormatError> {
    body_lines(text, EVALSET_V1)?
        .map(|(n, line)| {
            let record: EvalRecord = serde_json::from_str(line).map_err(|e| FormatError::line(n, e))?;
            record.validate().map_err(|e| FormatError::line(n, e))?;
            Ok(record)
        })
        .collect()
}

pub fn write_evalset(records: &[EvalRecord]) -> Result<String, FormatError> {
    write_records(EVALSET_V1, records)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::session::parse_hypothesis;

    #[test]
    fn round_trip_and_overlap() {
        let a = parse_hypothesis("M|P|S:a").unwrap();
        let b = parse_hypothesis("M|P|S:b").unwrap();
        let records = vec![EvalRecord::new(a.clone(), BTreeSet::from([b.clone()]), BTreeSet::new()).unwrap()];
        let text = write_evalset(&records).unwrap();
        assert_eq!(read_evalset(&text).unwrap(), records);

        let bad = format!("{EVALSET_V1}\n{{\"request\":\"{a}\",\"positives\":[\"{b}\"],\"negatives\":[\"{b}\"]}}\n");
        assert!(matches!(read_evalset(&bad), Err(FormatError::Line { line: 2, .. })));
    }
}
