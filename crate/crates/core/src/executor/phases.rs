use super::PhaseTimes;

const MAP_COUNTER: &str = "Total time spent by all map tasks (ms)=";
const REDUCE_COUNTER: &str = "Total time spent by all reduce tasks (ms)=";

/// Extracts map/shuffle/reduce durations from job counter output.
///
/// Recognizes the standard `Total time spent by all {map,reduce} tasks (ms)=N`
/// counters and any `... shuffle time ... (ms)=N` line. Later occurrences win.
/// Unrecognized text is ignored.
pub fn parse_phase_times(log_text: &str) -> PhaseTimes {
    let mut out = PhaseTimes::default();
    for line in log_text.lines() {
        let line = line.trim();
        if let Some(v) = counter_after(line, MAP_COUNTER) {
            out.map = Some(v);
        } else if let Some(v) = counter_after(line, REDUCE_COUNTER) {
            out.reduce = Some(v);
        } else if line.to_ascii_lowercase().contains("shuffle time") {
            if let Some(idx) = line.find("(ms)=") {
                if let Some(v) = counter_after(&line[idx..], "(ms)=") {
                    out.shuffle = Some(v);
                }
            }
        }
    }
    out
}

fn counter_after(line: &str, prefix: &str) -> Option<f64> {
    let rest = line.strip_prefix(prefix)?.trim();
    let ms: u64 = rest.parse().ok()?;
    Some(ms as f64 / 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_counter() {
        let p = parse_phase_times("Total time spent by all map tasks (ms)=44550");
        assert_eq!(p, PhaseTimes { map: Some(44.55), shuffle: None, reduce: None });
    }

    #[test]
    fn full_counter_block() {
        let log = "\
17/03/01 10:12:01 INFO mapreduce.Job: Counters: 49
	Job Counters
		Launched map tasks=4
		Total time spent by all map tasks (ms)=44550
		Total time spent by all reduce tasks (ms)=12010
		Average shuffle time (ms)=2300
";
        let p = parse_phase_times(log);
        assert_eq!(p.map, Some(44.55));
        assert_eq!(p.reduce, Some(12.01));
        assert_eq!(p.shuffle, Some(2.3));
    }

    #[test]
    fn empty_and_garbage() {
        assert!(parse_phase_times("").is_empty());
        let junk = String::from_utf8_lossy(&[0xff, 0xfe, b'\n', 0, 7, b'=', 0x80]).into_owned();
        assert!(parse_phase_times(&junk).is_empty());
        assert!(parse_phase_times("Total time spent by all map tasks (ms)=lots").is_empty());
        assert!(parse_phase_times("shuffle time (ms)=").is_empty());
    }
}
