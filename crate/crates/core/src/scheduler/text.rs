//! Line formats for requests and plans.

use std::fmt::Write;

use super::{DeliveryPlan, RequestVector, ScheduleError};
use crate::rational::format;

/// `user,stu` per line, 1-based, with an optional header line.
pub fn parse_requests(text: &str) -> Result<RequestVector, ScheduleError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("user")) {
            continue;
        }
        let err = |message: &str| ScheduleError::Parse { line: i + 1, message: message.into() };
        let mut it = line.split(',').map(str::trim);
        let (Some(u), Some(s), None) = (it.next(), it.next(), it.next()) else {
            return Err(err("expected `user,stu`"));
        };
        let u: usize = u.parse().map_err(|_| err("bad user index"))?;
        let s: usize = s.parse().map_err(|_| err("bad STU index"))?;
        if u == 0 || s == 0 {
            return Err(err("indices are 1-based"));
        }
        pairs.push((u - 1, s - 1, i + 1));
    }
    pairs.sort();
    for (k, &(u, _, line)) in pairs.iter().enumerate() {
        if u != k {
            return Err(ScheduleError::Parse { line, message: format!("expected user {}", k + 1) });
        }
    }
    if pairs.is_empty() {
        return Err(ScheduleError::NoRequests);
    }
    Ok(RequestVector::new(pairs.into_iter().map(|(_, s, _)| s).collect()))
}

pub fn emit_requests(requests: &RequestVector) -> String {
    let mut out = String::from("user,stu\n");
    for (k, s) in requests.stus().iter().enumerate() {
        let _ = writeln!(out, "{},{}", k + 1, s + 1);
    }
    out
}

/// One line per served user and slot:
/// `slot <n>: user <k> frags (s=..,j=..,q=..) ... size <p/q> null {..}`.
/// A `p=2` field marks fragments of an upper file part; two-phase plans get a
/// `phase <i>` header per phase.
pub fn emit_plan(plan: &DeliveryPlan) -> String {
    let mut out = String::new();
    let phased = plan.phases.len() > 1;
    for (i, phase) in plan.phases.iter().enumerate() {
        if phased {
            let _ = writeln!(out, "phase {}", i + 1);
        }
        for slot in &phase.plan.slots {
            for t in &slot.transmissions {
                let frags: Vec<String> = t
                    .fragments
                    .iter()
                    .map(|f| {
                        let part = if f.part > 0 { format!(",p={}", f.part + 1) } else { String::new() };
                        format!("(s={}{part},j={},q={})", f.stu + 1, f.subfile + 1, f.counter)
                    })
                    .collect();
                let nulls: Vec<String> = t.interference.iter().map(|j| (j + 1).to_string()).collect();
                let _ = writeln!(
                    out,
                    "slot {}: user {} frags {} size {} null {{{}}}",
                    slot.index,
                    t.user + 1,
                    frags.join(" "),
                    format(&t.size),
                    nulls.join(",")
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::plan_delivery;
    use crate::scheduler::tests::example;
    use proptest::prelude::*;

    #[test]
    fn first_slot_lines() {
        let (p, d) = example();
        let text = emit_plan(&plan_delivery(&p, &d).unwrap());
        let lines: Vec<&str> = text.lines().take(3).collect();
        assert_eq!(lines[0], "slot 1: user 1 frags (s=1,j=4,q=1) (s=1,j=4,q=2) size 1/12 null {3}");
        assert_eq!(lines[2], "slot 1: user 3 frags (s=3,j=4,q=1) (s=3,j=4,q=2) size 1/36 null {2}");
    }

    #[test]
    fn request_errors() {
        assert!(matches!(parse_requests("1,1\n3,1\n"), Err(ScheduleError::Parse { line: 2, .. })));
        assert!(matches!(parse_requests("1;1"), Err(ScheduleError::Parse { line: 1, .. })));
        assert!(matches!(parse_requests("user,stu\n"), Err(ScheduleError::NoRequests)));
    }

    proptest! {
        #[test]
        fn requests_round_trip(stus in prop::collection::vec(0usize..9, 1..20)) {
            let d = RequestVector::new(stus);
            prop_assert_eq!(parse_requests(&emit_requests(&d)).unwrap(), d);
        }
    }
}
