//! End-to-end delivery, including files split between two gains.

use num_traits::{One, Zero};

use super::{
    build_context, build_fm_matrix, build_plan, generate_index_matrix, select_reference, DeliveryContext, FmMatrix,
    IndexMatrix, Reference, RequestVector, ScheduleError, StreamSpec, TransmissionPlan,
};
use crate::placement::Placement;
use crate::Rational;

/// One reference array and everything derived from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub context: DeliveryContext,
    pub mappings: Vec<FmMatrix>,
    pub index: Vec<IndexMatrix>,
    pub plan: TransmissionPlan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryPlan {
    pub reference: Reference,
    pub phases: Vec<Phase>,
}

impl DeliveryPlan {
    pub fn plans(&self) -> Vec<&TransmissionPlan> {
        self.phases.iter().map(|p| &p.plan).collect()
    }

    pub fn slot_count(&self) -> usize {
        self.phases.iter().map(|p| p.plan.slots.len()).sum()
    }

    /// Sum-DoF of the reference arrays, weighted by the reference file's part shares. A
    /// phase whose array has no slots counts as serving all users.
    pub fn sum_dof(&self, placement: &Placement) -> Rational {
        let rs = placement.stu(self.reference.stu);
        self.phases
            .iter()
            .map(|p| {
                let part = &rs.parts[p.plan.phase];
                let dof = part.array.dof().unwrap_or_else(|_| Rational::from_integer(part.array.users().into()));
                &part.share * dof
            })
            .sum()
    }

    /// `K m̂ + L` for the reference file.
    pub fn dof_bound(&self, placement: &Placement) -> Rational {
        let k = Rational::from_integer(placement.users().into());
        k * &placement.stu(self.reference.stu).memory + Rational::from_integer(placement.antennas().into())
    }
}

fn run_phase(
    placement: &Placement,
    requests: &RequestVector,
    reference: Reference,
    part: usize,
    specs: &[StreamSpec],
) -> Result<Phase, ScheduleError> {
    let array = placement.stu(reference.stu).parts[part].array.clone();
    let context = build_context(placement, requests.len(), reference, array, specs)?;
    let mappings = (0..context.streams.len())
        .map(|i| build_fm_matrix(&context, i))
        .collect::<Result<Vec<_>, _>>()?;
    let index = mappings
        .iter()
        .enumerate()
        .map(|(i, g)| generate_index_matrix(&context, i, g))
        .collect::<Result<Vec<_>, _>>()?;
    let plan = build_plan(&context, &index, part);
    Ok(Phase { context, mappings, index, plan })
}

fn whole(requests: &RequestVector, placement: &Placement, fraction: impl Fn(usize, usize) -> Rational) -> Vec<StreamSpec> {
    (0..requests.len())
        .flat_map(|user| {
            let stu = requests.stu(user);
            (0..placement.stu(stu).parts.len()).map(move |part| (user, stu, part))
        })
        .map(|(user, stu, part)| StreamSpec { user, stu, part, fraction: fraction(user, part) })
        .collect()
}

/// Two phases, one per part of the reference file. Users whose file is split with the
/// same lower gain as the reference finish their lower part in the first phase and
/// spread the upper part to match; every other user receives each part in proportion
/// to the reference shares.
pub fn split_plan_noninteger(requests: &RequestVector, placement: &Placement) -> Result<DeliveryPlan, ScheduleError> {
    let reference = select_reference(requests, placement)?;
    let rs = placement.stu(reference.stu);
    if rs.parts.len() == 1 {
        let specs = whole(requests, placement, |_, _| Rational::one());
        let phase = run_phase(placement, requests, reference, 0, &specs)?;
        return Ok(DeliveryPlan { reference, phases: vec![phase] });
    }
    let (lower_ref, upper_ref) = (&rs.parts[0].share, &rs.parts[1].share);
    let floor = rs.gain.floor();
    let mut first = Vec::new();
    let mut second = Vec::new();
    for user in 0..requests.len() {
        let stu = requests.stu(user);
        let sp = placement.stu(stu);
        if sp.parts.len() == 2 && sp.gain.floor() == floor {
            let (lower, upper) = (&sp.parts[0].share, &sp.parts[1].share);
            if lower > lower_ref {
                return Err(ScheduleError::SplitOrder { stu });
            }
            let spec = |part, fraction| StreamSpec { user, stu, part, fraction };
            first.push(spec(0, Rational::one()));
            first.push(spec(1, (lower_ref - lower) / upper));
            second.push(spec(1, upper_ref / upper));
        } else {
            for part in 0..sp.parts.len() {
                first.push(StreamSpec { user, stu, part, fraction: lower_ref.clone() });
                second.push(StreamSpec { user, stu, part, fraction: upper_ref.clone() });
            }
        }
    }
    first.retain(|s| !s.fraction.is_zero());
    let phases = vec![
        run_phase(placement, requests, reference, 0, &first)?,
        run_phase(placement, requests, reference, 1, &second)?,
    ];
    Ok(DeliveryPlan { reference, phases })
}

/// Full delivery for `requests` under `placement`.
pub fn plan_delivery(placement: &Placement, requests: &RequestVector) -> Result<DeliveryPlan, ScheduleError> {
    if requests.len() != placement.users() {
        return Err(ScheduleError::UserCount { requests: requests.len(), users: placement.users() });
    }
    split_plan_noninteger(requests, placement)
}
